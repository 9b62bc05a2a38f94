//! Reversible numeric encoding of statements, KBs and whole datasets.
//!
//! A statement becomes a 4-tuple of floats: concept indices map to
//! `index / maxConcepts` in (0,1], role indices to `-index / maxRoles` in
//! [-1,0), padding is exactly 0.0. Slot layout per form:
//!
//! | form              | tuple                  |
//! |-------------------|------------------------|
//! | C ⊑ D             | `[0,  c,  d,  0]`      |
//! | C1 ⊓ C2 ⊑ D       | `[c1, c2, d,  0]`      |
//! | C ⊑ ∃R.D          | `[0,  c,  r,  d]`      |
//! | ∃R.C ⊑ D          | `[r,  c,  d,  0]`      |
//! | R ⊑ S             | `[0,  r,  s,  0]`      |
//! | R1 ∘ R2 ⊑ S       | `[r1, r2, s,  0]`      |
//!
//! A name's encoding depends only on its kind, index and the signature
//! bounds, never on co-occurrence or frequency: this is an encoding, not an
//! embedding. Decoding rounds half-away-from-zero and clamps indices above
//! the signature bound.

use crate::kb::{Axiom, Concept, KnowledgeBase, Role, Signature};
use crate::reasoner::ReasoningTrace;
use crate::scalar::Scalar;
use crate::supports::{extract_supports, step_support_union, SupportMap, SupportError};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("axiom {0} is outside the signature")]
    OutOfSignature(Axiom),
    #[error("dataset needs at least one sample")]
    EmptyDataset,
    #[error("sample {0} has an empty trace: no target signal")]
    EmptyTrace(usize),
    #[error(transparent)]
    Support(#[from] SupportError),
    #[error("dataset file: {0}")]
    BadFile(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Encoded statement: four scalars, each 0.0 (padding), in (0,1] (concept)
/// or in [-1,0) (role).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Encoded4<S: Scalar>(pub [S; 4]);

fn concept_slot<S: Scalar>(c: Concept, sig: Signature) -> S {
    S::from_f64(c.index() as f64 / sig.max_concepts() as f64)
}

fn role_slot<S: Scalar>(r: Role, sig: Signature) -> S {
    S::from_f64(-(r.index() as f64) / sig.max_roles() as f64)
}

/// Encodes one axiom per the slot-layout table.
pub fn encode_axiom<S: Scalar>(a: &Axiom, sig: Signature) -> Result<Encoded4<S>, EncodeError> {
    for name in a.names() {
        if !sig.contains(name) {
            return Err(EncodeError::OutOfSignature(*a));
        }
    }
    let z = S::zero();
    let c = |x| concept_slot::<S>(x, sig);
    let r = |x| role_slot::<S>(x, sig);
    let v = match *a {
        Axiom::Sub(x, d) => [z, c(x), c(d), z],
        Axiom::SubConj(c1, c2, d) => [c(c1), c(c2), c(d), z],
        Axiom::SubEx(x, ro, d) => [z, c(x), r(ro), c(d)],
        Axiom::ExSub(ro, x, d) => [r(ro), c(x), c(d), z],
        Axiom::RoleSub(ro, s) => [z, r(ro), r(s), z],
        Axiom::RoleChain(r1, r2, s) => [r(r1), r(r2), r(s), z],
    };
    Ok(Encoded4(v))
}

/// A decoded slot: padding, or a name index of one kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Pad,
    C(u32),
    R(u32),
}

fn decode_slot<S: Scalar>(v: S, sig: Signature) -> Slot {
    let v = v.as_f64().clamp(-1.0, 1.0);
    if v > 0.0 {
        // round() is half-away-from-zero
        let index = (v * sig.max_concepts() as f64).round() as u32;
        if index == 0 {
            Slot::Pad
        } else {
            Slot::C(index.min(sig.max_concepts()))
        }
    } else if v < 0.0 {
        let index = (-v * sig.max_roles() as f64).round() as u32;
        if index == 0 {
            Slot::Pad
        } else {
            Slot::R(index.min(sig.max_roles()))
        }
    } else {
        Slot::Pad
    }
}

/// Decodes a 4-tuple back to an axiom. Arbitrary floats are accepted
/// (clamped to [-1,1]); returns `None` when the slot pattern matches no form
/// or everything is padding.
pub fn decode_axiom<S: Scalar>(e: &Encoded4<S>, sig: Signature) -> Option<Axiom> {
    use Slot::*;
    let s: Vec<Slot> = e.0.iter().map(|&v| decode_slot(v, sig)).collect();
    let axiom = match (s[0], s[1], s[2], s[3]) {
        (Pad, C(c), C(d), Pad) => Axiom::Sub(Concept::new(c), Concept::new(d)),
        (C(c1), C(c2), C(d), Pad) => Axiom::SubConj(Concept::new(c1), Concept::new(c2), Concept::new(d)),
        (Pad, C(c), R(r), C(d)) => Axiom::SubEx(Concept::new(c), Role::new(r), Concept::new(d)),
        (R(r), C(c), C(d), Pad) => Axiom::ExSub(Role::new(r), Concept::new(c), Concept::new(d)),
        (Pad, R(r), R(s2), Pad) => Axiom::RoleSub(Role::new(r), Role::new(s2)),
        (R(r1), R(r2), R(s2), Pad) => Axiom::RoleChain(Role::new(r1), Role::new(r2), Role::new(s2)),
        _ => return None,
    };
    Some(axiom)
}

/// Concatenation of the axiom encodings in KB order; length `4 * |axioms|`.
pub fn encode_kb<S: Scalar>(kb: &KnowledgeBase) -> Vec<S> {
    let sig = kb.signature();
    let mut out = Vec::with_capacity(kb.len() * 4);
    for axiom in kb.axioms() {
        let enc = encode_axiom::<S>(axiom, sig).expect("KB axioms are within their signature");
        out.extend_from_slice(&enc.0);
    }
    out
}

/// Decodes consecutive 4-tuples of an output row, dropping padding.
pub fn decode_row<S: Scalar>(row: &[S], sig: Signature) -> Vec<Axiom> {
    row.chunks(4)
        .filter(|chunk| chunk.len() == 4)
        .filter_map(|chunk| decode_axiom(&Encoded4([chunk[0], chunk[1], chunk[2], chunk[3]]), sig))
        .collect()
}

/// A KB with its precomputed trace and supports, ready for dataset assembly.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    pub trace: ReasoningTrace,
    pub supports: SupportMap,
}

impl PreparedSample {
    pub fn prepare(kb: &KnowledgeBase) -> Result<Self, SupportError> {
        let trace = crate::reasoner::saturate(kb);
        let supports = extract_supports(&trace)?;
        Ok(PreparedSample { trace, supports })
    }

    pub fn kb(&self) -> &KnowledgeBase {
        self.trace.kb()
    }
}

/// Axis sizes of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetDims {
    pub samples: usize,
    pub steps: usize,
    pub kb_width: usize,
    pub support_width: usize,
    pub out_width: usize,
}

/// Per-sample metadata kept outside the tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMeta {
    pub kb: KnowledgeBase,
    pub trace_len: usize,
    /// Origin of the sample (KB file) when known.
    pub source: Option<String>,
}

/// The three 3-axis arrays handed to the learners, flattened row-major as
/// `[sample][step][feature]`.
///
/// - `x`: the KB vector, identical at every step of a sample;
/// - `s`: encodings of the KB axioms in the step's support union, KB order;
/// - `y`: encodings of the conclusions newly derived at the step.
///
/// Shorter samples are zero-padded to the dataset maxima.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetTensors<S: Scalar> {
    dims: DatasetDims,
    x: Vec<S>,
    s: Vec<S>,
    y: Vec<S>,
    meta: Vec<SampleMeta>,
    /// Elementwise max of the sample signatures (header bound).
    signature: Signature,
}

impl<S: Scalar> DatasetTensors<S> {
    pub fn dims(&self) -> DatasetDims {
        self.dims
    }

    pub fn meta(&self) -> &[SampleMeta] {
        &self.meta
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn x_row(&self, sample: usize, step: usize) -> &[S] {
        let w = self.dims.kb_width;
        &self.x[(sample * self.dims.steps + step) * w..][..w]
    }

    pub fn s_row(&self, sample: usize, step: usize) -> &[S] {
        let w = self.dims.support_width;
        &self.s[(sample * self.dims.steps + step) * w..][..w]
    }

    pub fn y_row(&self, sample: usize, step: usize) -> &[S] {
        let w = self.dims.out_width;
        &self.y[(sample * self.dims.steps + step) * w..][..w]
    }

    /// All steps of one sample as a `steps x kb_width` matrix view.
    pub fn x_sample(&self, sample: usize) -> Vec<&[S]> {
        (0..self.dims.steps).map(|t| self.x_row(sample, t)).collect()
    }

    pub fn s_sample(&self, sample: usize) -> Vec<&[S]> {
        (0..self.dims.steps).map(|t| self.s_row(sample, t)).collect()
    }

    pub fn y_sample(&self, sample: usize) -> Vec<&[S]> {
        (0..self.dims.steps).map(|t| self.y_row(sample, t)).collect()
    }
}

/// Assembles the dataset tensors from prepared samples. A sample with an
/// empty trace is rejected (it carries no target signal).
pub fn build_dataset<S: Scalar>(samples: &[PreparedSample]) -> Result<DatasetTensors<S>, EncodeError> {
    build_dataset_with_sources(samples, None)
}

pub fn build_dataset_with_sources<S: Scalar>(
    samples: &[PreparedSample],
    sources: Option<&[String]>,
) -> Result<DatasetTensors<S>, EncodeError> {
    if samples.is_empty() {
        return Err(EncodeError::EmptyDataset);
    }
    for (i, sample) in samples.iter().enumerate() {
        if sample.trace.is_empty() {
            return Err(EncodeError::EmptyTrace(i));
        }
    }

    let steps = samples.iter().map(|p| p.trace.len()).max().unwrap();
    let max_axioms = samples.iter().map(|p| p.kb().len()).max().unwrap();
    let max_new = samples.iter().map(|p| p.trace.max_step_width()).max().unwrap();
    let kb_width = 4 * max_axioms;
    let support_width = kb_width;
    let out_width = 4 * max_new;
    let dims = DatasetDims { samples: samples.len(), steps, kb_width, support_width, out_width };

    let mut x = vec![S::zero(); dims.samples * steps * kb_width];
    let mut s = vec![S::zero(); dims.samples * steps * support_width];
    let mut y = vec![S::zero(); dims.samples * steps * out_width];
    let mut meta = Vec::with_capacity(samples.len());
    let mut max_c = 1u32;
    let mut max_r = 1u32;

    for (i, sample) in samples.iter().enumerate() {
        let kb = sample.kb();
        let sig = kb.signature();
        max_c = max_c.max(sig.max_concepts());
        max_r = max_r.max(sig.max_roles());
        let kb_vec: Vec<S> = encode_kb(kb);

        for t in 0..steps {
            let row = (i * steps + t) * kb_width;
            x[row..row + kb_vec.len()].copy_from_slice(&kb_vec);
        }
        for (t, step) in sample.trace.steps().iter().enumerate() {
            let y_row = (i * steps + t) * out_width;
            for (j, d) in step.iter().enumerate() {
                let enc = encode_axiom::<S>(&d.conclusion, sig).expect("conclusions stay in signature");
                y[y_row + 4 * j..y_row + 4 * j + 4].copy_from_slice(&enc.0);
            }
            let union = step_support_union(&sample.trace, &sample.supports, t + 1)?;
            let s_row = (i * steps + t) * support_width;
            for (j, &axiom_index) in union.iter().enumerate() {
                let enc = encode_axiom::<S>(&kb.axioms()[axiom_index], sig)
                    .expect("KB axioms stay in signature");
                s[s_row + 4 * j..s_row + 4 * j + 4].copy_from_slice(&enc.0);
            }
        }

        meta.push(SampleMeta {
            kb: kb.clone(),
            trace_len: sample.trace.len(),
            source: sources.and_then(|s| s.get(i).cloned()),
        });
    }

    let signature = Signature::new(max_c, max_r).expect("bounds are >= 1");
    Ok(DatasetTensors { dims, x, s, y, meta, signature })
}

fn write_tensor<S: Scalar>(out: &mut String, name: &str, data: &[S], row_width: usize) {
    let _ = writeln!(out, "tensor {name}");
    for row in data.chunks(row_width) {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
}

impl<S: Scalar> DatasetTensors<S> {
    /// Textual serialization: header, then the three tensors row by row
    /// (one `sample x step` row per line).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let d = self.dims;
        let _ = writeln!(out, "elstm-dataset 1");
        let _ = writeln!(out, "samples {}", d.samples);
        let _ = writeln!(out, "steps {}", d.steps);
        let _ = writeln!(out, "kb_width {}", d.kb_width);
        let _ = writeln!(out, "support_width {}", d.support_width);
        let _ = writeln!(out, "out_width {}", d.out_width);
        let _ = writeln!(out, "sig {} {}", self.signature.max_concepts(), self.signature.max_roles());
        write_tensor(&mut out, "X", &self.x, d.kb_width);
        write_tensor(&mut out, "S", &self.s, d.support_width);
        write_tensor(&mut out, "Y", &self.y, d.out_width);
        out.push_str("end\n");
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), EncodeError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Human-readable sidecar: sample index, source file, signature bounds
    /// and trace length, tab separated.
    pub fn sidecar(&self) -> String {
        let mut out = String::from("sample\tsource\tmax_concepts\tmax_roles\ttrace_len\n");
        for (i, m) in self.meta.iter().enumerate() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                i,
                m.source.as_deref().unwrap_or("-"),
                m.kb.signature().max_concepts(),
                m.kb.signature().max_roles(),
                m.trace_len
            );
        }
        out
    }

    /// Parses the textual serialization. Metadata (sample KBs) is not part
    /// of the file; the loaded dataset carries the header signature only.
    pub fn from_text(text: &str) -> Result<Self, EncodeError> {
        let mut lines = text.lines();
        let bad = |msg: &str| EncodeError::BadFile(msg.to_string());
        let header = lines.next().ok_or_else(|| bad("empty file"))?;
        if header.trim() != "elstm-dataset 1" {
            return Err(bad("not an elstm-dataset v1 file"));
        }
        let mut field = |name: &str| -> Result<Vec<u64>, EncodeError> {
            let line = lines.next().ok_or_else(|| bad("truncated header"))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(name) {
                return Err(bad(&format!("expected `{name}` line, got `{line}`")));
            }
            parts
                .map(|v| v.parse::<u64>().map_err(|_| bad(&format!("bad number in `{line}`"))))
                .collect()
        };
        let samples = field("samples")?[0] as usize;
        let steps = field("steps")?[0] as usize;
        let kb_width = field("kb_width")?[0] as usize;
        let support_width = field("support_width")?[0] as usize;
        let out_width = field("out_width")?[0] as usize;
        let sig_line = field("sig")?;
        let signature = Signature::new(sig_line[0] as u32, sig_line[1] as u32)
            .map_err(|e| bad(&e.to_string()))?;
        let dims = DatasetDims { samples, steps, kb_width, support_width, out_width };

        let mut read_tensor = |name: &str, width: usize| -> Result<Vec<S>, EncodeError> {
            let head = lines.next().ok_or_else(|| bad("missing tensor"))?;
            if head.trim() != format!("tensor {name}") {
                return Err(bad(&format!("expected `tensor {name}`, got `{head}`")));
            }
            let mut data = Vec::with_capacity(samples * steps * width);
            for _ in 0..samples * steps {
                let line = lines.next().ok_or_else(|| bad("truncated tensor"))?;
                for cell in line.split_whitespace() {
                    let v: f64 = cell.parse().map_err(|_| bad(&format!("bad float `{cell}`")))?;
                    data.push(S::from_f64(v));
                }
            }
            if data.len() != samples * steps * width {
                return Err(bad(&format!("tensor {name} has wrong size")));
            }
            Ok(data)
        };
        let x = read_tensor("X", kb_width)?;
        let s = read_tensor("S", support_width)?;
        let y = read_tensor("Y", out_width)?;

        Ok(DatasetTensors { dims, x, s, y, meta: Vec::new(), signature })
    }

    pub fn load(path: &Path) -> Result<Self, EncodeError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}
