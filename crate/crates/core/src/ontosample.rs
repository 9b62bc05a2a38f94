//! Connected, reasoning-active sampling from large normalized ontology dumps.

use crate::kb::{
    anonymize, normalize, parse_general_kb, Axiom, Concept, KbError, KnowledgeBase, Name, NameKind,
    Renaming, Role, Signature,
};
use crate::reasoner::saturate;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{HashMap, HashSet};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no parseable axioms in {0}")]
    EmptyOntology(String),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error("sample size {size} exceeds ontology size {available}")]
    SizeTooLarge { size: usize, available: usize },
    #[error("no sample with >= {min_steps} steps found in {retries} retries (best was {best_steps})")]
    RetriesExhausted { min_steps: usize, retries: usize, best_steps: usize },
}

/// Result of loading an ontology dump.
#[derive(Debug)]
pub struct LoadReport {
    pub kb: KnowledgeBase,
    /// Lines skipped because they use constructs outside the fragment.
    pub skipped: usize,
}

/// Loads a dump in the canonical format or the general format (normalized on
/// the fly). Axioms outside the fragment (top, bottom, self-restriction) are
/// skipped and counted instead of failing the load.
pub fn load_ontology(path: &Path) -> Result<LoadReport, SampleError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| SampleError::Io { path: path.display().to_string(), source })?;
    load_ontology_text(&text, &path.display().to_string())
}

pub fn load_ontology_text(text: &str, origin: &str) -> Result<LoadReport, SampleError> {
    let (general, mut sig) = match parse_general_kb(text) {
        Ok(parsed) => parsed,
        Err(KbError::Malformed { line: 0, .. }) => {
            return Err(SampleError::EmptyOntology(origin.to_string()))
        }
        Err(e) => return Err(e.into()),
    };

    let mut axioms: Vec<Axiom> = Vec::new();
    let mut skipped = 0usize;
    for ga in &general {
        match normalize(std::slice::from_ref(ga), sig) {
            Ok((normal, grown)) => {
                sig = grown;
                for a in normal {
                    if !axioms.contains(&a) {
                        axioms.push(a);
                    }
                }
            }
            Err(KbError::UnsupportedConstruct { .. }) => skipped += 1,
            Err(e) => return Err(e.into()),
        }
    }
    if axioms.is_empty() {
        return Err(SampleError::EmptyOntology(origin.to_string()));
    }
    let kb = KnowledgeBase::new(sig, axioms)?;
    Ok(LoadReport { kb, skipped })
}

/// A connected sample: the anonymized sub-KB, the indices of its axioms in
/// the source ontology, its trace length, and the renaming (which carries any
/// surviving labels keyed by anonymized name).
#[derive(Debug)]
pub struct ConnectedSample {
    pub kb: KnowledgeBase,
    pub source_indices: Vec<usize>,
    pub trace_len: usize,
    pub renaming: Renaming,
}

/// Samples a connected sub-KB of `size` axioms whose own saturation trace has
/// at least `min_steps` steps, by random-walk frontier expansion from a
/// random start axiom. Rejected samples are retried from a new start, up to
/// `retry_bound` attempts. The returned KB is anonymized and its signature
/// shrunk to the names it uses.
pub fn sample_connected(
    kb: &KnowledgeBase,
    size: usize,
    min_steps: usize,
    seed: u64,
    retry_bound: usize,
) -> Result<ConnectedSample, SampleError> {
    if size == 0 || size > kb.len() {
        return Err(SampleError::SizeTooLarge { size, available: kb.len() });
    }

    let mut name_to_axioms: HashMap<Name, Vec<usize>> = HashMap::new();
    for (i, axiom) in kb.axioms().iter().enumerate() {
        for name in axiom.names() {
            name_to_axioms.entry(name).or_default().push(i);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_steps = 0usize;

    for attempt in 0..retry_bound.max(1) {
        let start = rng.gen_range(0..kb.len());
        if let Some(indices) = grow_connected(kb, &name_to_axioms, start, size, &mut rng) {
            let sub = compact_sub_kb(kb, &indices)?;
            let trace_len = saturate(&sub).len();
            best_steps = best_steps.max(trace_len);
            if trace_len >= min_steps {
                let (anon, renaming) = anonymize(&sub, seed.wrapping_add(attempt as u64));
                return Ok(ConnectedSample { kb: anon, source_indices: indices, trace_len, renaming });
            }
        }
    }

    Err(SampleError::RetriesExhausted { min_steps, retries: retry_bound, best_steps })
}

/// Frontier expansion: repeatedly add a uniformly random axiom that shares at
/// least one name with the sample so far. Fails when the start's component is
/// smaller than the requested size.
fn grow_connected(
    kb: &KnowledgeBase,
    name_to_axioms: &HashMap<Name, Vec<usize>>,
    start: usize,
    size: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<usize>> {
    let mut in_sample: HashSet<usize> = HashSet::from([start]);
    let mut chosen = vec![start];
    let mut frontier: Vec<usize> = Vec::new();
    let mut in_frontier: HashSet<usize> = HashSet::new();
    let mut seen_names: HashSet<Name> = HashSet::new();

    let absorb = |axiom_index: usize,
                      frontier: &mut Vec<usize>,
                      in_frontier: &mut HashSet<usize>,
                      seen_names: &mut HashSet<Name>,
                      in_sample: &HashSet<usize>| {
        for name in kb.axioms()[axiom_index].names() {
            if seen_names.insert(name) {
                for &j in &name_to_axioms[&name] {
                    if !in_sample.contains(&j) && in_frontier.insert(j) {
                        frontier.push(j);
                    }
                }
            }
        }
    };
    absorb(start, &mut frontier, &mut in_frontier, &mut seen_names, &in_sample);

    // Frontier and sample stay disjoint: axioms enter the sample only by
    // being picked out of the frontier.
    while chosen.len() < size {
        if frontier.is_empty() {
            return None;
        }
        let pick = rng.gen_range(0..frontier.len());
        let axiom_index = frontier.swap_remove(pick);
        in_frontier.remove(&axiom_index);
        in_sample.insert(axiom_index);
        chosen.push(axiom_index);
        absorb(axiom_index, &mut frontier, &mut in_frontier, &mut seen_names, &in_sample);
    }

    chosen.sort_unstable();
    Some(chosen)
}

/// Builds the induced sub-KB with names compacted to 1..=n of each kind,
/// carrying labels across the compaction.
fn compact_sub_kb(kb: &KnowledgeBase, indices: &[usize]) -> Result<KnowledgeBase, KbError> {
    let axioms: Vec<Axiom> = indices.iter().map(|&i| kb.axioms()[i]).collect();
    let mut concepts: Vec<u32> = Vec::new();
    let mut roles: Vec<u32> = Vec::new();
    for axiom in &axioms {
        for name in axiom.names() {
            match name.kind {
                NameKind::Concept => concepts.push(name.index),
                NameKind::Role => roles.push(name.index),
            }
        }
    }
    concepts.sort_unstable();
    concepts.dedup();
    roles.sort_unstable();
    roles.dedup();

    let concept_rank: HashMap<u32, u32> =
        concepts.iter().enumerate().map(|(i, &old)| (old, i as u32 + 1)).collect();
    let role_rank: HashMap<u32, u32> = roles.iter().enumerate().map(|(i, &old)| (old, i as u32 + 1)).collect();

    let rc = |c: Concept| Concept::new(concept_rank[&c.index()]);
    let rr = |r: Role| Role::new(role_rank[&r.index()]);
    let remapped: Vec<Axiom> = axioms
        .iter()
        .map(|a| match *a {
            Axiom::Sub(c, d) => Axiom::Sub(rc(c), rc(d)),
            Axiom::SubConj(c1, c2, d) => Axiom::SubConj(rc(c1), rc(c2), rc(d)),
            Axiom::SubEx(c, r, d) => Axiom::SubEx(rc(c), rr(r), rc(d)),
            Axiom::ExSub(r, c, d) => Axiom::ExSub(rr(r), rc(c), rc(d)),
            Axiom::RoleSub(r, s) => Axiom::RoleSub(rr(r), rr(s)),
            Axiom::RoleChain(r1, r2, s) => Axiom::RoleChain(rr(r1), rr(r2), rr(s)),
        })
        .collect();

    let sig = Signature::new(concepts.len().max(1) as u32, roles.len().max(1) as u32)?;
    let mut sub = KnowledgeBase::new(sig, remapped)?;
    for (name, label) in kb.labels() {
        let new = match name.kind {
            NameKind::Concept => concept_rank.get(&name.index).map(|&i| Concept::new(i).name()),
            NameKind::Role => role_rank.get(&name.index).map(|&i| Role::new(i).name()),
        };
        if let Some(new_name) = new {
            sub.set_label(new_name, label.clone());
        }
    }
    Ok(sub)
}
