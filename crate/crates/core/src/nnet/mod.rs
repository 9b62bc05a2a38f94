//! Three LSTM architectures over the dataset tensors, MSE regression
//! training by full-batch gradient descent, and k-fold cross-validation.
//!
//! All three architectures share input and output dimensionality:
//!
//! - Flat: one LSTM layer `kbWidth -> outWidth`, affine readout;
//! - Deep: `kbWidth -> supportWidth -> outWidth`, trained jointly against Y
//!   only (the support-sized hidden layer carries no auxiliary loss);
//! - Piecewise: part A `kbWidth -> supportWidth` trained against S, part B
//!   `supportWidth -> outWidth` trained against Y, composed at inference.
//!
//! The number of recurrence steps equals the dataset's maximum reasoning
//! sequence length.

mod lstm;

pub use lstm::{Affine, LstmLayer, LstmStack, Mat, StackGrads, StackRun};

use crate::encode::{decode_row, DatasetDims, DatasetTensors};
use crate::kb::{Axiom, Signature};
use crate::scalar::Scalar;
use crate::seeding::{derive_seed, rng_from};
use rayon::prelude::*;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("loss became non-finite at epoch {epoch} (learning rate too high?)")]
    NonFiniteLoss { epoch: usize },
    #[error("{folds} folds exceed {samples} samples")]
    TooManyFolds { folds: usize, samples: usize },
    #[error("dataset has no samples")]
    EmptyDataset,
    #[error("checkpoint: {0}")]
    BadCheckpoint(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Architecture {
    Flat,
    Deep,
    Piecewise,
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Architecture::Flat => "flat",
            Architecture::Deep => "deep",
            Architecture::Piecewise => "piecewise",
        };
        write!(f, "{s}")
    }
}

impl FromStr for Architecture {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "flat" => Ok(Architecture::Flat),
            "deep" => Ok(Architecture::Deep),
            "piecewise" => Ok(Architecture::Piecewise),
            other => Err(format!("unknown architecture `{other}`")),
        }
    }
}

/// Architecture plus the dataset dimensions it is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSpec {
    pub architecture: Architecture,
    pub kb_width: usize,
    pub support_width: usize,
    pub out_width: usize,
    /// Sequence length: the dataset's maximum reasoning trace length.
    pub steps: usize,
}

impl ModelSpec {
    pub fn for_dims(architecture: Architecture, dims: DatasetDims) -> Self {
        ModelSpec {
            architecture,
            kb_width: dims.kb_width,
            support_width: dims.support_width,
            out_width: dims.out_width,
            steps: dims.steps,
        }
    }
}

/// Training hyperparameters. Defaults follow the experiment protocol:
/// 20000 epochs for Flat/Deep, 10000 per Piecewise half, learning rate
/// 0.0001, 10 folds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub piecewise_epochs: usize,
    pub learning_rate: f64,
    pub folds: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 20_000, piecewise_epochs: 10_000, learning_rate: 1e-4, folds: 10, seed: 0 }
    }
}

#[derive(Debug, Clone)]
enum ModelKind<S: Scalar> {
    Flat(LstmStack<S>),
    Deep(LstmStack<S>),
    Piecewise { part_a: LstmStack<S>, part_b: LstmStack<S> },
}

/// A trained (or freshly initialized) model.
#[derive(Debug, Clone)]
pub struct Model<S: Scalar> {
    spec: ModelSpec,
    seed: u64,
    kind: ModelKind<S>,
}

/// Per-step outputs plus, for Deep and Piecewise, the support-sized
/// intermediate activations that make the network inspectable part-way.
#[derive(Debug, Clone)]
pub struct ModelOutput<S: Scalar> {
    pub outputs: Vec<Vec<S>>,
    pub support_activations: Option<Vec<Vec<S>>>,
}

impl<S: Scalar> Model<S> {
    /// Seeded weight initialization for the given spec.
    pub fn init(spec: ModelSpec, seed: u64) -> Self {
        let mut rng = rng_from(seed);
        let kind = match spec.architecture {
            Architecture::Flat => {
                ModelKind::Flat(LstmStack::init(&[spec.kb_width, spec.out_width], spec.out_width, &mut rng))
            }
            Architecture::Deep => ModelKind::Deep(LstmStack::init(
                &[spec.kb_width, spec.support_width, spec.out_width],
                spec.out_width,
                &mut rng,
            )),
            Architecture::Piecewise => {
                let part_a =
                    LstmStack::init(&[spec.kb_width, spec.support_width], spec.support_width, &mut rng);
                let part_b =
                    LstmStack::init(&[spec.support_width, spec.out_width], spec.out_width, &mut rng);
                ModelKind::Piecewise { part_a, part_b }
            }
        };
        Model { spec, seed, kind }
    }

    pub fn spec(&self) -> ModelSpec {
        self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Forward pass over one sample (steps x kbWidth rows).
    pub fn forward(&self, x_sample: &[&[S]]) -> Result<ModelOutput<S>, TrainError> {
        if x_sample.iter().any(|row| row.len() != self.spec.kb_width) {
            return Err(TrainError::ShapeMismatch(format!(
                "input rows must have width {}",
                self.spec.kb_width
            )));
        }
        Ok(match &self.kind {
            ModelKind::Flat(stack) => {
                let run = stack.forward(x_sample);
                ModelOutput { outputs: run.outputs, support_activations: None }
            }
            ModelKind::Deep(stack) => {
                let run = stack.forward(x_sample);
                let support = run.hidden[0].clone();
                ModelOutput { outputs: run.outputs, support_activations: Some(support) }
            }
            ModelKind::Piecewise { part_a, part_b } => {
                let run_a = part_a.forward(x_sample);
                let a_rows: Vec<&[S]> = run_a.outputs.iter().map(Vec::as_slice).collect();
                let run_b = part_b.forward(&a_rows);
                ModelOutput { outputs: run_b.outputs, support_activations: Some(run_a.outputs) }
            }
        })
    }

    /// Forward pass followed by decoding each output 4-tuple; padding and
    /// unrecognized patterns are dropped. Returns statements per step.
    pub fn predict(&self, x_sample: &[&[S]], sig: Signature) -> Result<Vec<Vec<Axiom>>, TrainError> {
        let out = self.forward(x_sample)?;
        Ok(out.outputs.iter().map(|row| decode_row(row, sig)).collect())
    }

    fn stacks(&self) -> Vec<(&'static str, &LstmStack<S>)> {
        match &self.kind {
            ModelKind::Flat(s) => vec![("main", s)],
            ModelKind::Deep(s) => vec![("main", s)],
            ModelKind::Piecewise { part_a, part_b } => vec![("part_a", part_a), ("part_b", part_b)],
        }
    }

    fn stacks_mut(&mut self) -> Vec<&mut LstmStack<S>> {
        match &mut self.kind {
            ModelKind::Flat(s) => vec![s],
            ModelKind::Deep(s) => vec![s],
            ModelKind::Piecewise { part_a, part_b } => vec![part_a, part_b],
        }
    }
}

/// Mean of squared elementwise differences over all steps and features.
pub fn mse<S: Scalar>(pred: &[Vec<S>], target: &[&[S]]) -> Result<S, TrainError> {
    if pred.len() != target.len() || pred.iter().zip(target).any(|(p, t)| p.len() != t.len()) {
        return Err(TrainError::ShapeMismatch("loss operands differ in shape".into()));
    }
    let total: usize = pred.iter().map(Vec::len).sum();
    if total == 0 {
        return Ok(S::zero());
    }
    let mut acc = S::zero();
    for (p_row, t_row) in pred.iter().zip(target) {
        for (p, t) in p_row.iter().zip(t_row.iter()) {
            let d = *p - *t;
            acc += d * d;
        }
    }
    Ok(acc / S::from_usize(total))
}

/// One sample's input and target rows for stack training.
pub struct StackSample<'a, S: Scalar> {
    pub inputs: Vec<&'a [S]>,
    pub targets: Vec<&'a [S]>,
}

/// Full-batch gradient descent on one stack. The descended objective is the
/// squared error summed over samples, steps and features (the batch gradient
/// is the sum of per-sample gradients, which keeps the step size at the
/// configured learning rate independent of output width); the returned curve
/// reports the batch mean-MSE at each epoch before that epoch's update, so
/// curves stay comparable across datasets.
pub fn train_stack<S: Scalar>(
    stack: &mut LstmStack<S>,
    samples: &[StackSample<'_, S>],
    epochs: usize,
    learning_rate: f64,
) -> Result<Vec<f64>, TrainError> {
    if samples.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let n = S::from_usize(samples.len());
    let lr = S::from_f64(learning_rate);
    let mut curve = Vec::with_capacity(epochs);

    for epoch in 0..epochs {
        let mut grads = stack.zero_grads();
        let mut batch_loss = S::zero();

        for sample in samples {
            let run = stack.forward(&sample.inputs);
            batch_loss += mse(&run.outputs, &sample.targets)?;

            let scale = S::from_f64(2.0);
            let d_outputs: Vec<Vec<S>> = run
                .outputs
                .iter()
                .zip(sample.targets.iter())
                .map(|(p_row, t_row)| {
                    p_row.iter().zip(t_row.iter()).map(|(p, t)| (*p - *t) * scale).collect()
                })
                .collect();
            stack.backward(&run, &d_outputs, &mut grads);
        }

        let loss = (batch_loss / n).as_f64();
        if !loss.is_finite() {
            return Err(TrainError::NonFiniteLoss { epoch });
        }
        curve.push(loss);
        stack.apply_grads(&grads, lr);
    }

    Ok(curve)
}

/// Squared error summed over steps and features: the quantity whose batch
/// mean `train_stack` descends.
pub fn sum_squared_error<S: Scalar>(pred: &[Vec<S>], target: &[&[S]]) -> Result<S, TrainError> {
    let total: usize = pred.iter().map(Vec::len).sum();
    Ok(mse(pred, target)? * S::from_usize(total))
}

/// A named per-epoch loss curve.
#[derive(Debug, Clone, PartialEq)]
pub struct LossCurve {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<S: Scalar> {
    pub model: Model<S>,
    pub curves: Vec<LossCurve>,
}

fn gather_x<S: Scalar>(tensors: &DatasetTensors<S>, sample: usize) -> Vec<&[S]> {
    tensors.x_sample(sample)
}

/// Trains one model on the given sample indices (all samples when `None`).
pub fn train<S: Scalar>(
    spec: ModelSpec,
    tensors: &DatasetTensors<S>,
    cfg: &TrainConfig,
    indices: Option<&[usize]>,
) -> Result<TrainOutcome<S>, TrainError> {
    let all: Vec<usize> = (0..tensors.dims().samples).collect();
    let indices = indices.unwrap_or(&all);
    if indices.is_empty() {
        return Err(TrainError::EmptyDataset);
    }

    let mut model = Model::init(spec, cfg.seed);
    let mut curves = Vec::new();

    match &mut model.kind {
        ModelKind::Flat(stack) | ModelKind::Deep(stack) => {
            let samples: Vec<StackSample<'_, S>> = indices
                .iter()
                .map(|&i| StackSample { inputs: gather_x(tensors, i), targets: tensors.y_sample(i) })
                .collect();
            let curve = train_stack(stack, &samples, cfg.epochs, cfg.learning_rate)?;
            curves.push(LossCurve { name: "loss".into(), values: curve });
        }
        ModelKind::Piecewise { part_a, part_b } => {
            let a_samples: Vec<StackSample<'_, S>> = indices
                .iter()
                .map(|&i| StackSample { inputs: gather_x(tensors, i), targets: tensors.s_sample(i) })
                .collect();
            let curve_a = train_stack(part_a, &a_samples, cfg.piecewise_epochs, cfg.learning_rate)?;
            curves.push(LossCurve { name: "part_a".into(), values: curve_a });

            let b_samples: Vec<StackSample<'_, S>> = indices
                .iter()
                .map(|&i| StackSample { inputs: tensors.s_sample(i), targets: tensors.y_sample(i) })
                .collect();
            let curve_b = train_stack(part_b, &b_samples, cfg.piecewise_epochs, cfg.learning_rate)?;
            curves.push(LossCurve { name: "part_b".into(), values: curve_b });
        }
    }

    Ok(TrainOutcome { model, curves })
}

/// One fold of a cross-validation run.
#[derive(Debug, Clone)]
pub struct FoldResult<S: Scalar> {
    pub fold: usize,
    pub test_indices: Vec<usize>,
    pub model: Model<S>,
    pub curves: Vec<LossCurve>,
}

/// Randomized k-fold partition (seeded), one training per fold, folds run in
/// parallel. Fold f holds out its block and trains on the rest with a seed
/// derived from `(cfg.seed, f)`.
pub fn cross_validate<S: Scalar>(
    spec: ModelSpec,
    tensors: &DatasetTensors<S>,
    cfg: &TrainConfig,
) -> Result<Vec<FoldResult<S>>, TrainError> {
    let samples = tensors.dims().samples;
    if cfg.folds == 0 || cfg.folds > samples {
        return Err(TrainError::TooManyFolds { folds: cfg.folds, samples });
    }

    let mut order: Vec<usize> = (0..samples).collect();
    use rand::seq::SliceRandom;
    order.shuffle(&mut rng_from(cfg.seed));

    // Balanced contiguous blocks of the shuffled order.
    let base = samples / cfg.folds;
    let extra = samples % cfg.folds;
    let mut blocks: Vec<Vec<usize>> = Vec::with_capacity(cfg.folds);
    let mut pos = 0;
    for f in 0..cfg.folds {
        let len = base + usize::from(f < extra);
        blocks.push(order[pos..pos + len].to_vec());
        pos += len;
    }

    blocks
        .into_par_iter()
        .enumerate()
        .map(|(fold, test_indices)| {
            let train_indices: Vec<usize> =
                (0..samples).filter(|i| !test_indices.contains(i)).collect();
            let fold_cfg = TrainConfig { seed: derive_seed(cfg.seed, fold as u64 + 1), ..*cfg };
            let outcome = train(spec, tensors, &fold_cfg, Some(&train_indices))?;
            Ok(FoldResult { fold, test_indices, model: outcome.model, curves: outcome.curves })
        })
        .collect()
}

// --- checkpoint format ----------------------------------------------------
//
// elstm-model 1
// arch <flat|deep|piecewise>
// dims <kbWidth> <supportWidth> <outWidth>
// steps <n>
// seed <n>
// stack <name> layers <k>
// layer <in> <hidden>
// w_ih <floats...> / w_hh <floats...> / b <floats...>
// readout <in> <out>
// w <floats...> / b <floats...>

impl<S: Scalar> Model<S> {
    pub fn to_text(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(out, "elstm-model 1");
        let _ = writeln!(out, "arch {}", self.spec.architecture);
        let _ = writeln!(out, "dims {} {} {}", self.spec.kb_width, self.spec.support_width, self.spec.out_width);
        let _ = writeln!(out, "steps {}", self.spec.steps);
        let _ = writeln!(out, "seed {}", self.seed);
        let fmt_row = |data: &[S]| -> String {
            data.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
        };
        for (name, stack) in self.stacks() {
            let _ = writeln!(out, "stack {} layers {}", name, stack.layers.len());
            for layer in &stack.layers {
                let _ = writeln!(out, "layer {} {}", layer.input_dim, layer.hidden_dim);
                let _ = writeln!(out, "w_ih {}", fmt_row(&layer.w_ih.data));
                let _ = writeln!(out, "w_hh {}", fmt_row(&layer.w_hh.data));
                let _ = writeln!(out, "b {}", fmt_row(&layer.b));
            }
            let _ = writeln!(out, "readout {} {}", stack.readout.w.cols, stack.readout.w.rows);
            let _ = writeln!(out, "w {}", fmt_row(&stack.readout.w.data));
            let _ = writeln!(out, "b {}", fmt_row(&stack.readout.b));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), TrainError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, TrainError> {
        let bad = |msg: &str| TrainError::BadCheckpoint(msg.to_string());
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("elstm-model 1") {
            return Err(bad("not an elstm-model v1 file"));
        }
        let mut kv = |key: &str| -> Result<Vec<String>, TrainError> {
            let line = lines.next().ok_or_else(|| bad("truncated header"))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(bad(&format!("expected `{key}`, got `{line}`")));
            }
            Ok(parts.map(str::to_string).collect())
        };
        let arch: Architecture =
            kv("arch")?[0].parse().map_err(|e: String| TrainError::BadCheckpoint(e))?;
        let dims = kv("dims")?;
        let parse_usize = |s: &str| s.parse::<usize>().map_err(|_| bad(&format!("bad number `{s}`")));
        let kb_width = parse_usize(&dims[0])?;
        let support_width = parse_usize(&dims[1])?;
        let out_width = parse_usize(&dims[2])?;
        let steps = parse_usize(&kv("steps")?[0])?;
        let seed = kv("seed")?[0].parse::<u64>().map_err(|_| bad("bad seed"))?;
        let spec = ModelSpec { architecture: arch, kb_width, support_width, out_width, steps };

        // Initialize with the right shapes, then overwrite every parameter.
        let mut model = Model::init(spec, seed);
        let rest: Vec<&str> = lines.collect();
        let mut pos = 0;
        let parse_row = |line: &str, prefix: &str| -> Result<Vec<S>, TrainError> {
            let body = line
                .strip_prefix(prefix)
                .ok_or_else(|| bad(&format!("expected `{prefix}...`, got `{line}`")))?;
            body.split_whitespace()
                .map(|v| v.parse::<f64>().map(S::from_f64).map_err(|_| bad(&format!("bad float `{v}`"))))
                .collect()
        };
        for stack in model.stacks_mut() {
            let header = rest.get(pos).ok_or_else(|| bad("missing stack"))?;
            if !header.starts_with("stack ") {
                return Err(bad(&format!("expected stack header, got `{header}`")));
            }
            pos += 1;
            for layer in &mut stack.layers {
                let lheader = rest.get(pos).ok_or_else(|| bad("missing layer"))?;
                if !lheader.starts_with("layer ") {
                    return Err(bad(&format!("expected layer header, got `{lheader}`")));
                }
                pos += 1;
                layer.w_ih.data = parse_row(rest.get(pos).ok_or_else(|| bad("missing w_ih"))?, "w_ih ")?;
                pos += 1;
                layer.w_hh.data = parse_row(rest.get(pos).ok_or_else(|| bad("missing w_hh"))?, "w_hh ")?;
                pos += 1;
                layer.b = parse_row(rest.get(pos).ok_or_else(|| bad("missing b"))?, "b ")?;
                pos += 1;
                if layer.w_ih.data.len() != 4 * layer.hidden_dim * layer.input_dim
                    || layer.w_hh.data.len() != 4 * layer.hidden_dim * layer.hidden_dim
                    || layer.b.len() != 4 * layer.hidden_dim
                {
                    return Err(bad("layer parameter sizes do not match dims"));
                }
            }
            let rheader = rest.get(pos).ok_or_else(|| bad("missing readout"))?;
            if !rheader.starts_with("readout ") {
                return Err(bad(&format!("expected readout header, got `{rheader}`")));
            }
            pos += 1;
            stack.readout.w.data = parse_row(rest.get(pos).ok_or_else(|| bad("missing readout w"))?, "w ")?;
            pos += 1;
            stack.readout.b = parse_row(rest.get(pos).ok_or_else(|| bad("missing readout b"))?, "b ")?;
            pos += 1;
            if stack.readout.w.data.len() != stack.readout.w.rows * stack.readout.w.cols {
                return Err(bad("readout parameter sizes do not match dims"));
            }
        }
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self, TrainError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}
