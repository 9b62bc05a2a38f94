//! Evaluation: best-match scoring of predicted statements against answer
//! sets, precision/recall/F1 from zero-distance counts, test-KB corruption,
//! the random baseline, and the corruption sweep over trained folds.

mod distance;

pub use distance::{atomic_distance, char_distance, predicate_distance, predicate_distance_str};

use crate::encode::{encode_kb, DatasetTensors, PreparedSample};
use crate::kb::{Axiom, Concept, KbError, KnowledgeBase, Role, Signature};
use crate::nnet::{FoldResult, TrainError};
use crate::reasoner::{completion_set, saturate};
use crate::scalar::Scalar;
use crate::seeding::{derive_seed, rng_from};
use rand::Rng;
use rayon::prelude::*;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("corruption probability {0} outside [0,1]")]
    BadProbability(f64),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Train(#[from] TrainError),
}

macro_rules! fmt_enum {
    ($ty:ident, $($variant:ident => $name:literal),+) => {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let s = match self {
                $($ty::$variant => $name),+
            };
            write!(f, "{s}")
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Character,
    Atomic,
    Predicate,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Character, Metric::Atomic, Metric::Predicate];

    pub fn distance(&self, a: &Axiom, b: &Axiom) -> u64 {
        match self {
            Metric::Character => char_distance(&a.to_string(), &b.to_string()) as u64,
            Metric::Atomic => atomic_distance(&a.to_string(), &b.to_string()) as u64,
            Metric::Predicate => predicate_distance(a, b),
        }
    }
}

impl fmt::Display for Metric {
    fmt_enum!(Metric, Character => "character", Atomic => "atomic", Predicate => "predicate");
}

/// Where a scored statement list came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Baseline {
    /// The model's predictions on (possibly corrupted) input.
    Lstm,
    /// The reasoner re-run on the corrupted KB.
    Reasoner,
    /// Uniform random statements at maximum output capacity.
    Random,
}

impl Baseline {
    pub const ALL: [Baseline; 3] = [Baseline::Lstm, Baseline::Reasoner, Baseline::Random];
}

impl fmt::Display for Baseline {
    fmt_enum!(Baseline, Lstm => "lstm", Reasoner => "reasoner", Random => "random");
}

/// Best-match scoring result for one prediction list against one answer set.
#[derive(Debug, Clone, PartialEq)]
pub struct BestMatch {
    /// Per prediction: distance to its closest answer.
    pub distances: Vec<u64>,
    pub true_positives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub empty_predictions: bool,
    pub empty_answers: bool,
}

/// For each predicted statement, the distance to its minimum-distance
/// answer. Zero-distance predictions count as true positives;
/// precision = TP/|predictions|, recall = TP/|answers|, F1 their harmonic
/// mean. Empty sides are flagged and score 0.
pub fn best_match_score(predictions: &[Axiom], answers: &[Axiom], metric: Metric) -> BestMatch {
    let empty_predictions = predictions.is_empty();
    let empty_answers = answers.is_empty();
    let distances: Vec<u64> = if empty_answers {
        Vec::new()
    } else {
        predictions
            .iter()
            .map(|p| answers.iter().map(|a| metric.distance(p, a)).min().expect("answers nonempty"))
            .collect()
    };
    let true_positives = distances.iter().filter(|&&d| d == 0).count();
    let precision =
        if empty_predictions { 0.0 } else { true_positives as f64 / predictions.len() as f64 };
    let recall = if empty_answers { 0.0 } else { true_positives as f64 / answers.len() as f64 };
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    BestMatch { distances, true_positives, precision, recall, f1, empty_predictions, empty_answers }
}

/// Per-axiom corruption probability and seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionConfig {
    pub probability: f64,
    pub seed: u64,
}

/// Independently with probability p per axiom, every name in the axiom is
/// resampled uniformly from the same-kind names of the signature; the form
/// is preserved. Returns the corrupted KB and the per-axiom corruption
/// flags. Deterministic per seed; p = 0 is the identity.
pub fn corrupt_kb(
    kb: &KnowledgeBase,
    cfg: &CorruptionConfig,
) -> Result<(KnowledgeBase, Vec<bool>), EvalError> {
    if !(0.0..=1.0).contains(&cfg.probability) {
        return Err(EvalError::BadProbability(cfg.probability));
    }
    let sig = kb.signature();
    let mut rng = rng_from(cfg.seed);
    let mut flags = Vec::with_capacity(kb.len());
    // Uniqueness guard: holds every statement currently slated for the
    // output (processed results plus not-yet-processed originals).
    let mut used: std::collections::HashSet<Axiom> = kb.axioms().iter().copied().collect();
    let mut out: Vec<Axiom> = Vec::with_capacity(kb.len());

    for &axiom in kb.axioms() {
        let flagged = rng.gen_bool(cfg.probability);
        flags.push(flagged);
        if !flagged {
            out.push(axiom);
            continue;
        }
        used.remove(&axiom);
        let mut replacement = axiom;
        for _ in 0..64 {
            let candidate = resample_names(&axiom, sig, &mut rng);
            if !used.contains(&candidate) {
                replacement = candidate;
                break;
            }
        }
        if used.contains(&replacement) {
            replacement = axiom; // could not avoid a collision; keep original
        }
        used.insert(replacement);
        out.push(replacement);
    }

    Ok((KnowledgeBase::new(sig, out)?, flags))
}

fn resample_names(a: &Axiom, sig: Signature, rng: &mut impl Rng) -> Axiom {
    fn c(sig: Signature, rng: &mut impl Rng) -> Concept {
        Concept::new(rng.gen_range(1..=sig.max_concepts()))
    }
    fn r(sig: Signature, rng: &mut impl Rng) -> Role {
        Role::new(rng.gen_range(1..=sig.max_roles()))
    }
    match *a {
        Axiom::Sub(..) => Axiom::Sub(c(sig, rng), c(sig, rng)),
        Axiom::SubConj(..) => Axiom::SubConj(c(sig, rng), c(sig, rng), c(sig, rng)),
        Axiom::SubEx(..) => Axiom::SubEx(c(sig, rng), r(sig, rng), c(sig, rng)),
        Axiom::ExSub(..) => Axiom::ExSub(r(sig, rng), c(sig, rng), c(sig, rng)),
        Axiom::RoleSub(..) => Axiom::RoleSub(r(sig, rng), r(sig, rng)),
        Axiom::RoleChain(..) => Axiom::RoleChain(r(sig, rng), r(sig, rng), r(sig, rng)),
    }
}

/// `max_statements` uniformly random well-formed conclusion-form statements
/// (Sub or SubEx) over the signature, sized to the biggest output the model
/// could conceivably produce.
pub fn random_answers(sig: Signature, max_statements: usize, seed: u64) -> Vec<Axiom> {
    let mc = u64::from(sig.max_concepts());
    let mr = u64::from(sig.max_roles());
    let sub_count = mc * mc;
    let total = sub_count + mc * mc * mr;
    let mut rng = rng_from(seed);
    (0..max_statements)
        .map(|_| {
            let u = rng.gen_range(0..total);
            if u < sub_count {
                Axiom::Sub(Concept::new((u / mc) as u32 + 1), Concept::new((u % mc) as u32 + 1))
            } else {
                let v = u - sub_count;
                let d = (v % mc) as u32 + 1;
                let w = v / mc;
                let r = (w % mr) as u32 + 1;
                let c = (w / mr) as u32 + 1;
                Axiom::SubEx(Concept::new(c), Role::new(r), Concept::new(d))
            }
        })
        .collect()
}

/// One aggregated report row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub level: f64,
    pub metric: Metric,
    pub baseline: Baseline,
    pub mean_dist: f64,
    pub min_dist: f64,
    pub max_dist: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Folds that contributed at least one distance to this row.
    pub fold_count: usize,
}

/// Per-metric, per-baseline, per-level aggregates over all folds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub rows: Vec<SweepRow>,
}

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("level,metric,baseline,mean_dist,min_dist,max_dist,precision,recall,f1,fold_count\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.level,
                r.metric,
                r.baseline,
                r.mean_dist,
                r.min_dist,
                r.max_dist,
                r.precision,
                r.recall,
                r.f1,
                r.fold_count
            ));
        }
        out
    }

    pub fn row(&self, level: f64, metric: Metric, baseline: Baseline) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| (r.level - level).abs() < 1e-9 && r.metric == metric && r.baseline == baseline)
    }
}

/// Per-fold, per-(metric, baseline) accumulation before cross-fold averaging.
#[derive(Debug, Clone, Default)]
struct FoldCell {
    distances: Vec<u64>,
    precision_sum: f64,
    recall_sum: f64,
    f1_sum: f64,
    samples: usize,
}

fn canonical_sorted(mut v: Vec<Axiom>) -> Vec<Axiom> {
    v.sort_by_cached_key(Axiom::to_string);
    v.dedup();
    v
}

/// Runs the corruption sweep: for every level, corrupt each fold's held-out
/// KBs, predict with that fold's model, re-saturate the corrupted KBs for
/// the reasoner baseline, draw the random baseline, and score all three
/// sources against the uncorrupted correct completions. Averages are taken
/// per fold and then across folds.
pub fn run_sweep<S: Scalar>(
    folds: &[FoldResult<S>],
    tensors: &DatasetTensors<S>,
    prepared: &[PreparedSample],
    levels: &[f64],
    eval_seed: u64,
) -> Result<EvalReport, EvalError> {
    let dims = tensors.dims();
    let capacity = dims.steps * dims.out_width / 4;

    // fold -> level -> (metric, baseline) -> accumulated stats
    let per_fold: Result<Vec<Vec<Vec<FoldCell>>>, EvalError> = folds
        .par_iter()
        .map(|fold| {
            let mut by_level: Vec<Vec<FoldCell>> = Vec::with_capacity(levels.len());
            for (level_idx, &level) in levels.iter().enumerate() {
                let mut cells = vec![FoldCell::default(); Metric::ALL.len() * Baseline::ALL.len()];
                for &sample in &fold.test_indices {
                    let kb = prepared[sample].kb();
                    let sig = kb.signature();
                    let answers =
                        canonical_sorted(completion_set(&prepared[sample].trace).into_iter().collect());

                    let sample_seed = derive_seed(
                        derive_seed(derive_seed(eval_seed, level_idx as u64), fold.fold as u64),
                        sample as u64,
                    );
                    let (corrupted, _) = corrupt_kb(
                        kb,
                        &CorruptionConfig { probability: level, seed: sample_seed },
                    )?;

                    // Model predictions on the corrupted input.
                    let mut row = vec![S::zero(); dims.kb_width];
                    let enc: Vec<S> = encode_kb(&corrupted);
                    row[..enc.len()].copy_from_slice(&enc);
                    let x_rows: Vec<&[S]> = (0..dims.steps).map(|_| row.as_slice()).collect();
                    let predicted = fold.model.predict(&x_rows, sig)?;
                    let lstm = canonical_sorted(predicted.into_iter().flatten().collect());

                    // Reasoner on the corrupted KB.
                    let reasoner =
                        canonical_sorted(completion_set(&saturate(&corrupted)).into_iter().collect());

                    // Random statements at maximum output capacity.
                    let random = random_answers(sig, capacity, derive_seed(sample_seed, 0xBA5E));

                    for (mi, metric) in Metric::ALL.iter().enumerate() {
                        for (bi, baseline) in Baseline::ALL.iter().enumerate() {
                            let source = match baseline {
                                Baseline::Lstm => &lstm,
                                Baseline::Reasoner => &reasoner,
                                Baseline::Random => &random,
                            };
                            let score = best_match_score(source, &answers, *metric);
                            let cell = &mut cells[mi * Baseline::ALL.len() + bi];
                            cell.distances.extend_from_slice(&score.distances);
                            cell.precision_sum += score.precision;
                            cell.recall_sum += score.recall;
                            cell.f1_sum += score.f1;
                            cell.samples += 1;
                        }
                    }
                }
                by_level.push(cells);
            }
            Ok(by_level)
        })
        .collect();
    let per_fold = per_fold?;

    let mut rows = Vec::new();
    for (level_idx, &level) in levels.iter().enumerate() {
        for (mi, metric) in Metric::ALL.iter().enumerate() {
            for (bi, baseline) in Baseline::ALL.iter().enumerate() {
                let mut fold_means = Vec::new();
                let mut min_dist = f64::INFINITY;
                let mut max_dist = f64::NEG_INFINITY;
                let mut precision = 0.0;
                let mut recall = 0.0;
                let mut f1 = 0.0;
                let mut scored_folds = 0usize;

                for fold_cells in &per_fold {
                    let cell = &fold_cells[level_idx][mi * Baseline::ALL.len() + bi];
                    if cell.samples > 0 {
                        scored_folds += 1;
                        precision += cell.precision_sum / cell.samples as f64;
                        recall += cell.recall_sum / cell.samples as f64;
                        f1 += cell.f1_sum / cell.samples as f64;
                    }
                    if !cell.distances.is_empty() {
                        let sum: u64 = cell.distances.iter().sum();
                        fold_means.push(sum as f64 / cell.distances.len() as f64);
                        min_dist = min_dist.min(*cell.distances.iter().min().unwrap() as f64);
                        max_dist = max_dist.max(*cell.distances.iter().max().unwrap() as f64);
                    }
                }

                let fold_count = fold_means.len();
                let mean_dist = if fold_count > 0 {
                    fold_means.iter().sum::<f64>() / fold_count as f64
                } else {
                    0.0
                };
                rows.push(SweepRow {
                    level,
                    metric: *metric,
                    baseline: *baseline,
                    mean_dist,
                    min_dist: if fold_count > 0 { min_dist } else { 0.0 },
                    max_dist: if fold_count > 0 { max_dist } else { 0.0 },
                    precision: if scored_folds > 0 { precision / scored_folds as f64 } else { 0.0 },
                    recall: if scored_folds > 0 { recall / scored_folds as f64 } else { 0.0 },
                    f1: if scored_folds > 0 { f1 / scored_folds as f64 } else { 0.0 },
                    fold_count,
                });
            }
        }
    }

    Ok(EvalReport { rows })
}
