//! Support extraction: for every conclusion, the set of original KB axioms
//! that suffice to re-derive it, obtained by walking the trace forward and
//! replacing every non-KB premise with that premise's own support.

use crate::kb::Axiom;
use crate::reasoner::ReasoningTrace;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SupportError {
    #[error("premise {premise} of {conclusion} is neither a KB axiom nor an earlier conclusion")]
    UnknownPremise { conclusion: Axiom, premise: Axiom },
    #[error("step {0} out of range, trace has {1} steps")]
    StepOutOfRange(usize, usize),
}

/// Conclusion -> 0-based indices into the originating KB's axiom list.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SupportMap {
    entries: BTreeMap<Axiom, BTreeSet<usize>>,
}

impl SupportMap {
    pub fn get(&self, conclusion: &Axiom) -> Option<&BTreeSet<usize>> {
        self.entries.get(conclusion)
    }

    pub fn entries(&self) -> &BTreeMap<Axiom, BTreeSet<usize>> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Debug dump: `<axiom> :: <i1>,<i2>,...` one line per conclusion,
    /// indices 0-based in KB order.
    pub fn dump(&self) -> String {
        let mut lines: Vec<(String, &BTreeSet<usize>)> =
            self.entries.iter().map(|(a, s)| (a.to_string(), s)).collect();
        lines.sort();
        let mut out = String::new();
        for (axiom, support) in lines {
            let indices: Vec<String> = support.iter().map(usize::to_string).collect();
            out.push_str(&format!("{} :: {}\n", axiom, indices.join(",")));
        }
        out
    }
}

/// Support of a statement relative to a trace: a KB axiom supports itself
/// (degenerate singleton), a conclusion has its extracted entry.
pub fn support_of(trace: &ReasoningTrace, sm: &SupportMap, statement: &Axiom) -> Option<BTreeSet<usize>> {
    if let Some(i) = trace.kb().index_of(statement) {
        return Some(BTreeSet::from([i]));
    }
    sm.get(statement).cloned()
}

/// Computes supports for every conclusion in the trace. Step-1 conclusions
/// take their premises' KB indices; later conclusions take the union over
/// premises of either the premise's KB index or its own support.
pub fn extract_supports(trace: &ReasoningTrace) -> Result<SupportMap, SupportError> {
    let kb = trace.kb();
    let mut entries: BTreeMap<Axiom, BTreeSet<usize>> = BTreeMap::new();

    for step in trace.steps() {
        // Premises reference only KB axioms and strictly earlier steps, so
        // everything needed is already in `entries`.
        let mut this_step: Vec<(Axiom, BTreeSet<usize>)> = Vec::with_capacity(step.len());
        for d in step {
            let mut support = BTreeSet::new();
            for premise in &d.premises {
                if let Some(i) = kb.index_of(premise) {
                    support.insert(i);
                } else if let Some(prior) = entries.get(premise) {
                    support.extend(prior.iter().copied());
                } else {
                    return Err(SupportError::UnknownPremise {
                        conclusion: d.conclusion,
                        premise: *premise,
                    });
                }
            }
            this_step.push((d.conclusion, support));
        }
        entries.extend(this_step);
    }

    Ok(SupportMap { entries })
}

/// Sorted union of the supports of all conclusions in step `t` (1-based).
pub fn step_support_union(
    trace: &ReasoningTrace,
    sm: &SupportMap,
    t: usize,
) -> Result<Vec<usize>, SupportError> {
    if t == 0 || t > trace.len() {
        return Err(SupportError::StepOutOfRange(t, trace.len()));
    }
    let mut union = BTreeSet::new();
    for d in &trace.steps()[t - 1] {
        if let Some(support) = sm.get(&d.conclusion) {
            union.extend(support.iter().copied());
        }
    }
    Ok(union.into_iter().collect())
}
