//! Completion-rule saturation.
//!
//! The calculus is the axiom-level EL+ completion rule set, numbered:
//!
//! 1. A ⊑ B, B ⊑ C            ⟹ A ⊑ C
//! 2. A ⊑ B1, A ⊑ B2, B1 ⊓ B2 ⊑ C ⟹ A ⊑ C
//! 3. A ⊑ B, B ⊑ ∃R.C         ⟹ A ⊑ ∃R.C
//! 4. A ⊑ ∃R.B, B ⊑ C, ∃R.C ⊑ D ⟹ A ⊑ D
//! 5. A ⊑ ∃R.B, R ⊑ S         ⟹ A ⊑ ∃S.B
//! 6. A ⊑ ∃R1.B, B ⊑ ∃R2.C, R1 ∘ R2 ⊑ S ⟹ A ⊑ ∃S.C
//!
//! Saturation is breadth-first: step t holds every conclusion derivable by a
//! single rule application from the KB plus all earlier steps, minus what is
//! already known. It stops when no rule produces anything new. Reflexive
//! tautologies X ⊑ X are never emitted but rule 4 accepts its middle premise
//! vacuously when B = C (the tautological premise is omitted from the
//! recorded premises, which must all be KB axioms or earlier conclusions).
//! Only Sub and SubEx conclusions are produced.

use crate::kb::{Axiom, Concept, KnowledgeBase, Role};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReasonerError {
    #[error("entails only answers Sub/SubEx queries, got {0}")]
    UnsupportedQuery(Axiom),
}

/// One of the six completion rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleId(u8);

impl RuleId {
    pub fn new(id: u8) -> Self {
        assert!((1..=6).contains(&id), "rule ids are 1..=6");
        RuleId(id)
    }

    pub fn get(&self) -> u8 {
        self.0
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A single rule application: its conclusion, the rule, and the premises
/// (each a KB axiom or an earlier conclusion).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub conclusion: Axiom,
    pub rule: RuleId,
    pub premises: Vec<Axiom>,
}

/// Ordered breadth-first layers of newly derived conclusions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReasoningTrace {
    kb: KnowledgeBase,
    steps: Vec<Vec<Derivation>>,
}

impl ReasoningTrace {
    pub fn kb(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn steps(&self) -> &[Vec<Derivation>] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Largest number of conclusions in any single step.
    pub fn max_step_width(&self) -> usize {
        self.steps.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Debug dump: `step <t> | rule <k> | <axiom> <= <premise>; <premise>...`
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (t, step) in self.steps.iter().enumerate() {
            for d in step {
                let premises: Vec<String> = d.premises.iter().map(Axiom::to_string).collect();
                out.push_str(&format!(
                    "step {} | rule {} | {} <= {}\n",
                    t + 1,
                    d.rule,
                    d.conclusion,
                    premises.join("; ")
                ));
            }
        }
        out
    }
}

/// Flattens all step conclusions into one set.
pub fn completion_set(trace: &ReasoningTrace) -> HashSet<Axiom> {
    trace.steps.iter().flatten().map(|d| d.conclusion).collect()
}

/// True iff the queried Sub/SubEx statement is a KB axiom or a conclusion.
pub fn entails(kb: &KnowledgeBase, query: &Axiom) -> Result<bool, ReasonerError> {
    if !query.is_conclusion_form() {
        return Err(ReasonerError::UnsupportedQuery(*query));
    }
    if kb.contains(query) {
        return Ok(true);
    }
    Ok(completion_set(&saturate(kb)).contains(query))
}

/// View of all known statements, indexed per rule premise shape. Rebuilt at
/// every step; premise vectors are sorted canonically (lexicographic on the
/// rendered statement) so rule instantiations enumerate deterministically.
struct Indexes {
    subs: Vec<(Concept, Concept)>,
    subs_by_lhs: HashMap<Concept, Vec<Concept>>,
    subex: Vec<(Concept, Role, Concept)>,
    subex_by_lhs: HashMap<Concept, Vec<(Role, Concept)>>,
    conj_by_pair: HashMap<(Concept, Concept), Vec<Concept>>,
    exsub_by_role_filler: HashMap<(Role, Concept), Vec<Concept>>,
    rolesub_by_lhs: HashMap<Role, Vec<Role>>,
    chain_by_pair: HashMap<(Role, Role), Vec<Role>>,
}

fn canon<I: IntoIterator<Item = Axiom>>(axioms: I) -> Vec<Axiom> {
    let mut v: Vec<Axiom> = axioms.into_iter().collect();
    v.sort_by_cached_key(Axiom::to_string);
    v
}

impl Indexes {
    fn build(known: &HashSet<Axiom>) -> Self {
        let mut ix = Indexes {
            subs: Vec::new(),
            subs_by_lhs: HashMap::new(),
            subex: Vec::new(),
            subex_by_lhs: HashMap::new(),
            conj_by_pair: HashMap::new(),
            exsub_by_role_filler: HashMap::new(),
            rolesub_by_lhs: HashMap::new(),
            chain_by_pair: HashMap::new(),
        };
        for axiom in canon(known.iter().copied()) {
            match axiom {
                Axiom::Sub(a, b) => {
                    ix.subs.push((a, b));
                    ix.subs_by_lhs.entry(a).or_default().push(b);
                }
                Axiom::SubEx(a, r, b) => {
                    ix.subex.push((a, r, b));
                    ix.subex_by_lhs.entry(a).or_default().push((r, b));
                }
                Axiom::SubConj(b1, b2, c) => {
                    ix.conj_by_pair.entry((b1, b2)).or_default().push(c);
                }
                Axiom::ExSub(r, c, d) => {
                    ix.exsub_by_role_filler.entry((r, c)).or_default().push(d);
                }
                Axiom::RoleSub(r, s) => {
                    ix.rolesub_by_lhs.entry(r).or_default().push(s);
                }
                Axiom::RoleChain(r1, r2, s) => {
                    ix.chain_by_pair.entry((r1, r2)).or_default().push(s);
                }
            }
        }
        ix
    }
}

/// Saturates a KB, recording the breadth-first trace. An empty trace means
/// nothing was derivable.
pub fn saturate(kb: &KnowledgeBase) -> ReasoningTrace {
    let mut known: HashSet<Axiom> = kb.axioms().iter().copied().collect();
    let mut steps: Vec<Vec<Derivation>> = Vec::new();

    loop {
        let ix = Indexes::build(&known);
        // Keyed by conclusion; the first insertion wins, and candidates are
        // generated in rule order with premises in canonical order, so the
        // retained derivation is the first in rule-then-premise order.
        let mut new: BTreeMap<Axiom, Derivation> = BTreeMap::new();
        let mut consider = |conclusion: Axiom, rule: u8, premises: Vec<Axiom>| {
            if known.contains(&conclusion) || new.contains_key(&conclusion) {
                return;
            }
            let mut premises = premises;
            premises.dedup();
            new.insert(conclusion, Derivation { conclusion, rule: RuleId::new(rule), premises });
        };

        // Rule 1: A ⊑ B, B ⊑ C ⟹ A ⊑ C
        for &(a, b) in &ix.subs {
            if let Some(cs) = ix.subs_by_lhs.get(&b) {
                for &c in cs {
                    if c != a {
                        consider(Axiom::Sub(a, c), 1, vec![Axiom::Sub(a, b), Axiom::Sub(b, c)]);
                    }
                }
            }
        }

        // Rule 2: A ⊑ B1, A ⊑ B2, B1 ⊓ B2 ⊑ C ⟹ A ⊑ C
        for &(a, b1) in &ix.subs {
            if let Some(b2s) = ix.subs_by_lhs.get(&a) {
                for &b2 in b2s {
                    if let Some(cs) = ix.conj_by_pair.get(&(b1, b2)) {
                        for &c in cs {
                            if c != a {
                                consider(
                                    Axiom::Sub(a, c),
                                    2,
                                    vec![Axiom::Sub(a, b1), Axiom::Sub(a, b2), Axiom::SubConj(b1, b2, c)],
                                );
                            }
                        }
                    }
                }
            }
        }

        // Rule 3: A ⊑ B, B ⊑ ∃R.C ⟹ A ⊑ ∃R.C
        for &(a, b) in &ix.subs {
            if let Some(exs) = ix.subex_by_lhs.get(&b) {
                for &(r, c) in exs {
                    consider(Axiom::SubEx(a, r, c), 3, vec![Axiom::Sub(a, b), Axiom::SubEx(b, r, c)]);
                }
            }
        }

        // Rule 4: A ⊑ ∃R.B, B ⊑ C, ∃R.C ⊑ D ⟹ A ⊑ D. The middle premise is
        // vacuous when C = B; that instantiation is tried first and recorded
        // without the tautological premise.
        for &(a, r, b) in &ix.subex {
            if let Some(ds) = ix.exsub_by_role_filler.get(&(r, b)) {
                for &d in ds {
                    if d != a {
                        consider(
                            Axiom::Sub(a, d),
                            4,
                            vec![Axiom::SubEx(a, r, b), Axiom::ExSub(r, b, d)],
                        );
                    }
                }
            }
            if let Some(cs) = ix.subs_by_lhs.get(&b) {
                for &c in cs {
                    if let Some(ds) = ix.exsub_by_role_filler.get(&(r, c)) {
                        for &d in ds {
                            if d != a {
                                consider(
                                    Axiom::Sub(a, d),
                                    4,
                                    vec![Axiom::SubEx(a, r, b), Axiom::Sub(b, c), Axiom::ExSub(r, c, d)],
                                );
                            }
                        }
                    }
                }
            }
        }

        // Rule 5: A ⊑ ∃R.B, R ⊑ S ⟹ A ⊑ ∃S.B
        for &(a, r, b) in &ix.subex {
            if let Some(ss) = ix.rolesub_by_lhs.get(&r) {
                for &s in ss {
                    consider(Axiom::SubEx(a, s, b), 5, vec![Axiom::SubEx(a, r, b), Axiom::RoleSub(r, s)]);
                }
            }
        }

        // Rule 6: A ⊑ ∃R1.B, B ⊑ ∃R2.C, R1 ∘ R2 ⊑ S ⟹ A ⊑ ∃S.C
        for &(a, r1, b) in &ix.subex {
            if let Some(exs) = ix.subex_by_lhs.get(&b) {
                for &(r2, c) in exs {
                    if let Some(ss) = ix.chain_by_pair.get(&(r1, r2)) {
                        for &s in ss {
                            consider(
                                Axiom::SubEx(a, s, c),
                                6,
                                vec![
                                    Axiom::SubEx(a, r1, b),
                                    Axiom::SubEx(b, r2, c),
                                    Axiom::RoleChain(r1, r2, s),
                                ],
                            );
                        }
                    }
                }
            }
        }

        if new.is_empty() {
            break;
        }
        known.extend(new.keys().copied());
        let mut step: Vec<Derivation> = new.into_values().collect();
        step.sort_by_cached_key(|d| d.conclusion.to_string());
        steps.push(step);
    }

    ReasoningTrace { kb: kb.clone(), steps }
}
