//! Knowledge-base core: names, the six normal-form axioms, canonical text
//! rendering, parsing, normalization of general axioms and anonymization.
//!
//! A knowledge base is a TBox/RBox pair over integer-named concepts and
//! roles. Axioms are kept in file order (encoding positions depend on it)
//! but have set semantics: duplicates are rejected.

mod general;
mod parse;

pub use general::{normalize, parse_general_kb, parse_general_line, ConceptExpr, GeneralAxiom};
pub use parse::{parse_axiom, parse_kb, render_kb, ParseWarning};

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KbError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: {name} exceeds signature bound {bound}")]
    NameOutOfBounds { line: usize, name: Name, bound: u32 },
    #[error("signature must have at least one concept and one role name")]
    EmptySignature,
    #[error("axiom {0} references a name outside the signature")]
    AxiomOutOfBounds(Axiom),
    #[error("duplicate axiom {0}")]
    DuplicateAxiom(Axiom),
    #[error("axiom {axiom}: {construct} is outside the supported fragment")]
    UnsupportedConstruct { axiom: String, construct: String },
}

/// Counts of usable concept and role names. Name indices are 1-based and
/// every name in an owning KB must satisfy `1 <= index <= bound`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Signature {
    max_concepts: u32,
    max_roles: u32,
}

impl Signature {
    pub fn new(max_concepts: u32, max_roles: u32) -> Result<Self, KbError> {
        if max_concepts == 0 || max_roles == 0 {
            return Err(KbError::EmptySignature);
        }
        Ok(Signature { max_concepts, max_roles })
    }

    pub fn max_concepts(&self) -> u32 {
        self.max_concepts
    }

    pub fn max_roles(&self) -> u32 {
        self.max_roles
    }

    /// Grows the concept bound to accommodate `index`.
    pub fn grow_concepts(&mut self, index: u32) {
        self.max_concepts = self.max_concepts.max(index);
    }

    pub fn contains(&self, name: Name) -> bool {
        let bound = match name.kind {
            NameKind::Concept => self.max_concepts,
            NameKind::Role => self.max_roles,
        };
        name.index >= 1 && name.index <= bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NameKind {
    Concept,
    Role,
}

/// A concept or role name; `index` is always >= 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name {
    pub kind: NameKind,
    pub index: u32,
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            NameKind::Concept => write!(f, "C{}", self.index),
            NameKind::Role => write!(f, "R{}", self.index),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Concept(u32);

impl Concept {
    pub fn new(index: u32) -> Self {
        assert!(index >= 1, "concept indices are 1-based");
        Concept(index)
    }

    pub fn index(&self) -> u32 {
        self.0
    }

    pub fn name(&self) -> Name {
        Name { kind: NameKind::Concept, index: self.0 }
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Role(u32);

impl Role {
    pub fn new(index: u32) -> Self {
        assert!(index >= 1, "role indices are 1-based");
        Role(index)
    }

    pub fn index(&self) -> u32 {
        self.0
    }

    pub fn name(&self) -> Name {
        Name { kind: NameKind::Role, index: self.0 }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}", self.0)
    }
}

/// One of the six EL+ normal forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axiom {
    /// C ⊑ D
    Sub(Concept, Concept),
    /// C1 ⊓ C2 ⊑ D
    SubConj(Concept, Concept, Concept),
    /// C ⊑ ∃R.D
    SubEx(Concept, Role, Concept),
    /// ∃R.C ⊑ D
    ExSub(Role, Concept, Concept),
    /// R ⊑ S
    RoleSub(Role, Role),
    /// R1 ∘ R2 ⊑ S
    RoleChain(Role, Role, Role),
}

impl Axiom {
    /// Names referenced by the axiom, in slot order.
    pub fn names(&self) -> Vec<Name> {
        match *self {
            Axiom::Sub(c, d) => vec![c.name(), d.name()],
            Axiom::SubConj(c1, c2, d) => vec![c1.name(), c2.name(), d.name()],
            Axiom::SubEx(c, r, d) => vec![c.name(), r.name(), d.name()],
            Axiom::ExSub(r, c, d) => vec![r.name(), c.name(), d.name()],
            Axiom::RoleSub(r, s) => vec![r.name(), s.name()],
            Axiom::RoleChain(r1, r2, s) => vec![r1.name(), r2.name(), s.name()],
        }
    }

    pub fn is_conclusion_form(&self) -> bool {
        matches!(self, Axiom::Sub(..) | Axiom::SubEx(..))
    }
}

/// Canonical rendering; the exact inverse of the canonical grammar.
impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Axiom::Sub(c, d) => write!(f, "{c} < {d}"),
            Axiom::SubConj(c1, c2, d) => write!(f, "{c1} & {c2} < {d}"),
            Axiom::SubEx(c, r, d) => write!(f, "{c} < {r} . {d}"),
            Axiom::ExSub(r, c, d) => write!(f, "{r} . {c} < {d}"),
            Axiom::RoleSub(r, s) => write!(f, "{r} < {s}"),
            Axiom::RoleChain(r1, r2, s) => write!(f, "{r1} * {r2} < {s}"),
        }
    }
}

/// Canonical string for an axiom; used by the distance metrics.
pub fn render_axiom(a: &Axiom) -> String {
    a.to_string()
}

/// A knowledge base: signature, ordered duplicate-free axioms, and optional
/// human labels that never enter the numeric pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeBase {
    signature: Signature,
    axioms: Vec<Axiom>,
    index: HashMap<Axiom, usize>,
    labels: BTreeMap<Name, String>,
}

impl KnowledgeBase {
    pub fn new(signature: Signature, axioms: Vec<Axiom>) -> Result<Self, KbError> {
        let mut kb = KnowledgeBase {
            signature,
            axioms: Vec::with_capacity(axioms.len()),
            index: HashMap::with_capacity(axioms.len()),
            labels: BTreeMap::new(),
        };
        for a in axioms {
            kb.push(a)?;
        }
        Ok(kb)
    }

    pub fn empty(signature: Signature) -> Self {
        KnowledgeBase { signature, axioms: Vec::new(), index: HashMap::new(), labels: BTreeMap::new() }
    }

    pub fn push(&mut self, axiom: Axiom) -> Result<(), KbError> {
        for name in axiom.names() {
            if !self.signature.contains(name) {
                return Err(KbError::AxiomOutOfBounds(axiom));
            }
        }
        if self.index.contains_key(&axiom) {
            return Err(KbError::DuplicateAxiom(axiom));
        }
        self.index.insert(axiom, self.axioms.len());
        self.axioms.push(axiom);
        Ok(())
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn axioms(&self) -> &[Axiom] {
        &self.axioms
    }

    pub fn len(&self) -> usize {
        self.axioms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axioms.is_empty()
    }

    pub fn contains(&self, axiom: &Axiom) -> bool {
        self.index.contains_key(axiom)
    }

    /// Position of `axiom` in file order, if present.
    pub fn index_of(&self, axiom: &Axiom) -> Option<usize> {
        self.index.get(axiom).copied()
    }

    pub fn labels(&self) -> &BTreeMap<Name, String> {
        &self.labels
    }

    pub fn set_label(&mut self, name: Name, label: impl Into<String>) {
        self.labels.insert(name, label.into());
    }

    /// All names that actually occur in the axioms.
    pub fn used_names(&self) -> Vec<Name> {
        let mut names: Vec<Name> = self.axioms.iter().flat_map(|a| a.names()).collect();
        names.sort_unstable();
        names.dedup();
        names
    }
}

/// Bijective renaming produced by [`anonymize`]. `concepts[i-1]` is the new
/// index of old concept `i`, likewise for roles. Labels detached from the
/// input KB are re-keyed by their *new* name for later retrieval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Renaming {
    concepts: Vec<u32>,
    roles: Vec<u32>,
    labels: BTreeMap<Name, String>,
}

impl Renaming {
    pub fn identity(sig: Signature) -> Self {
        Renaming {
            concepts: (1..=sig.max_concepts()).collect(),
            roles: (1..=sig.max_roles()).collect(),
            labels: BTreeMap::new(),
        }
    }

    pub fn concept(&self, c: Concept) -> Concept {
        Concept::new(self.concepts[(c.index() - 1) as usize])
    }

    pub fn role(&self, r: Role) -> Role {
        Role::new(self.roles[(r.index() - 1) as usize])
    }

    pub fn apply(&self, a: &Axiom) -> Axiom {
        match *a {
            Axiom::Sub(c, d) => Axiom::Sub(self.concept(c), self.concept(d)),
            Axiom::SubConj(c1, c2, d) => Axiom::SubConj(self.concept(c1), self.concept(c2), self.concept(d)),
            Axiom::SubEx(c, r, d) => Axiom::SubEx(self.concept(c), self.role(r), self.concept(d)),
            Axiom::ExSub(r, c, d) => Axiom::ExSub(self.role(r), self.concept(c), self.concept(d)),
            Axiom::RoleSub(r, s) => Axiom::RoleSub(self.role(r), self.role(s)),
            Axiom::RoleChain(r1, r2, s) => Axiom::RoleChain(self.role(r1), self.role(r2), self.role(s)),
        }
    }

    /// The inverse permutation pair, with the same label map.
    pub fn invert(&self) -> Renaming {
        let mut concepts = vec![0u32; self.concepts.len()];
        for (old, &new) in self.concepts.iter().enumerate() {
            concepts[(new - 1) as usize] = old as u32 + 1;
        }
        let mut roles = vec![0u32; self.roles.len()];
        for (old, &new) in self.roles.iter().enumerate() {
            roles[(new - 1) as usize] = old as u32 + 1;
        }
        Renaming { concepts, roles, labels: self.labels.clone() }
    }

    /// Original label of an anonymized name, when the source KB had one.
    pub fn label(&self, anonymized: Name) -> Option<&str> {
        self.labels.get(&anonymized).map(String::as_str)
    }

    pub fn is_identity(&self) -> bool {
        self.concepts.iter().enumerate().all(|(i, &v)| v == i as u32 + 1)
            && self.roles.iter().enumerate().all(|(i, &v)| v == i as u32 + 1)
    }
}

/// Renames concepts onto a random permutation of `[1, maxConcepts]` and roles
/// onto `[1, maxRoles]`, detaching labels into the returned map. Deterministic
/// for a fixed seed.
pub fn anonymize(kb: &KnowledgeBase, seed: u64) -> (KnowledgeBase, Renaming) {
    let sig = kb.signature();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut concepts: Vec<u32> = (1..=sig.max_concepts()).collect();
    concepts.shuffle(&mut rng);
    let mut roles: Vec<u32> = (1..=sig.max_roles()).collect();
    roles.shuffle(&mut rng);

    let mut renaming = Renaming { concepts, roles, labels: BTreeMap::new() };
    for (name, label) in kb.labels() {
        let new_name = match name.kind {
            NameKind::Concept => renaming.concept(Concept::new(name.index)).name(),
            NameKind::Role => renaming.role(Role::new(name.index)).name(),
        };
        renaming.labels.insert(new_name, label.clone());
    }

    let axioms: Vec<Axiom> = kb.axioms().iter().map(|a| renaming.apply(a)).collect();
    let out = KnowledgeBase::new(sig, axioms).expect("renaming preserves validity");
    (out, renaming)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(i: u32) -> Concept {
        Concept::new(i)
    }

    fn r(i: u32) -> Role {
        Role::new(i)
    }

    #[test]
    fn render_matches_grammar() {
        assert_eq!(render_axiom(&Axiom::Sub(c(2), c(1))), "C2 < C1");
        assert_eq!(render_axiom(&Axiom::SubConj(c(1), c(2), c(3))), "C1 & C2 < C3");
        assert_eq!(render_axiom(&Axiom::SubEx(c(4), r(1), c(2))), "C4 < R1 . C2");
        assert_eq!(render_axiom(&Axiom::ExSub(r(1), c(2), c(4))), "R1 . C2 < C4");
        assert_eq!(render_axiom(&Axiom::RoleSub(r(1), r(2))), "R1 < R2");
        assert_eq!(render_axiom(&Axiom::RoleChain(r(1), r(2), r(3))), "R1 * R2 < R3");
    }

    #[test]
    fn kb_rejects_out_of_bounds_and_duplicates() {
        let sig = Signature::new(2, 1).unwrap();
        let mut kb = KnowledgeBase::empty(sig);
        kb.push(Axiom::Sub(c(1), c(2))).unwrap();
        assert!(matches!(kb.push(Axiom::Sub(c(1), c(2))), Err(KbError::DuplicateAxiom(_))));
        assert!(matches!(kb.push(Axiom::Sub(c(3), c(1))), Err(KbError::AxiomOutOfBounds(_))));
    }

    #[test]
    fn anonymize_round_trips_through_inverse() {
        let sig = Signature::new(5, 2).unwrap();
        let mut kb = KnowledgeBase::new(
            sig,
            vec![
                Axiom::Sub(c(1), c(2)),
                Axiom::SubEx(c(3), r(1), c(4)),
                Axiom::RoleChain(r(1), r(2), r(2)),
            ],
        )
        .unwrap();
        kb.set_label(c(1).name(), "seed");
        let (anon, renaming) = anonymize(&kb, 7);
        assert!(anon.labels().is_empty());
        let inverse = renaming.invert();
        let restored: Vec<Axiom> = anon.axioms().iter().map(|a| inverse.apply(a)).collect();
        assert_eq!(restored, kb.axioms());
        // Label is retrievable under the new name.
        let new_seed = renaming.concept(c(1)).name();
        assert_eq!(renaming.label(new_seed), Some("seed"));
    }

    #[test]
    fn anonymize_is_deterministic_and_identity_is_possible() {
        let sig = Signature::new(3, 1).unwrap();
        let kb = KnowledgeBase::new(sig, vec![Axiom::Sub(c(1), c(2))]).unwrap();
        let (a1, r1) = anonymize(&kb, 99);
        let (a2, r2) = anonymize(&kb, 99);
        assert_eq!(a1, a2);
        assert_eq!(r1, r2);
        // Some seed yields the identity permutation on a small signature.
        let found_identity = (0..200).any(|s| anonymize(&kb, s).1.is_identity());
        assert!(found_identity);
    }

    #[test]
    fn distinct_seeds_usually_permute_differently() {
        // 3 concepts + 1 role: two independent uniform permutations collide
        // with probability 1/6, so >0.6 of seed pairs must differ.
        let sig = Signature::new(3, 1).unwrap();
        let kb = KnowledgeBase::new(sig, vec![Axiom::Sub(c(1), c(2)), Axiom::Sub(c(2), c(3))]).unwrap();
        let pairs = 200;
        let differing = (0..pairs)
            .filter(|&i| anonymize(&kb, i).1 != anonymize(&kb, i + 1000).1)
            .count();
        assert!(differing as f64 / pairs as f64 > 0.6);
    }
}
