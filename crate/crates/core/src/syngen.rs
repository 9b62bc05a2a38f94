//! Synthetic KB generation: a structured part that forces a lower bound on
//! the reasoning sequence, plus a connected randomized part.
//!
//! The structured part emits, per iteration t, one instantiation of each
//! completion rule whose firing is gated on an iteration t-1 conclusion, so
//! every rule fires at every step 1..=iterations and the trace has at least
//! `iterations` steps. Carriers:
//!
//! - a rule-2 ladder `A ⊑ L1`, `A ⊑ Yt`, `Lt ⊓ Yt ⊑ L(t+1)` whose conclusion
//!   `A ⊑ L(t+1)` arrives exactly at step t (no rule can shortcut it);
//! - rule 1/3/4 instantiations keyed on the ladder: `Lt ⊑ Mt`,
//!   `Lt ⊑ ∃Vt.Nt`, and `Qt ⊑ ∃Ut.A` with `∃Ut.Lt ⊑ Zt`;
//! - a rule-5 role staircase `A ⊑ ∃S0.F` with `S(t-1) ⊑ St`;
//! - a rule-6 chain walk `A ⊑ ∃W0.D0` with `D(t-1) ⊑ ∃Ot.Dt` and
//!   `W(t-1) ∘ Ot ⊑ Wt`.
//!
//! Random axioms live in a disjoint name pool connected to the rest only
//! through the seed concept A.

use crate::kb::{Axiom, Concept, KbError, KnowledgeBase, NameKind, Role, Signature};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("config: {0}")]
    Config(String),
    #[error("could not place random axiom {index} after {attempts} attempts")]
    RandomPlacement { index: usize, attempts: usize },
    #[error(transparent)]
    Kb(#[from] KbError),
}

/// Generator configuration. The derived signature keeps the structured and
/// random name pools disjoint; they share only the seed concept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenConfig {
    /// Repetitions of the structured gadget; lower bound on trace length.
    pub iterations: u32,
    /// Number of random axioms appended after the structured part.
    pub random_axioms: u32,
    /// Extra concept names reserved for the random pool.
    pub concept_headroom: u32,
    /// Extra role names reserved for the random pool.
    pub role_headroom: u32,
    pub seed: u64,
}

impl GenConfig {
    /// Moderate difficulty: 4 iterations, random part twice the structured
    /// axiom count, pool sized to keep the random part sparse.
    pub fn moderate(seed: u64) -> Self {
        let iterations = 4;
        let random_axioms = 2 * structured_axiom_count(iterations) as u32;
        GenConfig {
            iterations,
            random_axioms,
            concept_headroom: random_axioms,
            role_headroom: (random_axioms / 4).max(2),
            seed,
        }
    }

    fn validate(&self) -> Result<(), GenError> {
        if self.iterations == 0 {
            return Err(GenError::Config("iterations must be >= 1".into()));
        }
        if self.random_axioms > 0 && self.concept_headroom == 0 {
            return Err(GenError::Config(
                "random axioms need concept headroom for the random name pool".into(),
            ));
        }
        Ok(())
    }
}

/// Axioms emitted by the structured part for `iterations` repetitions.
pub fn structured_axiom_count(iterations: u32) -> usize {
    3 + 9 * iterations as usize
}

/// Concept and role names used by the structured part (including the seed).
pub fn structured_name_counts(iterations: u32) -> (u32, u32) {
    let k = iterations;
    (7 * k + 4, 5 * k + 2)
}

struct NameAlloc {
    next_concept: u32,
    next_role: u32,
}

impl NameAlloc {
    fn concept(&mut self) -> Concept {
        let c = Concept::new(self.next_concept);
        self.next_concept += 1;
        c
    }

    fn role(&mut self) -> Role {
        let r = Role::new(self.next_role);
        self.next_role += 1;
        r
    }
}

fn structured_axioms(iterations: u32) -> (Vec<Axiom>, u32, u32) {
    let k = iterations as usize;
    let mut alloc = NameAlloc { next_concept: 1, next_role: 1 };

    let seed = alloc.concept(); // A
    let ladder: Vec<Concept> = (0..=k).map(|_| alloc.concept()).collect(); // L1..L(k+1)
    let f = alloc.concept();
    let chain_fillers: Vec<Concept> = (0..=k).map(|_| alloc.concept()).collect(); // D0..Dk
    let stair_roles: Vec<Role> = (0..=k).map(|_| alloc.role()).collect(); // S0..Sk
    let chain_roles: Vec<Role> = (0..=k).map(|_| alloc.role()).collect(); // W0..Wk

    let mut axioms = vec![
        Axiom::Sub(seed, ladder[0]),
        Axiom::SubEx(seed, stair_roles[0], f),
        Axiom::SubEx(seed, chain_roles[0], chain_fillers[0]),
    ];

    for t in 0..k {
        let y = alloc.concept();
        let m = alloc.concept();
        let n = alloc.concept();
        let q = alloc.concept();
        let z = alloc.concept();
        let v = alloc.role();
        let u = alloc.role();
        let o = alloc.role();

        // rule 2: A ⊑ Lt, A ⊑ Yt, Lt ⊓ Yt ⊑ L(t+1)  fires at step t+1
        axioms.push(Axiom::Sub(seed, y));
        axioms.push(Axiom::SubConj(ladder[t], y, ladder[t + 1]));
        // rule 1: (A ⊑ Lt), Lt ⊑ Mt
        axioms.push(Axiom::Sub(ladder[t], m));
        // rule 3: (A ⊑ Lt), Lt ⊑ ∃Vt.Nt
        axioms.push(Axiom::SubEx(ladder[t], v, n));
        // rule 4: Qt ⊑ ∃Ut.A, (A ⊑ Lt), ∃Ut.Lt ⊑ Zt
        axioms.push(Axiom::SubEx(q, u, seed));
        axioms.push(Axiom::ExSub(u, ladder[t], z));
        // rule 5: (A ⊑ ∃S(t-1).F), S(t-1) ⊑ St
        axioms.push(Axiom::RoleSub(stair_roles[t], stair_roles[t + 1]));
        // rule 6: (A ⊑ ∃W(t-1).D(t-1)), D(t-1) ⊑ ∃Ot.Dt, W(t-1) ∘ Ot ⊑ Wt
        axioms.push(Axiom::SubEx(chain_fillers[t], o, chain_fillers[t + 1]));
        axioms.push(Axiom::RoleChain(chain_roles[t], o, chain_roles[t + 1]));
    }

    (axioms, alloc.next_concept - 1, alloc.next_role - 1)
}

/// Generates one semi-random KB. Deterministic for a fixed config.
pub fn generate(cfg: &GenConfig) -> Result<KnowledgeBase, GenError> {
    cfg.validate()?;
    let (axioms, struct_concepts, struct_roles) = structured_axioms(cfg.iterations);
    debug_assert_eq!(axioms.len(), structured_axiom_count(cfg.iterations));
    debug_assert_eq!((struct_concepts, struct_roles), structured_name_counts(cfg.iterations));

    let sig = Signature::new(
        struct_concepts + cfg.concept_headroom,
        struct_roles + cfg.role_headroom,
    )?;
    let mut kb = KnowledgeBase::new(sig, axioms)?;

    if cfg.random_axioms > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let seed_concept = Concept::new(1);
        let concept_pool: Vec<Concept> =
            (struct_concepts + 1..=sig.max_concepts()).map(Concept::new).collect();
        let role_pool: Vec<Role> = (struct_roles + 1..=sig.max_roles()).map(Role::new).collect();

        // Names of the random component reachable from the seed concept.
        let mut connected_concepts = vec![seed_concept];
        let mut connected_roles: Vec<Role> = Vec::new();

        for i in 0..cfg.random_axioms as usize {
            let axiom = draw_random_axiom(
                &mut rng,
                &kb,
                seed_concept,
                &concept_pool,
                &role_pool,
                &connected_concepts,
                &connected_roles,
            )
            .ok_or(GenError::RandomPlacement { index: i, attempts: 1000 })?;
            for name in axiom.names() {
                match name.kind {
                    NameKind::Concept => {
                        let c = Concept::new(name.index);
                        if !connected_concepts.contains(&c) {
                            connected_concepts.push(c);
                        }
                    }
                    NameKind::Role => {
                        let r = Role::new(name.index);
                        if !connected_roles.contains(&r) {
                            connected_roles.push(r);
                        }
                    }
                }
            }
            kb.push(axiom)?;
        }
    }

    Ok(kb)
}

/// Draws a random axiom over the pool that shares at least one name with the
/// connected random component. Form is uniform over the six shapes; shapes
/// that cannot connect yet (role forms before any pool role is reachable)
/// are redrawn.
fn draw_random_axiom(
    rng: &mut ChaCha8Rng,
    kb: &KnowledgeBase,
    seed_concept: Concept,
    concept_pool: &[Concept],
    role_pool: &[Role],
    connected_concepts: &[Concept],
    connected_roles: &[Role],
) -> Option<Axiom> {
    // Concept slots may use the seed term; role slots only the pool.
    let concept_choices: Vec<Concept> =
        std::iter::once(seed_concept).chain(concept_pool.iter().copied()).collect();
    let pick_concept = |rng: &mut ChaCha8Rng| concept_choices[rng.gen_range(0..concept_choices.len())];
    let pick_role = |rng: &mut ChaCha8Rng| role_pool[rng.gen_range(0..role_pool.len())];

    for _ in 0..1000 {
        let form = rng.gen_range(0..6u8);
        let axiom = match form {
            0 => Axiom::Sub(pick_concept(rng), pick_concept(rng)),
            1 => Axiom::SubConj(pick_concept(rng), pick_concept(rng), pick_concept(rng)),
            2 => {
                if role_pool.is_empty() {
                    continue;
                }
                Axiom::SubEx(pick_concept(rng), pick_role(rng), pick_concept(rng))
            }
            3 => {
                if role_pool.is_empty() {
                    continue;
                }
                Axiom::ExSub(pick_role(rng), pick_concept(rng), pick_concept(rng))
            }
            4 => {
                if role_pool.is_empty() {
                    continue;
                }
                Axiom::RoleSub(pick_role(rng), pick_role(rng))
            }
            _ => {
                if role_pool.is_empty() {
                    continue;
                }
                Axiom::RoleChain(pick_role(rng), pick_role(rng), pick_role(rng))
            }
        };

        let connects = axiom.names().iter().any(|name| match name.kind {
            NameKind::Concept => connected_concepts.contains(&Concept::new(name.index)),
            NameKind::Role => connected_roles.contains(&Role::new(name.index)),
        });
        if connects && !kb.contains(&axiom) {
            return Some(axiom);
        }
    }
    None
}

/// `count` independent KBs from seeds `cfg.seed + 0 .. cfg.seed + count - 1`.
pub fn generate_batch(cfg: &GenConfig, count: usize) -> Result<Vec<KnowledgeBase>, GenError> {
    (0..count)
        .map(|i| {
            let mut item = *cfg;
            item.seed = cfg.seed.wrapping_add(i as u64);
            generate(&item)
        })
        .collect()
}

/// True iff the bipartite axiom-name incidence graph of the KB is connected.
pub fn is_connected(kb: &KnowledgeBase) -> bool {
    if kb.is_empty() {
        return true;
    }
    let axioms = kb.axioms();
    let mut name_to_axioms: std::collections::HashMap<crate::kb::Name, Vec<usize>> =
        std::collections::HashMap::new();
    for (i, axiom) in axioms.iter().enumerate() {
        for name in axiom.names() {
            name_to_axioms.entry(name).or_default().push(i);
        }
    }
    let mut seen = vec![false; axioms.len()];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for name in axioms[i].names() {
            for &j in &name_to_axioms[&name] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    seen.into_iter().all(|s| s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reasoner::saturate;

    #[test]
    fn structured_counts_match_emission() {
        for k in 1..=5 {
            let (axioms, concepts, roles) = structured_axioms(k);
            assert_eq!(axioms.len(), structured_axiom_count(k));
            assert_eq!((concepts, roles), structured_name_counts(k));
        }
    }

    #[test]
    fn one_iteration_fires_every_rule_at_step_one() {
        let cfg = GenConfig { iterations: 1, random_axioms: 0, concept_headroom: 0, role_headroom: 0, seed: 0 };
        let kb = generate(&cfg).unwrap();
        let trace = saturate(&kb);
        assert!(!trace.is_empty());
        let mut step1_rules: Vec<u8> = trace.steps()[0].iter().map(|d| d.rule.get()).collect();
        step1_rules.sort_unstable();
        step1_rules.dedup();
        assert_eq!(step1_rules, vec![1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn trace_length_is_at_least_iterations() {
        for k in 1..=5 {
            let cfg =
                GenConfig { iterations: k, random_axioms: 0, concept_headroom: 0, role_headroom: 0, seed: 3 };
            let kb = generate(&cfg).unwrap();
            assert!(saturate(&kb).len() >= k as usize, "k={k}");
        }
    }

    #[test]
    fn axiom_count_and_connectivity_with_random_part() {
        let cfg = GenConfig { iterations: 2, random_axioms: 10, concept_headroom: 8, role_headroom: 3, seed: 11 };
        let kb = generate(&cfg).unwrap();
        assert_eq!(kb.len(), structured_axiom_count(2) + 10);
        assert!(is_connected(&kb));
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = GenConfig::moderate(42);
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn batch_uses_consecutive_seeds() {
        let cfg = GenConfig { iterations: 1, random_axioms: 5, concept_headroom: 4, role_headroom: 2, seed: 7 };
        let batch = generate_batch(&cfg, 3).unwrap();
        assert_eq!(batch.len(), 3);
        let mut second = cfg;
        second.seed = 8;
        assert_eq!(batch[1], generate(&second).unwrap());
        assert!(generate_batch(&cfg, 0).unwrap().is_empty());
    }

    #[test]
    fn zero_iterations_is_a_config_error() {
        let cfg = GenConfig { iterations: 0, random_axioms: 0, concept_headroom: 0, role_headroom: 0, seed: 0 };
        assert!(matches!(generate(&cfg), Err(GenError::Config(_))));
    }

    #[test]
    fn random_axioms_without_pool_is_a_config_error() {
        let cfg = GenConfig { iterations: 1, random_axioms: 4, concept_headroom: 0, role_headroom: 0, seed: 0 };
        assert!(matches!(generate(&cfg), Err(GenError::Config(_))));
    }
}
