//! Shared test oracles, independent of the implementation paths they check.

#![allow(dead_code)]

use elstm_core::kb::{Axiom, Concept, KnowledgeBase, Role, Signature};
use elstm_core::nnet::{sum_squared_error, LstmStack, StackSample};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

/// Brute-force fixed-point saturation: apply every rule to every tuple of
/// known statements until nothing changes. No step structure, no indexes, no
/// derivation bookkeeping; the same six-rule semantics as the reasoner
/// (rule 4's middle premise is satisfied vacuously when B = C, reflexive
/// conclusions are suppressed, only Sub/SubEx emitted).
pub fn brute_force_completion(kb: &KnowledgeBase) -> HashSet<Axiom> {
    let mut known: HashSet<Axiom> = kb.axioms().iter().copied().collect();
    loop {
        let snapshot: Vec<Axiom> = known.iter().copied().collect();
        let mut fresh: Vec<Axiom> = Vec::new();
        {
            let mut add = |a: Axiom| {
                if !known.contains(&a) && !fresh.contains(&a) {
                    fresh.push(a);
                }
            };

            for x in &snapshot {
                for y in &snapshot {
                    // rule 1
                    if let (Axiom::Sub(a, b), Axiom::Sub(b2, c)) = (x, y) {
                        if b == b2 && a != c {
                            add(Axiom::Sub(*a, *c));
                        }
                    }
                    // rule 3
                    if let (Axiom::Sub(a, b), Axiom::SubEx(b2, r, c)) = (x, y) {
                        if b == b2 {
                            add(Axiom::SubEx(*a, *r, *c));
                        }
                    }
                    // rule 5
                    if let (Axiom::SubEx(a, r, b), Axiom::RoleSub(r2, s)) = (x, y) {
                        if r == r2 {
                            add(Axiom::SubEx(*a, *s, *b));
                        }
                    }
                    // rule 2 (third premise resolved by membership)
                    if let (Axiom::Sub(a, b1), Axiom::SubConj(c1, c2, c)) = (x, y) {
                        if b1 == c1 && known.contains(&Axiom::Sub(*a, *c2)) && a != c {
                            add(Axiom::Sub(*a, *c));
                        }
                    }
                    // rule 4, vacuous middle premise
                    if let (Axiom::SubEx(a, r, b), Axiom::ExSub(r2, c, d)) = (x, y) {
                        if r == r2 && a != d && (b == c || known.contains(&Axiom::Sub(*b, *c))) {
                            add(Axiom::Sub(*a, *d));
                        }
                    }
                    // rule 6 (chain resolved by scanning the snapshot)
                    if let (Axiom::SubEx(a, r1, b), Axiom::SubEx(b2, r2, c)) = (x, y) {
                        if b == b2 {
                            for z in &snapshot {
                                if let Axiom::RoleChain(p, q, s) = z {
                                    if p == r1 && q == r2 {
                                        add(Axiom::SubEx(*a, *s, *c));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }

        if fresh.is_empty() {
            break;
        }
        known.extend(fresh);
    }

    for axiom in kb.axioms() {
        known.remove(axiom);
    }
    known
}

/// Uniformly random KB within the given bounds, deduplicated.
pub fn random_kb(seed: u64, axiom_count: usize, max_c: u32, max_r: u32) -> KnowledgeBase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sig = Signature::new(max_c, max_r).unwrap();
    let mut kb = KnowledgeBase::empty(sig);
    let mut placed = 0;
    let mut attempts = 0;
    while placed < axiom_count && attempts < axiom_count * 50 {
        attempts += 1;
        let c = |rng: &mut ChaCha8Rng| Concept::new(rng.gen_range(1..=max_c));
        let r = |rng: &mut ChaCha8Rng| Role::new(rng.gen_range(1..=max_r));
        let axiom = match rng.gen_range(0..6u8) {
            0 => Axiom::Sub(c(&mut rng), c(&mut rng)),
            1 => Axiom::SubConj(c(&mut rng), c(&mut rng), c(&mut rng)),
            2 => Axiom::SubEx(c(&mut rng), r(&mut rng), c(&mut rng)),
            3 => Axiom::ExSub(r(&mut rng), c(&mut rng), c(&mut rng)),
            4 => Axiom::RoleSub(r(&mut rng), r(&mut rng)),
            _ => Axiom::RoleChain(r(&mut rng), r(&mut rng), r(&mut rng)),
        };
        if let Axiom::Sub(a, b) = axiom {
            if a == b {
                continue; // reflexive statements are uninformative
            }
        }
        if !kb.contains(&axiom) {
            kb.push(axiom).unwrap();
            placed += 1;
        }
    }
    kb
}

/// Central finite differences against analytic BPTT gradients on a batch,
/// using the same objective as training (squared error summed over samples,
/// steps and features). Returns the largest relative error, with
/// rel = |a - f| / max(|a|, |f|, 1).
pub fn gradient_check(stack: &mut LstmStack<f64>, samples: &[StackSample<'_, f64>], h: f64) -> f64 {
    let batch_loss = |stack: &LstmStack<f64>| -> f64 {
        samples
            .iter()
            .map(|s| {
                let run = stack.forward(&s.inputs);
                sum_squared_error(&run.outputs, &s.targets).unwrap()
            })
            .sum::<f64>()
    };

    // Analytic gradients of the same summed objective.
    let mut grads = stack.zero_grads();
    for sample in samples {
        let run = stack.forward(&sample.inputs);
        let scale = 2.0;
        let d_outputs: Vec<Vec<f64>> = run
            .outputs
            .iter()
            .zip(sample.targets.iter())
            .map(|(p_row, t_row)| p_row.iter().zip(t_row.iter()).map(|(p, t)| (p - t) * scale).collect())
            .collect();
        stack.backward(&run, &d_outputs, &mut grads);
    }
    let analytic = grads.flat();

    let params = stack.params_flat();
    let mut max_rel = 0.0f64;
    for i in 0..params.len() {
        let mut plugged = params.clone();
        plugged[i] = params[i] + h;
        stack.set_params_flat(&plugged);
        let up = batch_loss(stack);
        plugged[i] = params[i] - h;
        stack.set_params_flat(&plugged);
        let down = batch_loss(stack);
        let fd = (up - down) / (2.0 * h);
        let rel = (analytic[i] - fd).abs() / analytic[i].abs().max(fd.abs()).max(1.0);
        max_rel = max_rel.max(rel);
    }
    stack.set_params_flat(&params);
    max_rel
}
