//! Acceptance suite. One test per criterion; each prints its measured
//! numbers (visible with `--nocapture`) and asserts the stated gate.

mod common;

use common::{brute_force_completion, gradient_check, random_kb};
use elstm_core::encode::{build_dataset, encode_axiom, encode_kb, DatasetTensors, PreparedSample};
use elstm_core::eval::{
    atomic_distance, best_match_score, char_distance, predicate_distance, random_answers, run_sweep,
    Baseline, Metric,
};
use elstm_core::kb::{parse_kb, Axiom, Concept, KnowledgeBase, Role, Signature};
use elstm_core::nnet::{
    cross_validate, train, Architecture, LstmStack, ModelSpec, StackSample, TrainConfig,
};
use elstm_core::reasoner::{completion_set, saturate};
use elstm_core::seeding::{derive_seed, rng_from};
use elstm_core::supports::extract_supports;
use elstm_core::syngen::{generate, generate_batch, is_connected, GenConfig};
use rand::Rng;
use std::time::Instant;

fn c(i: u32) -> Concept {
    Concept::new(i)
}

fn r(i: u32) -> Role {
    Role::new(i)
}

#[test]
fn criterion_01_reasoner_oracle_equivalence() {
    let start = Instant::now();
    for seed in 0..200u64 {
        let axioms = 5 + (seed as usize) % 26; // up to 30
        let max_c = 5 + (seed as u32) % 16; // up to 20
        let max_r = 1 + (seed as u32) % 5; // up to 5
        let kb = random_kb(seed, axioms, max_c, max_r);
        let stepped = completion_set(&saturate(&kb));
        let oracle = brute_force_completion(&kb);
        assert_eq!(stepped, oracle, "seed {seed}");
    }
    let elapsed = start.elapsed();
    println!("criterion 1: 200 KBs oracle-equal in {elapsed:.2?}");
    assert!(elapsed.as_secs() < 30, "took {elapsed:?}, budget 30 s");
}

#[test]
fn criterion_02_support_soundness() {
    let mut conclusions_checked = 0usize;
    for seed in 1000..1100u64 {
        let kb = random_kb(seed, 8 + (seed as usize) % 20, 12, 4);
        let trace = saturate(&kb);
        let supports = extract_supports(&trace).unwrap();
        for (conclusion, support) in supports.entries() {
            let axioms: Vec<Axiom> = support.iter().map(|&i| kb.axioms()[i]).collect();
            let restricted = KnowledgeBase::new(kb.signature(), axioms).unwrap();
            assert!(
                completion_set(&saturate(&restricted)).contains(conclusion),
                "seed {seed}: support of {conclusion} does not re-derive it"
            );
            conclusions_checked += 1;
        }
    }
    println!("criterion 2: {conclusions_checked} conclusions re-derived from their supports, 0 failures");
    assert!(conclusions_checked > 100);
}

#[test]
fn criterion_03_worked_example_encoding() {
    let (kb, _) = parse_kb("sig 4 1\nC2 < C1\nC3 < C4\nC4 < R1 . C2\n").unwrap();
    let expected64: Vec<f64> = vec![0.0, 0.5, 0.25, 0.0, 0.0, 0.75, 1.0, 0.0, 0.0, 1.0, -1.0, 0.5];
    assert_eq!(encode_kb::<f64>(&kb), expected64);
    let expected32: Vec<f32> = expected64.iter().map(|&v| v as f32).collect();
    assert_eq!(encode_kb::<f32>(&kb), expected32);
    println!("criterion 3: worked example reproduces bit-for-bit in f64 and f32");
}

#[test]
fn criterion_04_encoding_round_trip() {
    use elstm_core::encode::decode_axiom;
    let sig = Signature::new(50, 20).unwrap();
    let mut checked = 0u64;
    let mut check = |a: Axiom| {
        let e = encode_axiom::<f64>(&a, sig).unwrap();
        assert_eq!(decode_axiom(&e, sig), Some(a), "{a}");
        checked += 1;
    };
    for ci in 1..=50u32 {
        for di in 1..=50u32 {
            check(Axiom::Sub(c(ci), c(di)));
            for ei in 1..=50u32 {
                check(Axiom::SubConj(c(ci), c(ei), c(di)));
            }
            for ri in 1..=20u32 {
                check(Axiom::SubEx(c(ci), r(ri), c(di)));
                check(Axiom::ExSub(r(ri), c(ci), c(di)));
            }
        }
    }
    for ri in 1..=20u32 {
        for si in 1..=20u32 {
            check(Axiom::RoleSub(r(ri), r(si)));
            for ti in 1..=20u32 {
                check(Axiom::RoleChain(r(ri), r(si), r(ti)));
            }
        }
    }
    println!("criterion 4: decode∘encode identity on {checked} axioms at signature (50,20)");
    assert_eq!(checked, 2500 + 125_000 + 2 * 50_000 + 400 + 8_000);
}

#[test]
fn criterion_05_pinned_predicate_distances() {
    // Guess C1 for answer C2 in one slot: distance 1.
    assert_eq!(predicate_distance(&Axiom::Sub(c(1), c(3)), &Axiom::Sub(c(2), c(3))), 1);
    // Guess R2 where the answer slot holds C15: 2 + 15 = 17.
    assert_eq!(
        predicate_distance(&Axiom::ExSub(r(2), c(2), c(4)), &Axiom::SubConj(c(15), c(2), c(4))),
        17
    );
    println!("criterion 5: predicate distances 1 and 17 exact");
}

fn random_axiom<R: Rng>(rng: &mut R, max_c: u32, max_r: u32) -> Axiom {
    fn ci<R: Rng>(rng: &mut R, max_c: u32) -> Concept {
        Concept::new(rng.gen_range(1..=max_c))
    }
    fn ri<R: Rng>(rng: &mut R, max_r: u32) -> Role {
        Role::new(rng.gen_range(1..=max_r))
    }
    match rng.gen_range(0..6u8) {
        0 => Axiom::Sub(ci(rng, max_c), ci(rng, max_c)),
        1 => Axiom::SubConj(ci(rng, max_c), ci(rng, max_c), ci(rng, max_c)),
        2 => Axiom::SubEx(ci(rng, max_c), ri(rng, max_r), ci(rng, max_c)),
        3 => Axiom::ExSub(ri(rng, max_r), ci(rng, max_c), ci(rng, max_c)),
        4 => Axiom::RoleSub(ri(rng, max_r), ri(rng, max_r)),
        _ => Axiom::RoleChain(ri(rng, max_r), ri(rng, max_r), ri(rng, max_r)),
    }
}

#[test]
fn criterion_06_metric_properties() {
    let mut rng = rng_from(606);
    for i in 0..10_000 {
        let a = random_axiom(&mut rng, 50, 20).to_string();
        let b = random_axiom(&mut rng, 50, 20).to_string();
        let cc = random_axiom(&mut rng, 50, 20).to_string();
        for dist in [char_distance, atomic_distance] {
            assert_eq!(dist(&a, &b), dist(&b, &a), "symmetry, triple {i}");
            assert!(
                dist(&a, &cc) <= dist(&a, &b) + dist(&b, &cc),
                "triangle, triple {i}: {a} | {b} | {cc}"
            );
        }
    }
    for i in 0..10_000 {
        let a = random_axiom(&mut rng, 50, 20).to_string();
        let b = random_axiom(&mut rng, 50, 20).to_string();
        assert!(atomic_distance(&a, &b) <= char_distance(&a, &b), "bound, pair {i}: {a} | {b}");
    }
    println!("criterion 6: 10000 triples symmetric+triangular, 10000 pairs atomic<=character");
}

#[test]
fn criterion_07_gradient_correctness() {
    let start = Instant::now();
    let h = 1e-5;
    let tolerance = 1e-4;
    let mut worst = 0.0f64;

    for seed in 0..20u64 {
        let mut rng = rng_from(derive_seed(7, seed));
        let steps = rng.gen_range(1..=4usize);
        let kb_w = rng.gen_range(2..=8usize);
        let sup_w = rng.gen_range(2..=8usize);
        let out_w = rng.gen_range(2..=8usize);
        let samples = rng.gen_range(1..=3usize);

        let mk = |rng: &mut rand_chacha::ChaCha8Rng, w: usize, steps: usize| -> Vec<Vec<f64>> {
            (0..steps).map(|_| (0..w).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
        };
        let xs: Vec<Vec<Vec<f64>>> = (0..samples).map(|_| mk(&mut rng, kb_w, steps)).collect();
        let ss: Vec<Vec<Vec<f64>>> = (0..samples).map(|_| mk(&mut rng, sup_w, steps)).collect();
        let ys: Vec<Vec<Vec<f64>>> = (0..samples).map(|_| mk(&mut rng, out_w, steps)).collect();
        fn rows(data: &[Vec<Vec<f64>>], i: usize) -> Vec<&[f64]> {
            data[i].iter().map(Vec::as_slice).collect()
        }

        // Flat, Deep, and both Piecewise halves.
        let shapes: Vec<(Vec<usize>, usize, bool)> = vec![
            (vec![kb_w, out_w], out_w, false),          // flat, X -> Y
            (vec![kb_w, sup_w, out_w], out_w, false),   // deep, X -> Y
            (vec![kb_w, sup_w], sup_w, true),           // piecewise part A, X -> S
            (vec![sup_w, out_w], out_w, false),         // piecewise part B (S inputs)
        ];
        for (dims, out_dim, vs_support) in shapes {
            let part_b = dims[0] == sup_w && dims.len() == 2 && out_dim == out_w && !vs_support;
            let mut stack: LstmStack<f64> =
                LstmStack::init(&dims, out_dim, &mut rng_from(derive_seed(seed, 17)));
            let batch: Vec<StackSample<'_, f64>> = (0..samples)
                .map(|i| StackSample {
                    inputs: if part_b { rows(&ss, i) } else { rows(&xs, i) },
                    targets: if vs_support { rows(&ss, i) } else { rows(&ys, i) },
                })
                .collect();
            let rel = gradient_check(&mut stack, &batch, h);
            worst = worst.max(rel);
            assert!(rel < tolerance, "seed {seed} dims {dims:?}: rel error {rel:.3e}");
        }
    }

    let elapsed = start.elapsed();
    println!("criterion 7: worst relative gradient error {worst:.3e} across 20 seeds x 4 stacks in {elapsed:.2?}");
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}, budget 60 s");
}

#[test]
fn criterion_08_generator_guarantees() {
    for k in 1..=5u32 {
        for seed in 0..100u64 {
            let cfg = GenConfig {
                iterations: k,
                random_axioms: 8,
                concept_headroom: 8,
                role_headroom: 3,
                seed: derive_seed(808, seed * 5 + k as u64),
            };
            let kb = generate(&cfg).unwrap();
            assert!(is_connected(&kb), "k={k} seed={seed}: disconnected");
            let trace = saturate(&kb);
            assert!(trace.len() >= k as usize, "k={k} seed={seed}: trace {}", trace.len());
            let mut rule_counts = [0usize; 7];
            for step in trace.steps() {
                for d in step {
                    rule_counts[d.rule.get() as usize] += 1;
                }
            }
            for (rule, &count) in rule_counts.iter().enumerate().skip(1) {
                assert!(count >= k as usize, "k={k} seed={seed}: rule {rule} fired {count} times");
            }
        }
    }
    println!("criterion 8: 500 generated KBs meet trace-length, rule-coverage and connectivity bounds");
}

const TRAINING_BASE_SEED: u64 = 20_260_810;

fn moderate_dataset() -> (Vec<PreparedSample>, DatasetTensors<f32>) {
    let kbs = generate_batch(&GenConfig::moderate(TRAINING_BASE_SEED), 20).unwrap();
    let prepared: Vec<PreparedSample> =
        kbs.iter().map(|kb| PreparedSample::prepare(kb).unwrap()).collect();
    let tensors = build_dataset(&prepared).unwrap();
    (prepared, tensors)
}

fn criterion_9_train_config() -> TrainConfig {
    TrainConfig { epochs: 2000, piecewise_epochs: 1000, learning_rate: 1e-4, folds: 10, seed: 3 }
}

#[test]
fn criterion_09_training_sanity() {
    let start = Instant::now();
    let (_, tensors) = moderate_dataset();
    let spec = ModelSpec::for_dims(Architecture::Flat, tensors.dims());
    let outcome = train(spec, &tensors, &criterion_9_train_config(), None).unwrap();
    let curve = &outcome.curves[0].values;
    let (first, last) = (curve[0], *curve.last().unwrap());
    let elapsed = start.elapsed();
    println!(
        "criterion 9: MSE {first:.5} -> {last:.5} (ratio {:.3}) over 2000 epochs in {elapsed:.2?}",
        last / first
    );
    assert!(last < 0.2 * first, "final {last} not below 0.2 x initial {first}");
    assert!(elapsed.as_secs() < 600, "took {elapsed:?}, budget 10 min");
}

#[test]
fn criterion_10_discrimination() {
    let (prepared, tensors) = moderate_dataset();
    let spec = ModelSpec::for_dims(Architecture::Flat, tensors.dims());
    let folds = cross_validate(spec, &tensors, &criterion_9_train_config()).unwrap();

    let mut fold_lstm = Vec::new();
    let mut fold_random = Vec::new();
    for fold in &folds {
        let mut lstm_dists: Vec<u64> = Vec::new();
        let mut random_dists: Vec<u64> = Vec::new();
        for &i in &fold.test_indices {
            let kb = prepared[i].kb();
            let mut answers: Vec<Axiom> = completion_set(&prepared[i].trace).into_iter().collect();
            answers.sort_by_cached_key(Axiom::to_string);

            let x = tensors.x_sample(i);
            let mut predictions: Vec<Axiom> =
                fold.model.predict(&x, kb.signature()).unwrap().into_iter().flatten().collect();
            predictions.sort_by_cached_key(Axiom::to_string);
            predictions.dedup();
            if predictions.is_empty() {
                continue;
            }

            let score = best_match_score(&predictions, &answers, Metric::Predicate);
            lstm_dists.extend(score.distances);

            // Same-size random answers against the same reasoner answers.
            let random = random_answers(
                kb.signature(),
                predictions.len(),
                derive_seed(1010, (fold.fold * 1000 + i) as u64),
            );
            let score = best_match_score(&random, &answers, Metric::Predicate);
            random_dists.extend(score.distances);
        }
        if !lstm_dists.is_empty() {
            fold_lstm.push(lstm_dists.iter().sum::<u64>() as f64 / lstm_dists.len() as f64);
            fold_random.push(random_dists.iter().sum::<u64>() as f64 / random_dists.len() as f64);
        }
    }

    assert!(!fold_lstm.is_empty(), "no fold produced any prediction");
    let lstm_mean = fold_lstm.iter().sum::<f64>() / fold_lstm.len() as f64;
    let random_mean = fold_random.iter().sum::<f64>() / fold_random.len() as f64;
    println!(
        "criterion 10: held-out predicate distance {lstm_mean:.3} vs same-size random {random_mean:.3} over {} folds",
        fold_lstm.len()
    );
    assert!(lstm_mean < random_mean);
}

#[test]
fn criterion_11_degradation() {
    // Small Deep setup: 12 KBs, 6 folds, fixed seeds throughout.
    let cfg = GenConfig { iterations: 2, random_axioms: 12, concept_headroom: 12, role_headroom: 4, seed: 9900 };
    let kbs = generate_batch(&cfg, 12).unwrap();
    let prepared: Vec<PreparedSample> =
        kbs.iter().map(|kb| PreparedSample::prepare(kb).unwrap()).collect();
    let tensors: DatasetTensors<f32> = build_dataset(&prepared).unwrap();

    let spec = ModelSpec::for_dims(Architecture::Deep, tensors.dims());
    let train_cfg =
        TrainConfig { epochs: 1200, piecewise_epochs: 600, learning_rate: 1e-4, folds: 6, seed: 31 };
    let folds = cross_validate(spec, &tensors, &train_cfg).unwrap();

    let report = run_sweep(&folds, &tensors, &prepared, &[0.0, 0.9], 1111).unwrap();
    let clean = report.row(0.0, Metric::Predicate, Baseline::Lstm).unwrap();
    let noisy = report.row(0.9, Metric::Predicate, Baseline::Lstm).unwrap();
    println!(
        "criterion 11: deep model predicate distance {:.3} at level 0.0 vs {:.3} at level 0.9 ({} / {} folds)",
        clean.mean_dist, noisy.mean_dist, clean.fold_count, noisy.fold_count
    );
    assert!(clean.fold_count > 0 && noisy.fold_count > 0);
    assert!(noisy.mean_dist > clean.mean_dist);
}
