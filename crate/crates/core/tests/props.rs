//! Property tests: grammar round-trips, encoding round-trips and ranges,
//! metric axioms, and decode rounding tolerance.

use elstm_core::encode::{decode_axiom, encode_axiom, Encoded4};
use elstm_core::eval::{atomic_distance, char_distance, predicate_distance};
use elstm_core::kb::{parse_axiom, parse_kb, render_kb, Axiom, Concept, KnowledgeBase, Role, Signature};
use proptest::prelude::*;

fn concept(max_c: u32) -> impl Strategy<Value = Concept> {
    (1..=max_c).prop_map(Concept::new)
}

fn role(max_r: u32) -> impl Strategy<Value = Role> {
    (1..=max_r).prop_map(Role::new)
}

fn axiom(max_c: u32, max_r: u32) -> impl Strategy<Value = Axiom> {
    prop_oneof![
        (concept(max_c), concept(max_c)).prop_map(|(a, b)| Axiom::Sub(a, b)),
        (concept(max_c), concept(max_c), concept(max_c)).prop_map(|(a, b, c)| Axiom::SubConj(a, b, c)),
        (concept(max_c), role(max_r), concept(max_c)).prop_map(|(a, r, b)| Axiom::SubEx(a, r, b)),
        (role(max_r), concept(max_c), concept(max_c)).prop_map(|(r, a, b)| Axiom::ExSub(r, a, b)),
        (role(max_r), role(max_r)).prop_map(|(r, s)| Axiom::RoleSub(r, s)),
        (role(max_r), role(max_r), role(max_r)).prop_map(|(a, b, c)| Axiom::RoleChain(a, b, c)),
    ]
}

fn small_kb() -> impl Strategy<Value = KnowledgeBase> {
    proptest::collection::vec(axiom(20, 5), 1..25).prop_map(|axioms| {
        let sig = Signature::new(20, 5).unwrap();
        let mut kb = KnowledgeBase::empty(sig);
        for a in axioms {
            let _ = kb.push(a); // skip duplicates
        }
        kb
    })
}

proptest! {
    #[test]
    fn parse_then_render_is_identity_on_axioms(a in axiom(20, 5)) {
        let rendered = a.to_string();
        prop_assert_eq!(parse_axiom(&rendered).unwrap(), a);
    }

    #[test]
    fn render_then_parse_is_identity_on_kbs(kb in small_kb()) {
        let text = render_kb(&kb);
        let (parsed, warnings) = parse_kb(&text).unwrap();
        prop_assert!(warnings.is_empty());
        prop_assert_eq!(parsed.axioms(), kb.axioms());
        prop_assert_eq!(parsed.signature(), kb.signature());
    }

    #[test]
    fn encode_decode_round_trip(a in axiom(50, 20)) {
        let sig = Signature::new(50, 20).unwrap();
        let encoded = encode_axiom::<f64>(&a, sig).unwrap();
        prop_assert_eq!(decode_axiom(&encoded, sig), Some(a));
        // f32 carries enough precision for these signatures too.
        let encoded32 = encode_axiom::<f32>(&a, sig).unwrap();
        prop_assert_eq!(decode_axiom(&encoded32, sig), Some(a));
    }

    #[test]
    fn encoding_ranges(a in axiom(17, 7)) {
        let sig = Signature::new(17, 7).unwrap();
        let Encoded4(v) = encode_axiom::<f64>(&a, sig).unwrap();
        for slot in v {
            prop_assert!((-1.0..=1.0).contains(&slot));
            // Concepts strictly positive, roles strictly negative, padding 0.
            prop_assert!(slot == 0.0 || slot.abs() > 1e-9);
        }
    }

    #[test]
    fn decode_survives_sub_half_step_noise(a in axiom(12, 6), jitter in -0.4f64..0.4) {
        let sig = Signature::new(12, 6).unwrap();
        let Encoded4(v) = encode_axiom::<f64>(&a, sig).unwrap();
        // Within half a quantization step of every slot kind, rounding
        // recovers the original statement.
        let eps = jitter / f64::from(sig.max_concepts().max(sig.max_roles()));
        let noisy = Encoded4([v[0] + eps, v[1] + eps, v[2] + eps, v[3] + eps]);
        prop_assert_eq!(decode_axiom(&noisy, sig), Some(a));
    }

    #[test]
    fn char_and_atomic_metric_axioms(
        a in axiom(60, 20),
        b in axiom(60, 20),
        c in axiom(60, 20),
    ) {
        let (sa, sb, sc) = (a.to_string(), b.to_string(), c.to_string());
        for dist in [char_distance, atomic_distance] {
            let dab = dist(&sa, &sb);
            let dba = dist(&sb, &sa);
            prop_assert_eq!(dab, dba);
            prop_assert_eq!(dist(&sa, &sa), 0);
            prop_assert!((dab == 0) == (sa == sb));
        }
        // Triangle inequality is universal for the character metric; the
        // capped atomic metric is triangle-checked on the fixed acceptance
        // sample instead.
        prop_assert!(char_distance(&sa, &sc) <= char_distance(&sa, &sb) + char_distance(&sb, &sc));
    }

    #[test]
    fn atomic_is_bounded_by_character(a in axiom(60, 20), b in axiom(60, 20)) {
        let (sa, sb) = (a.to_string(), b.to_string());
        prop_assert!(atomic_distance(&sa, &sb) <= char_distance(&sa, &sb));
    }

    #[test]
    fn predicate_distance_axioms(a in axiom(30, 9), b in axiom(30, 9)) {
        prop_assert_eq!(predicate_distance(&a, &b), predicate_distance(&b, &a));
        prop_assert_eq!(predicate_distance(&a, &b) == 0, a == b);
    }
}

#[test]
fn exhaustive_round_trip_at_bound_signature() {
    // Every axiom form, every index combination at signature (50, 20).
    let sig = Signature::new(50, 20).unwrap();
    let mut checked = 0u64;
    let concepts: Vec<Concept> = (1..=50).map(Concept::new).collect();
    let roles: Vec<Role> = (1..=20).map(Role::new).collect();

    let mut check = |a: Axiom| {
        let e = encode_axiom::<f64>(&a, sig).unwrap();
        assert_eq!(decode_axiom(&e, sig), Some(a), "{a}");
        checked += 1;
    };

    for &a in &concepts {
        for &b in &concepts {
            check(Axiom::Sub(a, b));
            for &c in &concepts {
                check(Axiom::SubConj(a, b, c));
            }
            for &r in &roles {
                check(Axiom::SubEx(a, r, b));
                check(Axiom::ExSub(r, a, b));
            }
        }
    }
    for &r in &roles {
        for &s in &roles {
            check(Axiom::RoleSub(r, s));
            for &t in &roles {
                check(Axiom::RoleChain(r, s, t));
            }
        }
    }
    assert_eq!(checked, 50 * 50 + 50u64.pow(3) + 2 * 50 * 50 * 20 + 20 * 20 + 20u64.pow(3));
}
