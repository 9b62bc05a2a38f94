//! The three distance functions: Character Levenshtein on canonical
//! statement strings, Atomic Levenshtein (multi-digit name numbers replaced
//! by fresh single symbols), and Predicate Distance on 4-tuple slots.

use crate::kb::{Axiom, KbError};

/// Unit-cost Levenshtein distance over characters.
pub fn char_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Replaces every distinct multi-digit number token, consistently across
/// both strings, with a unique symbol occurring in neither, then applies
/// [`char_distance`]. Single-digit numbers are left alone. Two decoded
/// statements carry at most eight distinct numbers, so the symbol pool
/// never runs dry.
///
/// The result is capped by the raw character distance: the substitution
/// exists to discount digit-length artifacts and must never add cost
/// (without the cap, digits of a two-digit number can cross-match several
/// shorter tokens in the raw metric and the substituted distance would
/// exceed it on rare pairs).
pub fn atomic_distance(a: &str, b: &str) -> usize {
    let raw = char_distance(a, b);
    let mut numbers: Vec<String> = Vec::new();
    for s in [a, b] {
        for token in number_tokens(s) {
            if token.len() >= 2 && !numbers.contains(&token) {
                numbers.push(token);
            }
        }
    }
    if numbers.is_empty() {
        return raw;
    }

    let pool = "αβγδεζηθικλμνξοπρστυφχψω";
    let mut fresh = pool.chars().filter(|c| !a.contains(*c) && !b.contains(*c));
    let mapping: Vec<(String, char)> = numbers
        .into_iter()
        .map(|n| {
            let symbol = fresh.next().expect("symbol pool exhausted");
            (n, symbol)
        })
        .collect();

    char_distance(&substitute(a, &mapping), &substitute(b, &mapping)).min(raw)
}

fn number_tokens(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in s.chars() {
        if c.is_ascii_digit() {
            cur.push(c);
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn substitute(s: &str, mapping: &[(String, char)]) -> String {
    let mut out = String::with_capacity(s.len());
    let mut cur = String::new();
    let flush = |cur: &mut String, out: &mut String| {
        if cur.is_empty() {
            return;
        }
        match mapping.iter().find(|(n, _)| n == cur) {
            Some((_, symbol)) => out.push(*symbol),
            None => out.push_str(cur),
        }
        cur.clear();
    };
    for c in s.chars() {
        if c.is_ascii_digit() {
            cur.push(c);
        } else {
            flush(&mut cur, &mut out);
            out.push(c);
        }
    }
    flush(&mut cur, &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Pad,
    C(u32),
    R(u32),
}

/// 4-tuple view of a statement, mirroring the numeric encoding layout.
fn slots(a: &Axiom) -> [Slot; 4] {
    use Slot::*;
    match *a {
        Axiom::Sub(c, d) => [Pad, C(c.index()), C(d.index()), Pad],
        Axiom::SubConj(c1, c2, d) => [C(c1.index()), C(c2.index()), C(d.index()), Pad],
        Axiom::SubEx(c, r, d) => [Pad, C(c.index()), R(r.index()), C(d.index())],
        Axiom::ExSub(r, c, d) => [R(r.index()), C(c.index()), C(d.index()), Pad],
        Axiom::RoleSub(r, s) => [Pad, R(r.index()), R(s.index()), Pad],
        Axiom::RoleChain(r1, r2, s) => [R(r1.index()), R(r2.index()), R(s.index()), Pad],
    }
}

fn slot_distance(x: Slot, y: Slot) -> u64 {
    use Slot::*;
    match (x, y) {
        (Pad, Pad) => 0,
        // Padding counts as index 0 of the other slot's kind.
        (Pad, C(i)) | (C(i), Pad) | (Pad, R(i)) | (R(i), Pad) => u64::from(i),
        (C(i), C(j)) | (R(i), R(j)) => u64::from(i.abs_diff(j)),
        (C(i), R(j)) | (R(i), C(j)) => u64::from(i) + u64::from(j),
    }
}

/// Sum over the 4 slot positions: 0 on a match, index difference on a
/// same-kind miss, index sum on a kind confusion.
pub fn predicate_distance(a: &Axiom, b: &Axiom) -> u64 {
    let sa = slots(a);
    let sb = slots(b);
    (0..4).map(|i| slot_distance(sa[i], sb[i])).sum()
}

/// Predicate distance on rendered statements; undecodable input is an error.
pub fn predicate_distance_str(a: &str, b: &str) -> Result<u64, KbError> {
    let pa = crate::kb::parse_axiom(a)?;
    let pb = crate::kb::parse_axiom(b)?;
    Ok(predicate_distance(&pa, &pb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{Concept, Role};

    fn c(i: u32) -> Concept {
        Concept::new(i)
    }

    fn r(i: u32) -> Role {
        Role::new(i)
    }

    #[test]
    fn char_distance_examples() {
        assert_eq!(char_distance("C1 < C2", "C1 < C2"), 0);
        assert_eq!(char_distance("C1 < C2", "C1 < C3"), 1);
        assert_eq!(char_distance("C15 < C3", "C51 < C3"), 2);
    }

    #[test]
    fn atomic_distance_examples() {
        assert_eq!(atomic_distance("C15 < C3", "C15 < C4"), 1);
        assert_eq!(atomic_distance("C15 < C3", "C51 < C3"), 1);
        assert_eq!(atomic_distance("C15 < C3", "C15 < C3"), 0);
    }

    #[test]
    fn atomic_never_exceeds_character() {
        let pairs = [
            ("C15 < C3", "C51 < C3"),
            ("C12 & C34 < C9", "C34 & C12 < C9"),
            ("C1 < R10 . C20", "C1 < R20 . C10"),
            ("R11 * R12 < R13", "R11 < R13"),
        ];
        for (a, b) in pairs {
            assert!(atomic_distance(a, b) <= char_distance(a, b), "{a} vs {b}");
        }
    }

    #[test]
    fn predicate_distance_pinned_examples() {
        // Guessing C1 for an answer of C2, all other slots equal.
        assert_eq!(predicate_distance(&Axiom::Sub(c(1), c(3)), &Axiom::Sub(c(2), c(3))), 1);
        // Guessing R2 where the answer has C15: kind confusion costs 2+15.
        assert_eq!(
            predicate_distance(&Axiom::ExSub(r(2), c(2), c(4)), &Axiom::SubConj(c(15), c(2), c(4))),
            17
        );
        // Identical statements are perfect hits.
        let a = Axiom::SubEx(c(3), r(1), c(2));
        assert_eq!(predicate_distance(&a, &a), 0);
    }

    #[test]
    fn predicate_distance_is_zero_iff_identical_and_symmetric() {
        let xs = [
            Axiom::Sub(c(1), c(2)),
            Axiom::SubConj(c(1), c(2), c(3)),
            Axiom::SubEx(c(1), r(1), c(2)),
            Axiom::ExSub(r(1), c(1), c(2)),
            Axiom::RoleSub(r(1), r(2)),
            Axiom::RoleChain(r(1), r(2), r(1)),
        ];
        for a in &xs {
            for b in &xs {
                let d = predicate_distance(a, b);
                assert_eq!(d, predicate_distance(b, a));
                assert_eq!(d == 0, a == b, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn kind_confusion_costs_more_than_index_miss() {
        for i in 1..=20u32 {
            for j in 1..=20u32 {
                let miss = u64::from(i.abs_diff(j));
                let confusion = u64::from(i) + u64::from(j);
                assert!(confusion > miss);
            }
        }
    }

    #[test]
    fn string_route_matches_axiom_route() {
        let a = Axiom::SubEx(c(3), r(1), c(2));
        let b = Axiom::Sub(c(3), c(2));
        assert_eq!(
            predicate_distance_str("C3 < R1 . C2", "C3 < C2").unwrap(),
            predicate_distance(&a, &b)
        );
        assert!(predicate_distance_str("garbage", "C1 < C2").is_err());
    }
}
