//! General EL+ axioms and normalization into the six normal forms.
//!
//! General inputs allow nested conjunction and existential restriction plus
//! equivalence. Constructs outside the operational fragment (top, bottom,
//! self-restriction) parse but are rejected by `normalize`, so ontology
//! loaders can count and skip them.

use super::{Axiom, Concept, KbError, Name, NameKind, Role, Signature};
use std::fmt;

/// A (possibly complex) concept expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConceptExpr {
    Named(Concept),
    Conj(Box<ConceptExpr>, Box<ConceptExpr>),
    Exists(Role, Box<ConceptExpr>),
    Top,
    Bottom,
    SelfRestriction(Role),
}

impl ConceptExpr {
    /// First construct outside the supported fragment, if any.
    fn unsupported(&self) -> Option<&'static str> {
        match self {
            ConceptExpr::Named(_) => None,
            ConceptExpr::Conj(a, b) => a.unsupported().or_else(|| b.unsupported()),
            ConceptExpr::Exists(_, c) => c.unsupported(),
            ConceptExpr::Top => Some("top"),
            ConceptExpr::Bottom => Some("bottom"),
            ConceptExpr::SelfRestriction(_) => Some("self-restriction"),
        }
    }
}

impl fmt::Display for ConceptExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConceptExpr::Named(c) => write!(f, "{c}"),
            ConceptExpr::Conj(a, b) => write!(f, "({a} & {b})"),
            ConceptExpr::Exists(r, c) => write!(f, "{r} . ({c})"),
            ConceptExpr::Top => write!(f, "top"),
            ConceptExpr::Bottom => write!(f, "bot"),
            ConceptExpr::SelfRestriction(r) => write!(f, "{r} . self"),
        }
    }
}

/// A general EL+ axiom before normalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GeneralAxiom {
    Sub(ConceptExpr, ConceptExpr),
    Equiv(ConceptExpr, ConceptExpr),
    RoleSub(Role, Role),
    RoleChain(Role, Role, Role),
}

impl fmt::Display for GeneralAxiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneralAxiom::Sub(a, b) => write!(f, "{a} < {b}"),
            GeneralAxiom::Equiv(a, b) => write!(f, "{a} = {b}"),
            GeneralAxiom::RoleSub(r, s) => write!(f, "{r} < {s}"),
            GeneralAxiom::RoleChain(r1, r2, s) => write!(f, "{r1} * {r2} < {s}"),
        }
    }
}

impl From<Axiom> for GeneralAxiom {
    fn from(a: Axiom) -> Self {
        let named = |c: Concept| ConceptExpr::Named(c);
        match a {
            Axiom::Sub(c, d) => GeneralAxiom::Sub(named(c), named(d)),
            Axiom::SubConj(c1, c2, d) => {
                GeneralAxiom::Sub(ConceptExpr::Conj(Box::new(named(c1)), Box::new(named(c2))), named(d))
            }
            Axiom::SubEx(c, r, d) => GeneralAxiom::Sub(named(c), ConceptExpr::Exists(r, Box::new(named(d)))),
            Axiom::ExSub(r, c, d) => GeneralAxiom::Sub(ConceptExpr::Exists(r, Box::new(named(c))), named(d)),
            Axiom::RoleSub(r, s) => GeneralAxiom::RoleSub(r, s),
            Axiom::RoleChain(r1, r2, s) => GeneralAxiom::RoleChain(r1, r2, s),
        }
    }
}

struct Normalizer {
    sig: Signature,
    out: Vec<Axiom>,
}

impl Normalizer {
    fn fresh(&mut self) -> Concept {
        let index = self.sig.max_concepts() + 1;
        self.sig.grow_concepts(index);
        Concept::new(index)
    }

    fn emit(&mut self, axiom: Axiom) {
        if !self.out.contains(&axiom) {
            self.out.push(axiom);
        }
    }

    /// Flattens nested conjunction into its leaves.
    fn conjuncts(expr: ConceptExpr, acc: &mut Vec<ConceptExpr>) {
        match expr {
            ConceptExpr::Conj(a, b) => {
                Self::conjuncts(*a, acc);
                Self::conjuncts(*b, acc);
            }
            other => acc.push(other),
        }
    }

    /// Names a complex expression in a left-hand (subsumee) position:
    /// emits `expr ⊑ fresh` and returns the fresh name.
    fn name_lhs(&mut self, expr: ConceptExpr) -> Concept {
        if let ConceptExpr::Named(c) = expr {
            return c;
        }
        let fresh = self.fresh();
        self.sub(expr, ConceptExpr::Named(fresh));
        fresh
    }

    /// Names a complex expression in a right-hand (subsumer) position:
    /// emits `fresh ⊑ expr` and returns the fresh name.
    fn name_rhs(&mut self, expr: ConceptExpr) -> Concept {
        if let ConceptExpr::Named(c) = expr {
            return c;
        }
        let fresh = self.fresh();
        self.sub(ConceptExpr::Named(fresh), expr);
        fresh
    }

    fn sub(&mut self, lhs: ConceptExpr, rhs: ConceptExpr) {
        match rhs {
            // L ⊑ A ⊓ B  ⇒  L ⊑ A, L ⊑ B
            ConceptExpr::Conj(a, b) => {
                self.sub(lhs.clone(), *a);
                self.sub(lhs, *b);
            }
            ConceptExpr::Exists(role, filler) => {
                let filler = self.name_rhs(*filler);
                match lhs {
                    ConceptExpr::Named(c) => self.emit(Axiom::SubEx(c, role, filler)),
                    complex => {
                        let named = self.name_lhs(complex);
                        self.emit(Axiom::SubEx(named, role, filler));
                    }
                }
            }
            ConceptExpr::Named(d) => match lhs {
                ConceptExpr::Named(c) => {
                    if c != d {
                        self.emit(Axiom::Sub(c, d));
                    }
                }
                ConceptExpr::Exists(role, filler) => {
                    let filler = self.name_lhs(*filler);
                    self.emit(Axiom::ExSub(role, filler, d));
                }
                conj @ ConceptExpr::Conj(..) => {
                    let mut parts = Vec::new();
                    Self::conjuncts(conj, &mut parts);
                    let mut named: Vec<Concept> = parts.into_iter().map(|p| self.name_lhs(p)).collect();
                    // Fold k-ary conjunction into binary SubConj steps.
                    while named.len() > 2 {
                        let b = named.pop().unwrap();
                        let a = named.pop().unwrap();
                        let fresh = self.fresh();
                        self.emit(Axiom::SubConj(a, b, fresh));
                        named.push(fresh);
                    }
                    match named.as_slice() {
                        [c] => {
                            if *c != d {
                                self.emit(Axiom::Sub(*c, d));
                            }
                        }
                        [c1, c2] => self.emit(Axiom::SubConj(*c1, *c2, d)),
                        _ => unreachable!("conjunction has at least one conjunct"),
                    }
                }
                ConceptExpr::Top | ConceptExpr::Bottom | ConceptExpr::SelfRestriction(_) => {
                    unreachable!("unsupported constructs rejected before normalization")
                }
            },
            ConceptExpr::Top | ConceptExpr::Bottom | ConceptExpr::SelfRestriction(_) => {
                unreachable!("unsupported constructs rejected before normalization")
            }
        }
    }
}

/// Rewrites general axioms into the six normal forms. Fresh concept names are
/// appended after the last used index, growing the returned signature, so
/// original indices are stable. Axioms using top, bottom or self-restriction
/// are rejected with the offending axiom identified.
pub fn normalize(axioms: &[GeneralAxiom], sig: Signature) -> Result<(Vec<Axiom>, Signature), KbError> {
    for axiom in axioms {
        let bad = match axiom {
            GeneralAxiom::Sub(a, b) | GeneralAxiom::Equiv(a, b) => a.unsupported().or_else(|| b.unsupported()),
            _ => None,
        };
        if let Some(construct) = bad {
            return Err(KbError::UnsupportedConstruct {
                axiom: axiom.to_string(),
                construct: construct.to_string(),
            });
        }
    }

    let mut n = Normalizer { sig, out: Vec::new() };
    for axiom in axioms {
        match axiom.clone() {
            GeneralAxiom::Sub(lhs, rhs) => n.sub(lhs, rhs),
            GeneralAxiom::Equiv(lhs, rhs) => {
                n.sub(lhs.clone(), rhs.clone());
                n.sub(rhs, lhs);
            }
            GeneralAxiom::RoleSub(r, s) => n.emit(Axiom::RoleSub(r, s)),
            GeneralAxiom::RoleChain(r1, r2, s) => n.emit(Axiom::RoleChain(r1, r2, s)),
        }
    }
    Ok((n.out, n.sig))
}

// --- general text grammar ------------------------------------------------
//
// line  := expr '<' expr | expr '=' expr | R '<' R | R '*' R '<' R
// expr  := term ('&' term)*
// term  := name | R '.' atom | '(' expr ')'
// atom  := name | 'self' | '(' expr ')'
// name  := C<digits> | R<digits> | 'top' | 'bot'

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Name(Name),
    Top,
    Bot,
    SelfKw,
    Less,
    Amp,
    Dot,
    Star,
    Equals,
    LParen,
    RParen,
}

fn tokenize(line_no: usize, line: &str) -> Result<Vec<Token>, KbError> {
    let mut tokens = Vec::new();
    for raw in line.replace('(', " ( ").replace(')', " ) ").split_whitespace() {
        let token = match raw {
            "<" => Token::Less,
            "&" => Token::Amp,
            "." => Token::Dot,
            "*" => Token::Star,
            "=" => Token::Equals,
            "(" => Token::LParen,
            ")" => Token::RParen,
            "top" => Token::Top,
            "bot" => Token::Bot,
            "self" => Token::SelfKw,
            name => {
                let parsed = if let Some(rest) = name.strip_prefix('C') {
                    rest.parse::<u32>().ok().map(|index| Name { kind: NameKind::Concept, index })
                } else if let Some(rest) = name.strip_prefix('R') {
                    rest.parse::<u32>().ok().map(|index| Name { kind: NameKind::Role, index })
                } else {
                    None
                };
                match parsed {
                    Some(name) if name.index >= 1 => Token::Name(name),
                    _ => {
                        return Err(KbError::Malformed {
                            line: line_no,
                            msg: format!("unrecognized token `{raw}`"),
                        })
                    }
                }
            }
        };
        tokens.push(token);
    }
    Ok(tokens)
}

struct ExprParser<'a> {
    tokens: &'a [Token],
    pos: usize,
    line: usize,
}

impl<'a> ExprParser<'a> {
    fn err(&self, msg: impl Into<String>) -> KbError {
        KbError::Malformed { line: self.line, msg: msg.into() }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<&Token> {
        let t = self.tokens.get(self.pos);
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<ConceptExpr, KbError> {
        let mut acc = self.term()?;
        while self.peek() == Some(&Token::Amp) {
            self.next();
            let rhs = self.term()?;
            acc = ConceptExpr::Conj(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<ConceptExpr, KbError> {
        match self.next().cloned() {
            Some(Token::Name(name)) => match name.kind {
                NameKind::Concept => Ok(ConceptExpr::Named(Concept::new(name.index))),
                NameKind::Role => {
                    let role = Role::new(name.index);
                    match self.next() {
                        Some(Token::Dot) => {}
                        _ => return Err(self.err(format!("role {role} needs `. <filler>`"))),
                    }
                    match self.next().cloned() {
                        Some(Token::Name(n)) if n.kind == NameKind::Concept => {
                            Ok(ConceptExpr::Exists(role, Box::new(ConceptExpr::Named(Concept::new(n.index)))))
                        }
                        Some(Token::SelfKw) => Ok(ConceptExpr::SelfRestriction(role)),
                        Some(Token::Top) => Ok(ConceptExpr::Exists(role, Box::new(ConceptExpr::Top))),
                        Some(Token::Bot) => Ok(ConceptExpr::Exists(role, Box::new(ConceptExpr::Bottom))),
                        Some(Token::LParen) => {
                            let inner = self.expr()?;
                            match self.next() {
                                Some(Token::RParen) => Ok(ConceptExpr::Exists(role, Box::new(inner))),
                                _ => Err(self.err("missing `)`")),
                            }
                        }
                        _ => Err(self.err(format!("bad filler after {role} ."))),
                    }
                }
            },
            Some(Token::Top) => Ok(ConceptExpr::Top),
            Some(Token::Bot) => Ok(ConceptExpr::Bottom),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                match self.next() {
                    Some(Token::RParen) => Ok(inner),
                    _ => Err(self.err("missing `)`")),
                }
            }
            other => Err(self.err(format!("unexpected token {other:?}"))),
        }
    }
}

/// Parses one general-axiom line (comment-stripped, non-empty).
pub fn parse_general_line(line_no: usize, line: &str) -> Result<GeneralAxiom, KbError> {
    let tokens = tokenize(line_no, line)?;

    // Role forms first: `R1 < R2` and `R1 * R2 < R3`.
    match tokens.as_slice() {
        [Token::Name(a), Token::Less, Token::Name(b)]
            if a.kind == NameKind::Role && b.kind == NameKind::Role =>
        {
            return Ok(GeneralAxiom::RoleSub(Role::new(a.index), Role::new(b.index)));
        }
        [Token::Name(a), Token::Star, Token::Name(b), Token::Less, Token::Name(c)] => {
            if a.kind == NameKind::Role && b.kind == NameKind::Role && c.kind == NameKind::Role {
                return Ok(GeneralAxiom::RoleChain(Role::new(a.index), Role::new(b.index), Role::new(c.index)));
            }
            return Err(KbError::Malformed { line: line_no, msg: "role chain needs three roles".into() });
        }
        _ => {}
    }

    let split = tokens
        .iter()
        .enumerate()
        .find(|(_, t)| matches!(t, Token::Less | Token::Equals))
        .map(|(i, t)| (i, t.clone()));
    let (split_at, op) = match split {
        Some(pair) => pair,
        None => return Err(KbError::Malformed { line: line_no, msg: "missing `<` or `=`".into() }),
    };

    let mut lhs_parser = ExprParser { tokens: &tokens[..split_at], pos: 0, line: line_no };
    let lhs = lhs_parser.expr()?;
    if lhs_parser.pos != split_at {
        return Err(lhs_parser.err("trailing tokens before `<`"));
    }
    let rhs_tokens = &tokens[split_at + 1..];
    let mut rhs_parser = ExprParser { tokens: rhs_tokens, pos: 0, line: line_no };
    let rhs = rhs_parser.expr()?;
    if rhs_parser.pos != rhs_tokens.len() {
        return Err(rhs_parser.err("trailing tokens after axiom"));
    }

    Ok(match op {
        Token::Less => GeneralAxiom::Sub(lhs, rhs),
        Token::Equals => GeneralAxiom::Equiv(lhs, rhs),
        _ => unreachable!(),
    })
}

/// Parses a whole general-format file: optional `sig` header, one axiom per
/// line, `#` comments. Without a header the signature is inferred from the
/// largest indices used.
pub fn parse_general_kb(text: &str) -> Result<(Vec<GeneralAxiom>, Signature), KbError> {
    let mut axioms = Vec::new();
    let mut sig: Option<Signature> = None;
    let mut max_concept = 0u32;
    let mut max_role = 0u32;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if sig.is_none() && axioms.is_empty() && line.starts_with("sig ") {
            sig = Some(super::parse::parse_signature_line(line_no, line)?);
            continue;
        }
        let axiom = parse_general_line(line_no, line)?;
        track_names(&axiom, &mut max_concept, &mut max_role);
        axioms.push(axiom);
    }

    if axioms.is_empty() {
        return Err(KbError::Malformed { line: 0, msg: "no parseable axioms".into() });
    }
    let sig = match sig {
        Some(s) => s,
        None => Signature::new(max_concept.max(1), max_role.max(1))?,
    };
    Ok((axioms, sig))
}

fn track_names(axiom: &GeneralAxiom, max_concept: &mut u32, max_role: &mut u32) {
    fn walk(expr: &ConceptExpr, mc: &mut u32, mr: &mut u32) {
        match expr {
            ConceptExpr::Named(c) => *mc = (*mc).max(c.index()),
            ConceptExpr::Conj(a, b) => {
                walk(a, mc, mr);
                walk(b, mc, mr);
            }
            ConceptExpr::Exists(r, f) => {
                *mr = (*mr).max(r.index());
                walk(f, mc, mr);
            }
            ConceptExpr::SelfRestriction(r) => *mr = (*mr).max(r.index()),
            ConceptExpr::Top | ConceptExpr::Bottom => {}
        }
    }
    match axiom {
        GeneralAxiom::Sub(a, b) | GeneralAxiom::Equiv(a, b) => {
            walk(a, max_concept, max_role);
            walk(b, max_concept, max_role);
        }
        GeneralAxiom::RoleSub(r, s) => {
            *max_role = (*max_role).max(r.index()).max(s.index());
        }
        GeneralAxiom::RoleChain(r1, r2, s) => {
            *max_role = (*max_role).max(r1.index()).max(r2.index()).max(s.index());
        }
    }
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

    fn named(i: u32) -> ConceptExpr {
        ConceptExpr::Named(c(i))
    }

    #[test]
    fn equivalence_splits_into_two_subs() {
        let sig = Signature::new(2, 1).unwrap();
        let (out, sig2) = normalize(&[GeneralAxiom::Equiv(named(1), named(2))], sig).unwrap();
        assert_eq!(out, vec![Axiom::Sub(c(1), c(2)), Axiom::Sub(c(2), c(1))]);
        assert_eq!(sig2, sig);
    }

    #[test]
    fn nested_existential_filler_gets_fresh_name() {
        // C1 < R1 . (C2 & C3)  =>  C1 < R1 . C4, C4 < C2, C4 < C3
        let sig = Signature::new(3, 1).unwrap();
        let input = GeneralAxiom::Sub(
            named(1),
            ConceptExpr::Exists(r(1), Box::new(ConceptExpr::Conj(Box::new(named(2)), Box::new(named(3))))),
        );
        let (out, sig2) = normalize(&[input], sig).unwrap();
        assert_eq!(
            out,
            vec![Axiom::Sub(c(4), c(2)), Axiom::Sub(c(4), c(3)), Axiom::SubEx(c(1), r(1), c(4))]
        );
        assert_eq!(sig2.max_concepts(), 4);
    }

    #[test]
    fn already_normal_axioms_pass_through() {
        let sig = Signature::new(4, 2).unwrap();
        let inputs: Vec<GeneralAxiom> = vec![
            Axiom::Sub(c(1), c(2)).into(),
            Axiom::SubConj(c(1), c(2), c(3)).into(),
            Axiom::SubEx(c(1), r(1), c(2)).into(),
            Axiom::ExSub(r(1), c(2), c(3)).into(),
            Axiom::RoleSub(r(1), r(2)).into(),
            Axiom::RoleChain(r(1), r(2), r(2)).into(),
        ];
        let (out, sig2) = normalize(&inputs, sig).unwrap();
        assert_eq!(out.len(), 6);
        assert_eq!(sig2, sig);
    }

    #[test]
    fn normalize_is_idempotent() {
        let sig = Signature::new(3, 1).unwrap();
        let input = GeneralAxiom::Sub(
            named(1),
            ConceptExpr::Exists(r(1), Box::new(ConceptExpr::Conj(Box::new(named(2)), Box::new(named(3))))),
        );
        let (once, sig_once) = normalize(&[input], sig).unwrap();
        let as_general: Vec<GeneralAxiom> = once.iter().copied().map(GeneralAxiom::from).collect();
        let (twice, sig_twice) = normalize(&as_general, sig_once).unwrap();
        assert_eq!(once, twice);
        assert_eq!(sig_once, sig_twice);
    }

    #[test]
    fn self_restriction_is_rejected_with_axiom_named() {
        let sig = Signature::new(2, 1).unwrap();
        let input = GeneralAxiom::Sub(ConceptExpr::Top, ConceptExpr::SelfRestriction(r(1)));
        let err = normalize(&[input], sig).unwrap_err();
        match err {
            KbError::UnsupportedConstruct { construct, .. } => assert_eq!(construct, "top"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parses_general_lines() {
        let a = parse_general_line(1, "C1 < R1 . ( C2 & C3 )").unwrap();
        assert_eq!(
            a,
            GeneralAxiom::Sub(
                named(1),
                ConceptExpr::Exists(r(1), Box::new(ConceptExpr::Conj(Box::new(named(2)), Box::new(named(3)))))
            )
        );
        let b = parse_general_line(1, "C1 = C2").unwrap();
        assert_eq!(b, GeneralAxiom::Equiv(named(1), named(2)));
        let c_ = parse_general_line(1, "top < R1 . self").unwrap();
        assert_eq!(c_, GeneralAxiom::Sub(ConceptExpr::Top, ConceptExpr::SelfRestriction(r(1))));
        let d = parse_general_line(1, "R1 * R2 < R3").unwrap();
        assert_eq!(d, GeneralAxiom::RoleChain(r(1), r(2), r(3)));
    }

    #[test]
    fn general_kb_infers_signature_without_header() {
        let (axioms, sig) = parse_general_kb("C1 < C5\nC2 < R3 . C1\n").unwrap();
        assert_eq!(axioms.len(), 2);
        assert_eq!(sig.max_concepts(), 5);
        assert_eq!(sig.max_roles(), 3);
    }
}
