//! Canonical KB text format.
//!
//! ```text
//! sig <maxConcepts> <maxRoles>
//! C2 < C1
//! C1 & C2 < C3
//! C4 < R1 . C2
//! R1 . C2 < C4
//! R1 < R2
//! R1 * R2 < R3
//! # comment
//! ```
//!
//! UTF-8, LF line endings, `#` starts a comment anywhere on a line.

use super::{Axiom, Concept, KbError, KnowledgeBase, Name, NameKind, Role, Signature};
use std::fmt;

/// Non-fatal findings while parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseWarning {
    DuplicateAxiom { line: usize, axiom: Axiom },
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseWarning::DuplicateAxiom { line, axiom } => {
                write!(f, "line {line}: duplicate axiom {axiom} (dropped)")
            }
        }
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

fn parse_name(token: &str, line: usize) -> Result<Name, KbError> {
    let malformed = || KbError::Malformed { line, msg: format!("expected a name, got `{token}`") };
    let (kind, digits) = if let Some(rest) = token.strip_prefix('C') {
        (NameKind::Concept, rest)
    } else if let Some(rest) = token.strip_prefix('R') {
        (NameKind::Role, rest)
    } else {
        return Err(malformed());
    };
    let index: u32 = digits.parse().map_err(|_| malformed())?;
    if index == 0 {
        return Err(KbError::Malformed { line, msg: format!("name index must be >= 1 in `{token}`") });
    }
    Ok(Name { kind, index })
}

fn expect_concept(name: Name, line: usize) -> Result<Concept, KbError> {
    match name.kind {
        NameKind::Concept => Ok(Concept::new(name.index)),
        NameKind::Role => Err(KbError::Malformed { line, msg: format!("expected a concept, got {name}") }),
    }
}

fn expect_role(name: Name, line: usize) -> Result<Role, KbError> {
    match name.kind {
        NameKind::Role => Ok(Role::new(name.index)),
        NameKind::Concept => Err(KbError::Malformed { line, msg: format!("expected a role, got {name}") }),
    }
}

/// Parses one canonical axiom line (already comment-stripped, non-empty).
pub(crate) fn parse_axiom_line(line_no: usize, line: &str) -> Result<Axiom, KbError> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    let name = |i: usize| parse_name(tokens[i], line_no);
    let axiom = match tokens.as_slice() {
        // C2 < C1  |  R1 < R2
        [_, "<", _] => {
            let lhs = name(0)?;
            let rhs = name(2)?;
            match (lhs.kind, rhs.kind) {
                (NameKind::Concept, NameKind::Concept) => {
                    Axiom::Sub(expect_concept(lhs, line_no)?, expect_concept(rhs, line_no)?)
                }
                (NameKind::Role, NameKind::Role) => {
                    Axiom::RoleSub(expect_role(lhs, line_no)?, expect_role(rhs, line_no)?)
                }
                _ => {
                    return Err(KbError::Malformed {
                        line: line_no,
                        msg: "subsumption must relate two concepts or two roles".into(),
                    })
                }
            }
        }
        // C1 & C2 < C3
        [_, "&", _, "<", _] => Axiom::SubConj(
            expect_concept(name(0)?, line_no)?,
            expect_concept(name(2)?, line_no)?,
            expect_concept(name(4)?, line_no)?,
        ),
        // C4 < R1 . C2
        [_, "<", _, ".", _] => Axiom::SubEx(
            expect_concept(name(0)?, line_no)?,
            expect_role(name(2)?, line_no)?,
            expect_concept(name(4)?, line_no)?,
        ),
        // R1 . C2 < C4
        [_, ".", _, "<", _] => Axiom::ExSub(
            expect_role(name(0)?, line_no)?,
            expect_concept(name(2)?, line_no)?,
            expect_concept(name(4)?, line_no)?,
        ),
        // R1 * R2 < R3
        [_, "*", _, "<", _] => Axiom::RoleChain(
            expect_role(name(0)?, line_no)?,
            expect_role(name(2)?, line_no)?,
            expect_role(name(4)?, line_no)?,
        ),
        _ => {
            return Err(KbError::Malformed { line: line_no, msg: format!("unrecognized axiom `{line}`") })
        }
    };
    Ok(axiom)
}

/// Parses a single canonical statement, e.g. `C4 < R1 . C2`.
pub fn parse_axiom(text: &str) -> Result<Axiom, KbError> {
    parse_axiom_line(1, strip_comment(text).trim())
}

pub(crate) fn parse_signature_line(line_no: usize, line: &str) -> Result<Signature, KbError> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    match tokens.as_slice() {
        ["sig", mc, mr] => {
            let malformed =
                |tok: &str| KbError::Malformed { line: line_no, msg: format!("bad signature bound `{tok}`") };
            let mc: u32 = mc.parse().map_err(|_| malformed(mc))?;
            let mr: u32 = mr.parse().map_err(|_| malformed(mr))?;
            Signature::new(mc, mr)
        }
        _ => Err(KbError::Malformed { line: line_no, msg: "expected `sig <maxConcepts> <maxRoles>`".into() }),
    }
}

/// Parses the canonical KB format. Axioms keep file order; duplicates are
/// dropped with a warning; names outside the signature are errors.
pub fn parse_kb(text: &str) -> Result<(KnowledgeBase, Vec<ParseWarning>), KbError> {
    let mut kb: Option<KnowledgeBase> = None;
    let mut warnings = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        match kb.as_mut() {
            None => {
                kb = Some(KnowledgeBase::empty(parse_signature_line(line_no, line)?));
            }
            Some(kb) => {
                let axiom = parse_axiom_line(line_no, line)?;
                for name in axiom.names() {
                    if !kb.signature().contains(name) {
                        let bound = match name.kind {
                            NameKind::Concept => kb.signature().max_concepts(),
                            NameKind::Role => kb.signature().max_roles(),
                        };
                        return Err(KbError::NameOutOfBounds { line: line_no, name, bound });
                    }
                }
                if kb.contains(&axiom) {
                    warnings.push(ParseWarning::DuplicateAxiom { line: line_no, axiom });
                } else {
                    kb.push(axiom).expect("bounds and duplicates already checked");
                }
            }
        }
    }

    match kb {
        Some(kb) => Ok((kb, warnings)),
        None => Err(KbError::Malformed { line: 0, msg: "empty input: missing signature line".into() }),
    }
}

/// Renders a KB in the canonical format; `parse_kb` of the output reproduces
/// the KB (modulo labels, which have no file syntax).
pub fn render_kb(kb: &KnowledgeBase) -> String {
    let mut out = format!("sig {} {}\n", kb.signature().max_concepts(), kb.signature().max_roles());
    for axiom in kb.axioms() {
        out.push_str(&axiom.to_string());
        out.push('\n');
    }
    out
}
