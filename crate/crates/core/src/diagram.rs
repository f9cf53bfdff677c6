//! Diagrams: label-level rewrite rules between overlaps and their joins, in
//! the textual `<-SR,a- . -T-> ~~> -T-> . <-SR,a-` syntax.

use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Arrow {
    /// `-label->`
    Fwd(String),
    /// `<-label-`
    Back(String),
}

impl Arrow {
    pub fn label(&self) -> &str {
        match self {
            Arrow::Fwd(l) | Arrow::Back(l) => l,
        }
    }

    pub fn is_closure(&self) -> bool {
        self.label().ends_with(",+")
    }
}

impl fmt::Display for Arrow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arrow::Fwd(l) => write!(f, "-{l}->"),
            Arrow::Back(l) => write!(f, "<-{l}-"),
        }
    }
}

pub const ANSWER: &str = "ANSWER";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Diagram {
    /// The overlap: `<-SR,a- . -T->` or `<-ANSWER- . -T->`.
    pub lhs: Vec<Arrow>,
    /// The join, read from the SR end of the overlap to the T end.
    pub rhs: Vec<Arrow>,
}

impl Diagram {
    pub fn is_answer(&self) -> bool {
        matches!(self.lhs.first(), Some(Arrow::Back(l)) if l == ANSWER)
    }

    /// The transformation label of the overlap.
    pub fn transformation(&self) -> Option<&str> {
        self.lhs.iter().find_map(|a| match a {
            Arrow::Fwd(l) => Some(l.as_str()),
            _ => None,
        })
    }
}

fn join_arrows(v: &[Arrow]) -> String {
    v.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" . ")
}

impl fmt::Display for Diagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ~~>", join_arrows(&self.lhs))?;
        if !self.rhs.is_empty() {
            write!(f, " {}", join_arrows(&self.rhs))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct DiagramParseError {
    pub line: usize,
    pub message: String,
}

fn parse_arrow(tok: &str) -> Option<Arrow> {
    if let Some(rest) = tok.strip_prefix("<-") {
        let l = rest.strip_suffix('-')?;
        (!l.is_empty() && !l.contains(char::is_whitespace)).then(|| Arrow::Back(l.to_string()))
    } else if let Some(rest) = tok.strip_prefix('-') {
        let l = rest.strip_suffix("->")?;
        (!l.is_empty() && !l.contains(char::is_whitespace)).then(|| Arrow::Fwd(l.to_string()))
    } else {
        None
    }
}

fn parse_seq(s: &str, line: usize) -> Result<Vec<Arrow>, DiagramParseError> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(" . ")
        .map(|t| {
            parse_arrow(t.trim()).ok_or_else(|| DiagramParseError {
                line,
                message: format!("malformed arrow '{}'", t.trim()),
            })
        })
        .collect()
}

pub fn parse_diagram(text: &str, line: usize) -> Result<Diagram, DiagramParseError> {
    let Some((l, r)) = text.split_once("~~>") else {
        return Err(DiagramParseError {
            line,
            message: "missing ~~>".into(),
        });
    };
    let lhs = parse_seq(l, line)?;
    let rhs = parse_seq(r, line)?;
    let ok = match lhs.as_slice() {
        [Arrow::Back(_), Arrow::Fwd(_)] => true,
        _ => false,
    };
    if !ok {
        return Err(DiagramParseError {
            line,
            message: "the overlap must have the form <-A- . -T->".into(),
        });
    }
    if rhs.iter().any(|a| a.label() == ANSWER) && !matches!(lhs[0], Arrow::Back(ref a) if a == ANSWER)
    {
        return Err(DiagramParseError {
            line,
            message: "ANSWER on the join side of a forking diagram".into(),
        });
    }
    Ok(Diagram { lhs, rhs })
}

/// Parse a diagram file: one diagram per line, `--` comments and blank lines
/// ignored.
pub fn parse_diagrams(text: &str) -> Result<Vec<Diagram>, DiagramParseError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let t = raw.trim();
        if t.is_empty() || t.starts_with("--") {
            continue;
        }
        out.push(parse_diagram(t, i + 1)?);
    }
    Ok(out)
}

/// Canonical file rendering: sorted, de-duplicated, one per line.
pub fn render_diagrams(ds: &[Diagram]) -> String {
    let set: BTreeSet<String> = ds.iter().map(|d| d.to_string()).collect();
    let mut out = String::new();
    for d in set {
        out.push_str(&d);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_of_textual_diagrams() {
        let lines = [
            "<-SR,lbeta- . -gcT-> ~~> -gcT-> . <-SR,lbeta-",
            "<-SR,lll- . -gcT-> ~~> -gcT->",
            "<-ANSWER- . -gcT-> ~~> <-ANSWER-",
            "<-SR,top- . -top-> ~~>",
            "<-SR,a- . -gcT-> ~~> -gcT-> . <-SR,lll,+-",
        ];
        for l in lines {
            let d = parse_diagram(l, 1).unwrap();
            assert_eq!(d.to_string(), l);
        }
    }

    #[test]
    fn closure_marker() {
        let d = parse_diagram("<-SR,a- . -gcT-> ~~> -gcT-> . <-SR,lll,+-", 1).unwrap();
        assert!(d.rhs[1].is_closure());
        assert!(!d.rhs[0].is_closure());
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!(parse_diagram("<-SR,a- -gcT-> ~~>", 3).is_err());
        assert!(parse_diagram("<-SR,a- . -gcT->", 3).is_err());
        assert!(parse_diagram("<-SR,a- . -gcT-> ~~> <-ANSWER-", 3).is_err());
    }
}
