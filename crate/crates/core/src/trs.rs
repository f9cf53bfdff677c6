//! First-order term rewrite systems, the diagram encoding and TPDB text.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::diagram::{Arrow, Diagram, ANSWER};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(x: &str) -> Term {
        Term::Var(x.to_string())
    }

    pub fn app(f: &str, args: Vec<Term>) -> Term {
        Term::App(f.to_string(), args)
    }

    pub fn constant(f: &str) -> Term {
        Term::App(f.to_string(), vec![])
    }

    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(x) => {
                out.insert(x.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| a.vars(out)),
        }
    }

    pub fn var_set(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        self.vars(&mut s);
        s
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
        }
    }

    pub fn subst(&self, s: &BTreeMap<String, Term>) -> Term {
        match self {
            Term::Var(x) => s.get(x).cloned().unwrap_or_else(|| self.clone()),
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| a.subst(s)).collect()),
        }
    }

    /// Positions in pre-order; the root is the empty position.
    pub fn positions(&self) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        if let Term::App(_, args) = self {
            for (i, a) in args.iter().enumerate() {
                for mut p in a.positions() {
                    p.insert(0, i);
                    out.push(p);
                }
            }
        }
        out
    }

    pub fn at(&self, p: &[usize]) -> &Term {
        match (self, p.split_first()) {
            (_, None) => self,
            (Term::App(_, args), Some((i, rest))) => args[*i].at(rest),
            (Term::Var(_), Some(_)) => panic!("position below a variable"),
        }
    }

    pub fn replace(&self, p: &[usize], t: Term) -> Term {
        match (self, p.split_first()) {
            (_, None) => t,
            (Term::App(f, args), Some((i, rest))) => {
                let mut args = args.clone();
                args[*i] = args[*i].replace(rest, t);
                Term::App(f.clone(), args)
            }
            (Term::Var(_), Some(_)) => panic!("position below a variable"),
        }
    }

    /// Match `self` as a pattern against `t`, extending `s`.
    pub fn matches(&self, t: &Term, s: &mut BTreeMap<String, Term>) -> bool {
        match (self, t) {
            (Term::Var(x), _) => match s.get(x) {
                Some(b) => b == t,
                None => {
                    s.insert(x.clone(), t.clone());
                    true
                }
            },
            (Term::App(f, fa), Term::App(g, ga)) => {
                f == g && fa.len() == ga.len() && fa.iter().zip(ga).all(|(p, u)| p.matches(u, s))
            }
            _ => false,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(x) => write!(f, "{x}"),
            Term::App(g, args) if args.is_empty() => write!(f, "{g}"),
            Term::App(g, args) => {
                write!(f, "{g}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TrsRule {
    pub lhs: Term,
    pub rhs: Term,
}

impl fmt::Display for TrsRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.lhs, self.rhs)
    }
}

impl TrsRule {
    pub fn new(lhs: Term, rhs: Term) -> Self {
        TrsRule { lhs, rhs }
    }

    /// Variables of the right-hand side that do not occur on the left.
    pub fn free_rhs_vars(&self) -> BTreeSet<String> {
        let l = self.lhs.var_set();
        self.rhs.var_set().into_iter().filter(|v| !l.contains(v)).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trs {
    pub rules: Vec<TrsRule>,
}

impl Trs {
    pub fn new(rules: Vec<TrsRule>) -> Self {
        Trs { rules }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        for r in &self.rules {
            r.lhs.vars(&mut s);
            r.rhs.vars(&mut s);
        }
        s
    }

    /// Function symbols with their arities.
    pub fn signature(&self) -> BTreeMap<String, usize> {
        fn go(t: &Term, out: &mut BTreeMap<String, usize>) {
            if let Term::App(f, args) = t {
                out.insert(f.clone(), args.len());
                args.iter().for_each(|a| go(a, out));
            }
        }
        let mut out = BTreeMap::new();
        for r in &self.rules {
            go(&r.lhs, &mut out);
            go(&r.rhs, &mut out);
        }
        out
    }

    /// Root symbols of left-hand sides.
    pub fn defined(&self) -> BTreeSet<String> {
        self.rules
            .iter()
            .filter_map(|r| match &r.lhs {
                Term::App(f, _) => Some(f.clone()),
                Term::Var(_) => None,
            })
            .collect()
    }

    /// Plain listing, one rule per line.
    pub fn listing(&self) -> String {
        self.rules.iter().map(|r| format!("{r}\n")).collect()
    }

    /// TPDB text with innermost strategy, see [`emit_tpdb`].
    pub fn to_tpdb(&self) -> String {
        emit_tpdb(self)
    }
}

/// TPDB text with innermost strategy. A free right-hand-side variable `k`
/// becomes the marker constant `fresh_k` so that the problem is a plain TRS.
pub fn emit_tpdb(trs: &Trs) -> String {
    let mut vars = BTreeSet::new();
    let mut lines = Vec::new();
    for r in &trs.rules {
        let free = r.free_rhs_vars();
        let markers: BTreeMap<String, Term> = free
            .iter()
            .map(|v| (v.clone(), Term::constant(&format!("fresh_{v}"))))
            .collect();
        r.lhs.vars(&mut vars);
        lines.push(format!("  {} -> {}\n", r.lhs, r.rhs.subst(&markers)));
    }
    let vars: Vec<String> = vars.into_iter().collect();
    let mut out = format!("(VAR {})\n(STRATEGY INNERMOST)\n(RULES\n", vars.join(" "));
    out.extend(lines);
    out.push_str(")\n");
    out
}

/// Function symbol for a diagram label: `SR,lbeta` becomes `SRlbeta`.
pub fn label_symbol(label: &str) -> String {
    if label == ANSWER {
        return "Answer".into();
    }
    label.chars().filter(|c| c.is_ascii_alphanumeric() || *c == '_').collect()
}

/// Wrap a term with one unary symbol per label, first label innermost.
fn wrap(labels: &[String], inner: Term) -> Term {
    labels
        .iter()
        .fold(inner, |t, l| Term::App(label_symbol(l), vec![t]))
}

/// Encode one diagram as rewrite rules; `index` names the W symbols of
/// transitive closures.
pub fn encode_diagram(d: &Diagram, index: usize) -> Vec<TrsRule> {
    let x = Term::var("x");
    let mut rhs: &[Arrow] = &d.rhs;
    let mut lhs_labels: Vec<String> = Vec::new();
    // answers become a constant in place of the variable
    let mut base = x.clone();
    if d.is_answer() {
        base = Term::constant("Answer");
    } else {
        lhs_labels.push(d.lhs[0].label().to_string());
    }
    let rhs_base = base.clone();
    if d.is_answer() && matches!(rhs.first(), Some(a) if a.label() == ANSWER) {
        rhs = &rhs[1..];
    }
    // leading forward SR steps are moved to the left as inner wrappers
    let mut moved = Vec::new();
    while let Some(Arrow::Fwd(l)) = rhs.first() {
        if !l.starts_with("SR,") {
            break;
        }
        moved.push(l.clone());
        rhs = &rhs[1..];
    }
    let mut left_inner = base.clone();
    for l in &moved {
        left_inner = Term::App(label_symbol(l), vec![left_inner]);
    }
    let lhs = wrap(
        &[lhs_labels.clone(), vec![d.lhs[1].label().to_string()]].concat(),
        left_inner,
    );
    let closures = rhs.iter().filter(|a| a.is_closure()).count();
    let mut rules = Vec::new();
    let mut cur = rhs_base;
    let mut w_count = 0;
    for a in rhs {
        if a.is_closure() {
            w_count += 1;
            let w = if closures == 1 {
                format!("W{index}")
            } else {
                format!("W{index}_{w_count}")
            };
            let k = if closures == 1 {
                "k".to_string()
            } else {
                format!("k{w_count}")
            };
            let sym = label_symbol(a.label().trim_end_matches(",+"));
            let vars: Vec<Term> = cur
                .var_set()
                .into_iter()
                .map(Term::Var)
                .collect();
            let wt = |kk: Term| {
                let mut args = vec![kk];
                args.extend(vars.iter().cloned());
                Term::App(w.clone(), args)
            };
            let sk = Term::app("s", vec![Term::var(&k)]);
            rules.push(TrsRule::new(
                wt(sk.clone()),
                Term::App(sym.clone(), vec![wt(Term::var(&k))]),
            ));
            rules.push(TrsRule::new(wt(sk), Term::App(sym, vec![cur.clone()])));
            cur = wt(Term::var(&k));
        } else {
            cur = Term::App(label_symbol(a.label()), vec![cur]);
        }
    }
    rules.insert(0, TrsRule::new(lhs, cur));
    rules
}

/// Encode a diagram set; rules are de-duplicated in order.
pub fn encode_diagrams(ds: &[Diagram]) -> Trs {
    let mut rules: Vec<TrsRule> = Vec::new();
    for (i, d) in ds.iter().enumerate() {
        for r in encode_diagram(d, i + 1) {
            if !rules.contains(&r) {
                rules.push(r);
            }
        }
    }
    Trs::new(rules)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct TpdbError(pub String);

/// Read TPDB text: `(VAR ..)`, optional `(STRATEGY ..)`, `(RULES ..)`.
pub fn parse_tpdb(text: &str) -> Result<Trs, TpdbError> {
    let toks = tokenize(text);
    let mut vars = BTreeSet::new();
    let mut rules = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        if toks[i] != "(" {
            return Err(TpdbError(format!("expected '(' but found '{}'", toks[i])));
        }
        let head = toks.get(i + 1).ok_or_else(|| TpdbError("unexpected end".into()))?;
        i += 2;
        let start = i;
        let mut level = 0i32;
        while i < toks.len() && !(level == 0 && toks[i] == ")") {
            match toks[i].as_str() {
                "(" => level += 1,
                ")" => level -= 1,
                _ => {}
            }
            i += 1;
        }
        if i >= toks.len() {
            return Err(TpdbError(format!("unclosed ({head}")));
        }
        let body = &toks[start..i];
        i += 1;
        match head.as_str() {
            "VAR" => vars.extend(body.iter().cloned()),
            "STRATEGY" | "COMMENT" | "THEORY" => {}
            "RULES" => {
                let mut p = TermParser { toks: body, pos: 0, vars: &vars };
                while p.pos < body.len() {
                    let l = p.term()?;
                    p.expect("->")?;
                    let r = p.term()?;
                    rules.push(TrsRule::new(l, r));
                }
            }
            other => return Err(TpdbError(format!("unknown section {other}"))),
        }
    }
    Ok(Trs::new(rules))
}

fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let flush = |cur: &mut String, out: &mut Vec<String>| {
        if !cur.is_empty() {
            out.push(std::mem::take(cur));
        }
    };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            flush(&mut cur, &mut out);
        } else if c == '(' || c == ')' || c == ',' {
            flush(&mut cur, &mut out);
            out.push(c.to_string());
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            flush(&mut cur, &mut out);
            out.push("->".into());
            i += 1;
        } else {
            cur.push(c);
        }
        i += 1;
    }
    flush(&mut cur, &mut out);
    out
}

struct TermParser<'a> {
    toks: &'a [String],
    pos: usize,
    vars: &'a BTreeSet<String>,
}

impl TermParser<'_> {
    fn expect(&mut self, t: &str) -> Result<(), TpdbError> {
        if self.toks.get(self.pos).map(String::as_str) == Some(t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(TpdbError(format!(
                "expected '{t}' at token {} ('{}')",
                self.pos,
                self.toks.get(self.pos).map(String::as_str).unwrap_or("end")
            )))
        }
    }

    fn term(&mut self) -> Result<Term, TpdbError> {
        let name = self
            .toks
            .get(self.pos)
            .ok_or_else(|| TpdbError("unexpected end of rules".into()))?
            .clone();
        if matches!(name.as_str(), "(" | ")" | "," | "->") {
            return Err(TpdbError(format!("unexpected '{name}'")));
        }
        self.pos += 1;
        if self.toks.get(self.pos).map(String::as_str) == Some("(") {
            self.pos += 1;
            let mut args = Vec::new();
            if self.toks.get(self.pos).map(String::as_str) != Some(")") {
                args.push(self.term()?);
                while self.toks.get(self.pos).map(String::as_str) == Some(",") {
                    self.pos += 1;
                    args.push(self.term()?);
                }
            }
            self.expect(")")?;
            return Ok(Term::App(name, args));
        }
        if self.vars.contains(&name) {
            Ok(Term::Var(name))
        } else {
            Ok(Term::App(name, vec![]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::parse_diagram;

    fn enc(s: &str, i: usize) -> Vec<String> {
        encode_diagram(&parse_diagram(s, 1).unwrap(), i)
            .iter()
            .map(|r| r.to_string())
            .collect()
    }

    #[test]
    fn square_and_triangle() {
        assert_eq!(
            enc("<-SR,lbeta- . -gcT-> ~~> -gcT-> . <-SR,lbeta-", 1),
            ["gcT(SRlbeta(x)) -> SRlbeta(gcT(x))"]
        );
        assert_eq!(enc("<-SR,lll- . -gcT-> ~~> -gcT->", 1), ["gcT(SRlll(x)) -> gcT(x)"]);
        assert_eq!(enc("<-SR,top- . -top-> ~~>", 1), ["top(SRtop(x)) -> x"]);
    }

    #[test]
    fn answers_become_constants() {
        assert_eq!(enc("<-ANSWER- . -gcT-> ~~> <-ANSWER-", 1), ["gcT(Answer) -> Answer"]);
        assert_eq!(
            enc("<-ANSWER- . -top-> ~~> <-ANSWER- . <-SR,top-", 1),
            ["top(Answer) -> SRtop(Answer)"]
        );
    }

    #[test]
    fn forward_standard_reductions_move_left() {
        assert_eq!(
            enc("<-SR,a- . -T-> ~~> -SR,b-> . -T-> . <-SR,a-", 1),
            ["T(SRa(SRb(x))) -> SRa(T(x))"]
        );
    }

    #[test]
    fn closure_uses_a_counter_symbol() {
        assert_eq!(
            enc("<-SR,lbeta- . -gcT-> ~~> -gcT-> . <-SR,lbeta- . <-SR,lll,+-", 24),
            [
                "gcT(SRlbeta(x)) -> W24(k,x)",
                "W24(s(k),x) -> SRlll(W24(k,x))",
                "W24(s(k),x) -> SRlll(SRlbeta(gcT(x)))",
            ]
        );
    }

    #[test]
    fn tpdb_round_trip() {
        let trs = Trs::new(vec![
            TrsRule::new(
                Term::app("f", vec![Term::var("x"), Term::constant("a")]),
                Term::app("g", vec![Term::var("x")]),
            ),
        ]);
        let text = trs.to_tpdb();
        assert_eq!(parse_tpdb(&text).unwrap(), trs);
    }
}
