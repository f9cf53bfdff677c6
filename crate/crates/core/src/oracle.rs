//! Brute-force validation of diagram sets on ground expressions and the
//! executable replay of the induction that turns diagrams into convergence
//! proofs.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::calculus::{reverse_rule, Calculus, Rule};
use crate::diagram::{Arrow, Diagram, ANSWER};
use crate::ground::{canonical, converges, enumerate_ground, ground_apply, is_answer, sr_steps};
use crate::join::step_label;
use crate::syntax::Expr;

/// Orientation of one concrete step inside a path listed left to right.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    /// left reduces to right by a standard reduction
    Sr,
    /// right reduces to left by a standard reduction
    SrBack,
    /// left to right by the analysed transformation
    T,
    /// right to left by the analysed transformation
    TBack,
}

impl Link {
    fn flip(self) -> Link {
        match self {
            Link::Sr => Link::SrBack,
            Link::SrBack => Link::Sr,
            Link::T => Link::TBack,
            Link::TBack => Link::T,
        }
    }
}

/// A concrete path `nodes[0] - links[0] - nodes[1] ...`; `labels[i]` is the
/// diagram label of `links[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub nodes: Vec<Expr>,
    pub links: Vec<Link>,
    pub labels: Vec<String>,
}

impl Path {
    fn single(e: Expr) -> Path {
        Path { nodes: vec![e], links: vec![], labels: vec![] }
    }

    fn reversed(&self) -> Path {
        Path {
            nodes: self.nodes.iter().rev().cloned().collect(),
            links: self.links.iter().rev().map(|l| l.flip()).collect(),
            labels: self.labels.iter().rev().cloned().collect(),
        }
    }
}

/// The transformation under analysis and its direction.
#[derive(Debug, Clone)]
pub struct Analysed {
    pub name: String,
    /// Forward rules of the transformation.
    pub rules: Vec<Rule>,
    /// Analysing the reversed transformation.
    pub reversed: bool,
}

impl Analysed {
    pub fn new(calc: &Calculus, name: &str, reversed: bool) -> Self {
        Analysed {
            name: name.to_string(),
            rules: calc.transformations.iter().filter(|r| r.name == name).cloned().collect(),
            reversed,
        }
    }

    /// Forward transformation steps from `e` (always computable).
    pub fn forward_steps(&self, calc: &Calculus, e: &Expr) -> Vec<Expr> {
        let mut seen = BTreeSet::new();
        for r in &self.rules {
            for st in ground_apply(calc, r, e) {
                seen.insert(st.target);
            }
        }
        seen.into_iter().collect()
    }
}

/// Settings for realizing closure arrows.
#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    pub max_size: usize,
    /// Maximal number of base steps for one closure arrow.
    pub closure_fuel: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { max_size: 7, closure_fuel: 8 }
    }
}

/// Which end a diagram arrow can be computed from, with forward rules only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum From {
    Left,
    Right,
}

struct Realizer<'a> {
    calc: &'a Calculus,
    an: &'a Analysed,
    cfg: OracleConfig,
}

impl Realizer<'_> {
    fn is_t(&self, label: &str) -> bool {
        label == self.an.name
    }

    fn side(&self, a: &Arrow) -> From {
        let fwd = matches!(a, Arrow::Fwd(_));
        if self.is_t(a.label()) && self.an.reversed {
            if fwd { From::Right } else { From::Left }
        } else if fwd {
            From::Left
        } else {
            From::Right
        }
    }

    fn link(&self, a: &Arrow) -> Link {
        match (a, self.is_t(a.label())) {
            (Arrow::Fwd(_), true) => Link::T,
            (Arrow::Back(_), true) => Link::TBack,
            (Arrow::Fwd(_), false) => Link::Sr,
            (Arrow::Back(_), false) => Link::SrBack,
        }
    }

    /// Single standard reductions of `e` whose label is `label`.
    fn sr_with_label(&self, e: &Expr, label: &str) -> Vec<Expr> {
        sr_steps(self.calc, e)
            .into_iter()
            .filter(|st| self.sr_label(&st.rule) == label)
            .map(|st| st.target)
            .collect()
    }

    fn sr_label(&self, full_name: &str) -> String {
        self.calc
            .sr_rules
            .iter()
            .find(|r| r.full_name() == full_name)
            .map(|r| step_label(self.calc, r))
            .unwrap_or_default()
    }

    /// Expand a path by one arrow from its computable end; paths grow at the
    /// end, so right-computed paths are built in reverse.
    fn extend(&self, p: &Path, a: &Arrow, toward_right: bool) -> Vec<Path> {
        let last = p.nodes.last().expect("non-empty");
        let link = if toward_right { self.link(a) } else { self.link(a).flip() };
        let label = a.label().to_string();
        let one_step = |e: &Expr| -> Vec<Expr> {
            if self.is_t(&label) {
                self.an.forward_steps(self.calc, e)
            } else if let Some(base) = label.strip_suffix(",+") {
                self.sr_with_label(e, base)
            } else {
                self.sr_with_label(e, &label)
            }
        };
        let base_label = label.trim_end_matches(",+").to_string();
        let mut out = Vec::new();
        let mut frontier = vec![p.clone()];
        let rounds = if a.is_closure() { self.cfg.closure_fuel } else { 1 };
        for _ in 0..rounds {
            let mut next = Vec::new();
            for q in &frontier {
                for t in one_step(q.nodes.last().unwrap_or(last)) {
                    let mut q2 = q.clone();
                    q2.nodes.push(t);
                    q2.links.push(link);
                    q2.labels.push(base_label.clone());
                    next.push(q2);
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }

    fn frontier(&self, start: &Expr, arrows: &[Arrow], toward_right: bool) -> Vec<Path> {
        let mut ps = vec![Path::single(start.clone())];
        for a in arrows {
            ps = ps.iter().flat_map(|p| self.extend(p, a, toward_right)).collect();
            if ps.is_empty() {
                break;
            }
        }
        ps
    }

    /// A concrete path from `left` (or some answer when `left` is `None`)
    /// to `right` following the arrows.
    fn realize(&self, arrows: &[Arrow], left: Option<&Expr>, right: &Expr) -> Option<Path> {
        let sides: Vec<From> = arrows.iter().map(|a| self.side(a)).collect();
        let k = sides.iter().take_while(|s| **s == From::Left).count();
        if sides[k..].iter().any(|s| *s == From::Left) {
            return None;
        }
        let rights: Vec<Path> = {
            let rev: Vec<Arrow> = arrows[k..].iter().rev().cloned().collect();
            self.frontier(right, &rev, false)
                .into_iter()
                .map(|p| p.reversed())
                .collect()
        };
        match left {
            None => {
                if k > 0 {
                    return None;
                }
                rights.into_iter().find(|p| is_answer(self.calc, &p.nodes[0]))
            }
            Some(l) => {
                let lefts = self.frontier(l, &arrows[..k], true);
                for lp in &lefts {
                    let meet = canonical(lp.nodes.last().expect("non-empty"));
                    for rp in &rights {
                        if canonical(&rp.nodes[0]) == meet {
                            let mut p = lp.clone();
                            p.nodes.extend(rp.nodes[1..].iter().cloned());
                            p.links.extend(rp.links.iter().copied());
                            p.labels.extend(rp.labels.iter().cloned());
                            return Some(p);
                        }
                    }
                }
                None
            }
        }
    }
}

/// A ground overlap: `left <-label- peak -T-> right`, or an answer peak.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundFork {
    pub peak: Expr,
    /// SR label, or `ANSWER`.
    pub label: String,
    pub left: Expr,
    pub right: Expr,
}

impl std::fmt::Display for GroundFork {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} <-{}- {} -T-> {}", self.left, self.label, self.peak, self.right)
    }
}

/// Every ground fork whose transformation source has size at most
/// `max_size`. For the reversed direction the source is the right end.
pub fn ground_forks(calc: &Calculus, an: &Analysed, max_size: usize) -> Vec<GroundFork> {
    let exprs = enumerate_ground(calc, max_size);
    let per: Vec<Vec<GroundFork>> = exprs
        .par_iter()
        .map(|src| {
            let mut out = Vec::new();
            // (peak, right end) pairs of the analysed direction
            let pairs: Vec<(Expr, Expr)> = an
                .forward_steps(calc, src)
                .into_iter()
                .map(|t| if an.reversed { (t, src.clone()) } else { (src.clone(), t) })
                .collect();
            for (peak, right) in pairs {
                for st in sr_steps(calc, &peak) {
                    let rule = calc.sr_rules.iter().find(|r| r.full_name() == st.rule).expect("known rule");
                    out.push(GroundFork {
                        peak: peak.clone(),
                        label: step_label(calc, rule),
                        left: st.target,
                        right: right.clone(),
                    });
                }
                if is_answer(calc, &peak) {
                    out.push(GroundFork { peak: peak.clone(), label: ANSWER.into(), left: peak.clone(), right });
                }
            }
            out
        })
        .collect();
    per.into_iter().flatten().collect()
}

/// Find a diagram covering a fork together with its concrete join.
pub fn cover(
    calc: &Calculus,
    an: &Analysed,
    diagrams: &[Diagram],
    fork: &GroundFork,
    cfg: OracleConfig,
) -> Option<(usize, Path)> {
    let r = Realizer { calc, an, cfg };
    for (i, d) in diagrams.iter().enumerate() {
        if d.lhs[0].label() != fork.label || d.transformation() != Some(an.name.as_str()) {
            continue;
        }
        let found = if fork.label == ANSWER {
            let arrows = match d.rhs.first() {
                Some(a) if a.label() == ANSWER => &d.rhs[1..],
                _ => continue,
            };
            r.realize(arrows, None, &fork.right)
        } else {
            r.realize(&d.rhs, Some(&fork.left), &fork.right)
        };
        if let Some(p) = found {
            return Some((i, p));
        }
    }
    None
}

#[derive(Debug, Clone, Default)]
pub struct CoverageReport {
    pub forks: usize,
    pub covered: usize,
    /// Uncovered forks, rendered.
    pub uncovered: Vec<String>,
    /// How often each diagram was the first to cover a fork.
    pub usage: Vec<usize>,
}

impl CoverageReport {
    pub fn complete(&self) -> bool {
        self.covered == self.forks
    }

    pub fn percent(&self) -> f64 {
        if self.forks == 0 {
            100.0
        } else {
            100.0 * self.covered as f64 / self.forks as f64
        }
    }
}

pub fn validate_diagrams(
    calc: &Calculus,
    an: &Analysed,
    diagrams: &[Diagram],
    cfg: OracleConfig,
) -> CoverageReport {
    let forks = ground_forks(calc, an, cfg.max_size);
    let results: Vec<Option<usize>> = forks
        .par_iter()
        .map(|f| cover(calc, an, diagrams, f, cfg).map(|(i, _)| i))
        .collect();
    let mut rep = CoverageReport { forks: forks.len(), usage: vec![0; diagrams.len()], ..Default::default() };
    for (f, r) in forks.iter().zip(results) {
        match r {
            Some(i) => {
                rep.covered += 1;
                rep.usage[i] += 1;
            }
            None => rep.uncovered.push(f.to_string()),
        }
    }
    rep
}

/// Default fuel for an expression.
pub fn default_fuel(e: &Expr) -> usize {
    4 * e.size()
}

#[derive(Debug, Clone, Default)]
pub struct EquivalenceReport {
    pub pairs: usize,
    /// `(s, t, converges(s), converges(t))` where they differ.
    pub mismatches: Vec<(Expr, Expr, bool, bool)>,
}

/// For every forward transformation step `s -> t` with `|s| <= max_size`:
/// does `s` converge exactly when `t` does? Fuel defaults to four times the
/// larger size.
pub fn convergence_equivalence(
    calc: &Calculus,
    t_name: &str,
    max_size: usize,
    fuel: Option<usize>,
) -> EquivalenceReport {
    let an = Analysed::new(calc, t_name, false);
    let exprs = enumerate_ground(calc, max_size);
    let per: Vec<(usize, Vec<(Expr, Expr, bool, bool)>)> = exprs
        .par_iter()
        .map(|s| {
            let ts = an.forward_steps(calc, s);
            let cs = converges(calc, s, fuel.unwrap_or(default_fuel(s))).converges();
            let mut bad = Vec::new();
            for t in &ts {
                let f = fuel.unwrap_or(default_fuel(s).max(default_fuel(t)));
                let ct = converges(calc, t, f).converges();
                if cs != ct {
                    bad.push((s.clone(), t.clone(), cs, ct));
                }
            }
            (ts.len(), bad)
        })
        .collect();
    let mut rep = EquivalenceReport::default();
    for (n, bad) in per {
        rep.pairs += n;
        rep.mismatches.extend(bad);
    }
    rep
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayError {
    Budget,
    Uncovered(String),
    Stuck(String),
    NotConverging,
}

impl std::fmt::Display for ReplayError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReplayError::Budget => write!(f, "budget exhausted"),
            ReplayError::Uncovered(s) => write!(f, "no diagram covers {s}"),
            ReplayError::Stuck(s) => write!(f, "stuck: {s}"),
            ReplayError::NotConverging => write!(f, "result does not end in an answer"),
        }
    }
}

/// Turn `seq` (standard reductions from `source` to an answer) and a step
/// `source -T-> target` of the analysed direction into standard reductions
/// from `target` to an answer, by rewriting the path with diagrams.
/// Returns the resulting sequence of expressions.
pub fn replay_induction(
    calc: &Calculus,
    an: &Analysed,
    diagrams: &[Diagram],
    seq: &[Expr],
    target: &Expr,
    budget: usize,
    cfg: OracleConfig,
) -> Result<Vec<Expr>, ReplayError> {
    let r = Realizer { calc, an, cfg };
    let mut labels = vec![an.name.clone()];
    for w in seq.windows(2) {
        let goal = canonical(&w[1]);
        let Some(st) = sr_steps(calc, &w[0]).into_iter().find(|st| st.target == goal) else {
            return Err(ReplayError::Stuck(format!("{} does not reduce to {}", w[0], w[1])));
        };
        labels.push(r.sr_label(&st.rule));
    }
    let mut path = Path {
        nodes: std::iter::once(canonical(target)).chain(seq.iter().map(canonical)).collect(),
        links: std::iter::once(Link::TBack).chain(seq.iter().skip(1).map(|_| Link::Sr)).collect(),
        labels,
    };
    let mut used = 0;
    loop {
        // peaks of two standard reductions vanish by determinism
        if let Some(j) = path.links.windows(2).position(|w| w == [Link::SrBack, Link::Sr]) {
            if path.nodes[j] != path.nodes[j + 2] {
                return Err(ReplayError::Stuck("standard reduction is not deterministic".into()));
            }
            path.nodes.drain(j + 1..j + 3);
            path.links.drain(j..j + 2);
            path.labels.drain(j..j + 2);
            continue;
        }
        let Some(i) = path.links.iter().rposition(|l| *l != Link::Sr) else { break };
        if path.links[i] != Link::TBack {
            return Err(ReplayError::Stuck(format!("unexpected {:?} step", path.links[i])));
        }
        if used == budget {
            return Err(ReplayError::Budget);
        }
        used += 1;
        let (peak, right) = (path.nodes[i + 1].clone(), path.nodes[i].clone());
        let (fork, tail_from) = if i + 1 == path.links.len() {
            (GroundFork { peak: peak.clone(), label: ANSWER.into(), left: peak, right }, i + 2)
        } else {
            let label = path.labels[i + 1].clone();
            (GroundFork { peak, label, left: path.nodes[i + 2].clone(), right }, i + 3)
        };
        let Some((_, join)) = cover(calc, an, diagrams, &fork, cfg) else {
            return Err(ReplayError::Uncovered(fork.to_string()));
        };
        // the join runs from the SR end to the T end; splice it in reversed
        let join = join.reversed();
        let mut nodes = path.nodes[..i].to_vec();
        nodes.extend(join.nodes.iter().cloned());
        let mut links = path.links[..i].to_vec();
        links.extend(join.links.iter().copied());
        let mut labels = path.labels[..i].to_vec();
        labels.extend(join.labels.iter().cloned());
        if tail_from <= path.nodes.len() {
            nodes.extend(path.nodes[tail_from..].iter().cloned());
            links.extend(path.links[tail_from - 1..].iter().copied());
            labels.extend(path.labels[tail_from - 1..].iter().cloned());
        }
        path = Path { nodes, links, labels };
    }
    // verify the result step by step
    for w in path.nodes.windows(2) {
        if !sr_steps(calc, &w[0]).iter().any(|st| st.target == canonical(&w[1])) {
            return Err(ReplayError::Stuck(format!("{} does not reduce to {}", w[0], w[1])));
        }
    }
    if !is_answer(calc, path.nodes.last().expect("non-empty")) {
        return Err(ReplayError::NotConverging);
    }
    Ok(path.nodes)
}

/// Analysed rules for a command direction, checked to be reversible.
pub fn analysed_rules(calc: &Calculus, name: &str, reversed: bool) -> Option<Analysed> {
    let an = Analysed::new(calc, name, reversed);
    if an.rules.is_empty() || (reversed && an.rules.iter().any(|r| reverse_rule(r).is_err())) {
        return None;
    }
    Some(an)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::parse_diagrams;
    use crate::parse::{parse, parse_expr};

    fn simple() -> Calculus {
        parse(include_str!("../fixtures/simple.inp")).unwrap()
    }

    fn e(s: &str) -> Expr {
        canonical(&parse_expr(&simple(), s).unwrap())
    }

    #[test]
    fn reversing_a_path_flips_links() {
        let p = Path {
            nodes: vec![e("top"), e("bot"), e("neg top")],
            links: vec![Link::Sr, Link::TBack],
            labels: vec!["SR,a".into(), "T".into()],
        };
        let r = p.reversed();
        assert_eq!(r.nodes[0], e("neg top"));
        assert_eq!(r.links, vec![Link::T, Link::SrBack]);
        assert_eq!(r.reversed(), p);
    }

    #[test]
    fn square_is_realized_concretely() {
        let c = simple();
        let an = Analysed::new(&c, "top", false);
        let ds = parse_diagrams("<-SR,bot- . -top-> ~~> -top-> . <-SR,bot-").unwrap();
        // cap bot (cap top top): SR,bot at the root, top inside the argument
        let fork = GroundFork {
            peak: e("cap bot (cap top top)"),
            label: "SR,bot".into(),
            left: e("bot"),
            right: e("cap bot top"),
        };
        assert!(cover(&c, &an, &ds, &fork, OracleConfig::default()).is_none());
        let tri = parse_diagrams("<-SR,bot- . -top-> ~~> <-SR,bot-").unwrap();
        let (i, p) = cover(&c, &an, &tri, &fork, OracleConfig::default()).unwrap();
        assert_eq!(i, 0);
        assert_eq!(p.nodes, vec![e("bot"), e("cap bot top")]);
        assert_eq!(p.links, vec![Link::SrBack]);
    }

    #[test]
    fn replay_without_diagrams_is_uncovered() {
        let c = simple();
        let an = Analysed::new(&c, "top", false);
        let seq = vec![e("cap top (cap top top)"), e("cap top top"), e("top")];
        let err = replay_induction(&c, &an, &[], &seq, &e("cap top top"), 10, OracleConfig::default()).unwrap_err();
        assert!(matches!(err, ReplayError::Uncovered(_)), "{err}");
    }

    #[test]
    fn replay_checks_the_given_sequence() {
        let c = simple();
        let an = Analysed::new(&c, "top", false);
        let seq = vec![e("cap top top"), e("bot")];
        let err = replay_induction(&c, &an, &[], &seq, &e("top"), 10, OracleConfig::default()).unwrap_err();
        assert!(matches!(err, ReplayError::Stuck(_)));
    }
}
