//! Overlap computation, meta-level rule application and join search.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;

use crate::calculus::{reverse_rule, Calculus, Constraints, Rule, RuleKind, Side};
use crate::diagram::{Arrow, Diagram, ANSWER};
use crate::entail::{self, Assumed, Facts};
use crate::solver::{self, rename_apart, Mode, Problem, SolveError};
use crate::subst::{meta_names, Subst};
use crate::syntax::{Expr, MetaKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OverlapKind {
    Forking,
    Answer,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Overlap {
    pub kind: OverlapKind,
    /// The transformation in the analysed direction.
    pub t_rule: Rule,
    /// Full name of the standard reduction, or `ANSWER`.
    pub partner: String,
    /// Diagram label of the partner.
    pub partner_label: String,
    /// Index of the partner among SR rules or answers, and of the unifier.
    pub provenance: (usize, usize),
    pub peak: Expr,
    pub facts: Facts,
    /// Result of the standard reduction (the peak itself for answer overlaps).
    pub left: Expr,
    /// Result of the transformation.
    pub right: Expr,
    pub used: BTreeSet<String>,
}

impl fmt::Display for Overlap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} <-{}- {} -{}-> {}",
            self.left,
            self.partner_label,
            self.peak,
            self.t_rule.label(),
            self.right
        )?;
        if !self.facts.is_empty() {
            write!(f, " where {}", self.facts)?;
        }
        Ok(())
    }
}

/// Label of a rule in diagrams: SR names collapse through unions and lose
/// their variant; closure rules carry `,+`.
pub fn step_label(calc: &Calculus, rule: &Rule) -> String {
    match rule.kind {
        RuleKind::SR => {
            let mut s = format!("SR,{}", calc.union_name(&rule.name));
            if rule.closure {
                s.push_str(",+");
            }
            s
        }
        RuleKind::T => rule.name.clone(),
    }
}

/// All overlaps of a transformation (reversed for `Side::Right`) with the
/// standard reductions and the answers.
pub fn compute_overlaps(
    calc: &Calculus,
    t_rule: &Rule,
    side: Side,
) -> Result<Vec<Overlap>, SolveError> {
    let t = match side {
        Side::Left => t_rule.clone(),
        Side::Right => reverse_rule(t_rule).expect("transformations can be reversed"),
    };
    let mut out = Vec::new();
    let t_vars: BTreeSet<String> = t.meta_vars().into_iter().map(|m| m.name).collect();
    for (i, sr) in calc.sr_rules.iter().enumerate() {
        let mut used = t_vars.clone();
        let (es, cs, _) = rename_apart(&[&sr.lhs, &sr.rhs], &[&sr.delta], &mut used);
        let (lhs, rhs, delta) = (&es[0], &es[1], &cs[0]);
        let sols = solver::unify(calc, &t.lhs, &t.delta, lhs, delta)?;
        for (j, sol) in sols.into_iter().enumerate() {
            let peak = sol.sigma.expr(&t.lhs);
            let left = sol.sigma.expr(rhs);
            let right = sol.sigma.expr(&t.rhs);
            let live = live_names(&[&peak, &left, &right]);
            out.push(Overlap {
                kind: OverlapKind::Forking,
                t_rule: t.clone(),
                partner: sr.full_name(),
                partner_label: step_label(calc, sr),
                provenance: (i, j),
                peak,
                facts: sol.facts.restrict(&live),
                left,
                right,
                used: sol.used,
            });
        }
    }
    for (i, ans) in calc.answers.iter().enumerate() {
        let mut used = t_vars.clone();
        let (es, cs, _) = rename_apart(&[&ans.expr], &[&ans.delta], &mut used);
        let sols = solver::unify(calc, &t.lhs, &t.delta, &es[0], &cs[0])?;
        for (j, sol) in sols.into_iter().enumerate() {
            let peak = sol.sigma.expr(&t.lhs);
            let right = sol.sigma.expr(&t.rhs);
            let live = live_names(&[&peak, &right]);
            out.push(Overlap {
                kind: OverlapKind::Answer,
                t_rule: t.clone(),
                partner: ANSWER.into(),
                partner_label: ANSWER.into(),
                provenance: (i, j),
                left: peak.clone(),
                peak,
                facts: sol.facts.restrict(&live),
                right,
                used: sol.used,
            });
        }
    }
    Ok(out)
}

fn live_names(es: &[&Expr]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for e in es {
        out.extend(meta_names(e));
    }
    out
}

/// One meta-level rewrite step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaStep {
    pub rule: String,
    pub label: String,
    pub from: Expr,
    pub to: Expr,
    pub matcher: Subst,
    /// Meta-variables of the rule's right-hand side that are not determined
    /// by the match; they may be chosen freely subject to `obligations`.
    pub existentials: BTreeSet<String>,
    pub obligations: Vec<Constraints>,
}

/// Apply `rule` (forward) at every matching position of `target`.
pub fn apply_rule_meta(
    calc: &Calculus,
    target: &Expr,
    given: &Facts,
    rule: &Rule,
    used: &mut BTreeSet<String>,
    scope: &[Expr],
) -> Result<Vec<MetaStep>, SolveError> {
    used.extend(meta_names(target));
    let (es, cs, _) = rename_apart(&[&rule.lhs, &rule.rhs], &[&rule.delta], used);
    let (lhs, rhs, delta) = (&es[0], &es[1], &cs[0]);
    let lhs_names = meta_names(lhs);
    let ex: BTreeSet<String> = meta_names(rhs)
        .into_iter()
        .filter(|n| !lhs_names.contains(n))
        .collect();
    used.extend(meta_names(rhs));
    let (now, later) = split_constraints(delta, &lhs_names);
    let sols = solver::match_expr(calc, lhs, &now, target, given, scope)?;
    let mut out: Vec<MetaStep> = Vec::new();
    for sol in sols {
        let to = sol.sigma.expr(rhs);
        if out.iter().any(|s| solver::let_equal(&s.to, &to)) {
            continue;
        }
        used.extend(sol.used.iter().cloned());
        let obligations = if later.is_empty() {
            vec![]
        } else {
            vec![subst_constraints(&sol.sigma, &later)]
        };
        out.push(MetaStep {
            rule: rule.full_name(),
            label: step_label(calc, rule),
            from: target.clone(),
            to,
            matcher: sol.sigma,
            existentials: ex.clone(),
            obligations,
        });
    }
    Ok(out)
}

/// Constraints mentioning only `known` names, and the rest.
fn split_constraints(c: &Constraints, known: &BTreeSet<String>) -> (Constraints, Constraints) {
    let mut now = Constraints::default();
    let mut later = Constraints::default();
    for d in &c.nonempty_ctx {
        if known.contains(d) {
            now.nonempty_ctx.push(d.clone());
        } else {
            later.nonempty_ctx.push(d.clone());
        }
    }
    for e in &c.nonempty_env {
        if known.contains(e) {
            now.nonempty_env.push(e.clone());
        } else {
            later.nonempty_env.push(e.clone());
        }
    }
    for (s, d) in &c.ncc {
        let mut names = meta_names(s);
        names.extend(meta_names(d));
        if names.is_subset(known) {
            now.ncc.push((s.clone(), d.clone()));
        } else {
            later.ncc.push((s.clone(), d.clone()));
        }
    }
    (now, later)
}

/// Constraints with a substitution applied; variable names of non-emptiness
/// requirements are kept when their image is again a variable.
fn subst_constraints(sub: &Subst, c: &Constraints) -> Constraints {
    let mut out = Constraints::default();
    for d in &c.nonempty_ctx {
        match sub.d.get(d) {
            None => out.nonempty_ctx.push(d.clone()),
            Some(Expr::Ctx { name, body, .. }) if body.is_hole() => out.nonempty_ctx.push(name.clone()),
            Some(_) => out.nonempty_ctx.push(d.clone()),
        }
    }
    out.nonempty_env = c.nonempty_env.clone();
    out.ncc = c
        .ncc
        .iter()
        .map(|(s, d)| (sub.expr(s), sub.expr(d)))
        .collect();
    out
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub max_depth: usize,
    pub split_budget: usize,
    pub ignore: BTreeSet<String>,
    pub restrict: BTreeMap<String, usize>,
    pub use_closures: bool,
}

impl SearchConfig {
    pub fn from_calculus(calc: &Calculus) -> Self {
        SearchConfig {
            max_depth: 4,
            split_budget: 2,
            ignore: calc.ignore.clone(),
            restrict: calc.restrict.clone(),
            use_closures: true,
        }
    }
}

/// A closed join: steps from the SR end and from the T end meeting in a
/// common expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinWitness {
    pub left: Vec<MetaStep>,
    pub right: Vec<MetaStep>,
    /// Bindings of existential variables found when closing.
    pub closing: Subst,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JoinResult {
    Joined(JoinWitness),
    Split {
        variable: String,
        cases: Vec<(Overlap, Box<JoinResult>)>,
    },
    Failed(String),
}

impl JoinResult {
    pub fn is_joined(&self) -> bool {
        match self {
            JoinResult::Joined(_) => true,
            JoinResult::Split { cases, .. } => cases.iter().all(|(_, r)| r.is_joined()),
            JoinResult::Failed(_) => false,
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    expr: Expr,
    steps: Vec<MetaStep>,
    existentials: BTreeSet<String>,
    obligations: Vec<Constraints>,
    used: BTreeSet<String>,
}

impl Node {
    fn count(&self, name: &str) -> usize {
        self.steps.iter().filter(|s| s.rule.split(',').next() == Some(name)).count()
    }
}

/// Facts usable while the existentials are still open: their obligations
/// are assumed and later verified when the join closes.
fn working_facts(base: &Facts, obligations: &[Constraints]) -> Facts {
    if obligations.is_empty() {
        return base.clone();
    }
    let applied: Vec<_> = obligations
        .iter()
        .map(|c| Subst::default().constraints(c))
        .collect();
    match entail::assume(&applied) {
        Assumed::Facts(f) => base.union(&f),
        _ => base.clone(),
    }
}

struct Search<'a> {
    calc: &'a Calculus,
    cfg: &'a SearchConfig,
    overlap: &'a Overlap,
    left_rules: Vec<Rule>,
    sr_left: Vec<Rule>,
    right_rules: Vec<Rule>,
}

impl Search<'_> {
    fn successors(&self, n: &Node, rules: &[Rule], scope: &[Expr]) -> Result<Vec<Node>, SolveError> {
        let mut out = Vec::new();
        let given = working_facts(&self.overlap.facts, &n.obligations);
        for r in rules {
            if let Some(limit) = self.cfg.restrict.get(&r.name) {
                if n.count(&r.name) >= *limit {
                    continue;
                }
            }
            let mut used = n.used.clone();
            for st in apply_rule_meta(self.calc, &n.expr, &given, r, &mut used, scope)? {
                let mut m = n.clone();
                m.expr = st.to.clone();
                m.existentials.extend(st.existentials.iter().cloned());
                m.obligations.extend(st.obligations.iter().cloned());
                m.used = used.clone();
                m.steps.push(st);
                out.push(m);
            }
        }
        Ok(out)
    }

    /// All paths of exactly `len` steps: SR steps first (deterministic
    /// calculi only), then transformation steps.
    fn left_paths(&self, len: usize, scope: &[Expr]) -> Result<Vec<Node>, SolveError> {
        let start = Node {
            expr: self.overlap.left.clone(),
            steps: vec![],
            existentials: BTreeSet::new(),
            obligations: vec![],
            used: self.overlap.used.clone(),
        };
        let mut layer = vec![start];
        for _ in 0..len {
            let mut next = Vec::new();
            for n in &layer {
                let only_t = n.steps.last().is_some_and(|s| !s.label.starts_with("SR,"));
                if !only_t && self.calc.deterministic && self.overlap.kind == OverlapKind::Forking {
                    next.extend(self.successors(n, &self.sr_left, scope)?);
                }
                next.extend(self.successors(n, &self.left_rules, scope)?);
            }
            layer = next;
        }
        Ok(layer)
    }

    fn right_paths(&self, len: usize, scope: &[Expr]) -> Result<Vec<Node>, SolveError> {
        let start = Node {
            expr: self.overlap.right.clone(),
            steps: vec![],
            existentials: BTreeSet::new(),
            obligations: vec![],
            used: self.overlap.used.clone(),
        };
        let mut layer = vec![start];
        for _ in 0..len {
            let mut next = Vec::new();
            for n in &layer {
                next.extend(self.successors(n, &self.right_rules, scope)?);
            }
            layer = next;
        }
        Ok(layer)
    }

    /// Do the two ends coincide for some choice of the existentials?
    fn close(&self, l: &Node, r: &Node, scope: &[Expr]) -> Result<Option<Subst>, SolveError> {
        let ex: BTreeSet<String> = l.existentials.union(&r.existentials).cloned().collect();
        let obligations: Vec<Constraints> =
            l.obligations.iter().chain(&r.obligations).cloned().collect();
        if ex.is_empty() && obligations.is_empty() {
            return Ok(solver::let_equal(&l.expr, &r.expr).then(Subst::default));
        }
        let mut p = Problem::new(Mode::Match);
        p.eqs.push((l.expr.clone(), r.expr.clone()));
        p.flexible = Some(ex);
        p.needed = obligations;
        p.given = self.overlap.facts.clone();
        p.scope = scope.to_vec();
        p.scope.push(l.expr.clone());
        p.scope.push(r.expr.clone());
        p.used = l.used.union(&r.used).cloned().collect();
        Ok(solver::solve(self.calc, p)?.into_iter().next().map(|s| s.sigma))
    }

    fn answer_close(&self, r: &Node) -> Result<bool, SolveError> {
        for a in &self.calc.answers {
            let mut used = r.used.clone();
            used.extend(meta_names(&r.expr));
            let (es, cs, _) = rename_apart(&[&a.expr], &[&a.delta], &mut used);
            let given = working_facts(&self.overlap.facts, &r.obligations);
            let sols = solver::match_expr(self.calc, &es[0], &cs[0], &r.expr, &given, &[self.overlap.peak.clone()])?;
            if !sols.is_empty() {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn run(&self) -> Result<Option<JoinWitness>, SolveError> {
        let scope = vec![self.overlap.peak.clone(), self.overlap.left.clone(), self.overlap.right.clone()];
        if self.overlap.kind == OverlapKind::Answer {
            for d in 0..=self.cfg.max_depth {
                for r in self.right_paths(d, &scope)? {
                    if r.existentials.is_empty() && self.answer_close(&r)? {
                        return Ok(Some(JoinWitness {
                            left: vec![],
                            right: r.steps,
                            closing: Subst::default(),
                        }));
                    }
                }
            }
            return Ok(None);
        }
        let mut lefts: Vec<Vec<Node>> = Vec::new();
        let mut rights: Vec<Vec<Node>> = Vec::new();
        for d in 0..=self.cfg.max_depth {
            lefts.push(self.left_paths(d, &scope)?);
            rights.push(self.right_paths(d, &scope)?);
            for l in 0..=d {
                for ln in &lefts[l] {
                    for rn in &rights[d - l] {
                        let mut sc = scope.clone();
                        sc.extend(ln.steps.iter().map(|s| s.to.clone()));
                        sc.extend(rn.steps.iter().map(|s| s.to.clone()));
                        if let Some(closing) = self.close(ln, rn, &sc)? {
                            return Ok(Some(JoinWitness {
                                left: ln.steps.clone(),
                                right: rn.steps.clone(),
                                closing,
                            }));
                        }
                    }
                }
            }
        }
        Ok(None)
    }
}

fn rules_for_search(calc: &Calculus, cfg: &SearchConfig, ov: &Overlap) -> (Vec<Rule>, Vec<Rule>, Vec<Rule>) {
    let t_name = &ov.t_rule.name;
    let left: Vec<Rule> = calc
        .transformations
        .iter()
        .filter(|r| &r.name == t_name && !cfg.ignore.contains(&r.full_name()) && !cfg.ignore.contains(&r.name))
        .map(|r| {
            if ov.t_rule.reversed {
                reverse_rule(r).expect("transformation")
            } else {
                r.clone()
            }
        })
        .collect();
    let mut right: Vec<Rule> = calc.sr_rules.clone();
    if cfg.use_closures {
        right.extend(calc.closure_rules.iter().cloned());
    }
    (left, calc.sr_rules.clone(), right)
}

/// Search a join for an overlap, case-splitting context and environment
/// variables when no join is found within the depth bound.
pub fn search_join(calc: &Calculus, ov: &Overlap, cfg: &SearchConfig) -> Result<JoinResult, SolveError> {
    search_with_splits(calc, ov, cfg, cfg.split_budget)
}

fn search_with_splits(
    calc: &Calculus,
    ov: &Overlap,
    cfg: &SearchConfig,
    budget: usize,
) -> Result<JoinResult, SolveError> {
    let (left_rules, sr_left, right_rules) = rules_for_search(calc, cfg, ov);
    let s = Search {
        calc,
        cfg,
        overlap: ov,
        left_rules,
        sr_left,
        right_rules,
    };
    if let Some(w) = s.run()? {
        return Ok(JoinResult::Joined(w));
    }
    if budget == 0 {
        return Ok(JoinResult::Failed(format!("no join within depth {}", cfg.max_depth)));
    }
    for (var, kind) in split_candidates(ov) {
        let cases = split_overlap(calc, ov, &var, kind);
        if cases.len() < 2 {
            continue;
        }
        let mut results = Vec::new();
        for c in cases {
            let r = search_with_splits(calc, &c, cfg, budget - 1)?;
            results.push((c, Box::new(r)));
        }
        let res = JoinResult::Split {
            variable: var,
            cases: results,
        };
        if res.is_joined() {
            return Ok(res);
        }
    }
    Ok(JoinResult::Failed(format!(
        "no join within depth {} and {} case splits",
        cfg.max_depth, cfg.split_budget
    )))
}

/// Context variables first, then environment variables, in textual order.
fn split_candidates(ov: &Overlap) -> Vec<(String, MetaKind)> {
    let mut out = Vec::new();
    let occ = crate::syntax::meta_occurrences(&ov.peak);
    for kind in [MetaKind::D, MetaKind::E] {
        for m in &occ {
            if m.kind == kind && !out.iter().any(|(n, _): &(String, MetaKind)| n == &m.name) {
                let known = match kind {
                    MetaKind::D => ov.facts.nonempty_ctx.contains(&m.name),
                    _ => ov.facts.nonempty_env.contains(&m.name),
                };
                if !known {
                    out.push((m.name.clone(), kind));
                }
            }
        }
    }
    out
}

/// The empty case and the non-empty case of a variable.
pub fn split_overlap(calc: &Calculus, ov: &Overlap, var: &str, kind: MetaKind) -> Vec<Overlap> {
    let mut out = Vec::new();
    let mut empty = Subst::default();
    match kind {
        MetaKind::D => {
            empty.d.insert(var.to_string(), Expr::hole());
        }
        _ => {
            empty.e.insert(var.to_string(), vec![]);
        }
    }
    // normalize the facts under the empty choice
    let mut assumed = vec![
        empty.constraints(&facts_as_constraints(&ov.facts)),
    ];
    if let Assumed::Facts(f) = entail::assume(&assumed) {
        let mut o = ov.clone();
        o.peak = empty.expr(&ov.peak);
        o.left = empty.expr(&ov.left);
        o.right = empty.expr(&ov.right);
        o.facts = f;
        out.push(o);
    }
    assumed.clear();
    if kind == MetaKind::D {
        if let Some(frames) = frame_cases(calc, ov, var) {
            out.extend(frames);
            return out;
        }
    }
    let mut o = ov.clone();
    match kind {
        MetaKind::D => o.facts.nonempty_ctx.insert(var.to_string()),
        _ => o.facts.nonempty_env.insert(var.to_string()),
    };
    out.push(o);
    out
}

/// Non-empty cases of a context variable by its innermost frame,
/// `D = D'[p]` with `p` a production whose recursive position became the
/// hole. Only for classes whose productions are unguarded frames that
/// recurse into the class itself.
fn frame_cases(calc: &Calculus, ov: &Overlap, var: &str) -> Option<Vec<Overlap>> {
    let class = crate::parse::class_of_name(var);
    let def = calc.class(class)?;
    let frames: Vec<_> = def.productions.iter().filter(|p| !p.is_hole()).collect();
    if frames.is_empty()
        || frames
            .iter()
            .any(|p| !p.guards.is_empty() || p.sub_class().as_deref() != Some(class) || !matches!(p.shape, Expr::Fun(..)))
    {
        return None;
    }
    let mut out = Vec::new();
    for p in frames {
        let mut used = ov.used.clone();
        used.extend(meta_names(&ov.peak));
        let mut inner = Subst::default();
        for m in crate::syntax::meta_occurrences(&p.shape) {
            match m.kind {
                MetaKind::D => {
                    inner.d.insert(m.name.clone(), Expr::hole());
                }
                MetaKind::S => {
                    let n = crate::subst::fresh_name(&mut used, &m.name);
                    inner.s.insert(m.name.clone(), Expr::SVar(n));
                }
                _ => return None,
            }
        }
        let outer = crate::subst::fresh_name(&mut used, class);
        let mut sigma = Subst::default();
        sigma.d.insert(var.to_string(), Expr::ctx(&outer, class, inner.expr(&p.shape)));
        let Assumed::Facts(f) = entail::assume(&[sigma.constraints(&facts_as_constraints(&ov.facts))]) else {
            continue;
        };
        let mut o = ov.clone();
        o.peak = sigma.expr(&ov.peak);
        o.left = sigma.expr(&ov.left);
        o.right = sigma.expr(&ov.right);
        o.facts = f;
        o.used = used;
        out.push(o);
    }
    Some(out)
}

/// Facts turned back into a constraint tuple (atomic constraints become
/// constraints between atom-shaped expressions).
fn facts_as_constraints(f: &Facts) -> Constraints {
    use crate::syntax::{Atom, Env, EnvItem, VarTerm};
    let as_expr = |a: &Atom| -> Expr {
        match a {
            Atom::Var(x) => Expr::var(x.clone()),
            Atom::S(n) => Expr::SVar(n.clone()),
            Atom::D(n) => crate::subst::ctx_var(n).fill(&Expr::Fun("var".into(), vec![crate::syntax::Arg::Var(VarTerm::Concrete("_".into()))])),
            Atom::E(n) | Atom::Ch(n) => Expr::Letrec(Env::new(vec![EnvItem::EVar(n.clone())]), Box::new(Expr::constant("_"))),
        }
    };
    let as_ctx = |a: &Atom| -> Expr {
        match a {
            Atom::Var(x) => Expr::lam(x.clone(), Expr::hole()),
            Atom::D(n) => crate::subst::ctx_var(n),
            Atom::E(n) | Atom::Ch(n) => Expr::Letrec(Env::new(vec![EnvItem::EVar(n.clone())]), Box::new(Expr::hole())),
            Atom::S(_) => Expr::hole(),
        }
    };
    Constraints {
        nonempty_ctx: f.nonempty_ctx.iter().cloned().collect(),
        nonempty_env: f.nonempty_env.iter().cloned().collect(),
        ncc: f.ncc.iter().map(|c| (as_expr(&c.u), as_ctx(&c.v))).collect(),
    }
}

/// Label-level abstraction of a joined overlap.
pub fn abstract_diagram(ov: &Overlap, w: &JoinWitness) -> Diagram {
    let lhs = vec![
        Arrow::Back(ov.partner_label.clone()),
        Arrow::Fwd(ov.t_rule.label()),
    ];
    let mut rhs = Vec::new();
    if ov.kind == OverlapKind::Answer {
        rhs.push(Arrow::Back(ANSWER.into()));
    }
    for s in &w.left {
        rhs.push(Arrow::Fwd(s.label.clone()));
    }
    for s in w.right.iter().rev() {
        rhs.push(Arrow::Back(s.label.clone()));
    }
    Diagram { lhs, rhs }
}

/// Diagrams of a (possibly split) join result.
pub fn diagrams_of(ov: &Overlap, r: &JoinResult) -> Vec<Diagram> {
    match r {
        JoinResult::Joined(w) => vec![abstract_diagram(ov, w)],
        JoinResult::Split { cases, .. } => cases
            .iter()
            .flat_map(|(o, r)| diagrams_of(o, r))
            .collect(),
        JoinResult::Failed(_) => vec![],
    }
}

/// Re-run every recorded step's rule application and check the recorded
/// successor is among the results.
pub fn replay_witness(calc: &Calculus, ov: &Overlap, w: &JoinWitness) -> Result<bool, SolveError> {
    let rules: Vec<Rule> = calc
        .all_rules()
        .cloned()
        .flat_map(|r| {
            let mut v = vec![r.clone()];
            if r.kind == RuleKind::T {
                v.push(reverse_rule(&r).expect("transformation"));
            }
            v
        })
        .collect();
    let scope = vec![ov.peak.clone(), ov.left.clone(), ov.right.clone()];
    let mut obligations = Vec::new();
    for (start, steps) in [(&ov.left, &w.left), (&ov.right, &w.right)] {
        let mut cur = start.clone();
        let mut used = ov.used.clone();
        for s in steps.iter() {
            if s.from != cur {
                return Ok(false);
            }
            let given = working_facts(&ov.facts, &obligations);
            let mut found = false;
            for r in rules.iter().filter(|r| r.full_name() == s.rule && (s.label == step_label(calc, r))) {
                let mut u = used.clone();
                for cand in apply_rule_meta(calc, &cur, &given, r, &mut u, &scope)? {
                    if solver::let_equal(&cand.to, &s.to) {
                        found = true;
                    }
                }
                used = u;
            }
            if !found {
                return Ok(false);
            }
            obligations.extend(s.obligations.iter().cloned());
            used.extend(meta_names(&s.to));
            cur = s.to.clone();
        }
    }
    Ok(true)
}

/// Outcome of joining every overlap of one command.
#[derive(Debug, Clone)]
pub struct JoinReport {
    pub overlaps: Vec<Overlap>,
    pub results: Vec<JoinResult>,
    pub diagrams: Vec<Diagram>,
}

impl JoinReport {
    pub fn joined(&self) -> usize {
        self.results.iter().filter(|r| r.is_joined()).count()
    }

    pub fn all_joined(&self) -> bool {
        self.joined() == self.results.len()
    }

    /// Unjoined overlaps with their failure reasons.
    pub fn failures(&self) -> Vec<(String, String)> {
        self.overlaps
            .iter()
            .zip(&self.results)
            .filter(|(_, r)| !r.is_joined())
            .map(|(o, r)| {
                let why = match r {
                    JoinResult::Failed(m) => m.clone(),
                    _ => "some case split remained open".to_string(),
                };
                (o.to_string(), why)
            })
            .collect()
    }
}

/// Compute and join all overlaps of a transformation; diagrams are
/// de-duplicated and sorted.
pub fn join_all(
    calc: &Calculus,
    rule_name: &str,
    variant: Option<u32>,
    side: Side,
    cfg: &SearchConfig,
) -> Result<JoinReport, SolveError> {
    let mut overlaps = Vec::new();
    for r in calc.transformations_named(rule_name, variant) {
        overlaps.extend(compute_overlaps(calc, r, side)?);
    }
    let results: Vec<Result<JoinResult, SolveError>> = overlaps
        .par_iter()
        .map(|o| search_join(calc, o, cfg))
        .collect();
    let results: Vec<JoinResult> = results.into_iter().collect::<Result<_, _>>()?;
    let mut set = BTreeSet::new();
    for (o, r) in overlaps.iter().zip(&results) {
        set.extend(diagrams_of(o, r));
    }
    Ok(JoinReport {
        overlaps,
        results,
        diagrams: set.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::meta_occurrences;

    fn mini() -> Calculus {
        crate::parse::parse(include_str!("../fixtures/mini_letrec.inp")).unwrap()
    }

    fn overlap_with_ctx(c: &Calculus, class: &str) -> (Overlap, String) {
        let gc = &c.transformations[1];
        for o in compute_overlaps(c, gc, Side::Right).unwrap() {
            let found = meta_occurrences(&o.peak)
                .into_iter()
                .find(|m| m.kind == MetaKind::D && crate::parse::class_of_name(&m.name) == class && !o.facts.nonempty_ctx.contains(&m.name));
            if let Some(m) = found {
                return (o, m.name);
            }
        }
        panic!("no overlap with a {class} context");
    }

    #[test]
    fn frame_split_exposes_the_innermost_application() {
        let c = mini();
        let (o, a) = overlap_with_ctx(&c, "A");
        let cases = split_overlap(&c, &o, &a, MetaKind::D);
        assert_eq!(cases.len(), 2);
        assert!(!meta_names(&cases[0].peak).contains(&a));
        let framed = cases[1].peak.to_string();
        assert!(!meta_names(&cases[1].peak).contains(&a));
        assert!(framed.contains("[app "), "{framed}");
    }

    #[test]
    fn guarded_classes_split_by_emptiness() {
        let c = mini();
        let (o, t) = overlap_with_ctx(&c, "T");
        let cases = split_overlap(&c, &o, &t, MetaKind::D);
        assert_eq!(cases.len(), 2);
        assert!(cases[1].facts.nonempty_ctx.contains(&t));
    }
}
