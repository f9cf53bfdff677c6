//! Unification and matching of constrained meta-expressions for the
//! chain-free fragment.

use std::collections::{BTreeMap, BTreeSet};

use crate::calculus::{Calculus, Constraints, ForkEntry};
use crate::entail::{self, Assumed, Facts};
use crate::subst::{ctx_classes, fresh_name, meta_names, renaming, rename_constraints, Subst};
use crate::syntax::{check_lvc, meta_vars, Arg, Env, EnvItem, Expr, VarTerm};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("chain variables are not supported by the solver")]
    ChainVariableUnsupported,
    #[error("no prefix or fork table entry for classes ({0}, {1})")]
    ClassTableMissing(String, String),
    #[error("solver step budget exhausted")]
    Budget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Constraints and production guards are assumptions.
    Unify,
    /// Constraints and production guards must be entailed by the given facts.
    Match,
}

/// A solving problem. In match mode only `flexible` names may be bound;
/// fresh names are always flexible.
#[derive(Debug, Clone)]
pub struct Problem {
    pub mode: Mode,
    pub eqs: Vec<(Expr, Expr)>,
    pub flexible: Option<BTreeSet<String>>,
    pub assumptions: Vec<Constraints>,
    pub needed: Vec<Constraints>,
    pub given: Facts,
    pub scope: Vec<Expr>,
    pub used: BTreeSet<String>,
}

impl Problem {
    pub fn new(mode: Mode) -> Self {
        Problem {
            mode,
            eqs: Vec::new(),
            flexible: None,
            assumptions: Vec::new(),
            needed: Vec::new(),
            given: Facts::default(),
            scope: Vec::new(),
            used: BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub sigma: Subst,
    /// Unify mode: the normalized residual constraints. Match mode: the given facts.
    pub facts: Facts,
    pub used: BTreeSet<String>,
}

const STEP_LIMIT: usize = 400_000;

#[derive(Debug, Clone)]
enum Equation {
    E(Expr, Expr),
    Env(Vec<EnvItem>, Vec<EnvItem>),
    V(VarTerm, VarTerm),
}

#[derive(Debug, Clone)]
struct State {
    sub: Subst,
    eqs: Vec<Equation>,
    assume: Vec<Constraints>,
    needed: Vec<Constraints>,
    used: BTreeSet<String>,
    /// Fresh names introduced by this solve; always flexible.
    fresh: BTreeSet<String>,
}

struct Solver<'a> {
    calc: &'a Calculus,
    mode: Mode,
    flexible: Option<BTreeSet<String>>,
    inclusion: BTreeSet<(String, String)>,
}

pub fn solve(calc: &Calculus, p: Problem) -> Result<Vec<Solution>, SolveError> {
    for (l, r) in &p.eqs {
        if crate::syntax::has_chain(l) || crate::syntax::has_chain(r) {
            return Err(SolveError::ChainVariableUnsupported);
        }
    }
    let solver = Solver {
        calc,
        mode: p.mode,
        flexible: p.flexible.clone(),
        inclusion: calc.class_inclusion(),
    };
    let mut original = BTreeSet::new();
    for (l, r) in &p.eqs {
        original.extend(meta_names(l));
        original.extend(meta_names(r));
    }
    for c in p.assumptions.iter().chain(&p.needed) {
        original.extend(c.meta_vars().into_iter().map(|m| m.name));
    }
    let mut used = p.used.clone();
    used.extend(original.iter().cloned());
    let init = State {
        sub: Subst::default(),
        eqs: p
            .eqs
            .iter()
            .rev()
            .map(|(l, r)| Equation::E(l.clone(), r.clone()))
            .collect(),
        assume: p.assumptions.clone(),
        needed: p.needed.clone(),
        used,
        fresh: BTreeSet::new(),
    };
    let mut stack = vec![init];
    let mut out: Vec<Solution> = Vec::new();
    let mut steps = 0usize;
    while let Some(mut st) = stack.pop() {
        steps += 1;
        if steps > STEP_LIMIT {
            return Err(SolveError::Budget);
        }
        match st.eqs.pop() {
            None => {
                for mut sol in solver.finish(st, &p)? {
                    sol.sigma = sol.sigma.restrict(&original);
                    if !out.iter().any(|o| o.sigma == sol.sigma && o.facts == sol.facts) {
                        out.push(sol);
                    }
                }
            }
            Some(eq) => {
                let children = solver.step(st, eq)?;
                stack.extend(children.into_iter().rev());
            }
        }
    }
    Ok(out)
}

/// All unifiers of two constrained expressions, whose meta-variables must be
/// disjoint.
pub fn unify(
    calc: &Calculus,
    lhs: &Expr,
    dl: &Constraints,
    rhs: &Expr,
    dr: &Constraints,
) -> Result<Vec<Solution>, SolveError> {
    let mut p = Problem::new(Mode::Unify);
    p.eqs.push((lhs.clone(), rhs.clone()));
    p.assumptions = vec![dl.clone(), dr.clone()];
    p.scope = vec![lhs.clone()];
    solve(calc, p)
}

/// Matchers of `pattern` (renamed apart from `target`) against a target under
/// given facts.
pub fn match_expr(
    calc: &Calculus,
    pattern: &Expr,
    needed: &Constraints,
    target: &Expr,
    given: &Facts,
    scope: &[Expr],
) -> Result<Vec<Solution>, SolveError> {
    let mut p = Problem::new(Mode::Match);
    p.eqs.push((pattern.clone(), target.clone()));
    p.flexible = Some(meta_names(pattern));
    p.needed = vec![needed.clone()];
    p.given = given.clone();
    p.scope = scope.to_vec();
    p.scope.push(target.clone());
    solve(calc, p)
}

impl Solver<'_> {
    fn is_flex(&self, st: &State, name: &str) -> bool {
        st.fresh.contains(name)
            || match &self.flexible {
                None => true,
                Some(f) => f.contains(name),
            }
    }

    fn subset(&self, k1: &str, k2: &str) -> bool {
        k1 == k2 || self.inclusion.contains(&(k1.to_string(), k2.to_string()))
    }

    fn fresh(&self, st: &mut State, base: &str) -> String {
        let n = fresh_name(&mut st.used, base);
        st.fresh.insert(n.clone());
        n
    }

    fn fresh_ctx(&self, st: &mut State, class: &str, body: Expr) -> Expr {
        let n = self.fresh(st, class);
        Expr::Ctx {
            name: n,
            class: class.to_string(),
            body: Box::new(body),
        }
    }

    /// Known to be non-empty from the assumptions collected so far.
    fn known_nonempty_ctx(&self, st: &State, name: &str) -> bool {
        self.mode == Mode::Unify && st.assume.iter().any(|c| c.nonempty_ctx.iter().any(|d| d == name))
    }

    fn known_nonempty_env(&self, st: &State, name: &str) -> bool {
        self.mode == Mode::Unify && st.assume.iter().any(|c| c.nonempty_env.iter().any(|d| d == name))
    }

    fn add_guard(&self, st: &mut State, c: Constraints) {
        if c.is_empty() {
            return;
        }
        match self.mode {
            Mode::Unify => st.assume.push(c),
            Mode::Match => st.needed.push(c),
        }
    }

    fn step(&self, mut st: State, eq: Equation) -> Result<Vec<State>, SolveError> {
        match eq {
            Equation::V(a, b) => {
                let (a, b) = (st.sub.var(&a), st.sub.var(&b));
                if a == b {
                    return Ok(vec![st]);
                }
                if let VarTerm::Meta(n) = &a {
                    if self.is_flex(&st, n) {
                        st.sub.bind_x(n, b);
                        return Ok(vec![st]);
                    }
                }
                if let VarTerm::Meta(n) = &b {
                    if self.is_flex(&st, n) {
                        st.sub.bind_x(n, a);
                        return Ok(vec![st]);
                    }
                }
                Ok(vec![])
            }
            Equation::Env(l, r) => self.env_step(st, l, r),
            Equation::E(l, r) => {
                let (l, r) = (st.sub.expr(&l), st.sub.expr(&r));
                self.expr_step(st, l, r)
            }
        }
    }

    fn expr_step(&self, mut st: State, l: Expr, r: Expr) -> Result<Vec<State>, SolveError> {
        if l == r {
            return Ok(vec![st]);
        }
        // expression variables
        if let Expr::SVar(n) = &l {
            if self.is_flex(&st, n) {
                return Ok(self.bind_s(st, n, r).into_iter().collect());
            }
        }
        if let Expr::SVar(n) = &r {
            if self.is_flex(&st, n) {
                return Ok(self.bind_s(st, n, l).into_iter().collect());
            }
        }
        match (&l, &r) {
            (
                Expr::Ctx {
                    name: n1,
                    class: k1,
                    body: b1,
                },
                Expr::Ctx {
                    name: n2,
                    class: k2,
                    body: b2,
                },
            ) => {
                if n1 == n2 {
                    st.eqs.push(Equation::E((**b1).clone(), (**b2).clone()));
                    return Ok(vec![st]);
                }
                let f1 = self.is_flex(&st, n1);
                let f2 = self.is_flex(&st, n2);
                match (f1, f2) {
                    (true, true) => self.flex_flex(st, (n1, k1, b1), (n2, k2, b2)),
                    (true, false) => self.flex_rigid(st, (n1, k1, b1), (n2, k2, b2)),
                    (false, true) => self.flex_rigid(st, (n2, k2, b2), (n1, k1, b1)),
                    (false, false) => Ok(vec![]),
                }
            }
            (Expr::Ctx { name, class, body }, other) | (other, Expr::Ctx { name, class, body }) => {
                if !self.is_flex(&st, name) {
                    return Ok(vec![]);
                }
                self.flex_term(st, name, class, body, other)
            }
            (Expr::Fun(f, a1), Expr::Fun(g, a2)) => {
                if f != g || a1.len() != a2.len() {
                    return Ok(vec![]);
                }
                for (x, y) in a1.iter().zip(a2).rev() {
                    match (x, y) {
                        (Arg::Var(u), Arg::Var(v)) => st.eqs.push(Equation::V(u.clone(), v.clone())),
                        (Arg::Expr(u), Arg::Expr(v)) => {
                            st.eqs.push(Equation::E(u.clone(), v.clone()))
                        }
                        (Arg::Bind(xs, u), Arg::Bind(ys, v)) if xs.len() == ys.len() => {
                            st.eqs.push(Equation::E(u.clone(), v.clone()));
                            for (x, y) in xs.iter().zip(ys).rev() {
                                st.eqs.push(Equation::V(x.clone(), y.clone()));
                            }
                        }
                        _ => return Ok(vec![]),
                    }
                }
                Ok(vec![st])
            }
            (Expr::Letrec(e1, b1), Expr::Letrec(e2, b2)) => {
                st.eqs.push(Equation::Env(e1.items.clone(), e2.items.clone()));
                st.eqs.push(Equation::E((**b1).clone(), (**b2).clone()));
                Ok(vec![st])
            }
            _ => Ok(vec![]),
        }
    }

    fn bind_s(&self, mut st: State, n: &str, t: Expr) -> Option<State> {
        if meta_names(&t).contains(n) {
            return None;
        }
        st.sub.bind_s(n, t);
        Some(st)
    }

    fn bind_d(&self, mut st: State, n: &str, c: Expr) -> Option<State> {
        if meta_names(&c).contains(n) {
            return None;
        }
        st.sub.bind_d(n, c);
        Some(st)
    }

    fn bind_e(&self, mut st: State, n: &str, items: Vec<EnvItem>) -> Option<State> {
        if items.iter().any(|it| matches!(it, EnvItem::EVar(m) if m == n))
            || items.iter().any(|it| match it {
                EnvItem::Binding(_, b) => meta_names(b).contains(n),
                _ => false,
            })
        {
            return None;
        }
        if items.is_empty() && self.known_nonempty_env(&st, n) {
            return None;
        }
        st.sub.bind_e(n, items);
        Some(st)
    }

    /// Context variable made empty.
    fn empty_ctx(&self, st: &State, n: &str) -> Option<State> {
        if self.known_nonempty_ctx(st, n) {
            return None;
        }
        self.bind_d(st.clone(), n, Expr::hole())
    }

    fn prefix(&self, k1: &str, k2: &str) -> Option<&(String, String)> {
        self.calc.prefix.get(&(k1.to_string(), k2.to_string()))
    }

    fn forks(&self, k1: &str, k2: &str) -> Option<&Vec<ForkEntry>> {
        self.calc.forks.get(&(k1.to_string(), k2.to_string()))
    }

    fn table_known(&self, k1: &str, k2: &str) -> bool {
        self.prefix(k1, k2).is_some()
            || self.prefix(k2, k1).is_some()
            || self.forks(k1, k2).is_some()
            || self.forks(k2, k1).is_some()
    }

    fn flex_flex(
        &self,
        st: State,
        (n1, k1, b1): (&String, &String, &Expr),
        (n2, k2, b2): (&String, &String, &Expr),
    ) -> Result<Vec<State>, SolveError> {
        if !self.table_known(k1, k2) {
            return Err(SolveError::ClassTableMissing(k1.clone(), k2.clone()));
        }
        let mut out = Vec::new();
        // both holes at the same position
        {
            let mut st = st.clone();
            let ok = if self.subset(k1, k2) {
                self.bind_d(st.clone(), n2, ctx_node(n1, k1)).map(|s| st = s).is_some()
            } else if self.subset(k2, k1) {
                self.bind_d(st.clone(), n1, ctx_node(n2, k2)).map(|s| st = s).is_some()
            } else if let Some((k3, _)) = self.prefix(k1, k2).cloned() {
                let d3 = self.fresh_ctx(&mut st, &k3, Expr::hole());
                match self
                    .bind_d(st.clone(), n1, d3.clone())
                    .and_then(|s| self.bind_d(s, n2, d3))
                {
                    Some(s) => {
                        st = s;
                        true
                    }
                    None => false,
                }
            } else {
                false
            };
            if ok {
                st.eqs.push(Equation::E(b1.clone(), b2.clone()));
                out.push(st);
            }
        }
        // one hole strictly above the other
        for (na, ka, ba, nb, kb, bb) in [(n1, k1, b1, n2, k2, b2), (n2, k2, b2, n1, k1, b1)] {
            if let Some((k3, k4)) = self.prefix(ka, kb).cloned() {
                let mut st = st.clone();
                let d3 = if &k3 == ka {
                    ctx_node(na, ka)
                } else {
                    self.fresh_ctx(&mut st, &k3, Expr::hole())
                };
                let d4 = self.fresh(&mut st, &k4);
                if self.mode == Mode::Unify {
                    st.assume.push(Constraints {
                        nonempty_ctx: vec![d4.clone()],
                        ..Default::default()
                    });
                }
                let d4_node = |body: Expr| Expr::Ctx {
                    name: d4.clone(),
                    class: k4.clone(),
                    body: Box::new(body),
                };
                let mut next = Some(st);
                if &k3 != ka {
                    next = next.and_then(|s| self.bind_d(s, na, d3.clone()));
                }
                next = next.and_then(|s| self.bind_d(s, nb, d3.fill(&d4_node(Expr::hole()))));
                if let Some(mut s) = next {
                    s.eqs.push(Equation::E(ba.clone(), d4_node(bb.clone())));
                    out.push(s);
                }
            }
        }
        // the hole paths fork
        let mut entries: Vec<(bool, ForkEntry)> = Vec::new();
        if let Some(es) = self.forks(k1, k2) {
            entries.extend(es.iter().cloned().map(|e| (false, e)));
        } else if let Some(es) = self.forks(k2, k1) {
            entries.extend(es.iter().cloned().map(|e| (true, e)));
        }
        for (swapped, entry) in entries {
            let ((na, ba), (nb, bb)) = if swapped {
                ((n2, b2), (n1, b1))
            } else {
                ((n1, b1), (n2, b2))
            };
            let mut st = st.clone();
            let template = self.instantiate_template(&mut st, &entry.template);
            let d4 = self.fresh(&mut st, &entry.k4);
            let d5 = self.fresh(&mut st, &entry.k5);
            let node = |n: &String, k: &String, b: Expr| Expr::Ctx {
                name: n.clone(),
                class: k.clone(),
                body: Box::new(b),
            };
            let img_a = template.map_holes(&|i| match i {
                1 => Some(node(&d4, &entry.k4, Expr::hole())),
                2 => Some(node(&d5, &entry.k5, bb.clone())),
                _ => None,
            });
            let img_b = template.map_holes(&|i| match i {
                1 => Some(node(&d4, &entry.k4, ba.clone())),
                2 => Some(node(&d5, &entry.k5, Expr::hole())),
                _ => None,
            });
            let d3 = self.fresh(&mut st, &entry.k3);
            let img_a = node(&d3, &entry.k3, img_a);
            let img_b = node(&d3, &entry.k3, img_b);
            if let Some(s) = self
                .bind_d(st, na, img_a)
                .and_then(|s| self.bind_d(s, nb, img_b))
            {
                out.push(s);
            }
        }
        Ok(out)
    }

    /// Fresh copies of the meta-variables of a fork template.
    fn instantiate_template(&self, st: &mut State, t: &Expr) -> Expr {
        let vars = meta_vars(t);
        let mut classes = BTreeMap::new();
        ctx_classes(t, &mut classes);
        let r = renaming(&vars, &classes, &mut st.used, false);
        st.fresh.extend(meta_names(&r.expr(t)));
        r.expr(t)
    }

    fn flex_rigid(
        &self,
        st: State,
        (n, k, b): (&String, &String, &Expr),
        (m, km, bm): (&String, &String, &Expr),
    ) -> Result<Vec<State>, SolveError> {
        let mut out = Vec::new();
        if self.subset(km, k) {
            if let Some(mut s) = self.bind_d(st.clone(), n, ctx_node(m, km)) {
                s.eqs.push(Equation::E(b.clone(), bm.clone()));
                out.push(s);
            }
        }
        if let Some(mut s) = self.empty_ctx(&st, n) {
            s.eqs.push(Equation::E(b.clone(), rigid_node(m, km, bm)));
            out.push(s);
        }
        if let Some((k3, k4)) = self.prefix(km, k).cloned() {
            if self.subset(km, &k3) {
                let mut s = st.clone();
                let d4 = self.fresh(&mut s, &k4);
                let d4_node = |body: Expr| Expr::Ctx {
                    name: d4.clone(),
                    class: k4.clone(),
                    body: Box::new(body),
                };
                if let Some(mut s) = self.bind_d(s, n, ctx_node(m, km).fill(&d4_node(Expr::hole()))) {
                    s.eqs.push(Equation::E(d4_node(b.clone()), bm.clone()));
                    out.push(s);
                }
            }
        } else if !self.table_known(km, k) {
            return Err(SolveError::ClassTableMissing(km.clone(), k.clone()));
        }
        Ok(out)
    }

    /// Flexible context `n[b]` against a non-context term.
    fn flex_term(
        &self,
        st: State,
        n: &str,
        k: &str,
        b: &Expr,
        t: &Expr,
    ) -> Result<Vec<State>, SolveError> {
        let mut out = Vec::new();
        if let Some(mut s) = self.empty_ctx(&st, n) {
            s.eqs.push(Equation::E(b.clone(), t.clone()));
            out.push(s);
        }
        let Some(class) = self.calc.class(k) else {
            return Ok(out);
        };
        for prod in &class.productions {
            if prod.is_hole() || !same_head(&prod.shape, t) {
                continue;
            }
            let mut s = st.clone();
            let vars = meta_vars(&prod.shape);
            let mut classes = BTreeMap::new();
            ctx_classes(&prod.shape, &mut classes);
            let r = renaming(&vars, &classes, &mut s.used, false);
            let shape = r.expr(&prod.shape);
            s.fresh.extend(meta_names(&shape));
            let guards = rename_constraints(&prod.guards, &r);
            // the recursive position is the single context node of the shape
            let img = shape;
            if let Some(mut s) = self.bind_d(s, n, img.clone()) {
                self.add_guard(&mut s, guards);
                s.eqs.push(Equation::E(img.fill(b), t.clone()));
                out.push(s);
            }
        }
        Ok(out)
    }

    fn env_step(
        &self,
        st: State,
        l: Vec<EnvItem>,
        r: Vec<EnvItem>,
    ) -> Result<Vec<State>, SolveError> {
        let mut l = st.sub.items(&l);
        let mut r = st.sub.items(&r);
        if l.iter().chain(&r).any(|it| matches!(it, EnvItem::Chain { .. })) {
            return Err(SolveError::ChainVariableUnsupported);
        }
        // cancel identical items
        let mut i = 0;
        while i < l.len() {
            if let Some(j) = r.iter().position(|x| *x == l[i]) {
                r.remove(j);
                l.remove(i);
            } else {
                i += 1;
            }
        }
        if l.is_empty() && r.is_empty() {
            return Ok(vec![st]);
        }
        if l.is_empty() || r.is_empty() {
            let other = if l.is_empty() { &r } else { &l };
            let mut cur = Some(st);
            for it in other {
                cur = match (cur, it) {
                    (Some(s), EnvItem::EVar(n)) if self.is_flex(&s, n) => {
                        self.bind_e(s, n, vec![])
                    }
                    _ => None,
                };
            }
            return Ok(cur.into_iter().collect());
        }
        // an explicit binding has to meet a binding or be absorbed by a variable
        let explicit_left = l.iter().position(|it| matches!(it, EnvItem::Binding(..)));
        let explicit_right = r.iter().position(|it| matches!(it, EnvItem::Binding(..)));
        let (a, b, idx) = match (explicit_left, explicit_right) {
            (Some(i), _) => (l, r, i),
            (None, Some(j)) => (r, l, j),
            (None, None) => return Ok(self.env_vars_only(st, l, r)),
        };
        let mut out = Vec::new();
        let item = a[idx].clone();
        let mut rest_a = a.clone();
        rest_a.remove(idx);
        for (j, other) in b.iter().enumerate() {
            match (&item, other) {
                (EnvItem::Binding(x, s), EnvItem::Binding(y, t)) => {
                    let mut st = st.clone();
                    let mut rest_b = b.clone();
                    rest_b.remove(j);
                    st.eqs.push(Equation::Env(rest_a.clone(), rest_b));
                    st.eqs.push(Equation::E(s.clone(), t.clone()));
                    st.eqs.push(Equation::V(x.clone(), y.clone()));
                    out.push(st);
                }
                (_, EnvItem::EVar(n)) if self.is_flex(&st, n) => {
                    let mut st = st.clone();
                    let e2 = self.fresh(&mut st, "E");
                    let img = vec![item.clone(), EnvItem::EVar(e2.clone())];
                    if let Some(mut s) = self.bind_e(st, n, img) {
                        let mut rest_b = b.clone();
                        rest_b.remove(j);
                        rest_b.push(EnvItem::EVar(e2));
                        s.eqs.push(Equation::Env(rest_a.clone(), rest_b));
                        out.push(s);
                    }
                }
                _ => {}
            }
        }
        Ok(out)
    }

    /// Both sides consist of environment variables only.
    fn env_vars_only(&self, st: State, l: Vec<EnvItem>, r: Vec<EnvItem>) -> Vec<State> {
        let name = |it: &EnvItem| match it {
            EnvItem::EVar(n) => n.clone(),
            _ => unreachable!(),
        };
        let ls: Vec<String> = l.iter().map(name).collect();
        let rs: Vec<String> = r.iter().map(name).collect();
        let flex_l: Vec<&String> = ls.iter().filter(|n| self.is_flex(&st, n)).collect();
        let flex_r: Vec<&String> = rs.iter().filter(|n| self.is_flex(&st, n)).collect();
        if ls.len() == 1 && flex_l.len() == 1 {
            return self.bind_e(st, &ls[0], r).into_iter().collect();
        }
        if rs.len() == 1 && flex_r.len() == 1 {
            return self.bind_e(st, &rs[0], l).into_iter().collect();
        }
        // a rigid variable goes wholly into one flexible variable of the other side
        let rigid_l = ls.iter().find(|n| !self.is_flex(&st, n));
        let rigid_r = rs.iter().find(|n| !self.is_flex(&st, n));
        let mut out = Vec::new();
        if let Some((rv, targets, from_left)) = rigid_l
            .map(|v| (v, &flex_r, true))
            .or_else(|| rigid_r.map(|v| (v, &flex_l, false)))
        {
            for t in targets.iter() {
                let mut s = st.clone();
                let rest = self.fresh(&mut s, "E");
                if let Some(mut s) = self.bind_e(
                    s,
                    t,
                    vec![EnvItem::EVar(rv.clone()), EnvItem::EVar(rest.clone())],
                ) {
                    s.eqs.push(if from_left {
                        Equation::Env(l.clone(), r.clone())
                    } else {
                        Equation::Env(r.clone(), l.clone())
                    });
                    out.push(s);
                }
            }
            return out;
        }
        // all flexible: distribute through a grid of fresh variables
        let mut s = st;
        let mut grid: Vec<Vec<String>> = Vec::new();
        for _ in &ls {
            let row: Vec<String> = rs.iter().map(|_| self.fresh(&mut s, "E")).collect();
            grid.push(row);
        }
        let mut cur = Some(s);
        for (i, n) in ls.iter().enumerate() {
            let img = grid[i].iter().map(|g| EnvItem::EVar(g.clone())).collect();
            cur = cur.and_then(|s| self.bind_e(s, n, img));
        }
        for (j, n) in rs.iter().enumerate() {
            let img = grid.iter().map(|row| EnvItem::EVar(row[j].clone())).collect();
            cur = cur.and_then(|s| self.bind_e(s, n, img));
        }
        cur.into_iter().collect()
    }

    /// Close a fully solved state: normalize assumptions or check needed
    /// constraints.
    fn finish(&self, st: State, p: &Problem) -> Result<Vec<Solution>, SolveError> {
        for (l, _) in &p.eqs {
            if !check_lvc(&st.sub.expr(l)) {
                return Ok(vec![]);
            }
        }
        let mut out = Vec::new();
        let mut work = vec![st];
        while let Some(st) = work.pop() {
            let assumed: Vec<_> = st.assume.iter().map(|c| st.sub.constraints(c)).collect();
            let facts = match entail::assume(&assumed) {
                Assumed::Contradiction => continue,
                Assumed::Branch(is_ctx, names) => {
                    // the first non-empty one among the group, earlier ones empty
                    for (i, n) in names.iter().enumerate() {
                        let mut s = st.clone();
                        let mut ok = true;
                        for m in &names[..i] {
                            let bound = if is_ctx {
                                self.bind_d(s.clone(), m, Expr::hole())
                            } else {
                                self.bind_e(s.clone(), m, vec![])
                            };
                            match bound {
                                Some(b) => s = b,
                                None => {
                                    ok = false;
                                    break;
                                }
                            }
                        }
                        if !ok {
                            continue;
                        }
                        let mut c = Constraints::default();
                        if is_ctx {
                            c.nonempty_ctx.push(n.clone());
                        } else {
                            c.nonempty_env.push(n.clone());
                        }
                        s.assume.push(c);
                        work.push(s);
                    }
                    continue;
                }
                Assumed::Facts(f) => f,
            };
            let facts = facts.union(&p.given);
            let scope: Vec<Expr> = p.scope.iter().map(|e| st.sub.expr(e)).collect();
            let needed_ok = st
                .needed
                .iter()
                .all(|c| entail::entails(&facts, &st.sub.constraints(c), &scope));
            if needed_ok {
                out.push(Solution {
                    sigma: st.sub.clone(),
                    facts,
                    used: st.used.clone(),
                });
            }
        }
        Ok(out)
    }
}

fn ctx_node(n: &str, k: &str) -> Expr {
    Expr::Ctx {
        name: n.to_string(),
        class: k.to_string(),
        body: Box::new(Expr::hole()),
    }
}

fn rigid_node(n: &str, k: &str, b: &Expr) -> Expr {
    Expr::Ctx {
        name: n.to_string(),
        class: k.to_string(),
        body: Box::new(b.clone()),
    }
}

fn same_head(shape: &Expr, t: &Expr) -> bool {
    match (shape, t) {
        (Expr::Fun(f, a), Expr::Fun(g, b)) => f == g && a.len() == b.len(),
        (Expr::Letrec(..), Expr::Letrec(..)) => true,
        _ => false,
    }
}

/// Context-variable classes occurring in an expression.
pub fn classes_of(e: &Expr) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    ctx_classes(e, &mut m);
    m
}

/// Rename the meta-variables of `e` (and its constraints) apart from `used`
/// by priming.
pub fn rename_apart(
    exprs: &[&Expr],
    cs: &[&Constraints],
    used: &mut BTreeSet<String>,
) -> (Vec<Expr>, Vec<Constraints>, Subst) {
    let mut vars = BTreeSet::new();
    let mut classes = BTreeMap::new();
    for e in exprs {
        vars.extend(meta_vars(e));
        ctx_classes(e, &mut classes);
    }
    for c in cs {
        vars.extend(c.meta_vars());
        for (s, d) in &c.ncc {
            ctx_classes(s, &mut classes);
            ctx_classes(d, &mut classes);
        }
    }
    let clash: BTreeSet<_> = vars.into_iter().filter(|v| used.contains(&v.name)).collect();
    for e in exprs {
        used.extend(meta_names(e));
    }
    let r = renaming(&clash, &classes, used, true);
    (
        exprs.iter().map(|e| r.expr(e)).collect(),
        cs.iter().map(|c| rename_constraints(c, &r)).collect(),
        r,
    )
}

/// Syntactic equality modulo the order of letrec environment items.
pub fn let_equal(a: &Expr, b: &Expr) -> bool {
    normalize_env_order(a) == normalize_env_order(b)
}

fn normalize_env_order(e: &Expr) -> Expr {
    match e {
        Expr::SVar(_) | Expr::Hole(_) => e.clone(),
        Expr::Ctx { name, class, body } => Expr::Ctx {
            name: name.clone(),
            class: class.clone(),
            body: Box::new(normalize_env_order(body)),
        },
        Expr::Letrec(env, body) => {
            let mut items: Vec<EnvItem> = env
                .items
                .iter()
                .map(|it| match it {
                    EnvItem::Binding(x, b) => EnvItem::Binding(x.clone(), normalize_env_order(b)),
                    o => o.clone(),
                })
                .collect();
            items.sort();
            Expr::Letrec(Env::new(items), Box::new(normalize_env_order(body)))
        }
        Expr::Fun(f, args) => Expr::Fun(
            f.clone(),
            args.iter()
                .map(|a| match a {
                    Arg::Expr(b) => Arg::Expr(normalize_env_order(b)),
                    Arg::Bind(xs, b) => Arg::Bind(xs.clone(), normalize_env_order(b)),
                    o => o.clone(),
                })
                .collect(),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse, parse_expr};

    fn simple() -> Calculus {
        parse(include_str!("../fixtures/simple.inp")).unwrap()
    }

    #[test]
    fn top_against_bot_has_two_unifiers() {
        let c = simple();
        let l = parse_expr(&c, "C[cap top S]").unwrap();
        let r = parse_expr(&c, "A[cap bot S2]").unwrap();
        let sols = unify(&c, &l, &Constraints::default(), &r, &Constraints::default()).unwrap();
        assert_eq!(sols.len(), 2, "{:?}", sols.iter().map(|s| s.sigma.to_string()).collect::<Vec<_>>());
        for s in &sols {
            assert_eq!(s.sigma.expr(&l), s.sigma.expr(&r));
        }
        let nesting = sols
            .iter()
            .any(|s| s.sigma.s.get("S2").is_some_and(|t| t.to_string().ends_with("[cap top S]")));
        assert!(nesting);
    }

    #[test]
    fn variable_against_constant() {
        let c = simple();
        let sols = unify(
            &c,
            &Expr::s("S"),
            &Constraints::default(),
            &Expr::constant("top"),
            &Constraints::default(),
        )
        .unwrap();
        assert_eq!(sols.len(), 1);
        assert_eq!(sols[0].sigma.s["S"], Expr::constant("top"));
        assert!(sols[0].facts.is_empty());
    }

    #[test]
    fn no_overlap_with_the_answer() {
        let c = simple();
        let l = parse_expr(&c, "C[cap top S]").unwrap();
        let sols = unify(&c, &l, &Constraints::default(), &Expr::constant("top"), &Constraints::default()).unwrap();
        assert!(sols.is_empty());
    }

    #[test]
    fn matching_under_a_rigid_context() {
        let c = simple();
        let pat = parse_expr(&c, "A[cap bot S]").unwrap();
        let target = parse_expr(&c, "A0[cap bot C1[S1]]").unwrap();
        let sols = match_expr(&c, &pat, &Constraints::default(), &target, &Facts::default(), &[]).unwrap();
        assert_eq!(sols.len(), 1);
        assert_eq!(sols[0].sigma.d["A"].to_string(), "A0[[.]]");
        assert_eq!(sols[0].sigma.s["S"].to_string(), "C1[S1]");
    }

    #[test]
    fn pattern_variable_matches_anything() {
        let c = simple();
        let target = parse_expr(&c, "neg (cap A1[bot] S)").unwrap();
        let sols = match_expr(&c, &Expr::s("P"), &Constraints::default(), &target, &Facts::default(), &[]).unwrap();
        assert_eq!(sols.len(), 1);
        assert_eq!(sols[0].sigma.s["P"], target);
    }

    #[test]
    fn rigid_variables_stay_fixed() {
        let c = simple();
        let sols = match_expr(&c, &Expr::constant("top"), &Constraints::default(), &Expr::s("S"), &Facts::default(), &[]).unwrap();
        assert!(sols.is_empty());
    }
}
