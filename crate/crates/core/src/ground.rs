//! Ground expressions: canonical forms up to renaming and binding order,
//! exhaustive enumeration, concrete rule application and convergence.

use std::collections::{BTreeMap, BTreeSet};

use crate::calculus::{ArgKind, Calculus, Constraints, Rule};
use crate::subst::Subst;
use crate::syntax::{
    captured_vars, check_lvc, variable_sets, Arg, Env, EnvItem, Expr, VarTerm, VAR_SYMBOL,
};

/// Upper bound on binding-order permutations tried for one canonical form.
const MAX_PERMUTATIONS: usize = 5040;

/// Canonical representative of the ~α class of a ground expression:
/// binders become `x1, x2, ...` in traversal order, free variables
/// `y1, y2, ...` by first occurrence, and letrec bindings take the order
/// giving the least result.
pub fn canonical(e: &Expr) -> Expr {
    let variants = binding_orders(e, MAX_PERMUTATIONS);
    variants
        .iter()
        .map(rename_canonically)
        .min()
        .expect("at least one ordering")
}

pub fn alpha_let_equiv(a: &Expr, b: &Expr) -> bool {
    canonical(a) == canonical(b)
}

fn permutations<T: Clone>(v: &[T]) -> Vec<Vec<T>> {
    if v.len() <= 1 {
        return vec![v.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..v.len() {
        let mut rest = v.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x.clone());
            out.push(p);
        }
    }
    out
}

fn product<T: Clone>(parts: Vec<Vec<T>>, cap: usize) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = vec![vec![]];
    for p in parts {
        let mut next = Vec::new();
        'outer: for prefix in &out {
            for x in &p {
                let mut v = prefix.clone();
                v.push(x.clone());
                next.push(v);
                if next.len() >= cap {
                    break 'outer;
                }
            }
        }
        out = next;
    }
    out
}

/// All rearrangements of letrec bindings (bounded by `cap`).
fn binding_orders(e: &Expr, cap: usize) -> Vec<Expr> {
    match e {
        Expr::SVar(_) | Expr::Hole(_) => vec![e.clone()],
        Expr::Ctx { name, class, body } => binding_orders(body, cap)
            .into_iter()
            .map(|b| Expr::Ctx { name: name.clone(), class: class.clone(), body: Box::new(b) })
            .collect(),
        Expr::Fun(f, args) => {
            let parts: Vec<Vec<Arg>> = args
                .iter()
                .map(|a| match a {
                    Arg::Var(_) => vec![a.clone()],
                    Arg::Expr(b) => binding_orders(b, cap).into_iter().map(Arg::Expr).collect(),
                    Arg::Bind(xs, b) => binding_orders(b, cap)
                        .into_iter()
                        .map(|b| Arg::Bind(xs.clone(), b))
                        .collect(),
                })
                .collect();
            product(parts, cap)
                .into_iter()
                .map(|args| Expr::Fun(f.clone(), args))
                .collect()
        }
        Expr::Letrec(env, body) => {
            let mut parts: Vec<Vec<EnvItem>> = Vec::new();
            for it in &env.items {
                parts.push(match it {
                    EnvItem::Binding(x, b) => binding_orders(b, cap)
                        .into_iter()
                        .map(|b| EnvItem::Binding(x.clone(), b))
                        .collect(),
                    other => vec![other.clone()],
                });
            }
            let bodies = binding_orders(body, cap);
            let mut out = Vec::new();
            for items in product(parts, cap) {
                for perm in permutations(&items) {
                    for b in &bodies {
                        out.push(Expr::Letrec(Env::new(perm.clone()), Box::new(b.clone())));
                        if out.len() >= cap {
                            return out;
                        }
                    }
                }
            }
            out
        }
    }
}

#[derive(Default)]
struct Renamer {
    scope: Vec<(String, String)>,
    free: BTreeMap<String, String>,
    bound: usize,
}

impl Renamer {
    fn use_var(&mut self, x: &VarTerm) -> VarTerm {
        let VarTerm::Concrete(n) = x else { return x.clone() };
        if let Some((_, m)) = self.scope.iter().rev().find(|(o, _)| o == n) {
            return VarTerm::Concrete(m.clone());
        }
        let k = self.free.len() + 1;
        let m = self.free.entry(n.clone()).or_insert_with(|| format!("y{k}"));
        VarTerm::Concrete(m.clone())
    }

    fn bind(&mut self, x: &VarTerm) -> VarTerm {
        let VarTerm::Concrete(n) = x else { return x.clone() };
        self.bound += 1;
        let m = format!("x{}", self.bound);
        self.scope.push((n.clone(), m.clone()));
        VarTerm::Concrete(m)
    }

    fn expr(&mut self, e: &Expr) -> Expr {
        match e {
            Expr::SVar(_) | Expr::Hole(_) => e.clone(),
            Expr::Ctx { name, class, body } => Expr::Ctx {
                name: name.clone(),
                class: class.clone(),
                body: Box::new(self.expr(body)),
            },
            Expr::Fun(f, args) => Expr::Fun(
                f.clone(),
                args.iter()
                    .map(|a| match a {
                        Arg::Var(x) => Arg::Var(self.use_var(x)),
                        Arg::Expr(b) => Arg::Expr(self.expr(b)),
                        Arg::Bind(xs, b) => {
                            let n = self.scope.len();
                            let ys = xs.iter().map(|x| self.bind(x)).collect();
                            let b = self.expr(b);
                            self.scope.truncate(n);
                            Arg::Bind(ys, b)
                        }
                    })
                    .collect(),
            ),
            Expr::Letrec(env, body) => {
                let n = self.scope.len();
                let names: Vec<Option<VarTerm>> = env
                    .items
                    .iter()
                    .map(|it| match it {
                        EnvItem::Binding(x, _) => Some(self.bind(x)),
                        _ => None,
                    })
                    .collect();
                let items = env
                    .items
                    .iter()
                    .zip(names)
                    .map(|(it, nm)| match (it, nm) {
                        (EnvItem::Binding(_, b), Some(y)) => EnvItem::Binding(y, self.expr(b)),
                        (other, _) => other.clone(),
                    })
                    .collect();
                let b = self.expr(body);
                self.scope.truncate(n);
                Expr::Letrec(Env::new(items), Box::new(b))
            }
        }
    }
}

fn rename_canonically(e: &Expr) -> Expr {
    Renamer::default().expr(e)
}

/// Whether letrec occurs, and the function symbols occurring, in the rules,
/// answers and class productions. Variables come along with binders.
fn used_syntax(calc: &Calculus) -> (bool, BTreeSet<String>) {
    let mut found = false;
    let mut syms = BTreeSet::new();
    let mut look = |e: &Expr| {
        e.walk(&mut |s| match s {
            Expr::Letrec(..) => found = true,
            Expr::Fun(f, _) => {
                syms.insert(f.clone());
            }
            _ => {}
        })
    };
    for r in calc.all_rules() {
        look(&r.lhs);
        look(&r.rhs);
    }
    for a in &calc.answers {
        look(&a.expr);
    }
    for c in &calc.classes {
        for p in &c.productions {
            look(&p.shape);
        }
    }
    let binders = found
        || syms.iter().any(|f| {
            calc.symbols
                .get(f)
                .is_some_and(|ks| ks.iter().any(|k| matches!(k, ArgKind::Expr(n) if *n > 0)))
        });
    if binders {
        syms.insert(VAR_SYMBOL.to_string());
    }
    (found, syms)
}

#[derive(Clone, Copy)]
struct GenState {
    free: usize,
    bound: usize,
}

struct Generator<'a> {
    symbols: Vec<(&'a String, &'a Vec<ArgKind>)>,
    letrec: bool,
}

impl Generator<'_> {
    fn exprs(&self, size: usize, scope: &[String], st: GenState) -> Vec<(Expr, GenState)> {
        let mut out = Vec::new();
        if size == 0 {
            return out;
        }
        for (f, kinds) in &self.symbols {
            for (args, st2) in self.args(kinds, size - 1, scope, st) {
                out.push((Expr::Fun((*f).clone(), args), st2));
            }
        }
        if self.letrec && size >= 3 {
            // 1 for the letrec node, at least 1 for the body and each binding
            for m in 1..=(size - 2) {
                let mut st2 = st;
                let mut inner = scope.to_vec();
                let mut binders = Vec::new();
                for _ in 0..m {
                    st2.bound += 1;
                    let x = format!("x{}", st2.bound);
                    inner.push(x.clone());
                    binders.push(x);
                }
                for (rhss, st3) in self.seq(m + 1, size - 1, &inner, st2) {
                    let mut rhss = rhss;
                    let body = rhss.pop().expect("body");
                    let items = binders
                        .iter()
                        .zip(rhss)
                        .map(|(x, r)| EnvItem::Binding(VarTerm::Concrete(x.clone()), r))
                        .collect();
                    out.push((Expr::Letrec(Env::new(items), Box::new(body)), st3));
                }
            }
        }
        out
    }

    /// `n` expressions with sizes summing to `total`, threaded left to right.
    fn seq(&self, n: usize, total: usize, scope: &[String], st: GenState) -> Vec<(Vec<Expr>, GenState)> {
        if n == 0 {
            return if total == 0 { vec![(vec![], st)] } else { vec![] };
        }
        let mut out = Vec::new();
        for first in 1..=total.saturating_sub(n - 1) {
            for (e, st2) in self.exprs(first, scope, st) {
                for (mut rest, st3) in self.seq(n - 1, total - first, scope, st2) {
                    rest.insert(0, e.clone());
                    out.push((rest, st3));
                }
            }
        }
        out
    }

    fn args(&self, kinds: &[ArgKind], total: usize, scope: &[String], st: GenState) -> Vec<(Vec<Arg>, GenState)> {
        let Some((k, rest)) = kinds.split_first() else {
            return if total == 0 { vec![(vec![], st)] } else { vec![] };
        };
        let mut out = Vec::new();
        match k {
            ArgKind::Var => {
                let mut choices: Vec<(String, GenState)> = scope.iter().map(|x| (x.clone(), st)).collect();
                for i in 1..=st.free {
                    choices.push((format!("y{i}"), st));
                }
                choices.push((format!("y{}", st.free + 1), GenState { free: st.free + 1, ..st }));
                for (x, st2) in choices {
                    for (mut more, st3) in self.args(rest, total, scope, st2) {
                        more.insert(0, Arg::Var(VarTerm::Concrete(x.clone())));
                        out.push((more, st3));
                    }
                }
            }
            ArgKind::Expr(nb) => {
                let min_rest = rest.iter().filter(|k| matches!(k, ArgKind::Expr(_))).count();
                for here in 1..=total.saturating_sub(min_rest) {
                    let mut st2 = st;
                    let mut inner = scope.to_vec();
                    let mut xs = Vec::new();
                    for _ in 0..*nb {
                        st2.bound += 1;
                        let x = format!("x{}", st2.bound);
                        inner.push(x.clone());
                        xs.push(VarTerm::Concrete(x));
                    }
                    for (e, st3) in self.exprs(here, &inner, st2) {
                        for (mut more, st4) in self.args(rest, total - here, scope, st3) {
                            let a = if *nb == 0 { Arg::Expr(e.clone()) } else { Arg::Bind(xs.clone(), e.clone()) };
                            more.insert(0, a);
                            out.push((more, st4));
                        }
                    }
                }
            }
        }
        out
    }
}

/// All ground expressions of size 1..=max_size, one per ~α class, ordered
/// by size and then structurally.
pub fn enumerate_ground(calc: &Calculus, max_size: usize) -> Vec<Expr> {
    let (letrec, used) = used_syntax(calc);
    let g = Generator {
        symbols: calc.symbols.iter().filter(|(f, _)| used.contains(*f)).collect(),
        letrec,
    };
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for size in 1..=max_size {
        let mut layer = BTreeSet::new();
        for (e, _) in g.exprs(size, &[], GenState { free: 0, bound: 0 }) {
            let c = canonical(&e);
            if seen.insert(c.clone()) {
                layer.insert(c);
            }
        }
        out.extend(layer);
    }
    out
}

/// Decompositions `e = c[sub]` with the hole of `c` at an expression
/// position; the root decomposition comes first.
pub fn decompositions(e: &Expr) -> Vec<(Expr, Expr)> {
    let mut out = vec![(Expr::hole(), e.clone())];
    match e {
        Expr::Fun(f, args) => {
            for (i, a) in args.iter().enumerate() {
                let (inner, rebuild): (&Expr, Box<dyn Fn(Expr) -> Arg>) = match a {
                    Arg::Var(_) => continue,
                    Arg::Expr(b) => (b, Box::new(Arg::Expr)),
                    Arg::Bind(xs, b) => {
                        let xs = xs.clone();
                        (b, Box::new(move |c| Arg::Bind(xs.clone(), c)))
                    }
                };
                for (c, sub) in decompositions(inner) {
                    let mut args2 = args.clone();
                    args2[i] = rebuild(c);
                    out.push((Expr::Fun(f.clone(), args2), sub));
                }
            }
        }
        Expr::Letrec(env, body) => {
            for (i, it) in env.items.iter().enumerate() {
                if let EnvItem::Binding(x, b) = it {
                    for (c, sub) in decompositions(b) {
                        let mut items = env.items.clone();
                        items[i] = EnvItem::Binding(x.clone(), c);
                        out.push((Expr::Letrec(Env::new(items), body.clone()), sub));
                    }
                }
            }
            for (c, sub) in decompositions(body) {
                out.push((Expr::Letrec(env.clone(), Box::new(c)), sub));
            }
        }
        Expr::Ctx { .. } | Expr::SVar(_) | Expr::Hole(_) => {}
    }
    out
}

/// Concrete pattern matching of meta-expressions against ground ones.
pub struct Matcher<'a> {
    pub calc: &'a Calculus,
}

impl Matcher<'_> {
    /// Does the ground context `c` belong to class `k`?
    pub fn in_class(&self, c: &Expr, k: &str) -> bool {
        let Some(def) = self.calc.class(k) else { return false };
        def.productions.iter().any(|p| {
            if p.is_hole() {
                return c.is_hole();
            }
            if c.is_hole() {
                return false;
            }
            self.matches(&p.shape, c, Subst::default())
                .into_iter()
                .any(|rho| satisfies(&rho, &p.guards))
        })
    }

    /// All matchers of `pat` against `g` extending `rho`.
    pub fn matches(&self, pat: &Expr, g: &Expr, rho: Subst) -> Vec<Subst> {
        match pat {
            Expr::SVar(n) => match rho.s.get(n) {
                Some(b) => if b == g { vec![rho] } else { vec![] },
                None => {
                    let mut r = rho;
                    r.s.insert(n.clone(), g.clone());
                    vec![r]
                }
            },
            Expr::Hole(k) => if g == &Expr::Hole(*k) { vec![rho] } else { vec![] },
            Expr::Ctx { name, class, body } => {
                let mut out = Vec::new();
                for (c, sub) in decompositions(g) {
                    match rho.d.get(name) {
                        Some(bound) if *bound != c => continue,
                        Some(_) => out.extend(self.matches(body, &sub, rho.clone())),
                        None => {
                            if !self.in_class(&c, class) {
                                continue;
                            }
                            let mut r = rho.clone();
                            r.d.insert(name.clone(), c);
                            out.extend(self.matches(body, &sub, r));
                        }
                    }
                }
                out
            }
            Expr::Fun(f, pargs) => {
                let Expr::Fun(h, gargs) = g else { return vec![] };
                if f != h || pargs.len() != gargs.len() {
                    return vec![];
                }
                let mut acc = vec![rho];
                for (p, a) in pargs.iter().zip(gargs) {
                    let mut next = Vec::new();
                    for r in acc {
                        next.extend(self.match_arg(p, a, r));
                    }
                    acc = next;
                }
                acc
            }
            Expr::Letrec(penv, pbody) => {
                let Expr::Letrec(genv, gbody) = g else { return vec![] };
                let mut out = Vec::new();
                for r in self.match_env(&penv.items, genv.items.clone(), rho) {
                    out.extend(self.matches(pbody, gbody, r));
                }
                out
            }
        }
    }

    fn match_var(&self, p: &VarTerm, g: &VarTerm, mut rho: Subst) -> Option<Subst> {
        match p {
            VarTerm::Concrete(_) => (p == g).then_some(rho),
            VarTerm::Meta(n) => match rho.x.get(n) {
                Some(b) => (b == g).then_some(rho),
                None => {
                    rho.x.insert(n.clone(), g.clone());
                    Some(rho)
                }
            },
        }
    }

    fn match_arg(&self, p: &Arg, a: &Arg, rho: Subst) -> Vec<Subst> {
        match (p, a) {
            (Arg::Var(x), Arg::Var(y)) => self.match_var(x, y, rho).into_iter().collect(),
            (Arg::Expr(pe), Arg::Expr(ge)) => self.matches(pe, ge, rho),
            (Arg::Bind(xs, pe), Arg::Bind(ys, ge)) if xs.len() == ys.len() => {
                let mut r = Some(rho);
                for (x, y) in xs.iter().zip(ys) {
                    r = r.and_then(|r| self.match_var(x, y, r));
                }
                match r {
                    Some(r) => self.matches(pe, ge, r),
                    None => vec![],
                }
            }
            _ => vec![],
        }
    }

    fn match_env(&self, pitems: &[EnvItem], mut rest: Vec<EnvItem>, rho: Subst) -> Vec<Subst> {
        // bound environment variables consume their image first
        let mut free_evars = Vec::new();
        let mut bindings = Vec::new();
        for it in pitems {
            match it {
                EnvItem::EVar(n) => match rho.e.get(n) {
                    Some(img) => {
                        for item in img {
                            let Some(k) = rest.iter().position(|g| g == item) else { return vec![] };
                            rest.remove(k);
                        }
                    }
                    None => free_evars.push(n.clone()),
                },
                EnvItem::Binding(..) => bindings.push(it.clone()),
                EnvItem::Chain { .. } => return vec![],
            }
        }
        let mut out = Vec::new();
        self.match_bindings(&bindings, rest, rho, &free_evars, &mut out);
        out
    }

    fn match_bindings(
        &self,
        pats: &[EnvItem],
        rest: Vec<EnvItem>,
        rho: Subst,
        evars: &[String],
        out: &mut Vec<Subst>,
    ) {
        let Some((first, more)) = pats.split_first() else {
            distribute(evars, &rest, rho, out);
            return;
        };
        let EnvItem::Binding(px, pe) = first else { unreachable!() };
        for (k, g) in rest.iter().enumerate() {
            let EnvItem::Binding(gx, ge) = g else { continue };
            let Some(r) = self.match_var(px, gx, rho.clone()) else { continue };
            for r2 in self.matches(pe, ge, r) {
                let mut rest2 = rest.clone();
                rest2.remove(k);
                self.match_bindings(more, rest2, r2, evars, out);
            }
        }
    }
}

/// Assign the remaining bindings to the unbound environment variables.
fn distribute(evars: &[String], rest: &[EnvItem], rho: Subst, out: &mut Vec<Subst>) {
    match evars {
        [] => {
            if rest.is_empty() {
                out.push(rho);
            }
        }
        [only] => {
            let mut r = rho;
            r.e.insert(only.clone(), rest.to_vec());
            out.push(r);
        }
        _ => {
            let n = evars.len();
            let total = n.pow(rest.len() as u32);
            for code in 0..total {
                let mut parts: Vec<Vec<EnvItem>> = vec![vec![]; n];
                let mut c = code;
                for it in rest {
                    parts[c % n].push(it.clone());
                    c /= n;
                }
                let mut r = rho.clone();
                for (v, p) in evars.iter().zip(parts) {
                    r.e.insert(v.clone(), p);
                }
                out.push(r);
            }
        }
    }
}

/// Free variables of a ground expression; holes contribute nothing.
fn free_vars(e: &Expr) -> BTreeSet<VarTerm> {
    variable_sets(e).free
}

/// Concrete check of a constraint tuple under a ground substitution.
pub fn satisfies(rho: &Subst, c: &Constraints) -> bool {
    c.nonempty_ctx.iter().all(|d| rho.d.get(d).is_some_and(|img| !img.is_hole()))
        && c.nonempty_env.iter().all(|e| rho.e.get(e).is_some_and(|img| !img.is_empty()))
        && c.ncc.iter().all(|(s, d)| {
            let (s, d) = (rho.expr(s), rho.expr(d));
            let captured = captured_vars(&d).vars;
            free_vars(&s).is_disjoint(&captured)
        })
}

/// One concrete rewrite step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundStep {
    pub source: Expr,
    pub rule: String,
    pub target: Expr,
    pub matcher: Subst,
}

/// All results of applying `rule` to `e`, up to ~α. The source is first
/// brought into canonical form, which satisfies the distinct variable
/// convention.
pub fn ground_apply(calc: &Calculus, rule: &Rule, e: &Expr) -> Vec<GroundStep> {
    let src = canonical(e);
    let m = Matcher { calc };
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for rho in m.matches(&rule.lhs, &src, Subst::default()) {
        if !satisfies(&rho, &rule.delta) {
            continue;
        }
        let t = rho.expr(&rule.rhs);
        if !t.is_ground() || !check_lvc(&t) {
            continue;
        }
        let c = canonical(&t);
        if seen.insert(c.clone()) {
            out.push(GroundStep { source: src.clone(), rule: rule.full_name(), target: c, matcher: rho });
        }
    }
    out
}

pub fn is_answer(calc: &Calculus, e: &Expr) -> bool {
    let m = Matcher { calc };
    calc.answers.iter().any(|a| {
        m.matches(&a.expr, e, Subst::default())
            .iter()
            .any(|rho| satisfies(rho, &a.delta))
    })
}

/// Standard-reduction successors of `e` with the rule producing each.
pub fn sr_steps(calc: &Calculus, e: &Expr) -> Vec<GroundStep> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for r in &calc.sr_rules {
        for st in ground_apply(calc, r, e) {
            if seen.insert(st.target.clone()) {
                out.push(st);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Convergence {
    /// Reduction sequence ending in an answer.
    Converges(Vec<GroundStep>),
    /// No sequence within fuel reaches an answer and all were explored.
    Diverges,
    FuelExhausted,
}

impl Convergence {
    pub fn converges(&self) -> bool {
        matches!(self, Convergence::Converges(_))
    }
}

/// Search for a standard reduction sequence of at most `fuel` steps
/// ending in an answer.
pub fn converges(calc: &Calculus, e: &Expr, fuel: usize) -> Convergence {
    let start = canonical(e);
    let mut layer: Vec<(Expr, Vec<GroundStep>)> = vec![(start, vec![])];
    let mut seen = BTreeSet::new();
    for _ in 0..=fuel {
        let mut next = Vec::new();
        for (x, path) in layer {
            if is_answer(calc, &x) {
                return Convergence::Converges(path);
            }
            if !seen.insert(x.clone()) {
                continue;
            }
            for st in sr_steps(calc, &x) {
                let mut p = path.clone();
                let t = st.target.clone();
                p.push(st);
                next.push((t, p));
            }
        }
        if next.is_empty() {
            return Convergence::Diverges;
        }
        layer = next;
    }
    Convergence::FuelExhausted
}

/// Expressions with more than one standard-reduction successor.
pub fn check_determinism(calc: &Calculus, exprs: &[Expr]) -> Vec<(Expr, Vec<Expr>)> {
    use rayon::prelude::*;
    exprs
        .par_iter()
        .filter_map(|e| {
            let succ: Vec<Expr> = sr_steps(calc, e).into_iter().map(|s| s.target).collect();
            (succ.len() > 1).then(|| (e.clone(), succ))
        })
        .collect()
}

/// Ground expression without meta-variables built from concrete parts.
pub fn var_expr(x: &str) -> Expr {
    Expr::Fun(VAR_SYMBOL.into(), vec![Arg::Var(VarTerm::Concrete(x.into()))])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse, parse_expr};

    fn simple() -> Calculus {
        parse(include_str!("../fixtures/simple.inp")).unwrap()
    }

    /// Independent count of Simple expressions by size: constants, negation
    /// and binary conjunction.
    fn simple_count(n: usize) -> usize {
        let mut c = vec![0usize; n + 1];
        for k in 1..=n {
            c[k] = if k == 1 { 2 } else { c[k - 1] };
            for i in 1..k.saturating_sub(1) {
                c[k] += c[i] * c[k - 1 - i];
            }
        }
        c[1..].iter().sum()
    }

    #[test]
    fn enumeration_counts_follow_the_grammar() {
        let c = simple();
        assert_eq!(enumerate_ground(&c, 0).len(), 0);
        assert_eq!(enumerate_ground(&c, 2).len(), 4);
        assert_eq!(enumerate_ground(&c, 3).len(), 10);
        for n in 4..=6 {
            assert_eq!(enumerate_ground(&c, n).len(), simple_count(n));
        }
    }

    #[test]
    fn neg_bot_step_inside_a_conjunction() {
        let c = simple();
        let e = parse_expr(&c, "cap (cap (neg bot) top) (neg (cap top bot))").unwrap();
        let rule = c.sr_rules.iter().find(|r| r.full_name() == "SR,neg,2").unwrap();
        let steps = ground_apply(&c, rule, &e);
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].target.to_string(), "cap (cap top top) (neg (cap top bot))");
    }

    #[test]
    fn five_step_convergence() {
        let c = simple();
        let e = parse_expr(&c, "cap (cap (neg bot) top) (neg (cap top bot))").unwrap();
        let Convergence::Converges(seq) = converges(&c, &e, 5) else { panic!() };
        assert_eq!(seq.len(), 5);
        assert_eq!(seq.last().unwrap().target.to_string(), "top");
        assert!(!converges(&c, &e, 4).converges());
        assert!(!converges(&c, &Expr::constant("bot"), 3).converges());
        assert_eq!(converges(&c, &Expr::constant("top"), 0), Convergence::Converges(vec![]));
    }

    #[test]
    fn answers_are_irreducible() {
        let c = simple();
        assert!(sr_steps(&c, &Expr::constant("top")).is_empty());
    }

    #[test]
    fn renaming_and_binding_order() {
        let lam = |x: &str, b: Expr| Expr::lam(VarTerm::Concrete(x.into()), b);
        assert!(alpha_let_equiv(&lam("x", var_expr("x")), &lam("y", var_expr("y"))));
        assert!(!alpha_let_equiv(&lam("x", lam("y", var_expr("x"))), &lam("x", lam("y", var_expr("y")))));
        let b = |x: &str, e: Expr| EnvItem::Binding(VarTerm::Concrete(x.into()), e);
        let l1 = Expr::letrec(vec![b("x", Expr::constant("top")), b("y", Expr::constant("bot"))], var_expr("x"));
        let l2 = Expr::letrec(vec![b("y", Expr::constant("bot")), b("x", Expr::constant("top"))], var_expr("x"));
        assert!(alpha_let_equiv(&l1, &l2));
    }
}
