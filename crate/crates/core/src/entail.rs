//! Normalized constraint facts and a sound entailment check.

use std::collections::BTreeSet;
use std::fmt;

use crate::calculus::Constraints;
use crate::subst::{AppliedConstraints, Subst};
use crate::syntax::{
    atoms_of, capture_atoms, Arg, Atom, AtomicNcc, EnvItem, Expr, VarTerm,
};

/// Constraint knowledge in normal form: non-empty context and environment
/// variables plus atomic non-capture constraints.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Facts {
    pub nonempty_ctx: BTreeSet<String>,
    pub nonempty_env: BTreeSet<String>,
    pub ncc: BTreeSet<AtomicNcc>,
}

impl Facts {
    pub fn is_empty(&self) -> bool {
        self.nonempty_ctx.is_empty() && self.nonempty_env.is_empty() && self.ncc.is_empty()
    }

    pub fn union(&self, other: &Facts) -> Facts {
        let mut f = self.clone();
        f.nonempty_ctx.extend(other.nonempty_ctx.iter().cloned());
        f.nonempty_env.extend(other.nonempty_env.iter().cloned());
        f.ncc.extend(other.ncc.iter().cloned());
        f
    }

    /// Keep only facts about the given meta-variable names (concrete
    /// variables are always kept).
    pub fn restrict(&self, live: &BTreeSet<String>) -> Facts {
        let keep = |a: &Atom| match a {
            Atom::Var(VarTerm::Concrete(_)) => true,
            Atom::Var(VarTerm::Meta(n)) | Atom::S(n) | Atom::E(n) | Atom::D(n) | Atom::Ch(n) => {
                live.contains(n)
            }
        };
        Facts {
            nonempty_ctx: self
                .nonempty_ctx
                .iter()
                .filter(|n| live.contains(*n))
                .cloned()
                .collect(),
            nonempty_env: self
                .nonempty_env
                .iter()
                .filter(|n| live.contains(*n))
                .cloned()
                .collect(),
            ncc: self
                .ncc
                .iter()
                .filter(|c| keep(&c.u) && keep(&c.v))
                .cloned()
                .collect(),
        }
    }

    /// Rename meta-variables of the facts through a renaming substitution.
    pub fn rename(&self, r: &Subst) -> Facts {
        let d = |n: &String| match r.d.get(n) {
            Some(Expr::Ctx { name, .. }) => name.clone(),
            _ => n.clone(),
        };
        let e = |n: &String| match r.e.get(n).map(|v| v.as_slice()) {
            Some([EnvItem::EVar(m)]) => m.clone(),
            _ => n.clone(),
        };
        let atom = |a: &Atom| match a {
            Atom::Var(x) => Atom::Var(r.var(x)),
            Atom::S(n) => match r.s.get(n) {
                Some(Expr::SVar(m)) => Atom::S(m.clone()),
                _ => a.clone(),
            },
            Atom::D(n) => Atom::D(d(n)),
            Atom::E(n) => Atom::E(e(n)),
            Atom::Ch(n) => Atom::Ch(e(n)),
        };
        Facts {
            nonempty_ctx: self.nonempty_ctx.iter().map(d).collect(),
            nonempty_env: self.nonempty_env.iter().map(e).collect(),
            ncc: self
                .ncc
                .iter()
                .map(|c| AtomicNcc::new(atom(&c.u), atom(&c.v)))
                .collect(),
        }
    }
}

impl fmt::Display for Facts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        parts.extend(self.nonempty_ctx.iter().map(|d| format!("{d} /= [.]")));
        parts.extend(self.nonempty_env.iter().map(|e| format!("{e} /= {{}}")));
        parts.extend(self.ncc.iter().map(|c| c.to_string()));
        f.write_str(&parts.join(", "))
    }
}

/// Outcome of classifying a non-emptiness requirement on an image.
enum NonEmpty {
    Holds,
    Fails,
    OneOf(Vec<String>),
}

/// Context variables on the hole path of a context image, or `Holds` when a
/// constructor lies on the path.
fn ctx_nonempty(c: &Expr) -> NonEmpty {
    let mut names = Vec::new();
    let mut cur = c;
    loop {
        match cur {
            Expr::Hole(_) => break,
            Expr::Ctx { name, body, .. } => {
                names.push(name.clone());
                cur = body;
            }
            _ => return NonEmpty::Holds,
        }
    }
    if names.is_empty() {
        NonEmpty::Fails
    } else {
        NonEmpty::OneOf(names)
    }
}

fn env_nonempty(items: &[EnvItem]) -> NonEmpty {
    let mut names = Vec::new();
    for it in items {
        match it {
            EnvItem::EVar(n) => names.push(n.clone()),
            _ => return NonEmpty::Holds,
        }
    }
    if names.is_empty() {
        NonEmpty::Fails
    } else {
        NonEmpty::OneOf(names)
    }
}

/// Atomic constraints of `(s, d)`.
pub fn split(s: &Expr, d: &Expr) -> Vec<AtomicNcc> {
    let vs = capture_atoms(d);
    let mut out = Vec::new();
    for u in atoms_of(s) {
        for v in &vs {
            out.push(AtomicNcc::new(u.clone(), v.clone()));
        }
    }
    out
}

/// Result of assuming constraints: either a contradiction, or facts, or the
/// need to branch on which variable of a group is non-empty.
pub enum Assumed {
    Facts(Facts),
    Contradiction,
    /// One of these context (`true`) or environment (`false`) variables is
    /// non-empty; the caller branches.
    Branch(bool, Vec<String>),
}

/// Normalize assumed constraints (already under the substitution).
pub fn assume(all: &[AppliedConstraints]) -> Assumed {
    let mut facts = Facts::default();
    for c in all {
        for img in &c.nonempty_ctx {
            match ctx_nonempty(img) {
                NonEmpty::Holds => {}
                NonEmpty::Fails => return Assumed::Contradiction,
                NonEmpty::OneOf(ns) if ns.len() == 1 => {
                    facts.nonempty_ctx.insert(ns[0].clone());
                }
                NonEmpty::OneOf(ns) => {
                    if !ns.iter().any(|n| facts.nonempty_ctx.contains(n)) {
                        return Assumed::Branch(true, ns);
                    }
                }
            }
        }
        for img in &c.nonempty_env {
            match env_nonempty(img) {
                NonEmpty::Holds => {}
                NonEmpty::Fails => return Assumed::Contradiction,
                NonEmpty::OneOf(ns) if ns.len() == 1 => {
                    facts.nonempty_env.insert(ns[0].clone());
                }
                NonEmpty::OneOf(ns) => {
                    if !ns.iter().any(|n| facts.nonempty_env.contains(n)) {
                        return Assumed::Branch(false, ns);
                    }
                }
            }
        }
    }
    for c in all {
        for (s, d) in &c.ncc {
            for a in split(s, d) {
                match trivial(&a, &facts) {
                    Some(true) => {}
                    Some(false) => return Assumed::Contradiction,
                    None => {
                        facts.ncc.insert(a);
                    }
                }
            }
        }
    }
    Assumed::Facts(facts)
}

/// Decide an atomic constraint from its shape alone, if possible.
fn trivial(a: &AtomicNcc, facts: &Facts) -> Option<bool> {
    match (&a.u, &a.v) {
        (Atom::Var(VarTerm::Concrete(x)), Atom::Var(VarTerm::Concrete(y))) => Some(x != y),
        (Atom::Var(x), Atom::Var(y)) if x == y => Some(false),
        (Atom::E(x), Atom::E(y)) if x == y && facts.nonempty_env.contains(x) => Some(false),
        _ => None,
    }
}

/// Does `given` guarantee the needed constraints? `scope` lists expressions
/// whose ground instances satisfy the distinct variable convention.
pub fn entails(given: &Facts, needed: &AppliedConstraints, scope: &[Expr]) -> bool {
    unmet(given, needed, scope).is_none()
}

/// The first needed constraint that could not be established.
pub fn unmet(given: &Facts, needed: &AppliedConstraints, scope: &[Expr]) -> Option<String> {
    for img in &needed.nonempty_ctx {
        let ok = match ctx_nonempty(img) {
            NonEmpty::Holds => true,
            NonEmpty::Fails => false,
            NonEmpty::OneOf(ns) => ns.iter().any(|n| given.nonempty_ctx.contains(n)),
        };
        if !ok {
            return Some(format!("{img} /= [.]"));
        }
    }
    for img in &needed.nonempty_env {
        let ok = match env_nonempty(img) {
            NonEmpty::Holds => true,
            NonEmpty::Fails => false,
            NonEmpty::OneOf(ns) => ns.iter().any(|n| given.nonempty_env.contains(n)),
        };
        if !ok {
            return Some(format!("{} /= {{}}", crate::syntax::Env::new(img.clone())));
        }
    }
    for (s, d) in &needed.ncc {
        for a in split(s, d) {
            if !atomic_entailed(given, &a, scope) {
                return Some(a.to_string());
            }
        }
    }
    None
}

fn atomic_entailed(given: &Facts, a: &AtomicNcc, scope: &[Expr]) -> bool {
    if let Some(b) = trivial(a, given) {
        return b;
    }
    if given.ncc.contains(a) {
        return true;
    }
    if let (Atom::Var(_), Atom::Var(_)) = (&a.u, &a.v) {
        if given.ncc.contains(&AtomicNcc::new(a.v.clone(), a.u.clone())) {
            return true;
        }
    }
    // binders are distinct and disjoint from free variables in each scope expression
    scope.iter().any(|e| scope_separated(e, &a.u, &a.v))
}

/// Under the distinct variable convention for `e`: `v` occurs exactly once as
/// a binding construct and every occurrence of `u` lies outside its scope.
fn scope_separated(e: &Expr, u: &Atom, v: &Atom) -> bool {
    let mut regions = Vec::new();
    find_scopes(e, v, &mut regions);
    if regions.len() != 1 {
        return false;
    }
    let region = regions[0];
    let total = count_atom(e, u);
    if total == 0 {
        return false;
    }
    count_atom(region, u) == 0
}

/// Sub-expressions forming the scope of each binding occurrence of `v`.
fn find_scopes<'a>(e: &'a Expr, v: &Atom, out: &mut Vec<&'a Expr>) {
    let mut stack = vec![e];
    while let Some(cur) = stack.pop() {
        match cur {
            Expr::SVar(_) | Expr::Hole(_) => {}
            Expr::Ctx { name, body, .. } => {
                if *v == Atom::D(name.clone()) {
                    out.push(cur);
                }
                stack.push(body);
            }
            Expr::Letrec(env, body) => {
                let binds = env.items.iter().any(|it| match (it, v) {
                    (EnvItem::EVar(n), Atom::E(m)) => n == m,
                    (EnvItem::Binding(x, _), Atom::Var(y)) => x == y,
                    (EnvItem::Chain { name, .. }, Atom::Ch(m)) => name == m,
                    _ => false,
                });
                if binds {
                    out.push(cur);
                }
                for it in &env.items {
                    if let EnvItem::Binding(_, b) | EnvItem::Chain { body: b, .. } = it {
                        stack.push(b);
                    }
                }
                stack.push(body);
            }
            Expr::Fun(_, args) => {
                for a in args {
                    match a {
                        Arg::Var(_) => {}
                        Arg::Expr(b) => stack.push(b),
                        Arg::Bind(xs, b) => {
                            if let Atom::Var(y) = v {
                                if xs.contains(y) {
                                    out.push(cur);
                                }
                            }
                            stack.push(b);
                        }
                    }
                }
            }
        }
    }
}

fn count_atom(e: &Expr, u: &Atom) -> usize {
    let mut n = 0;
    count_atom_into(e, u, &mut n);
    n
}

fn count_atom_into(e: &Expr, u: &Atom, n: &mut usize) {
    match e {
        Expr::SVar(s) => {
            if *u == Atom::S(s.clone()) {
                *n += 1;
            }
        }
        Expr::Hole(_) => {}
        Expr::Ctx { name, body, .. } => {
            if *u == Atom::D(name.clone()) {
                *n += 1;
            }
            count_atom_into(body, u, n);
        }
        Expr::Letrec(env, body) => {
            for it in &env.items {
                match it {
                    EnvItem::EVar(m) => {
                        if *u == Atom::E(m.clone()) {
                            *n += 1;
                        }
                    }
                    EnvItem::Binding(x, b) => {
                        if *u == Atom::Var(x.clone()) {
                            *n += 1;
                        }
                        count_atom_into(b, u, n);
                    }
                    EnvItem::Chain { name, var, body, .. } => {
                        if *u == Atom::Ch(name.clone()) || *u == Atom::Var(var.clone()) {
                            *n += 1;
                        }
                        count_atom_into(body, u, n);
                    }
                }
            }
            count_atom_into(body, u, n);
        }
        Expr::Fun(_, args) => {
            for a in args {
                match a {
                    Arg::Var(x) => {
                        if *u == Atom::Var(x.clone()) {
                            *n += 1;
                        }
                    }
                    Arg::Expr(b) => count_atom_into(b, u, n),
                    Arg::Bind(xs, b) => {
                        for x in xs {
                            if *u == Atom::Var(x.clone()) {
                                *n += 1;
                            }
                        }
                        count_atom_into(b, u, n);
                    }
                }
            }
        }
    }
}

/// Constraints of a rule or guard under a substitution.
pub fn applied(sub: &Subst, c: &Constraints) -> AppliedConstraints {
    sub.constraints(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Env;

    fn letrec_e_hole() -> Expr {
        Expr::Letrec(Env::new(vec![EnvItem::EVar("E".into())]), Box::new(Expr::hole()))
    }

    #[test]
    fn identical_after_split() {
        let mut given = Facts::default();
        given
            .ncc
            .insert(AtomicNcc::new(Atom::S("S".into()), Atom::E("E".into())));
        let needed = AppliedConstraints {
            ncc: vec![(Expr::s("S"), letrec_e_hole())],
            ..Default::default()
        };
        assert!(entails(&given, &needed, &[]));
    }

    #[test]
    fn unconstrained_lambda_capture_is_not_entailed() {
        let needed = AppliedConstraints {
            ncc: vec![(
                Expr::s("S"),
                Expr::lam(VarTerm::Meta("X".into()), Expr::hole()),
            )],
            ..Default::default()
        };
        assert!(!entails(&Facts::default(), &needed, &[]));
    }

    #[test]
    fn scope_separation_under_dvc() {
        // S occurs outside the scope of the binder X
        let e = Expr::app(
            "app",
            vec![Expr::lam(VarTerm::Meta("X".into()), Expr::s("S1")), Expr::s("S2")],
        );
        let needed = AppliedConstraints {
            ncc: vec![(
                Expr::s("S2"),
                Expr::lam(VarTerm::Meta("X".into()), Expr::hole()),
            )],
            ..Default::default()
        };
        assert!(entails(&Facts::default(), &needed, &[e.clone()]));
        let needed_inside = AppliedConstraints {
            ncc: vec![(
                Expr::s("S1"),
                Expr::lam(VarTerm::Meta("X".into()), Expr::hole()),
            )],
            ..Default::default()
        };
        assert!(!entails(&Facts::default(), &needed_inside, &[e]));
    }

    #[test]
    fn nonemptiness_through_paths() {
        let mut given = Facts::default();
        given.nonempty_ctx.insert("A_2".into());
        let img = Expr::ctx("A_1", "A", Expr::ctx("A_2", "A", Expr::hole()));
        let needed = AppliedConstraints {
            nonempty_ctx: vec![img],
            ..Default::default()
        };
        assert!(entails(&given, &needed, &[]));
        assert!(!entails(&Facts::default(), &needed, &[]));
    }

    #[test]
    fn monotone_in_given() {
        let needed = AppliedConstraints {
            nonempty_env: vec![vec![EnvItem::EVar("E".into())]],
            ..Default::default()
        };
        let mut given = Facts::default();
        given.nonempty_env.insert("E".into());
        assert!(entails(&given, &needed, &[]));
        given.nonempty_ctx.insert("D".into());
        assert!(entails(&given, &needed, &[]));
    }
}
