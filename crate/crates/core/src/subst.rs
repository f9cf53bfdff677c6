//! Substitutions for meta-variables and their application.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::calculus::Constraints;
use crate::syntax::{meta_vars, Arg, Env, EnvItem, Expr, MetaKind, MetaVar, VarTerm};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Subst {
    pub s: BTreeMap<String, Expr>,
    pub x: BTreeMap<String, VarTerm>,
    /// Context images, each with a single `[.]`.
    pub d: BTreeMap<String, Expr>,
    pub e: BTreeMap<String, Vec<EnvItem>>,
}

impl Subst {
    pub fn is_empty(&self) -> bool {
        self.s.is_empty() && self.x.is_empty() && self.d.is_empty() && self.e.is_empty()
    }

    pub fn var(&self, v: &VarTerm) -> VarTerm {
        match v {
            VarTerm::Meta(n) => self.x.get(n).cloned().unwrap_or_else(|| v.clone()),
            _ => v.clone(),
        }
    }

    pub fn expr(&self, e: &Expr) -> Expr {
        match e {
            Expr::SVar(n) => self.s.get(n).cloned().unwrap_or_else(|| e.clone()),
            Expr::Hole(_) => e.clone(),
            Expr::Ctx { name, class, body } => {
                let b = self.expr(body);
                match self.d.get(name) {
                    Some(c) => c.fill(&b),
                    None => Expr::Ctx {
                        name: name.clone(),
                        class: class.clone(),
                        body: Box::new(b),
                    },
                }
            }
            Expr::Letrec(env, body) => Expr::Letrec(self.env(env), Box::new(self.expr(body))),
            Expr::Fun(f, args) => Expr::Fun(
                f.clone(),
                args.iter()
                    .map(|a| match a {
                        Arg::Var(x) => Arg::Var(self.var(x)),
                        Arg::Expr(b) => Arg::Expr(self.expr(b)),
                        Arg::Bind(xs, b) => {
                            Arg::Bind(xs.iter().map(|x| self.var(x)).collect(), self.expr(b))
                        }
                    })
                    .collect(),
            ),
        }
    }

    pub fn env(&self, env: &Env) -> Env {
        let mut items = Vec::new();
        for it in &env.items {
            match it {
                EnvItem::EVar(n) => match self.e.get(n) {
                    Some(img) => items.extend(img.iter().cloned()),
                    None => items.push(it.clone()),
                },
                EnvItem::Chain {
                    name,
                    class,
                    var,
                    body,
                } => items.push(EnvItem::Chain {
                    name: name.clone(),
                    class: class.clone(),
                    var: self.var(var),
                    body: self.expr(body),
                }),
                EnvItem::Binding(x, b) => items.push(EnvItem::Binding(self.var(x), self.expr(b))),
            }
        }
        Env::new(items)
    }

    pub fn items(&self, items: &[EnvItem]) -> Vec<EnvItem> {
        self.env(&Env::new(items.to_vec())).items
    }

    pub fn constraints(&self, c: &Constraints) -> AppliedConstraints {
        AppliedConstraints {
            nonempty_ctx: c
                .nonempty_ctx
                .iter()
                .map(|d| self.d.get(d).cloned().unwrap_or_else(|| ctx_var(d)))
                .collect(),
            nonempty_env: c
                .nonempty_env
                .iter()
                .map(|n| {
                    self.e
                        .get(n)
                        .cloned()
                        .unwrap_or_else(|| vec![EnvItem::EVar(n.clone())])
                })
                .collect(),
            ncc: c
                .ncc
                .iter()
                .map(|(s, d)| (self.expr(s), self.expr(d)))
                .collect(),
        }
    }

    /// Compose with a single binding, keeping the substitution idempotent.
    pub fn bind_s(&mut self, n: &str, t: Expr) {
        let single = Subst {
            s: BTreeMap::from([(n.to_string(), t.clone())]),
            ..Default::default()
        };
        self.push(single);
        self.s.insert(n.to_string(), t);
    }

    pub fn bind_x(&mut self, n: &str, t: VarTerm) {
        let single = Subst {
            x: BTreeMap::from([(n.to_string(), t.clone())]),
            ..Default::default()
        };
        self.push(single);
        self.x.insert(n.to_string(), t);
    }

    pub fn bind_d(&mut self, n: &str, t: Expr) {
        let single = Subst {
            d: BTreeMap::from([(n.to_string(), t.clone())]),
            ..Default::default()
        };
        self.push(single);
        self.d.insert(n.to_string(), t);
    }

    pub fn bind_e(&mut self, n: &str, t: Vec<EnvItem>) {
        let single = Subst {
            e: BTreeMap::from([(n.to_string(), t.clone())]),
            ..Default::default()
        };
        self.push(single);
        self.e.insert(n.to_string(), t);
    }

    fn push(&mut self, single: Subst) {
        for v in self.s.values_mut() {
            *v = single.expr(v);
        }
        for v in self.x.values_mut() {
            *v = single.var(v);
        }
        for v in self.d.values_mut() {
            *v = single.expr(v);
        }
        for v in self.e.values_mut() {
            *v = single.items(v);
        }
    }

    /// Restrict to the given meta-variable names.
    pub fn restrict(&self, keep: &BTreeSet<String>) -> Subst {
        Subst {
            s: filter(&self.s, keep),
            x: filter(&self.x, keep),
            d: filter(&self.d, keep),
            e: filter(&self.e, keep),
        }
    }
}

fn filter<T: Clone>(m: &BTreeMap<String, T>, keep: &BTreeSet<String>) -> BTreeMap<String, T> {
    m.iter()
        .filter(|(k, _)| keep.contains(*k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect()
}

pub fn ctx_var(name: &str) -> Expr {
    Expr::Ctx {
        name: name.to_string(),
        class: crate::parse::class_of_name(name).to_string(),
        body: Box::new(Expr::hole()),
    }
}

/// Constraints after substitution: context and environment variables are
/// replaced by their images.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AppliedConstraints {
    pub nonempty_ctx: Vec<Expr>,
    pub nonempty_env: Vec<Vec<EnvItem>>,
    pub ncc: Vec<(Expr, Expr)>,
}

impl fmt::Display for Subst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (k, v) in &self.s {
            parts.push(format!("{k} -> {v}"));
        }
        for (k, v) in &self.x {
            parts.push(format!("{k} -> {v}"));
        }
        for (k, v) in &self.d {
            parts.push(format!("{k} -> {v}"));
        }
        for (k, v) in &self.e {
            parts.push(format!("{k} -> {}", Env::new(v.clone())));
        }
        write!(f, "{{{}}}", parts.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_stays_idempotent() {
        let mut s = Subst::default();
        s.bind_s("S2", Expr::ctx("C1", "C", Expr::app("cap", vec![Expr::constant("top"), Expr::s("S1")])));
        s.bind_d("C1", Expr::app("neg", vec![Expr::hole()]));
        assert_eq!(s.s["S2"].to_string(), "neg (cap top S1)");
        let again = s.expr(&s.s["S2"]);
        assert_eq!(again, s.s["S2"]);
    }

    #[test]
    fn env_splices_images() {
        let mut s = Subst::default();
        s.bind_e(
            "E",
            vec![
                EnvItem::Binding(VarTerm::Meta("X".into()), Expr::s("S")),
                EnvItem::EVar("E2".into()),
            ],
        );
        let e = Expr::letrec(vec![EnvItem::EVar("E".into())], Expr::s("S"));
        assert_eq!(s.expr(&e).to_string(), "letrec X=S;E2 in S");
    }
}

/// Context classes of the context variables occurring in `e`.
pub fn ctx_classes(e: &Expr, out: &mut BTreeMap<String, String>) {
    e.walk(&mut |sub| {
        if let Expr::Ctx { name, class, .. } = sub {
            out.insert(name.clone(), class.clone());
        }
    });
}

/// Smallest `{base}_{n}` not yet in use; the name is reserved.
pub fn fresh_name(used: &mut BTreeSet<String>, base: &str) -> String {
    let mut n = 1usize;
    loop {
        let cand = format!("{base}_{n}");
        if used.insert(cand.clone()) {
            return cand;
        }
        n += 1;
    }
}

/// `name'`, `name''`, ... whichever is unused first; the name is reserved.
pub fn primed_name(used: &mut BTreeSet<String>, base: &str) -> String {
    let mut cand = format!("{base}'");
    while used.contains(&cand) {
        cand.push('\'');
    }
    used.insert(cand.clone());
    cand
}

/// A renaming substitution for `vars`. Context variables need their class.
pub fn renaming(
    vars: &BTreeSet<MetaVar>,
    classes: &BTreeMap<String, String>,
    used: &mut BTreeSet<String>,
    primed: bool,
) -> Subst {
    let mut r = Subst::default();
    for v in vars {
        let base = match v.kind {
            MetaKind::D if !primed => classes
                .get(&v.name)
                .cloned()
                .unwrap_or_else(|| crate::parse::class_of_name(&v.name).to_string()),
            MetaKind::S if !primed => "S".into(),
            MetaKind::X if !primed => "X".into(),
            MetaKind::E if !primed => "E".into(),
            MetaKind::Ch if !primed => "Ch".into(),
            _ => v.name.clone(),
        };
        let new = if primed {
            primed_name(used, &base)
        } else {
            fresh_name(used, &base)
        };
        match v.kind {
            MetaKind::S => {
                r.s.insert(v.name.clone(), Expr::SVar(new));
            }
            MetaKind::X => {
                r.x.insert(v.name.clone(), VarTerm::Meta(new));
            }
            MetaKind::D => {
                let class = classes
                    .get(&v.name)
                    .cloned()
                    .unwrap_or_else(|| crate::parse::class_of_name(&v.name).to_string());
                r.d.insert(
                    v.name.clone(),
                    Expr::Ctx {
                        name: new,
                        class,
                        body: Box::new(Expr::hole()),
                    },
                );
            }
            MetaKind::E | MetaKind::Ch => {
                r.e.insert(v.name.clone(), vec![EnvItem::EVar(new)]);
            }
        }
    }
    r
}

/// Apply a renaming to the names mentioned in a constraint tuple.
pub fn rename_constraints(c: &Constraints, r: &Subst) -> Constraints {
    let ren_d = |n: &String| match r.d.get(n) {
        Some(Expr::Ctx { name, .. }) => name.clone(),
        _ => n.clone(),
    };
    let ren_e = |n: &String| match r.e.get(n).map(|v| v.as_slice()) {
        Some([EnvItem::EVar(m)]) => m.clone(),
        _ => n.clone(),
    };
    Constraints {
        nonempty_ctx: c.nonempty_ctx.iter().map(ren_d).collect(),
        nonempty_env: c.nonempty_env.iter().map(ren_e).collect(),
        ncc: c.ncc.iter().map(|(s, d)| (r.expr(s), r.expr(d))).collect(),
    }
}

/// Names of all meta-variables in `e`.
pub fn meta_names(e: &Expr) -> BTreeSet<String> {
    meta_vars(e).into_iter().map(|m| m.name).collect()
}
