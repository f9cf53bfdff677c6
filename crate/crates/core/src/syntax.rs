//! Meta-expressions of the LRSX language: expressions with meta-variables
//! for expressions (`S`), variables (`X`), contexts (`D`), environments (`E`)
//! and binding chains (`Ch`), together with letrec environments.

use std::collections::BTreeSet;
use std::fmt;

/// A variable position: either a concrete object variable or a meta-variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarTerm {
    Concrete(String),
    Meta(String),
}

impl VarTerm {
    pub fn name(&self) -> &str {
        match self {
            VarTerm::Concrete(n) | VarTerm::Meta(n) => n,
        }
    }

    pub fn is_meta(&self) -> bool {
        matches!(self, VarTerm::Meta(_))
    }
}

/// One argument of a function symbol, shaped by the symbol's syntactic type.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Arg {
    Var(VarTerm),
    Expr(Expr),
    /// `x1.….xk.s` for an argument of kind HExpression^k, k ≥ 1.
    Bind(Vec<VarTerm>, Expr),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EnvItem {
    EVar(String),
    Chain {
        name: String,
        class: String,
        var: VarTerm,
        body: Expr,
    },
    Binding(VarTerm, Expr),
}

/// A letrec environment. Item order carries no meaning.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Env {
    pub items: Vec<EnvItem>,
}

impl Env {
    pub fn new(items: Vec<EnvItem>) -> Self {
        Env { items }
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn bindings(&self) -> impl Iterator<Item = (&VarTerm, &Expr)> {
        self.items.iter().filter_map(|it| match it {
            EnvItem::Binding(x, e) => Some((x, e)),
            _ => None,
        })
    }

    pub fn env_vars(&self) -> impl Iterator<Item = &str> {
        self.items.iter().filter_map(|it| match it {
            EnvItem::EVar(n) => Some(n.as_str()),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    SVar(String),
    /// Context hole; index 0 is the single hole `[.]`, k ≥ 1 is `[.k]`.
    Hole(u8),
    Ctx {
        name: String,
        class: String,
        body: Box<Expr>,
    },
    Letrec(Env, Box<Expr>),
    Fun(String, Vec<Arg>),
}

pub const VAR_SYMBOL: &str = "var";
pub const LAMBDA_SYMBOL: &str = "lam";

impl Expr {
    pub fn s(name: &str) -> Expr {
        Expr::SVar(name.to_string())
    }

    pub fn hole() -> Expr {
        Expr::Hole(0)
    }

    pub fn ctx(name: &str, class: &str, body: Expr) -> Expr {
        Expr::Ctx {
            name: name.to_string(),
            class: class.to_string(),
            body: Box::new(body),
        }
    }

    pub fn constant(f: &str) -> Expr {
        Expr::Fun(f.to_string(), vec![])
    }

    pub fn app(f: &str, args: Vec<Expr>) -> Expr {
        Expr::Fun(f.to_string(), args.into_iter().map(Arg::Expr).collect())
    }

    pub fn var(x: VarTerm) -> Expr {
        Expr::Fun(VAR_SYMBOL.to_string(), vec![Arg::Var(x)])
    }

    pub fn lam(x: VarTerm, body: Expr) -> Expr {
        Expr::Fun(LAMBDA_SYMBOL.to_string(), vec![Arg::Bind(vec![x], body)])
    }

    pub fn letrec(items: Vec<EnvItem>, body: Expr) -> Expr {
        Expr::Letrec(Env::new(items), Box::new(body))
    }

    pub fn count_holes(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |e| {
            if matches!(e, Expr::Hole(_)) {
                n += 1;
            }
        });
        n
    }

    pub fn has_hole(&self) -> bool {
        self.count_holes() > 0
    }

    pub fn is_hole(&self) -> bool {
        matches!(self, Expr::Hole(_))
    }

    /// Pre-order traversal over sub-expressions (not variable positions).
    pub fn walk<F: FnMut(&Expr)>(&self, f: &mut F) {
        f(self);
        match self {
            Expr::SVar(_) | Expr::Hole(_) => {}
            Expr::Ctx { body, .. } => body.walk(f),
            Expr::Letrec(env, body) => {
                env.walk(f);
                body.walk(f);
            }
            Expr::Fun(_, args) => {
                for a in args {
                    match a {
                        Arg::Var(_) => {}
                        Arg::Expr(e) | Arg::Bind(_, e) => e.walk(f),
                    }
                }
            }
        }
    }

    /// Replace the hole with index `idx` by `fill`.
    pub fn fill_hole(&self, idx: u8, fill: &Expr) -> Expr {
        self.map_holes(&|i| if i == idx { Some(fill.clone()) } else { None })
    }

    /// `d[s]` for a single-hole context.
    pub fn fill(&self, s: &Expr) -> Expr {
        self.fill_hole(0, s)
    }

    pub fn map_holes(&self, f: &dyn Fn(u8) -> Option<Expr>) -> Expr {
        match self {
            Expr::Hole(i) => f(*i).unwrap_or(Expr::Hole(*i)),
            Expr::SVar(_) => self.clone(),
            Expr::Ctx { name, class, body } => Expr::Ctx {
                name: name.clone(),
                class: class.clone(),
                body: Box::new(body.map_holes(f)),
            },
            Expr::Letrec(env, body) => Expr::Letrec(env.map_holes(f), Box::new(body.map_holes(f))),
            Expr::Fun(g, args) => Expr::Fun(
                g.clone(),
                args.iter()
                    .map(|a| match a {
                        Arg::Var(x) => Arg::Var(x.clone()),
                        Arg::Expr(e) => Arg::Expr(e.map_holes(f)),
                        Arg::Bind(xs, e) => Arg::Bind(xs.clone(), e.map_holes(f)),
                    })
                    .collect(),
            ),
        }
    }

    pub fn is_ground(&self) -> bool {
        meta_vars(self).is_empty()
    }

    /// Number of constructor nodes; variables and holes are free.
    pub fn size(&self) -> usize {
        match self {
            Expr::SVar(_) => 1,
            Expr::Hole(_) => 0,
            Expr::Ctx { body, .. } => 1 + body.size(),
            Expr::Letrec(env, body) => {
                1 + body.size()
                    + env
                        .items
                        .iter()
                        .map(|it| match it {
                            EnvItem::Binding(_, e) => e.size(),
                            EnvItem::Chain { body, .. } => 1 + body.size(),
                            EnvItem::EVar(_) => 1,
                        })
                        .sum::<usize>()
            }
            Expr::Fun(_, args) => {
                1 + args
                    .iter()
                    .map(|a| match a {
                        Arg::Var(_) => 0,
                        Arg::Expr(e) | Arg::Bind(_, e) => e.size(),
                    })
                    .sum::<usize>()
            }
        }
    }
}

impl Env {
    fn walk<F: FnMut(&Expr)>(&self, f: &mut F) {
        for it in &self.items {
            match it {
                EnvItem::EVar(_) => {}
                EnvItem::Chain { body, .. } | EnvItem::Binding(_, body) => body.walk(f),
            }
        }
    }

    pub fn map_holes(&self, f: &dyn Fn(u8) -> Option<Expr>) -> Env {
        Env::new(
            self.items
                .iter()
                .map(|it| match it {
                    EnvItem::EVar(n) => EnvItem::EVar(n.clone()),
                    EnvItem::Chain {
                        name,
                        class,
                        var,
                        body,
                    } => EnvItem::Chain {
                        name: name.clone(),
                        class: class.clone(),
                        var: var.clone(),
                        body: body.map_holes(f),
                    },
                    EnvItem::Binding(x, e) => EnvItem::Binding(x.clone(), e.map_holes(f)),
                })
                .collect(),
        )
    }
}

/// Kinds of meta-variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MetaKind {
    S,
    X,
    D,
    E,
    Ch,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MetaVar {
    pub kind: MetaKind,
    pub name: String,
}

impl MetaVar {
    pub fn new(kind: MetaKind, name: &str) -> Self {
        MetaVar {
            kind,
            name: name.to_string(),
        }
    }
}

/// Every meta-variable occurrence in order of appearance (with repetitions).
pub fn meta_occurrences(e: &Expr) -> Vec<MetaVar> {
    let mut out = Vec::new();
    collect_meta(e, &mut out);
    out
}

fn push_var(x: &VarTerm, out: &mut Vec<MetaVar>) {
    if let VarTerm::Meta(n) = x {
        out.push(MetaVar::new(MetaKind::X, n));
    }
}

fn collect_meta(e: &Expr, out: &mut Vec<MetaVar>) {
    match e {
        Expr::SVar(n) => out.push(MetaVar::new(MetaKind::S, n)),
        Expr::Hole(_) => {}
        Expr::Ctx { name, body, .. } => {
            out.push(MetaVar::new(MetaKind::D, name));
            collect_meta(body, out);
        }
        Expr::Letrec(env, body) => {
            collect_meta_env(env, out);
            collect_meta(body, out);
        }
        Expr::Fun(_, args) => {
            for a in args {
                match a {
                    Arg::Var(x) => push_var(x, out),
                    Arg::Expr(e) => collect_meta(e, out),
                    Arg::Bind(xs, e) => {
                        xs.iter().for_each(|x| push_var(x, out));
                        collect_meta(e, out);
                    }
                }
            }
        }
    }
}

pub fn collect_meta_env(env: &Env, out: &mut Vec<MetaVar>) {
    for it in &env.items {
        match it {
            EnvItem::EVar(n) => out.push(MetaVar::new(MetaKind::E, n)),
            EnvItem::Chain { name, var, body, .. } => {
                out.push(MetaVar::new(MetaKind::Ch, name));
                push_var(var, out);
                collect_meta(body, out);
            }
            EnvItem::Binding(x, b) => {
                push_var(x, out);
                collect_meta(b, out);
            }
        }
    }
}

pub fn meta_vars(e: &Expr) -> BTreeSet<MetaVar> {
    meta_occurrences(e).into_iter().collect()
}

pub fn has_chain(e: &Expr) -> bool {
    meta_occurrences(e).iter().any(|m| m.kind == MetaKind::Ch)
}

/// An atom of a non-capture constraint: a variable or a meta-variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Var(VarTerm),
    S(String),
    E(String),
    D(String),
    Ch(String),
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Var(x) => write!(f, "{}", x.name()),
            Atom::S(n) | Atom::E(n) | Atom::D(n) | Atom::Ch(n) => write!(f, "{n}"),
        }
    }
}

/// Atomic non-capture constraint `(u, v)`: no variable of `u` is captured by `v`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomicNcc {
    pub u: Atom,
    pub v: Atom,
}

impl AtomicNcc {
    pub fn new(u: Atom, v: Atom) -> Self {
        AtomicNcc { u, v }
    }
}

impl fmt::Display for AtomicNcc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.u, self.v)
    }
}

/// All atoms occurring in an expression (variables free or bound, and meta-variables).
pub fn atoms_of(e: &Expr) -> BTreeSet<Atom> {
    let mut out = BTreeSet::new();
    atoms_into(e, &mut out);
    out
}

fn atoms_into(e: &Expr, out: &mut BTreeSet<Atom>) {
    match e {
        Expr::SVar(n) => {
            out.insert(Atom::S(n.clone()));
        }
        Expr::Hole(_) => {}
        Expr::Ctx { name, body, .. } => {
            out.insert(Atom::D(name.clone()));
            atoms_into(body, out);
        }
        Expr::Letrec(env, body) => {
            atoms_of_env_into(env, out);
            atoms_into(body, out);
        }
        Expr::Fun(_, args) => {
            for a in args {
                match a {
                    Arg::Var(x) => {
                        out.insert(Atom::Var(x.clone()));
                    }
                    Arg::Expr(e) => atoms_into(e, out),
                    Arg::Bind(xs, e) => {
                        for x in xs {
                            out.insert(Atom::Var(x.clone()));
                        }
                        atoms_into(e, out);
                    }
                }
            }
        }
    }
}

pub fn atoms_of_env(env: &Env) -> BTreeSet<Atom> {
    let mut out = BTreeSet::new();
    atoms_of_env_into(env, &mut out);
    out
}

fn atoms_of_env_into(env: &Env, out: &mut BTreeSet<Atom>) {
    for it in &env.items {
        match it {
            EnvItem::EVar(n) => {
                out.insert(Atom::E(n.clone()));
            }
            EnvItem::Chain { name, var, body, .. } => {
                out.insert(Atom::Ch(name.clone()));
                out.insert(Atom::Var(var.clone()));
                atoms_into(body, out);
            }
            EnvItem::Binding(x, b) => {
                out.insert(Atom::Var(x.clone()));
                atoms_into(b, out);
            }
        }
    }
}

/// Atoms that may capture a variable plugged into the hole of `d`.
pub fn capture_atoms(d: &Expr) -> BTreeSet<Atom> {
    let mut out = BTreeSet::new();
    capture_into(d, &mut out);
    out
}

/// The atoms capturing variables of an environment when it is on a hole path.
pub fn env_capture_atoms(env: &Env) -> BTreeSet<Atom> {
    let mut out = BTreeSet::new();
    for it in &env.items {
        match it {
            EnvItem::EVar(n) => {
                out.insert(Atom::E(n.clone()));
            }
            EnvItem::Chain { name, .. } => {
                out.insert(Atom::Ch(name.clone()));
            }
            EnvItem::Binding(x, _) => {
                out.insert(Atom::Var(x.clone()));
            }
        }
    }
    out
}

fn capture_into(d: &Expr, out: &mut BTreeSet<Atom>) {
    match d {
        Expr::SVar(_) | Expr::Hole(_) => {}
        Expr::Ctx { name, body, .. } => {
            if body.has_hole() {
                out.insert(Atom::D(name.clone()));
                capture_into(body, out);
            }
        }
        Expr::Letrec(env, body) => {
            let in_env = env.items.iter().any(|it| match it {
                EnvItem::Binding(_, e) | EnvItem::Chain { body: e, .. } => e.has_hole(),
                EnvItem::EVar(_) => false,
            });
            if in_env || body.has_hole() {
                out.extend(env_capture_atoms(env));
                for it in &env.items {
                    if let EnvItem::Binding(_, e) | EnvItem::Chain { body: e, .. } = it {
                        capture_into(e, out);
                    }
                }
                capture_into(body, out);
            }
        }
        Expr::Fun(_, args) => {
            for a in args {
                match a {
                    Arg::Var(_) => {}
                    Arg::Expr(e) => capture_into(e, out),
                    Arg::Bind(xs, e) => {
                        if e.has_hole() {
                            out.extend(xs.iter().cloned().map(Atom::Var));
                            capture_into(e, out);
                        }
                    }
                }
            }
        }
    }
}

/// Split a non-capture constraint `(s, d)` into atomic constraints.
pub fn split_ncc(s: &Expr, d: &Expr) -> BTreeSet<AtomicNcc> {
    let us = atoms_of(s);
    let vs = capture_atoms(d);
    let mut out = BTreeSet::new();
    for u in &us {
        for v in &vs {
            out.insert(AtomicNcc::new(u.clone(), v.clone()));
        }
    }
    out
}

/// Variable occurrence sets of an expression. Meta-variable occurrences are
/// kept apart as opaque atoms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VariableSets {
    pub free: BTreeSet<VarTerm>,
    pub bound: BTreeSet<VarTerm>,
    pub let_bound: BTreeSet<VarTerm>,
    pub meta: BTreeSet<MetaVar>,
}

impl VariableSets {
    pub fn all(&self) -> BTreeSet<VarTerm> {
        self.free.union(&self.bound).cloned().collect()
    }
}

pub fn variable_sets(e: &Expr) -> VariableSets {
    let mut vs = VariableSets::default();
    let mut scope = Vec::new();
    var_sets_into(e, &mut scope, &mut vs);
    vs.meta = meta_vars(e);
    vs
}

fn note_use(x: &VarTerm, scope: &[VarTerm], vs: &mut VariableSets) {
    if !scope.contains(x) {
        vs.free.insert(x.clone());
    }
}

fn var_sets_into(e: &Expr, scope: &mut Vec<VarTerm>, vs: &mut VariableSets) {
    match e {
        Expr::SVar(_) | Expr::Hole(_) => {}
        Expr::Ctx { body, .. } => var_sets_into(body, scope, vs),
        Expr::Letrec(env, body) => {
            let n = scope.len();
            for (x, _) in env.bindings() {
                vs.bound.insert(x.clone());
                vs.let_bound.insert(x.clone());
                scope.push(x.clone());
            }
            for it in &env.items {
                match it {
                    EnvItem::Binding(_, b) => var_sets_into(b, scope, vs),
                    EnvItem::Chain { var, body, .. } => {
                        note_use(var, scope, vs);
                        var_sets_into(body, scope, vs);
                    }
                    EnvItem::EVar(_) => {}
                }
            }
            var_sets_into(body, scope, vs);
            scope.truncate(n);
        }
        Expr::Fun(_, args) => {
            for a in args {
                match a {
                    Arg::Var(x) => note_use(x, scope, vs),
                    Arg::Expr(b) => var_sets_into(b, scope, vs),
                    Arg::Bind(xs, b) => {
                        let n = scope.len();
                        for x in xs {
                            vs.bound.insert(x.clone());
                            scope.push(x.clone());
                        }
                        var_sets_into(b, scope, vs);
                        scope.truncate(n);
                    }
                }
            }
        }
    }
}

/// Let variable convention: no environment binds the same variable twice.
/// Meta segments cannot be refuted syntactically and are accepted.
pub fn check_lvc(e: &Expr) -> bool {
    let mut ok = true;
    e.walk(&mut |sub| {
        if let Expr::Letrec(env, _) = sub {
            if !env_lvc(env) {
                ok = false;
            }
        }
    });
    ok
}

pub fn env_lvc(env: &Env) -> bool {
    let mut seen = BTreeSet::new();
    env.bindings().all(|(x, _)| seen.insert(x.clone()))
}

/// Distinct variable convention for ground expressions: bound and free
/// variables are disjoint and every binder binds a different variable.
pub fn check_dvc(e: &Expr) -> bool {
    let mut binders = Vec::new();
    collect_binders(e, &mut binders);
    let distinct: BTreeSet<_> = binders.iter().collect();
    if distinct.len() != binders.len() {
        return false;
    }
    let vs = variable_sets(e);
    vs.free.is_disjoint(&vs.bound)
}

pub fn collect_binders(e: &Expr, out: &mut Vec<VarTerm>) {
    e.walk(&mut |sub| match sub {
        Expr::Letrec(env, _) => out.extend(env.bindings().map(|(x, _)| x.clone())),
        Expr::Fun(_, args) => {
            for a in args {
                if let Arg::Bind(xs, _) = a {
                    out.extend(xs.iter().cloned());
                }
            }
        }
        _ => {}
    });
}

/// Result of asking for captured variables: exact for ground contexts,
/// otherwise the meta atoms on the hole path are reported too.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Captured {
    pub vars: BTreeSet<VarTerm>,
    pub meta: BTreeSet<Atom>,
}

pub fn captured_vars(d: &Expr) -> Captured {
    let mut vars = BTreeSet::new();
    let mut meta = BTreeSet::new();
    for a in capture_atoms(d) {
        match a {
            Atom::Var(x) => {
                vars.insert(x);
            }
            other => {
                meta.insert(other);
            }
        }
    }
    Captured { vars, meta }
}

// ---------------------------------------------------------------------------
// Rendering

fn needs_parens(e: &Expr) -> bool {
    match e {
        Expr::Fun(f, args) => !args.is_empty() || f == LAMBDA_SYMBOL,
        Expr::Letrec(..) => true,
        _ => false,
    }
}

struct AsArg<'a>(&'a Expr);

impl fmt::Display for AsArg<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if needs_parens(self.0) {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for VarTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::SVar(n) => f.write_str(n),
            Expr::Hole(0) => f.write_str("[.]"),
            Expr::Hole(k) => write!(f, "[.{k}]"),
            Expr::Ctx { name, body, .. } => write!(f, "{name}[{body}]"),
            Expr::Letrec(env, body) => write!(f, "letrec {env} in {body}"),
            Expr::Fun(g, args) if g == LAMBDA_SYMBOL && args.len() == 1 => match &args[0] {
                Arg::Bind(xs, body) if xs.len() == 1 => write!(f, "\\{}.{}", xs[0], body),
                a => write!(f, "{g} {}", ArgDisplay(a)),
            },
            Expr::Fun(g, args) => {
                f.write_str(g)?;
                for a in args {
                    write!(f, " {}", ArgDisplay(a))?;
                }
                Ok(())
            }
        }
    }
}

struct ArgDisplay<'a>(&'a Arg);

impl fmt::Display for ArgDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Arg::Var(x) => write!(f, "{x}"),
            Arg::Expr(e) => write!(f, "{}", AsArg(e)),
            Arg::Bind(xs, e) => {
                f.write_str("(")?;
                for x in xs {
                    write!(f, "{x}.")?;
                }
                write!(f, "{e})")
            }
        }
    }
}

impl fmt::Display for EnvItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvItem::EVar(n) => f.write_str(n),
            EnvItem::Chain {
                name,
                class,
                var,
                body,
            } => {
                let base = name.strip_prefix("Ch").unwrap_or(name);
                write!(f, "Ch{base}^{class}[{var},{body}]")
            }
            EnvItem::Binding(x, e) => write!(f, "{x}={e}"),
        }
    }
}

impl fmt::Display for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.items.is_empty() {
            return f.write_str("{}");
        }
        for (i, it) in self.items.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{it}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: &str) -> VarTerm {
        VarTerm::Concrete(n.into())
    }

    #[test]
    fn variable_sets_of_identity_and_letrec() {
        let id = Expr::lam(x("x"), Expr::var(x("x")));
        let vs = variable_sets(&id);
        assert!(vs.free.is_empty());
        assert_eq!(vs.bound, [x("x")].into());

        let l = Expr::letrec(
            vec![EnvItem::Binding(x("x"), Expr::var(x("y")))],
            Expr::var(x("x")),
        );
        let vs = variable_sets(&l);
        assert_eq!(vs.free, [x("y")].into());
        assert_eq!(vs.bound, [x("x")].into());
        assert_eq!(vs.let_bound, [x("x")].into());
    }

    #[test]
    fn variable_sets_keep_meta_atoms_apart() {
        let e = Expr::ctx("D", "C", Expr::var(VarTerm::Meta("X".into())));
        let vs = variable_sets(&e);
        assert_eq!(vs.free, [VarTerm::Meta("X".into())].into());
        assert!(vs.bound.is_empty());
        assert!(vs.meta.contains(&MetaVar::new(MetaKind::D, "D")));
    }

    #[test]
    fn lvc_examples() {
        let top = Expr::constant("top");
        let bot = Expr::constant("bot");
        let dup = Expr::letrec(
            vec![
                EnvItem::Binding(x("x"), top.clone()),
                EnvItem::Binding(x("x"), bot.clone()),
            ],
            Expr::var(x("x")),
        );
        assert!(!check_lvc(&dup));
        let ok = Expr::letrec(
            vec![
                EnvItem::Binding(x("x"), top.clone()),
                EnvItem::Binding(x("y"), bot),
            ],
            Expr::var(x("x")),
        );
        assert!(check_lvc(&ok));
        let meta = Expr::letrec(
            vec![EnvItem::EVar("E".into()), EnvItem::Binding(x("x"), top)],
            Expr::var(x("x")),
        );
        assert!(check_lvc(&meta));
    }

    #[test]
    fn dvc_examples() {
        let idx = Expr::lam(x("x"), Expr::var(x("x")));
        let idy = Expr::lam(x("y"), Expr::var(x("y")));
        assert!(!check_dvc(&Expr::app("app", vec![idx.clone(), idx.clone()])));
        assert!(check_dvc(&Expr::app("app", vec![idx, idy])));
        assert!(check_dvc(&Expr::lam(x("x"), Expr::var(x("y")))));
    }

    #[test]
    fn captured_variables() {
        let d = Expr::lam(x("x"), Expr::hole());
        assert_eq!(captured_vars(&d).vars, [x("x")].into());
        assert!(captured_vars(&Expr::hole()).vars.is_empty());
        let d = Expr::letrec(
            vec![EnvItem::Binding(x("x"), Expr::constant("top"))],
            Expr::lam(x("y"), Expr::hole()),
        );
        assert_eq!(captured_vars(&d).vars, [x("x"), x("y")].into());
    }

    #[test]
    fn split_examples() {
        let mx = VarTerm::Meta("X".into());
        let my = VarTerm::Meta("Y".into());
        let got = split_ncc(&Expr::var(mx.clone()), &Expr::lam(my.clone(), Expr::hole()));
        assert_eq!(
            got,
            [AtomicNcc::new(Atom::Var(mx.clone()), Atom::Var(my))].into()
        );
        let got = split_ncc(
            &Expr::s("S"),
            &Expr::letrec(vec![EnvItem::EVar("E".into())], Expr::hole()),
        );
        assert_eq!(got, [AtomicNcc::new(Atom::S("S".into()), Atom::E("E".into()))].into());
        let got = split_ncc(
            &Expr::app("app", vec![Expr::s("S1"), Expr::s("S2")]),
            &Expr::ctx("D", "C", Expr::lam(mx.clone(), Expr::hole())),
        );
        let want: BTreeSet<_> = [
            (Atom::S("S1".into()), Atom::D("D".into())),
            (Atom::S("S1".into()), Atom::Var(mx.clone())),
            (Atom::S("S2".into()), Atom::D("D".into())),
            (Atom::S("S2".into()), Atom::Var(mx)),
        ]
        .into_iter()
        .map(|(u, v)| AtomicNcc::new(u, v))
        .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn rendering() {
        let e = Expr::ctx(
            "A",
            "A",
            Expr::app(
                "app",
                vec![
                    Expr::lam(VarTerm::Meta("X".into()), Expr::s("S1")),
                    Expr::s("S2"),
                ],
            ),
        );
        assert_eq!(e.to_string(), "A[app (\\X.S1) S2]");
        let l = Expr::letrec(
            vec![EnvItem::EVar("E".into()), EnvItem::Binding(VarTerm::Meta("X".into()), Expr::hole())],
            Expr::s("S"),
        );
        assert_eq!(l.to_string(), "letrec E;X=[.] in S");
    }
}
