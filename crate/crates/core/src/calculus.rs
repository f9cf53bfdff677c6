//! Calculus descriptions: context classes, prefix and fork tables, rules,
//! answers and control commands.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::syntax::{
    meta_occurrences, Arg, Env, EnvItem, Expr, MetaKind, MetaVar, VarTerm,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleKind {
    SR,
    T,
}

/// Argument kinds of a function symbol: a variable or `HExpression^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArgKind {
    Var,
    Expr(usize),
}

/// Constraint tuple as written in the input: non-empty contexts, non-empty
/// environments and non-capture constraints.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Constraints {
    pub nonempty_ctx: Vec<String>,
    pub nonempty_env: Vec<String>,
    pub ncc: Vec<(Expr, Expr)>,
}

impl Constraints {
    pub fn is_empty(&self) -> bool {
        self.nonempty_ctx.is_empty() && self.nonempty_env.is_empty() && self.ncc.is_empty()
    }

    pub fn meta_vars(&self) -> BTreeSet<MetaVar> {
        let mut out: BTreeSet<MetaVar> = BTreeSet::new();
        out.extend(self.nonempty_ctx.iter().map(|d| MetaVar::new(MetaKind::D, d)));
        out.extend(self.nonempty_env.iter().map(|e| MetaVar::new(MetaKind::E, e)));
        for (s, d) in &self.ncc {
            out.extend(meta_occurrences(s));
            out.extend(meta_occurrences(d));
        }
        out
    }

    pub fn extend(&mut self, other: &Constraints) {
        self.nonempty_ctx.extend(other.nonempty_ctx.iter().cloned());
        self.nonempty_env.extend(other.nonempty_env.iter().cloned());
        self.ncc.extend(other.ncc.iter().cloned());
    }
}

impl fmt::Display for Constraints {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for d in &self.nonempty_ctx {
            parts.push(format!("{d} /= [.]"));
        }
        for e in &self.nonempty_env {
            parts.push(format!("{e} /= {{}}"));
        }
        for (s, d) in &self.ncc {
            match s {
                Expr::Letrec(env, body) if matches!(**body, Expr::Hole(_)) => {
                    parts.push(format!("[{env}, {d}]"))
                }
                _ => parts.push(format!("({s}, {d})")),
            }
        }
        f.write_str(&parts.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub kind: RuleKind,
    pub name: String,
    pub variant: Option<u32>,
    /// Declared as a transitive-closure rule (`{SR,name,+}`).
    pub closure: bool,
    pub lhs: Expr,
    pub rhs: Expr,
    pub delta: Constraints,
    pub reversed: bool,
}

impl Rule {
    /// Label used in diagrams: variant dropped, `SR,` prefix for standard reductions.
    pub fn label(&self) -> String {
        let mut s = match self.kind {
            RuleKind::SR => format!("SR,{}", self.name),
            RuleKind::T => self.name.clone(),
        };
        if self.closure {
            s.push_str(",+");
        }
        s
    }

    pub fn full_name(&self) -> String {
        let mut s = match self.kind {
            RuleKind::SR => format!("SR,{}", self.name),
            RuleKind::T => self.name.clone(),
        };
        if let Some(k) = self.variant {
            s.push_str(&format!(",{k}"));
        }
        if self.closure {
            s.push_str(",+");
        }
        s
    }

    pub fn meta_vars(&self) -> BTreeSet<MetaVar> {
        let mut out: BTreeSet<MetaVar> = meta_occurrences(&self.lhs).into_iter().collect();
        out.extend(meta_occurrences(&self.rhs));
        out.extend(self.delta.meta_vars());
        out
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}} {} ==> {}", self.full_name(), self.lhs, self.rhs)?;
        if !self.delta.is_empty() {
            write!(f, " where {}", self.delta)?;
        }
        Ok(())
    }
}

/// Reverse a transformation: sides swapped, direction flipped, constraints kept.
pub fn reverse_rule(rule: &Rule) -> Result<Rule, String> {
    if rule.kind == RuleKind::SR {
        return Err(format!("standard reduction {} cannot be reversed", rule.full_name()));
    }
    Ok(Rule {
        lhs: rule.rhs.clone(),
        rhs: rule.lhs.clone(),
        reversed: !rule.reversed,
        ..rule.clone()
    })
}

/// One grammar production of a context class. `shape` contains exactly one
/// context variable (the recursive position) whose body is the hole, or is
/// the hole itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Production {
    pub shape: Expr,
    pub guards: Constraints,
}

impl Production {
    pub fn is_hole(&self) -> bool {
        self.shape.is_hole()
    }

    /// Class of the recursive position.
    pub fn sub_class(&self) -> Option<String> {
        let mut out = None;
        self.shape.walk(&mut |e| {
            if let Expr::Ctx { class, .. } = e {
                out = Some(class.clone());
            }
        });
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDef {
    pub name: String,
    pub productions: Vec<Production>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForkEntry {
    pub k3: String,
    pub k4: String,
    pub k5: String,
    pub template: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Answer {
    pub expr: Expr,
    pub delta: Constraints,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Command {
    pub output: String,
    pub rule: String,
    pub variant: Option<u32>,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosureDecl {
    pub name: String,
    pub base: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Calculus {
    pub symbols: BTreeMap<String, Vec<ArgKind>>,
    pub classes: Vec<ClassDef>,
    pub prefix: BTreeMap<(String, String), (String, String)>,
    pub forks: BTreeMap<(String, String), Vec<ForkEntry>>,
    pub sr_rules: Vec<Rule>,
    pub answers: Vec<Answer>,
    pub transformations: Vec<Rule>,
    /// Transitive-closure rules, applied as single steps in join search.
    pub closure_rules: Vec<Rule>,
    pub unions: BTreeMap<String, Vec<String>>,
    pub closure_decls: Vec<ClosureDecl>,
    pub deterministic: bool,
    pub ignore: BTreeSet<String>,
    pub restrict: BTreeMap<String, usize>,
    pub commands: Vec<Command>,
}

impl Calculus {
    pub fn class(&self, name: &str) -> Option<&ClassDef> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn transformations_named(&self, name: &str, variant: Option<u32>) -> Vec<&Rule> {
        self.transformations
            .iter()
            .filter(|r| r.name == name && (variant.is_none() || r.variant == variant))
            .collect()
    }

    /// Collapse an SR rule name through the declared unions (innermost first,
    /// then repeatedly, so `lapp` becomes `lll` when `lll = lapp, llet`).
    pub fn union_name(&self, name: &str) -> String {
        let mut cur = name.to_string();
        let mut seen = BTreeSet::new();
        loop {
            if !seen.insert(cur.clone()) {
                return cur;
            }
            match self.unions.iter().find(|(_, members)| members.contains(&cur)) {
                Some((u, _)) => cur = u.clone(),
                None => return cur,
            }
        }
    }

    /// Base rule names covered by a (possibly union) name.
    pub fn union_members(&self, name: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut stack = vec![name.to_string()];
        while let Some(n) = stack.pop() {
            if let Some(ms) = self.unions.get(&n) {
                stack.extend(ms.iter().cloned());
            } else {
                out.insert(n);
            }
        }
        out
    }

    /// Class inclusion K1 ⊆ K2, computed from the grammars as a greatest fixpoint.
    pub fn class_subset(&self, k1: &str, k2: &str) -> bool {
        if k1 == k2 {
            return true;
        }
        self.class_inclusion().contains(&(k1.to_string(), k2.to_string()))
    }

    pub fn class_inclusion(&self) -> BTreeSet<(String, String)> {
        let names: Vec<&str> = self.classes.iter().map(|c| c.name.as_str()).collect();
        let mut rel: BTreeSet<(String, String)> = names
            .iter()
            .flat_map(|a| names.iter().map(move |b| (a.to_string(), b.to_string())))
            .collect();
        loop {
            let keep: BTreeSet<_> = rel
                .iter()
                .filter(|(a, b)| a == b || self.covered(a, b, &rel))
                .cloned()
                .collect();
            if keep.len() == rel.len() {
                return keep;
            }
            rel = keep;
        }
    }

    fn covered(&self, k1: &str, k2: &str, rel: &BTreeSet<(String, String)>) -> bool {
        let (Some(c1), Some(c2)) = (self.class(k1), self.class(k2)) else {
            return false;
        };
        c1.productions.iter().all(|p1| {
            let (key1, sub1) = production_key(p1);
            c2.productions.iter().any(|p2| {
                let (key2, sub2) = production_key(p2);
                key1 == key2
                    && match (&sub1, &sub2) {
                        (None, None) => true,
                        (Some(a), Some(b)) => rel.contains(&(a.clone(), b.clone())),
                        _ => false,
                    }
            })
        })
    }

    pub fn all_rules(&self) -> impl Iterator<Item = &Rule> {
        self.sr_rules
            .iter()
            .chain(self.transformations.iter())
            .chain(self.closure_rules.iter())
    }
}

/// Shape of a production with meta-variable names and the recursive class erased.
fn production_key(p: &Production) -> (String, Option<String>) {
    let mut names: BTreeMap<MetaVar, String> = BTreeMap::new();
    let mut next = 0usize;
    let occs = meta_occurrences(&p.shape)
        .into_iter()
        .chain(p.guards.meta_vars());
    for m in occs {
        names.entry(m).or_insert_with(|| {
            next += 1;
            format!("M{next}")
        });
    }
    let erased = rename_erase(&p.shape, &names);
    let guards: BTreeSet<String> = p
        .guards
        .nonempty_env
        .iter()
        .map(|e| names[&MetaVar::new(MetaKind::E, e)].clone())
        .chain(
            p.guards
                .nonempty_ctx
                .iter()
                .map(|d| names[&MetaVar::new(MetaKind::D, d)].clone()),
        )
        .collect();
    (format!("{erased} {guards:?}"), p.sub_class())
}

fn rename_erase(e: &Expr, names: &BTreeMap<MetaVar, String>) -> Expr {
    let rv = |x: &VarTerm| match x {
        VarTerm::Meta(n) => VarTerm::Meta(names[&MetaVar::new(MetaKind::X, n)].clone()),
        c => c.clone(),
    };
    match e {
        Expr::SVar(n) => Expr::SVar(names[&MetaVar::new(MetaKind::S, n)].clone()),
        Expr::Hole(i) => Expr::Hole(*i),
        Expr::Ctx { body, .. } => Expr::Ctx {
            name: "K".into(),
            class: "K".into(),
            body: Box::new(rename_erase(body, names)),
        },
        Expr::Letrec(env, body) => Expr::Letrec(
            Env::new(
                env.items
                    .iter()
                    .map(|it| match it {
                        EnvItem::EVar(n) => {
                            EnvItem::EVar(names[&MetaVar::new(MetaKind::E, n)].clone())
                        }
                        EnvItem::Binding(x, b) => EnvItem::Binding(rv(x), rename_erase(b, names)),
                        EnvItem::Chain {
                            name,
                            class,
                            var,
                            body,
                        } => EnvItem::Chain {
                            name: names[&MetaVar::new(MetaKind::Ch, name)].clone(),
                            class: class.clone(),
                            var: rv(var),
                            body: rename_erase(body, names),
                        },
                    })
                    .collect(),
            ),
            Box::new(rename_erase(body, names)),
        ),
        Expr::Fun(f, args) => Expr::Fun(
            f.clone(),
            args.iter()
                .map(|a| match a {
                    Arg::Var(x) => Arg::Var(rv(x)),
                    Arg::Expr(b) => Arg::Expr(rename_erase(b, names)),
                    Arg::Bind(xs, b) => Arg::Bind(xs.iter().map(rv).collect(), rename_erase(b, names)),
                })
                .collect(),
        ),
    }
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Info,
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub rule: String,
    pub condition: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}: {} [{}]: {}", self.rule, self.condition, self.message)
    }
}

fn diag(severity: Severity, rule: &str, condition: &str, message: String) -> Diagnostic {
    Diagnostic {
        severity,
        rule: rule.to_string(),
        condition: condition.to_string(),
        message,
    }
}

/// Check the occurrence conditions of letrec rewrite rules, answer sanity,
/// overlapability of transformations and table well-formedness.
pub fn validate(calc: &Calculus) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for rule in calc.all_rules() {
        validate_rule(rule, &mut out);
    }
    for t in &calc.transformations {
        if crate::syntax::has_chain(&t.lhs) || crate::syntax::has_chain(&t.rhs) {
            out.push(diag(
                Severity::Error,
                &t.full_name(),
                "overlapable",
                "chain variables occur in the rule; it is not overlapable".into(),
            ));
        }
    }
    let mut seen = BTreeSet::new();
    for r in calc.all_rules() {
        if !seen.insert((r.kind, r.name.clone(), r.variant, r.closure)) {
            out.push(diag(
                Severity::Error,
                &r.full_name(),
                "unique-name",
                "rule name and variant declared twice".into(),
            ));
        }
    }
    for (i, a) in calc.answers.iter().enumerate() {
        let name = format!("ANSWER#{}", i + 1);
        let mvs: BTreeSet<MetaVar> = meta_occurrences(&a.expr).into_iter().collect();
        for m in a.delta.meta_vars() {
            if !mvs.contains(&m) {
                out.push(diag(
                    Severity::Error,
                    &name,
                    "(i)",
                    format!("constraint mentions {} which does not occur in the answer", m.name),
                ));
            }
        }
    }
    let class_names: BTreeSet<&str> = calc.classes.iter().map(|c| c.name.as_str()).collect();
    for ((k1, k2), (k3, k4)) in &calc.prefix {
        for k in [k1, k2, k3, k4] {
            if !class_names.contains(k.as_str()) {
                out.push(diag(
                    Severity::Error,
                    &format!("prefix {k1} {k2}"),
                    "table",
                    format!("unknown class {k}"),
                ));
            }
        }
    }
    for ((k1, k2), entries) in &calc.forks {
        for f in entries {
            let holes = count_numbered_holes(&f.template);
            if holes != (1, 1) {
                out.push(diag(
                    Severity::Error,
                    &format!("fork {k1} {k2}"),
                    "table",
                    "fork context must contain exactly the holes [.1] and [.2]".into(),
                ));
            }
            for k in [k1, k2, &f.k3, &f.k4, &f.k5] {
                if !class_names.contains(k.as_str()) {
                    out.push(diag(
                        Severity::Error,
                        &format!("fork {k1} {k2}"),
                        "table",
                        format!("unknown class {k}"),
                    ));
                }
            }
        }
    }
    for c in &calc.closure_decls {
        if !calc.closure_rules.iter().any(|r| r.name == c.name) {
            out.push(diag(
                Severity::Error,
                &format!("closure {}", c.name),
                "closure",
                "no closure rule with this name".into(),
            ));
        }
    }
    for r in &calc.closure_rules {
        if !calc.closure_decls.iter().any(|c| c.name == r.name) {
            out.push(diag(
                Severity::Warning,
                &r.full_name(),
                "closure",
                "closure rule without a `closure ... of ...` declaration; oracle validates it against its own name".into(),
            ));
        }
    }
    if !calc.transformations.is_empty() {
        out.push(diag(
            Severity::Info,
            "calculus",
            "user-asserted",
            "closure of transformations under the chosen context class and sufficiency of that class for contextual equivalence are assumed, not checked".into(),
        ));
        if calc.deterministic {
            out.push(diag(
                Severity::Info,
                "calculus",
                "user-asserted",
                "determinism of standard reduction is declared; the ground oracle checks it empirically".into(),
            ));
        }
    }
    out
}

fn count_numbered_holes(e: &Expr) -> (usize, usize) {
    let (mut a, mut b) = (0, 0);
    e.walk(&mut |x| match x {
        Expr::Hole(1) => a += 1,
        Expr::Hole(2) => b += 1,
        _ => {}
    });
    (a, b)
}

fn validate_rule(rule: &Rule, out: &mut Vec<Diagnostic>) {
    let name = rule.full_name();
    let mut sides: BTreeSet<MetaVar> = meta_occurrences(&rule.lhs).into_iter().collect();
    sides.extend(meta_occurrences(&rule.rhs));
    for m in rule.delta.meta_vars() {
        if !sides.contains(&m) {
            out.push(diag(
                Severity::Error,
                &name,
                "(i)",
                format!("constraint variable {} occurs in neither side", m.name),
            ));
        }
    }
    for (side, e) in [("left", &rule.lhs), ("right", &rule.rhs)] {
        let mut counts: BTreeMap<MetaVar, usize> = BTreeMap::new();
        for m in meta_occurrences(e) {
            *counts.entry(m).or_default() += 1;
        }
        for (m, n) in counts {
            let limit = match m.kind {
                MetaKind::S => 2,
                MetaKind::X => usize::MAX,
                _ => 1,
            };
            if n > limit {
                out.push(diag(
                    Severity::Error,
                    &name,
                    "(ii)",
                    format!("{} occurs {n} times on the {side} side", m.name),
                ));
            }
        }
    }
    let chain_envs = chain_environment_count(&rule.lhs);
    if chain_envs > 1 {
        out.push(diag(
            Severity::Error,
            &name,
            "(ii)",
            "chain variables of the left side occur in more than one environment".into(),
        ));
    }
    if !lvc_pattern_preserved(&rule.lhs, &rule.rhs) {
        out.push(diag(
            Severity::Warning,
            &name,
            "(iii)",
            "LVC preservation could not be established syntactically".into(),
        ));
    }
}

fn chain_environment_count(e: &Expr) -> usize {
    let mut n = 0;
    e.walk(&mut |x| {
        if let Expr::Letrec(env, _) = x {
            if env.items.iter().any(|i| matches!(i, EnvItem::Chain { .. })) {
                n += 1;
            }
        }
    });
    n
}

/// Sufficient check for LVC preservation: both sides bind the same multiset of
/// explicit letrec binders, and every environment variable of one side occurs
/// inside a letrec on the other side.
fn lvc_pattern_preserved(l: &Expr, r: &Expr) -> bool {
    fn binders(e: &Expr) -> (Vec<VarTerm>, BTreeSet<String>) {
        let mut xs = Vec::new();
        let mut es = BTreeSet::new();
        e.walk(&mut |x| {
            if let Expr::Letrec(env, _) = x {
                for it in &env.items {
                    match it {
                        EnvItem::Binding(v, _) => xs.push(v.clone()),
                        EnvItem::EVar(n) => {
                            es.insert(n.clone());
                        }
                        EnvItem::Chain { name, .. } => {
                            es.insert(name.clone());
                        }
                    }
                }
            }
        });
        xs.sort();
        (xs, es)
    }
    let (xl, el) = binders(l);
    let (xr, er) = binders(r);
    let covered = |xs: &[VarTerm], others: &[VarTerm]| xs.iter().all(|x| others.contains(x));
    // Removing bindings cannot break the LVC; adding is safe only for binders
    // that also occur on the other side.
    let left_ok = covered(&xr, &xl) || covered(&xl, &xr);
    let envs_ok = er.is_subset(&el) || el.is_subset(&er);
    left_ok && envs_ok
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t_rule(lhs: Expr, rhs: Expr) -> Rule {
        Rule {
            kind: RuleKind::T,
            name: "t".into(),
            variant: None,
            closure: false,
            lhs,
            rhs,
            delta: Constraints::default(),
            reversed: false,
        }
    }

    #[test]
    fn reverse_is_involution() {
        let r = t_rule(Expr::s("S"), Expr::constant("top"));
        let rr = reverse_rule(&reverse_rule(&r).unwrap()).unwrap();
        assert_eq!(r, rr);
        let rev = reverse_rule(&r).unwrap();
        assert!(rev.reversed);
        assert_eq!(rev.lhs, Expr::constant("top"));
    }

    #[test]
    fn reversing_sr_is_rejected() {
        let mut r = t_rule(Expr::s("S"), Expr::s("S"));
        r.kind = RuleKind::SR;
        assert!(reverse_rule(&r).is_err());
    }

    #[test]
    fn three_occurrences_violate_condition_ii() {
        let s = Expr::s("S");
        let lhs = Expr::app("f", vec![s.clone(), s.clone(), s.clone()]);
        let calc = Calculus {
            transformations: vec![t_rule(lhs, s)],
            ..Default::default()
        };
        let d = validate(&calc);
        assert!(d.iter().any(|d| d.condition == "(ii)" && d.severity == Severity::Error));
    }

    #[test]
    fn chain_in_transformation_is_not_overlapable() {
        let lhs = Expr::letrec(
            vec![EnvItem::Chain {
                name: "Ch".into(),
                class: "A".into(),
                var: VarTerm::Meta("X".into()),
                body: Expr::s("S"),
            }],
            Expr::s("S2"),
        );
        let calc = Calculus {
            transformations: vec![t_rule(lhs, Expr::s("S2"))],
            ..Default::default()
        };
        let d = validate(&calc);
        assert!(d.iter().any(|d| d.condition == "overlapable"));
    }
}
