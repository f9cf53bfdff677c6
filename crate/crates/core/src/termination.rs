//! Innermost termination: a small built-in portfolio with replayable
//! certificates, loop search, and an external prover bridge.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::trs::{Term, Trs, TrsRule};

/// `c + sum coeffs[v] * v` over the naturals.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Linear {
    pub constant: u64,
    pub coeffs: BTreeMap<String, u64>,
}

impl Linear {
    fn var(x: &str) -> Linear {
        Linear {
            constant: 0,
            coeffs: BTreeMap::from([(x.to_string(), 1)]),
        }
    }

    fn scale(&self, k: u64) -> Linear {
        Linear {
            constant: self.constant * k,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(_, c)| **c * k > 0)
                .map(|(v, c)| (v.clone(), c * k))
                .collect(),
        }
    }

    fn add(&mut self, o: &Linear) {
        self.constant += o.constant;
        for (v, c) in &o.coeffs {
            *self.coeffs.entry(v.clone()).or_insert(0) += c;
        }
    }

    /// `self >= o` for all assignments.
    pub fn geq(&self, o: &Linear) -> bool {
        self.constant >= o.constant
            && o.coeffs
                .iter()
                .all(|(v, c)| *c == 0 || self.coeffs.get(v).copied().unwrap_or(0) >= *c)
    }

    /// `self > o` for all assignments.
    pub fn gt(&self, o: &Linear) -> bool {
        self.geq(o) && self.constant > o.constant
    }
}

impl fmt::Display for Linear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (v, c) in &self.coeffs {
            match c {
                0 => {}
                1 => parts.push(v.clone()),
                _ => parts.push(format!("{c}{v}")),
            }
        }
        if self.constant > 0 || parts.is_empty() {
            parts.push(self.constant.to_string());
        }
        write!(f, "{}", parts.join(" + "))
    }
}

/// Interpretation of one symbol: constant and one coefficient per argument.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolPoly {
    pub constant: u64,
    pub coeffs: Vec<u64>,
}

pub type Interpretation = BTreeMap<String, SymbolPoly>;

pub fn interpret(i: &Interpretation, t: &Term) -> Option<Linear> {
    match t {
        Term::Var(x) => Some(Linear::var(x)),
        Term::App(f, args) => {
            let p = i.get(f)?;
            let mut out = Linear {
                constant: p.constant,
                coeffs: BTreeMap::new(),
            };
            for (a, c) in args.iter().zip(&p.coeffs) {
                if *c > 0 {
                    out.add(&interpret(i, a)?.scale(*c));
                }
            }
            Some(out)
        }
    }
}

/// Order of a rule under an interpretation: `Some(true)` strict,
/// `Some(false)` weak, `None` not decreasing (or symbols missing).
pub fn orient(i: &Interpretation, l: &Term, r: &Term) -> Option<bool> {
    let (pl, pr) = (interpret(i, l)?, interpret(i, r)?);
    if pl.gt(&pr) {
        Some(true)
    } else if pl.geq(&pr) {
        Some(false)
    } else {
        None
    }
}

const COEFFS: [u64; 3] = [0, 1, 2];

fn candidates(arity: usize, monotone: bool) -> Vec<SymbolPoly> {
    let mut out = Vec::new();
    let mut idx = vec![0usize; arity + 1];
    loop {
        let p = SymbolPoly {
            constant: COEFFS[idx[0]],
            coeffs: idx[1..].iter().map(|k| COEFFS[*k]).collect(),
        };
        if !monotone || p.coeffs.iter().all(|c| *c > 0) {
            out.push(p);
        }
        let mut j = 0;
        loop {
            if j == idx.len() {
                return order_candidates(out);
            }
            idx[j] += 1;
            if idx[j] < COEFFS.len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// Prefer small constants with unit coefficients first.
fn order_candidates(mut v: Vec<SymbolPoly>) -> Vec<SymbolPoly> {
    v.sort_by_key(|p| {
        let off_one = p.coeffs.iter().filter(|c| **c != 1).count();
        (off_one, p.constant, p.coeffs.iter().sum::<u64>())
    });
    v
}

/// Which of the leading pairs must be strict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strict {
    AnyOf(usize),
    AllOf(usize),
}

/// Search an interpretation orienting all `pairs` weakly and some or all of
/// the leading pairs strictly. `monotone` demands positive argument
/// coefficients. `budget` bounds the partial assignments visited.
pub fn find_interpretation(
    pairs: &[(Term, Term)],
    strict_from: Strict,
    signature: &BTreeMap<String, usize>,
    monotone: bool,
    budget: &mut u64,
) -> Option<Interpretation> {
    // symbols in first-occurrence order so that rules get checked early
    let mut order: Vec<String> = Vec::new();
    for (l, r) in pairs {
        for t in [l, r] {
            collect_syms(t, &mut order);
        }
    }
    let ready: Vec<Vec<usize>> = (0..order.len())
        .map(|k| {
            let known: BTreeSet<&String> = order[..=k].iter().collect();
            pairs
                .iter()
                .enumerate()
                .filter(|(_, (l, r))| {
                    let mut s = Vec::new();
                    collect_syms(l, &mut s);
                    collect_syms(r, &mut s);
                    s.iter().all(|x| known.contains(x))
                        && !(k > 0 && s.iter().all(|x| order[..k].contains(x)))
                })
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    let cands: Vec<Vec<SymbolPoly>> = order
        .iter()
        .map(|f| candidates(signature[f], monotone))
        .collect();
    let mut interp = Interpretation::new();
    let mut strict = vec![false; pairs.len()];
    search(pairs, strict_from, &order, &ready, &cands, 0, &mut interp, &mut strict, budget)
}

fn collect_syms(t: &Term, out: &mut Vec<String>) {
    if let Term::App(f, args) = t {
        if !out.contains(f) {
            out.push(f.clone());
        }
        args.iter().for_each(|a| collect_syms(a, out));
    }
}

#[allow(clippy::too_many_arguments)]
fn search(
    pairs: &[(Term, Term)],
    strict_from: Strict,
    order: &[String],
    ready: &[Vec<usize>],
    cands: &[Vec<SymbolPoly>],
    k: usize,
    interp: &mut Interpretation,
    strict: &mut Vec<bool>,
    budget: &mut u64,
) -> Option<Interpretation> {
    if k == order.len() {
        let ok = match strict_from {
            Strict::AnyOf(n) => strict[..n].iter().any(|s| *s),
            Strict::AllOf(_) => true,
        };
        return ok.then(|| interp.clone());
    }
    for c in &cands[k] {
        if *budget == 0 {
            return None;
        }
        *budget -= 1;
        interp.insert(order[k].clone(), c.clone());
        let mut ok = true;
        for &i in &ready[k] {
            match orient(interp, &pairs[i].0, &pairs[i].1) {
                Some(false) if matches!(strict_from, Strict::AllOf(n) if i < n) => {
                    ok = false;
                    break;
                }
                Some(s) => strict[i] = s,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            if let Some(found) = search(pairs, strict_from, order, ready, cands, k + 1, interp, strict, budget) {
                return Some(found);
            }
        }
        for &i in &ready[k] {
            strict[i] = false;
        }
    }
    interp.remove(&order[k]);
    None
}

pub type TermSubst = BTreeMap<String, Term>;

fn walk(t: &Term, s: &TermSubst) -> Term {
    match t {
        Term::Var(x) => match s.get(x) {
            Some(b) => walk(b, s),
            None => t.clone(),
        },
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| walk(a, s)).collect()),
    }
}

/// Most general unifier, if any.
pub fn unify(a: &Term, b: &Term) -> Option<TermSubst> {
    let mut s = TermSubst::new();
    let mut stack = vec![(a.clone(), b.clone())];
    while let Some((x, y)) = stack.pop() {
        let (x, y) = (walk(&x, &s), walk(&y, &s));
        match (&x, &y) {
            (Term::Var(v), Term::Var(w)) if v == w => {}
            (Term::Var(v), t) | (t, Term::Var(v)) => {
                if t.var_set().contains(v) {
                    return None;
                }
                s.insert(v.clone(), t.clone());
            }
            (Term::App(f, fa), Term::App(g, ga)) => {
                if f != g || fa.len() != ga.len() {
                    return None;
                }
                stack.extend(fa.iter().cloned().zip(ga.iter().cloned()));
            }
        }
    }
    let keys: Vec<String> = s.keys().cloned().collect();
    let mut out = TermSubst::new();
    for k in keys {
        out.insert(k.clone(), walk(&Term::Var(k), &s));
    }
    Some(out)
}

/// Rename all variables with a suffix.
pub fn rename(t: &Term, suffix: &str) -> Term {
    match t {
        Term::Var(x) => Term::Var(format!("{x}{suffix}")),
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| rename(a, suffix)).collect()),
    }
}

pub fn is_subterm(small: &Term, big: &Term) -> bool {
    small == big
        || match big {
            Term::App(_, args) => args.iter().any(|a| is_subterm(small, a)),
            Term::Var(_) => false,
        }
}

fn sharp(f: &str) -> String {
    format!("{f}#")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyPair {
    pub lhs: Term,
    pub rhs: Term,
    /// Index of the rule the pair comes from.
    pub rule: usize,
}

impl fmt::Display for DependencyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.lhs, self.rhs)
    }
}

pub fn dependency_pairs(trs: &Trs) -> Vec<DependencyPair> {
    let defined = trs.defined();
    let mut out = Vec::new();
    for (i, r) in trs.rules.iter().enumerate() {
        let Term::App(f, largs) = &r.lhs else { continue };
        let mut subs = Vec::new();
        collect_defined(&r.rhs, &defined, &mut subs);
        for u in subs {
            if u != r.lhs && is_subterm(&u, &r.lhs) {
                continue;
            }
            let Term::App(g, uargs) = u else { unreachable!() };
            let dp = DependencyPair {
                lhs: Term::App(sharp(f), largs.clone()),
                rhs: Term::App(sharp(&g), uargs),
                rule: i,
            };
            if !out.contains(&dp) {
                out.push(dp);
            }
        }
    }
    out
}

fn collect_defined(t: &Term, defined: &BTreeSet<String>, out: &mut Vec<Term>) {
    if let Term::App(f, args) = t {
        if defined.contains(f) {
            out.push(t.clone());
        }
        args.iter().for_each(|a| collect_defined(a, defined, out));
    }
}

/// Replace defined-rooted subterms by fresh variables.
fn cap(t: &Term, defined: &BTreeSet<String>, n: &mut usize) -> Term {
    match t {
        Term::Var(x) => Term::Var(format!("{x}~")),
        Term::App(f, args) => {
            if defined.contains(f) {
                *n += 1;
                Term::Var(format!("_cap{n}"))
            } else {
                Term::App(f.clone(), args.iter().map(|a| cap(a, defined, n)).collect())
            }
        }
    }
}

/// Estimated dependency graph: an edge when the capped right side of one
/// pair unifies with the left side of another.
pub fn dependency_graph(trs: &Trs, dps: &[DependencyPair]) -> Vec<Vec<usize>> {
    let defined = trs.defined();
    dps.iter()
        .map(|p| {
            let Term::App(g, args) = &p.rhs else { return vec![] };
            let mut n = 0;
            let capped = Term::App(g.clone(), args.iter().map(|a| cap(a, &defined, &mut n)).collect());
            dps.iter()
                .enumerate()
                .filter(|(_, q)| unify(&capped, &rename(&q.lhs, "'")).is_some())
                .map(|(j, _)| j)
                .collect()
        })
        .collect()
}

/// Strongly connected components containing at least one edge, in
/// discovery order.
pub fn sccs(nodes: &[usize], edges: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let inside: BTreeSet<usize> = nodes.iter().copied().collect();
    let reach = |from: usize| -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<usize> = edges[from].iter().copied().filter(|j| inside.contains(j)).collect();
        while let Some(n) = stack.pop() {
            if seen.insert(n) {
                stack.extend(edges[n].iter().copied().filter(|j| inside.contains(j)));
            }
        }
        seen
    };
    let reaches: BTreeMap<usize, BTreeSet<usize>> = nodes.iter().map(|&n| (n, reach(n))).collect();
    let mut done = BTreeSet::new();
    let mut out = Vec::new();
    for &n in nodes {
        if done.contains(&n) || !reaches[&n].contains(&n) {
            continue;
        }
        let comp: Vec<usize> = nodes
            .iter()
            .copied()
            .filter(|m| reaches[&n].contains(m) && reaches[m].contains(&n))
            .collect();
        done.extend(comp.iter().copied());
        out.push(comp);
    }
    out
}

/// Projection of tuple symbols to argument positions.
pub type Projection = BTreeMap<String, usize>;

fn project<'t>(pi: &Projection, t: &'t Term) -> Option<&'t Term> {
    match t {
        Term::App(f, args) => args.get(*pi.get(f)?),
        Term::Var(_) => None,
    }
}

/// Subterm criterion on a component: a projection with all pairs weakly
/// and some strictly decreasing. Returns the projection and strict pairs.
pub fn subterm_criterion(dps: &[DependencyPair], comp: &[usize]) -> Option<(Projection, Vec<usize>)> {
    let mut syms: Vec<(String, usize)> = Vec::new();
    for &i in comp {
        for t in [&dps[i].lhs, &dps[i].rhs] {
            if let Term::App(f, args) = t {
                if !syms.iter().any(|(g, _)| g == f) {
                    syms.push((f.clone(), args.len()));
                }
            }
        }
    }
    if syms.iter().any(|(_, a)| *a == 0) {
        return None;
    }
    let mut idx = vec![0usize; syms.len()];
    loop {
        let pi: Projection = syms.iter().zip(&idx).map(|((f, _), k)| (f.clone(), *k)).collect();
        if let Some(strict) = check_projection(dps, comp, &pi) {
            return Some((pi, strict));
        }
        let mut j = 0;
        loop {
            if j == idx.len() {
                return None;
            }
            idx[j] += 1;
            if idx[j] < syms[j].1 {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

pub fn check_projection(dps: &[DependencyPair], comp: &[usize], pi: &Projection) -> Option<Vec<usize>> {
    let mut strict = Vec::new();
    for &i in comp {
        let (l, r) = (project(pi, &dps[i].lhs)?, project(pi, &dps[i].rhs)?);
        if l == r {
            continue;
        }
        if is_subterm(r, l) {
            strict.push(i);
        } else {
            return None;
        }
    }
    (!strict.is_empty()).then_some(strict)
}

/// Symbols whose first argument is a counter: every rule rooted by them
/// has `s(var)` there.
pub fn counter_symbols(trs: &Trs) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for f in trs.defined() {
        let rooted: Vec<&TrsRule> = trs
            .rules
            .iter()
            .filter(|r| matches!(&r.lhs, Term::App(g, _) if *g == f))
            .collect();
        let ok = rooted.iter().all(|r| match &r.lhs {
            Term::App(_, args) => matches!(args.first(),
                Some(Term::App(s, a)) if s == "s" && matches!(a.as_slice(), [Term::Var(_)])),
            _ => false,
        });
        if ok {
            out.insert(f);
        }
    }
    out
}

/// Every free right-hand-side variable sits directly in a counter position.
pub fn free_vars_at_counters(trs: &Trs) -> bool {
    let counters = counter_symbols(trs);
    fn ok(t: &Term, free: &BTreeSet<String>, counters: &BTreeSet<String>) -> bool {
        match t {
            Term::Var(x) => !free.contains(x),
            Term::App(f, args) => args.iter().enumerate().all(|(i, a)| {
                (i == 0 && counters.contains(f) && matches!(a, Term::Var(_))) || ok(a, free, counters)
            }),
        }
    }
    trs.rules.iter().all(|r| {
        let free = r.free_rhs_vars();
        free.is_empty() || ok(&r.rhs, &free, &counters)
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ComponentStep {
    Subterm { projection: Projection, removed: Vec<usize> },
    /// Weakly monotone interpretation orienting all rules weakly.
    ReductionPair { interpretation: Interpretation, removed: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProofStep {
    RuleRemoval {
        interpretation: Interpretation,
        removed: Vec<TrsRule>,
    },
    DependencyPairs {
        pairs: Vec<DependencyPair>,
        components: Vec<(Vec<usize>, Vec<ComponentStep>)>,
    },
    /// Lexicographic (interpretation of the counter-erased term, counter
    /// size) for systems with counter symbols.
    CounterTemplate { interpretation: Interpretation, counters: BTreeSet<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Certificate {
    Steps(Vec<ProofStep>),
    External { tool: String, output: String },
}

/// One rewrite step of a loop witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopStep {
    pub rule: usize,
    pub position: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopWitness {
    pub start: Term,
    pub steps: Vec<LoopStep>,
    /// Position in the final term of the instance of `start`.
    pub position: Vec<usize>,
}

impl fmt::Display for LoopWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rules: Vec<String> = self.steps.iter().map(|s| format!("{}", s.rule + 1)).collect();
        write!(f, "{} via rules [{}]", self.start, rules.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Proved(Certificate),
    Disproved(LoopWitness),
    Unknown { reason: String, loop_hint: Option<LoopWitness> },
}

impl Verdict {
    pub fn is_proved(&self) -> bool {
        matches!(self, Verdict::Proved(_))
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Verdict::Proved(_) => "Proved",
            Verdict::Disproved(_) => "Disproved",
            Verdict::Unknown { .. } => "Unknown",
        }
    }
}

const POLY_BUDGET: u64 = 2_000_000;

fn rule_pairs(rules: &[TrsRule]) -> Vec<(Term, Term)> {
    rules.iter().map(|r| (r.lhs.clone(), r.rhs.clone())).collect()
}

fn removal_steps(trs: &Trs) -> (Vec<ProofStep>, Vec<TrsRule>) {
    let sig = trs.signature();
    let mut rest = trs.rules.clone();
    let mut steps = Vec::new();
    let mut budget = POLY_BUDGET;
    while !rest.is_empty() {
        let pairs = rule_pairs(&rest);
        let Some(i) = find_interpretation(&pairs, Strict::AnyOf(pairs.len()), &sig, true, &mut budget) else { break };
        let (gone, keep): (Vec<TrsRule>, Vec<TrsRule>) = rest
            .into_iter()
            .partition(|r| orient(&i, &r.lhs, &r.rhs) == Some(true));
        steps.push(ProofStep::RuleRemoval { interpretation: i, removed: gone });
        rest = keep;
    }
    (steps, rest)
}

fn dp_signature(trs: &Trs, dps: &[DependencyPair]) -> BTreeMap<String, usize> {
    let mut sig = trs.signature();
    for p in dps {
        for t in [&p.lhs, &p.rhs] {
            if let Term::App(f, a) = t {
                sig.insert(f.clone(), a.len());
            }
        }
    }
    sig
}

fn prove_component(
    trs: &Trs,
    dps: &[DependencyPair],
    edges: &[Vec<usize>],
    comp: &[usize],
    budget: &mut u64,
) -> Option<Vec<ComponentStep>> {
    let sig = dp_signature(trs, dps);
    let mut steps = Vec::new();
    let mut work = vec![comp.to_vec()];
    while let Some(c) = work.pop() {
        let removed = if let Some((projection, removed)) = subterm_criterion(dps, &c) {
            steps.push(ComponentStep::Subterm { projection, removed: removed.clone() });
            removed
        } else {
            let mut pairs: Vec<(Term, Term)> = c.iter().map(|&i| (dps[i].lhs.clone(), dps[i].rhs.clone())).collect();
            let n = pairs.len();
            pairs.extend(rule_pairs(&trs.rules));
            let interpretation = find_interpretation(&pairs, Strict::AnyOf(n), &sig, false, budget)?;
            let removed: Vec<usize> = c
                .iter()
                .copied()
                .filter(|&i| orient(&interpretation, &dps[i].lhs, &dps[i].rhs) == Some(true))
                .collect();
            steps.push(ComponentStep::ReductionPair { interpretation, removed: removed.clone() });
            removed
        };
        let rest: Vec<usize> = c.into_iter().filter(|i| !removed.contains(i)).collect();
        work.extend(sccs(&rest, edges));
    }
    Some(steps)
}

fn dp_step(trs: &Trs) -> Option<ProofStep> {
    let pairs = dependency_pairs(trs);
    let edges = dependency_graph(trs, &pairs);
    let all: Vec<usize> = (0..pairs.len()).collect();
    let mut budget = POLY_BUDGET;
    let mut components = Vec::new();
    for c in sccs(&all, &edges) {
        let steps = prove_component(trs, &pairs, &edges, &c, &mut budget)?;
        components.push((c, steps));
    }
    Some(ProofStep::DependencyPairs { pairs, components })
}

/// Replace each counter symbol `W(k, xs)` by `W(xs)`.
fn erase_counters(t: &Term, counters: &BTreeSet<String>) -> Term {
    match t {
        Term::Var(_) => t.clone(),
        Term::App(f, args) => {
            let skip = usize::from(counters.contains(f));
            Term::App(f.clone(), args[skip..].iter().map(|a| erase_counters(a, counters)).collect())
        }
    }
}

fn occurrences(t: &Term, x: &str) -> usize {
    match t {
        Term::Var(y) => usize::from(x == y),
        Term::App(_, args) => args.iter().map(|a| occurrences(a, x)).sum(),
    }
}

fn counter_args_ok(t: &Term, k: &Term, counters: &BTreeSet<String>) -> bool {
    match t {
        Term::Var(_) => true,
        Term::App(f, args) => {
            (!counters.contains(f) || args.first() == Some(k))
                && args.iter().all(|a| counter_args_ok(a, k, counters))
        }
    }
}

/// Side conditions of the counter template apart from the interpretation.
fn counter_shape_ok(trs: &Trs, counters: &BTreeSet<String>) -> bool {
    !counters.is_empty()
        && trs.rules.iter().all(|r| {
            let Term::App(f, args) = &r.lhs else { return false };
            if !counters.contains(f) {
                return true;
            }
            let Some(Term::App(_, sk)) = args.first() else { return false };
            let k = &sk[0];
            let nondup = r.lhs.var_set().iter().all(|v| occurrences(&r.rhs, v) <= occurrences(&r.lhs, v));
            nondup && counter_args_ok(&r.rhs, k, counters)
        })
}

fn counter_step(trs: &Trs) -> Option<ProofStep> {
    let counters = counter_symbols(trs);
    if !counter_shape_ok(trs, &counters) {
        return None;
    }
    let mut strict_pairs = Vec::new();
    let mut weak_pairs = Vec::new();
    for r in &trs.rules {
        let pair = (erase_counters(&r.lhs, &counters), erase_counters(&r.rhs, &counters));
        match &r.lhs {
            Term::App(f, _) if counters.contains(f) => weak_pairs.push(pair),
            _ => strict_pairs.push(pair),
        }
    }
    let mut sig = BTreeMap::new();
    for (l, r) in strict_pairs.iter().chain(&weak_pairs) {
        for t in [l, r] {
            signature_of(t, &mut sig);
        }
    }
    let n = strict_pairs.len();
    let mut pairs = strict_pairs;
    pairs.extend(weak_pairs);
    let mut budget = POLY_BUDGET;
    let interpretation = find_interpretation(&pairs, Strict::AllOf(n), &sig, true, &mut budget)?;
    Some(ProofStep::CounterTemplate { interpretation, counters })
}

fn signature_of(t: &Term, out: &mut BTreeMap<String, usize>) {
    if let Term::App(f, args) = t {
        out.insert(f.clone(), args.len());
        args.iter().for_each(|a| signature_of(a, out));
    }
}

/// Run the built-in portfolio, then the loop search when no proof is found.
pub fn prove_innermost_termination(trs: &Trs) -> Verdict {
    if trs.rules.iter().any(|r| matches!(r.lhs, Term::Var(_))) {
        return Verdict::Unknown { reason: "a left-hand side is a variable".into(), loop_hint: None };
    }
    if !free_vars_at_counters(trs) {
        return Verdict::Unknown {
            reason: "free right-hand-side variable outside a counter position".into(),
            loop_hint: None,
        };
    }
    if let Some(cert) = find_certificate(trs) {
        return Verdict::Proved(cert);
    }
    match detect_nontermination(trs, 5) {
        Some(w) if loop_is_innermost(trs, &w) => Verdict::Disproved(w),
        hint => Verdict::Unknown { reason: "no technique applied".into(), loop_hint: hint },
    }
}

fn find_certificate(trs: &Trs) -> Option<Certificate> {
    let (mut steps, rest) = removal_steps(trs);
    if rest.is_empty() {
        return Some(Certificate::Steps(steps));
    }
    let rest = Trs::new(rest);
    if let Some(s) = dp_step(&rest).or_else(|| counter_step(&rest)) {
        steps.push(s);
        return Some(Certificate::Steps(steps));
    }
    None
}

/// Check a built-in certificate against the system it claims to prove.
pub fn replay_certificate(trs: &Trs, cert: &Certificate) -> Result<(), String> {
    let Certificate::Steps(steps) = cert else {
        return Err("external certificates cannot be replayed".into());
    };
    let mut rest = trs.rules.clone();
    for (n, step) in steps.iter().enumerate() {
        match step {
            ProofStep::RuleRemoval { interpretation, removed } => {
                if interpretation.values().any(|p| p.coeffs.contains(&0)) {
                    return Err(format!("step {n}: interpretation is not strictly monotone"));
                }
                if removed.is_empty() {
                    return Err(format!("step {n}: nothing removed"));
                }
                for r in &rest {
                    match orient(interpretation, &r.lhs, &r.rhs) {
                        Some(true) => {}
                        Some(false) if !removed.contains(r) => {}
                        _ => return Err(format!("step {n}: rule {r} is not oriented")),
                    }
                }
                rest.retain(|r| !removed.contains(r));
            }
            ProofStep::DependencyPairs { pairs, components } => {
                let sub = Trs::new(rest.clone());
                if *pairs != dependency_pairs(&sub) {
                    return Err(format!("step {n}: dependency pairs differ"));
                }
                let edges = dependency_graph(&sub, pairs);
                let all: Vec<usize> = (0..pairs.len()).collect();
                let mut open = sccs(&all, &edges);
                for (comp, csteps) in components {
                    let Some(k) = open.iter().position(|c| c == comp) else {
                        return Err(format!("step {n}: {comp:?} is not a component"));
                    };
                    open.remove(k);
                    replay_component(&sub, pairs, &edges, comp, csteps).map_err(|e| format!("step {n}: {e}"))?;
                }
                if !open.is_empty() {
                    return Err(format!("step {n}: components left open"));
                }
                rest.clear();
            }
            ProofStep::CounterTemplate { interpretation, counters } => {
                let sub = Trs::new(rest.clone());
                if *counters != counter_symbols(&sub) || !counter_shape_ok(&sub, counters) {
                    return Err(format!("step {n}: not a counter system"));
                }
                if interpretation.values().any(|p| p.coeffs.contains(&0)) {
                    return Err(format!("step {n}: interpretation is not strictly monotone"));
                }
                for r in &rest {
                    let (l, rr) = (erase_counters(&r.lhs, counters), erase_counters(&r.rhs, counters));
                    let at_counter = matches!(&r.lhs, Term::App(f, _) if counters.contains(f));
                    match orient(interpretation, &l, &rr) {
                        Some(true) => {}
                        Some(false) if at_counter => {}
                        _ => return Err(format!("step {n}: rule {r} is not oriented")),
                    }
                }
                rest.clear();
            }
        }
    }
    if rest.is_empty() {
        Ok(())
    } else {
        Err(format!("{} rules remain", rest.len()))
    }
}

fn replay_component(
    trs: &Trs,
    dps: &[DependencyPair],
    edges: &[Vec<usize>],
    comp: &[usize],
    steps: &[ComponentStep],
) -> Result<(), String> {
    let mut open = vec![comp.to_vec()];
    for s in steps {
        let Some(c) = open.pop() else { return Err("more steps than components".into()) };
        let removed = match s {
            ComponentStep::Subterm { projection, removed } => {
                let strict = check_projection(dps, &c, projection).ok_or("projection does not apply")?;
                if strict != *removed {
                    return Err("strict pairs differ".into());
                }
                removed
            }
            ComponentStep::ReductionPair { interpretation, removed } => {
                for r in &trs.rules {
                    if orient(interpretation, &r.lhs, &r.rhs).is_none() {
                        return Err(format!("rule {r} is not weakly oriented"));
                    }
                }
                for &i in &c {
                    let o = orient(interpretation, &dps[i].lhs, &dps[i].rhs);
                    if o.is_none() || (removed.contains(&i) && o != Some(true)) {
                        return Err(format!("pair {} is not oriented", dps[i]));
                    }
                }
                if removed.is_empty() {
                    return Err("nothing removed".into());
                }
                removed
            }
        };
        let rest: Vec<usize> = c.into_iter().filter(|i| !removed.contains(i)).collect();
        open.extend(sccs(&rest, edges));
    }
    if open.is_empty() {
        Ok(())
    } else {
        Err("pairs remain".into())
    }
}

const LOOP_STATES: usize = 20_000;
const LOOP_TERM_SIZE: usize = 40;

fn rename_rule(r: &TrsRule, suffix: &str) -> (Term, Term) {
    (rename(&r.lhs, suffix), rename(&r.rhs, suffix))
}

/// Forward-closure search for `s ->+ C[s sigma]` with at most `depth`
/// steps.
pub fn detect_nontermination(trs: &Trs, depth: usize) -> Option<LoopWitness> {
    struct State {
        s: Term,
        t: Term,
        steps: Vec<LoopStep>,
    }
    let mut layer: Vec<State> = trs
        .rules
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let (s, t) = rename_rule(r, "_0");
            State { s, t, steps: vec![LoopStep { rule: i, position: vec![] }] }
        })
        .collect();
    let mut visited = 0usize;
    for d in 1..=depth {
        for st in &layer {
            for p in st.t.positions() {
                let mut m = TermSubst::new();
                if st.s.matches(st.t.at(&p), &mut m) {
                    let w = LoopWitness { start: st.s.clone(), steps: st.steps.clone(), position: p };
                    if replay_loop(trs, &w) {
                        return Some(w);
                    }
                }
            }
        }
        if d == depth {
            break;
        }
        let mut next = Vec::new();
        let suffix = format!("_{d}");
        for st in &layer {
            for p in st.t.positions() {
                let sub = st.t.at(&p);
                if matches!(sub, Term::Var(_)) {
                    continue;
                }
                for (j, r) in trs.rules.iter().enumerate() {
                    let (l, rr) = rename_rule(r, &suffix);
                    let Some(theta) = unify(sub, &l) else { continue };
                    let s = st.s.subst(&theta);
                    let t = st.t.replace(&p, rr).subst(&theta);
                    if s.size() + t.size() > LOOP_TERM_SIZE {
                        continue;
                    }
                    let mut steps = st.steps.clone();
                    steps.push(LoopStep { rule: j, position: p.clone() });
                    next.push(State { s, t, steps });
                    visited += 1;
                    if visited > LOOP_STATES {
                        return None;
                    }
                }
            }
        }
        layer = next;
    }
    None
}

/// Terms of the derivation recorded in a witness, or `None` if a step does
/// not apply.
fn derivation(trs: &Trs, w: &LoopWitness) -> Option<Vec<Term>> {
    let mut cur = w.start.clone();
    let mut out = vec![cur.clone()];
    for st in &w.steps {
        let r = trs.rules.get(st.rule)?;
        if st.position.len() > cur.depth() {
            return None;
        }
        let sub = at_checked(&cur, &st.position)?;
        let mut m = TermSubst::new();
        if !r.lhs.matches(sub, &mut m) {
            return None;
        }
        cur = cur.replace(&st.position, r.rhs.subst(&m));
        out.push(cur.clone());
    }
    Some(out)
}

fn at_checked<'t>(t: &'t Term, p: &[usize]) -> Option<&'t Term> {
    match (t, p.split_first()) {
        (_, None) => Some(t),
        (Term::App(_, args), Some((i, rest))) => at_checked(args.get(*i)?, rest),
        _ => None,
    }
}

/// Applying the recorded steps to the start term yields a term containing
/// an instance of the start term at the recorded position.
pub fn replay_loop(trs: &Trs, w: &LoopWitness) -> bool {
    if w.steps.is_empty() {
        return false;
    }
    let Some(terms) = derivation(trs, w) else { return false };
    let last = terms.last().expect("non-empty");
    let Some(sub) = at_checked(last, &w.position) else { return false };
    w.start.matches(sub, &mut TermSubst::new())
}

/// Every redex of the loop has arguments built from constructors and
/// variables only, so all its instances by normal forms are innermost.
pub fn loop_is_innermost(trs: &Trs, w: &LoopWitness) -> bool {
    let defined = trs.defined();
    let Some(terms) = derivation(trs, w) else { return false };
    w.steps.iter().zip(&terms).all(|(st, t)| match at_checked(t, &st.position) {
        Some(Term::App(_, args)) => args.iter().all(|a| {
            let mut found = Vec::new();
            collect_defined(a, &defined, &mut found);
            found.is_empty()
        }),
        _ => false,
    })
}

/// How to call an external prover: `{file}` in the template is replaced by
/// the problem path, otherwise the path is appended.
#[derive(Debug, Clone)]
pub struct ExternalProver {
    pub command: String,
    pub timeout: std::time::Duration,
}

pub fn run_external_prover(trs: &Trs, prover: &ExternalProver) -> Verdict {
    let unknown = |reason: String| Verdict::Unknown { reason, loop_hint: None };
    let path = std::env::temp_dir().join(format!(
        "lrsx-{}-{}.trs",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos())
            .unwrap_or(0)
    ));
    if let Err(e) = std::fs::write(&path, crate::trs::emit_tpdb(trs)) {
        return unknown(format!("external-error: {e}"));
    }
    let file = path.to_string_lossy().to_string();
    let mut words: Vec<String> = prover.command.split_whitespace().map(|w| w.replace("{file}", &file)).collect();
    if !prover.command.contains("{file}") {
        words.push(file.clone());
    }
    let Some((prog, args)) = words.split_first() else {
        return unknown("external-error: empty command".into());
    };
    let child = std::process::Command::new(prog)
        .args(args)
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::null())
        .spawn();
    let mut child = match child {
        Ok(c) => c,
        Err(e) => return unknown(format!("external-error: {e}")),
    };
    let start = std::time::Instant::now();
    let verdict = loop {
        match child.try_wait() {
            Ok(Some(_)) => {
                let mut out = String::new();
                if let Some(mut so) = child.stdout.take() {
                    use std::io::Read;
                    let _ = so.read_to_string(&mut out);
                }
                break parse_prover_output(&out, &prover.command);
            }
            Ok(None) if start.elapsed() >= prover.timeout => {
                let _ = child.kill();
                let _ = child.wait();
                break unknown("external-error: timeout".into());
            }
            Ok(None) => std::thread::sleep(std::time::Duration::from_millis(10)),
            Err(e) => break unknown(format!("external-error: {e}")),
        }
    };
    let _ = std::fs::remove_file(&path);
    verdict
}

/// The first non-empty line decides: YES, NO or MAYBE.
pub fn parse_prover_output(out: &str, tool: &str) -> Verdict {
    let first = out.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    match first {
        "YES" => Verdict::Proved(Certificate::External { tool: tool.to_string(), output: out.to_string() }),
        "NO" => Verdict::Unknown { reason: "external prover answered NO".into(), loop_hint: None },
        "MAYBE" => Verdict::Unknown { reason: "external prover answered MAYBE".into(), loop_hint: None },
        other => Verdict::Unknown { reason: format!("malformed prover output: '{other}'"), loop_hint: None },
    }
}
