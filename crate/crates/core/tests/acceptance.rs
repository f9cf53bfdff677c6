//! Acceptance suite: one line per criterion, exit status 1 if any fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use lrsx_core::calculus::{Calculus, Side};
use lrsx_core::diagram::{parse_diagrams, Arrow, Diagram};
use lrsx_core::ground::{check_determinism, converges, enumerate_ground, Convergence};
use lrsx_core::join::{join_all, JoinReport, SearchConfig};
use lrsx_core::oracle::{
    convergence_equivalence, replay_induction, validate_diagrams, Analysed, OracleConfig,
};
use lrsx_core::parse::parse;
use lrsx_core::termination::{
    detect_nontermination, prove_innermost_termination, replay_certificate, replay_loop, Verdict,
};
use lrsx_core::trs::{emit_tpdb, encode_diagrams, parse_tpdb, Trs};

type Check = Result<String, String>;

fn simple() -> Calculus {
    parse(include_str!("../fixtures/simple.inp")).expect("simple fixture")
}

fn mini_letrec() -> Calculus {
    parse(include_str!("../fixtures/mini_letrec.inp")).expect("mini-letrec fixture")
}

fn join(calc: &Calculus, t: &str, side: Side) -> JoinReport {
    join_all(calc, t, None, side, &SearchConfig::from_calculus(calc)).expect("join runs")
}

fn strings(ds: &[Diagram]) -> BTreeSet<String> {
    ds.iter().map(|d| d.to_string()).collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

const SIMPLE_FORKING: [&str; 5] = [
    "<-SR,bot- . -top-> ~~> <-SR,bot-",
    "<-SR,bot- . -top-> ~~> -top-> . <-SR,bot-",
    "<-SR,top- . -top-> ~~> -top-> . <-SR,top-",
    "<-SR,neg- . -top-> ~~> -top-> . <-SR,neg-",
    "<-SR,top- . -top-> ~~>",
];

const SIMPLE_COMMUTING: [&str; 8] = [
    "<-SR,bot- . -top-> ~~> <-SR,bot-",
    "<-SR,bot- . -top-> ~~> <-SR,bot- . <-SR,top-",
    "<-SR,top- . -top-> ~~> <-SR,top- . <-SR,top-",
    "<-SR,neg- . -top-> ~~> <-SR,neg- . <-SR,top-",
    "<-SR,bot- . -top-> ~~> -top-> . <-SR,bot-",
    "<-SR,top- . -top-> ~~> -top-> . <-SR,top-",
    "<-SR,neg- . -top-> ~~> -top-> . <-SR,neg-",
    "<-ANSWER- . -top-> ~~> <-ANSWER- . <-SR,top-",
];

fn criterion_1() -> Check {
    let c = simple();
    let mut detail = Vec::new();
    for (cmd, side, want) in [
        ("forking", Side::Left, &SIMPLE_FORKING[..]),
        ("commuting", Side::Right, &SIMPLE_COMMUTING[..]),
    ] {
        let rep = join(&c, "top", side);
        ensure(rep.all_joined(), || format!("{cmd}: {}/{} joined", rep.joined(), rep.overlaps.len()))?;
        let want: BTreeSet<String> = want.iter().map(|s| s.to_string()).collect();
        let got = strings(&rep.diagrams);
        ensure(got == want, || format!("{cmd}: got {got:?}"))?;
        detail.push(format!("{cmd} {}/{} joined, {} diagrams", rep.joined(), rep.overlaps.len(), got.len()));
    }
    Ok(detail.join("; "))
}

/// Minimal TPDB reader independent of the library: `(VAR ..)`,
/// `(STRATEGY INNERMOST)`, `(RULES l -> r ...)`, terms `f(t,..)` or `c`.
mod tpdb {
    #[derive(Debug, PartialEq)]
    pub enum T {
        V(String),
        F(String, Vec<T>),
    }

    fn tokens(s: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut cur = String::new();
        let cs: Vec<char> = s.chars().collect();
        let mut i = 0;
        while i < cs.len() {
            let ch = cs[i];
            if ch == '-' && cs.get(i + 1) == Some(&'>') {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push("->".into());
                i += 2;
                continue;
            }
            if ch.is_whitespace() || "(),".contains(ch) {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                if !ch.is_whitespace() {
                    out.push(ch.to_string());
                }
            } else {
                cur.push(ch);
            }
            i += 1;
        }
        if !cur.is_empty() {
            out.push(cur);
        }
        out
    }

    struct P {
        t: Vec<String>,
        i: usize,
        vars: Vec<String>,
    }

    impl P {
        fn eat(&mut self, s: &str) -> Result<(), String> {
            if self.t.get(self.i).map(String::as_str) == Some(s) {
                self.i += 1;
                Ok(())
            } else {
                Err(format!("expected '{s}' at token {} ({:?})", self.i, self.t.get(self.i)))
            }
        }

        fn ident(&mut self) -> Result<String, String> {
            match self.t.get(self.i) {
                Some(s) if !["(", ")", ",", "->"].contains(&s.as_str()) => {
                    self.i += 1;
                    Ok(s.clone())
                }
                other => Err(format!("expected identifier, found {other:?}")),
            }
        }

        fn term(&mut self) -> Result<T, String> {
            let f = self.ident()?;
            if self.t.get(self.i).map(String::as_str) != Some("(") {
                return Ok(if self.vars.contains(&f) { T::V(f) } else { T::F(f, vec![]) });
            }
            self.eat("(")?;
            let mut args = vec![self.term()?];
            while self.t.get(self.i).map(String::as_str) == Some(",") {
                self.i += 1;
                args.push(self.term()?);
            }
            self.eat(")")?;
            Ok(T::F(f, args))
        }
    }

    pub struct File {
        pub vars: Vec<String>,
        pub innermost: bool,
        pub rules: Vec<(T, T)>,
    }

    pub fn parse(s: &str) -> Result<File, String> {
        let mut p = P { t: tokens(s), i: 0, vars: vec![] };
        let mut innermost = false;
        let mut rules = Vec::new();
        while p.i < p.t.len() {
            p.eat("(")?;
            match p.ident()?.as_str() {
                "VAR" => {
                    while p.t.get(p.i).map(String::as_str) != Some(")") {
                        let v = p.ident()?;
                        p.vars.push(v);
                    }
                }
                "STRATEGY" => {
                    innermost = p.ident()? == "INNERMOST";
                }
                "RULES" => {
                    while p.t.get(p.i).map(String::as_str) != Some(")") {
                        let l = p.term()?;
                        p.eat("->")?;
                        let r = p.term()?;
                        if matches!(l, T::V(_)) {
                            return Err("variable left-hand side".into());
                        }
                        rules.push((l, r));
                    }
                }
                other => return Err(format!("unknown section {other}")),
            }
            p.eat(")")?;
        }
        Ok(File { vars: p.vars, innermost, rules })
    }
}

fn proved(t: &Trs) -> Result<(), String> {
    match prove_innermost_termination(t) {
        Verdict::Proved(c) => replay_certificate(t, &c).map_err(|e| format!("certificate does not replay: {e}")),
        v => Err(format!("{}: {v:?}", v.tag())),
    }
}

fn criterion_2() -> Check {
    let c = simple();
    let mut detail = Vec::new();
    for (cmd, side) in [("forking", Side::Left), ("commuting", Side::Right)] {
        let trs = encode_diagrams(&join(&c, "top", side).diagrams);
        proved(&trs).map_err(|e| format!("{cmd}: {e}"))?;
        let text = emit_tpdb(&trs);
        let f = tpdb::parse(&text).map_err(|e| format!("{cmd}: independent grammar rejects TPDB: {e}"))?;
        ensure(f.innermost, || format!("{cmd}: strategy is not innermost"))?;
        ensure(f.rules.len() == trs.rules.len(), || format!("{cmd}: rule count differs"))?;
        detail.push(format!("{cmd} {} rules Proved, {} vars", f.rules.len(), f.vars.len()));
    }
    Ok(detail.join("; "))
}

const GC_FORKING_RULES: [&str; 5] = [
    "gcT(SRlbeta(x)) -> SRlbeta(gcT(x))",
    "gcT(SRcp(x)) -> SRcp(gcT(x))",
    "gcT(SRlll(x)) -> SRlll(gcT(x))",
    "gcT(SRlll(x)) -> gcT(x)",
    "gcT(Answer) -> Answer",
];

/// The diagram's own symbol is numbered by position, so compare with the
/// symbol written as `W`.
const GC_CLOSURE_RULES: [&str; 3] = [
    "gcT(SRlbeta(x)) -> W(k,x)",
    "W(s(k),x) -> SRlll(W(k,x))",
    "W(s(k),x) -> SRlll(SRlbeta(gcT(x)))",
];

fn criterion_3() -> Check {
    let fork = encode_diagrams(&parse_diagrams(include_str!("../fixtures/gc_forking.diag")).map_err(|e| e.to_string())?);
    let got: Vec<String> = fork.rules.iter().map(|r| r.to_string()).collect();
    ensure(got == GC_FORKING_RULES, || format!("forking encoding {got:?}"))?;
    let comm_ds = parse_diagrams(include_str!("../fixtures/gc_commuting_closure.diag")).map_err(|e| e.to_string())?;
    let comm = encode_diagrams(&comm_ds);
    let got: Vec<String> = comm.rules.iter().map(|r| r.to_string().replace("W1", "W")).collect();
    ensure(got == GC_CLOSURE_RULES, || format!("closure encoding {got:?}"))?;
    proved(&fork).map_err(|e| format!("forking system: {e}"))?;
    proved(&comm).map_err(|e| format!("closure system: {e}"))?;
    Ok(format!("{} + {} rules match, both Proved", fork.rules.len(), comm.rules.len()))
}

fn criterion_4() -> Check {
    let t = parse_tpdb(include_str!("../fixtures/cpt.trs")).map_err(|e| e.to_string())?;
    let v = prove_innermost_termination(&t);
    ensure(!v.is_proved(), || "cpT system was Proved".into())?;
    let w = detect_nontermination(&t, 5).ok_or("no loop within depth 5")?;
    ensure(replay_loop(&t, &w), || format!("loop does not replay: {w}"))?;
    Ok(format!("verdict {}, loop {w} of {} steps", v.tag(), w.steps.len()))
}

const ORACLE_SIZE: usize = 7;

fn simple_sets(c: &Calculus) -> [(&'static str, bool, Vec<Diagram>); 2] {
    [
        ("forking", false, join(c, "top", Side::Left).diagrams),
        ("commuting", true, join(c, "top", Side::Right).diagrams),
    ]
}

fn criterion_5() -> Check {
    let c = simple();
    let cfg = OracleConfig { max_size: ORACLE_SIZE, ..Default::default() };
    let exprs = enumerate_ground(&c, ORACLE_SIZE);
    // (a)
    let nondet = check_determinism(&c, &exprs);
    ensure(nondet.is_empty(), || format!("(a) {} non-deterministic expressions", nondet.len()))?;
    let mut detail = vec![format!("{} expressions", exprs.len())];
    for (cmd, rev, ds) in simple_sets(&c) {
        // (b)
        let an = Analysed::new(&c, "top", rev);
        let rep = validate_diagrams(&c, &an, &ds, cfg);
        ensure(rep.forks > 0 && rep.complete(), || {
            format!("(b) {cmd}: {}/{} covered, e.g. {:?}", rep.covered, rep.forks, rep.uncovered.first())
        })?;
        // (d)
        let mut replayed = 0;
        for e in &exprs {
            for t in an.forward_steps(&c, e) {
                let (src, tgt) = if rev { (t, e.clone()) } else { (e.clone(), t) };
                let Convergence::Converges(steps) = converges(&c, &src, 4 * src.size()) else { continue };
                let mut seq = vec![src.clone()];
                seq.extend(steps.into_iter().map(|s| s.target));
                replay_induction(&c, &an, &ds, &seq, &tgt, 10 * seq.len(), cfg)
                    .map_err(|err| format!("(d) {cmd}: {src} -> {tgt}: {err}"))?;
                replayed += 1;
            }
        }
        detail.push(format!("{cmd} {}/{} forks, {replayed} inductions replayed", rep.covered, rep.forks));
    }
    // (c)
    let eq = convergence_equivalence(&c, "top", ORACLE_SIZE, None);
    ensure(eq.mismatches.is_empty(), || format!("(c) {} mismatches, e.g. {:?}", eq.mismatches.len(), eq.mismatches[0]))?;
    detail.push(format!("{} steps convergence-equivalent", eq.pairs));
    Ok(detail.join("; "))
}

/// Words of a diagram's join with each closure unfolded 1..=`reps` times.
fn words(rhs: &[Arrow], reps: usize) -> BTreeSet<Vec<String>> {
    let mut out: BTreeSet<Vec<String>> = [vec![]].into_iter().collect();
    for a in rhs {
        let dir = if matches!(a, Arrow::Fwd(_)) { ">" } else { "<" };
        let base = format!("{dir}{}", a.label().trim_end_matches(",+"));
        let n = if a.is_closure() { reps } else { 1 };
        let mut next = BTreeSet::new();
        for w in &out {
            for k in 1..=n {
                let mut w2 = w.clone();
                w2.extend(std::iter::repeat(base.clone()).take(k));
                next.insert(w2);
            }
        }
        out = next;
    }
    out
}

/// The commuting families for gcT, per SR label.
fn gc_families(a: &str) -> Vec<String> {
    let mut f = vec![
        format!("<-SR,{a}- . -gcT-> ~~> -gcT-> . <-SR,{a}-"),
        format!("<-SR,{a}- . -gcT-> ~~> -gcT-> . <-SR,{a}- . <-SR,lll,+-"),
    ];
    if a == "lbeta" {
        f.push("<-SR,lbeta- . -gcT-> ~~> -gcT-> . <-SR,lll- . <-SR,lbeta- . <-SR,lll,+-".into());
    }
    f
}

fn in_families(d: &Diagram) -> bool {
    let a = d.lhs[0].label().trim_start_matches("SR,").to_string();
    let fam: BTreeSet<Vec<String>> = gc_families(&a)
        .iter()
        .flat_map(|s| words(&parse_diagrams(s).expect("family parses")[0].rhs, 5))
        .collect();
    words(&d.rhs, 3).iter().all(|w| fam.contains(w))
}

const GC_FORKING: [&str; 5] = [
    "<-SR,lbeta- . -gcT-> ~~> -gcT-> . <-SR,lbeta-",
    "<-SR,cp- . -gcT-> ~~> -gcT-> . <-SR,cp-",
    "<-SR,lll- . -gcT-> ~~> -gcT-> . <-SR,lll-",
    "<-SR,lll- . -gcT-> ~~> -gcT->",
    "<-ANSWER- . -gcT-> ~~> <-ANSWER-",
];

fn criterion_6() -> Check {
    let c = mini_letrec();
    let cfg = OracleConfig { max_size: 6, ..Default::default() };
    let mut detail = Vec::new();
    let fork = join(&c, "gcT", Side::Left);
    ensure(fork.all_joined(), || format!("forking: {:?}", fork.failures()))?;
    let extra: Vec<String> = strings(&fork.diagrams).into_iter().filter(|d| !GC_FORKING.contains(&d.as_str())).collect();
    ensure(extra.is_empty(), || format!("forking diagrams outside the gcT set: {extra:?}"))?;
    let comm = join(&c, "gcT", Side::Right);
    ensure(comm.all_joined(), || format!("commuting: {:?}", comm.failures()))?;
    let odd: Vec<String> = comm
        .diagrams
        .iter()
        .filter(|d| !d.is_answer() && !in_families(d))
        .map(|d| d.to_string())
        .collect();
    ensure(odd.is_empty(), || format!("commuting diagrams outside the families: {odd:?}"))?;
    let closures = comm.diagrams.iter().filter(|d| d.rhs.iter().any(Arrow::is_closure)).count();
    detail.push(format!(
        "forking {}/{} joined, commuting {}/{} joined ({closures} with lll,+)",
        fork.joined(),
        fork.overlaps.len(),
        comm.joined(),
        comm.overlaps.len()
    ));
    for (cmd, rev, ds) in [("forking", false, &fork.diagrams), ("commuting", true, &comm.diagrams)] {
        let rep = validate_diagrams(&c, &Analysed::new(&c, "gcT", rev), ds, cfg);
        ensure(rep.forks > 0 && rep.complete(), || {
            format!("{cmd} coverage {}/{}, e.g. {:?}", rep.covered, rep.forks, rep.uncovered.first())
        })?;
        detail.push(format!("{cmd} {}/{} forks", rep.covered, rep.forks));
    }
    Ok(detail.join("; "))
}

fn criterion_7() -> Check {
    let c = simple();
    let cfg = OracleConfig { max_size: ORACLE_SIZE, ..Default::default() };
    let ds = join(&c, "top", Side::Left).diagrams;
    let an = Analysed::new(&c, "top", false);
    let mut lost = Vec::new();
    for i in 0..ds.len() {
        let mut fewer = ds.clone();
        let removed = fewer.remove(i);
        let rep = validate_diagrams(&c, &an, &fewer, cfg);
        ensure(!rep.complete(), || format!("still complete without {removed}"))?;
        lost.push(rep.forks - rep.covered);
    }
    Ok(format!("each of {} removals leaves forks uncovered {lost:?}", ds.len()))
}

fn criterion_8() -> Check {
    let readme = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../README.md"))
        .map_err(|e| format!("README: {e}"))?;
    ensure(readme.contains("Table 1") && readme.contains("not reproduced"), || {
        "README does not document Table 1 as not reproduced".into()
    })?;
    Ok("Table 1 documented as not reproduced".into())
}

fn main() {
    let criteria: [(&str, fn() -> Check, Option<u64>); 8] = [
        ("Simple joins and diagram sets", criterion_1, Some(10)),
        ("Simple TRSs proved, TPDB parses", criterion_2, Some(5)),
        ("gcT encodings and proofs", criterion_3, None),
        ("cpT not proved, loop found", criterion_4, Some(5)),
        ("Simple ground oracle, size <= 7", criterion_5, Some(300)),
        ("mini-letrec gcT joins and coverage", criterion_6, Some(600)),
        ("every forking diagram is needed", criterion_7, None),
        ("Table 1 not reproduced", criterion_8, None),
    ];
    let mut failed = 0;
    for (i, (name, f, bound)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let res = f();
        let dt = t0.elapsed();
        let in_time = bound.is_none_or(|b| dt < Duration::from_secs(b));
        let bound_s = bound.map(|b| format!(" < {b}s")).unwrap_or_default();
        let (ok, detail) = match res {
            Ok(d) if in_time => (true, d),
            Ok(d) => (false, format!("{d}; too slow")),
            Err(e) => (false, e),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {}: {} {name} [{:.2}s{bound_s}] {detail}",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            dt.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
