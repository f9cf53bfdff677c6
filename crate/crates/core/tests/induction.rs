use std::time::Instant;

use lrsx_core::diagram::parse_diagrams;
use lrsx_core::termination::{
    detect_nontermination, prove_innermost_termination, replay_certificate, replay_loop, Verdict,
};
use lrsx_core::trs::{emit_tpdb, encode_diagrams, parse_tpdb, Trs};

const GC_FORKING_RULES: [&str; 5] = [
    "gcT(SRlbeta(x)) -> SRlbeta(gcT(x))",
    "gcT(SRcp(x)) -> SRcp(gcT(x))",
    "gcT(SRlll(x)) -> SRlll(gcT(x))",
    "gcT(SRlll(x)) -> gcT(x)",
    "gcT(Answer) -> Answer",
];

const GC_CLOSURE_RULES: [&str; 3] = [
    "gcT(SRlbeta(x)) -> W1(k,x)",
    "W1(s(k),x) -> SRlll(W1(k,x))",
    "W1(s(k),x) -> SRlll(SRlbeta(gcT(x)))",
];

fn lines(t: &Trs) -> Vec<String> {
    t.rules.iter().map(|r| r.to_string()).collect()
}

fn gc_forking() -> Trs {
    encode_diagrams(&parse_diagrams(include_str!("../fixtures/gc_forking.diag")).unwrap())
}

fn gc_closure() -> Trs {
    encode_diagrams(&parse_diagrams(include_str!("../fixtures/gc_commuting_closure.diag")).unwrap())
}

fn assert_proved(t: &Trs) {
    match prove_innermost_termination(t) {
        Verdict::Proved(c) => replay_certificate(t, &c).unwrap(),
        v => panic!("not proved: {v:?}"),
    }
}

#[test]
fn forking_gc_diagrams_encode_to_the_listed_rules() {
    assert_eq!(lines(&gc_forking()), GC_FORKING_RULES);
}

#[test]
fn closure_diagram_encodes_to_three_rules() {
    assert_eq!(lines(&gc_closure()), GC_CLOSURE_RULES);
}

#[test]
fn gc_systems_are_proved() {
    assert_proved(&gc_forking());
    assert_proved(&gc_closure());
    let mut both = gc_forking();
    both.rules.extend(gc_closure().rules);
    assert_proved(&both);
}

#[test]
fn empty_diagram_set_gives_empty_system() {
    let t = encode_diagrams(&[]);
    assert!(t.rules.is_empty());
    assert_eq!(emit_tpdb(&t), "(VAR )\n(STRATEGY INNERMOST)\n(RULES\n)\n");
    assert!(detect_nontermination(&t, 3).is_none());
}

#[test]
fn terminating_system_has_no_loop() {
    assert!(detect_nontermination(&gc_forking(), 10).is_none());
}

#[test]
fn counter_variable_is_declared_only_where_bound() {
    let text = emit_tpdb(&gc_closure());
    assert!(text.starts_with("(VAR k x)\n(STRATEGY INNERMOST)\n"));
    assert!(text.contains("gcT(SRlbeta(x)) -> W1(fresh_k,x)"));
    assert!(text.contains("W1(s(k),x) -> SRlll(W1(k,x))"));
}

#[test]
fn cpt_is_never_proved_and_loops() {
    let t0 = Instant::now();
    let t = parse_tpdb(include_str!("../fixtures/cpt.trs")).unwrap();
    assert_eq!(t.rules.len(), 5);
    let v = prove_innermost_termination(&t);
    assert!(!v.is_proved());
    let w = detect_nontermination(&t, 5).expect("loop");
    assert!(w.steps.len() <= 5);
    assert!(replay_loop(&t, &w));
    // the loop uses the duplicating rule
    assert!(w.steps.iter().any(|s| s.rule == 1));
    assert!(t0.elapsed().as_secs_f64() < 5.0);
}
