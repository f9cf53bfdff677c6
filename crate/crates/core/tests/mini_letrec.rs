use lrsx_core::calculus::{validate, Calculus, Severity, Side};
use lrsx_core::diagram::Diagram;
use lrsx_core::ground::{check_determinism, converges, enumerate_ground, Convergence};
use lrsx_core::join::{join_all, SearchConfig};
use lrsx_core::oracle::{replay_induction, validate_diagrams, Analysed, OracleConfig};
use lrsx_core::parse::parse;

fn mini() -> Calculus {
    parse(include_str!("../fixtures/mini_letrec.inp")).unwrap()
}

fn forking(c: &Calculus) -> Vec<Diagram> {
    let rep = join_all(c, "gcT", None, Side::Left, &SearchConfig::from_calculus(c)).unwrap();
    assert!(rep.all_joined(), "{:?}", rep.failures());
    rep.diagrams
}

#[test]
fn fixture_is_valid() {
    let c = mini();
    assert!(validate(&c).iter().all(|d| d.severity != Severity::Error));
    assert_eq!(c.sr_rules.len(), 5);
    assert_eq!(c.closure_rules.len(), 2);
    assert_eq!(c.answers.len(), 2);
    assert_eq!(c.transformations.len(), 2);
}

#[test]
fn forking_diagrams() {
    let c = mini();
    let got: Vec<String> = forking(&c).iter().map(|d| d.to_string()).collect();
    let mut want = vec![
        "<-ANSWER- . -gcT-> ~~> <-ANSWER-",
        "<-SR,lbeta- . -gcT-> ~~> -gcT-> . <-SR,lbeta-",
        "<-SR,lll- . -gcT-> ~~> -gcT-> . <-SR,lll-",
        "<-SR,lll- . -gcT-> ~~> -gcT->",
    ];
    want.sort();
    assert_eq!(got, want);
}

/// Hand count up to α: `var y` at size 1; `\x.var x` and `\x.var y` at
/// size 2; at size 3 five letrecs, two applications and three nested
/// abstractions.
#[test]
fn small_enumeration() {
    let c = mini();
    assert_eq!(enumerate_ground(&c, 1).len(), 1);
    assert_eq!(enumerate_ground(&c, 2).len(), 3);
    assert_eq!(enumerate_ground(&c, 3).len(), 13);
    assert!(check_determinism(&c, &enumerate_ground(&c, 5)).is_empty());
}

#[test]
fn forking_coverage_and_replay() {
    let c = mini();
    let ds = forking(&c);
    let an = Analysed::new(&c, "gcT", false);
    let cfg = OracleConfig { max_size: 5, ..Default::default() };
    let rep = validate_diagrams(&c, &an, &ds, cfg);
    assert!(rep.forks > 0);
    assert!(rep.complete(), "{:?}", rep.uncovered);
    let mut n = 0;
    for e in enumerate_ground(&c, 5) {
        for t in an.forward_steps(&c, &e) {
            let Convergence::Converges(steps) = converges(&c, &e, 4 * e.size()) else { continue };
            let mut seq = vec![e.clone()];
            seq.extend(steps.into_iter().map(|s| s.target));
            let out = replay_induction(&c, &an, &ds, &seq, &t, 10 * seq.len(), cfg)
                .unwrap_or_else(|err| panic!("{e} -> {t}: {err}"));
            assert!(out.len() <= seq.len());
            n += 1;
        }
    }
    assert!(n > 0);
}
