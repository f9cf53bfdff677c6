use std::time::Instant;

use lrsx_core::calculus::{Calculus, Side};
use lrsx_core::diagram::Diagram;
use lrsx_core::ground::{check_determinism, converges, enumerate_ground, Convergence};
use lrsx_core::join::{join_all, SearchConfig};
use lrsx_core::oracle::{
    convergence_equivalence, replay_induction, validate_diagrams, Analysed, OracleConfig,
};
use lrsx_core::parse::parse;

fn simple() -> Calculus {
    parse(include_str!("../fixtures/simple.inp")).expect("fixture parses")
}

fn diagrams(c: &Calculus, side: Side) -> Vec<Diagram> {
    let rep = join_all(c, "top", None, side, &SearchConfig::from_calculus(c)).unwrap();
    assert!(rep.all_joined());
    rep.diagrams
}

fn cfg(max_size: usize) -> OracleConfig {
    OracleConfig { max_size, ..Default::default() }
}

#[test]
fn coverage_small() {
    let c = simple();
    for (side, rev) in [(Side::Left, false), (Side::Right, true)] {
        let ds = diagrams(&c, side);
        let an = Analysed::new(&c, "top", rev);
        let rep = validate_diagrams(&c, &an, &ds, cfg(5));
        assert!(rep.forks > 0);
        assert!(rep.complete(), "{:?}", &rep.uncovered[..rep.uncovered.len().min(5)]);
    }
}

#[test]
fn empty_set_covers_nothing() {
    let c = simple();
    let an = Analysed::new(&c, "top", false);
    let rep = validate_diagrams(&c, &an, &[], cfg(4));
    assert_eq!(rep.covered, 0);
    assert!(rep.forks > 0);
}

#[test]
fn deterministic_and_equivalent() {
    let c = simple();
    let es = enumerate_ground(&c, 5);
    assert!(check_determinism(&c, &es).is_empty());
    let rep = convergence_equivalence(&c, "top", 5, None);
    assert!(rep.pairs > 0);
    assert!(rep.mismatches.is_empty(), "{:?}", rep.mismatches);
}

/// Every convergent source of a transformation step yields a verified
/// sequence for the target, for both directions.
#[test]
fn induction_replays() {
    let c = simple();
    let t0 = Instant::now();
    for (side, rev) in [(Side::Left, false), (Side::Right, true)] {
        let ds = diagrams(&c, side);
        let an = Analysed::new(&c, "top", rev);
        let mut n = 0;
        for e in enumerate_ground(&c, 5) {
            for t in an.forward_steps(&c, &e) {
                // direction analysed: source -> target
                let (src, tgt) = if rev { (t.clone(), e.clone()) } else { (e.clone(), t.clone()) };
                let Convergence::Converges(steps) = converges(&c, &src, 40) else { continue };
                let mut seq = vec![steps.first().map(|s| s.source.clone()).unwrap_or(src.clone())];
                seq.extend(steps.iter().map(|s| s.target.clone()));
                let out = replay_induction(&c, &an, &ds, &seq, &tgt, 10 * seq.len(), cfg(5))
                    .unwrap_or_else(|err| panic!("{src} -> {tgt}: {err}"));
                assert!(!out.is_empty());
                n += 1;
            }
        }
        assert!(n > 0);
    }
    eprintln!("{:?}", t0.elapsed());
}
