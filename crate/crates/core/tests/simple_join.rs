use lrsx_core::calculus::Side;
use lrsx_core::join::{join_all, replay_witness, JoinResult, SearchConfig};
use lrsx_core::parse::parse;

fn simple() -> lrsx_core::calculus::Calculus {
    parse(include_str!("../fixtures/simple.inp")).expect("fixture parses")
}

fn diagrams(side: Side) -> Vec<String> {
    let c = simple();
    let cfg = SearchConfig::from_calculus(&c);
    let rep = join_all(&c, "top", None, side, &cfg).unwrap();
    for (o, r) in rep.overlaps.iter().zip(&rep.results) {
        eprintln!("{o}\n   => {}", r.is_joined());
    }
    assert!(rep.all_joined(), "{:?}", rep.failures());
    rep.diagrams.iter().map(|d| d.to_string()).collect()
}

#[test]
fn forking_set() {
    let mut want = vec![
        "<-SR,bot- . -top-> ~~> <-SR,bot-",
        "<-SR,bot- . -top-> ~~> -top-> . <-SR,bot-",
        "<-SR,top- . -top-> ~~> -top-> . <-SR,top-",
        "<-SR,neg- . -top-> ~~> -top-> . <-SR,neg-",
        "<-SR,top- . -top-> ~~>",
    ];
    want.sort();
    let got = diagrams(Side::Left);
    assert_eq!(got, want);
}

#[test]
fn commuting_set() {
    let mut want = vec![
        "<-SR,bot- . -top-> ~~> <-SR,bot-",
        "<-SR,bot- . -top-> ~~> <-SR,bot- . <-SR,top-",
        "<-SR,top- . -top-> ~~> <-SR,top- . <-SR,top-",
        "<-SR,neg- . -top-> ~~> <-SR,neg- . <-SR,top-",
        "<-SR,bot- . -top-> ~~> -top-> . <-SR,bot-",
        "<-SR,top- . -top-> ~~> -top-> . <-SR,top-",
        "<-SR,neg- . -top-> ~~> -top-> . <-SR,neg-",
        "<-ANSWER- . -top-> ~~> <-ANSWER- . <-SR,top-",
    ];
    want.sort();
    let got = diagrams(Side::Right);
    assert_eq!(got, want);
}

#[test]
fn witnesses_replay() {
    let c = simple();
    let cfg = SearchConfig::from_calculus(&c);
    for side in [Side::Left, Side::Right] {
        let rep = join_all(&c, "top", None, side, &cfg).unwrap();
        for (o, r) in rep.overlaps.iter().zip(&rep.results) {
            if let JoinResult::Joined(w) = r {
                assert!(replay_witness(&c, o, w).unwrap(), "{o}");
            }
        }
    }
}
