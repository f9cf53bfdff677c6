use lrsx_core::calculus::{validate, Severity};
use lrsx_core::parse::{parse, render};

const SIMPLE: &str = include_str!("../fixtures/simple.inp");

#[test]
fn simple_fixture_counts() {
    let c = parse(SIMPLE).unwrap();
    assert_eq!(c.sr_rules.len(), 4);
    assert_eq!(c.answers.len(), 1);
    assert_eq!(c.transformations.len(), 1);
    assert_eq!(c.classes.len(), 2);
    assert_eq!(c.prefix.len(), 4);
    assert_eq!(c.forks.values().map(Vec::len).sum::<usize>(), 4);
    assert_eq!(c.commands.len(), 2);
}

#[test]
fn simple_fixture_validates() {
    let c = parse(SIMPLE).unwrap();
    let errors: Vec<_> = validate(&c)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .collect();
    assert!(errors.is_empty(), "{errors:?}");
}

#[test]
fn render_is_a_fixpoint() {
    let c = parse(SIMPLE).unwrap();
    let text = render(&c);
    let c2 = parse(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
    assert_eq!(c, c2, "{text}");
    assert_eq!(render(&c2), text);
}
