use pdirac_bench::{energy, field, operator};

#[test]
fn fixtures_are_consistent() {
    let op = operator(3, 8);
    assert_eq!(op.model().sites(), 512);
    assert!(!op.is_singular());
    let f = field(&op, 1);
    assert_eq!(f, field(&op, 1));
    let e = energy(&op, 1.5);
    assert!(e.value(&f).unwrap().is_finite());
}
