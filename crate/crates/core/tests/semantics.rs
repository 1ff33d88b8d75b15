mod common;

#[test]
fn rule_table_matches_hand_written_truth_tables() {
    let combos = common::rule_table().unwrap();
    assert!(combos >= 5 * 81);
}

#[test]
fn general_blocks_never_yield_false() {
    let (_, false_inputs) = common::denying_antecedent(1000).unwrap();
    assert!(false_inputs > 0, "sample never fed a FALSE input to a general block");
}

#[test]
fn chained_exact_defeaters_reproduce_inner_verdict() {
    let seen = common::exact_involution(500).unwrap();
    assert!(seen.iter().all(|n| *n > 0), "verdicts seen: {seen:?}");
}

#[test]
fn deleting_a_refuted_defeater_changes_nothing() {
    let (checked, _) = common::refuted_defeater_equivalence(500).unwrap();
    assert_eq!(checked, 500);
}
