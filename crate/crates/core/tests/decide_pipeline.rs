mod common;

use common::*;
use forestcat_core::algebra::Recognizer;
use forestcat_core::catalog;
use forestcat_core::decide::{
    check_lt_identities_at_k, decide_lt, Budgets, CheckOutcome, Language, LtVerdict, SearchOutcome, Strategy,
};
use forestcat_core::kdefinite::{oracle_k_lt, TypeUniverse};

fn languages() -> Vec<(String, Recognizer, Vec<&'static str>)> {
    let mut out: Vec<(String, Recognizer, Vec<&'static str>)> = catalog::NAMES
        .iter()
        .map(|n| (n.to_string(), catalog::by_name(n).unwrap(), vec!["a", "b"]))
        .collect();
    out.push(("contains-a/{a}".into(), catalog::contains_a(&["a"]), vec!["a"]));
    out.push(("parity-a/{a}".into(), catalog::parity_a(&["a"]), vec!["a"]));
    out.push(("unary 2-LT".into(), unary_lt(), vec!["a"]));
    out
}

#[test]
fn identity_checks_agree_with_derived_categories() {
    let b = Budgets::default();
    for (name, r, names) in languages() {
        for k in 0..=1 {
            let check = check_lt_identities_at_k(&r, k, Strategy::ExactClosure, &b).unwrap();
            let holds = match check.outcome {
                CheckOutcome::Holds => true,
                CheckOutcome::Violated { .. } => false,
                CheckOutcome::Inconclusive(x) => panic!("{name} k={k}: {x}"),
            };
            let cat = derived(&r, &names, k).category.check_identities().all_hold();
            assert_eq!(holds, cat, "{name} at k={k}");
        }
    }
}

#[test]
fn verdicts_are_consistent_with_the_oracle() {
    let b = Budgets::default();
    let mut u = TypeUniverse::new();
    for (name, r, _) in languages() {
        let d = decide_lt(&r, &b).unwrap();
        match &d.verdict {
            LtVerdict::Lt { level, .. } => {
                assert!(oracle_k_lt(&mut u, &r, *level, 6).unwrap().is_none(), "{name}");
                assert!(!matches!(d.search, SearchOutcome::Found(..)), "{name}");
            }
            LtVerdict::NotLt(_) => {}
            LtVerdict::Unknown { budgets_hit } => panic!("{name}: unknown {budgets_hit:?}"),
        }
        // a witness at k* rules out a positive verdict
        if oracle_k_lt(&mut u, &r, d.k_star, 4).unwrap().is_some() {
            assert!(!matches!(d.verdict, LtVerdict::Lt { .. }), "{name}");
        }
    }
}

#[test]
fn decisions_are_deterministic() {
    let b = Budgets::default();
    for (name, r, _) in languages() {
        assert_eq!(decide_lt(&r, &b).unwrap(), decide_lt(&r, &b).unwrap(), "{name}");
    }
}

#[test]
fn small_budgets_give_unknown_not_wrong_answers() {
    let b = Budgets {
        pair_budget: 4,
        witness_budget: 1,
        ..Budgets::default()
    };
    let d = decide_lt(&catalog::a_has_b_child(), &b).unwrap();
    match d.verdict {
        LtVerdict::Unknown { budgets_hit } => assert!(!budgets_hit.is_empty()),
        LtVerdict::Lt { level, .. } => assert!(level <= 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn violations_replay_on_terms() {
    let b = Budgets::default();
    for (name, r, _) in languages() {
        let mut lang = Language::new(&r);
        for k in 0..=1 {
            if let CheckOutcome::Violated { terms, .. } = lang.check_identities_at_k(k, Strategy::ExactClosure, &b).unwrap().outcome {
                lang.verify_witness(&terms, k).unwrap_or_else(|e| panic!("{name} k={k}: {e}"));
            }
        }
    }
}
