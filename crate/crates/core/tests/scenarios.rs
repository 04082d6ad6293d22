use std::time::{Duration, Instant};

use changeprop::fixtures::{F1, F2, UNSOLVABLE};
use changeprop::harness::{exhaustive_oracle, reference};
use changeprop::model::{apply_script, ChangeAction, CostConfig};
use changeprop::search::{propagate, PropagateError, ProtectedSlots, Strategy};
use changeprop::{ExactConfig, ExactCosts, Rational};

fn int(n: i64) -> Rational {
    Rational::from_integer(n)
}

#[test]
fn f1_rename_propagates_to_operation() {
    let f = F1.load();
    let start = Instant::now();
    let res = propagate(
        &f.model,
        &f.changes,
        &f.constraints,
        &f.metamodel,
        &ExactConfig::default(),
    )
    .unwrap();
    assert!(start.elapsed() < Duration::from_secs(1));
    assert_eq!(
        res.plans[0].actions,
        [ChangeAction::set_attr("op1", "name", "debit")]
    );
    assert_eq!(res.plans[0].total_cost, int(1));
    assert!(reference::consistent(
        &res.result_models[0],
        &f.constraints,
        &f.metamodel
    ));

    let (protected, post) =
        ProtectedSlots::from_primary(&f.model, &f.changes, &f.metamodel).unwrap();
    let oracle = exhaustive_oracle(
        &post,
        &protected,
        &f.constraints,
        &f.metamodel,
        &ExactCosts::default(),
        3,
    );
    assert_eq!(oracle, Some(int(1)));
}

#[test]
fn f2_side_effect_needs_a_new_operation() {
    let f = F2.load();
    for strategy in [Strategy::Ucs, Strategy::Astar, Strategy::Exhaustive] {
        let cfg = ExactConfig::default().with_strategy(strategy);
        let res = propagate(&f.model, &f.changes, &f.constraints, &f.metamodel, &cfg).unwrap();
        let plan = &res.plans[0];
        assert_eq!(plan.total_cost, int(3), "{strategy}");
        assert_eq!(
            plan.actions,
            [
                ChangeAction::create("Operation", "$n1"),
                ChangeAction::set_attr("$n1", "name", "debit"),
                ChangeAction::add_link("a1", "ops", "$n1"),
            ],
            "{strategy}"
        );
    }
    // Renaming op1 instead would break m2, which its transitions pin.
    let (renamed, _) = apply_script(
        &f.model,
        &[
            ChangeAction::set_attr("m1", "name", "debit"),
            ChangeAction::set_attr("op1", "name", "debit"),
        ],
        &f.metamodel,
    )
    .unwrap();
    assert!(!reference::consistent(
        &renamed,
        &f.constraints,
        &f.metamodel
    ));

    let (protected, post) =
        ProtectedSlots::from_primary(&f.model, &f.changes, &f.metamodel).unwrap();
    let oracle = exhaustive_oracle(
        &post,
        &protected,
        &f.constraints,
        &f.metamodel,
        &ExactCosts::default(),
        3,
    );
    assert_eq!(oracle, Some(int(3)));
}

#[test]
fn unsolvable_reports_no_plan() {
    let f = UNSOLVABLE.load();
    let err = propagate(
        &f.model,
        &f.changes,
        &f.constraints,
        &f.metamodel,
        &ExactConfig::default(),
    )
    .unwrap_err();
    match err {
        PropagateError::NoPlanWithinBound {
            max_depth,
            initial_violations,
            ..
        } => {
            assert_eq!(max_depth, 8);
            assert_eq!(initial_violations.len(), 1);
            assert_eq!(initial_violations[0].constraint, "legacyName");
        }
        other => panic!("unexpected {other}"),
    }
    let (protected, post) =
        ProtectedSlots::from_primary(&f.model, &f.changes, &f.metamodel).unwrap();
    let oracle = exhaustive_oracle(
        &post,
        &protected,
        &f.constraints,
        &f.metamodel,
        &ExactCosts::default(),
        3,
    );
    assert_eq!(oracle, None);
}

#[test]
fn cheaper_creation_changes_nothing_for_f1() {
    let f = F1.load();
    let costs: CostConfig<Rational> =
        CostConfig::parse("create=1,delete=3,addlink=1,removelink=1,setattr=2").unwrap();
    let cfg = ExactConfig::default().with_costs(costs);
    let res = propagate(&f.model, &f.changes, &f.constraints, &f.metamodel, &cfg).unwrap();
    assert_eq!(res.plans[0].total_cost, int(2));
    assert_eq!(
        res.plans[0].actions,
        [ChangeAction::set_attr("op1", "name", "debit")]
    );
}

#[test]
fn disabled_set_attr_forces_creation_in_f1() {
    let f = F1.load();
    let costs: CostConfig<Rational> = CostConfig::parse("setattr=inf").unwrap();
    let cfg = ExactConfig::default().with_costs(costs.clone());
    let err = propagate(&f.model, &f.changes, &f.constraints, &f.metamodel, &cfg);
    // A new operation cannot be named without set_attr, and removing the
    // receiver breaks its lower bound.
    let (protected, post) =
        ProtectedSlots::from_primary(&f.model, &f.changes, &f.metamodel).unwrap();
    let oracle = exhaustive_oracle(&post, &protected, &f.constraints, &f.metamodel, &costs, 3);
    assert_eq!(err.ok().map(|r| r.plans[0].total_cost), oracle);
}
