mod common;

use common::{cover_fixtures, t1};
use riskaverse::exact_oracle::exact_lp;
use riskaverse::model::{ExplicitDistribution, ExplicitOracle, RiskParams, SampleMode, Scenario, SetCoverInstance};
use riskaverse::risk_search::{bootstrap_lower_bound, bootstrap_samples, Bootstrap};
use riskaverse::robust::{
    budget_grid, chance_constrained_cover, mixed_objective_solve, quantile, robust_solve, robust_solve_multiplicative,
    Multiplicative,
};
use riskaverse::scenario_lp::{RobustCover, TwoStageModel};
use riskaverse::Error;

fn full(budget: f64, rho: f64) -> RiskParams<f64> {
    RiskParams::new(budget, rho, 0.3, 0.05, 0.5).with_samples(SampleMode::FullSupport)
}

fn single(p_e: f64) -> (SetCoverInstance<f64>, ExplicitDistribution<f64>) {
    let inst = SetCoverInstance::new(vec!["e".into()], vec![("S".into(), vec![0], 1.0)], 1.0, 0.0).unwrap();
    let mut entries = vec![(Scenario::new(vec![0], vec![1.0], None), p_e)];
    if p_e < 1.0 {
        entries.push((Scenario::new(vec![], vec![1.0], None), 1.0 - p_e));
    }
    (inst, ExplicitDistribution::new(entries).unwrap())
}

#[test]
fn empty_oracle_gives_first_budget() {
    let (inst, _) = t1();
    let dist = ExplicitDistribution::point_mass(Scenario::new(vec![], vec![2.0, 2.0, 3.0], None));
    let out = robust_solve(&inst, &ExplicitOracle::new(dist), &full(0.0, 0.2), 1).unwrap();
    assert!(out.report.x.iter().all(|v| v.abs() < 1e-12));
    assert_eq!(out.budget, 0.05);
    assert!((out.objective - 0.05).abs() < 1e-12);
}

#[test]
fn one_cheap_set_kills_every_scenario() {
    let ids = vec!["a".to_string(), "b".to_string()];
    let sets = vec![("all".into(), vec![0, 1], 1.0), ("a".into(), vec![0], 3.0), ("b".into(), vec![1], 3.0)];
    let inst = SetCoverInstance::new(ids, sets, 3.0, 0.0).unwrap();
    let w2 = vec![3.0, 9.0, 9.0];
    let dist = ExplicitDistribution::new(vec![
        (Scenario::new(vec![0, 1], w2.clone(), None), 0.5),
        (Scenario::new(vec![0], w2.clone(), None), 0.3),
        (Scenario::new(vec![1], w2, None), 0.2),
    ])
    .unwrap();
    let p = full(0.0, 0.1);
    let out = robust_solve(&inst, &ExplicitOracle::new(dist), &p, 1).unwrap();
    assert!(out.objective <= 1.3 + 2.0 * p.gamma + 1e-9, "{}", out.objective);
}

#[test]
fn robust_scenario_values_lie_in_zero_delta() {
    for (inst, dist) in cover_fixtures() {
        let m = RobustCover { inst: &inst, budget: inst.budget };
        for (s, _) in dist.entries() {
            for delta in [0.0, 0.7, 5.0] {
                let v = m.solve_scenario(delta, &vec![0.3; inst.m()], s, false).unwrap().value;
                assert!(v >= -1e-12 && v <= delta + 1e-9);
            }
            let rich = RobustCover { inst: &inst, budget: 1e6 };
            assert!(rich.solve_scenario(3.0, &vec![0.0; inst.m()], s, false).unwrap().value.abs() < 1e-9);
        }
    }
}

#[test]
fn chance_constraint_forces_coverage() {
    let (inst, dist) = single(1.0);
    let rep = chance_constrained_cover(&inst, &ExplicitOracle::new(dist), &full(0.0, 0.2), 1).unwrap();
    // non-coverage mass is 1 − x at most ρ(1+κ)
    assert!(1.0 - rep.x[0] <= 0.3 + 1e-9);
}

#[test]
fn rare_scenario_is_left_uncovered() {
    let (inst, dist) = single(0.1);
    let oracle = ExplicitOracle::new(dist);
    let p = full(0.0, 0.2);
    let rep = chance_constrained_cover(&inst, &oracle, &p, 1).unwrap();
    assert!(rep.x[0] <= p.gamma + 1e-9);
    // an element in no set, in a rare scenario
    let inst = SetCoverInstance::new(vec!["e".into(), "bare".into()], vec![("S".into(), vec![0], 1.0)], 1.0, 0.0).unwrap();
    let dist = ExplicitDistribution::new(vec![
        (Scenario::new(vec![1], vec![1.0], None), 0.05),
        (Scenario::new(vec![], vec![1.0], None), 0.95),
    ])
    .unwrap();
    assert!(chance_constrained_cover(&inst, &ExplicitOracle::new(dist), &p, 1).is_ok());
}

#[test]
fn mixed_objective_limits() {
    let (inst, dist) = cover_fixtures().swap_remove(2);
    let oracle = ExplicitOracle::new(dist.clone());
    let p = full(inst.budget, 0.2);
    let zero = mixed_objective_solve(&inst, &oracle, &p, 0.0, 1).unwrap();
    let total: f64 = inst.w1.iter().sum();
    assert_eq!(zero.grid.len(), 1);
    assert_eq!(zero.budget, *budget_grid(p.gamma, p.eps, total).last().unwrap());
    let heavy = mixed_objective_solve(&inst, &oracle, &p, 1e4, 1).unwrap();
    let rob = robust_solve(&inst, &oracle, &p, 1).unwrap();
    // a dominant weight on B picks the smallest budget the search succeeds at
    let first_ok = heavy.grid.iter().find(|(_, o)| o.is_some()).unwrap().0;
    assert_eq!(heavy.budget, first_ok);
    assert!(heavy.budget <= rob.budget);
    let empty = ExplicitDistribution::point_mass(Scenario::new(vec![], inst.w1.clone(), None));
    let z = mixed_objective_solve(&inst, &ExplicitOracle::new(empty), &p, 0.0, 1).unwrap();
    assert!(z.objective.abs() < 1e-12);
    assert!(matches!(mixed_objective_solve(&inst, &oracle, &p, -1.0, 1), Err(Error::InvalidParameter(_))));
}

#[test]
fn robust_objective_against_exact_grid() {
    for (inst, dist) in cover_fixtures().into_iter().take(5) {
        let p = full(0.0, 0.2);
        let out = robust_solve(&inst, &ExplicitOracle::new(dist.clone()), &p, 3).unwrap();
        let total: f64 = inst.w1.iter().sum();
        let best = budget_grid(p.gamma, p.eps, total)
            .into_iter()
            .filter_map(|b| exact_lp(&RobustCover { inst: &inst, budget: b }, &dist, 0.2).ok().map(|e| e.opt + b))
            .fold(f64::INFINITY, f64::min);
        assert!(out.objective <= 1.3 * best + 2.0 * p.gamma + 1e-9);
        assert!(out.grid.iter().any(|(b, o)| *b == out.budget && *o == Some(out.objective)));
    }
}

#[test]
fn quantile_matches_sorted_costs() {
    let items = [(3.0, 0.1), (1.0, 0.4), (2.0, 0.2), (0.0, 0.3)];
    // P[cost > B]: B=0 → 0.7, B=1 → 0.3, B=2 → 0.1, B=3 → 0
    assert_eq!(quantile(&items, 0.7), 0.0);
    assert_eq!(quantile(&items, 0.3), 1.0);
    assert_eq!(quantile(&items, 0.2), 2.0);
    assert_eq!(quantile(&items, 0.0), 3.0);
}

#[test]
fn bootstrap_outcomes() {
    let (mut inst, _) = single(1.0);
    let p = RiskParams::new(0.0, 0.2, 0.3, 0.05, 0.5).with_delta(0.1);
    let empty = ExplicitOracle::new(ExplicitDistribution::point_mass(Scenario::new(vec![], vec![1.0], None)));
    assert!(matches!(bootstrap_lower_bound(&inst, &empty, &p, 1), Err(Error::Unsupported(_))));
    inst.unit_cost_floor = true;
    assert_eq!(bootstrap_lower_bound(&inst, &empty, &p, 1).unwrap(), Bootstrap::ZeroOptimal { samples: 12 });
    let always = ExplicitOracle::new(ExplicitDistribution::point_mass(Scenario::new(vec![0], vec![1.0], None)));
    let (alpha, m) = bootstrap_samples(0.2, 1.0, 0.1);
    let lb = 0.1 / 10f64.ln() * alpha;
    match bootstrap_lower_bound(&inst, &always, &p, 1).unwrap() {
        Bootstrap::LowerBound { lb: got, samples } => {
            assert!((got - lb).abs() < 1e-15);
            assert_eq!(samples, m);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn multiplicative_zero_test() {
    let (inst, dist) = single(0.05);
    let p = full(0.0, 0.2);
    match robust_solve_multiplicative(&inst, &ExplicitOracle::new(dist), &p, 1).unwrap() {
        Multiplicative::Zero { q_hat, .. } => assert!((q_hat - 0.05).abs() < 1e-12),
        other => panic!("{other:?}"),
    }
    let (inst, dist) = single(0.9);
    let out = robust_solve_multiplicative(&inst, &ExplicitOracle::new(dist.clone()), &p, 1).unwrap();
    assert!(matches!(out, Multiplicative::Solved { .. }));
    let sampled = RiskParams { sample_mode: SampleMode::Capped(500), ..p };
    match robust_solve_multiplicative(&inst, &ExplicitOracle::new(dist), &sampled, 1).unwrap() {
        Multiplicative::Solved { samples, .. } => assert!(samples > 0),
        other => panic!("{other:?}"),
    }
}
