mod common;

use common::{harmonic, t1};
use proptest::prelude::*;
use riskaverse::exact_oracle::{exact_integer_enum, exact_lp, IntegerObjective};
use riskaverse::harness::lb1;
use riskaverse::rounding::{greedy_set_cover, round_integer_cover, scale_first_stage, sta_round_fl, FlFractional};
use riskaverse::scenario_lp::BudgetedCover;
use riskaverse::simplex::{solve, LpProblem, Relation};

fn cover_lp(n: usize, members: &[Vec<usize>], w: &[f64]) -> f64 {
    let mut lp = LpProblem::new(0);
    let x: Vec<usize> = w.iter().map(|&c| lp.add_var(c, 0.0, 1.0)).collect();
    for e in 0..n {
        lp.add_row(members.iter().enumerate().filter(|(_, ms)| ms.contains(&e)).map(|(k, _)| (x[k], 1.0)), Relation::Ge, 1.0);
    }
    solve(&lp).unwrap().objective
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn greedy_within_harmonic_of_lp(
        n in 1usize..7,
        raw in prop::collection::vec((prop::collection::vec(0usize..7, 1..4), 1u32..10), 1..7),
    ) {
        let mut members: Vec<Vec<usize>> = raw.iter().map(|(ms, _)| {
            let mut v: Vec<usize> = ms.iter().map(|e| e % n).collect();
            v.sort_unstable();
            v.dedup();
            v
        }).collect();
        let mut w: Vec<f64> = raw.iter().map(|&(_, c)| c as f64).collect();
        // keep every element coverable
        members.push((0..n).collect());
        w.push(20.0);
        let universe: Vec<usize> = (0..n).collect();
        let picked = greedy_set_cover(&universe, &members, &w).unwrap();
        let cost: f64 = picked.iter().map(|&k| w[k]).sum();
        let lp = cover_lp(n, &members, &w);
        prop_assert!(cost <= harmonic(n) * lp + 1e-9, "greedy {} lp {}", cost, lp);
        let mut hit = vec![false; n];
        for &k in &picked {
            for &e in &members[k] {
                hit[e] = true;
            }
        }
        prop_assert!(hit.iter().all(|&h| h));
    }
}

#[test]
fn t1_rounding_against_enumeration() {
    let (inst, dist) = t1();
    let lp = exact_lp(&BudgetedCover { inst: &inst, budget: inst.budget }, &dist, 0.2).unwrap();
    let int = exact_integer_enum(&inst, &dist, inst.budget, 0.2, IntegerObjective::Budgeted).unwrap();
    assert!(lp.opt <= int.cost + 1e-9);
    for eps in [0.5, 1.0] {
        let ic = round_integer_cover(&inst, &scale_first_stage(&lp.x, eps)).unwrap();
        let mut cost = ic.first_stage_cost(&inst);
        for (s, p) in dist.entries() {
            cost += p * ic.recourse(&inst, s).unwrap().iter().map(|&k| s.w2[k]).sum::<f64>();
        }
        assert!(cost <= 2.0 * harmonic(2) * (1.0 + 1.0 / eps) * lp.opt + 1e-9, "{cost}");
    }
}

#[test]
fn half_covered_elements_go_to_stage_one() {
    let (inst, _) = t1();
    let ic = round_integer_cover(&inst, &[0.5, 0.0, 0.0]).unwrap();
    assert_eq!(ic.stage1_elements, vec![0]);
    assert_eq!(ic.stage1, vec![0]);
    assert_eq!(ic.indicator::<f64>(3), vec![1.0, 0.0, 0.0]);
    let none = round_integer_cover(&inst, &[0.49, 0.0, 0.0]).unwrap();
    assert!(none.stage1.is_empty());
}

#[test]
fn lb1_integer_optima() {
    let (b, rho, kappa) = (12.0, 0.1, 0.02);
    // low arm: buying nothing leaves only the big scenario over budget
    let (inst, dist) = lb1::<f64>(b, rho, kappa, 0.0).unwrap();
    let low = exact_integer_enum(&inst, &dist, b, rho, IntegerObjective::Budgeted).unwrap();
    assert!(low.x.iter().all(|&v| !v));
    assert!((low.cost - (rho - kappa) * 4.0 * b / 3.0).abs() < 1e-9);
    let lp = exact_lp(&BudgetedCover { inst: &inst, budget: b }, &dist, rho).unwrap();
    assert!(lp.opt <= rho * 4.0 * b / 3.0 + 1e-9);
    // high arm: both big scenarios together weigh more than ρ
    let (inst, dist) = lb1::<f64>(b, rho, kappa, 3.0 * kappa).unwrap();
    let high = exact_integer_enum(&inst, &dist, b, rho, IntegerObjective::Budgeted).unwrap();
    assert!(high.x[1] || high.x[2]);
    assert!(high.cost >= b - 1e-9);
}

fn frac(f: Vec<f64>, cost: Vec<Vec<f64>>, open: Vec<f64>, assign: Vec<Vec<f64>>) -> FlFractional<f64> {
    FlFractional { facility_cost: f, cost, open, assign }
}

#[test]
fn sta_cases() {
    // integral input comes back unchanged
    let one = frac(vec![1.0, 2.0], vec![vec![0.0, 1.0], vec![3.0, 0.5]], vec![1.0, 0.0], vec![vec![1.0, 0.0], vec![1.0, 0.0]]);
    let r = sta_round_fl(&one, 0.25).unwrap();
    assert_eq!(r.open, vec![0]);
    assert_eq!(r.assign, vec![0, 0]);
    // half-open pair: one facility per cluster, bounds hold
    let half = frac(
        vec![1.0, 1.0],
        vec![vec![1.0, 1.0, 2.0], vec![1.0, 2.0, 1.0]],
        vec![0.5, 0.5],
        vec![vec![0.5, 0.5], vec![0.5, 0.5], vec![0.5, 0.5]],
    );
    let r = sta_round_fl(&half, 0.25).unwrap();
    assert!(r.facility_total(&half.facility_cost) <= 4.0 * half.facility_total() + 1e-9);
    for j in 0..3 {
        assert!(half.cost[r.assign[j]][j] <= 4.0 * half.client_cost(j) + 1e-9);
    }
    let short = frac(vec![1.0], vec![vec![1.0]], vec![0.5], vec![vec![0.5]]);
    assert!(sta_round_fl(&short, 0.25).is_err());
    let over = frac(vec![1.0], vec![vec![1.0]], vec![0.5], vec![vec![1.0]]);
    assert!(sta_round_fl(&over, 0.25).is_err());
}
