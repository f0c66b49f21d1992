//! Ground truth on explicit distributions: the coupled LP, the Lagrangian
//! value curve, and exhaustive integer optima for tiny covering instances.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{ExplicitDistribution, SetCoverInstance};
use crate::saa::solve_saa;
use crate::scalar::{dot, Scalar};
use crate::scenario_lp::{FirstStageRef, ScenarioSolution, TwoStageModel};
use crate::simplex::{solve, LpProblem, LpStatus, Relation};

/// Largest `|support|·m` accepted by the LP oracles.
pub const MAX_LP_SIZE: usize = 5000;
pub const MAX_ENUM_SETS: usize = 12;
pub const MAX_ENUM_SUPPORT: usize = 12;

#[derive(Debug, Clone)]
pub struct ExactLp<T> {
    pub opt: T,
    pub x: Vec<T>,
    /// In the distribution's order.
    pub solutions: Vec<ScenarioSolution<T>>,
    /// `Σ p_A r_A`.
    pub exceedance: T,
    /// Multiplier of the coupling row `Σ p_A r_A ≤ ρ`.
    pub delta_star: T,
}

fn guard<T: Scalar, M: TwoStageModel<T> + ?Sized>(model: &M, dist: &ExplicitDistribution<T>) -> Result<()> {
    let size = dist.len() * model.dim().max(1);
    if size > MAX_LP_SIZE {
        return Err(Error::SizeGuard(format!("support {} times dimension {} exceeds {MAX_LP_SIZE}", dist.len(), model.dim())));
    }
    Ok(())
}

/// Solves the risk-averse LP over all scenarios at once.
pub fn exact_lp<T: Scalar, M: TwoStageModel<T> + ?Sized>(
    model: &M,
    dist: &ExplicitDistribution<T>,
    rho: T,
) -> Result<ExactLp<T>> {
    guard(model, dist)?;
    let mut lp = LpProblem::new(0);
    for &c in model.first_stage_costs() {
        lp.add_var(c, T::zero(), T::one());
    }
    let mut blocks = Vec::with_capacity(dist.len());
    for (s, p) in dist.entries() {
        model.check(s)?;
        if s.is_empty() || *p <= T::zero() {
            blocks.push(None);
        } else {
            blocks.push(Some(model.add_block(&mut lp, FirstStageRef::Vars, s, *p, T::zero())?));
        }
    }
    let coupling: Vec<(usize, T)> =
        dist.entries().iter().zip(&blocks).filter_map(|((_, p), b)| b.as_ref().map(|b| (b.r, -*p))).collect();
    let row = lp.add_row(coupling, Relation::Ge, -rho);
    let sol = solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::Infeasible(format!("{} risk-averse LP", model.mode().name()))),
        LpStatus::Unbounded => return Err(Error::Unbounded("risk-averse LP".into())),
    }
    let dim = model.dim();
    let x = sol.primal[..dim].to_vec();
    let mut exceedance = T::zero();
    let solutions: Vec<_> = dist
        .entries()
        .iter()
        .zip(&blocks)
        .map(|((s, p), b)| {
            let ss = match b {
                Some(b) => model.read_block(&sol, b, s, *p, T::zero()),
                None => ScenarioSolution::empty(dim, model.mode()),
            };
            exceedance += *p * ss.r;
            ss
        })
        .collect();
    Ok(ExactLp { opt: sol.objective, x, solutions, exceedance, delta_star: sol.duals[row].max(T::zero()) })
}

/// `OPT(Δ) = min_x h(Δ;x)`.
pub fn exact_lagrangian_value<T: Scalar, M: TwoStageModel<T> + ?Sized>(
    model: &M,
    dist: &ExplicitDistribution<T>,
    delta: T,
) -> Result<T> {
    guard(model, dist)?;
    Ok(solve_saa(model, dist, delta)?.value)
}

/// Which cost the integer enumeration minimises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegerObjective {
    /// First stage plus expected recourse.
    Budgeted,
    /// First stage only.
    Robust,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegerOptimum<T> {
    pub cost: T,
    pub x: Vec<bool>,
    /// Mass of scenarios whose cheapest integer recourse exceeds the budget.
    pub exceedance: T,
    /// Cheapest integer recourse per scenario, in the distribution's order.
    pub recourse: Vec<T>,
}

/// Cheapest integer cover of `need` by sets with weights `w`, over
/// `candidates` (bitmask per set).
fn min_integer_cover<T: Scalar>(need: u64, cover: &[u64], w: &[T]) -> Option<T> {
    if need == 0 {
        return Some(T::zero());
    }
    let useful: Vec<usize> = (0..cover.len()).filter(|&k| cover[k] & need != 0).collect();
    let mut best: Option<T> = None;
    for mask in 1u64..(1u64 << useful.len()) {
        let mut got = 0u64;
        let mut cost = T::zero();
        for (b, &k) in useful.iter().enumerate() {
            if mask >> b & 1 == 1 {
                got |= cover[k];
                cost += w[k];
            }
        }
        if got & need == need && best.map_or(true, |c| cost < c) {
            best = Some(cost);
        }
    }
    best
}

/// Exhaustive integer optimum: `x ∈ {0,1}^m`, integer recourse, and
/// exceedance mass at most `ρ`.
pub fn exact_integer_enum<T: Scalar>(
    inst: &SetCoverInstance<T>,
    dist: &ExplicitDistribution<T>,
    budget: T,
    rho: T,
    objective: IntegerObjective,
) -> Result<IntegerOptimum<T>> {
    let m = inst.m();
    if m > MAX_ENUM_SETS || dist.len() > MAX_ENUM_SUPPORT || inst.n() > 64 {
        return Err(Error::SizeGuard(format!(
            "enumeration limited to {MAX_ENUM_SETS} sets, {MAX_ENUM_SUPPORT} scenarios and 64 elements"
        )));
    }
    let cover: Vec<u64> = inst.members.iter().map(|ms| ms.iter().fold(0u64, |a, &e| a | 1 << e)).collect();
    let needs: Vec<u64> = dist.entries().iter().map(|(s, _)| s.active.iter().fold(0u64, |a, &e| a | 1 << e)).collect();
    let mut memo: Vec<HashMap<u64, Option<T>>> = vec![HashMap::new(); dist.len()];
    let tol = T::lit(1e-9) * (T::one() + budget.abs());
    let mut best: Option<IntegerOptimum<T>> = None;
    for xm in 0u64..(1u64 << m) {
        let covered = (0..m).filter(|&k| xm >> k & 1 == 1).fold(0u64, |a, k| a | cover[k]);
        let x: Vec<bool> = (0..m).map(|k| xm >> k & 1 == 1).collect();
        let xf: Vec<T> = x.iter().map(|&b| if b { T::one() } else { T::zero() }).collect();
        let mut cost = dot(&inst.w1, &xf);
        let mut exceed = T::zero();
        let mut recourse = Vec::with_capacity(dist.len());
        let mut ok = true;
        for (a, (s, p)) in dist.entries().iter().enumerate() {
            let need = needs[a] & !covered;
            let f = *memo[a].entry(need).or_insert_with(|| min_integer_cover(need, &cover, &s.w2));
            let Some(f) = f else {
                if *p > T::zero() {
                    ok = false;
                    break;
                }
                recourse.push(T::infinity());
                continue;
            };
            if f > s.budget_or(budget) + tol {
                exceed += *p;
            }
            if objective == IntegerObjective::Budgeted {
                cost += *p * f;
            }
            recourse.push(f);
        }
        if !ok || exceed > rho + T::PROB_SUM_TOL {
            continue;
        }
        if best.as_ref().map_or(true, |b| cost < b.cost) {
            best = Some(IntegerOptimum { cost, x, exceedance: exceed, recourse });
        }
    }
    best.ok_or_else(|| Error::Infeasible("no integer first stage meets the exceedance threshold".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Scenario;
    use crate::scenario_lp::BudgetedCover;

    fn t1() -> (SetCoverInstance<f64>, ExplicitDistribution<f64>) {
        let ids = vec!["e1".to_string(), "e2".to_string()];
        let sets = vec![("S1".into(), vec![0], 1.0), ("S2".into(), vec![1], 1.0), ("S3".into(), vec![0, 1], 1.5)];
        let inst = SetCoverInstance::new(ids, sets, 2.0, 1.5).unwrap();
        let w2 = vec![2.0, 2.0, 3.0];
        let dist = ExplicitDistribution::new(vec![
            (Scenario::new(vec![0], w2.clone(), None), 0.5),
            (Scenario::new(vec![0, 1], w2.clone(), None), 0.3),
            (Scenario::new(vec![], w2, None), 0.2),
        ])
        .unwrap();
        (inst, dist)
    }

    #[test]
    fn t1_plain_two_stage() {
        let (inst, dist) = t1();
        let m = BudgetedCover { inst: &inst, budget: 1.5 };
        let e = exact_lp(&m, &dist, 1.0).unwrap();
        assert!((e.opt - 1.5).abs() < 1e-9);
        assert!((e.x[2] - 1.0).abs() < 1e-9);
        assert!(e.delta_star.abs() < 1e-9);
        let i = exact_integer_enum(&inst, &dist, 1.5, 1.0, IntegerObjective::Budgeted).unwrap();
        assert!((i.cost - 1.5).abs() < 1e-12);
        assert_eq!(i.x, vec![false, false, true]);
    }

    #[test]
    fn zero_delta_is_two_stage_value() {
        let (inst, dist) = t1();
        let m = BudgetedCover { inst: &inst, budget: 1.5 };
        assert!((exact_lagrangian_value(&m, &dist, 0.0).unwrap() - 1.5).abs() < 1e-9);
    }

    #[test]
    fn mandatory_uncoverable_is_infeasible() {
        let ids = vec!["e".to_string(), "bare".to_string()];
        let inst = SetCoverInstance::new(ids, vec![("S".into(), vec![0], 1.0)], 1.0, 0.0).unwrap();
        let dist = ExplicitDistribution::new(vec![(Scenario::new(vec![0], vec![1.0], None), 1.0)]).unwrap();
        let i = exact_integer_enum(&inst, &dist, 0.0, 0.5, IntegerObjective::Budgeted).unwrap();
        assert_eq!(i.x, vec![true]);
        let bad = ExplicitDistribution::new(vec![(Scenario::new(vec![1], vec![1.0], None), 1.0)]).unwrap();
        assert!(matches!(
            exact_integer_enum(&inst, &bad, 0.0, 0.5, IntegerObjective::Budgeted),
            Err(Error::Infeasible(_))
        ));
    }
}
