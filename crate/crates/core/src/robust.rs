//! Risk-averse robust covering: minimise `w^I·x + Q_ρ` by guessing the
//! quantile budget on a geometric grid.

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{rng, RiskParams, SampleMode, ScenarioOracle, SetCoverInstance};
use crate::risk_search::{cover_ub, risk_alg, Constants, RiskReport};
use crate::scalar::Scalar;
use crate::scenario_lp::{BudgetedCover, RobustCover};

/// `γ, γ(1+ε), …` up to the first value `≥ w`.
pub fn budget_grid<T: Scalar>(gamma: T, eps: T, w: T) -> Vec<T> {
    let mut out = vec![gamma];
    while *out.last().unwrap() < w {
        let next = *out.last().unwrap() * (T::one() + eps);
        out.push(next);
    }
    out
}

/// Smallest `B` with `Pr[cost > B] ≤ ρ` for a finite distribution given as
/// `(cost, probability)` pairs.
pub fn quantile<T: Scalar>(items: &[(T, T)], rho: T) -> T {
    let mut v: Vec<(T, T)> = items.iter().copied().filter(|(_, p)| *p > T::zero()).collect();
    v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut above: T = v.iter().map(|(_, p)| *p).sum();
    let mut b = T::zero();
    for (c, p) in v {
        if above <= rho + T::PROB_SUM_TOL {
            return b;
        }
        above -= p;
        b = c;
    }
    b
}

#[derive(Debug, Clone)]
pub struct RobustOutcome<T> {
    pub report: RiskReport<T>,
    pub budget: T,
    /// `w^I·x + B` (robust) or `cost_estimate + weight·B` (mixed).
    pub objective: T,
    /// Objective per grid budget; `None` where the search failed.
    pub grid: Vec<(T, Option<T>)>,
}

fn total_w1<T: Scalar>(inst: &SetCoverInstance<T>) -> T {
    inst.w1.iter().copied().sum()
}

fn run_grid<T: Scalar>(
    budgets: &[T],
    solve_one: impl Fn(T) -> Result<(RiskReport<T>, T)> + Sync,
) -> Result<RobustOutcome<T>> {
    let results: Vec<Result<(RiskReport<T>, T)>> = budgets.par_iter().map(|&b| solve_one(b)).collect();
    let mut grid = Vec::with_capacity(budgets.len());
    let mut best: Option<(RiskReport<T>, T, T)> = None;
    let mut last_err = None;
    for (&b, r) in budgets.iter().zip(results) {
        match r {
            Ok((rep, obj)) => {
                grid.push((b, Some(obj)));
                if best.as_ref().map_or(true, |(_, _, o)| obj < *o) {
                    best = Some((rep, b, obj));
                }
            }
            Err(e) => {
                warn!("budget {b}: {e}");
                grid.push((b, None));
                last_err = Some(e);
            }
        }
    }
    match best {
        Some((report, budget, objective)) => Ok(RobustOutcome { report, budget, objective, grid }),
        None => Err(last_err.unwrap_or_else(|| Error::InvalidParameter("empty budget grid".into()))),
    }
}

/// Runs the robust-mode search for every grid budget and returns the
/// minimiser of `w^I·x + B`.
pub fn robust_solve<T: Scalar>(
    inst: &SetCoverInstance<T>,
    oracle: &dyn ScenarioOracle<T>,
    params: &RiskParams<T>,
    seed: u64,
) -> Result<RobustOutcome<T>> {
    params.validate()?;
    let budgets = budget_grid(params.gamma, params.eps, total_w1(inst));
    let ub = cover_ub(inst, params);
    run_grid(&budgets, |b| {
        let model = RobustCover { inst, budget: b };
        let p = RiskParams { budget: b, ..*params };
        let rep = risk_alg(&model, oracle, &p, ub, seed)?;
        let obj = rep.cost_estimate + b;
        Ok((rep, obj))
    })
}

/// Outcome of the zero-probability test preceding the multiplicative mode.
#[derive(Debug, Clone)]
pub enum Multiplicative<T> {
    /// Nonempty scenarios are rare enough for `x = 0`.
    Zero { q_hat: T, samples: usize },
    Solved { q_hat: T, samples: usize, outcome: RobustOutcome<T> },
}

/// Estimates the mass of nonempty scenarios from `ln(1/δ)/ρ′` samples; if it
/// is at most the midpoint of `ρ` and `ρ′` returns `x = 0`, otherwise runs
/// [`robust_solve`] with `γ = ε`.
pub fn robust_solve_multiplicative<T: Scalar>(
    inst: &SetCoverInstance<T>,
    oracle: &dyn ScenarioOracle<T>,
    params: &RiskParams<T>,
    seed: u64,
) -> Result<Multiplicative<T>> {
    params.validate()?;
    let rho_p = Constants::new(params).rho_p;
    let (q_hat, samples) = if params.sample_mode == SampleMode::FullSupport {
        let d = oracle.support().ok_or_else(|| Error::Unsupported("full support needs an explicit distribution".into()))?;
        (d.mass(|s| !s.is_empty()), 0)
    } else {
        let n = ((T::one() / params.delta).ln() / rho_p).ceil().as_f64().max(1.0) as usize;
        let mut r = rng::stream(seed, rng::ESTIMATE, 1);
        let hits = (0..n).filter(|_| !oracle.draw(&mut r).is_empty()).count();
        (T::from_count(hits) / T::from_count(n), n)
    };
    if q_hat <= (params.rho + rho_p) * T::half() {
        return Ok(Multiplicative::Zero { q_hat, samples });
    }
    let p = RiskParams { gamma: params.eps, ..*params };
    Ok(Multiplicative::Solved { q_hat, samples, outcome: robust_solve(inst, oracle, &p, seed)? })
}

/// Covers all but a `ρ(1+κ)` fraction of scenarios with no recourse: the
/// robust search at budget zero.
pub fn chance_constrained_cover<T: Scalar>(
    inst: &SetCoverInstance<T>,
    oracle: &dyn ScenarioOracle<T>,
    params: &RiskParams<T>,
    seed: u64,
) -> Result<RiskReport<T>> {
    let p = RiskParams { budget: T::zero(), ..*params };
    let model = RobustCover { inst, budget: T::zero() };
    risk_alg(&model, oracle, &p, cover_ub(inst, &p), seed)
}

/// For each grid budget, the budgeted search (which carries expected
/// recourse); returns the minimiser of `cost_estimate + weight_q·B`. With
/// `weight_q = 0` only the largest budget is solved.
pub fn mixed_objective_solve<T: Scalar>(
    inst: &SetCoverInstance<T>,
    oracle: &dyn ScenarioOracle<T>,
    params: &RiskParams<T>,
    weight_q: T,
    seed: u64,
) -> Result<RobustOutcome<T>> {
    if weight_q < T::zero() {
        return Err(Error::InvalidParameter("weight_q must be nonnegative".into()));
    }
    params.validate()?;
    let mut budgets = budget_grid(params.gamma, params.eps, total_w1(inst));
    if weight_q == T::zero() {
        budgets = vec![*budgets.last().unwrap()];
    }
    let ub = cover_ub(inst, params);
    run_grid(&budgets, |b| {
        let model = BudgetedCover { inst, budget: b };
        let p = RiskParams { budget: b, ..*params };
        let rep = risk_alg(&model, oracle, &p, ub, seed)?;
        let obj = rep.cost_estimate + weight_q * b;
        Ok((rep, obj))
    })
}
