//! Risk-averse budgeted facility location: the infeasibility pre-check, the
//! search wrapper with its own multiplier bound, recourse, and integer
//! rounding.

use crate::error::{Error, Result};
use crate::model::{rng, ExplicitDistribution, FacilityLocationInstance, FlBudgets, RiskParams, SampleMode, Scenario, ScenarioOracle};
use crate::risk_search::{recourse_policy, risk_alg, Constants, RiskReport};
use crate::rounding::{scale_first_stage, sta_round_fl, FlFractional};
use crate::scalar::Scalar;
use crate::scenario_lp::{ell_a, BudgetedFacility, ScenarioSolution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlBounds<T> {
    pub rho_hat: T,
    pub kappa_hat: T,
    pub ub: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlCheck<T> {
    /// The estimated mass of scenarios that cannot meet the budget even with
    /// every facility open is too large.
    Infeasible { mass: T },
    Proceed { mass: T, bounds: FlBounds<T> },
}

/// Budget the bound is computed with: the total budget, or the largest
/// possible assignment cost when budgets vary.
fn bound_budget<T: Scalar>(inst: &FacilityLocationInstance<T>, budget: T) -> T {
    if budget.is_finite() {
        budget
    } else {
        inst.max_assignment_total()
    }
}

/// `ρ̂ = ρ(1+5κ/28)` (for `ρ < 1`), `κ̂` with `ρ̂(1+κ̂) = ρ(1+κ)`, and
/// `UB = 32(1+ε̄)(Σf^I + B)/(3ρκ)`.
pub fn fl_bounds<T: Scalar>(inst: &FacilityLocationInstance<T>, params: &RiskParams<T>) -> FlBounds<T> {
    let c = T::lit;
    let (rho, kappa) = (params.rho, params.kappa);
    // at ρ = 1 the threshold is vacuous and is kept as is
    let (rho_hat, kappa_hat) = if rho >= T::one() {
        (rho, kappa)
    } else {
        let rh = rho * (T::one() + c(5.0) * kappa / c(28.0));
        (rh, rho * (T::one() + kappa) / rh - T::one())
    };
    let eps_bar = params.eps / c(6.0);
    let f: T = inst.f1.iter().copied().sum();
    let ub = c(32.0) * (T::one() + eps_bar) * (f + bound_budget(inst, params.budget)) / (c(3.0) * rho * kappa);
    FlBounds { rho_hat, kappa_hat, ub }
}

/// Cheapest possible assignment cost exceeds what the scenario may spend.
fn hopeless<T: Scalar>(inst: &FacilityLocationInstance<T>, budgets: &FlBudgets<T>, s: &Scenario<T>) -> bool {
    let limit = s.budget_or(budgets.total).min(budgets.assignment);
    inst.min_assignment_cost(s) > limit * (T::one() + T::lit(1e-12))
}

/// Pre-check count `⌈(56/(5ρκ))·ln(1/δ)⌉`.
pub fn fl_check_samples<T: Scalar>(params: &RiskParams<T>) -> usize {
    let n = T::lit(56.0) / (T::lit(5.0) * params.rho * params.kappa) * (T::one() / params.delta).ln();
    n.ceil().as_f64() as usize
}

/// Decides whether the budget is hopeless in more than a `ρ` fraction of
/// scenarios. Sampled runs compare the estimate with `ρ(1+5κ/56)`; full
/// support compares the exact mass with `ρ`.
pub fn fl_feasibility_check<T: Scalar>(
    inst: &FacilityLocationInstance<T>,
    oracle: &dyn ScenarioOracle<T>,
    params: &RiskParams<T>,
    seed: u64,
) -> Result<FlCheck<T>> {
    params.validate()?;
    let budgets = FlBudgets { total: params.budget, ..inst.budgets };
    let (mass, threshold) = if params.sample_mode == SampleMode::FullSupport {
        let d = oracle.support().ok_or_else(|| Error::Unsupported("full support needs an explicit distribution".into()))?;
        (d.mass(|s| hopeless(inst, &budgets, s)), params.rho)
    } else {
        let n = fl_check_samples(params);
        let mut r = rng::stream(seed, rng::ESTIMATE, 2);
        let mut bad = 0usize;
        for _ in 0..n {
            let s = crate::model::draw_scenario(inst, oracle, &mut r)?;
            bad += usize::from(hopeless(inst, &budgets, &s));
        }
        (T::from_count(bad) / T::from_count(n), params.rho * (T::one() + T::lit(5.0) * params.kappa / T::lit(56.0)))
    };
    if mass > threshold + T::PROB_SUM_TOL {
        return Ok(FlCheck::Infeasible { mass });
    }
    Ok(FlCheck::Proceed { mass, bounds: fl_bounds(inst, params) })
}

#[derive(Debug, Clone)]
pub struct FlSolve<T> {
    pub report: RiskReport<T>,
    pub bounds: FlBounds<T>,
    pub budgets: FlBudgets<T>,
    /// Whether the exceedance at the last grid point is below `ρ̂′`
    /// (full-support runs only).
    pub end_check: Option<bool>,
    /// Per-scenario recourse, returned when a facility or assignment budget
    /// is finite.
    pub recourse: Option<Vec<(Scenario<T>, ScenarioSolution<T>)>>,
}

impl<T: Scalar> FlSolve<T> {
    pub fn model<'a>(&self, inst: &'a FacilityLocationInstance<T>) -> BudgetedFacility<'a, T> {
        BudgetedFacility { inst, budgets: self.budgets }
    }
}

/// Largest number of sampled scenarios whose recourse is attached in
/// multi-budget mode.
pub const MAX_ATTACHED: usize = 1000;

/// Pre-check, then the search with `(ρ̂, κ̂)` and the facility bound.
/// `ε` is lowered to `κ̂` when it exceeds it.
pub fn fl_risk_solve<T: Scalar>(
    inst: &FacilityLocationInstance<T>,
    oracle: &dyn ScenarioOracle<T>,
    params: &RiskParams<T>,
    seed: u64,
) -> Result<FlSolve<T>> {
    let bounds = match fl_feasibility_check(inst, oracle, params, seed)? {
        FlCheck::Infeasible { mass } => {
            return Err(Error::Infeasible(format!(
                "budget cannot be met in an estimated {:.4} fraction of scenarios",
                mass.as_f64()
            )))
        }
        FlCheck::Proceed { bounds, .. } => bounds,
    };
    let budgets = FlBudgets { total: params.budget, ..inst.budgets };
    let model = BudgetedFacility { inst, budgets };
    let p = RiskParams {
        rho: bounds.rho_hat,
        kappa: bounds.kappa_hat,
        eps: params.eps.min(bounds.kappa_hat),
        ..*params
    };
    let report = risk_alg(&model, oracle, &p, bounds.ub, seed)?;
    let rho_p = Constants::new(&p).rho_p;
    let end_check = report.end_check.map(|_| report.trace.last().unwrap().p_prime < rho_p);
    let recourse = if budgets.is_multi() {
        let scenarios: Vec<Scenario<T>> = match oracle.support() {
            Some(d) => d.entries().iter().map(|(s, _)| s.clone()).collect(),
            None => {
                let mut r = rng::stream(seed, rng::ESTIMATE, 3);
                let n = report.estimation_samples.clamp(1, MAX_ATTACHED);
                let samples = crate::model::draw_many(inst, oracle, n, &mut r)?;
                ExplicitDistribution::empirical(&samples)?.entries().iter().map(|(s, _)| s.clone()).collect()
            }
        };
        let sols = scenarios
            .into_iter()
            .map(|s| recourse_policy(&report, &model, &s).map(|sol| (s, sol)))
            .collect::<Result<Vec<_>>>()?;
        Some(sols)
    } else {
        None
    };
    Ok(FlSolve { report, bounds, budgets, end_check, recourse })
}

/// Recourse of an FL report in scenario `s`.
pub fn fl_recourse<T: Scalar>(
    solve: &FlSolve<T>,
    inst: &FacilityLocationInstance<T>,
    s: &Scenario<T>,
) -> Result<ScenarioSolution<T>> {
    recourse_policy(&solve.report, &solve.model(inst), s)
}

/// Integer plan for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct FlScenarioPlan<T> {
    /// Facilities opened in the scenario.
    pub open: Vec<usize>,
    /// `(client, facility)` for every active client.
    pub assign: Vec<(usize, usize)>,
    pub open_cost: T,
    pub assign_cost: T,
}

impl<T: Scalar> FlScenarioPlan<T> {
    pub fn cost(&self) -> T {
        self.open_cost + self.assign_cost
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlIntegerPlan<T> {
    pub stage1: Vec<usize>,
    pub stage1_cost: T,
    /// In the distribution's order.
    pub scenarios: Vec<FlScenarioPlan<T>>,
}

impl<T: Scalar> FlIntegerPlan<T> {
    pub fn expected_cost(&self, dist: &ExplicitDistribution<T>) -> T {
        self.stage1_cost + dist.entries().iter().zip(&self.scenarios).map(|((_, p), s)| *p * s.cost()).sum::<T>()
    }
}

/// Rounds a fractional first stage `y` to integer decisions for every
/// scenario of `dist`. With `ŷ = (1+1/ε)y` and the fractional second stage
/// of each scenario, the assignment splits into the part served by `ŷ` and
/// the rest. Clients served by `ŷ` to at least one half form, weighted by
/// scenario probability, one deterministic instance rounded with doubled
/// values; the remaining clients of each scenario are rounded the same way
/// against that scenario's openings. Each side loses at most `2·4`.
pub fn round_fl<T: Scalar>(
    inst: &FacilityLocationInstance<T>,
    y: &[T],
    eps_r: T,
    dist: &ExplicitDistribution<T>,
) -> Result<FlIntegerPlan<T>> {
    if inst.budgets.is_multi() {
        return Err(Error::Unsupported("integer rounding with facility or assignment budgets".into()));
    }
    let nf = inst.n_facilities();
    let two = T::lit(2.0);
    let gamma = T::lit(0.25);
    let y_hat = scale_first_stage(y, eps_r);
    let seconds = dist.entries().iter().map(|(s, _)| ell_a(inst, &y_hat, s)).collect::<Result<Vec<_>>>()?;

    // stage-I clients: (scenario, client position) with Σ min(x, ŷ) ≥ 1/2
    let half = T::half() - T::lit(1e-12);
    let mut s1_clients: Vec<(usize, usize)> = Vec::new();
    let mut s1_assign: Vec<Vec<T>> = Vec::new();
    let mut s1_cost_cols: Vec<usize> = Vec::new();
    for (a, ((s, p), sec)) in dist.entries().iter().zip(&seconds).enumerate() {
        if *p <= T::zero() {
            continue;
        }
        for (t, &j) in s.active.iter().enumerate() {
            let part: Vec<T> = (0..nf).map(|i| sec.assign[t][i].min(y_hat[i])).collect();
            if part.iter().copied().sum::<T>() >= half {
                s1_clients.push((a, t));
                s1_assign.push(part.iter().map(|&v| two * v).collect());
                s1_cost_cols.push(j);
            }
        }
    }
    let stage1 = if s1_clients.is_empty() {
        Vec::new()
    } else {
        let frac = FlFractional {
            facility_cost: inst.f1.clone(),
            cost: (0..nf).map(|i| s1_cost_cols.iter().map(|&j| inst.cost[i][j]).collect()).collect(),
            open: y_hat.iter().map(|&v| two * v).collect(),
            assign: s1_assign,
        };
        sta_round_fl(&frac, gamma)?.open
    };
    let stage1_cost = stage1.iter().map(|&i| inst.f1[i]).sum();

    let mut scenarios = Vec::with_capacity(dist.len());
    for (a, ((s, _), sec)) in dist.entries().iter().zip(&seconds).enumerate() {
        let mine: Vec<usize> = (0..s.active.len()).filter(|&t| s1_clients.binary_search(&(a, t)).is_err()).collect();
        let mut open2 = Vec::new();
        if !mine.is_empty() {
            let frac = FlFractional {
                facility_cost: s.w2.clone(),
                cost: (0..nf).map(|i| mine.iter().map(|&t| inst.cost[i][s.active[t]]).collect()).collect(),
                open: sec.open.iter().map(|&v| two * v).collect(),
                assign: mine
                    .iter()
                    .map(|&t| (0..nf).map(|i| two * (sec.assign[t][i] - sec.assign[t][i].min(y_hat[i])).max(T::zero())).collect())
                    .collect(),
            };
            open2 = sta_round_fl(&frac, gamma)?.open.into_iter().filter(|i| !stage1.contains(i)).collect();
        }
        let all: Vec<usize> = stage1.iter().chain(&open2).copied().collect();
        let assign: Vec<(usize, usize)> = s
            .active
            .iter()
            .map(|&j| {
                let best = all
                    .iter()
                    .copied()
                    .min_by(|&a, &b| inst.cost[a][j].partial_cmp(&inst.cost[b][j]).unwrap().then(a.cmp(&b)));
                best.map(|i| (j, i)).ok_or_else(|| Error::Infeasible("no facility opened for an active client".into()))
            })
            .collect::<Result<_>>()?;
        let open_cost = open2.iter().map(|&i| s.w2[i]).sum();
        let assign_cost = assign.iter().map(|&(j, i)| inst.cost[i][j]).sum();
        scenarios.push(FlScenarioPlan { open: open2, assign, open_cost, assign_cost });
    }
    Ok(FlIntegerPlan { stage1, stage1_cost, scenarios })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_formula() {
        let fac = (0..2).map(|k| (format!("f{k}"), 5.0)).collect();
        let inst =
            FacilityLocationInstance::new(fac, vec!["a".into()], vec![vec![1.0], vec![1.0]], 2.0, FlBudgets::total_only(2.0))
                .unwrap();
        let p: RiskParams<f64> = RiskParams::new(2.0, 0.1, 0.6, 0.1, 0.2);
        let b = fl_bounds(&inst, &p);
        assert!((b.ub - 7040.0).abs() < 1e-9);
        assert!((b.rho_hat * (1.0 + b.kappa_hat) - 0.1 * 1.2).abs() < 1e-12);
    }
}
