//! Search over the Lagrange multiplier `Δ` for a solution meeting the
//! exceedance threshold, and the bootstrap for multiplicative guarantees.

use std::time::Instant;

use log::{debug, info};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::rng;
use crate::model::{ExplicitDistribution, RiskParams, SampleMode, Scenario, ScenarioOracle, SetCoverInstance};
use crate::saa::{sample_distribution, theory_sample_size, AggregateLp, SaaConfig, SaaSolution};
use crate::scalar::Scalar;
use crate::scenario_lp::{f_a, ScenarioSolution, TwoStageModel};

/// Derived constants of the search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants<T> {
    pub eps_bar: T,
    pub zeta: T,
    pub eta: T,
    pub sigma: T,
    pub gamma_p: T,
    pub beta: T,
    pub rho_p: T,
}

impl<T: Scalar> Constants<T> {
    pub fn new(p: &RiskParams<T>) -> Self {
        let c = T::lit;
        Self {
            eps_bar: p.eps / c(6.0),
            zeta: p.gamma / c(4.0),
            eta: p.rho * p.kappa / c(16.0),
            sigma: p.eps / c(6.0),
            gamma_p: p.gamma / c(4.0),
            beta: p.kappa / c(8.0),
            rho_p: p.rho * (T::one() + c(0.75) * p.kappa),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaGrid<T> {
    pub deltas: Vec<T>,
    pub constants: Constants<T>,
}

impl<T: Scalar> DeltaGrid<T> {
    /// Index of the last grid point.
    pub fn k(&self) -> usize {
        self.deltas.len() - 1
    }
}

/// `Δ_0 = γ′`, `Δ_{i+1} = Δ_i(1+σ)`, up to the first point `≥ ub`.
pub fn delta_grid<T: Scalar>(params: &RiskParams<T>, ub: T) -> DeltaGrid<T> {
    let constants = Constants::new(params);
    let factor = T::one() + constants.sigma;
    let mut deltas = vec![constants.gamma_p];
    while *deltas.last().unwrap() < ub {
        let next = *deltas.last().unwrap() * factor;
        deltas.push(next);
    }
    DeltaGrid { deltas, constants }
}

/// Upper bound on the multiplier for set cover: `16 Σ w^I / ρ`.
pub fn cover_ub<T: Scalar>(inst: &SetCoverInstance<T>, params: &RiskParams<T>) -> T {
    T::lit(16.0) * inst.w1.iter().copied().sum::<T>() / params.rho
}

/// Estimation sample size `ln(4k/δ) / (2β²ρ²)`.
pub fn estimation_size<T: Scalar>(params: &RiskParams<T>, k: usize) -> usize {
    let c = Constants::new(params);
    let b = c.beta.as_f64();
    let rho = params.rho.as_f64();
    let n = (4.0 * k.max(1) as f64 / params.delta.as_f64()).ln() / (2.0 * b * b * rho * rho);
    let n = n.ceil().max(1.0);
    match params.sample_mode {
        SampleMode::Capped(cap) => (n as usize).min(cap),
        _ => n.min(crate::saa::THEORY_LIMIT as f64) as usize,
    }
}

/// `Σ q̂_A r_A` where `q̂` is the estimation distribution and `r_A` the
/// optimal exceedance of each scenario LP at `(Δ, x)`.
pub fn exceedance_on<T: Scalar, M: TwoStageModel<T> + ?Sized>(
    model: &M,
    x: &[T],
    delta: T,
    dist: &ExplicitDistribution<T>,
) -> Result<T> {
    let rs = dist
        .entries()
        .par_iter()
        .map(|(s, p)| {
            if *p <= T::zero() || s.is_empty() {
                return Ok(T::zero());
            }
            model.solve_scenario(delta, x, s, false).map(|sol| *p * sol.r)
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(rs.into_iter().sum())
}

/// Draws `n` scenarios and averages the optimal `r_A` at `(Δ, x)`.
pub fn estimate_exceedance<T: Scalar, M: TwoStageModel<T> + ?Sized>(
    model: &M,
    oracle: &dyn ScenarioOracle<T>,
    x: &[T],
    delta: T,
    n: usize,
    seed: u64,
) -> Result<T> {
    let dist = sample_distribution(model, oracle, SampleMode::Capped(n), n, seed, rng::ESTIMATE)?;
    exceedance_on(model, x, delta, &dist)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow<T> {
    pub delta: T,
    pub cost: T,
    pub p_prime: T,
    pub wallclock_ms: f64,
}

/// One grid point's sampled solution, kept for recourse queries.
#[derive(Debug, Clone)]
pub struct GridPoint<T> {
    pub index: usize,
    pub delta: T,
    pub x: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct RiskReport<T> {
    pub x: Vec<T>,
    /// `(i, a)`: `x = a·x^(i) + (1−a)·x^(i+1)`.
    pub mixing: Option<(usize, T)>,
    pub cost_estimate: T,
    pub exceedance_estimate: T,
    pub trace: Vec<TraceRow<T>>,
    pub mode: &'static str,
    pub ub: T,
    /// Lower bound used for the multiplicative guarantee.
    pub lb: Option<T>,
    pub rho: T,
    pub kappa: T,
    /// `x^(i)` and, when mixed, `x^(i+1)`.
    pub points: Vec<GridPoint<T>>,
    /// Full-support runs only: whether the exceedance at the last grid point
    /// is below `ρ/2`.
    pub end_check: Option<bool>,
    pub saa_samples: usize,
    pub estimation_samples: usize,
}

impl<T: Scalar> RiskReport<T> {
    pub fn to_json(&self, action_ids: &[String]) -> Value {
        let x: serde_json::Map<String, Value> =
            action_ids.iter().zip(&self.x).map(|(id, v)| (id.clone(), json!(v.as_f64()))).collect();
        let trace: Vec<Value> = self
            .trace
            .iter()
            .map(|t| json!({"delta": t.delta.as_f64(), "cost": t.cost.as_f64(), "p_prime": t.p_prime.as_f64()}))
            .collect();
        let mut v = json!({
            "x": x,
            "cost_estimate": self.cost_estimate.as_f64(),
            "exceedance_estimate": self.exceedance_estimate.as_f64(),
            "trace": trace,
            "ub": self.ub.as_f64(),
            "mode": self.mode,
        });
        if let Some((i, a)) = self.mixing {
            v["mixing"] = json!({"i": i, "a": a.as_f64()});
        }
        if let Some(lb) = self.lb {
            v["lb"] = json!(lb.as_f64());
        }
        v
    }

    /// CSV trace with columns `delta,cost,p_prime,wallclock_ms`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("delta,cost,p_prime,wallclock_ms\n");
        for t in &self.trace {
            out.push_str(&format!("{},{},{},{:.3}\n", t.delta.as_f64(), t.cost.as_f64(), t.p_prime.as_f64(), t.wallclock_ms));
        }
        out
    }

    /// The report's recourse in scenario `s`.
    pub fn recourse<M: TwoStageModel<T> + ?Sized>(&self, model: &M, s: &Scenario<T>) -> Result<ScenarioSolution<T>> {
        recourse_policy(self, model, s)
    }
}

/// Grid points per warm-started chunk. Fixed so that bases, and hence ties
/// between optimal vertices, do not depend on the thread count.
const GRID_CHUNK: usize = 8;

/// Solves the sampled problem at every grid point. The grid is split into
/// contiguous chunks solved in parallel, each warm-starting along its chunk.
fn solve_grid<T: Scalar, M: TwoStageModel<T> + ?Sized>(
    model: &M,
    dist: &ExplicitDistribution<T>,
    deltas: &[T],
) -> Result<Vec<(SaaSolution<T>, f64)>> {
    let parts = deltas
        .par_chunks(GRID_CHUNK)
        .map(|ds| {
            let mut agg = AggregateLp::new(model, dist);
            ds.iter()
                .map(|&d| {
                    let t0 = Instant::now();
                    let sol = agg.solve(d)?;
                    Ok((sol, t0.elapsed().as_secs_f64() * 1e3))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// First adjacent pair with `p(i) ≥ ρ′ ≥ p(i+1)` and its mixing weight.
pub fn find_crossing<T: Scalar>(p: &[T], rho_p: T) -> Option<(usize, T)> {
    (0..p.len().saturating_sub(1)).find(|&i| p[i] >= rho_p && rho_p >= p[i + 1]).map(|i| {
        let a = if p[i] == p[i + 1] { T::one() } else { (rho_p - p[i + 1]) / (p[i] - p[i + 1]) };
        (i, a.max(T::zero()).min(T::one()))
    })
}

/// Draws the sampled-problem and estimation scenario sets (or takes the
/// support in full-support mode) and runs the search with upper bound `ub` on
/// the multiplier.
pub fn risk_alg<T: Scalar, M: TwoStageModel<T> + ?Sized>(
    model: &M,
    oracle: &dyn ScenarioOracle<T>,
    params: &RiskParams<T>,
    ub: T,
    seed: u64,
) -> Result<RiskReport<T>> {
    params.validate()?;
    let (n_saa, n_est) = sample_sizes(model, params, ub)?;
    let saa_dist = sample_distribution(model, oracle, params.sample_mode, n_saa, seed, rng::SAA)?;
    let est_dist = sample_distribution(model, oracle, params.sample_mode, n_est, seed, rng::ESTIMATE)?;
    let mut report = risk_alg_on(model, &saa_dist, &est_dist, params, ub)?;
    if params.sample_mode != SampleMode::FullSupport {
        report.saa_samples = n_saa;
        report.estimation_samples = n_est;
    }
    Ok(report)
}

/// Scenario counts for the sampled problem and for estimation.
pub fn sample_sizes<T: Scalar, M: TwoStageModel<T> + ?Sized>(
    model: &M,
    params: &RiskParams<T>,
    ub: T,
) -> Result<(usize, usize)> {
    let grid = delta_grid(params, ub);
    let c = grid.constants;
    let kmax = model.lipschitz(*grid.deltas.last().unwrap()).as_f64();
    let cfg = SaaConfig::new(
        c.eps_bar.as_f64(),
        c.eta.as_f64(),
        c.zeta.as_f64(),
        params.delta.as_f64(),
        model.dim(),
        kmax,
        params.sample_mode,
    )?;
    let size = theory_sample_size(&cfg, model.dim(), model.lambda().as_f64(), model.mode());
    if size.capped {
        info!("sample size {} (formula {:.3e})", size.count, size.theory);
    }
    Ok((size.count, estimation_size(params, grid.k())))
}

/// The search on given scenario sets: `saa` builds the sampled problems and
/// `estimate` measures their exceedance.
pub fn risk_alg_on<T: Scalar, M: TwoStageModel<T> + ?Sized>(
    model: &M,
    saa_dist: &ExplicitDistribution<T>,
    est_dist: &ExplicitDistribution<T>,
    params: &RiskParams<T>,
    ub: T,
) -> Result<RiskReport<T>> {
    params.validate()?;
    let grid = delta_grid(params, ub);
    let c = grid.constants;
    let k = grid.k();
    let full = params.sample_mode == SampleMode::FullSupport;
    debug!("grid of {} points, {} distinct SAA scenarios", grid.deltas.len(), saa_dist.len());

    let sols = solve_grid(model, saa_dist, &grid.deltas)?;
    let p_prime = sols
        .par_iter()
        .map(|(s, _)| exceedance_on(model, &s.x, s.delta, est_dist))
        .collect::<Result<Vec<T>>>()?;
    let counts = model.counts_recourse();
    let trace: Vec<TraceRow<T>> = sols
        .iter()
        .zip(&p_prime)
        .map(|((s, ms), &p)| TraceRow { delta: s.delta, cost: s.cost(counts), p_prime: p, wallclock_ms: *ms })
        .collect();
    let end_check = full.then(|| p_prime[k] < params.rho * T::half());

    let point = |i: usize| GridPoint { index: i, delta: grid.deltas[i], x: sols[i].0.x.clone() };
    let base = RiskReport {
        x: Vec::new(),
        mixing: None,
        cost_estimate: T::zero(),
        exceedance_estimate: T::zero(),
        trace,
        mode: model.mode().name(),
        ub,
        lb: None,
        rho: params.rho,
        kappa: params.kappa,
        points: Vec::new(),
        end_check,
        saa_samples: 0,
        estimation_samples: 0,
    };
    if p_prime[0] <= c.rho_p {
        return Ok(RiskReport {
            x: sols[0].0.x.clone(),
            cost_estimate: base.trace[0].cost,
            exceedance_estimate: p_prime[0],
            points: vec![point(0)],
            ..base
        });
    }
    if p_prime[k] >= c.rho_p {
        return Err(Error::GridEnd { p_last: p_prime[k].as_f64(), threshold: c.rho_p.as_f64() });
    }
    let (i, a) = find_crossing(&p_prime, c.rho_p).ok_or_else(|| Error::NoCrossing(format!("p′ = {:?}", p_prime.iter().map(|p| p.as_f64()).collect::<Vec<_>>())))?;
    let b = T::one() - a;
    let x = sols[i].0.x.iter().zip(&sols[i + 1].0.x).map(|(&u, &v)| a * u + b * v).collect();
    Ok(RiskReport {
        x,
        mixing: Some((i, a)),
        cost_estimate: a * base.trace[i].cost + b * base.trace[i + 1].cost,
        exceedance_estimate: a * p_prime[i] + b * p_prime[i + 1],
        points: vec![point(i), point(i + 1)],
        ..base
    })
}

/// Recourse of a report in scenario `s`: the Lagrangian solution at the
/// stored grid point(s), mixed with the report's coefficient.
pub fn recourse_policy<T: Scalar, M: TwoStageModel<T> + ?Sized>(
    report: &RiskReport<T>,
    model: &M,
    s: &Scenario<T>,
) -> Result<ScenarioSolution<T>> {
    let first = report.points.first().ok_or_else(|| Error::InvalidParameter("report without grid points".into()))?;
    let si = model.solve_scenario(first.delta, &first.x, s, false)?;
    match (report.mixing, report.points.get(1)) {
        (Some((_, a)), Some(second)) => {
            let sj = model.solve_scenario(second.delta, &second.x, s, false)?;
            Ok(si.mix(a, &sj))
        }
        _ => Ok(si),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Bootstrap<T> {
    /// No sampled scenario was active: the zero first stage, covering every
    /// active scenario fully in stage II, is returned.
    ZeroOptimal { samples: usize },
    LowerBound { lb: T, samples: usize },
}

/// Sample count `⌈ln(1/δ)/α⌉` with `α = min{ρ, 1/λ}`.
pub fn bootstrap_samples<T: Scalar>(rho: T, lambda: T, delta: T) -> (T, usize) {
    let alpha = rho.min(T::one() / lambda);
    let m = ((T::one() / delta).ln() / alpha).ceil();
    (alpha, m.as_f64() as usize)
}

/// Decides between "the zero first stage is optimal" and a lower bound on
/// the optimum. The instance must declare every nonempty scenario to cost at
/// least 1.
pub fn bootstrap_lower_bound<T: Scalar>(
    inst: &SetCoverInstance<T>,
    oracle: &dyn ScenarioOracle<T>,
    params: &RiskParams<T>,
    seed: u64,
) -> Result<Bootstrap<T>> {
    if !inst.unit_cost_floor {
        return Err(Error::Unsupported(
            "multiplicative mode needs instances declaring unit_cost_floor".into(),
        ));
    }
    let (alpha, m) = bootstrap_samples(params.rho, inst.lambda, params.delta);
    let mut r = rng::stream(seed, rng::SAA, 1);
    let mut hits = 0usize;
    for _ in 0..m {
        let s = crate::model::draw_scenario(inst, oracle, &mut r)?;
        hits += usize::from(!s.is_empty());
    }
    if hits == 0 {
        return Ok(Bootstrap::ZeroOptimal { samples: m });
    }
    let d = params.delta;
    Ok(Bootstrap::LowerBound { lb: d / (T::one() / d).ln() * alpha, samples: m })
}

/// Recourse of the zero-optimal policy: `(0, ẑ_A, 1)`.
pub fn zero_policy<T: Scalar>(inst: &SetCoverInstance<T>, s: &Scenario<T>) -> Result<(Vec<T>, T)> {
    let (_, z) = f_a(inst, &vec![T::zero(); inst.m()], s)?;
    Ok((z, if s.is_empty() { T::zero() } else { T::one() }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_grid() {
        // γ = 4 and ε = 6 give γ′ = 1 and σ = 1
        let p = RiskParams::new(1.0, 0.1, 6.0, 4.0, 0.5);
        let g = delta_grid(&p, 8.0);
        assert_eq!(g.deltas, vec![1.0, 2.0, 4.0, 8.0]);
        assert_eq!(delta_grid(&p, 1.0).deltas, vec![1.0]);
    }

    #[test]
    fn crossing_rules() {
        let (i, a) = find_crossing(&[0.9f64, 0.5, 0.1], 0.3).unwrap();
        assert!(i == 1 && (a - 0.5).abs() < 1e-12);
        assert_eq!(find_crossing(&[0.3, 0.3], 0.3), Some((0, 1.0)));
        assert_eq!(find_crossing(&[0.9, 0.1, 0.9, 0.1], 0.5).unwrap().0, 0);
        assert_eq!(find_crossing(&[0.9, 0.8], 0.5), None);
    }

    #[test]
    fn bootstrap_count() {
        let (alpha, m) = bootstrap_samples(0.2, 2.0, 0.1);
        assert_eq!(alpha, 0.2);
        assert_eq!(m, 12);
    }
}
