//! Sample average approximation of the Lagrangian `h(Δ;·)`.
//!
//! The sampled problem is solved as one LP holding the first-stage variables
//! and one block per distinct sampled scenario.

use log::warn;

use crate::error::{Error, Result};
use crate::model::rng::{self, Rng};
use crate::model::{ExplicitDistribution, SampleMode, Scenario, ScenarioOracle};
use crate::scalar::{dot, Scalar};
use crate::scenario_lp::{Block, FirstStageRef, Mode, ScenarioSolution, TwoStageModel};
use crate::simplex::{solve_lp, Basis, LpProblem, LpStatus, SolveOptions};

/// Samples drawn by default when no explicit cap is given.
pub const DEFAULT_CAP: usize = 5000;

/// Largest count returned in theory mode; beyond it the count is clamped and
/// flagged.
pub const THEORY_LIMIT: usize = 10_000_000;

#[derive(Debug, Clone, Copy)]
pub struct SaaConfig {
    pub epsilon_bar: f64,
    pub eta: f64,
    pub zeta: f64,
    pub delta: f64,
    /// Radius of a ball containing the box.
    pub r: f64,
    /// Radius of a ball inside the box.
    pub v: f64,
    /// Lipschitz bound on `h(Δ;·)`.
    pub k: f64,
    pub tau: f64,
    pub n_steps: u32,
    pub sample_mode: SampleMode,
}

impl SaaConfig {
    pub fn new(epsilon_bar: f64, eta: f64, zeta: f64, delta: f64, m: usize, k: f64, sample_mode: SampleMode) -> Result<Self> {
        let r = (m.max(1) as f64).sqrt();
        let v = 0.5;
        let tau = zeta / 6.0;
        for (name, val) in [("epsilon_bar", epsilon_bar), ("eta", eta), ("zeta", zeta), ("delta", delta), ("K", k)] {
            if !(val > 0.0 && val.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {val}")));
            }
        }
        let n_steps = (2.0 * k * r / (v * tau)).log2().ceil().max(1.0) as u32;
        Ok(Self { epsilon_bar, eta, zeta, delta, r, v, k, tau, n_steps, sample_mode })
    }

    /// Upper bound on `ln|G_τ|`.
    pub fn ln_net_size(&self, m: usize) -> f64 {
        let n = f64::from(self.n_steps);
        let mf = m.max(1) as f64;
        mf * (3.0 * self.k * self.r * n * mf.sqrt() / self.tau).ln() + (n + 1.0).ln() + 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSize {
    pub count: usize,
    /// The uncapped formula value.
    pub theory: f64,
    /// Set when `count` is below the formula value.
    pub capped: bool,
}

/// Number of scenarios for the sampled problem. Robust mode carries no
/// `λ`-term.
pub fn theory_sample_size(cfg: &SaaConfig, m: usize, lambda: f64, mode: Mode) -> SampleSize {
    let n = f64::from(cfg.n_steps);
    let mf = m.max(1) as f64;
    let lam_term = if mode == Mode::Robust { 0.0 } else { 4.0 * lambda / cfg.epsilon_bar };
    let log_term = (2.0f64).ln() + cfg.ln_net_size(m) + mf.ln() - cfg.delta.ln();
    let theory = 8.0 * n * n * (lam_term + mf / cfg.eta).powi(2) * log_term;
    let (limit, capped_mode) = match cfg.sample_mode {
        SampleMode::Capped(c) => (c, true),
        _ => (THEORY_LIMIT, false),
    };
    let exact = theory.ceil();
    if exact.is_finite() && exact <= limit as f64 {
        return SampleSize { count: (exact as usize).max(1), theory, capped: false };
    }
    if !capped_mode {
        warn!("theory sample size {theory:.3e} clamped to {limit}");
    }
    SampleSize { count: limit, theory, capped: true }
}

/// Frequencies of the samples.
pub fn build_empirical<T: Scalar>(samples: &[Scenario<T>]) -> Result<ExplicitDistribution<T>> {
    ExplicitDistribution::empirical(samples)
}

/// Draws `n` scenarios from the stream `(seed, name, index)`, checking each
/// against the model.
pub fn draw_checked<T: Scalar, M: TwoStageModel<T> + ?Sized>(
    model: &M,
    oracle: &dyn ScenarioOracle<T>,
    n: usize,
    rng: &mut Rng,
) -> Result<Vec<Scenario<T>>> {
    (0..n)
        .map(|_| {
            let s = oracle.draw(rng);
            model.check(&s).map(|_| s)
        })
        .collect()
}

/// The distribution the sampled problem is built on: the support itself in
/// full-support mode, otherwise an empirical distribution of `count` draws.
pub fn sample_distribution<T: Scalar, M: TwoStageModel<T> + ?Sized>(
    model: &M,
    oracle: &dyn ScenarioOracle<T>,
    mode: SampleMode,
    count: usize,
    seed: u64,
    stream: &str,
) -> Result<ExplicitDistribution<T>> {
    if mode == SampleMode::FullSupport {
        let dist = oracle
            .support()
            .ok_or_else(|| Error::Unsupported("full-support mode needs an explicit distribution".into()))?;
        for (s, _) in dist.entries() {
            model.check(s)?;
        }
        return Ok(dist.clone());
    }
    let mut rng = rng::stream(seed, stream, 0);
    let samples = draw_checked(model, oracle, count, &mut rng)?;
    build_empirical(&samples)
}

/// Minimiser of `ĥ(Δ;·)` with its scenario solutions.
#[derive(Debug, Clone)]
pub struct SaaSolution<T> {
    pub delta: T,
    pub x: Vec<T>,
    /// `ĥ(Δ;x)`.
    pub value: T,
    pub first_stage: T,
    /// `Σ p̂_A r_A`.
    pub exceedance: T,
    /// `Σ p̂_A · recourse cost`.
    pub expected_recourse: T,
    /// Solutions for the scenarios of the distribution, in its order; empty
    /// and zero-probability scenarios get the empty solution.
    pub solutions: Vec<ScenarioSolution<T>>,
    pub iterations: usize,
}

impl<T: Scalar> SaaSolution<T> {
    /// First-stage cost plus expected recourse (only first stage in robust
    /// mode).
    pub fn cost(&self, counts_recourse: bool) -> T {
        if counts_recourse {
            self.first_stage + self.expected_recourse
        } else {
            self.first_stage
        }
    }
}

/// The aggregate LP for one distribution; re-solving at another `Δ` starts
/// from the previous basis.
pub struct AggregateLp<'a, T: Scalar, M: TwoStageModel<T> + ?Sized> {
    model: &'a M,
    dist: &'a ExplicitDistribution<T>,
    basis: Option<Basis>,
}

impl<'a, T: Scalar, M: TwoStageModel<T> + ?Sized> AggregateLp<'a, T, M> {
    pub fn new(model: &'a M, dist: &'a ExplicitDistribution<T>) -> Self {
        Self { model, dist, basis: None }
    }

    fn build(&self, delta: T) -> Result<(LpProblem<T>, Vec<Option<Block>>)> {
        let model = self.model;
        let mut lp = LpProblem::new(0);
        for &c in model.first_stage_costs() {
            lp.add_var(c, T::zero(), T::one());
        }
        let mut blocks = Vec::with_capacity(self.dist.len());
        for (s, p) in self.dist.entries() {
            model.check(s)?;
            if s.is_empty() || *p <= T::zero() {
                blocks.push(None);
                continue;
            }
            blocks.push(Some(model.add_block(&mut lp, FirstStageRef::Vars, s, *p, delta)?));
        }
        Ok((lp, blocks))
    }

    pub fn solve(&mut self, delta: T) -> Result<SaaSolution<T>> {
        if delta < T::zero() {
            return Err(Error::InvalidParameter("delta must be nonnegative".into()));
        }
        let (lp, blocks) = self.build(delta)?;
        let opts = SolveOptions { warm_start: self.basis.clone(), ..Default::default() };
        let sol = solve_lp(&lp, &opts)?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                return Err(Error::Infeasible(format!("{} sampled problem", self.model.mode().name())))
            }
            LpStatus::Unbounded => return Err(Error::Unbounded("sampled problem".into())),
        }
        self.basis = sol.basis.clone();
        let dim = self.model.dim();
        let x: Vec<T> = sol.primal[..dim].to_vec();
        let mut exceedance = T::zero();
        let mut expected_recourse = T::zero();
        let mut solutions = Vec::with_capacity(blocks.len());
        for ((s, p), b) in self.dist.entries().iter().zip(&blocks) {
            let ss = match b {
                Some(b) => self.model.read_block(&sol, b, s, *p, delta),
                None => ScenarioSolution::empty(dim, self.model.mode()),
            };
            exceedance += *p * ss.r;
            expected_recourse += *p * ss.recourse_cost;
            solutions.push(ss);
        }
        Ok(SaaSolution {
            delta,
            first_stage: dot(self.model.first_stage_costs(), &x),
            x,
            value: sol.objective,
            exceedance,
            expected_recourse,
            solutions,
            iterations: sol.iterations,
        })
    }
}

/// Minimises `ĥ(Δ;·)` over `[0,1]^m` for the given distribution.
pub fn solve_saa<T: Scalar, M: TwoStageModel<T> + ?Sized>(
    model: &M,
    dist: &ExplicitDistribution<T>,
    delta: T,
) -> Result<SaaSolution<T>> {
    AggregateLp::new(model, dist).solve(delta)
}

/// Draws the sample set prescribed by `cfg` and solves the sampled problem.
/// Returns the solution and the empirical distribution for reuse.
pub fn sa_alg<T: Scalar, M: TwoStageModel<T> + ?Sized>(
    model: &M,
    oracle: &dyn ScenarioOracle<T>,
    delta: T,
    cfg: &SaaConfig,
    seed: u64,
) -> Result<(SaaSolution<T>, ExplicitDistribution<T>)> {
    let size = theory_sample_size(cfg, model.dim(), model.lambda().as_f64(), model.mode());
    let dist = sample_distribution(model, oracle, cfg.sample_mode, size.count, seed, rng::SAA)?;
    let sol = solve_saa(model, &dist, delta)?;
    Ok((sol, dist))
}
