//! Per-scenario second-stage LPs and the subgradients built from their duals.
//!
//! Every model writes its scenario rows in `≥` form so that row duals are
//! nonnegative and enter subgradients with the sign they have in the dual.

mod cover;
mod facility;

use rayon::prelude::*;

pub use cover::{f_a, BudgetedCover, RobustCover};
pub use facility::{ell_a, BudgetedFacility, FlSecondStage};

use crate::error::Result;
use crate::model::{ExplicitDistribution, Scenario};
use crate::scalar::Scalar;
use crate::simplex::{LpProblem, LpSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Budget,
    Robust,
    Facility,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Budget => "budget",
            Mode::Robust => "robust",
            Mode::Facility => "facility",
        }
    }
}

/// Optimal row multipliers of a scenario LP, indexed by position in
/// `Scenario::active` (and by facility for the `[client][facility]` tables).
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioDuals<T> {
    Cover { alpha: Vec<T>, beta: Vec<T>, theta: T },
    Robust { alpha: Vec<T>, theta: T },
    Facility { alpha: Vec<T>, psi: Vec<T>, beta: Vec<Vec<T>>, gamma: Vec<Vec<T>>, theta: T, theta_f: T, theta_c: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSolution<T> {
    /// LP value including the `Δ·r` term.
    pub value: T,
    /// Second-stage cost of the recourse actions.
    pub recourse_cost: T,
    /// The part of the recourse cost charged against the budget.
    pub budget_cost: T,
    pub r: T,
    /// Cover: `y_S`. Facility: scenario openings `y_{A,i}`.
    pub y: Vec<T>,
    /// Cover: `z_S` (empty in robust mode). Facility: extra openings `v_{A,i}`.
    pub z: Vec<T>,
    /// Facility only: `x_{A,ij}` as `[client position][facility]`.
    pub assign: Vec<Vec<T>>,
    /// Facility only: `u_{A,ij}`.
    pub assign_extra: Vec<Vec<T>>,
    pub duals: Option<ScenarioDuals<T>>,
}

impl<T: Scalar> ScenarioSolution<T> {
    pub(crate) fn empty(dim: usize, mode: Mode) -> Self {
        let z = if mode == Mode::Robust { Vec::new() } else { vec![T::zero(); dim] };
        let duals = Some(match mode {
            Mode::Budget => ScenarioDuals::Cover { alpha: vec![], beta: vec![], theta: T::zero() },
            Mode::Robust => ScenarioDuals::Robust { alpha: vec![], theta: T::zero() },
            Mode::Facility => ScenarioDuals::Facility {
                alpha: vec![],
                psi: vec![],
                beta: vec![],
                gamma: vec![],
                theta: T::zero(),
                theta_f: T::zero(),
                theta_c: T::zero(),
            },
        });
        Self {
            value: T::zero(),
            recourse_cost: T::zero(),
            budget_cost: T::zero(),
            r: T::zero(),
            y: vec![T::zero(); dim],
            z,
            assign: Vec::new(),
            assign_extra: Vec::new(),
            duals,
        }
    }

    /// `a·self + (1−a)·other`, componentwise; duals are dropped.
    pub fn mix(&self, a: T, other: &Self) -> Self {
        let b = T::one() - a;
        let lin = |u: &[T], v: &[T]| u.iter().zip(v).map(|(&p, &q)| a * p + b * q).collect::<Vec<T>>();
        let lin2 = |u: &[Vec<T>], v: &[Vec<T>]| u.iter().zip(v).map(|(p, q)| lin(p, q)).collect::<Vec<_>>();
        Self {
            value: a * self.value + b * other.value,
            recourse_cost: a * self.recourse_cost + b * other.recourse_cost,
            budget_cost: a * self.budget_cost + b * other.budget_cost,
            r: a * self.r + b * other.r,
            y: lin(&self.y, &other.y),
            z: lin(&self.z, &other.z),
            assign: lin2(&self.assign, &other.assign),
            assign_extra: lin2(&self.assign_extra, &other.assign_extra),
            duals: None,
        }
    }
}

/// Where a block reads the first-stage decisions from.
#[derive(Debug, Clone, Copy)]
pub enum FirstStageRef<'a, T> {
    /// Fixed values, moved to the right-hand side.
    Fixed(&'a [T]),
    /// LP variables `0..dim`.
    Vars,
}

/// Location of one scenario's variables and rows inside an LP.
#[derive(Debug, Clone)]
pub struct Block {
    pub(crate) var0: usize,
    pub(crate) row0: usize,
    /// Actions with variables in this block (cover: sets touching the
    /// scenario; facility: all facilities).
    pub(crate) cols: Vec<usize>,
    pub(crate) budget_rows: [Option<usize>; 3],
    /// Column of `r_A`.
    pub(crate) r: usize,
}

/// A two-stage model whose scenario problems are LPs parameterised by the
/// Lagrange multiplier `Δ` of the exceedance constraint.
pub trait TwoStageModel<T: Scalar>: Sync {
    fn mode(&self) -> Mode;
    fn dim(&self) -> usize;
    fn first_stage_costs(&self) -> &[T];
    fn lambda(&self) -> T;
    fn scenario_budget(&self, s: &Scenario<T>) -> T;
    fn check(&self, s: &Scenario<T>) -> Result<()>;

    /// Appends the scenario's variables and rows to `lp`, with objective
    /// terms scaled by `weight`.
    fn add_block(&self, lp: &mut LpProblem<T>, x: FirstStageRef<'_, T>, s: &Scenario<T>, weight: T, delta: T)
        -> Result<Block>;

    /// Reads the scenario solution of a block back out of an LP solution.
    fn read_block(&self, sol: &LpSolution<T>, block: &Block, s: &Scenario<T>, weight: T, delta: T)
        -> ScenarioSolution<T>;

    fn solve_scenario(&self, delta: T, x: &[T], s: &Scenario<T>, need_duals: bool) -> Result<ScenarioSolution<T>>;

    /// Subgradient of `x ↦ c·x + Σ weight·g_A(Δ;x)` from scenario duals.
    fn subgradient(&self, items: &[(T, &Scenario<T>, &ScenarioSolution<T>)]) -> Result<Vec<T>>;

    /// Whether the objective counts expected recourse cost.
    fn counts_recourse(&self) -> bool {
        self.mode() != Mode::Robust
    }

    /// Lipschitz bound on `h(Δ;·)`.
    fn lipschitz(&self, delta: T) -> T {
        let n = crate::scalar::norm2(self.first_stage_costs());
        let scale = if self.mode() == Mode::Robust { T::one() } else { self.lambda() };
        scale * n + delta
    }
}

/// `h(Δ;x)` with its per-scenario parts, over an explicit distribution.
#[derive(Debug, Clone)]
pub struct Evaluation<T> {
    pub value: T,
    pub first_stage: T,
    /// `Σ p_A r_A`.
    pub exceedance: T,
    /// `Σ p_A · recourse cost`.
    pub expected_recourse: T,
    pub solutions: Vec<ScenarioSolution<T>>,
}

pub fn evaluate<T: Scalar, M: TwoStageModel<T> + ?Sized>(
    model: &M,
    delta: T,
    x: &[T],
    dist: &ExplicitDistribution<T>,
    need_duals: bool,
) -> Result<Evaluation<T>> {
    let solutions = dist
        .entries()
        .par_iter()
        .map(|(s, _)| model.solve_scenario(delta, x, s, need_duals))
        .collect::<Result<Vec<_>>>()?;
    let first_stage = crate::scalar::dot(model.first_stage_costs(), x);
    let mut value = first_stage;
    let mut exceedance = T::zero();
    let mut expected_recourse = T::zero();
    for ((_, p), sol) in dist.entries().iter().zip(&solutions) {
        value += *p * sol.value;
        exceedance += *p * sol.r;
        expected_recourse += *p * sol.recourse_cost;
    }
    Ok(Evaluation { value, first_stage, exceedance, expected_recourse, solutions })
}

/// Subgradient of `h(Δ;·)` at `x` under an explicit distribution.
pub fn subgradient_at<T: Scalar, M: TwoStageModel<T> + ?Sized>(
    model: &M,
    delta: T,
    x: &[T],
    dist: &ExplicitDistribution<T>,
) -> Result<Vec<T>> {
    let ev = evaluate(model, delta, x, dist, true)?;
    let items: Vec<_> = dist.entries().iter().zip(&ev.solutions).map(|((s, p), sol)| (*p, s, sol)).collect();
    model.subgradient(&items)
}

pub(crate) fn solve_block<T: Scalar, M: TwoStageModel<T> + ?Sized>(
    model: &M,
    delta: T,
    x: &[T],
    s: &Scenario<T>,
    tiebreak: Option<&dyn Fn(&LpProblem<T>, &Block) -> Vec<T>>,
) -> Result<ScenarioSolution<T>> {
    use crate::error::Error;
    use crate::simplex::{solve_lp, LpStatus, SolveOptions};
    model.check(s)?;
    if s.is_empty() {
        return Ok(ScenarioSolution::empty(model.dim(), model.mode()));
    }
    let mut lp = LpProblem::new(0);
    let block = model.add_block(&mut lp, FirstStageRef::Fixed(x), s, T::one(), delta)?;
    let opts = SolveOptions { dual_tiebreak: tiebreak.map(|f| f(&lp, &block)), ..Default::default() };
    let sol = solve_lp(&lp, &opts)?;
    match sol.status {
        LpStatus::Optimal => Ok(model.read_block(&sol, &block, s, T::one(), delta)),
        LpStatus::Infeasible => Err(Error::Infeasible(format!(
            "{} scenario LP with {} active demand(s)",
            model.mode().name(),
            s.active.len()
        ))),
        LpStatus::Unbounded => Err(Error::Unbounded("scenario LP".into())),
    }
}
