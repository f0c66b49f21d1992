use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Row<T> {
    pub coeffs: Vec<(usize, T)>,
    pub rel: Relation,
    pub rhs: T,
}

/// `min c·x` subject to linear rows and per-variable bounds.
///
/// Bounds default to `[0, +inf)`. Infinite lower bounds are allowed.
#[derive(Debug, Clone)]
pub struct LpProblem<T> {
    pub objective: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub rows: Vec<Row<T>>,
}

impl<T: Scalar> Default for LpProblem<T> {
    fn default() -> Self {
        Self::new(0)
    }
}

impl<T: Scalar> LpProblem<T> {
    pub fn new(n_vars: usize) -> Self {
        Self {
            objective: vec![T::zero(); n_vars],
            lower: vec![T::zero(); n_vars],
            upper: vec![T::infinity(); n_vars],
            rows: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_var(&mut self, cost: T, lower: T, upper: T) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    /// Adds a row; zero coefficients are dropped and repeated indices merged.
    pub fn add_row(&mut self, coeffs: impl IntoIterator<Item = (usize, T)>, rel: Relation, rhs: T) -> usize {
        let mut merged: Vec<(usize, T)> = Vec::new();
        for (j, a) in coeffs {
            if a == T::zero() {
                continue;
            }
            match merged.iter_mut().find(|(k, _)| *k == j) {
                Some((_, v)) => *v += a,
                None => merged.push((j, a)),
            }
        }
        merged.retain(|&(_, a)| a != T::zero());
        self.rows.push(Row { coeffs: merged, rel, rhs });
        self.rows.len() - 1
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::InvalidParameter("bound vectors differ in length from objective".into()));
        }
        for j in 0..n {
            if !self.objective[j].is_finite() {
                return Err(Error::InvalidParameter(format!("objective coefficient {j} not finite")));
            }
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return Err(Error::InvalidParameter(format!("bounds of variable {j} are inconsistent")));
            }
            if self.lower[j] == T::infinity() || self.upper[j] == T::neg_infinity() {
                return Err(Error::InvalidParameter(format!("bounds of variable {j} are not attainable")));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(Error::InvalidParameter(format!("rhs of row {i} not finite")));
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(Error::InvalidParameter(format!("row {i} references variable {j} >= {n}")));
                }
                if !a.is_finite() {
                    return Err(Error::InvalidParameter(format!("row {i} has a non-finite coefficient")));
                }
            }
        }
        Ok(())
    }

    pub fn row_activity(&self, i: usize, x: &[T]) -> T {
        self.rows[i].coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        crate::scalar::dot(&self.objective, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Basis snapshot usable for warm starts on a problem of the same shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub(crate) basic: Vec<usize>,
    pub(crate) at_upper: Vec<bool>,
    pub(crate) n_vars: usize,
    pub(crate) n_rows: usize,
}

#[derive(Debug, Clone)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    pub primal: Vec<T>,
    /// One multiplier per row, `∂objective/∂rhs`: nonnegative on `≥` rows,
    /// nonpositive on `≤` rows of a minimisation.
    pub duals: Vec<T>,
    /// `c_j − Σ_i duals_i a_ij`, the multipliers of the variable bounds.
    pub reduced_costs: Vec<T>,
    pub objective: T,
    pub iterations: usize,
    pub basis: Option<Basis>,
}

/// Optimality certificate residuals of a solution.
#[derive(Debug, Clone, Copy)]
pub struct Residuals<T> {
    pub primal: T,
    pub dual: T,
    pub gap: T,
    pub complementarity: T,
}

impl<T: Scalar> LpSolution<T> {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// `b·y + Σ_j (max(d_j,0) l_j + min(d_j,0) u_j)`.
    pub fn dual_objective(&self, p: &LpProblem<T>) -> T {
        let mut v: T = p.rows.iter().zip(&self.duals).map(|(r, &y)| r.rhs * y).sum();
        for (j, &d) in self.reduced_costs.iter().enumerate() {
            if d > T::zero() && p.lower[j].is_finite() {
                v += d * p.lower[j];
            } else if d < T::zero() && p.upper[j].is_finite() {
                v += d * p.upper[j];
            }
        }
        v
    }

    pub fn residuals(&self, p: &LpProblem<T>) -> Residuals<T> {
        let zero = T::zero();
        let mut primal = zero;
        let mut dual = zero;
        let mut cs = zero;
        for (i, row) in p.rows.iter().enumerate() {
            let act = p.row_activity(i, &self.primal);
            let slack = act - row.rhs;
            let viol = match row.rel {
                Relation::Le => slack.max(zero),
                Relation::Ge => (-slack).max(zero),
                Relation::Eq => slack.abs(),
            };
            primal = primal.max(viol);
            let y = self.duals[i];
            let dviol = match row.rel {
                Relation::Le => y.max(zero),
                Relation::Ge => (-y).max(zero),
                Relation::Eq => zero,
            };
            dual = dual.max(dviol);
            if row.rel != Relation::Eq {
                cs = cs.max((y * slack).abs());
            }
        }
        for j in 0..p.n_vars() {
            let x = self.primal[j];
            primal = primal.max((p.lower[j] - x).max(zero)).max((x - p.upper[j]).max(zero));
            let d = self.reduced_costs[j];
            // d > 0 needs a finite lower bound it can push against, d < 0 an upper one.
            if d > zero {
                if p.lower[j].is_finite() {
                    cs = cs.max((d * (x - p.lower[j])).abs());
                } else {
                    dual = dual.max(d);
                }
            } else if d < zero {
                if p.upper[j].is_finite() {
                    cs = cs.max((d * (p.upper[j] - x)).abs());
                } else {
                    dual = dual.max(-d);
                }
            }
        }
        let gap = (self.objective - self.dual_objective(p)).abs();
        Residuals { primal, dual, gap, complementarity: cs }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions<T> {
    /// Secondary objective over row duals: among optimal duals, return one
    /// minimising `Σ_i tiebreak_i · dual_i`.
    pub dual_tiebreak: Option<Vec<T>>,
    pub max_iterations: Option<usize>,
    pub warm_start: Option<Basis>,
}

impl<T> Default for SolveOptions<T> {
    fn default() -> Self {
        Self { dual_tiebreak: None, max_iterations: None, warm_start: None }
    }
}
