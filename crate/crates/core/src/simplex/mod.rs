//! Dense revised simplex producing primal and dual optima.
//!
//! Pricing is Dantzig (largest reduced cost, lowest index on ties) and falls
//! back to Bland's rule after a run of degenerate pivots, so identical inputs
//! always follow the same pivot sequence.

mod problem;
mod solver;

use std::sync::atomic::{AtomicU64, Ordering};

pub use problem::{Basis, LpProblem, LpSolution, LpStatus, Relation, Residuals, Row, SolveOptions};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

static MAX_GAP_BITS: AtomicU64 = AtomicU64::new(0);

/// Largest relative strong-duality residual `|primal − dual| / (1 + |obj|)`
/// seen by any optimal solve in this process.
pub fn max_duality_residual() -> f64 {
    f64::from_bits(MAX_GAP_BITS.load(Ordering::Relaxed))
}

fn record_gap(g: f64) {
    // nonnegative f64 bit patterns order like the values themselves
    MAX_GAP_BITS.fetch_max(g.to_bits(), Ordering::Relaxed);
}

pub fn solve_lp<T: Scalar>(p: &LpProblem<T>, opts: &SolveOptions<T>) -> Result<LpSolution<T>> {
    p.validate()?;
    if let Some(sec) = &opts.dual_tiebreak {
        if sec.len() != p.n_rows() {
            return Err(Error::InvalidParameter(format!(
                "dual tiebreak has {} entries for {} rows",
                sec.len(),
                p.n_rows()
            )));
        }
    }
    let mut sol = solver::solve_primal(p, opts.warm_start.as_ref(), opts.max_iterations)?;
    if sol.status != LpStatus::Optimal {
        return Ok(sol);
    }
    if let Some(sec) = &opts.dual_tiebreak {
        match tiebreak_duals(p, &sol, sec, opts.max_iterations) {
            Ok(Some((y, d))) => {
                sol.duals = y;
                sol.reduced_costs = d;
            }
            Ok(None) => log::debug!("dual tiebreak face LP not solved to optimality, keeping basis duals"),
            Err(e) => log::debug!("dual tiebreak failed ({e}), keeping basis duals"),
        }
    }
    let gap = (sol.objective - sol.dual_objective(p)).abs().as_f64() / (1.0 + sol.objective.abs().as_f64());
    record_gap(gap);
    Ok(sol)
}

pub fn solve<T: Scalar>(p: &LpProblem<T>) -> Result<LpSolution<T>> {
    solve_lp(p, &SolveOptions::default())
}

/// Solves the dual restricted to its optimal face, minimising `sec · y`.
fn tiebreak_duals<T: Scalar>(
    p: &LpProblem<T>,
    primal: &LpSolution<T>,
    sec: &[T],
    max_iterations: Option<usize>,
) -> Result<Option<(Vec<T>, Vec<T>)>> {
    let m = p.n_rows();
    let n = p.n_vars();
    let inf = T::infinity();
    let mut d = LpProblem::new(0);
    for (i, row) in p.rows.iter().enumerate() {
        let (lo, hi) = match row.rel {
            Relation::Ge => (T::zero(), inf),
            Relation::Le => (-inf, T::zero()),
            Relation::Eq => (-inf, inf),
        };
        d.add_var(sec[i], lo, hi);
    }
    let mut mu: Vec<(Option<usize>, Option<usize>)> = Vec::with_capacity(n);
    for j in 0..n {
        let plus = p.lower[j].is_finite().then(|| d.add_var(T::zero(), T::zero(), inf));
        let minus = p.upper[j].is_finite().then(|| d.add_var(T::zero(), T::zero(), inf));
        mu.push((plus, minus));
    }
    let mut col_rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
    for (i, row) in p.rows.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            col_rows[j].push((i, a));
        }
    }
    for j in 0..n {
        let mut coeffs = col_rows[j].clone();
        if let Some(k) = mu[j].0 {
            coeffs.push((k, T::one()));
        }
        if let Some(k) = mu[j].1 {
            coeffs.push((k, -T::one()));
        }
        d.add_row(coeffs, Relation::Eq, p.objective[j]);
    }
    let opt = primal.objective;
    let mut face: Vec<(usize, T)> = (0..m).map(|i| (i, p.rows[i].rhs)).collect();
    for j in 0..n {
        if let Some(k) = mu[j].0 {
            face.push((k, p.lower[j]));
        }
        if let Some(k) = mu[j].1 {
            face.push((k, -p.upper[j]));
        }
    }
    let slack = T::lit(1e-9) * (T::one() + opt.abs());
    d.add_row(face, Relation::Ge, opt - slack);
    let ds = solver::solve_primal(&d, None, max_iterations)?;
    if ds.status != LpStatus::Optimal {
        return Ok(None);
    }
    let y = ds.primal[..m].to_vec();
    let rc = (0..n)
        .map(|j| {
            let plus = mu[j].0.map_or(T::zero(), |k| ds.primal[k]);
            let minus = mu[j].1.map_or(T::zero(), |k| ds.primal[k]);
            plus - minus
        })
        .collect();
    Ok(Some((y, rc)))
}
