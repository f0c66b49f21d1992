//! Bounded-variable revised simplex with an explicit basis inverse.
//!
//! Columns are laid out as structural variables, then one slack per
//! inequality row, then (cold starts only) one artificial per row that needs
//! one. Nonbasic variables sit at a finite bound, or at zero when free.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::problem::{Basis, LpProblem, LpSolution, LpStatus, Relation};

const REFACTOR_EVERY: usize = 64;
const DEGENERATE_SWITCH: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
}

pub(crate) struct Engine<T> {
    m: usize,
    n: usize,
    n_slack: usize,
    cols: Vec<Vec<(usize, T)>>,
    b: Vec<T>,
    lo: Vec<T>,
    hi: Vec<T>,
    cost: Vec<T>,
    x: Vec<T>,
    basic: Vec<usize>,
    // position in `basic`, or usize::MAX when nonbasic
    pos: Vec<usize>,
    at_upper: Vec<bool>,
    binv: Vec<T>,
    iterations: usize,
    max_iterations: usize,
    since_refactor: usize,
}

impl<T: Scalar> Engine<T> {
    fn build(p: &LpProblem<T>, max_iterations: Option<usize>) -> Self {
        let n = p.n_vars();
        let m = p.n_rows();
        let mut cols: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        for (i, row) in p.rows.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                cols[j].push((i, a));
            }
        }
        let mut lo = p.lower.clone();
        let mut hi = p.upper.clone();
        let mut n_slack = 0;
        for (i, row) in p.rows.iter().enumerate() {
            let sign = match row.rel {
                Relation::Le => T::one(),
                Relation::Ge => -T::one(),
                Relation::Eq => continue,
            };
            cols.push(vec![(i, sign)]);
            lo.push(T::zero());
            hi.push(T::infinity());
            n_slack += 1;
        }
        let total = cols.len();
        let max_iterations = max_iterations.unwrap_or(1000 + 50 * (m + total));
        Self {
            m,
            n,
            n_slack,
            cols,
            b: p.rows.iter().map(|r| r.rhs).collect(),
            lo,
            hi,
            cost: vec![T::zero(); total],
            x: vec![T::zero(); total],
            basic: Vec::with_capacity(m),
            pos: vec![usize::MAX; total],
            at_upper: vec![false; total],
            binv: vec![T::zero(); m * m],
            iterations: 0,
            max_iterations,
            since_refactor: 0,
        }
    }

    fn nonbasic_value(&self, j: usize) -> T {
        let (l, u) = (self.lo[j], self.hi[j]);
        if self.at_upper[j] && u.is_finite() {
            u
        } else if l.is_finite() {
            l
        } else if u.is_finite() {
            u
        } else {
            T::zero()
        }
    }

    fn slack_of_row(&self, p: &LpProblem<T>) -> Vec<Option<usize>> {
        let mut k = self.n;
        p.rows
            .iter()
            .map(|r| {
                if r.rel == Relation::Eq {
                    None
                } else {
                    k += 1;
                    Some(k - 1)
                }
            })
            .collect()
    }

    /// Slack basis where the sign allows it, artificial otherwise.
    fn cold_start(&mut self, p: &LpProblem<T>) {
        for j in 0..self.cols.len() {
            self.at_upper[j] = !self.lo[j].is_finite() && self.hi[j].is_finite();
            self.x[j] = self.nonbasic_value(j);
        }
        let mut resid = self.b.clone();
        for j in 0..self.n {
            let v = self.x[j];
            if v != T::zero() {
                for &(i, a) in &self.cols[j] {
                    resid[i] -= a * v;
                }
            }
        }
        let slack = self.slack_of_row(p);
        self.basic.clear();
        for i in 0..self.m {
            let r = resid[i];
            let chosen = match slack[i] {
                Some(s) => {
                    let sigma = self.cols[s][0].1;
                    if sigma * r >= T::zero() {
                        self.x[s] = sigma * r;
                        Some(s)
                    } else {
                        None
                    }
                }
                None => None,
            };
            let j = match chosen {
                Some(s) => s,
                None => {
                    let tau = if r >= T::zero() { T::one() } else { -T::one() };
                    self.cols.push(vec![(i, tau)]);
                    self.lo.push(T::zero());
                    self.hi.push(T::infinity());
                    self.cost.push(T::zero());
                    self.x.push(r.abs());
                    self.pos.push(usize::MAX);
                    self.at_upper.push(false);
                    self.cols.len() - 1
                }
            };
            self.pos[j] = i;
            self.basic.push(j);
        }
        for v in self.binv.iter_mut() {
            *v = T::zero();
        }
        for i in 0..self.m {
            let j = self.basic[i];
            // the column is ±e_i, its own inverse
            self.binv[i * self.m + i] = self.cols[j][0].1;
        }
        self.since_refactor = 0;
    }

    fn try_warm_start(&mut self, basis: &Basis) -> bool {
        let total = self.cols.len();
        if basis.n_vars != self.n
            || basis.n_rows != self.m
            || basis.basic.len() != self.m
            || basis.at_upper.len() != total
            || basis.basic.iter().any(|&j| j >= total)
        {
            return false;
        }
        self.at_upper.clone_from(&basis.at_upper);
        self.basic.clone_from(&basis.basic);
        self.pos.iter_mut().for_each(|p| *p = usize::MAX);
        for (k, &j) in self.basic.iter().enumerate() {
            if self.pos[j] != usize::MAX {
                return false;
            }
            self.pos[j] = k;
        }
        for j in 0..total {
            if self.pos[j] == usize::MAX {
                self.x[j] = self.nonbasic_value(j);
            }
        }
        if self.refactor().is_err() {
            return false;
        }
        self.primal_infeasibility() <= self.feas_tol()
    }

    fn feas_tol(&self) -> T {
        let bmax = self.b.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
        T::FEAS_TOL * (T::one() + bmax)
    }

    fn primal_infeasibility(&self) -> T {
        let mut worst = T::zero();
        for &j in &self.basic {
            let v = self.x[j];
            worst = worst.max(self.lo[j] - v).max(v - self.hi[j]);
        }
        worst
    }

    /// Rebuilds `binv` by Gauss-Jordan with partial pivoting and recomputes
    /// basic values from the nonbasic ones.
    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut a = vec![T::zero(); m * m];
        for (k, &j) in self.basic.iter().enumerate() {
            for &(i, v) in &self.cols[j] {
                a[i * m + k] = v;
            }
        }
        let mut inv = vec![T::zero(); m * m];
        for i in 0..m {
            inv[i * m + i] = T::one();
        }
        for c in 0..m {
            let mut piv = c;
            let mut best = a[c * m + c].abs();
            for r in c + 1..m {
                let v = a[r * m + c].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best <= T::PIVOT_TOL {
                return Err(Error::SingularBasis);
            }
            if piv != c {
                for k in 0..m {
                    a.swap(c * m + k, piv * m + k);
                    inv.swap(c * m + k, piv * m + k);
                }
            }
            let d = a[c * m + c];
            for k in 0..m {
                a[c * m + k] /= d;
                inv[c * m + k] /= d;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = a[r * m + c];
                if f == T::zero() {
                    continue;
                }
                for k in 0..m {
                    let (ac, ic) = (a[c * m + k], inv[c * m + k]);
                    a[r * m + k] -= f * ac;
                    inv[r * m + k] -= f * ic;
                }
            }
        }
        // a is now the identity; inv maps original rows to basis positions
        self.binv = inv;
        self.recompute_basics();
        self.since_refactor = 0;
        Ok(())
    }

    fn recompute_basics(&mut self) {
        let m = self.m;
        let mut resid = self.b.clone();
        for j in 0..self.cols.len() {
            if self.pos[j] != usize::MAX {
                continue;
            }
            let v = self.x[j];
            if v != T::zero() {
                for &(i, a) in &self.cols[j] {
                    resid[i] -= a * v;
                }
            }
        }
        for k in 0..m {
            let row = &self.binv[k * m..(k + 1) * m];
            let v: T = row.iter().zip(&resid).map(|(&p, &q)| p * q).sum();
            let j = self.basic[k];
            self.x[j] = v;
        }
    }

    fn duals(&self) -> Vec<T> {
        let m = self.m;
        let mut y = vec![T::zero(); m];
        for k in 0..m {
            let c = self.cost[self.basic[k]];
            if c == T::zero() {
                continue;
            }
            let row = &self.binv[k * m..(k + 1) * m];
            for i in 0..m {
                y[i] += c * row[i];
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, y: &[T]) -> T {
        let mut d = self.cost[j];
        for &(i, a) in &self.cols[j] {
            d -= y[i] * a;
        }
        d
    }

    /// Direction (+1 increase, −1 decrease) in which `j` improves, if any.
    fn improving_direction(&self, j: usize, d: T) -> Option<T> {
        let (l, u) = (self.lo[j], self.hi[j]);
        if l == u {
            return None;
        }
        let v = self.x[j];
        let can_up = !u.is_finite() || v < u;
        let can_down = !l.is_finite() || v > l;
        if d < -T::OPT_TOL && can_up {
            Some(T::one())
        } else if d > T::OPT_TOL && can_down {
            Some(-T::one())
        } else {
            None
        }
    }

    fn column(&self, j: usize) -> Vec<T> {
        let m = self.m;
        let mut alpha = vec![T::zero(); m];
        for &(i, a) in &self.cols[j] {
            for k in 0..m {
                alpha[k] += self.binv[k * m + i] * a;
            }
        }
        alpha
    }

    fn pivot(&mut self, r: usize, alpha: &[T]) {
        let m = self.m;
        let p = alpha[r];
        for k in 0..m {
            self.binv[r * m + k] /= p;
        }
        for i in 0..m {
            if i == r || alpha[i] == T::zero() {
                continue;
            }
            let f = alpha[i];
            for k in 0..m {
                let v = self.binv[r * m + k];
                self.binv[i * m + k] -= f * v;
            }
        }
    }

    fn run(&mut self) -> Result<Outcome> {
        let mut bland = false;
        let mut degenerate = 0usize;
        loop {
            if self.iterations >= self.max_iterations {
                return Err(Error::IterationLimit(self.max_iterations));
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let y = self.duals();
            let mut entering: Option<(usize, T)> = None;
            let mut best = T::zero();
            for j in 0..self.cols.len() {
                if self.pos[j] != usize::MAX {
                    continue;
                }
                let d = self.reduced_cost(j, &y);
                if let Some(dir) = self.improving_direction(j, d) {
                    if bland {
                        entering = Some((j, dir));
                        break;
                    }
                    if d.abs() > best {
                        best = d.abs();
                        entering = Some((j, dir));
                    }
                }
            }
            let Some((q, dir)) = entering else {
                return Ok(Outcome::Optimal);
            };
            let alpha = self.column(q);

            let flip = if self.lo[q].is_finite() && self.hi[q].is_finite() {
                self.hi[q] - self.lo[q]
            } else {
                T::infinity()
            };
            let mut t_min = T::infinity();
            for k in 0..self.m {
                let rate = -dir * alpha[k];
                let j = self.basic[k];
                let t = if rate < -T::PIVOT_TOL && self.lo[j].is_finite() {
                    (self.x[j] - self.lo[j]) / (-rate)
                } else if rate > T::PIVOT_TOL && self.hi[j].is_finite() {
                    (self.hi[j] - self.x[j]) / rate
                } else {
                    continue;
                };
                t_min = t_min.min(t.max(T::zero()));
            }
            if flip <= t_min {
                if !flip.is_finite() {
                    return Ok(Outcome::Unbounded);
                }
                for k in 0..self.m {
                    let j = self.basic[k];
                    self.x[j] -= dir * flip * alpha[k];
                }
                self.at_upper[q] = dir > T::zero();
                self.x[q] = if self.at_upper[q] { self.hi[q] } else { self.lo[q] };
                self.iterations += 1;
                degenerate = 0;
                continue;
            }
            if !t_min.is_finite() {
                return Ok(Outcome::Unbounded);
            }
            // Among near-tied blocking rows take the largest pivot, or the
            // lowest column index once anti-cycling is on.
            let tie = T::lit(1e-12) * (T::one() + t_min);
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_key = T::zero();
            for k in 0..self.m {
                let rate = -dir * alpha[k];
                let j = self.basic[k];
                let (t, up) = if rate < -T::PIVOT_TOL && self.lo[j].is_finite() {
                    ((self.x[j] - self.lo[j]) / (-rate), false)
                } else if rate > T::PIVOT_TOL && self.hi[j].is_finite() {
                    ((self.hi[j] - self.x[j]) / rate, true)
                } else {
                    continue;
                };
                if t.max(T::zero()) > t_min + tie {
                    continue;
                }
                let better = match leave {
                    None => true,
                    Some((kk, _)) => {
                        if bland {
                            j < self.basic[kk]
                        } else {
                            alpha[k].abs() > leave_key
                        }
                    }
                };
                if better {
                    leave = Some((k, up));
                    leave_key = alpha[k].abs();
                }
            }
            let (r, up) = leave.expect("blocking row exists when t_min is finite");
            let t = t_min;
            for k in 0..self.m {
                let j = self.basic[k];
                self.x[j] -= dir * t * alpha[k];
            }
            self.x[q] += dir * t;
            let out = self.basic[r];
            self.at_upper[out] = up;
            self.x[out] = if up { self.hi[out] } else { self.lo[out] };
            self.pos[out] = usize::MAX;
            self.basic[r] = q;
            self.pos[q] = r;
            self.pivot(r, &alpha);
            self.iterations += 1;
            self.since_refactor += 1;
            if t <= T::PIVOT_TOL {
                degenerate += 1;
                if degenerate >= DEGENERATE_SWITCH {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
        }
    }

    /// Runs to optimality, then refactors and re-prices to confirm.
    fn run_confirmed(&mut self) -> Result<Outcome> {
        for _ in 0..4 {
            match self.run()? {
                Outcome::Unbounded => return Ok(Outcome::Unbounded),
                Outcome::Optimal => {}
            }
            self.refactor()?;
            let y = self.duals();
            let clean = (0..self.cols.len())
                .filter(|&j| self.pos[j] == usize::MAX)
                .all(|j| self.improving_direction(j, self.reduced_cost(j, &y)).is_none());
            if clean {
                return Ok(Outcome::Optimal);
            }
        }
        Ok(Outcome::Optimal)
    }

    fn artificial_range(&self) -> std::ops::Range<usize> {
        self.n + self.n_slack..self.cols.len()
    }

    /// Phase I. Returns false when the problem is infeasible.
    fn phase_one(&mut self) -> Result<bool> {
        let arts = self.artificial_range();
        if arts.is_empty() {
            return Ok(true);
        }
        for j in 0..self.cost.len() {
            self.cost[j] = if arts.contains(&j) { T::one() } else { T::zero() };
        }
        self.run_confirmed()?;
        let infeas: T = arts.clone().map(|j| self.x[j]).sum();
        if infeas > self.feas_tol() {
            return Ok(false);
        }
        // Pivot remaining basic artificials out where a structural or slack
        // column can replace them.
        for r in 0..self.m {
            let j = self.basic[r];
            if !arts.contains(&j) {
                continue;
            }
            let m = self.m;
            let mut best: Option<(usize, T)> = None;
            for q in 0..arts.start {
                if self.pos[q] != usize::MAX {
                    continue;
                }
                let v: T = self.cols[q].iter().map(|&(i, a)| self.binv[r * m + i] * a).sum();
                if v.abs() > T::lit(1e-7) && best.map_or(true, |(_, b)| v.abs() > b) {
                    best = Some((q, v.abs()));
                }
            }
            if let Some((q, _)) = best {
                let alpha = self.column(q);
                self.pos[j] = usize::MAX;
                self.at_upper[j] = false;
                self.x[j] = T::zero();
                self.basic[r] = q;
                self.pos[q] = r;
                self.pivot(r, &alpha);
                self.since_refactor += 1;
            }
        }
        for j in arts {
            self.hi[j] = T::zero();
            if self.pos[j] == usize::MAX {
                self.x[j] = T::zero();
                self.at_upper[j] = false;
            }
        }
        self.refactor()?;
        Ok(true)
    }

    fn snapshot(&self) -> Option<Basis> {
        let limit = self.n + self.n_slack;
        if self.basic.iter().any(|&j| j >= limit) {
            return None;
        }
        Some(Basis {
            basic: self.basic.clone(),
            at_upper: self.at_upper[..limit].to_vec(),
            n_vars: self.n,
            n_rows: self.m,
        })
    }
}

pub(crate) fn solve_primal<T: Scalar>(
    p: &LpProblem<T>,
    warm: Option<&Basis>,
    max_iterations: Option<usize>,
) -> Result<LpSolution<T>> {
    let mut eng = Engine::build(p, max_iterations);
    let warmed = match warm {
        Some(b) => eng.try_warm_start(b),
        None => false,
    };
    if !warmed {
        eng = Engine::build(p, max_iterations);
        eng.cold_start(p);
        if !eng.phase_one()? {
            return Ok(finish(p, &eng, LpStatus::Infeasible));
        }
    }
    for j in 0..eng.cost.len() {
        eng.cost[j] = if j < eng.n { p.objective[j] } else { T::zero() };
    }
    let status = match eng.run_confirmed()? {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Unbounded => LpStatus::Unbounded,
    };
    Ok(finish(p, &eng, status))
}

fn finish<T: Scalar>(p: &LpProblem<T>, eng: &Engine<T>, status: LpStatus) -> LpSolution<T> {
    let n = eng.n;
    let mut primal: Vec<T> = eng.x[..n].to_vec();
    for j in 0..n {
        primal[j] = primal[j].max(p.lower[j]).min(p.upper[j]);
    }
    let objective = p.objective_value(&primal);
    let (duals, reduced_costs) = if status == LpStatus::Optimal {
        let y = eng.duals();
        let d = (0..n).map(|j| eng.reduced_cost(j, &y)).collect();
        (y, d)
    } else {
        (vec![T::zero(); eng.m], vec![T::zero(); n])
    };
    LpSolution {
        status,
        primal,
        duals,
        reduced_costs,
        objective,
        iterations: eng.iterations,
        basis: if status == LpStatus::Optimal { eng.snapshot() } else { None },
    }
}
