use crate::error::{Error, Result};
use crate::model::{check_scenario, FacilityLocationInstance, FlBudgets, Scenario};
use crate::scalar::Scalar;
use crate::simplex::{solve, LpProblem, LpSolution, LpStatus, Relation};

use super::{solve_block, Block, FirstStageRef, Mode, ScenarioDuals, ScenarioSolution, TwoStageModel};

/// Budgeted facility location with optional facility and assignment budgets.
/// A scenario's own budget overrides `budgets.total`.
#[derive(Debug, Clone, Copy)]
pub struct BudgetedFacility<'a, T> {
    pub inst: &'a FacilityLocationInstance<T>,
    pub budgets: FlBudgets<T>,
}

impl<'a, T: Scalar> BudgetedFacility<'a, T> {
    pub fn new(inst: &'a FacilityLocationInstance<T>) -> Self {
        Self { inst, budgets: inst.budgets }
    }

    fn layout(&self, na: usize) -> (usize, usize) {
        let nf = self.inst.n_facilities();
        (nf, na * nf)
    }
}

impl<T: Scalar> TwoStageModel<T> for BudgetedFacility<'_, T> {
    fn mode(&self) -> Mode {
        Mode::Facility
    }
    fn dim(&self) -> usize {
        self.inst.n_facilities()
    }
    fn first_stage_costs(&self) -> &[T] {
        &self.inst.f1
    }
    fn lambda(&self) -> T {
        self.inst.lambda
    }
    fn scenario_budget(&self, s: &Scenario<T>) -> T {
        s.budget_or(self.budgets.total)
    }
    fn check(&self, s: &Scenario<T>) -> Result<()> {
        check_scenario(self.inst, s)
    }

    fn add_block(&self, lp: &mut LpProblem<T>, x: FirstStageRef<'_, T>, s: &Scenario<T>, weight: T, delta: T) -> Result<Block> {
        let inst = self.inst;
        let na = s.active.len();
        let (nf, nx) = self.layout(na);
        let inf = T::infinity();
        let var0 = lp.n_vars();
        for &j in &s.active {
            for i in 0..nf {
                lp.add_var(weight * inst.cost[i][j], T::zero(), inf);
            }
        }
        for &j in &s.active {
            for i in 0..nf {
                lp.add_var(weight * inst.cost[i][j], T::zero(), inf);
            }
        }
        for i in 0..nf {
            lp.add_var(weight * s.w2[i], T::zero(), inf);
        }
        for i in 0..nf {
            lp.add_var(weight * s.w2[i], T::zero(), inf);
        }
        let r = lp.add_var(weight * delta, T::zero(), T::one());
        let xv = |t: usize, i: usize| var0 + t * nf + i;
        let uv = |t: usize, i: usize| var0 + nx + t * nf + i;
        let yv = |i: usize| var0 + 2 * nx + i;
        let vv = |i: usize| var0 + 2 * nx + nf + i;
        let row0 = lp.n_rows();
        for t in 0..na {
            let mut c: Vec<(usize, T)> = (0..nf).map(|i| (xv(t, i), T::one())).collect();
            c.push((r, T::one()));
            lp.add_row(c, Relation::Ge, T::one());
        }
        for t in 0..na {
            let c = (0..nf).flat_map(|i| [(xv(t, i), T::one()), (uv(t, i), T::one())]);
            lp.add_row(c, Relation::Ge, T::one());
        }
        // opening terms: y_i enters as a variable or moves to the rhs
        let open = |i: usize| -> (Option<(usize, T)>, T) {
            match x {
                FirstStageRef::Fixed(v) => (None, -v[i]),
                FirstStageRef::Vars => (Some((i, T::one())), T::zero()),
            }
        };
        for t in 0..na {
            for i in 0..nf {
                let (term, rhs) = open(i);
                let mut c = vec![(yv(i), T::one()), (xv(t, i), -T::one())];
                c.extend(term);
                lp.add_row(c, Relation::Ge, rhs);
            }
        }
        for t in 0..na {
            for i in 0..nf {
                let (term, rhs) = open(i);
                let mut c = vec![(yv(i), T::one()), (vv(i), T::one()), (xv(t, i), -T::one()), (uv(t, i), -T::one())];
                c.extend(term);
                lp.add_row(c, Relation::Ge, rhs);
            }
        }
        let fac_terms = || (0..nf).map(|i| (yv(i), -s.w2[i]));
        let asg_terms = || (0..na).flat_map(move |t| (0..nf).map(move |i| (xv(t, i), -inst.cost[i][s.active[t]])));
        let total = self.scenario_budget(s);
        let b_total = total.is_finite().then(|| lp.add_row(fac_terms().chain(asg_terms()), Relation::Ge, -total));
        let b_fac = self.budgets.facility.is_finite().then(|| lp.add_row(fac_terms(), Relation::Ge, -self.budgets.facility));
        let b_asg =
            self.budgets.assignment.is_finite().then(|| lp.add_row(asg_terms(), Relation::Ge, -self.budgets.assignment));
        Ok(Block { var0, row0, cols: (0..nf).collect(), budget_rows: [b_total, b_fac, b_asg], r })
    }

    fn read_block(&self, sol: &LpSolution<T>, b: &Block, s: &Scenario<T>, weight: T, delta: T) -> ScenarioSolution<T> {
        let inst = self.inst;
        let na = s.active.len();
        let (nf, nx) = self.layout(na);
        let p = &sol.primal[b.var0..];
        let assign: Vec<Vec<T>> = (0..na).map(|t| p[t * nf..(t + 1) * nf].to_vec()).collect();
        let assign_extra: Vec<Vec<T>> = (0..na).map(|t| p[nx + t * nf..nx + (t + 1) * nf].to_vec()).collect();
        let y = p[2 * nx..2 * nx + nf].to_vec();
        let z = p[2 * nx + nf..2 * nx + 2 * nf].to_vec();
        let r = p[2 * nx + 2 * nf];
        let open_cost: T = (0..nf).map(|i| s.w2[i] * y[i]).sum();
        let extra_open: T = (0..nf).map(|i| s.w2[i] * z[i]).sum();
        let asg: T = (0..na).map(|t| (0..nf).map(|i| inst.cost[i][s.active[t]] * assign[t][i]).sum::<T>()).sum();
        let asg_extra: T =
            (0..na).map(|t| (0..nf).map(|i| inst.cost[i][s.active[t]] * assign_extra[t][i]).sum::<T>()).sum();
        let recourse_cost = open_cost + extra_open + asg + asg_extra;
        let d = |k: usize| sol.duals[k] / weight;
        let opt = |k: Option<usize>| k.map_or(T::zero(), d);
        let base = b.row0;
        let duals = ScenarioDuals::Facility {
            alpha: (0..na).map(|t| d(base + t)).collect(),
            psi: (0..na).map(|t| d(base + na + t)).collect(),
            beta: (0..na).map(|t| (0..nf).map(|i| d(base + 2 * na + t * nf + i)).collect()).collect(),
            gamma: (0..na).map(|t| (0..nf).map(|i| d(base + 2 * na + nx + t * nf + i)).collect()).collect(),
            theta: opt(b.budget_rows[0]),
            theta_f: opt(b.budget_rows[1]),
            theta_c: opt(b.budget_rows[2]),
        };
        ScenarioSolution {
            value: recourse_cost + delta * r,
            recourse_cost,
            budget_cost: open_cost + asg,
            r,
            y,
            z,
            assign,
            assign_extra,
            duals: Some(duals),
        }
    }

    fn solve_scenario(&self, delta: T, x: &[T], s: &Scenario<T>, need_duals: bool) -> Result<ScenarioSolution<T>> {
        if self.inst.n_facilities() == 0 && !s.is_empty() {
            return Err(Error::Infeasible("clients but no facilities".into()));
        }
        if !need_duals {
            return solve_block(self, delta, x, s, None);
        }
        // among optimal duals prefer the one with the least total β
        let nf = self.inst.n_facilities();
        let na = s.active.len();
        let tiebreak = move |lp: &LpProblem<T>, b: &Block| {
            let mut sec = vec![T::zero(); lp.n_rows()];
            for k in 0..na * nf {
                sec[b.row0 + 2 * na + k] = T::one();
            }
            sec
        };
        solve_block(self, delta, x, s, Some(&tiebreak))
    }

    fn subgradient(&self, items: &[(T, &Scenario<T>, &ScenarioSolution<T>)]) -> Result<Vec<T>> {
        let mut d = self.inst.f1.clone();
        for (w, _, sol) in items {
            let Some(ScenarioDuals::Facility { beta, gamma, .. }) = &sol.duals else {
                return Err(Error::MissingDuals("facility"));
            };
            for (bt, gt) in beta.iter().zip(gamma) {
                for i in 0..d.len() {
                    d[i] -= *w * (bt[i] + gt[i]);
                }
            }
        }
        Ok(d)
    }
}

/// Optimal fractional second stage of a facility scenario without budgets.
#[derive(Debug, Clone)]
pub struct FlSecondStage<T> {
    pub value: T,
    pub open: Vec<T>,
    /// `[client position][facility]`
    pub assign: Vec<Vec<T>>,
    pub open_cost: T,
    pub assign_cost: T,
}

/// `ℓ_A(y)`: cheapest fractional openings and assignments given stage-I
/// openings `y` (which may exceed 1).
pub fn ell_a<T: Scalar>(inst: &FacilityLocationInstance<T>, y: &[T], s: &Scenario<T>) -> Result<FlSecondStage<T>> {
    let nf = inst.n_facilities();
    let na = s.active.len();
    if na == 0 {
        return Ok(FlSecondStage {
            value: T::zero(),
            open: vec![T::zero(); nf],
            assign: Vec::new(),
            open_cost: T::zero(),
            assign_cost: T::zero(),
        });
    }
    if nf == 0 {
        return Err(Error::Infeasible("clients but no facilities".into()));
    }
    let mut lp = LpProblem::new(0);
    for &j in &s.active {
        for i in 0..nf {
            lp.add_var(inst.cost[i][j], T::zero(), T::infinity());
        }
    }
    let o0 = lp.n_vars();
    for i in 0..nf {
        lp.add_var(s.w2[i], T::zero(), T::infinity());
    }
    for t in 0..na {
        lp.add_row((0..nf).map(|i| (t * nf + i, T::one())), Relation::Ge, T::one());
    }
    for t in 0..na {
        for i in 0..nf {
            lp.add_row([(o0 + i, T::one()), (t * nf + i, -T::one())], Relation::Ge, -y[i]);
        }
    }
    let sol = solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Infeasible("facility second stage".into()));
    }
    let assign: Vec<Vec<T>> = (0..na).map(|t| sol.primal[t * nf..(t + 1) * nf].to_vec()).collect();
    let open = sol.primal[o0..o0 + nf].to_vec();
    let open_cost = (0..nf).map(|i| s.w2[i] * open[i]).sum();
    let assign_cost = (0..na).map(|t| (0..nf).map(|i| inst.cost[i][s.active[t]] * assign[t][i]).sum::<T>()).sum();
    Ok(FlSecondStage { value: sol.objective, open, assign, open_cost, assign_cost })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> FacilityLocationInstance<f64> {
        let fac = vec![("f".to_string(), 1.0), ("g".to_string(), 2.0)];
        let clients = vec!["a".to_string(), "b".to_string()];
        let metric = vec![vec![1.0, 3.0], vec![2.0, 1.0]];
        FacilityLocationInstance::new(fac, clients, metric, 2.0, FlBudgets::total_only(4.0)).unwrap()
    }

    #[test]
    fn fully_open_first_stage() {
        let inst = two_by_two();
        let m = BudgetedFacility::new(&inst);
        let s = Scenario::new(vec![0, 1], vec![2.0, 4.0], None);
        let sol = m.solve_scenario(5.0, &[1.0, 1.0], &s, true).unwrap();
        assert!((sol.value - 2.0).abs() < 1e-9);
        assert!(sol.r.abs() < 1e-12);
        assert!(sol.z.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn dual_bounds_hold() {
        let inst = two_by_two();
        let m = BudgetedFacility::new(&inst);
        let s = Scenario::new(vec![0, 1], vec![2.0, 4.0], None);
        for delta in [0.0, 1.0, 3.0, 10.0] {
            for y in [[0.0, 0.0], [0.5, 0.0], [0.3, 0.6]] {
                let sol = m.solve_scenario(delta, &y, &s, true).unwrap();
                let Some(ScenarioDuals::Facility { beta, gamma, .. }) = &sol.duals else { panic!() };
                for i in 0..2 {
                    let sb: f64 = beta.iter().map(|b| b[i]).sum();
                    let sg: f64 = gamma.iter().map(|g| g[i]).sum();
                    assert!(sb <= delta + 1e-6, "beta sum {sb} > {delta}");
                    assert!(sg <= s.w2[i] + 1e-6);
                }
            }
        }
    }

    #[test]
    fn ell_with_open_facilities() {
        let inst = two_by_two();
        let s = Scenario::new(vec![0, 1], vec![2.0, 4.0], None);
        let v = ell_a(&inst, &[1.0, 1.0], &s).unwrap();
        assert!((v.value - 2.0).abs() < 1e-9);
        let closed = ell_a(&inst, &[0.0, 0.0], &s).unwrap();
        // open f at 2, assign a at 1 and b at 3
        assert!((closed.value - 6.0).abs() < 1e-9);
    }
}
