use crate::error::{Error, Result};
use crate::model::{check_scenario, Scenario, SetCoverInstance};
use crate::scalar::Scalar;
use crate::simplex::{solve, LpProblem, LpSolution, LpStatus, Relation};

use super::{solve_block, Block, FirstStageRef, Mode, ScenarioDuals, ScenarioSolution, TwoStageModel};

/// Budgeted set cover: `g_A(Δ;x) = min w^A·(y+z) + Δ r` over the cover rows
/// with and without `r`, and `w^A·y ≤ B_A`.
#[derive(Debug, Clone, Copy)]
pub struct BudgetedCover<'a, T> {
    pub inst: &'a SetCoverInstance<T>,
    pub budget: T,
}

/// Robust cover: `g'_A(Δ;x) = min Δ r` with `y` covering all but an `r`
/// fraction within budget; no over-budget recourse.
#[derive(Debug, Clone, Copy)]
pub struct RobustCover<'a, T> {
    pub inst: &'a SetCoverInstance<T>,
    pub budget: T,
}

fn touched<T: Scalar>(inst: &SetCoverInstance<T>, s: &Scenario<T>) -> Vec<usize> {
    let mut cols: Vec<usize> = s.active.iter().flat_map(|&e| inst.covering(e).iter().copied()).collect();
    cols.sort_unstable();
    cols.dedup();
    cols
}

#[allow(clippy::too_many_arguments)]
fn cover_block<T: Scalar>(
    inst: &SetCoverInstance<T>,
    lp: &mut LpProblem<T>,
    x: FirstStageRef<'_, T>,
    s: &Scenario<T>,
    weight: T,
    delta: T,
    budget: T,
    robust: bool,
) -> Block {
    let cols = touched(inst, s);
    let local = |set: usize| cols.binary_search(&set).expect("set touches scenario");
    let var0 = lp.n_vars();
    let inf = T::infinity();
    let ycost = if robust { T::zero() } else { weight };
    for &c in &cols {
        lp.add_var(ycost * s.w2[c], T::zero(), inf);
    }
    let zvar0 = lp.n_vars();
    if !robust {
        for &c in &cols {
            lp.add_var(weight * s.w2[c], T::zero(), inf);
        }
    }
    let r = lp.add_var(weight * delta, T::zero(), T::one());
    let row0 = lp.n_rows();
    let rhs = |e: usize| match x {
        FirstStageRef::Fixed(v) => T::one() - inst.covering(e).iter().map(|&c| v[c]).sum::<T>(),
        FirstStageRef::Vars => T::one(),
    };
    let xterms = |e: usize| -> Vec<(usize, T)> {
        match x {
            FirstStageRef::Fixed(_) => Vec::new(),
            FirstStageRef::Vars => inst.covering(e).iter().map(|&c| (c, T::one())).collect(),
        }
    };
    for &e in &s.active {
        let mut coeffs: Vec<(usize, T)> = inst.covering(e).iter().map(|&c| (var0 + local(c), T::one())).collect();
        coeffs.push((r, T::one()));
        coeffs.extend(xterms(e));
        lp.add_row(coeffs, Relation::Ge, rhs(e));
    }
    if !robust {
        for &e in &s.active {
            let mut coeffs: Vec<(usize, T)> = Vec::new();
            for &c in inst.covering(e) {
                coeffs.push((var0 + local(c), T::one()));
                coeffs.push((zvar0 + local(c), T::one()));
            }
            coeffs.extend(xterms(e));
            lp.add_row(coeffs, Relation::Ge, rhs(e));
        }
    }
    let budget_row = budget.is_finite().then(|| {
        let coeffs = cols.iter().enumerate().map(|(k, &c)| (var0 + k, -s.w2[c]));
        lp.add_row(coeffs, Relation::Ge, -budget)
    });
    Block { var0, row0, cols, budget_rows: [budget_row, None, None], r }
}

fn read_cover<T: Scalar>(
    inst: &SetCoverInstance<T>,
    sol: &LpSolution<T>,
    b: &Block,
    s: &Scenario<T>,
    weight: T,
    delta: T,
    robust: bool,
) -> ScenarioSolution<T> {
    let m = inst.m();
    let nc = b.cols.len();
    let na = s.active.len();
    let mut y = vec![T::zero(); m];
    let mut z = if robust { Vec::new() } else { vec![T::zero(); m] };
    for (k, &c) in b.cols.iter().enumerate() {
        y[c] = sol.primal[b.var0 + k];
        if !robust {
            z[c] = sol.primal[b.var0 + nc + k];
        }
    }
    let r = sol.primal[b.var0 + if robust { nc } else { 2 * nc }];
    let budget_cost: T = b.cols.iter().map(|&c| s.w2[c] * y[c]).sum();
    let recourse_cost = if robust { budget_cost } else { budget_cost + b.cols.iter().map(|&c| s.w2[c] * z[c]).sum::<T>() };
    let value = if robust { delta * r } else { recourse_cost + delta * r };
    let scaled = |i: usize| sol.duals[i] / weight;
    let alpha = (0..na).map(|t| scaled(b.row0 + t)).collect();
    let theta = b.budget_rows[0].map_or(T::zero(), scaled);
    let duals = if robust {
        ScenarioDuals::Robust { alpha, theta }
    } else {
        ScenarioDuals::Cover { alpha, beta: (0..na).map(|t| scaled(b.row0 + na + t)).collect(), theta }
    };
    ScenarioSolution {
        value,
        recourse_cost,
        budget_cost,
        r,
        y,
        z,
        assign: Vec::new(),
        assign_extra: Vec::new(),
        duals: Some(duals),
    }
}

fn cover_subgradient<T: Scalar>(
    inst: &SetCoverInstance<T>,
    items: &[(T, &Scenario<T>, &ScenarioSolution<T>)],
    robust: bool,
) -> Result<Vec<T>> {
    let mut d = inst.w1.clone();
    for (w, s, sol) in items {
        let per_element: Vec<T> = match (&sol.duals, robust) {
            (Some(ScenarioDuals::Cover { alpha, beta, .. }), false) => {
                alpha.iter().zip(beta).map(|(&a, &b)| a + b).collect()
            }
            (Some(ScenarioDuals::Robust { alpha, .. }), true) => alpha.clone(),
            _ => return Err(Error::MissingDuals(if robust { "robust cover" } else { "budgeted cover" })),
        };
        for (t, &e) in s.active.iter().enumerate() {
            for &c in inst.covering(e) {
                d[c] -= *w * per_element[t];
            }
        }
    }
    Ok(d)
}

impl<T: Scalar> TwoStageModel<T> for BudgetedCover<'_, T> {
    fn mode(&self) -> Mode {
        Mode::Budget
    }
    fn dim(&self) -> usize {
        self.inst.m()
    }
    fn first_stage_costs(&self) -> &[T] {
        &self.inst.w1
    }
    fn lambda(&self) -> T {
        self.inst.lambda
    }
    fn scenario_budget(&self, s: &Scenario<T>) -> T {
        s.budget_or(self.budget)
    }
    fn check(&self, s: &Scenario<T>) -> Result<()> {
        check_scenario(self.inst, s)
    }
    fn add_block(&self, lp: &mut LpProblem<T>, x: FirstStageRef<'_, T>, s: &Scenario<T>, weight: T, delta: T) -> Result<Block> {
        Ok(cover_block(self.inst, lp, x, s, weight, delta, self.scenario_budget(s), false))
    }
    fn read_block(&self, sol: &LpSolution<T>, block: &Block, s: &Scenario<T>, weight: T, delta: T) -> ScenarioSolution<T> {
        read_cover(self.inst, sol, block, s, weight, delta, false)
    }
    fn solve_scenario(&self, delta: T, x: &[T], s: &Scenario<T>, _need_duals: bool) -> Result<ScenarioSolution<T>> {
        solve_block(self, delta, x, s, None)
    }
    fn subgradient(&self, items: &[(T, &Scenario<T>, &ScenarioSolution<T>)]) -> Result<Vec<T>> {
        cover_subgradient(self.inst, items, false)
    }
}

impl<T: Scalar> TwoStageModel<T> for RobustCover<'_, T> {
    fn mode(&self) -> Mode {
        Mode::Robust
    }
    fn dim(&self) -> usize {
        self.inst.m()
    }
    fn first_stage_costs(&self) -> &[T] {
        &self.inst.w1
    }
    fn lambda(&self) -> T {
        self.inst.lambda
    }
    fn scenario_budget(&self, s: &Scenario<T>) -> T {
        s.budget_or(self.budget)
    }
    fn check(&self, s: &Scenario<T>) -> Result<()> {
        check_scenario(self.inst, s)
    }
    fn add_block(&self, lp: &mut LpProblem<T>, x: FirstStageRef<'_, T>, s: &Scenario<T>, weight: T, delta: T) -> Result<Block> {
        Ok(cover_block(self.inst, lp, x, s, weight, delta, self.scenario_budget(s), true))
    }
    fn read_block(&self, sol: &LpSolution<T>, block: &Block, s: &Scenario<T>, weight: T, delta: T) -> ScenarioSolution<T> {
        read_cover(self.inst, sol, block, s, weight, delta, true)
    }
    fn solve_scenario(&self, delta: T, x: &[T], s: &Scenario<T>, _need_duals: bool) -> Result<ScenarioSolution<T>> {
        solve_block(self, delta, x, s, None)
    }
    fn subgradient(&self, items: &[(T, &Scenario<T>, &ScenarioSolution<T>)]) -> Result<Vec<T>> {
        cover_subgradient(self.inst, items, true)
    }
}

/// `f_A(x)`: cheapest fractional recourse covering the residual
/// requirements `max(0, 1 − Σ_{S∋e} x_S)` of the active elements.
pub fn f_a<T: Scalar>(inst: &SetCoverInstance<T>, x: &[T], s: &Scenario<T>) -> Result<(T, Vec<T>)> {
    let m = inst.m();
    let cols = touched(inst, s);
    let mut lp = LpProblem::new(0);
    for &c in &cols {
        lp.add_var(s.w2[c], T::zero(), T::infinity());
    }
    for &e in &s.active {
        let need = inst.residual(e, x);
        if need <= T::zero() {
            continue;
        }
        let coeffs = inst.covering(e).iter().map(|&c| (cols.binary_search(&c).expect("touched"), T::one()));
        lp.add_row(coeffs, Relation::Ge, need);
    }
    let sol = solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Infeasible("an active element lies in no set".into()));
    }
    let mut y = vec![T::zero(); m];
    for (k, &c) in cols.iter().enumerate() {
        y[c] = sol.primal[k];
    }
    Ok((sol.objective, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t1() -> SetCoverInstance<f64> {
        let ids = vec!["e1".to_string(), "e2".to_string()];
        let sets = vec![("S1".into(), vec![0], 1.0), ("S2".into(), vec![1], 1.0), ("S3".into(), vec![0, 1], 1.5)];
        SetCoverInstance::new(ids, sets, 2.0, 1.5).unwrap()
    }

    fn both() -> Scenario<f64> {
        Scenario::new(vec![0, 1], vec![2.0, 2.0, 3.0], None)
    }

    #[test]
    fn second_stage_values() {
        let inst = t1();
        let s = both();
        let (v, y) = f_a(&inst, &[0.0; 3], &s).unwrap();
        assert!((v - 3.0).abs() < 1e-12);
        assert!((y[2] - 1.0).abs() < 1e-12);
        assert!(f_a(&inst, &[0.0, 0.0, 1.0], &s).unwrap().0.abs() < 1e-12);
        let only_e1 = Scenario::new(vec![0], vec![2.0, 2.0, 3.0], None);
        assert!((f_a(&inst, &[0.5, 0.0, 0.0], &only_e1).unwrap().0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lagrangian_scenario_value() {
        let inst = t1();
        let m = BudgetedCover { inst: &inst, budget: 1.5 };
        let sol = m.solve_scenario(2.0, &[0.0; 3], &both(), true).unwrap();
        assert!((sol.value - 4.0).abs() < 1e-9);
        assert!((sol.r - 0.5).abs() < 1e-9);
    }

    #[test]
    fn zero_delta_frees_r() {
        let inst = t1();
        let m = BudgetedCover { inst: &inst, budget: 0.0 };
        let sol = m.solve_scenario(0.0, &[0.0; 3], &both(), true).unwrap();
        assert!((sol.value - 3.0).abs() < 1e-9);
    }

    #[test]
    fn robust_value_in_range() {
        let inst = t1();
        let m = RobustCover { inst: &inst, budget: 1.5 };
        let sol = m.solve_scenario(2.0, &[0.0; 3], &both(), true).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-9);
        assert!(sol.value >= 0.0 && sol.value <= 2.0);
        let big = RobustCover { inst: &inst, budget: 10.0 };
        assert!(big.solve_scenario(2.0, &[0.0; 3], &both(), true).unwrap().r.abs() < 1e-12);
    }

    #[test]
    fn uncoverable_scenario_is_infeasible_for_budget_only() {
        let ids = vec!["e".to_string(), "bare".to_string()];
        let inst = SetCoverInstance::new(ids, vec![("S".into(), vec![0], 1.0)], 1.0, 0.0).unwrap();
        let s = Scenario::new(vec![1], vec![1.0], None);
        assert!(BudgetedCover { inst: &inst, budget: 0.0 }.solve_scenario(1.0, &[0.0], &s, true).is_err());
        let r: ScenarioSolution<f64> = RobustCover { inst: &inst, budget: 0.0 }.solve_scenario(1.0, &[0.0], &s, true).unwrap();
        assert!((r.r - 1.0).abs() < 1e-12);
    }
}
