use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::scenario::Scenario;

/// Data shared by every two-stage instance: the first-stage actions (sets or
/// facilities), their costs, and the demand points scenarios activate.
pub trait FirstStage<T> {
    fn action_ids(&self) -> &[String];
    fn first_stage_costs(&self) -> &[T];
    fn lambda(&self) -> T;
    fn demand_ids(&self) -> &[String];
}

/// Checks a scenario against the instance shape and the inflation bound.
pub fn check_scenario<T: Scalar, I: FirstStage<T> + ?Sized>(inst: &I, s: &Scenario<T>) -> Result<()> {
    let ids = inst.action_ids();
    let w1 = inst.first_stage_costs();
    if s.w2.len() != w1.len() {
        return Err(Error::InvalidParameter(format!(
            "scenario carries {} stage-II costs for {} actions",
            s.w2.len(),
            w1.len()
        )));
    }
    let n = inst.demand_ids().len();
    if let Some(&e) = s.active.iter().find(|&&e| e >= n) {
        return Err(Error::UnknownId(format!("demand #{e}")));
    }
    if let Some(b) = s.budget {
        if !(b >= T::zero()) {
            return Err(Error::InvalidParameter(format!("scenario budget {b} is negative")));
        }
    }
    let lambda = inst.lambda();
    for (k, (&a, &b)) in s.w2.iter().zip(w1).enumerate() {
        if !(a >= T::zero()) {
            return Err(Error::NegativeWeight { id: ids[k].clone(), value: a.as_f64() });
        }
        let bound = lambda * b;
        if a > bound + T::lit(1e-12) * (T::one() + bound) {
            return Err(Error::Inflation { set: ids[k].clone(), w2: a.as_f64(), bound: bound.as_f64() });
        }
    }
    Ok(())
}

pub(crate) fn index_ids(ids: &[String]) -> Result<HashMap<String, usize>> {
    let mut map = HashMap::with_capacity(ids.len());
    for (k, id) in ids.iter().enumerate() {
        if map.insert(id.clone(), k).is_some() {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    Ok(map)
}

#[derive(Debug, Clone)]
pub struct SetCoverInstance<T> {
    pub element_ids: Vec<String>,
    pub set_ids: Vec<String>,
    pub members: Vec<Vec<usize>>,
    pub w1: Vec<T>,
    pub lambda: T,
    pub budget: T,
    /// Declares `w1·x + f_A(x) ≥ 1` for every nonempty scenario, which the
    /// multiplicative bootstrap relies on.
    pub unit_cost_floor: bool,
    covering: Vec<Vec<usize>>,
}

impl<T: Scalar> SetCoverInstance<T> {
    pub fn new(
        element_ids: Vec<String>,
        sets: Vec<(String, Vec<usize>, T)>,
        lambda: T,
        budget: T,
    ) -> Result<Self> {
        index_ids(&element_ids)?;
        let n = element_ids.len();
        let mut set_ids = Vec::with_capacity(sets.len());
        let mut members = Vec::with_capacity(sets.len());
        let mut w1 = Vec::with_capacity(sets.len());
        for (id, mut mem, w) in sets {
            if !(w >= T::zero()) || !w.is_finite() {
                return Err(Error::NegativeWeight { id, value: w.as_f64() });
            }
            if let Some(&e) = mem.iter().find(|&&e| e >= n) {
                return Err(Error::UnknownId(format!("element #{e} in set `{id}`")));
            }
            mem.sort_unstable();
            mem.dedup();
            set_ids.push(id);
            members.push(mem);
            w1.push(w);
        }
        index_ids(&set_ids)?;
        if !(lambda >= T::one()) {
            return Err(Error::InvalidParameter(format!("lambda = {lambda} must be at least 1")));
        }
        if !(budget >= T::zero()) {
            return Err(Error::InvalidParameter(format!("budget = {budget} must be nonnegative")));
        }
        let mut covering = vec![Vec::new(); n];
        for (s, mem) in members.iter().enumerate() {
            for &e in mem {
                covering[e].push(s);
            }
        }
        let inst = Self { element_ids, set_ids, members, w1, lambda, budget, unit_cost_floor: false, covering };
        let bare = inst.uncoverable();
        if !bare.is_empty() {
            log::warn!("possibly infeasible: {} element(s) lie in no set", bare.len());
        }
        Ok(inst)
    }

    pub fn m(&self) -> usize {
        self.set_ids.len()
    }

    pub fn n(&self) -> usize {
        self.element_ids.len()
    }

    /// Sets containing element `e`, in index order.
    pub fn covering(&self, e: usize) -> &[usize] {
        &self.covering[e]
    }

    pub fn uncoverable(&self) -> Vec<usize> {
        (0..self.n()).filter(|&e| self.covering[e].is_empty()).collect()
    }

    /// Residual requirement `max(0, 1 − Σ_{S∋e} x_S)` of element `e`.
    pub fn residual(&self, e: usize, x: &[T]) -> T {
        let covered: T = self.covering[e].iter().map(|&s| x[s]).sum();
        (T::one() - covered).max(T::zero())
    }

    pub fn set_index(&self, id: &str) -> Option<usize> {
        self.set_ids.iter().position(|s| s == id)
    }

    pub fn element_index(&self, id: &str) -> Option<usize> {
        self.element_ids.iter().position(|s| s == id)
    }
}

impl<T: Scalar> FirstStage<T> for SetCoverInstance<T> {
    fn action_ids(&self) -> &[String] {
        &self.set_ids
    }
    fn first_stage_costs(&self) -> &[T] {
        &self.w1
    }
    fn lambda(&self) -> T {
        self.lambda
    }
    fn demand_ids(&self) -> &[String] {
        &self.element_ids
    }
}

/// Budgets of the facility-location model; `+inf` disables a constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlBudgets<T> {
    pub total: T,
    pub facility: T,
    pub assignment: T,
}

impl<T: Scalar> FlBudgets<T> {
    pub fn total_only(b: T) -> Self {
        Self { total: b, facility: T::infinity(), assignment: T::infinity() }
    }

    pub fn is_multi(&self) -> bool {
        self.facility.is_finite() || self.assignment.is_finite()
    }
}

#[derive(Debug, Clone)]
pub struct FacilityLocationInstance<T> {
    pub facility_ids: Vec<String>,
    pub f1: Vec<T>,
    pub client_ids: Vec<String>,
    /// `cost[i][j]` between facility `i` and client `j`.
    pub cost: Vec<Vec<T>>,
    pub lambda: T,
    pub budgets: FlBudgets<T>,
}

impl<T: Scalar> FacilityLocationInstance<T> {
    /// `metric` is either `|F|×|D|` (facility rows, client columns) or a full
    /// `(|F|+|D|)²` distance matrix over facilities followed by clients.
    pub fn new(
        facilities: Vec<(String, T)>,
        client_ids: Vec<String>,
        metric: Vec<Vec<T>>,
        lambda: T,
        budgets: FlBudgets<T>,
    ) -> Result<Self> {
        let nf = facilities.len();
        let nd = client_ids.len();
        let (facility_ids, f1): (Vec<String>, Vec<T>) = facilities.into_iter().unzip();
        index_ids(&facility_ids)?;
        index_ids(&client_ids)?;
        for (id, &f) in facility_ids.iter().zip(&f1) {
            if !(f >= T::zero()) || !f.is_finite() {
                return Err(Error::NegativeWeight { id: id.clone(), value: f.as_f64() });
            }
        }
        if !(lambda >= T::one()) {
            return Err(Error::InvalidParameter(format!("lambda = {lambda} must be at least 1")));
        }
        for b in [budgets.total, budgets.facility, budgets.assignment] {
            if !(b >= T::zero()) {
                return Err(Error::InvalidParameter(format!("budget {b} must be nonnegative")));
            }
        }
        let tol = T::lit(1e-9);
        let cost = if metric.len() == nf + nd && metric.iter().all(|r| r.len() == nf + nd) {
            let k = nf + nd;
            for a in 0..k {
                for b in 0..k {
                    if (metric[a][b] - metric[b][a]).abs() > tol {
                        return Err(Error::InvalidParameter(format!("metric not symmetric at ({a},{b})")));
                    }
                    for c in 0..k {
                        if metric[a][c] > metric[a][b] + metric[b][c] + tol {
                            return Err(Error::InvalidParameter(format!("triangle inequality fails on ({a},{b},{c})")));
                        }
                    }
                }
            }
            (0..nf).map(|i| (0..nd).map(|j| metric[i][nf + j]).collect()).collect()
        } else if metric.len() == nf && metric.iter().all(|r| r.len() == nd) {
            for i in 0..nf {
                for j in 0..nd {
                    for i2 in 0..nf {
                        for j2 in 0..nd {
                            if metric[i][j] > metric[i][j2] + metric[i2][j2] + metric[i2][j] + tol {
                                return Err(Error::InvalidParameter(format!(
                                    "triangle inequality fails on facility {i}, client {j}"
                                )));
                            }
                        }
                    }
                }
            }
            metric
        } else {
            return Err(Error::Parse(format!("metric must be {nf}x{nd} or {0}x{0}", nf + nd)));
        };
        for row in &cost {
            if row.iter().any(|&c| !(c >= T::zero()) || !c.is_finite()) {
                return Err(Error::InvalidParameter("metric entries must be finite and nonnegative".into()));
            }
        }
        if nf == 0 && nd > 0 {
            log::warn!("possibly infeasible: clients but no facilities");
        }
        Ok(Self { facility_ids, f1, client_ids, cost, lambda, budgets })
    }

    pub fn n_facilities(&self) -> usize {
        self.facility_ids.len()
    }

    pub fn n_clients(&self) -> usize {
        self.client_ids.len()
    }

    /// Cheapest possible assignment cost of the clients of `s`.
    pub fn min_assignment_cost(&self, s: &Scenario<T>) -> T {
        s.active
            .iter()
            .map(|&j| (0..self.n_facilities()).map(|i| self.cost[i][j]).fold(T::infinity(), T::min))
            .sum()
    }

    pub fn max_assignment_total(&self) -> T {
        (0..self.n_clients())
            .map(|j| (0..self.n_facilities()).map(|i| self.cost[i][j]).fold(T::zero(), T::max))
            .sum()
    }
}

impl<T: Scalar> FirstStage<T> for FacilityLocationInstance<T> {
    fn action_ids(&self) -> &[String] {
        &self.facility_ids
    }
    fn first_stage_costs(&self) -> &[T] {
        &self.f1
    }
    fn lambda(&self) -> T {
        self.lambda
    }
    fn demand_ids(&self) -> &[String] {
        &self.client_ids
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn duplicate_set_ids_rejected() {
        let r = SetCoverInstance::new(
            ids(&["e"]),
            vec![("S".into(), vec![0], 1.0), ("S".into(), vec![0], 2.0)],
            1.0,
            0.0,
        );
        assert!(matches!(r, Err(Error::DuplicateId(_))));
    }

    #[test]
    fn negative_weight_rejected() {
        let r = SetCoverInstance::new(ids(&["e"]), vec![("S".into(), vec![0], -1.0)], 1.0, 0.0);
        assert!(matches!(r, Err(Error::NegativeWeight { .. })));
    }

    #[test]
    fn uncoverable_allowed() {
        let inst = SetCoverInstance::new(ids(&["a", "b"]), vec![("S".into(), vec![0], 1.0)], 1.0, 0.0).unwrap();
        assert_eq!(inst.uncoverable(), vec![1]);
    }

    #[test]
    fn inflation_violation() {
        let inst = SetCoverInstance::new(ids(&["e"]), vec![("S".into(), vec![0], 1.0)], 2.0, 0.0).unwrap();
        let ok = Scenario::new(vec![0], vec![2.0], None);
        let bad = Scenario::new(vec![0], vec![3.0], None);
        assert!(check_scenario(&inst, &ok).is_ok());
        assert!(matches!(check_scenario(&inst, &bad), Err(Error::Inflation { .. })));
    }

    #[test]
    fn metric_shapes() {
        let fac = vec![("f".to_string(), 1.0), ("g".to_string(), 1.0)];
        let square = vec![
            vec![0.0, 2.0, 1.0, 1.0],
            vec![2.0, 0.0, 1.0, 1.0],
            vec![1.0, 1.0, 0.0, 2.0],
            vec![1.0, 1.0, 2.0, 0.0],
        ];
        let inst =
            FacilityLocationInstance::new(fac.clone(), ids(&["c", "d"]), square, 1.0, FlBudgets::total_only(5.0))
                .unwrap();
        assert_eq!(inst.cost, vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        let broken = vec![vec![0.0, 1.0], vec![1.0, 5.0]];
        assert!(FacilityLocationInstance::new(fac, ids(&["c", "d"]), broken, 1.0, FlBudgets::total_only(5.0)).is_err());
    }
}
