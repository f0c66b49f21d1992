//! Rounding fractional first stages to integer covers, and the
//! filtering-and-clustering rounder for facility location.

use crate::error::{Error, Result};
use crate::model::{Scenario, SetCoverInstance};
use crate::scalar::Scalar;

/// `x̂ = min(1, (1 + 1/ε)x)`.
pub fn scale_first_stage<T: Scalar>(x: &[T], eps_r: T) -> Vec<T> {
    let f = T::one() + T::one() / eps_r;
    x.iter().map(|&v| (f * v).min(T::one()).max(T::zero())).collect()
}

/// Greedy weighted set cover: repeatedly picks the set with the least weight
/// per newly covered element, lowest index on ties. Returns set indices in
/// pick order.
pub fn greedy_set_cover<T: Scalar>(universe: &[usize], members: &[Vec<usize>], weights: &[T]) -> Result<Vec<usize>> {
    let mut need: std::collections::BTreeSet<usize> = universe.iter().copied().collect();
    let mut chosen = Vec::new();
    while !need.is_empty() {
        let mut best: Option<(usize, T)> = None;
        for (k, ms) in members.iter().enumerate() {
            let fresh = ms.iter().filter(|e| need.contains(e)).count();
            if fresh == 0 {
                continue;
            }
            let ratio = weights[k] / T::from_count(fresh);
            if best.map_or(true, |(_, r)| ratio < r) {
                best = Some((k, ratio));
            }
        }
        let Some((k, _)) = best else {
            let e = need.iter().next().unwrap();
            return Err(Error::Infeasible(format!("element #{e} is in no set")));
        };
        for e in &members[k] {
            need.remove(e);
        }
        chosen.push(k);
    }
    Ok(chosen)
}

pub fn cover_cost<T: Scalar>(sets: &[usize], weights: &[T]) -> T {
    sets.iter().map(|&k| weights[k]).sum()
}

/// Integer first stage with its rule for covering the rest of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegerCover {
    /// Sets bought in stage I.
    pub stage1: Vec<usize>,
    /// Elements with `Σ_{S∋e} x̂_S ≥ 1/2`.
    pub stage1_elements: Vec<usize>,
}

impl IntegerCover {
    /// Sets bought in scenario `s`: greedy on its active elements not
    /// covered in stage I, priced with the scenario weights.
    pub fn recourse<T: Scalar>(&self, inst: &SetCoverInstance<T>, s: &Scenario<T>) -> Result<Vec<usize>> {
        let mut covered = vec![false; inst.n()];
        for &k in &self.stage1 {
            for &e in &inst.members[k] {
                covered[e] = true;
            }
        }
        let rest: Vec<usize> = s.active.iter().copied().filter(|&e| !covered[e]).collect();
        greedy_set_cover(&rest, &inst.members, &s.w2)
    }

    pub fn first_stage_cost<T: Scalar>(&self, inst: &SetCoverInstance<T>) -> T {
        cover_cost(&self.stage1, &inst.w1)
    }

    /// 0/1 first-stage vector.
    pub fn indicator<T: Scalar>(&self, m: usize) -> Vec<T> {
        let mut x = vec![T::zero(); m];
        for &k in &self.stage1 {
            x[k] = T::one();
        }
        x
    }
}

/// Elements fractionally covered to at least one half go to stage I, covered
/// by greedy on the stage-I weights.
pub fn round_integer_cover<T: Scalar>(inst: &SetCoverInstance<T>, x_hat: &[T]) -> Result<IntegerCover> {
    let half = T::half() - T::lit(1e-12);
    let stage1_elements: Vec<usize> = (0..inst.n())
        .filter(|&e| inst.covering(e).iter().map(|&k| x_hat[k]).sum::<T>() >= half)
        .collect();
    let stage1 = greedy_set_cover(&stage1_elements, &inst.members, &inst.w1)?;
    Ok(IntegerCover { stage1, stage1_elements })
}

/// Fractional facility-location solution over `clients` (local indices).
#[derive(Debug, Clone)]
pub struct FlFractional<T> {
    pub facility_cost: Vec<T>,
    /// `cost[i][j]` for local client `j`.
    pub cost: Vec<Vec<T>>,
    pub open: Vec<T>,
    /// `assign[j][i]`.
    pub assign: Vec<Vec<T>>,
}

impl<T: Scalar> FlFractional<T> {
    pub fn facility_total(&self) -> T {
        self.facility_cost.iter().zip(&self.open).map(|(&f, &y)| f * y).sum()
    }

    /// `C_j = Σ_i c_ij x_ij`.
    pub fn client_cost(&self, j: usize) -> T {
        self.assign[j].iter().enumerate().map(|(i, &x)| self.cost[i][j] * x).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaResult {
    pub open: Vec<usize>,
    /// Facility serving each client.
    pub assign: Vec<usize>,
}

impl StaResult {
    pub fn facility_total<T: Scalar>(&self, f: &[T]) -> T {
        self.open.iter().map(|&i| f[i]).sum()
    }
}

/// Filtering at level `gamma`, then clustering by increasing radius; opens
/// the cheapest facility within each cluster center's radius and assigns
/// every client to its nearest open facility.
pub fn sta_round_fl<T: Scalar>(frac: &FlFractional<T>, gamma: T) -> Result<StaResult> {
    let nf = frac.facility_cost.len();
    let nc = frac.assign.len();
    let tol = T::lit(1e-7);
    for j in 0..nc {
        let s: T = frac.assign[j].iter().copied().sum();
        if s < T::one() - tol {
            return Err(Error::InvalidParameter(format!("client #{j} is assigned {s} < 1")));
        }
        for i in 0..nf {
            if frac.assign[j][i] > frac.open[i] + tol {
                return Err(Error::InvalidParameter(format!("client #{j} uses facility #{i} beyond its opening")));
            }
        }
    }
    if nc == 0 {
        return Ok(StaResult { open: Vec::new(), assign: Vec::new() });
    }
    let radius: Vec<T> = (0..nc).map(|j| frac.client_cost(j) / (T::one() - gamma)).collect();
    let ball = |j: usize| -> Vec<usize> {
        let lim = radius[j] * (T::one() + T::lit(1e-12)) + T::lit(1e-12);
        (0..nf).filter(|&i| frac.cost[i][j] <= lim).collect()
    };
    let balls: Vec<Vec<usize>> = (0..nc).map(ball).collect();
    let mut order: Vec<usize> = (0..nc).collect();
    order.sort_by(|&a, &b| radius[a].partial_cmp(&radius[b]).unwrap().then(a.cmp(&b)));
    let mut clustered = vec![false; nc];
    let mut open = Vec::new();
    for &j in &order {
        if clustered[j] {
            continue;
        }
        let &i = balls[j]
            .iter()
            .min_by(|&&a, &&b| frac.facility_cost[a].partial_cmp(&frac.facility_cost[b]).unwrap().then(a.cmp(&b)))
            .ok_or_else(|| Error::InvalidParameter(format!("client #{j} has no facility within its radius")))?;
        open.push(i);
        for k in 0..nc {
            if !clustered[k] && balls[k].iter().any(|f| balls[j].contains(f)) {
                clustered[k] = true;
            }
        }
    }
    open.sort_unstable();
    open.dedup();
    let assign = (0..nc)
        .map(|j| {
            *open
                .iter()
                .min_by(|&&a, &&b| frac.cost[a][j].partial_cmp(&frac.cost[b][j]).unwrap().then(a.cmp(&b)))
                .unwrap()
        })
        .collect();
    Ok(StaResult { open, assign })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn greedy_hand_trace() {
        let members = vec![vec![1, 2], vec![2, 3], vec![3]];
        let chosen = greedy_set_cover(&[1, 2, 3], &members, &[1.0, 1.0, 0.5]).unwrap();
        assert_eq!(chosen, vec![0, 2]);
        assert_eq!(cover_cost(&chosen, &[1.0, 1.0, 0.5]), 1.5);
        assert!(greedy_set_cover::<f64>(&[], &members, &[1.0; 3]).unwrap().is_empty());
        assert!(greedy_set_cover(&[4], &members, &[1.0; 3]).is_err());
    }

    #[test]
    fn scaling_clamps() {
        assert_eq!(scale_first_stage(&[0.0, 0.4, 0.7], 1.0), vec![0.0, 0.8, 1.0]);
    }

    #[test]
    fn split_client() {
        let frac = FlFractional {
            facility_cost: vec![1.0, 1.0],
            cost: vec![vec![1.0], vec![3.0]],
            open: vec![0.5, 0.5],
            assign: vec![vec![0.5, 0.5]],
        };
        let r = sta_round_fl(&frac, 0.25).unwrap();
        assert_eq!(r.open, vec![0]);
        assert!(frac.cost[r.assign[0]][0] <= 4.0 * 2.0);
    }
}
