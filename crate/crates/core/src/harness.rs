//! Instance generators and the sampling-complexity experiments.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::model::reductions::{reduce_tree_multicut, PairScenario, Tree};
use crate::model::rng::{self, Rng};
use crate::model::{
    ExplicitDistribution, ExplicitOracle, FacilityLocationInstance, FlBudgets, RiskParams, SampleMode, Scenario,
    ScenarioKey, ScenarioOracle, SetCoverInstance,
};
use crate::risk_search::{cover_ub, risk_alg, risk_alg_on, sample_sizes, RiskReport};
use crate::scalar::Scalar;
use crate::scenario_lp::BudgetedCover;

const GEN: &str = "generate";

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Probabilities summing to one, rounded to four decimals.
fn random_probabilities(rng: &mut Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut p: Vec<f64> = raw.iter().map(|r| (r / total * 1e4).round() / 1e4).collect();
    let drift: f64 = 1.0 - p.iter().sum::<f64>();
    p[0] = ((p[0] + drift) * 1e4).round() / 1e4;
    p
}

fn lit_vec<T: Scalar>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

/// Random covering instance: `m` sets over `n` elements, every element in at
/// least one set, `k` scenarios with stage-II weights up to twice stage I.
pub fn random_set_cover<T: Scalar>(
    m: usize,
    n: usize,
    k: usize,
    seed: u64,
) -> Result<(SetCoverInstance<T>, ExplicitDistribution<T>)> {
    if m == 0 || n == 0 || k == 0 {
        return Err(Error::InvalidParameter("random instances need m, n, k ≥ 1".into()));
    }
    let mut r = rng::stream(seed, GEN, 0);
    let mut members: Vec<Vec<usize>> = (0..m).map(|_| (0..n).filter(|_| r.gen_bool(0.4)).collect()).collect();
    for e in 0..n {
        if !members.iter().any(|ms| ms.contains(&e)) {
            let s = r.gen_range(0..m);
            members[s].push(e);
        }
    }
    for ms in members.iter_mut() {
        if ms.is_empty() {
            ms.push(r.gen_range(0..n));
        }
        ms.sort_unstable();
    }
    let w1: Vec<f64> = (0..m).map(|_| round2(r.gen_range(1.0..5.0))).collect();
    let lambda = 2.0;
    let total: f64 = w1.iter().sum();
    let budget = round2(total * r.gen_range(0.2..0.6));
    let element_ids = (0..n).map(|e| format!("e{}", e + 1)).collect();
    let sets = (0..m).map(|s| (format!("S{}", s + 1), members[s].clone(), T::lit(w1[s]))).collect();
    let inst = SetCoverInstance::new(element_ids, sets, T::lit(lambda), T::lit(budget))?;
    let probs = random_probabilities(&mut r, k);
    let mut entries = Vec::with_capacity(k);
    for p in probs {
        let active: Vec<usize> = (0..n).filter(|_| r.gen_bool(0.5)).collect();
        let w2: Vec<f64> = w1.iter().map(|&w| round2(w * r.gen_range(1.0..lambda))).collect();
        entries.push((Scenario::new(active, lit_vec(&w2), None), T::lit(p)));
    }
    Ok((inst, ExplicitDistribution::new(entries)?))
}

/// The three-element instance separating `p_{A2} ≤ κ` from `p_{A2} > 2κ`:
/// singleton sets at stage-I cost `B`, stage-II costs `(0, 2B/3, 2B/3)`,
/// scenarios `∅`, `{e1,e2,e3}` with mass `ρ−κ` (clamped at 0) and `{e2,e3}`
/// with mass `p_a2`.
pub fn lb1<T: Scalar>(b: f64, rho: f64, kappa: f64, p_a2: f64) -> Result<(SetCoverInstance<T>, ExplicitDistribution<T>)> {
    let p_a1 = (rho - kappa).max(0.0);
    if !(b > 0.0) || !(0.0..=1.0).contains(&p_a2) || p_a1 + p_a2 > 1.0 {
        return Err(Error::InvalidParameter("LB1 needs B > 0 and p_A1 + p_A2 ≤ 1".into()));
    }
    let element_ids = vec!["e1".into(), "e2".into(), "e3".into()];
    let sets = (0..3).map(|i| (format!("S{}", i + 1), vec![i], T::lit(b))).collect();
    let inst = SetCoverInstance::new(element_ids, sets, T::one(), T::lit(b))?;
    let w2: Vec<T> = lit_vec(&[0.0, 2.0 * b / 3.0, 2.0 * b / 3.0]);
    let entries = vec![
        (Scenario::new(vec![], w2.clone(), None), T::lit(1.0 - p_a1 - p_a2)),
        (Scenario::new(vec![0, 1, 2], w2.clone(), None), T::lit(p_a1)),
        (Scenario::new(vec![1, 2], w2, None), T::lit(p_a2)),
    ];
    Ok((inst, ExplicitDistribution::new(entries)?))
}

/// Multicut on a path (`star = false`) or star with `k` vertices; scenarios
/// are random pair sets.
pub fn multicut<T: Scalar>(k: usize, star: bool, scenarios: usize, seed: u64) -> Result<(SetCoverInstance<T>, ExplicitDistribution<T>)> {
    if k < 3 || scenarios == 0 {
        return Err(Error::InvalidParameter("multicut needs at least 3 vertices and 1 scenario".into()));
    }
    let mut r = rng::stream(seed, GEN, 1);
    let vertices: Vec<String> = (0..k).map(|v| format!("v{v}")).collect();
    let edges: Vec<(String, String, T)> = (1..k)
        .map(|v| {
            let u = if star { 0 } else { v - 1 };
            (vertices[u].clone(), vertices[v].clone(), T::lit(round2(r.gen_range(1.0..4.0))))
        })
        .collect();
    let tree = Tree { vertices: vertices.clone(), edges };
    let probs = random_probabilities(&mut r, scenarios);
    let leaves: Vec<usize> = if star { (1..k).collect() } else { (0..k).collect() };
    let mut pair_sc = Vec::with_capacity(scenarios);
    for p in probs {
        let mut pairs = Vec::new();
        for _ in 0..r.gen_range(1..=2) {
            let mut pick = leaves.clone();
            pick.shuffle(&mut r);
            pairs.push((vertices[pick[0]].clone(), vertices[pick[1]].clone()));
        }
        let w2 = tree.edges.iter().map(|e| T::lit(round2(e.2.as_f64() * r.gen_range(1.0..2.0)))).collect();
        pair_sc.push(PairScenario { pairs, w2, p: T::lit(p) });
    }
    let budget = T::lit(2.0);
    let (inst, oracle) = reduce_tree_multicut(&tree, &pair_sc, budget)?;
    let dist = oracle.distribution().clone();
    Ok((inst, dist))
}

/// Facilities and clients on an `rows × cols` unit grid with Manhattan
/// distances; every grid point is both a facility and a client.
pub fn fl_grid<T: Scalar>(
    rows: usize,
    cols: usize,
    scenarios: usize,
    seed: u64,
) -> Result<(FacilityLocationInstance<T>, ExplicitDistribution<T>)> {
    if rows == 0 || cols == 0 || scenarios == 0 {
        return Err(Error::InvalidParameter("grid needs positive dimensions".into()));
    }
    let mut r = rng::stream(seed, GEN, 2);
    let pts: Vec<(usize, usize)> = (0..rows).flat_map(|a| (0..cols).map(move |b| (a, b))).collect();
    let n = pts.len();
    let dist = |a: (usize, usize), b: (usize, usize)| (a.0.abs_diff(b.0) + a.1.abs_diff(b.1)) as f64;
    let metric: Vec<Vec<T>> = pts.iter().map(|&a| pts.iter().map(|&b| T::lit(dist(a, b))).collect()).collect();
    let f1: Vec<f64> = (0..n).map(|_| round2(r.gen_range(1.0..4.0))).collect();
    let lambda = 2.0;
    let facilities = (0..n).map(|i| (format!("f{i}"), T::lit(f1[i]))).collect();
    let clients = (0..n).map(|j| format!("c{j}")).collect();
    let budget = T::lit(round2(f1.iter().sum::<f64>() * 0.5));
    let inst = FacilityLocationInstance::new(facilities, clients, metric, T::lit(lambda), FlBudgets::total_only(budget))?;
    let probs = random_probabilities(&mut r, scenarios);
    let entries = probs
        .into_iter()
        .map(|p| {
            let active: Vec<usize> = (0..n).filter(|_| r.gen_bool(0.5)).collect();
            let w2: Vec<T> = f1.iter().map(|&f| T::lit(round2(f * r.gen_range(1.0..lambda)))).collect();
            (Scenario::new(active, w2, None), T::lit(p))
        })
        .collect();
    Ok((inst, ExplicitDistribution::new(entries)?))
}

/// Tosses needed to tell `q ≤ ϱ` from `q > 2ϱ` with error `δ`:
/// `ln(1/δ − 1)/(4ϱ)`.
pub fn coin_threshold(varrho: f64, delta: f64) -> f64 {
    (1.0 / delta - 1.0).ln() / (4.0 * varrho)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoinRow {
    pub tosses: usize,
    /// Error on `q = 0` (always zero for the zero-heads rule).
    pub error_low: f64,
    /// Error on `q = 2ϱ + ξ`.
    pub error_high: f64,
}

impl CoinRow {
    pub fn worst(&self) -> f64 {
        self.error_low.max(self.error_high)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoinTable {
    pub varrho: f64,
    pub delta: f64,
    pub threshold: f64,
    /// `⌈threshold⌉`.
    pub threshold_tosses: usize,
    pub rows: Vec<CoinRow>,
}

/// Measures the zero-heads rule ("answer `q ≤ ϱ` iff no toss lands heads")
/// on the arms `q = 0` and `q = 2ϱ + ξ`.
pub fn coin_experiment(varrho: f64, delta: f64, xi: f64, trials: usize, tosses: &[usize], seed: u64) -> Result<CoinTable> {
    if !(varrho > 0.0 && varrho < 0.25) || !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidParameter("need 0 < varrho < 1/4 and 0 < delta < 1/2".into()));
    }
    let q_high = 2.0 * varrho + xi;
    if !(xi > 0.0 && q_high < 1.0) || trials == 0 {
        return Err(Error::InvalidParameter("need xi > 0 and trials > 0".into()));
    }
    let threshold = coin_threshold(varrho, delta);
    let rows = tosses
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let mut r = rng::stream(seed, rng::ORACLE, k as u64);
            let mut arm = |q: f64| {
                let wrong = (0..trials)
                    .filter(|_| {
                        let heads = (0..n).filter(|_| r.gen_bool(q)).count();
                        // says "q ≤ ϱ" iff no heads
                        if q <= varrho { heads > 0 } else { heads == 0 }
                    })
                    .count();
                wrong as f64 / trials as f64
            };
            let error_low = arm(0.0);
            let error_high = arm(q_high);
            CoinRow { tosses: n, error_low, error_high }
        })
        .collect();
    Ok(CoinTable { varrho, delta, threshold, threshold_tosses: threshold.ceil() as usize, rows })
}

#[derive(Debug, Clone)]
pub struct LbArm<T> {
    pub p_a2: f64,
    pub report: RiskReport<T>,
    /// `x_{S1} + x_{S2} + x_{S3}`.
    pub total: T,
    /// `x_{S2} + x_{S3}`.
    pub pair: T,
}

#[derive(Debug, Clone)]
pub struct LbDemo<T> {
    pub low: LbArm<T>,
    pub high: LbArm<T>,
    /// Sampled runs on the `p_{A2} = 3ρκ` arm whose output looks like the
    /// `p_{A2} = 0` arm's (`x_{S2} + x_{S3} < 1/2`), out of `trials`.
    pub confusion: Option<f64>,
    pub trials: usize,
}

fn lb_arm<T: Scalar>(b: f64, params: &RiskParams<T>, p_a2: f64, seed: u64) -> Result<LbArm<T>> {
    let (inst, dist) = lb1::<T>(b, params.rho.as_f64(), additive_kappa(params), p_a2)?;
    let model = BudgetedCover { inst: &inst, budget: inst.budget };
    let oracle = ExplicitOracle::new(dist);
    let p = RiskParams { budget: inst.budget, sample_mode: SampleMode::FullSupport, ..*params };
    let report = risk_alg(&model, &oracle, &p, cover_ub(&inst, &p), seed)?;
    let total = report.x.iter().copied().sum();
    let pair = report.x[1] + report.x[2];
    Ok(LbArm { p_a2, report, total, pair })
}

/// The instance's threshold slack `κ` is additive; the search allows
/// `ρ(1+κ)`, i.e. an additive `ρκ`.
fn additive_kappa<T: Scalar>(params: &RiskParams<T>) -> f64 {
    params.rho.as_f64() * params.kappa.as_f64()
}

fn dist_key<T: Scalar>(d: &ExplicitDistribution<T>) -> Vec<(ScenarioKey, u64)> {
    d.entries().iter().map(|(s, p)| (s.key(), p.as_f64().to_bits())).collect()
}

/// Runs the search in full-support mode on both LB1 arms (`p_{A2} = 0` and
/// `p_{A2} = 3ρκ`). When `sample_budget` is given, also measures over
/// `trials` sampled runs with that many scenarios how often the `3ρκ` arm is
/// mistaken for the `0` arm.
pub fn lower_bound_demo<T: Scalar>(
    b: f64,
    params: &RiskParams<T>,
    sample_budget: Option<usize>,
    trials: usize,
    seed: u64,
) -> Result<LbDemo<T>> {
    let kappa = additive_kappa(params);
    let low = lb_arm(b, params, 0.0, seed)?;
    let high = lb_arm(b, params, 3.0 * kappa, seed)?;
    let confusion = match sample_budget {
        None => None,
        Some(n) => {
            let (inst, dist) = lb1::<T>(b, params.rho.as_f64(), kappa, 3.0 * kappa)?;
            let model = BudgetedCover { inst: &inst, budget: inst.budget };
            let oracle = ExplicitOracle::new(dist);
            let p = RiskParams { budget: inst.budget, sample_mode: SampleMode::Capped(n), ..*params };
            let ub = cover_ub(&inst, &p);
            let (n_saa, n_est) = sample_sizes(&model, &p, ub)?;
            // outputs depend only on the drawn scenario sets, so repeated
            // sets are solved once
            let mut memo: HashMap<(Vec<(ScenarioKey, u64)>, Vec<(ScenarioKey, u64)>), bool> = HashMap::new();
            let mut confused = 0usize;
            for t in 0..trials {
                let mut r1 = rng::stream(seed, rng::SAA, 100 + t as u64);
                let mut r2 = rng::stream(seed, rng::ESTIMATE, 100 + t as u64);
                let saa = ExplicitDistribution::empirical(&(0..n_saa).map(|_| oracle.draw(&mut r1)).collect::<Vec<_>>())?;
                let est = ExplicitDistribution::empirical(&(0..n_est).map(|_| oracle.draw(&mut r2)).collect::<Vec<_>>())?;
                let key = (dist_key(&saa), dist_key(&est));
                let looks_low = match memo.get(&key) {
                    Some(&v) => v,
                    None => {
                        let v = match risk_alg_on(&model, &saa, &est, &p, ub) {
                            Ok(rep) => rep.x[1] + rep.x[2] < T::half(),
                            // a failed run produces no separating answer either
                            Err(_) => true,
                        };
                        memo.insert(key, v);
                        v
                    }
                };
                confused += usize::from(looks_low);
            }
            Some(confused as f64 / trials.max(1) as f64)
        }
    };
    Ok(LbDemo { low, high, confusion, trials })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lb1_weights() {
        let (inst, dist) = lb1::<f64>(12.0, 0.1, 0.2, 0.0).unwrap();
        assert_eq!(inst.w1, vec![12.0; 3]);
        assert_eq!(dist.entries()[0].0.w2, vec![0.0, 8.0, 8.0]);
    }

    #[test]
    fn coin_threshold_value() {
        let t = coin_threshold(0.05, 0.25);
        assert!((t - 3f64.ln() / 0.2).abs() < 1e-12);
        assert_eq!(t.ceil() as usize, 6);
    }

    #[test]
    fn generators_are_deterministic() {
        let a = random_set_cover::<f64>(6, 5, 4, 1).unwrap();
        let b = random_set_cover::<f64>(6, 5, 4, 1).unwrap();
        assert_eq!(a.0.members, b.0.members);
        assert_eq!(a.1, b.1);
    }
}
