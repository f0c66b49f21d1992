use rand::Rng as _;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::instance::{check_scenario, FirstStage};
use super::rng::{self, Rng};
use super::scenario::{ExplicitDistribution, Scenario};

/// Sampling access to a scenario distribution.
pub trait ScenarioOracle<T>: Send + Sync {
    fn draw(&self, rng: &mut Rng) -> Scenario<T>;

    /// The full support, when the distribution is explicitly known.
    fn support(&self) -> Option<&ExplicitDistribution<T>> {
        None
    }
}

/// Draws one scenario and checks it against the instance.
pub fn draw_scenario<T: Scalar, I: FirstStage<T> + ?Sized>(
    inst: &I,
    oracle: &dyn ScenarioOracle<T>,
    rng: &mut Rng,
) -> Result<Scenario<T>> {
    let s = oracle.draw(rng);
    check_scenario(inst, &s)?;
    Ok(s)
}

/// Draws `n` scenarios from one stream.
pub fn draw_many<T: Scalar, I: FirstStage<T> + ?Sized>(
    inst: &I,
    oracle: &dyn ScenarioOracle<T>,
    n: usize,
    rng: &mut Rng,
) -> Result<Vec<Scenario<T>>> {
    (0..n).map(|_| draw_scenario(inst, oracle, rng)).collect()
}

#[derive(Debug, Clone)]
pub struct ExplicitOracle<T> {
    dist: ExplicitDistribution<T>,
    cumulative: Vec<f64>,
}

impl<T: Scalar> ExplicitOracle<T> {
    pub fn new(dist: ExplicitDistribution<T>) -> Self {
        let mut acc = 0.0;
        let cumulative = dist
            .entries()
            .iter()
            .map(|(_, p)| {
                acc += p.as_f64();
                acc
            })
            .collect();
        Self { dist, cumulative }
    }

    pub fn distribution(&self) -> &ExplicitDistribution<T> {
        &self.dist
    }
}

impl<T: Scalar> ScenarioOracle<T> for ExplicitOracle<T> {
    fn draw(&self, rng: &mut Rng) -> Scenario<T> {
        let total = *self.cumulative.last().unwrap_or(&1.0);
        let u: f64 = rng.gen::<f64>() * total;
        let k = self.cumulative.partition_point(|&c| c <= u);
        // zero-probability entries can never be hit because their cumulative
        // value equals the previous one
        let k = k.min(self.cumulative.len() - 1);
        self.dist.entries()[k].0.clone()
    }

    fn support(&self) -> Option<&ExplicitDistribution<T>> {
        Some(&self.dist)
    }
}

/// Each demand point activates independently with its own probability;
/// stage-II costs are fixed multiples of the stage-I costs, the multipliers
/// drawn once from the generator seed.
#[derive(Debug, Clone)]
pub struct IndependentActivation<T> {
    pub q: Vec<f64>,
    pub w2: Vec<T>,
    support: Option<ExplicitDistribution<T>>,
}

/// Largest demand count whose product support is enumerated.
const ENUMERABLE: usize = 10;

impl<T: Scalar> IndependentActivation<T> {
    pub fn new(q: Vec<f64>, w1: &[T], max_factor: f64, seed: u64) -> Result<Self> {
        if q.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidParameter("activation probabilities must lie in [0,1]".into()));
        }
        if !(max_factor >= 1.0) {
            return Err(Error::InvalidParameter("stage-II cost factor must be at least 1".into()));
        }
        let mut r = rng::stream(seed, rng::ORACLE, 0);
        let w2: Vec<T> = w1
            .iter()
            .map(|&w| {
                let f = if max_factor > 1.0 { r.gen_range(1.0..=max_factor) } else { 1.0 };
                w * T::lit(f)
            })
            .collect();
        let support = if q.len() <= ENUMERABLE { Some(Self::enumerate(&q, &w2)?) } else { None };
        Ok(Self { q, w2, support })
    }

    fn enumerate(q: &[f64], w2: &[T]) -> Result<ExplicitDistribution<T>> {
        let n = q.len();
        let mut entries = Vec::with_capacity(1 << n);
        for mask in 0u32..(1u32 << n) {
            let mut p = 1.0;
            let mut active = Vec::new();
            for (e, &qe) in q.iter().enumerate() {
                if mask >> e & 1 == 1 {
                    p *= qe;
                    active.push(e);
                } else {
                    p *= 1.0 - qe;
                }
            }
            entries.push((Scenario::new(active, w2.to_vec(), None), T::lit(p)));
        }
        // products of n factors may drift from 1 by a few ulps
        let total: T = entries.iter().map(|(_, p)| *p).sum();
        for e in &mut entries {
            e.1 /= total;
        }
        ExplicitDistribution::new(entries)
    }
}

impl<T: Scalar> ScenarioOracle<T> for IndependentActivation<T> {
    fn draw(&self, rng: &mut Rng) -> Scenario<T> {
        let active = self.q.iter().enumerate().filter(|(_, &p)| rng.gen::<f64>() < p).map(|(e, _)| e).collect();
        Scenario::new(active, self.w2.clone(), None)
    }

    fn support(&self) -> Option<&ExplicitDistribution<T>> {
        self.support.as_ref()
    }
}
