use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One realised second stage: the active elements (or clients), a stage-II
/// cost per first-stage action, and an optional scenario-specific budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub active: Vec<usize>,
    pub w2: Vec<T>,
    pub budget: Option<T>,
}

/// Identity used for frequency counting and canonical ordering.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScenarioKey {
    active: Vec<usize>,
    w2: Vec<u64>,
    budget: Option<u64>,
}

impl<T: Scalar> Scenario<T> {
    pub fn new(mut active: Vec<usize>, w2: Vec<T>, budget: Option<T>) -> Self {
        active.sort_unstable();
        active.dedup();
        Self { active, w2, budget }
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn key(&self) -> ScenarioKey {
        ScenarioKey {
            active: self.active.clone(),
            w2: self.w2.iter().map(|v| v.as_f64().to_bits()).collect(),
            budget: self.budget.map(|b| b.as_f64().to_bits()),
        }
    }

    pub fn budget_or(&self, default: T) -> T {
        self.budget.unwrap_or(default)
    }
}

/// Finite distribution over scenarios, kept in canonical key order with
/// duplicate scenarios merged.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitDistribution<T> {
    entries: Vec<(Scenario<T>, T)>,
}

impl<T: Scalar> ExplicitDistribution<T> {
    pub fn new(entries: Vec<(Scenario<T>, T)>) -> Result<Self> {
        let mut total = T::zero();
        for (_, p) in &entries {
            if !(p.is_finite() && *p >= T::zero()) {
                return Err(Error::InvalidParameter(format!("scenario probability {p} is not a nonnegative number")));
            }
            total += *p;
        }
        if (total - T::one()).abs() > T::PROB_SUM_TOL {
            return Err(Error::ProbabilitySum(total.as_f64()));
        }
        let mut merged: BTreeMap<ScenarioKey, (Scenario<T>, T)> = BTreeMap::new();
        for (s, p) in entries {
            merged.entry(s.key()).and_modify(|e| e.1 += p).or_insert((s, p));
        }
        Ok(Self { entries: merged.into_values().collect() })
    }

    pub fn point_mass(s: Scenario<T>) -> Self {
        Self { entries: vec![(s, T::one())] }
    }

    /// Entries in canonical order.
    pub fn entries(&self) -> &[(Scenario<T>, T)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Frequencies of the samples, keyed by scenario identity.
    pub fn empirical(samples: &[Scenario<T>]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidParameter("empirical distribution of zero samples".into()));
        }
        let mut counts: BTreeMap<ScenarioKey, (&Scenario<T>, usize)> = BTreeMap::new();
        for s in samples {
            counts.entry(s.key()).and_modify(|e| e.1 += 1).or_insert((s, 1));
        }
        let n = T::from_count(samples.len());
        let entries = counts.into_values().map(|(s, c)| (s.clone(), T::from_count(c) / n)).collect();
        Ok(Self { entries })
    }

    /// Probability mass of the scenarios satisfying `pred`.
    pub fn mass(&self, mut pred: impl FnMut(&Scenario<T>) -> bool) -> T {
        self.entries.iter().filter(|(s, _)| pred(s)).map(|(_, p)| *p).sum()
    }
}
