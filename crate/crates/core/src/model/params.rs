use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// How many scenarios the sample-average step draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    /// The worst-case count from the sample-size formula.
    Theory,
    /// The formula's count, capped.
    Capped(usize),
    /// No sampling: the empirical distribution is the explicit support.
    FullSupport,
}

impl Default for SampleMode {
    fn default() -> Self {
        SampleMode::Capped(5000)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RiskParams<T> {
    pub budget: T,
    pub rho: T,
    pub eps: T,
    pub gamma: T,
    pub kappa: T,
    pub delta: T,
    pub sample_mode: SampleMode,
}

impl<T: Scalar> RiskParams<T> {
    pub fn new(budget: T, rho: T, eps: T, gamma: T, kappa: T) -> Self {
        Self { budget, rho, eps, gamma, kappa, delta: T::lit(0.1), sample_mode: SampleMode::default() }
    }

    pub fn with_delta(mut self, delta: T) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_samples(mut self, mode: SampleMode) -> Self {
        self.sample_mode = mode;
        self
    }

    /// `ρ = 1` is accepted as the boundary case where the probabilistic
    /// constraint is vacuous; otherwise `ρ(1+κ) < 1` is required.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        let zero = T::zero();
        let one = T::one();
        if !(self.budget >= zero) {
            return bad("budget must be nonnegative");
        }
        if !(self.rho > zero && self.rho <= one) {
            return bad("rho must lie in (0, 1]");
        }
        if !(self.eps > zero && self.gamma > zero && self.kappa > zero) {
            return bad("eps, gamma and kappa must be positive");
        }
        if !(self.eps <= self.kappa && self.kappa < one) {
            return bad("need eps <= kappa < 1");
        }
        if self.rho < one && !(self.rho * (one + self.kappa) < one) {
            return bad("need rho (1 + kappa) < 1");
        }
        if !(self.delta > zero && self.delta < T::half()) {
            return bad("delta must lie in (0, 1/2)");
        }
        if let SampleMode::Capped(0) = self.sample_mode {
            return bad("sample cap must be positive");
        }
        Ok(())
    }
}
