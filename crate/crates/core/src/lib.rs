pub mod error;
pub mod exact_oracle;
pub mod facility;
pub mod harness;
pub mod model;
pub mod risk_search;
pub mod robust;
pub mod rounding;
pub mod saa;
pub mod scalar;
pub mod scenario_lp;
pub mod simplex;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SetCoverInstance = model::SetCoverInstance<f64>;
pub type FacilityLocationInstance = model::FacilityLocationInstance<f64>;
pub type Scenario = model::Scenario<f64>;
pub type ExplicitDistribution = model::ExplicitDistribution<f64>;
pub type RiskParams = model::RiskParams<f64>;
pub type RiskReport = risk_search::RiskReport<f64>;
pub type LpProblem = simplex::LpProblem<f64>;
