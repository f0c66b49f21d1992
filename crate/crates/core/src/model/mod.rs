//! Instances, scenarios, distributions and sampling oracles.

pub mod document;
mod instance;
mod oracle;
mod params;
pub mod reductions;
pub mod rng;
mod scenario;

pub use document::{load_instance, Instance, Loaded};
pub use instance::{check_scenario, FacilityLocationInstance, FirstStage, FlBudgets, SetCoverInstance};
pub use oracle::{draw_many, draw_scenario, ExplicitOracle, IndependentActivation, ScenarioOracle};
pub use params::{RiskParams, SampleMode};
pub use scenario::{ExplicitDistribution, Scenario, ScenarioKey};
