//! Optimal distributed coded TTL caching for small-cell networks.

pub mod coverage;
pub mod demand;
pub mod error;
pub mod figures;
pub mod lp;
pub mod mds;
pub mod planner;
pub mod scenario;
pub mod simulator;
mod quadrature;

pub use coverage::{CoverageDistribution, NetworkGeometry, PiecewiseLinear};
pub use demand::{Catalog, DemandTables, InterRequestDistribution, TimeGrid};
pub use figures::{FigureData, FigureId};
pub use mds::{derive_code_params, policy_code_params, quantize_policy_row, CodeParams};
pub use error::{Error, Result};
pub use planner::{
    evaluate_loads, CachingMode, CachingPolicy, CostModel, Instance, LoadBreakdown, Planner, PlannerOptions,
    SolveReport, SolverStatus, StepModel,
};
pub use scenario::Scenario;
pub use simulator::{CoverageMode, SimConfig, SimResult, UpdateMode};
