//! Hybrid compartment-membrane model of foliar pesticide uptake.
//!
//! A spray droplet and the leaf tissue are well-mixed compartments separated
//! by the cuticle, where transport is resolved in depth. Two compounds are
//! tracked: an adjuvant diffusing with a constant coefficient, and an active
//! ingredient whose coefficient saturates with the local adjuvant density.

// `!(x > 0.0)` is how inputs are checked throughout: it rejects NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod data;
pub mod empirical;
pub mod error;
pub mod estimation;
pub mod model;
pub mod solver;
pub mod steady;
pub mod sweep;

pub use config::RunConfig;
pub use data::{band_at, load_dataset, write_dataset, DatasetSeries, Row};
pub use error::{Error, Result};
pub use estimation::{estimate_all, CompoundEstimate, EstimateWithRange};
pub use model::{
    derive_geometry, eval_diffusion, Compartment, Compound, CompoundParams, DiffusionModel, Geometry, SimState,
};
pub use solver::{flux_in, flux_out, simulate, Mesh, Percentages, Simulation, Snapshot, SolverConfig, Trajectory};
pub use steady::{steady_state, steady_state_sweep, SteadyRow, SteadyState, SweepVariable};
pub use sweep::{run_sweep, summarize_region, Bands, Execution, RegionReport, SweepResult};
