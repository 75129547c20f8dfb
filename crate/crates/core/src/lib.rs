//! Nearest-neighbor rendezvous for mobile agent swarms.
//!
//! Agents pick neighbors through a priority buffer that demotes agents already
//! within `epsilon` of them, follow the resulting single-integrator guidance,
//! and (for vehicles with real dynamics) convert that guidance into control
//! using only their own state.

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod guidance;
pub mod harness;
pub mod neighbors;

pub use error::{Error, Result};
pub use geometry::{centroid, group_diameter, pairwise_distances, DistanceMatrix, Point};
pub mod engine;
pub mod metrics;
pub mod scenario;
pub mod trace;

pub use engine::{run, run_metrics, run_with, DelayBuffer, RunOptions, Simulation};
pub use metrics::{MetricsSeries, RunSummary};
pub use scenario::{InitRule, ScenarioConfig};
pub use trace::{SimTrace, TraceSink};
