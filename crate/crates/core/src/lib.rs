//! Simulation and verification of the distances between local maxima of
//! MA(q) error terms.
//!
//! The crate is split along the pipeline:
//!
//! * [`process`] generates innovations `ε_i` and the windowed sums
//!   `ξ_i = ε_i + ε_{i-1} + … + ε_{i-q}` as reproducible, seedable streams.
//! * [`extrema`] detects strict local maxima and emits inter-peak distances.
//! * [`analytic`] holds the closed-form distance law `Pr[d] = (d-1)/2^d`
//!   together with an enumeration oracle and a Monte Carlo oracle.
//! * [`stats`] aggregates distances into mergeable histograms and compares
//!   them with the closed form.
//! * [`simulation`] wires the above into parallel multi-stream runs.

pub mod analytic;
pub mod error;
pub mod extrema;
pub mod process;
pub mod simulation;
pub mod stats;

mod dyadic;
mod special;

pub use analytic::AnalyticModel;
pub use dyadic::Dyadic;
pub use error::{Error, Result};
pub use extrema::{distances_of, is_peak, DistanceRecord, PeakDetector};
pub use process::{spawn_stream, InnovationDistribution, MaProcessState, SimulationConfig, StreamRng};
pub use simulation::{run, run_stream, SimulationOutcome, StreamOutcome};
pub use stats::{ChiSquareResult, ComparisonReport, DistanceHistogram, Moments, RunMetadata};
