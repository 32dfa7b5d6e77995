//! Continuous-time simulation of the lattice gas with reservoirs, optionally
//! driven by an extra space-time field, and the pathwise likelihood ratio of
//! the driven dynamics against the undriven one.

mod density;
mod entropy;
mod lattice;
mod rates;
mod rn;
mod sim;

pub use density::{empirical_density, empirical_density_of};
pub use entropy::{estimate_entropy_rate, estimate_entropy_with_density, run_replicas, worker_pool, EntropyEstimate, WORKERS_ENV};
pub use lattice::{Event, LatticeConfig, Side, TrajectoryLog};
pub use rates::{event_rates, RateTable, TiltSpec};
pub use rn::{log_rn_derivative, RnAccumulator};
pub use sim::{
    replica_rng, simulate, simulate_with, LogRecorder, Observer, OccupationAverager, SimStats,
    SnapshotRecorder,
};
