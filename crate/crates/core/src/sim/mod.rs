//! Slot-level simulator of the access protocol with an energy-harvesting
//! primary.

mod run;
mod step;

pub use run::{
    replication_rng, run, saturated_service_rates, stability_probe, Counters, Estimate,
    ReplicationStats, ServiceEstimate, SimConfig, SimReport, TrajectoryPoint, DEFAULT_BURN_IN,
    DEFAULT_HORIZON, DEFAULT_REPLICATIONS, QUEUE_CAP_FACTOR, SLOPE_THRESHOLD, STATISTICS,
};
pub use step::{step, SimMode, SlotDraws, SlotEvents, SystemState};
