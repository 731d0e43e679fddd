//! Configuration, sweeps, validation campaigns and the artifacts written by
//! the `cogstab` binary.

pub mod cli;
pub mod config;
pub mod svg;
pub mod sweep;
pub mod validate;

pub use config::Settings;
pub use sweep::{write_sweep_csv, SweepParam, SweepRow, SweepSpec};
pub use validate::{
    run_suite, CampaignOptions, Suite, ValidationRecord, ValidationReport, EXACT_ABS_TOL,
    STAT_ABS_TOL,
};
