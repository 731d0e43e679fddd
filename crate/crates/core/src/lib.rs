//! Stability regions and optimal secondary access for a two-pair cognitive
//! shared channel whose primary transmitter runs on harvested energy.
//!
//! [`regions`] holds the closed forms, [`sim`] a slotted simulator of the
//! same access protocol, and [`harness`] the validation campaigns and
//! artifact writers behind the `cogstab` binary.

pub mod error;
pub mod harness;
pub mod model;
pub mod regions;
pub mod sim;

pub use error::{Error, Result};
pub use model::{AccessPolicy, ArrivalRates, Capacity, ChannelModel, EnergyModel, Scenario};
