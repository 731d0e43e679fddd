//! Average service rates of the two dominant systems.
//!
//! In the first dominant system the secondary always occupies the channel
//! (dummy packets when its queue is empty); in the second the primary
//! always transmits while its battery is nonempty. `beta` below is the
//! battery occupancy of a saturated primary.

use crate::error::{Error, Result};
use crate::model::{ChannelModel, EnergyModel};

/// Expected primary successes per active slot when the secondary joins with
/// probability `p`.
pub fn primary_success_per_active_slot(channel: &ChannelModel, p: f64) -> f64 {
    channel.q112() * p + channel.q11() * (1.0 - p)
}

/// Primary service rate with a saturated secondary:
/// `beta (q112 p + q11 (1 - p))`.
pub fn mu1_dominant1(channel: &ChannelModel, energy: &EnergyModel, p: f64) -> f64 {
    energy.battery_nonempty_prob() * primary_success_per_active_slot(channel, p)
}

/// Long-run fraction of slots in which the primary is active, given that its
/// queue is stable under arrival rate `lambda1`.
pub fn dominant1_active_fraction(channel: &ChannelModel, p: f64, lambda1: f64) -> f64 {
    if lambda1 == 0.0 {
        return 0.0;
    }
    lambda1 / primary_success_per_active_slot(channel, p)
}

/// Secondary service rate in the first dominant system, without the
/// primary-stability precondition. This is the achievable `lambda2` bound for
/// a fixed `p`.
pub fn secondary_bound_dominant1(channel: &ChannelModel, p: f64, lambda1: f64) -> f64 {
    if lambda1 == 0.0 {
        return channel.q22();
    }
    let slope = (channel.q212() * p - channel.q22()) / primary_success_per_active_slot(channel, p);
    slope * lambda1 + channel.q22()
}

/// Secondary service rate in the first dominant system,
/// `(q212 p - q22) / (q112 p + q11 (1 - p)) * lambda1 + q22`.
///
/// Only meaningful while the primary queue is stable, i.e.
/// `lambda1 < mu1_dominant1`. A zero arrival rate is always admitted.
pub fn mu2_dominant1(
    channel: &ChannelModel,
    energy: &EnergyModel,
    p: f64,
    lambda1: f64,
) -> Result<f64> {
    let mu1 = mu1_dominant1(channel, energy, p);
    if !(lambda1 >= 0.0) || (lambda1 > 0.0 && lambda1 >= mu1) {
        return Err(Error::PreconditionViolated(format!(
            "lambda1 = {lambda1} must be below the primary service rate {mu1}"
        )));
    }
    Ok(secondary_bound_dominant1(channel, p, lambda1))
}

/// Secondary service rate with a saturated primary:
/// `q22 (1 - beta) + q212 beta p`.
pub fn mu2_dominant2(channel: &ChannelModel, energy: &EnergyModel, p: f64) -> f64 {
    channel.q22() * energy.battery_empty_prob()
        + channel.q212() * energy.battery_nonempty_prob() * p
}

/// Primary service rate in the second dominant system without the
/// secondary-stability precondition.
pub fn primary_bound_dominant2(
    channel: &ChannelModel,
    energy: &EnergyModel,
    p: f64,
    lambda2: f64,
) -> f64 {
    let beta = energy.battery_nonempty_prob();
    if lambda2 == 0.0 {
        return beta * channel.q11();
    }
    let slope = beta * p * (channel.q112() - channel.q11()) / mu2_dominant2(channel, energy, p);
    slope * lambda2 + beta * channel.q11()
}

/// Primary service rate in the second dominant system,
/// `beta p (q112 - q11) / ((1 - beta) q22 + beta p q212) * lambda2 + beta q11`.
///
/// Requires `lambda2 < mu2_dominant2` (zero always admitted).
pub fn mu1_dominant2(
    channel: &ChannelModel,
    energy: &EnergyModel,
    p: f64,
    lambda2: f64,
) -> Result<f64> {
    let mu2 = mu2_dominant2(channel, energy, p);
    if !(lambda2 >= 0.0) || (lambda2 > 0.0 && lambda2 >= mu2) {
        return Err(Error::PreconditionViolated(format!(
            "lambda2 = {lambda2} must be below the secondary service rate {mu2}"
        )));
    }
    Ok(primary_bound_dominant2(channel, energy, p, lambda2))
}
