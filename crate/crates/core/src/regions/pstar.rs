//! Optimal secondary access probability on the region frontier, plus the
//! brute-force grid search used to check it.

use crate::error::{Error, Result};
use crate::model::{ChannelModel, EnergyModel};

use super::rates::{
    mu1_dominant1, mu2_dominant2, primary_bound_dominant2, secondary_bound_dominant1,
};
use super::region::SubregionKind;

/// Access probability achieving the frontier, tagged with the subregion
/// whose boundary it traces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PStar {
    pub value: f64,
    pub branch: SubregionKind,
}

/// `p*` maximizing the admissible secondary rate at primary rate `lambda1`.
pub fn optimal_p(channel: &ChannelModel, energy: &EnergyModel, lambda1: f64) -> Result<PStar> {
    let beta = energy.battery_nonempty_prob();
    let extent = beta * channel.q11();
    if !(lambda1 >= 0.0) || (lambda1 > 0.0 && lambda1 >= extent) {
        return Err(Error::OutOfRegion {
            rate: lambda1,
            extent,
        });
    }
    if channel.is_collision() {
        return Ok(PStar {
            value: 0.0,
            branch: SubregionKind::CollisionR1,
        });
    }
    if !channel.eta_positive() {
        return Ok(PStar {
            value: 0.0,
            branch: SubregionKind::R1EtaNonPositive,
        });
    }
    // A zero delta1 makes the interior branch empty: extent == beta q112.
    if lambda1 <= beta * channel.q112() || channel.delta1() == 0.0 {
        return Ok(PStar {
            value: 1.0,
            branch: SubregionKind::R1Prime,
        });
    }
    let p = (extent - lambda1) / (beta * channel.delta1());
    Ok(PStar {
        value: p.clamp(0.0, 1.0),
        branch: SubregionKind::R1DoublePrime,
    })
}

/// `p*` maximizing the admissible primary rate at secondary rate `lambda2`.
pub fn optimal_p_secondary_axis(
    channel: &ChannelModel,
    energy: &EnergyModel,
    lambda2: f64,
) -> Result<PStar> {
    let beta = energy.battery_nonempty_prob();
    let idle_share = energy.battery_empty_prob() * channel.q22();
    let extent = idle_share + beta * channel.q212();
    if !(lambda2 >= 0.0) || (lambda2 > 0.0 && lambda2 >= extent) {
        return Err(Error::OutOfRegion {
            rate: lambda2,
            extent,
        });
    }
    let flat = if channel.is_collision() {
        SubregionKind::CollisionR2
    } else {
        SubregionKind::R2Prime
    };
    if lambda2 <= idle_share {
        return Ok(PStar {
            value: 0.0,
            branch: flat,
        });
    }
    if channel.q212() == 0.0 || beta == 0.0 {
        return Err(Error::DegenerateChannel(
            "interior secondary-axis branch needs q212 > 0 and a chargeable battery",
        ));
    }
    let p = (lambda2 - idle_share) / (beta * channel.q212());
    Ok(PStar {
        value: p.clamp(0.0, 1.0),
        branch: SubregionKind::R2DoublePrime,
    })
}

/// Best grid point found by [`grid_pstar_oracle`] and its sibling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptimum {
    pub p: f64,
    pub bound: f64,
}

fn grid(points: usize) -> impl Iterator<Item = f64> {
    let last = (points - 1) as f64;
    (0..points).map(move |k| k as f64 / last)
}

fn check_grid(points: usize) -> Result<()> {
    if points < 2 {
        return Err(Error::InvalidParameter {
            name: "p_grid_size",
            value: points as f64,
            reason: "grid needs at least two points",
        });
    }
    Ok(())
}

/// Exhaustive search over `p in {0, 1/(g-1), ..., 1}` for the largest
/// secondary service rate at primary rate `lambda1`, restricted to `p` that
/// keep the primary queue stable. Ties keep the smallest `p`.
pub fn grid_pstar_oracle(
    channel: &ChannelModel,
    energy: &EnergyModel,
    lambda1: f64,
    p_grid_size: usize,
) -> Result<GridOptimum> {
    check_grid(p_grid_size)?;
    let extent = energy.battery_nonempty_prob() * channel.q11();
    if !(lambda1 >= 0.0) || (lambda1 > 0.0 && lambda1 >= extent) {
        return Err(Error::OutOfRegion {
            rate: lambda1,
            extent,
        });
    }
    let mut best: Option<GridOptimum> = None;
    for p in grid(p_grid_size) {
        if lambda1 > 0.0 && lambda1 >= mu1_dominant1(channel, energy, p) {
            continue;
        }
        let bound = secondary_bound_dominant1(channel, p, lambda1);
        if best.map_or(true, |b| bound > b.bound) {
            best = Some(GridOptimum { p, bound });
        }
    }
    // p = 0 is always feasible below the extent
    Ok(best.expect("p = 0 admits every lambda1 below the extent"))
}

/// Secondary-axis counterpart of [`grid_pstar_oracle`]: maximizes the
/// primary service rate at secondary rate `lambda2` over `p` that keep the
/// secondary queue stable.
pub fn grid_pstar_oracle_secondary_axis(
    channel: &ChannelModel,
    energy: &EnergyModel,
    lambda2: f64,
    p_grid_size: usize,
) -> Result<GridOptimum> {
    check_grid(p_grid_size)?;
    let extent = mu2_dominant2(channel, energy, 1.0);
    if !(lambda2 >= 0.0) || (lambda2 > 0.0 && lambda2 >= extent) {
        return Err(Error::OutOfRegion {
            rate: lambda2,
            extent,
        });
    }
    let mut best: Option<GridOptimum> = None;
    for p in grid(p_grid_size) {
        if lambda2 > 0.0 && lambda2 >= mu2_dominant2(channel, energy, p) {
            continue;
        }
        let bound = primary_bound_dominant2(channel, energy, p, lambda2);
        if best.map_or(true, |b| bound > b.bound) {
            best = Some(GridOptimum { p, bound });
        }
    }
    // p = 1 is feasible whenever lambda2 is below the extent
    Ok(best.expect("p = 1 admits every lambda2 below the extent"))
}
