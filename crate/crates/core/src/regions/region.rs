use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{ChannelModel, EnergyModel};

/// Labels of the subregions whose union forms the stability region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubregionKind {
    /// `p* = 1` part of the primary-rate parameterization (`eta > 0`).
    R1Prime,
    /// Interior `p*` part of the primary-rate parameterization (`eta > 0`).
    R1DoublePrime,
    /// Primary-rate parameterization when `eta <= 0` (`p* = 0`).
    R1EtaNonPositive,
    /// `p* = 0` part of the secondary-rate parameterization.
    R2Prime,
    /// Interior `p*` part of the secondary-rate parameterization.
    R2DoublePrime,
    CollisionR1,
    CollisionR2,
}

impl SubregionKind {
    pub const ALL: [SubregionKind; 7] = [
        SubregionKind::R1Prime,
        SubregionKind::R1DoublePrime,
        SubregionKind::R1EtaNonPositive,
        SubregionKind::R2Prime,
        SubregionKind::R2DoublePrime,
        SubregionKind::CollisionR1,
        SubregionKind::CollisionR2,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            SubregionKind::R1Prime => "R1'",
            SubregionKind::R1DoublePrime => "R1''",
            SubregionKind::R1EtaNonPositive => "R1_eta_le_0",
            SubregionKind::R2Prime => "R2'",
            SubregionKind::R2DoublePrime => "R2''",
            SubregionKind::CollisionR1 => "collision_R1",
            SubregionKind::CollisionR2 => "collision_R2",
        }
    }

    /// Belongs to the part of the region parameterized by `lambda1`.
    pub fn is_primary_axis(&self) -> bool {
        matches!(
            self,
            SubregionKind::R1Prime
                | SubregionKind::R1DoublePrime
                | SubregionKind::R1EtaNonPositive
                | SubregionKind::CollisionR1
        )
    }
}

impl fmt::Display for SubregionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SubregionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SubregionKind::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown subregion label {s:?}")))
    }
}

/// Interval on one arrival-rate axis. `hi` may be infinite (unconstrained).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub lo_inclusive: bool,
    pub hi: f64,
    pub hi_inclusive: bool,
}

impl Interval {
    pub fn nonnegative() -> Self {
        Interval {
            lo: 0.0,
            lo_inclusive: true,
            hi: f64::INFINITY,
            hi_inclusive: false,
        }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            lo_inclusive: true,
            hi,
            hi_inclusive: true,
        }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            lo_inclusive: false,
            hi,
            hi_inclusive: false,
        }
    }

    /// `[0, hi)`, except that a zero cap admits the single point 0: a source
    /// with no arrivals never builds a queue, even without service.
    pub fn below(hi: f64) -> Self {
        Interval {
            lo: 0.0,
            lo_inclusive: true,
            hi,
            hi_inclusive: hi <= 0.0,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_inclusive { x >= self.lo } else { x > self.lo };
        let below = if self.hi_inclusive { x <= self.hi } else { x < self.hi };
        above && below
    }

    pub fn contains_closed(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// `a * lambda1 + b * lambda2 < t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineConstraint {
    pub a: f64,
    pub b: f64,
    pub t: f64,
}

impl AffineConstraint {
    pub fn holds(&self, lambda1: f64, lambda2: f64) -> bool {
        self.a * lambda1 + self.b * lambda2 < self.t
    }

    /// Value of `lambda2` on the constraint line, if the line bounds `lambda2`.
    pub fn lambda2_on_line(&self, lambda1: f64) -> Option<f64> {
        (self.b > 0.0).then(|| (self.t - self.a * lambda1) / self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubregionSpec {
    pub kind: SubregionKind,
    pub constraint: Option<AffineConstraint>,
    pub lambda1: Interval,
    pub lambda2: Interval,
}

impl SubregionSpec {
    pub fn contains(&self, lambda1: f64, lambda2: f64) -> bool {
        self.lambda1.contains(lambda1)
            && self.lambda2.contains(lambda2)
            && self.constraint.map_or(true, |c| c.holds(lambda1, lambda2))
    }

    /// Supremum of `lambda2` over this subregion at `lambda1`.
    ///
    /// With `closure` set, all inequalities are relaxed to non-strict; this
    /// is the frontier used for plotting.
    pub fn sup_lambda2(&self, lambda1: f64, closure: bool) -> Option<f64> {
        let in_range = if closure {
            self.lambda1.contains_closed(lambda1)
        } else {
            self.lambda1.contains(lambda1)
        };
        if !in_range {
            return None;
        }
        let mut upper = self.lambda2.hi;
        let mut upper_inclusive = self.lambda2.hi_inclusive;
        if let Some(c) = self.constraint {
            match c.lambda2_on_line(lambda1) {
                Some(cap) => {
                    if cap < upper || (cap == upper && !closure) {
                        upper = cap;
                        upper_inclusive = false;
                    }
                }
                None => {
                    let lhs = c.a * lambda1;
                    let ok = if closure { lhs <= c.t } else { lhs < c.t };
                    if !ok {
                        return None;
                    }
                }
            }
        }
        let lo = self.lambda2.lo;
        let nonempty = if closure {
            upper >= lo
        } else {
            upper > lo || (upper == lo && upper_inclusive && self.lambda2.lo_inclusive)
        };
        nonempty.then_some(upper)
    }
}

/// A point of the region's frontier together with the subregion attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontierPoint {
    pub lambda1: f64,
    pub lambda2: f64,
    pub branch: SubregionKind,
}

/// Union of subregions, stored symbolically so membership is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRegion {
    subregions: Vec<SubregionSpec>,
    channel: ChannelModel,
    energy: EnergyModel,
}

/// Stability region for the given channel and battery.
///
/// Collision channels (no joint success at all) use the collision-channel
/// description; everything else uses the multipacket-reception description
/// selected by the sign of `eta`.
pub fn build_region(channel: &ChannelModel, energy: &EnergyModel) -> StabilityRegion {
    if channel.is_collision() {
        StabilityRegion::collision_construction(channel, energy)
            .expect("collision channel checked above")
    } else {
        StabilityRegion::mpr_construction(channel, energy)
    }
}

impl StabilityRegion {
    /// Region without energy to spend or without primary success: only
    /// `lambda1 = 0` is sustainable and the secondary sees an idle primary.
    fn degenerate(kind: SubregionKind, channel: &ChannelModel, energy: &EnergyModel) -> Self {
        StabilityRegion {
            subregions: vec![SubregionSpec {
                kind,
                constraint: None,
                lambda1: Interval::closed(0.0, 0.0),
                lambda2: Interval::below(channel.q22()),
            }],
            channel: *channel,
            energy: *energy,
        }
    }

    /// Multipacket-reception description, branch chosen by the sign of `eta`.
    pub fn mpr_construction(channel: &ChannelModel, energy: &EnergyModel) -> Self {
        let beta = energy.battery_nonempty_prob();
        let idle = energy.battery_empty_prob();
        let (q11, q22, q112, q212) = (channel.q11(), channel.q22(), channel.q112(), channel.q212());
        let (d1, d2) = (channel.delta1(), channel.delta2());
        let extent = beta * q11;
        let positive = channel.eta_positive();

        if extent <= 0.0 {
            let kind = if positive {
                SubregionKind::R1Prime
            } else {
                SubregionKind::R1EtaNonPositive
            };
            return Self::degenerate(kind, channel, energy);
        }

        // Shared line of R1'' and R2'':
        // q212 l1 + D1 l2 < beta q11 q212 + D1 q22 (1 - beta)
        let interior_line = AffineConstraint {
            a: q212,
            b: d1,
            t: beta * q11 * q212 + d1 * q22 * idle,
        };

        let mut subregions = Vec::with_capacity(4);
        if positive {
            subregions.push(SubregionSpec {
                kind: SubregionKind::R1Prime,
                // D2 / (q112 q22) l1 + l2 / q22 < 1, scaled by q112 q22
                constraint: Some(AffineConstraint {
                    a: d2,
                    b: q112,
                    t: q112 * q22,
                }),
                lambda1: Interval::closed(0.0, beta * q112),
                lambda2: Interval::nonnegative(),
            });
            subregions.push(SubregionSpec {
                kind: SubregionKind::R1DoublePrime,
                constraint: Some(interior_line),
                lambda1: Interval::open(beta * q112, extent),
                lambda2: Interval::nonnegative(),
            });
        } else {
            subregions.push(SubregionSpec {
                kind: SubregionKind::R1EtaNonPositive,
                // l1 / q11 + l2 / q22 < 1, scaled by q11 q22
                constraint: Some(AffineConstraint {
                    a: q22,
                    b: q11,
                    t: q11 * q22,
                }),
                lambda1: Interval::below(extent),
                lambda2: Interval::nonnegative(),
            });
        }
        subregions.push(SubregionSpec {
            kind: SubregionKind::R2Prime,
            constraint: None,
            lambda1: Interval::below(extent),
            lambda2: Interval::closed(0.0, idle * q22),
        });
        subregions.push(SubregionSpec {
            kind: SubregionKind::R2DoublePrime,
            constraint: Some(interior_line),
            // implied by the line and the lambda2 range; kept explicit
            lambda1: Interval::below(extent),
            lambda2: Interval::open(idle * q22, idle * q22 + beta * q212),
        });

        StabilityRegion {
            subregions,
            channel: *channel,
            energy: *energy,
        }
    }

    /// Collision-channel description. Fails unless both joint success
    /// probabilities are zero.
    pub fn collision_construction(channel: &ChannelModel, energy: &EnergyModel) -> Result<Self> {
        if !channel.is_collision() {
            return Err(Error::DegenerateChannel(
                "collision construction requires q112 = q212 = 0",
            ));
        }
        let beta = energy.battery_nonempty_prob();
        let idle = energy.battery_empty_prob();
        let (q11, q22) = (channel.q11(), channel.q22());
        let extent = beta * q11;
        if extent <= 0.0 {
            return Ok(Self::degenerate(SubregionKind::CollisionR1, channel, energy));
        }
        Ok(StabilityRegion {
            subregions: vec![
                SubregionSpec {
                    kind: SubregionKind::CollisionR1,
                    constraint: Some(AffineConstraint {
                        a: q22,
                        b: q11,
                        t: q11 * q22,
                    }),
                    lambda1: Interval::closed(0.0, extent),
                    lambda2: Interval::nonnegative(),
                },
                SubregionSpec {
                    kind: SubregionKind::CollisionR2,
                    constraint: None,
                    lambda1: Interval::below(extent),
                    lambda2: Interval::closed(0.0, idle * q22),
                },
            ],
            channel: *channel,
            energy: *energy,
        })
    }

    pub fn subregions(&self) -> &[SubregionSpec] {
        &self.subregions
    }

    pub fn subregion(&self, kind: SubregionKind) -> Option<&SubregionSpec> {
        self.subregions.iter().find(|s| s.kind == kind)
    }

    pub fn channel(&self) -> &ChannelModel {
        &self.channel
    }

    pub fn energy(&self) -> &EnergyModel {
        &self.energy
    }

    pub fn eta(&self) -> f64 {
        self.channel.eta()
    }

    pub fn battery_nonempty_prob(&self) -> f64 {
        self.energy.battery_nonempty_prob()
    }

    /// Largest primary rate the region reaches, `beta * q11`.
    pub fn lambda1_extent(&self) -> f64 {
        self.battery_nonempty_prob() * self.channel.q11()
    }

    pub fn contains(&self, lambda1: f64, lambda2: f64) -> bool {
        lambda1 >= 0.0
            && lambda2 >= 0.0
            && self.subregions.iter().any(|s| s.contains(lambda1, lambda2))
    }

    /// Members of the primary-axis subregions only.
    pub fn contains_primary_axis(&self, lambda1: f64, lambda2: f64) -> bool {
        self.contains_where(lambda1, lambda2, |k| k.is_primary_axis())
    }

    /// Members of the secondary-axis subregions only.
    pub fn contains_secondary_axis(&self, lambda1: f64, lambda2: f64) -> bool {
        self.contains_where(lambda1, lambda2, |k| !k.is_primary_axis())
    }

    fn contains_where(&self, lambda1: f64, lambda2: f64, pick: impl Fn(SubregionKind) -> bool) -> bool {
        lambda1 >= 0.0
            && lambda2 >= 0.0
            && self
                .subregions
                .iter()
                .filter(|s| pick(s.kind))
                .any(|s| s.contains(lambda1, lambda2))
    }

    /// Supremum of `lambda2` over the region at fixed `lambda1`; `None` when
    /// no `lambda2` is admitted there.
    pub fn max_lambda2(&self, lambda1: f64) -> Option<f64> {
        if !(lambda1 >= 0.0) {
            return None;
        }
        self.subregions
            .iter()
            .filter_map(|s| s.sup_lambda2(lambda1, false))
            .fold(None, |best: Option<f64>, v| Some(best.map_or(v, |b| b.max(v))))
    }

    /// Point of the closed frontier above `lambda1`. Ties between subregions
    /// go to the one listed first.
    pub fn frontier_point(&self, lambda1: f64) -> Option<FrontierPoint> {
        let mut best: Option<FrontierPoint> = None;
        for s in &self.subregions {
            if let Some(v) = s.sup_lambda2(lambda1, true) {
                let better = match best {
                    None => true,
                    Some(b) => v > b.lambda2 + 1e-12 * b.lambda2.abs().max(1.0),
                };
                if better {
                    best = Some(FrontierPoint {
                        lambda1,
                        lambda2: v,
                        branch: s.kind,
                    });
                }
            }
        }
        best
    }
}
