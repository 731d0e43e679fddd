//! Domain types for the two-pair cognitive channel and the scalar quantities
//! derived from them.
//!
//! Every probability is validated at construction and rejected (not clamped)
//! when out of range, so a constructed value is always usable by both the
//! analytic region code and the simulator.

use std::fmt;
use std::num::NonZeroU32;
use std::str::FromStr;

use crate::error::{Error, Result};

/// `|eta|` at or below this is classified with the `eta <= 0` branch.
pub const ETA_TOLERANCE: f64 = 1e-12;

fn check_probability(name: &'static str, value: f64) -> Result<f64> {
    if !value.is_finite() || !(0.0..=1.0).contains(&value) {
        return Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be a probability in [0, 1]",
        });
    }
    Ok(value)
}

/// Reception success probabilities of the shared channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    q11: f64,
    q22: f64,
    q112: f64,
    q212: f64,
}

impl ChannelModel {
    /// `q11`/`q22`: success of the primary/secondary transmitting alone.
    /// `q112`/`q212`: success of the primary/secondary when both transmit.
    pub fn new(q11: f64, q22: f64, q112: f64, q212: f64) -> Result<Self> {
        let q11 = check_probability("q11", q11)?;
        let q22 = check_probability("q22", q22)?;
        let q112 = check_probability("q112", q112)?;
        let q212 = check_probability("q212", q212)?;
        if q112 > q11 {
            return Err(Error::InvalidParameter {
                name: "q112",
                value: q112,
                reason: "joint success q112 may not exceed q11",
            });
        }
        if q212 > q22 {
            return Err(Error::InvalidParameter {
                name: "q212",
                value: q212,
                reason: "joint success q212 may not exceed q22",
            });
        }
        Ok(ChannelModel {
            q11,
            q22,
            q112,
            q212,
        })
    }

    /// The pure collision channel: solo transmissions always succeed, joint
    /// ones always fail.
    pub fn collision() -> Self {
        ChannelModel {
            q11: 1.0,
            q22: 1.0,
            q112: 0.0,
            q212: 0.0,
        }
    }

    pub fn q11(&self) -> f64 {
        self.q11
    }

    pub fn q22(&self) -> f64 {
        self.q22
    }

    pub fn q112(&self) -> f64 {
        self.q112
    }

    pub fn q212(&self) -> f64 {
        self.q212
    }

    /// Loss in primary success probability caused by a simultaneous
    /// secondary transmission.
    pub fn delta1(&self) -> f64 {
        self.q11 - self.q112
    }

    pub fn delta2(&self) -> f64 {
        self.q22 - self.q212
    }

    /// Multipacket-reception index `q11*q212 + q22*q112 - q22*q11`.
    ///
    /// Positive when joint transmissions deliver more in total than the
    /// secondary loses by sharing the slot; `-1` for the collision channel.
    pub fn eta(&self) -> f64 {
        self.q11 * self.q212 + self.q22 * self.q112 - self.q22 * self.q11
    }

    /// Branch selector with the degenerate `eta == 0` case folded into the
    /// non-positive branch.
    pub fn eta_positive(&self) -> bool {
        self.eta() > ETA_TOLERANCE
    }

    /// Simultaneous transmissions never succeed (collision channel with
    /// probabilistic erasures on solo transmissions).
    pub fn is_collision(&self) -> bool {
        self.q112 == 0.0 && self.q212 == 0.0
    }
}

/// Battery capacity of the primary node, in energy units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Capacity {
    Unbounded,
    Finite(NonZeroU32),
}

impl Capacity {
    pub fn finite(c: u32) -> Result<Self> {
        NonZeroU32::new(c)
            .map(Capacity::Finite)
            .ok_or(Error::InvalidParameter {
                name: "capacity",
                value: c as f64,
                reason: "finite capacity must be at least 1",
            })
    }

    pub fn units(&self) -> Option<u32> {
        match self {
            Capacity::Unbounded => None,
            Capacity::Finite(c) => Some(c.get()),
        }
    }
}

impl fmt::Display for Capacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Capacity::Unbounded => f.write_str("inf"),
            Capacity::Finite(c) => write!(f, "{c}"),
        }
    }
}

impl FromStr for Capacity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("unbounded") {
            return Ok(Capacity::Unbounded);
        }
        let c: u32 = s
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("capacity must be a positive integer or \"inf\", got {s:?}")))?;
        Capacity::finite(c)
    }
}

/// Serialized as an integer, or as the string `"inf"` when unbounded.
impl serde::Serialize for Capacity {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Capacity::Unbounded => ser.serialize_str("inf"),
            Capacity::Finite(c) => ser.serialize_u32(c.get()),
        }
    }
}

impl<'de> serde::Deserialize<'de> for Capacity {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Units(i64),
            Text(String),
        }
        match Raw::deserialize(de)? {
            Raw::Units(n) => u32::try_from(n)
                .map_err(|_| Error::InvalidConfig(format!("capacity {n} out of range")))
                .and_then(Capacity::finite),
            Raw::Text(t) => t.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// Energy harvesting at the primary: one unit arrives per slot with
/// probability `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    delta: f64,
    capacity: Capacity,
}

/// `x^n` by repeated squaring. Unlike `powi`, the result does not depend on
/// whether the compiler folds the call.
fn pow_u(x: f64, mut n: u64) -> f64 {
    let (mut base, mut acc) = (x, 1.0);
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        base *= base;
        n >>= 1;
    }
    acc
}

impl EnergyModel {
    pub fn new(delta: f64, capacity: Capacity) -> Result<Self> {
        let delta = check_probability("delta", delta)?;
        Ok(EnergyModel { delta, capacity })
    }

    pub fn unbounded(delta: f64) -> Result<Self> {
        Self::new(delta, Capacity::Unbounded)
    }

    pub fn finite(delta: f64, capacity: u32) -> Result<Self> {
        Self::new(delta, Capacity::finite(capacity)?)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn capacity(&self) -> Capacity {
        self.capacity
    }

    pub fn with_capacity(&self, capacity: Capacity) -> Self {
        EnergyModel {
            delta: self.delta,
            capacity,
        }
    }

    /// Stationary probability that the battery of an always-transmitting
    /// primary is nonempty.
    ///
    /// Unbounded: `delta`. Capacity `c`: `delta (1 - delta^c) / (1 - delta^(c+1))`,
    /// which is 1 at `delta = 1`.
    pub fn battery_nonempty_prob(&self) -> f64 {
        let d = self.delta;
        match self.capacity {
            Capacity::Unbounded => d,
            Capacity::Finite(c) => {
                if d >= 1.0 {
                    return 1.0;
                }
                let c = u64::from(c.get());
                d * (1.0 - pow_u(d, c)) / (1.0 - pow_u(d, c + 1))
            }
        }
    }

    /// `1 - battery_nonempty_prob`, evaluated as `(1 - delta) / (1 - delta^(c+1))`
    /// for a finite battery.
    pub fn battery_empty_prob(&self) -> f64 {
        let d = self.delta;
        match self.capacity {
            Capacity::Unbounded => 1.0 - d,
            Capacity::Finite(c) => {
                if d >= 1.0 {
                    return 0.0;
                }
                (1.0 - d) / (1.0 - pow_u(d, u64::from(c.get()) + 1))
            }
        }
    }
}

/// Bernoulli packet arrival rates, at most one packet per slot per source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalRates {
    lambda1: f64,
    lambda2: f64,
}

impl ArrivalRates {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        Ok(ArrivalRates {
            lambda1: check_probability("lambda1", lambda1)?,
            lambda2: check_probability("lambda2", lambda2)?,
        })
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }
}

/// Probability that the secondary transmits in a slot where the primary is
/// active.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessPolicy {
    p: f64,
}

impl AccessPolicy {
    pub fn new(p: f64) -> Result<Self> {
        Ok(AccessPolicy {
            p: check_probability("p", p)?,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub channel: ChannelModel,
    pub energy: EnergyModel,
    pub arrivals: ArrivalRates,
    pub policy: AccessPolicy,
}

impl Scenario {
    pub fn new(
        channel: ChannelModel,
        energy: EnergyModel,
        arrivals: ArrivalRates,
        policy: AccessPolicy,
    ) -> Self {
        Scenario {
            channel,
            energy,
            arrivals,
            policy,
        }
    }

    pub fn with_arrivals(mut self, lambda1: f64, lambda2: f64) -> Result<Self> {
        self.arrivals = ArrivalRates::new(lambda1, lambda2)?;
        Ok(self)
    }

    pub fn with_p(mut self, p: f64) -> Result<Self> {
        self.policy = AccessPolicy::new(p)?;
        Ok(self)
    }
}
