use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::Scenario;

/// Queue and battery levels at the start of a slot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SystemState {
    pub q1: u64,
    pub q2: u64,
    pub b1: u64,
}

/// Which nodes send dummy packets when their queue is empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimMode {
    Original,
    /// Secondary always has something to send.
    Dominant1,
    /// Primary always has something to send (battery permitting).
    Dominant2,
    SaturatedBoth,
}

impl SimMode {
    pub fn primary_saturated(&self) -> bool {
        matches!(self, SimMode::Dominant2 | SimMode::SaturatedBoth)
    }

    pub fn secondary_saturated(&self) -> bool {
        matches!(self, SimMode::Dominant1 | SimMode::SaturatedBoth)
    }

    pub fn name(&self) -> &'static str {
        match self {
            SimMode::Original => "original",
            SimMode::Dominant1 => "dominant1",
            SimMode::Dominant2 => "dominant2",
            SimMode::SaturatedBoth => "saturated",
        }
    }
}

impl fmt::Display for SimMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SimMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(SimMode::Original),
            "dominant1" => Ok(SimMode::Dominant1),
            "dominant2" => Ok(SimMode::Dominant2),
            "saturated" | "saturated-both" => Ok(SimMode::SaturatedBoth),
            other => Err(Error::InvalidConfig(format!(
                "unknown mode {other:?} (expected original, dominant1, dominant2 or saturated)"
            ))),
        }
    }
}

impl serde::Serialize for SimMode {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(self.name())
    }
}

impl<'de> serde::Deserialize<'de> for SimMode {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(de)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Uniform draws consumed by one slot, always all six and always in this
/// order so that streams stay aligned across modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotDraws {
    pub arrival1: f64,
    pub arrival2: f64,
    pub harvest: f64,
    pub access: f64,
    pub success1: f64,
    pub success2: f64,
}

impl SlotDraws {
    #[inline]
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        SlotDraws {
            arrival1: rng.gen(),
            arrival2: rng.gen(),
            harvest: rng.gen(),
            access: rng.gen(),
            success1: rng.gen(),
            success2: rng.gen(),
        }
    }
}

/// What happened during one slot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SlotEvents {
    pub primary_tx: bool,
    pub primary_dummy: bool,
    pub secondary_tx: bool,
    pub secondary_dummy: bool,
    pub primary_success: bool,
    pub secondary_success: bool,
    /// A real primary packet left `Q1`.
    pub delivered1: bool,
    pub delivered2: bool,
    pub harvested: bool,
    pub harvest_stored: bool,
    pub arrival1: bool,
    pub arrival2: bool,
}

/// Executes one slot.
///
/// Order: primary activity (packet or dummy, and energy) decides its
/// transmission; the secondary transmits for sure when the primary is idle
/// and with probability `p` otherwise; success draws are resolved;
/// delivered real packets leave their queues; a primary transmission spends
/// one energy unit whatever the outcome; a harvested unit is kept only if the
/// battery was below capacity at the start of the slot; packet arrivals are
/// queued last. Nothing that arrives during a slot can be used in that slot.
#[inline]
pub fn step(
    state: &SystemState,
    scenario: &Scenario,
    mode: SimMode,
    draws: &SlotDraws,
) -> (SystemState, SlotEvents) {
    let ch = &scenario.channel;
    let mut next = *state;
    let mut ev = SlotEvents::default();

    let primary_has_packet = state.q1 > 0 || mode.primary_saturated();
    ev.primary_tx = state.b1 > 0 && primary_has_packet;
    ev.primary_dummy = ev.primary_tx && state.q1 == 0;

    let secondary_has_packet = state.q2 > 0 || mode.secondary_saturated();
    ev.secondary_tx =
        secondary_has_packet && (!ev.primary_tx || draws.access < scenario.policy.p());
    ev.secondary_dummy = ev.secondary_tx && state.q2 == 0;

    match (ev.primary_tx, ev.secondary_tx) {
        (true, true) => {
            ev.primary_success = draws.success1 < ch.q112();
            ev.secondary_success = draws.success2 < ch.q212();
        }
        (true, false) => ev.primary_success = draws.success1 < ch.q11(),
        (false, true) => ev.secondary_success = draws.success2 < ch.q22(),
        (false, false) => {}
    }

    if ev.primary_success && !ev.primary_dummy {
        next.q1 -= 1;
        ev.delivered1 = true;
    }
    if ev.secondary_success && !ev.secondary_dummy {
        next.q2 -= 1;
        ev.delivered2 = true;
    }

    if ev.primary_tx {
        next.b1 -= 1;
    }

    ev.harvested = draws.harvest < scenario.energy.delta();
    if ev.harvested {
        let room = scenario
            .energy
            .capacity()
            .units()
            .map_or(true, |c| state.b1 < u64::from(c));
        if room {
            next.b1 += 1;
            ev.harvest_stored = true;
        }
    }

    ev.arrival1 = draws.arrival1 < scenario.arrivals.lambda1();
    ev.arrival2 = draws.arrival2 < scenario.arrivals.lambda2();
    next.q1 += u64::from(ev.arrival1);
    next.q2 += u64::from(ev.arrival2);

    (next, ev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AccessPolicy, ArrivalRates, ChannelModel, EnergyModel};

    fn scenario(p: f64, capacity: Option<u32>) -> Scenario {
        let energy = match capacity {
            Some(c) => EnergyModel::finite(0.4, c).unwrap(),
            None => EnergyModel::unbounded(0.4).unwrap(),
        };
        Scenario::new(
            ChannelModel::new(0.9, 0.8, 0.6, 0.5).unwrap(),
            energy,
            ArrivalRates::new(0.2, 0.3).unwrap(),
            AccessPolicy::new(p).unwrap(),
        )
    }

    /// Draws that produce no arrivals and no harvest unless overridden.
    fn quiet() -> SlotDraws {
        SlotDraws {
            arrival1: 0.99,
            arrival2: 0.99,
            harvest: 0.99,
            access: 0.99,
            success1: 0.99,
            success2: 0.99,
        }
    }

    #[test]
    fn idle_primary_lets_secondary_transmit() {
        let s = SystemState { q1: 0, q2: 1, b1: 5 };
        let d = SlotDraws { success2: 0.1, ..quiet() };
        let (next, ev) = step(&s, &scenario(0.0, None), SimMode::Original, &d);
        assert!(!ev.primary_tx);
        assert!(ev.secondary_tx && ev.secondary_success && ev.delivered2);
        assert_eq!(next, SystemState { q1: 0, q2: 0, b1: 5 });
    }

    #[test]
    fn empty_battery_blocks_primary() {
        let s = SystemState { q1: 1, q2: 0, b1: 0 };
        let (next, ev) = step(&s, &scenario(1.0, None), SimMode::Original, &quiet());
        assert!(!ev.primary_tx && !ev.secondary_tx);
        assert_eq!(next, s);

        let d = SlotDraws { harvest: 0.1, ..quiet() };
        let (next, ev) = step(&s, &scenario(1.0, None), SimMode::Original, &d);
        assert!(ev.harvest_stored);
        assert_eq!(next.b1, 1);
    }

    #[test]
    fn joint_transmission_hand_trace() {
        // p-draw transmits; primary fails (0.7 >= q112 = 0.6); secondary succeeds
        // (0.2 < q212 = 0.5); arrivals a1 = 1, a2 = 0; harvest h = 1.
        let s = SystemState { q1: 3, q2: 2, b1: 1 };
        let d = SlotDraws {
            arrival1: 0.1,
            arrival2: 0.5,
            harvest: 0.3,
            access: 0.2,
            success1: 0.7,
            success2: 0.2,
        };
        let (next, ev) = step(&s, &scenario(0.5, None), SimMode::Original, &d);
        assert!(ev.primary_tx && ev.secondary_tx);
        assert!(!ev.primary_success && ev.secondary_success);
        assert_eq!(next, SystemState { q1: 4, q2: 1, b1: 1 });
    }

    #[test]
    fn secondary_defers_with_probability_one_minus_p() {
        let s = SystemState { q1: 2, q2: 2, b1: 2 };
        let d = SlotDraws { access: 0.6, success1: 0.1, ..quiet() };
        let (next, ev) = step(&s, &scenario(0.5, None), SimMode::Original, &d);
        assert!(ev.primary_tx && !ev.secondary_tx);
        assert!(ev.primary_success);
        assert_eq!(next, SystemState { q1: 1, q2: 2, b1: 1 });
    }

    #[test]
    fn no_phantom_secondary_transmissions() {
        let s = SystemState { q1: 0, q2: 0, b1: 3 };
        let d = SlotDraws { access: 0.0, success2: 0.0, ..quiet() };
        let (_, ev) = step(&s, &scenario(1.0, None), SimMode::Original, &d);
        assert!(!ev.secondary_tx);
    }

    #[test]
    fn dummies_spend_energy_but_never_dequeue() {
        let s = SystemState { q1: 0, q2: 0, b1: 1 };
        let d = SlotDraws { access: 0.0, success1: 0.0, success2: 0.0, ..quiet() };
        let (next, ev) = step(&s, &scenario(1.0, None), SimMode::SaturatedBoth, &d);
        assert!(ev.primary_tx && ev.primary_dummy && ev.primary_success);
        assert!(ev.secondary_tx && ev.secondary_dummy && ev.secondary_success);
        assert!(!ev.delivered1 && !ev.delivered2);
        assert_eq!(next, SystemState { q1: 0, q2: 0, b1: 0 });
    }

    #[test]
    fn dominant_modes_saturate_one_side() {
        let s = SystemState { q1: 0, q2: 0, b1: 1 };
        let (_, ev) = step(&s, &scenario(1.0, None), SimMode::Dominant1, &quiet());
        assert!(!ev.primary_tx && ev.secondary_tx);
        let (_, ev) = step(&s, &scenario(0.0, None), SimMode::Dominant2, &quiet());
        assert!(ev.primary_tx && !ev.secondary_tx);
    }

    #[test]
    fn full_battery_rejects_harvest() {
        let d = SlotDraws { harvest: 0.0, ..quiet() };
        // full and idle
        let s = SystemState { q1: 0, q2: 0, b1: 2 };
        let (next, ev) = step(&s, &scenario(0.0, Some(2)), SimMode::Original, &d);
        assert!(ev.harvested && !ev.harvest_stored);
        assert_eq!(next.b1, 2);
        // full at slot start and transmitting
        let s = SystemState { q1: 1, q2: 0, b1: 1 };
        let (next, ev) = step(&s, &scenario(0.0, Some(1)), SimMode::Original, &d);
        assert!(ev.primary_tx && !ev.harvest_stored);
        assert_eq!(next.b1, 0);
        // room at slot start
        let s = SystemState { q1: 1, q2: 0, b1: 1 };
        let (next, _) = step(&s, &scenario(0.0, Some(2)), SimMode::Original, &d);
        assert_eq!(next.b1, 1);
    }

    #[test]
    fn mode_names_round_trip() {
        for m in [SimMode::Original, SimMode::Dominant1, SimMode::Dominant2, SimMode::SaturatedBoth] {
            assert_eq!(m.name().parse::<SimMode>().unwrap(), m);
        }
        assert!("bogus".parse::<SimMode>().is_err());
    }
}
