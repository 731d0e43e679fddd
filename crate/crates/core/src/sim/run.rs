use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::model::Scenario;

use super::step::{step, SimMode, SlotDraws, SystemState};

/// Queue growth above this (packets/slot) marks a queue unstable.
pub const SLOPE_THRESHOLD: f64 = 1e-3;

/// A final queue at or above `QUEUE_CAP_FACTOR * sqrt(horizon)` marks it unstable.
pub const QUEUE_CAP_FACTOR: f64 = 10.0;

pub const DEFAULT_HORIZON: u64 = 2_000_000;
pub const DEFAULT_BURN_IN: u64 = 200_000;
pub const DEFAULT_REPLICATIONS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub mode: SimMode,
    pub horizon: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub replications: usize,
    /// Record `(slot, q1, q2, b1)` every `stride` slots of the first replication.
    pub trajectory_stride: Option<u64>,
}

impl SimConfig {
    pub fn new(scenario: Scenario, mode: SimMode) -> Self {
        SimConfig {
            scenario,
            mode,
            horizon: DEFAULT_HORIZON,
            burn_in: DEFAULT_BURN_IN,
            seed: 0,
            replications: DEFAULT_REPLICATIONS,
            trajectory_stride: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be positive".into()));
        }
        if self.burn_in >= self.horizon {
            return Err(Error::InvalidConfig(format!(
                "burn_in ({}) must be below horizon ({})",
                self.burn_in, self.horizon
            )));
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be at least 1".into()));
        }
        if self.trajectory_stride == Some(0) {
            return Err(Error::InvalidConfig("trajectory stride must be positive".into()));
        }
        Ok(())
    }
}

/// Generator for one replication: ChaCha8 keyed by the master seed, with the
/// replication index selecting the stream.
pub fn replication_rng(seed: u64, replication: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication as u64);
    rng
}

/// Exact bookkeeping over the whole run, burn-in included.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub slots: u64,
    pub arrivals1: u64,
    pub arrivals2: u64,
    pub departures1: u64,
    pub departures2: u64,
    pub harvested: u64,
    pub consumed: u64,
    pub rejected: u64,
    pub primary_transmissions: u64,
    pub secondary_transmissions: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub slot: u64,
    pub q1: u64,
    pub q2: u64,
    pub b1: u64,
}

/// Statistics of one replication, measured after burn-in.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationStats {
    pub index: usize,
    /// Real packets delivered per slot.
    pub throughput1: f64,
    pub throughput2: f64,
    /// Successful transmissions per slot, dummies included.
    pub service_rate1: f64,
    pub service_rate2: f64,
    pub active_fraction1: f64,
    pub battery_nonempty_fraction: f64,
    pub secondary_busy_fraction: f64,
    pub queue_slope1: f64,
    pub queue_slope2: f64,
    pub final_state: SystemState,
    pub stable1: bool,
    pub stable2: bool,
    pub counters: Counters,
}

/// Mean over replications with a 95% Student-t half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub ci_halfwidth: f64,
}

impl Estimate {
    /// Half-width is 0 for a single replication.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Estimate {
                mean,
                ci_halfwidth: 0.0,
            };
        }
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        Estimate {
            mean,
            ci_halfwidth: t * (var / n as f64).sqrt(),
        }
    }
}

/// Per-replication statistics that get aggregated, with their CSV names.
pub const STATISTICS: [(&str, fn(&ReplicationStats) -> f64); 9] = [
    ("throughput1", |r| r.throughput1),
    ("throughput2", |r| r.throughput2),
    ("service_rate1", |r| r.service_rate1),
    ("service_rate2", |r| r.service_rate2),
    ("active_fraction1", |r| r.active_fraction1),
    ("battery_nonempty_fraction", |r| r.battery_nonempty_fraction),
    ("secondary_busy_fraction", |r| r.secondary_busy_fraction),
    ("queue_slope1", |r| r.queue_slope1),
    ("queue_slope2", |r| r.queue_slope2),
];

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub config: SimConfig,
    pub replications: Vec<ReplicationStats>,
    /// One estimate per entry of [`STATISTICS`].
    pub estimates: Vec<Estimate>,
    /// Majority verdicts across replications.
    pub stable1: bool,
    pub stable2: bool,
    pub trajectory: Vec<TrajectoryPoint>,
}

impl SimReport {
    pub fn estimate(&self, name: &str) -> Estimate {
        let idx = STATISTICS
            .iter()
            .position(|(n, _)| *n == name)
            .unwrap_or_else(|| panic!("unknown statistic {name}"));
        self.estimates[idx]
    }

    pub fn throughput1(&self) -> Estimate {
        self.estimate("throughput1")
    }

    pub fn throughput2(&self) -> Estimate {
        self.estimate("throughput2")
    }

    pub fn service_rate1(&self) -> Estimate {
        self.estimate("service_rate1")
    }

    pub fn service_rate2(&self) -> Estimate {
        self.estimate("service_rate2")
    }

    pub fn active_fraction1(&self) -> Estimate {
        self.estimate("active_fraction1")
    }

    pub fn battery_nonempty_fraction(&self) -> Estimate {
        self.estimate("battery_nonempty_fraction")
    }

    /// One row per replication and a final `aggregate` row. The `*_ci95`
    /// columns are only filled on the aggregate row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["replication".to_string()];
        header.extend(STATISTICS.iter().map(|(n, _)| n.to_string()));
        header.extend(
            ["final_q1", "final_q2", "final_b1", "stable1", "stable2"]
                .iter()
                .map(|s| s.to_string()),
        );
        header.extend(STATISTICS.iter().map(|(n, _)| format!("{n}_ci95")));
        w.write_record(&header)?;

        for r in &self.replications {
            let mut row = vec![r.index.to_string()];
            row.extend(STATISTICS.iter().map(|(_, f)| f(r).to_string()));
            row.push(r.final_state.q1.to_string());
            row.push(r.final_state.q2.to_string());
            row.push(r.final_state.b1.to_string());
            row.push(r.stable1.to_string());
            row.push(r.stable2.to_string());
            row.extend(STATISTICS.iter().map(|_| String::new()));
            w.write_record(&row)?;
        }

        let mut row = vec!["aggregate".to_string()];
        row.extend(self.estimates.iter().map(|e| e.mean.to_string()));
        row.extend([String::new(), String::new(), String::new()]);
        row.push(self.stable1.to_string());
        row.push(self.stable2.to_string());
        row.extend(self.estimates.iter().map(|e| e.ci_halfwidth.to_string()));
        w.write_record(&row)?;
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// `slot,q1,q2,b1` rows of the recorded trajectory.
    pub fn write_trajectory_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["slot", "q1", "q2", "b1"])?;
        for p in &self.trajectory {
            w.write_record([p.slot, p.q1, p.q2, p.b1].map(|v| v.to_string()))?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Least-squares slope of `y` against `tau = 0..n-1`, from the running sums
/// `sum y` and `sum tau*y`.
fn trend_slope(n: u64, sum_y: u128, sum_ty: u128) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let n_f = n as f64;
    let mean_t = (n_f - 1.0) / 2.0;
    let sxx = n_f * (n_f * n_f - 1.0) / 12.0;
    (sum_ty as f64 - mean_t * sum_y as f64) / sxx
}

fn run_replication(
    config: &SimConfig,
    index: usize,
    trajectory: Option<&mut Vec<TrajectoryPoint>>,
) -> ReplicationStats {
    let scenario = &config.scenario;
    let mode = config.mode;
    let mut rng = replication_rng(config.seed, index);
    let mut state = SystemState::default();
    let mut counters = Counters::default();
    let stride = config.trajectory_stride.filter(|_| trajectory.is_some());
    let mut trajectory = trajectory;

    let measured = config.horizon - config.burn_in;
    let (mut delivered1, mut delivered2, mut served1, mut served2) = (0u64, 0u64, 0u64, 0u64);
    let (mut active1, mut battery_up, mut busy2) = (0u64, 0u64, 0u64);
    let (mut sum_q1, mut sum_tq1, mut sum_q2, mut sum_tq2) = (0u128, 0u128, 0u128, 0u128);

    for slot in 0..config.horizon {
        if let (Some(s), Some(tr)) = (stride, trajectory.as_deref_mut()) {
            if slot % s == 0 {
                tr.push(TrajectoryPoint {
                    slot,
                    q1: state.q1,
                    q2: state.q2,
                    b1: state.b1,
                });
            }
        }

        let draws = SlotDraws::sample(&mut rng);
        let measuring = slot >= config.burn_in;
        if measuring {
            let tau = u128::from(slot - config.burn_in);
            battery_up += u64::from(state.b1 > 0);
            active1 += u64::from(state.b1 > 0 && state.q1 > 0);
            busy2 += u64::from(state.q2 > 0);
            sum_q1 += u128::from(state.q1);
            sum_tq1 += tau * u128::from(state.q1);
            sum_q2 += u128::from(state.q2);
            sum_tq2 += tau * u128::from(state.q2);
        }

        let (next, ev) = step(&state, scenario, mode, &draws);

        counters.slots += 1;
        counters.arrivals1 += u64::from(ev.arrival1);
        counters.arrivals2 += u64::from(ev.arrival2);
        counters.departures1 += u64::from(ev.delivered1);
        counters.departures2 += u64::from(ev.delivered2);
        counters.harvested += u64::from(ev.harvested);
        counters.rejected += u64::from(ev.harvested && !ev.harvest_stored);
        counters.consumed += u64::from(ev.primary_tx);
        counters.primary_transmissions += u64::from(ev.primary_tx);
        counters.secondary_transmissions += u64::from(ev.secondary_tx);

        if measuring {
            delivered1 += u64::from(ev.delivered1);
            delivered2 += u64::from(ev.delivered2);
            served1 += u64::from(ev.primary_success);
            served2 += u64::from(ev.secondary_success);
        }
        state = next;
    }

    let m = measured as f64;
    let queue_slope1 = trend_slope(measured, sum_q1, sum_tq1);
    let queue_slope2 = trend_slope(measured, sum_q2, sum_tq2);
    let cap = QUEUE_CAP_FACTOR * (config.horizon as f64).sqrt();
    ReplicationStats {
        index,
        throughput1: delivered1 as f64 / m,
        throughput2: delivered2 as f64 / m,
        service_rate1: served1 as f64 / m,
        service_rate2: served2 as f64 / m,
        active_fraction1: active1 as f64 / m,
        battery_nonempty_fraction: battery_up as f64 / m,
        secondary_busy_fraction: busy2 as f64 / m,
        queue_slope1,
        queue_slope2,
        final_state: state,
        stable1: queue_slope1 < SLOPE_THRESHOLD && (state.q1 as f64) < cap,
        stable2: queue_slope2 < SLOPE_THRESHOLD && (state.q2 as f64) < cap,
        counters,
    }
}

/// Runs all replications (concurrently when threads are available) and
/// aggregates them in replication order.
pub fn run(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    let mut trajectory = Vec::new();
    let mut replications: Vec<ReplicationStats> = (0..config.replications)
        .into_par_iter()
        .filter(|&i| i != 0)
        .map(|i| run_replication(config, i, None))
        .collect();
    let first = run_replication(
        config,
        0,
        config.trajectory_stride.map(|_| &mut trajectory),
    );
    replications.insert(0, first);

    let estimates = STATISTICS
        .iter()
        .map(|(_, f)| Estimate::from_samples(&replications.iter().map(f).collect::<Vec<_>>()))
        .collect();
    let majority = |pick: fn(&ReplicationStats) -> bool| {
        2 * replications.iter().filter(|r| pick(r)).count() > replications.len()
    };
    let stable1 = majority(|r| r.stable1);
    let stable2 = majority(|r| r.stable2);
    Ok(SimReport {
        config: config.clone(),
        replications,
        estimates,
        stable1,
        stable2,
        trajectory,
    })
}

/// Empirical service rates with the given queue(s) held saturated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceEstimate {
    pub mu1: Estimate,
    pub mu2: Estimate,
    pub battery_nonempty: Estimate,
}

/// Successful transmissions per slot, dummies counted, in a saturated mode.
/// Burn-in is a tenth of the horizon.
pub fn saturated_service_rates(
    scenario: &Scenario,
    mode: SimMode,
    horizon: u64,
    seed: u64,
    replications: usize,
) -> Result<ServiceEstimate> {
    if mode == SimMode::Original {
        return Err(Error::InvalidConfig(
            "service rates need a dominant or saturated mode".into(),
        ));
    }
    let config = SimConfig {
        scenario: *scenario,
        mode,
        horizon,
        burn_in: horizon / 10,
        seed,
        replications,
        trajectory_stride: None,
    };
    let report = run(&config)?;
    Ok(ServiceEstimate {
        mu1: report.service_rate1(),
        mu2: report.service_rate2(),
        battery_nonempty: report.battery_nonempty_fraction(),
    })
}

/// Majority stability verdicts of the original protocol.
pub fn stability_probe(
    scenario: &Scenario,
    horizon: u64,
    seed: u64,
    replications: usize,
) -> Result<(bool, bool)> {
    let config = SimConfig {
        scenario: *scenario,
        mode: SimMode::Original,
        horizon,
        burn_in: horizon / 10,
        seed,
        replications,
        trajectory_stride: None,
    };
    let report = run(&config)?;
    Ok((report.stable1, report.stable2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AccessPolicy, ArrivalRates, ChannelModel, EnergyModel};

    fn scenario(l1: f64, l2: f64, p: f64, energy: EnergyModel) -> Scenario {
        Scenario::new(
            ChannelModel::new(0.9, 0.8, 0.6, 0.5).unwrap(),
            energy,
            ArrivalRates::new(l1, l2).unwrap(),
            AccessPolicy::new(p).unwrap(),
        )
    }

    fn small(s: Scenario, mode: SimMode) -> SimConfig {
        SimConfig {
            horizon: 20_000,
            burn_in: 2_000,
            replications: 3,
            seed: 42,
            ..SimConfig::new(s, mode)
        }
    }

    #[test]
    fn slope_of_a_line() {
        // y = 3 + 2 tau over tau = 0..9
        let n = 10u64;
        let ys: Vec<u128> = (0..n).map(|t| 3 + 2 * t as u128).collect();
        let sum_y: u128 = ys.iter().sum();
        let sum_ty: u128 = ys.iter().enumerate().map(|(t, y)| t as u128 * y).sum();
        assert!((trend_slope(n, sum_y, sum_ty) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let s = scenario(0.1, 0.1, 0.5, EnergyModel::unbounded(0.4).unwrap());
        let mut c = small(s, SimMode::Original);
        c.burn_in = c.horizon;
        assert!(matches!(run(&c), Err(Error::InvalidConfig(_))));
        let mut c = small(s, SimMode::Original);
        c.replications = 0;
        assert!(run(&c).is_err());
        assert!(saturated_service_rates(&s, SimMode::Original, 1000, 1, 1).is_err());
    }

    #[test]
    fn identical_configs_give_identical_reports() {
        let s = scenario(0.2, 0.3, 0.5, EnergyModel::finite(0.4, 3).unwrap());
        let c = small(s, SimMode::Original);
        assert_eq!(run(&c).unwrap(), run(&c).unwrap());
        let mut other = c.clone();
        other.seed = 43;
        assert_ne!(run(&c).unwrap().replications, run(&other).unwrap().replications);
    }

    #[test]
    fn streams_differ_between_replications() {
        let s = scenario(0.2, 0.3, 0.5, EnergyModel::unbounded(0.4).unwrap());
        let r = run(&small(s, SimMode::Original)).unwrap();
        assert_ne!(r.replications[0].counters, r.replications[1].counters);
    }

    #[test]
    fn conservation_laws_hold_exactly() {
        for mode in [SimMode::Original, SimMode::Dominant1, SimMode::Dominant2, SimMode::SaturatedBoth] {
            for energy in [EnergyModel::unbounded(0.4).unwrap(), EnergyModel::finite(0.7, 2).unwrap()] {
                let s = scenario(0.3, 0.5, 0.5, energy);
                for r in run(&small(s, mode)).unwrap().replications {
                    let c = r.counters;
                    assert_eq!(c.arrivals1 - c.departures1, r.final_state.q1);
                    assert_eq!(c.arrivals2 - c.departures2, r.final_state.q2);
                    assert_eq!(c.harvested - c.consumed - c.rejected, r.final_state.b1);
                    if let Some(cap) = energy.capacity().units() {
                        assert!(r.final_state.b1 <= u64::from(cap));
                    }
                }
            }
        }
    }

    #[test]
    fn no_energy_means_no_primary_service() {
        let s = scenario(0.1, 0.1, 0.5, EnergyModel::unbounded(0.0).unwrap());
        let est = saturated_service_rates(&s, SimMode::SaturatedBoth, 10_000, 3, 2).unwrap();
        assert_eq!(est.mu1.mean, 0.0);
        assert_eq!(est.battery_nonempty.mean, 0.0);
    }

    #[test]
    fn empty_system_is_stable() {
        let s = scenario(0.0, 0.0, 0.5, EnergyModel::unbounded(0.4).unwrap());
        assert_eq!(stability_probe(&s, 20_000, 9, 3).unwrap(), (true, true));
    }

    #[test]
    fn overloaded_primary_is_unstable() {
        let s = scenario(0.9, 0.1, 0.5, EnergyModel::unbounded(0.4).unwrap());
        let (stable1, _) = stability_probe(&s, 50_000, 9, 3).unwrap();
        assert!(!stable1);
    }

    #[test]
    fn trajectory_is_strided() {
        let s = scenario(0.2, 0.3, 0.5, EnergyModel::unbounded(0.4).unwrap());
        let mut c = small(s, SimMode::Original);
        c.trajectory_stride = Some(1000);
        let r = run(&c).unwrap();
        assert_eq!(r.trajectory.len(), 20);
        assert_eq!(r.trajectory[3].slot, 3000);
        let mut buf = Vec::new();
        r.write_trajectory_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("slot,q1,q2,b1\n0,0,0,0\n"));
    }

    #[test]
    fn report_csv_has_replication_rows_and_aggregate() {
        let s = scenario(0.2, 0.3, 0.5, EnergyModel::unbounded(0.4).unwrap());
        let r = run(&small(s, SimMode::Original)).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 3 + 1);
        assert!(lines[0].starts_with("replication,throughput1,"));
        assert!(lines[4].starts_with("aggregate,"));
    }
}
