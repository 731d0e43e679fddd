//! One-parameter sweeps of the simulator.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Capacity, EnergyModel, Scenario};
use crate::regions::build_region;
use crate::sim::{run, SimConfig, SimMode, SimReport, STATISTICS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    Lambda1,
    Lambda2,
    P,
    Delta,
    /// Battery capacity; `inf` selects the unbounded battery.
    C,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Lambda1 => "lambda1",
            SweepParam::Lambda2 => "lambda2",
            SweepParam::P => "p",
            SweepParam::Delta => "delta",
            SweepParam::C => "c",
        }
    }

    /// `template` with this parameter set to `value`.
    pub fn apply(&self, template: &Scenario, value: f64) -> Result<Scenario> {
        let arrivals = &template.arrivals;
        match self {
            SweepParam::Lambda1 => template.with_arrivals(value, arrivals.lambda2()),
            SweepParam::Lambda2 => template.with_arrivals(arrivals.lambda1(), value),
            SweepParam::P => template.with_p(value),
            SweepParam::Delta => {
                let energy = EnergyModel::new(value, template.energy.capacity())?;
                Ok(Scenario { energy, ..*template })
            }
            SweepParam::C => {
                let capacity = if value == f64::INFINITY {
                    Capacity::Unbounded
                } else if value.fract() == 0.0 && value >= 1.0 && value <= f64::from(u32::MAX) {
                    Capacity::finite(value as u32)?
                } else {
                    return Err(Error::InvalidParameter {
                        name: "c",
                        value,
                        reason: "capacity must be a positive integer or inf",
                    });
                };
                Ok(Scenario {
                    energy: template.energy.with_capacity(capacity),
                    ..*template
                })
            }
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda1" => Ok(SweepParam::Lambda1),
            "lambda2" => Ok(SweepParam::Lambda2),
            "p" => Ok(SweepParam::P),
            "delta" => Ok(SweepParam::Delta),
            "c" | "capacity" => Ok(SweepParam::C),
            other => Err(Error::InvalidConfig(format!(
                "unknown sweep parameter {other:?} (expected lambda1, lambda2, p, delta or c)"
            ))),
        }
    }
}

impl serde::Serialize for SweepParam {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(self.name())
    }
}

impl<'de> serde::Deserialize<'de> for SweepParam {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(de)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub template: Scenario,
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub mode: SimMode,
    pub horizon: u64,
    pub burn_in: u64,
    pub replications: usize,
    /// Every point reuses this seed.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub scenario: Scenario,
    /// Whether the arrival pair lies in the analytic region.
    pub in_region: bool,
    pub report: SimReport,
}

impl SweepSpec {
    /// Scenario at each grid value, checked up front.
    pub fn scenarios(&self) -> Result<Vec<Scenario>> {
        if self.values.is_empty() {
            return Err(Error::InvalidConfig("sweep grid is empty".into()));
        }
        self.values
            .iter()
            .map(|&v| self.param.apply(&self.template, v))
            .collect()
    }

    fn config(&self, scenario: Scenario) -> SimConfig {
        SimConfig {
            scenario,
            mode: self.mode,
            horizon: self.horizon,
            burn_in: self.burn_in,
            seed: self.seed,
            replications: self.replications,
            trajectory_stride: None,
        }
    }

    /// Runs every grid point; rows come back in grid order.
    pub fn run(&self) -> Result<Vec<SweepRow>> {
        let scenarios = self.scenarios()?;
        self.config(self.template).validate()?;
        scenarios
            .into_par_iter()
            .zip(self.values.par_iter())
            .map(|(scenario, &value)| {
                let report = run(&self.config(scenario))?;
                let region = build_region(&scenario.channel, &scenario.energy);
                Ok(SweepRow {
                    value,
                    scenario,
                    in_region: region.contains(scenario.arrivals.lambda1(), scenario.arrivals.lambda2()),
                    report,
                })
            })
            .collect()
    }
}

/// One row per grid value with aggregate means, verdicts and CI half-widths.
pub fn write_sweep_csv<W: Write>(
    mut out: W,
    param: SweepParam,
    rows: &[SweepRow],
    preamble: &[(String, String)],
) -> Result<()> {
    for (k, v) in preamble {
        writeln!(out, "# {k} = {v}").map_err(|e| Error::io("<csv>", e))?;
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![param.name().to_string(), "in_region".to_string()];
    header.extend(STATISTICS.iter().map(|(n, _)| n.to_string()));
    header.push("stable1".into());
    header.push("stable2".into());
    header.extend(STATISTICS.iter().map(|(n, _)| format!("{n}_ci95")));
    w.write_record(&header)?;
    for row in rows {
        let mut rec = vec![row.value.to_string(), row.in_region.to_string()];
        rec.extend(row.report.estimates.iter().map(|e| e.mean.to_string()));
        rec.push(row.report.stable1.to_string());
        rec.push(row.report.stable2.to_string());
        rec.extend(row.report.estimates.iter().map(|e| e.ci_halfwidth.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
