//! Flat TOML settings shared by the configuration file and the command line.
//!
//! Flags and file entries use the same key names; flags are overlaid on the
//! file and the merged table is what gets echoed into output headers.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AccessPolicy, ArrivalRates, Capacity, ChannelModel, EnergyModel, Scenario};
use crate::sim::{SimConfig, SimMode, DEFAULT_BURN_IN, DEFAULT_HORIZON, DEFAULT_REPLICATIONS};

use super::sweep::SweepParam;

pub const DEFAULT_N_POINTS: usize = 101;
pub const DEFAULT_INSET: f64 = 0.05;
pub const DEFAULT_P_GRID: usize = 1001;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q11: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q22: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q112: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q212: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capacity: Option<Capacity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<SimMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replications: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory_stride: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory_out: Option<PathBuf>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare_capacity: Option<Capacity>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_param: Option<SweepParam>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_values: Option<Vec<f64>>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub inset: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_grid: Option<usize>,
}

fn missing(key: &str) -> Error {
    Error::InvalidConfig(format!("missing required key `{key}`"))
}

impl Settings {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    /// Settings describing `scenario`, with every scenario key present.
    pub fn from_scenario(scenario: &Scenario) -> Self {
        let ch = scenario.channel;
        Settings {
            q11: Some(ch.q11()),
            q22: Some(ch.q22()),
            q112: Some(ch.q112()),
            q212: Some(ch.q212()),
            delta: Some(scenario.energy.delta()),
            capacity: Some(scenario.energy.capacity()),
            lambda1: Some(scenario.arrivals.lambda1()),
            lambda2: Some(scenario.arrivals.lambda2()),
            p: Some(scenario.policy.p()),
            ..Settings::default()
        }
    }

    /// Keys set in `over` replace those in `self`.
    pub fn overlay(self, over: Settings) -> Result<Self> {
        let as_table = |s: &Settings| -> Result<toml::Table> {
            toml::Table::try_from(s).map_err(|e| Error::InvalidConfig(e.to_string()))
        };
        let mut merged = as_table(&self)?;
        merged.extend(as_table(&over)?);
        merged
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(e.to_string()))
    }

    /// The settings as TOML, one `key = value` per line.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat settings always serialize")
    }

    /// `(key, value)` pairs in declaration order, for output preambles.
    /// Output paths are left out so that the same run written to two places
    /// gives identical files.
    pub fn echo(&self) -> Vec<(String, String)> {
        let shown = Settings {
            out: None,
            trajectory_out: None,
            ..self.clone()
        };
        shown
            .to_toml()
            .lines()
            .filter_map(|line| line.split_once(" = "))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    pub fn channel(&self) -> Result<ChannelModel> {
        ChannelModel::new(
            self.q11.ok_or_else(|| missing("q11"))?,
            self.q22.ok_or_else(|| missing("q22"))?,
            self.q112.ok_or_else(|| missing("q112"))?,
            self.q212.ok_or_else(|| missing("q212"))?,
        )
    }

    /// Capacity defaults to unbounded.
    pub fn energy(&self) -> Result<EnergyModel> {
        EnergyModel::new(
            self.delta.ok_or_else(|| missing("delta"))?,
            self.capacity.unwrap_or(Capacity::Unbounded),
        )
    }

    /// Arrival rates and access probability default to 0.
    pub fn scenario(&self) -> Result<Scenario> {
        Ok(Scenario::new(
            self.channel()?,
            self.energy()?,
            ArrivalRates::new(self.lambda1.unwrap_or(0.0), self.lambda2.unwrap_or(0.0))?,
            AccessPolicy::new(self.p.unwrap_or(0.0))?,
        ))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn horizon(&self) -> u64 {
        self.horizon.unwrap_or(DEFAULT_HORIZON)
    }

    /// A tenth of the horizon unless set; the default pair is 2e6 / 2e5.
    pub fn burn_in(&self) -> u64 {
        self.burn_in.unwrap_or_else(|| match self.horizon {
            None => DEFAULT_BURN_IN,
            Some(h) => h / 10,
        })
    }

    pub fn replications(&self) -> usize {
        self.replications.unwrap_or(DEFAULT_REPLICATIONS)
    }

    pub fn n_points(&self) -> usize {
        self.n_points.unwrap_or(DEFAULT_N_POINTS)
    }

    pub fn inset(&self) -> f64 {
        self.inset.unwrap_or(DEFAULT_INSET)
    }

    pub fn p_grid(&self) -> usize {
        self.p_grid.unwrap_or(DEFAULT_P_GRID)
    }

    /// Copy with the scenario defaults written out, for echoing.
    pub fn with_scenario_defaults(&self) -> Settings {
        Settings {
            capacity: Some(self.capacity.unwrap_or(Capacity::Unbounded)),
            lambda1: Some(self.lambda1.unwrap_or(0.0)),
            lambda2: Some(self.lambda2.unwrap_or(0.0)),
            p: Some(self.p.unwrap_or(0.0)),
            ..self.clone()
        }
    }

    /// Copy with the scenario and simulation defaults written out.
    pub fn with_sim_defaults(&self) -> Settings {
        Settings {
            seed: Some(self.seed()),
            mode: Some(self.mode.unwrap_or(SimMode::Original)),
            horizon: Some(self.horizon()),
            burn_in: Some(self.burn_in()),
            replications: Some(self.replications()),
            ..self.with_scenario_defaults()
        }
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let config = SimConfig {
            scenario: self.scenario()?,
            mode: self.mode.unwrap_or(SimMode::Original),
            horizon: self.horizon(),
            burn_in: self.burn_in(),
            seed: self.seed(),
            replications: self.replications(),
            trajectory_stride: self.trajectory_stride,
        };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const C0: &str = "q11 = 0.9\nq22 = 0.8\nq112 = 0.6\nq212 = 0.5\ndelta = 0.4\n";

    #[test]
    fn minimal_config_uses_defaults() {
        let s = Settings::from_toml_str(C0).unwrap();
        let sc = s.scenario().unwrap();
        assert_eq!(sc.energy.capacity(), Capacity::Unbounded);
        assert_eq!(sc.arrivals.lambda1(), 0.0);
        assert_eq!(sc.policy.p(), 0.0);
        let cfg = s.sim_config().unwrap();
        assert_eq!((cfg.horizon, cfg.burn_in, cfg.replications), (2_000_000, 200_000, 5));
        assert_eq!(cfg.mode, SimMode::Original);
    }

    #[test]
    fn capacity_accepts_integer_and_inf() {
        let s = Settings::from_toml_str(&format!("{C0}capacity = 3\n")).unwrap();
        assert_eq!(s.energy().unwrap().capacity(), Capacity::finite(3).unwrap());
        let s = Settings::from_toml_str(&format!("{C0}capacity = \"inf\"\n")).unwrap();
        assert_eq!(s.energy().unwrap().capacity(), Capacity::Unbounded);
        assert!(Settings::from_toml_str(&format!("{C0}capacity = 0\n")).is_err());
        assert!(Settings::from_toml_str(&format!("{C0}capacity = -2\n")).is_err());
        assert!(Settings::from_toml_str(&format!("{C0}capacity = \"big\"\n")).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = Settings::from_toml_str(&format!("{C0}q121 = 0.3\n")).unwrap_err();
        assert!(err.to_string().contains("q121"));
    }

    #[test]
    fn invalid_probabilities_are_rejected() {
        let s = Settings::from_toml_str("q11 = 1.2\nq22 = 0.8\nq112 = 0.6\nq212 = 0.5\ndelta = 0.4\n")
            .unwrap();
        assert!(matches!(s.scenario(), Err(Error::InvalidParameter { name: "q11", .. })));
        let s = Settings::from_toml_str("q22 = 0.8\n").unwrap();
        assert!(s.scenario().unwrap_err().to_string().contains("q11"));
    }

    #[test]
    fn overlay_prefers_flags() {
        let file = Settings::from_toml_str(&format!("{C0}p = 0.2\nseed = 7\nmode = \"dominant1\"\n")).unwrap();
        let flags = Settings {
            p: Some(0.5),
            mode: Some(SimMode::SaturatedBoth),
            ..Settings::default()
        };
        let merged = file.overlay(flags).unwrap();
        assert_eq!(merged.p, Some(0.5));
        assert_eq!(merged.seed, Some(7));
        assert_eq!(merged.mode, Some(SimMode::SaturatedBoth));
        assert_eq!(merged.q11, Some(0.9));
    }

    #[test]
    fn scenario_round_trips_through_toml() {
        let sc = Settings::from_toml_str(&format!("{C0}capacity = 5\nlambda1 = 0.1\nlambda2 = 0.2\np = 0.3\n"))
            .unwrap()
            .scenario()
            .unwrap();
        let text = Settings::from_scenario(&sc).to_toml();
        assert_eq!(Settings::from_toml_str(&text).unwrap().scenario().unwrap(), sc);
    }

    #[test]
    fn echo_is_ordered_and_reparseable() {
        let s = Settings::from_toml_str(&format!("seed = 3\n{C0}capacity = \"inf\"\n")).unwrap();
        let with_out = Settings {
            out: Some("a.csv".into()),
            ..s.clone()
        };
        assert_eq!(with_out.echo(), s.echo());
        let echo = s.echo();
        assert_eq!(echo[0], ("q11".to_string(), "0.9".to_string()));
        assert_eq!(echo[5], ("capacity".to_string(), "\"inf\"".to_string()));
        assert_eq!(echo.last().unwrap(), &("seed".to_string(), "3".to_string()));
        let text: String = echo.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        assert_eq!(Settings::from_toml_str(&text).unwrap(), s);
    }

    #[test]
    fn defaults_can_be_written_out() {
        let s = Settings::from_toml_str(C0).unwrap().with_sim_defaults();
        assert_eq!(s.mode, Some(SimMode::Original));
        assert_eq!(s.capacity, Some(Capacity::Unbounded));
        assert_eq!((s.horizon, s.burn_in, s.replications, s.seed), (Some(2_000_000), Some(200_000), Some(5), Some(0)));
        assert_eq!(s.sim_config().unwrap(), Settings::from_toml_str(C0).unwrap().sim_config().unwrap());
    }

    #[test]
    fn burn_in_follows_horizon() {
        let s = Settings {
            horizon: Some(50_000),
            ..Settings::default()
        };
        assert_eq!(s.burn_in(), 5_000);
    }
}
