//! The `cogstab` command line.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 when a
//! validation suite has failing records.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::model::Capacity;
use crate::regions::{boundary_polyline, build_region, region_metadata, BoundaryPolyline, StabilityRegion};
use crate::sim::{run, SimMode, STATISTICS};

use super::config::Settings;
use super::svg::{render_region_svg, RegionCurve};
use super::sweep::{write_sweep_csv, SweepParam, SweepSpec};
use super::validate::{
    run_suite, CampaignOptions, Suite, BOUNDARY_HORIZON, CAMPAIGN_REPLICATIONS, GRID_HORIZON,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_VALIDATION_FAILED: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "cogstab", version, about = "Stability regions of an energy-harvesting cognitive access channel")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write frontier CSVs and an SVG plot of the stability region.
    Region {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Number of evenly spaced lambda1 samples on the frontier.
        #[arg(long)]
        n_points: Option<usize>,
        /// Second battery capacity drawn on the same axes (integer or "inf").
        #[arg(long)]
        compare_capacity: Option<Capacity>,
    },
    /// Simulate one scenario and write the replication report CSV.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Simulate a grid of values of one parameter.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// lambda1, lambda2, p, delta or c.
        #[arg(long)]
        sweep_param: Option<SweepParam>,
        /// Comma-separated grid; `inf` is accepted for c.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        sweep_values: Option<Vec<f64>>,
    },
    /// Run a validation campaign; exits with 2 if any record fails.
    Validate {
        /// service-rates, battery, active-fraction, boundary or pstar.
        suite: Suite,
        #[command(flatten)]
        common: CommonArgs,
        /// Slots per replication (suite default if unset).
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        replications: Option<usize>,
        /// Relative distance of boundary probes from the frontier.
        #[arg(long)]
        inset: Option<f64>,
        /// Number of grid points of the p* oracle.
        #[arg(long)]
        p_grid: Option<usize>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML file with the same keys as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub q11: Option<f64>,
    #[arg(long)]
    pub q22: Option<f64>,
    #[arg(long)]
    pub q112: Option<f64>,
    #[arg(long)]
    pub q212: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Battery capacity, an integer or "inf".
    #[arg(long)]
    pub capacity: Option<Capacity>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    /// Secondary access probability while the primary transmits.
    #[arg(long)]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimArgs {
    /// original, dominant1, dominant2 or saturated.
    #[arg(long)]
    pub mode: Option<SimMode>,
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long)]
    pub burn_in: Option<u64>,
    #[arg(long)]
    pub replications: Option<usize>,
    /// Record the first replication's state every this many slots.
    #[arg(long)]
    pub trajectory_stride: Option<u64>,
    #[arg(long)]
    pub trajectory_out: Option<PathBuf>,
}

impl CommonArgs {
    fn apply(&self, s: &mut Settings) {
        s.seed = self.seed;
        s.out = self.out.clone();
    }
}

impl ScenarioArgs {
    fn apply(&self, s: &mut Settings) {
        s.q11 = self.q11;
        s.q22 = self.q22;
        s.q112 = self.q112;
        s.q212 = self.q212;
        s.delta = self.delta;
        s.capacity = self.capacity;
        s.lambda1 = self.lambda1;
        s.lambda2 = self.lambda2;
        s.p = self.p;
    }
}

impl SimArgs {
    fn apply(&self, s: &mut Settings) {
        s.mode = self.mode;
        s.horizon = self.horizon;
        s.burn_in = self.burn_in;
        s.replications = self.replications;
        s.trajectory_stride = self.trajectory_stride;
        s.trajectory_out = self.trajectory_out.clone();
    }
}

/// Parses `args` (program name first), runs the command and maps the outcome
/// to an exit code. Messages go to standard error.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

/// File settings overlaid with the flags that were given.
fn effective_settings(common: &CommonArgs, fill: impl FnOnce(&mut Settings)) -> Result<Settings> {
    let file = match &common.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    let mut flags = Settings::default();
    common.apply(&mut flags);
    fill(&mut flags);
    file.overlay(flags)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_preamble<W: Write>(out: &mut W, pairs: &[(String, String)]) -> Result<()> {
    for (k, v) in pairs {
        writeln!(out, "# {k} = {v}").map_err(|e| Error::io("<output>", e))?;
    }
    Ok(())
}

/// Runs a parsed command and returns its exit code.
pub fn execute(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Region {
            common,
            scenario,
            n_points,
            compare_capacity,
        } => {
            let settings = effective_settings(common, |s| {
                scenario.apply(s);
                s.n_points = *n_points;
                s.compare_capacity = *compare_capacity;
            })?;
            let settings = Settings {
                n_points: Some(settings.n_points()),
                ..settings.with_scenario_defaults()
            };
            region_command(&settings)
        }
        Command::Simulate { common, scenario, sim } => {
            let settings = effective_settings(common, |s| {
                scenario.apply(s);
                sim.apply(s);
            })?;
            simulate_command(&settings.with_sim_defaults())
        }
        Command::Sweep {
            common,
            scenario,
            sim,
            sweep_param,
            sweep_values,
        } => {
            let settings = effective_settings(common, |s| {
                scenario.apply(s);
                sim.apply(s);
                s.sweep_param = *sweep_param;
                s.sweep_values = sweep_values.clone();
            })?;
            sweep_command(&settings.with_sim_defaults())
        }
        Command::Validate {
            suite,
            common,
            horizon,
            replications,
            inset,
            p_grid,
        } => {
            let settings = effective_settings(common, |s| {
                s.horizon = *horizon;
                s.replications = *replications;
                s.inset = *inset;
                s.p_grid = *p_grid;
            })?;
            let settings = Settings {
                seed: Some(settings.seed()),
                horizon: Some(settings.horizon.unwrap_or(match suite {
                    Suite::Boundary => BOUNDARY_HORIZON,
                    _ => GRID_HORIZON,
                })),
                replications: Some(settings.replications.unwrap_or(CAMPAIGN_REPLICATIONS)),
                inset: Some(settings.inset()),
                p_grid: Some(settings.p_grid()),
                ..settings
            };
            validate_command(*suite, &settings)
        }
    }
}

fn capacity_tag(c: Capacity) -> String {
    format!("c{c}")
}

/// Writes `boundary_c<capacity>.csv` per battery case and `region.svg` into
/// the output directory (default: the working directory).
pub fn region_command(settings: &Settings) -> Result<u8> {
    let channel = settings.channel()?;
    let energy = settings.energy()?;
    let n = settings.n_points();
    let dir = settings.out.clone().unwrap_or_else(|| PathBuf::from("."));

    let mut energies = vec![energy];
    if let Some(c) = settings.compare_capacity {
        if c != energy.capacity() {
            energies.push(energy.with_capacity(c));
        }
    }
    let regions: Vec<StabilityRegion> = energies.iter().map(|e| build_region(&channel, e)).collect();
    let polylines: Vec<BoundaryPolyline> = regions
        .iter()
        .map(|r| boundary_polyline(r, n))
        .collect::<Result<_>>()?;

    let config_echo: Vec<(String, String)> = settings
        .echo()
        .into_iter()
        .map(|(k, v)| (format!("config.{k}"), v))
        .collect();
    for (region, poly) in regions.iter().zip(&polylines) {
        let path = dir.join(format!("boundary_{}.csv", capacity_tag(region.energy().capacity())));
        let mut preamble = region_metadata(region);
        preamble.extend(config_echo.iter().cloned());
        let mut out = create(&path)?;
        poly.write_csv(&mut out, &preamble)?;
        println!("wrote {}", path.display());
    }

    let curves: Vec<RegionCurve<'_>> = regions
        .iter()
        .zip(&polylines)
        .map(|(region, polyline)| RegionCurve { region, polyline })
        .collect();
    let title = format!(
        "q11={} q22={} q112={} q212={} (eta={:.4})",
        channel.q11(),
        channel.q22(),
        channel.q112(),
        channel.q212(),
        channel.eta()
    );
    let path = dir.join("region.svg");
    let mut out = create(&path)?;
    out.write_all(render_region_svg(&curves, &title).as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(&path, e))?;
    println!("wrote {}", path.display());
    Ok(EXIT_OK)
}

/// Writes the report CSV to `out` (standard output if unset) and prints
/// the aggregate when writing to a file.
pub fn simulate_command(settings: &Settings) -> Result<u8> {
    let config = settings.sim_config()?;
    if config.trajectory_stride.is_some() && settings.trajectory_out.is_none() {
        return Err(Error::InvalidConfig(
            "trajectory_stride needs trajectory_out".into(),
        ));
    }
    let report = run(&config)?;
    let preamble = settings.echo();

    match &settings.out {
        Some(path) => {
            let mut out = create(path)?;
            write_preamble(&mut out, &preamble)?;
            report.write_csv(&mut out)?;
            for ((name, _), est) in STATISTICS.iter().zip(&report.estimates) {
                println!("{name} = {} ± {}", est.mean, est.ci_halfwidth);
            }
            println!("stable1 = {}", report.stable1);
            println!("stable2 = {}", report.stable2);
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            write_preamble(&mut out, &preamble)?;
            report.write_csv(&mut out)?;
        }
    }

    if let Some(path) = &settings.trajectory_out {
        let mut out = create(path)?;
        write_preamble(&mut out, &preamble)?;
        report.write_trajectory_csv(&mut out)?;
    }
    Ok(EXIT_OK)
}

pub fn sweep_command(settings: &Settings) -> Result<u8> {
    let param = settings
        .sweep_param
        .ok_or_else(|| Error::InvalidConfig("sweep needs sweep_param".into()))?;
    let values = settings
        .sweep_values
        .clone()
        .ok_or_else(|| Error::InvalidConfig("sweep needs sweep_values".into()))?;
    let base = settings.sim_config()?;
    let spec = SweepSpec {
        template: base.scenario,
        param,
        values,
        mode: base.mode,
        horizon: base.horizon,
        burn_in: base.burn_in,
        replications: base.replications,
        seed: base.seed,
    };
    let rows = spec.run()?;
    let preamble = settings.echo();
    match &settings.out {
        Some(path) => write_sweep_csv(create(path)?, param, &rows, &preamble)?,
        None => write_sweep_csv(io::stdout().lock(), param, &rows, &preamble)?,
    }
    Ok(EXIT_OK)
}

/// Runs one suite, writes its CSV and lists failing records on standard
/// error.
pub fn validate_command(suite: Suite, settings: &Settings) -> Result<u8> {
    let opts = CampaignOptions {
        seed: settings.seed(),
        horizon: settings.horizon,
        replications: settings.replications,
        inset: settings.inset(),
        p_grid: settings.p_grid(),
    };
    let report = run_suite(suite, &opts)?;
    let mut preamble = vec![("suite".to_string(), format!("\"{suite}\""))];
    preamble.extend(settings.echo());
    match &settings.out {
        Some(path) => report.write_csv(create(path)?, &preamble)?,
        None => report.write_csv(io::stdout().lock(), &preamble)?,
    }
    eprintln!("{suite}: {}", report.summary());
    if report.all_pass() {
        return Ok(EXIT_OK);
    }
    for r in report.failures() {
        eprintln!(
            "FAIL {} {}: analytic {} simulated {} (ci95 {}, abs_tol {})",
            r.case, r.quantity, r.analytic, r.simulated, r.ci_halfwidth, r.abs_tol
        );
    }
    Ok(EXIT_VALIDATION_FAILED)
}
