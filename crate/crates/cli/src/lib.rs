//! Command-line experiment runner.
//!
//! Every command resolves its parameters in three layers, later layers
//! winning: a bundled preset, an experiment file given with `--config`, and
//! individual flags. The resolved parameters and seed are written to
//! `manifest.json` in the output directory before anything runs, and
//! `--config <dir>/manifest.json` replays the run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use zpsync_core::harness::{
    self, output, run_moment_validation, run_pdp_sensitivity, run_runtime_scaling, run_sweep,
    SweepAxis, SweepReport,
};
use zpsync_core::presets::{load_preset, ExperimentFile};
use zpsync_core::Error;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(
    name = "zpsync",
    version,
    about = "Timing-offset estimation experiments for zero-padded OFDM"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lock-in probability sweep (default preset fig2).
    Simulate(Common),
    /// Moments and histograms of received samples (default preset table1).
    ValidatePdf(Common),
    /// A-ML lock-in under a mismatched delay profile (default preset fig7).
    Sensitivity(Common),
    /// Runtime scaling of A-ML and ED with the block length.
    Profile(Common),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::ValidatePdf(_) => "validate-pdf",
            Command::Sensitivity(_) => "sensitivity",
            Command::Profile(_) => "profile",
        }
    }

    fn default_preset(&self) -> Option<&'static str> {
        match self {
            Command::Simulate(_) => Some("fig2"),
            Command::ValidatePdf(_) => Some("table1"),
            Command::Sensitivity(_) => Some("fig7"),
            Command::Profile(_) => None,
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Simulate(c)
            | Command::ValidatePdf(c)
            | Command::Sensitivity(c)
            | Command::Profile(c) => c,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Experiment file (TOML) or a manifest.json from an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bundled preset: fig2..fig7, table1, validation.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Master seed; a random one is drawn and recorded when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads, 0 for all cores.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated subset of aml, wed, ed.
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
    /// gaussian or impulsive.
    #[arg(long)]
    pub noise: Option<String>,
    /// SNR in dB; several values make an SNR sweep.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub snr: Option<Vec<f64>>,
    /// Blocks per window; several values make a block-count sweep.
    #[arg(long, value_delimiter = ',')]
    pub blocks: Option<Vec<usize>>,
    /// Antenna pairs as TxR, e.g. 2x2; several values make an antenna sweep.
    #[arg(long, value_delimiter = ',', value_parser = parse_antennas)]
    pub antennas: Option<Vec<(usize, usize)>>,
    /// Inclusive true-delay range as MIN,MAX.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_range)]
    pub delay_range: Option<(i64, i64)>,
    /// Sample indices for validate-pdf.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    /// PDP mismatch magnitudes for sensitivity.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    /// Block-length multipliers for profile.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
}

fn parse_antennas(s: &str) -> Result<(usize, usize), String> {
    let (t, r) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("'{s}' is not of the form TxR"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("'{s}': {e}"));
    Ok((parse(t)?, parse(r)?))
}

fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("'{s}' is not of the form MIN,MAX"))?;
    let parse = |v: &str| v.trim().parse::<i64>().map_err(|e| format!("'{s}': {e}"));
    Ok((parse(a)?, parse(b)?))
}

/// Written to the output directory before any computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<String>,
    pub preset: Option<String>,
    pub out_dir: String,
    pub master_seed: u64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub version: String,
    /// Fully merged parameters, seed included.
    pub experiment: ExperimentFile,
}

/// Failure with its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad parameters or unreadable configuration: exit 2.
    Config(String),
    /// Anything going wrong while running or writing results: exit 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_config_error() {
            CliError::Config(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli.command) {
        Ok(summary) => {
            print!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn read_config(path: &Path) -> CliResult<ExperimentFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    if path.extension().is_some_and(|x| x == "json") {
        let manifest: RunManifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("failed to parse {}: {e}", path.display())))?;
        return Ok(manifest.experiment);
    }
    Ok(ExperimentFile::parse(&text, &path.display().to_string())?)
}

/// A flag with several values sweeps that quantity; a single value sets it
/// and also narrows an existing sweep over the same quantity.
fn flag_layer(c: &Common) -> ExperimentFile {
    let mut f = ExperimentFile {
        trials: c.trials,
        seed: c.seed,
        workers: c.workers,
        estimators: c.estimators.clone(),
        noise: c.noise.clone(),
        delay_range: c.delay_range,
        k: c.k.clone(),
        alphas: c.alphas.clone(),
        sizes: c.sizes.clone(),
        ..Default::default()
    };
    if let Some(v) = &c.snr {
        f.snr_db = v.first().copied();
        if v.len() > 1 {
            f.sweep_snr = Some(v.clone());
        }
    }
    if let Some(v) = &c.blocks {
        f.blocks = v.first().copied();
        if v.len() > 1 {
            f.sweep_blocks = Some(v.clone());
        }
    }
    if let Some(v) = &c.antennas {
        f.m_t = v.first().map(|a| a.0);
        f.m_r = v.first().map(|a| a.1);
        if v.len() > 1 {
            f.sweep_antennas = Some(v.clone());
        }
    }
    f
}

/// Merges preset, config file and flags.
pub fn resolve(command: &Command) -> CliResult<(ExperimentFile, Option<String>)> {
    let c = command.common();
    let preset = match (&c.preset, &c.config) {
        (Some(p), _) => Some(p.clone()),
        (None, None) => command.default_preset().map(String::from),
        (None, Some(_)) => None,
    };
    let mut file = match &preset {
        Some(name) => load_preset(name)?,
        None => ExperimentFile::default(),
    };
    if let Some(path) = &c.config {
        file = file.merge(read_config(path)?);
    }
    let flags = flag_layer(c);
    if c.snr.as_ref().is_some_and(|v| v.len() == 1) && file.sweep_snr.is_some() {
        file.sweep_snr = c.snr.clone();
    }
    if c.blocks.as_ref().is_some_and(|v| v.len() == 1) && file.sweep_blocks.is_some() {
        file.sweep_blocks = c.blocks.clone();
    }
    if c.antennas.as_ref().is_some_and(|v| v.len() == 1) && file.sweep_antennas.is_some() {
        file.sweep_antennas = c.antennas.clone();
    }
    Ok((file.merge(flags), preset))
}

fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn prepare_output(
    command: &Command,
    file: &ExperimentFile,
    preset: Option<String>,
) -> CliResult<PathBuf> {
    let c = command.common();
    let out = c
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(command.name()));
    std::fs::create_dir_all(&out).map_err(|e| {
        CliError::Runtime(format!(
            "cannot create output directory {}: {e}",
            out.display()
        ))
    })?;
    let manifest = RunManifest {
        command: command.name().to_string(),
        config_path: c.config.as_ref().map(|p| p.display().to_string()),
        preset,
        out_dir: out.display().to_string(),
        master_seed: file.seed.expect("seed resolved before manifest"),
        timestamp: now_secs(),
        version: harness::CODE_VERSION.to_string(),
        experiment: file.clone(),
    };
    output::write_json(out.join(MANIFEST_FILE), &manifest)?;
    Ok(out)
}

/// Runs one command and returns the summary to print.
pub fn execute(command: &Command) -> CliResult<String> {
    let (mut file, preset) = resolve(command)?;
    if file.seed.is_none() {
        file.seed = Some(u64::from(rand::random::<u32>()));
    }
    match command {
        Command::Simulate(_) => simulate(command, file, preset),
        Command::ValidatePdf(_) => validate_pdf(command, file, preset),
        Command::Sensitivity(_) => sensitivity(command, file, preset),
        Command::Profile(_) => profile(command, file, preset),
    }
}

fn sweep_table(report: &SweepReport) -> String {
    let mut s = String::new();
    let axis = report.spec.sweep.name();
    let _ = writeln!(
        s,
        "{axis:>10} {:>9} {:>7} {:>8} {:>17}",
        "estimator", "trials", "lock-in", "95% CI"
    );
    for p in &report.points {
        let _ = writeln!(
            s,
            "{:>10} {:>9} {:>7} {:>8.4} [{:.4}, {:.4}]",
            p.axis.to_string(),
            p.estimator.to_string(),
            p.trials,
            p.lock_in,
            p.ci_lo,
            p.ci_hi
        );
    }
    s
}

fn simulate(command: &Command, file: ExperimentFile, preset: Option<String>) -> CliResult<String> {
    let spec = file.to_spec()?;
    spec.setups()?;
    let out = prepare_output(command, &file, preset)?;
    let report = run_sweep(&spec)?;
    output::write_sweep_csv(out.join("sweep.csv"), &report)?;
    output::write_json(out.join("sweep.json"), &report)?;
    let mut s = format!(
        "{}: seed {} -> {}\n",
        spec.name,
        spec.master_seed,
        out.display()
    );
    s.push_str(&sweep_table(&report));
    Ok(s)
}

fn validate_pdf(
    command: &Command,
    file: ExperimentFile,
    preset: Option<String>,
) -> CliResult<String> {
    let config = file.system_config()?;
    let profile = file.delay_profile()?;
    let noise = file.noise_mixture()?;
    let indices = file.k.clone().unwrap_or_else(|| vec![1, 150]);
    let trials = file.trials.unwrap_or(100_000);
    let seed = file.seed.expect("seed resolved");
    let n_s = config.n_s();
    if let Some(&k) = indices.iter().find(|&&k| k >= n_s) {
        return Err(Error::Range {
            what: "sample index k",
            value: k as i64,
            min: 0,
            max: n_s as i64 - 1,
        }
        .into());
    }
    if indices.is_empty() {
        return Err(CliError::Config("k: no sample index given".into()));
    }
    let out = prepare_output(command, &file, preset)?;
    let report = harness::with_pool(file.workers.unwrap_or(0), || {
        run_moment_validation(&config, &profile, &noise, &indices, trials, seed)
    })??;
    output::write_moments_csv(out.join("moments.csv"), &report)?;
    output::write_histogram_csvs(&out, &report)?;
    output::write_json(out.join("moments.json"), &report)?;
    let mut s = format!("{} trials, seed {seed} -> {}\n", trials, out.display());
    let _ = writeln!(
        s,
        "{:>6} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "k", "mean", "variance", "analytic", "skewness", "kurtosis"
    );
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{:>6} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            r.k, r.mean, r.variance, r.analytic_variance, r.skewness, r.kurtosis
        );
    }
    Ok(s)
}

fn sensitivity(
    command: &Command,
    file: ExperimentFile,
    preset: Option<String>,
) -> CliResult<String> {
    let alphas = file
        .alphas
        .clone()
        .or_else(|| file.sweep_pdp_error.clone())
        .unwrap_or_else(|| vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]);
    let base = file.to_spec()?;
    let trials = base.trials;
    let check = zpsync_core::harness::ExperimentSpec {
        sweep: SweepAxis::PdpError(alphas.clone()),
        ..base.clone()
    };
    if let Some(a) = alphas.iter().find(|a| !(0.0..1.0).contains(*a)) {
        return Err(CliError::Config(format!("alphas: {a} not in [0, 1)")));
    }
    check.setups()?;
    let out = prepare_output(command, &file, preset)?;
    let report = run_pdp_sensitivity(&base, &alphas, trials)?;
    output::write_sweep_csv(out.join("sensitivity.csv"), &report)?;
    output::write_json(out.join("sensitivity.json"), &report)?;
    let mut s = format!(
        "pdp sensitivity: seed {} -> {}\n",
        base.master_seed,
        out.display()
    );
    s.push_str(&sweep_table(&report));
    if let Some(first) = report.points.first() {
        let worst = report
            .points
            .iter()
            .map(|p| first.lock_in - p.lock_in)
            .fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(s, "largest loss against alpha = {}: {worst:.4}", first.axis);
    }
    Ok(s)
}

fn profile(command: &Command, file: ExperimentFile, preset: Option<String>) -> CliResult<String> {
    let template = file.system_config()?;
    let pdp = file.delay_profile()?;
    let noise = file.noise_mixture()?;
    let sizes = file.sizes.clone().unwrap_or_else(|| vec![1, 2, 4, 8]);
    let hypotheses = file.profile_hypotheses.unwrap_or(61);
    let trials = file.trials.unwrap_or(20);
    let seed = file.seed.expect("seed resolved");
    if sizes.len() < 3 {
        return Err(CliError::Config(
            "sizes: at least 3 sizes are needed for a slope".into(),
        ));
    }
    if sizes.contains(&0) {
        return Err(CliError::Config(
            "sizes: multipliers must be positive".into(),
        ));
    }
    let out = prepare_output(command, &file, preset)?;
    let report = run_runtime_scaling(&template, &pdp, &noise, &sizes, hypotheses, trials, seed)?;
    output::write_runtime_csv(out.join("runtime.csv"), &report)?;
    output::write_json(out.join("runtime.json"), &report)?;
    let mut s = format!(
        "{hypotheses} hypotheses, {trials} trials -> {}\n",
        out.display()
    );
    let _ = writeln!(
        s,
        "{:>6} {:>8} {:>14} {:>14}",
        "size", "N*n_s", "aml_mean_ms", "ed_mean_ms"
    );
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{:>6} {:>8} {:>14.4} {:>14.4}",
            r.multiplier,
            r.window_len,
            r.aml_mean_ns / 1e6,
            r.ed_mean_ns / 1e6
        );
    }
    let _ = writeln!(s, "aml log-log slope: {:.3}", report.aml_slope);
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Command {
        Cli::try_parse_from(std::iter::once("zpsync").chain(args.iter().copied()))
            .unwrap()
            .command
    }

    #[test]
    fn antenna_and_range_parsers() {
        assert_eq!(parse_antennas("2x1"), Ok((2, 1)));
        assert!(parse_antennas("2-1").is_err());
        assert_eq!(parse_range("-30,30"), Ok((-30, 30)));
        assert!(parse_range("5").is_err());
    }

    #[test]
    fn flags_override_preset() {
        let cmd = parse(&["simulate", "--trials", "7", "--snr", "3", "--seed", "1"]);
        let (f, preset) = resolve(&cmd).unwrap();
        assert_eq!(preset.as_deref(), Some("fig2"));
        assert_eq!(f.trials, Some(7));
        assert_eq!(f.seed, Some(1));
        assert_eq!(f.sweep_snr, Some(vec![3.0]));
    }

    #[test]
    fn several_snr_values_replace_a_foreign_sweep() {
        let cmd = parse(&["simulate", "--preset", "fig3", "--snr", "0,10"]);
        let (f, _) = resolve(&cmd).unwrap();
        assert_eq!(f.sweep_blocks, None);
        assert_eq!(f.sweep_snr, Some(vec![0.0, 10.0]));
    }

    #[test]
    fn single_value_keeps_foreign_sweep() {
        let cmd = parse(&["simulate", "--preset", "fig3", "--snr", "5"]);
        let (f, _) = resolve(&cmd).unwrap();
        assert_eq!(f.snr_db, Some(5.0));
        assert!(f.sweep_blocks.is_some());
        assert_eq!(f.sweep_snr, None);
    }

    #[test]
    fn profile_has_no_default_preset() {
        let (f, preset) = resolve(&parse(&["profile"])).unwrap();
        assert_eq!(preset, None);
        assert_eq!(f, ExperimentFile::default());
    }

    #[test]
    fn missing_config_is_a_config_error() {
        let cmd = parse(&["simulate", "--config", "/no/such/file.toml"]);
        let err = resolve(&cmd).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.message().contains("/no/such/file.toml"));
    }
}
