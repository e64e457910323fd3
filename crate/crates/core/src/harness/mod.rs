//! Monte-Carlo experiment engine.
//!
//! Trials are independent work items. Every random draw in trial `t` comes from
//! streams keyed by `(master_seed, t, purpose)` and never by the sweep point,
//! so all points of a sweep see common random numbers: the same offsets,
//! symbols, taps and unit-variance noise, only rescaled or re-weighted.

pub mod moments;
pub mod output;
pub mod runtime;
pub mod stats;

use std::fmt;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{
    scale_mixture_to_snr_ref, DelayProfile, NoiseMixture, ReceiveStream, SnrReference,
};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::estimators::{aml_estimate, ed_estimate, wed_estimate, EstimatorKind, HypothesisSet};
use crate::likelihood::{variance_profile_h0, VarianceProfile};
use crate::rng::{self, Purpose};

pub use moments::{run_moment_validation, MomentReport, MomentRow};
pub use runtime::{run_runtime_scaling, RuntimeReport, RuntimeRow};
pub use stats::{wilson_interval, Histogram, Moments, Z95};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Power delay profile parameterisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PdpSpec {
    Exponential {
        alpha: f64,
        beta: f64,
        normalized: bool,
    },
    Explicit {
        powers: Vec<f64>,
    },
}

impl PdpSpec {
    pub fn build(&self, n_h: usize) -> Result<DelayProfile> {
        match self {
            PdpSpec::Exponential {
                alpha,
                beta,
                normalized,
            } => DelayProfile::exponential(*alpha, *beta, n_h, *normalized),
            PdpSpec::Explicit { powers } => {
                if powers.len() != n_h {
                    return Err(Error::config(
                        "pdp_powers",
                        format!("{} powers given for n_h = {n_h}", powers.len()),
                    ));
                }
                DelayProfile::new(powers.clone())
            }
        }
    }
}

/// The swept parameter and its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", content = "values", rename_all = "snake_case")]
pub enum SweepAxis {
    Snr(Vec<f64>),
    Blocks(Vec<usize>),
    /// `(m_t, m_r)` pairs.
    Antennas(Vec<(usize, usize)>),
    /// Weight of the first mixture component of a two-component mixture.
    ImpulseWeight(Vec<f64>),
    /// PDP mismatch magnitude fed to the estimator.
    PdpError(Vec<f64>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Snr(_) => "snr_db",
            SweepAxis::Blocks(_) => "blocks",
            SweepAxis::Antennas(_) => "antennas",
            SweepAxis::ImpulseWeight(_) => "p0",
            SweepAxis::PdpError(_) => "pdp_error",
        }
    }

    pub fn points(&self) -> Vec<AxisPoint> {
        match self {
            SweepAxis::Snr(v) => v.iter().map(|&x| AxisPoint::Snr(x)).collect(),
            SweepAxis::Blocks(v) => v.iter().map(|&x| AxisPoint::Blocks(x)).collect(),
            SweepAxis::Antennas(v) => v.iter().map(|&(t, r)| AxisPoint::Antennas(t, r)).collect(),
            SweepAxis::ImpulseWeight(v) => v.iter().map(|&x| AxisPoint::ImpulseWeight(x)).collect(),
            SweepAxis::PdpError(v) => v.iter().map(|&x| AxisPoint::PdpError(x)).collect(),
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            SweepAxis::Snr(v) | SweepAxis::ImpulseWeight(v) | SweepAxis::PdpError(v) => {
                v.is_empty()
            }
            SweepAxis::Blocks(v) => v.is_empty(),
            SweepAxis::Antennas(v) => v.is_empty(),
        }
    }
}

/// One value on a sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisPoint {
    Snr(f64),
    Blocks(usize),
    Antennas(usize, usize),
    ImpulseWeight(f64),
    PdpError(f64),
}

impl fmt::Display for AxisPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisPoint::Snr(x) | AxisPoint::ImpulseWeight(x) | AxisPoint::PdpError(x) => {
                write!(f, "{x}")
            }
            AxisPoint::Blocks(n) => write!(f, "{n}"),
            AxisPoint::Antennas(t, r) => write!(f, "{t}x{r}"),
        }
    }
}

/// Full description of a lock-in sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub base: SystemConfig,
    pub pdp: PdpSpec,
    /// Mixture shape before SNR scaling as `(weight, variance)` pairs.
    pub noise: Vec<(f64, f64)>,
    #[serde(default)]
    pub snr_reference: SnrReference,
    pub sweep: SweepAxis,
    pub trials: usize,
    pub master_seed: u64,
    pub estimators: Vec<EstimatorKind>,
    /// True offsets are drawn uniformly from `delay_range.0..=delay_range.1`.
    pub delay_range: (i64, i64),
    /// Search range; defaults to the delay range.
    pub hypotheses: Option<(i64, i64)>,
    /// Worker threads; 0 uses the rayon default.
    #[serde(default)]
    pub workers: usize,
    /// Record per-estimate wall time. Timing makes reports non-reproducible.
    #[serde(default)]
    pub measure_time: bool,
}

/// Everything a trial needs at one sweep point.
#[derive(Debug, Clone)]
pub struct PointSetup {
    pub axis: AxisPoint,
    pub config: SystemConfig,
    pub profile: DelayProfile,
    pub mixture: NoiseMixture,
    pub vp: VarianceProfile,
    pub pdp_error: Option<f64>,
    pub hypotheses: HypothesisSet,
}

impl ExperimentSpec {
    pub fn hypothesis_set(&self) -> Result<HypothesisSet> {
        let (lo, hi) = self.hypotheses.unwrap_or(self.delay_range);
        HypothesisSet::new(lo, hi)
    }

    /// Resolves and checks every sweep point, so precondition errors surface
    /// before any trial runs.
    pub fn setups(&self) -> Result<Vec<PointSetup>> {
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.sweep.is_empty() {
            return Err(Error::config("sweep", "no sweep points"));
        }
        if self.estimators.is_empty() {
            return Err(Error::config("estimators", "no estimator selected"));
        }
        self.sweep
            .points()
            .into_iter()
            .map(|axis| {
                self.setup(axis).map_err(|e| match e {
                    Error::Config { field, reason } => Error::Config {
                        field,
                        reason: format!("{reason} (sweep point {} = {axis})", self.sweep.name()),
                    },
                    Error::Precondition(msg) => Error::Precondition(format!(
                        "{msg} (sweep point {} = {axis})",
                        self.sweep.name()
                    )),
                    other => other,
                })
            })
            .collect()
    }

    fn setup(&self, axis: AxisPoint) -> Result<PointSetup> {
        let mut config = self.base.clone();
        let mut noise = self.noise.clone();
        let mut pdp_error = None;
        match axis {
            AxisPoint::Snr(x) => config.snr_db = x,
            AxisPoint::Blocks(n) => config.blocks = n,
            AxisPoint::Antennas(t, r) => {
                config.m_t = t;
                config.m_r = r;
            }
            AxisPoint::ImpulseWeight(p0) => {
                if noise.len() != 2 {
                    return Err(Error::config(
                        "noise",
                        "impulse-weight sweep needs a two-component mixture",
                    ));
                }
                if !(p0 > 0.0 && p0 < 1.0) {
                    return Err(Error::config("p0", format!("{p0} not in (0, 1)")));
                }
                noise[0].0 = p0;
                noise[1].0 = 1.0 - p0;
            }
            AxisPoint::PdpError(a) => {
                if !(0.0..1.0).contains(&a) {
                    return Err(Error::config(
                        "pdp_error",
                        format!("alpha {a} not in [0, 1)"),
                    ));
                }
                pdp_error = Some(a);
            }
        }
        config.validate()?;
        let profile = self.pdp.build(config.n_h)?;
        let mixture = scale_mixture_to_snr_ref(
            &NoiseMixture::from_pairs(&noise)?,
            config.sigma_x2,
            config.snr_db,
            self.snr_reference,
        )?;
        let hypotheses = self.hypothesis_set()?;
        hypotheses.validate_for(config.n_s())?;
        let delays = HypothesisSet::new(self.delay_range.0, self.delay_range.1)
            .map_err(|_| Error::config("delay_range", "empty delay range"))?;
        delays.validate_for(config.n_s())?;
        for kind in &self.estimators {
            if kind.needs_gaussian_late_start() {
                if !mixture.is_gaussian() {
                    return Err(Error::Precondition(format!(
                        "{kind} requires Gaussian noise, the configured mixture has {} components",
                        mixture.components().len()
                    )));
                }
                if hypotheses.d_min < 0 || delays.d_min < 0 {
                    return Err(Error::Precondition(format!(
                        "{kind} requires non-negative delays and hypotheses"
                    )));
                }
            }
        }
        let vp = variance_profile_h0(&config, &profile)?;
        Ok(PointSetup {
            axis,
            config,
            profile,
            mixture,
            vp,
            pdp_error,
            hypotheses,
        })
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("spec serialises");
        Sha256::digest(&json)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// One estimator's answer in one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimator: EstimatorKind,
    pub d_hat: i64,
    pub elapsed_ns: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial_index: usize,
    pub d_true: i64,
    pub estimates: Vec<Estimate>,
}

/// Lock-in statistics for one estimator at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis: AxisPoint,
    pub estimator: EstimatorKind,
    pub trials: usize,
    pub successes: usize,
    pub lock_in: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub mean_ns: Option<f64>,
}

impl SweepPoint {
    fn from_outcomes(axis: AxisPoint, estimator: EstimatorKind, outcomes: &[TrialOutcome]) -> Self {
        let mut successes = 0;
        let mut ns_total = 0u128;
        let mut timed = 0usize;
        for o in outcomes {
            let e = o
                .estimates
                .iter()
                .find(|e| e.estimator == estimator)
                .expect("every trial runs every estimator");
            if e.d_hat == o.d_true {
                successes += 1;
            }
            if let Some(ns) = e.elapsed_ns {
                ns_total += u128::from(ns);
                timed += 1;
            }
        }
        let trials = outcomes.len();
        let (ci_lo, ci_hi) = wilson_interval(successes, trials, Z95);
        SweepPoint {
            axis,
            estimator,
            trials,
            successes,
            lock_in: successes as f64 / trials as f64,
            ci_lo,
            ci_hi,
            mean_ns: (timed > 0).then(|| ns_total as f64 / timed as f64),
        }
    }

    /// True when this point lies strictly below `other` with disjoint intervals.
    pub fn significantly_below(&self, other: &SweepPoint) -> bool {
        self.ci_hi < other.ci_lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub spec: ExperimentSpec,
    pub config_hash: String,
    pub code_version: String,
    pub points: Vec<SweepPoint>,
    /// Per sweep point, every trial outcome in trial order.
    #[serde(skip)]
    pub outcomes: Vec<Vec<TrialOutcome>>,
}

impl SweepReport {
    /// Points for one estimator, in sweep order.
    pub fn series(&self, estimator: EstimatorKind) -> Vec<&SweepPoint> {
        self.points
            .iter()
            .filter(|p| p.estimator == estimator)
            .collect()
    }
}

/// No later point falls below an earlier one beyond interval overlap.
pub fn non_decreasing_within_overlap(series: &[&SweepPoint]) -> bool {
    series.iter().enumerate().all(|(i, earlier)| {
        series[i + 1..]
            .iter()
            .all(|later| !later.significantly_below(earlier))
    })
}

/// `d_pad` large enough for every configured negative delay.
fn leading_pad(spec: &ExperimentSpec) -> usize {
    (-spec.delay_range.0).max(0) as usize
}

fn draw_delay(trial_seed: u64, range: (i64, i64)) -> i64 {
    rng::stream(trial_seed, Purpose::Delay, 0).random_range(range.0..=range.1)
}

/// Signs for the PDP mismatch, one per tap.
pub fn draw_pdp_signs(trial_seed: u64, n_h: usize) -> Vec<i8> {
    let mut r = rng::stream(trial_seed, Purpose::PdpError, 0);
    (0..n_h)
        .map(|_| if r.random::<bool>() { 1 } else { -1 })
        .collect()
}

fn run_trial(spec: &ExperimentSpec, setup: &PointSetup, trial: usize) -> Result<TrialOutcome> {
    let ts = rng::trial_seed(spec.master_seed, trial as u64);
    let d_true = draw_delay(ts, spec.delay_range);
    let cfg = &setup.config;
    let stream = ReceiveStream::generate(
        cfg,
        &setup.profile,
        Some(&setup.mixture),
        leading_pad(spec),
        cfg.blocks + 1,
        ts,
    )?;
    let y = stream.window(d_true, cfg.window_len())?;

    let mismatched;
    let vp = match setup.pdp_error {
        Some(alpha) if alpha > 0.0 => {
            let signs = draw_pdp_signs(ts, cfg.n_h);
            mismatched = variance_profile_h0(cfg, &setup.profile.perturbed(alpha, &signs)?)?;
            &mismatched
        }
        _ => &setup.vp,
    };

    let mut estimates = Vec::with_capacity(spec.estimators.len());
    for &kind in &spec.estimators {
        let start = spec.measure_time.then(Instant::now);
        let result = match kind {
            EstimatorKind::Aml => aml_estimate(&y, vp, &setup.mixture, setup.hypotheses)?,
            EstimatorKind::Wed => wed_estimate(&y, vp, &setup.mixture, setup.hypotheses)?,
            EstimatorKind::Ed => ed_estimate(&y, cfg, setup.hypotheses)?,
        };
        estimates.push(Estimate {
            estimator: kind,
            d_hat: result.d_hat,
            elapsed_ns: start.map(|s| s.elapsed().as_nanos() as u64),
        });
    }
    Ok(TrialOutcome {
        trial_index: trial,
        d_true,
        estimates,
    })
}

/// Runs `f` on a dedicated pool of `workers` threads, or the global pool for 0.
pub fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    Ok(pool.install(f))
}

/// Runs every trial at every sweep point and aggregates lock-in statistics.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepReport> {
    let setups = spec.setups()?;
    let outcomes = with_pool(spec.workers, || {
        setups
            .iter()
            .map(|setup| {
                (0..spec.trials)
                    .into_par_iter()
                    .map(|t| run_trial(spec, setup, t))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let mut points = Vec::new();
    for (setup, outs) in setups.iter().zip(&outcomes) {
        for &kind in &spec.estimators {
            points.push(SweepPoint::from_outcomes(setup.axis, kind, outs));
        }
    }
    Ok(SweepReport {
        spec: spec.clone(),
        config_hash: spec.config_hash(),
        code_version: CODE_VERSION.to_string(),
        points,
        outcomes,
    })
}

/// A-ML lock-in versus PDP mismatch magnitude. Signs are drawn per trial and
/// shared across all `alphas`, as are all other random draws.
pub fn run_pdp_sensitivity(
    base: &ExperimentSpec,
    alphas: &[f64],
    trials: usize,
) -> Result<SweepReport> {
    if let Some(a) = alphas.iter().find(|a| !(0.0..1.0).contains(*a)) {
        return Err(Error::config("alphas", format!("{a} not in [0, 1)")));
    }
    let spec = ExperimentSpec {
        sweep: SweepAxis::PdpError(alphas.to_vec()),
        trials,
        estimators: vec![EstimatorKind::Aml],
        ..base.clone()
    };
    run_sweep(&spec)
}
