//! Timing-offset estimators: approximate ML, weighted energy detector and
//! energy detector. All search exhaustively over a contiguous hypothesis set
//! and break ties toward the smallest offset.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::NoiseMixture;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::likelihood::{antenna_slices, LikelihoodTable, VarianceProfile};

/// Contiguous set of offset hypotheses `d_min..=d_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisSet {
    pub d_min: i64,
    pub d_max: i64,
}

impl HypothesisSet {
    pub fn new(d_min: i64, d_max: i64) -> Result<Self> {
        if d_min > d_max {
            return Err(Error::config(
                "hypotheses",
                format!("empty hypothesis set [{d_min}, {d_max}]"),
            ));
        }
        Ok(HypothesisSet { d_min, d_max })
    }

    /// Every offset a block of length `n_s` admits: `-(n_s - 1)..=n_s - 1`.
    pub fn full(n_s: usize) -> Self {
        HypothesisSet {
            d_min: 1 - n_s as i64,
            d_max: n_s as i64 - 1,
        }
    }

    pub fn validate_for(&self, n_s: usize) -> Result<()> {
        let lim = n_s as i64 - 1;
        if self.d_min > self.d_max {
            return Err(Error::config("hypotheses", "empty hypothesis set"));
        }
        for d in [self.d_min, self.d_max] {
            if d < -lim || d > lim {
                return Err(Error::Range {
                    what: "hypothesis",
                    value: d,
                    min: -lim,
                    max: lim,
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        (self.d_max - self.d_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.d_max < self.d_min
    }

    pub fn contains(&self, d: i64) -> bool {
        (self.d_min..=self.d_max).contains(&d)
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> {
        self.d_min..=self.d_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Aml,
    Wed,
    Ed,
}

impl EstimatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Aml => "aml",
            EstimatorKind::Wed => "wed",
            EstimatorKind::Ed => "ed",
        }
    }

    /// WED and ED are only defined for Gaussian noise and non-negative offsets.
    pub fn needs_gaussian_late_start(self) -> bool {
        !matches!(self, EstimatorKind::Aml)
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "aml" | "a-ml" => Ok(EstimatorKind::Aml),
            "wed" => Ok(EstimatorKind::Wed),
            "ed" => Ok(EstimatorKind::Ed),
            other => Err(Error::config(
                "estimators",
                format!("unknown estimator '{other}' (expected aml, wed or ed)"),
            )),
        }
    }
}

/// Estimated offset plus the score of every hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub d_hat: i64,
    pub hypotheses: HypothesisSet,
    /// Log-likelihood (A-ML, maximised) or energy statistic (WED/ED, minimised).
    pub scores: Vec<f64>,
    pub estimator: EstimatorKind,
}

impl EstimateResult {
    pub fn score_of(&self, d: i64) -> Option<f64> {
        self.hypotheses
            .contains(d)
            .then(|| self.scores[(d - self.hypotheses.d_min) as usize])
    }
}

/// Index of the best score; first occurrence wins ties.
fn best_index(scores: &[f64], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if better(s, scores[best]) {
            best = i;
        }
    }
    best
}

/// Approximate ML estimate: maximises the window log-likelihood over `hyp`,
/// summed over every receive antenna in `y`.
pub fn aml_estimate(
    y: &[Vec<Complex64>],
    vp: &VarianceProfile,
    mixture: &NoiseMixture,
    hyp: HypothesisSet,
) -> Result<EstimateResult> {
    let slices = antenna_slices(y)?;
    let hyp = HypothesisSet::new(hyp.d_min, hyp.d_max)?;
    let table = LikelihoodTable::new(vp, mixture);
    let scores = table.scores(&slices, hyp.d_min, hyp.d_max);
    let i = best_index(&scores, |a, b| a > b);
    Ok(EstimateResult {
        d_hat: hyp.d_min + i as i64,
        hypotheses: hyp,
        scores,
        estimator: EstimatorKind::Aml,
    })
}

fn check_late_start(kind: EstimatorKind, hyp: HypothesisSet) -> Result<HypothesisSet> {
    let hyp = HypothesisSet::new(hyp.d_min, hyp.d_max)?;
    if hyp.d_min < 0 {
        return Err(Error::Precondition(format!(
            "{kind} is defined only for non-negative offsets, hypothesis set starts at {}",
            hyp.d_min
        )));
    }
    Ok(hyp)
}

/// Per-sample energy summed over receive antennas.
fn sample_energy(slices: &[&[Complex64]]) -> Vec<f64> {
    let m = slices[0].len();
    (0..m)
        .map(|k| slices.iter().map(|a| a[k].norm_sqr()).sum())
        .collect()
}

/// Weighted energy detector: minimises `sum_k |y[k]|^2 / (kappa_d[k] + sigma_w^2 / 2)`.
///
/// `noise` must be a single Gaussian component.
pub fn wed_estimate(
    y: &[Vec<Complex64>],
    vp: &VarianceProfile,
    noise: &NoiseMixture,
    hyp: HypothesisSet,
) -> Result<EstimateResult> {
    if !noise.is_gaussian() {
        return Err(Error::Precondition(format!(
            "wed requires Gaussian noise, got a {}-component mixture",
            noise.components().len()
        )));
    }
    let hyp = check_late_start(EstimatorKind::Wed, hyp)?;
    let slices = antenna_slices(y)?;
    let half_noise = noise.components()[0].variance / 2.0;
    let weights: Vec<f64> = vp
        .levels()
        .iter()
        .map(|&k| 1.0 / (k + half_noise))
        .collect();
    let energy = sample_energy(&slices);
    let scores: Vec<f64> = hyp
        .iter()
        .map(|d| {
            energy
                .iter()
                .enumerate()
                .map(|(k, e)| e * weights[vp.level_at(d + k as i64)])
                .sum()
        })
        .collect();
    let i = best_index(&scores, |a, b| a < b);
    Ok(EstimateResult {
        d_hat: hyp.d_min + i as i64,
        hypotheses: hyp,
        scores,
        estimator: EstimatorKind::Wed,
    })
}

/// Energy detector: minimises the energy inside the hypothesised zero-tail
/// regions `[n_x + n_h - 1 + r n_s - d, (r + 1) n_s - 1 - d]` for `r < N`.
/// Region parts falling before the window start are skipped.
pub fn ed_estimate(
    y: &[Vec<Complex64>],
    config: &SystemConfig,
    hyp: HypothesisSet,
) -> Result<EstimateResult> {
    let hyp = check_late_start(EstimatorKind::Ed, hyp)?;
    hyp.validate_for(config.n_s())?;
    let slices = antenna_slices(y)?;
    let m = slices[0].len();
    if m < config.window_len() {
        return Err(Error::Precondition(format!(
            "ed needs at least N * n_s = {} samples, window has {m}",
            config.window_len()
        )));
    }
    let n_s = config.n_s() as i64;
    let tail_start = (config.n_x + config.n_h - 1) as i64;
    let scores: Vec<f64> = hyp
        .iter()
        .map(|d| {
            let mut total = 0.0;
            for r in 0..config.blocks as i64 {
                let lo = (tail_start + r * n_s - d).max(0);
                let hi = (r + 1) * n_s - 1 - d;
                for k in lo..=hi {
                    let k = k as usize;
                    total += slices.iter().map(|a| a[k].norm_sqr()).sum::<f64>();
                }
            }
            total
        })
        .collect();
    let i = best_index(&scores, |a, b| a < b);
    Ok(EstimateResult {
        d_hat: hyp.d_min + i as i64,
        hypotheses: hyp,
        scores,
        estimator: EstimatorKind::Ed,
    })
}
