//! Wall-clock scaling of the estimators with window size.

use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::stats::ols_slope;
use crate::channel::{scale_mixture_to_snr, DelayProfile, NoiseMixture, ReceiveStream};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::estimators::{aml_estimate, ed_estimate, HypothesisSet};
use crate::likelihood::variance_profile_h0;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeRow {
    pub multiplier: usize,
    pub n_x: usize,
    pub n_z: usize,
    /// Window length `N * n_s`.
    pub window_len: usize,
    pub aml_mean_ns: f64,
    pub ed_mean_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeReport {
    pub hypotheses: usize,
    pub trials: usize,
    pub rows: Vec<RuntimeRow>,
    /// Log-log least-squares slope of A-ML time against window length.
    pub aml_slope: f64,
    /// A-ML time ratio between consecutive sizes, with the size ratio.
    pub ratios: Vec<(f64, f64)>,
}

/// Times A-ML and ED on windows whose `n_x` and `n_z` are scaled by each
/// multiplier, with the hypothesis set fixed to `0..hypotheses`.
pub fn run_runtime_scaling(
    template: &SystemConfig,
    profile: &DelayProfile,
    noise_shape: &NoiseMixture,
    multipliers: &[usize],
    hypotheses: usize,
    trials: usize,
    seed: u64,
) -> Result<RuntimeReport> {
    if multipliers.len() < 3 {
        return Err(Error::config(
            "sizes",
            "at least 3 sizes are needed for a slope",
        ));
    }
    if multipliers.contains(&0) {
        return Err(Error::config("sizes", "multipliers must be positive"));
    }
    if trials == 0 || hypotheses == 0 {
        return Err(Error::config(
            "trials",
            "trials and hypotheses must be positive",
        ));
    }
    let hyp = HypothesisSet::new(0, hypotheses as i64 - 1)?;

    let mut rows = Vec::with_capacity(multipliers.len());
    for &mult in multipliers {
        let cfg = SystemConfig {
            n_x: template.n_x * mult,
            n_z: template.n_z * mult,
            ..template.clone()
        };
        hyp.validate_for(cfg.n_s())?;
        let mixture = scale_mixture_to_snr(noise_shape, cfg.sigma_x2, cfg.snr_db)?;
        let vp = variance_profile_h0(&cfg, profile)?;
        let mut aml_ns = 0u128;
        let mut ed_ns = 0u128;
        for t in 0..=trials {
            let ts = rng::trial_seed(seed, t as u64);
            let y = ReceiveStream::generate(&cfg, profile, Some(&mixture), 0, cfg.blocks + 1, ts)?
                .window(0, cfg.window_len())?;
            let start = Instant::now();
            black_box(aml_estimate(black_box(&y), &vp, &mixture, hyp)?);
            let a = start.elapsed().as_nanos();
            let start = Instant::now();
            black_box(ed_estimate(black_box(&y), &cfg, hyp)?);
            let e = start.elapsed().as_nanos();
            // trial 0 warms caches and is discarded
            if t > 0 {
                aml_ns += a;
                ed_ns += e;
            }
        }
        rows.push(RuntimeRow {
            multiplier: mult,
            n_x: cfg.n_x,
            n_z: cfg.n_z,
            window_len: cfg.window_len(),
            aml_mean_ns: aml_ns as f64 / trials as f64,
            ed_mean_ns: ed_ns as f64 / trials as f64,
        });
    }
    let lx: Vec<f64> = rows.iter().map(|r| (r.window_len as f64).ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.aml_mean_ns.ln()).collect();
    let ratios = rows
        .windows(2)
        .map(|w| {
            (
                w[1].aml_mean_ns / w[0].aml_mean_ns,
                w[1].window_len as f64 / w[0].window_len as f64,
            )
        })
        .collect();
    Ok(RuntimeReport {
        hypotheses,
        trials,
        rows,
        aml_slope: ols_slope(&lx, &ly),
        ratios,
    })
}
