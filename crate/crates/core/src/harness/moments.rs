//! Empirical check of the per-sample Gaussian-mixture approximation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{Histogram, Moments};
use crate::channel::{scale_mixture_to_snr, DelayProfile, NoiseMixture, ReceiveStream};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::likelihood::{b_function, variance_profile_h0};
use crate::rng;

/// Moments of the in-phase received sample at one index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub k: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub analytic_mean: f64,
    /// `sum_l p_l (kappa_k + sigma_l^2 / 2)`.
    pub analytic_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexHistogram {
    pub k: usize,
    pub histogram: Histogram,
    /// Analytic density at each bin centre.
    pub analytic_density: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub trials: usize,
    pub seed: u64,
    pub snr_db: f64,
    pub mixture: NoiseMixture,
    pub rows: Vec<MomentRow>,
    pub histograms: Vec<IndexHistogram>,
}

impl MomentReport {
    pub fn row(&self, k: usize) -> Option<&MomentRow> {
        self.rows.iter().find(|r| r.k == k)
    }
}

const MAX_BINS: usize = 200;

/// Simulates `trials` single-block windows at offset 0 and collects the
/// in-phase samples at `indices`. `noise_shape` is rescaled to `config.snr_db`.
pub fn run_moment_validation(
    config: &SystemConfig,
    profile: &DelayProfile,
    noise_shape: &NoiseMixture,
    indices: &[usize],
    trials: usize,
    seed: u64,
) -> Result<MomentReport> {
    config.validate()?;
    if trials < 2 {
        return Err(Error::config(
            "trials",
            "moment validation needs at least 2 trials",
        ));
    }
    if indices.is_empty() {
        return Err(Error::config("k", "no sample index given"));
    }
    let n_s = config.n_s();
    if let Some(&k) = indices.iter().find(|&&k| k >= n_s) {
        return Err(Error::Range {
            what: "sample index k",
            value: k as i64,
            min: 0,
            max: n_s as i64 - 1,
        });
    }
    let mixture = scale_mixture_to_snr(noise_shape, config.sigma_x2, config.snr_db)?;
    let vp = variance_profile_h0(config, profile)?;

    let per_trial: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let ts = rng::trial_seed(seed, t as u64);
            let stream = ReceiveStream::generate(config, profile, Some(&mixture), 0, 1, ts)?;
            Ok(indices
                .iter()
                .map(|&k| stream.at(0, k as i64).expect("index inside first block").re)
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(indices.len());
    let mut histograms = Vec::with_capacity(indices.len());
    for (j, &k) in indices.iter().enumerate() {
        let samples: Vec<f64> = per_trial.iter().map(|v| v[j]).collect();
        let m = Moments::of(&samples);
        let kappa = vp.body()[k];
        let analytic_variance = mixture
            .components()
            .iter()
            .map(|c| c.weight * (kappa + c.variance / 2.0))
            .sum();
        rows.push(MomentRow {
            k,
            mean: m.mean,
            variance: m.variance,
            skewness: m.skewness,
            kurtosis: m.kurtosis,
            analytic_mean: 0.0,
            analytic_variance,
        });
        let histogram = Histogram::freedman_diaconis(&samples, MAX_BINS);
        let analytic_density = histogram
            .centres()
            .iter()
            .map(|&z| b_function(z, kappa, &mixture))
            .collect::<Result<_>>()?;
        histograms.push(IndexHistogram {
            k,
            histogram,
            analytic_density,
        });
    }
    Ok(MomentReport {
        trials,
        seed,
        snr_db: config.snr_db,
        mixture,
        rows,
        histograms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (SystemConfig, DelayProfile) {
        let cfg = SystemConfig {
            n_x: 64,
            n_z: 8,
            n_h: 4,
            blocks: 1,
            mod_order: 16,
            snr_db: 10.0,
            ..SystemConfig::reference()
        };
        let pdp = DelayProfile::exponential(1.0, 0.5, 4, true).unwrap();
        (cfg, pdp)
    }

    #[test]
    fn variance_tracks_profile() {
        let (cfg, pdp) = small();
        let noise = NoiseMixture::gaussian(1.0).unwrap();
        let r = run_moment_validation(&cfg, &pdp, &noise, &[0, 30, 70], 4000, 9).unwrap();
        assert_eq!(r.rows.len(), 3);
        for row in &r.rows {
            let rel = (row.variance - row.analytic_variance).abs() / row.analytic_variance;
            assert!(
                rel < 0.08,
                "k = {}: {} vs {}",
                row.k,
                row.variance,
                row.analytic_variance
            );
            assert!(row.skewness.abs() < 0.25);
        }
        // index 70 lies in the zero tail: pure noise, variance 0.1 / 2
        assert!((r.row(70).unwrap().analytic_variance - 0.05).abs() < 1e-12);
        let h = &r.histograms[1];
        assert_eq!(h.analytic_density.len(), h.histogram.counts.len());
    }

    #[test]
    fn deterministic() {
        let (cfg, pdp) = small();
        let noise = NoiseMixture::from_pairs(&[(0.9, 1.0), (0.1, 100.0)]).unwrap();
        let a = run_moment_validation(&cfg, &pdp, &noise, &[5], 200, 1).unwrap();
        let b = run_moment_validation(&cfg, &pdp, &noise, &[5], 200, 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn index_bounds_checked() {
        let (cfg, pdp) = small();
        let noise = NoiseMixture::gaussian(1.0).unwrap();
        let err = run_moment_validation(&cfg, &pdp, &noise, &[72], 10, 1).unwrap_err();
        assert!(matches!(err, Error::Range { max: 71, .. }));
        assert!(run_moment_validation(&cfg, &pdp, &noise, &[71], 10, 1).is_ok());
    }
}
