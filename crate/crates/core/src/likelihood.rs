//! Hypothesis-indexed variance profile and the approximate sample likelihood.
//!
//! Under hypothesis `d` the noiseless in-phase component at window index `k`
//! is modelled as `N(0, kappa)` with `kappa` read from the H0 variance profile
//! at stream index `d + k`. Convolving with the mixture noise gives, per real
//! component, `B(z, kappa) = sum_l p_l N(z; 0, kappa + sigma_l^2 / 2)` and per
//! complex sample `P(c, kappa) = B(Re c, kappa) B(Im c, kappa)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{DelayProfile, NoiseMixture};
use crate::config::SystemConfig;
use crate::error::{Error, Result};

/// Per-sample variances of the noiseless in-phase component under H0.
///
/// Conceptually a two-sided sequence: zero for negative indices and periodic
/// with period `n_s` from index 0 on. Only one period (`body`) is stored.
/// Distinct values are interned as levels so the likelihood can be tabulated
/// per level instead of per hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceProfile {
    body: Vec<f64>,
    levels: Vec<f64>,
    level_of: Vec<u16>,
}

impl VarianceProfile {
    /// Wraps an explicit body. Level 0 is always the value 0.
    pub fn from_body(body: Vec<f64>) -> Result<Self> {
        if body.is_empty() {
            return Err(Error::config("variance_profile", "body must be non-empty"));
        }
        if body.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::config(
                "variance_profile",
                "variances must be finite and >= 0",
            ));
        }
        let mut levels: Vec<f64> = vec![0.0];
        let mut level_of = Vec::with_capacity(body.len());
        for &v in &body {
            let id = match levels.iter().position(|&l| l.to_bits() == v.to_bits()) {
                Some(id) => id,
                None => {
                    levels.push(v);
                    levels.len() - 1
                }
            };
            level_of.push(u16::try_from(id).map_err(|_| {
                Error::config("variance_profile", "too many distinct variance levels")
            })?);
        }
        Ok(VarianceProfile {
            body,
            levels,
            level_of,
        })
    }

    pub fn body(&self) -> &[f64] {
        &self.body
    }

    pub fn n_s(&self) -> usize {
        self.body.len()
    }

    /// Distinct variance values; index 0 is 0.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Variance at stream index `index`.
    #[inline]
    pub fn at(&self, index: i64) -> f64 {
        self.levels[self.level_at(index)]
    }

    /// Level id at stream index `index`.
    #[inline]
    pub fn level_at(&self, index: i64) -> usize {
        if index < 0 {
            0
        } else {
            self.level_of[(index as u64 % self.body.len() as u64) as usize] as usize
        }
    }
}

/// H0 variance profile from the range map: for `0 <= k <= n_x + n_h - 2` the
/// variance is `sigma_x^2 / 2 * sum_{r=a}^{b} power_r` with
/// `(a, b) = (0, k)`, `(0, n_h - 1)` or `(k - n_x + 1, n_h - 1)` for the rising
/// edge, plateau and falling edge; the remaining zero-pad tail is 0.
///
/// With several transmit antennas each contributes `sigma_x^2 / m_t` through an
/// independent channel with the same profile, which sums back to the SISO value.
pub fn variance_profile_h0(
    config: &SystemConfig,
    profile: &DelayProfile,
) -> Result<VarianceProfile> {
    config.validate()?;
    if profile.len() != config.n_h {
        return Err(Error::config(
            "pdp",
            format!(
                "profile has {} taps, config n_h = {}",
                profile.len(),
                config.n_h
            ),
        ));
    }
    let (n_x, n_h, n_s) = (config.n_x, config.n_h, config.n_s());
    let powers = profile.powers();
    let half_power = config.per_antenna_power() * config.m_t as f64 / 2.0;
    let body = (0..n_s)
        .map(|k| {
            let range = if k + 1 < n_h {
                Some((0, k))
            } else if k < n_x {
                Some((0, n_h - 1))
            } else if k + 1 < n_x + n_h {
                Some((k + 1 - n_x, n_h - 1))
            } else {
                None
            };
            match range {
                Some((a, b)) => powers[a..=b].iter().sum::<f64>() * half_power,
                None => 0.0,
            }
        })
        .collect();
    VarianceProfile::from_body(body)
}

/// The profile seen by hypothesis `d` over a window of `m` samples.
pub fn profile_window(vp: &VarianceProfile, d: i64, m: usize) -> Vec<f64> {
    (0..m as i64).map(|k| vp.at(d + k)).collect()
}

/// Precomputed mixture constants for log-domain evaluation.
#[derive(Debug, Clone)]
pub struct MixtureKernel {
    log_weights: Vec<f64>,
    half_variances: Vec<f64>,
}

/// `(log p_l - ln(2 pi v_l) / 2, 1 / (2 v_l))` per component at one kappa.
#[derive(Debug, Clone)]
pub struct LevelTerms {
    offset: Vec<f64>,
    curvature: Vec<f64>,
}

impl MixtureKernel {
    pub fn new(mixture: &NoiseMixture) -> Self {
        MixtureKernel {
            log_weights: mixture.components().iter().map(|c| c.weight.ln()).collect(),
            half_variances: mixture
                .components()
                .iter()
                .map(|c| c.variance / 2.0)
                .collect(),
        }
    }

    pub fn terms(&self, kappa: f64) -> LevelTerms {
        let mut offset = Vec::with_capacity(self.log_weights.len());
        let mut curvature = Vec::with_capacity(self.log_weights.len());
        for (lw, hv) in self.log_weights.iter().zip(&self.half_variances) {
            let v = kappa + hv;
            offset.push(lw - 0.5 * (2.0 * PI * v).ln());
            curvature.push(0.5 / v);
        }
        LevelTerms { offset, curvature }
    }
}

impl LevelTerms {
    /// `ln B(z, kappa)` by max-shifted log-sum-exp over components.
    #[inline]
    pub fn log_b(&self, z: f64) -> f64 {
        let z2 = z * z;
        if self.offset.len() == 1 {
            return self.offset[0] - self.curvature[0] * z2;
        }
        let mut max = f64::NEG_INFINITY;
        for (o, c) in self.offset.iter().zip(&self.curvature) {
            max = max.max(o - c * z2);
        }
        let sum: f64 = self
            .offset
            .iter()
            .zip(&self.curvature)
            .map(|(o, c)| (o - c * z2 - max).exp())
            .sum();
        max + sum.ln()
    }

    /// `ln P(c, kappa)`.
    #[inline]
    pub fn log_p(&self, c: Complex64) -> f64 {
        self.log_b(c.re) + self.log_b(c.im)
    }
}

fn check_shape(param: &str, t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!(
            "{param} must be finite and >= 0, got {t}"
        )));
    }
    Ok(())
}

/// `B(z, t) = sum_l p_l (2 pi (t + sigma_l^2/2))^(-1/2) exp(-z^2 / (2 (t + sigma_l^2/2)))`.
pub fn b_function(z: f64, t: f64, mixture: &NoiseMixture) -> Result<f64> {
    Ok(log_b_function(z, t, mixture)?.exp())
}

pub fn log_b_function(z: f64, t: f64, mixture: &NoiseMixture) -> Result<f64> {
    check_shape("t", t)?;
    Ok(MixtureKernel::new(mixture).terms(t).log_b(z))
}

/// `P(c, kappa) = B(Re c, kappa) B(Im c, kappa)`.
pub fn p_function(c: Complex64, kappa: f64, mixture: &NoiseMixture) -> Result<f64> {
    Ok(log_p_function(c, kappa, mixture)?.exp())
}

pub fn log_p_function(c: Complex64, kappa: f64, mixture: &NoiseMixture) -> Result<f64> {
    check_shape("kappa", kappa)?;
    Ok(MixtureKernel::new(mixture).terms(kappa).log_p(c))
}

/// Log-likelihood of one hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisScore {
    pub d: i64,
    pub loglik: f64,
}

/// Likelihood terms for every variance level of one profile under one mixture.
///
/// Built once per (profile, mixture) and shared read-only across hypotheses.
#[derive(Debug, Clone)]
pub struct LikelihoodTable<'a> {
    vp: &'a VarianceProfile,
    terms: Vec<LevelTerms>,
}

impl<'a> LikelihoodTable<'a> {
    pub fn new(vp: &'a VarianceProfile, mixture: &NoiseMixture) -> Self {
        let kernel = MixtureKernel::new(mixture);
        LikelihoodTable {
            vp,
            terms: vp.levels().iter().map(|&k| kernel.terms(k)).collect(),
        }
    }

    pub fn profile(&self) -> &VarianceProfile {
        self.vp
    }

    /// `sum_j ln P(y_j[k], level)`.
    #[inline]
    fn sample_term(&self, y: &[&[Complex64]], k: usize, level: usize) -> f64 {
        let t = &self.terms[level];
        y.iter().map(|ant| t.log_p(ant[k])).sum()
    }

    /// Window log-likelihood under hypothesis `d`.
    pub fn score(&self, y: &[&[Complex64]], d: i64) -> f64 {
        let m = y.first().map_or(0, |a| a.len());
        (0..m)
            .map(|k| self.sample_term(y, k, self.vp.level_at(d + k as i64)))
            .sum()
    }

    /// Log-likelihood for every `d` in `d_min..=d_max`.
    ///
    /// Sample-major traversal: each sample's term is evaluated once per distinct
    /// level it meets across the hypothesis range and reused, while every score
    /// still accumulates over `k` in ascending order, so results are identical
    /// to [`LikelihoodTable::score`].
    pub fn scores(&self, y: &[&[Complex64]], d_min: i64, d_max: i64) -> Vec<f64> {
        let m = y.first().map_or(0, |a| a.len());
        let count = (d_max - d_min + 1).max(0) as usize;
        let mut scores = vec![0.0; count];
        let n_levels = self.terms.len();
        let mut cache = vec![0.0; n_levels];
        let mut stamp = vec![usize::MAX; n_levels];
        for k in 0..m {
            let base = d_min + k as i64;
            for (i, score) in scores.iter_mut().enumerate() {
                let level = self.vp.level_at(base + i as i64);
                if stamp[level] != k {
                    cache[level] = self.sample_term(y, k, level);
                    stamp[level] = k;
                }
                *score += cache[level];
            }
        }
        scores
    }
}

pub(crate) fn antenna_slices(y: &[Vec<Complex64>]) -> Result<Vec<&[Complex64]>> {
    let m = y.first().map_or(0, Vec::len);
    if y.is_empty() || m == 0 {
        return Err(Error::Precondition("window has no samples".into()));
    }
    if y.iter().any(|a| a.len() != m) {
        return Err(Error::Precondition(
            "all receive antennas must share one window length".into(),
        ));
    }
    Ok(y.iter().map(Vec::as_slice).collect())
}

/// `sum_j sum_k ln P(y_j[k], profile_window(vp, d, m)[k])`.
pub fn window_loglik(
    y: &[Vec<Complex64>],
    d: i64,
    vp: &VarianceProfile,
    mixture: &NoiseMixture,
) -> Result<HypothesisScore> {
    let slices = antenna_slices(y)?;
    let table = LikelihoodTable::new(vp, mixture);
    Ok(HypothesisScore {
        d,
        loglik: table.score(&slices, d),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss2() -> NoiseMixture {
        NoiseMixture::gaussian(2.0).unwrap()
    }

    fn impulsive_mixture() -> NoiseMixture {
        NoiseMixture::from_pairs(&[(0.99, 1.0), (0.01, 100.0)]).unwrap()
    }

    fn cfg(n_x: usize, n_z: usize, n_h: usize) -> SystemConfig {
        SystemConfig {
            n_x,
            n_z,
            n_h,
            sigma_x2: 1.0,
            ..SystemConfig::reference()
        }
    }

    #[test]
    fn single_tap_profile() {
        let c = cfg(8, 3, 1);
        let vp = variance_profile_h0(&c, &DelayProfile::new(vec![1.0]).unwrap()).unwrap();
        let mut want = vec![0.5; 8];
        want.extend([0.0; 3]);
        assert_eq!(vp.body(), want.as_slice());
    }

    #[test]
    fn two_tap_hand_summed_profile() {
        let c = cfg(4, 3, 2);
        let vp = variance_profile_h0(&c, &DelayProfile::new(vec![0.8, 0.2]).unwrap()).unwrap();
        let want = [0.4, 0.5, 0.5, 0.5, 0.1, 0.0, 0.0];
        for (g, w) in vp.body().iter().zip(want) {
            assert!((g - w).abs() < 1e-15, "{:?}", vp.body());
        }
    }

    #[test]
    fn reference_profile_regions() {
        let c = cfg(512, 20, 10);
        let pdp = DelayProfile::exponential(0.396, 0.5, 10, false).unwrap();
        let vp = variance_profile_h0(&c, &pdp).unwrap();
        let plateau = 0.5 * pdp.total_power();
        assert!((vp.body()[150] - plateau).abs() < 1e-15);
        assert!((vp.body()[150] - 0.5).abs() < 1e-3);
        assert!(vp.body()[9..512].iter().all(|&v| v == vp.body()[150]));
        assert!(vp.body()[521..].iter().all(|&v| v == 0.0));
        assert!(vp.body()[520] > 0.0);
        // zero, plateau, 9 rising and 9 falling edge values
        assert_eq!(vp.levels().len(), 20);
    }

    #[test]
    fn plateau_is_independent_of_transmit_antennas() {
        let pdp = DelayProfile::exponential(1.0, 0.05, 10, true).unwrap();
        for m_t in 1..=4 {
            let c = SystemConfig {
                m_t,
                ..cfg(512, 20, 10)
            };
            let vp = variance_profile_h0(&c, &pdp).unwrap();
            assert!((vp.body()[100] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn profile_rejects_tap_mismatch() {
        let c = cfg(8, 3, 2);
        assert!(variance_profile_h0(&c, &DelayProfile::new(vec![1.0]).unwrap()).is_err());
    }

    #[test]
    fn window_shifts() {
        let c = cfg(6, 3, 2);
        let vp = variance_profile_h0(&c, &DelayProfile::new(vec![0.7, 0.3]).unwrap()).unwrap();
        let n_s = 9;
        assert_eq!(profile_window(&vp, 0, n_s), vp.body());
        let w = profile_window(&vp, -3, n_s);
        assert_eq!(&w[..3], &[0.0; 3]);
        assert_eq!(&w[3..], &vp.body()[..n_s - 3]);
    }

    #[test]
    fn b_function_values() {
        let v = b_function(0.0, 0.0, &gauss2()).unwrap();
        assert!((v - 0.398_942_280_401_432_7).abs() < 1e-15);
        for (z, t) in [(0.3, 0.0), (2.5, 1.2), (-7.0, 4.0)] {
            let mix = impulsive_mixture();
            assert_eq!(
                b_function(z, t, &mix).unwrap(),
                b_function(-z, t, &mix).unwrap()
            );
        }
        assert!(matches!(
            b_function(0.0, -1e-9, &gauss2()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn b_function_two_component_value() {
        // 0.99 N(1; 0, 1) + 0.01 N(1; 0, 50.5), evaluated term by term
        let n = |x: f64, v: f64| (-(x * x) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt();
        let want = 0.99 * n(1.0, 1.0) + 0.01 * n(1.0, 50.5);
        let got = b_function(1.0, 0.5, &impulsive_mixture()).unwrap();
        assert!(((got - want) / want).abs() < 1e-14);
        assert!((want - 0.240_106_876_004_674_3).abs() < 1e-15);
    }

    #[test]
    fn p_function_values() {
        let v = p_function(Complex64::new(0.0, 0.0), 0.0, &gauss2()).unwrap();
        assert!((v - 1.0 / (2.0 * PI)).abs() < 1e-15);
        let c = Complex64::new(0.7, -1.3);
        let mix = impulsive_mixture();
        assert_eq!(
            p_function(c, 0.4, &mix).unwrap(),
            p_function(c.conj(), 0.4, &mix).unwrap()
        );
        assert!(p_function(c, -0.1, &mix).is_err());
    }

    #[test]
    fn log_b_survives_extreme_arguments() {
        let mix = impulsive_mixture();
        let lb = log_b_function(1e4, 0.0, &mix).unwrap();
        assert!(lb.is_finite());
        // far tail is governed by the wide component
        let wide = 0.01f64.ln() - 0.5 * (2.0 * PI * 50.0).ln() - 1e8 / 100.0;
        assert!((lb - wide).abs() < 1e-9);
    }

    #[test]
    fn b_peak_decreases_in_t() {
        let mix = impulsive_mixture();
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let b = b_function(0.0, i as f64 * 0.1, &mix).unwrap();
            assert!(b < prev);
            prev = b;
        }
    }

    #[test]
    fn single_sample_loglik() {
        let vp = VarianceProfile::from_body(vec![0.0]).unwrap();
        let s = window_loglik(&[vec![Complex64::new(0.0, 0.0)]], 0, &vp, &gauss2()).unwrap();
        assert!((s.loglik - (1.0 / (2.0 * PI)).ln()).abs() < 1e-15);
        assert!((s.loglik + 1.837_877_066_409_345_3).abs() < 1e-12);
    }

    #[test]
    fn loglik_rejects_ragged_antennas() {
        let vp = VarianceProfile::from_body(vec![0.5, 0.0]).unwrap();
        let y = vec![
            vec![Complex64::new(0.0, 0.0); 3],
            vec![Complex64::new(0.0, 0.0); 2],
        ];
        assert!(window_loglik(&y, 0, &vp, &gauss2()).is_err());
        assert!(window_loglik(&[], 0, &vp, &gauss2()).is_err());
    }
}
