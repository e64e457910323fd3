//! Flat key/value experiment files and the bundled named presets.
//!
//! Every key is optional. Files are overlaid with [`ExperimentFile::merge`],
//! later layers winning, and then resolved against built-in defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{DelayProfile, NoiseMixture, SnrReference};
use crate::config::{Fading, SystemConfig};
use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::harness::{ExperimentSpec, PdpSpec, SweepAxis};

/// Bundled presets as `(name, TOML source)`.
pub const PRESETS: &[(&str, &str)] = &[
    ("fig2", include_str!("../presets/fig2.toml")),
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("fig5", include_str!("../presets/fig5.toml")),
    ("fig6", include_str!("../presets/fig6.toml")),
    ("fig7", include_str!("../presets/fig7.toml")),
    ("table1", include_str!("../presets/table1.toml")),
    ("validation", include_str!("../presets/validation.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn load_preset(name: &str) -> Result<ExperimentFile> {
    let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
        Error::config(
            "preset",
            format!(
                "unknown preset '{name}', available: {}",
                preset_names().collect::<Vec<_>>().join(", ")
            ),
        )
    })?;
    ExperimentFile::parse(text, &format!("preset:{name}"))
}

/// Impulsive two-component mixture shape used when `noise = "impulsive"`.
pub const IMPULSIVE_SHAPE: [(f64, f64); 2] = [(0.99, 1.0), (0.01, 100.0)];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub name: Option<String>,

    pub n_x: Option<usize>,
    pub n_z: Option<usize>,
    pub n_h: Option<usize>,
    pub blocks: Option<usize>,
    pub m_t: Option<usize>,
    pub m_r: Option<usize>,
    pub mod_order: Option<usize>,
    pub sigma_x2: Option<f64>,
    pub f_s: Option<f64>,
    pub snr_db: Option<f64>,
    pub gaussian_source: Option<bool>,
    /// `"quasi_static"` or `"block"`.
    pub fading: Option<Fading>,

    pub pdp_alpha: Option<f64>,
    pub pdp_beta: Option<f64>,
    pub pdp_normalized: Option<bool>,
    /// Explicit tap powers; overrides the exponential parameters.
    pub pdp_powers: Option<Vec<f64>>,

    /// `"gaussian"` or `"impulsive"`; ignored when weights are given.
    pub noise: Option<String>,
    pub noise_weights: Option<Vec<f64>>,
    pub noise_variances: Option<Vec<f64>>,
    /// `"average"` or `"background"`.
    pub snr_reference: Option<SnrReference>,

    pub sweep_snr: Option<Vec<f64>>,
    pub sweep_blocks: Option<Vec<usize>>,
    pub sweep_antennas: Option<Vec<(usize, usize)>>,
    pub sweep_p0: Option<Vec<f64>>,
    pub sweep_pdp_error: Option<Vec<f64>>,

    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub estimators: Option<Vec<String>>,
    pub delay_range: Option<(i64, i64)>,
    pub hypotheses: Option<(i64, i64)>,
    pub workers: Option<usize>,
    pub measure_time: Option<bool>,

    /// Sample indices for moment validation.
    pub k: Option<Vec<usize>>,
    /// PDP mismatch magnitudes for the sensitivity run.
    pub alphas: Option<Vec<f64>>,
    /// Size multipliers for the runtime profile.
    pub sizes: Option<Vec<usize>>,
    pub profile_hypotheses: Option<usize>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),* $(,)?) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f; } )*
    };
}

impl ExperimentFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_string(),
            message: e.to_string().trim_end().to_string(),
        })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Fields set in `top` replace those in `self`. Setting any sweep key in
    /// `top` clears the sweep keys of `self`, and likewise for noise weights
    /// versus the noise keyword and for PDP powers versus exponential parameters.
    pub fn merge(mut self, top: ExperimentFile) -> Self {
        if top.has_sweep() {
            self.sweep_snr = None;
            self.sweep_blocks = None;
            self.sweep_antennas = None;
            self.sweep_p0 = None;
            self.sweep_pdp_error = None;
        }
        if top.noise.is_some() {
            self.noise_weights = None;
            self.noise_variances = None;
        }
        if top.noise_weights.is_some() {
            self.noise = None;
        }
        if top.pdp_alpha.is_some() || top.pdp_beta.is_some() {
            self.pdp_powers = None;
        }
        overlay!(self, top;
            name, n_x, n_z, n_h, blocks, m_t, m_r, mod_order, sigma_x2, f_s, snr_db,
            gaussian_source, fading, pdp_alpha, pdp_beta, pdp_normalized, pdp_powers, noise,
            noise_weights, noise_variances, snr_reference, sweep_snr, sweep_blocks, sweep_antennas,
            sweep_p0, sweep_pdp_error, trials, seed, estimators, delay_range, hypotheses,
            workers, measure_time, k, alphas, sizes, profile_hypotheses,
        );
        self
    }

    fn has_sweep(&self) -> bool {
        self.sweep_snr.is_some()
            || self.sweep_blocks.is_some()
            || self.sweep_antennas.is_some()
            || self.sweep_p0.is_some()
            || self.sweep_pdp_error.is_some()
    }

    pub fn system_config(&self) -> Result<SystemConfig> {
        let d = SystemConfig::reference();
        let cfg = SystemConfig {
            n_x: self.n_x.unwrap_or(d.n_x),
            n_z: self.n_z.unwrap_or(d.n_z),
            n_h: self.n_h.unwrap_or(d.n_h),
            blocks: self.blocks.unwrap_or(d.blocks),
            m_t: self.m_t.unwrap_or(d.m_t),
            m_r: self.m_r.unwrap_or(d.m_r),
            mod_order: self.mod_order.unwrap_or(d.mod_order),
            sigma_x2: self.sigma_x2.unwrap_or(d.sigma_x2),
            f_s: self.f_s.unwrap_or(d.f_s),
            snr_db: self.snr_db.unwrap_or(d.snr_db),
            gaussian_source: self.gaussian_source.unwrap_or(d.gaussian_source),
            fading: self.fading.unwrap_or(d.fading),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn pdp_spec(&self) -> PdpSpec {
        match &self.pdp_powers {
            Some(p) => PdpSpec::Explicit { powers: p.clone() },
            None => PdpSpec::Exponential {
                alpha: self.pdp_alpha.unwrap_or(1.0),
                beta: self.pdp_beta.unwrap_or(0.05),
                normalized: self.pdp_normalized.unwrap_or(false),
            },
        }
    }

    pub fn delay_profile(&self) -> Result<DelayProfile> {
        self.pdp_spec().build(self.system_config()?.n_h)
    }

    /// Mixture shape as `(weight, variance)` pairs, before SNR scaling.
    pub fn noise_shape(&self) -> Result<Vec<(f64, f64)>> {
        match (&self.noise_weights, &self.noise_variances) {
            (Some(w), Some(v)) => {
                if w.len() != v.len() {
                    return Err(Error::config(
                        "noise_weights",
                        format!("{} weights but {} variances", w.len(), v.len()),
                    ));
                }
                let pairs: Vec<(f64, f64)> = w.iter().copied().zip(v.iter().copied()).collect();
                NoiseMixture::from_pairs(&pairs)?;
                Ok(pairs)
            }
            (Some(_), None) | (None, Some(_)) => Err(Error::config(
                "noise_weights",
                "noise_weights and noise_variances must be given together",
            )),
            (None, None) => match self.noise.as_deref().unwrap_or("impulsive") {
                "impulsive" => Ok(IMPULSIVE_SHAPE.to_vec()),
                "gaussian" => Ok(vec![(1.0, 1.0)]),
                other => Err(Error::config(
                    "noise",
                    format!("'{other}' is not one of gaussian, impulsive"),
                )),
            },
        }
    }

    pub fn noise_mixture(&self) -> Result<NoiseMixture> {
        NoiseMixture::from_pairs(&self.noise_shape()?)
    }

    pub fn estimator_kinds(&self) -> Result<Vec<EstimatorKind>> {
        match &self.estimators {
            None => Ok(vec![EstimatorKind::Aml]),
            Some(names) => {
                let mut kinds = Vec::new();
                for name in names {
                    let kind: EstimatorKind = name.parse()?;
                    if !kinds.contains(&kind) {
                        kinds.push(kind);
                    }
                }
                Ok(kinds)
            }
        }
    }

    pub fn sweep_axis(&self) -> Result<SweepAxis> {
        let mut axes = Vec::new();
        if let Some(v) = &self.sweep_snr {
            axes.push(SweepAxis::Snr(v.clone()));
        }
        if let Some(v) = &self.sweep_blocks {
            axes.push(SweepAxis::Blocks(v.clone()));
        }
        if let Some(v) = &self.sweep_antennas {
            axes.push(SweepAxis::Antennas(v.clone()));
        }
        if let Some(v) = &self.sweep_p0 {
            axes.push(SweepAxis::ImpulseWeight(v.clone()));
        }
        if let Some(v) = &self.sweep_pdp_error {
            axes.push(SweepAxis::PdpError(v.clone()));
        }
        match axes.len() {
            0 => Ok(SweepAxis::Snr(vec![self.system_config()?.snr_db])),
            1 => Ok(axes.pop().expect("one axis")),
            _ => Err(Error::config("sweep", "more than one sweep_* key is set")),
        }
    }

    /// Resolves a lock-in sweep. A missing seed resolves to 0.
    pub fn to_spec(&self) -> Result<ExperimentSpec> {
        Ok(ExperimentSpec {
            name: self.name.clone().unwrap_or_else(|| "custom".into()),
            base: self.system_config()?,
            pdp: self.pdp_spec(),
            noise: self.noise_shape()?,
            snr_reference: self.snr_reference.unwrap_or_default(),
            sweep: self.sweep_axis()?,
            trials: self.trials.unwrap_or(500),
            master_seed: self.seed.unwrap_or(0),
            estimators: self.estimator_kinds()?,
            delay_range: self.delay_range.unwrap_or((-30, 30)),
            hypotheses: self.hypotheses,
            workers: self.workers.unwrap_or(0),
            measure_time: self.measure_time.unwrap_or(true),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_resolves() {
        for name in preset_names() {
            let f = load_preset(name).unwrap();
            let spec = f.to_spec().unwrap_or_else(|e| panic!("{name}: {e}"));
            spec.setups().unwrap_or_else(|e| panic!("{name}: {e}"));
            f.delay_profile().unwrap();
        }
    }

    #[test]
    fn fig2_is_an_snr_sweep() {
        let spec = load_preset("fig2").unwrap().to_spec().unwrap();
        assert_eq!(
            spec.sweep,
            SweepAxis::Snr(vec![-5.0, 0.0, 5.0, 10.0, 15.0, 20.0])
        );
        assert_eq!(spec.delay_range, (-30, 30));
        assert_eq!(spec.noise, IMPULSIVE_SHAPE.to_vec());
    }

    #[test]
    fn unknown_key_names_the_field_and_line() {
        let err = ExperimentFile::parse("trials = 3\nsnr = 5\n", "x.toml").unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("x.toml") && msg.contains("snr") && msg.contains("line 2"),
            "{msg}"
        );
        let err = ExperimentFile::parse("trials = \"many\"\n", "y.toml").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn merge_prefers_top_layer() {
        let base =
            ExperimentFile::parse("trials = 10\nsweep_snr = [1.0]\nnoise = \"gaussian\"", "a")
                .unwrap();
        let top = ExperimentFile::parse("trials = 20\nsweep_blocks = [2, 4]", "b").unwrap();
        let m = base.merge(top);
        assert_eq!(m.trials, Some(20));
        assert_eq!(m.sweep_axis().unwrap(), SweepAxis::Blocks(vec![2, 4]));
        assert_eq!(m.noise_shape().unwrap(), vec![(1.0, 1.0)]);
    }

    #[test]
    fn conflicting_or_bad_keys_rejected() {
        let f = ExperimentFile::parse("sweep_snr = [1.0]\nsweep_p0 = [0.9]", "c").unwrap();
        assert!(f.to_spec().is_err());
        let f = ExperimentFile::parse("noise = \"laplace\"", "c").unwrap();
        assert!(matches!(f.to_spec(), Err(Error::Config { .. })));
        let f = ExperimentFile::parse("noise_weights = [0.5, 0.5]", "c").unwrap();
        assert!(f.to_spec().is_err());
        let f = ExperimentFile::parse("estimators = [\"ml\"]", "c").unwrap();
        assert!(f.to_spec().is_err());
    }
}
