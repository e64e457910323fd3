use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensional and statistical parameters of the link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Data samples per block.
    pub n_x: usize,
    /// Zero-pad samples per block.
    pub n_z: usize,
    /// Channel taps.
    pub n_h: usize,
    /// Observation blocks used by the estimator.
    pub blocks: usize,
    pub m_t: usize,
    pub m_r: usize,
    /// QAM constellation size.
    pub mod_order: usize,
    /// Total transmit sample power (linear), split evenly over transmit antennas.
    pub sigma_x2: f64,
    /// Sample rate in Hz. Metadata only.
    pub f_s: f64,
    pub snr_db: f64,
    /// Draw complex Gaussian data samples instead of QAM + inverse DFT.
    #[serde(default)]
    pub gaussian_source: bool,
    #[serde(default)]
    pub fading: Fading,
}

/// Time variation of the channel taps inside one observation window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fading {
    /// One realization for every block of the window.
    #[default]
    QuasiStatic,
    /// An independent realization for every transmitted block.
    Block,
}

impl SystemConfig {
    /// The simulation setup used throughout the lock-in experiments:
    /// 512 data samples, 20 zeros, 10 taps, 10 blocks, 128-QAM, SISO.
    pub fn reference() -> Self {
        SystemConfig {
            n_x: 512,
            n_z: 20,
            n_h: 10,
            blocks: 10,
            m_t: 1,
            m_r: 1,
            mod_order: 128,
            sigma_x2: 1.0,
            f_s: 1e6,
            snr_db: 10.0,
            gaussian_source: false,
            fading: Fading::QuasiStatic,
        }
    }

    /// Samples per OFDM block including the zero pad.
    #[inline]
    pub fn n_s(&self) -> usize {
        self.n_x + self.n_z
    }

    /// Default observation window length `N * n_s`.
    #[inline]
    pub fn window_len(&self) -> usize {
        self.blocks * self.n_s()
    }

    /// Per-transmit-antenna signal power.
    #[inline]
    pub fn per_antenna_power(&self) -> f64 {
        self.sigma_x2 / self.m_t as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_x == 0 {
            return Err(Error::config("n_x", "must be at least 1"));
        }
        if self.n_h == 0 {
            return Err(Error::config("n_h", "must be at least 1"));
        }
        if self.n_z < self.n_h {
            return Err(Error::config(
                "n_z",
                format!(
                    "zero pad ({}) shorter than channel length ({}) causes inter-block interference",
                    self.n_z, self.n_h
                ),
            ));
        }
        if self.blocks == 0 {
            return Err(Error::config("blocks", "must be at least 1"));
        }
        if self.m_t == 0 {
            return Err(Error::config("m_t", "must be at least 1"));
        }
        if self.m_r == 0 {
            return Err(Error::config("m_r", "must be at least 1"));
        }
        crate::waveform::Constellation::new(self.mod_order)?;
        if !(self.sigma_x2 > 0.0 && self.sigma_x2.is_finite()) {
            return Err(Error::config("sigma_x2", "must be positive and finite"));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::config("snr_db", "must be finite"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_is_valid() {
        let c = SystemConfig::reference();
        c.validate().unwrap();
        assert_eq!(c.n_s(), 532);
        assert_eq!(c.window_len(), 5320);
    }

    #[test]
    fn rejects_short_zero_pad() {
        let c = SystemConfig {
            n_z: 9,
            ..SystemConfig::reference()
        };
        let err = c.validate().unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "n_z"));
    }

    #[test]
    fn rejects_bad_constellation_and_power() {
        for bad in [
            SystemConfig {
                mod_order: 8,
                ..SystemConfig::reference()
            },
            SystemConfig {
                mod_order: 100,
                ..SystemConfig::reference()
            },
            SystemConfig {
                sigma_x2: 0.0,
                ..SystemConfig::reference()
            },
            SystemConfig {
                m_r: 0,
                ..SystemConfig::reference()
            },
            SystemConfig {
                snr_db: f64::NEG_INFINITY,
                ..SystemConfig::reference()
            },
        ] {
            assert!(bad.validate().unwrap_err().is_config_error());
        }
    }
}
