//! Zero-padded OFDM block generation.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

use crate::config::SystemConfig;
use crate::error::{Error, Result};

/// One transmitted block: `n_x` data samples followed by `n_z` exact zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmBlock {
    pub samples: Vec<Complex64>,
    pub antenna: usize,
    pub block_index: usize,
}

/// Unit-average-energy QAM constellation.
///
/// Even bit counts give square constellations. Odd bit counts of at least 5
/// (32, 128, 512, ...) give the usual cross constellations: a square grid of
/// side `3 * 2^((b-3)/2)` with a `2^((b-5)/2)` square removed at each corner.
#[derive(Debug, Clone)]
pub struct Constellation {
    points: Vec<Complex64>,
}

impl Constellation {
    pub fn new(order: usize) -> Result<Self> {
        if order < 4 || !order.is_power_of_two() {
            return Err(Error::config(
                "mod_order",
                format!("{order} is not a power-of-two QAM size >= 4"),
            ));
        }
        let bits = order.trailing_zeros();
        let mut raw = Vec::with_capacity(order);
        if bits.is_multiple_of(2) {
            let side = 1usize << (bits / 2);
            for i in 0..side {
                for q in 0..side {
                    raw.push(grid_point(i, q, side));
                }
            }
        } else {
            if bits < 5 {
                return Err(Error::config(
                    "mod_order",
                    format!("{order}-QAM has no cross constellation"),
                ));
            }
            let side = 3usize << ((bits - 3) / 2);
            let corner = 1usize << ((bits - 5) / 2);
            let in_corner = |v: usize| v < corner || v >= side - corner;
            for i in 0..side {
                for q in 0..side {
                    if in_corner(i) && in_corner(q) {
                        continue;
                    }
                    raw.push(grid_point(i, q, side));
                }
            }
        }
        debug_assert_eq!(raw.len(), order);
        let energy = raw.iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
        let scale = energy.sqrt().recip();
        Ok(Constellation {
            points: raw.into_iter().map(|p| p * scale).collect(),
        })
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        self.points[rng.random_range(0..self.points.len())]
    }
}

// Odd-integer grid coordinates centred on the origin.
fn grid_point(i: usize, q: usize, side: usize) -> Complex64 {
    let c = |v: usize| (2 * v) as f64 - (side as f64 - 1.0);
    Complex64::new(c(i), c(q))
}

/// Reusable block generator holding the constellation and inverse-DFT plan.
pub struct BlockGenerator {
    config: SystemConfig,
    constellation: Constellation,
    ifft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    scale: f64,
}

impl BlockGenerator {
    pub fn new(config: &SystemConfig) -> Result<Self> {
        config.validate()?;
        let constellation = Constellation::new(config.mod_order)?;
        let ifft = FftPlanner::new().plan_fft_inverse(config.n_x);
        // rustfft's inverse is unnormalised: each output has power n_x for
        // unit-energy inputs. Rescale to the per-antenna power.
        let scale = (config.per_antenna_power() / config.n_x as f64).sqrt();
        Ok(BlockGenerator {
            config: config.clone(),
            constellation,
            ifft,
            scale,
        })
    }

    /// Writes one block (length `n_s`) into `out`.
    pub fn fill_block<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [Complex64]) {
        let n_x = self.config.n_x;
        debug_assert_eq!(out.len(), self.config.n_s());
        let (data, pad) = out.split_at_mut(n_x);
        if self.config.gaussian_source {
            let sd = self.config.per_antenna_power().sqrt() * FRAC_1_SQRT_2;
            for s in data.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *s = Complex64::new(re * sd, im * sd);
            }
        } else {
            for s in data.iter_mut() {
                *s = self.constellation.sample(rng);
            }
            self.ifft.process(data);
            for s in data.iter_mut() {
                *s *= self.scale;
            }
        }
        pad.fill(Complex64::new(0.0, 0.0));
    }

    pub fn block<R: Rng + ?Sized>(
        &self,
        antenna: usize,
        block_index: usize,
        rng: &mut R,
    ) -> OfdmBlock {
        let mut samples = vec![Complex64::new(0.0, 0.0); self.config.n_s()];
        self.fill_block(rng, &mut samples);
        OfdmBlock {
            samples,
            antenna,
            block_index,
        }
    }

    /// `n_blocks` consecutive blocks drawn from `rng`.
    pub fn frame<R: Rng + ?Sized>(&self, n_blocks: usize, rng: &mut R) -> Vec<Complex64> {
        let n_s = self.config.n_s();
        let mut out = vec![Complex64::new(0.0, 0.0); n_blocks * n_s];
        for chunk in out.chunks_exact_mut(n_s) {
            self.fill_block(rng, chunk);
        }
        out
    }
}

/// Generates one zero-padded OFDM block for transmit antenna `antenna`.
pub fn generate_block<R: Rng + ?Sized>(
    config: &SystemConfig,
    antenna: usize,
    block_index: usize,
    rng: &mut R,
) -> Result<OfdmBlock> {
    check_antenna(config, antenna)?;
    Ok(BlockGenerator::new(config)?.block(antenna, block_index, rng))
}

/// Concatenation of `n_blocks` blocks for one antenna, drawn from one stream.
pub fn generate_frame<R: Rng + ?Sized>(
    config: &SystemConfig,
    antenna: usize,
    n_blocks: usize,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    check_antenna(config, antenna)?;
    if n_blocks == 0 {
        return Err(Error::config("n_blocks", "must be at least 1"));
    }
    Ok(BlockGenerator::new(config)?.frame(n_blocks, rng))
}

fn check_antenna(config: &SystemConfig, antenna: usize) -> Result<()> {
    if antenna >= config.m_t {
        return Err(Error::Range {
            what: "antenna",
            value: antenna as i64,
            min: 0,
            max: config.m_t as i64 - 1,
        });
    }
    Ok(())
}
