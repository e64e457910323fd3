//! Rayleigh multipath, Gaussian-mixture noise and receive-window assembly.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::{Fading, SystemConfig};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::waveform::BlockGenerator;

/// Per-tap average powers of the multipath channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayProfile {
    powers: Vec<f64>,
}

impl DelayProfile {
    pub fn new(powers: Vec<f64>) -> Result<Self> {
        if powers.is_empty() {
            return Err(Error::config("pdp", "needs at least one tap"));
        }
        if powers.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::config("pdp", "tap powers must be finite and >= 0"));
        }
        if !powers.iter().any(|p| *p > 0.0) {
            return Err(Error::config("pdp", "all tap powers are zero"));
        }
        Ok(DelayProfile { powers })
    }

    /// `alpha * exp(-beta * k)` for `k = 0..n_h`; rescaled to unit sum when `normalized`.
    pub fn exponential(alpha: f64, beta: f64, n_h: usize, normalized: bool) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::config("pdp", "alpha must be positive, beta finite"));
        }
        let mut powers: Vec<f64> = (0..n_h).map(|k| alpha * (-beta * k as f64).exp()).collect();
        if normalized {
            let total: f64 = powers.iter().sum();
            powers.iter_mut().for_each(|p| *p /= total);
        }
        Self::new(powers)
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }

    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }

    /// Mismatched profile `(1 + sign_k * alpha) * power_k` with `sign_k` in {-1, +1}.
    pub fn perturbed(&self, alpha: f64, signs: &[i8]) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::config(
                "pdp_error",
                format!("alpha {alpha} not in [0, 1)"),
            ));
        }
        if signs.len() != self.powers.len() {
            return Err(Error::config("pdp_error", "one sign per tap required"));
        }
        let powers = self
            .powers
            .iter()
            .zip(signs)
            .map(|(p, &s)| (1.0 + f64::from(s) * alpha) * p)
            .collect();
        Self::new(powers)
    }
}

/// One mixture component: weight and complex variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub variance: f64,
}

/// Class A style noise: a finite mixture of zero-mean circular complex Gaussians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseMixture {
    components: Vec<MixtureComponent>,
}

impl NoiseMixture {
    pub fn new(components: Vec<MixtureComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::config(
                "noise",
                "mixture needs at least one component",
            ));
        }
        for c in &components {
            if !(c.weight > 0.0 && c.weight <= 1.0) {
                return Err(Error::config(
                    "noise",
                    format!("component weight {} not in (0, 1]", c.weight),
                ));
            }
            if !(c.variance > 0.0 && c.variance.is_finite()) {
                return Err(Error::config(
                    "noise",
                    format!("component variance {} must be positive", c.variance),
                ));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::config(
                "noise",
                format!("component weights sum to {total}, expected 1"),
            ));
        }
        Ok(NoiseMixture { components })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(weight, variance)| MixtureComponent { weight, variance })
                .collect(),
        )
    }

    pub fn gaussian(variance: f64) -> Result<Self> {
        Self::from_pairs(&[(1.0, variance)])
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    pub fn is_gaussian(&self) -> bool {
        self.components.len() == 1
    }

    /// `sum_l p_l * sigma_l^2`.
    pub fn avg_power(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.variance).sum()
    }

    fn scaled(&self, factor: f64) -> Self {
        NoiseMixture {
            components: self
                .components
                .iter()
                .map(|c| MixtureComponent {
                    weight: c.weight,
                    variance: c.variance * factor,
                })
                .collect(),
        }
    }

    /// Picks a component index for a uniform draw `u` in [0, 1).
    #[inline]
    fn select(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (l, c) in self.components.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                return l;
            }
        }
        self.components.len() - 1
    }
}

/// Which noise power the SNR is measured against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrReference {
    /// Mixture average power `sum_l p_l sigma_l^2`.
    #[default]
    Average,
    /// Variance of the first (background) component.
    Background,
}

/// Rescales every component variance by one common factor so the mixture's
/// average power equals `sigma_x2 * 10^(-snr_db/10)`. Weights are unchanged.
pub fn scale_mixture_to_snr(
    mixture: &NoiseMixture,
    sigma_x2: f64,
    snr_db: f64,
) -> Result<NoiseMixture> {
    scale_mixture_to_snr_ref(mixture, sigma_x2, snr_db, SnrReference::Average)
}

/// As [`scale_mixture_to_snr`], matching the power selected by `reference`.
pub fn scale_mixture_to_snr_ref(
    mixture: &NoiseMixture,
    sigma_x2: f64,
    snr_db: f64,
    reference: SnrReference,
) -> Result<NoiseMixture> {
    if !snr_db.is_finite() {
        return Err(Error::Domain(format!(
            "snr_db must be finite, got {snr_db}"
        )));
    }
    if !(sigma_x2 > 0.0 && sigma_x2.is_finite()) {
        return Err(Error::Domain(format!(
            "sigma_x2 must be positive, got {sigma_x2}"
        )));
    }
    let target = sigma_x2 * 10f64.powf(-snr_db / 10.0);
    let power = match reference {
        SnrReference::Average => mixture.avg_power(),
        SnrReference::Background => mixture.components[0].variance,
    };
    Ok(mixture.scaled(target / power))
}

/// Taps `h_ji[k]` for every receive/transmit pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    m_r: usize,
    m_t: usize,
    taps: Vec<Vec<Complex64>>,
}

impl ChannelRealization {
    /// Builds a realization from explicit taps, indexed `[j * m_t + i]`.
    pub fn from_taps(m_r: usize, m_t: usize, taps: Vec<Vec<Complex64>>) -> Result<Self> {
        if m_r == 0 || m_t == 0 || taps.len() != m_r * m_t {
            return Err(Error::config("channel", "need m_r * m_t tap vectors"));
        }
        let n_h = taps[0].len();
        if n_h == 0 || taps.iter().any(|t| t.len() != n_h) {
            return Err(Error::config(
                "channel",
                "tap vectors must share a nonzero length",
            ));
        }
        Ok(ChannelRealization { m_r, m_t, taps })
    }

    pub fn m_r(&self) -> usize {
        self.m_r
    }

    pub fn m_t(&self) -> usize {
        self.m_t
    }

    pub fn n_h(&self) -> usize {
        self.taps[0].len()
    }

    /// Taps from transmit antenna `i` to receive antenna `j`.
    pub fn taps(&self, j: usize, i: usize) -> &[Complex64] {
        &self.taps[j * self.m_t + i]
    }
}

/// Independent `CN(0, power_k)` taps for every antenna pair.
pub fn draw_channel<R: Rng + ?Sized>(
    profile: &DelayProfile,
    m_t: usize,
    m_r: usize,
    rng: &mut R,
) -> ChannelRealization {
    let sds: Vec<f64> = profile.powers().iter().map(|p| (p / 2.0).sqrt()).collect();
    let taps = (0..m_r * m_t)
        .map(|_| sds.iter().map(|&sd| complex_normal(rng, sd)).collect())
        .collect();
    ChannelRealization { m_r, m_t, taps }
}

#[inline]
fn complex_normal<R: Rng + ?Sized>(rng: &mut R, sd: f64) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * sd, im * sd)
}

/// Draws `count` mixture samples.
///
/// Each sample consumes one uniform (component choice) and two standard
/// normals regardless of the mixture, so streams with the same seed stay
/// aligned across different mixtures and noise levels.
pub fn draw_noise<R: Rng + ?Sized>(
    mixture: &NoiseMixture,
    count: usize,
    rng: &mut R,
) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(count);
    fill_noise(mixture, rng, count, |_, w| out.push(w));
    out
}

/// As [`draw_noise`], also returning the component index of every sample.
pub fn draw_noise_labeled<R: Rng + ?Sized>(
    mixture: &NoiseMixture,
    count: usize,
    rng: &mut R,
) -> (Vec<Complex64>, Vec<usize>) {
    let mut out = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    fill_noise(mixture, rng, count, |l, w| {
        labels.push(l);
        out.push(w);
    });
    (out, labels)
}

fn fill_noise<R: Rng + ?Sized>(
    mixture: &NoiseMixture,
    rng: &mut R,
    count: usize,
    mut sink: impl FnMut(usize, Complex64),
) {
    let sds: Vec<f64> = mixture
        .components()
        .iter()
        .map(|c| (c.variance / 2.0).sqrt())
        .collect();
    for _ in 0..count {
        let u: f64 = rng.random();
        let l = mixture.select(u);
        sink(l, complex_normal(rng, sds[l]));
    }
}

/// Metadata carried by a received window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowMeta {
    pub config: SystemConfig,
    pub profile: DelayProfile,
    pub mixture: Option<NoiseMixture>,
    pub seed: u64,
}

/// Receiver observation: `m_r` antenna streams of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedWindow {
    pub samples: Vec<Vec<Complex64>>,
    pub d_true: i64,
    pub meta: WindowMeta,
}

impl ReceivedWindow {
    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The receiver's conceptually infinite stream, realised over the index range
/// `[-d_pad, extent)`. Index 0 is the first sample of the first transmitted block.
///
/// Samples at negative indices come from a separate noise stream drawn
/// backwards from index -1, so the non-negative part is bit-identical for any
/// `d_pad` and the negative part is a prefix-consistent extension.
#[derive(Debug, Clone)]
pub struct ReceiveStream {
    /// Per receive antenna: samples at indices `0..extent`.
    forward: Vec<Vec<Complex64>>,
    /// Per receive antenna: sample at index `-1 - i` stored at `i`.
    leading: Vec<Vec<Complex64>>,
    n_s: usize,
}

impl ReceiveStream {
    /// Draws a channel from `profile` and builds the stream. `None` noise gives
    /// the noiseless signal. `n_blocks` transmitted blocks are generated.
    pub fn generate(
        config: &SystemConfig,
        profile: &DelayProfile,
        mixture: Option<&NoiseMixture>,
        d_pad: usize,
        n_blocks: usize,
        trial_seed: u64,
    ) -> Result<Self> {
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
        let mut ch_rng = rng::stream(trial_seed, Purpose::Channel, 0);
        let draws = match config.fading {
            Fading::QuasiStatic => 1,
            Fading::Block => n_blocks,
        };
        let channels: Vec<ChannelRealization> = (0..draws)
            .map(|_| draw_channel(profile, config.m_t, config.m_r, &mut ch_rng))
            .collect();
        Self::with_channels(config, &channels, mixture, d_pad, n_blocks, trial_seed)
    }

    /// As [`ReceiveStream::generate`] with a caller-supplied channel.
    pub fn with_channel(
        config: &SystemConfig,
        channel: &ChannelRealization,
        mixture: Option<&NoiseMixture>,
        d_pad: usize,
        n_blocks: usize,
        trial_seed: u64,
    ) -> Result<Self> {
        Self::with_channels(
            config,
            std::slice::from_ref(channel),
            mixture,
            d_pad,
            n_blocks,
            trial_seed,
        )
    }

    /// Block `b` passes through `channels[b % channels.len()]`.
    pub fn with_channels(
        config: &SystemConfig,
        channels: &[ChannelRealization],
        mixture: Option<&NoiseMixture>,
        d_pad: usize,
        n_blocks: usize,
        trial_seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if channels.is_empty() {
            return Err(Error::config("channel", "no channel realization given"));
        }
        for channel in channels {
            if channel.m_r() != config.m_r || channel.m_t() != config.m_t {
                return Err(Error::config(
                    "channel",
                    "antenna counts disagree with config",
                ));
            }
            if channel.n_h() > config.n_z {
                return Err(Error::config("channel", "more taps than zero-pad samples"));
            }
        }
        if n_blocks == 0 {
            return Err(Error::config("n_blocks", "must be at least 1"));
        }
        let gen = BlockGenerator::new(config)?;
        let frames: Vec<Vec<Complex64>> = (0..config.m_t)
            .map(|i| {
                let mut r = rng::stream(trial_seed, Purpose::Signal, i as u64);
                gen.frame(n_blocks, &mut r)
            })
            .collect();
        let len = n_blocks * config.n_s();

        let mut forward = Vec::with_capacity(config.m_r);
        let mut leading = Vec::with_capacity(config.m_r);
        for j in 0..config.m_r {
            let mut y = vec![Complex64::new(0.0, 0.0); len];
            if let [channel] = channels {
                for (i, frame) in frames.iter().enumerate() {
                    convolve_accumulate(channel.taps(j, i), frame, &mut y);
                }
            } else {
                let n_s = config.n_s();
                for (b, out) in y.chunks_mut(n_s).enumerate() {
                    let channel = &channels[b % channels.len()];
                    for (i, frame) in frames.iter().enumerate() {
                        convolve_accumulate(
                            channel.taps(j, i),
                            &frame[b * n_s..(b + 1) * n_s],
                            out,
                        );
                    }
                }
            }
            let mut lead = vec![Complex64::new(0.0, 0.0); d_pad];
            if let Some(mix) = mixture {
                let mut r = rng::stream(trial_seed, Purpose::Noise, j as u64);
                let mut it = y.iter_mut();
                fill_noise(mix, &mut r, len, |_, w| {
                    if let Some(s) = it.next() {
                        *s += w;
                    }
                });
                let mut r = rng::stream(trial_seed, Purpose::LeadingNoise, j as u64);
                let mut it = lead.iter_mut();
                fill_noise(mix, &mut r, d_pad, |_, w| {
                    if let Some(s) = it.next() {
                        *s = w;
                    }
                });
            }
            forward.push(y);
            leading.push(lead);
        }
        Ok(ReceiveStream {
            forward,
            leading,
            n_s: config.n_s(),
        })
    }

    pub fn d_pad(&self) -> usize {
        self.leading[0].len()
    }

    pub fn extent(&self) -> usize {
        self.forward[0].len()
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    /// Sample at stream index `index` on receive antenna `antenna`.
    pub fn at(&self, antenna: usize, index: i64) -> Option<Complex64> {
        if index >= 0 {
            self.forward[antenna].get(index as usize).copied()
        } else {
            self.leading[antenna].get((-1 - index) as usize).copied()
        }
    }

    /// The `m` samples starting at stream index `d` on every receive antenna.
    pub fn window(&self, d: i64, m: usize) -> Result<Vec<Vec<Complex64>>> {
        let min = -(self.d_pad() as i64);
        let max = self.extent() as i64 - m as i64;
        if m == 0 || d < min || d > max {
            return Err(Error::Range {
                what: "d",
                value: d,
                min,
                max,
            });
        }
        Ok((0..self.forward.len())
            .map(|j| {
                (d..d + m as i64)
                    .map(|k| self.at(j, k).expect("index checked"))
                    .collect()
            })
            .collect())
    }
}

/// `y[t] += sum_k h[k] x[t-k]`, truncated to `y.len()`.
fn convolve_accumulate(h: &[Complex64], x: &[Complex64], y: &mut [Complex64]) {
    for (k, &hk) in h.iter().enumerate() {
        if k >= y.len() {
            break;
        }
        for (out, &xv) in y[k..].iter_mut().zip(x) {
            *out += hk * xv;
        }
    }
}

/// Builds the receive window for true offset `d_true` with the default
/// pre-frame padding `n_s - 1`.
pub fn assemble_window(
    config: &SystemConfig,
    profile: &DelayProfile,
    mixture: &NoiseMixture,
    d_true: i64,
    trial_seed: u64,
) -> Result<ReceivedWindow> {
    assemble_window_padded(
        config,
        profile,
        Some(mixture),
        d_true,
        config.n_s() - 1,
        trial_seed,
    )
}

/// Builds the `N * n_s` window starting at stream index `d_true`.
///
/// Supported offsets are `[-d_pad, n_s - 1]`; `N + 1` blocks are transmitted so
/// every positive offset stays inside the generated signal.
pub fn assemble_window_padded(
    config: &SystemConfig,
    profile: &DelayProfile,
    mixture: Option<&NoiseMixture>,
    d_true: i64,
    d_pad: usize,
    trial_seed: u64,
) -> Result<ReceivedWindow> {
    let max = config.n_s() as i64 - 1;
    if d_true < -(d_pad as i64) || d_true > max {
        return Err(Error::Range {
            what: "d_true",
            value: d_true,
            min: -(d_pad as i64),
            max,
        });
    }
    let stream = ReceiveStream::generate(
        config,
        profile,
        mixture,
        d_pad,
        config.blocks + 1,
        trial_seed,
    )?;
    Ok(ReceivedWindow {
        samples: stream.window(d_true, config.window_len())?,
        d_true,
        meta: WindowMeta {
            config: config.clone(),
            profile: profile.clone(),
            mixture: mixture.cloned(),
            seed: trial_seed,
        },
    })
}

/// Writes samples as interleaved little-endian `f64` (I, Q) pairs.
pub fn write_iq(path: impl AsRef<Path>, samples: &[Complex64]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::with_capacity(samples.len() * 16);
    for s in samples {
        buf.extend_from_slice(&s.re.to_le_bytes());
        buf.extend_from_slice(&s.im.to_le_bytes());
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&buf))
        .map_err(|e| Error::io(path, e))
}

pub fn read_iq(path: impl AsRef<Path>) -> Result<Vec<Complex64>> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    if buf.len() % 16 != 0 {
        return Err(Error::Parse {
            path: path.display().to_string(),
            message: format!("{} bytes is not a whole number of I/Q pairs", buf.len()),
        });
    }
    Ok(buf
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn impulsive_mixture() -> NoiseMixture {
        NoiseMixture::from_pairs(&[(0.99, 1.0), (0.01, 100.0)]).unwrap()
    }

    #[test]
    fn profile_validation() {
        assert!(DelayProfile::new(vec![0.0, 0.0]).is_err());
        assert!(DelayProfile::new(vec![]).is_err());
        assert!(DelayProfile::new(vec![1.0, -0.1]).is_err());
        assert!(DelayProfile::new(vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn exponential_profile_sums() {
        let raw = DelayProfile::exponential(0.396, 0.5, 10, false).unwrap();
        let geometric = 0.396 * (1.0 - (-5.0f64).exp()) / (1.0 - (-0.5f64).exp());
        assert!((raw.total_power() - geometric).abs() < 1e-12);
        let norm = DelayProfile::exponential(0.396, 0.5, 10, true).unwrap();
        assert!((norm.total_power() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixture_validation() {
        assert!(NoiseMixture::from_pairs(&[(0.5, 1.0), (0.4, 2.0)]).is_err());
        assert!(NoiseMixture::from_pairs(&[(1.0, 0.0)]).is_err());
        assert!(NoiseMixture::from_pairs(&[]).is_err());
        assert!((impulsive_mixture().avg_power() - 1.99).abs() < 1e-12);
    }

    #[test]
    fn snr_scaling() {
        let g = NoiseMixture::gaussian(2.0).unwrap();
        let s = scale_mixture_to_snr(&g, 1.0, 0.0).unwrap();
        assert!((s.components()[0].variance - 1.0).abs() < 1e-15);

        let s = scale_mixture_to_snr(&impulsive_mixture(), 1.0, 10.0).unwrap();
        let c = 0.1 / 1.99;
        assert!((s.components()[0].variance - c).abs() < 1e-15);
        assert!((s.components()[1].variance - 100.0 * c).abs() < 1e-13);
        assert_eq!(s.components()[1].weight, 0.01);
        assert!((s.avg_power() - 0.1).abs() < 1e-15);

        assert!(scale_mixture_to_snr(&g, 1.0, f64::NEG_INFINITY).is_err());
        assert!(scale_mixture_to_snr(&g, 1.0, f64::NAN).is_err());
        let b = scale_mixture_to_snr_ref(&impulsive_mixture(), 1.0, 10.0, SnrReference::Background)
            .unwrap();
        assert!((b.components()[0].variance - 0.1).abs() < 1e-15);
        assert!((b.components()[1].variance - 10.0).abs() < 1e-12);
    }

    #[test]
    fn perturbed_profile() {
        let p = DelayProfile::new(vec![1.0, 0.5]).unwrap();
        let q = p.perturbed(0.5, &[1, -1]).unwrap();
        assert_eq!(q.powers(), &[1.5, 0.25]);
        assert_eq!(p.perturbed(0.0, &[1, -1]).unwrap(), p);
        assert!(p.perturbed(1.0, &[1, 1]).is_err());
        assert!(p.perturbed(0.2, &[1]).is_err());
    }

    #[test]
    fn convolution_matches_toeplitz_product() {
        let h = [Complex64::new(1.0, 0.5), Complex64::new(-0.3, 0.2)];
        let x: Vec<Complex64> = (0..6).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let mut y = vec![Complex64::new(0.0, 0.0); 6];
        convolve_accumulate(&h, &x, &mut y);
        for t in 0..6 {
            let mut want = Complex64::new(0.0, 0.0);
            for k in 0..2 {
                if t >= k {
                    want += h[k] * x[t - k];
                }
            }
            assert_eq!(y[t], want);
        }
    }

    #[test]
    fn identity_channel_noiseless_window_is_frame() {
        let cfg = SystemConfig {
            n_h: 1,
            ..SystemConfig::reference()
        };
        let ch = ChannelRealization::from_taps(1, 1, vec![vec![Complex64::new(1.0, 0.0)]]).unwrap();
        let seed = 11;
        let stream = ReceiveStream::with_channel(&cfg, &ch, None, 0, cfg.blocks + 1, seed).unwrap();
        let w = stream.window(0, cfg.window_len()).unwrap();
        let gen = BlockGenerator::new(&cfg).unwrap();
        let frame = gen.frame(cfg.blocks + 1, &mut rng::stream(seed, Purpose::Signal, 0));
        assert_eq!(w[0], frame[..cfg.window_len()]);
    }

    #[test]
    fn negative_offset_starts_with_noise() {
        let cfg = SystemConfig::reference();
        let profile = DelayProfile::exponential(1.0, 0.05, 10, false).unwrap();
        let mix = impulsive_mixture();
        let w = assemble_window(&cfg, &profile, &mix, -3, 5).unwrap();
        let clean = assemble_window_padded(&cfg, &profile, None, -3, cfg.n_s() - 1, 5).unwrap();
        // noiseless: first three samples exactly zero, the fourth carries signal
        assert!(clean.samples[0][..3].iter().all(|s| s.norm_sqr() == 0.0));
        assert!(clean.samples[0][3].norm_sqr() > 0.0);
        assert!(w.samples[0][..3].iter().all(|s| s.norm_sqr() > 0.0));
        let lead = draw_noise(&mix, 3, &mut rng::stream(5, Purpose::LeadingNoise, 0));
        assert_eq!(w.samples[0][0], lead[2]);
        assert_eq!(w.samples[0][2], lead[0]);
    }

    #[test]
    fn window_is_slice_of_stream() {
        let cfg = SystemConfig::reference();
        let profile = DelayProfile::exponential(1.0, 0.05, 10, false).unwrap();
        let mix = impulsive_mixture();
        let w0 = assemble_window(&cfg, &profile, &mix, 0, 77).unwrap();
        let w5 = assemble_window(&cfg, &profile, &mix, 5, 77).unwrap();
        let m = cfg.window_len();
        assert_eq!(w0.samples[0][5..], w5.samples[0][..m - 5]);
        // d_pad does not disturb the non-negative part
        let narrow = assemble_window_padded(&cfg, &profile, Some(&mix), 5, 30, 77).unwrap();
        assert_eq!(narrow.samples, w5.samples);
    }

    #[test]
    fn block_fading_redraws_taps_per_block() {
        let cfg = SystemConfig {
            n_x: 16,
            n_z: 4,
            n_h: 2,
            blocks: 3,
            mod_order: 4,
            ..SystemConfig::reference()
        };
        let pdp = DelayProfile::new(vec![0.6, 0.4]).unwrap();
        let block_cfg = SystemConfig {
            fading: Fading::Block,
            ..cfg.clone()
        };
        let qs = ReceiveStream::generate(&cfg, &pdp, None, 0, 3, 7)
            .unwrap()
            .window(0, 60)
            .unwrap();
        let bf = ReceiveStream::generate(&block_cfg, &pdp, None, 0, 3, 7)
            .unwrap()
            .window(0, 60)
            .unwrap();
        // the first block shares its channel draw across both models
        assert_eq!(qs[0][..20], bf[0][..20]);
        assert_ne!(qs[0][20..40], bf[0][20..40]);

        let h = draw_channel(&pdp, 1, 1, &mut rng::stream(7, Purpose::Channel, 0));
        let repeated =
            ReceiveStream::with_channels(&cfg, &[h.clone(), h.clone(), h], None, 0, 3, 7)
                .unwrap()
                .window(0, 60)
                .unwrap();
        assert_eq!(repeated, qs);
    }

    #[test]
    fn offset_range_enforced() {
        let cfg = SystemConfig::reference();
        let profile = DelayProfile::exponential(1.0, 0.05, 10, false).unwrap();
        let mix = impulsive_mixture();
        assert!(assemble_window(&cfg, &profile, &mix, 532, 0).is_err());
        assert!(assemble_window(&cfg, &profile, &mix, -532, 0).is_err());
        assert!(assemble_window(&cfg, &profile, &mix, 531, 0).is_ok());
        assert!(assemble_window(&cfg, &profile, &mix, -531, 0).is_ok());
        assert!(assemble_window_padded(&cfg, &profile, Some(&mix), -31, 30, 0).is_err());
    }

    #[test]
    fn iq_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rx0.iq");
        let s = draw_noise(&impulsive_mixture(), 33, &mut ChaCha8Rng::seed_from_u64(2));
        write_iq(&p, &s).unwrap();
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 33 * 16);
        assert_eq!(read_iq(&p).unwrap(), s);
        std::fs::write(&p, [0u8; 17]).unwrap();
        assert!(read_iq(&p).is_err());
    }
}
