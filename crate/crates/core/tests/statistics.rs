//! Sample-moment checks of the generators against their analytic values.

use num_complex::Complex64;
use zpsync_core::harness::Moments;
use zpsync_core::rng::{self, Purpose};
use zpsync_core::waveform::BlockGenerator;
use zpsync_core::{
    draw_channel, draw_noise, draw_noise_labeled, DelayProfile, NoiseMixture, ReceiveStream,
    SystemConfig,
};

fn data_power(config: &SystemConfig, blocks: usize, seed: u64) -> f64 {
    let gen = BlockGenerator::new(config).unwrap();
    let mut r = rng::stream(seed, Purpose::Signal, 0);
    let mut buf = vec![Complex64::new(0.0, 0.0); config.n_s()];
    let mut total = 0.0;
    for _ in 0..blocks {
        gen.fill_block(&mut r, &mut buf);
        total += buf[..config.n_x].iter().map(|s| s.norm_sqr()).sum::<f64>();
    }
    total / (blocks * config.n_x) as f64
}

#[test]
fn data_sample_power_matches_sigma_x2() {
    let cfg = SystemConfig::reference();
    let p = data_power(&cfg, 100_000, 1);
    assert!((p - 1.0).abs() < 0.01, "{p}");
}

#[test]
fn two_transmit_antennas_split_power() {
    let cfg = SystemConfig {
        m_t: 2,
        ..SystemConfig::reference()
    };
    let p = data_power(&cfg, 20_000, 2);
    assert!((p - 0.5).abs() < 0.005, "{p}");
}

#[test]
fn single_tap_gain_has_unit_mean() {
    let pdp = DelayProfile::new(vec![1.0]).unwrap();
    let mut r = rng::stream(3, Purpose::Channel, 0);
    let n = 100_000;
    let mean = (0..n)
        .map(|_| draw_channel(&pdp, 1, 1, &mut r).taps(0, 0)[0].norm_sqr())
        .sum::<f64>()
        / n as f64;
    assert!((mean - 1.0).abs() < 0.02, "{mean}");
}

#[test]
fn taps_are_uncorrelated_with_profile_powers() {
    let pdp = DelayProfile::exponential(1.0, 0.5, 3, false).unwrap();
    let mut r = rng::stream(4, Purpose::Channel, 0);
    let n = 50_000;
    let mut power = [0.0; 3];
    let mut cross = Complex64::new(0.0, 0.0);
    for _ in 0..n {
        let h = draw_channel(&pdp, 1, 1, &mut r);
        let t = h.taps(0, 0);
        for (p, tap) in power.iter_mut().zip(t) {
            *p += tap.norm_sqr() / n as f64;
        }
        cross += t[0] * t[1].conj() / n as f64;
    }
    for (k, (got, want)) in power.iter().zip(pdp.powers()).enumerate() {
        assert!((got - want).abs() < 0.03 * want, "tap {k}: {got}");
    }
    assert!(cross.norm() < 0.02, "{cross}");
}

#[test]
fn gaussian_noise_in_phase_variance() {
    let mix = NoiseMixture::gaussian(2.0).unwrap();
    let w = draw_noise(&mix, 100_000, &mut rng::stream(5, Purpose::Noise, 0));
    let re: Vec<f64> = w.iter().map(|c| c.re).collect();
    let v = Moments::of(&re).variance;
    assert!((v - 1.0).abs() < 0.02, "{v}");
}

#[test]
fn impulsive_noise_power_kurtosis_and_occupancy() {
    let mix = NoiseMixture::from_pairs(&[(0.99, 1.0), (0.01, 100.0)]).unwrap();
    let n = 1_000_000;
    let (w, labels) = draw_noise_labeled(&mix, n, &mut rng::stream(6, Purpose::Noise, 0));
    let power = w.iter().map(|c| c.norm_sqr()).sum::<f64>() / n as f64;
    assert!((power - 1.99).abs() < 0.03 * 1.99, "{power}");

    // scale mixture of normals: 3 E[s^2] / E[s]^2 with s = sigma_l^2 / 2
    let analytic = 3.0 * (0.99 * 0.25 + 0.01 * 2500.0) / (0.99 * 0.5 + 0.01 * 50.0_f64).powi(2);
    let re: Vec<f64> = w.iter().map(|c| c.re).collect();
    let k = Moments::of(&re).kurtosis;
    assert!(k > 3.0 * 10.0);
    assert!((k - analytic).abs() < 0.15 * analytic, "{k} vs {analytic}");

    let m = 100_000;
    let hits = labels[..m].iter().filter(|&&l| l == 1).count() as f64;
    let sd = (m as f64 * 0.01 * 0.99).sqrt();
    assert!((hits - m as f64 * 0.01).abs() < 3.0 * sd, "{hits}");
}

#[test]
fn noise_draws_stay_aligned_across_mixtures() {
    let a = NoiseMixture::gaussian(1.0).unwrap();
    let b = NoiseMixture::from_pairs(&[(0.5, 1.0), (0.5, 4.0)]).unwrap();
    let wa = draw_noise(&a, 1000, &mut rng::stream(7, Purpose::Noise, 0));
    let (wb, lb) = draw_noise_labeled(&b, 1000, &mut rng::stream(7, Purpose::Noise, 0));
    for ((x, y), l) in wa.iter().zip(&wb).zip(&lb) {
        let scale = if *l == 0 { 1.0 } else { 2.0 };
        assert!((x * scale - y).norm() < 1e-12);
    }
}

#[test]
fn blocks_do_not_interfere() {
    let cfg = SystemConfig {
        n_x: 64,
        n_z: 6,
        n_h: 6,
        blocks: 4,
        mod_order: 16,
        ..SystemConfig::reference()
    };
    let pdp = DelayProfile::exponential(1.0, 0.2, 6, false).unwrap();
    let seed = 8;
    let stream = ReceiveStream::generate(&cfg, &pdp, None, 0, 4, seed).unwrap();
    let h = draw_channel(&pdp, 1, 1, &mut rng::stream(seed, Purpose::Channel, 0));
    let gen = BlockGenerator::new(&cfg).unwrap();
    let frame = gen.frame(4, &mut rng::stream(seed, Purpose::Signal, 0));
    let n_s = cfg.n_s();
    for b in 0..4 {
        let block = &frame[b * n_s..(b + 1) * n_s];
        for k in 0..n_s {
            let mut want = Complex64::new(0.0, 0.0);
            for (r, t) in h.taps(0, 0).iter().enumerate() {
                if k >= r {
                    want += t * block[k - r];
                }
            }
            let got = stream.at(0, (b * n_s + k) as i64).unwrap();
            assert!((got - want).norm() < 1e-12, "block {b} sample {k}");
        }
    }
}
