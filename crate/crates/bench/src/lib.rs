//! Shared fixtures for the criterion benches.

use zpsync_core::likelihood::variance_profile_h0;
use zpsync_core::{
    scale_mixture_to_snr, Complex64, DelayProfile, NoiseMixture, ReceiveStream, SystemConfig,
    VarianceProfile,
};

/// One received window with everything the estimators need.
pub struct Fixture {
    pub config: SystemConfig,
    pub profile: VarianceProfile,
    pub mixture: NoiseMixture,
    pub window: Vec<Vec<Complex64>>,
}

/// Reference system with `n_x` and `n_z` scaled by `multiplier`, at 10 dB in
/// impulsive noise, observed at true offset 0.
pub fn fixture(multiplier: usize, m_r: usize) -> Fixture {
    let base = SystemConfig::reference();
    let config = SystemConfig {
        n_x: base.n_x * multiplier,
        n_z: base.n_z * multiplier,
        m_r,
        snr_db: 10.0,
        ..base
    };
    let pdp = DelayProfile::exponential(1.0, 0.05, config.n_h, false).expect("valid profile");
    let shape = NoiseMixture::from_pairs(&[(0.99, 1.0), (0.01, 100.0)]).expect("valid mixture");
    let mixture = scale_mixture_to_snr(&shape, config.sigma_x2, config.snr_db).expect("finite snr");
    let stream = ReceiveStream::generate(&config, &pdp, Some(&mixture), 0, config.blocks + 1, 1)
        .expect("valid stream");
    let window = stream
        .window(0, config.window_len())
        .expect("window inside stream");
    let profile = variance_profile_h0(&config, &pdp).expect("valid profile");
    Fixture {
        config,
        profile,
        mixture,
        window,
    }
}
