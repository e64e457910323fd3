//! Timing-offset estimation for zero-padded OFDM in Gaussian-mixture
//! (Class A) impulsive noise.
//!
//! The crate is organised bottom-up:
//!
//! * [`waveform`] generates zero-padded OFDM blocks per transmit antenna.
//! * [`channel`] draws Rayleigh multipath taps and mixture noise and assembles
//!   the delayed receive window.
//! * [`likelihood`] holds the hypothesis-indexed variance profile and the
//!   approximate per-sample likelihood.
//! * [`estimators`] implements the approximate-ML, weighted energy and energy
//!   detectors over a hypothesis set.
//! * [`harness`] runs seeded Monte-Carlo sweeps, moment validation, PDP-error
//!   sensitivity and runtime scaling.
//! * [`presets`] parses the flat key/value experiment files.

pub mod channel;
pub mod config;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod likelihood;
pub mod presets;
pub mod rng;
pub mod waveform;

pub use channel::{
    assemble_window, draw_channel, draw_noise, draw_noise_labeled, scale_mixture_to_snr,
    scale_mixture_to_snr_ref, ChannelRealization, DelayProfile, NoiseMixture, ReceiveStream,
    ReceivedWindow, SnrReference,
};
pub use config::{Fading, SystemConfig};
pub use error::{Error, Result};
pub use estimators::{
    aml_estimate, ed_estimate, wed_estimate, EstimateResult, EstimatorKind, HypothesisSet,
};
pub use likelihood::{
    b_function, p_function, profile_window, variance_profile_h0, window_loglik, HypothesisScore,
    VarianceProfile,
};
pub use waveform::{generate_block, generate_frame, OfdmBlock};

pub use num_complex::Complex64;
