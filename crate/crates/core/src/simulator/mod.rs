//! Monte Carlo waveform simulator used to validate the closed-form
//! predictions.
//!
//! The chain is QPSK -> RRC shaping at `s_sim` samples per symbol -> channel
//! -> ASE -> receiver filter and decimation to `s` -> fractionally spaced MIMO
//! equalizer (supervised LMS or a fixed tap bank) -> empirical SNR.

mod equalizer;
mod mc;
mod waveform;

pub use equalizer::{
    absolute_step, center_spike, empirical_harmonic_snr, estimate_snr, lms_equalize, static_equalize,
    EqualizerRun, FrameLayout, MuSchedule, DIVERGENCE_MSE, DIVERGENCE_RUN, MIN_RETAINED,
};
pub use mc::{run_lms, run_static, transmit, McConfig, MCResult, Transmission};
pub use waveform::{
    add_awgn, apply_channel_freq, gen_qpsk, rrc_shape, rx_frontend, ChannelFir, Waveform, FIR_TRIM,
};
