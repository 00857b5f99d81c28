//! Time-frequency analysis: sampled signals, windows, the short-time
//! Fourier transform and per-direction decay orders.

pub mod estimate;
pub mod signal;
pub mod stft;
pub mod window;

pub use estimate::{
    decay_order, wavefront_estimate, window_independence_check, Order, PhaseGrid, WavefrontReport,
};
pub use signal::{Builtin, GridSpec, SampledSignal};
pub use stft::{stft, stft_lattice, Spectrogram};
pub use window::WindowSpec;
