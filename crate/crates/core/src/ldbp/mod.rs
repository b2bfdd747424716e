//! Fiber-optic link simulation and learned digital backpropagation.
//!
//! The forward model is the split-step Fourier method on a single
//! polarization with lumped amplification. Receivers undo the link either
//! with frequency-domain backpropagation or with a chain of short FIR
//! filters alternating with fixed nonlinear phase rotations, whose taps can
//! be trained jointly by gradient descent.

mod chain;
mod experiment;
mod fiber;
mod filters;
mod io;
mod link;
mod signal;

pub use chain::{
    effective_snr_db, ldbp_apply, ldbp_forward, ls_gain, nl_phase_for_link, normalized_mse,
    LdbpTape, SNR_CAP_DB,
};
pub use experiment::{
    evaluation_bursts, run_ldbp_experiment, LdbpExperiment, LdbpExperimentConfig, LdbpRow, Method,
};
pub use fiber::{
    alpha_from_db_per_km, cd_compensate, dbp_frequency_domain, ssfm_propagate, Amplification,
    FiberParams, CARRIER_HZ, PLANCK,
};
pub use filters::{
    design_fir, fir_response, inverse_dispersion_response, symmetrize, FilterBank, FirDesign,
    FirMethod,
};
pub use io::{load_waveform, read_waveform, save_waveform, write_waveform};
pub use link::{
    dbm_to_watts, pooled_effective_snr_db, recover, simulate_burst, train_ldbp, train_ldbp_on,
    training_bursts, Burst, Equalizer, LdbpObjective, LdbpTrainConfig, LdbpTrainOutcome,
    LinkConfig,
};
pub use signal::{
    convolve_real_same, energy, generate_waveform, matched_filter, nmse_db, random_burst,
    resample_fft, rrc_taps, ComplexSignal, Modulation, PulseConfig,
};
