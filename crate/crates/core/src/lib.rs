//! Simulation of multiresonator quantum memories: analytic efficiencies,
//! reduced coupled-mode dynamics, the full waveguide model and trajectory
//! diagnostics.

pub mod analytic;
pub mod dynamics;
pub mod error;
pub mod full;
pub mod params;
pub mod quadrature;
pub mod reduced;
pub mod trajectory;

pub use analytic::{beta_analytic, efficiency_analytic, eta0, eta1, optimal_coupling, ClosedForm};
pub use dynamics::{
    collective_amplitude, detect_peaks, efficiency_curve, energy_difference, sweep_coupling,
    PeakSet, Series,
};
pub use error::{Error, Result};
pub use full::{
    discretize_waveguide, emission_spectra, evolve_full, output_field_direct, FullModel, FullState,
    WaveguideGrid,
};
pub use params::{
    detuning_of, normalize, phase_ramp_init, phased_spot_init, rect_comb_init, windowed_comb_init,
    AmplitudeVector, Frame, ResonatorIndex, SystemParams,
};
pub use reduced::{evolve_expm, evolve_rk, resonator_norm, trajectory_expm};
pub use trajectory::{uniform_grid, Trajectory};
