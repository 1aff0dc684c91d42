//! Dynamical characterization: Lyapunov spectrum, bifurcation sweep, 0-1 test
//! and spectral complexity.

pub mod bifurcation;
pub mod complexity;
pub mod lyapunov;
pub mod zero_one;

pub use bifurcation::{
    bifurcation_sweep, bifurcation_sweep_with, distinct_values, local_maxima, BifurcationColumn,
    BifurcationData, ParamRange,
};
pub use complexity::{
    c0_complexity, complexity_map, complexity_map_with, complexity_of_x1, spectral_entropy,
    ComplexityCell, ComplexityMap,
};
pub use lyapunov::{lyapunov_spectrum, lyapunov_spectrum_of, LyapunovSpectrum};
pub use zero_one::{k_statistic, zero_one_test, zero_one_test_with, ZeroOneResult};

/// Step stride used to decimate x1 before the 0-1 test (sampling interval 0.2
/// time units at the default dt).
pub const ZERO_ONE_STRIDE: usize = 200;

/// Step stride for the SE/C0 series.
pub const COMPLEXITY_STRIDE: usize = 50;
