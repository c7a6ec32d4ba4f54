//! Robust Capon beamforming for direction-of-arrival estimation.
//!
//! The crate covers the signal model of a half-wavelength uniform linear
//! array ([`array`]), the covariance transforms behind robust beamforming
//! ([`covariance`]), the weight and spectrum solvers ([`beamformer`]),
//! robustness diagnostics ([`metrics`]) and a seeded Monte-Carlo harness
//! ([`experiment`]).
//!
//! The central method is unbalanced diagonal loading (UDL): the Capon
//! beamformer of `R̂ + Γ`, where `Γ` loads the sample signal subspace by
//! `δ₁` and the noise subspace by `δ₂`. `R̂ + Γ` dominates every member of
//! the interval set `R̂ − Γ ⪯ R ⪯ R̂ + Γ`, so the min–max robust Capon
//! problem reduces to a single Capon solve. Large `δ₁` with small `δ₂`
//! approaches the MUSIC pseudo-spectrum; `δ₁ = δ₂` is ordinary diagonal
//! loading.
//!
//! ```
//! use robust_capon_core::prelude::*;
//!
//! let scenario = SourceScenario::reference();
//! let snapshots = generate_snapshots(&scenario, 25, 7).unwrap();
//! let rhat = sample_covariance(&snapshots).unwrap();
//! let grid = uniform_grid(200).unwrap();
//! let spec = GammaSpec::new(3.0, 0.01, scenario.n_sources()).unwrap();
//! let spectrum = udl_spectrum(&rhat, &spec, &grid, &scenario.geometry).unwrap();
//! assert_eq!(find_peaks(&spectrum, 3).len(), 3);
//! ```

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod array;
pub mod beamformer;
pub mod covariance;
pub mod csv_io;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod random;

pub use error::{BeamformError, Result};

pub mod prelude {
    pub use crate::array::{
        generate_snapshots, interference_noise_covariance, mvdr_weights, output_sinr, steering_vector, true_covariance,
        ArrayGeometry, SnapshotSet, Source, SourceScenario,
    };
    pub use crate::beamformer::{
        beamformer_power, capon_power, capon_spectrum, capon_weights, globally_robust_loading, globally_robust_quartic,
        min_power, music_pseudospectrum, quartic_regularized_weights, regularized_constraint_weights, udl_covariance,
        udl_spectrum, uniform_grid, worst_case_power, Beamformer, ConstraintKind, ConstraintSet, GlobalSolution,
        Loading, QuarticSolution, RegularizedOutcome, SpectrumGrid,
    };
    pub use crate::covariance::{
        bayesian_combine, diagonal_load, eigen_threshold, eigendecompose, gamma_matrix, partition_subspaces,
        sample_covariance, sample_interval_member, EigenDecomposition, GammaSpec, SubspacePartition,
    };
    pub use crate::error::{BeamformError, Result};
    pub use crate::experiment::{
        run_monte_carlo, spectrum_command, ExperimentConfig, MatrixSpec, MethodSpec, MonteCarloResult, SpectrumSource,
        TablePreset,
    };
    pub use crate::linalg::{CMatrix, CVector, HermitianMatrix};
    pub use crate::metrics::{
        dispersion, find_peaks, normalize_pattern, one_sided_robustness_measure, resolution_check, PatternEnsemble,
    };
}
