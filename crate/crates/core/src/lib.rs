//! Grand-canonical thermodynamics of the two-mode attractive boson model
//!
//! ```text
//! H_M = a1† a2 + a2† a1 - (lambda / M) (n1² + n2²)
//! ```
//!
//! The crate covers exact diagonalization of each particle-number sector,
//! the grand partition function and its ensemble averages, the mean-field
//! closed forms near the divergence `lambda -> lambda_D`, the variational
//! ground state, and the sweeps/fits that expose the power-law signatures
//! of the underlying quantum phase transition at `lambda_D = 1`.
//!
//! Energies are measured in units of half the level splitting of `H_1`.

pub mod cache;
pub mod ensemble;
mod error;
pub mod groundstate;
pub mod meanfield;
pub mod quadrature;
pub mod scaling;
pub mod spectrum;
pub mod summation;
pub mod tridiag;

pub use cache::{DirectSource, SpectrumCache, SpectrumSource};
pub use ensemble::{
    grand_partition, log_partition_term, observables, EnsembleResult, ModelParams, SumControl,
};
pub use error::{Error, Result};
pub use groundstate::{gs_energy_density, minimize_theta, variational_energy, GroundStateResult};
pub use meanfield::{
    asymptotics, lambda_d_of_mu, mu_of_lambda_d, xi12_quadrature, xi_coefficient,
    xi_divergent_form, AsymptoticPrediction, Branch, DivergencePoint, Xi12,
};
pub use scaling::{
    divergence_coefficient, fit_series, linear_relation_fit, powerlaw_fit, sweep, FitTarget, GridSpec,
    LinearFit, Observable, ScalingFit, SweepPoint, SweepSeries,
};
pub use spectrum::{
    build_hamiltonian, build_lmg_matrix, eigensystem, eigenvalues, parity_labels, DenseMatrix,
    Spectrum, TridiagonalHamiltonian,
};
