//! Spectral p-Dirac operators on flat spin tori, nonlinear eigenpairs of
//! `D_p ψ = λ|ψ|^{p-2}ψ`, and critical-point solvers for `D_p ψ = H_ψ(ψ)`.
//!
//! Fields live on a uniform grid over `T^m`; the Dirac operator is applied
//! exactly as a Fourier multiplier, so `D² = Δ` holds to roundoff.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clifford;
pub mod critical;
pub mod dirac;
pub mod eigen;
pub mod energy;
pub mod error;
pub mod fft;
pub mod galerkin;
pub mod io;
pub mod lattice;
mod optim;

pub use clifford::{build_gamma, check_relations, CMatrix, GammaSet};
pub use dirac::{check_p_range, critical_exponent, default_eps, DiracOperator, SpectrumEntry};
pub use energy::{hcal, hcal_prime, Classification, Energy, Nonlinearity, NonlinearityKind, Regime};
pub use error::{Error, Result};
pub use galerkin::{Eigenfield, SpectralBasis};
pub use lattice::{hermitian_inner, inner, lp_norm, lp_norm_pow, random_field, SpinorField, TorusModel, TorusModelSpec};
pub use optim::StepRule;
