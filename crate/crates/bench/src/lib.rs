//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use pdirac_core::{build_gamma, random_field, DiracOperator, Energy, Nonlinearity, SpinorField, TorusModel};

/// Unit torus `T^m` with `n` points per axis, antiperiodic in every
/// direction.
pub fn operator(m: usize, n: usize) -> Arc<DiracOperator> {
    let model = Arc::new(TorusModel::unit(m, n, &vec![0.5; m]).expect("valid model"));
    Arc::new(DiracOperator::new(model, build_gamma(m).expect("m >= 2")).expect("matching gamma set"))
}

pub fn field(op: &DiracOperator, seed: u64) -> SpinorField {
    random_field(op.model(), op.gamma(), seed)
}

/// `p`-energy with the cubic-type power `|ψ|⁴/4`.
pub fn energy(op: &Arc<DiracOperator>, p: f64) -> Energy {
    Energy::new(op.clone(), p, None, Nonlinearity::power(1.0, 4.0).expect("valid power"), true).expect("valid energy")
}
