//! Orthonormal Fourier-Dirac eigenfields and the Galerkin subspaces they
//! span.
//!
//! An eigenfield is `e(x) = V^{-1/2} exp(2πi k·x/L) u` with `u` a unit
//! eigenvector of the symbol at mode `k`; the family is orthonormal for the
//! Hermitian `L²` product and simultaneously diagonalizes `D`, `Δ` and the
//! preconditioner. Subspaces are complex-linear: both `e` and `i e` belong
//! to the span.

use num_complex::Complex64;

use crate::dirac::DiracOperator;
use crate::lattice::SpinorField;

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenfield {
    pub bin: usize,
    pub mode: Vec<i64>,
    /// Signed Dirac eigenvalue.
    pub eigenvalue: f64,
    pub level: usize,
    pub spinor: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct SpectralBasis {
    fields: Vec<Eigenfield>,
}

impl SpectralBasis {
    /// The `count` lowest eigenfields in spectrum order (level, sign, mode,
    /// then eigenvector index).
    pub fn lowest(op: &DiracOperator, count: usize) -> Self {
        let mut fields = Vec::with_capacity(count);
        'outer: for entry in op.full_spectrum() {
            for spinor in op.mode_eigenvectors(entry.bin, entry.eigenvalue >= 0.0) {
                if fields.len() == count {
                    break 'outer;
                }
                fields.push(Eigenfield {
                    bin: entry.bin,
                    mode: entry.mode.clone(),
                    eigenvalue: entry.eigenvalue,
                    level: entry.level,
                    spinor,
                });
            }
        }
        Self { fields }
    }

    /// Every eigenfield whose `|λ|` lies in the first `levels` distinct
    /// spectral levels.
    pub fn levels(op: &DiracOperator, levels: usize) -> Self {
        let mut fields = Vec::new();
        for entry in op.full_spectrum() {
            if entry.level >= levels {
                break;
            }
            for spinor in op.mode_eigenvectors(entry.bin, entry.eigenvalue >= 0.0) {
                fields.push(Eigenfield {
                    bin: entry.bin,
                    mode: entry.mode.clone(),
                    eigenvalue: entry.eigenvalue,
                    level: entry.level,
                    spinor,
                });
            }
        }
        Self { fields }
    }

    pub fn empty() -> Self {
        Self { fields: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn fields(&self) -> &[Eigenfield] {
        &self.fields
    }

    /// Squared Dirac eigenvalues, i.e. the `D²` eigenvalues of the basis.
    pub fn squared_eigenvalues(&self) -> Vec<f64> {
        self.fields.iter().map(|e| e.eigenvalue * e.eigenvalue).collect()
    }

    /// `L²`-normalized field of basis element `j`.
    pub fn field(&self, op: &DiracOperator, j: usize) -> SpinorField {
        let mut c = vec![Complex64::new(0.0, 0.0); self.len()];
        c[j] = Complex64::new(1.0, 0.0);
        self.synthesize(op, &c)
    }

    /// Hermitian coefficients `⟨e_j, f⟩`.
    pub fn coefficients(&self, op: &DiracOperator, f: &SpinorField) -> Vec<Complex64> {
        if self.is_empty() {
            return Vec::new();
        }
        let n = op.spinor_dim();
        let data = op.to_fourier(f);
        let scale = op.model().volume().sqrt() / op.model().sites() as f64;
        self.fields
            .iter()
            .map(|e| {
                let block = &data[e.bin * n..(e.bin + 1) * n];
                e.spinor.iter().zip(block).map(|(u, z)| u.conj() * z).sum::<Complex64>() * scale
            })
            .collect()
    }

    /// `Σ_j c_j e_j`.
    pub fn synthesize(&self, op: &DiracOperator, coeffs: &[Complex64]) -> SpinorField {
        assert_eq!(coeffs.len(), self.len());
        let n = op.spinor_dim();
        let mut data = vec![Complex64::new(0.0, 0.0); op.model().sites() * n];
        let scale = op.model().sites() as f64 / op.model().volume().sqrt();
        for (e, c) in self.fields.iter().zip(coeffs) {
            for (s, u) in e.spinor.iter().enumerate() {
                data[e.bin * n + s] += u * c * scale;
            }
        }
        op.from_fourier(data)
    }

    /// Orthogonal projection onto the span.
    pub fn project(&self, op: &DiracOperator, f: &SpinorField) -> SpinorField {
        if self.is_empty() {
            return f.zeros_like();
        }
        let c = self.coefficients(op, f);
        self.synthesize(op, &c)
    }

    /// Orthogonal projection onto the complement of the span.
    pub fn project_out(&self, op: &DiracOperator, f: &SpinorField) -> SpinorField {
        if self.is_empty() {
            return f.clone();
        }
        f.sub(&self.project(op, f))
    }

    /// Real directions `e_j, i e_j` of the span, in that interleaved order.
    pub fn real_directions(&self, op: &DiracOperator) -> Vec<SpinorField> {
        let mut out = Vec::with_capacity(2 * self.len());
        for j in 0..self.len() {
            let f = self.field(op, j);
            let g = f.scaled_complex(Complex64::i());
            out.push(f);
            out.push(g);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::build_gamma;
    use crate::lattice::{hermitian_inner, inner, random_field, TorusModel};
    use std::sync::Arc;

    fn op() -> DiracOperator {
        let model = Arc::new(TorusModel::unit(3, 4, &[0.5, 0.0, 0.0]).unwrap());
        DiracOperator::new(model, build_gamma(3).unwrap()).unwrap()
    }

    #[test]
    fn basis_is_orthonormal_and_diagonalizes_d() {
        let op = op();
        let basis = SpectralBasis::lowest(&op, 12);
        assert_eq!(basis.len(), 12);
        for i in 0..basis.len() {
            let ei = basis.field(&op, i);
            let dei = op.apply_d(&ei).unwrap();
            let lam = basis.fields()[i].eigenvalue;
            assert!(dei.sub(&ei.scaled(lam)).max_abs() < 1e-12);
            for j in 0..basis.len() {
                let ej = basis.field(&op, j);
                let z = hermitian_inner(&ei, &ej).unwrap();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((z - Complex64::new(expect, 0.0)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn coefficients_and_projection() {
        let op = op();
        let basis = SpectralBasis::levels(&op, 2);
        assert_eq!(basis.len(), 4 + 16);
        let f = random_field(op.model(), op.gamma(), 3);
        let p = basis.project(&op, &f);
        let q = basis.project_out(&op, &f);
        assert!(inner(&p, &q).unwrap().abs() < 1e-12);
        assert!(basis.project(&op, &p).sub(&p).max_abs() < 1e-12);
        assert!(f.sub(&p.add(&q)).max_abs() < 1e-13);
        for (j, c) in basis.coefficients(&op, &f).iter().enumerate() {
            let direct = hermitian_inner(&basis.field(&op, j), &f).unwrap();
            assert!((c - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn real_directions_are_orthonormal() {
        let op = op();
        let dirs = SpectralBasis::lowest(&op, 3).real_directions(&op);
        assert_eq!(dirs.len(), 6);
        for (i, a) in dirs.iter().enumerate() {
            for (j, b) in dirs.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((inner(a, b).unwrap() - expect).abs() < 1e-13);
            }
        }
    }
}
