//! Concrete complex representations of the Clifford algebra of `R^m`.
//!
//! The gamma matrices are anti-Hermitian and satisfy
//! `γ_i γ_j + γ_j γ_i = -2 δ_ij I`, so the Dirac symbol `i Σ_j ξ_j γ_j` is
//! Hermitian with eigenvalues `±|ξ|`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

fn pauli() -> [CMatrix; 3] {
    let x = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    let y = CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]);
    let z = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
    [x, y, z]
}

/// Gamma matrices `γ_1..γ_m` acting on spinors of dimension `2^⌊m/2⌋`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSet {
    m: usize,
    spinor_dim: usize,
    gammas: Vec<CMatrix>,
}

impl GammaSet {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn spinor_dim(&self) -> usize {
        self.spinor_dim
    }

    pub fn gammas(&self) -> &[CMatrix] {
        &self.gammas
    }

    pub fn gamma(&self, j: usize) -> &CMatrix {
        &self.gammas[j]
    }

    /// Builds a set from arbitrary matrices without checking the relations.
    /// Used to exercise [`check_relations`] on broken inputs.
    pub fn from_matrices(gammas: Vec<CMatrix>) -> Result<Self> {
        let m = gammas.len();
        let n = gammas.first().map(|g| g.nrows()).unwrap_or(0);
        if gammas.iter().any(|g| g.nrows() != n || g.ncols() != n) || n == 0 {
            return Err(Error::ShapeMismatch("gamma matrices must be square and equal-sized".into()));
        }
        Ok(Self { m, spinor_dim: n, gammas })
    }

    /// Returns the Clifford product `Σ_j ξ_j γ_j`.
    pub fn clifford_vector(&self, xi: &[f64]) -> CMatrix {
        assert_eq!(xi.len(), self.m);
        let mut out = CMatrix::zeros(self.spinor_dim, self.spinor_dim);
        for (g, &x) in self.gammas.iter().zip(xi) {
            out += g * Complex64::new(x, 0.0);
        }
        out
    }

    /// The Hermitian Dirac symbol `i Σ_j ξ_j γ_j`.
    pub fn symbol(&self, xi: &[f64]) -> CMatrix {
        self.clifford_vector(xi) * I
    }
}

/// Builds gamma matrices for `R^m` by the recursive tensor-product scheme.
///
/// Base cases use Hermitian generators `{σx, σy}` (m = 2) and
/// `{σx, σy, σz}` (m = 3). The step `m -> m + 2` maps the Hermitian set
/// `{h_j}` to `{h_j ⊗ σx} ∪ {I ⊗ σy, I ⊗ σz}`. The anti-Hermitian gammas
/// are `γ_j = i h_j`.
pub fn build_gamma(m: usize) -> Result<GammaSet> {
    if m < 2 {
        return Err(Error::InvalidDimension(m));
    }
    let [sx, sy, sz] = pauli();
    let mut herm: Vec<CMatrix> = if m % 2 == 0 { vec![sx.clone(), sy.clone()] } else { vec![sx.clone(), sy.clone(), sz.clone()] };
    let mut dim = herm.len();
    while dim < m {
        let n = herm[0].nrows();
        let id = CMatrix::identity(n, n);
        let mut next: Vec<CMatrix> = herm.iter().map(|h| h.kronecker(&sx)).collect();
        next.push(id.kronecker(&sy));
        next.push(id.kronecker(&sz));
        herm = next;
        dim += 2;
    }
    let spinor_dim = 1usize << (m / 2);
    debug_assert_eq!(herm[0].nrows(), spinor_dim);
    let gammas = herm.into_iter().map(|h| h * I).collect();
    Ok(GammaSet { m, spinor_dim, gammas })
}

fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Maximum anticommutator violation plus maximum anti-Hermiticity defect,
/// both measured entrywise.
pub fn check_relations(g: &GammaSet) -> f64 {
    let n = g.spinor_dim;
    let id = CMatrix::identity(n, n);
    let mut relation: f64 = 0.0;
    for i in 0..g.m {
        for j in 0..g.m {
            let mut ac = &g.gammas[i] * &g.gammas[j] + &g.gammas[j] * &g.gammas[i];
            if i == j {
                ac += &id * Complex64::new(2.0, 0.0);
            }
            relation = relation.max(max_abs(&ac));
        }
    }
    let skew = g.gammas.iter().map(|gm| max_abs(&(gm.adjoint() + gm))).fold(0.0, f64::max);
    relation + skew
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_small_dimension() {
        assert!(matches!(build_gamma(1), Err(Error::InvalidDimension(1))));
        assert!(build_gamma(0).is_err());
    }

    #[test]
    fn spinor_dimension_matches_rank() {
        for (m, n) in [(2, 2), (3, 2), (4, 4), (5, 4), (6, 8), (7, 8)] {
            let g = build_gamma(m).unwrap();
            assert_eq!(g.spinor_dim(), n, "m = {m}");
            assert_eq!(g.gammas().len(), m);
        }
    }

    #[test]
    fn relations_hold_to_machine_precision() {
        for m in 2..=7 {
            let g = build_gamma(m).unwrap();
            assert!(check_relations(&g) < 1e-14, "m = {m}");
        }
    }

    #[test]
    fn gammas_square_to_minus_identity_and_are_unitary() {
        let g = build_gamma(4).unwrap();
        let id = CMatrix::identity(4, 4);
        for gm in g.gammas() {
            assert!(max_abs(&(gm * gm + &id)) < 1e-15);
            assert!(max_abs(&(gm.adjoint() * gm - &id)) < 1e-15);
        }
    }

    #[test]
    fn identity_in_place_of_gamma_is_detected() {
        let mut mats = build_gamma(2).unwrap().gammas().to_vec();
        mats[0] = CMatrix::identity(2, 2);
        let broken = GammaSet::from_matrices(mats).unwrap();
        assert!(check_relations(&broken) >= 2.0);
    }

    #[test]
    fn scaled_gammas_violate_by_at_least_six() {
        let mats = build_gamma(3).unwrap().gammas().iter().map(|g| g * Complex64::new(2.0, 0.0)).collect();
        let scaled = GammaSet::from_matrices(mats).unwrap();
        // diagonal term: 2·(2γ)² + 2I = -8I + 2I
        assert!(check_relations(&scaled) >= 6.0);
    }

    #[test]
    fn symbol_squares_to_norm_and_has_split_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in 2..=6 {
            let g = build_gamma(m).unwrap();
            let n = g.spinor_dim();
            for _ in 0..100 {
                let xi: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
                let norm2: f64 = xi.iter().map(|x| x * x).sum();
                let c = g.clifford_vector(&xi);
                let sq = &c * &c + CMatrix::identity(n, n) * Complex64::new(norm2, 0.0);
                assert!(max_abs(&sq) < 1e-13);

                let s = g.symbol(&xi);
                assert!(max_abs(&(s.adjoint() - &s)) < 1e-15);
                let eig = SymmetricEigen::new(s);
                let norm = norm2.sqrt();
                let plus = eig.eigenvalues.iter().filter(|&&l| (l - norm).abs() < 1e-12).count();
                let minus = eig.eigenvalues.iter().filter(|&&l| (l + norm).abs() < 1e-12).count();
                assert_eq!((plus, minus), (n / 2, n / 2));
            }
        }
    }
}
