//! The Fourier-spectral Dirac operator on a flat spin torus, the spinor
//! Laplacian, the p-Dirac operator `D_p ψ = D(|Dψ|^{p-2} Dψ)` and the two
//! Sobolev norms built from them.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::clifford::GammaSet;
use crate::error::{Error, Result};
use crate::fft::GridFft;
use crate::lattice::{fiber_norm_sqr, lp_norm, lp_norm_pow, SpinorField, TorusModel};

/// Relative gap below which two momenta count as the same spectral level.
const LEVEL_TOL: f64 = 1e-10;

/// Default regularization of `|Dψ|^{p-2}`: `1e-8` below `p = 2`, none above.
pub fn default_eps(p: f64) -> f64 {
    if p < 2.0 {
        1e-8
    } else {
        0.0
    }
}

/// Enforces `1 < p < m` unless `allow_outside` is set; `p > 1` is always
/// required.
pub fn check_p_range(p: f64, m: usize, allow_outside: bool) -> Result<()> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidExponent(format!("p must exceed 1, got {p}")));
    }
    if !allow_outside && p >= m as f64 {
        return Err(Error::InvalidExponent(format!(
            "p = {p} is not below the dimension m = {m}; pass the override flag for exploratory runs"
        )));
    }
    Ok(())
}

/// Critical Sobolev exponent `mp/(m-p)`, infinite when `p >= m`.
pub fn critical_exponent(p: f64, m: usize) -> f64 {
    let m = m as f64;
    if p < m {
        m * p / (m - p)
    } else {
        f64::INFINITY
    }
}

/// One row of the analytic Dirac spectrum: a Fourier mode together with the
/// sign of its eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub eigenvalue: f64,
    pub multiplicity: usize,
    pub mode: Vec<i64>,
    /// Index of the first spectral level this entry belongs to (0-based,
    /// counting distinct `|λ|`).
    pub level: usize,
    #[serde(skip)]
    pub bin: usize,
}

#[derive(Debug, Clone)]
pub struct DiracOperator {
    model: Arc<TorusModel>,
    gamma: GammaSet,
    fft: GridFft,
    /// Momenta per bin, `m` entries each.
    xi: Vec<f64>,
    xi_norm2: Vec<f64>,
    /// Symbol `i γ·ξ` per bin, `N × N` row-major.
    symbol: Vec<Complex64>,
    singular: bool,
}

impl DiracOperator {
    pub fn new(model: Arc<TorusModel>, gamma: GammaSet) -> Result<Self> {
        let m = model.m();
        if gamma.m() != m {
            return Err(Error::ShapeMismatch(format!("gamma set is for m = {}, model has m = {m}", gamma.m())));
        }
        let n = gamma.spinor_dim();
        let bins = model.sites();
        let mut xi = Vec::with_capacity(bins * m);
        let mut xi_norm2 = Vec::with_capacity(bins);
        let mut symbol = Vec::with_capacity(bins * n * n);
        for bin in 0..bins {
            let mode = model.mode_of_bin(bin);
            let k: Vec<f64> =
                (0..m).map(|j| 2.0 * std::f64::consts::PI * (mode[j] as f64 + model.twist()[j]) / model.lengths()[j]).collect();
            xi_norm2.push(k.iter().map(|x| x * x).sum());
            let s = gamma.symbol(&k);
            for r in 0..n {
                for c in 0..n {
                    symbol.push(s[(r, c)]);
                }
            }
            xi.extend(k);
        }
        let singular = xi_norm2.contains(&0.0);
        let fft = GridFft::new(model.grid(), n);
        Ok(Self { model, gamma, fft, xi, xi_norm2, symbol, singular })
    }

    pub fn model(&self) -> &Arc<TorusModel> {
        &self.model
    }

    pub fn gamma(&self) -> &GammaSet {
        &self.gamma
    }

    pub fn spinor_dim(&self) -> usize {
        self.gamma.spinor_dim()
    }

    pub fn m(&self) -> usize {
        self.model.m()
    }

    /// True when some mode has zero momentum (harmonic spinors exist).
    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn momentum(&self, bin: usize) -> &[f64] {
        let m = self.m();
        &self.xi[bin * m..(bin + 1) * m]
    }

    pub fn momentum_norm2(&self, bin: usize) -> f64 {
        self.xi_norm2[bin]
    }

    /// Smallest nonzero `|ξ|` over the grid modes.
    pub fn min_momentum(&self) -> f64 {
        self.xi_norm2.iter().copied().filter(|&x| x > 0.0).fold(f64::INFINITY, f64::min).sqrt()
    }

    pub fn symbol_at(&self, bin: usize) -> &[Complex64] {
        let n = self.spinor_dim();
        &self.symbol[bin * n * n..(bin + 1) * n * n]
    }

    pub fn zeros(&self) -> SpinorField {
        SpinorField::zeros(self.model.clone(), self.spinor_dim())
    }

    pub fn check_field(&self, f: &SpinorField) -> Result<()> {
        if f.spinor_dim() != self.spinor_dim() || **f.model() != *self.model {
            return Err(Error::ShapeMismatch("field does not match the operator's model or spinor dimension".into()));
        }
        Ok(())
    }

    /// Forward (unnormalized) transform of the field values.
    pub fn to_fourier(&self, f: &SpinorField) -> Vec<Complex64> {
        let mut data = f.values().to_vec();
        self.fft.forward(&mut data);
        data
    }

    /// Inverse transform of Fourier coefficients into a field on this model.
    pub fn from_fourier(&self, mut data: Vec<Complex64>) -> SpinorField {
        self.fft.inverse(&mut data);
        SpinorField::from_values(self.model.clone(), self.spinor_dim(), data).expect("fourier data has the model's shape")
    }

    fn apply_symbol(&self, data: &mut [Complex64]) {
        let n = self.spinor_dim();
        let mut tmp = vec![Complex64::new(0.0, 0.0); n];
        for (bin, chunk) in data.chunks_exact_mut(n).enumerate() {
            let s = self.symbol_at(bin);
            for (r, t) in tmp.iter_mut().enumerate() {
                *t = s[r * n..(r + 1) * n].iter().zip(chunk.iter()).map(|(a, b)| a * b).sum();
            }
            chunk.copy_from_slice(&tmp);
        }
    }

    fn apply_scalar_multiplier(&self, f: &SpinorField, mult: impl Fn(usize) -> Complex64) -> SpinorField {
        let n = self.spinor_dim();
        let mut data = self.to_fourier(f);
        for (bin, chunk) in data.chunks_exact_mut(n).enumerate() {
            let w = mult(bin);
            chunk.iter_mut().for_each(|z| *z *= w);
        }
        self.from_fourier(data)
    }

    pub(crate) fn apply_d_unchecked(&self, f: &SpinorField) -> SpinorField {
        let mut data = self.to_fourier(f);
        self.apply_symbol(&mut data);
        self.from_fourier(data)
    }

    /// Spectral Dirac action: transform, multiply by `i γ·ξ(k)`, transform back.
    pub fn apply_d(&self, f: &SpinorField) -> Result<SpinorField> {
        self.check_field(f)?;
        Ok(self.apply_d_unchecked(f))
    }

    /// Spinor Laplacian, the multiplier `|ξ(k)|²`.
    pub fn apply_laplacian(&self, f: &SpinorField) -> Result<SpinorField> {
        self.check_field(f)?;
        Ok(self.apply_scalar_multiplier(f, |bin| Complex64::new(self.xi_norm2[bin], 0.0)))
    }

    /// Covariant derivatives `∇_j f` (multipliers `i ξ_j`), one field per axis.
    pub fn covariant_derivatives(&self, f: &SpinorField) -> Result<Vec<SpinorField>> {
        self.check_field(f)?;
        let m = self.m();
        Ok((0..m).map(|j| self.apply_scalar_multiplier(f, |bin| Complex64::new(0.0, self.xi[bin * m + j]))).collect())
    }

    /// Inverse of the Laplacian (shifted by one on singular models); the
    /// metric used to precondition descent directions.
    pub fn precondition(&self, f: &SpinorField) -> SpinorField {
        let shift = if self.singular { 1.0 } else { 0.0 };
        self.apply_scalar_multiplier(f, |bin| Complex64::new(1.0 / (self.xi_norm2[bin] + shift), 0.0))
    }

    /// `‖f‖_{1,p} = ‖D f‖_p`; only a seminorm on singular models.
    pub fn sobolev_norm(&self, f: &SpinorField, p: f64) -> Result<f64> {
        if self.singular {
            log::warn!("all-periodic spin structure: ‖D·‖_p is only a seminorm");
        }
        lp_norm(&self.apply_d(f)?, p)
    }

    /// `‖f‖_{H^{1,p}} = (‖f‖_p^p + ‖∇f‖_p^p)^{1/p}` with
    /// `|∇f|² = Σ_j |∇_j f|²`.
    pub fn h1p_norm(&self, f: &SpinorField, p: f64) -> Result<f64> {
        let derivs = self.covariant_derivatives(f)?;
        let n = self.spinor_dim();
        let mut grad = SpinorField::zeros(self.model.clone(), 1);
        for (site, g) in grad.values_mut().iter_mut().enumerate() {
            let s: f64 = derivs.iter().map(|d| fiber_norm_sqr(&d.values()[site * n..(site + 1) * n])).sum();
            *g = Complex64::new(s.sqrt(), 0.0);
        }
        Ok((lp_norm_pow(f, p)? + lp_norm_pow(&grad, p)?).powf(1.0 / p))
    }

    /// Pointwise `(|g|² + ε²)^{(p-2)/2} g`, the flux density of `D_p`.
    pub fn flux(g: &SpinorField, p: f64, eps: f64) -> SpinorField {
        if p == 2.0 {
            return g.clone();
        }
        let mut out = g.clone();
        let n = g.spinor_dim();
        let eps2 = eps * eps;
        for chunk in out.values_mut().chunks_exact_mut(n) {
            let r2 = fiber_norm_sqr(chunk) + eps2;
            let w = if r2 > 0.0 { r2.powf(0.5 * (p - 2.0)) } else { 0.0 };
            chunk.iter_mut().for_each(|z| *z *= w);
        }
        out
    }

    /// The p-Dirac operator `D((|Df|² + ε²)^{(p-2)/2} D f)`.
    pub fn apply_dp(&self, f: &SpinorField, p: f64, eps: f64) -> Result<SpinorField> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidExponent(format!("p-Dirac needs p > 1, got {p}")));
        }
        if !(eps >= 0.0) {
            return Err(Error::InvalidArgument(format!("regularization must be >= 0, got {eps}")));
        }
        if !f.is_finite() {
            return Err(Error::NonFinite("apply_dp input"));
        }
        self.check_field(f)?;
        let g = self.apply_d_unchecked(f);
        Ok(self.apply_d_unchecked(&Self::flux(&g, p, eps)))
    }

    /// Unit eigenvectors of the symbol at `bin` for the eigenvalue with the
    /// given sign (`N/2` of them; all `N` standard vectors at a zero mode).
    pub fn mode_eigenvectors(&self, bin: usize, positive: bool) -> Vec<Vec<Complex64>> {
        let n = self.spinor_dim();
        let norm2 = self.xi_norm2[bin];
        if norm2 == 0.0 {
            return (0..n).map(|i| (0..n).map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect()).collect();
        }
        let norm = norm2.sqrt();
        let sign = if positive { 1.0 } else { -1.0 };
        let s = self.symbol_at(bin);
        // columns of the spectral projector (I ± S/|ξ|)/2, orthonormalized
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(n / 2);
        for col in 0..n {
            let mut v: Vec<Complex64> = (0..n)
                .map(|r| {
                    let id = if r == col { 1.0 } else { 0.0 };
                    (Complex64::new(id, 0.0) + s[r * n + col] * (sign / norm)) * 0.5
                })
                .collect();
            for b in &basis {
                let proj: Complex64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                v.iter_mut().zip(b).for_each(|(y, x)| *y -= proj * x);
            }
            let len = fiber_norm_sqr(&v).sqrt();
            if len > 1e-8 {
                v.iter_mut().for_each(|z| *z /= len);
                basis.push(v);
            }
            if basis.len() == n / 2 {
                break;
            }
        }
        basis
    }

    /// All `(mode, sign)` eigenvalue entries of `D` sorted by level, then
    /// sign, then mode.
    pub fn full_spectrum(&self) -> Vec<SpectrumEntry> {
        let n = self.spinor_dim();
        let mut bins: Vec<usize> = (0..self.model.sites()).collect();
        bins.sort_by(|&a, &b| self.xi_norm2[a].total_cmp(&self.xi_norm2[b]).then(a.cmp(&b)));
        let mut level_of = vec![0usize; bins.len()];
        let mut level = 0;
        let mut anchor = self.xi_norm2[bins[0]];
        for &bin in &bins {
            let x = self.xi_norm2[bin];
            if x - anchor > LEVEL_TOL * anchor.max(1e-300) {
                level += 1;
                anchor = x;
            }
            level_of[bin] = level;
        }
        let mut entries = Vec::new();
        for &bin in &bins {
            let mode = self.model.mode_of_bin(bin);
            let norm = self.xi_norm2[bin].sqrt();
            if norm == 0.0 {
                entries.push(SpectrumEntry { eigenvalue: 0.0, multiplicity: n, mode, level: level_of[bin], bin });
            } else {
                for sign in [-1.0, 1.0] {
                    entries.push(SpectrumEntry {
                        eigenvalue: sign * norm,
                        multiplicity: n / 2,
                        mode: mode.clone(),
                        level: level_of[bin],
                        bin,
                    });
                }
            }
        }
        entries.sort_by(|a, b| a.level.cmp(&b.level).then(a.eigenvalue.total_cmp(&b.eigenvalue)).then(a.mode.cmp(&b.mode)));
        entries
    }

    /// The `count` entries of smallest `|λ|`.
    pub fn dirac_spectrum(&self, count: usize) -> Result<Vec<SpectrumEntry>> {
        if count == 0 {
            return Err(Error::InvalidArgument("spectrum count must be >= 1".into()));
        }
        let mut all = self.full_spectrum();
        all.truncate(count);
        Ok(all)
    }

    /// Distinct `|λ|` values with their total multiplicity, ascending.
    pub fn distinct_levels(&self, count: usize) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for e in self.full_spectrum() {
            if e.level < out.len() {
                out[e.level].1 += e.multiplicity;
            } else {
                if out.len() == count {
                    break;
                }
                out.push((e.eigenvalue.abs(), e.multiplicity));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::build_gamma;
    use crate::lattice::{inner, random_field};
    use std::f64::consts::PI;

    fn operator(m: usize, n: usize, twist: &[f64]) -> DiracOperator {
        let model = Arc::new(TorusModel::unit(m, n, twist).unwrap());
        DiracOperator::new(model, build_gamma(m).unwrap()).unwrap()
    }

    fn plane_wave(op: &DiracOperator, bin: usize, u: &[Complex64]) -> SpinorField {
        let n = op.spinor_dim();
        let mut data = vec![Complex64::new(0.0, 0.0); op.model().sites() * n];
        data[bin * n..(bin + 1) * n].copy_from_slice(u);
        op.from_fourier(data)
    }

    #[test]
    fn gamma_dimension_must_match() {
        let model = Arc::new(TorusModel::unit(3, 4, &[0.5, 0.0, 0.0]).unwrap());
        assert!(DiracOperator::new(model, build_gamma(2).unwrap()).is_err());
    }

    #[test]
    fn eigenfield_is_scaled_by_its_eigenvalue() {
        let op = operator(3, 8, &[0.5, 0.0, 0.0]);
        for bin in [0, 5, 77, 300] {
            for positive in [true, false] {
                let norm = op.momentum_norm2(bin).sqrt();
                let sign = if positive { 1.0 } else { -1.0 };
                for u in op.mode_eigenvectors(bin, positive) {
                    let f = plane_wave(&op, bin, &u);
                    let df = op.apply_d(&f).unwrap();
                    let mut expect = f.clone();
                    expect.scale_mut(sign * norm);
                    assert!(df.sub(&expect).max_abs() < 1e-12 * (1.0 + norm));
                }
            }
        }
    }

    #[test]
    fn zero_field_maps_to_zero() {
        let op = operator(2, 8, &[0.5, 0.5]);
        assert_eq!(op.apply_d(&op.zeros()).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn constant_spinor_on_twisted_torus() {
        let op = operator(3, 8, &[0.5, 0.0, 0.0]);
        let u = [Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.7)];
        let f = SpinorField::constant(op.model().clone(), &u);
        let df = op.apply_d(&f).unwrap();
        for (a, b) in df.fiber_norms().iter().zip(f.fiber_norms()) {
            assert!((a - PI * b).abs() < 1e-12);
        }
        for p in [1.5, 2.0, 2.5] {
            let lhs = op.sobolev_norm(&f, p).unwrap();
            assert!((lhs - PI * lp_norm(&f, p).unwrap()).abs() < 1e-12);
        }
        // |∇f| = π|f|, so the H^{1,2} norm is (1 + π²)^{1/2} ‖f‖_2
        let h = op.h1p_norm(&f, 2.0).unwrap();
        assert!((h - (1.0 + PI * PI).sqrt() * lp_norm(&f, 2.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn laplacian_of_constant_on_doubly_twisted_torus() {
        let op = operator(2, 8, &[0.5, 0.5]);
        let f = SpinorField::constant(op.model().clone(), &[Complex64::new(1.0, -2.0), Complex64::new(0.5, 0.0)]);
        let lf = op.apply_laplacian(&f).unwrap();
        let mut expect = f.clone();
        expect.scale_mut(2.0 * PI * PI);
        assert!(lf.sub(&expect).max_abs() < 1e-12);
    }

    #[test]
    fn single_mode_laplacian_and_sobolev_norm() {
        let op = operator(3, 8, &[0.5, 0.5, 0.5]);
        let bin = 3 * 64 + 2 * 8 + 7;
        let u = op.mode_eigenvectors(bin, true).remove(0);
        let f = plane_wave(&op, bin, &u);
        let lf = op.apply_laplacian(&f).unwrap();
        let mut expect = f.clone();
        expect.scale_mut(op.momentum_norm2(bin));
        assert!(lf.sub(&expect).max_abs() < 1e-10);
        let s = op.sobolev_norm(&f, 1.7).unwrap();
        let expect = op.momentum_norm2(bin).sqrt() * lp_norm(&f, 1.7).unwrap();
        assert!((s - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn lichnerowicz_on_flat_torus() {
        let op = operator(3, 8, &[0.5, 0.0, 0.5]);
        for seed in 0..5 {
            let f = random_field(op.model(), op.gamma(), seed);
            let dd = op.apply_d(&op.apply_d(&f).unwrap()).unwrap();
            let lap = op.apply_laplacian(&f).unwrap();
            assert!(dd.sub(&lap).max_abs() < 1e-12 * (1.0 + lap.max_abs()));
        }
    }

    #[test]
    fn h1p_dominates_lp() {
        let op = operator(2, 8, &[0.5, 0.0]);
        for seed in 0..10 {
            let f = random_field(op.model(), op.gamma(), seed);
            for p in [1.3, 2.0, 3.0] {
                assert!(op.h1p_norm(&f, p).unwrap() >= lp_norm(&f, p).unwrap());
            }
        }
        assert_eq!(op.h1p_norm(&op.zeros(), 2.0).unwrap(), 0.0);
    }

    #[test]
    fn p_dirac_special_cases() {
        let op = operator(3, 8, &[0.5, 0.0, 0.0]);
        let f = random_field(op.model(), op.gamma(), 4);
        let d2 = op.apply_d(&op.apply_d(&f).unwrap()).unwrap();
        assert_eq!(op.apply_dp(&f, 2.0, 0.0).unwrap(), d2);

        // unit constant spinor: D_p u = π^p u
        let u = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        let c = SpinorField::constant(op.model().clone(), &u);
        for p in [1.5, 2.5, 3.0] {
            let dp = op.apply_dp(&c, p, 0.0).unwrap();
            let mut expect = c.clone();
            expect.scale_mut(PI.powf(p));
            assert!(dp.sub(&expect).max_abs() < 1e-11);
        }

        for p in [1.5, 3.0] {
            for c in [-2.5, 0.3] {
                let lhs = op.apply_dp(&f.scaled(c), p, 0.0).unwrap();
                let mut rhs = op.apply_dp(&f, p, 0.0).unwrap();
                rhs.scale_mut(c.abs().powf(p - 2.0) * c);
                assert!(lhs.sub(&rhs).max_abs() < 1e-10 * (1.0 + rhs.max_abs()));
            }
        }

        assert!(op.apply_dp(&f, 1.0, 0.0).is_err());
        let mut bad = f.clone();
        bad.values_mut()[3] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(op.apply_dp(&bad, 1.5, 1e-8), Err(Error::NonFinite(_))));
    }

    #[test]
    fn spectrum_examples() {
        let op = operator(3, 8, &[0.5, 0.5, 0.5]);
        let spec = op.dirac_spectrum(3).unwrap();
        assert!((spec[0].eigenvalue.abs() - PI * 3f64.sqrt()).abs() < 1e-12 * PI);
        assert!(op.dirac_spectrum(0).is_err());

        let op = operator(3, 8, &[0.5, 0.0, 0.0]);
        let levels = op.distinct_levels(2);
        assert!((levels[0].0 - PI).abs() < 1e-12);
        // (±1/2, 0, 0): 2 modes, both signs
        assert_eq!(levels[0].1, 4);
        assert!((levels[1].0 - PI * 5f64.sqrt()).abs() < 1e-12);
        // (±1/2, ±1, 0) and (±1/2, 0, ±1): 8 modes, both signs, N/2 = 1 each
        assert_eq!(levels[1].1, 16);
        assert!(!op.is_singular());

        let op = operator(2, 4, &[0.0, 0.0]);
        assert!(op.is_singular());
        let spec = op.dirac_spectrum(1).unwrap();
        assert_eq!(spec[0].eigenvalue, 0.0);
        assert_eq!(spec[0].multiplicity, 2);
    }

    #[test]
    fn spectrum_matches_symbol_count() {
        let op = operator(2, 4, &[0.5, 0.0]);
        let total: usize = op.full_spectrum().iter().map(|e| e.multiplicity).sum();
        assert_eq!(total, 16 * 2);
    }

    #[test]
    fn d_is_self_adjoint_and_linear() {
        let op = operator(3, 8, &[0.5, 0.5, 0.0]);
        for seed in 0..10 {
            let f = random_field(op.model(), op.gamma(), seed);
            let g = random_field(op.model(), op.gamma(), 1000 + seed);
            let lhs = inner(&op.apply_d(&f).unwrap(), &g).unwrap();
            let rhs = inner(&f, &op.apply_d(&g).unwrap()).unwrap();
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
            let sum = op.apply_d(&f.add(&g)).unwrap();
            let parts = op.apply_d(&f).unwrap().add(&op.apply_d(&g).unwrap());
            assert!(sum.sub(&parts).max_abs() < 1e-12 * (1.0 + parts.max_abs()));
        }
    }

    #[test]
    fn p_range_validation() {
        assert!(check_p_range(2.0, 3, false).is_ok());
        assert!(check_p_range(3.0, 3, false).is_err());
        assert!(check_p_range(3.0, 3, true).is_ok());
        assert!(check_p_range(1.0, 3, true).is_err());
        assert_eq!(critical_exponent(2.0, 3), 6.0);
        assert!(critical_exponent(3.0, 3).is_infinite());
    }
}
