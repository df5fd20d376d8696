//! Flat spin tori and spinor fields sampled on a uniform grid.
//!
//! A spin structure on `T^m` is a choice of periodic (`δ_j = 0`) or
//! antiperiodic (`δ_j = 1/2`) boundary condition per axis. Fields are stored
//! in the periodic gauge; the twist only enters through the Fourier momenta
//! `ξ_j = 2π (k_j + δ_j) / L_j`.

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::clifford::GammaSet;
use crate::error::{Error, Result};

/// Neumaier-compensated accumulator; summation order is the caller's
/// iteration order, so results are bit-stable.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<T: IntoIterator<Item = f64>>(iter: T) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Sums an iterator with compensation.
pub fn compensated_sum(iter: impl IntoIterator<Item = f64>) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Geometry of the discretized torus `R^m / Π L_j Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TorusModelSpec", into = "TorusModelSpec")]
pub struct TorusModel {
    lengths: Vec<f64>,
    grid: Vec<usize>,
    twist: Vec<f64>,
    cell_volume: f64,
    sites: usize,
}

/// Plain serialized form of a [`TorusModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusModelSpec {
    pub m: usize,
    pub grid: Vec<usize>,
    #[serde(default)]
    pub lengths: Option<Vec<f64>>,
    pub twist: Vec<f64>,
}

impl TryFrom<TorusModelSpec> for TorusModel {
    type Error = Error;

    fn try_from(spec: TorusModelSpec) -> Result<Self> {
        if spec.grid.len() != spec.m || spec.twist.len() != spec.m {
            return Err(Error::InvalidModel(format!("grid and twist must have m = {} entries", spec.m)));
        }
        let lengths = spec.lengths.unwrap_or_else(|| vec![1.0; spec.m]);
        TorusModel::new(lengths, spec.grid, spec.twist)
    }
}

impl From<TorusModel> for TorusModelSpec {
    fn from(model: TorusModel) -> Self {
        Self { m: model.m(), grid: model.grid, lengths: Some(model.lengths), twist: model.twist }
    }
}

impl TorusModel {
    pub fn new(lengths: Vec<f64>, grid: Vec<usize>, twist: Vec<f64>) -> Result<Self> {
        let m = grid.len();
        if m < 2 {
            return Err(Error::InvalidDimension(m));
        }
        if lengths.len() != m || twist.len() != m {
            return Err(Error::InvalidModel("lengths, grid and twist differ in length".into()));
        }
        if let Some(n) = grid.iter().find(|&&n| n < 4 || n % 2 != 0) {
            return Err(Error::InvalidModel(format!("grid sizes must be even and >= 4, got {n}")));
        }
        if lengths.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(Error::InvalidModel("side lengths must be positive".into()));
        }
        if twist.iter().any(|&d| d != 0.0 && d != 0.5) {
            return Err(Error::InvalidModel("twist entries must be 0 or 0.5".into()));
        }
        let sites = grid.iter().product();
        let cell_volume = lengths.iter().zip(&grid).map(|(l, &n)| l / n as f64).product();
        Ok(Self { lengths, grid, twist, cell_volume, sites })
    }

    /// Unit side lengths with `n` points per axis.
    pub fn unit(m: usize, n: usize, twist: &[f64]) -> Result<Self> {
        Self::new(vec![1.0; m], vec![n; m], twist.to_vec())
    }

    pub fn m(&self) -> usize {
        self.grid.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn grid(&self) -> &[usize] {
        &self.grid
    }

    pub fn twist(&self) -> &[f64] {
        &self.twist
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// All-periodic structures carry a harmonic spinor (zero mode).
    pub fn is_invertible(&self) -> bool {
        self.twist.iter().any(|&d| d != 0.0)
    }

    /// Grid coordinates of a flat (row-major) site index.
    pub fn site_coords(&self, mut site: usize) -> Vec<usize> {
        let mut coords = vec![0; self.m()];
        for (axis, &n) in self.grid.iter().enumerate().rev() {
            coords[axis] = site % n;
            site /= n;
        }
        coords
    }

    /// Centered integer mode for an FFT bin along one axis: `[-n/2, n/2)`.
    pub fn bin_to_mode(n: usize, bin: usize) -> i64 {
        if bin < n / 2 {
            bin as i64
        } else {
            bin as i64 - n as i64
        }
    }

    /// Integer mode vector of a flat FFT bin index.
    pub fn mode_of_bin(&self, bin: usize) -> Vec<i64> {
        self.site_coords(bin).into_iter().zip(&self.grid).map(|(b, &n)| Self::bin_to_mode(n, b)).collect()
    }
}

/// A spinor-valued lattice field with values laid out row-major over the
/// grid, spinor index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    model: Arc<TorusModel>,
    spinor_dim: usize,
    values: Vec<Complex64>,
}

impl SpinorField {
    pub fn zeros(model: Arc<TorusModel>, spinor_dim: usize) -> Self {
        let len = model.sites() * spinor_dim;
        Self { model, spinor_dim, values: vec![Complex64::new(0.0, 0.0); len] }
    }

    pub fn from_values(model: Arc<TorusModel>, spinor_dim: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != model.sites() * spinor_dim {
            return Err(Error::ShapeMismatch(format!("expected {} values, got {}", model.sites() * spinor_dim, values.len())));
        }
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("spinor field"));
        }
        Ok(Self { model, spinor_dim, values })
    }

    /// The same spinor `u` at every site.
    pub fn constant(model: Arc<TorusModel>, u: &[Complex64]) -> Self {
        let spinor_dim = u.len();
        let values = u.iter().copied().cycle().take(model.sites() * spinor_dim).collect();
        Self { model, spinor_dim, values }
    }

    pub fn model(&self) -> &Arc<TorusModel> {
        &self.model
    }

    pub fn spinor_dim(&self) -> usize {
        self.spinor_dim
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn spinor(&self, site: usize) -> &[Complex64] {
        &self.values[site * self.spinor_dim..(site + 1) * self.spinor_dim]
    }

    pub fn spinors(&self) -> std::slice::ChunksExact<'_, Complex64> {
        self.values.chunks_exact(self.spinor_dim)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.spinor_dim == other.spinor_dim && (Arc::ptr_eq(&self.model, &other.model) || *self.model == *other.model)
    }

    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch("fields live on different models".into()))
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.model.clone(), self.spinor_dim)
    }

    pub fn with_values(&self, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self { model: self.model.clone(), spinor_dim: self.spinor_dim, values }
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.with_values(self.values.iter().map(|z| z * a).collect())
    }

    pub fn scaled_complex(&self, a: Complex64) -> Self {
        self.with_values(self.values.iter().map(|z| z * a).collect())
    }

    pub fn scale_mut(&mut self, a: f64) {
        self.values.iter_mut().for_each(|z| *z *= a);
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &Self) {
        debug_assert!(self.same_shape(x));
        for (y, xv) in self.values.iter_mut().zip(&x.values) {
            *y += xv * a;
        }
    }

    /// `self += a * x` with a complex coefficient.
    pub fn axpy_complex(&mut self, a: Complex64, x: &Self) {
        debug_assert!(self.same_shape(x));
        for (y, xv) in self.values.iter_mut().zip(&x.values) {
            *y += xv * a;
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Pointwise fiber lengths `|f(x)|`.
    pub fn fiber_norms(&self) -> Vec<f64> {
        self.spinors().map(fiber_norm).collect()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Hermitian length of one spinor.
#[inline]
pub fn fiber_norm(s: &[Complex64]) -> f64 {
    fiber_norm_sqr(s).sqrt()
}

#[inline]
pub fn fiber_norm_sqr(s: &[Complex64]) -> f64 {
    s.iter().map(|z| z.norm_sqr()).sum()
}

/// `Re⟨a, b⟩` for two spinors.
#[inline]
pub fn fiber_re_dot(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

fn check_lp_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidExponent(format!("L^p norm needs p >= 1, got {p}")))
    }
}

/// `∫ |f|^p dx` with the midpoint rule.
pub fn lp_norm_pow(f: &SpinorField, p: f64) -> Result<f64> {
    check_lp_exponent(p)?;
    let vol = f.model().cell_volume();
    let s = if p == 2.0 {
        compensated_sum(f.spinors().map(fiber_norm_sqr))
    } else {
        compensated_sum(f.spinors().map(|s| fiber_norm(s).powf(p)))
    };
    Ok(vol * s)
}

/// `(∫ |f|^p dx)^{1/p}`.
pub fn lp_norm(f: &SpinorField, p: f64) -> Result<f64> {
    Ok(lp_norm_pow(f, p)?.powf(1.0 / p))
}

/// Real scalar product `∫ Re⟨f, g⟩ dx`.
pub fn inner(f: &SpinorField, g: &SpinorField) -> Result<f64> {
    f.check_same_shape(g)?;
    Ok(inner_unchecked(f, g))
}

pub(crate) fn inner_unchecked(f: &SpinorField, g: &SpinorField) -> f64 {
    let vol = f.model().cell_volume();
    vol * compensated_sum(f.values.iter().zip(&g.values).map(|(a, b)| a.re * b.re + a.im * b.im))
}

/// Hermitian product `∫ ⟨f, g⟩ dx` (conjugate-linear in `f`).
pub fn hermitian_inner(f: &SpinorField, g: &SpinorField) -> Result<Complex64> {
    f.check_same_shape(g)?;
    let vol = f.model().cell_volume();
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for (a, b) in f.values.iter().zip(&g.values) {
        let z = a.conj() * b;
        re.add(z.re);
        im.add(z.im);
    }
    Ok(Complex64::new(re.value(), im.value()) * vol)
}

/// Deterministic field with i.i.d. standard complex normal entries
/// (`(X + iY)/√2`, `X, Y ~ N(0, 1)`), generated by ChaCha8 from `seed`.
pub fn random_field(model: &Arc<TorusModel>, gamma: &GammaSet, seed: u64) -> SpinorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = model.sites() * gamma.spinor_dim();
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let values = (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re * scale, im * scale)
        })
        .collect();
    SpinorField { model: model.clone(), spinor_dim: gamma.spinor_dim(), values }
}
