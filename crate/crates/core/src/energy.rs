//! The functional `𝔏(ψ) = (1/p)∫|Dψ|^p − ∫H(x, ψ)`, its derivative in the
//! `L²` pairing, and the power nonlinearities used throughout.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dirac::{check_p_range, critical_exponent, default_eps, DiracOperator};
use crate::error::{Error, Result};
use crate::lattice::{compensated_sum, fiber_norm, fiber_norm_sqr, fiber_re_dot, inner_unchecked, lp_norm, lp_norm_pow, SpinorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityKind {
    Zero,
    Power,
}

/// `H(ψ) = (c/e)|ψ|^e` with `H_ψ(ψ) = c(|ψ|² + ε_H²)^{(e-2)/2} ψ`, or `H ≡ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub kind: NonlinearityKind,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default = "two")]
    pub e: f64,
    #[serde(rename = "eps_H", default)]
    pub eps_h: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

impl Nonlinearity {
    pub fn zero() -> Self {
        Self { kind: NonlinearityKind::Zero, c: 1.0, e: 2.0, eps_h: Some(0.0) }
    }

    /// Power nonlinearity with the default regularization for `e`.
    pub fn power(c: f64, e: f64) -> Result<Self> {
        Self { kind: NonlinearityKind::Power, c, e, eps_h: None }.validated()
    }

    pub fn power_with_eps(c: f64, e: f64, eps_h: f64) -> Result<Self> {
        Self { kind: NonlinearityKind::Power, c, e, eps_h: Some(eps_h) }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.kind == NonlinearityKind::Power {
            if !(self.c.is_finite() && self.c > 0.0) {
                return Err(Error::InvalidArgument(format!("coefficient must be positive, got {}", self.c)));
            }
            if !(self.e.is_finite() && self.e > 1.0) {
                return Err(Error::InvalidExponent(format!("growth exponent must exceed 1, got {}", self.e)));
            }
        }
        if let Some(eps) = self.eps_h {
            if !(eps >= 0.0) {
                return Err(Error::InvalidArgument(format!("eps_H must be >= 0, got {eps}")));
            }
        }
        Ok(self)
    }

    /// `ε_H`, defaulting to `1e-8` for `e < 2` and `0` otherwise.
    pub fn eps(&self) -> f64 {
        self.eps_h.unwrap_or(if self.kind == NonlinearityKind::Power && self.e < 2.0 { 1e-8 } else { 0.0 })
    }

    /// Pointwise density `H(ψ)` from the fiber length.
    #[inline]
    pub fn density(&self, r: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Zero => 0.0,
            NonlinearityKind::Power => self.c / self.e * r.powf(self.e),
        }
    }

    /// Scalar weight `w` with `H_ψ(ψ) = w ψ`.
    #[inline]
    pub fn weight(&self, r2: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Zero => 0.0,
            NonlinearityKind::Power => {
                let s = r2 + self.eps() * self.eps();
                if self.e == 2.0 {
                    self.c
                } else if s > 0.0 {
                    self.c * s.powf(0.5 * (self.e - 2.0))
                } else {
                    0.0
                }
            }
        }
    }

    /// Derivative `dw/d(r²)` of [`Self::weight`].
    #[inline]
    fn weight_slope(&self, r2: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Zero => 0.0,
            NonlinearityKind::Power => {
                let s = r2 + self.eps() * self.eps();
                if self.e == 2.0 || s <= 0.0 {
                    0.0
                } else {
                    0.5 * self.c * (self.e - 2.0) * s.powf(0.5 * (self.e - 4.0))
                }
            }
        }
    }

    /// Which growth conditions hold for exponent `p` in dimension `m`.
    pub fn classify(&self, p: f64, m: usize) -> Classification {
        let p_star = critical_exponent(p, m);
        match self.kind {
            NonlinearityKind::Zero => Classification {
                p,
                m,
                p_star,
                h1: true,
                h2: false,
                h3: true,
                h4: true,
                hi: true,
                hii: false,
                q: None,
                mu: None,
                nu: None,
                regime: Regime::Trivial,
            },
            NonlinearityKind::Power => {
                let e = self.e;
                let superlinear = e > p && e < p_star;
                let sublinear = e > 1.0 && e < p;
                Classification {
                    p,
                    m,
                    p_star,
                    h1: superlinear,
                    h2: superlinear,
                    h3: e > p,
                    h4: true,
                    hi: sublinear,
                    hii: sublinear,
                    q: Some(e),
                    mu: superlinear.then_some(e),
                    nu: sublinear.then_some(e),
                    regime: if superlinear {
                        Regime::Superlinear
                    } else if sublinear {
                        Regime::Sublinear
                    } else if e >= p_star {
                        Regime::Supercritical
                    } else {
                        Regime::Resonant
                    },
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Trivial,
    Superlinear,
    Sublinear,
    /// `e = p`
    Resonant,
    /// `e >= p*`
    Supercritical,
}

/// Growth-condition report for a nonlinearity at a given `(p, m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub p: f64,
    pub m: usize,
    #[serde(serialize_with = "serialize_exponent")]
    pub p_star: f64,
    #[serde(rename = "H1")]
    pub h1: bool,
    #[serde(rename = "H2")]
    pub h2: bool,
    #[serde(rename = "H3")]
    pub h3: bool,
    #[serde(rename = "H4")]
    pub h4: bool,
    #[serde(rename = "Hi")]
    pub hi: bool,
    #[serde(rename = "Hii")]
    pub hii: bool,
    pub q: Option<f64>,
    pub mu: Option<f64>,
    pub nu: Option<f64>,
    pub regime: Regime,
}

fn serialize_exponent<S: serde::Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_none()
    }
}

impl Classification {
    /// Conditions required by the mountain-pass solver.
    pub fn mountain_pass_ready(&self) -> bool {
        self.h1 && self.h2 && self.h3
    }

    pub fn fountain_ready(&self) -> bool {
        self.mountain_pass_ready() && self.h4
    }

    pub fn dual_fountain_ready(&self) -> bool {
        self.hi && self.hii && self.h4
    }
}

/// `∫ H(x, f) dx`.
pub fn hcal(nl: &Nonlinearity, f: &SpinorField) -> f64 {
    if nl.kind == NonlinearityKind::Zero {
        return 0.0;
    }
    f.model().cell_volume() * compensated_sum(f.spinors().map(|s| nl.density(fiber_norm(s))))
}

/// The density `H_ψ(x, f(x))`, the `L²` representative of `dℋ(f)`.
pub fn hcal_prime(nl: &Nonlinearity, f: &SpinorField) -> SpinorField {
    let mut out = f.clone();
    let n = f.spinor_dim();
    for chunk in out.values_mut().chunks_exact_mut(n) {
        let w = nl.weight(fiber_norm_sqr(chunk));
        chunk.iter_mut().for_each(|z| *z *= w);
    }
    out
}

#[derive(Debug, Clone)]
pub struct Energy {
    dirac: Arc<DiracOperator>,
    p: f64,
    eps: f64,
    nl: Nonlinearity,
}

impl Energy {
    /// Validates `1 < p < m` (or only `p > 1` with `allow_p_outside_range`)
    /// and `eps >= 0`; `eps = None` picks [`default_eps`].
    pub fn new(dirac: Arc<DiracOperator>, p: f64, eps: Option<f64>, nl: Nonlinearity, allow_p_outside_range: bool) -> Result<Self> {
        check_p_range(p, dirac.m(), allow_p_outside_range)?;
        let eps = eps.unwrap_or_else(|| default_eps(p));
        if !(eps >= 0.0) {
            return Err(Error::InvalidArgument(format!("eps must be >= 0, got {eps}")));
        }
        let nl = nl.validated()?;
        if nl.kind == NonlinearityKind::Power && nl.e >= critical_exponent(p, dirac.m()) {
            log::warn!("growth exponent {} is not below the critical exponent", nl.e);
        }
        Ok(Self { dirac, p, eps, nl })
    }

    pub fn dirac(&self) -> &Arc<DiracOperator> {
        &self.dirac
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    pub fn classification(&self) -> Classification {
        self.nl.classify(self.p, self.dirac.m())
    }

    /// Dual exponent `p/(p-1)` used by the residual surrogate.
    pub fn dual_exponent(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    fn check(&self, f: &SpinorField) -> Result<()> {
        self.dirac.check_field(f)?;
        if !f.is_finite() {
            return Err(Error::NonFinite("energy input"));
        }
        Ok(())
    }

    /// `(1/p)‖Df‖_p^p − ℋ(f)`.
    pub fn value(&self, f: &SpinorField) -> Result<f64> {
        self.check(f)?;
        let df = self.dirac.apply_d_unchecked(f);
        let v = lp_norm_pow(&df, self.p)? / self.p - hcal(&self.nl, f);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite("energy value"))
        }
    }

    /// `D_p f − H_ψ(f)`: `inner(gradient, ξ)` is the directional derivative.
    pub fn gradient(&self, f: &SpinorField) -> Result<SpinorField> {
        self.check(f)?;
        let mut g = self.dirac.apply_dp(f, self.p, self.eps)?;
        if self.nl.kind != NonlinearityKind::Zero {
            g.axpy(-1.0, &hcal_prime(&self.nl, f));
        }
        Ok(g)
    }

    /// Value and gradient with a single `D f`.
    pub fn value_and_gradient(&self, f: &SpinorField) -> Result<(f64, SpinorField)> {
        self.check(f)?;
        let df = self.dirac.apply_d_unchecked(f);
        let value = lp_norm_pow(&df, self.p)? / self.p - hcal(&self.nl, f);
        if !value.is_finite() {
            return Err(Error::NonFinite("energy value"));
        }
        let mut g = self.dirac.apply_d_unchecked(&DiracOperator::flux(&df, self.p, self.eps));
        if self.nl.kind != NonlinearityKind::Zero {
            g.axpy(-1.0, &hcal_prime(&self.nl, f));
        }
        Ok((value, g))
    }

    /// Second derivative applied to a direction: `d²𝔏(f)[h, ·]` as an `L²`
    /// density.
    pub fn hessian_apply(&self, f: &SpinorField, h: &SpinorField) -> Result<SpinorField> {
        self.check(f)?;
        self.dirac.check_field(h)?;
        let n = f.spinor_dim();
        let g = self.dirac.apply_d_unchecked(f);
        let dh = self.dirac.apply_d_unchecked(h);
        let p = self.p;
        let eps2 = self.eps * self.eps;
        let mut t = dh.clone();
        if p != 2.0 {
            for ((tc, gc), hc) in t.values_mut().chunks_exact_mut(n).zip(g.values().chunks_exact(n)).zip(dh.values().chunks_exact(n)) {
                let s = fiber_norm_sqr(gc) + eps2;
                if s <= 0.0 {
                    tc.iter_mut().for_each(|z| *z = num_complex::Complex64::new(0.0, 0.0));
                    continue;
                }
                let w = s.powf(0.5 * (p - 2.0));
                let w2 = (p - 2.0) * s.powf(0.5 * (p - 4.0)) * fiber_re_dot(gc, hc);
                for ((z, gz), hz) in tc.iter_mut().zip(gc).zip(hc) {
                    *z = hz * w + gz * w2;
                }
            }
        }
        let mut out = self.dirac.apply_d_unchecked(&t);
        if self.nl.kind != NonlinearityKind::Zero {
            for ((oc, fc), hc) in out.values_mut().chunks_exact_mut(n).zip(f.values().chunks_exact(n)).zip(h.values().chunks_exact(n)) {
                let r2 = fiber_norm_sqr(fc);
                let w = self.nl.weight(r2);
                let w2 = 2.0 * self.nl.weight_slope(r2) * fiber_re_dot(fc, hc);
                for ((z, fz), hz) in oc.iter_mut().zip(fc).zip(hc) {
                    *z -= hz * w + fz * w2;
                }
            }
        }
        Ok(out)
    }

    /// `‖gradient‖_{p/(p-1)}`, a computable surrogate for the dual norm of
    /// `d𝔏`.
    pub fn residual_norm(&self, f: &SpinorField) -> Result<f64> {
        lp_norm(&self.gradient(f)?, self.dual_exponent())
    }

    pub fn residual_of_gradient(&self, gradient: &SpinorField) -> f64 {
        lp_norm(gradient, self.dual_exponent()).expect("dual exponent exceeds 1")
    }

    /// `|∫|Df|^p − ∫⟨H_ψ(f), f⟩| / max(1, ∫|Df|^p)`.
    pub fn nehari_defect(&self, f: &SpinorField) -> Result<f64> {
        self.check(f)?;
        let a = lp_norm_pow(&self.dirac.apply_d_unchecked(f), self.p)?;
        let b = inner_unchecked(&hcal_prime(&self.nl, f), f);
        Ok((a - b).abs() / a.max(1.0))
    }

    /// `‖f‖_{1,p}`.
    pub fn sobolev_norm(&self, f: &SpinorField) -> Result<f64> {
        self.check(f)?;
        lp_norm(&self.dirac.apply_d_unchecked(f), self.p)
    }

    /// Amplitude of the spatially constant critical spinor on a twisted
    /// torus, if the nonlinearity admits one: `(s^p/c)^{1/(e-p)}` with `s`
    /// the smallest momentum.
    pub fn constant_branch_amplitude(&self) -> Option<f64> {
        if self.nl.kind != NonlinearityKind::Power || self.nl.e == self.p {
            return None;
        }
        let zero_mode_momentum = self.dirac.momentum_norm2(0).sqrt();
        if zero_mode_momentum == 0.0 {
            return None;
        }
        let s = zero_mode_momentum;
        Some((s.powf(self.p) / self.nl.c).powf(1.0 / (self.nl.e - self.p)))
    }

    /// Closed-form energy of the constant branch on a unit-volume-normalized
    /// torus: `V·A^e·c·(1/p − 1/e)`.
    pub fn constant_branch_value(&self) -> Option<f64> {
        let a = self.constant_branch_amplitude()?;
        let v = self.dirac.model().volume();
        Some(v * a.powf(self.nl.e) * self.nl.c * (1.0 / self.p - 1.0 / self.nl.e))
    }

    /// The constant spinor `A·u/|u|` for a fixed reference direction `u`.
    pub fn constant_branch(&self) -> Option<SpinorField> {
        let a = self.constant_branch_amplitude()?;
        let n = self.dirac.spinor_dim();
        let mut u = vec![num_complex::Complex64::new(0.0, 0.0); n];
        u[0] = num_complex::Complex64::new(a, 0.0);
        Some(SpinorField::constant(self.dirac.model().clone(), &u))
    }
}
