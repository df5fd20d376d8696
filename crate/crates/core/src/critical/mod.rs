//! Critical points of `𝔏`: mountain pass and fountain-type minimax in the
//! superlinear regime, minimization and dual-fountain minimax in the
//! sublinear regime, and Palais–Smale style diagnostics of solver traces.
//!
//! The minimax solvers follow the local-minimax scheme: for a direction `v`
//! orthogonal to a support space `L`, `J(v)` is the peak of `𝔏` over the
//! half-space `L ⊕ ℝ₊v`; descending `J` in `L^⊥` yields critical points
//! whose value is the minimax level. With `L = {0}` the peak is the maximum
//! along the ray through `v`, i.e. the top of the straight path `0 → e`.

mod minimax;
mod minimize;
mod peak;

use serde::{Deserialize, Serialize};

use crate::energy::{Energy, NonlinearityKind};
use crate::error::{Error, Result};
use crate::galerkin::SpectralBasis;
use crate::lattice::{lp_norm, random_field, SpinorField};
use crate::optim::StepRule;

pub use minimax::{fountain_sequence, galerkin_mountain_pass, mountain_pass};
pub use minimize::{dual_fountain_sequence, global_minimize};

/// One accepted iterate of a solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub restart: usize,
    pub value: f64,
    pub residual: f64,
    /// `‖·‖_{1,p}` of the iterate (or of the candidate it represents).
    pub norm: f64,
    pub step: f64,
}

/// Where the minimax and minimization solvers start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    /// Seeded random field.
    #[default]
    Random,
    /// The spatially constant spinor (exact critical point on twisted tori).
    ConstantBranch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub path_points: usize,
    pub step: StepRule,
    /// Bound on `residual_norm` at accepted points.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Depth of the fountain sweeps.
    pub galerkin_k: usize,
    /// Random starts used by [`global_minimize`] besides the constant branch.
    pub restarts: usize,
    pub start: Start,
    pub rim_samples: usize,
    /// Quasi-Newton memory of the outer descent.
    pub memory: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            path_points: 64,
            step: StepRule::default(),
            tol: 1e-6,
            max_iter: 20000,
            seed: 0,
            galerkin_k: 4,
            restarts: 2,
            start: Start::Random,
            rim_samples: 32,
            memory: 8,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.path_points < 8 {
            return Err(Error::InvalidArgument(format!("path_points must be >= 8, got {}", self.path_points)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if self.rim_samples < 32 {
            return Err(Error::InvalidArgument(format!("rim_samples must be >= 32, got {}", self.rim_samples)));
        }
        self.step.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "k")]
pub enum CriticalKind {
    MountainPass,
    Minimizer,
    Fountain(usize),
    DualFountain(usize),
    ConstantBranch,
}

impl CriticalKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::MountainPass => "mountain_pass",
            Self::Minimizer => "minimizer",
            Self::Fountain(_) => "fountain",
            Self::DualFountain(_) => "dual_fountain",
            Self::ConstantBranch => "constant_branch",
        }
    }

    pub fn k(&self) -> Option<usize> {
        match self {
            Self::Fountain(k) | Self::DualFountain(k) => Some(*k),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CriticalPoint {
    pub field: SpinorField,
    pub value: f64,
    pub grad_residual: f64,
    pub nehari_defect: f64,
    pub kind: CriticalKind,
    pub iterations: usize,
    pub seed: u64,
    /// Certified rim level for minimax points.
    pub rim: Option<f64>,
    /// Galerkin space the point is critical in (`None`: the whole lattice
    /// space); `grad_residual` and `nehari_defect` are measured there.
    pub space: Option<SpectralBasis>,
    pub trace: Vec<TraceEntry>,
}

impl CriticalPoint {
    pub(crate) fn assemble(
        energy: &Energy,
        field: SpinorField,
        kind: CriticalKind,
        iterations: usize,
        seed: u64,
        rim: Option<f64>,
        trace: Vec<TraceEntry>,
    ) -> Result<Self> {
        Self::assemble_in(energy, None, field, kind, iterations, seed, rim, trace)
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble_in(
        energy: &Energy,
        space: Option<&SpectralBasis>,
        field: SpinorField,
        kind: CriticalKind,
        iterations: usize,
        seed: u64,
        rim: Option<f64>,
        trace: Vec<TraceEntry>,
    ) -> Result<Self> {
        let (value, grad) = energy.value_and_gradient(&field)?;
        let grad = match space {
            Some(s) => s.project(energy.dirac(), &grad),
            None => grad,
        };
        Ok(Self {
            value,
            grad_residual: energy.residual_of_gradient(&grad),
            nehari_defect: energy.nehari_defect(&field)?,
            field,
            kind,
            iterations,
            seed,
            rim,
            space: space.cloned(),
            trace,
        })
    }

    /// The point `−ψ`, which is critical with the same value for even `H`.
    pub fn negated(&self, energy: &Energy) -> Result<Self> {
        Self::assemble_in(energy, self.space.as_ref(), self.field.scaled(-1.0), self.kind, self.iterations, self.seed, self.rim, Vec::new())
    }

    /// [`weak_form_defect`] with test fields drawn from the point's space.
    pub fn weak_form_defect(&self, energy: &Energy, count: usize, seed: u64) -> Result<f64> {
        weak_form_defect_in(energy, self.space.as_ref(), &self.field, count, seed)
    }
}

/// Outcome of a `k = 1..kmax` sweep; failures do not abort the sweep.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub points: Vec<CriticalPoint>,
    pub failures: Vec<(usize, String)>,
    /// Values nondecreasing (within `1e-8` relative) in reported order.
    pub nondecreasing: bool,
    /// Number of consecutive pairs with a strict increase.
    pub strict_increases: usize,
}

impl Sweep {
    pub(crate) fn new(points: Vec<CriticalPoint>, failures: Vec<(usize, String)>) -> Self {
        let values: Vec<f64> = points.iter().map(|c| c.value).collect();
        let nondecreasing = values.windows(2).all(|w| w[1] >= w[0] - 1e-8 * w[0].abs().max(w[1].abs()));
        let strict_increases = values.windows(2).filter(|w| w[1] > w[0] + 1e-8 * w[0].abs().max(w[1].abs())).count();
        Self { points, failures, nondecreasing, strict_increases }
    }
}

/// `min 𝔏` over `samples` random fields scaled to `‖ψ‖_{1,p} = r`.
pub fn rim_estimate(energy: &Energy, r: f64, samples: usize, seed: u64) -> Result<f64> {
    if samples < 32 {
        return Err(Error::InvalidArgument(format!("rim_estimate needs >= 32 samples, got {samples}")));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("rim radius must be >= 0, got {r}")));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let op = energy.dirac();
    let mut best = f64::INFINITY;
    for s in 0..samples {
        let f = random_field(op.model(), op.gamma(), seed.wrapping_add(s as u64));
        let n = energy.sobolev_norm(&f)?;
        best = best.min(energy.value(&f.scaled(r / n))?);
    }
    Ok(best)
}

/// Largest `r = 2^{-j}` (j ≤ 60) whose rim estimate is positive.
pub(crate) fn certify_rim(energy: &Energy, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let mut r = 1.0;
    for _ in 0..=60 {
        let rho = rim_estimate(energy, r, samples, seed)?;
        if rho > 0.0 {
            return Ok((r, rho));
        }
        r *= 0.5;
    }
    Err(Error::Classification("no positive rim found (H3 fails numerically)".into()))
}

/// Result of [`find_e`].
#[derive(Debug, Clone)]
pub struct RayEndpoint {
    pub field: SpinorField,
    pub t: f64,
    pub trace: Vec<TraceEntry>,
}

/// Doubles `t` from 1 until `t·direction` lies outside the `r`-ball with
/// `𝔏 ≤ 0`; at most 60 doublings.
pub fn find_e(energy: &Energy, direction: &SpinorField, r: f64) -> Result<RayEndpoint> {
    if !energy.classification().h2 {
        return Err(Error::Classification("find_e needs a superlinear nonlinearity (H2)".into()));
    }
    if direction.max_abs() == 0.0 {
        return Err(Error::InvalidArgument("find_e along the zero direction".into()));
    }
    let mut t = 1.0;
    let mut trace = Vec::new();
    for i in 0..=60 {
        let f = direction.scaled(t);
        let value = energy.value(&f)?;
        let norm = energy.sobolev_norm(&f)?;
        trace.push(TraceEntry { iteration: i, restart: 0, value, residual: f64::NAN, norm, step: t });
        if value <= 0.0 && norm > r {
            return Ok(RayEndpoint { field: f, t, trace });
        }
        t *= 2.0;
    }
    Err(Error::NonConvergence { what: "find_e", reason: "no nonpositive energy after 60 doublings".into(), trace })
}

/// Palais–Smale style summary of a solver trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsReport {
    /// `‖·‖_{1,p}` stayed within ten times its scale over the first tenth of
    /// the run.
    pub bounded: bool,
    pub max_norm: f64,
    /// Residuals never increased after the last restart.
    pub monotone_residual: bool,
    /// Fraction of steps after the last restart that lowered the residual.
    pub residual_decrease_fraction: f64,
    pub final_residual: f64,
    pub label: String,
}

pub fn ps_diagnostic(trace: &[TraceEntry]) -> PsReport {
    if trace.is_empty() {
        return PsReport {
            bounded: true,
            max_norm: 0.0,
            monotone_residual: true,
            residual_decrease_fraction: 1.0,
            final_residual: f64::NAN,
            label: "empty trace".into(),
        };
    }
    let head = (trace.len() / 10).max(1);
    let scale = trace[..head].iter().map(|e| e.norm).fold(0.0, f64::max);
    let max_norm = trace.iter().map(|e| e.norm).fold(0.0, f64::max);
    let bounded = max_norm <= 10.0 * scale.max(f64::MIN_POSITIVE);

    let last_restart = trace.last().map(|e| e.restart).unwrap_or(0);
    let tail: Vec<f64> = trace.iter().filter(|e| e.restart == last_restart).map(|e| e.residual).filter(|r| r.is_finite()).collect();
    let steps = tail.len().saturating_sub(1);
    let decreases = tail.windows(2).filter(|w| w[1] < w[0]).count();
    let monotone_residual = tail.windows(2).all(|w| w[1] <= w[0]);
    let final_residual = trace.last().map(|e| e.residual).unwrap_or(f64::NAN);

    // energy falling below zero at the end of an unbounded run
    let values_diverge = trace.len() >= 2 && {
        let v: Vec<f64> = trace.iter().map(|e| e.value).collect();
        let n = v.len();
        v[n - 1] < v[n - 2] && v[n - 1] <= 0.0
    };
    let label = if !bounded && values_diverge {
        "ray divergence: energy decreases without bound along an unbounded sequence; expected under superlinear growth, not a Palais-Smale failure".to_string()
    } else if !bounded {
        "unbounded iterates".to_string()
    } else if final_residual.is_finite() {
        format!("bounded; final residual {final_residual:e}")
    } else {
        "bounded".to_string()
    };
    PsReport {
        bounded,
        max_norm,
        monotone_residual,
        residual_decrease_fraction: if steps == 0 { 1.0 } else { decreases as f64 / steps as f64 },
        final_residual,
        label,
    }
}

/// `max_φ |∫⟨∇𝔏(ψ), φ⟩|` over `count` random test fields with `‖φ‖_p = 1`.
pub fn weak_form_defect(energy: &Energy, f: &SpinorField, count: usize, seed: u64) -> Result<f64> {
    weak_form_defect_in(energy, None, f, count, seed)
}

/// [`weak_form_defect`] with the test fields projected onto `space`.
pub fn weak_form_defect_in(energy: &Energy, space: Option<&SpectralBasis>, f: &SpinorField, count: usize, seed: u64) -> Result<f64> {
    let g = energy.gradient(f)?;
    let op = energy.dirac();
    let mut worst = 0.0f64;
    for j in 0..count {
        let phi = random_field(op.model(), op.gamma(), seed.wrapping_add(j as u64));
        let phi = match space {
            Some(s) => s.project(op, &phi),
            None => phi,
        };
        let phi = phi.scaled(1.0 / lp_norm(&phi, energy.p())?);
        worst = worst.max(crate::lattice::inner(&g, &phi)?.abs());
    }
    Ok(worst)
}

/// Constant spinor direction `(1, 0, …, 0)`, scaled to the constant-branch
/// amplitude when the energy has one.
pub(crate) fn constant_direction(energy: &Energy) -> SpinorField {
    energy.constant_branch().unwrap_or_else(|| {
        let op = energy.dirac();
        let mut u = vec![num_complex::Complex64::new(0.0, 0.0); op.spinor_dim()];
        u[0] = num_complex::Complex64::new(1.0, 0.0);
        SpinorField::constant(op.model().clone(), &u)
    })
}

pub(crate) fn is_power(energy: &Energy) -> bool {
    energy.nonlinearity().kind == NonlinearityKind::Power
}

#[cfg(test)]
mod tests;
