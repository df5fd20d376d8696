//! Nonlinear eigenpairs `D_p ψ = λ|ψ|^{p-2}ψ`: Rayleigh-quotient
//! minimization on the `L^p` sphere, a Galerkin/deflation approximation of
//! the Ljusternik–Schnirelman sequence, and related diagnostics.
//!
//! The eigenvalue is always the Rayleigh quotient `∫|Dψ|^p / ∫|ψ|^p`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::critical::TraceEntry;
use crate::dirac::{check_p_range, critical_exponent, default_eps, DiracOperator};
use crate::error::{Error, Result};
use crate::galerkin::SpectralBasis;
use crate::lattice::{fiber_norm_sqr, hermitian_inner, inner_unchecked, lp_norm, lp_norm_pow, random_field, SpinorField};
use crate::optim::{descend, DescentOptions, Eval, StepRule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenConfig {
    pub p: f64,
    /// Bound on the eigen-equation residual in `L^{p/(p-1)}`.
    pub tol: f64,
    pub max_iter: usize,
    pub step: StepRule,
    pub restarts: usize,
    /// Number of pairs requested from [`ls_sequence`].
    pub deflation_count: usize,
    /// `None` selects [`default_eps`].
    pub eps: Option<f64>,
    pub seed: u64,
    pub allow_p_outside_range: bool,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            tol: 1e-8,
            max_iter: 5000,
            step: StepRule::default(),
            restarts: 8,
            deflation_count: 5,
            eps: None,
            seed: 0,
            allow_p_outside_range: false,
        }
    }
}

impl EigenConfig {
    pub fn with_p(p: f64) -> Self {
        Self { p, ..Self::default() }
    }

    pub fn eps(&self) -> f64 {
        self.eps.unwrap_or_else(|| default_eps(self.p))
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        check_p_range(self.p, m, self.allow_p_outside_range)?;
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("need at least one restart".into()));
        }
        if let Some(eps) = self.eps {
            if !(eps >= 0.0) {
                return Err(Error::InvalidArgument(format!("eps must be >= 0, got {eps}")));
            }
        }
        self.step.validate()
    }

    fn descent(&self, restart: usize) -> DescentOptions {
        DescentOptions { tol: self.tol, max_iter: self.max_iter, step: self.step, stall_rounds: 100, stall_tol: 1e-14, restart, memory: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub seed: u64,
    pub lambda: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    /// Normalized to `‖field‖_p = 1`.
    pub field: SpinorField,
    pub residual: f64,
    pub iterations: usize,
    pub seed: u64,
    pub restarts: Vec<RestartSummary>,
}

/// `∫|Df|^p / ∫|f|^p`.
pub fn rayleigh(dirac: &DiracOperator, p: f64, f: &SpinorField) -> Result<f64> {
    dirac.check_field(f)?;
    let den = lp_norm_pow(f, p)?;
    if den == 0.0 {
        return Err(Error::InvalidArgument("Rayleigh quotient of the zero field".into()));
    }
    Ok(lp_norm_pow(&dirac.apply_d_unchecked(f), p)? / den)
}

/// `(|f|² + ε²)^{(q-2)/2} f`.
fn power_density(f: &SpinorField, q: f64, eps: f64) -> SpinorField {
    if q == 2.0 {
        return f.clone();
    }
    let mut out = f.clone();
    let n = f.spinor_dim();
    for chunk in out.values_mut().chunks_exact_mut(n) {
        let r2 = fiber_norm_sqr(chunk) + eps * eps;
        let w = if r2 > 0.0 { r2.powf(0.5 * (q - 2.0)) } else { 0.0 };
        chunk.iter_mut().for_each(|z| *z *= w);
    }
    out
}

/// Linear constraints on the search space: optional restriction to a
/// spectral span, removal of a spectral span, and Hermitian deflation
/// against an orthonormal list.
#[derive(Default)]
struct Constraint {
    keep: Option<SpectralBasis>,
    remove: Option<SpectralBasis>,
    deflate: Vec<SpinorField>,
}

impl Constraint {
    fn apply(&self, op: &DiracOperator, f: &SpinorField) -> SpinorField {
        let mut f = match &self.keep {
            Some(b) => b.project(op, f),
            None => f.clone(),
        };
        if let Some(b) = &self.remove {
            f = b.project_out(op, &f);
        }
        for d in &self.deflate {
            let c = hermitian_inner(d, &f).expect("same model");
            f.axpy_complex(-c, d);
        }
        f
    }
}

struct QuotientRun {
    field: SpinorField,
    value: f64,
    residual: f64,
    iterations: usize,
    converged: bool,
    reason: Option<String>,
}

/// Minimizes `‖Du‖_p^p / ‖u‖_q^p` over the constrained space from `start`.
/// The residual is the constrained component of `D_p u − R|u|^{q-2}u` at
/// `‖u‖_q = 1`, measured in `L^{p/(p-1)}`.
#[allow(clippy::too_many_arguments)]
fn minimize_quotient(
    op: &DiracOperator,
    p: f64,
    q: f64,
    eps: f64,
    constraint: &Constraint,
    start: &SpinorField,
    opts: &DescentOptions,
    trace: &mut Vec<TraceEntry>,
) -> Result<QuotientRun> {
    let q_eps = if q < 2.0 { default_eps(q) } else { 0.0 };
    let dual = p / (p - 1.0);
    let normalize = |f: &SpinorField| -> Result<SpinorField> {
        let f = constraint.apply(op, f);
        let n = lp_norm(&f, q)?;
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NonFinite("quotient normalization"));
        }
        Ok(f.scaled(1.0 / n))
    };
    let mut eval = |f: &SpinorField, _: &[f64]| -> Result<Eval> {
        let x = normalize(f)?;
        let df = op.apply_d_unchecked(&x);
        let r = lp_norm_pow(&df, p)?;
        let mut g = op.apply_d_unchecked(&DiracOperator::flux(&df, p, eps));
        g.axpy(-r, &power_density(&x, q, q_eps));
        let g = constraint.apply(op, &g);
        let residual = lp_norm(&g, dual)?;
        Ok(Eval { field: x.clone(), point: x, value: r, grad: g.scaled(p), residual, norm: r.powf(1.0 / p), state: Vec::new() })
    };
    let direction = |g: &SpinorField| constraint.apply(op, &op.precondition(g)).scaled(1.0 / p);
    let start = constraint.apply(op, start);
    let out = descend(start, &mut eval, &direction, opts, trace)?;
    Ok(QuotientRun {
        field: out.eval.point,
        value: out.eval.value,
        residual: out.eval.residual,
        iterations: out.iterations,
        converged: out.converged,
        reason: out.reason,
    })
}

/// Runs `restarts` seeded minimizations; the winner is the converged run
/// with the lowest value (then residual, then seed).
fn best_of_restarts(op: &DiracOperator, config: &EigenConfig, q: f64, constraint: &Constraint, what: &'static str) -> Result<EigenPair> {
    let mut best: Option<(QuotientRun, u64)> = None;
    let mut summaries = Vec::with_capacity(config.restarts);
    let mut last_trace = Vec::new();
    let mut last_reason = None;
    for r in 0..config.restarts {
        let seed = config.seed.wrapping_add(r as u64);
        let start = random_field(op.model(), op.gamma(), seed);
        let mut trace = Vec::new();
        let run = minimize_quotient(op, config.p, q, config.eps(), constraint, &start, &config.descent(r), &mut trace)?;
        summaries.push(RestartSummary {
            seed,
            lambda: run.value,
            residual: run.residual,
            iterations: run.iterations,
            converged: run.converged,
        });
        log::debug!("{what} restart {r}: value {} residual {:e} after {} iterations", run.value, run.residual, run.iterations);
        if !run.converged {
            last_reason = run.reason.clone();
            last_trace = trace;
            continue;
        }
        let better = match &best {
            None => true,
            Some((b, bseed)) => (run.value, run.residual, seed) < (b.value, b.residual, *bseed),
        };
        if better {
            best = Some((run, seed));
        }
    }
    let Some((run, seed)) = best else {
        return Err(Error::NonConvergence {
            what,
            reason: last_reason.unwrap_or_else(|| "no restart converged".into()),
            trace: last_trace,
        });
    };
    Ok(EigenPair { lambda: run.value, field: run.field, residual: run.residual, iterations: run.iterations, seed, restarts: summaries })
}

/// First eigenpair by minimizing the Rayleigh quotient on the unit `L^p`
/// sphere, best over `config.restarts` random starts.
pub fn min_eigen(dirac: &DiracOperator, config: &EigenConfig) -> Result<EigenPair> {
    config.validate(dirac.m())?;
    if dirac.is_singular() && !config.allow_p_outside_range {
        return Err(Error::Singular);
    }
    best_of_restarts(dirac, config, config.p, &Constraint::default(), "min_eigen")
}

/// Approximate `λ_1 ≤ … ≤ λ_n` by minimizing over the span of the `2n`
/// lowest Dirac eigenfields, deflating each accepted eigenfield (as a
/// complex line) before the next search. Residuals are measured inside the
/// deflated Galerkin space. Stops early, with a warning, if a level fails.
pub fn ls_sequence(dirac: &DiracOperator, config: &EigenConfig, n: usize) -> Result<Vec<EigenPair>> {
    config.validate(dirac.m())?;
    if n == 0 {
        return Err(Error::InvalidArgument("ls_sequence needs n >= 1".into()));
    }
    let mut constraint = Constraint { keep: Some(SpectralBasis::lowest(dirac, 2 * n)), ..Default::default() };
    let mut pairs = Vec::with_capacity(n);
    for j in 0..n {
        let cfg = EigenConfig { seed: config.seed.wrapping_add(1000 * j as u64), ..config.clone() };
        match best_of_restarts(dirac, &cfg, config.p, &constraint, "ls_sequence") {
            Ok(pair) => {
                let mut d = pair.field.clone();
                for prev in &constraint.deflate {
                    let c = hermitian_inner(prev, &d)?;
                    d.axpy_complex(-c, prev);
                }
                let norm = hermitian_inner(&d, &d)?.re.sqrt();
                constraint.deflate.push(d.scaled(1.0 / norm));
                pairs.push(pair);
            }
            Err(err) => {
                log::warn!("ls_sequence: level {} failed ({err}); returning {} pairs", j + 1, pairs.len());
                break;
            }
        }
    }
    pairs.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.seed.cmp(&b.seed)));
    Ok(pairs)
}

/// Largest weak-form defect
/// `|∫⟨|Df|^{p-2}Df, Dφ⟩ − λ∫⟨|f|^{p-2}f, φ⟩|` over the test fields `e_j`,
/// `i e_j` of the `test_count` lowest Dirac eigenfields, each normalized in
/// `L^p`; `f` is first normalized to `‖f‖_p = 1`.
pub fn weak_eigen_check(dirac: &DiracOperator, p: f64, lambda: f64, f: &SpinorField, test_count: usize) -> Result<f64> {
    dirac.check_field(f)?;
    let n = lp_norm(f, p)?;
    if n == 0.0 {
        return Err(Error::InvalidArgument("weak check of the zero field".into()));
    }
    let f = f.scaled(1.0 / n);
    let flux = DiracOperator::flux(&dirac.apply_d_unchecked(&f), p, 0.0);
    let dens = power_density(&f, p, 0.0);
    let basis = SpectralBasis::lowest(dirac, test_count);
    let mut worst = 0.0f64;
    for phi in basis.real_directions(dirac) {
        let phi = phi.scaled(1.0 / lp_norm(&phi, p)?);
        let lhs = inner_unchecked(&flux, &dirac.apply_d_unchecked(&phi));
        let rhs = lambda * inner_unchecked(&dens, &phi);
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotoneCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `⟨Bf − Bg, f − g⟩ ≥ (‖f‖^{p-1} − ‖g‖^{p-1})(‖f‖ − ‖g‖)` with
/// `⟨Bf, h⟩ = ∫⟨|Df|^{p-2}Df, Dh⟩` and `‖·‖ = ‖D·‖_p`.
pub fn monotone_inequality_check(dirac: &DiracOperator, p: f64, f: &SpinorField, g: &SpinorField) -> Result<MonotoneCheck> {
    if !(p > 1.0) {
        return Err(Error::InvalidExponent(format!("need p > 1, got {p}")));
    }
    dirac.check_field(f)?;
    dirac.check_field(g)?;
    let df = dirac.apply_d_unchecked(f);
    let dg = dirac.apply_d_unchecked(g);
    let diff = df.sub(&dg);
    let lhs = inner_unchecked(&DiracOperator::flux(&df, p, 0.0).sub(&DiracOperator::flux(&dg, p, 0.0)), &diff);
    let nf = lp_norm(&df, p)?;
    let ng = lp_norm(&dg, p)?;
    let rhs = (nf.powf(p - 1.0) - ng.powf(p - 1.0)) * (nf - ng);
    Ok(MonotoneCheck { lhs, rhs, holds: lhs >= rhs - 1e-10 })
}

/// `τ_k = inf ‖Du‖_p / ‖u‖_q` over fields orthogonal to the `k` lowest
/// Dirac eigenfields (as a complex span).
pub fn tail_embedding_constant(dirac: &DiracOperator, p: f64, q: f64, k: usize, config: &EigenConfig) -> Result<f64> {
    let cfg = EigenConfig { p, ..config.clone() };
    cfg.validate(dirac.m())?;
    if !(q >= 1.0 && q < critical_exponent(p, dirac.m())) {
        return Err(Error::InvalidExponent(format!("need 1 <= q < p*, got q = {q}")));
    }
    let constraint = Constraint { remove: (k > 0).then(|| SpectralBasis::lowest(dirac, k)), ..Default::default() };
    let pair = best_of_restarts(dirac, &cfg, q, &constraint, "tail_embedding_constant")?;
    Ok(pair.lambda.powf(1.0 / p))
}

/// Coefficients of the winning field in the `count` lowest eigenfields;
/// handy for inspecting which spectral block an eigenpair lives in.
pub fn spectral_profile(dirac: &DiracOperator, f: &SpinorField, count: usize) -> Vec<Complex64> {
    SpectralBasis::lowest(dirac, count).coefficients(dirac, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::build_gamma;
    use crate::lattice::TorusModel;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn op(m: usize, n: usize, twist: &[f64]) -> DiracOperator {
        let model = Arc::new(TorusModel::unit(m, n, twist).unwrap());
        DiracOperator::new(model, build_gamma(m).unwrap()).unwrap()
    }

    #[test]
    fn rayleigh_examples() {
        let d = op(3, 8, &[0.5, 0.0, 0.0]);
        let u = [Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.5)];
        let f = SpinorField::constant(d.model().clone(), &u);
        for p in [1.5, 2.0, 2.5] {
            assert!((rayleigh(&d, p, &f).unwrap() - PI.powf(p)).abs() < 1e-12 * PI.powf(p));
        }
        let basis = SpectralBasis::lowest(&d, 6);
        let e = basis.field(&d, 5);
        let lam = basis.fields()[5].eigenvalue;
        assert!((rayleigh(&d, 2.0, &e).unwrap() - lam * lam).abs() < 1e-10);
        let g = random_field(d.model(), d.gamma(), 1);
        let r = rayleigh(&d, 1.7, &g).unwrap();
        assert!((rayleigh(&d, 1.7, &g.scaled(3.0)).unwrap() - r).abs() < 1e-12 * r);
        assert!(rayleigh(&d, 2.0, &d.zeros()).is_err());
    }

    #[test]
    fn min_eigen_linear_case() {
        let d = op(3, 8, &[0.5, 0.0, 0.0]);
        let cfg = EigenConfig { restarts: 2, ..EigenConfig::default() };
        let pair = min_eigen(&d, &cfg).unwrap();
        assert!((pair.lambda - PI * PI).abs() < 1e-8 * PI * PI);
        assert!(pair.residual <= cfg.tol);
        assert!((lp_norm(&pair.field, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((rayleigh(&d, 2.0, &pair.field).unwrap() - pair.lambda).abs() < 1e-10);
        assert_eq!(pair.restarts.len(), 2);
    }

    #[test]
    fn min_eigen_rejects_singular_models() {
        let d = op(2, 4, &[0.0, 0.0]);
        assert!(matches!(min_eigen(&d, &EigenConfig::with_p(1.5)), Err(Error::Singular)));
    }

    #[test]
    fn ls_sequence_linear_case() {
        let d = op(2, 8, &[0.5, 0.0]);
        let cfg = EigenConfig { restarts: 1, allow_p_outside_range: true, ..EigenConfig::default() };
        let pairs = ls_sequence(&d, &cfg, 5).unwrap();
        assert_eq!(pairs.len(), 5);
        let expect = [1.0, 1.0, 1.0, 1.0, 5.0].map(|x| x * PI * PI);
        for (pair, e) in pairs.iter().zip(expect) {
            assert!((pair.lambda - e).abs() < 1e-6 * e, "{} vs {e}", pair.lambda);
        }
    }

    #[test]
    fn weak_check_cases() {
        let d = op(3, 8, &[0.5, 0.0, 0.0]);
        let basis = SpectralBasis::lowest(&d, 8);
        let e = basis.field(&d, 6);
        let lam = basis.fields()[6].eigenvalue.powi(2);
        assert!(weak_eigen_check(&d, 2.0, lam, &e, 10).unwrap() < 1e-10);
        assert!(weak_eigen_check(&d, 2.0, lam, &e.scaled(-4.0), 10).unwrap() < 1e-10);
        assert!(weak_eigen_check(&d, 2.0, lam + 1.0, &e, 10).unwrap() > 1e-2);
        // the constant-modulus mode is an eigenfield for every p
        let c = SpinorField::constant(d.model().clone(), &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        assert!(weak_eigen_check(&d, 1.5, PI.powf(1.5), &c, 10).unwrap() < 1e-10);
    }

    #[test]
    fn monotone_equality_cases() {
        let d = op(2, 8, &[0.5, 0.5]);
        let f = random_field(d.model(), d.gamma(), 4).scaled(0.1);
        for p in [1.5, 2.0, 3.0] {
            let same = monotone_inequality_check(&d, p, &f, &f).unwrap();
            assert_eq!((same.lhs, same.rhs), (0.0, 0.0));
            assert!(same.holds);
            let zero = monotone_inequality_check(&d, p, &f, &d.zeros()).unwrap();
            assert!((zero.lhs - zero.rhs).abs() < 1e-10, "p = {p}");
            assert!(zero.holds);
        }
    }

    #[test]
    fn tail_constants_linear_case() {
        let d = op(3, 8, &[0.5, 0.0, 0.0]);
        let cfg = EigenConfig { restarts: 1, tol: 1e-10, ..EigenConfig::default() };
        let t0 = tail_embedding_constant(&d, 2.0, 2.0, 0, &cfg).unwrap();
        assert!((t0 - PI).abs() < 1e-8 * PI);
        let t4 = tail_embedding_constant(&d, 2.0, 2.0, 4, &cfg).unwrap();
        assert!((t4 - PI * 5f64.sqrt()).abs() < 1e-8 * t4);
    }

    #[test]
    fn config_validation() {
        let d = op(3, 8, &[0.5, 0.0, 0.0]);
        assert!(min_eigen(&d, &EigenConfig { tol: 0.0, ..EigenConfig::default() }).is_err());
        assert!(min_eigen(&d, &EigenConfig { restarts: 0, ..EigenConfig::default() }).is_err());
        assert!(min_eigen(&d, &EigenConfig::with_p(3.0)).is_err());
        let cfg: EigenConfig = serde_json::from_str(r#"{"p": 1.5, "restarts": 3}"#).unwrap();
        assert_eq!(cfg.restarts, 3);
        assert_eq!(cfg.eps(), 1e-8);
    }
}
