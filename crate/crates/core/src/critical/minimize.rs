//! Sublinear regime: global minimization and dual-fountain levels.

use super::minimax::descent_options;
use super::peak::maximize;
use super::{is_power, CriticalKind, CriticalPoint, SolveConfig, Sweep};
use crate::energy::Energy;
use crate::error::{Error, Result};
use crate::galerkin::SpectralBasis;
use crate::lattice::{lp_norm_pow, random_field, SpinorField};
use crate::optim::{descend, Eval};

/// Rescales `f` to the minimum of `𝔏` along its ray (unregularized closed
/// form for power nonlinearities below `p`).
fn ray_minimum(energy: &Energy, f: &SpinorField) -> Result<SpinorField> {
    if !is_power(energy) {
        return Ok(f.clone());
    }
    let nl = energy.nonlinearity();
    let p = energy.p();
    let a = lp_norm_pow(&energy.dirac().apply_d(f)?, p)?;
    let b = lp_norm_pow(f, nl.e)?;
    if !(a > 0.0 && b > 0.0) || nl.e >= p {
        return Ok(f.clone());
    }
    Ok(f.scaled((nl.c * b / a).powf(1.0 / (p - nl.e))))
}

fn require_sublinear(energy: &Energy, dual: bool) -> Result<()> {
    let c = energy.classification();
    let ok = if dual { c.dual_fountain_ready() } else { c.hi };
    if ok {
        Ok(())
    } else {
        Err(Error::Classification(format!("sublinear conditions required, got {c:?}")))
    }
}

struct Run {
    field: SpinorField,
    value: f64,
    residual: f64,
    iterations: usize,
    trace: Vec<super::TraceEntry>,
    reason: Option<String>,
    converged: bool,
}

/// Minimizes `u ↦ max_{w ∈ support} 𝔏(u + w)` over `u ⊥ support` (plain
/// minimization when the support is empty).
fn min_max(energy: &Energy, config: &SolveConfig, support: &SpectralBasis, start: SpinorField, restart: usize) -> Result<Run> {
    let op = energy.dirac().clone();
    let ldirs = support.real_directions(&op);
    let gtol = 1e-3 * config.tol;
    let mut eval = |u: &SpinorField, warm: &[f64]| -> Result<Eval> {
        let u = support.project_out(&op, u);
        let start = if warm.is_empty() { vec![0.0; ldirs.len()] } else { warm.to_vec() };
        let peak = maximize(energy, &u, &ldirs, start, gtol, 400)?;
        let residual = energy.residual_of_gradient(&peak.grad);
        let grad = support.project_out(&op, &peak.grad);
        let norm = energy.sobolev_norm(&peak.field)?;
        Ok(Eval { point: u, field: peak.field, value: peak.value, grad, residual, norm, state: peak.coords })
    };
    let precond = |g: &SpinorField| support.project_out(&op, &op.precondition(g));
    let mut trace = Vec::new();
    let start = support.project_out(&op, &start);
    let out = descend(start, &mut eval, &precond, &descent_options(config, restart), &mut trace)?;
    Ok(Run {
        field: out.eval.field,
        value: out.eval.value,
        residual: out.eval.residual,
        iterations: out.iterations,
        trace,
        reason: out.reason,
        converged: out.converged,
    })
}

/// Lowest converged critical point over descents from the constant branch
/// (when the model has one) and `config.restarts` random fields.
pub fn global_minimize(energy: &Energy, config: &SolveConfig) -> Result<CriticalPoint> {
    config.validate()?;
    require_sublinear(energy, false)?;
    let op = energy.dirac();
    let mut starts = Vec::new();
    if let Some(c) = energy.constant_branch() {
        starts.push((c, config.seed, CriticalKind::ConstantBranch));
    }
    for r in 0..config.restarts {
        let seed = config.seed.wrapping_add(r as u64);
        let f = ray_minimum(energy, &random_field(op.model(), op.gamma(), seed))?;
        starts.push((f, seed, CriticalKind::Minimizer));
    }
    let empty = SpectralBasis::empty();
    let mut best: Option<(Run, u64, CriticalKind)> = None;
    let mut last_failure = None;
    for (i, (start, seed, kind)) in starts.into_iter().enumerate() {
        let run = min_max(energy, config, &empty, start, i)?;
        if !run.converged {
            log::debug!("global_minimize start {i} did not converge: {:?}", run.reason);
            last_failure = Some((run.reason.clone().unwrap_or_default(), run.trace));
            continue;
        }
        let better = match &best {
            None => true,
            Some((b, bseed, _)) => (run.value, run.residual, seed) < (b.value, b.residual, *bseed),
        };
        if better {
            best = Some((run, seed, kind));
        }
    }
    match best {
        Some((run, seed, kind)) => CriticalPoint::assemble(energy, run.field, kind, run.iterations, seed, None, run.trace),
        None => {
            let (reason, trace) = last_failure.unwrap_or_default();
            Err(Error::NonConvergence { what: "global_minimize", reason, trace })
        }
    }
}

/// Negative critical values from min–max over `L_k^⊥ × L_k` with `L_k` the
/// `k − 1` lowest spectral levels (`k = 1` is plain minimization from a
/// random field). Reported ascending, so values approach 0 from below.
pub fn dual_fountain_sequence(energy: &Energy, config: &SolveConfig, kmax: usize) -> Result<Sweep> {
    config.validate()?;
    require_sublinear(energy, true)?;
    let op = energy.dirac();
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for k in 1..=kmax {
        let support = if k == 1 { SpectralBasis::empty() } else { SpectralBasis::levels(op, k - 1) };
        let start = support.project_out(op, &random_field(op.model(), op.gamma(), config.seed));
        let result = ray_minimum(energy, &start).and_then(|s| min_max(energy, config, &support, s, 0));
        match result {
            Ok(run) if run.converged && run.value < 0.0 => {
                match CriticalPoint::assemble(
                    energy,
                    run.field,
                    CriticalKind::DualFountain(k),
                    run.iterations,
                    config.seed,
                    None,
                    run.trace,
                ) {
                    Ok(cp) => points.push(cp),
                    Err(e) => failures.push((k, e.to_string())),
                }
            }
            Ok(run) if run.converged => failures.push((k, format!("nonnegative value {}", run.value))),
            Ok(run) => failures.push((k, run.reason.unwrap_or_default())),
            Err(e) => failures.push((k, e.to_string())),
        }
    }
    for (k, why) in &failures {
        log::warn!("dual fountain level {k} failed: {why}");
    }
    points.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(Sweep::new(points, failures))
}
