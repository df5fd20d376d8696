//! Mountain pass (`L = {0}`) and fountain levels (`L` = low spectral blocks).

use super::peak::maximize;
use super::{certify_rim, constant_direction, find_e, CriticalKind, CriticalPoint, SolveConfig, Start, Sweep};
use crate::energy::Energy;
use crate::error::{Error, Result};
use crate::galerkin::SpectralBasis;
use crate::lattice::{inner_unchecked, random_field, SpinorField};
use crate::optim::{descend, DescentOptions, Eval};

fn l2(f: &SpinorField) -> f64 {
    inner_unchecked(f, f).sqrt()
}

fn require_superlinear(energy: &Energy) -> Result<()> {
    let c = energy.classification();
    if c.mountain_pass_ready() {
        Ok(())
    } else {
        Err(Error::Classification(format!("(H1)-(H3) required, got {c:?}")))
    }
}

pub(crate) fn descent_options(config: &SolveConfig, restart: usize) -> DescentOptions {
    DescentOptions {
        tol: config.tol,
        max_iter: config.max_iter,
        step: config.step,
        stall_rounds: 100,
        stall_tol: 1e-14,
        restart,
        memory: config.memory,
    }
}

/// Local minimax with support `support`: minimizes the peak of `𝔏` over
/// `support ⊕ ℝ₊v` across directions `v ⊥ support`, with `v` confined to
/// `space` when one is given (residuals are then Galerkin residuals).
fn local_minimax(
    energy: &Energy,
    config: &SolveConfig,
    space: Option<&SpectralBasis>,
    support: &SpectralBasis,
    start: &SpinorField,
    kind: CriticalKind,
) -> Result<CriticalPoint> {
    let op = energy.dirac().clone();
    let ldirs = support.real_directions(&op);
    let nl = ldirs.len();
    let restrict = |f: &SpinorField| {
        let f = match space {
            Some(s) => s.project(&op, f),
            None => f.clone(),
        };
        support.project_out(&op, &f)
    };

    let v0 = restrict(start);
    let n0 = l2(&v0);
    if !(n0 > 1e-12 * l2(start)) {
        return Err(Error::InvalidArgument("start direction has no admissible component".into()));
    }
    let v0 = v0.scaled(1.0 / n0);

    let (r, rho) = certify_rim(energy, config.rim_samples, config.seed)?;
    let e = find_e(energy, &v0, r)?;
    // straight path 0 → e; its highest node brackets the ray peak
    let nodes = config.path_points;
    let mut t0 = 0.0;
    let mut best = f64::NEG_INFINITY;
    for i in 1..nodes {
        let t = e.t * i as f64 / (nodes - 1) as f64;
        let v = energy.value(&v0.scaled(t))?;
        if v > best {
            best = v;
            t0 = t;
        }
    }

    let gtol = 1e-3 * config.tol;
    let zero = op.zeros();
    let mut eval = |u: &SpinorField, warm: &[f64]| -> Result<Eval> {
        let t_guess = l2(u);
        if !(t_guess > 0.0) || !t_guess.is_finite() {
            return Err(Error::NonFinite("minimax direction"));
        }
        let v = u.scaled(1.0 / t_guess);
        let mut dirs = ldirs.clone();
        dirs.push(v.clone());
        // support coordinates of the accepted iterate keep the peak on one
        // branch; the ray coordinate restarts from |u|
        let mut start = if warm.is_empty() { vec![0.0; nl] } else { warm.to_vec() };
        start.push(t_guess);
        let peak = maximize(energy, &zero, &dirs, start, gtol, 400)?;
        let t = peak.coords[nl];
        if !(t > 0.0) {
            return Err(Error::NonFinite("peak left the half-space"));
        }
        let full = match space {
            Some(s) => s.project(&op, &peak.grad),
            None => peak.grad,
        };
        let residual = energy.residual_of_gradient(&full);
        let grad = support.project_out(&op, &full);
        let norm = energy.sobolev_norm(&peak.field)?;
        let mut state = peak.coords;
        state.truncate(nl);
        Ok(Eval { point: v.scaled(t), field: peak.field, value: peak.value, grad, residual, norm, state })
    };
    let precond = |g: &SpinorField| restrict(&op.precondition(g));
    let mut trace = Vec::new();
    let out = descend(v0.scaled(t0), &mut eval, &precond, &descent_options(config, 0), &mut trace)?;
    if !out.converged {
        return Err(Error::NonConvergence { what: kind.name(), reason: out.reason.unwrap_or_default(), trace });
    }
    CriticalPoint::assemble_in(energy, space, out.eval.field, kind, out.iterations, config.seed, Some(rho), trace)
}

fn start_field(energy: &Energy, config: &SolveConfig) -> SpinorField {
    match config.start {
        Start::Random => {
            let op = energy.dirac();
            random_field(op.model(), op.gamma(), config.seed)
        }
        Start::ConstantBranch => constant_direction(energy),
    }
}

/// Mountain-pass critical point: the minimax over straight paths `0 → e`,
/// refined by descending the path maximum.
pub fn mountain_pass(energy: &Energy, config: &SolveConfig) -> Result<CriticalPoint> {
    config.validate()?;
    require_superlinear(energy)?;
    local_minimax(energy, config, None, &SpectralBasis::empty(), &start_field(energy, config), CriticalKind::MountainPass)
}

/// [`mountain_pass`] for `𝔏` restricted to the Galerkin space `space`.
pub fn galerkin_mountain_pass(energy: &Energy, config: &SolveConfig, space: &SpectralBasis) -> Result<CriticalPoint> {
    config.validate()?;
    require_superlinear(energy)?;
    local_minimax(energy, config, Some(space), &SpectralBasis::empty(), &start_field(energy, config), CriticalKind::MountainPass)
}

/// Galerkin fountain levels. `H_k` is spanned by the `2k` lowest Dirac
/// eigenfields; level `k` minimizes, over directions `v ∈ H_k ⊖ H_{k−1}`,
/// the peak of `𝔏` on `H_{k−1} ⊕ ℝ₊v`, so `k = 1` is the mountain pass on
/// `H_1`. Points are critical for `𝔏|_{H_k}`; their residuals are Galerkin
/// residuals. Each level tries seeds `seed, seed + 1, …` (`restarts`
/// retries) and keeps the first converged run. Values are heuristic
/// approximations of the fountain levels.
pub fn fountain_sequence(energy: &Energy, config: &SolveConfig, kmax: usize) -> Result<Sweep> {
    config.validate()?;
    require_superlinear(energy)?;
    let op = energy.dirac();
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for k in 1..=kmax {
        let space = SpectralBasis::lowest(op, 2 * k);
        let support = SpectralBasis::lowest(op, 2 * (k - 1));
        // the peak selection can jump between competing maxima, leaving a
        // kink the descent cannot cross; retry from the next seeds
        let mut errors = Vec::new();
        let mut found = None;
        for r in 0..=config.restarts {
            let attempt = SolveConfig { seed: config.seed.wrapping_add(r as u64), ..config.clone() };
            match local_minimax(energy, &attempt, Some(&space), &support, &start_field(energy, &attempt), CriticalKind::Fountain(k)) {
                Ok(cp) => {
                    found = Some(cp);
                    break;
                }
                Err(e) => {
                    log::debug!("fountain level {k}, seed {}: {e}", attempt.seed);
                    errors.push(format!("seed {}: {e}", attempt.seed));
                }
            }
        }
        match found {
            Some(cp) => points.push(cp),
            None => {
                let why = errors.join("; ");
                log::warn!("fountain level {k} failed: {why}");
                failures.push((k, why));
            }
        }
    }
    Ok(Sweep::new(points, failures))
}
