//! Preconditioned descent with Armijo backtracking, shared by the eigen and
//! critical-point solvers.

use serde::{Deserialize, Serialize};

use crate::critical::TraceEntry;
use crate::error::{Error, Result};
use crate::lattice::{inner_unchecked, SpinorField};

/// Backtracking line-search constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepRule {
    pub armijo: f64,
    pub growth: f64,
    pub shrink: f64,
    pub initial: f64,
    pub max_step: f64,
}

impl Default for StepRule {
    fn default() -> Self {
        Self { armijo: 1e-4, growth: 2.0, shrink: 0.5, initial: 1.0, max_step: 16.0 }
    }
}

impl StepRule {
    pub fn validate(&self) -> Result<()> {
        let ok = self.armijo > 0.0
            && self.armijo < 1.0
            && self.growth >= 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.initial > 0.0
            && self.max_step >= self.initial;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("inconsistent step rule {self:?}")))
        }
    }
}

/// One evaluated iterate.
#[derive(Debug, Clone)]
pub(crate) struct Eval {
    /// Representative the next step starts from (may differ from the trial
    /// point, e.g. after renormalization or a peak search).
    pub point: SpinorField,
    /// The candidate field itself (e.g. the peak over a support space).
    pub field: SpinorField,
    pub value: f64,
    /// `L²` gradient of `value` at `point`, restricted to admissible moves.
    pub grad: SpinorField,
    pub residual: f64,
    /// Size of the underlying candidate, logged in traces.
    pub norm: f64,
    /// Evaluator state (e.g. peak coordinates) to warm-start trials from.
    pub state: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct DescentOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub step: StepRule,
    /// Consecutive rounds of negligible decrease tolerated.
    pub stall_rounds: usize,
    /// Relative decrease regarded as negligible.
    pub stall_tol: f64,
    pub restart: usize,
    /// L-BFGS pairs kept; 0 disables curvature updates.
    pub memory: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub eval: Eval,
    pub iterations: usize,
    pub converged: bool,
    pub reason: Option<String>,
}

fn entry(iteration: usize, restart: usize, e: &Eval, step: f64) -> TraceEntry {
    TraceEntry { iteration, restart, value: e.value, residual: e.residual, norm: e.norm, step }
}

/// Limited-memory quasi-Newton direction with `precond` as the initial
/// inverse Hessian.
struct Memory {
    pairs: Vec<(SpinorField, SpinorField, f64)>,
    cap: usize,
}

impl Memory {
    fn push(&mut self, s: SpinorField, y: SpinorField) {
        let sy = inner_unchecked(&s, &y);
        let ss = inner_unchecked(&s, &s);
        let yy = inner_unchecked(&y, &y);
        if !(sy > 1e-12 * (ss * yy).sqrt()) {
            return;
        }
        if self.pairs.len() == self.cap {
            self.pairs.remove(0);
        }
        self.pairs.push((s, y, 1.0 / sy));
    }

    fn direction(&self, g: &SpinorField, precond: &dyn Fn(&SpinorField) -> SpinorField) -> SpinorField {
        let mut q = g.clone();
        let mut alpha = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * inner_unchecked(s, &q);
            q.axpy(-a, y);
            alpha.push(a);
        }
        let mut r = precond(&q);
        if let Some((s, y, _)) = self.pairs.last() {
            let py = precond(y);
            let gamma = inner_unchecked(s, y) / inner_unchecked(y, &py);
            r.scale_mut(gamma);
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alpha.into_iter().rev()) {
            let b = rho * inner_unchecked(y, &r);
            r.axpy(a - b, s);
        }
        r
    }
}

/// Minimizes `eval(·).value` starting from `start` along `−d`, with `d`
/// from preconditioned L-BFGS (`memory` pairs; 0 gives preconditioned
/// steepest descent).
///
/// Steps start at 1 when curvature pairs are available and otherwise at the
/// previous step times the growth factor. A trial whose value is level with
/// the current one up to roundoff is still accepted when it lowers the
/// residual; otherwise the Armijo test decides.
pub(crate) fn descend(
    start: SpinorField,
    eval: &mut dyn FnMut(&SpinorField, &[f64]) -> Result<Eval>,
    precond: &dyn Fn(&SpinorField) -> SpinorField,
    opts: &DescentOptions,
    trace: &mut Vec<TraceEntry>,
) -> Result<Outcome> {
    let rule = opts.step;
    let mut cur = eval(&start, &[])?;
    let mut memory = Memory { pairs: Vec::new(), cap: opts.memory };
    let mut s_plain = rule.initial;
    let mut stalled = 0usize;
    let mut failures = 0usize;
    trace.push(entry(0, opts.restart, &cur, 0.0));
    for it in 0..opts.max_iter {
        if cur.residual <= opts.tol {
            return Ok(Outcome { eval: cur, iterations: it, converged: true, reason: None });
        }
        let quasi_newton = !memory.pairs.is_empty();
        let mut d = if quasi_newton { memory.direction(&cur.grad, precond) } else { precond(&cur.grad) };
        let mut slope = inner_unchecked(&cur.grad, &d);
        let mut plain = !quasi_newton;
        if !(slope > 0.0) {
            memory.pairs.clear();
            d = precond(&cur.grad);
            slope = inner_unchecked(&cur.grad, &d);
            plain = true;
        }
        let mut s = if plain { s_plain } else { 1.0 };
        let roundoff = 16.0 * f64::EPSILON * cur.value.abs();
        let mut accepted = None;
        while s >= 1e-14 {
            let mut trial = cur.point.clone();
            trial.axpy(-s, &d);
            match eval(&trial, &cur.state) {
                Ok(e) if e.value.is_finite() => {
                    let armijo = e.value <= cur.value - rule.armijo * s * slope;
                    let level = e.value <= cur.value + roundoff && e.residual < cur.residual;
                    if armijo || level {
                        accepted = Some(e);
                        break;
                    }
                }
                Ok(_) | Err(Error::NonFinite(_)) => {}
                Err(err) => return Err(err),
            }
            s *= rule.shrink;
        }
        let Some(next) = accepted else {
            // one retry from scratch before giving up
            if !memory.pairs.is_empty() && failures == 0 {
                failures += 1;
                memory.pairs.clear();
                continue;
            }
            return Ok(Outcome { eval: cur, iterations: it, converged: false, reason: Some("line search failed".into()) });
        };
        failures = 0;
        if plain {
            s_plain = (s * rule.growth).min(rule.max_step);
        }
        let decrease = cur.value - next.value;
        if decrease < opts.stall_tol * cur.value.abs().max(f64::MIN_POSITIVE) {
            stalled += 1;
        } else {
            stalled = 0;
        }
        if opts.memory > 0 {
            memory.push(next.point.sub(&cur.point), next.grad.sub(&cur.grad));
        }
        cur = next;
        trace.push(entry(it + 1, opts.restart, &cur, s));
        if stalled >= opts.stall_rounds && cur.residual > opts.tol {
            return Ok(Outcome {
                eval: cur,
                iterations: it + 1,
                converged: false,
                reason: Some(format!("stagnated for {} rounds", opts.stall_rounds)),
            });
        }
    }
    let converged = cur.residual <= opts.tol;
    Ok(Outcome { eval: cur, iterations: opts.max_iter, converged, reason: (!converged).then(|| "iteration limit reached".into()) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::build_gamma;
    use crate::dirac::DiracOperator;
    use crate::lattice::{lp_norm, random_field, TorusModel};
    use std::sync::Arc;

    #[test]
    fn preconditioned_descent_solves_a_shifted_poisson_problem() {
        // minimize ½‖Df‖² − ⟨b, f⟩, whose minimizer is Δ⁻¹ b
        let model = Arc::new(TorusModel::unit(2, 8, &[0.5, 0.0]).unwrap());
        let op = DiracOperator::new(model.clone(), build_gamma(2).unwrap()).unwrap();
        let b = random_field(&model, op.gamma(), 1);
        let mut eval = |f: &SpinorField, _: &[f64]| -> Result<Eval> {
            let df = op.apply_d(f)?;
            let value = 0.5 * inner_unchecked(&df, &df) - inner_unchecked(&b, f);
            let grad = op.apply_laplacian(f)?.sub(&b);
            let residual = lp_norm(&grad, 2.0)?;
            Ok(Eval { point: f.clone(), field: f.clone(), value, grad, residual, norm: 0.0, state: Vec::new() })
        };
        let opts = DescentOptions {
            tol: 1e-10,
            max_iter: 50,
            step: StepRule::default(),
            stall_rounds: 100,
            stall_tol: 1e-14,
            restart: 0,
            memory: 0,
        };
        let mut trace = Vec::new();
        let out = descend(op.zeros(), &mut eval, &|g| op.precondition(g), &opts, &mut trace).unwrap();
        assert!(out.converged, "{:?}", out.reason);
        assert!(out.iterations <= 3);
        let exact = op.precondition(&b);
        assert!(out.eval.point.sub(&exact).max_abs() < 1e-10);
        assert_eq!(trace.len(), out.iterations + 1);
    }

    #[test]
    fn step_rule_validation() {
        assert!(StepRule::default().validate().is_ok());
        assert!(StepRule { shrink: 1.0, ..Default::default() }.validate().is_err());
    }
}
