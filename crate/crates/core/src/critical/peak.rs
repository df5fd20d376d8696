//! Local maximization of `𝔏` over a finite-dimensional affine span by
//! modified Newton steps (Hessian eigenvalues replaced by their moduli).

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::energy::Energy;
use crate::error::Result;
use crate::lattice::{inner_unchecked, SpinorField};

#[derive(Debug, Clone)]
pub(crate) struct Peak {
    pub coords: Vec<f64>,
    pub field: SpinorField,
    pub value: f64,
    pub grad: SpinorField,
}

fn point(base: &SpinorField, dirs: &[SpinorField], a: &[f64]) -> SpinorField {
    let mut x = base.clone();
    for (d, &c) in dirs.iter().zip(a) {
        if c != 0.0 {
            x.axpy(c, d);
        }
    }
    x
}

/// Maximizes `a ↦ 𝔏(base + Σ a_i dirs_i)` from `start`; `dirs` must be
/// `L²`-orthonormal. Stops when the span gradient drops below `gtol` or no
/// ascent is possible.
pub(crate) fn maximize(
    energy: &Energy,
    base: &SpinorField,
    dirs: &[SpinorField],
    start: Vec<f64>,
    gtol: f64,
    max_steps: usize,
) -> Result<Peak> {
    let n = dirs.len();
    let mut a = start;
    let mut x = point(base, dirs, &a);
    let (mut value, mut grad) = energy.value_and_gradient(&x)?;
    if n == 0 {
        return Ok(Peak { coords: a, field: x, value, grad });
    }
    for _ in 0..max_steps {
        let gc = DVector::from_iterator(n, dirs.iter().map(|d| inner_unchecked(&grad, d)));
        let mut h = DMatrix::<f64>::zeros(n, n);
        for (j, dj) in dirs.iter().enumerate() {
            let hd = energy.hessian_apply(&x, dj)?;
            for (i, di) in dirs.iter().enumerate() {
                h[(i, j)] = inner_unchecked(&hd, di);
            }
        }
        let h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(h);
        let scale = eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        let floor = 1e-12 * scale.max(f64::MIN_POSITIVE);
        let roundoff = 16.0 * f64::EPSILON * value.abs();
        if gc.norm() <= gtol {
            // a stationary point with upward curvature is a saddle of the
            // restriction; leave it along the steepest such direction
            let (k, lmax) = eig.eigenvalues.iter().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, &l)| if l > b.1 { (i, l) } else { b });
            if lmax <= 1e-8 * scale {
                break;
            }
            let v = eig.eigenvectors.column(k).into_owned();
            let radius = a.iter().map(|c| c * c).sum::<f64>().sqrt().max(1.0);
            let mut alpha = radius;
            let mut escaped = false;
            while alpha > 1e-10 * radius && !escaped {
                for sign in [1.0, -1.0] {
                    let trial: Vec<f64> = a.iter().zip(v.iter()).map(|(ai, vi)| ai + sign * alpha * vi).collect();
                    let xt = point(base, dirs, &trial);
                    if let Ok((vt, gt)) = energy.value_and_gradient(&xt) {
                        if vt - value > roundoff {
                            a = trial;
                            x = xt;
                            value = vt;
                            grad = gt;
                            escaped = true;
                            break;
                        }
                    }
                }
                alpha *= 0.5;
            }
            if !escaped {
                break;
            }
            continue;
        }
        let proj = eig.eigenvectors.transpose() * &gc;
        let scaled = DVector::from_iterator(n, proj.iter().zip(eig.eigenvalues.iter()).map(|(c, l)| c / l.abs().max(floor)));
        let delta = &eig.eigenvectors * scaled;
        let slope = gc.dot(&delta);
        let mut alpha = 1.0;
        let mut moved = false;
        while alpha > 1e-12 {
            let trial: Vec<f64> = a.iter().zip(delta.iter()).map(|(ai, di)| ai + alpha * di).collect();
            let xt = point(base, dirs, &trial);
            if let Ok((vt, gt)) = energy.value_and_gradient(&xt) {
                let gain = vt - value;
                let level = gain >= -roundoff;
                let gt_norm = dirs.iter().map(|d| inner_unchecked(&gt, d).powi(2)).sum::<f64>().sqrt();
                if gain >= 1e-4 * alpha * slope || (level && gt_norm < gc.norm()) {
                    a = trial;
                    x = xt;
                    value = vt;
                    grad = gt;
                    moved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok(Peak { coords: a, field: x, value, grad })
}
