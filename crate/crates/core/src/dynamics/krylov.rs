//! Preconditioned conjugate gradients with sequential (deterministic)
//! reductions.

use crate::error::{Error, Result};

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub(crate) struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Stopping rule: `‖r‖₂ ≤ rel_tol·‖b‖₂` and `‖r‖_∞ ≤ abs_inf_tol`, or the
/// relative residual reaching the roundoff floor.
pub(crate) struct CgTolerance {
    pub rel_tol: f64,
    pub abs_inf_tol: f64,
    pub cap: usize,
}

const ROUNDOFF_FLOOR: f64 = 1e-15;
const REFRESH_EVERY: usize = 50;

/// Solve `A x = b` for symmetric positive (semi)definite `A`, starting from
/// the contents of `x`. `project` is applied to residuals and search
/// directions (identity, or mean removal for singular Neumann operators).
pub(crate) fn pcg(
    solver: &'static str,
    apply: impl Fn(&[f64], &mut [f64]),
    precond: impl Fn(&[f64], &mut [f64]),
    project: impl Fn(&mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol: &CgTolerance,
) -> Result<CgOutcome> {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut ax = vec![0.0; n];
    let mut r = vec![0.0; n];
    let true_residual = |x: &[f64], ax: &mut [f64], r: &mut [f64]| {
        apply(x, ax);
        for i in 0..n {
            r[i] = b[i] - ax[i];
        }
        project(r);
    };
    true_residual(x, &mut ax, &mut r);

    let converged = |r: &[f64]| {
        let rel = dot(r, r).sqrt() / bnorm;
        (rel <= tol.rel_tol && max_abs(r) <= tol.abs_inf_tol) || rel <= ROUNDOFF_FLOOR
    };
    if converged(&r) {
        return Ok(CgOutcome {
            iterations: 0,
            relative_residual: dot(&r, &r).sqrt() / bnorm,
        });
    }

    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    project(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=tol.cap {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Convergence {
                solver,
                iterations: it,
                residual: dot(&r, &r).sqrt() / bnorm,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if it % REFRESH_EVERY == 0 {
            true_residual(x, &mut ax, &mut r);
        }
        if converged(&r) {
            // confirm against the true residual before accepting
            true_residual(x, &mut ax, &mut r);
            if converged(&r) {
                return Ok(CgOutcome {
                    iterations: it,
                    relative_residual: dot(&r, &r).sqrt() / bnorm,
                });
            }
        }
        precond(&r, &mut z);
        project(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Convergence {
        solver,
        iterations: tol.cap,
        residual: dot(&r, &r).sqrt() / bnorm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal_system() {
        let n = 40;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                y[i] = 2.5 * x[i] - l - r;
            }
        };
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut x = vec![0.0; n];
        let tol = CgTolerance {
            rel_tol: 1e-12,
            abs_inf_tol: f64::INFINITY,
            cap: 200,
        };
        let out = pcg("test", apply, |r, z| z.copy_from_slice(r), |_| {}, &b, &mut x, &tol).unwrap();
        assert!(out.relative_residual <= 1e-12);
        let mut y = vec![0.0; n];
        apply(&x, &mut y);
        for i in 0..n {
            assert!((y[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn cap_exhaustion_is_a_convergence_error() {
        let n = 100;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                y[i] = (1.0 + i as f64) * x[i];
            }
        };
        let b = vec![1.0; n];
        let mut x = vec![0.0; n];
        let tol = CgTolerance {
            rel_tol: 1e-14,
            abs_inf_tol: f64::INFINITY,
            cap: 2,
        };
        let err = pcg("diag", apply, |r, z| z.copy_from_slice(r), |_| {}, &b, &mut x, &tol).err();
        assert!(matches!(err, Some(Error::Convergence { iterations: 2, .. })));
    }
}
