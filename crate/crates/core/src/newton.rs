//! Damped Newton iteration with a forward-difference Jacobian.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Converged when the max-norm of the residual drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative finite-difference step (floored at the same absolute value).
    pub fd_step: f64,
    /// Step halvings allowed per iteration before giving up.
    pub max_halvings: usize,
    /// Extra iterations taken after convergence while the residual keeps shrinking.
    pub polish: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 60,
            fd_step: 1e-6,
            max_halvings: 20,
            polish: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub x: Vec<f64>,
    pub residual: Vec<f64>,
    pub iterations: usize,
}

impl NewtonReport {
    pub fn max_residual(&self) -> f64 {
        max_abs(&self.residual)
    }
}

const FD_REFINE: f64 = 1e-2;
const FD_REFINE_LIMIT: f64 = 1e-4;

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn jacobian<F>(f: &mut F, x: &[f64], fx: &[f64], step: f64) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let mut jac = DMatrix::zeros(fx.len(), n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = step * x[j].abs().max(1.0);
        // Prefer a forward step; fall back to a backward one if the forward point is
        // outside the residual's domain.
        xp[j] = x[j] + h;
        let forward = f(&xp);
        let (col, h) = match forward {
            Ok(v) => (v, h),
            Err(_) => {
                xp[j] = x[j] - h;
                (f(&xp)?, -h)
            }
        };
        xp[j] = x[j];
        for i in 0..fx.len() {
            jac[(i, j)] = (col[i] - fx[i]) / h;
        }
    }
    Ok(jac)
}

/// Solves `f(x) = 0` for a square system.
///
/// Each iteration takes the full Newton step and halves it until the max-norm residual
/// decreases. Residual evaluations that fail during the line search count as increases.
pub fn solve<F>(mut f: F, x0: &[f64], opts: &NewtonOptions, context: &str) -> Result<NewtonReport>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut x = x0.to_vec();
    let mut fx = f(&x)?;
    if fx.len() != x.len() {
        return Err(Error::invalid(format!(
            "{context}: {} residuals for {} unknowns",
            fx.len(),
            x.len()
        )));
    }
    let mut norm = max_abs(&fx);
    let mut polish_left = opts.polish;
    let mut fd_step = opts.fd_step;
    for iter in 0..opts.max_iter {
        if norm < opts.tol {
            if polish_left == 0 {
                return Ok(NewtonReport {
                    x,
                    residual: fx,
                    iterations: iter,
                });
            }
            polish_left -= 1;
        }
        let jac = jacobian(&mut f, &x, &fx, fd_step)?;
        let rhs = -DVector::from_column_slice(&fx);
        let Some(dx) = jac.lu().solve(&rhs) else {
            break;
        };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(xi, di)| xi + t * di).collect();
            if let Ok(ft) = f(&trial) {
                let n_t = max_abs(&ft);
                if n_t.is_finite() && n_t < norm {
                    accepted = Some((trial, ft, n_t));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((xn, fxn, nn)) => {
                x = xn;
                fx = fxn;
                norm = nn;
            }
            // A stalled line search usually means the difference quotient is too coarse
            // for the local curvature; retry with finer Jacobians before giving up.
            None if fd_step > opts.fd_step * FD_REFINE_LIMIT => fd_step *= FD_REFINE,
            None => break,
        }
    }
    if norm < opts.tol {
        return Ok(NewtonReport {
            x,
            residual: fx,
            iterations: opts.max_iter,
        });
    }
    Err(Error::Convergence {
        iterations: opts.max_iter,
        residual: norm,
        context: context.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_circle_line_intersection() {
        let f = |x: &[f64]| Ok(vec![x[0] * x[0] + x[1] * x[1] - 4.0, x[0] - x[1]]);
        let rep = solve(f, &[1.0, 0.5], &NewtonOptions::default(), "test").unwrap();
        assert!((rep.x[0] - 2f64.sqrt()).abs() < 1e-9);
        assert!(rep.max_residual() < 1e-9);
    }

    #[test]
    fn reports_failure() {
        let f = |x: &[f64]| Ok(vec![x[0] * x[0] + 1.0]);
        let err = solve(f, &[0.3], &NewtonOptions::default(), "no root").unwrap_err();
        assert!(matches!(err, Error::Convergence { .. }));
    }

    #[test]
    fn damping_handles_steep_start() {
        let f = |x: &[f64]| Ok(vec![x[0].atan()]);
        let rep = solve(f, &[3.0], &NewtonOptions::default(), "atan").unwrap();
        assert!(rep.x[0].abs() < 1e-9);
    }
}
