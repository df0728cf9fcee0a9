//! Named residual checks for a candidate maximizer.

use serde::{Deserialize, Serialize};

use super::profile::MaximizerProfile;
use crate::error::{Error, Result};
use crate::function_space::{RadonMeasure, SampledFunction};
use crate::sturm_liouville::dirichlet_eigen;

/// Thresholds for [`verify_profile`]. Field names double as the keys accepted by
/// [`VerifyTolerances::set`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyTolerances {
    pub eigen_rel: f64,
    pub bump_identity: f64,
    pub euler_lagrange: f64,
    pub q_y_identity: f64,
    pub symmetry: f64,
    pub mde_residual: f64,
    pub sign: f64,
    pub mass: f64,
    pub u_bound: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        Self {
            eigen_rel: 1e-4,
            bump_identity: 1e-12,
            euler_lagrange: 1e-3,
            q_y_identity: 1e-10,
            symmetry: 1e-6,
            mde_residual: 1e-3,
            sign: 1e-10,
            mass: 1e-8,
            u_bound: 1e-8,
        }
    }
}

impl VerifyTolerances {
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::invalid(format!("tolerance {name} must be positive, got {value}")));
        }
        let slot = match name {
            "eigen_rel" => &mut self.eigen_rel,
            "bump_identity" => &mut self.bump_identity,
            "euler_lagrange" => &mut self.euler_lagrange,
            "q_y_identity" => &mut self.q_y_identity,
            "symmetry" => &mut self.symmetry,
            "mde_residual" => &mut self.mde_residual,
            "sign" => &mut self.sign,
            "mass" => &mut self.mass,
            "u_bound" => &mut self.u_bound,
            _ => return Err(Error::invalid(format!("unknown verification tolerance '{name}'"))),
        };
        *slot = value;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
    pub passed: bool,
    /// `lambda_1` and `lambda_2` recomputed from the potential.
    pub lambda1: f64,
    pub lambda2: f64,
    /// Jump of the potential at the left end of the first active interval.
    pub edge_jump: f64,
    /// `int q u`, which equals `-r` at a maximizer.
    pub pairing: f64,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

fn check(name: &str, value: f64, tolerance: f64) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        value,
        tolerance,
        passed: value <= tolerance,
    }
}

/// Runs the nine checks. Failures are reported, not raised; only an eigenvalue solve
/// that cannot run at all is an error.
pub fn verify_profile(profile: &MaximizerProfile, tol: &VerifyTolerances) -> Result<VerificationReport> {
    let grid = profile.grid();
    let n = grid.cells();
    let h = grid.step();
    let pr = &profile.params;
    let (xi, eta) = (pr.xi, pr.eta);
    let ell = eta - xi;
    let c_true = pr.a * pr.a + pr.b * pr.b - eta - xi;
    let (y, z, q, u, theta) = (
        profile.y.values(),
        profile.z.values(),
        profile.qcheck.values(),
        profile.u.values(),
        profile.theta.values(),
    );
    let active: Vec<bool> = (0..=n).map(|k| profile.is_active(k)).collect();
    let max_over = |keep: &dyn Fn(usize) -> bool, f: &dyn Fn(usize) -> f64| {
        (0..=n).filter(|&k| keep(k)).map(f).fold(0.0_f64, f64::max)
    };
    let interior = |k: usize| k > 0 && k < n && active[k - 1] && active[k] && active[k + 1];

    let mut checks = Vec::with_capacity(9);

    let l1 = dirichlet_eigen(&profile.potential, 1, grid)?.lambda;
    let l2 = dirichlet_eigen(&profile.potential, 2, grid)?.lambda;
    let eig_err = ((l1 - xi) / xi).abs().max(((l2 - eta) / eta).abs());
    let eig_err = if l2 - l1 > 0.0 && ell > 0.0 { eig_err } else { f64::INFINITY };
    checks.push(check("eigenvalues", eig_err, tol.eigen_rel));

    let identity = max_over(&|k| active[k], &|k| (q[k] - (c_true + ell * theta[k].cos())).abs())
        .max((profile.c_check - c_true).abs())
        .max((profile.ell - ell).abs());
    checks.push(check("bump_identity", identity, tol.bump_identity));

    let shift = xi + pr.a * pr.a + pr.b * pr.b - 2.0 * eta;
    let fd = SampledFunction::second_difference;
    let e1 = max_over(&interior, &|k| (fd(&profile.y, k) + shift * y[k] + 2.0 * ell * y[k].powi(3)).abs());
    let e2 = max_over(&interior, &|k| {
        let yp = (y[k + 1] - y[k - 1]) / (2.0 * h);
        let s = 1.0 - y[k] * y[k];
        (s * fd(&profile.y, k) + y[k] * yp * yp - ell * y[k] * s * s).abs()
    });
    checks.push(check("euler_lagrange", e1.max(e2), tol.euler_lagrange));

    let qy = max_over(&|k| active[k], &|k| {
        (q[k] - (pr.a * pr.a + pr.b * pr.b - 2.0 * eta + 2.0 * ell * y[k] * y[k])).abs()
    });
    checks.push(check("q_y_identity", qy, tol.q_y_identity));

    let sym = (0..=n).map(|k| (q[k] - q[n - k]).abs()).fold(0.0, f64::max);
    checks.push(check("symmetry", sym, tol.symmetry));

    // u'' + 2 q u = h with h = 2a^2 + 2b^2 - 4 xi y^2 - 4 eta z^2, on nodes whose
    // three-point stencil stays inside one segment of the potential.
    let pot = &profile.potential;
    let same_segment = |k: usize| {
        k > 0 && k < n && {
            let s = pot.segment_index(grid.node(k));
            pot.segment_index(grid.node(k - 1)) == s && pot.segment_index(grid.node(k + 1)) == s
        }
    };
    let mde = max_over(&same_segment, &|k| {
        let upp = fd(&profile.u, k);
        let src = 2.0 * (pr.a * pr.a + pr.b * pr.b) - 4.0 * xi * y[k] * y[k] - 4.0 * eta * z[k] * z[k];
        (upp + 2.0 * q[k] * u[k] - src).abs()
    });
    checks.push(check("mde_residual", mde, tol.mde_residual));

    checks.push(check("sign", pot.sup().max(0.0), tol.sign));

    checks.push(check("mass", (profile.mass() - profile.r).abs(), tol.mass));

    let over = u.iter().map(|v| v - 1.0).fold(0.0, f64::max);
    let on_set = max_over(&|k| active[k], &|k| (u[k] - 1.0).abs());
    checks.push(check("u_bound", over.max(on_set), tol.u_bound));

    let alpha = pr.alpha;
    let edge_jump = pot.eval(alpha + 1e-12) - pot.eval(alpha - 1e-12);
    let pairing = RadonMeasure::from_density(pot.clone()).pair_against(&profile.u);
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerificationReport {
        checks,
        passed,
        lambda1: l1,
        lambda2: l2,
        edge_jump,
        pairing,
    })
}
