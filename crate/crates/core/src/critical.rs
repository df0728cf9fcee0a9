//! The critical system for the `L^p`-constrained maximizer of `lambda_1 + lambda_2`, `p > 1`.
//!
//! With `u = y^2 + z^2` and `s = p / (p - 1)` the first two eigenfunctions satisfy
//!
//! ```text
//! y'' + xi  y - u^(s-1) y = 0,    y(0) = y(1) = 0,  y'(0) = a > 0,
//! z'' + eta z - u^(s-1) z = 0,    z(0) = z(1) = 0,  z'(0) = b > 0,
//! ||y||_2 = ||z||_2,              ||u||_s = r^(p-1),
//! ```
//!
//! and the maximizing potential is `q = -u^(s-1)`. We shoot on `(a, b, xi, eta)` and solve
//! the four boundary and constraint residuals with damped Newton. Large radii and small `p`
//! are reached by continuation: first in `r` at `p = 2`, then in the conjugate exponent.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::function_space::{count_sign_changes, LpNorm, SampledFunction, UnitGrid};
use crate::newton::{self, NewtonOptions};

/// Smallest supported exponent, `1 + 1/15`.
pub const P_FLOOR: f64 = 16.0 / 15.0;
pub const P_CEIL: f64 = 4.0;
pub const R_MAX: f64 = 100.0;

const OVERFLOW: f64 = 1e12;
/// Radius step of the continuation at `p = 2`.
const R_STEP: f64 = 0.5;
/// First step of the continuation in the conjugate exponent.
const PSTAR_STEP: f64 = 0.1;
const PSTAR_MIN_STEP: f64 = 1e-4;
const PSTAR_MAX_STEP: f64 = 0.5;

pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// Unknowns of the shooting problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalParams {
    pub a: f64,
    pub b: f64,
    pub xi: f64,
    pub eta: f64,
}

impl CriticalParams {
    fn to_vec(self) -> Vec<f64> {
        vec![self.a, self.b, self.xi, self.eta]
    }

    fn from_slice(x: &[f64]) -> Self {
        Self {
            a: x[0],
            b: x[1],
            xi: x[2],
            eta: x[3],
        }
    }

    fn lerp(self, other: Self, s: f64) -> Self {
        let f = |x: f64, y: f64| x + s * (y - x);
        Self {
            a: f(self.a, other.a),
            b: f(self.b, other.b),
            xi: f(self.xi, other.xi),
            eta: f(self.eta, other.eta),
        }
    }

    /// Small-`r` approximation: `y ~ a sin(pi t)/pi`, `z ~ b sin(2 pi t)/(2 pi)` with
    /// `b = 2a` (equal `L^2` norms) and `a` fixed by the norm constraint.
    pub fn linearized(p: f64, r: f64, grid: UnitGrid) -> Result<Self> {
        let profile = SampledFunction::from_fn(grid, |t| {
            ((PI * t).sin().powi(2) + (2.0 * PI * t).sin().powi(2)) / (PI * PI)
        })?;
        let c = profile.lp_norm(conjugate(p))?;
        let a = (r.powf(p - 1.0) / c).sqrt();
        Ok(Self {
            a,
            b: 2.0 * a,
            xi: PI * PI,
            eta: 4.0 * PI * PI,
        })
    }
}

/// Samples of `(y, y', z, z')` on the grid.
#[derive(Debug, Clone)]
struct Trajectory {
    y: Vec<f64>,
    yp: Vec<f64>,
    z: Vec<f64>,
    zp: Vec<f64>,
}

fn rhs(s: [f64; 4], xi: f64, eta: f64, gexp: f64) -> [f64; 4] {
    let u = s[0] * s[0] + s[2] * s[2];
    let g = if u > 0.0 { u.powf(gexp) } else { 0.0 };
    [s[1], (g - xi) * s[0], s[3], (g - eta) * s[2]]
}

fn integrate(params: CriticalParams, pstar: f64, grid: UnitGrid) -> Result<Trajectory> {
    let n = grid.cells();
    let h = grid.step();
    let gexp = pstar - 1.0;
    let CriticalParams { a, b, xi, eta } = params;
    if ![a, b, xi, eta].iter().all(|v| v.is_finite()) {
        return Err(Error::invalid("non-finite shooting parameters"));
    }
    let mut tr = Trajectory {
        y: Vec::with_capacity(n + 1),
        yp: Vec::with_capacity(n + 1),
        z: Vec::with_capacity(n + 1),
        zp: Vec::with_capacity(n + 1),
    };
    let mut s = [0.0, a, 0.0, b];
    let push = |tr: &mut Trajectory, s: &[f64; 4]| {
        tr.y.push(s[0]);
        tr.yp.push(s[1]);
        tr.z.push(s[2]);
        tr.zp.push(s[3]);
    };
    push(&mut tr, &s);
    let add = |s: &[f64; 4], k: &[f64; 4], c: f64| -> [f64; 4] {
        [s[0] + c * k[0], s[1] + c * k[1], s[2] + c * k[2], s[3] + c * k[3]]
    };
    for k in 1..=n {
        let k1 = rhs(s, xi, eta, gexp);
        let k2 = rhs(add(&s, &k1, 0.5 * h), xi, eta, gexp);
        let k3 = rhs(add(&s, &k2, 0.5 * h), xi, eta, gexp);
        let k4 = rhs(add(&s, &k3, h), xi, eta, gexp);
        for i in 0..4 {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let m = s.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !(m <= OVERFLOW) {
            return Err(Error::Divergence {
                t: grid.node(k),
                magnitude: m,
            });
        }
        push(&mut tr, &s);
    }
    Ok(tr)
}

fn residuals(tr: &Trajectory, weights: &[f64], p: f64, r: f64) -> [f64; 4] {
    let pstar = conjugate(p);
    let n = tr.y.len() - 1;
    let (mut yy, mut zz, mut us) = (0.0, 0.0, 0.0);
    for ((w, y), z) in weights.iter().zip(&tr.y).zip(&tr.z) {
        let (y2, z2) = (y * y, z * z);
        yy += w * y2;
        zz += w * z2;
        us += w * (y2 + z2).powf(pstar);
    }
    [
        tr.y[n],
        tr.z[n],
        yy - zz,
        us.powf(1.0 / pstar) - r.powf(p - 1.0),
    ]
}

fn check_p_r(p: f64, r: f64) -> Result<()> {
    if !(P_FLOOR - 1e-12..=P_CEIL).contains(&p) {
        return Err(Error::invalid(format!(
            "exponent p must lie in [{P_FLOOR}, {P_CEIL}], got {p}"
        )));
    }
    if !(r > 0.0 && r <= R_MAX) {
        return Err(Error::invalid(format!("radius must lie in (0, {R_MAX}], got {r}")));
    }
    Ok(())
}

/// A converged solution of the critical system.
#[derive(Debug, Clone)]
pub struct CriticalSolution {
    pub p: f64,
    pub pstar: f64,
    pub r: f64,
    pub a: f64,
    pub b: f64,
    pub xi: f64,
    pub eta: f64,
    pub y: SampledFunction,
    pub z: SampledFunction,
    /// `q = -(y^2 + z^2)^(p* - 1)`.
    pub q: SampledFunction,
    /// Derivatives carried by the integrator.
    pub yp: SampledFunction,
    pub zp: SampledFunction,
    /// `(y(1), z(1), ||y||^2 - ||z||^2, ||u||_{p*} - r^(p-1))`.
    pub residuals: [f64; 4],
}

impl CriticalSolution {
    pub fn params(&self) -> CriticalParams {
        CriticalParams {
            a: self.a,
            b: self.b,
            xi: self.xi,
            eta: self.eta,
        }
    }

    pub fn grid(&self) -> UnitGrid {
        *self.y.grid()
    }

    pub fn max_residual(&self) -> f64 {
        newton::max_abs(&self.residuals)
    }

    /// `u = y^2 + z^2`.
    pub fn u(&self) -> SampledFunction {
        self.y.zip_with(&self.z, |y, z| y * y + z * z).expect("same grid")
    }

    pub fn objective(&self) -> f64 {
        self.xi + self.eta
    }

    fn from_trajectory(p: f64, r: f64, params: CriticalParams, tr: Trajectory, grid: UnitGrid) -> Result<Self> {
        let residuals = residuals(&tr, &grid.weights(), p, r);
        let pstar = conjugate(p);
        let q: Vec<f64> = tr
            .y
            .iter()
            .zip(&tr.z)
            .map(|(y, z)| -(y * y + z * z).powf(pstar - 1.0))
            .collect();
        Ok(Self {
            p,
            pstar,
            r,
            a: params.a,
            b: params.b,
            xi: params.xi,
            eta: params.eta,
            y: SampledFunction::new(grid, tr.y)?,
            z: SampledFunction::new(grid, tr.z)?,
            q: SampledFunction::new(grid, q)?,
            yp: SampledFunction::new(grid, tr.yp)?,
            zp: SampledFunction::new(grid, tr.zp)?,
            residuals,
        })
    }

    /// Checks that `y` has no interior zero, `z` exactly one, and `xi < eta`.
    pub fn check_nodal_structure(&self) -> Result<()> {
        let n = self.grid().cells();
        let y = self.y.values();
        if let Some(k) = (1..n).find(|&k| y[k] <= 0.0) {
            return Err(Error::WrongBranch(format!(
                "y is not positive inside (0, 1): y({}) = {:e}",
                self.grid().node(k),
                y[k]
            )));
        }
        let changes = count_sign_changes(&self.z.values()[1..n]);
        if changes != 1 {
            return Err(Error::WrongBranch(format!(
                "z has {changes} interior sign changes, expected 1"
            )));
        }
        if !(self.xi < self.eta) {
            return Err(Error::WrongBranch(format!(
                "eigenvalues out of order: xi = {}, eta = {}",
                self.xi, self.eta
            )));
        }
        Ok(())
    }
}

/// Residual vector for given shooting parameters.
pub fn critical_residuals(p: f64, r: f64, params: CriticalParams, grid: UnitGrid) -> Result<[f64; 4]> {
    let tr = integrate(params, conjugate(p), grid)?;
    Ok(residuals(&tr, &grid.weights(), p, r))
}

fn newton_solve(p: f64, r: f64, guess: CriticalParams, grid: UnitGrid, opts: &NewtonOptions) -> Result<CriticalParams> {
    let weights = grid.weights();
    let pstar = conjugate(p);
    let f = |x: &[f64]| -> Result<Vec<f64>> {
        if x[2] <= 0.0 || x[3] <= 0.0 {
            return Err(Error::invalid("eigenvalue estimates must stay positive"));
        }
        let tr = integrate(CriticalParams::from_slice(x), pstar, grid)?;
        Ok(residuals(&tr, &weights, p, r).to_vec())
    };
    let rep = newton::solve(f, &guess.to_vec(), opts, &format!("critical system at p = {p}, r = {r}"))?;
    Ok(CriticalParams::from_slice(&rep.x))
}

/// Newton from an explicit guess, followed by the nodal check.
pub fn solve_from(p: f64, r: f64, guess: CriticalParams, grid: UnitGrid, opts: &NewtonOptions) -> Result<CriticalSolution> {
    check_p_r(p, r)?;
    let params = newton_solve(p, r, guess, grid, opts)?;
    let tr = integrate(params, conjugate(p), grid)?;
    let sol = CriticalSolution::from_trajectory(p, r, params, tr, grid)?;
    sol.check_nodal_structure()?;
    Ok(sol)
}

/// Solves the critical system. Without a guess the solution is reached from the
/// small-radius linearization by continuation in `r` at `p = 2` and then in `p*`.
pub fn solve_critical(
    p: f64,
    r: f64,
    guess: Option<CriticalParams>,
    grid: UnitGrid,
    opts: &NewtonOptions,
) -> Result<CriticalSolution> {
    check_p_r(p, r)?;
    if let Some(g) = guess {
        return solve_from(p, r, g, grid, opts);
    }
    let mut path = PstarPath::start(r, grid, opts)?;
    path.advance_to(p)?;
    Ok(path.current().clone())
}

/// Continuation state in the conjugate exponent at a fixed radius.
pub struct PstarPath<'a> {
    r: f64,
    grid: UnitGrid,
    opts: &'a NewtonOptions,
    history: Vec<CriticalSolution>,
}

impl<'a> PstarPath<'a> {
    /// Solves at `p = 2` by continuation in `r` from the linearized guess.
    pub fn start(r: f64, grid: UnitGrid, opts: &'a NewtonOptions) -> Result<Self> {
        check_p_r(2.0, r)?;
        let mut radius = r.min(R_STEP);
        let mut sol = solve_from(2.0, radius, CriticalParams::linearized(2.0, radius, grid)?, grid, opts)?;
        let mut prev: Option<CriticalSolution> = None;
        while radius < r {
            let next = (radius + R_STEP).min(r);
            let guess = match &prev {
                Some(pv) => pv.params().lerp(sol.params(), (next - pv.r) / (sol.r - pv.r)),
                None => sol.params(),
            };
            let s = solve_from(2.0, next, guess, grid, opts)?;
            prev = Some(sol);
            sol = s;
            radius = next;
        }
        Ok(Self {
            r,
            grid,
            opts,
            history: vec![sol],
        })
    }

    /// Starts from a known solution.
    pub fn from_solution(sol: CriticalSolution, opts: &'a NewtonOptions) -> Self {
        Self {
            r: sol.r,
            grid: sol.grid(),
            opts,
            history: vec![sol],
        }
    }

    pub fn current(&self) -> &CriticalSolution {
        self.history.last().expect("path is never empty")
    }

    /// Moves to exponent `p` with adaptive steps in `p*` and a secant predictor.
    pub fn advance_to(&mut self, p_target: f64) -> Result<&CriticalSolution> {
        check_p_r(p_target, self.r)?;
        let target = conjugate(p_target);
        let mut step = PSTAR_STEP;
        loop {
            let here = self.current().pstar;
            if self.current().p == p_target {
                break;
            }
            let next = if target > here {
                (here + step).min(target)
            } else {
                (here - step).max(target)
            };
            let guess = match self.history.len() {
                1 => self.current().params(),
                len => {
                    let (a, b) = (&self.history[len - 2], &self.history[len - 1]);
                    a.params().lerp(b.params(), (next - a.pstar) / (b.pstar - a.pstar))
                }
            };
            let p = if next == target { p_target } else { conjugate(next) };
            match solve_from(p, self.r, guess, self.grid, self.opts) {
                Ok(sol) => {
                    self.history.push(sol);
                    if self.history.len() > 2 {
                        self.history.remove(0);
                    }
                    step = (step * 1.5).min(PSTAR_MAX_STEP);
                }
                Err(e) => {
                    step *= 0.5;
                    if step < PSTAR_MIN_STEP {
                        return Err(e);
                    }
                }
            }
        }
        Ok(self.current())
    }
}

/// Diagnostics recorded at each point of a continuation toward `p = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationStep {
    pub p: f64,
    pub objective: f64,
    pub a: f64,
    pub b: f64,
    /// `||y^2 + z^2||_inf`.
    pub u_max: f64,
    /// `||q||_1`.
    pub q_l1: f64,
    /// `int (y^2 + z^2) q`, equal to `-r^p` at convergence.
    pub pairing: f64,
}

impl ContinuationStep {
    pub fn from_solution(sol: &CriticalSolution) -> Self {
        let u = sol.u();
        Self {
            p: sol.p,
            objective: sol.objective(),
            a: sol.a,
            b: sol.b,
            u_max: u.max_abs(),
            q_l1: sol.q.lp_norm(1.0).expect("valid exponent"),
            pairing: u.inner(&sol.q).expect("same grid"),
        }
    }
}

#[derive(Debug)]
pub struct ContinuationRun {
    pub solutions: Vec<CriticalSolution>,
    pub steps: Vec<ContinuationStep>,
    /// Why the chain stopped early, if it did.
    pub failure: Option<Error>,
}

/// Solves along a strictly decreasing schedule of exponents, each warm-started from the
/// previous one. A failure ends the chain and is reported alongside the solutions so far.
pub fn continuation_to_one(
    r: f64,
    p_schedule: &[f64],
    grid: UnitGrid,
    opts: &NewtonOptions,
) -> Result<ContinuationRun> {
    if p_schedule.is_empty() {
        return Err(Error::invalid("empty exponent schedule"));
    }
    if p_schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("exponent schedule must be strictly decreasing"));
    }
    for &p in p_schedule {
        check_p_r(p, r)?;
    }
    let mut run = ContinuationRun {
        solutions: Vec::new(),
        steps: Vec::new(),
        failure: None,
    };
    let mut path = match PstarPath::start(r, grid, opts) {
        Ok(path) => path,
        Err(e) => {
            run.failure = Some(e);
            return Ok(run);
        }
    };
    for &p in p_schedule {
        match path.advance_to(p) {
            Ok(sol) => {
                run.steps.push(ContinuationStep::from_solution(sol));
                run.solutions.push(sol.clone());
            }
            Err(e) => {
                run.failure = Some(e);
                break;
            }
        }
    }
    Ok(run)
}

/// `max_t |y'^2 + z'^2 + xi y^2 + eta z^2 - u^(p*)/p* - (a^2 + b^2)|`, with derivatives from
/// the integrated state.
pub fn hamiltonian_residual(sol: &CriticalSolution) -> f64 {
    let e0 = sol.a * sol.a + sol.b * sol.b;
    let (y, z, yp, zp) = (sol.y.values(), sol.z.values(), sol.yp.values(), sol.zp.values());
    (0..y.len())
        .map(|k| {
            let u = y[k] * y[k] + z[k] * z[k];
            let h = yp[k] * yp[k] + zp[k] * zp[k] + sol.xi * y[k] * y[k] + sol.eta * z[k] * z[k]
                - u.powf(sol.pstar) / sol.pstar;
            (h - e0).abs()
        })
        .fold(0.0, f64::max)
}

/// Fourth-order second difference at interior node `k`: centered inside, one-sided next to
/// the boundary.
fn second_derivative(v: &[f64], k: usize, h: f64) -> f64 {
    let n = v.len() - 1;
    let d = 12.0 * h * h;
    if k >= 2 && k + 2 <= n {
        (-v[k + 2] + 16.0 * v[k + 1] - 30.0 * v[k] + 16.0 * v[k - 1] - v[k - 2]) / d
    } else if k < 2 {
        (10.0 * v[0] - 15.0 * v[1] - 4.0 * v[2] + 14.0 * v[3] - 6.0 * v[4] + v[5]) / d
    } else {
        (10.0 * v[n] - 15.0 * v[n - 1] - 4.0 * v[n - 2] + 14.0 * v[n - 3] - 6.0 * v[n - 4] + v[n - 5]) / d
    }
}

fn source_term(sol: &CriticalSolution, k: usize) -> f64 {
    let (y, z) = (sol.y.values()[k], sol.z.values()[k]);
    2.0 * sol.a * sol.a + 2.0 * sol.b * sol.b - 4.0 * sol.xi * y * y - 4.0 * sol.eta * z * z
}

/// `max |u'' + 2(1 + 1/p*) q u - h|` over interior nodes, `h = 2a^2 + 2b^2 - 4 xi y^2 - 4 eta z^2`.
pub fn u_equation_residual(sol: &CriticalSolution) -> f64 {
    let u = sol.u();
    let (uv, q) = (u.values(), sol.q.values());
    let h = sol.grid().step();
    let c = 2.0 * (1.0 + 1.0 / sol.pstar);
    (1..uv.len() - 1)
        .map(|k| (second_derivative(uv, k, h) + c * q[k] * uv[k] - source_term(sol, k)).abs())
        .fold(0.0, f64::max)
}

/// The same identity written as `u'' - 2(1 + 1/p*) u^(p*) = h`.
pub fn u_equation_power_residual(sol: &CriticalSolution) -> f64 {
    let u = sol.u();
    let uv = u.values();
    let h = sol.grid().step();
    let c = 2.0 * (1.0 + 1.0 / sol.pstar);
    (1..uv.len() - 1)
        .map(|k| (second_derivative(uv, k, h) - c * uv[k].powf(sol.pstar) - source_term(sol, k)).abs())
        .fold(0.0, f64::max)
}

/// Maximal intervals where `|f| > frac * max|f|`, with endpoints at grid nodes.
pub fn support_intervals(f: &SampledFunction, frac: f64) -> Vec<(f64, f64)> {
    let level = frac * f.max_abs();
    let grid = f.grid();
    let mut out = Vec::new();
    let mut start = None;
    for (k, v) in f.values().iter().enumerate() {
        match (v.abs() > level, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                out.push((grid.node(s), grid.node(k - 1)));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((grid.node(s), 1.0));
    }
    out
}

/// `max_k |f(t_k) - f(1 - t_k)|`.
pub fn symmetry_defect(f: &SampledFunction) -> f64 {
    let v = f.values();
    let n = v.len() - 1;
    (0..=n).map(|k| (v[k] - v[n - k]).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linearization_limit() {
        let g = UnitGrid::default();
        let sol = solve_critical(2.0, 1e-3, None, g, &NewtonOptions::default()).unwrap();
        assert!((sol.xi - PI * PI).abs() < 1e-2);
        assert!((sol.eta - 4.0 * PI * PI).abs() < 1e-2);
        assert!((sol.b / sol.a - 2.0).abs() < 1e-3);
    }

    #[test]
    fn hamiltonian_vanishes_at_origin() {
        let g = UnitGrid::default();
        let sol = solve_critical(2.0, 1.0, None, g, &NewtonOptions::default()).unwrap();
        let (yp, zp) = (sol.yp.values()[0], sol.zp.values()[0]);
        assert_eq!(yp * yp + zp * zp, sol.a * sol.a + sol.b * sol.b);
        assert!(hamiltonian_residual(&sol) < 1e-6);
    }

    #[test]
    fn rejects_out_of_range_inputs() {
        let g = UnitGrid::default();
        let o = NewtonOptions::default();
        assert!(matches!(solve_critical(1.01, 1.0, None, g, &o), Err(Error::InvalidInput(_))));
        assert!(matches!(solve_critical(2.0, 0.0, None, g, &o), Err(Error::InvalidInput(_))));
        assert!(matches!(solve_critical(2.0, 101.0, None, g, &o), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn support_of_two_bumps() {
        let g = UnitGrid::new(100).unwrap();
        let f = SampledFunction::from_fn(g, |t| {
            if (0.2..=0.3).contains(&t) || (0.7..=0.8).contains(&t) {
                -1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let s = support_intervals(&f, 0.5);
        assert_eq!(s.len(), 2);
        assert!(symmetry_defect(&f) < 1e-12);
    }
}
