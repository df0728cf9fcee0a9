//! Shooting for `y'' + (lambda + q(t)) y = 0` with Dirichlet conditions.
//!
//! Integration is classical RK4 on the grid. Cells that contain a segment boundary of the
//! potential are split there, so jumps in `q` never fall inside an RK stage.
//! Eigenvalues are bracketed by counting sign changes of the shot solution (Sturm
//! oscillation) and then polished with Brent's method.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::function_space::{count_sign_changes, LpNorm, PiecewisePotential, SampledFunction, UnitGrid};
use crate::roots::brent;

/// Magnitude beyond which [`integrate_ivp`] reports divergence.
pub const OVERFLOW_LIMIT: f64 = 1e12;
/// Half-width of the largest eigenvalue search window.
pub const SEARCH_LIMIT: f64 = 1e6;
/// Largest supported eigenvalue index.
pub const MAX_INDEX: usize = 8;

const SPLIT_TOL: f64 = 1e-13;
const RESCALE_ABOVE: f64 = 1e150;
const RESCALE_BY: f64 = 1e-150;

#[derive(Debug, Clone, Copy)]
struct Substep {
    h: f64,
    /// Potential at the start, midpoint and end of the substep.
    q: [f64; 3],
    /// Grid node reached at the end of this substep, if any.
    node: Option<usize>,
}

/// A potential tabulated at every RK4 stage time, reusable across values of `lambda`.
#[derive(Debug, Clone)]
pub(crate) struct Discretization {
    grid: UnitGrid,
    steps: Vec<Substep>,
}

impl Discretization {
    pub(crate) fn new(q: &PiecewisePotential, grid: UnitGrid) -> Self {
        let n = grid.cells();
        let breaks: Vec<f64> = q.breakpoints().collect();
        let mut next_break = 0;
        let mut steps = Vec::with_capacity(n + breaks.len());
        for k in 0..n {
            let (t0, t1) = (grid.node(k), grid.node(k + 1));
            let mut cuts = vec![t0];
            while next_break < breaks.len() && breaks[next_break] < t1 - SPLIT_TOL {
                let b = breaks[next_break];
                if b > t0 + SPLIT_TOL {
                    cuts.push(b);
                }
                next_break += 1;
            }
            cuts.push(t1);
            for (i, w) in cuts.windows(2).enumerate() {
                let (s, e) = (w[0], w[1]);
                let seg = &q.segments()[q.segment_index(0.5 * (s + e))];
                steps.push(Substep {
                    h: e - s,
                    q: [seg.eval(s), seg.eval(0.5 * (s + e)), seg.eval(e)],
                    node: (i + 2 == cuts.len()).then_some(k + 1),
                });
            }
        }
        Self { grid, steps }
    }

    pub(crate) fn grid(&self) -> UnitGrid {
        self.grid
    }

    /// Marches `(y, v)` from 0 to 1. `at_node(k, state)` runs at every grid node `k >= 1`
    /// after the step that reaches it and may modify the state.
    pub(crate) fn march(
        &self,
        lambda: f64,
        mut state: [f64; 2],
        mut at_node: impl FnMut(usize, &mut [f64; 2]) -> Result<()>,
    ) -> Result<[f64; 2]> {
        for st in &self.steps {
            state = rk4_linear(state, lambda, st.h, st.q);
            if let Some(k) = st.node {
                at_node(k, &mut state)?;
            }
        }
        Ok(state)
    }
}

#[inline]
fn rk4_linear([y, v]: [f64; 2], lambda: f64, h: f64, q: [f64; 3]) -> [f64; 2] {
    let (c0, cm, c1) = (lambda + q[0], lambda + q[1], lambda + q[2]);
    let (k1y, k1v) = (v, -c0 * y);
    let (y2, v2) = (y + 0.5 * h * k1y, v + 0.5 * h * k1v);
    let (k2y, k2v) = (v2, -cm * y2);
    let (y3, v3) = (y + 0.5 * h * k2y, v + 0.5 * h * k2v);
    let (k3y, k3v) = (v3, -cm * y3);
    let (y4, v4) = (y + h * k3y, v + h * k3v);
    let (k4y, k4v) = (v4, -c1 * y4);
    [
        y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
        v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
    ]
}

/// Result of a shot used by the eigenvalue search: the number of sign changes of `y` over
/// the nodes in `(0, 1]` and the scale-free endpoint value `y(1) / |(y(1), y'(1))|`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Shot {
    pub(crate) sign_changes: usize,
    pub(crate) end_ratio: f64,
}

/// Shoots from `(0, 1)` with overflow-safe rescaling. `jumps` lists `(node, mass)` pairs
/// sorted by node; each applies `v <- v - mass * y` on arrival at the node.
pub(crate) fn shoot(disc: &Discretization, lambda: f64, jumps: &[(usize, f64)]) -> Result<Shot> {
    let mut count = 0;
    let mut last_sign = 0.0_f64;
    let mut next_jump = 0;
    let [y, v] = disc.march(lambda, [0.0, 1.0], |k, s| {
        while next_jump < jumps.len() && jumps[next_jump].0 == k {
            s[1] -= jumps[next_jump].1 * s[0];
            next_jump += 1;
        }
        if s[0] != 0.0 {
            if last_sign != 0.0 && s[0].signum() != last_sign {
                count += 1;
            }
            last_sign = s[0].signum();
        }
        let m = s[0].abs().max(s[1].abs());
        if m > RESCALE_ABOVE {
            s[0] *= RESCALE_BY;
            s[1] *= RESCALE_BY;
        }
        if !m.is_finite() {
            return Err(Error::Divergence {
                t: disc.grid().node(k),
                magnitude: m,
            });
        }
        Ok(())
    })?;
    Ok(Shot {
        sign_changes: count,
        end_ratio: y / y.hypot(v),
    })
}

/// Locates the `m`-th eigenvalue of a shooting problem. `shot(lambda)` must count sign
/// changes on `(0, 1]`, which equals the number of eigenvalues below `lambda`.
pub(crate) fn find_eigenvalue(
    mut shot: impl FnMut(f64) -> Result<Shot>,
    m: usize,
    mass_scale: f64,
    limit: f64,
) -> Result<f64> {
    check_index(m)?;
    let center = (m * m) as f64 * PI * PI;
    let mut width = 10.0 * mass_scale + 10.0;
    let out_of_range = || Error::SearchRange { m, limit };

    let mut lo = (center - width).max(-limit);
    let mut hi = (center + width).min(limit);
    let mut lo_count = shot(lo)?.sign_changes;
    while lo_count >= m {
        if lo <= -limit {
            return Err(out_of_range());
        }
        width *= 2.0;
        lo = (center - width).max(-limit);
        lo_count = shot(lo)?.sign_changes;
    }
    let mut width = 10.0 * mass_scale + 10.0;
    let mut hi_count = shot(hi)?.sign_changes;
    while hi_count < m {
        if hi >= limit {
            return Err(out_of_range());
        }
        width *= 2.0;
        hi = (center + width).min(limit);
        hi_count = shot(hi)?.sign_changes;
    }
    // Narrow until the bracket holds exactly the transition from m-1 to m sign changes.
    let mut iterations = 0;
    while lo_count + 1 != m || hi_count != m {
        let mid = 0.5 * (lo + hi);
        if iterations > 200 || mid <= lo || mid >= hi {
            return Err(Error::Convergence {
                iterations,
                residual: hi - lo,
                context: format!("isolating eigenvalue {m}"),
            });
        }
        let c = shot(mid)?.sign_changes;
        if c < m {
            lo = mid;
            lo_count = c;
        } else {
            hi = mid;
            hi_count = c;
        }
        iterations += 1;
    }
    let xtol = 1e-14 * (1.0 + center.abs());
    brent(|l| Ok(shot(l)?.end_ratio), lo, hi, xtol, 200)
}

fn check_index(m: usize) -> Result<()> {
    if m == 0 || m > MAX_INDEX {
        return Err(Error::invalid(format!(
            "eigenvalue index must be in 1..={MAX_INDEX}, got {m}"
        )));
    }
    Ok(())
}

/// Samples of an initial value problem solution.
#[derive(Debug, Clone, PartialEq)]
pub struct IvpSolution {
    pub grid: UnitGrid,
    pub y: Vec<f64>,
    pub v: Vec<f64>,
    /// Sign changes of `y` over the interior nodes.
    pub zero_count: usize,
    pub y_end: f64,
    pub v_end: f64,
}

pub(crate) fn integrate_samples(
    disc: &Discretization,
    lambda: f64,
    y0: f64,
    v0: f64,
    jumps: &[(usize, f64)],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(lambda.is_finite() && y0.is_finite() && v0.is_finite()) {
        return Err(Error::invalid("lambda and initial values must be finite"));
    }
    let grid = disc.grid();
    let mut y = Vec::with_capacity(grid.len());
    let mut v = Vec::with_capacity(grid.len());
    y.push(y0);
    v.push(v0);
    let mut next_jump = 0;
    disc.march(lambda, [y0, v0], |k, s| {
        while next_jump < jumps.len() && jumps[next_jump].0 == k {
            s[1] -= jumps[next_jump].1 * s[0];
            next_jump += 1;
        }
        let m = s[0].abs();
        if !(m <= OVERFLOW_LIMIT) {
            return Err(Error::Divergence {
                t: grid.node(k),
                magnitude: m,
            });
        }
        y.push(s[0]);
        v.push(s[1]);
        Ok(())
    })?;
    Ok((y, v))
}

/// RK4 solution of `y'' + (lambda + q) y = 0`, `y(0) = y0`, `y'(0) = v0`.
pub fn integrate_ivp(
    q: &PiecewisePotential,
    grid: UnitGrid,
    lambda: f64,
    y0: f64,
    v0: f64,
) -> Result<IvpSolution> {
    let disc = Discretization::new(q, grid);
    let (y, v) = integrate_samples(&disc, lambda, y0, v0, &[])?;
    let zero_count = count_sign_changes(&y[1..grid.cells()]);
    Ok(IvpSolution {
        grid,
        y_end: *y.last().unwrap(),
        v_end: *v.last().unwrap(),
        y,
        v,
        zero_count,
    })
}

/// A Dirichlet eigenpair.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub m: usize,
    pub lambda: f64,
    /// Unit `L^2` norm, positive initial slope.
    pub phi: SampledFunction,
    /// Interior zeros of `phi`, by linear interpolation between sign changes.
    pub nodes: Vec<f64>,
}

pub(crate) fn eigen_result(grid: UnitGrid, m: usize, lambda: f64, y: Vec<f64>) -> Result<EigenResult> {
    let raw = SampledFunction::new(grid, y)?;
    let norm = raw.lp_norm(2.0)?;
    let phi = raw.map(|v| v / norm);
    let vals = phi.values();
    let mut nodes = Vec::new();
    let mut prev = 1;
    for k in 2..grid.cells() {
        if vals[k] == 0.0 {
            continue;
        }
        if vals[prev] != 0.0 && vals[k].signum() != vals[prev].signum() {
            let (t0, t1) = (grid.node(prev), grid.node(k));
            nodes.push(t0 + (t1 - t0) * vals[prev] / (vals[prev] - vals[k]));
        }
        prev = k;
    }
    Ok(EigenResult { m, lambda, phi, nodes })
}

/// The `m`-th Dirichlet eigenvalue (`m >= 1`) and its eigenfunction.
pub fn dirichlet_eigen(q: &PiecewisePotential, m: usize, grid: UnitGrid) -> Result<EigenResult> {
    dirichlet_eigen_within(q, m, grid, SEARCH_LIMIT)
}

/// [`dirichlet_eigen`] with an explicit search half-width.
pub fn dirichlet_eigen_within(
    q: &PiecewisePotential,
    m: usize,
    grid: UnitGrid,
    limit: f64,
) -> Result<EigenResult> {
    check_index(m)?;
    let disc = Discretization::new(q, grid);
    let scale = q.lp_norm(1.0)?;
    let lambda = find_eigenvalue(|l| shoot(&disc, l, &[]), m, scale, limit)?;
    let (y, _) = integrate_samples(&disc, lambda, 0.0, 1.0, &[])?;
    eigen_result(grid, m, lambda, y)
}

/// `lambda_1(q) + lambda_2(q)`.
pub fn eigen_sum(q: &PiecewisePotential, grid: UnitGrid) -> Result<f64> {
    let disc = Discretization::new(q, grid);
    let scale = q.lp_norm(1.0)?;
    let l1 = find_eigenvalue(|l| shoot(&disc, l, &[]), 1, scale, SEARCH_LIMIT)?;
    let l2 = find_eigenvalue(|l| shoot(&disc, l, &[]), 2, scale, SEARCH_LIMIT)?;
    Ok(l1 + l2)
}

/// Sum of the two Rayleigh quotients `(int w'^2 - int q w^2) / int w^2` for an orthogonal
/// pair vanishing at both ends. By the Ky Fan principle this is never below
/// `lambda_1(q) + lambda_2(q)`.
pub fn rayleigh_sum(u: &SampledFunction, v: &SampledFunction, q: &PiecewisePotential) -> Result<f64> {
    let quotient = |w: &SampledFunction| -> Result<f64> {
        let scale = w.max_abs();
        if scale == 0.0 {
            return Err(Error::invalid("test function is identically zero"));
        }
        let vals = w.values();
        if vals[0].abs() > 1e-8 * scale || vals[vals.len() - 1].abs() > 1e-8 * scale {
            return Err(Error::invalid("test function must vanish at both endpoints"));
        }
        let dw = w.derivative();
        let kinetic = dw.inner(&dw)?;
        let potential = q.integrate_with(w.grid(), |p, qv| qv * w.at(p).powi(2));
        Ok((kinetic - potential) / w.inner(w)?)
    };
    let cross = u.inner(v)?;
    let scale = (u.inner(u)? * v.inner(v)?).sqrt();
    if cross.abs() > 1e-8 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::invalid(format!(
            "test functions are not orthogonal (<u, v> = {cross:e})"
        )));
    }
    Ok(quotient(u)? + quotient(v)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> UnitGrid {
        UnitGrid::default()
    }

    #[test]
    fn free_sine_shot() {
        let s = integrate_ivp(&PiecewisePotential::zero(), grid(), PI * PI, 0.0, 1.0).unwrap();
        assert!(s.y_end.abs() < 1e-8);
        assert!((s.y[grid().cells() / 2] - 1.0 / PI).abs() < 1e-12);
        assert_eq!(s.zero_count, 0);
    }

    #[test]
    fn linear_solution() {
        let s = integrate_ivp(&PiecewisePotential::zero(), grid(), 0.0, 0.0, 1.0).unwrap();
        assert!((s.y_end - 1.0).abs() < 1e-14);
        assert!((s.v_end - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_shift_solution() {
        let c = 7.0;
        let lambda = 30.0;
        let q = PiecewisePotential::constant(-c).unwrap();
        let s = integrate_ivp(&q, grid(), lambda, 0.0, 1.0).unwrap();
        let k = (lambda - c).sqrt();
        for (t, y) in grid().nodes().zip(&s.y).step_by(97) {
            assert!((y - (k * t).sin() / k).abs() < 1e-12);
        }
    }

    #[test]
    fn divergence_is_reported() {
        let err = integrate_ivp(&PiecewisePotential::zero(), grid(), -1e4, 0.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
    }

    #[test]
    fn free_spectrum() {
        for m in 1..=4 {
            let e = dirichlet_eigen(&PiecewisePotential::zero(), m, grid()).unwrap();
            let exact = (m * m) as f64 * PI * PI;
            assert!((e.lambda - exact).abs() < 1e-6, "m = {m}: {}", e.lambda);
            assert_eq!(e.nodes.len(), m - 1);
            assert!((e.phi.lp_norm(2.0).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn index_is_validated() {
        assert!(dirichlet_eigen(&PiecewisePotential::zero(), 0, grid()).is_err());
        assert!(dirichlet_eigen(&PiecewisePotential::zero(), MAX_INDEX + 1, grid()).is_err());
    }

    #[test]
    fn eigen_sum_of_constant() {
        let r = 3.0;
        let s = eigen_sum(&PiecewisePotential::constant(-r).unwrap(), grid()).unwrap();
        assert!((s - (5.0 * PI * PI + 2.0 * r)).abs() < 1e-6);
    }

    #[test]
    fn rayleigh_examples() {
        let g = grid();
        let q = PiecewisePotential::zero();
        let u = SampledFunction::from_fn(g, |t| (PI * t).sin()).unwrap();
        let v2 = SampledFunction::from_fn(g, |t| (2.0 * PI * t).sin()).unwrap();
        let v3 = SampledFunction::from_fn(g, |t| (3.0 * PI * t).sin()).unwrap();
        assert!((rayleigh_sum(&u, &v2, &q).unwrap() - 5.0 * PI * PI).abs() < 1e-4);
        assert!((rayleigh_sum(&u, &v3, &q).unwrap() - 10.0 * PI * PI).abs() < 1e-3);
    }

    #[test]
    fn rayleigh_rejects_bad_pairs() {
        let g = grid();
        let q = PiecewisePotential::zero();
        let u = SampledFunction::from_fn(g, |t| (PI * t).sin()).unwrap();
        let w = SampledFunction::from_fn(g, |t| t * (1.0 - t)).unwrap();
        let z = SampledFunction::constant(g, 0.0).unwrap();
        assert!(matches!(rayleigh_sum(&u, &w, &q), Err(Error::InvalidInput(_))));
        assert!(matches!(rayleigh_sum(&u, &z, &q), Err(Error::InvalidInput(_))));
    }
}
