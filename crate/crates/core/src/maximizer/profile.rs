//! Candidate `L^1` maximizers built on `[0, 1/2]` and extended by symmetry.
//!
//! Off the active set the potential vanishes and `(y, z)` are free sines. On an active
//! interval `y^2 + z^2 = 1`, so `(y, z) = (cos(theta/2), sin(theta/2))` where `theta`
//! follows the pendulum `theta'' + ell sin(theta) = 0` with `ell = eta - xi`, and the
//! potential is `c + ell cos(theta)` with `c = a^2 + b^2 - eta - xi`.
//!
//! Integrals of `y^2`, `z^2` and `q` over a bump reduce to its length `L` and
//! `C = int cos(theta)`, which the pendulum integrator carries as a third state:
//! `int y^2 = (L + C)/2`, `int z^2 = (L - C)/2`, `int q = c L + ell C`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::pendulum::{flow, step, steps_for, PendulumState};
use crate::error::{Error, Result};
use crate::function_space::{LpNorm, PiecewisePotential, SampledFunction, Segment, SegmentKind, UnitGrid};

/// Support shape of the maximizing potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Structure {
    /// One active interval `[alpha, 1 - alpha]`.
    #[serde(rename = "one")]
    OneBump,
    /// Active intervals `[alpha, beta]` and `[1 - beta, 1 - alpha]`.
    #[serde(rename = "two")]
    TwoBumpSymmetric,
}

impl Structure {
    pub fn unknowns(self) -> usize {
        match self {
            Structure::OneBump => 5,
            Structure::TwoBumpSymmetric => 6,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Structure::OneBump => "one",
            Structure::TwoBumpSymmetric => "two",
        }
    }
}

/// Shooting unknowns. For [`Structure::OneBump`] `beta` is fixed at `1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileParams {
    pub a: f64,
    pub b: f64,
    pub xi: f64,
    pub eta: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl ProfileParams {
    pub fn to_vec(self, structure: Structure) -> Vec<f64> {
        let mut v = vec![self.a, self.b, self.xi, self.eta, self.alpha];
        if structure == Structure::TwoBumpSymmetric {
            v.push(self.beta);
        }
        v
    }

    pub fn from_slice(x: &[f64], structure: Structure) -> Self {
        Self {
            a: x[0],
            b: x[1],
            xi: x[2],
            eta: x[3],
            alpha: x[4],
            beta: match structure {
                Structure::OneBump => 0.5,
                Structure::TwoBumpSymmetric => x[5],
            },
        }
    }

    /// `a^2 + b^2 - eta - xi`.
    pub fn c_check(&self) -> f64 {
        self.a * self.a + self.b * self.b - self.eta - self.xi
    }

    /// `eta - xi`.
    pub fn ell(&self) -> f64 {
        self.eta - self.xi
    }

    /// Right end of the first active interval.
    fn bump_end(&self, structure: Structure) -> f64 {
        match structure {
            Structure::OneBump => 0.5,
            Structure::TwoBumpSymmetric => self.beta,
        }
    }

    fn validate(&self, structure: Structure) -> Result<()> {
        let all = [self.a, self.b, self.xi, self.eta, self.alpha, self.beta];
        if !all.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("non-finite profile parameters"));
        }
        if !(self.xi > 0.0 && self.eta > 0.0) {
            return Err(Error::invalid(format!(
                "eigenvalues must be positive, got xi = {}, eta = {}",
                self.xi, self.eta
            )));
        }
        let ordered = match structure {
            Structure::OneBump => 0.0 < self.alpha && self.alpha < 0.5,
            Structure::TwoBumpSymmetric => 0.0 < self.alpha && self.alpha < self.beta && self.beta < 0.5,
        };
        if !ordered {
            return Err(Error::invalid(format!(
                "active interval out of order: alpha = {}, beta = {}",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

/// `(y, y')` after time `s` of `y'' + k^2 y = 0` from `(y0, yp0)`.
fn free_step(y0: f64, yp0: f64, k: f64, s: f64) -> (f64, f64) {
    let (sn, cs) = (k * s).sin_cos();
    (y0 * cs + yp0 / k * sn, -y0 * k * sn + yp0 * cs)
}

/// `int_0^T (A cos ks + B sin ks)^2 ds` with `A = y0`, `B = yp0 / k`.
fn free_square_integral(y0: f64, yp0: f64, k: f64, t: f64) -> f64 {
    let (a, b) = (y0, yp0 / k);
    let s2 = (2.0 * k * t).sin() / (4.0 * k);
    a * a * (0.5 * t + s2) + b * b * (0.5 * t - s2) + a * b * (k * t).sin().powi(2) / k
}

/// Everything the residuals need from a shot over `[0, 1/2]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct HalfShot {
    pub(crate) residuals: [f64; 6],
    pub(crate) len: usize,
}

fn polar_entry(p: &ProfileParams) -> (f64, f64, [f64; 4]) {
    let (kx, ke) = (p.xi.sqrt(), p.eta.sqrt());
    let (y, yp) = free_step(0.0, p.a, kx, p.alpha);
    let (z, zp) = free_step(0.0, p.b, ke, p.alpha);
    let theta = 2.0 * z.atan2(y);
    let omega = 2.0 * (y * zp - z * yp);
    (theta, omega, [y, yp, z, zp])
}

pub(crate) fn half_shot(p: &ProfileParams, structure: Structure, r: f64, steps_per_unit: usize) -> Result<HalfShot> {
    p.validate(structure)?;
    let (kx, ke) = (p.xi.sqrt(), p.eta.sqrt());
    let (ell, c) = (p.ell(), p.c_check());
    let (theta_alpha, omega_alpha, [y, yp, z, zp]) = polar_entry(p);
    if !(theta_alpha.abs() < PI) {
        return Err(Error::PendulumRange {
            t: p.alpha,
            theta: theta_alpha,
        });
    }
    let r1 = y * y + z * z - 1.0;
    let r2 = y * yp + z * zp;

    let end = p.bump_end(structure);
    let len = end - p.alpha;
    let s = flow(ell, [theta_alpha, omega_alpha, 0.0], p.alpha, len, steps_for(len, steps_per_unit))?;
    let cos_int = s[2];
    let sin2 = |k: f64, t: f64| 0.5 * t - (2.0 * k * t).sin() / (4.0 * k);
    let mut y2 = p.a * p.a / p.xi * sin2(kx, p.alpha) + 0.5 * (len + cos_int);
    let mut z2 = p.b * p.b / p.eta * sin2(ke, p.alpha) + 0.5 * (len - cos_int);
    let half_mass = -(c * len + ell * cos_int);

    let residuals = match structure {
        Structure::OneBump => [r1, r2, s[0], 2.0 * (y2 - z2), 2.0 * half_mass - r, 0.0],
        Structure::TwoBumpSymmetric => {
            let (sn, cs) = (0.5 * s[0]).sin_cos();
            let (y1, z1) = (cs, sn);
            let (yp1, zp1) = (-0.5 * s[1] * sn, 0.5 * s[1] * cs);
            let t = 0.5 - p.beta;
            let (_, yp_mid) = free_step(y1, yp1, kx, t);
            let (z_mid, _) = free_step(z1, zp1, ke, t);
            y2 += free_square_integral(y1, yp1, kx, t);
            z2 += free_square_integral(z1, zp1, ke, t);
            [r1, r2, yp_mid, z_mid, 2.0 * (y2 - z2), 2.0 * half_mass - r]
        }
    };
    Ok(HalfShot {
        residuals,
        len: structure.unknowns(),
    })
}

/// Residuals of a candidate profile: 6 for the two-bump structure, 5 for one bump.
///
/// Two bumps: `u(alpha) - 1`, `u'(alpha)/2`, `y'(1/2)`, `z(1/2)`, `||y||^2 - ||z||^2`, and
/// the potential's mass minus `r`. One bump: the same with `theta(1/2)` replacing the two
/// midpoint conditions. The mass is the signed `-int q`, which equals `||q||_1` exactly
/// when the candidate is admissible (`q <= 0`).
pub fn shoot_profile(params: &ProfileParams, structure: Structure, r: f64, grid: UnitGrid) -> Result<Vec<f64>> {
    let shot = half_shot(params, structure, r, grid.cells())?;
    Ok(shot.residuals[..shot.len].to_vec())
}

/// A fully sampled candidate maximizer.
#[derive(Debug, Clone)]
pub struct MaximizerProfile {
    pub r: f64,
    pub structure: Structure,
    pub params: ProfileParams,
    pub c_check: f64,
    pub ell: f64,
    /// Active intervals, left to right.
    pub intervals: Vec<(f64, f64)>,
    /// Pendulum angle on active nodes; the polar angle `2 atan2(z, y)` elsewhere.
    pub theta: SampledFunction,
    pub y: SampledFunction,
    pub z: SampledFunction,
    /// Node values of [`MaximizerProfile::potential`].
    pub qcheck: SampledFunction,
    pub u: SampledFunction,
    pub potential: PiecewisePotential,
    pub objective: f64,
    /// Shooting residual max-norm at the parameters.
    pub residual: f64,
}

impl MaximizerProfile {
    /// Samples the profile for given parameters. `c_check` and `ell` are normally
    /// `a^2 + b^2 - eta - xi` and `eta - xi`; other values produce the corresponding
    /// (inconsistent) profile, which verification will flag.
    pub fn build(
        r: f64,
        structure: Structure,
        params: ProfileParams,
        c_check: f64,
        ell: f64,
        grid: UnitGrid,
    ) -> Result<Self> {
        params.validate(structure)?;
        let n = grid.cells();
        let h = grid.step();
        let alpha = params.alpha;
        let end = params.bump_end(structure);
        let (kx, ke) = (params.xi.sqrt(), params.eta.sqrt());
        let (theta_alpha, omega_alpha, _) = polar_entry(&params);
        if !(theta_alpha.abs() < PI) {
            return Err(Error::PendulumRange {
                t: alpha,
                theta: theta_alpha,
            });
        }

        // Pendulum angle at every node, integrated outward from alpha in both directions.
        // Values outside the active interval feed only interpolation stencils.
        let mut ext: Vec<PendulumState> = vec![[0.0; 3]; n + 1];
        let k0 = ((alpha * n as f64).floor() as usize + 1).min(n);
        let start = [theta_alpha, omega_alpha, 0.0];
        let mut s = step(ell, start, grid.node(k0) - alpha);
        ext[k0] = s;
        for slot in &mut ext[k0 + 1..] {
            s = step(ell, s, h);
            *slot = s;
        }
        let mut s = step(ell, start, grid.node(k0 - 1) - alpha);
        ext[k0 - 1] = s;
        for k in (0..k0 - 1).rev() {
            s = step(ell, s, -h);
            ext[k] = s;
        }
        let exit_state = {
            let span = end - alpha;
            flow(ell, start, alpha, span, steps_for(span, n))?
        };

        let half = n / 2;
        let mut y = vec![0.0; n + 1];
        let mut z = vec![0.0; n + 1];
        let mut theta = vec![0.0; n + 1];
        for k in 0..=half {
            let t = grid.node(k);
            if t <= alpha {
                y[k] = free_step(0.0, params.a, kx, t).0;
                z[k] = free_step(0.0, params.b, ke, t).0;
                theta[k] = 2.0 * z[k].atan2(y[k]);
            } else if t <= end {
                let th = ext[k][0];
                if !(th.abs() < PI) {
                    return Err(Error::PendulumRange { t, theta: th });
                }
                theta[k] = th;
                y[k] = (0.5 * th).cos();
                z[k] = (0.5 * th).sin();
            } else {
                let [th, om, _] = exit_state;
                let (sn, cs) = (0.5 * th).sin_cos();
                y[k] = free_step(cs, -0.5 * om * sn, kx, t - end).0;
                z[k] = free_step(sn, 0.5 * om * cs, ke, t - end).0;
                theta[k] = 2.0 * z[k].atan2(y[k]);
            }
        }
        for k in half + 1..=n {
            y[k] = y[n - k];
            z[k] = -z[n - k];
            theta[k] = -theta[n - k];
        }

        let bump_values: Vec<f64> = ext.iter().map(|s| c_check + ell * s[0].cos()).collect();
        let smooth = |v: Vec<f64>| SampledFunction::new(grid, v).map(SegmentKind::Smooth);
        let mirrored: Vec<f64> = (0..=n).map(|k| bump_values[n - k]).collect();
        let seg = |start: f64, end: f64, kind: SegmentKind| Segment { start, end, kind };
        let (segments, intervals) = match structure {
            Structure::TwoBumpSymmetric => {
                let beta = params.beta;
                (
                    vec![
                        seg(0.0, alpha, SegmentKind::Zero),
                        seg(alpha, beta, smooth(bump_values)?),
                        seg(beta, 1.0 - beta, SegmentKind::Zero),
                        seg(1.0 - beta, 1.0 - alpha, smooth(mirrored)?),
                        seg(1.0 - alpha, 1.0, SegmentKind::Zero),
                    ],
                    vec![(alpha, beta), (1.0 - beta, 1.0 - alpha)],
                )
            }
            Structure::OneBump => {
                let symmetric: Vec<f64> = (0..=n)
                    .map(|k| if k <= half { bump_values[k] } else { mirrored[k] })
                    .collect();
                (
                    vec![
                        seg(0.0, alpha, SegmentKind::Zero),
                        seg(alpha, 1.0 - alpha, smooth(symmetric)?),
                        seg(1.0 - alpha, 1.0, SegmentKind::Zero),
                    ],
                    vec![(alpha, 1.0 - alpha)],
                )
            }
        };
        let potential = PiecewisePotential::new(segments)?;
        let qcheck = SampledFunction::from_fn(grid, |t| potential.eval(t))?;
        let y = SampledFunction::new(grid, y)?;
        let z = SampledFunction::new(grid, z)?;
        let u = y.zip_with(&z, |a, b| a * a + b * b)?;
        let residual = half_shot(&params, structure, r, n)
            .map(|s| s.residuals.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
            .unwrap_or(f64::INFINITY);
        Ok(Self {
            r,
            structure,
            params,
            c_check,
            ell,
            intervals,
            theta: SampledFunction::new(grid, theta)?,
            y,
            z,
            qcheck,
            u,
            potential,
            objective: params.xi + params.eta,
            residual,
        })
    }

    pub fn grid(&self) -> UnitGrid {
        *self.y.grid()
    }

    /// Whether node `k` lies strictly inside an active interval.
    pub fn is_active(&self, k: usize) -> bool {
        let t = self.grid().node(k);
        self.intervals.iter().any(|&(s, e)| s < t && t < e)
    }

    /// The same profile with its bump potential rebuilt from `c_check + delta`.
    pub fn with_perturbed_c_check(&self, delta: f64) -> Result<Self> {
        Self::build(
            self.r,
            self.structure,
            self.params,
            self.c_check + delta,
            self.ell,
            self.grid(),
        )
    }

    /// Checks the sign, range and ordering conditions a maximizer must satisfy.
    pub fn check_admissible(&self) -> Result<()> {
        if !(self.ell > 0.0) {
            return Err(Error::Inadmissible(format!("ell = {} is not positive", self.ell)));
        }
        let sup = self.potential.sup();
        if sup > 1e-10 {
            return Err(Error::Inadmissible(format!(
                "potential is positive somewhere (max q = {sup:e})"
            )));
        }
        let u_excess = (0..self.grid().len())
            .filter(|&k| !self.is_active(k))
            .map(|k| self.u.values()[k] - 1.0)
            .fold(f64::NEG_INFINITY, f64::max);
        if u_excess > 1e-8 {
            return Err(Error::Inadmissible(format!(
                "y^2 + z^2 exceeds 1 off the active set by {u_excess:e}"
            )));
        }
        Ok(())
    }

    /// `||q||_1`.
    pub fn mass(&self) -> f64 {
        self.potential.lp_norm(1.0).expect("valid exponent")
    }

    pub fn to_record(&self) -> ProfileRecord {
        ProfileRecord {
            r: self.r,
            structure: self.structure,
            a: self.params.a,
            b: self.params.b,
            xi: self.params.xi,
            eta: self.params.eta,
            c_check: self.c_check,
            ell: self.ell,
            intervals: self.intervals.iter().map(|&(s, e)| [s, e]).collect(),
            objective: self.objective,
            grid_n: self.grid().cells(),
            q: self.qcheck.values().to_vec(),
            y: self.y.values().to_vec(),
            z: self.z.values().to_vec(),
            theta: self.theta.values().to_vec(),
        }
    }

    /// Rebuilds a profile from its serialized form and checks that the stored samples
    /// match the stored parameters.
    pub fn from_record(rec: &ProfileRecord) -> Result<Self> {
        let grid = UnitGrid::new(rec.grid_n)?;
        let first = rec
            .intervals
            .first()
            .ok_or_else(|| Error::invalid("profile lists no active interval"))?;
        let params = ProfileParams {
            a: rec.a,
            b: rec.b,
            xi: rec.xi,
            eta: rec.eta,
            alpha: first[0],
            beta: match rec.structure {
                Structure::OneBump => 0.5,
                Structure::TwoBumpSymmetric => first[1],
            },
        };
        let profile = Self::build(rec.r, rec.structure, params, rec.c_check, rec.ell, grid)?;
        let stored = [("q", &rec.q), ("y", &rec.y), ("z", &rec.z), ("theta", &rec.theta)];
        let rebuilt = [&profile.qcheck, &profile.y, &profile.z, &profile.theta];
        for ((name, values), f) in stored.iter().zip(rebuilt) {
            if values.len() != grid.len() {
                return Err(Error::invalid(format!(
                    "stored {name} has {} samples, expected {}",
                    values.len(),
                    grid.len()
                )));
            }
            let gap = values
                .iter()
                .zip(f.values())
                .map(|(a, b)| (a - b).abs() / (1.0 + b.abs()))
                .fold(0.0, f64::max);
            if !(gap < 1e-9) {
                return Err(Error::invalid(format!(
                    "stored {name} samples differ from the profile parameters by {gap:e}"
                )));
            }
        }
        Ok(profile)
    }
}

/// Serialized profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub r: f64,
    pub structure: Structure,
    pub a: f64,
    pub b: f64,
    pub xi: f64,
    pub eta: f64,
    pub c_check: f64,
    pub ell: f64,
    pub intervals: Vec<[f64; 2]>,
    pub objective: f64,
    pub grid_n: usize,
    pub q: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub theta: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_square_integral_matches_quadrature() {
        let (y0, yp0, k, t) = (0.7, -1.3, 5.5, 0.3);
        let m = 20_000;
        let h = t / m as f64;
        let num: f64 = (0..m)
            .map(|i| {
                let s = (i as f64 + 0.5) * h;
                free_step(y0, yp0, k, s).0.powi(2) * h
            })
            .sum();
        assert!((num - free_square_integral(y0, yp0, k, t)).abs() < 1e-9);
    }

    #[test]
    fn ordering_is_validated() {
        let p = ProfileParams {
            a: 2.6,
            b: 5.8,
            xi: 15.7,
            eta: 48.3,
            alpha: 0.3,
            beta: 0.25,
        };
        let g = UnitGrid::default();
        assert!(matches!(
            shoot_profile(&p, Structure::TwoBumpSymmetric, 5.0, g),
            Err(Error::InvalidInput(_))
        ));
        assert_eq!(shoot_profile(&p, Structure::OneBump, 5.0, g).unwrap().len(), 5);
    }
}
