//! RK4 for the pendulum `theta'' + ell sin(theta) = 0`, carrying `int cos(theta)` along.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `(theta, omega, int cos theta)`.
pub(crate) type PendulumState = [f64; 3];

#[inline]
fn field(ell: f64, s: PendulumState) -> PendulumState {
    [s[1], -ell * s[0].sin(), s[0].cos()]
}

/// One RK4 step of size `h` (negative for backward integration).
#[inline]
pub(crate) fn step(ell: f64, s: PendulumState, h: f64) -> PendulumState {
    let add = |a: PendulumState, k: PendulumState, c: f64| [a[0] + c * k[0], a[1] + c * k[1], a[2] + c * k[2]];
    let k1 = field(ell, s);
    let k2 = field(ell, add(s, k1, 0.5 * h));
    let k3 = field(ell, add(s, k2, 0.5 * h));
    let k4 = field(ell, add(s, k3, h));
    [
        s[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        s[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        s[2] + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    ]
}

/// Integrates over `span` in `steps` equal steps and fails if `theta` leaves `(-pi, pi)`.
pub(crate) fn flow(ell: f64, mut s: PendulumState, t0: f64, span: f64, steps: usize) -> Result<PendulumState> {
    let h = span / steps as f64;
    for i in 1..=steps {
        s = step(ell, s, h);
        if !(s[0].abs() < PI) {
            return Err(Error::PendulumRange {
                t: t0 + i as f64 * h,
                theta: s[0],
            });
        }
    }
    Ok(s)
}

/// Step count that keeps the step at or below `1 / steps_per_unit`.
pub(crate) fn steps_for(span: f64, steps_per_unit: usize) -> usize {
    ((span.abs() * steps_per_unit as f64).ceil() as usize).max(1)
}

/// Samples of a pendulum trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PendulumTrajectory {
    pub ell: f64,
    pub t: Vec<f64>,
    pub theta: Vec<f64>,
    pub omega: Vec<f64>,
}

impl PendulumTrajectory {
    /// `omega^2 / 2 - ell cos(theta)` at sample `i`.
    pub fn energy(&self, i: usize) -> f64 {
        0.5 * self.omega[i] * self.omega[i] - self.ell * self.theta[i].cos()
    }

    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.energy(0);
        (0..self.t.len())
            .map(|i| (self.energy(i) - e0).abs())
            .fold(0.0, f64::max)
    }
}

/// Trajectory from `(theta0, omega0)` at `from` to `to`, with at least `steps_per_unit`
/// steps per unit time.
pub fn pendulum_flow(
    ell: f64,
    theta0: f64,
    omega0: f64,
    from: f64,
    to: f64,
    steps_per_unit: usize,
) -> Result<PendulumTrajectory> {
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(Error::invalid(format!("pendulum coefficient must be positive, got {ell}")));
    }
    if !(theta0.abs() < PI) || !omega0.is_finite() {
        return Err(Error::invalid("initial angle must lie in (-pi, pi) with finite velocity"));
    }
    if !(0.0 <= from && from <= to && to <= 1.0) {
        return Err(Error::invalid(format!("time span [{from}, {to}] is not inside [0, 1]")));
    }
    let steps = steps_for(to - from, steps_per_unit.max(1));
    let h = (to - from) / steps as f64;
    let mut traj = PendulumTrajectory {
        ell,
        t: vec![from],
        theta: vec![theta0],
        omega: vec![omega0],
    };
    let mut s = [theta0, omega0, 0.0];
    for i in 1..=steps {
        s = flow(ell, s, from + (i - 1) as f64 * h, h, 1)?;
        traj.t.push(from + i as f64 * h);
        traj.theta.push(s[0]);
        traj.omega.push(s[1]);
    }
    Ok(traj)
}
