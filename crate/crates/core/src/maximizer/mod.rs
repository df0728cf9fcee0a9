//! The `L^1` maximizer of `lambda_1 + lambda_2`, built from the pendulum structure of its
//! active set, together with verification, optimality probes and the structure transition.

pub mod pendulum;
pub mod probes;
pub mod profile;
pub mod rstar;
pub mod verify;

use serde::{Deserialize, Serialize};

use crate::critical::{self, support_intervals, R_MAX};
use crate::error::{Error, Result};
use crate::function_space::UnitGrid;
use crate::newton::{self, NewtonOptions};

pub use pendulum::{pendulum_flow, PendulumTrajectory};
pub use probes::{dirac_transfer_probe, perturbation_probe, uniqueness_probe, DiracProbe, PerturbationProbe, UniquenessProbe};
pub use profile::{shoot_profile, MaximizerProfile, ProfileParams, ProfileRecord, Structure};
pub use rstar::{locate_r_star, structure_gap};
pub use verify::{verify_profile, CheckResult, VerificationReport, VerifyTolerances};

/// Which structure `assemble_maximizer` should build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureChoice {
    One,
    Two,
    Auto,
}

impl From<Structure> for StructureChoice {
    fn from(s: Structure) -> Self {
        match s {
            Structure::OneBump => StructureChoice::One,
            Structure::TwoBumpSymmetric => StructureChoice::Two,
        }
    }
}

/// Radius at which the critical system seeds the shooting parameters.
const SEED_RADIUS: f64 = 5.0;
const SEED_P: f64 = 15.0 / 14.0;
const SEED_THRESHOLD: f64 = 1e-2;
const ONE_BUMP_ALPHAS: [f64; 5] = [0.15, 0.2, 0.25, 0.3, 0.35];
const R_STEP: f64 = 0.5;
const R_STEP_MIN: f64 = 1e-3;

/// Shooting solver that remembers converged parameters and warm-starts from the
/// nearest one, continuing in `r` when the target is far away.
#[derive(Debug, Clone)]
pub struct MaximizerSolver {
    grid: UnitGrid,
    opts: NewtonOptions,
    solved: Vec<(Structure, f64, ProfileParams)>,
}

impl MaximizerSolver {
    pub fn new(grid: UnitGrid, opts: NewtonOptions) -> Self {
        Self {
            grid,
            opts,
            solved: Vec::new(),
        }
    }

    pub fn grid(&self) -> UnitGrid {
        self.grid
    }

    /// Newton on the shooting residuals from `guess`, without continuation.
    pub fn solve_from(&self, structure: Structure, r: f64, guess: ProfileParams) -> Result<ProfileParams> {
        let grid = self.grid;
        let f = |x: &[f64]| shoot_profile(&ProfileParams::from_slice(x, structure), structure, r, grid);
        let context = format!("{} maximizer at r = {r}", structure.label());
        let rep = newton::solve(f, &guess.to_vec(structure), &self.opts, &context)?;
        Ok(ProfileParams::from_slice(&rep.x, structure))
    }

    /// Converged parameters for `structure` at radius `r`.
    pub fn solve_params(&mut self, structure: Structure, r: f64, guess: Option<ProfileParams>) -> Result<ProfileParams> {
        check_radius(r)?;
        if let Some(g) = guess {
            let p = self.solve_from(structure, r, g)?;
            self.remember(structure, r, p);
            return Ok(p);
        }
        let start = match self.nearest(structure, r) {
            Some(s) => s,
            None => self.seed(structure, SEED_RADIUS)?,
        };
        self.continue_to(structure, start, r)
    }

    /// Builds and checks the profile. `Auto` solves both structures and keeps the
    /// admissible one with the larger objective.
    pub fn assemble(&mut self, r: f64, choice: StructureChoice, guess: Option<ProfileParams>) -> Result<MaximizerProfile> {
        check_radius(r)?;
        match choice {
            StructureChoice::One => self.assemble_structure(Structure::OneBump, r, guess),
            StructureChoice::Two => self.assemble_structure(Structure::TwoBumpSymmetric, r, guess),
            StructureChoice::Auto => {
                let two = self.assemble_structure(Structure::TwoBumpSymmetric, r, guess);
                let one = self.assemble_structure(Structure::OneBump, r, None);
                match (two, one) {
                    (Ok(t), Ok(o)) => Ok(if t.objective >= o.objective { t } else { o }),
                    (Ok(t), Err(_)) => Ok(t),
                    (Err(_), Ok(o)) => Ok(o),
                    (Err(e2), Err(e1)) => Err(combine_failures(r, e2, e1)),
                }
            }
        }
    }

    fn assemble_structure(&mut self, structure: Structure, r: f64, guess: Option<ProfileParams>) -> Result<MaximizerProfile> {
        let params = self.solve_params(structure, r, guess)?;
        let profile = MaximizerProfile::build(r, structure, params, params.c_check(), params.ell(), self.grid)?;
        profile.check_admissible()?;
        Ok(profile)
    }

    fn remember(&mut self, structure: Structure, r: f64, p: ProfileParams) {
        self.solved.push((structure, r, p));
    }

    fn nearest(&self, structure: Structure, r: f64) -> Option<(f64, ProfileParams)> {
        self.solved
            .iter()
            .filter(|(s, _, _)| *s == structure)
            .min_by(|a, b| (a.1 - r).abs().total_cmp(&(b.1 - r).abs()))
            .map(|&(_, r0, p)| (r0, p))
    }

    /// Initial parameters at `r0` from the critical system at `p = 15/14`.
    fn seed(&mut self, structure: Structure, r0: f64) -> Result<(f64, ProfileParams)> {
        if let Some(hit) = self.nearest(structure, r0).filter(|(r, _)| *r == r0) {
            return Ok(hit);
        }
        let base = match structure {
            Structure::TwoBumpSymmetric => {
                let sol = critical::solve_critical(SEED_P, r0, None, self.grid, &self.opts)?;
                let left = support_intervals(&sol.q, SEED_THRESHOLD)
                    .into_iter()
                    .next()
                    .ok_or_else(|| Error::invalid("critical solution has no support"))?;
                let beta = if left.1 < 0.5 { left.1 } else { 0.5 * (left.0 + 0.5) };
                let guess = ProfileParams {
                    a: sol.a,
                    b: sol.b,
                    xi: sol.xi,
                    eta: sol.eta,
                    alpha: left.0.max(1e-3),
                    beta,
                };
                self.solve_from(structure, r0, guess)?
            }
            Structure::OneBump => {
                let (_, two) = self.seed(Structure::TwoBumpSymmetric, r0)?;
                let mut last = None;
                let candidates = std::iter::once(two.alpha).chain(ONE_BUMP_ALPHAS);
                let mut found = None;
                for alpha in candidates {
                    match self.solve_from(structure, r0, ProfileParams { alpha, beta: 0.5, ..two }) {
                        Ok(p) => {
                            found = Some(p);
                            break;
                        }
                        Err(e) => last = Some(e),
                    }
                }
                match found {
                    Some(p) => p,
                    None => return Err(last.expect("at least one candidate")),
                }
            }
        };
        self.remember(structure, r0, base);
        Ok((r0, base))
    }

    /// Secant-predicted continuation in `r` from a solved point.
    fn continue_to(&mut self, structure: Structure, start: (f64, ProfileParams), target: f64) -> Result<ProfileParams> {
        let (mut r_cur, mut p_cur) = start;
        let mut prev: Option<(f64, ProfileParams)> = None;
        let mut step = R_STEP;
        while r_cur != target {
            let r_next = if (target - r_cur).abs() <= step {
                target
            } else {
                r_cur + step.copysign(target - r_cur)
            };
            let guess = match prev {
                Some((r_prev, p_prev)) => extrapolate(structure, (r_prev, p_prev), (r_cur, p_cur), r_next),
                None => p_cur,
            };
            match self.solve_from(structure, r_next, guess) {
                Ok(p) => {
                    prev = Some((r_cur, p_cur));
                    (r_cur, p_cur) = (r_next, p);
                    self.remember(structure, r_cur, p_cur);
                    step = (step * 1.5).min(R_STEP);
                }
                Err(e) => {
                    step *= 0.5;
                    if step < R_STEP_MIN {
                        return Err(e);
                    }
                }
            }
        }
        Ok(p_cur)
    }
}

fn extrapolate(structure: Structure, a: (f64, ProfileParams), b: (f64, ProfileParams), r: f64) -> ProfileParams {
    let s = (r - b.0) / (b.0 - a.0);
    let (va, vb) = (a.1.to_vec(structure), b.1.to_vec(structure));
    let v: Vec<f64> = va.iter().zip(&vb).map(|(x, y)| y + s * (y - x)).collect();
    ProfileParams::from_slice(&v, structure)
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r <= R_MAX) {
        return Err(Error::invalid(format!("radius must lie in (0, {R_MAX}], got {r}")));
    }
    Ok(())
}

fn combine_failures(r: f64, two: Error, one: Error) -> Error {
    let inadmissible = |e: &Error| matches!(e, Error::Inadmissible(_) | Error::PendulumRange { .. });
    let msg = format!("r = {r}: two-bump: {two}; one-bump: {one}");
    if inadmissible(&two) && inadmissible(&one) {
        Error::Inadmissible(msg)
    } else {
        Error::Convergence {
            iterations: 0,
            residual: f64::NAN,
            context: msg,
        }
    }
}

/// One-shot convenience over [`MaximizerSolver`] with default Newton options.
pub fn assemble_maximizer(
    r: f64,
    choice: StructureChoice,
    guess: Option<ProfileParams>,
    grid: UnitGrid,
) -> Result<MaximizerProfile> {
    MaximizerSolver::new(grid, NewtonOptions::default()).assemble(r, choice, guess)
}
