//! Numerical evidence that a profile is a local maximizer and that Newton finds it
//! from nearby starts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::profile::{MaximizerProfile, ProfileParams};
use super::MaximizerSolver;
use crate::error::Result;
use crate::function_space::{Atom, PiecewisePotential, RadonMeasure, SampledFunction, Segment, SegmentKind};
use crate::mde::mde_eigen_sum;
use crate::sturm_liouville::eigen_sum;

/// Result of moving mass from the density into a point mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiracProbe {
    pub epsilon: f64,
    /// `lambda_1 + lambda_2` of the unperturbed measure.
    pub base: f64,
    pub positions: Vec<f64>,
    pub sums: Vec<f64>,
}

impl DiracProbe {
    /// Whether every transfer strictly lowered the eigenvalue sum.
    pub fn all_decrease(&self) -> bool {
        self.sums.iter().all(|s| *s < self.base)
    }
}

/// Replaces the density `q` by `(1 - eps/r) q` plus an atom of mass `-eps` at each of
/// `per_interval` evenly spaced interior points of every active interval. Total
/// variation stays `r`.
pub fn dirac_transfer_probe(profile: &MaximizerProfile, epsilon: f64, per_interval: usize) -> Result<DiracProbe> {
    let grid = profile.grid();
    let base = mde_eigen_sum(&RadonMeasure::from_density(profile.potential.clone()), grid)?;
    let scaled = profile.potential.scaled(1.0 - epsilon / profile.r);
    let positions: Vec<f64> = profile
        .intervals
        .iter()
        .flat_map(|&(s, e)| (1..=per_interval).map(move |i| s + (e - s) * i as f64 / (per_interval + 1) as f64))
        .collect();
    let sums = positions
        .iter()
        .map(|&pos| {
            let mu = RadonMeasure::new(Some(scaled.clone()), vec![Atom { pos, mass: -epsilon }])?;
            mde_eigen_sum(&mu, grid)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiracProbe {
        epsilon,
        base,
        positions,
        sums,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationProbe {
    pub magnitude: f64,
    pub base: f64,
    /// `eigen_sum(perturbed) - base`, one entry per trial.
    pub increases: Vec<f64>,
}

impl PerturbationProbe {
    pub fn max_increase(&self) -> f64 {
        self.increases.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

const PERTURBATION_MODES: usize = 6;

/// Random perturbations `q (1 + magnitude * psi)` with `|psi| <= 1` built from a few
/// sine modes per active interval and shifted so `int q psi = 0`. They keep `q <= 0`,
/// its support, and `||q||_1`.
pub fn perturbation_probe(profile: &MaximizerProfile, magnitude: f64, trials: usize, seed: u64) -> Result<PerturbationProbe> {
    let grid = profile.grid();
    let base = eigen_sum(&profile.potential, grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut increases = Vec::with_capacity(trials);
    for _ in 0..trials {
        let coeffs: Vec<Vec<f64>> = profile
            .intervals
            .iter()
            .map(|_| (0..PERTURBATION_MODES).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let modes = |t: f64| -> f64 {
            profile
                .intervals
                .iter()
                .zip(&coeffs)
                .filter(|((s, e), _)| *s < t && t < *e)
                .map(|(&(s, e), c)| {
                    let x = (t - s) / (e - s);
                    c.iter()
                        .enumerate()
                        .map(|(j, cj)| cj * ((j + 1) as f64 * std::f64::consts::PI * x).sin())
                        .sum::<f64>()
                })
                .sum()
        };
        let raw = SampledFunction::from_fn(grid, modes)?;
        let mean = profile.potential.integrate_against(&raw) / profile.potential.integral();
        let centred = raw.map(|v| v - mean);
        let peak = centred.max_abs().max(f64::MIN_POSITIVE);
        let psi = centred.map(|v| magnitude * v / peak);
        let perturbed = modulate(&profile.potential, &psi)?;
        increases.push(eigen_sum(&perturbed, grid)? - base);
    }
    Ok(PerturbationProbe {
        magnitude,
        base,
        increases,
    })
}

/// `q (1 + psi)` segment by segment.
fn modulate(q: &PiecewisePotential, psi: &SampledFunction) -> Result<PiecewisePotential> {
    let segments = q
        .segments()
        .iter()
        .map(|seg| {
            let kind = match &seg.kind {
                SegmentKind::Smooth(f) => SegmentKind::Smooth(f.zip_with(psi, |v, w| v * (1.0 + w))?),
                SegmentKind::Zero => SegmentKind::Zero,
                SegmentKind::Constant(c) => {
                    SegmentKind::Smooth(psi.map(|w| c * (1.0 + w)))
                }
            };
            Ok(Segment {
                start: seg.start,
                end: seg.end,
                kind,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PiecewisePotential::new(segments)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessProbe {
    /// Converged parameter vectors, one per successful start.
    pub solutions: Vec<Vec<f64>>,
    pub failures: usize,
    /// Largest max-norm distance between a converged vector and the first one.
    pub spread: f64,
}

impl UniquenessProbe {
    pub fn is_unique(&self, tol: f64) -> bool {
        !self.solutions.is_empty() && self.spread <= tol
    }
}

/// Newton from `starts` random relative perturbations of size `scale` around `params`.
pub fn uniqueness_probe(
    solver: &MaximizerSolver,
    profile: &MaximizerProfile,
    starts: usize,
    scale: f64,
    seed: u64,
) -> UniquenessProbe {
    let structure = profile.structure;
    let center = profile.params.to_vec(structure);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut solutions: Vec<Vec<f64>> = Vec::new();
    let mut failures = 0;
    for _ in 0..starts {
        let start: Vec<f64> = center.iter().map(|v| v * (1.0 + scale * rng.gen_range(-1.0..1.0))).collect();
        match solver.solve_from(structure, profile.r, ProfileParams::from_slice(&start, structure)) {
            Ok(p) => solutions.push(p.to_vec(structure)),
            Err(_) => failures += 1,
        }
    }
    let spread = solutions
        .iter()
        .map(|s| s.iter().zip(&solutions[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    UniquenessProbe {
        solutions,
        failures,
        spread,
    }
}
