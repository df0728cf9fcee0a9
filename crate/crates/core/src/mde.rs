//! Measure differential equations `D(D+y) + lambda y dt + y dmu = 0`.
//!
//! Between atoms the equation is the ordinary one with the measure's density as potential.
//! An atom of mass `m` at `tau` makes the right derivative jump by `-m y(tau)`. Atoms are
//! moved to the nearest grid node (never node 0), where the jump is applied exactly.

use crate::error::{Error, Result};
use crate::function_space::{count_sign_changes, PiecewisePotential, RadonMeasure, UnitGrid};
use crate::sturm_liouville::{
    eigen_result, find_eigenvalue, integrate_samples, shoot, Discretization, EigenResult,
    SEARCH_LIMIT,
};

/// Derivative jump realized at an atom node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub node: usize,
    pub mass: f64,
    /// Left derivative `D-y` at the node.
    pub before: f64,
    /// Right derivative `D+y` at the node, as stored in [`MdeSolution::dy`].
    pub after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdeSolution {
    pub grid: UnitGrid,
    pub y: Vec<f64>,
    /// Right derivative at each node (post-jump at atom nodes).
    pub dy: Vec<f64>,
    pub jumps: Vec<Jump>,
    /// Sign changes of `y` over the interior nodes.
    pub zero_count: usize,
}

impl MdeSolution {
    /// Largest `|(after - before) + mass * y(node)|` over the atoms, recomputed from the
    /// stored samples.
    pub fn jump_defect(&self) -> f64 {
        self.jumps
            .iter()
            .map(|j| ((j.after - j.before) + j.mass * self.y[j.node]).abs())
            .fold(0.0, f64::max)
    }
}

/// Atom masses merged per grid node, sorted by node.
fn snapped_atoms(mu: &RadonMeasure, grid: &UnitGrid) -> Result<Vec<(usize, f64)>> {
    let mut out: Vec<(usize, f64)> = Vec::new();
    for a in mu.atoms() {
        if a.pos <= 0.0 {
            return Err(Error::invalid("atoms at t = 0 are not allowed"));
        }
        let k = grid.nearest(a.pos).max(1);
        match out.last_mut() {
            Some((node, mass)) if *node == k => *mass += a.mass,
            _ => out.push((k, a.mass)),
        }
    }
    out.retain(|(_, m)| *m != 0.0);
    Ok(out)
}

fn discretize(mu: &RadonMeasure, grid: UnitGrid) -> Discretization {
    match mu.density() {
        Some(q) => Discretization::new(q, grid),
        None => Discretization::new(&PiecewisePotential::zero(), grid),
    }
}

/// Solves `D(D+y) + lambda y dt + y dmu = 0` with `y(0) = y0`, `D+y(0) = v0`.
pub fn mde_integrate(mu: &RadonMeasure, grid: UnitGrid, lambda: f64, y0: f64, v0: f64) -> Result<MdeSolution> {
    let atoms = snapped_atoms(mu, &grid)?;
    let disc = discretize(mu, grid);
    let (y, dy) = integrate_samples(&disc, lambda, y0, v0, &atoms)?;
    let jumps = atoms
        .iter()
        .map(|&(node, mass)| Jump {
            node,
            mass,
            before: dy[node] + mass * y[node],
            after: dy[node],
        })
        .collect();
    let zero_count = count_sign_changes(&y[1..grid.cells()]);
    Ok(MdeSolution {
        grid,
        y,
        dy,
        jumps,
        zero_count,
    })
}

/// The `m`-th Dirichlet eigenvalue of the measure problem.
pub fn mde_dirichlet_eigen(mu: &RadonMeasure, m: usize, grid: UnitGrid) -> Result<EigenResult> {
    let atoms = snapped_atoms(mu, &grid)?;
    let disc = discretize(mu, grid);
    let lambda = find_eigenvalue(|l| shoot(&disc, l, &atoms), m, mu.total_variation(), SEARCH_LIMIT)?;
    let (y, _) = integrate_samples(&disc, lambda, 0.0, 1.0, &atoms)?;
    eigen_result(grid, m, lambda, y)
}

/// `lambda_1(mu) + lambda_2(mu)`.
pub fn mde_eigen_sum(mu: &RadonMeasure, grid: UnitGrid) -> Result<f64> {
    let atoms = snapped_atoms(mu, &grid)?;
    let disc = discretize(mu, grid);
    let v = mu.total_variation();
    let l1 = find_eigenvalue(|l| shoot(&disc, l, &atoms), 1, v, SEARCH_LIMIT)?;
    let l2 = find_eigenvalue(|l| shoot(&disc, l, &atoms), 2, v, SEARCH_LIMIT)?;
    Ok(l1 + l2)
}
