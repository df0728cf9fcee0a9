//! The radius where the maximizer switches from two bumps to one.

use super::profile::Structure;
use super::MaximizerSolver;
use crate::error::{Error, Result};

/// `objective(two) - objective(one)` at `r`.
///
/// A one-bump candidate that converges but violates admissibility means `r` lies below
/// the transition, so the gap is `+infinity` whatever the two-bump solve does. A
/// two-bump failure next to an admissible one-bump counts as `-infinity`. Errors only
/// when neither structure yields usable information.
pub fn structure_gap(solver: &mut MaximizerSolver, r: f64) -> Result<f64> {
    let one = solver.assemble(r, Structure::OneBump.into(), None);
    let two = solver.assemble(r, Structure::TwoBumpSymmetric.into(), None);
    match (two, one) {
        (Ok(t), Ok(o)) => Ok(t.objective - o.objective),
        (_, Err(Error::Inadmissible(_) | Error::PendulumRange { .. })) => Ok(f64::INFINITY),
        (Ok(_), Err(_)) => Ok(f64::INFINITY),
        (Err(_), Ok(_)) => Ok(f64::NEG_INFINITY),
        (Err(e), Err(_)) => Err(e),
    }
}

/// Gaps at or below this are treated as "structures coincide": past the merge the
/// two-bump solve may return the one-bump profile itself, and the gap is then pure
/// solver noise.
pub const MERGE_GAP: f64 = 1e-7;

/// Bisection for the radius where the two-bump structure stops beating the one-bump
/// structure by more than [`MERGE_GAP`].
pub fn locate_r_star(solver: &mut MaximizerSolver, rmin: f64, rmax: f64, tol: f64) -> Result<f64> {
    if !(rmin > 0.0 && rmin < rmax) {
        return Err(Error::invalid(format!("need 0 < rmin < rmax, got [{rmin}, {rmax}]")));
    }
    if !(tol >= 1e-4) {
        return Err(Error::invalid(format!("tolerance must be at least 1e-4, got {tol}")));
    }
    let mut two_wins = |r: f64| structure_gap(solver, r).map(|g| g > MERGE_GAP);
    let (mut lo, mut hi) = (rmin, rmax);
    let lo_side = two_wins(lo)?;
    if lo_side == two_wins(hi)? {
        return Err(Error::Bracket { rmin, rmax });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if two_wins(mid)? == lo_side {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
