//! Dirichlet eigenvalues of `y'' + (lambda + q) y = 0` on `[0, 1]`, their measure-valued
//! generalization, and the potentials that maximize `lambda_1 + lambda_2` under an `L^p`
//! constraint.
//!
//! * [`function_space`]: grids, sampled functions, piecewise potentials, measures, norms.
//! * [`sturm_liouville`]: RK4 shooting, eigenvalues by oscillation counting, Rayleigh sums.
//! * [`mde`]: the same for measure differential equations with Dirac atoms.
//! * [`critical`]: the coupled nonlinear system satisfied by the `L^p` maximizer, `p > 1`.
//! * [`maximizer`]: the `L^1` maximizer built from free sines and pendulum arcs.
//! * [`cli`]: the `slopt` command-line front end.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod critical;
pub mod error;
pub mod function_space;
pub mod maximizer;
pub mod mde;
pub mod newton;
pub mod roots;
pub mod sturm_liouville;

pub use error::{Error, Result};
pub use function_space::{
    Atom, LpNorm, PiecewisePotential, RadonMeasure, SampledFunction, Segment, SegmentKind,
    UnitGrid,
};
