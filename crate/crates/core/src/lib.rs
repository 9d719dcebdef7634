//! Momentum-loop dynamics of decaying turbulence.
//!
//! The Navier–Stokes statistics of a decaying flow can be encoded in a loop
//! functional `Ψ[C] = ⟨exp(iγΓ/ν)⟩`, whose plane-wave representation turns the
//! 3d PDE into a one-dimensional evolution equation for a momentum loop
//! `P(θ,t)` — a closed polygon of complex 3-vectors. This crate implements
//! that discrete system end to end:
//!
//! * [`loops`] — spatial and momentum polygons, circulation sums, tensor
//!   areas, and the zero-area "spokes" contours used for vorticity
//!   correlators;
//! * [`mle`] — the momentum-loop equation, its dimensionless form, adaptive
//!   time integration, fixed-point and blow-up residuals;
//! * [`euler`] — the fixed manifold of the equation: random walks on regular
//!   star polygons with a Haar-random rotation (the Euler ensemble);
//! * [`number_theory`] — totients, coprime enumeration, and the
//!   cotangent-squared distribution law governing star-polygon radii;
//! * [`observables`] — deterministic-parallel Monte Carlo estimators of the
//!   loop functional, vorticity correlators, and the dissipation proxy;
//! * [`rotation`] — the exactly solvable uniform-rotation flow, used as an
//!   end-to-end validation of the Gaussian momentum-loop machinery;
//! * [`init_measure`] — noisy initial data: contour noise contraction and the
//!   positive single-link measure with its Gaussian large-N limit.
//!
//! Everything is deterministic given a seed: random streams are keyed by
//! `(seed, stream, index)` so results do not depend on thread count.

// Validation uses negated comparisons (`!(x > 0.0)`) on purpose: they reject
// NaN, which `x <= 0.0` would let through. Index loops mirror the tensor
// algebra they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]
#![allow(clippy::excessive_precision)]

pub mod error;
pub mod euler;
pub mod init_measure;
pub mod integrate;
pub mod io;
pub mod loops;
pub mod mc;
pub mod mle;
pub mod number_theory;
pub mod observables;
pub mod quad;
pub mod rng;
pub mod rotation;
pub mod vec3;

pub use error::Error;
pub use vec3::{CVec3, Vec3};

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
