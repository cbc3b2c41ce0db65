//! Analysis of piecewise-smooth vector fields in R^3 near the transversal
//! intersection of two switching planes.
//!
//! A PWS system is given by four smooth fields `X_1..X_4`, one per quadrant of
//! the `(y, z)`-plane, each depending on `x` only. The crate computes the
//! sliding vector fields on the intersection line (the x-axis), decides their
//! existence, multiplicity and stability from closed-form determinant
//! criteria, simulates the doubly regularized system, and scans for sliding
//! bifurcations along the line.

pub mod bifurcation;
pub mod canopy;
pub mod dynamics;
pub mod geom;
pub mod ode;
pub mod pws;
pub mod reg;
pub mod solver;
pub mod stability;

pub use bifurcation::{scan, BifurcationEvent, EventKind, ScanConfig};
pub use canopy::{OriginLocation, QuadClass, QuadShape, UniqueRegion};
pub use pws::{Polynomial, PwsSystem, QuadCorners};
pub use reg::RegFunction;
pub use solver::{SigmaSolutions, SlidingSolution};
pub use stability::{StabilityKind, StabilityReport};

/// Numeric tolerances shared across the crate.
///
/// The analytical criteria all assume strict sign conditions; these bands
/// decide when a quantity is treated as zero instead of guessing a sign.
pub mod tol {
    /// Band on the product of normal components below which a codimension-1
    /// point is reported as a fold rather than crossing/sliding.
    pub const FOLD: f64 = 1e-10;
    /// Degeneracy band for difference determinants, classification
    /// determinants, traces and the kappa norm comparison.
    pub const DEG: f64 = 1e-9;
    /// Relative residual for algebraic identities (tangency, weight sums).
    pub const RES: f64 = 1e-12;
    /// Absolute residual bound for accepted roots of the projected map.
    pub const ROOT: f64 = 1e-10;
    /// Admissibility band: sliding coefficients must lie in
    /// `(BND, 1 - BND)`; closer to the boundary counts as grazing.
    pub const BND: f64 = 1e-9;
}
