//! Stability of sliding solutions through the layer-problem Jacobian.
//!
//! At a root of the projected blend the fast subsystem linearizes to
//! `J = D P` where `D` collects the two tangent vectors of the projection as
//! columns and `P` is the positive diagonal of regularization slopes. Since
//! `det P > 0`, the saddle/non-saddle split depends on the corners alone;
//! only the attracting/repelling verdict can depend on the regularization
//! pair, and the sign conditions of the `s`-criterion decide when it does
//! not.

use thiserror::Error;

use crate::canopy::UniqueRegion;
use crate::pws::QuadCorners;
use crate::reg::{RegError, RegFunction};
use crate::solver::SlidingSolution;
use crate::tol;

/// 2x2 real matrix, row major.
pub type Mat2 = [[f64; 2]; 2];

pub fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn trace(m: &Mat2) -> f64 {
    m[0][0] + m[1][1]
}

#[derive(Debug, Error, PartialEq)]
pub enum StabilityError {
    #[error("regularization slope must be positive, got {0}")]
    NonPositiveSlope(f64),
    #[error("no qualifying edge: region is degenerate for geometric typing")]
    NoQualifyingEdge,
    #[error(transparent)]
    Reg(#[from] RegError),
}

/// Jacobian of the projected blend at `(psi, phi)`, columns are the tangent
/// vectors along the two parameter directions.
pub fn tangent_jacobian(corners: &QuadCorners, psi: f64, phi: f64) -> Mat2 {
    let b = |i: usize| corners.beta(i);
    let g = |i: usize| corners.gamma(i);
    let dpsi = [
        0.25 * ((b(1) - b(2)) * (1.0 + phi) + (b(4) - b(3)) * (1.0 - phi)),
        0.25 * ((g(1) - g(2)) * (1.0 + phi) + (g(4) - g(3)) * (1.0 - phi)),
    ];
    let dphi = [
        0.25 * ((b(1) - b(4)) * (1.0 + psi) + (b(2) - b(3)) * (1.0 - psi)),
        0.25 * ((g(1) - g(4)) * (1.0 + psi) + (g(2) - g(3)) * (1.0 - psi)),
    ];
    [[dpsi[0], dphi[0]], [dpsi[1], dphi[1]]]
}

/// Scale the tangent Jacobian columns by the regularization slopes.
pub fn fast_jacobian(d_ftilde: &Mat2, psi_slope: f64, phi_slope: f64) -> Result<Mat2, StabilityError> {
    for s in [psi_slope, phi_slope] {
        if !(s > 0.0) {
            return Err(StabilityError::NonPositiveSlope(s));
        }
    }
    Ok([
        [d_ftilde[0][0] * psi_slope, d_ftilde[0][1] * phi_slope],
        [d_ftilde[1][0] * psi_slope, d_ftilde[1][1] * phi_slope],
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityKind {
    Saddle,
    Node { attracting: bool },
    Focus { attracting: bool },
    /// Zero trace with positive determinant; outside the hyperbolic setting.
    Center,
    /// Determinant within the degeneracy band.
    NonHyperbolic,
}

impl StabilityKind {
    pub fn label(&self) -> &'static str {
        match self {
            StabilityKind::Saddle => "saddle",
            StabilityKind::Node { attracting: true } => "node (attracting)",
            StabilityKind::Node { attracting: false } => "node (repelling)",
            StabilityKind::Focus { attracting: true } => "focus (attracting)",
            StabilityKind::Focus { attracting: false } => "focus (repelling)",
            StabilityKind::Center => "center",
            StabilityKind::NonHyperbolic => "non-hyperbolic",
        }
    }
}

/// Classify a 2x2 equilibrium from determinant and trace; borderline values
/// are surfaced as Center/NonHyperbolic instead of being forced into a
/// neighboring class.
pub fn classify_stability(j: &Mat2) -> StabilityKind {
    let d = det(j);
    let t = trace(j);
    if d < -tol::DEG {
        StabilityKind::Saddle
    } else if d > tol::DEG {
        if t.abs() <= tol::DEG {
            StabilityKind::Center
        } else {
            let disc = t * t - 4.0 * d;
            let attracting = t < 0.0;
            if disc < -tol::DEG {
                StabilityKind::Focus { attracting }
            } else {
                StabilityKind::Node { attracting }
            }
        }
    } else {
        StabilityKind::NonHyperbolic
    }
}

/// Regularization-independent saddle vs node/focus/center split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeoType {
    SaddleType,
    NodeFocusCenterType,
}

/// Orientation-based type of a unique sliding solution, from corner data
/// only.
///
/// The boundary of the parameter square maps onto the projected
/// quadrilateral polyline, so the winding number of that polyline around
/// the origin is the topological degree of the projection there: the sum of
/// the sheet orientations over the preimages. With a single preimage the
/// winding is the sign of `det(D F~)` at the root. The corner determinant
/// of the edge bounding the covering subregion carries the same sign; the
/// winding form needs no per-class case analysis.
pub fn type_from_geometry(
    corners: &QuadCorners,
    region: UniqueRegion,
) -> Result<GeoType, StabilityError> {
    if region == UniqueRegion::OnParabolicLine {
        // Sheets of opposite orientation meet at the fold; no type.
        return Err(StabilityError::NoQualifyingEdge);
    }
    match winding_number([0.0, 0.0], &corners.xt) {
        1 => Ok(GeoType::NodeFocusCenterType),
        -1 => Ok(GeoType::SaddleType),
        _ => Err(StabilityError::NoQualifyingEdge),
    }
}

/// Winding number of the closed polyline `poly` around `p`.
fn winding_number(p: crate::pws::Vec2, poly: &[crate::pws::Vec2; 4]) -> i32 {
    let mut w = 0;
    for i in 0..4 {
        let a = poly[i];
        let b = poly[(i + 1) % 4];
        if a[1] <= p[1] {
            if b[1] > p[1] && crate::geom::orient(a, b, p) > 0.0 {
                w += 1;
            }
        } else if b[1] <= p[1] && crate::geom::orient(a, b, p) < 0.0 {
            w -= 1;
        }
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegIndependence {
    Attracting,
    Repelling,
    DependsOnRegularization,
}

/// The two sign quantities deciding regularization independence of the
/// attracting/repelling verdict.
pub fn stability_signs(corners: &QuadCorners, sol: &SlidingSolution) -> (f64, f64) {
    let b = |i: usize| corners.beta(i);
    let g = |i: usize| corners.gamma(i);
    let s1 = (b(1) - b(2)) * sol.sigma_phi + (b(4) - b(3)) * (1.0 - sol.sigma_phi);
    let s2 = (g(1) - g(4)) * sol.sigma_psi + (g(2) - g(3)) * (1.0 - sol.sigma_psi);
    (s1, s2)
}

/// Attracting/repelling verdict valid for every regularization pair, when
/// the sign quantities agree; otherwise the verdict depends on the pair.
pub fn reg_independent_stability(corners: &QuadCorners, sol: &SlidingSolution) -> RegIndependence {
    let (s1, s2) = stability_signs(corners, sol);
    if s1 > tol::DEG && s2 > tol::DEG {
        RegIndependence::Repelling
    } else if s1 < -tol::DEG && s2 < -tol::DEG {
        RegIndependence::Attracting
    } else {
        RegIndependence::DependsOnRegularization
    }
}

/// Trace of the fast Jacobian in coefficient form; an independent route to
/// the same number as `trace(J)`.
pub fn trace_sigma_form(
    corners: &QuadCorners,
    sol: &SlidingSolution,
    psi_slope: f64,
    phi_slope: f64,
) -> f64 {
    let (s1, s2) = stability_signs(corners, sol);
    0.5 * psi_slope * s1 + 0.5 * phi_slope * s2
}

/// Full stability report of one sliding solution under a concrete
/// regularization pair.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub d_ftilde: Mat2,
    /// Regularization slopes at the lifted equilibrium.
    pub p_diag: (f64, f64),
    pub jacobian: Mat2,
    pub det_j: f64,
    pub trace_j: f64,
    pub kind: StabilityKind,
    pub reg_independent: RegIndependence,
}

pub fn stability_report(
    corners: &QuadCorners,
    sol: &SlidingSolution,
    reg_y: RegFunction,
    reg_z: RegFunction,
) -> Result<StabilityReport, StabilityError> {
    let y_hat = reg_y.inverse(sol.psi_star)?;
    let z_hat = reg_z.inverse(sol.phi_star)?;
    let psi_slope = reg_y.derivative(y_hat);
    let phi_slope = reg_z.derivative(z_hat);
    let d_ftilde = tangent_jacobian(corners, sol.psi_star, sol.phi_star);
    let jacobian = fast_jacobian(&d_ftilde, psi_slope, phi_slope)?;
    let det_j = det(&jacobian);
    let trace_j = trace(&jacobian);

    // Two independent trace routes must agree.
    let trace_alt = trace_sigma_form(corners, sol, psi_slope, phi_slope);
    let scale = trace_j.abs().max(trace_alt.abs()).max(1.0);
    assert!(
        (trace_j - trace_alt).abs() <= 1e-8 * scale,
        "trace mismatch: matrix route {trace_j} vs coefficient route {trace_alt}"
    );

    Ok(StabilityReport {
        d_ftilde,
        p_diag: (psi_slope, phi_slope),
        jacobian,
        det_j,
        trace_j,
        kind: classify_stability(&jacobian),
        reg_independent: reg_independent_stability(corners, sol),
    })
}
