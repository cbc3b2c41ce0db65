//! The canopy parametrization and the determinant criteria that decide where
//! the origin of the `(y, z)`-plane sits relative to its projection.
//!
//! The map `F_x` blends the four fields bilinearly over `[-1, 1]^2`; its
//! image is the canopy surface. Sliding on the intersection line exists
//! exactly when the projected surface covers the origin, and the multiplicity
//! (one or two sliding fields) is decided by which part of the projection
//! covers it. All decisions reduce to signs of 2x2 determinants of the
//! projected corners.

use thiserror::Error;

use crate::geom;
use crate::pws::{det2, QuadCorners, Vec2};
use crate::tol;

#[derive(Debug, Error, PartialEq)]
pub enum CanopyError {
    #[error("degenerate projected quadrilateral (a difference determinant is within {0:.1e} of zero)")]
    DegenerateQuadrilateral(f64),
    #[error("ambiguous diagonal comparison: | ||X1-X3|| - ||X4-X2|| | <= {0:.1e}")]
    AmbiguousKappa(f64),
}

/// Full bilinear blend of the four fields at parameters `(psi, phi)`.
///
/// Corner identities: `(1,1) -> X_1`, `(-1,1) -> X_2`, `(-1,-1) -> X_3`,
/// `(1,-1) -> X_4`.
pub fn f_x(corners: &QuadCorners, psi: f64, phi: f64) -> [f64; 3] {
    let w = corner_weights(psi, phi);
    let mut out = [0.0; 3];
    for i in 0..4 {
        out[0] += w[i] * corners.alpha[i];
        out[1] += w[i] * corners.xt[i][0];
        out[2] += w[i] * corners.xt[i][1];
    }
    out
}

/// Convex corner weights of the bilinear blend; they sum to one on the
/// closed square.
#[inline]
pub fn corner_weights(psi: f64, phi: f64) -> [f64; 4] {
    [
        0.25 * (1.0 + psi) * (1.0 + phi),
        0.25 * (1.0 - psi) * (1.0 + phi),
        0.25 * (1.0 - psi) * (1.0 - phi),
        0.25 * (1.0 + psi) * (1.0 - phi),
    ]
}

/// The `(y, z)` components of the blend.
pub fn f_tilde(corners: &QuadCorners, psi: f64, phi: f64) -> Vec2 {
    let w = corner_weights(psi, phi);
    let mut out = [0.0; 2];
    for i in 0..4 {
        out[0] += w[i] * corners.xt[i][0];
        out[1] += w[i] * corners.xt[i][1];
    }
    out
}

/// The projected blend written as `a0 + a1 psi + a2 phi + a3 psi phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearMap2 {
    pub a0: Vec2,
    pub a1: Vec2,
    pub a2: Vec2,
    pub a3: Vec2,
}

impl BilinearMap2 {
    pub fn eval(&self, psi: f64, phi: f64) -> Vec2 {
        [
            self.a0[0] + self.a1[0] * psi + self.a2[0] * phi + self.a3[0] * psi * phi,
            self.a0[1] + self.a1[1] * psi + self.a2[1] * phi + self.a3[1] * psi * phi,
        ]
    }

    /// Columns of the Jacobian at `(psi, phi)`.
    pub fn partials(&self, psi: f64, phi: f64) -> (Vec2, Vec2) {
        (
            [
                self.a1[0] + self.a3[0] * phi,
                self.a1[1] + self.a3[1] * phi,
            ],
            [
                self.a2[0] + self.a3[0] * psi,
                self.a2[1] + self.a3[1] * psi,
            ],
        )
    }
}

/// Expand the projected blend into bilinear coefficients.
pub fn bilinear_coeffs(corners: &QuadCorners) -> BilinearMap2 {
    let x = &corners.xt;
    let comb = |s: [f64; 4]| -> Vec2 {
        [
            0.25 * (s[0] * x[0][0] + s[1] * x[1][0] + s[2] * x[2][0] + s[3] * x[3][0]),
            0.25 * (s[0] * x[0][1] + s[1] * x[1][1] + s[2] * x[2][1] + s[3] * x[3][1]),
        ]
    };
    BilinearMap2 {
        a0: comb([1.0, 1.0, 1.0, 1.0]),
        a1: comb([1.0, -1.0, -1.0, 1.0]),
        a2: comb([1.0, 1.0, -1.0, -1.0]),
        a3: comb([1.0, -1.0, 1.0, -1.0]),
    }
}

/// Role of the segment `X~_1 X~_2` in a crossed quadrilateral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chi1Role {
    /// The crossing pair is `(chi_2, chi_4)`.
    Edge,
    /// The segments `chi_1` and `chi_3` cross each other.
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadClass {
    /// All difference determinants share one strict sign.
    Convex,
    /// Two positive, two negative.
    Crossed { chi1_role: Chi1Role },
    /// Exactly one determinant differs in sign. `reflex` is the corner
    /// (1..=4) sitting inside the triangle of the other three; the odd
    /// determinant is the turn at this corner.
    Concave { reflex: usize },
    /// Some determinant within the degeneracy band.
    Degenerate,
}

/// Difference vectors, difference determinants and the resulting class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadShape {
    /// `chi_i = X~_{i+1} - X~_i` (index 0 holds `chi_1`).
    pub chi: [Vec2; 4],
    /// `delta_i = det(chi_i, chi_{i+1})`.
    pub delta: [f64; 4],
    pub class: QuadClass,
}

/// Classify the projected quadrilateral from its difference determinants.
pub fn quad_shape(corners: &QuadCorners) -> QuadShape {
    let mut chi = [[0.0; 2]; 4];
    for i in 0..4 {
        let a = corners.xt[i];
        let b = corners.xt[(i + 1) % 4];
        chi[i] = [b[0] - a[0], b[1] - a[1]];
    }
    let mut delta = [0.0; 4];
    for i in 0..4 {
        delta[i] = det2(chi[i], chi[(i + 1) % 4]);
    }

    let class = if delta.iter().any(|d| d.abs() <= tol::DEG) {
        QuadClass::Degenerate
    } else {
        match delta.iter().filter(|d| **d > 0.0).count() {
            0 | 4 => QuadClass::Convex,
            2 => {
                let chi1_crosses_chi3 = geom::segments_cross(
                    corners.corner(1),
                    corners.corner(2),
                    corners.corner(3),
                    corners.corner(4),
                );
                QuadClass::Crossed {
                    chi1_role: if chi1_crosses_chi3 {
                        Chi1Role::Diagonal
                    } else {
                        Chi1Role::Edge
                    },
                }
            }
            _ => {
                let positives = delta.iter().filter(|d| **d > 0.0).count();
                let odd = delta
                    .iter()
                    .position(|d| (*d > 0.0) == (positives == 1))
                    .expect("one determinant has the minority sign");
                // delta_{odd+1} is the turn at corner odd+2 (1-based).
                QuadClass::Concave {
                    reflex: (odd + 1) % 4 + 1,
                }
            }
        }
    };

    QuadShape { chi, delta, class }
}

/// The four corner determinants that govern existence and multiplicity:
/// `a = det(X~_1 X~_2)`, `b = det(X~_4 X~_2) + det(X~_1 X~_3)`,
/// `g = det(X~_4 X~_3)` and the discriminant `delta = b^2 - 4 a g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanopyInvariants {
    pub a: f64,
    pub b: f64,
    pub g: f64,
    pub delta: f64,
}

pub fn canopy_invariants(corners: &QuadCorners) -> CanopyInvariants {
    let a = corners.corner_det(1, 2);
    let b = corners.corner_det(4, 2) + corners.corner_det(1, 3);
    let g = corners.corner_det(4, 3);
    CanopyInvariants {
        a,
        b,
        g,
        delta: b * b - 4.0 * a * g,
    }
}

/// Which subregion of the projection covers the origin when sliding is
/// unique. The tag feeds the stability classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UniqueRegion {
    ConvexInterior,
    /// One of the two lobes of a crossed projection; `lobe_edge` is the
    /// quadrilateral edge index bounding the lobe that covers the origin.
    CrossedHomeo { lobe_edge: usize },
    ConcaveCrossedSub,
    ConcaveConvexSub,
    /// Double root: the origin lies on the parabolic line (discriminant
    /// within the degeneracy band while the double-sliding sign conditions
    /// hold).
    OnParabolicLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OriginLocation {
    NoSliding,
    Unique { region: UniqueRegion },
    Double,
}

impl OriginLocation {
    /// Number of sliding vector fields implied by the location.
    pub fn count(&self) -> usize {
        match self {
            OriginLocation::NoSliding => 0,
            OriginLocation::Unique { .. } => 1,
            OriginLocation::Double => 2,
        }
    }
}

/// Decide existence and multiplicity of sliding from determinant signs only.
pub fn origin_location(corners: &QuadCorners) -> Result<OriginLocation, CanopyError> {
    let shape = quad_shape(corners);
    origin_location_with_shape(corners, &shape)
}

pub fn origin_location_with_shape(
    corners: &QuadCorners,
    shape: &QuadShape,
) -> Result<OriginLocation, CanopyError> {
    let det = |i: usize, j: usize| corners.corner_det(i, j);
    let inv = canopy_invariants(corners);

    match shape.class {
        QuadClass::Degenerate => Err(CanopyError::DegenerateQuadrilateral(tol::DEG)),
        QuadClass::Convex => {
            if det(1, 2) * det(3, 4) > 0.0 && det(2, 3) * det(4, 1) > 0.0 {
                Ok(OriginLocation::Unique {
                    region: UniqueRegion::ConvexInterior,
                })
            } else {
                Ok(OriginLocation::NoSliding)
            }
        }
        QuadClass::Crossed { chi1_role } => crossed_location(corners, chi1_role, &inv),
        QuadClass::Concave { reflex } => concave_location(corners, reflex, &inv),
    }
}

/// Crossed projection: the homeomorphic region is the two lobes; the
/// nonhomeomorphic region sits beyond the crossing point, bounded by the
/// parabolic line between the endpoints of the longer diagonal pair.
fn crossed_location(
    corners: &QuadCorners,
    chi1_role: Chi1Role,
    inv: &CanopyInvariants,
) -> Result<OriginLocation, CanopyError> {
    let det = |i: usize, j: usize| corners.corner_det(i, j);
    let unique = match chi1_role {
        Chi1Role::Edge => det(1, 2) * det(3, 4) < 0.0 && det(2, 3) * det(4, 1) > 0.0,
        Chi1Role::Diagonal => det(1, 2) * det(3, 4) > 0.0 && det(2, 3) * det(4, 1) < 0.0,
    };
    if unique {
        let lobe_edge = crossed_lobe(corners, chi1_role);
        return Ok(OriginLocation::Unique {
            region: UniqueRegion::CrossedHomeo { lobe_edge },
        });
    }

    let d13 = geom::norm([
        corners.corner(1)[0] - corners.corner(3)[0],
        corners.corner(1)[1] - corners.corner(3)[1],
    ]);
    let d42 = geom::norm([
        corners.corner(4)[0] - corners.corner(2)[0],
        corners.corner(4)[1] - corners.corner(2)[1],
    ]);
    if (d13 - d42).abs() <= tol::DEG {
        // Equal diagonals: the nonhomeomorphic region is empty and the
        // double-sliding test degenerates.
        return Err(CanopyError::AmbiguousKappa(tol::DEG));
    }

    double_or_parabolic(pair_conditions(corners), inv.delta)
}

/// Sign conditions putting both roots of the sliding quadratic, and both of
/// their eliminated partners, strictly inside the unit coefficient interval.
///
/// The quadratic in one coefficient takes the values `G` at 0 and `A` at 1,
/// so root location reduces to corner-determinant signs plus the vertex
/// position; the partner coefficient satisfies the quadratic of the
/// 2 <-> 4 corner swap. Together with a positive discriminant these are
/// exactly the double-sliding conditions, for every quadrilateral shape.
fn pair_conditions(corners: &QuadCorners) -> bool {
    let both_roots_interior = |swap: bool| -> bool {
        let c = |i: usize| match (swap, i) {
            (true, 2) => corners.corner(4),
            (true, 4) => corners.corner(2),
            _ => corners.corner(i),
        };
        let a = det2(c(1), c(2));
        let b = det2(c(4), c(2)) + det2(c(1), c(3));
        let g = det2(c(4), c(3));
        let q2 = a + g - b;
        if q2.abs() <= tol::DEG {
            return false; // linear: at most one root
        }
        let vertex = (2.0 * g - b) / (2.0 * q2);
        a * q2 > 0.0 && g * q2 > 0.0 && vertex > 0.0 && vertex < 1.0
    };
    both_roots_interior(false) && both_roots_interior(true)
}

/// Which lobe of a crossed projection contains the origin, reported by the
/// quadrilateral edge bounding it.
fn crossed_lobe(corners: &QuadCorners, chi1_role: Chi1Role) -> usize {
    let (seg_a, seg_b, edge_a, edge_b) = match chi1_role {
        // Crossing pair (chi_2, chi_4); lobes bounded by chi_1 and chi_3.
        Chi1Role::Edge => ((2, 3), (4, 1), 1, 3),
        // Crossing pair (chi_1, chi_3); lobes bounded by chi_2 and chi_4.
        Chi1Role::Diagonal => ((1, 2), (3, 4), 2, 4),
    };
    let c = geom::crossing_point(
        corners.corner(seg_a.0),
        corners.corner(seg_a.1),
        corners.corner(seg_b.0),
        corners.corner(seg_b.1),
    );
    let origin = [0.0, 0.0];
    let in_a = geom::point_in_triangle(
        origin,
        corners.corner(edge_a),
        corners.corner(edge_a % 4 + 1),
        c,
    );
    if in_a {
        edge_a
    } else {
        edge_b
    }
}

/// Concave projection with the reflex corner at `reflex`. The published
/// conditions assume the reflex at corner 2; other positions permute the
/// corner indices cyclically.
fn concave_location(
    corners: &QuadCorners,
    reflex: usize,
    inv: &CanopyInvariants,
) -> Result<OriginLocation, CanopyError> {
    let shift = (reflex + 2) % 4; // reflex = 2 gives the identity
    let s = |k: usize| (k - 1 + shift) % 4 + 1;
    let det = |i: usize, j: usize| corners.corner_det(s(i), s(j));

    let crossed_sub = det(1, 2) * det(2, 3) < 0.0 && det(3, 4) * det(4, 1) > 0.0;
    if crossed_sub {
        return Ok(OriginLocation::Unique {
            region: UniqueRegion::ConcaveCrossedSub,
        });
    }
    let convex_sub = det(2, 3) * det(3, 4) > 0.0 && det(4, 1) * det(1, 2) > 0.0;
    if convex_sub {
        return Ok(OriginLocation::Unique {
            region: UniqueRegion::ConcaveConvexSub,
        });
    }
    double_or_parabolic(pair_conditions(corners), inv.delta)
}

fn double_or_parabolic(conditions: bool, delta: f64) -> Result<OriginLocation, CanopyError> {
    if !conditions {
        return Ok(OriginLocation::NoSliding);
    }
    if delta > tol::DEG {
        Ok(OriginLocation::Double)
    } else if delta.abs() <= tol::DEG {
        Ok(OriginLocation::Unique {
            region: UniqueRegion::OnParabolicLine,
        })
    } else {
        Ok(OriginLocation::NoSliding)
    }
}
