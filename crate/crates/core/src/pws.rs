//! The piecewise-smooth system and the classical codimension-1 machinery.
//!
//! Four smooth fields `X_1..X_4` occupy the closed quadrants of the
//! `(y, z)`-plane in counterclockwise order starting from `{y >= 0, z >= 0}`.
//! The switching planes between consecutive quadrants are
//!
//! * `P_1 = {y = 0, z >= 0}` between `Q_1` and `Q_2` (normal component: beta),
//! * `P_2 = {y <= 0, z = 0}` between `Q_2` and `Q_3` (normal component: gamma),
//! * `P_3 = {y = 0, z <= 0}` between `Q_3` and `Q_4` (normal component: beta),
//! * `P_4 = {y >= 0, z = 0}` between `Q_4` and `Q_1` (normal component: gamma),
//!
//! indices mod 4 with 5 = 1. All coordinate functions depend on `x` only and
//! are stored as polynomials, so every projected quantity is exact and closed
//! under differentiation.

use thiserror::Error;

use crate::tol;

/// 2-vector in the `(y, z)`-plane.
pub type Vec2 = [f64; 2];

/// Signed area `a x b` of two 2-vectors; the workhorse of every criterion.
#[inline]
pub fn det2(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[derive(Debug, Error, PartialEq)]
pub enum PwsError {
    #[error("field index {0} out of range 1..=4")]
    InvalidFieldIndex(usize),
    #[error("polynomial needs at least one coefficient")]
    EmptyPolynomial,
    #[error("x domain is empty: [{0}, {1}]")]
    EmptyDomain(f64, f64),
    #[error("not a sliding region: normal product {0:.3e} is not negative")]
    NotSlidingRegion(f64),
}

/// Real polynomial in `x`, coefficients in ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self, PwsError> {
        if coeffs.is_empty() {
            return Err(PwsError::EmptyPolynomial);
        }
        Ok(Self { coeffs })
    }

    /// Constant polynomial.
    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

/// One smooth field `(alpha, beta, gamma)` under the x-only assumption.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTriple {
    pub alpha: Polynomial,
    pub beta: Polynomial,
    pub gamma: Polynomial,
}

impl FieldTriple {
    pub fn constant(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self {
            alpha: Polynomial::constant(alpha),
            beta: Polynomial::constant(beta),
            gamma: Polynomial::constant(gamma),
        }
    }

    pub fn eval(&self, x: f64) -> [f64; 3] {
        [self.alpha.eval(x), self.beta.eval(x), self.gamma.eval(x)]
    }
}

/// The PWS system: four fields indexed 1..=4 plus the x interval of interest.
#[derive(Debug, Clone, PartialEq)]
pub struct PwsSystem {
    fields: [FieldTriple; 4],
    x_min: f64,
    x_max: f64,
}

impl PwsSystem {
    pub fn new(fields: [FieldTriple; 4], x_min: f64, x_max: f64) -> Result<Self, PwsError> {
        if !(x_min <= x_max) {
            return Err(PwsError::EmptyDomain(x_min, x_max));
        }
        Ok(Self {
            fields,
            x_min,
            x_max,
        })
    }

    /// Constant-field system from four `(alpha, beta, gamma)` rows.
    pub fn from_constants(rows: [[f64; 3]; 4]) -> Self {
        let fields = rows.map(|r| FieldTriple::constant(r[0], r[1], r[2]));
        Self {
            fields,
            x_min: -1.0,
            x_max: 1.0,
        }
    }

    pub fn x_domain(&self) -> (f64, f64) {
        (self.x_min, self.x_max)
    }

    pub fn contains_x(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max
    }

    /// Field `i` (1..=4).
    pub fn field(&self, i: usize) -> Result<&FieldTriple, PwsError> {
        match i {
            1..=4 => Ok(&self.fields[i - 1]),
            _ => Err(PwsError::InvalidFieldIndex(i)),
        }
    }

    /// Evaluate field `i` at `x`, returning `(alpha, beta, gamma)`.
    pub fn eval_field(&self, i: usize, x: f64) -> Result<[f64; 3], PwsError> {
        Ok(self.field(i)?.eval(x))
    }

    /// Project all four fields onto the `(y, z)`-plane at `x`.
    pub fn project(&self, x: f64) -> QuadCorners {
        let mut alpha = [0.0; 4];
        let mut xt = [[0.0; 2]; 4];
        for (k, f) in self.fields.iter().enumerate() {
            let [a, b, g] = f.eval(x);
            alpha[k] = a;
            xt[k] = [b, g];
        }
        QuadCorners { x, alpha, xt }
    }
}

/// The projected fields at one point of the intersection line: the `x` value,
/// the tangential components `alpha_i` and the corners `(beta_i, gamma_i)` of
/// the projected quadrilateral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadCorners {
    pub x: f64,
    pub alpha: [f64; 4],
    pub xt: [Vec2; 4],
}

impl QuadCorners {
    pub fn new(alpha: [f64; 4], xt: [Vec2; 4]) -> Self {
        Self { x: 0.0, alpha, xt }
    }

    /// Corner `i` (1..=4), indices mod 4 with 5 = 1.
    #[inline]
    pub fn corner(&self, i: usize) -> Vec2 {
        self.xt[(i - 1) % 4]
    }

    #[inline]
    pub fn beta(&self, i: usize) -> f64 {
        self.corner(i)[0]
    }

    #[inline]
    pub fn gamma(&self, i: usize) -> f64 {
        self.corner(i)[1]
    }

    /// `det(X~_i X~_j)`, indices mod 4.
    #[inline]
    pub fn corner_det(&self, i: usize, j: usize) -> f64 {
        det2(self.corner(i), self.corner(j))
    }
}

/// Where a point of the `(y, z)`-plane sits relative to the switching set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadrantResult {
    /// Strict interior of quadrant `Q_i`.
    Interior(usize),
    OnPlane(SwitchingSet),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwitchingSet {
    /// `{y = 0, z != 0}`.
    PiF,
    /// `{z = 0, y != 0}`.
    PiG,
    /// The intersection line `{y = z = 0}`.
    Lambda,
}

/// Assign `(y, z)` to a quadrant interior or report the switching set.
///
/// Boundary points are reported, never silently assigned: the quadrants are
/// overlapping closed sets, so membership on an axis is convention, not fact.
pub fn select_quadrant(y: f64, z: f64) -> QuadrantResult {
    match (y == 0.0, z == 0.0) {
        (true, true) => QuadrantResult::OnPlane(SwitchingSet::Lambda),
        (true, false) => QuadrantResult::OnPlane(SwitchingSet::PiF),
        (false, true) => QuadrantResult::OnPlane(SwitchingSet::PiG),
        (false, false) => QuadrantResult::Interior(match (y > 0.0, z > 0.0) {
            (true, true) => 1,
            (false, true) => 2,
            (false, false) => 3,
            (true, false) => 4,
        }),
    }
}

/// Classification of a point of the codimension-1 plane `P_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Codim1Class {
    Crossing,
    Sliding,
    Fold,
}

/// Normal components of the pair `(X_i, X_{i+1})` relative to plane `P_i`.
///
/// `P_1, P_3` lie in `{y = 0}` (normal beta); `P_2, P_4` in `{z = 0}`
/// (normal gamma).
fn normal_pair(system: &PwsSystem, i: usize, x: f64) -> Result<(f64, f64), PwsError> {
    if !(1..=4).contains(&i) {
        return Err(PwsError::InvalidFieldIndex(i));
    }
    let next = i % 4 + 1;
    let fi = system.eval_field(i, x)?;
    let fn_ = system.eval_field(next, x)?;
    Ok(match i {
        1 | 3 => (fi[1], fn_[1]),
        _ => (fi[2], fn_[2]),
    })
}

/// Crossing/sliding/fold classification of `P_i` at `x`.
///
/// Under the x-only assumption the normal components are constant along each
/// half-plane, so the class depends on `x` alone.
pub fn classify_codim1(system: &PwsSystem, i: usize, x: f64) -> Result<Codim1Class, PwsError> {
    let (n_i, n_next) = normal_pair(system, i, x)?;
    let product = n_i * n_next;
    Ok(if product.abs() <= tol::FOLD {
        Codim1Class::Fold
    } else if product > 0.0 {
        Codim1Class::Crossing
    } else {
        Codim1Class::Sliding
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Codim1Stability {
    Stable,
    Unstable,
}

/// Filippov sliding on a codimension-1 plane `P_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Codim1Sliding {
    /// Convex weight of `X_i`; strictly in (0, 1) on a sliding region.
    pub sigma: f64,
    /// The sliding vector `sigma X_i + (1 - sigma) X_{i+1}`; its normal
    /// component vanishes by construction.
    pub vector: [f64; 3],
    pub stability: Codim1Stability,
}

/// The Filippov convex combination of `(X_i, X_{i+1})` tangent to `P_i`.
///
/// Sliding is stable when both fields point towards the plane. `X_1` lives on
/// the `y > 0` side of `P_1` and `X_3` on the `y < 0` side of `P_3` (likewise
/// in `z` for `P_2`, `P_4`), so the towards-the-plane sign alternates with
/// the plane index.
pub fn filippov_codim1(system: &PwsSystem, i: usize, x: f64) -> Result<Codim1Sliding, PwsError> {
    let (n_i, n_next) = normal_pair(system, i, x)?;
    let product = n_i * n_next;
    if !(product < -tol::FOLD) {
        return Err(PwsError::NotSlidingRegion(product));
    }
    let sigma = n_next / (n_next - n_i);
    let next = i % 4 + 1;
    let fi = system.eval_field(i, x)?;
    let fnx = system.eval_field(next, x)?;
    let mut vector = [0.0; 3];
    for k in 0..3 {
        vector[k] = sigma * fi[k] + (1.0 - sigma) * fnx[k];
    }
    // X_i sits on the positive side of P_i for i = 1, 2 and on the negative
    // side for i = 3, 4.
    let first_on_positive_side = i == 1 || i == 2;
    let stable = if first_on_positive_side {
        n_i < 0.0 && n_next > 0.0
    } else {
        n_i > 0.0 && n_next < 0.0
    };
    Ok(Codim1Sliding {
        sigma,
        vector,
        stability: if stable {
            Codim1Stability::Stable
        } else {
            Codim1Stability::Unstable
        },
    })
}
