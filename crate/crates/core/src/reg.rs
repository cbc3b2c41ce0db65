//! Regularization functions: monotone sigmoids that smooth the switching at
//! scale epsilon, plus the one-sided transforms used by the equator
//! diagnostics.

use thiserror::Error;

use crate::canopy::f_x;
use crate::pws::PwsSystem;

#[derive(Debug, Error, PartialEq)]
pub enum RegError {
    #[error("inverse argument {0} outside (-1, 1)")]
    InverseOutOfRange(f64),
    #[error("one-sided transform expects r {expected} 0, got {got}")]
    WrongSign { expected: &'static str, got: f64 },
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("unknown regularization family '{0}' (expected tanh | arctan | st)")]
    UnknownFamily(String),
}

/// A strictly increasing transition function with limits -1 and 1.
///
/// `Tanh` and `Arctan` are analytic and reach the limits only at infinity;
/// `SotomayorTeixeira` is the C^1 cubic `s (3 - s^2) / 2` clamped outside
/// `[-1, 1]`, the simplest polynomial with unit values and flat slope at the
/// matching points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegFunction {
    Tanh,
    Arctan,
    SotomayorTeixeira,
}

impl RegFunction {
    pub fn from_name(name: &str) -> Result<Self, RegError> {
        match name {
            "tanh" => Ok(Self::Tanh),
            "arctan" => Ok(Self::Arctan),
            "st" => Ok(Self::SotomayorTeixeira),
            other => Err(RegError::UnknownFamily(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Tanh => "tanh",
            Self::Arctan => "arctan",
            Self::SotomayorTeixeira => "st",
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        match self {
            Self::Tanh => s.tanh(),
            Self::Arctan => std::f64::consts::FRAC_2_PI * s.atan(),
            Self::SotomayorTeixeira => {
                if s >= 1.0 {
                    1.0
                } else if s <= -1.0 {
                    -1.0
                } else {
                    0.5 * s * (3.0 - s * s)
                }
            }
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match self {
            Self::Tanh => {
                let t = s.tanh();
                1.0 - t * t
            }
            Self::Arctan => std::f64::consts::FRAC_2_PI / (1.0 + s * s),
            Self::SotomayorTeixeira => {
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    1.5 * (1.0 - s * s)
                }
            }
        }
    }

    /// Inverse of `value` on the open range `(-1, 1)`.
    pub fn inverse(&self, p: f64) -> Result<f64, RegError> {
        if !(-1.0 < p && p < 1.0) {
            return Err(RegError::InverseOutOfRange(p));
        }
        Ok(match self {
            Self::Tanh => p.atanh(),
            Self::Arctan => (std::f64::consts::FRAC_PI_2 * p).tan(),
            Self::SotomayorTeixeira => st_inverse(p),
        })
    }

    /// `phi_+`: the transform `r -> value(1/r)` for `r > 0`, continued by 1
    /// at `r = 0`.
    pub fn phi_plus(&self, r: f64) -> Result<f64, RegError> {
        if r < 0.0 {
            return Err(RegError::WrongSign {
                expected: ">=",
                got: r,
            });
        }
        Ok(if r == 0.0 { 1.0 } else { self.value(1.0 / r) })
    }

    /// `phi_-`: the transform `r -> value(1/r)` for `r < 0`, continued by -1
    /// at `r = 0`.
    pub fn phi_minus(&self, r: f64) -> Result<f64, RegError> {
        if r > 0.0 {
            return Err(RegError::WrongSign {
                expected: "<=",
                got: r,
            });
        }
        Ok(if r == 0.0 { -1.0 } else { self.value(1.0 / r) })
    }
}

/// Safeguarded Newton with a bisection fallback for the clamped cubic; the
/// closed-form roots are fragile near the matching points.
fn st_inverse(p: f64) -> f64 {
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut s = p; // decent initial guess: the cubic is close to identity
    for _ in 0..100 {
        let f = 0.5 * s * (3.0 - s * s) - p;
        if f == 0.0 {
            return s;
        }
        if f > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let d = 1.5 * (1.0 - s * s);
        let newton = if d > 0.0 { s - f / d } else { f64::NAN };
        s = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-16 {
            break;
        }
    }
    s
}

/// The doubly regularized field at a point, for a given epsilon.
///
/// Equals the bilinear blend evaluated at `(psi(y/eps), phi(z/eps))`, so it
/// is smooth in `(y, z)` and scale-invariant in `(eps, y, z)`.
pub fn regularized_field(
    system: &PwsSystem,
    reg_y: RegFunction,
    reg_z: RegFunction,
    eps: f64,
    p: [f64; 3],
) -> Result<[f64; 3], RegError> {
    if !(eps > 0.0) {
        return Err(RegError::NonPositiveEpsilon(eps));
    }
    let corners = system.project(p[0]);
    Ok(f_x(
        &corners,
        reg_y.value(p[1] / eps),
        reg_z.value(p[2] / eps),
    ))
}
