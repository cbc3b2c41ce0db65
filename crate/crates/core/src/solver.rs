//! Closed-form sliding coefficients on the intersection line, the convex
//! weights, the sliding speed, the critical-manifold lift, and the
//! independent brute-force root oracle.
//!
//! A sliding field corresponds to a root of the projected bilinear blend in
//! the open parameter square. Eliminating one coefficient yields a quadratic
//! in `sigma_phi` with coefficients built from corner determinants; the
//! closed form solves it and back-substitutes, while the oracle isolates
//! roots on a grid without touching the quadratic.

use thiserror::Error;

use crate::canopy::{bilinear_coeffs, canopy_invariants, f_tilde, BilinearMap2};
use crate::pws::{det2, QuadCorners, Vec2};
use crate::reg::{RegError, RegFunction};
use crate::tol;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("both quadratic branches degenerate (A+G-B and 2G-B vanish)")]
    DegenerateBoth,
}

/// Branch of the quadratic that produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
    /// Linear (degenerate) branch, or a double root on the parabolic line.
    Single,
}

/// One admissible sliding field on the intersection line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlidingSolution {
    /// Convex coefficients, strictly inside (0, 1).
    pub sigma_psi: f64,
    pub sigma_phi: f64,
    /// The corresponding root of the projected blend, inside (-1, 1)^2.
    pub psi_star: f64,
    pub phi_star: f64,
    /// Convex corner weights; they sum to one.
    pub nu: [f64; 4],
    /// Speed of the sliding flow along the line.
    pub speed: f64,
    pub branch: Branch,
}

/// Candidates rejected for a reportable reason (as opposed to lying plainly
/// outside the admissible square).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CandidateIssue {
    /// Both pairing denominators vanished for this sigma_phi candidate.
    SigmaPsiDenominatorZero { sigma_phi: f64 },
    /// Root within the boundary band of the admissible square.
    BoundaryGrazing { sigma_psi: f64, sigma_phi: f64 },
}

/// Output of the closed-form solve: admissible solutions plus per-candidate
/// diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SigmaSolutions {
    pub solutions: Vec<SlidingSolution>,
    pub issues: Vec<CandidateIssue>,
}

/// Convex weights from the two sliding coefficients.
pub fn nu_coefficients(sigma_psi: f64, sigma_phi: f64) -> Result<[f64; 4], NuError> {
    for s in [sigma_psi, sigma_phi] {
        if !(0.0 < s && s < 1.0) {
            return Err(NuError::OutOfRange(s));
        }
    }
    Ok(nu_unchecked(sigma_psi, sigma_phi))
}

#[inline]
fn nu_unchecked(sigma_psi: f64, sigma_phi: f64) -> [f64; 4] {
    [
        sigma_psi * sigma_phi,
        (1.0 - sigma_psi) * sigma_phi,
        (1.0 - sigma_psi) * (1.0 - sigma_phi),
        sigma_psi * (1.0 - sigma_phi),
    ]
}

#[derive(Debug, Error, PartialEq)]
pub enum NuError {
    #[error("sliding coefficient {0} outside (0, 1)")]
    OutOfRange(f64),
}

/// Speed of the sliding flow: the weighted tangential components.
pub fn sliding_speed(corners: &QuadCorners, nu: &[f64; 4]) -> f64 {
    nu.iter()
        .zip(corners.alpha.iter())
        .map(|(n, a)| n * a)
        .sum()
}

/// Solve for all admissible sliding coefficient pairs at the given corners.
pub fn solve_sigmas(corners: &QuadCorners) -> Result<SigmaSolutions, SolverError> {
    let inv = canopy_invariants(corners);
    let q2 = inv.a + inv.g - inv.b; // quadratic coefficient
    let q1 = inv.b - 2.0 * inv.g; // linear coefficient
    let q0 = inv.g;

    let mut out = SigmaSolutions::default();
    let mut push = |sigma_phi: f64, branch: Branch| {
        accept_candidate(corners, sigma_phi, branch, &mut out);
    };

    if q2.abs() <= tol::DEG {
        if q1.abs() <= tol::DEG {
            return Err(SolverError::DegenerateBoth);
        }
        // Linear branch: sigma_phi = G / (2G - B).
        push(-q0 / q1, Branch::Single);
        return Ok(out);
    }

    if inv.delta > tol::DEG {
        // Companion-root formulation avoids cancellation when the
        // discriminant is close to q1^2. signum(0) = 1, so r is nonzero
        // whenever delta > 0.
        let sq = inv.delta.sqrt();
        let r = -0.5 * (q1 + q1.signum() * sq);
        let branch_a = if q1 >= 0.0 { Branch::Minus } else { Branch::Plus };
        let branch_b = match branch_a {
            Branch::Minus => Branch::Plus,
            _ => Branch::Minus,
        };
        push(r / q2, branch_a);
        push(q0 / r, branch_b);
    } else if inv.delta.abs() <= tol::DEG {
        // Double root: the origin lies on the parabolic line.
        push(-q1 / (2.0 * q2), Branch::Single);
    }
    // delta < -DEG: no real roots, nothing to push.

    out.solutions.sort_by(|a, b| {
        a.psi_star
            .partial_cmp(&b.psi_star)
            .unwrap()
            .then(a.phi_star.partial_cmp(&b.phi_star).unwrap())
    });
    Ok(out)
}

/// Back-substitute `sigma_psi`, check admissibility and record the solution.
fn accept_candidate(
    corners: &QuadCorners,
    sigma_phi: f64,
    branch: Branch,
    out: &mut SigmaSolutions,
) {
    if !sigma_phi.is_finite() {
        return;
    }
    let sigma_psi = match sigma_psi_from_phi(corners, sigma_phi) {
        Some(s) => s,
        None => {
            out.issues
                .push(CandidateIssue::SigmaPsiDenominatorZero { sigma_phi });
            return;
        }
    };
    let inside = |s: f64| s > tol::BND && s < 1.0 - tol::BND;
    let grazing = |s: f64| !inside(s) && (s.abs() <= tol::BND || (1.0 - s).abs() <= tol::BND);
    if inside(sigma_phi) && inside(sigma_psi) {
        let nu = nu_unchecked(sigma_psi, sigma_phi);
        out.solutions.push(SlidingSolution {
            sigma_psi,
            sigma_phi,
            psi_star: 2.0 * sigma_psi - 1.0,
            phi_star: 2.0 * sigma_phi - 1.0,
            nu,
            speed: sliding_speed(corners, &nu),
            branch,
        });
    } else if grazing(sigma_phi) || grazing(sigma_psi) {
        out.issues.push(CandidateIssue::BoundaryGrazing {
            sigma_psi,
            sigma_phi,
        });
    }
}

/// Eliminated coefficient: beta pairing with a gamma-pairing fallback when
/// the beta denominator vanishes (both express the same root).
pub(crate) fn sigma_psi_from_phi(corners: &QuadCorners, sigma_phi: f64) -> Option<f64> {
    let one_m = 1.0 - sigma_phi;
    let scale = corners
        .xt
        .iter()
        .flat_map(|v| v.iter())
        .fold(1.0f64, |m, c| m.max(c.abs()));
    for component in [0, 1] {
        let c = |i: usize| corners.corner(i)[component];
        let num = c(2) * sigma_phi + c(3) * one_m;
        let den = (c(2) - c(1)) * sigma_phi + (c(3) - c(4)) * one_m;
        if den.abs() > tol::DEG * scale.max(1.0) {
            return Some(num / den);
        }
    }
    None
}

/// Residual of a solution in the projected blend (sup norm).
pub fn residual(corners: &QuadCorners, sol: &SlidingSolution) -> f64 {
    let v = f_tilde(corners, sol.psi_star, sol.phi_star);
    v[0].abs().max(v[1].abs())
}

/// Lift of a sliding solution onto the critical manifold of the layer
/// problem, through the regularization inverses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub x: f64,
    pub y_hat: f64,
    pub z_hat: f64,
}

pub fn critical_manifold_point(
    sol: &SlidingSolution,
    reg_y: RegFunction,
    reg_z: RegFunction,
    x: f64,
) -> Result<CriticalPoint, RegError> {
    Ok(CriticalPoint {
        x,
        y_hat: reg_y.inverse(sol.psi_star)?,
        z_hat: reg_z.inverse(sol.phi_star)?,
    })
}

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("grid resolution {0} below the minimum of 41")]
    GridTooCoarse(usize),
    #[error("more than two isolated roots; the projected blend is degenerate")]
    TooManyRoots,
}

/// Brute-force roots of the projected blend over the open square.
///
/// Cells of an `n x n` grid whose corner values straddle zero in both
/// components are kept (the componentwise range of a bilinear function over
/// a cell is exactly its corner range, so pruning is lossless), subdivided
/// until small, then polished by 2-D Newton to residual `<= 1e-12` and
/// deduplicated at distance `1e-6`.
///
/// This path never touches the closed-form quadratic; it is the independent
/// check for `solve_sigmas`.
pub fn oracle_roots(corners: &QuadCorners, n: usize) -> Result<Vec<Vec2>, OracleError> {
    if n < 41 {
        return Err(OracleError::GridTooCoarse(n));
    }
    let map = bilinear_coeffs(corners);
    let cell = 2.0 / (n - 1) as f64;

    // Work queue of candidate boxes [psi0, phi0, size].
    let mut queue: Vec<(f64, f64, f64)> = Vec::new();
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let psi0 = -1.0 + i as f64 * cell;
            let phi0 = -1.0 + j as f64 * cell;
            if box_straddles(&map, psi0, phi0, cell) {
                queue.push((psi0, phi0, cell));
            }
        }
    }

    const ISOLATION: f64 = 1e-4;
    let mut roots: Vec<Vec2> = Vec::new();
    while let Some((psi0, phi0, size)) = queue.pop() {
        if size > ISOLATION {
            let half = 0.5 * size;
            for (di, dj) in [(0.0, 0.0), (half, 0.0), (0.0, half), (half, half)] {
                if box_straddles(&map, psi0 + di, phi0 + dj, half) {
                    queue.push((psi0 + di, phi0 + dj, half));
                }
            }
            continue;
        }
        if let Some(root) = newton_polish(&map, psi0 + 0.5 * size, phi0 + 0.5 * size) {
            let bound = 1.0 - tol::BND;
            if root[0].abs() < bound && root[1].abs() < bound {
                if !roots
                    .iter()
                    .any(|r| (r[0] - root[0]).abs() < 1e-6 && (r[1] - root[1]).abs() < 1e-6)
                {
                    roots.push(root);
                }
            }
        }
    }

    if roots.len() > 2 {
        return Err(OracleError::TooManyRoots);
    }
    roots.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap().then(a[1].partial_cmp(&b[1]).unwrap()));
    Ok(roots)
}

/// Both components take values of both signs (or zero) over the box.
fn box_straddles(map: &BilinearMap2, psi0: f64, phi0: f64, size: f64) -> bool {
    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    for (di, dj) in [(0.0, 0.0), (size, 0.0), (0.0, size), (size, size)] {
        let v = map.eval(psi0 + di, phi0 + dj);
        for k in 0..2 {
            min[k] = min[k].min(v[k]);
            max[k] = max[k].max(v[k]);
        }
    }
    (0..2).all(|k| min[k] <= 0.0 && max[k] >= 0.0)
}

/// Newton polish; reports divergence by returning None (the caller simply
/// skips the cell).
fn newton_polish(map: &BilinearMap2, mut psi: f64, mut phi: f64) -> Option<Vec2> {
    for _ in 0..60 {
        let v = map.eval(psi, phi);
        if v[0].abs().max(v[1].abs()) <= 1e-12 {
            return Some([psi, phi]);
        }
        let (dpsi, dphi) = map.partials(psi, phi);
        let det = det2(dpsi, dphi);
        if det == 0.0 {
            return None;
        }
        // Cramer solve of J d = -v.
        let step_psi = (-v[0] * dphi[1] + v[1] * dphi[0]) / det;
        let step_phi = (-v[1] * dpsi[0] + v[0] * dpsi[1]) / det;
        psi += step_psi;
        phi += step_phi;
        if psi.abs() > 2.0 || phi.abs() > 2.0 {
            return None;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pws::QuadCorners;

    fn s_sym() -> QuadCorners {
        QuadCorners::new(
            [1.0; 4],
            [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]],
        )
    }

    fn s_pos() -> QuadCorners {
        QuadCorners::new([1.0; 4], [[1.0, 1.0], [2.0, 1.0], [2.0, 2.0], [1.0, 2.0]])
    }

    fn s_two() -> QuadCorners {
        QuadCorners::new(
            [1.0; 4],
            [[1.25, 2.0], [-0.75, 0.0], [1.25, -2.0], [-0.75, 0.0]],
        )
    }

    #[test]
    fn symmetric_system_uses_linear_branch() {
        let out = solve_sigmas(&s_sym()).unwrap();
        assert_eq!(out.solutions.len(), 1);
        let s = &out.solutions[0];
        assert_eq!((s.sigma_psi, s.sigma_phi), (0.5, 0.5));
        assert_eq!(s.branch, Branch::Single);
        assert_eq!(s.nu, [0.25; 4]);
        assert!(residual(&s_sym(), s) <= tol::ROOT);
    }

    #[test]
    fn two_root_system() {
        let out = solve_sigmas(&s_two()).unwrap();
        assert_eq!(out.solutions.len(), 2);
        let pairs: Vec<(f64, f64)> = out
            .solutions
            .iter()
            .map(|s| (s.sigma_psi, s.sigma_phi))
            .collect();
        assert!(pairs.contains(&(0.25, 0.75)));
        assert!(pairs.contains(&(0.75, 0.25)));
        for s in &out.solutions {
            assert!(residual(&s_two(), s) <= tol::ROOT);
        }
    }

    #[test]
    fn all_positive_system_has_no_admissible_root() {
        let out = solve_sigmas(&s_pos()).unwrap();
        assert!(out.solutions.is_empty());
    }

    #[test]
    fn weights_and_speed() {
        assert_eq!(nu_coefficients(0.5, 0.5).unwrap(), [0.25; 4]);
        let nu = nu_coefficients(0.25, 0.75).unwrap();
        assert_eq!(nu, [3.0 / 16.0, 9.0 / 16.0, 3.0 / 16.0, 1.0 / 16.0]);
        let nu = nu_coefficients(0.999999, 0.5).unwrap();
        assert!((nu.iter().sum::<f64>() - 1.0).abs() <= tol::RES);
        assert!(nu_coefficients(0.0, 0.5).is_err());
        assert!(nu_coefficients(0.5, 1.0).is_err());

        let c = s_sym();
        assert_eq!(sliding_speed(&c, &[0.25; 4]), 1.0);
        let c = QuadCorners::new([2.0, 0.0, 2.0, 0.0], c.xt);
        assert_eq!(sliding_speed(&c, &[0.25; 4]), 1.0);
        let c = QuadCorners::new([1.0, 1.0, -1.0, -1.0], c.xt);
        assert_eq!(sliding_speed(&c, &[0.25; 4]), 0.0);
    }

    #[test]
    fn critical_point_lift() {
        let out = solve_sigmas(&s_sym()).unwrap();
        let p = critical_manifold_point(
            &out.solutions[0],
            RegFunction::Tanh,
            RegFunction::Tanh,
            0.0,
        )
        .unwrap();
        assert_eq!((p.y_hat, p.z_hat), (0.0, 0.0));

        // tanh lift of psi* = tanh(1).
        let sol = SlidingSolution {
            sigma_psi: (1.0 + 1.0f64.tanh()) / 2.0,
            sigma_phi: 0.5,
            psi_star: 1.0f64.tanh(),
            phi_star: 0.0,
            nu: [0.25; 4],
            speed: 0.0,
            branch: Branch::Single,
        };
        let p = critical_manifold_point(&sol, RegFunction::Tanh, RegFunction::Tanh, 0.0).unwrap();
        assert!((p.y_hat - 1.0).abs() <= 1e-12);

        // Cubic lift of psi* = 1/2: root of s(3 - s^2)/2 = 1/2.
        let sol = SlidingSolution {
            psi_star: 0.5,
            sigma_psi: 0.75,
            ..sol
        };
        let p = critical_manifold_point(
            &sol,
            RegFunction::SotomayorTeixeira,
            RegFunction::Tanh,
            0.0,
        )
        .unwrap();
        let s = p.y_hat;
        assert!((0.5 * s * (3.0 - s * s) - 0.5).abs() <= 1e-10);
        assert!((s - 0.34730).abs() < 1e-5);
    }

    #[test]
    fn oracle_on_worked_systems() {
        let roots = oracle_roots(&s_sym(), 41).unwrap();
        assert_eq!(roots.len(), 1);
        assert!(roots[0][0].abs() <= 1e-12 && roots[0][1].abs() <= 1e-12);

        let roots = oracle_roots(&s_two(), 41).unwrap();
        assert_eq!(roots.len(), 2);
        assert!((roots[0][0] + 0.5).abs() <= 1e-10 && (roots[0][1] - 0.5).abs() <= 1e-10);
        assert!((roots[1][0] - 0.5).abs() <= 1e-10 && (roots[1][1] + 0.5).abs() <= 1e-10);

        assert!(oracle_roots(&s_pos(), 41).unwrap().is_empty());
        assert_eq!(oracle_roots(&s_pos(), 40).unwrap_err(), OracleError::GridTooCoarse(40));
    }

    #[test]
    fn linear_branch_agrees_with_perturbed_quadratic() {
        // Nudging the corners off the degenerate case moves the quadratic
        // branch continuously into the linear one.
        let base = s_sym();
        let mut nudged = base;
        nudged.xt[0][0] -= 1e-6;
        let exact = solve_sigmas(&base).unwrap().solutions[0];
        let approx = solve_sigmas(&nudged).unwrap();
        assert_eq!(approx.solutions.len(), 1);
        let got = &approx.solutions[0];
        assert!((got.sigma_phi - exact.sigma_phi).abs() < 1e-4);
        assert!((got.sigma_psi - exact.sigma_psi).abs() < 1e-4);
    }
}
