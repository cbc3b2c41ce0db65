//! Sliding bifurcation scan along the intersection line.
//!
//! Three monitors are sampled in `x` and every strict sign change is refined
//! by bisection: the corner determinants `det(X~_i X~_{i+1})` (edge
//! crossings, where the origin passes through a quadrilateral edge and an
//! adjacent codimension-1 sliding field reverses), the discriminant of the
//! sliding quadratic (parabolic tangencies, the saddle-node of the layer
//! problem), and the admissible-solution count (a safety net that catches
//! changes without a matching geometric cause, such as a root leaving
//! through a corner of the parameter square).

use thiserror::Error;

use crate::canopy::canopy_invariants;
use crate::geom;
use crate::pws::{PwsSystem, QuadCorners};
use crate::solver::{sliding_speed, solve_sigmas};
use crate::stability::{fast_jacobian, tangent_jacobian};
use crate::tol;

#[derive(Debug, Error, PartialEq)]
pub enum ScanError {
    #[error("need at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("empty scan range [{0}, {1}]")]
    EmptyRange(f64, f64),
}

#[derive(Debug, Error, PartialEq)]
pub enum CanardError {
    #[error("no admissible double root at x = {0}")]
    NotOnParabolicLine(f64),
}

/// Width below which a bisection bracket is considered converged.
const BRACKET_WIDTH: f64 = 1e-10;
/// Events of the same kind closer than this are one geometric event.
const EVENT_MERGE_DISTANCE: f64 = 1e-9;
/// A count change this close to a geometric event is explained by it.
const COUNT_MATCH_DISTANCE: f64 = 1e-7;
/// Origin-on-segment tolerance, relative to the segment length.
const ON_SEGMENT_REL: f64 = 1e-8;
/// Origin this close to a segment endpoint counts as a corner passage, not
/// an edge crossing.
const ENDPOINT_REL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    /// The origin crossed the interior of quadrilateral edge `edge`
    /// (consecutive projected fields anti-parallel).
    EdgeCrossing { edge: usize },
    /// The origin crossed the parabolic line: a saddle-node of the layer
    /// problem, solution count changing between 0 and 2.
    ParabolicTangency,
    /// Admissible-solution count changed without a matching geometric
    /// cause.
    CountChange { from: usize, to: usize },
    /// A parabolic tangency whose fold also annihilates the sliding speed;
    /// candidate for a canard explosion under the x-unfolding.
    CanardCandidate {
        check_a: bool,
        check_b: bool,
        check_c: bool,
    },
    /// A sample point with a degenerate projected quadrilateral.
    DegeneracyEncountered,
}

impl EventKind {
    pub fn label(&self) -> &'static str {
        match self {
            EventKind::EdgeCrossing { .. } => "edge_crossing",
            EventKind::ParabolicTangency => "parabolic_tangency",
            EventKind::CountChange { .. } => "count_change",
            EventKind::CanardCandidate { .. } => "canard_candidate",
            EventKind::DegeneracyEncountered => "degeneracy_encountered",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationEvent {
    pub x_star: f64,
    pub kind: EventKind,
    pub bracket: (f64, f64),
    /// Named diagnostic values, in a stable order.
    pub diagnostics: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Copy)]
pub struct ScanConfig {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n: usize,
    /// Double the sample count until the event set stabilizes twice.
    pub refine: bool,
}

pub fn scan(system: &PwsSystem, config: &ScanConfig) -> Result<Vec<BifurcationEvent>, ScanError> {
    if config.n < 3 {
        return Err(ScanError::TooFewSamples(config.n));
    }
    if !(config.x_lo < config.x_hi) {
        return Err(ScanError::EmptyRange(config.x_lo, config.x_hi));
    }
    if !config.refine {
        return Ok(scan_once(system, config.x_lo, config.x_hi, config.n));
    }
    let mut n = config.n;
    let mut events = scan_once(system, config.x_lo, config.x_hi, n);
    let mut stable = 0;
    while stable < 2 && n < config.n.saturating_mul(1 << 12) {
        n *= 2;
        let next = scan_once(system, config.x_lo, config.x_hi, n);
        if same_event_set(&events, &next) {
            stable += 1;
        } else {
            stable = 0;
        }
        events = next;
    }
    Ok(events)
}

fn same_event_set(a: &[BifurcationEvent], b: &[BifurcationEvent]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b.iter()).all(|(ea, eb)| {
            std::mem::discriminant(&ea.kind) == std::mem::discriminant(&eb.kind)
                && (ea.x_star - eb.x_star).abs() <= 1e-8
        })
}

fn scan_once(system: &PwsSystem, x_lo: f64, x_hi: f64, n: usize) -> Vec<BifurcationEvent> {
    let xs: Vec<f64> = (0..n)
        .map(|k| x_lo + (x_hi - x_lo) * k as f64 / (n - 1) as f64)
        .collect();

    let edge_det = |i: usize, x: f64| {
        let c = system.project(x);
        c.corner_det(i, i % 4 + 1)
    };
    let delta = |x: f64| canopy_invariants(&system.project(x)).delta;
    let count = |x: f64| {
        solve_sigmas(&system.project(x))
            .ok()
            .map(|out| out.solutions.len())
    };

    let mut events: Vec<BifurcationEvent> = Vec::new();

    // A sample where the closed-form solve itself degenerates (both
    // quadratic branches vanish) cannot be monitored; surface it as an
    // event. Merely coincident corners are fine: every monitor below is
    // still well defined there.
    for &x in &xs {
        if count(x).is_none() {
            events.push(BifurcationEvent {
                x_star: x,
                kind: EventKind::DegeneracyEncountered,
                bracket: (x, x),
                diagnostics: vec![("sample_x".to_string(), x)],
            });
        }
    }

    for w in xs.windows(2) {
        let (lo, hi) = (w[0], w[1]);

        for i in 1..=4 {
            let f = |x: f64| edge_det(i, x);
            if f(lo) * f(hi) < 0.0 {
                let (blo, bhi) = bisect(&f, lo, hi);
                let x_star = 0.5 * (blo + bhi);
                if let Some(ev) = edge_event(system, i, x_star, (blo, bhi)) {
                    events.push(ev);
                }
            }
        }

        if delta(lo) * delta(hi) < 0.0 {
            let (blo, bhi) = bisect(&delta, lo, hi);
            let x_star = 0.5 * (blo + bhi);
            if let Ok(c) = canard_candidate(system, x_star) {
                let mut diagnostics = vec![
                    ("delta_lo".to_string(), delta(blo)),
                    ("delta_hi".to_string(), delta(bhi)),
                    ("sigma_psi".to_string(), c.sigma_psi),
                    ("sigma_phi".to_string(), c.sigma_phi),
                    ("speed".to_string(), c.speed),
                ];
                if let (Some(cl), Some(ch)) = (count(lo), count(hi)) {
                    diagnostics.push(("count_before".to_string(), cl as f64));
                    diagnostics.push(("count_after".to_string(), ch as f64));
                }
                events.push(BifurcationEvent {
                    x_star,
                    kind: EventKind::ParabolicTangency,
                    bracket: (blo, bhi),
                    diagnostics,
                });
                if c.check_a && c.check_b && c.check_c {
                    events.push(BifurcationEvent {
                        x_star,
                        kind: EventKind::CanardCandidate {
                            check_a: true,
                            check_b: true,
                            check_c: true,
                        },
                        bracket: (blo, bhi),
                        diagnostics: vec![
                            ("speed".to_string(), c.speed),
                            ("nullcline_slope".to_string(), c.nullcline_slope),
                            ("d_delta_dx".to_string(), c.d_delta_dx),
                        ],
                    });
                }
            }
        }

        if let (Some(c_lo), Some(c_hi)) = (count(lo), count(hi)) {
            if c_lo != c_hi {
                let keep_lo = |x: f64| count(x) == Some(c_lo);
                let (blo, bhi) = bisect_predicate(&keep_lo, lo, hi);
                let x_star = 0.5 * (blo + bhi);
                events.push(BifurcationEvent {
                    x_star,
                    kind: EventKind::CountChange {
                        from: c_lo,
                        to: c_hi,
                    },
                    bracket: (blo, bhi),
                    diagnostics: corner_proximity(system, if c_lo > c_hi { blo } else { bhi }),
                });
            }
        }
    }

    events.sort_by(|a, b| a.x_star.partial_cmp(&b.x_star).unwrap());
    merge_events(events)
}

/// Check the anti-parallel (origin-on-edge) configuration at a refined
/// determinant zero. A corner sweeping through the origin also flips the
/// determinant, so the origin must sit on the segment interior.
fn edge_event(
    system: &PwsSystem,
    edge: usize,
    x_star: f64,
    bracket: (f64, f64),
) -> Option<BifurcationEvent> {
    let c = system.project(x_star);
    let a = c.corner(edge);
    let b = c.corner(edge % 4 + 1);
    let len = geom::norm([b[0] - a[0], b[1] - a[1]]);
    if len <= tol::DEG {
        return None;
    }
    let dist = geom::point_segment_distance([0.0, 0.0], a, b);
    let end_dist = geom::norm(a).min(geom::norm(b));
    if dist > ON_SEGMENT_REL * len || end_dist < ENDPOINT_REL * len {
        return None;
    }
    Some(BifurcationEvent {
        x_star,
        kind: EventKind::EdgeCrossing { edge },
        bracket,
        diagnostics: vec![
            (format!("det_{}{}", edge, edge % 4 + 1), c.corner_det(edge, edge % 4 + 1)),
            ("segment_distance".to_string(), dist),
            ("segment_length".to_string(), len),
        ],
    })
}

/// Distance of the surviving roots to the parameter-square boundary and
/// corners, evaluated on the side of the change where roots exist.
fn corner_proximity(system: &PwsSystem, x: f64) -> Vec<(String, f64)> {
    let mut edge_prox = f64::INFINITY;
    let mut corner_prox = f64::INFINITY;
    if let Ok(out) = solve_sigmas(&system.project(x)) {
        for s in &out.solutions {
            let dpsi = 1.0 - s.psi_star.abs();
            let dphi = 1.0 - s.phi_star.abs();
            edge_prox = edge_prox.min(dpsi.min(dphi));
            corner_prox = corner_prox.min(dpsi.max(dphi));
        }
    }
    vec![
        ("boundary_proximity".to_string(), edge_prox),
        ("corner_proximity".to_string(), corner_prox),
    ]
}

/// Merge coincident events: equal kinds within the merge distance collapse
/// onto the lowest edge index, and count changes explained by a geometric
/// event are dropped.
fn merge_events(events: Vec<BifurcationEvent>) -> Vec<BifurcationEvent> {
    let mut kept: Vec<BifurcationEvent> = Vec::with_capacity(events.len());
    for ev in events {
        match ev.kind {
            EventKind::CountChange { .. } => {
                let explained = kept.iter().any(|k| {
                    matches!(
                        k.kind,
                        EventKind::EdgeCrossing { .. } | EventKind::ParabolicTangency
                    ) && (k.x_star - ev.x_star).abs() <= COUNT_MATCH_DISTANCE
                });
                if !explained {
                    kept.push(ev);
                }
            }
            EventKind::EdgeCrossing { edge } => {
                if let Some(prev) = kept.iter_mut().find(|k| {
                    matches!(k.kind, EventKind::EdgeCrossing { .. })
                        && (k.x_star - ev.x_star).abs() <= EVENT_MERGE_DISTANCE
                }) {
                    prev.diagnostics
                        .push(("coincident_edge".to_string(), edge as f64));
                } else {
                    kept.push(ev);
                }
            }
            _ => {
                let duplicate = kept.iter().any(|k| {
                    std::mem::discriminant(&k.kind) == std::mem::discriminant(&ev.kind)
                        && (k.x_star - ev.x_star).abs() <= EVENT_MERGE_DISTANCE
                });
                if !duplicate {
                    kept.push(ev);
                }
            }
        }
    }
    // A geometric event can arrive after the count change it explains.
    let geometric: Vec<(f64, bool)> = kept
        .iter()
        .map(|k| {
            (
                k.x_star,
                matches!(
                    k.kind,
                    EventKind::EdgeCrossing { .. } | EventKind::ParabolicTangency
                ),
            )
        })
        .collect();
    kept.retain(|ev| {
        !(matches!(ev.kind, EventKind::CountChange { .. })
            && geometric
                .iter()
                .any(|(x, geo)| *geo && (x - ev.x_star).abs() <= COUNT_MATCH_DISTANCE))
    });
    kept
}

fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let mut f_lo = f(lo);
    for _ in 0..60 {
        if hi - lo <= BRACKET_WIDTH {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_lo * f_mid > 0.0 {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

fn bisect_predicate(p: &dyn Fn(f64) -> bool, mut lo: f64, mut hi: f64) -> (f64, f64) {
    for _ in 0..60 {
        if hi - lo <= BRACKET_WIDTH {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if p(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Canard-point diagnostics at a parabolic tangency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanardCandidate {
    pub x_star: f64,
    pub sigma_psi: f64,
    pub sigma_phi: f64,
    /// Sliding speed at the fold point.
    pub speed: f64,
    /// Slope of the speed along the critical manifold through the fold.
    pub nullcline_slope: f64,
    pub d_delta_dx: f64,
    /// Fold linearization has exactly one nonzero eigenvalue.
    pub check_a: bool,
    /// The speed vanishes at the fold and crosses zero transversally along
    /// the critical manifold.
    pub check_b: bool,
    /// The discriminant sweeps through zero with nonzero x-speed.
    pub check_c: bool,
}

/// Evaluate the canard-point conditions at a discriminant zero `x_star`.
///
/// The double root is taken at the vertex of the sliding quadratic, which
/// is well defined through the tangency.
pub fn canard_candidate(system: &PwsSystem, x_star: f64) -> Result<CanardCandidate, CanardError> {
    let corners = system.project(x_star);
    let (sigma_psi, sigma_phi) =
        vertex_root(&corners).ok_or(CanardError::NotOnParabolicLine(x_star))?;
    if !(sigma_psi > 0.0 && sigma_psi < 1.0 && sigma_phi > 0.0 && sigma_phi < 1.0) {
        return Err(CanardError::NotOnParabolicLine(x_star));
    }
    let (psi_star, phi_star) = (2.0 * sigma_psi - 1.0, 2.0 * sigma_phi - 1.0);
    let nu = [
        sigma_psi * sigma_phi,
        (1.0 - sigma_psi) * sigma_phi,
        (1.0 - sigma_psi) * (1.0 - sigma_phi),
        sigma_psi * (1.0 - sigma_phi),
    ];
    let speed = sliding_speed(&corners, &nu);

    // (a) one nonzero eigenvalue of the fold linearization (canonical
    // tanh/tanh slopes; the rank is slope-independent).
    let d = tangent_jacobian(&corners, psi_star, phi_star);
    let slope_psi = 1.0 - psi_star * psi_star;
    let slope_phi = 1.0 - phi_star * phi_star;
    let j = fast_jacobian(&d, slope_psi, slope_phi).expect("slopes positive inside the square");
    let det_j = crate::stability::det(&j);
    let tr_j = crate::stability::trace(&j);
    let check_a = tr_j.abs() > tol::DEG && (det_j / tr_j).abs() <= 1e-8 * tr_j.abs().max(1.0);

    // (b) the x-nullcline meets the critical manifold at the fold:
    // vanishing speed plus a transversal zero along the manifold, probed by
    // the two branches just inside the two-root side.
    let h_probe = 1e-4 * x_star.abs().max(1.0);
    let delta_at = |x: f64| canopy_invariants(&system.project(x)).delta;
    let inside = if delta_at(x_star + h_probe) > delta_at(x_star - h_probe) {
        x_star + h_probe
    } else {
        x_star - h_probe
    };
    let nullcline_slope = branch_speed_slope(system, inside).unwrap_or(0.0);
    let check_b = speed.abs() <= tol::DEG && nullcline_slope.abs() > tol::DEG;

    // (c) the discriminant itself sweeps through zero with nonzero speed.
    let h = 1e-6 * x_star.abs().max(1.0);
    let d_delta_dx = (delta_at(x_star + h) - delta_at(x_star - h)) / (2.0 * h);
    let check_c = d_delta_dx.abs() > tol::DEG;

    Ok(CanardCandidate {
        x_star,
        sigma_psi,
        sigma_phi,
        speed,
        nullcline_slope,
        d_delta_dx,
        check_a,
        check_b,
        check_c,
    })
}

/// Signed slope of the sliding speed between the two solution branches; a
/// sign change across the fold is required for a transversal nullcline
/// intersection.
fn branch_speed_slope(system: &PwsSystem, x: f64) -> Option<f64> {
    let corners = system.project(x);
    let out = solve_sigmas(&corners).ok()?;
    if out.solutions.len() != 2 {
        return None;
    }
    let (s0, s1) = (&out.solutions[0], &out.solutions[1]);
    if s0.speed * s1.speed > 0.0 {
        return None; // same sign: not transversal
    }
    let dist = ((s0.psi_star - s1.psi_star).powi(2) + (s0.phi_star - s1.phi_star).powi(2)).sqrt();
    if dist == 0.0 {
        return None;
    }
    Some((s0.speed - s1.speed) / dist)
}

/// Vertex of the sliding quadratic (the double root when the discriminant
/// vanishes), with the usual pairing back-substitution.
fn vertex_root(corners: &QuadCorners) -> Option<(f64, f64)> {
    let inv = canopy_invariants(corners);
    let q2 = inv.a + inv.g - inv.b;
    if q2.abs() <= tol::DEG {
        return None;
    }
    let sigma_phi = (2.0 * inv.g - inv.b) / (2.0 * q2);
    let sigma_psi = crate::solver::sigma_psi_from_phi(corners, sigma_phi)?;
    Some((sigma_psi, sigma_phi))
}

/// Equilibria of the radial dynamics along the four equator arcs of the
/// cylindrical blowup, one arc per quadrant field.
///
/// On the arc of quadrant `i` the dynamics is `rho' = rho (a - rho b)` with
/// `a = s_y beta_i`, `b = s_z gamma_i` and `(s_y, s_z)` the quadrant sign
/// pattern: the trivial root carries eigenvalue `a`, the nontrivial root
/// `a / b` (admissible when positive) carries `-a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquatorRoot {
    pub rho: f64,
    pub eigenvalue: f64,
    pub hyperbolic: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquatorDiagnostic {
    pub quadrant: usize,
    pub roots: Vec<EquatorRoot>,
}

pub fn equator_equilibria(corners: &QuadCorners) -> [EquatorDiagnostic; 4] {
    const SIGNS: [(f64, f64); 4] = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)];
    std::array::from_fn(|k| {
        let i = k + 1;
        let (sy, sz) = SIGNS[k];
        let a = sy * corners.beta(i);
        let b = sz * corners.gamma(i);
        let mut roots = vec![EquatorRoot {
            rho: 0.0,
            eigenvalue: a,
            hyperbolic: a.abs() > tol::DEG,
        }];
        if b != 0.0 && a / b > 0.0 {
            roots.push(EquatorRoot {
                rho: a / b,
                eigenvalue: -a,
                hyperbolic: a.abs() > tol::DEG,
            });
        }
        EquatorDiagnostic {
            quadrant: i,
            roots,
        }
    })
}
