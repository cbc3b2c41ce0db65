//! Layer problem, reduced problem and time integration of the regularized
//! system, plus the epsilon-sweep convergence experiment.

use thiserror::Error;

use crate::canopy::{f_tilde, origin_location, OriginLocation};
use crate::ode::{self, OdeError, SolverStats};
use crate::pws::{PwsSystem, QuadCorners};
use crate::reg::{regularized_field, RegFunction};
use crate::solver::{solve_sigmas, SlidingSolution};
use crate::stability::{reg_independent_stability, RegIndependence};

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("no attracting sliding solution at x = {0}")]
    NoAttractingSliding(f64),
    #[error("empty epsilon list")]
    EmptyEpsList,
}

/// Fast variables of the layer problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerState {
    pub y_hat: f64,
    pub z_hat: f64,
}

/// Sampled trajectory with run metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub eps: Option<f64>,
    pub reg_names: (String, String),
    pub stats: SolverStats,
}

/// Right-hand side of the layer problem: the projected blend evaluated at
/// the regularized fast variables. `x` is frozen inside `corners`.
pub fn layer_rhs(
    corners: &QuadCorners,
    reg_y: RegFunction,
    reg_z: RegFunction,
    s: LayerState,
) -> [f64; 2] {
    f_tilde(corners, reg_y.value(s.y_hat), reg_z.value(s.z_hat))
}

/// Reduced flow speed of an admissible solution (delegates to the weighted
/// tangential components).
pub fn reduced_rhs(corners: &QuadCorners, sol: &SlidingSolution) -> f64 {
    crate::solver::sliding_speed(corners, &sol.nu)
}

/// Integrate the regularized system from `p0` to `t_end`, sampling
/// `n_samples` points uniformly (endpoints included).
#[allow(clippy::too_many_arguments)]
pub fn integrate_regularized(
    system: &PwsSystem,
    reg_y: RegFunction,
    reg_z: RegFunction,
    eps: f64,
    p0: [f64; 3],
    t_end: f64,
    rtol: f64,
    atol: f64,
    n_samples: usize,
) -> Result<Trajectory<3>, (DynamicsError, Trajectory<3>)> {
    let meta = (reg_y.name().to_string(), reg_z.name().to_string());
    if !(eps > 0.0) {
        return Err((
            DynamicsError::NonPositiveEpsilon(eps),
            Trajectory {
                times: Vec::new(),
                states: Vec::new(),
                eps: None,
                reg_names: meta,
                stats: SolverStats::default(),
            },
        ));
    }
    let samples = uniform_samples(t_end, n_samples);
    let rhs = |_t: f64, p: &[f64; 3]| {
        regularized_field(system, reg_y, reg_z, eps, *p).expect("eps checked positive")
    };
    wrap(
        ode::integrate(rhs, p0, t_end, rtol, atol, &samples),
        Some(eps),
        meta,
    )
}

/// Integrate the 2-D layer problem in fast time at frozen corners.
pub fn integrate_layer(
    corners: &QuadCorners,
    reg_y: RegFunction,
    reg_z: RegFunction,
    s0: LayerState,
    tau_end: f64,
    n_samples: usize,
) -> Result<Trajectory<2>, (DynamicsError, Trajectory<2>)> {
    let samples = uniform_samples(tau_end, n_samples);
    let rhs = |_t: f64, s: &[f64; 2]| {
        layer_rhs(
            corners,
            reg_y,
            reg_z,
            LayerState {
                y_hat: s[0],
                z_hat: s[1],
            },
        )
    };
    wrap(
        ode::integrate(rhs, [s0.y_hat, s0.z_hat], tau_end, 1e-9, 1e-12, &samples),
        None,
        (reg_y.name().to_string(), reg_z.name().to_string()),
    )
}

fn uniform_samples(t_end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![t_end],
        _ => (0..n)
            .map(|k| t_end * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn wrap<const N: usize>(
    r: Result<ode::Solution<N>, (OdeError, ode::Solution<N>)>,
    eps: Option<f64>,
    reg_names: (String, String),
) -> Result<Trajectory<N>, (DynamicsError, Trajectory<N>)> {
    match r {
        Ok(sol) => Ok(Trajectory {
            times: sol.times,
            states: sol.states,
            eps,
            reg_names,
            stats: sol.stats,
        }),
        Err((e, partial)) => Err((
            DynamicsError::Ode(e),
            Trajectory {
                times: partial.times,
                states: partial.states,
                eps,
                reg_names,
                stats: partial.stats,
            },
        )),
    }
}

/// One row of the convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub sup_error: f64,
    /// Empirical order against the previous row; None for the first row.
    pub order: Option<f64>,
}

/// Sup-norm error of the regularized `x(t)` against the reduced flow, after
/// discarding the initial boundary layer of duration `10 eps |ln eps|`, for
/// each epsilon in the list.
///
/// The initial data is an `x0`-slice point in stretched coordinates: the run
/// for a given epsilon starts at `(x0, eps * y_hat0, eps * z_hat0)`, i.e. at
/// a fixed position inside the switching layer. The discard window then
/// covers the fast transient (decay `exp(-c t / eps)`) for every epsilon,
/// and what remains measures the slow flow against the sliding field. The
/// reduced flow is integrated from the same `x0` with the unique attracting
/// sliding speed; that precondition is checked at `x0` and at the end of
/// the visited range.
pub fn convergence_experiment(
    system: &PwsSystem,
    reg_y: RegFunction,
    reg_z: RegFunction,
    slice0: [f64; 3],
    eps_list: &[f64],
    t_end: f64,
) -> Result<Vec<ConvergenceRow>, DynamicsError> {
    if eps_list.is_empty() {
        return Err(DynamicsError::EmptyEpsList);
    }
    check_attracting(system, slice0[0])?;

    let n_samples = 401;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        if !(eps > 0.0) {
            return Err(DynamicsError::NonPositiveEpsilon(eps));
        }
        let p0 = [slice0[0], eps * slice0[1], eps * slice0[2]];
        let traj = integrate_regularized(
            system, reg_y, reg_z, eps, p0, t_end, 1e-10, 1e-12, n_samples,
        )
        .map_err(|(e, _)| e)?;
        let reduced = reduced_flow(system, p0[0], t_end, &traj.times)?;
        check_attracting(system, *reduced.last().expect("nonempty samples"))?;

        let discard = 10.0 * eps * eps.ln().abs();
        let mut sup = 0.0f64;
        for ((t, state), xr) in traj.times.iter().zip(&traj.states).zip(&reduced) {
            if *t >= discard {
                sup = sup.max((state[0] - xr).abs());
            }
        }
        let order = rows.last().map(|prev: &ConvergenceRow| {
            (prev.sup_error / sup).ln() / (prev.eps / eps).ln()
        });
        rows.push(ConvergenceRow {
            eps,
            sup_error: sup,
            order,
        });
    }
    Ok(rows)
}

/// Integrate the reduced flow `x' = speed(x)` and sample it at `times`.
fn reduced_flow(
    system: &PwsSystem,
    x0: f64,
    t_end: f64,
    times: &[f64],
) -> Result<Vec<f64>, DynamicsError> {
    let rhs = |_t: f64, x: &[f64; 1]| [attracting_speed(system, x[0]).unwrap_or(f64::NAN)];
    let sol = ode::integrate(rhs, [x0], t_end, 1e-12, 1e-14, times).map_err(|(e, _)| e)?;
    Ok(sol.states.iter().map(|s| s[0]).collect())
}

/// Speed of the unique attracting sliding solution at `x`, if any.
fn attracting_speed(system: &PwsSystem, x: f64) -> Option<f64> {
    let corners = system.project(x);
    let out = solve_sigmas(&corners).ok()?;
    let sol = unique_attracting(&corners, &out.solutions)?;
    Some(reduced_rhs(&corners, &sol))
}

fn unique_attracting(
    corners: &QuadCorners,
    sols: &[SlidingSolution],
) -> Option<SlidingSolution> {
    let attracting: Vec<&SlidingSolution> = sols
        .iter()
        .filter(|s| reg_independent_stability(corners, s) == RegIndependence::Attracting)
        .collect();
    if attracting.len() == 1 {
        Some(*attracting[0])
    } else {
        None
    }
}

fn check_attracting(system: &PwsSystem, x: f64) -> Result<(), DynamicsError> {
    let corners = system.project(x);
    let unique = matches!(
        origin_location(&corners),
        Ok(OriginLocation::Unique { .. })
    );
    let out = solve_sigmas(&corners).map_err(|_| DynamicsError::NoAttractingSliding(x))?;
    if unique && unique_attracting(&corners, &out.solutions).is_some() {
        Ok(())
    } else {
        Err(DynamicsError::NoAttractingSliding(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::critical_manifold_point;

    fn s_sym_system(alpha: [f64; 4]) -> PwsSystem {
        PwsSystem::from_constants([
            [alpha[0], -1.0, -1.0],
            [alpha[1], 1.0, -1.0],
            [alpha[2], 1.0, 1.0],
            [alpha[3], -1.0, 1.0],
        ])
    }

    fn s_two_corners() -> QuadCorners {
        QuadCorners::new(
            [1.0; 4],
            [[1.25, 2.0], [-0.75, 0.0], [1.25, -2.0], [-0.75, 0.0]],
        )
    }

    #[test]
    fn layer_rhs_matches_blend() {
        let sys = s_sym_system([1.0; 4]);
        let corners = sys.project(0.0);
        let r = layer_rhs(
            &corners,
            RegFunction::Tanh,
            RegFunction::Tanh,
            LayerState {
                y_hat: 0.0,
                z_hat: 0.0,
            },
        );
        assert_eq!(r, [0.0, 0.0]);

        let r = layer_rhs(
            &s_two_corners(),
            RegFunction::Arctan,
            RegFunction::Arctan,
            LayerState {
                y_hat: 0.0,
                z_hat: 0.0,
            },
        );
        assert_eq!(r, [0.25, 0.0]);
    }

    #[test]
    fn layer_converges_to_critical_point() {
        let sys = s_sym_system([1.0; 4]);
        let corners = sys.project(0.0);
        let traj = integrate_layer(
            &corners,
            RegFunction::Tanh,
            RegFunction::Tanh,
            LayerState {
                y_hat: 1.0,
                z_hat: 1.0,
            },
            20.0,
            11,
        )
        .unwrap();
        let last = traj.states.last().unwrap();
        let sol = solve_sigmas(&corners).unwrap().solutions[0];
        let cp = critical_manifold_point(&sol, RegFunction::Tanh, RegFunction::Tanh, 0.0).unwrap();
        assert!((last[0] - cp.y_hat).abs() < 1e-6);
        assert!((last[1] - cp.z_hat).abs() < 1e-6);
        // The lifted point is an equilibrium of the layer problem.
        let res = layer_rhs(
            &corners,
            RegFunction::Tanh,
            RegFunction::Tanh,
            LayerState {
                y_hat: cp.y_hat,
                z_hat: cp.z_hat,
            },
        );
        assert!(res[0].abs() <= 1e-10 && res[1].abs() <= 1e-10);
    }

    #[test]
    fn regularized_slides_at_unit_speed() {
        let sys = s_sym_system([1.0; 4]);
        let traj = integrate_regularized(
            &sys,
            RegFunction::Tanh,
            RegFunction::Tanh,
            1e-3,
            [0.0, 0.5, 0.5],
            1.0,
            1e-8,
            1e-10,
            11,
        )
        .unwrap();
        let last = traj.states.last().unwrap();
        assert!((last[0] - 1.0).abs() < 5e-3, "x(1) = {}", last[0]);
        assert!(last[1].abs() < 1e-3 && last[2].abs() < 1e-3);
    }

    #[test]
    fn zero_field_is_stationary() {
        let sys = PwsSystem::from_constants([[0.0; 3]; 4]);
        let traj = integrate_regularized(
            &sys,
            RegFunction::Tanh,
            RegFunction::Tanh,
            1e-2,
            [0.1, 0.2, 0.3],
            1.0,
            1e-8,
            1e-10,
            5,
        )
        .unwrap();
        for s in &traj.states {
            assert!((s[0] - 0.1).abs() < 1e-14);
            assert!((s[1] - 0.2).abs() < 1e-14);
            assert!((s[2] - 0.3).abs() < 1e-14);
        }
    }

    #[test]
    fn invalid_epsilon_is_rejected() {
        let sys = s_sym_system([1.0; 4]);
        let r = integrate_regularized(
            &sys,
            RegFunction::Tanh,
            RegFunction::Tanh,
            0.0,
            [0.0; 3],
            1.0,
            1e-8,
            1e-10,
            5,
        );
        assert!(matches!(r, Err((DynamicsError::NonPositiveEpsilon(_), _))));
    }

    #[test]
    fn convergence_orders() {
        // Tangential components vary across quadrants so the slow-manifold
        // offset is visible in x.
        let sys = s_sym_system([2.0, 0.0, 2.0, 0.0]);
        let rows = convergence_experiment(
            &sys,
            RegFunction::Tanh,
            RegFunction::Tanh,
            [0.0, 0.5, 0.5],
            &[1e-2, 5e-3, 2.5e-3],
            1.0,
        )
        .unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].sup_error > rows[1].sup_error);
        assert!(rows[1].sup_error > rows[2].sup_error);
        for r in &rows[1..] {
            assert!(r.order.unwrap() >= 0.9, "order {:?}", r.order);
        }
    }

    #[test]
    fn zero_speed_system_stays_near_start() {
        let sys = s_sym_system([1.0, 1.0, -1.0, -1.0]);
        let rows = convergence_experiment(
            &sys,
            RegFunction::Tanh,
            RegFunction::Tanh,
            [0.0, 0.5, 0.5],
            &[1e-2],
            1.0,
        )
        .unwrap();
        // Reduced flow is stationary; the regularized x stays within O(eps).
        assert!(rows[0].sup_error < 1e-2);
    }

    #[test]
    fn repelling_configuration_is_refused() {
        // Time-reversed symmetric system: the sliding solution repels.
        let sys = s_sym_system([1.0; 4]);
        let reversed = PwsSystem::from_constants([
            [1.0, 1.0, 1.0],
            [1.0, -1.0, 1.0],
            [1.0, -1.0, -1.0],
            [1.0, 1.0, -1.0],
        ]);
        assert!(convergence_experiment(
            &reversed,
            RegFunction::Tanh,
            RegFunction::Tanh,
            [0.0, 0.5, 0.5],
            &[1e-2],
            1.0,
        )
        .is_err());
        // Sanity: the forward system is accepted.
        assert!(convergence_experiment(
            &sys,
            RegFunction::Tanh,
            RegFunction::Tanh,
            [0.0, 0.5, 0.5],
            &[1e-2],
            1.0,
        )
        .is_ok());
    }
}
