//! Large randomized cross-check of the three independent routes to sliding
//! existence and type: determinant criteria, closed-form solve and the
//! grid/Newton oracle. Run with --release; prints per-stratum agreement.
//!
//!     cargo run --release -p filippov-core --example verification_sweep

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use filippov_core::canopy::{canopy_invariants, origin_location, quad_shape, OriginLocation, QuadClass};
use filippov_core::geom::point_segment_distance;
use filippov_core::pws::QuadCorners;
use filippov_core::solver::{oracle_roots, solve_sigmas};
use filippov_core::stability::{det, tangent_jacobian, type_from_geometry, GeoType};

fn admissible(c: &QuadCorners) -> bool {
    let sh = quad_shape(c);
    if sh.delta.iter().any(|d| d.abs() <= 1e-3) {
        return false;
    }
    for i in 1..=4 {
        if point_segment_distance([0.0, 0.0], c.corner(i), c.corner(i % 4 + 1)) <= 1e-3 {
            return false;
        }
    }
    canopy_invariants(c).delta.abs() > 1e-3
}

fn stratum(c: &QuadCorners) -> String {
    match quad_shape(c).class {
        QuadClass::Convex => "convex".into(),
        QuadClass::Crossed { chi1_role } => format!("crossed-{chi1_role:?}").to_lowercase(),
        QuadClass::Concave { reflex } => format!("concave-{reflex}"),
        QuadClass::Degenerate => "degenerate".into(),
    }
}

fn main() {
    let n: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(100_000);
    let mut rng = StdRng::seed_from_u64(20240811);
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut type_checked = 0usize;
    let mut type_ok = 0usize;
    let mut kept = 0usize;

    while kept < n {
        let xt: [[f64; 2]; 4] =
            std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-2.0..2.0)));
        let c = QuadCorners::new([1.0; 4], xt);
        if !admissible(&c) {
            continue;
        }
        kept += 1;

        let location = origin_location(&c).expect("nondegenerate by filter");
        let solved = solve_sigmas(&c).expect("solvable by filter");
        let oracle = oracle_roots(&c, 41).expect("oracle converges on filtered corners");

        let agree = location.count() == oracle.len() && solved.solutions.len() == oracle.len();
        let entry = counts.entry(stratum(&c)).or_insert((0, 0));
        entry.0 += 1;
        if agree {
            entry.1 += 1;
        } else {
            println!(
                "mismatch: criteria {} / solver {} / oracle {} at corners {:?}",
                location.count(),
                solved.solutions.len(),
                oracle.len(),
                c.xt
            );
        }

        if let OriginLocation::Unique { region } = location {
            if let (Ok(geo), [sol]) = (type_from_geometry(&c, region), &solved.solutions[..]) {
                type_checked += 1;
                let d = det(&tangent_jacobian(&c, sol.psi_star, sol.phi_star));
                let algebra = if d < 0.0 {
                    GeoType::SaddleType
                } else {
                    GeoType::NodeFocusCenterType
                };
                if geo == algebra {
                    type_ok += 1;
                } else {
                    println!("type mismatch: {geo:?} vs det {d:.3e} at {:?}", c.xt);
                }
            }
        }
    }

    println!("{kept} admissible systems:");
    for (k, (total, ok)) in &counts {
        println!("  {k:>16}: {ok}/{total} count agreement");
    }
    println!("  geometric type vs det(DF~): {type_ok}/{type_checked}");
}
