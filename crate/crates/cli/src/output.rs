//! Deterministic text output: 17-significant-digit floats, event JSON and
//! the classify report.

use filippov_core::bifurcation::{BifurcationEvent, EventKind};
use filippov_core::canopy::{
    canopy_invariants, quad_shape, CanopyError, OriginLocation, QuadClass, UniqueRegion,
};
use filippov_core::pws::QuadCorners;
use filippov_core::solver::SlidingSolution;
use filippov_core::stability::{RegIndependence, StabilityKind, StabilityReport};

/// 17 significant digits: exact round trip for 64-bit floats.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn envelope(command: &str, digest: &str, name: &str, parameters: &[(String, String)]) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "tool: filippov-lab {}\n",
        env!("CARGO_PKG_VERSION")
    ));
    s.push_str(&format!("command: {command}\n"));
    s.push_str(&format!("input-digest: {digest}\n"));
    s.push_str(&format!("system: {name}\n"));
    for (k, v) in parameters {
        s.push_str(&format!("{k}: {v}\n"));
    }
    s
}

pub fn quad_class_label(class: &QuadClass) -> String {
    match class {
        QuadClass::Convex => "convex".to_string(),
        QuadClass::Crossed { chi1_role } => format!(
            "crossed (chi1 {})",
            match chi1_role {
                filippov_core::canopy::Chi1Role::Edge => "edge",
                filippov_core::canopy::Chi1Role::Diagonal => "diagonal",
            }
        ),
        QuadClass::Concave { reflex } => format!("concave (reflex corner {reflex})"),
        QuadClass::Degenerate => "degenerate".to_string(),
    }
}

pub fn region_label(region: &UniqueRegion) -> &'static str {
    match region {
        UniqueRegion::ConvexInterior => "convex interior",
        UniqueRegion::CrossedHomeo { .. } => "crossed homeomorphic lobe",
        UniqueRegion::ConcaveCrossedSub => "concave crossed subregion",
        UniqueRegion::ConcaveConvexSub => "concave convex subregion",
        UniqueRegion::OnParabolicLine => "on the parabolic line",
    }
}

fn kind_summary(report: &StabilityReport) -> String {
    let base = match report.kind {
        StabilityKind::Saddle => return "saddle".to_string(),
        StabilityKind::Node { .. } => "node",
        StabilityKind::Focus { .. } => "focus",
        StabilityKind::Center => "center",
        StabilityKind::NonHyperbolic => return "non-hyperbolic".to_string(),
    };
    match report.reg_independent {
        RegIndependence::Attracting => {
            format!("{base} (attracting, regularization-independent)")
        }
        RegIndependence::Repelling => {
            format!("{base} (repelling, regularization-independent)")
        }
        RegIndependence::DependsOnRegularization => {
            let verdict = match report.kind {
                StabilityKind::Node { attracting } | StabilityKind::Focus { attracting } => {
                    if attracting {
                        "attracting for tanh/tanh"
                    } else {
                        "repelling for tanh/tanh"
                    }
                }
                _ => "borderline for tanh/tanh",
            };
            format!("{base} ({verdict}, depends on regularization)")
        }
    }
}

pub struct ClassifyOutcome {
    pub text: String,
    /// 0 = some sliding, 3 = none, 4 = degenerate.
    pub exit_code: i32,
}

/// Full classification report at one x value. Stability is reported under
/// the tanh/tanh pair; the regularization-independence verdict qualifies it.
pub fn classify_report(
    header: String,
    corners: &QuadCorners,
    location: Result<OriginLocation, CanopyError>,
    solutions: &[(SlidingSolution, StabilityReport)],
    solver_note: Option<String>,
) -> ClassifyOutcome {
    let mut s = header;
    let shape = quad_shape(corners);
    let inv = canopy_invariants(corners);
    s.push_str(&format!("quad-class: {}\n", quad_class_label(&shape.class)));
    for (i, d) in shape.delta.iter().enumerate() {
        s.push_str(&format!("delta_{}: {}\n", i + 1, fmt_f(*d)));
    }
    s.push_str(&format!("A: {}\n", fmt_f(inv.a)));
    s.push_str(&format!("B: {}\n", fmt_f(inv.b)));
    s.push_str(&format!("Gamma: {}\n", fmt_f(inv.g)));
    s.push_str(&format!("Delta: {}\n", fmt_f(inv.delta)));

    let origin_line = match &location {
        Ok(OriginLocation::NoSliding) => "no sliding".to_string(),
        Ok(OriginLocation::Unique { region }) => format!("unique ({})", region_label(region)),
        Ok(OriginLocation::Double) => "double (two sliding fields)".to_string(),
        Err(e) => format!("unresolved: {e}"),
    };
    s.push_str(&format!("origin: {origin_line}\n"));
    if let Some(note) = solver_note {
        s.push_str(&format!("solver-note: {note}\n"));
    }

    s.push_str(&format!("solutions: {}\n", solutions.len()));
    for (k, (sol, report)) in solutions.iter().enumerate() {
        s.push_str(&format!("solution {}:\n", k + 1));
        s.push_str(&format!("  sigma_psi: {}\n", fmt_f(sol.sigma_psi)));
        s.push_str(&format!("  sigma_phi: {}\n", fmt_f(sol.sigma_phi)));
        s.push_str(&format!(
            "  nu: [{}, {}, {}, {}]\n",
            fmt_f(sol.nu[0]),
            fmt_f(sol.nu[1]),
            fmt_f(sol.nu[2]),
            fmt_f(sol.nu[3])
        ));
        s.push_str(&format!("  speed: {}\n", fmt_f(sol.speed)));
        s.push_str(&format!(
            "  stability (tanh/tanh): {}\n",
            report.kind.label()
        ));
        s.push_str(&format!(
            "  det_J: {}  trace_J: {}\n",
            fmt_f(report.det_j),
            fmt_f(report.trace_j)
        ));
        let ri = if report.kind == StabilityKind::Saddle {
            "saddle type for every regularization pair"
        } else {
            match report.reg_independent {
                RegIndependence::Attracting => "attracting for every regularization pair",
                RegIndependence::Repelling => "repelling for every regularization pair",
                RegIndependence::DependsOnRegularization => "depends on the regularization pair",
            }
        };
        s.push_str(&format!("  reg-independent: {ri}\n"));
    }

    let class_word = match shape.class {
        QuadClass::Degenerate => "degenerate",
        QuadClass::Convex => "convex",
        QuadClass::Crossed { .. } => "crossed",
        QuadClass::Concave { .. } => "concave",
    };
    let count_word = match &location {
        Ok(OriginLocation::NoSliding) => "none".to_string(),
        Ok(OriginLocation::Unique { .. }) => "unique".to_string(),
        Ok(OriginLocation::Double) => "double".to_string(),
        Err(_) => "unresolved".to_string(),
    };
    let mut summary = format!("summary: {class_word}; {count_word}");
    if solutions.is_empty() {
        summary.push_str("; no sliding");
    } else {
        let kinds: Vec<String> = solutions.iter().map(|(_, r)| kind_summary(r)).collect();
        summary.push_str(&format!("; {}", kinds.join(" + ")));
        let speeds: Vec<String> = solutions.iter().map(|(s, _)| format!("{}", s.speed)).collect();
        summary.push_str(&format!("; speed={}", speeds.join(",")));
    }
    s.push_str(&summary);
    s.push('\n');

    let exit_code = match &location {
        Err(_) => 4,
        Ok(OriginLocation::NoSliding) => 3,
        _ => {
            if solutions.is_empty() {
                3
            } else {
                0
            }
        }
    };
    ClassifyOutcome { text: s, exit_code }
}

/// Events as a JSON array, one object per line, floats at 17 significant
/// digits, diagnostics as a key-ordered object.
pub fn events_json(events: &[BifurcationEvent]) -> String {
    let mut s = String::from("[");
    for (i, ev) in events.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str("\n  ");
        s.push_str(&event_json(ev));
    }
    if !events.is_empty() {
        s.push('\n');
    }
    s.push_str("]\n");
    s
}

fn event_json(ev: &BifurcationEvent) -> String {
    let mut fields: Vec<String> = Vec::new();
    fields.push(format!("\"kind\": \"{}\"", ev.kind.label()));
    fields.push(format!("\"x_star\": {}", fmt_f(ev.x_star)));
    fields.push(format!(
        "\"bracket\": [{}, {}]",
        fmt_f(ev.bracket.0),
        fmt_f(ev.bracket.1)
    ));
    match ev.kind {
        EventKind::EdgeCrossing { edge } => fields.push(format!("\"edge\": {edge}")),
        EventKind::CountChange { from, to } => {
            fields.push(format!("\"from\": {from}"));
            fields.push(format!("\"to\": {to}"));
        }
        EventKind::CanardCandidate {
            check_a,
            check_b,
            check_c,
        } => {
            fields.push(format!("\"check_a\": {check_a}"));
            fields.push(format!("\"check_b\": {check_b}"));
            fields.push(format!("\"check_c\": {check_c}"));
        }
        _ => {}
    }
    let diag: Vec<String> = ev
        .diagnostics
        .iter()
        .map(|(k, v)| format!("\"{k}\": {}", fmt_f(*v)))
        .collect();
    fields.push(format!("\"diagnostics\": {{{}}}", diag.join(", ")));
    format!("{{{}}}", fields.join(", "))
}
