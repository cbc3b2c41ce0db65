//! filippov-lab: analyze piecewise-smooth vector fields near the transversal
//! intersection of two switching planes.
//!
//! Exit codes: 0 success / sliding found, 1 file parse error, 2 invalid
//! arguments, 3 no sliding, 4 degenerate configuration, 5 solver failure,
//! 6 no attracting sliding solution.

mod output;
mod spec_file;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use filippov_core::bifurcation::{scan, ScanConfig};
use filippov_core::canopy::origin_location;
use filippov_core::dynamics::{convergence_experiment, integrate_regularized, DynamicsError};
use filippov_core::reg::RegFunction;
use filippov_core::solver::solve_sigmas;
use filippov_core::stability::stability_report;

use output::fmt_f;
use spec_file::{load_system, LoadedSystem};

#[derive(Parser)]
#[command(
    name = "filippov-lab",
    version,
    about = "Sliding vector fields of piecewise-smooth systems near a switching intersection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the projected quadrilateral and all sliding solutions at one x.
    Classify {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        x: f64,
    },
    /// Integrate the doubly regularized system; emit a t,x,y,z CSV.
    Simulate {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        x0: f64,
        #[arg(long)]
        y0: f64,
        #[arg(long)]
        z0: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long = "reg-y", default_value = "tanh")]
        reg_y: String,
        #[arg(long = "reg-z", default_value = "tanh")]
        reg_z: String,
        #[arg(long = "t-end")]
        t_end: f64,
        #[arg(long, default_value_t = 1e-8)]
        rtol: f64,
        #[arg(long, default_value_t = 1e-10)]
        atol: f64,
        #[arg(long, default_value_t = 101)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the layer vector field on an N x N grid over [-3, 3]^2.
    Layer {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        grid: usize,
        #[arg(long = "reg-y", default_value = "tanh")]
        reg_y: String,
        #[arg(long = "reg-z", default_value = "tanh")]
        reg_z: String,
    },
    /// Scan x for sliding bifurcations; emit a JSON event array.
    Scan {
        #[arg(long)]
        system: PathBuf,
        #[arg(long = "x-lo")]
        x_lo: Option<f64>,
        #[arg(long = "x-hi")]
        x_hi: Option<f64>,
        #[arg(long, default_value_t = 200)]
        n: usize,
        /// Double the sample count until the event set stabilizes twice.
        #[arg(long)]
        refine: bool,
    },
    /// Epsilon-sweep convergence table of the regularized flow against the
    /// reduced (sliding) flow.
    Converge {
        #[arg(long)]
        system: PathBuf,
        #[arg(long = "eps-list", value_delimiter = ',', required = true)]
        eps_list: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        x0: f64,
        /// Initial fast coordinate y/eps.
        #[arg(long = "y-hat0", default_value_t = 0.5)]
        y_hat0: f64,
        /// Initial fast coordinate z/eps.
        #[arg(long = "z-hat0", default_value_t = 0.5)]
        z_hat0: f64,
        #[arg(long = "t-end", default_value_t = 1.0)]
        t_end: f64,
        #[arg(long = "reg-y", default_value = "tanh")]
        reg_y: String,
        #[arg(long = "reg-z", default_value = "tanh")]
        reg_z: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("filippov-lab: {}", e.message);
            e.code
        }
    };
    ExitCode::from(code as u8)
}

struct CliError {
    code: i32,
    message: String,
}

fn invalid(message: impl Into<String>) -> CliError {
    CliError {
        code: 2,
        message: message.into(),
    }
}

fn load(path: &PathBuf) -> Result<LoadedSystem, CliError> {
    load_system(path).map_err(|e| CliError {
        code: 1,
        message: e.to_string(),
    })
}

fn reg_pair(reg_y: &str, reg_z: &str) -> Result<(RegFunction, RegFunction), CliError> {
    let ry = RegFunction::from_name(reg_y).map_err(|e| invalid(e.to_string()))?;
    let rz = RegFunction::from_name(reg_z).map_err(|e| invalid(e.to_string()))?;
    Ok((ry, rz))
}

/// Worker cap from FILIPPOV_LAB_THREADS (default: available parallelism).
fn worker_count(jobs: usize) -> usize {
    let avail = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let cap = std::env::var("FILIPPOV_LAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n >= 1)
        .unwrap_or(avail);
    cap.min(jobs).max(1)
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Classify { system, x } => cmd_classify(&system, x),
        Command::Simulate {
            system,
            x0,
            y0,
            z0,
            eps,
            reg_y,
            reg_z,
            t_end,
            rtol,
            atol,
            samples,
            out,
        } => cmd_simulate(
            &system, x0, y0, z0, eps, &reg_y, &reg_z, t_end, rtol, atol, samples, out,
        ),
        Command::Layer {
            system,
            x,
            grid,
            reg_y,
            reg_z,
        } => cmd_layer(&system, x, grid, &reg_y, &reg_z),
        Command::Scan {
            system,
            x_lo,
            x_hi,
            n,
            refine,
        } => cmd_scan(&system, x_lo, x_hi, n, refine),
        Command::Converge {
            system,
            eps_list,
            x0,
            y_hat0,
            z_hat0,
            t_end,
            reg_y,
            reg_z,
        } => cmd_converge(&system, &eps_list, x0, y_hat0, z_hat0, t_end, &reg_y, &reg_z),
    }
}

fn cmd_classify(path: &PathBuf, x: f64) -> Result<i32, CliError> {
    let loaded = load(path)?;
    if !loaded.system.contains_x(x) {
        eprintln!(
            "filippov-lab: note: x = {x} is outside the declared domain {:?}",
            loaded.system.x_domain()
        );
    }
    let corners = loaded.system.project(x);
    let location = origin_location(&corners);

    let (solutions, solver_note) = match solve_sigmas(&corners) {
        Ok(out) => {
            let mut rows = Vec::new();
            for sol in &out.solutions {
                let report =
                    stability_report(&corners, sol, RegFunction::Tanh, RegFunction::Tanh)
                        .map_err(|e| CliError {
                            code: 4,
                            message: e.to_string(),
                        })?;
                rows.push((*sol, report));
            }
            let note = if out.issues.is_empty() {
                None
            } else {
                Some(format!("{} candidate(s) rejected near the boundary", out.issues.len()))
            };
            (rows, note)
        }
        Err(e) => (Vec::new(), Some(e.to_string())),
    };

    let header = output::envelope(
        "classify",
        &loaded.digest,
        &loaded.spec.name,
        &[("x".to_string(), fmt_f(x))],
    );
    let outcome = output::classify_report(header, &corners, location, &solutions, solver_note);
    print!("{}", outcome.text);
    Ok(outcome.exit_code)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    path: &PathBuf,
    x0: f64,
    y0: f64,
    z0: f64,
    eps: f64,
    reg_y: &str,
    reg_z: &str,
    t_end: f64,
    rtol: f64,
    atol: f64,
    samples: usize,
    out: Option<PathBuf>,
) -> Result<i32, CliError> {
    let loaded = load(path)?;
    let (ry, rz) = reg_pair(reg_y, reg_z)?;
    if !(eps > 0.0) {
        return Err(invalid(format!("--eps must be positive, got {eps}")));
    }
    if !(t_end > 0.0) {
        return Err(invalid(format!("--t-end must be positive, got {t_end}")));
    }
    if !(rtol > 0.0 && atol > 0.0) {
        return Err(invalid("--rtol and --atol must be positive"));
    }
    if samples == 0 {
        return Err(invalid("--samples must be at least 1"));
    }

    let result = integrate_regularized(
        &loaded.system,
        ry,
        rz,
        eps,
        [x0, y0, z0],
        t_end,
        rtol,
        atol,
        samples,
    );
    let (traj, failure) = match result {
        Ok(t) => (t, None),
        Err((e, partial)) => (partial, Some(e)),
    };

    let mut csv = String::from("t,x,y,z\n");
    for (t, s) in traj.times.iter().zip(traj.states.iter()) {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f(*t),
            fmt_f(s[0]),
            fmt_f(s[1]),
            fmt_f(s[2])
        ));
    }
    match out {
        Some(p) => std::fs::write(&p, csv).map_err(|e| CliError {
            code: 5,
            message: format!("cannot write {}: {e}", p.display()),
        })?,
        None => print!("{csv}"),
    }
    if let Some(e) = failure {
        eprintln!("filippov-lab: solver failure: {e} (partial trajectory emitted)");
        return Ok(5);
    }
    Ok(0)
}

fn cmd_layer(path: &PathBuf, x: f64, grid: usize, reg_y: &str, reg_z: &str) -> Result<i32, CliError> {
    let loaded = load(path)?;
    let (ry, rz) = reg_pair(reg_y, reg_z)?;
    if grid < 2 {
        return Err(invalid(format!("--grid must be at least 2, got {grid}")));
    }
    const HALF_WIDTH: f64 = 3.0;
    let corners = loaded.system.project(x);
    let mut out = String::from("y_hat,z_hat,y_hat_dot,z_hat_dot\n");
    let coord = |k: usize| -HALF_WIDTH + 2.0 * HALF_WIDTH * k as f64 / (grid - 1) as f64;
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    for i in 0..grid {
        for j in 0..grid {
            let (y_hat, z_hat) = (coord(i), coord(j));
            let rhs = filippov_core::dynamics::layer_rhs(
                &corners,
                ry,
                rz,
                filippov_core::dynamics::LayerState { y_hat, z_hat },
            );
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f(y_hat),
                fmt_f(z_hat),
                fmt_f(rhs[0]),
                fmt_f(rhs[1])
            ));
        }
    }
    w.write_all(out.as_bytes()).map_err(|e| CliError {
        code: 5,
        message: e.to_string(),
    })?;
    Ok(0)
}

fn cmd_scan(
    path: &PathBuf,
    x_lo: Option<f64>,
    x_hi: Option<f64>,
    n: usize,
    refine: bool,
) -> Result<i32, CliError> {
    let loaded = load(path)?;
    let (dom_lo, dom_hi) = loaded.system.x_domain();
    let config = ScanConfig {
        x_lo: x_lo.unwrap_or(dom_lo),
        x_hi: x_hi.unwrap_or(dom_hi),
        n,
        refine,
    };
    let events = scan(&loaded.system, &config).map_err(|e| invalid(e.to_string()))?;
    print!("{}", output::events_json(&events));
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_converge(
    path: &PathBuf,
    eps_list: &[f64],
    x0: f64,
    y_hat0: f64,
    z_hat0: f64,
    t_end: f64,
    reg_y: &str,
    reg_z: &str,
) -> Result<i32, CliError> {
    let loaded = load(path)?;
    let (ry, rz) = reg_pair(reg_y, reg_z)?;
    if eps_list.is_empty() {
        return Err(invalid("--eps-list needs at least one value"));
    }
    if eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(invalid("all epsilon values must be positive"));
    }
    if !(t_end > 0.0) {
        return Err(invalid(format!("--t-end must be positive, got {t_end}")));
    }

    // Independent runs per epsilon, fanned out over the worker cap, then
    // orders assembled in list order.
    let slice0 = [x0, y_hat0, z_hat0];
    let workers = worker_count(eps_list.len());
    let system = &loaded.system;
    let mut errors: Vec<Option<Result<f64, DynamicsError>>> =
        (0..eps_list.len()).map(|_| None).collect();
    let indices: Vec<usize> = (0..eps_list.len()).collect();
    for chunk in indices.chunks(workers) {
        let results = std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&k| {
                    let eps = eps_list[k];
                    (
                        k,
                        scope.spawn(move || {
                            convergence_experiment(system, ry, rz, slice0, &[eps], t_end)
                                .map(|rows| rows[0].sup_error)
                        }),
                    )
                })
                .collect();
            handles
                .into_iter()
                .map(|(k, h)| (k, h.join().expect("worker panicked")))
                .collect::<Vec<_>>()
        });
        for (k, r) in results {
            errors[k] = Some(r);
        }
    }

    let mut sups: Vec<f64> = Vec::with_capacity(eps_list.len());
    for r in errors.into_iter() {
        match r.expect("all workers joined") {
            Ok(sup) => sups.push(sup),
            Err(DynamicsError::NoAttractingSliding(x)) => {
                return Err(CliError {
                    code: 6,
                    message: format!("no attracting sliding solution at x = {x}"),
                })
            }
            Err(e) => {
                return Err(CliError {
                    code: 5,
                    message: e.to_string(),
                })
            }
        }
    }

    let mut csv = String::new();
    if eps_list.len() == 1 {
        csv.push_str("eps,sup_error\n");
        csv.push_str(&format!("{},{}\n", fmt_f(eps_list[0]), fmt_f(sups[0])));
    } else {
        csv.push_str("eps,sup_error,order\n");
        for (k, (eps, sup)) in eps_list.iter().zip(sups.iter()).enumerate() {
            let order = if k == 0 {
                String::new()
            } else {
                fmt_f((sups[k - 1] / sup).ln() / (eps_list[k - 1] / eps).ln())
            };
            csv.push_str(&format!("{},{},{}\n", fmt_f(*eps), fmt_f(*sup), order));
        }
    }
    print!("{csv}");
    Ok(0)
}
