//! Experiment driver: mesh validation, single solves, moment-stability
//! ensembles, strong-convergence tables, and level-set extraction.
//!
//! Usage:
//!   spdefem <mesh-check|solve|stability|convergence|levelset>
//!           [--config PATH] [--seed U64] [--samples N] [--workers N]
//!           [--out DIR] [--mesh PATH]
//!
//! Exit codes: 0 success, 1 numerical/validation failure, 2 usage error.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use spdefem::fem::Discretization;
use spdefem::mesh::Mesh;
use spdefem::montecarlo::{run_ensemble, strong_error_study, EnsembleConfig, MeshHierarchy};
use spdefem::paths::{derive_sample_seed, WienerPath};
use spdefem::postproc::{
    levelset_file_name, write_error_csv, write_levelset_csv, write_moment_csv, zero_level_set,
};
use spdefem::scheme::SchemeOperator;

use config::RunConfig;

enum CliError {
    /// Bad invocation or configuration: exit 2.
    Usage(String),
    /// Numerical or validation failure: exit 1.
    Failure(String),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    fn failure(msg: impl Into<String>) -> Self {
        CliError::Failure(msg.into())
    }
}

type CmdResult = Result<(), CliError>;

const USAGE: &str = "usage: spdefem <mesh-check|solve|stability|convergence|levelset> \
[--config PATH] [--seed U64] [--samples N] [--workers N] [--out DIR] [--mesh PATH]";

struct CliArgs {
    command: String,
    config_path: Option<PathBuf>,
    seed: Option<u64>,
    samples: Option<usize>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    mesh: Option<PathBuf>,
}

fn parse_args(mut args: std::env::Args) -> Result<CliArgs, CliError> {
    args.next(); // program name
    let command = args.next().ok_or_else(|| CliError::usage(USAGE))?;
    let mut parsed = CliArgs {
        command,
        config_path: None,
        seed: None,
        samples: None,
        workers: None,
        out: None,
        mesh: None,
    };
    while let Some(flag) = args.next() {
        let mut value = || {
            args.next()
                .ok_or_else(|| CliError::usage(format!("flag {flag} needs a value")))
        };
        match flag.as_str() {
            "--config" => parsed.config_path = Some(PathBuf::from(value()?)),
            "--seed" => {
                parsed.seed = Some(
                    value()?
                        .parse()
                        .map_err(|_| CliError::usage("--seed expects an unsigned integer"))?,
                )
            }
            "--samples" => {
                parsed.samples = Some(
                    value()?
                        .parse()
                        .map_err(|_| CliError::usage("--samples expects a positive integer"))?,
                )
            }
            "--workers" => {
                parsed.workers = Some(
                    value()?
                        .parse()
                        .map_err(|_| CliError::usage("--workers expects an integer"))?,
                )
            }
            "--out" => parsed.out = Some(PathBuf::from(value()?)),
            "--mesh" => parsed.mesh = Some(PathBuf::from(value()?)),
            other => return Err(CliError::usage(format!("unknown flag {other}\n{USAGE}"))),
        }
    }
    Ok(parsed)
}

fn load_config(args: &CliArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            config::parse_config(&text).map_err(CliError::Usage)?
        }
        None => config::default_config(),
    };
    // Precedence: CLI > file > default.
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(samples) = args.samples {
        if samples == 0 {
            return Err(CliError::usage("--samples must be positive"));
        }
        cfg.samples = samples;
    }
    if let Some(workers) = args.workers {
        cfg.workers = workers;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(mesh) = &args.mesh {
        cfg.mesh_file = Some(mesh.clone());
    }
    Ok(cfg)
}

fn ensure_out_dir(cfg: &RunConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| {
        CliError::failure(format!(
            "cannot create output directory {}: {e}",
            cfg.out_dir.display()
        ))
    })
}

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.out_dir.join(name)
}

fn check_one_mesh(label: &str, mesh: &Mesh) -> Result<bool, CliError> {
    let report = mesh
        .check_mesh_assumption()
        .map_err(|e| CliError::failure(e.to_string()))?;
    let worst = report.worst().unwrap_or(0.0);
    println!(
        "{label}: nodes={} triangles={} h={:.6} worst_edge_sum={:.3e} {}",
        mesh.n_nodes(),
        mesh.n_triangles(),
        mesh.mesh_size(),
        worst,
        if report.pass { "PASS" } else { "FAIL" }
    );
    if !report.pass {
        for e in &report.violating_edges {
            let edge = mesh.edges()[*e];
            println!(
                "  violating edge {e}: nodes ({}, {}) cot sum {:.6e}",
                edge.nodes[0], edge.nodes[1], report.per_edge_values[*e]
            );
        }
    }
    Ok(report.pass)
}

fn cmd_mesh_check(cfg: &RunConfig) -> CmdResult {
    if let Some(path) = &cfg.mesh_file {
        let mesh = Mesh::read_file(Path::new(path)).map_err(|e| CliError::usage(e.to_string()))?;
        let pass = check_one_mesh(&format!("imported {}", path.display()), &mesh)?;
        return if pass {
            Ok(())
        } else {
            Err(CliError::failure("mesh assumption violated"))
        };
    }
    let mut mesh = Mesh::build_uniform(cfg.nx, cfg.ny, cfg.rect)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let mut all_pass = true;
    for level in 0..cfg.levels {
        all_pass &= check_one_mesh(&format!("level {level}"), &mesh)?;
        if level + 1 < cfg.levels {
            mesh = mesh.refine_uniform().0;
        }
    }
    if all_pass {
        Ok(())
    } else {
        Err(CliError::failure("mesh assumption violated"))
    }
}

fn cmd_stability(cfg: &RunConfig, single: bool) -> CmdResult {
    let disc = Discretization::new(
        Mesh::build_uniform(cfg.nx, cfg.ny, cfg.rect).map_err(|e| CliError::usage(e.to_string()))?,
    );
    let scheme_cfg = cfg.scheme_config().map_err(CliError::Usage)?;
    let op = SchemeOperator::new(&disc, cfg.model.clone(), scheme_cfg)
        .map_err(|e| CliError::failure(e.to_string()))?;
    let ic = cfg.ic;
    let u0 = disc
        .l2_project(|x, y| ic.eval(x, y))
        .map_err(|e| CliError::failure(e.to_string()))?;
    let samples = if single { 1 } else { cfg.samples };
    let ens = EnsembleConfig::new(samples, cfg.seed, cfg.workers)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let series = run_ensemble(&op, &u0, &ens).map_err(|e| CliError::failure(e.to_string()))?;
    ensure_out_dir(cfg)?;
    let path = out_path(cfg, "moments.csv");
    write_moment_csv(&series, &path).map_err(|e| CliError::failure(e.to_string()))?;
    println!(
        "wrote {} ({} samples, {} steps, final E L2^2 = {:.6e})",
        path.display(),
        series.n_samples,
        series.n_steps(),
        series.e_l2_sq.last().unwrap()
    );
    Ok(())
}

fn cmd_convergence(cfg: &RunConfig) -> CmdResult {
    let hierarchy = MeshHierarchy::uniform(cfg.nx, cfg.ny, cfg.rect, cfg.levels, cfg.reference_extra)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let scheme_cfg = cfg.scheme_config().map_err(CliError::Usage)?;
    let ens = EnsembleConfig::new(cfg.samples, cfg.seed, cfg.workers)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let ic = cfg.ic;
    let rows = strong_error_study(&hierarchy, &cfg.model, &scheme_cfg, &ens, move |x, y| {
        ic.eval(x, y)
    })
    .map_err(|e| CliError::failure(e.to_string()))?;
    ensure_out_dir(cfg)?;
    let path = out_path(cfg, "errors.csv");
    write_error_csv(&rows, &path).map_err(|e| CliError::failure(e.to_string()))?;
    let fmt_order = |o: Option<f64>| o.map_or("   --".to_string(), |v| format!("{v:.4}"));
    println!("wrote {}", path.display());
    println!("      h     LinfEL2   order    ELinfL2   order     EL2H1   order");
    for r in &rows {
        println!(
            "{:>8.4} {:>11.4e} {:>7} {:>10.4e} {:>7} {:>9.4e} {:>7}",
            r.h,
            r.err_linf_e_l2,
            fmt_order(r.order_linf_e_l2),
            r.err_e_linf_l2,
            fmt_order(r.order_e_linf_l2),
            r.err_e_l2_h1,
            fmt_order(r.order_e_l2_h1),
        );
    }
    Ok(())
}

fn cmd_levelset(cfg: &RunConfig) -> CmdResult {
    let disc = Discretization::new(
        Mesh::build_uniform(cfg.nx, cfg.ny, cfg.rect).map_err(|e| CliError::usage(e.to_string()))?,
    );
    let scheme_cfg = cfg.scheme_config().map_err(CliError::Usage)?;
    let op = SchemeOperator::new(&disc, cfg.model.clone(), scheme_cfg)
        .map_err(|e| CliError::failure(e.to_string()))?;
    let ic = cfg.ic;
    let u0 = disc
        .l2_project(|x, y| ic.eval(x, y))
        .map_err(|e| CliError::failure(e.to_string()))?;
    let seed = derive_sample_seed(cfg.seed, 0);
    let path = WienerPath::sample(cfg.n_steps, cfg.tau, seed)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let snapshots = if cfg.snapshots.is_empty() {
        vec![0, cfg.n_steps]
    } else {
        cfg.snapshots.clone()
    };
    let traj = op
        .solve_path(&u0, &path, &snapshots)
        .map_err(|e| CliError::failure(e.to_string()))?;
    ensure_out_dir(cfg)?;
    for (step, state) in &traj.snapshots {
        let poly = zero_level_set(state, disc.mesh(), *step, *step as f64 * cfg.tau)
            .map_err(|e| CliError::failure(e.to_string()))?;
        let file = out_path(cfg, &levelset_file_name(*step));
        write_levelset_csv(&poly, &file).map_err(|e| CliError::failure(e.to_string()))?;
        println!(
            "wrote {} ({} segments at t = {:.6e})",
            file.display(),
            poly.segments.len(),
            poly.time
        );
    }
    Ok(())
}

fn dispatch(args: &CliArgs, cfg: &RunConfig) -> CmdResult {
    match args.command.as_str() {
        "mesh-check" => cmd_mesh_check(cfg),
        "solve" => cmd_stability(cfg, true),
        "stability" => cmd_stability(cfg, false),
        "convergence" => cmd_convergence(cfg),
        "levelset" => cmd_levelset(cfg),
        other => Err(CliError::usage(format!("unknown command {other:?}\n{USAGE}"))),
    }
}

fn main() -> ExitCode {
    let args = match parse_args(std::env::args()) {
        Ok(args) => args,
        Err(CliError::Usage(msg)) => {
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("{msg}");
            return ExitCode::from(1);
        }
    };
    let cfg = match load_config(&args) {
        Ok(cfg) => cfg,
        Err(CliError::Usage(msg)) => {
            eprintln!("configuration error: {msg}");
            return ExitCode::from(2);
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("{msg}");
            return ExitCode::from(1);
        }
    };
    match dispatch(&args, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
    }
}
