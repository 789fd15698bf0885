//! `circle-at`: batch front end for examples, solves, liftings and connections.

mod report;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use circle_at::examples::{
    dipole_field, gsbv_example, gsbv_grid_grad_p_norm, gsbv_max_resolvable, gsbv_summary, perturbed_vortex,
    vortex_field,
};
use circle_at::io::{read_field_file, write_field_file};
use circle_at::lifting::detect_vortices;
use circle_at::solver::{solve_at_with, SolveOutcome};
use circle_at::{
    at_energy, at_energy_lifted, jump_min_lifting, make_domain, minimal_connection, mm_energy, verify_boundary,
    AngleField, ChargeConfig, Edge, EdgeSet, GridDomain, Point, Regime, ScalarField, Shape, SolveConfig, SweepRecord,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use report::{read_json, to_json, with_suffix, write_json, CliError, RunManifest};

#[derive(Parser)]
#[command(name = "circle-at", version, about = "Phase-field energies, liftings and connections for circle-valued maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an example field and its JSON sidecar.
    Example(ExampleArgs),
    /// Alternating minimisation with eps-continuation.
    Solve(SolveArgs),
    /// Independent solves, one per eps, run in parallel.
    Sweep(SolveArgs),
    /// Jump-minimising lifting of a field.
    Lift(LiftArgs),
    /// Minimal connection of a set of charges.
    Connect(ConnectArgs),
    /// Evaluate the phase-field energy of stored fields.
    Energy(EnergyArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ExampleName {
    Vortex,
    PerturbedVortex,
    Gsbv,
    Dipole,
}

#[derive(Args, Serialize)]
struct ExampleArgs {
    #[arg(long, value_enum)]
    name: ExampleName,
    #[arg(long, default_value_t = 129)]
    grid: usize,
    /// Domain tag; defaults to the unit disk (the unit square for gsbv).
    #[arg(long)]
    shape: Option<String>,
    #[arg(long, default_value_t = 0.4)]
    sigma: f64,
    #[arg(long, default_value_t = 12)]
    nmax: usize,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Positive charge `x,y` of a dipole field (repeatable).
    #[arg(long = "plus", value_parser = parse_point, allow_hyphen_values = true)]
    plus: Vec<Point>,
    /// Negative charge `x,y` of a dipole field (repeatable).
    #[arg(long = "minus", value_parser = parse_point, allow_hyphen_values = true)]
    minus: Vec<Point>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct SolveArgs {
    /// Angle field to start from.
    #[arg(long)]
    input: PathBuf,
    /// Sidecar whose `su_edges` declare the jump set of the input.
    #[arg(long)]
    su: Option<PathBuf>,
    #[arg(long, default_value = "relaxed")]
    regime: Regime,
    /// Comma-separated, strictly decreasing.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.05])]
    eps: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    energy_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    cg_tol: f64,
    #[arg(long, default_value_t = 20_000)]
    cg_max_iters: usize,
    /// CSV path; fields and JSON are written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct LiftArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    su: Option<PathBuf>,
    /// JSON path; the lifting is written to `<out>.phi.field`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct ConnectArgs {
    /// JSON with `positives` and `negatives` as lists of `[x, y]`.
    #[arg(long)]
    charges: PathBuf,
    #[arg(long, default_value = "disk(0,0,1)")]
    domain: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct EnergyArgs {
    /// Angle field.
    #[arg(long, conflicts_with = "phi")]
    u: Option<PathBuf>,
    /// Single-valued lifting, evaluated with raw differences.
    #[arg(long)]
    phi: Option<PathBuf>,
    /// Phase field; `--v` alone evaluates the Modica–Mortola part.
    #[arg(long)]
    v: Option<PathBuf>,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_point(s: &str) -> Result<Point, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [x, y] = parts.as_slice() else {
        return Err(format!("expected `x,y`, got `{s}`"));
    };
    let f = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t}: {e}"));
    Ok(Point::new(f(x)?, f(y)?))
}

fn parse_shape(s: &str) -> Result<Shape, CliError> {
    s.parse().map_err(|e: circle_at::GridError| CliError::Param(e.to_string()))
}

fn domain_for(shape: Shape, grid: usize) -> Result<Arc<GridDomain>, CliError> {
    Ok(Arc::new(make_domain(shape, grid)?))
}

fn read_angles(path: &Path) -> Result<AngleField, CliError> {
    let (d, values) = read_field_file(path)?;
    Ok(AngleField::new(d, values)?)
}

fn read_scalar(path: &Path) -> Result<ScalarField, CliError> {
    let (d, values) = read_field_file(path)?;
    Ok(ScalarField::new(d, values)?)
}

/// Declared jump edges from a sidecar's `su_edges`, or the empty set.
fn declared_edges(d: &Arc<GridDomain>, sidecar: Option<&Path>) -> Result<EdgeSet, CliError> {
    let mut set = EdgeSet::empty(d.clone());
    let Some(path) = sidecar else {
        return Ok(set);
    };
    let v = read_json(path)?;
    let edges: Vec<Edge> = match v.get("su_edges") {
        Some(list) => serde_json::from_value(list.clone()).map_err(|e| CliError::Param(format!("su_edges: {e}")))?,
        None => Vec::new(),
    };
    for e in edges {
        set.insert(e)?;
    }
    Ok(set)
}

fn edge_list(set: &EdgeSet) -> Vec<Edge> {
    set.iter().collect()
}

fn cmd_example(a: &ExampleArgs, m: &mut RunManifest) -> Result<Value, CliError> {
    let default_shape = match a.name {
        ExampleName::Gsbv => Shape::Square { side: 1.0 },
        _ => Shape::Disk { cx: 0.0, cy: 0.0, r: 1.0 },
    };
    let shape = a.shape.as_deref().map(parse_shape).transpose()?.unwrap_or(default_shape);
    let d = domain_for(shape, a.grid)?;
    let mut side = json!({
        "name": a.name,
        "shape": shape.to_string(),
        "grid": a.grid,
        "h": d.h(),
        "nx": d.nx(),
        "ny": d.ny(),
    });
    let values = match a.name {
        ExampleName::Vortex => {
            let u = vortex_field(&d)?;
            side["charges"] = serde_json::to_value(detect_vortices(&u).charges).unwrap();
            u.theta().to_vec()
        }
        ExampleName::PerturbedVortex => {
            let pv = perturbed_vortex(&d, a.sigma)?;
            side["sigma"] = json!(a.sigma);
            side["m2_expected"] = json!(pv.m2_expected);
            side["su_segment"] = json!([pv.su_segment.p, pv.su_segment.q]);
            side["sphi_segment"] = json!([pv.sphi_segment.p, pv.sphi_segment.q]);
            side["su_length"] = json!(pv.su.length());
            side["su_edges"] = serde_json::to_value(edge_list(&pv.su)).unwrap();
            side["charges"] = serde_json::to_value(detect_vortices(&pv.u).charges).unwrap();
            pv.u.theta().to_vec()
        }
        ExampleName::Dipole => {
            let (plus, minus) = if a.plus.is_empty() && a.minus.is_empty() {
                (vec![Point::new(0.3, 0.0)], vec![Point::new(-0.3, 0.0)])
            } else {
                (a.plus.clone(), a.minus.clone())
            };
            let u = dipole_field(&d, &plus, &minus)?;
            side["positives"] = json!(plus);
            side["negatives"] = json!(minus);
            side["charges"] = serde_json::to_value(detect_vortices(&u).charges).unwrap();
            u.theta().to_vec()
        }
        ExampleName::Gsbv => {
            let level = gsbv_max_resolvable(d.h())
                .map(|m| m.min(a.nmax))
                .ok_or_else(|| CliError::Param(format!("grid spacing {} resolves no level", d.h())))?;
            let (phi, at_level) = gsbv_example(&d, level, a.p)?;
            side["field_level"] = json!(level);
            side["grid_check"] = json!({
                "grad_p_norm_exact": at_level.grad_p_norm_exact,
                "grad_p_norm_sampled": gsbv_grid_grad_p_norm(&phi, level, a.p),
            });
            side["summary"] = serde_json::to_value(gsbv_summary(a.nmax, a.p)?).unwrap();
            phi.values().to_vec()
        }
    };
    write_field_file(&a.out, &d, &values)?;
    let sidecar = with_suffix(&a.out, ".json");
    write_json(&sidecar, &side)?;
    m.outputs.extend([a.out.clone(), sidecar]);
    Ok(side)
}

fn solve_config(a: &SolveArgs) -> SolveConfig {
    SolveConfig {
        eps_schedule: a.eps.clone(),
        max_outer_iters: a.max_iters,
        energy_tol: a.energy_tol,
        cg_tol: a.cg_tol,
        cg_max_iters: a.cg_max_iters,
        ..SolveConfig::default()
    }
}

fn write_csv(path: &Path, records: &[SweepRecord]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Internal(format!("cannot write {}: {e}", path.display()));
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(f, "eps,iters,bulk,grad_v,well,total,converged").map_err(io)?;
    for r in records {
        let e = &r.report;
        writeln!(f, "{},{},{},{},{},{},{}", r.eps, r.iters, e.bulk, e.grad_v, e.well, e.total, r.converged)
            .map_err(io)?;
    }
    f.flush().map_err(io)
}

fn cmd_solve(a: &SolveArgs, m: &mut RunManifest) -> Result<Value, CliError> {
    let cfg = solve_config(a);
    cfg.validate()?;
    let u0 = read_angles(&a.input)?;
    m.inputs.push(a.input.clone());
    let su = declared_edges(u0.domain(), a.su.as_deref())?;
    m.inputs.extend(a.su.clone());
    let out: SolveOutcome = solve_at_with(&u0, a.regime, &cfg, &su)?;
    let d = out.state.u.domain().clone();
    write_csv(&a.out, &out.records)?;
    let u_path = with_suffix(&a.out, ".u.field");
    let v_path = with_suffix(&a.out, ".v.field");
    write_field_file(&u_path, &d, out.state.u.theta())?;
    write_field_file(&v_path, &d, out.state.v.values())?;
    m.outputs.extend([a.out.clone(), u_path, v_path]);
    if let Some(phi) = &out.state.phi {
        let p = with_suffix(&a.out, ".phi.field");
        write_field_file(&p, &d, phi.values())?;
        m.outputs.push(p);
    }
    let summary = json!({ "regime": a.regime, "records": out.records });
    let js = with_suffix(&a.out, ".json");
    write_json(&js, &summary)?;
    m.outputs.push(js);
    Ok(summary)
}

fn cmd_sweep(a: &SolveArgs, m: &mut RunManifest) -> Result<Value, CliError> {
    let cfg = solve_config(a);
    cfg.validate()?;
    let u0 = read_angles(&a.input)?;
    m.inputs.push(a.input.clone());
    let su = declared_edges(u0.domain(), a.su.as_deref())?;
    m.inputs.extend(a.su.clone());
    // par_iter keeps the schedule order in the collected rows
    let records: Vec<SweepRecord> = a
        .eps
        .par_iter()
        .map(|&eps| {
            let one = SolveConfig { eps_schedule: vec![eps], ..cfg.clone() };
            solve_at_with(&u0, a.regime, &one, &su).map(|o| o.records[0])
        })
        .collect::<Result<_, _>>()?;
    write_csv(&a.out, &records)?;
    let summary = json!({ "regime": a.regime, "records": records });
    let js = with_suffix(&a.out, ".json");
    write_json(&js, &summary)?;
    m.outputs.extend([a.out.clone(), js]);
    Ok(summary)
}

fn cmd_lift(a: &LiftArgs, m: &mut RunManifest) -> Result<Value, CliError> {
    let u = read_angles(&a.input)?;
    m.inputs.push(a.input.clone());
    let su = declared_edges(u.domain(), a.su.as_deref())?;
    m.inputs.extend(a.su.clone());
    let r = jump_min_lifting(&u, &su)?;
    let phi_path = with_suffix(&a.out, ".phi.field");
    write_field_file(&phi_path, u.domain(), r.phi.values())?;
    let summary = json!({
        "lifting": r.summary(),
        "connection": r.connection,
        "jump_edges": edge_list(&r.jump_edges),
    });
    write_json(&a.out, &summary)?;
    m.outputs.extend([a.out.clone(), phi_path]);
    Ok(json!({ "lifting": r.summary() }))
}

#[derive(Deserialize)]
struct ChargeFile {
    #[serde(default)]
    positives: Vec<Point>,
    #[serde(default)]
    negatives: Vec<Point>,
}

fn cmd_connect(a: &ConnectArgs, m: &mut RunManifest) -> Result<Value, CliError> {
    let shape = parse_shape(&a.domain)?;
    let raw = read_json(&a.charges)?;
    m.inputs.push(a.charges.clone());
    let file: ChargeFile = serde_json::from_value(raw).map_err(|e| CliError::Param(format!("charges: {e}")))?;
    let cfg = ChargeConfig::new(file.positives, file.negatives, shape)?;
    let conn = minimal_connection(&cfg)?;
    let check = verify_boundary(&conn, &cfg);
    let summary = json!({ "domain": shape.to_string(), "connection": conn, "boundary_check": check });
    write_json(&a.out, &summary)?;
    m.outputs.push(a.out.clone());
    Ok(json!({ "total_length": conn.total_length, "boundary_ok": check.ok }))
}

fn cmd_energy(a: &EnergyArgs, m: &mut RunManifest) -> Result<Value, CliError> {
    let v = a.v.as_deref().map(read_scalar).transpose()?;
    m.inputs.extend(a.u.iter().chain(&a.phi).chain(&a.v).cloned());
    let value = match (&a.u, &a.phi, &v) {
        (Some(u), None, Some(v)) => json!({ "at": at_energy(&read_angles(u)?, v, a.eps)? }),
        (None, Some(p), Some(v)) => json!({ "at": at_energy_lifted(&read_scalar(p)?, v, a.eps)? }),
        (None, None, Some(v)) => json!({ "mm": mm_energy(v, a.eps)?, "eps": a.eps }),
        (Some(u), None, None) => {
            let u = read_angles(u)?;
            let one = ScalarField::constant(u.domain().clone(), 1.0);
            json!({ "at": at_energy(&u, &one, a.eps)? })
        }
        _ => return Err(CliError::Usage("energy needs --v, or one of --u / --phi".into())),
    };
    if let Some(out) = &a.out {
        write_json(out, &value)?;
        m.outputs.push(out.clone());
    }
    Ok(value)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let t = Instant::now();
    let (name, out, mut manifest) = match &cli.command {
        Command::Example(a) => ("example", Some(&a.out), RunManifest::new("example", a)),
        Command::Solve(a) => ("solve", Some(&a.out), RunManifest::new("solve", a)),
        Command::Sweep(a) => ("sweep", Some(&a.out), RunManifest::new("sweep", a)),
        Command::Lift(a) => ("lift", Some(&a.out), RunManifest::new("lift", a)),
        Command::Connect(a) => ("connect", Some(&a.out), RunManifest::new("connect", a)),
        Command::Energy(a) => ("energy", a.out.as_ref(), RunManifest::new("energy", a)),
    };
    let m = &mut manifest;
    let result = match &cli.command {
        Command::Example(a) => cmd_example(a, m),
        Command::Solve(a) => cmd_solve(a, m),
        Command::Sweep(a) => cmd_sweep(a, m),
        Command::Lift(a) => cmd_lift(a, m),
        Command::Connect(a) => cmd_connect(a, m),
        Command::Energy(a) => cmd_energy(a, m),
    }?;
    manifest.wall_time_s = t.elapsed().as_secs_f64();
    if let Some(out) = out {
        write_json(&with_suffix(out, ".manifest.json"), &manifest)?;
    }
    println!("{}", to_json(&json!({ "command": name, "result": result }))?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
