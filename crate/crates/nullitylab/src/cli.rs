//! Command-line front end.
//!
//! Exit codes: 0 success, 1 checks failed, 2 bad input, 3 I/O.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use crate::construction::{self, BChoice, ConstructionParams, SweepGrid, SweepRow, DEFAULT_A, DEFAULT_B};
use crate::dynamics::{self, Drift, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::HomogeneousModel;
use crate::model_file::{ModelFile, ReportFile};
use crate::nullity::{self, Flag};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_BAD_INPUT: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "nullitylab", version, about = "Curvature nullity of left-invariant metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the ℝⁿ⋊so(3) example and write its model file.
    Construct(ConstructArgs),
    /// Run the nullity structure checks on a model file.
    Verify(VerifyArgs),
    /// Integrate geodesics/transport and check the flow identities.
    Dynamics(DynamicsArgs),
    /// Construct over a parameter grid and tabulate the results.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
pub struct ConstructArgs {
    /// Dimension of the irreducible so(3)-module (odd, ≥ 5).
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub v0_dim: usize,
    #[arg(long, default_value_t = DEFAULT_A, allow_hyphen_values = true)]
    pub a: f64,
    /// A number, or `degenerate` for b = −λa.
    #[arg(long, default_value_t = DEFAULT_B.to_string(), allow_hyphen_values = true)]
    pub b: String,
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub model: PathBuf,
    /// Report path; defaults to `<model>.report.json` next to the model.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Check {
    /// Killing-field growth along a nullity geodesic.
    Growth,
    /// Transport along a homogeneous geodesic equals e^{−tB}.
    Flow,
    /// Geodesic only: energy and isometry drift.
    Geodesic,
}

#[derive(Args, Debug)]
pub struct DynamicsArgs {
    pub model: PathBuf,
    /// `nu:i` (i-th nullity basis vector), `basis:i`, or comma-separated coordinates.
    #[arg(long, default_value = "nu:0", allow_hyphen_values = true)]
    pub direction: String,
    #[arg(long, value_enum, default_value_t = Check::Growth)]
    pub check: Check,
    /// Killing field generator for `growth`; all basis vectors when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub h: f64,
    /// Residual budget deciding the exit code.
    #[arg(long, default_value_t = 1e-6)]
    pub budget: f64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![5usize, 7, 9])]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 2])]
    pub v0_dim: Vec<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub a: Vec<f64>,
    /// Numbers or `degenerate`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub b: Vec<String>,
    /// CSV output; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::Io(_) => EXIT_IO,
        Error::Numerical(_) => EXIT_FAILED,
        _ => EXIT_BAD_INPUT,
    }
}

pub fn run(cli: Cli) -> i32 {
    let res = match cli.command {
        Command::Construct(a) => cmd_construct(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Dynamics(a) => cmd_dynamics(&a),
        Command::Sweep(a) => cmd_sweep(&a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn env_tol() -> Result<Option<f64>> {
    match std::env::var(crate::TOL_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(t) if t > 0.0 && t.is_finite() => Ok(Some(t)),
            _ => Err(Error::Parse(format!("{}={s:?} is not a positive number", crate::TOL_ENV))),
        },
    }
}

fn parse_b(s: &str) -> Result<BChoice> {
    if s.eq_ignore_ascii_case("degenerate") {
        return Ok(BChoice::Degenerate);
    }
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|b| b.is_finite())
        .map(BChoice::Value)
        .ok_or_else(|| Error::Parse(format!("--b: expected a number or `degenerate`, got {s:?}")))
}

fn load_model(path: &Path) -> Result<(ModelFile, HomogeneousModel)> {
    let file = ModelFile::read(path)?;
    let mut model = file.to_model()?;
    if let Some(t) = env_tol()? {
        model = model.with_tol(t);
    }
    Ok((file, model))
}

fn cmd_construct(args: &ConstructArgs) -> Result<i32> {
    env_tol()?;
    let params = ConstructionParams { n: args.n, v0_dim: args.v0_dim, a: args.a, b: parse_b(&args.b)?, k_inner: None };
    let ex = construction::construct(&params)?;
    let name = args.name.clone().unwrap_or_else(|| format!("R{}xso3_v0dim{}", args.n, args.v0_dim));
    ModelFile::from_example(&name, &ex).write(&args.out)?;
    let dims = &ex.report.dims;
    eprintln!(
        "constructed {name}: dim g = {}, d = {}, dim ν = {}, codim ν = {}, λ = {:.6}, genericity {}, structure {}, V0 ⊂ ν {} (residual {:.2e})",
        dims.dim_m,
        ex.frame.d,
        dims.dim_nu,
        dims.dim_m - dims.dim_nu,
        ex.frame.lambda,
        word(ex.genericity.pass),
        word(ex.report.pass),
        word(ex.postcondition.v0_in_nu <= nullity::REPORT_TOL),
        ex.postcondition.v0_in_nu,
    );
    Ok(if ex.pass() { EXIT_OK } else { EXIT_FAILED })
}

fn word(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn default_report_path(model: &Path) -> PathBuf {
    let stem = model.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into());
    model.with_file_name(format!("{stem}.report.json"))
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    let (file, model) = load_model(&args.model)?;
    let report = nullity::verify_structure(&model);
    let out = args.out.clone().unwrap_or_else(|| default_report_path(&args.model));
    ReportFile::new(&file.name, &model, &report).write(&out)?;
    let d = &report.dims;
    println!("model {}  branch {:?}", file.name, report.branch);
    println!(
        "dims: g={} nu={} nu_hat={} nu1={} nu2={} U={} U0={} U00={} tr0={} tr={} a={} g'={}",
        d.dim_m, d.dim_nu, d.dim_nu_hat, d.dim_nu1, d.dim_nu2, d.dim_u, d.dim_u0, d.dim_u00, d.dim_tr0, d.dim_tr, d.dim_a,
        d.dim_g_prime
    );
    for (id, flag) in &report.flags {
        let r = report.residual(id).map_or("-".to_string(), |r| format!("{r:.3e}"));
        let f = match flag {
            Flag::Pass => "pass",
            Flag::Fail => "FAIL",
            Flag::NotApplicable => "n/a",
        };
        println!("{id:<36} {f:<5} {r}");
    }
    eprintln!("report written to {}", out.display());
    Ok(if report.pass { EXIT_OK } else { EXIT_FAILED })
}

fn parse_vector(spec: &str, model: &HomogeneousModel, what: &str) -> Result<DVector<f64>> {
    let d = model.dim();
    let bad = |m: String| Error::Parse(format!("--{what}: {m}"));
    if let Some(i) = spec.strip_prefix("nu:") {
        let i: usize = i.parse().map_err(|_| bad(format!("bad index in {spec:?}")))?;
        let nu = nullity::nullity(model);
        if i >= nu.dim() {
            return Err(Error::Precondition(format!("--{what} {spec}: nullity has dimension {}", nu.dim())));
        }
        return Ok(nu.basis().column(i).into_owned());
    }
    if let Some(i) = spec.strip_prefix("basis:") {
        let i: usize = i.parse().map_err(|_| bad(format!("bad index in {spec:?}")))?;
        if i >= d {
            return Err(bad(format!("basis index {i} out of range (dimension {d})")));
        }
        return Ok(model.algebra().basis_vector(i));
    }
    let xs: std::result::Result<Vec<f64>, _> = spec.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let xs = xs.map_err(|_| bad(format!("expected nu:i, basis:i or {d} comma-separated numbers, got {spec:?}")))?;
    if xs.len() != d {
        return Err(bad(format!("expected {d} coordinates, found {}", xs.len())));
    }
    Ok(DVector::from_vec(xs))
}

fn write_csv(path: &Path, traj: &Trajectory, series: &[(&str, &[f64])]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    dynamics::write_trajectory_csv(io::BufWriter::new(f), traj, series)
}

fn print_drift(d: &Drift) {
    println!("energy_drift      {:.3e}", d.energy);
    println!("isometry_drift    {:.3e}", d.isometry);
    println!("orthogonality     {:.3e}", d.orthogonality);
}

fn cmd_dynamics(args: &DynamicsArgs) -> Result<i32> {
    let (_, model) = load_model(&args.model)?;
    let x = parse_vector(&args.direction, &model, "direction")?;
    let budget = args.budget;
    let ok = match args.check {
        Check::Growth => {
            let zs: Vec<DVector<f64>> = match &args.z {
                Some(s) => vec![parse_vector(s, &model, "z")?],
                None => (0..model.dim()).map(|i| model.algebra().basis_vector(i)).collect(),
            };
            let (mut ri, mut rii) = (0.0f64, 0.0f64);
            let mut last = None;
            let mut series_i = vec![0.0; 0];
            let mut series_ii = vec![0.0; 0];
            for z in &zs {
                let g = dynamics::check_lemma_growth(&model, &x, z, args.t, args.h)?;
                ri = ri.max(g.residual_i);
                rii = rii.max(g.residual_ii);
                if series_i.is_empty() {
                    series_i = g.series_i.clone();
                    series_ii = g.series_ii.clone();
                } else {
                    for (a, b) in series_i.iter_mut().zip(&g.series_i) {
                        *a = a.max(*b);
                    }
                    for (a, b) in series_ii.iter_mut().zip(&g.series_ii) {
                        *a = a.max(*b);
                    }
                }
                last = Some(g);
            }
            let g = last.expect("at least one z");
            println!("check growth  fields {}  T {}  h {}", zs.len(), args.t, args.h);
            println!("residual_i        {ri:.3e}");
            println!("residual_ii       {rii:.3e}");
            println!("autoparallel      {:.3e}", g.autoparallel);
            print_drift(&g.drift);
            if let Some(p) = &args.csv {
                write_csv(p, &g.trajectory, &[("residual_i", &series_i), ("residual_ii", &series_ii)])?;
            }
            ri <= budget && rii <= budget && g.autoparallel <= budget && drift_ok(&g.drift, budget)
        }
        Check::Flow => {
            let f = dynamics::check_flow_identity(&model, &x, args.t, args.h)?;
            println!("check flow  T {}  h {}", args.t, args.h);
            println!("residual          {:.3e}", f.residual);
            println!("geodesic_defect   {:.3e}", f.geodesic_defect);
            print_drift(&f.drift);
            if let Some(p) = &args.csv {
                write_csv(p, &f.trajectory, &[("residual", &f.series)])?;
            }
            f.residual <= budget && drift_ok(&f.drift, budget)
        }
        Check::Geodesic => {
            let traj = dynamics::geodesic(&model, &x, args.t, args.h)?;
            let p = dynamics::transport_matrices(&model, &traj)?;
            let g = model.metric();
            let e0 = model.norm(&x);
            let energy: Vec<f64> = traj.body_velocity.iter().map(|v| (model.norm(v) - e0).abs()).collect();
            let iso: Vec<f64> = p.iter().map(|m| (m.transpose() * g * m - g).amax()).collect();
            let d = Drift {
                energy: energy.iter().copied().fold(0.0, f64::max),
                isometry: iso.iter().copied().fold(0.0, f64::max),
                orthogonality: traj.elements.iter().map(|e| e.orthogonality_defect()).fold(0.0, f64::max),
            };
            println!("check geodesic  T {}  h {}", args.t, args.h);
            print_drift(&d);
            if let Some(p) = &args.csv {
                write_csv(p, &traj, &[("energy_drift", &energy), ("isometry_drift", &iso)])?;
            }
            d.energy <= budget && d.isometry <= budget
        }
    };
    Ok(if ok { EXIT_OK } else { EXIT_FAILED })
}

fn drift_ok(d: &Drift, budget: f64) -> bool {
    d.energy <= budget && d.isometry <= budget
}

const CSV_HEADER: [&str; 11] =
    ["n", "v0_dim", "a", "b", "d", "dim_nu", "dim_nu1", "dim_nu2", "dim_U", "genericity", "structure_pass"];

/// Shortest round-trip form; exponent notation for tiny magnitudes.
fn num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-4 {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

pub fn write_sweep_csv<W: Write>(w: W, rows: &[SweepRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(format!("csv: {e}"));
    out.write_record(CSV_HEADER).map_err(io)?;
    let opt = |x: Option<usize>| x.map_or(String::new(), |v| v.to_string());
    let flag = |x: Option<bool>| x.map_or("n/a".to_string(), |b| if b { "pass" } else { "fail" }.to_string());
    for r in rows {
        out.write_record([
            r.n.to_string(),
            r.v0_dim.to_string(),
            num(r.a),
            num(r.b),
            opt(r.d),
            opt(r.dim_nu),
            opt(r.dim_nu1),
            opt(r.dim_nu2),
            opt(r.dim_u),
            flag(r.genericity),
            flag(r.structure_pass),
        ])
        .map_err(io)?;
    }
    out.flush().map_err(|e| Error::Io(format!("csv: {e}")))?;
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    env_tol()?;
    let mut grid = SweepGrid { n: args.n.clone(), v0_dim: args.v0_dim.clone(), ..SweepGrid::default() };
    if !args.a.is_empty() {
        grid.a = args.a.clone();
    }
    if !args.b.is_empty() {
        grid.b = args.b.iter().map(|s| parse_b(s)).collect::<Result<_>>()?;
    }
    if grid.n.is_empty() || grid.v0_dim.is_empty() {
        return Err(Error::Parse("sweep grid must be nonempty".into()));
    }
    let rows = construction::sweep(&grid);
    match &args.out {
        Some(p) => {
            let f = File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            write_sweep_csv(io::BufWriter::new(f), &rows)?;
        }
        None => write_sweep_csv(io::stdout().lock(), &rows)?,
    }
    if let Some(p) = &args.json {
        let s = serde_json::to_string_pretty(&rows).expect("rows serialize");
        std::fs::write(p, s + "\n").map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
    }
    let admissible = rows.iter().filter(|r| r.admissible).count();
    let failed: Vec<&SweepRow> = rows.iter().filter(|r| !r.pass()).collect();
    if admissible == 0 {
        eprintln!("warning: no admissible cells in the grid (need v0_dim · 4 < n)");
    }
    for r in &failed {
        eprintln!(
            "row n={} v0_dim={} a={} b={} failed: {}",
            r.n,
            r.v0_dim,
            r.a,
            r.b,
            r.note.as_deref().unwrap_or("genericity identity degenerate (b + λa = 0)")
        );
    }
    eprintln!("{} rows, {admissible} admissible, {} failed", rows.len(), failed.len());
    Ok(if failed.is_empty() { EXIT_OK } else { EXIT_FAILED })
}
