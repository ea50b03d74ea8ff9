//! `umbilic`: generate umbilic families, run verification suites, and export meshes and reports.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use umbilic_core::conformal::{box_points, conformality_check, sol_flattening, ConformalMap, H2xIToH3, S2xRToR3};
use umbilic_core::geometry::ModelGeometry;
use umbilic_core::profile::{sol_profile, Family, FamilySpec};
use umbilic_core::surface::families::family_patch;
use umbilic_core::surface::{defect_field, mean_curvature, mesh, umbilicity_defect};
use umbilic_core::verify::{
    check_bracket_and_jtnu, check_curvature_commutator, check_daniel_formula, check_gradient_identity, check_killing, check_sol_identities,
    nonexistence_falsifier, BoxGrid, FalsifierConfig, IdentityCheck, PatchGrid, VerificationReport,
};

const SCHEMA_VERSION: u32 = 1;
/// Residual bound a verification suite must meet to pass.
const SUITE_THRESHOLD: f64 = 1e-5;
const OFF_PROPORTIONALITY_TOL: f64 = 1e-8;
const PROFILE_TOL: f64 = 1e-12;

#[derive(Parser)]
#[command(name = "umbilic", version, about = "Totally umbilic surfaces in S2xR, H2xR, Sol and M3(kappa,tau)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a family patch and write a mesh, profile table or JSON summary.
    Gen(GenArgs),
    /// Run an identity suite and emit a JSON report.
    Verify(VerifyArgs),
    /// Search for umbilic surfaces in M3(kappa,tau) and report the defect floor.
    Falsify(FalsifyArgs),
    /// Check one of the conformal maps and emit a JSON report.
    Conformal(ConformalArgs),
    /// List every family with its parameter range.
    Catalog(CatalogArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Obj,
    Ply,
    Csv,
    Json,
}

#[derive(Args, Serialize)]
struct GenArgs {
    #[arg(long)]
    space: String,
    #[arg(long)]
    family: String,
    #[arg(long)]
    param: Option<f64>,
    /// Grid size as NUxNV.
    #[arg(long, default_value = "64x64", value_parser = parse_grid)]
    grid: (usize, usize),
    /// Destination; not part of the recorded config, so reports do not depend on it.
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// Output format; inferred from the --out extension when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Samples in the profile table (csv).
    #[arg(long, default_value_t = 401)]
    samples: usize,
    #[arg(long, default_value_t = PROFILE_TOL)]
    tol: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Suite {
    ProductIdentities,
    SolIdentities,
    Killing,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// Grid points per direction.
    #[arg(long, default_value_t = 16)]
    grid: usize,
    #[arg(long, default_value_t = 1e-3)]
    fd_step: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Destination; not part of the recorded config, so reports do not depend on it.
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct FalsifyArgs {
    #[arg(long, allow_hyphen_values = true)]
    kappa: f64,
    #[arg(long, allow_hyphen_values = true)]
    tau: f64,
    #[arg(long, default_value_t = 50)]
    starts: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Nelder-Mead iterations per start.
    #[arg(long, default_value_t = 300)]
    max_iters: u64,
    /// Destination; not part of the recorded config, so reports do not depend on it.
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum MapName {
    S2xr,
    H2xi,
    Sol,
}

#[derive(Args, Serialize)]
struct ConformalArgs {
    #[arg(long, value_enum)]
    map: MapName,
    /// Grid points per direction (samples along the profile for sol).
    #[arg(long, default_value_t = 8)]
    grid: usize,
    #[arg(long, default_value_t = 1e-3)]
    fd_step: f64,
    /// F_a parameter for the sol map.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// How far below z_max the flattening table extends.
    #[arg(long, default_value_t = 4.0)]
    depth: f64,
    /// Destination; not part of the recorded config, so reports do not depend on it.
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct CatalogArgs {
    #[arg(long)]
    json: bool,
}

/// Failure with its exit code; the message is printed as one stderr line.
struct Failure {
    code: u8,
    reason: String,
}

impl Failure {
    fn invalid(reason: impl ToString) -> Self {
        Self { code: 2, reason: reason.to_string() }
    }
    fn runtime(reason: impl ToString) -> Self {
        Self { code: 1, reason: reason.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::runtime(format!("io: {e}"))
    }
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("grid must look like NUxNV, got {s:?}"))?;
    let n = |t: &str| t.trim().parse::<usize>().ok().filter(|&n| n >= 2).ok_or_else(|| format!("grid sizes must be integers >= 2, got {s:?}"));
    Ok((n(a)?, n(b)?))
}

#[derive(Serialize)]
struct Report<'a, C: Serialize, B: Serialize> {
    schema_version: u32,
    command: &'a str,
    resolved_config: &'a C,
    #[serde(flatten)]
    body: B,
}

fn emit<C: Serialize, B: Serialize>(command: &str, config: &C, body: B, out: Option<&Path>) -> Result<(), Failure> {
    let r = Report { schema_version: SCHEMA_VERSION, command, resolved_config: config, body };
    let text = serde_json::to_string_pretty(&r).map_err(Failure::runtime)?;
    match out {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn create(p: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(p).map(BufWriter::new).map_err(|e| Failure::runtime(format!("cannot create {}: {e}", p.display())))
}

fn gen(args: &GenArgs) -> Result<(), Failure> {
    let family = Family::from_names(&args.space, &args.family)
        .ok_or_else(|| Failure::invalid(format!("unknown family {:?} in space {:?}; see `umbilic catalog`", args.family, args.space)))?;
    let spec = FamilySpec::new(family, args.param).map_err(Failure::invalid)?;
    if !(args.tol > 0.0 && args.tol < 1e-3) {
        return Err(Failure::invalid("tol must lie in (0,1e-3)"));
    }
    let format = match (args.format, &args.out) {
        (Some(f), _) => f,
        (None, Some(p)) => match p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("obj") => Format::Obj,
            Some("ply") => Format::Ply,
            Some("csv") => Format::Csv,
            Some("json") => Format::Json,
            _ => return Err(Failure::invalid("cannot infer format from --out; pass --format obj|ply|csv|json")),
        },
        (None, None) => Format::Json,
    };
    if format != Format::Json && args.out.is_none() {
        return Err(Failure::invalid("--out is required for obj, ply and csv"));
    }

    let fp = family_patch(&spec, args.tol).map_err(Failure::runtime)?;
    let (nu, nv) = args.grid;
    let defect = umbilicity_defect(&fp.patch, nu, nv);
    match format {
        Format::Obj => {
            let mut w = create(args.out.as_deref().unwrap())?;
            mesh::write_obj(&mut w, &mesh::vertices(&fp.patch, nu, nv), nu, nv)?;
            w.flush()?;
        }
        Format::Ply => {
            let mut w = create(args.out.as_deref().unwrap())?;
            let q = defect_field(&fp.patch, nu, nv);
            mesh::write_ply(&mut w, &mesh::vertices(&fp.patch, nu, nv), nu, nv, Some(&q))?;
            w.flush()?;
        }
        Format::Csv => {
            let mut w = create(args.out.as_deref().unwrap())?;
            match (&fp.curve, &fp.sol) {
                (Some(c), _) => c.write_csv(&mut w, args.samples)?,
                (_, Some(p)) => p.write_csv(&mut w, args.samples, p.z_max() - 3.0)?,
                _ => return Err(Failure::invalid(format!("family {family} has no generating profile; use obj, ply or json"))),
            }
            w.flush()?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                family: String,
                label: &'a str,
                u_range: (f64, f64),
                v_range: (f64, f64),
                defect: umbilic_core::surface::GridStats,
                mean_curvature: umbilic_core::surface::MeanCurvatureStats,
            }
            let p = &fp.patch;
            let body = Body { family: family.to_string(), label: &p.label, u_range: p.u_range, v_range: p.v_range, defect, mean_curvature: mean_curvature(p, nu, nv) };
            emit("gen", args, body, args.out.as_deref())?;
        }
    }
    // keep stdout pure JSON when the report goes there
    if !(format == Format::Json && args.out.is_none()) {
        let out = args.out.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        println!("{family} param={} grid={nu}x{nv} defect_max={:.3e} failed={} out={out}", fmt_param(args.param), defect.max, defect.failed);
    }
    Ok(())
}

fn fmt_param(p: Option<f64>) -> String {
    p.map(|p| p.to_string()).unwrap_or_else(|| "-".into())
}

fn verify(args: &VerifyArgs) -> Result<(), Failure> {
    if args.grid * args.grid < umbilic_core::verify::MIN_POINTS {
        return Err(Failure::invalid(format!("grid must have at least {} points", umbilic_core::verify::MIN_POINTS)));
    }
    if !(args.fd_step > 0.0 && args.fd_step < 0.1) {
        return Err(Failure::invalid("fd-step must lie in (0,0.1)"));
    }
    let grid = PatchGrid::new(args.grid, args.grid).with_fd_step(args.fd_step);
    let patch = |f, p| family_patch(&FamilySpec::new(f, p).expect("suite parameters are valid"), PROFILE_TOL).map(|fp| fp.patch).map_err(Failure::runtime);
    let mut checks: Vec<IdentityCheck> = Vec::new();
    let fail = |e: umbilic_core::verify::VerifyError| Failure::runtime(e);
    match args.suite {
        Suite::ProductIdentities => {
            let patches = [
                patch(Family::S2xRALt1, Some(0.6))?,
                patch(Family::S2xRAEq1, None)?,
                patch(Family::S2xRAGt1, Some(1.5))?,
                patch(Family::H2xRElliptic, Some(1.0))?,
                patch(Family::H2xRParabolic, None)?,
                patch(Family::H2xRHyperbolic, Some(0.5))?,
            ];
            for p in &patches {
                checks.push(check_daniel_formula(p, &grid).map_err(fail)?);
                checks.push(check_curvature_commutator(p, &grid).map_err(fail)?);
                checks.push(check_gradient_identity(p, &grid).map_err(fail)?);
                let (b, j) = check_bracket_and_jtnu(p, &grid).map_err(fail)?;
                checks.extend([b, j]);
            }
        }
        Suite::SolIdentities => {
            for a in [1.0, 4f64.exp()] {
                checks.extend(check_sol_identities(&patch(Family::SolFa, Some(a))?, &grid, args.seed).map_err(fail)?);
            }
        }
        Suite::Killing => {
            for kappa in [-1.0, 0.0, 1.0] {
                for tau in [0.5, 1.0] {
                    let s = ModelGeometry::m3(kappa, tau).map_err(Failure::runtime)?;
                    checks.push(check_killing(&s, &BoxGrid::centered(0.8, 1.0), args.seed).map_err(fail)?);
                }
            }
        }
    }
    let reports: Vec<VerificationReport> = checks.iter().map(IdentityCheck::report).collect();
    let worst = reports.iter().map(|r| r.max_residual).fold(0.0, f64::max);
    let pass = worst < SUITE_THRESHOLD;
    #[derive(Serialize)]
    struct Body {
        threshold: f64,
        max_residual: f64,
        pass: bool,
        checks: Vec<VerificationReport>,
    }
    emit("verify", args, Body { threshold: SUITE_THRESHOLD, max_residual: worst, pass, checks: reports }, args.out.as_deref())?;
    if pass {
        Ok(())
    } else {
        Err(Failure::runtime(format!("suite residual {worst:.3e} exceeds {SUITE_THRESHOLD:e}")))
    }
}

fn falsify(args: &FalsifyArgs) -> Result<(), Failure> {
    if !(args.kappa.is_finite() && args.tau.is_finite()) {
        return Err(Failure::invalid("kappa and tau must be finite"));
    }
    if args.starts == 0 || args.max_iters == 0 {
        return Err(Failure::invalid("starts and max-iters must be positive"));
    }
    let mut cfg = FalsifierConfig::new(args.kappa, args.tau, args.starts, args.seed);
    cfg.max_iters = args.max_iters;
    let result = nonexistence_falsifier(&cfg).map_err(Failure::runtime)?;
    let exhausted = result.budget_exhausted;
    emit("falsify", args, result, args.out.as_deref())?;
    if exhausted {
        Err(Failure::runtime("iteration budget exhausted at the reported minimum"))
    } else {
        Ok(())
    }
}

fn conformal(args: &ConformalArgs) -> Result<(), Failure> {
    if args.grid < 2 {
        return Err(Failure::invalid("grid must be >= 2"));
    }
    match args.map {
        MapName::S2xr | MapName::H2xi => {
            if !(args.fd_step > 0.0 && args.fd_step < 0.1) {
                return Err(Failure::invalid("fd-step must lie in (0,0.1)"));
            }
            let (map, pts): (Box<dyn ConformalMap>, _) = match args.map {
                MapName::S2xr => (Box::new(S2xRToR3), box_points([-0.8, -0.8, -1.0], [0.8, 0.8, 1.0], args.grid)),
                _ => {
                    let h = std::f64::consts::FRAC_PI_2;
                    (Box::new(H2xIToH3::default()), box_points([-0.6, -0.6, h - 1.0], [0.6, 0.6, h + 1.0], args.grid))
                }
            };
            let r = conformality_check(map.as_ref(), &pts, args.fd_step);
            let bad = !r.failures.is_empty();
            let off = r.max_off_proportionality;
            emit("conformal", args, r, args.out.as_deref())?;
            if bad {
                Err(Failure::runtime("derivative evaluation failed at some grid points"))
            } else if off >= OFF_PROPORTIONALITY_TOL {
                Err(Failure::runtime(format!("off-proportionality {off:.3e} exceeds {OFF_PROPORTIONALITY_TOL:e}")))
            } else {
                Ok(())
            }
        }
        MapName::Sol => {
            FamilySpec::new(Family::SolFa, Some(args.a)).map_err(Failure::invalid)?;
            if !(args.depth > 0.0) {
                return Err(Failure::invalid("depth must be > 0"));
            }
            let p = sol_profile(args.a, PROFILE_TOL).map_err(Failure::runtime)?;
            let f = sol_flattening(&p, args.depth, args.grid).map_err(Failure::runtime)?;
            emit("conformal", args, f, args.out.as_deref())
        }
    }
}

fn catalog(args: &CatalogArgs) -> Result<(), Failure> {
    #[derive(Serialize)]
    struct Row {
        space: &'static str,
        family: &'static str,
        parameter: Option<&'static str>,
        range: Option<&'static str>,
        description: &'static str,
    }
    let rows: Vec<Row> = Family::ALL
        .into_iter()
        .map(|f| Row { space: f.space_name(), family: f.cli_name(), parameter: f.parameter().map(|p| p.0), range: f.parameter().map(|p| p.1), description: f.description() })
        .collect();
    if args.json {
        #[derive(Serialize)]
        struct Body {
            families: Vec<Row>,
        }
        return emit("catalog", args, Body { families: rows }, None);
    }
    let mut out = io::stdout().lock();
    writeln!(out, "{:<6} {:<15} {:<5} {:<9} description", "space", "family", "param", "range")?;
    for r in &rows {
        writeln!(out, "{:<6} {:<15} {:<5} {:<9} {}", r.space, r.family, r.parameter.unwrap_or("-"), r.range.unwrap_or("-"), r.description)?;
    }
    Ok(())
}

fn init_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("UMBILIC_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| Failure::invalid(format!("UMBILIC_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(Failure::runtime)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            // clap's message up to the usage block, folded onto one line
            let text = e.to_string();
            let parts: Vec<&str> = text.lines().map(str::trim).take_while(|l| !l.starts_with("Usage:")).filter(|l| !l.is_empty()).collect();
            eprintln!("{}", parts.join(" ").trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    let run = init_threads().and_then(|()| match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Verify(a) => verify(a),
        Command::Falsify(a) => falsify(a),
        Command::Conformal(a) => conformal(a),
        Command::Catalog(a) => catalog(a),
    });
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.reason.replace('\n', " "));
            ExitCode::from(f.code)
        }
    }
}
