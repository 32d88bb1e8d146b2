//! Command-line front end.
//!
//! Every subcommand builds one JSON report. `--json` prints it as is and
//! text mode renders the same value, so both modes show identical numbers.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::expr::{parse, simplify, CompiledExpr, Expr, ParseError, DEFAULT_SEED, DEFAULT_ZERO_TOL};
use crate::geometry::{is_lie_point_symmetry, to_coordinate, OdeProblem, ProblemError, VectorField};
use crate::integrate::{integrate_ode, IntegrateError, IntegrationResult, Options, DEFAULT_TOL};
use crate::jacobi::{classify_curvature, CurvatureClass, CurvatureInfo, DeltaSolution, TABLE_NODES};
use crate::quadrature::{FirstIntegralValue, PATH_TOL};
use crate::verify::{check_factor, check_first_integral, check_jacobi, Certification, VerificationReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_REQUIRES_JACOBI_FIELD: i32 = 3;
pub const EXIT_OTHER: i32 = 4;

/// Region used when `--region` is omitted.
pub const DEFAULT_REGION: &str = "x=0:1,u=0:1";

#[derive(Debug, Parser)]
#[command(name = "jacobi-ode", version, about = "Integrate u' = phi(x, u) through Jacobi fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Right-hand side phi(x, u)
    #[arg(long)]
    pub phi: String,
    /// Rectangle `x=a:b,u=c:d`, optionally followed by `,exclude=x=..,u=..` zones
    #[arg(long, default_value = DEFAULT_REGION)]
    pub region: String,
    /// Print the JSON report instead of text
    #[arg(long)]
    pub json: bool,
    /// Seed for sampling
    #[arg(long, env = "JACOBI_ODE_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Verification tolerance
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Tolerance of the numeric zero test behind branch decisions
    #[arg(long, default_value_t = DEFAULT_ZERO_TOL)]
    pub zero_tol: f64,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    /// d/dx component of the Jacobi field
    #[arg(long)]
    pub jx: Option<String>,
    /// d/du component of the Jacobi field
    #[arg(long)]
    pub ju: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrating factor and first integral
    Solve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        field: FieldArgs,
        /// Write a gridded first integral as CSV
        #[arg(long)]
        dump_grid: Option<PathBuf>,
        /// Write delta(x) as CSV
        #[arg(long)]
        dump_delta: Option<PathBuf>,
    },
    /// Gaussian curvature of the associated surface
    Curvature {
        #[command(flatten)]
        common: Common,
    },
    /// Curvature class and the evidence behind it
    Classify {
        #[command(flatten)]
        common: Common,
    },
    /// Check a Jacobi field, an integrating factor or a first integral
    Verify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        field: FieldArgs,
        /// Candidate integrating factor
        #[arg(long)]
        mu: Option<String>,
        /// Candidate first integral
        #[arg(long)]
        integral: Option<String>,
    },
    /// Lie bracket [J, A] and the symmetry test
    Bracket {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        field: FieldArgs,
    },
}

/// Failure with a stable code and exit status.
#[derive(Debug)]
struct Failure {
    exit: i32,
    code: &'static str,
    message: String,
}

impl Failure {
    fn usage(code: &'static str, message: impl Into<String>) -> Failure {
        Failure {
            exit: EXIT_USAGE,
            code,
            message: message.into(),
        }
    }
}

impl From<ProblemError> for Failure {
    fn from(e: ProblemError) -> Failure {
        let code = match e {
            ProblemError::Parse(_) => "parse",
            ProblemError::Region(_) => "region",
            ProblemError::SingularBasePoint { .. } | ProblemError::MostlySingular { .. } => "singular_problem",
        };
        Failure::usage(code, e.to_string())
    }
}

impl From<IntegrateError> for Failure {
    fn from(e: IntegrateError) -> Failure {
        let (exit, code) = match e {
            IntegrateError::RequiresJacobiField { .. } => (EXIT_REQUIRES_JACOBI_FIELD, "requires_jacobi_field"),
            IntegrateError::NotAJacobiField { .. } => (EXIT_OTHER, "not_a_jacobi_field"),
            IntegrateError::TrivialJacobiField => (EXIT_OTHER, "trivial_jacobi_field"),
            IntegrateError::QuadratureFailure(_) => (EXIT_OTHER, "quadrature"),
            IntegrateError::Jacobi(_) => (EXIT_OTHER, "delta_solver"),
            IntegrateError::Sampling(_) => (EXIT_OTHER, "sampling"),
            IntegrateError::NotASymmetry => (EXIT_OTHER, "not_a_symmetry"),
            IntegrateError::DegenerateSymmetry => (EXIT_OTHER, "degenerate_symmetry"),
        };
        Failure {
            exit,
            code,
            message: e.to_string(),
        }
    }
}

/// Parses `argv` (including the program name), runs it and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let to_out = !e.use_stderr();
            let _ = if to_out { write!(out, "{e}") } else { write!(err, "{e}") };
            return if to_out { EXIT_OK } else { EXIT_USAGE };
        }
    };
    let json_mode = match &cli.command {
        Command::Solve { common, .. }
        | Command::Curvature { common }
        | Command::Classify { common }
        | Command::Verify { common, .. }
        | Command::Bracket { common, .. } => common.json,
    };
    match execute(&cli.command) {
        Ok((report, code)) => {
            let _ = if json_mode {
                writeln!(out, "{}", serde_json::to_string_pretty(&report).unwrap_or_default())
            } else {
                write!(out, "{}", render_text(&report))
            };
            code
        }
        Err(f) => {
            let _ = writeln!(err, "error[{}]: {}", f.code, f.message);
            f.exit
        }
    }
}

fn options(c: &Common) -> Options {
    let mut o = Options::with_seed(c.seed);
    o.zero.tol = c.zero_tol;
    o.tol = c.tol;
    o
}

fn parse_expr(flag: &str, s: &str) -> Result<Expr, Failure> {
    parse(s)
        .map(|e| simplify(&e))
        .map_err(|e: ParseError| Failure::usage("parse", format!("--{flag}: {e}")))
}

/// `None` when neither component is given; a missing component is zero.
fn field(f: &FieldArgs) -> Result<Option<VectorField>, Failure> {
    if f.jx.is_none() && f.ju.is_none() {
        return Ok(None);
    }
    let c = |flag, s: &Option<String>| s.as_deref().map_or(Ok(Expr::zero()), |s| parse_expr(flag, s));
    Ok(Some(VectorField::coordinate(c("jx", &f.jx)?, c("ju", &f.ju)?)))
}

fn execute(cmd: &Command) -> Result<(Value, i32), Failure> {
    match cmd {
        Command::Solve {
            common,
            field: f,
            dump_grid,
            dump_delta,
        } => {
            let p = OdeProblem::parse(&common.phi, &common.region)?;
            let j = field(f)?;
            let opts = options(common);
            let info = classify_curvature(&p, &opts.zero);
            let r = integrate_ode(&p, j.as_ref(), &opts)?;
            if let Some(path) = dump_grid {
                let FirstIntegralValue::Gridded(g) = &r.first_integral else {
                    return Err(Failure::usage("no_grid", "--dump-grid: the first integral is symbolic"));
                };
                write_file(path, &g.to_csv())?;
            }
            if let Some(path) = dump_delta {
                write_file(path, &delta_csv(&r))?;
            }
            let mut report = base_report(&p, common);
            report["curvature"] = curvature_json(&info);
            report["jacobi"] = jacobi_json(&r);
            report["result"] = result_json(&r);
            report["verification"] = verification_json(&r.verification);
            let code = if r.verification.overall { EXIT_OK } else { EXIT_VERIFICATION_FAILED };
            Ok((report, code))
        }
        Command::Curvature { common } | Command::Classify { common } => {
            let p = OdeProblem::parse(&common.phi, &common.region)?;
            let info = classify_curvature(&p, &options(common).zero);
            let mut report = base_report(&p, common);
            report["curvature"] = curvature_json(&info);
            if matches!(cmd, Command::Classify { .. }) {
                report["evidence"] = json!({
                    "du": info.du_evidence,
                    "dx": info.dx_evidence,
                });
            }
            Ok((report, EXIT_OK))
        }
        Command::Verify {
            common,
            field: f,
            mu,
            integral,
        } => {
            let p = OdeProblem::parse(&common.phi, &common.region)?;
            let j = field(f)?;
            if j.is_none() && mu.is_none() && integral.is_none() {
                return Err(Failure::usage("usage", "verify needs --jx/--ju, --mu or --integral"));
            }
            let opts = options(common);
            let seed = opts.zero.seed;
            let mut v = VerificationReport::new(Certification::Numerical, seed);
            if let Some(j) = &j {
                v.push(check_jacobi(&p, j, opts.tol, seed));
            }
            if let Some(m) = mu {
                v.push(check_factor(&p, &parse_expr("mu", m)?, opts.tol, seed));
            }
            if let Some(i) = integral {
                let i = FirstIntegralValue::Symbolic(parse_expr("integral", i)?);
                v.extend(check_first_integral(&p, &i, opts.tol, seed));
            }
            let mut report = base_report(&p, common);
            report["verification"] = verification_json(&v);
            let code = if v.overall { EXIT_OK } else { EXIT_VERIFICATION_FAILED };
            Ok((report, code))
        }
        Command::Bracket { common, field: f } => {
            let p = OdeProblem::parse(&common.phi, &common.region)?;
            let Some(j) = field(f)? else {
                return Err(Failure::usage("usage", "bracket needs --jx and/or --ju"));
            };
            let opts = options(common);
            let v = is_lie_point_symmetry(&p, &j, &opts.zero).map_err(IntegrateError::from)?;
            let b = to_coordinate(&p, &v.bracket);
            let mut report = base_report(&p, common);
            report["bracket"] = json!({
                "dx": b.c1.to_string(),
                "du": b.c2.to_string(),
                "is_symmetry": v.is_symmetry,
                "rho": v.rho.map(|r| r.to_string()),
                "evidence": v.evidence,
            });
            Ok((report, EXIT_OK))
        }
    }
}

fn write_file(path: &PathBuf, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure {
        exit: EXIT_OTHER,
        code: "io",
        message: format!("{}: {e}", path.display()),
    })
}

fn delta_csv(r: &IntegrationResult) -> String {
    match &r.delta {
        DeltaSolution::Table(t) => t.to_csv(),
        DeltaSolution::Symbolic(d) => {
            let c = CompiledExpr::new(d);
            let (a, b) = r.region.x_interval();
            let mut out = String::from("x,delta\n");
            for i in 0..TABLE_NODES {
                let x = a + (b - a) * i as f64 / (TABLE_NODES - 1) as f64;
                let v = c.eval(x, 0.0).unwrap_or(f64::NAN);
                out.push_str(&format!("{x:.17e},{v:.17e}\n"));
            }
            out
        }
    }
}

fn base_report(p: &OdeProblem, c: &Common) -> Value {
    json!({
        "problem": { "phi": p.phi().to_string(), "region": p.region().to_string() },
        "meta": {
            "seed": c.seed,
            "tolerances": { "verify": c.tol, "zero": c.zero_tol, "path": PATH_TOL },
            "version": env!("CARGO_PKG_VERSION"),
        },
    })
}

fn curvature_json(info: &CurvatureInfo) -> Value {
    let k = match &info.class {
        CurvatureClass::Constant { k } => json!(k),
        CurvatureClass::XOnly { k } => json!(k.to_string()),
        CurvatureClass::General => Value::Null,
    };
    json!({ "class": info.class.name(), "expr": info.curvature.to_string(), "k": k })
}

fn jacobi_json(r: &IntegrationResult) -> Value {
    let delta = match &r.delta {
        DeltaSolution::Symbolic(d) => d.to_string(),
        DeltaSolution::Table(t) => format!(
            "tabulated on {} nodes from ({}, {}) with {} sign changes",
            t.nodes().len(),
            t.initial.0,
            t.initial.1,
            t.sign_changes
        ),
    };
    let residual = r.verification.check("jacobi").map(|c| json!(c));
    json!({
        "source": r.jacobi_source,
        "sigma": r.sigma.to_string(),
        "delta": delta,
        "residual_check": residual,
    })
}

fn result_json(r: &IntegrationResult) -> Value {
    let first_integral = match &r.first_integral {
        FirstIntegralValue::Symbolic(e) => e.to_string(),
        FirstIntegralValue::Gridded(g) => {
            let (nx, nu) = g.shape();
            let (bx, bu) = g.base();
            format!("gridded on {nx}x{nu} nodes, zero at ({bx}, {bu})")
        }
    };
    json!({
        "branch": r.branch,
        "mu": r.integrating_factor.as_ref().map(|m| m.describe()),
        "first_integral": first_integral,
        "kind": r.first_integral.kind(),
        "region": r.region.to_string(),
        "notes": r.notes,
    })
}

fn verification_json(v: &VerificationReport) -> Value {
    json!({ "checks": v.checks, "overall": v.overall, "level": v.level })
}

/// Section-by-section rendering of a report; scalars print exactly as in JSON.
pub fn render_text(report: &Value) -> String {
    let mut out = String::new();
    let Some(obj) = report.as_object() else {
        return report.to_string();
    };
    for (section, body) in obj {
        out.push_str(section);
        out.push_str(":\n");
        match body {
            Value::Object(m) => render_object(&mut out, m, 1),
            v => out.push_str(&format!("  {}\n", scalar(v))),
        }
    }
    out
}

fn render_object(out: &mut String, m: &Map<String, Value>, depth: usize) {
    let pad = "  ".repeat(depth);
    for (k, v) in m {
        match v {
            Value::Object(inner) => {
                out.push_str(&format!("{pad}{k}:\n"));
                render_object(out, inner, depth + 1);
            }
            Value::Array(items) if items.iter().any(Value::is_object) => {
                out.push_str(&format!("{pad}{k}:\n"));
                for item in items {
                    match item {
                        Value::Object(inner) if k == "checks" => render_check(out, inner, depth + 1),
                        Value::Object(inner) => render_object(out, inner, depth + 1),
                        v => out.push_str(&format!("{pad}  - {}\n", scalar(v))),
                    }
                }
            }
            v => out.push_str(&format!("{pad}{k}: {}\n", scalar(v))),
        }
    }
}

fn render_check(out: &mut String, c: &Map<String, Value>, depth: usize) {
    let pad = "  ".repeat(depth);
    let passed = c.get("passed").and_then(Value::as_bool).unwrap_or(false);
    let name = c.get("name").and_then(Value::as_str).unwrap_or("?");
    out.push_str(&format!("{pad}[{}] {name}\n", if passed { "PASS" } else { "FAIL" }));
    for (k, v) in c {
        if k != "name" && k != "passed" && !v.is_null() {
            out.push_str(&format!("{pad}    {k}: {}\n", scalar(v)));
        }
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "none".into(),
        v => v.to_string(),
    }
}
