//! The `slopt` command-line front end.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::critical::{self, continuation_to_one, hamiltonian_residual, u_equation_residual, CriticalParams, CriticalSolution};
use crate::error::{Error, Result};
use crate::function_space::{MeasureSpec, PiecewisePotential, PotentialSpec, RadonMeasure, UnitGrid, DEFAULT_GRID_N};
use crate::maximizer::{
    perturbation_probe, uniqueness_probe, verify_profile, MaximizerProfile, MaximizerSolver, ProfileRecord, StructureChoice,
    VerifyTolerances,
};
use crate::mde::mde_dirichlet_eigen;
use crate::newton::NewtonOptions;
use crate::sturm_liouville::{dirichlet_eigen, EigenResult};

const MIN_GRID_N: usize = 256;
/// Same code as an inadmissible solution.
const EXIT_CHECKS_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "slopt", version, about = "Eigenvalue optimization for Sturm-Liouville potentials")]
struct Cli {
    /// Grid cells on [0, 1]; a power of two, at least 256.
    #[arg(long, global = true, env = "SLOPT_GRID_N", default_value_t = DEFAULT_GRID_N)]
    grid_n: usize,
    /// Override a tolerance before the subcommand, e.g. `slopt --tol newton=1e-10 maximize ...`.
    /// Names: `newton` and the verification checks (`eigen_rel`, `mass`, ...).
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    tolerances: Vec<String>,
    /// Seed for randomized guess perturbations.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Outputs {
    /// Write JSON here instead of standard output.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Also write node samples as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StructureArg {
    One,
    Two,
    Auto,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dirichlet eigenvalues of a potential.
    Eig {
        /// `zero`, `const:<c>`, or a potential JSON file.
        #[arg(long)]
        potential: String,
        #[arg(long, default_value_t = 2)]
        count: usize,
        #[command(flatten)]
        out: Outputs,
    },
    /// Dirichlet eigenvalues of a measure.
    MdeEig {
        /// Measure JSON file.
        #[arg(long)]
        measure: PathBuf,
        #[arg(long, default_value_t = 2)]
        count: usize,
        #[command(flatten)]
        out: Outputs,
    },
    /// Solve the critical system for the L^p maximizer.
    Critical {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        r: f64,
        /// JSON file with fields a, b, xi, eta.
        #[arg(long)]
        guess: Option<PathBuf>,
        #[command(flatten)]
        out: Outputs,
    },
    /// Continue the critical system in p and report diagnostics per step as CSV.
    Continue {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        p_from: f64,
        #[arg(long)]
        p_to: f64,
        #[arg(long, default_value_t = 6)]
        steps: usize,
        /// Write CSV here instead of standard output.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Build the L^1 maximizer.
    Maximize {
        #[arg(long)]
        r: f64,
        #[arg(long, value_enum, default_value_t = StructureArg::Auto)]
        structure: StructureArg,
        /// Also run the uniqueness and local-optimality probes and write them here.
        #[arg(long)]
        probes: Option<PathBuf>,
        #[command(flatten)]
        out: Outputs,
    },
    /// Check a maximizer profile; exits 0 only if every check passes.
    Verify {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Locate the radius where the maximizer changes from two bumps to one.
    Rstar {
        #[arg(long)]
        rmin: f64,
        #[arg(long)]
        rmax: f64,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
}

struct Settings {
    grid: UnitGrid,
    newton: NewtonOptions,
    verify: VerifyTolerances,
    seed: u64,
}

impl Settings {
    fn from_cli(cli: &Cli) -> Result<Self> {
        let n = cli.grid_n;
        if n < MIN_GRID_N || !n.is_power_of_two() {
            return Err(Error::invalid(format!(
                "grid size must be a power of two of at least {MIN_GRID_N}, got {n}"
            )));
        }
        let mut s = Settings {
            grid: UnitGrid::new(n)?,
            newton: NewtonOptions::default(),
            verify: VerifyTolerances::default(),
            seed: cli.seed,
        };
        for item in &cli.tolerances {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("tolerance '{item}' is not NAME=VALUE")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("tolerance '{item}' has a non-numeric value")))?;
            match name.trim() {
                "newton" if value > 0.0 => s.newton.tol = value,
                "newton" => return Err(Error::invalid("newton tolerance must be positive")),
                other => s.verify.set(other, value)?,
            }
        }
        Ok(s)
    }
}

/// Parses `argv` (program name first), runs the command and returns the process exit code.
/// Diagnostics go to standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<i32> {
    let settings = Settings::from_cli(&cli)?;
    match cli.command {
        Command::Eig { potential, count, out } => {
            let q = parse_potential(&potential)?;
            let results = (1..=count)
                .map(|m| dirichlet_eigen(&q, m, settings.grid).map(EigenRecord::from))
                .collect::<Result<Vec<_>>>()?;
            emit_json(&results, out.json.as_deref())?;
        }
        Command::MdeEig { measure, count, out } => {
            let spec: MeasureSpec = read_json(&measure)?;
            let mu = RadonMeasure::try_from(spec)?;
            let results = (1..=count)
                .map(|m| mde_dirichlet_eigen(&mu, m, settings.grid).map(EigenRecord::from))
                .collect::<Result<Vec<_>>>()?;
            emit_json(&results, out.json.as_deref())?;
        }
        Command::Critical { p, r, guess, out } => {
            let guess = guess
                .map(|path| read_json::<GuessRecord>(&path).map(CriticalParams::from))
                .transpose()?;
            let sol = critical::solve_critical(p, r, guess, settings.grid, &settings.newton)?;
            emit_json(&CriticalRecord::from(&sol), out.json.as_deref())?;
            if let Some(path) = out.csv {
                let cols = [sol.y.values(), sol.z.values(), sol.q.values()];
                write_csv(&path, "t,y,z,q", settings.grid, &cols)?;
            }
        }
        Command::Continue {
            r,
            p_from,
            p_to,
            steps,
            csv,
        } => {
            if !(steps >= 1 && p_from > p_to) {
                return Err(Error::invalid("continuation needs p-from > p-to and at least one step"));
            }
            let schedule: Vec<f64> = (0..=steps)
                .map(|i| if i == steps { p_to } else { p_from + (p_to - p_from) * i as f64 / steps as f64 })
                .collect();
            let run = continuation_to_one(r, &schedule, settings.grid, &settings.newton)?;
            let mut text = String::from("p,objective,a,b,u_max,q_l1,pairing\n");
            for s in &run.steps {
                let row = [s.p, s.objective, s.a, s.b, s.u_max, s.q_l1, s.pairing];
                text.push_str(&csv_row(&row));
            }
            write_text(csv.as_deref(), &text)?;
            if let Some(e) = run.failure {
                return Err(e);
            }
        }
        Command::Maximize {
            r,
            structure,
            probes,
            out,
        } => {
            let choice = match structure {
                StructureArg::One => StructureChoice::One,
                StructureArg::Two => StructureChoice::Two,
                StructureArg::Auto => StructureChoice::Auto,
            };
            let mut solver = MaximizerSolver::new(settings.grid, settings.newton);
            let profile = solver.assemble(r, choice, None)?;
            emit_json(&profile.to_record(), out.json.as_deref())?;
            if let Some(path) = out.csv {
                let cols = [
                    profile.y.values(),
                    profile.z.values(),
                    profile.qcheck.values(),
                    profile.theta.values(),
                ];
                write_csv(&path, "t,y,z,q,theta", settings.grid, &cols)?;
            }
            if let Some(path) = probes {
                let report = ProbeReport {
                    uniqueness: uniqueness_probe(&solver, &profile, 5, 1e-2, settings.seed),
                    perturbation: perturbation_probe(&profile, 1e-2, 20, settings.seed)?,
                };
                emit_json(&report, Some(&path))?;
            }
        }
        Command::Verify { profile, json } => {
            let record: ProfileRecord = read_json(&profile)?;
            let profile = MaximizerProfile::from_record(&record)?;
            let report = verify_profile(&profile, &settings.verify)?;
            emit_json(&report, json.as_deref())?;
            if !report.passed {
                eprintln!("failed checks: {}", report.failures().join(", "));
                return Ok(EXIT_CHECKS_FAILED);
            }
        }
        Command::Rstar { rmin, rmax, tol } => {
            let mut solver = MaximizerSolver::new(settings.grid, settings.newton);
            let r_star = crate::maximizer::locate_r_star(&mut solver, rmin, rmax, tol)?;
            println!("{}", fmt_float(r_star));
        }
    }
    Ok(0)
}

fn parse_potential(arg: &str) -> Result<PiecewisePotential> {
    if arg == "zero" {
        return Ok(PiecewisePotential::zero());
    }
    if let Some(c) = arg.strip_prefix("const:") {
        let c: f64 = c
            .parse()
            .map_err(|_| Error::invalid(format!("bad constant in '{arg}'")))?;
        return PiecewisePotential::constant(c);
    }
    let spec: PotentialSpec = read_json(Path::new(arg))?;
    PiecewisePotential::try_from(spec)
}

#[derive(Debug, Serialize)]
struct EigenRecord {
    m: usize,
    lambda: f64,
    nodes: Vec<f64>,
    phi: Vec<f64>,
}

impl From<EigenResult> for EigenRecord {
    fn from(e: EigenResult) -> Self {
        Self {
            m: e.m,
            lambda: e.lambda,
            nodes: e.nodes,
            phi: e.phi.into_values(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct GuessRecord {
    a: f64,
    b: f64,
    xi: f64,
    eta: f64,
}

impl From<GuessRecord> for CriticalParams {
    fn from(g: GuessRecord) -> Self {
        CriticalParams {
            a: g.a,
            b: g.b,
            xi: g.xi,
            eta: g.eta,
        }
    }
}

#[derive(Debug, Serialize)]
struct CriticalRecord {
    p: f64,
    pstar: f64,
    r: f64,
    a: f64,
    b: f64,
    xi: f64,
    eta: f64,
    objective: f64,
    residuals: [f64; 4],
    hamiltonian_residual: f64,
    u_equation_residual: f64,
    grid_n: usize,
}

impl From<&CriticalSolution> for CriticalRecord {
    fn from(s: &CriticalSolution) -> Self {
        Self {
            p: s.p,
            pstar: s.pstar,
            r: s.r,
            a: s.a,
            b: s.b,
            xi: s.xi,
            eta: s.eta,
            objective: s.objective(),
            residuals: s.residuals,
            hamiltonian_residual: hamiltonian_residual(s),
            u_equation_residual: u_equation_residual(s),
            grid_n: s.grid().cells(),
        }
    }
}

#[derive(Debug, Serialize)]
struct ProbeReport {
    uniqueness: crate::maximizer::UniquenessProbe,
    perturbation: crate::maximizer::PerturbationProbe,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut text = to_json_string(value)?;
    text.push('\n');
    write_text(path, &text)
}

/// Serializes with every float printed at 17 significant digits, so identical runs
/// produce byte-identical output.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    Ok(out)
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let indent = |out: &mut String, d: usize| out.push_str(&"  ".repeat(d));
    match v {
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) if !n.is_f64() => {
                let _ = write!(out, "{u}");
            }
            (_, Some(i), _) if !n.is_f64() => {
                let _ = write!(out, "{i}");
            }
            (_, _, Some(f)) => out.push_str(&fmt_float(f)),
            _ => out.push_str("null"),
        },
        Value::Array(items) if items.iter().all(|x| !x.is_array() && !x.is_object()) => {
            out.push('[');
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, x, depth + 1);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                indent(out, depth + 1);
                write_value(out, x, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            indent(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, x)) in map.iter().enumerate() {
                indent(out, depth + 1);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(out, x, depth + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            indent(out, depth);
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

fn fmt_float(f: f64) -> String {
    if f.is_finite() {
        format!("{f:.16e}")
    } else {
        "null".to_string()
    }
}

fn csv_row(values: &[f64]) -> String {
    let mut row = values.iter().map(|v| fmt_float(*v)).collect::<Vec<_>>().join(",");
    row.push('\n');
    row
}

fn write_csv(path: &Path, header: &str, grid: UnitGrid, columns: &[&[f64]]) -> Result<()> {
    let mut text = format!("{header}\n");
    for k in 0..grid.len() {
        let mut row = vec![grid.node(k)];
        row.extend(columns.iter().map(|c| c[k]));
        text.push_str(&csv_row(&row));
    }
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_use_seventeen_digits() {
        let s = to_json_string(&serde_json::json!({"x": 0.1, "n": 3, "v": [1.0, -2.5]})).unwrap();
        assert!(s.contains("\"x\": 1.0000000000000001e-1"), "{s}");
        assert!(s.contains("\"n\": 3"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64(), Some(0.1));
    }

    #[test]
    fn rejects_bad_grid() {
        assert_eq!(run(["slopt", "--grid-n", "300", "eig", "--potential", "zero"]), 2);
        assert_eq!(run(["slopt", "--grid-n", "128", "eig", "--potential", "zero"]), 2);
    }

    #[test]
    fn unknown_tolerance_is_invalid() {
        assert_eq!(run(["slopt", "--tol", "bogus=1", "eig", "--potential", "zero"]), 2);
    }
}
