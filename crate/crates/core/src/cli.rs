//! The `bvp` command-line front end.
//!
//! ```text
//! bvp <solve|check|analyze|norms> --scenario FILE --out DIR [--grid-N INT] [--tolerance FLOAT]
//! ```
//!
//! Exit status is 0 on success, 2 when the input is rejected and 3 when a
//! numerical step fails. Log verbosity follows `BVP_LOG_LEVEL`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;

use crate::analysis::{check_conditions, two_sided_report, AnalysisReport, Conditions};
use crate::error::{Error, Result};
use crate::grid::{sobolev_norm, sobolev_norm_of_jet, Exponent, SobolevIndex};
use crate::report::{cell, fmt_f64, pair, pairs, to_csv, to_json, write_atomic, Pair};
use crate::scenario::{Scenario, SCHEMA_VERSION};
use crate::solver::{residuals, solve_with, Classification, Problem, Solution, SolverOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "bvp", version, about = "Linear boundary-value problems with general boundary operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the problem (the limit problem for a family).
    Solve(CommonArgs),
    /// Check Condition (0) and the limit conditions of a family.
    Check(CommonArgs),
    /// Tabulate errors, discrepancies and their ratios for a family.
    Analyze(CommonArgs),
    /// Sobolev norms of the data, the solution and any requested functions.
    Norms(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, value_name = "FILE")]
    pub scenario: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Number of grid subintervals, overriding the scenario.
    #[arg(long = "grid-N", value_name = "INT")]
    pub grid_n: Option<usize>,
    /// Rank tolerance relative to the largest singular value of [B Y].
    #[arg(long, value_name = "FLOAT")]
    pub tolerance: Option<f64>,
}

impl Command {
    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Solve(a) | Command::Check(a) | Command::Analyze(a) | Command::Norms(a) => a,
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_NUMERICAL
    }
}

fn options(args: &CommonArgs) -> Result<SolverOptions> {
    match args.tolerance {
        Some(t) if !(t.is_finite() && t > 0.0 && t < 1.0) => {
            Err(Error::schema("--tolerance", "must lie in (0, 1)"))
        }
        t => Ok(SolverOptions { rank_rtol: t }),
    }
}

#[derive(Debug, Serialize)]
struct Residual {
    equation_l2: f64,
    boundary: f64,
}

#[derive(Debug, Serialize)]
struct SolutionJson<'a> {
    schema_version: u32,
    eps: f64,
    grid: GridJson,
    classification: &'static str,
    kernel_dim: usize,
    unsolvable_residual: Option<f64>,
    det: Pair,
    abs_det: f64,
    rank: usize,
    rank_tolerance: f64,
    singular_values: &'a [f64],
    condition_number: f64,
    q: Vec<Pair>,
    residuals: Residual,
    warnings: &'a [String],
}

#[derive(Debug, Serialize)]
struct GridJson {
    a: f64,
    b: f64,
    #[serde(rename = "N")]
    n: usize,
}

fn grid_json(p: &Problem) -> GridJson {
    GridJson {
        a: p.grid.a(),
        b: p.grid.b(),
        n: p.grid.intervals(),
    }
}

/// Header of `solution.csv`: `t`, then real and imaginary parts of every
/// component of `y, y', …, y^{(r)}`.
pub fn solution_header(m: usize, r: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for k in 0..=r {
        for i in 0..m {
            let name = if k == 0 { format!("y{i}") } else { format!("y{i}_d{k}") };
            h.push(format!("{name}_re"));
            h.push(format!("{name}_im"));
        }
    }
    h
}

fn solution_csv(p: &Problem, s: &Solution) -> Result<String> {
    let rows = p
        .grid
        .nodes()
        .into_iter()
        .enumerate()
        .map(|(node, t)| {
            let mut row = vec![fmt_f64(t)];
            for k in 0..=p.r {
                let d = &s.jet.derivatives()[k];
                for i in 0..p.m {
                    let z = d.at(node, i, 0);
                    row.push(fmt_f64(z.re));
                    row.push(fmt_f64(z.im));
                }
            }
            row
        })
        .collect::<Vec<_>>();
    to_csv(&solution_header(p.m, p.r), &rows)
}

/// Header of `report.csv`.
pub fn report_header(r: usize) -> Vec<String> {
    let mut h = vec!["eps".to_string()];
    h.extend((0..r).map(|k| format!("errI_A{k}")));
    for name in ["gapII", "error", "discrepancy", "ratio"] {
        h.push(name.to_string());
    }
    h
}

fn report_csv(rep: &AnalysisReport) -> Result<String> {
    let rows = rep
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut out = vec![fmt_f64(row.eps)];
            out.extend(rep.limit_i.deltas[i].iter().map(|&d| fmt_f64(d)));
            out.push(fmt_f64(rep.limit_ii.gaps[i]));
            out.push(cell(row.error));
            out.push(cell(row.discrepancy));
            out.push(cell(row.ratio));
            out
        })
        .collect::<Vec<_>>();
    to_csv(&report_header(rep.r), &rows)
}

#[derive(Debug, Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    body: &'a T,
}

fn versioned<T: Serialize>(body: &T) -> Result<String> {
    to_json(&Versioned {
        schema_version: SCHEMA_VERSION,
        body,
    })
}

#[derive(Debug, Serialize)]
struct NormEntry {
    label: String,
    n: usize,
    p: Exponent,
    value: f64,
}

#[derive(Debug, Serialize)]
struct NormsJson {
    schema_version: u32,
    eps: f64,
    data: Vec<NormEntry>,
    solution: Option<NormEntry>,
    solution_classification: &'static str,
    requested: Vec<NormEntry>,
}

fn write(out: &Path, name: &str, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = out.join(name);
    write_atomic(&path, text.as_bytes())?;
    info!("wrote {}", path.display());
    written.push(path);
    Ok(())
}

/// Runs one command and returns the paths written.
pub fn run(command: &Command) -> Result<Vec<PathBuf>> {
    let args = command.args();
    let opts = options(args)?;
    let scenario = Scenario::load(&args.scenario, args.grid_n)?;
    std::fs::create_dir_all(&args.out)?;
    let mut written = Vec::new();
    match command {
        Command::Solve(_) => {
            let p = scenario.problem(0.0)?;
            let s = solve_with(&p, opts)?;
            let res = residuals(&p, &s)?;
            let ch = &s.characteristic;
            let json = SolutionJson {
                schema_version: SCHEMA_VERSION,
                eps: 0.0,
                grid: grid_json(&p),
                classification: s.classification.label(),
                kernel_dim: s.kernel_dim(),
                unsolvable_residual: match s.classification {
                    Classification::Unsolvable { residual } => Some(residual),
                    _ => None,
                },
                det: pair(ch.det),
                abs_det: ch.det.norm(),
                rank: ch.rank,
                rank_tolerance: ch.rank_rtol,
                singular_values: &ch.svals,
                condition_number: ch.condition_number(),
                q: pairs(s.q.iter()),
                residuals: Residual {
                    equation_l2: res.equation,
                    boundary: res.boundary,
                },
                warnings: &s.warnings,
            };
            write(&args.out, "solution.csv", &solution_csv(&p, &s)?, &mut written)?;
            write(&args.out, "solution.json", &to_json(&json)?, &mut written)?;
        }
        Command::Check(_) => {
            let fam = scenario.family()?.with_options(opts);
            let conditions: Conditions = check_conditions(&fam)?;
            write(&args.out, "conditions.json", &versioned(&conditions)?, &mut written)?;
        }
        Command::Analyze(_) => {
            let fam = scenario.family()?.with_options(opts);
            let rep = two_sided_report(&fam)?;
            write(&args.out, "report.json", &versioned(&rep)?, &mut written)?;
            write(&args.out, "report.csv", &report_csv(&rep)?, &mut written)?;
        }
        Command::Norms(_) => {
            let p = scenario.problem(0.0)?;
            let data_idx = p.data_index();
            let mut data = p
                .coefficients
                .iter()
                .enumerate()
                .map(|(k, a)| {
                    Ok(NormEntry {
                        label: format!("A_{k}"),
                        n: p.n,
                        p: p.p,
                        value: sobolev_norm(a, data_idx)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            data.push(NormEntry {
                label: "f".into(),
                n: p.n,
                p: p.p,
                value: sobolev_norm(&p.rhs, data_idx)?,
            });
            let s = solve_with(&p, opts)?;
            let solution = match s.classification {
                Classification::Unsolvable { .. } => None,
                _ => Some(NormEntry {
                    label: "y".into(),
                    n: p.n + p.r,
                    p: p.p,
                    value: sobolev_norm_of_jet(&s.jet, p.solution_index())?,
                }),
            };
            let requested = scenario
                .requested_norms()?
                .into_iter()
                .map(|(label, f, n, pp)| {
                    Ok(NormEntry {
                        value: sobolev_norm(&f, SobolevIndex::new(n, pp))?,
                        label,
                        n,
                        p: pp,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let json = NormsJson {
                schema_version: SCHEMA_VERSION,
                eps: 0.0,
                data,
                solution,
                solution_classification: s.classification.label(),
                requested,
            };
            write(&args.out, "norms.json", &to_json(&json)?, &mut written)?;
        }
    }
    Ok(written)
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit status. Errors are reported on stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match run(&cli.command) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("bvp: error: {e}");
            exit_code(&e)
        }
    }
}

/// Installs the logger configured by `BVP_LOG_LEVEL` (default `warn`).
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("BVP_LOG_LEVEL", "warn");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
}
