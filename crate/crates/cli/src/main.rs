mod config;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{CommandFactory, Parser, Subcommand};
use serde::Serialize;

use skorokhod_core::planar::{build_counterexample, classify, solve_critical};
use skorokhod_core::sim::{brownian_path, uniqueness_experiment, BrownianSpec, Verdict};
use skorokhod_core::solver::{solve_direct, DEFAULT_MAX_ITER, DEFAULT_TOL};
use skorokhod_core::{analyze, solve, Error, PiecewisePath, ReflectionMatrix, SkorokhodProblem, SolveOptions};

#[derive(Parser)]
#[command(name = "skorokhod", version, about = "Skorokhod problem in the orthant with oblique reflection")]
struct Cli {
    /// JSON object supplying flag values; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Spectral data, completely-S check and class decomposition of R.
    Analyze {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve g = f + R m. Exit code 2 on non-convergence, 3 outside the regime.
    Solve {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        path: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[arg(long)]
        allow_supercritical: bool,
        /// Iterate on the whole system instead of class by class.
        #[arg(long)]
        direct: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Five-case classification of R = [[1, a1], [a2, 1]].
    Classify {
        #[arg(long, allow_negative_numbers = true)]
        a1: f64,
        #[arg(long, allow_negative_numbers = true)]
        a2: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form solution for a1, a2 > 0 with a1 a2 = 1.
    Oracle2d {
        #[arg(long, allow_negative_numbers = true)]
        a1: f64,
        #[arg(long, allow_negative_numbers = true)]
        a2: f64,
        #[arg(long)]
        path: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two distinct solutions for R = [[1, gamma], [1, 1]], gamma > 1.
    Counterexample {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        depth: u32,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Restart-invariance experiment on a seeded Brownian driver.
    /// Exit code 1 unless the verdict is PASS.
    Simulate {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        x0: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[arg(long)]
        allow_supercritical: bool,
        /// Also write the sampled driving path here.
        #[arg(long)]
        path_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Path JSON to CSV with header t,x1,...,xd.
    ExportCsv {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Cmd::Analyze { matrix, out } => {
            let m: ReflectionMatrix = read_json(&matrix)?;
            write_json(&analyze(&m)?, out.as_deref())?;
        }
        Cmd::Solve {
            matrix,
            path,
            tol,
            max_iter,
            allow_supercritical,
            direct,
            out,
        } => {
            let m: ReflectionMatrix = read_json(&matrix)?;
            let f: PiecewisePath = read_json(&path)?;
            let problem = if allow_supercritical {
                SkorokhodProblem::allow_supercritical(m, f)?
            } else {
                SkorokhodProblem::new(m, f)?
            };
            let options = SolveOptions {
                tol,
                max_iter,
                ..SolveOptions::default()
            };
            let solution = if direct {
                solve_direct(&problem, &options)?
            } else {
                solve(&problem, &options)?
            };
            write_json(&solution, out.as_deref())?;
            if !solution.validation.passed {
                eprintln!("validation failed: {}", solution.validation.failures.join("; "));
                return Ok(ExitCode::FAILURE);
            }
        }
        Cmd::Classify { a1, a2, out } => write_json(&classify(a1, a2), out.as_deref())?,
        Cmd::Oracle2d { a1, a2, path, out } => {
            let f: PiecewisePath = read_json(&path)?;
            write_json(&solve_critical(a1, a2, &f)?, out.as_deref())?;
        }
        Cmd::Counterexample { gamma, depth, out_dir } => {
            let bundle = build_counterexample(gamma, depth)?;
            fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            let file = |name: &str| out_dir.join(name);
            write_json(&bundle.f, Some(&file("f.json")))?;
            write_json(&bundle.g, Some(&file("g.json")))?;
            write_json(&bundle.g_bar, Some(&file("g_bar.json")))?;
            write_json(&bundle.m, Some(&file("m.json")))?;
            write_json(&bundle.m_bar, Some(&file("m_bar.json")))?;
            let (first, second) = bundle.validate()?;
            let report = CounterexampleReport {
                gamma,
                depth,
                matrix: bundle.matrix(),
                sup_g_distance: bundle.sup_gap()?,
                passed: first.passed && second.passed,
                solution: first,
                solution_bar: second,
            };
            write_json(&report, Some(&file("validation.json")))?;
            write_json(&report, None)?;
            if !report.passed {
                return Ok(ExitCode::FAILURE);
            }
        }
        Cmd::Simulate {
            matrix,
            x0,
            horizon,
            steps,
            seed,
            restarts,
            tol,
            max_iter,
            allow_supercritical,
            path_out,
            out,
        } => {
            let m: ReflectionMatrix = read_json(&matrix)?;
            let f = brownian_path(&BrownianSpec {
                x0,
                horizon,
                steps,
                seed,
            })?;
            if let Some(p) = &path_out {
                write_json(&f, Some(p))?;
            }
            let options = SolveOptions {
                tol,
                max_iter,
                ..SolveOptions::default()
            };
            let report = uniqueness_experiment(&m, &f, restarts, seed, &options, allow_supercritical)?;
            write_json(&report, out.as_deref())?;
            if report.verdict != Verdict::Pass {
                return Ok(ExitCode::FAILURE);
            }
        }
        Cmd::ExportCsv { input, out } => {
            let f: PiecewisePath = read_json(&input)?;
            let file = File::create(&out).with_context(|| format!("writing {}", out.display()))?;
            let mut w = BufWriter::new(file);
            f.write_csv(&mut w)?;
            w.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct CounterexampleReport {
    gamma: f64,
    depth: u32,
    matrix: ReflectionMatrix,
    sup_g_distance: f64,
    passed: bool,
    solution: skorokhod_core::ValidationReport,
    solution_bar: skorokhod_core::ValidationReport,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Convergence { .. }) => 2,
        Some(Error::Regime(_)) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let args = match config::merge(std::env::args_os().collect(), &Cli::command()) {
        Ok(args) => args,
        Err(err) => {
            eprintln!("error: {err:#}");
            return ExitCode::FAILURE;
        }
    };
    let cli = Cli::parse_from(args);
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
