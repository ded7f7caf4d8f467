use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fucik_core::io::{branch_csv, fucik_csv, gnuplot_script, spectrum_csv};
use fucik_core::monotone::{check_vector_inequalities, monotonicity_sweep};
use fucik_core::spectrum::spectrum_rows;
use fucik_core::{
    fucik_sweep, gamma_window, localization_check, seed_limit, slope_fit, split_eigenvalues, trace_branches,
    BranchSeed, ConeParams, Error, Grid, ProblemParams, SolverConfig,
};
use serde::Serialize;
use serde_json::json;

#[derive(Parser, Debug, Serialize)]
#[command(
    name = "fucik-branch",
    version,
    about = "Split eigenvalues and (p,2)-Laplacian bifurcation branches on (0, L)"
)]
struct Cli {
    #[command(flatten)]
    run: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Serialize)]
struct RunConfig {
    /// Interior grid nodes.
    #[arg(long, global = true, default_value_t = 199)]
    grid_n: usize,
    /// Interval length.
    #[arg(long, global = true, default_value_t = std::f64::consts::PI)]
    length: f64,
    /// Directory receiving all outputs.
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Seed for every sampled diagnostic.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Absolute dual-norm tolerance of the monotone solvers.
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
    /// Residual tolerance of the continuation corrector.
    #[arg(long, global = true)]
    corrector_tol: Option<f64>,
    /// JSON file with a full solver configuration; flags override it.
    #[arg(long, global = true)]
    solver_config: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Which {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Both,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "name", rename_all = "lowercase")]
enum Command {
    /// Eigenvalues of the discrete Dirichlet Laplacian.
    Spectrum {
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Split eigenvalues of -u'' - gamma u^- = lambda u near lambda_k.
    Halfeig {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
    },
    /// Fucik curves of -u'' = lambda_+ u^+ - lambda_- u^-.
    Fucik {
        #[arg(long, default_value_t = 4)]
        max_humps: usize,
        #[arg(long, default_value_t = 0.5)]
        lp_min: f64,
        #[arg(long, default_value_t = 40.0)]
        lp_max: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Trace bifurcation branches from the split eigenvalues.
    Branch {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = Which::One)]
        which: Which,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        #[arg(long)]
        alpha0: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Branches traced concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Vector inequalities and the monotonicity sweep for p > 2.
    Verify {
        #[arg(long, default_value_t = 3.0)]
        p: f64,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 10_000)]
        pairs: usize,
    },
}

enum Failure {
    Usage(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidGrid(_)
            | Error::InvalidExponent { .. }
            | Error::IndexOutOfRange { .. }
            | Error::GammaOutsideWindow { .. }
            | Error::InvalidConfig(_)
            | Error::NonpositiveParameters { .. } => Failure::Usage(e.to_string()),
            other => Failure::Solver(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Solver(format!("i/o error: {e}"))
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn solver_config(run: &RunConfig) -> Outcome<SolverConfig> {
    let mut config = match &run.solver_config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => SolverConfig::default(),
    };
    if let Some(t) = run.abs_tol {
        config.abs_tol = t;
    }
    if let Some(t) = run.corrector_tol {
        config.corrector_tol = t;
    }
    config.validate()?;
    Ok(config)
}

fn write(dir: &Path, name: &str, contents: &str) -> Outcome<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    println!("{}", path.display());
    Ok(path)
}

fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn spectrum(grid: &Grid, run: &RunConfig, count: usize) -> Outcome<serde_json::Value> {
    let rows = spectrum_rows(grid, count)?;
    match run.format {
        Format::Csv => {
            let tuples: Vec<_> = rows
                .iter()
                .map(|r| (r.k, r.lambda_discrete, r.lambda_continuum))
                .collect();
            write(&run.output_dir, "spectrum.csv", &spectrum_csv(&tuples))?;
        }
        Format::Json => {
            write(&run.output_dir, "spectrum.json", &to_json(&rows))?;
        }
    }
    Ok(json!({ "count": count }))
}

fn halfeig(grid: &Grid, run: &RunConfig, k: usize, gamma: f64) -> Outcome<serde_json::Value> {
    let sp = split_eigenvalues(grid, k, gamma)?;
    let window = if k >= 2 {
        Some(gamma_window(grid, k)?.gamma_max)
    } else {
        None
    };
    let summary = json!({
        "k": k,
        "gamma": gamma,
        "lambda1": sp.lambda1,
        "lambda2": sp.lambda2,
        "shoot1": sp.shoot1,
        "shoot2": sp.shoot2,
        "eta": sp.eta,
        "residual1": sp.residual1,
        "residual2": sp.residual2,
        "gamma_max": window,
    });
    write(&run.output_dir, "halfeig.json", &to_json(&summary))?;
    if run.format == Format::Csv {
        write(&run.output_dir, "halfeig_v1.csv", &sp.v1.to_csv())?;
        write(&run.output_dir, "halfeig_v2.csv", &sp.v2.to_csv())?;
    }
    Ok(summary)
}

fn fucik(
    grid: &Grid,
    run: &RunConfig,
    max_humps: usize,
    lp_min: f64,
    lp_max: f64,
    samples: usize,
) -> Outcome<serde_json::Value> {
    let points = fucik_sweep(grid.length(), max_humps, lp_min, lp_max, samples)?;
    match run.format {
        Format::Csv => write(&run.output_dir, "fucik.csv", &fucik_csv(&points))?,
        Format::Json => write(&run.output_dir, "fucik.json", &to_json(&points))?,
    };
    Ok(json!({ "points": points.len() }))
}

#[allow(clippy::too_many_arguments)]
fn branch(
    grid: &Grid,
    run: &RunConfig,
    mut config: SolverConfig,
    p: f64,
    k: usize,
    which: Which,
    gamma: f64,
    alpha0: Option<f64>,
    steps: Option<usize>,
    jobs: usize,
) -> Outcome<serde_json::Value> {
    if let Some(a) = alpha0 {
        config.alpha0 = a;
    }
    if let Some(s) = steps {
        config.max_steps = s;
    }
    config.validate()?;
    let whiches: &[usize] = match which {
        Which::One => &[1],
        Which::Two => &[2],
        Which::Both => &[1, 2],
    };
    let seeds: Vec<BranchSeed> = whiches.iter().map(|&w| BranchSeed { k, which: w, gamma, p }).collect();
    let mut summaries = Vec::new();
    let mut plot_entries = Vec::new();
    for result in trace_branches(grid, &seeds, &config, jobs) {
        let b = result?;
        let name = format!("branch_k{}_w{}.csv", k, b.seed.which);
        match run.format {
            Format::Csv => {
                write(&run.output_dir, &name, &branch_csv(&b))?;
                plot_entries.push((name, k, b.seed.which));
            }
            Format::Json => {
                write(
                    &run.output_dir,
                    &format!("branch_k{}_w{}.json", k, b.seed.which),
                    &to_json(&b),
                )?;
            }
        }
        let loc = localization_check(
            &b,
            &ConeParams {
                rho: f64::INFINITY,
                eta: b.eta,
            },
        );
        let slope = if b.transformed { None } else { slope_fit(&b, 1e-2) };
        summaries.push(json!({
            "seed": b.seed,
            "seed_lambda": b.seed_lambda,
            "eta": b.eta,
            "transformed": b.transformed,
            "points": b.points.len(),
            "termination": b.termination,
            "empirical_rho0": loc.rho0,
            "slope_fit": slope,
            "seed_limit": seed_limit(&b, 5),
            "alpha_sign_changes": b.alpha_sign_changes,
        }));
    }
    let summary = serde_json::Value::Array(summaries);
    write(&run.output_dir, "branch_summary.json", &to_json(&summary))?;
    if !plot_entries.is_empty() {
        let label = if p < 2.0 {
            "||u||_{1,2} (back-transformed)"
        } else {
            "||u||_{1,2}"
        };
        write(&run.output_dir, "branches.gp", &gnuplot_script(&plot_entries, label))?;
    }
    Ok(summary)
}

fn verify(
    grid: &Grid,
    run: &RunConfig,
    p: f64,
    gamma: f64,
    samples: usize,
    pairs: usize,
) -> Outcome<serde_json::Value> {
    let ineq = check_vector_inequalities(p, samples, run.seed)?;
    let params = ProblemParams::new(p, gamma, 0.0)?;
    let sweep = monotonicity_sweep(grid, &params, ineq.c1_emp, pairs, run.seed)?;
    let report = json!({
        "p": p,
        "c1_emp": ineq.c1_emp,
        "c2_emp": ineq.c2_emp,
        "violations": ineq.violations,
        "samples": ineq.samples,
        "monotonicity": sweep,
    });
    write(&run.output_dir, "verify.json", &to_json(&report))?;
    Ok(report)
}

fn execute(cli: &Cli) -> Outcome<serde_json::Value> {
    let run = &cli.run;
    let grid = Grid::new(run.length, run.grid_n)?;
    let config = solver_config(run)?;
    std::fs::create_dir_all(&run.output_dir)?;
    let result = match cli.command {
        Command::Spectrum { count } => spectrum(&grid, run, count)?,
        Command::Halfeig { k, gamma } => halfeig(&grid, run, k, gamma)?,
        Command::Fucik {
            max_humps,
            lp_min,
            lp_max,
            samples,
        } => fucik(&grid, run, max_humps, lp_min, lp_max, samples)?,
        Command::Branch {
            p,
            k,
            which,
            gamma,
            alpha0,
            steps,
            jobs,
        } => branch(&grid, run, config, p, k, which, gamma, alpha0, steps, jobs)?,
        Command::Verify {
            p,
            gamma,
            samples,
            pairs,
        } => verify(&grid, run, p, gamma, samples, pairs)?,
    };
    let meta = json!({
        "program": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "argv": std::env::args().collect::<Vec<_>>(),
        "run": cli.run,
        "command": cli.command,
        "solver_config": config,
    });
    write(&run.output_dir, "run_meta.json", &to_json(&meta))?;
    Ok(result)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FUCIK_BRANCH_LOG", "error")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(&cli) {
        Ok(_) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n");
            use clap::CommandFactory;
            let _ = Cli::command().print_help();
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failure: {msg}");
            ExitCode::from(1)
        }
    }
}
