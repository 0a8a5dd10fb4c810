use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cregular::circle::CircleGrid;
use cregular::factorization::spectral_factor;
use cregular::prediction::rho_table;
use cregular::report::{
    emit_profiles, parse_criteria, rho_csv, run_analysis, run_counterexample, AnalysisConfig, RegularityReport,
};
use cregular::weight::MatrixWeight;
use cregular::weight_file::{export_weight, parse_weight_file};
use cregular::Error;

#[derive(Parser)]
#[command(name = "cregular", version, about = "Complete-regularity analysis of matrix spectral densities")]
struct Cli {
    /// Worker threads for the numerical kernels (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Grid size: a power of two, written as 16384 or 2^14.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<usize>,
}

#[derive(Args, Clone)]
struct AnalysisArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Dyadic arc levels 0..=LEVELS.
    #[arg(long)]
    levels: Option<usize>,
    /// Depth of the radius ladder and polar grid.
    #[arg(long)]
    radii: Option<usize>,
    /// Comma-separated criteria, or `all`.
    #[arg(long)]
    criteria: Option<String>,
    /// Comma-separated shifts N for the ρ table.
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    /// Finite-section size K.
    #[arg(long)]
    k: Option<usize>,
    /// Order M of the spectral factor.
    #[arg(long)]
    order: Option<usize>,
    /// Tolerance on |limit − 1| for A₂ and entropy trends.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Output directory for report.json and CSV profiles; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the selected criteria on a weight file.
    Analyze {
        weight: PathBuf,
        #[command(flatten)]
        args: AnalysisArgs,
    },
    /// Counterexample run: diverging A₂ next to vanishing oscillation of log W.
    Counterexample {
        #[command(flatten)]
        args: AnalysisArgs,
    },
    /// Spectral factor coefficients as CSV.
    Factorize {
        weight: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 64)]
        order: usize,
        /// Output directory for factor.csv; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// ρ_N^{(K)} table as CSV.
    Rho {
        weight: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,4,8,16,32,64")]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = 64)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a weight file and write it as a grid file.
    ExportWeight {
        weight: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        /// Output file; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const DEFAULT_GRID: usize = 1 << 14;
const COUNTEREXAMPLE_GRID: usize = 1 << 16;

fn parse_grid(s: &str) -> Result<usize, String> {
    let n = match s.strip_prefix("2^") {
        Some(e) => {
            let e: u32 = e.parse().map_err(|_| format!("bad exponent in `{s}`"))?;
            1usize.checked_shl(e).ok_or_else(|| format!("`{s}` is too large"))?
        }
        None => s.parse().map_err(|_| format!("`{s}` is not an integer"))?,
    };
    CircleGrid::new(n).map(|_| n).map_err(|e| e.to_string())
}

enum Failure {
    Validation(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

fn config_from(args: &AnalysisArgs, default_grid: usize, default_criteria: Option<&str>) -> Result<AnalysisConfig, Failure> {
    let mut config = AnalysisConfig::for_grid(args.grid.grid.unwrap_or(default_grid))?;
    if let Some(l) = args.levels {
        config.levels = l;
    }
    if let Some(r) = args.radii {
        config.radii = r;
    }
    match (args.criteria.as_deref(), default_criteria) {
        (Some(list), _) | (None, Some(list)) => config.criteria = parse_criteria(list)?,
        (None, None) => {}
    }
    if let Some(n) = &args.n_list {
        config.n_list = n.clone();
    }
    if let Some(k) = args.k {
        config.k = k;
    }
    if let Some(m) = args.order {
        config.factor_order = m;
    }
    if let Some(t) = args.tolerance {
        config.tolerance = t;
    }
    config.validate()?;
    Ok(config)
}

fn load(path: &Path, grid: &GridArgs) -> Result<MatrixWeight, Failure> {
    let grid = CircleGrid::new(grid.grid.unwrap_or(DEFAULT_GRID))?;
    Ok(parse_weight_file(path, grid)?)
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Validation(format!("{}: {e}", path.display()))
}

fn write_or_print(out: Option<&Path>, file: &str, body: &str) -> Result<(), Failure> {
    match out {
        None => {
            print!("{body}");
            Ok(())
        }
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            let path = dir.join(file);
            std::fs::write(&path, body).map_err(|e| io_err(&path, e))?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn finish_report(report: &RegularityReport, out: Option<&Path>) -> Result<(), Failure> {
    write_or_print(out, "report.json", &report.to_json())?;
    if let Some(dir) = out {
        let (files, warnings) = emit_profiles(report, dir)?;
        for f in files {
            eprintln!("wrote {}", f.display());
        }
        for w in warnings {
            eprintln!("warning: {w}");
        }
    }
    eprintln!("verdict: {}", report.overall.label);
    if let Some(ce) = &report.counterexample {
        eprintln!(
            "A2 diverging: {}, log W oscillation vanishing: {}, growth slope {:.3}",
            ce.a2_diverging, ce.log_w_vmo, ce.loglog_slope
        );
    }
    if report.errors.is_empty() {
        Ok(())
    } else {
        let msgs: Vec<String> = report.errors.iter().map(|(k, v)| format!("{k}: {v}")).collect();
        Err(Failure::Numerical(msgs.join("; ")))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Analyze { weight, args } => {
            let config = config_from(&args, DEFAULT_GRID, None)?;
            let w = load(&weight, &args.grid)?;
            let report = run_analysis(&w, &config)?;
            finish_report(&report, args.out.as_deref())
        }
        Command::Counterexample { args } => {
            let config = config_from(&args, COUNTEREXAMPLE_GRID, Some("a2-interval,oscillation"))?;
            let report = run_counterexample(&config)?;
            finish_report(&report, args.out.as_deref())
        }
        Command::Factorize { weight, grid, order, out } => {
            let w = load(&weight, &grid)?;
            let f = spectral_factor(&w, order)?;
            eprintln!("order {order}, circle residual {:e}", f.circle_residual);
            write_or_print(out.as_deref(), "factor.csv", &f.to_csv())
        }
        Command::Rho { weight, grid, n_list, k, out } => {
            let w = load(&weight, &grid)?;
            let table = rho_table(&w, &n_list, k)?;
            write_or_print(out.as_deref(), "rho.csv", &rho_csv(&table))
        }
        Command::ExportWeight { weight, grid, out } => {
            let w = load(&weight, &grid)?;
            let body = export_weight(&w);
            match out {
                None => {
                    println!("{body}");
                    Ok(())
                }
                Some(path) => std::fs::write(&path, body + "\n").map_err(|e| io_err(&path, e)),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
