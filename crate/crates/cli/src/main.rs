use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hermspde_cli::{commands, configure_threads, CliResult, LoadedConfig, Overrides};

#[derive(Parser, Debug)]
#[command(name = "hermspde", version, about = "Hermite spectral experiments for linear SPDEs")]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Output directory, replacing `output_dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monotonicity constants over p, p-2, q-2 and a list of truncations.
    Monotonicity {
        #[arg(long, value_delimiter = ',', default_values_t = [4usize, 8, 16])]
        n_list: Vec<usize>,
    },
    /// Mean-square decay against the exponential bound.
    Stability,
    /// Tail mass and ergodic averages (requires q < p).
    Invariant,
    /// Random-vector check of the finite-rank embedding bound.
    Embedding {
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 8])]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Galerkin ensemble against the exact translation solution.
    OracleCompare {
        /// Step sizes for a strong-error sweep.
        #[arg(long, value_delimiter = ',')]
        dt_list: Option<Vec<f64>>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    let path = cli
        .config
        .ok_or_else(|| hermspde_cli::CliError::Config("--config is required".into()))?;
    let overrides = Overrides {
        seed: cli.seed,
        paths: cli.paths,
        out: cli.out,
    };
    let cfg = LoadedConfig::load(&path, &overrides)?;
    match cli.command {
        Command::Monotonicity { n_list } => {
            let rows = commands::monotonicity(&cfg, &n_list)?;
            for r in rows {
                println!("p = {:>6}  N = {:>3}  C_hat = {:.6e}", r.p, r.order, r.c_hat);
            }
        }
        Command::Stability => {
            let r = commands::stability(&cfg)?;
            let beta = r.beta_hat.map_or("n/a".to_string(), |b| format!("{b:.6}"));
            println!(
                "beta_hat = {beta}  bound_rate = {:.6}  worst_ratio = {:.6}",
                r.bound_rate, r.worst_ratio
            );
        }
        Command::Invariant => {
            let (tail, ergodic) = commands::invariant(&cfg)?;
            let r_eps = tail.r_eps.map_or("none".to_string(), |r| r.to_string());
            println!("R_eps = {r_eps}");
            for e in ergodic {
                let last = e.running_avg().last().copied().unwrap_or(f64::NAN);
                println!("{}: A_T = {last:.6}  f(0) = {}", e.functional_id, e.limit_ref);
            }
        }
        Command::Embedding { n_list, trials } => {
            let rows = commands::embedding(&cfg, &n_list, trials)?;
            println!("{} rows, no violations", rows.len());
        }
        Command::OracleCompare { dt_list } => {
            let s = commands::oracle_compare(&cfg, dt_list.as_deref())?;
            println!("max mean error = {:.6e}", s.max_mean_error);
            if let Some(study) = s.strong {
                println!("fitted strong order = {:.4}", study.fitted_order);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
