use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cssgen::driver::formats::{parse_matrix_auto, MatrixFormat};
use cssgen::driver::{
    self, diagnostics, execute_run, verify_pair, OutputConfig, PairSource, RunConfig,
};
use cssgen::localize::{assemble_repair_system, compute_violation};
use cssgen::perturb::{apply_cross_swap, CrossSwap};
use cssgen::repair::{export_ilp, SolveMode, SolverBudget};
use cssgen::seed::{build_tiled_seed, OrthoPair, SeedParams};
use cssgen::Error;

#[derive(Parser)]
#[command(
    name = "cssgen",
    version,
    about = "Generate randomized orthogonal matrix pairs for CSS quantum LDPC codes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the tiled identity seed pair.
    Seed {
        /// Identity block size.
        #[arg(long = "P")]
        block_size: usize,
        /// Column weight (block rows).
        #[arg(long = "dc")]
        col_weight: usize,
        /// Row weight (block columns); must be even.
        #[arg(long = "dr")]
        row_weight: usize,
        #[arg(long)]
        out_hx: PathBuf,
        #[arg(long)]
        out_hz: PathBuf,
        #[arg(long, default_value = "alist")]
        format: MatrixFormat,
    },
    /// Run switch-repair iterations from a seed or loaded pair.
    Randomize {
        /// Input X matrix (with --hz; alternative to --P/--dc/--dr).
        #[arg(long, requires = "hz")]
        hx: Option<PathBuf>,
        /// Input Z matrix.
        #[arg(long, requires = "hx")]
        hz: Option<PathBuf>,
        #[arg(long = "P")]
        block_size: Option<usize>,
        #[arg(long = "dc")]
        col_weight: Option<usize>,
        #[arg(long = "dr")]
        row_weight: Option<usize>,
        #[arg(long)]
        iterations: usize,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        /// Solver node budget per repair.
        #[arg(long, default_value_t = 1_000_000)]
        max_nodes: u64,
        /// prove-optimal, first-feasible or best-within-budget.
        #[arg(long, default_value = "best-within-budget")]
        mode: SolveMode,
        /// Abort after this many consecutive rejected swaps.
        #[arg(long, default_value_t = 1000)]
        max_rejects: usize,
        #[arg(long)]
        out_hx: PathBuf,
        #[arg(long)]
        out_hz: PathBuf,
        /// Write a reproducibility manifest (TOML).
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Write per-iteration statistics (JSON).
        #[arg(long)]
        stats_json: Option<PathBuf>,
        #[arg(long, default_value = "alist")]
        format: MatrixFormat,
    },
    /// Check orthogonality and weight consistency of a pair.
    Verify {
        #[arg(long)]
        hx: PathBuf,
        #[arg(long)]
        hz: PathBuf,
    },
    /// Print ranks, 4-cycle counts, weight histograms and the CSS dimension.
    Stats {
        #[arg(long)]
        hx: PathBuf,
        #[arg(long)]
        hz: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Apply a given cross swap to H_X and export the repair ILP as an
    /// LP-format file.
    ExportIlp {
        #[arg(long)]
        hx: PathBuf,
        #[arg(long)]
        hz: PathBuf,
        /// Swap coordinates i1,j1,i2,j2 (0-based).
        #[arg(long, value_parser = parse_swap)]
        swap: CrossSwap,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_swap(s: &str) -> Result<CrossSwap, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err("expected i1,j1,i2,j2".into());
    }
    let nums: Vec<usize> = parts
        .iter()
        .map(|p| p.trim().parse::<usize>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    Ok(CrossSwap {
        i1: nums[0],
        j1: nums[1],
        i2: nums[2],
        j2: nums[3],
    })
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}

// 0 success, 1 verification failure, 2 usage error, 3 aborted run.
fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        Error::PairNotOrthogonal { .. } | Error::Internal(_) => ExitCode::from(1),
        Error::RunAborted { .. } => ExitCode::from(3),
        _ => ExitCode::from(2),
    }
}

fn read(path: &PathBuf) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })
}

fn write(path: &PathBuf, contents: &str) -> Result<(), Error> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Seed {
            block_size,
            col_weight,
            row_weight,
            out_hx,
            out_hz,
            format,
        } => {
            let pair = build_tiled_seed(&SeedParams::new(block_size, col_weight, row_weight))?;
            driver::save_pair(&pair, &out_hx, &out_hz, format)?;
            println!(
                "seed pair written: {} x {} (row weight {row_weight}, column weight {col_weight})",
                pair.hx().rows(),
                pair.n()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Randomize {
            hx,
            hz,
            block_size,
            col_weight,
            row_weight,
            iterations,
            rng_seed,
            max_nodes,
            mode,
            max_rejects,
            out_hx,
            out_hz,
            manifest,
            stats_json,
            format,
        } => {
            let source = match (hx, hz, block_size, col_weight, row_weight) {
                (Some(hx), Some(hz), None, None, None) => PairSource::Files { hx, hz },
                (None, None, Some(p), Some(dc), Some(dr)) => {
                    PairSource::Tiled(SeedParams::new(p, dc, dr))
                }
                _ => {
                    return Err(Error::Parse(
                        "give either --hx/--hz or all of --P/--dc/--dr".into(),
                    ))
                }
            };
            let cfg = RunConfig {
                source,
                iterations,
                rng_seed,
                budget: SolverBudget { max_nodes, mode },
                max_consecutive_rejects: max_rejects,
                outputs: OutputConfig {
                    hx_path: Some(out_hx),
                    hz_path: Some(out_hz),
                    manifest_path: manifest,
                    stats_path: stats_json,
                    format: Some(format),
                },
            };
            let (_, stats) = execute_run(&cfg)?;
            println!(
                "completed {} iterations ({} no-violation swaps, {} rejected)",
                stats.iterations_completed, stats.swaps_no_violation, stats.swaps_rejected_infeasible
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { hx, hz } => {
            let hx_m = parse_matrix_auto(&read(&hx)?)?;
            let hz_m = parse_matrix_auto(&read(&hz)?)?;
            if hx_m.cols() != hz_m.cols() {
                return Err(Error::ColumnCountMismatch {
                    left: hx_m.cols(),
                    right: hz_m.cols(),
                });
            }
            let pair = OrthoPair::unchecked(hx_m, hz_m);
            let report = verify_pair(&pair);
            if report.orthogonal {
                println!("orthogonality: pass");
            } else {
                let (k, i) = report.first_violation.unwrap();
                println!("orthogonality: FAIL (X row {k} has odd overlap with Z row {i})");
            }
            println!(
                "weights: {}",
                if report.histograms_match { "pass" } else { "FAIL" }
            );
            if report.passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
        Command::Stats { hx, hz, json } => {
            let hx_m = parse_matrix_auto(&read(&hx)?)?;
            let hz_m = parse_matrix_auto(&read(&hz)?)?;
            let pair = OrthoPair::unchecked(hx_m, hz_m);
            let d = diagnostics(&pair);
            if json {
                println!("{}", serde_json::to_string_pretty(&d).expect("serialize"));
            } else {
                println!("n (columns):        {}", d.n);
                println!("rank H_X:           {}", d.rank_x);
                println!("rank H_Z:           {}", d.rank_z);
                println!("CSS dimension k:    {}", d.css_dimension);
                println!("4-cycles in H_X:    {}", d.four_cycles_x);
                println!("4-cycles in H_Z:    {}", d.four_cycles_z);
                println!("row weights H_X:    {:?}", d.row_weight_hist_x);
                println!("col weights H_X:    {:?}", d.col_weight_hist_x);
                println!("row weights H_Z:    {:?}", d.row_weight_hist_z);
                println!("col weights H_Z:    {:?}", d.col_weight_hist_z);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ExportIlp { hx, hz, swap, out } => {
            let hx_m = parse_matrix_auto(&read(&hx)?)?;
            let hz_m = parse_matrix_auto(&read(&hz)?)?;
            swap.validate(&hx_m)?;
            let hx_prime = apply_cross_swap(&hx_m, &swap)?;
            let patch = compute_violation(&hx_prime, &hz_m)?;
            let sys = assemble_repair_system(&patch, &hx_prime, &hz_m)?;
            write(&out, &export_ilp(&sys))?;
            println!(
                "wrote {} variables, {} parity rows, {} balance equalities to {}",
                sys.num_vars(),
                sys.num_parity_rows(),
                sys.balance_rows.len() + sys.balance_cols.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}
