//! The switch-repair loop, verification, diagnostics and run serialization.
//!
//! One run alternates between the two matrices: even iterations perturb H_X
//! and repair H_Z, odd iterations the reverse. A swap whose violation set is
//! empty is accepted as-is (it is a legitimate degree-preserving move); a
//! swap whose repair is infeasible is reverted and does not consume an
//! iteration, so "iterations" counts successful modifications. After every
//! accepted iteration the full product and the per-line weights are
//! re-checked against the seed; any failure there is an internal bug, not a
//! data error.
//!
//! Runs are reproducible: the manifest records the configuration, generator
//! version and seed, from which an identical run can be replayed bit for bit.

pub mod formats;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::gf2::{rank, BitMatrix};
use crate::localize::{assemble_repair_system, compute_violation_after_swap};
use crate::perturb::{apply_cross_swap, sample_cross_swap, RngState};
use crate::repair::{apply_delta, solve_with_report, SolveOutcome, SolverBudget};
use crate::seed::{build_tiled_seed, OrthoPair, SeedParams};
use formats::MatrixFormat;

/// Which matrix a record's swap landed on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    X,
    Z,
}

/// Where the initial pair comes from.
#[derive(Clone, Debug)]
pub enum PairSource {
    Tiled(SeedParams),
    Files { hx: PathBuf, hz: PathBuf },
    InMemory(OrthoPair),
}

/// Output destinations for a run; all optional.
#[derive(Clone, Debug, Default)]
pub struct OutputConfig {
    pub hx_path: Option<PathBuf>,
    pub hz_path: Option<PathBuf>,
    pub manifest_path: Option<PathBuf>,
    pub stats_path: Option<PathBuf>,
    pub format: Option<MatrixFormat>,
}

/// Full configuration of one randomization run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub source: PairSource,
    pub iterations: usize,
    pub rng_seed: u64,
    pub budget: SolverBudget,
    /// Abort once this many swaps in a row are rejected.
    pub max_consecutive_rejects: usize,
    pub outputs: OutputConfig,
}

impl RunConfig {
    pub fn tiled(params: SeedParams, iterations: usize, rng_seed: u64) -> Self {
        Self {
            source: PairSource::Tiled(params),
            iterations,
            rng_seed,
            budget: SolverBudget::default(),
            max_consecutive_rejects: 1000,
            outputs: OutputConfig::default(),
        }
    }
}

/// Per-iteration instrumentation. Sizes are zero for accepted swaps that
/// caused no violation. `repair_time_us` covers localization through patch
/// application, the part whose cost is degree-bounded.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub perturbed: Role,
    pub affected_rows: usize,
    pub affected_cols: usize,
    pub touched_rows: usize,
    pub num_vars: usize,
    pub num_parity_rows: usize,
    pub parity_rank: usize,
    pub flip_count: usize,
    pub solve_nodes: u64,
    pub repair_time_us: u64,
}

/// Counters and records accumulated over a run.
#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct RunStats {
    pub iterations_completed: usize,
    pub swaps_rejected_infeasible: usize,
    pub swaps_no_violation: usize,
    pub records: Vec<IterationRecord>,
    pub diagnostics: Option<PairDiagnostics>,
}

impl RunStats {
    pub fn max_num_vars(&self) -> usize {
        self.records.iter().map(|r| r.num_vars).max().unwrap_or(0)
    }

    pub fn max_num_parity_rows(&self) -> usize {
        self.records
            .iter()
            .map(|r| r.num_parity_rows)
            .max()
            .unwrap_or(0)
    }
}

/// Structural diagnostics of a pair.
#[derive(Clone, Debug, serde::Serialize)]
pub struct PairDiagnostics {
    pub n: usize,
    pub rank_x: usize,
    pub rank_z: usize,
    /// Logical dimension n - rank(H_X) - rank(H_Z).
    pub css_dimension: usize,
    pub four_cycles_x: u64,
    pub four_cycles_z: u64,
    #[serde(serialize_with = "string_keys")]
    pub row_weight_hist_x: BTreeMap<usize, usize>,
    #[serde(serialize_with = "string_keys")]
    pub col_weight_hist_x: BTreeMap<usize, usize>,
    #[serde(serialize_with = "string_keys")]
    pub row_weight_hist_z: BTreeMap<usize, usize>,
    #[serde(serialize_with = "string_keys")]
    pub col_weight_hist_z: BTreeMap<usize, usize>,
}

// TOML map keys must be strings.
fn string_keys<S: serde::Serializer>(
    hist: &BTreeMap<usize, usize>,
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    serializer.collect_map(hist.iter().map(|(k, v)| (k.to_string(), v)))
}

/// Result of re-checking a pair's invariants.
#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub orthogonal: bool,
    /// First (H_X row, H_Z row) with odd overlap, when not orthogonal.
    pub first_violation: Option<(usize, usize)>,
    /// Whether current weight multisets equal the recorded ones.
    pub histograms_match: bool,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.orthogonal && self.histograms_match
    }
}

/// Recomputes the full product and weight multisets of `pair` and compares
/// them against its recorded state.
pub fn verify_pair(pair: &OrthoPair) -> VerifyReport {
    let hx = pair.hx();
    let hz = pair.hz();
    let mut first_violation = None;
    'scan: for k in 0..hx.rows() {
        for i in 0..hz.rows() {
            if hx.row_dot_parity(k, hz, i) {
                first_violation = Some((k, i));
                break 'scan;
            }
        }
    }
    let (mut rx, mut cx) = hx.row_col_weights();
    let (mut rz, mut cz) = hz.row_col_weights();
    rx.sort_unstable();
    cx.sort_unstable();
    rz.sort_unstable();
    cz.sort_unstable();
    let (hrx, hcx, hrz, hcz) = pair.histograms();
    VerifyReport {
        orthogonal: first_violation.is_none(),
        first_violation,
        histograms_match: rx == hrx && cx == hcx && rz == hrz && cz == hcz,
    }
}

fn four_cycles(m: &BitMatrix) -> u64 {
    let mut count = 0u64;
    for a in 0..m.rows() {
        for b in (a + 1)..m.rows() {
            let shared = m
                .row_words(a)
                .iter()
                .zip(m.row_words(b))
                .map(|(x, y)| (x & y).count_ones() as u64)
                .sum::<u64>();
            count += shared * shared.saturating_sub(1) / 2;
        }
    }
    count
}

fn weight_hist(weights: &[usize]) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for &w in weights {
        *hist.entry(w).or_insert(0) += 1;
    }
    hist
}

/// GF(2) ranks, 4-cycle counts, weight histograms and the CSS dimension.
pub fn diagnostics(pair: &OrthoPair) -> PairDiagnostics {
    let hx = pair.hx();
    let hz = pair.hz();
    let rank_x = rank(hx);
    let rank_z = rank(hz);
    let (rwx, cwx) = hx.row_col_weights();
    let (rwz, cwz) = hz.row_col_weights();
    PairDiagnostics {
        n: pair.n(),
        rank_x,
        rank_z,
        css_dimension: pair.n() - rank_x - rank_z,
        four_cycles_x: four_cycles(hx),
        four_cycles_z: four_cycles(hz),
        row_weight_hist_x: weight_hist(&rwx),
        col_weight_hist_x: weight_hist(&cwx),
        row_weight_hist_z: weight_hist(&rwz),
        col_weight_hist_z: weight_hist(&cwz),
    }
}

fn load_initial(source: &PairSource) -> Result<OrthoPair> {
    match source {
        PairSource::Tiled(params) => build_tiled_seed(params),
        PairSource::Files { hx, hz } => load_pair_files(hx, hz),
        PairSource::InMemory(pair) => Ok(pair.clone()),
    }
}

/// Reads and verifies a pair from two matrix files (alist or dense).
pub fn load_pair_files(hx_path: &Path, hz_path: &Path) -> Result<OrthoPair> {
    let hx_text = read_file(hx_path)?;
    let hz_text = read_file(hz_path)?;
    crate::seed::load_pair(&hx_text, &hz_text)
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes both matrices of `pair`.
pub fn save_pair(
    pair: &OrthoPair,
    hx_path: &Path,
    hz_path: &Path,
    format: MatrixFormat,
) -> Result<()> {
    write_file(hx_path, &formats::write_matrix(pair.hx(), format))?;
    write_file(hz_path, &formats::write_matrix(pair.hz(), format))
}

/// Checks full orthogonality and exact per-line weight equality after an
/// accepted iteration. Failures are internal errors: the restricted repair
/// system guarantees both by construction.
fn verify_step(
    hx: &BitMatrix,
    hz: &BitMatrix,
    seed_weights: &SeedWeights,
) -> Result<()> {
    for k in 0..hx.rows() {
        for i in 0..hz.rows() {
            if hx.row_dot_parity(k, hz, i) {
                return Err(Error::Internal(format!(
                    "orthogonality broken after repair at rows ({k},{i})"
                )));
            }
        }
    }
    let (rwx, cwx) = hx.row_col_weights();
    let (rwz, cwz) = hz.row_col_weights();
    if rwx != seed_weights.rows_x
        || cwx != seed_weights.cols_x
        || rwz != seed_weights.rows_z
        || cwz != seed_weights.cols_z
    {
        return Err(Error::Internal(
            "per-line weights drifted from the seed after repair".into(),
        ));
    }
    Ok(())
}

struct SeedWeights {
    rows_x: Vec<usize>,
    cols_x: Vec<usize>,
    rows_z: Vec<usize>,
    cols_z: Vec<usize>,
}

/// Executes `cfg.iterations` successful switch-repair cycles and returns the
/// final pair with its run statistics.
pub fn randomize_run(cfg: &RunConfig) -> Result<(OrthoPair, RunStats)> {
    let initial = load_initial(&cfg.source)?;
    let dc_max = initial.max_col_weight();
    let dr_max = initial.max_row_weight();
    let (rows_x, cols_x) = initial.hx().row_col_weights();
    let (rows_z, cols_z) = initial.hz().row_col_weights();
    let seed_weights = SeedWeights {
        rows_x,
        cols_x,
        rows_z,
        cols_z,
    };
    let (mut hx, mut hz) = initial.into_parts();

    let mut rng = RngState::from_seed(cfg.rng_seed);
    let mut stats = RunStats::default();
    let mut consecutive_rejects = 0usize;
    let mut iteration = 0usize;

    while iteration < cfg.iterations {
        let perturb_x = iteration.is_multiple_of(2);
        let role = if perturb_x { Role::X } else { Role::Z };
        let (active, partner) = if perturb_x { (&hx, &hz) } else { (&hz, &hx) };

        let swap = match sample_cross_swap(active, &mut rng) {
            Ok(sw) => sw,
            Err(Error::NoValidSwap { .. }) => {
                stats.swaps_rejected_infeasible += 1;
                consecutive_rejects += 1;
                if consecutive_rejects > cfg.max_consecutive_rejects {
                    stats.iterations_completed = iteration;
                    return Err(Error::RunAborted {
                        consecutive: consecutive_rejects,
                        completed: iteration,
                    });
                }
                continue;
            }
            Err(other) => return Err(other),
        };

        let clock = Instant::now();
        let active_prime = apply_cross_swap(active, &swap)?;
        let patch = compute_violation_after_swap(&active_prime, partner, &swap)?;

        if patch.is_empty() {
            let elapsed = clock.elapsed().as_micros() as u64;
            stats.swaps_no_violation += 1;
            stats.records.push(IterationRecord {
                iteration,
                perturbed: role,
                affected_rows: 0,
                affected_cols: 0,
                touched_rows: 0,
                num_vars: 0,
                num_parity_rows: 0,
                parity_rank: 0,
                flip_count: 0,
                solve_nodes: 0,
                repair_time_us: elapsed,
            });
            if perturb_x {
                hx = active_prime;
            } else {
                hz = active_prime;
            }
            iteration += 1;
            consecutive_rejects = 0;
            continue;
        }

        patch.check_locality_bounds(dc_max, dr_max)?;
        let sys = assemble_repair_system(&patch, &active_prime, partner)?;
        let report = solve_with_report(&sys, partner, &cfg.budget);
        match report.outcome {
            SolveOutcome::Solution(dp) => {
                let partner_prime = apply_delta(partner, &dp)?;
                let elapsed = clock.elapsed().as_micros() as u64;
                let (new_hx, new_hz) = if perturb_x {
                    (active_prime, partner_prime)
                } else {
                    (partner_prime, active_prime)
                };
                verify_step(&new_hx, &new_hz, &seed_weights)?;
                stats.records.push(IterationRecord {
                    iteration,
                    perturbed: role,
                    affected_rows: patch.hz_rows.len(),
                    affected_cols: patch.cols.len(),
                    touched_rows: patch.hx_rows.len(),
                    num_vars: sys.num_vars(),
                    num_parity_rows: sys.num_parity_rows(),
                    parity_rank: report.parity_rank,
                    flip_count: dp.flip_count,
                    solve_nodes: report.nodes,
                    repair_time_us: elapsed,
                });
                hx = new_hx;
                hz = new_hz;
                iteration += 1;
                consecutive_rejects = 0;
            }
            SolveOutcome::Infeasible | SolveOutcome::BudgetExhausted { .. } => {
                // Revert (the perturbed copy is simply dropped) and resample.
                stats.swaps_rejected_infeasible += 1;
                consecutive_rejects += 1;
                if consecutive_rejects > cfg.max_consecutive_rejects {
                    stats.iterations_completed = iteration;
                    return Err(Error::RunAborted {
                        consecutive: consecutive_rejects,
                        completed: iteration,
                    });
                }
            }
        }
    }

    stats.iterations_completed = iteration;
    let pair = OrthoPair::new(hx, hz)?;
    stats.diagnostics = Some(diagnostics(&pair));
    Ok((pair, stats))
}

/// Runs and writes whatever outputs the configuration names.
pub fn execute_run(cfg: &RunConfig) -> Result<(OrthoPair, RunStats)> {
    let (pair, stats) = randomize_run(cfg)?;
    let format = cfg.outputs.format.unwrap_or(MatrixFormat::Alist);
    if let Some(path) = &cfg.outputs.hx_path {
        write_file(path, &formats::write_matrix(pair.hx(), format))?;
    }
    if let Some(path) = &cfg.outputs.hz_path {
        write_file(path, &formats::write_matrix(pair.hz(), format))?;
    }
    if let Some(path) = &cfg.outputs.manifest_path {
        write_file(path, &render_manifest(cfg, &stats))?;
    }
    if let Some(path) = &cfg.outputs.stats_path {
        write_file(path, &stats_json(cfg, &stats))?;
    }
    Ok((pair, stats))
}

#[derive(serde::Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum SourceDoc {
    Tiled {
        block_size: usize,
        col_weight: usize,
        row_weight: usize,
    },
    Files {
        hx: String,
        hz: String,
    },
    Inmemory {
        rows_x: usize,
        rows_z: usize,
        cols: usize,
    },
}

#[derive(serde::Serialize)]
struct ConfigDoc {
    iterations: usize,
    rng_seed: u64,
    max_nodes: u64,
    mode: String,
    max_consecutive_rejects: usize,
    source: SourceDoc,
}

impl ConfigDoc {
    fn new(cfg: &RunConfig) -> Self {
        let source = match &cfg.source {
            PairSource::Tiled(p) => SourceDoc::Tiled {
                block_size: p.block_size,
                col_weight: p.col_weight,
                row_weight: p.row_weight,
            },
            PairSource::Files { hx, hz } => SourceDoc::Files {
                hx: hx.display().to_string(),
                hz: hz.display().to_string(),
            },
            PairSource::InMemory(pair) => SourceDoc::Inmemory {
                rows_x: pair.hx().rows(),
                rows_z: pair.hz().rows(),
                cols: pair.n(),
            },
        };
        ConfigDoc {
            iterations: cfg.iterations,
            rng_seed: cfg.rng_seed,
            max_nodes: cfg.budget.max_nodes,
            mode: cfg.budget.mode.to_string(),
            max_consecutive_rejects: cfg.max_consecutive_rejects,
            source,
        }
    }
}

#[derive(serde::Serialize)]
struct GeneratorDoc {
    name: &'static str,
    version: &'static str,
    rng_algorithm: &'static str,
}

#[derive(serde::Serialize)]
struct SummaryDoc {
    iterations_completed: usize,
    swaps_rejected_infeasible: usize,
    swaps_no_violation: usize,
    max_num_vars: usize,
    max_num_parity_rows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<PairDiagnostics>,
}

#[derive(serde::Serialize)]
struct ManifestDoc {
    generator: GeneratorDoc,
    config: ConfigDoc,
    summary: SummaryDoc,
}

/// A structured-text record sufficient to replay the run bit for bit:
/// configuration, generator version, RNG algorithm and seed, and the
/// (timing-free) outcome summary.
pub fn render_manifest(cfg: &RunConfig, stats: &RunStats) -> String {
    let doc = ManifestDoc {
        generator: GeneratorDoc {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            rng_algorithm: "xoshiro256** seeded via splitmix64",
        },
        config: ConfigDoc::new(cfg),
        summary: SummaryDoc {
            iterations_completed: stats.iterations_completed,
            swaps_rejected_infeasible: stats.swaps_rejected_infeasible,
            swaps_no_violation: stats.swaps_no_violation,
            max_num_vars: stats.max_num_vars(),
            max_num_parity_rows: stats.max_num_parity_rows(),
            diagnostics: stats.diagnostics.clone(),
        },
    };
    toml::to_string(&doc).expect("manifest serializes")
}

#[derive(serde::Serialize)]
struct StatsDoc<'a> {
    config: ConfigDoc,
    counters: SummaryDoc,
    iterations: &'a [IterationRecord],
}

/// The run statistics as a JSON document. Per-iteration `repair_time_us`
/// fields are wall-clock measurements and vary between otherwise identical
/// runs; everything else is deterministic.
pub fn stats_json(cfg: &RunConfig, stats: &RunStats) -> String {
    let doc = StatsDoc {
        config: ConfigDoc::new(cfg),
        counters: SummaryDoc {
            iterations_completed: stats.iterations_completed,
            swaps_rejected_infeasible: stats.swaps_rejected_infeasible,
            swaps_no_violation: stats.swaps_no_violation,
            max_num_vars: stats.max_num_vars(),
            max_num_parity_rows: stats.max_num_parity_rows(),
            diagnostics: stats.diagnostics.clone(),
        },
        iterations: &stats.records,
    };
    let mut json = serde_json::to_string_pretty(&doc).expect("stats serialize");
    json.push('\n');
    json
}
