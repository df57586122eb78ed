//! Minimum-flip repair of a localized orthogonality violation.
//!
//! The repair problem asks for a binary patch on the affected block that
//! satisfies every orthogonality parity and flips equally many cells up and
//! down in each affected row and column, with as few flips as possible.
//!
//! The solver works in two phases. Phase one eliminates the parity system
//! (orthogonality rows plus each balance constraint reduced mod 2); an
//! inconsistent system is reported as infeasible. Phase two runs a
//! deterministic branch and bound over the solution coset: the reduction is
//! redone with pivots chosen from the highest column downward, so that when
//! variables are assigned in ascending order every pivot variable is forced
//! the moment it is reached and only free variables branch (value 0 before
//! 1). A node is pruned when a balance constraint can no longer reach zero
//! with its remaining unassigned cells, or when the flip count plus the
//! outstanding signed imbalance can no longer beat the incumbent.
//!
//! [`export_ilp`] writes the same problem as a standalone LP-format file with
//! slack-encoded parities, so any external MILP solver can reproduce the
//! repair out of process. The grammar is the plain CPLEX LP dialect:
//! `Minimize` / objective, `Subject To` / one row per constraint, `Bounds`
//! for the slack ranges, `Binary` and `General` declarations, `End`.

use crate::error::Result;
use crate::gf2::{gf2_eliminate, BitMatrix, BitVec, IndexSet};
use crate::localize::RepairSystem;

/// A solved repair patch over the affected block.
#[derive(Clone, Debug)]
pub struct DeltaPatch {
    pub hz_rows: IndexSet,
    pub cols: IndexSet,
    /// `|hz_rows| x |cols|` patch bits.
    pub delta: BitMatrix,
    /// Total ones in `delta`.
    pub flip_count: usize,
    /// True iff proven minimal within the search budget.
    pub optimal: bool,
}

/// How hard to search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SolveMode {
    /// Exhaust the coset (within budget) and prove minimality.
    ProveOptimal,
    /// Stop at the first feasible patch.
    FirstFeasible,
    /// Search within budget, returning the best incumbent found.
    BestWithinBudget,
}

impl std::fmt::Display for SolveMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveMode::ProveOptimal => "prove-optimal",
            SolveMode::FirstFeasible => "first-feasible",
            SolveMode::BestWithinBudget => "best-within-budget",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for SolveMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "prove-optimal" => Ok(SolveMode::ProveOptimal),
            "first-feasible" => Ok(SolveMode::FirstFeasible),
            "best-within-budget" => Ok(SolveMode::BestWithinBudget),
            other => Err(format!(
                "unknown mode {other:?} (expected prove-optimal, first-feasible or best-within-budget)"
            )),
        }
    }
}

/// Node budget and search mode. Budgets below one node are treated as one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SolverBudget {
    /// Maximum free-variable expansions before the search stops.
    pub max_nodes: u64,
    pub mode: SolveMode,
}

impl Default for SolverBudget {
    fn default() -> Self {
        Self {
            max_nodes: 1_000_000,
            mode: SolveMode::BestWithinBudget,
        }
    }
}

/// Result of a solve.
#[derive(Clone, Debug)]
pub enum SolveOutcome {
    Solution(DeltaPatch),
    /// The parity system is inconsistent, or no coset element satisfies the
    /// balance constraints anywhere in the exhausted search space.
    Infeasible,
    /// The node budget ran out; carries the best feasible patch seen, if any.
    BudgetExhausted { incumbent: Option<DeltaPatch> },
}

/// Solve instrumentation alongside the outcome.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub outcome: SolveOutcome,
    /// Free-variable expansions performed.
    pub nodes: u64,
    /// Rank of the full parity system (orthogonality plus balance parities).
    pub parity_rank: usize,
    /// Free dimension of the solution coset.
    pub coset_dimension: usize,
}

/// Finds a minimum-flip patch for `sys`. See [`solve_with_report`] for the
/// instrumented variant.
pub fn solve_min_flip(sys: &RepairSystem, hz: &BitMatrix, budget: &SolverBudget) -> SolveOutcome {
    solve_with_report(sys, hz, budget).outcome
}

/// Two-phase solve: parity elimination, then branch and bound on the coset.
pub fn solve_with_report(
    sys: &RepairSystem,
    hz: &BitMatrix,
    budget: &SolverBudget,
) -> SolveReport {
    debug_assert!(signs_match(sys, hz), "system signs disagree with H_Z");
    let (aug_a, aug_b) = sys.parity_matrix();
    let elim = gf2_eliminate(&aug_a, &aug_b);
    if !elim.consistent {
        return SolveReport {
            outcome: SolveOutcome::Infeasible,
            nodes: 0,
            parity_rank: elim.rank,
            coset_dimension: 0,
        };
    }

    let reduced = HighPivotReduction::new(&aug_a, &aug_b);
    debug_assert_eq!(reduced.rank(), elim.rank);

    let mut search = CosetSearch::new(sys, &reduced, budget);
    search.run();

    let nodes = search.nodes;
    let complete = !search.budget_hit && !search.stopped_early;
    let best = search.into_best(sys);
    let outcome = match (best, complete, budget.mode) {
        (Some(mut dp), true, _) => {
            dp.optimal = true;
            SolveOutcome::Solution(dp)
        }
        (Some(dp), false, SolveMode::FirstFeasible | SolveMode::BestWithinBudget) => {
            SolveOutcome::Solution(dp)
        }
        (incumbent, false, SolveMode::ProveOptimal) => {
            SolveOutcome::BudgetExhausted { incumbent }
        }
        (None, true, _) => SolveOutcome::Infeasible,
        (None, false, _) => SolveOutcome::BudgetExhausted { incumbent: None },
    };
    SolveReport {
        outcome,
        nodes,
        parity_rank: elim.rank,
        coset_dimension: sys.num_vars() - elim.rank,
    }
}

fn signs_match(sys: &RepairSystem, hz: &BitMatrix) -> bool {
    sys.hz_rows.iter().enumerate().all(|(ipos, i)| {
        sys.cols.iter().enumerate().all(|(jpos, j)| {
            let expected = if hz.get(i, j) { -1 } else { 1 };
            sys.row_signs[sys.var_of(ipos, jpos)] == expected
        })
    })
}

/// RREF with pivots chosen from the highest column downward, so each pivot
/// row involves only free columns below its pivot.
struct HighPivotReduction {
    /// Per column: index into `pivot_rhs`/`pivot_free` when the column is a
    /// pivot.
    pivot_of_col: Vec<Option<usize>>,
    pivot_rhs: Vec<bool>,
    /// Free columns appearing in each pivot's reduced row.
    pivot_free: Vec<Vec<usize>>,
    num_pivots: usize,
}

impl HighPivotReduction {
    fn new(a: &BitMatrix, b: &BitVec) -> Self {
        let rows = a.rows();
        let cols = a.cols();
        let mut work: Vec<Vec<u64>> = (0..rows).map(|i| a.row_words(i).to_vec()).collect();
        let mut rhs: Vec<bool> = (0..rows).map(|i| b.get(i)).collect();
        let bit = |row: &[u64], c: usize| (row[c / 64] >> (c % 64)) & 1 == 1;

        let mut pivot_cols = Vec::new();
        let mut rank = 0usize;
        for c in (0..cols).rev() {
            let Some(p) = (rank..rows).find(|&i| bit(&work[i], c)) else {
                continue;
            };
            work.swap(rank, p);
            rhs.swap(rank, p);
            for i in 0..rows {
                if i != rank && bit(&work[i], c) {
                    let (src, dst) = if i < rank {
                        let (lo, hi) = work.split_at_mut(rank);
                        (&hi[0], &mut lo[i])
                    } else {
                        let (lo, hi) = work.split_at_mut(i);
                        (&lo[rank], &mut hi[0])
                    };
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d ^= s;
                    }
                    rhs[i] ^= rhs[rank];
                }
            }
            pivot_cols.push(c);
            rank += 1;
            if rank == rows {
                break;
            }
        }

        let mut pivot_of_col = vec![None; cols];
        let mut pivot_rhs = vec![false; rank];
        let mut pivot_free = vec![Vec::new(); rank];
        for (t, &pc) in pivot_cols.iter().enumerate() {
            pivot_of_col[pc] = Some(t);
            pivot_rhs[t] = rhs[t];
        }
        for (t, &pc) in pivot_cols.iter().enumerate() {
            for (f, slot) in pivot_of_col.iter().enumerate() {
                if f != pc && bit(&work[t], f) {
                    debug_assert!(slot.is_none() && f < pc);
                    pivot_free[t].push(f);
                }
            }
        }
        Self {
            pivot_of_col,
            pivot_rhs,
            pivot_free,
            num_pivots: rank,
        }
    }

    fn rank(&self) -> usize {
        self.num_pivots
    }
}

/// Depth-first search state over the flattened patch variables.
struct CosetSearch<'a> {
    num_vars: usize,
    n_cols: usize,
    signs: &'a [i8],
    pivot_of_col: &'a [Option<usize>],
    pivot_rhs: &'a [bool],
    /// Per free column: pivots whose rows contain it.
    affects: Vec<Vec<usize>>,
    /// Accumulated parity of assigned free variables per pivot.
    acc: Vec<bool>,
    row_sum: Vec<i32>,
    col_sum: Vec<i32>,
    row_pos: Vec<i32>,
    row_neg: Vec<i32>,
    col_pos: Vec<i32>,
    col_neg: Vec<i32>,
    /// Sum of |row_sum| resp. |col_sum|; each future flip lowers one row and
    /// one column imbalance by at most one, so the larger total is a lower
    /// bound on the flips still required.
    row_abs: i32,
    col_abs: i32,
    assignment: Vec<bool>,
    best: Option<(Vec<bool>, u32)>,
    nodes: u64,
    max_nodes: u64,
    budget_hit: bool,
    stopped_early: bool,
    first_feasible: bool,
}

impl<'a> CosetSearch<'a> {
    fn new(sys: &'a RepairSystem, reduced: &'a HighPivotReduction, budget: &SolverBudget) -> Self {
        let num_vars = sys.num_vars();
        let n_rows = sys.hz_rows.len();
        let n_cols = sys.cols.len();
        let mut affects = vec![Vec::new(); num_vars];
        for (t, frees) in reduced.pivot_free.iter().enumerate() {
            for &f in frees {
                affects[f].push(t);
            }
        }
        let mut row_pos = vec![0; n_rows];
        let mut row_neg = vec![0; n_rows];
        let mut col_pos = vec![0; n_cols];
        let mut col_neg = vec![0; n_cols];
        for var in 0..num_vars {
            let (i, j) = (var / n_cols, var % n_cols);
            if sys.row_signs[var] > 0 {
                row_pos[i] += 1;
                col_pos[j] += 1;
            } else {
                row_neg[i] += 1;
                col_neg[j] += 1;
            }
        }
        Self {
            num_vars,
            n_cols,
            signs: &sys.row_signs,
            pivot_of_col: &reduced.pivot_of_col,
            pivot_rhs: &reduced.pivot_rhs,
            affects,
            acc: vec![false; reduced.num_pivots],
            row_sum: vec![0; n_rows],
            col_sum: vec![0; n_cols],
            row_pos,
            row_neg,
            col_pos,
            col_neg,
            row_abs: 0,
            col_abs: 0,
            assignment: vec![false; num_vars],
            best: None,
            nodes: 0,
            max_nodes: budget.max_nodes.max(1),
            budget_hit: false,
            stopped_early: false,
            first_feasible: budget.mode == SolveMode::FirstFeasible,
        }
    }

    fn run(&mut self) {
        self.dfs(0, 0);
    }

    /// Returns false when a balance constraint can no longer reach zero.
    fn assign(&mut self, var: usize, value: bool) -> bool {
        let (i, j) = (var / self.n_cols, var % self.n_cols);
        let sign = i32::from(self.signs[var]);
        if sign > 0 {
            self.row_pos[i] -= 1;
            self.col_pos[j] -= 1;
        } else {
            self.row_neg[i] -= 1;
            self.col_neg[j] -= 1;
        }
        if value {
            self.row_abs -= self.row_sum[i].abs();
            self.col_abs -= self.col_sum[j].abs();
            self.row_sum[i] += sign;
            self.col_sum[j] += sign;
            self.row_abs += self.row_sum[i].abs();
            self.col_abs += self.col_sum[j].abs();
            for &p in &self.affects[var] {
                self.acc[p] = !self.acc[p];
            }
        }
        self.assignment[var] = value;
        // The remaining cells of line L can still shift its sum by
        // [-neg, +pos]; zero must stay reachable.
        self.row_sum[i] <= self.row_neg[i]
            && self.row_sum[i] >= -self.row_pos[i]
            && self.col_sum[j] <= self.col_neg[j]
            && self.col_sum[j] >= -self.col_pos[j]
    }

    fn unassign(&mut self, var: usize, value: bool) {
        let (i, j) = (var / self.n_cols, var % self.n_cols);
        let sign = i32::from(self.signs[var]);
        if value {
            self.row_abs -= self.row_sum[i].abs();
            self.col_abs -= self.col_sum[j].abs();
            self.row_sum[i] -= sign;
            self.col_sum[j] -= sign;
            self.row_abs += self.row_sum[i].abs();
            self.col_abs += self.col_sum[j].abs();
            for &p in &self.affects[var] {
                self.acc[p] = !self.acc[p];
            }
        }
        if sign > 0 {
            self.row_pos[i] += 1;
            self.col_pos[j] += 1;
        } else {
            self.row_neg[i] += 1;
            self.col_neg[j] += 1;
        }
    }

    fn dfs(&mut self, var: usize, ones: u32) {
        if let Some((_, best)) = &self.best {
            let outstanding = self.row_abs.max(self.col_abs) as u32;
            if ones + outstanding >= *best {
                return;
            }
        }
        if var == self.num_vars {
            debug_assert!(self.row_sum.iter().all(|&s| s == 0));
            debug_assert!(self.col_sum.iter().all(|&s| s == 0));
            self.best = Some((self.assignment.clone(), ones));
            if self.first_feasible {
                self.stopped_early = true;
            }
            return;
        }
        match self.pivot_of_col[var] {
            Some(p) => {
                let value = self.pivot_rhs[p] ^ self.acc[p];
                if self.assign(var, value) {
                    self.dfs(var + 1, ones + u32::from(value));
                }
                self.unassign(var, value);
            }
            None => {
                self.nodes += 1;
                if self.nodes > self.max_nodes {
                    self.budget_hit = true;
                    return;
                }
                for value in [false, true] {
                    if self.assign(var, value) {
                        self.dfs(var + 1, ones + u32::from(value));
                    }
                    self.unassign(var, value);
                    if self.budget_hit || self.stopped_early {
                        return;
                    }
                }
            }
        }
    }

    fn into_best(self, sys: &RepairSystem) -> Option<DeltaPatch> {
        let (bits, ones) = self.best?;
        let n_rows = sys.hz_rows.len();
        let n_cols = sys.cols.len();
        let delta = BitMatrix::from_fn(n_rows, n_cols, |i, j| bits[i * n_cols + j]);
        Some(DeltaPatch {
            hz_rows: sys.hz_rows.clone(),
            cols: sys.cols.clone(),
            delta,
            flip_count: ones as usize,
            optimal: false,
        })
    }
}

/// XORs the patch into `hz` over its affected block.
pub fn apply_delta(hz: &BitMatrix, dp: &DeltaPatch) -> Result<BitMatrix> {
    hz.xor_patch(&dp.hz_rows, &dp.cols, &dp.delta)
}

/// Writes the repair problem as a standalone LP-format text: binary cell
/// variables, one integer slack per parity row encoding the mod-2 equality
/// `row . x - 2 s = b` with `s <= floor(support / 2)`, signed balance
/// equalities, and a min-flip objective.
pub fn export_ilp(sys: &RepairSystem) -> String {
    let var_name = |var: usize| {
        let (ipos, jpos) = sys.var_pair(var);
        format!("x_{}_{}", sys.hz_rows.get(ipos), sys.cols.get(jpos))
    };

    let mut out = String::new();
    out.push_str("\\ min-flip repair system\n");
    out.push_str(&format!(
        "\\ {} binary cells, {} parity rows, {} row + {} column balance equalities\n",
        sys.num_vars(),
        sys.num_parity_rows(),
        sys.balance_rows.len(),
        sys.balance_cols.len()
    ));
    out.push_str("Minimize\n");
    wrap_line(
        &mut out,
        " obj:".to_string(),
        (0..sys.num_vars()).map(|v| {
            if v == 0 {
                var_name(v)
            } else {
                format!("+ {}", var_name(v))
            }
        }),
    );

    out.push_str("Subject To\n");
    for r in 0..sys.num_parity_rows() {
        let support: Vec<usize> = (0..sys.num_vars())
            .filter(|&v| sys.a_big.get(r, v))
            .collect();
        let rhs = u8::from(sys.b_big.get(r));
        let terms = support
            .iter()
            .enumerate()
            .map(|(pos, &v)| {
                if pos == 0 {
                    var_name(v)
                } else {
                    format!("+ {}", var_name(v))
                }
            })
            .chain(std::iter::once(format!("- 2 s{r}")))
            .chain(std::iter::once(format!("= {rhs}")));
        wrap_line(&mut out, format!(" p{r}:"), terms);
    }
    let balance = sys
        .balance_rows
        .iter()
        .enumerate()
        .map(|(pos, c)| (format!("rb_{}", sys.hz_rows.get(pos)), c))
        .chain(
            sys.balance_cols
                .iter()
                .enumerate()
                .map(|(pos, c)| (format!("cb_{}", sys.cols.get(pos)), c)),
        );
    for (name, con) in balance {
        let terms = con
            .terms
            .iter()
            .enumerate()
            .map(|(pos, &(v, sign))| match (pos, sign >= 0) {
                (0, true) => var_name(v),
                (0, false) => format!("- {}", var_name(v)),
                (_, true) => format!("+ {}", var_name(v)),
                (_, false) => format!("- {}", var_name(v)),
            })
            .chain(std::iter::once("= 0".to_string()));
        wrap_line(&mut out, format!(" {name}:"), terms);
    }

    out.push_str("Bounds\n");
    for r in 0..sys.num_parity_rows() {
        let support = (0..sys.num_vars())
            .filter(|&v| sys.a_big.get(r, v))
            .count();
        out.push_str(&format!(" 0 <= s{r} <= {}\n", support / 2));
    }

    out.push_str("Binary\n");
    wrap_line(
        &mut out,
        " ".to_string(),
        (0..sys.num_vars()).map(var_name),
    );
    out.push_str("General\n");
    wrap_line(
        &mut out,
        " ".to_string(),
        (0..sys.num_parity_rows()).map(|r| format!("s{r}")),
    );
    out.push_str("End\n");
    out
}

fn wrap_line(out: &mut String, head: String, parts: impl Iterator<Item = String>) {
    let mut line = head;
    for p in parts {
        if line.len() + p.len() + 1 > 76 && !line.trim().is_empty() {
            out.push_str(line.trim_end());
            out.push('\n');
            line = format!("   {p}");
        } else {
            line.push(' ');
            line.push_str(&p);
        }
    }
    out.push_str(line.trim_end());
    out.push('\n');
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::{mat_vec, BitMatrix, BitVec, IndexSet};
    use crate::localize::{assemble_repair_system, compute_violation, ViolationPatch};
    use crate::perturb::{apply_cross_swap, CrossSwap, RngState};

    fn tiled(p: usize, dc: usize, dr: usize) -> BitMatrix {
        BitMatrix::from_fn(dc * p, dr * p, |i, j| i % p == j % p)
    }

    fn golden_system() -> (RepairSystem, BitMatrix, BitMatrix) {
        let h = tiled(4, 3, 8);
        let sw = CrossSwap { i1: 10, j1: 6, i2: 7, j2: 23 };
        let hxp = apply_cross_swap(&h, &sw).unwrap();
        let patch = compute_violation(&hxp, &h).unwrap();
        let sys = assemble_repair_system(&patch, &hxp, &h).unwrap();
        (sys, hxp, h)
    }

    /// Synthetic system over a full grid with the given local matrices.
    fn synthetic_system(
        hz_local: &BitMatrix,
        hx_local: &BitMatrix,
        residual: &BitMatrix,
    ) -> RepairSystem {
        let patch = ViolationPatch {
            hz_rows: IndexSet::full(hz_local.rows()),
            cols: IndexSet::full(hz_local.cols()),
            hx_rows: IndexSet::full(hx_local.rows()),
            residual: residual.clone(),
        };
        assemble_repair_system(&patch, hx_local, hz_local).unwrap()
    }

    /// Brute force over every assignment: minimum weight satisfying parity
    /// and balance, or None when infeasible.
    fn exhaustive_min_flips(sys: &RepairSystem) -> Option<usize> {
        let v = sys.num_vars();
        assert!(v <= 20, "oracle is exponential");
        let mut best: Option<usize> = None;
        for mask in 0u32..(1 << v) {
            let x = BitVec::from_bits((0..v).map(|i| (mask >> i) & 1 == 1));
            if mat_vec(&sys.a_big, &x) != sys.b_big {
                continue;
            }
            let balanced = sys
                .balance_rows
                .iter()
                .chain(&sys.balance_cols)
                .all(|con| {
                    con.terms
                        .iter()
                        .map(|&(var, s)| if x.get(var) { i32::from(s) } else { 0 })
                        .sum::<i32>()
                        == 0
                });
            if !balanced {
                continue;
            }
            let w = x.count_ones();
            if best.is_none_or(|b| w < b) {
                best = Some(w);
            }
        }
        best
    }

    #[test]
    fn golden_instance_repairs_cleanly() {
        let (sys, hxp, hz) = golden_system();
        let budget = SolverBudget::default();
        let report = solve_with_report(&sys, &hz, &budget);
        assert_eq!(report.parity_rank, 31);
        assert_eq!(report.coset_dimension, 65);
        let SolveOutcome::Solution(dp) = report.outcome else {
            panic!("expected a solution");
        };
        // Lower bound: each affected row needs two up and two down flips.
        assert_eq!(dp.flip_count, 24);
        let hzp = apply_delta(&hz, &dp).unwrap();
        assert!(hxp.mul_transpose(&hzp).unwrap().is_zero());
        assert_eq!(hzp.row_col_weights(), hz.row_col_weights());
    }

    #[test]
    fn accepted_patch_flips_evenly_per_line() {
        let (sys, _, hz) = golden_system();
        let outcome = solve_min_flip(&sys, &hz, &SolverBudget::default());
        let SolveOutcome::Solution(dp) = outcome else {
            panic!("expected a solution");
        };
        for i in 0..dp.delta.rows() {
            assert_eq!(dp.delta.row_weight(i) % 2, 0);
        }
        for j in 0..dp.delta.cols() {
            assert_eq!(dp.delta.col_weight(j) % 2, 0);
        }
    }

    #[test]
    fn zero_rhs_gives_the_empty_patch() {
        let mut rng = RngState::from_seed(31);
        let hz_local = BitMatrix::from_fn(2, 4, |_, _| rng.next_u64() & 1 == 1);
        let hx_local = BitMatrix::from_fn(2, 4, |_, _| rng.next_u64() & 1 == 1);
        let residual = BitMatrix::zeros(2, 2);
        let sys = synthetic_system(&hz_local, &hx_local, &residual);
        let outcome = solve_min_flip(&sys, &hz_local, &SolverBudget::default());
        let SolveOutcome::Solution(dp) = outcome else {
            panic!("expected a solution");
        };
        assert_eq!(dp.flip_count, 0);
        assert!(dp.optimal);
    }

    #[test]
    fn small_instances_match_the_exhaustive_oracle() {
        let mut rng = RngState::from_seed(32);
        let budget = SolverBudget {
            max_nodes: 1_000_000,
            mode: SolveMode::ProveOptimal,
        };
        let mut nontrivial = 0;
        while nontrivial < 60 {
            let n_i = 2 + (rng.next_u64() % 2) as usize;
            let n_j = 3 + (rng.next_u64() % 2) as usize;
            let n_k = 1 + (rng.next_u64() % 3) as usize;
            let hz_local = BitMatrix::from_fn(n_i, n_j, |_, _| rng.next_u64().is_multiple_of(2));
            let hx_local = BitMatrix::from_fn(n_k, n_j, |_, _| rng.next_u64().is_multiple_of(2));
            let residual = BitMatrix::from_fn(n_k, n_i, |_, _| rng.next_u64().is_multiple_of(4));
            let sys = synthetic_system(&hz_local, &hx_local, &residual);
            let oracle = exhaustive_min_flips(&sys);
            match solve_min_flip(&sys, &hz_local, &budget) {
                SolveOutcome::Solution(dp) => {
                    assert_eq!(Some(dp.flip_count), oracle);
                    assert!(dp.optimal);
                    nontrivial += 1;
                }
                SolveOutcome::Infeasible => {
                    assert_eq!(oracle, None);
                }
                SolveOutcome::BudgetExhausted { .. } => panic!("budget too small"),
            }
        }
    }

    #[test]
    fn inconsistent_parity_is_infeasible() {
        // Zero coefficient row with rhs 1.
        let hz_local = BitMatrix::zeros(1, 2);
        let hx_local = BitMatrix::zeros(1, 2);
        let mut residual = BitMatrix::zeros(1, 1);
        residual.set(0, 0, true);
        let sys = synthetic_system(&hz_local, &hx_local, &residual);
        match solve_min_flip(&sys, &hz_local, &SolverBudget::default()) {
            SolveOutcome::Infeasible => {}
            other => panic!("expected Infeasible, got {other:?}"),
        }
    }

    #[test]
    fn balance_infeasible_coset_is_infeasible() {
        // Single row, two columns, H_Z all-ones locally: every flip is a
        // downward flip, so any nonzero patch breaks balance, but parity
        // demands x0 + x1 = 1.
        let hz_local = BitMatrix::from_fn(1, 2, |_, _| true);
        let hx_local = BitMatrix::from_fn(1, 2, |_, _| true);
        let mut residual = BitMatrix::zeros(1, 1);
        residual.set(0, 0, true);
        let sys = synthetic_system(&hz_local, &hx_local, &residual);
        match solve_min_flip(&sys, &hz_local, &SolverBudget::default()) {
            SolveOutcome::Infeasible => {}
            other => panic!("expected Infeasible, got {other:?}"),
        }
    }

    #[test]
    fn exhausted_budget_reports_itself() {
        let (sys, _, hz) = golden_system();
        let budget = SolverBudget {
            max_nodes: 1,
            mode: SolveMode::ProveOptimal,
        };
        match solve_min_flip(&sys, &hz, &budget) {
            SolveOutcome::BudgetExhausted { .. } => {}
            other => panic!("expected BudgetExhausted, got {other:?}"),
        }
    }

    #[test]
    fn first_feasible_stops_early() {
        let (sys, hxp, hz) = golden_system();
        let budget = SolverBudget {
            max_nodes: 1_000_000,
            mode: SolveMode::FirstFeasible,
        };
        let report = solve_with_report(&sys, &hz, &budget);
        let SolveOutcome::Solution(dp) = report.outcome else {
            panic!("expected a solution");
        };
        assert!(!dp.optimal);
        assert!(report.nodes < 1000, "first leaf should arrive fast");
        let hzp = apply_delta(&hz, &dp).unwrap();
        assert!(hxp.mul_transpose(&hzp).unwrap().is_zero());
    }

    #[test]
    fn outcomes_are_deterministic() {
        let (sys, _, hz) = golden_system();
        let budget = SolverBudget::default();
        let a = solve_with_report(&sys, &hz, &budget);
        let b = solve_with_report(&sys, &hz, &budget);
        assert_eq!(a.nodes, b.nodes);
        let (SolveOutcome::Solution(da), SolveOutcome::Solution(db)) = (a.outcome, b.outcome)
        else {
            panic!("expected solutions");
        };
        assert_eq!(da.delta, db.delta);
        assert_eq!(da.flip_count, db.flip_count);
    }

    #[test]
    fn apply_delta_is_an_involution() {
        let (sys, _, hz) = golden_system();
        let SolveOutcome::Solution(dp) = solve_min_flip(&sys, &hz, &SolverBudget::default())
        else {
            panic!("expected a solution");
        };
        let hzp = apply_delta(&hz, &dp).unwrap();
        assert_ne!(hzp, hz);
        let back = apply_delta(&hzp, &dp).unwrap();
        assert_eq!(back, hz);
    }

    #[test]
    fn apply_zero_delta_is_identity() {
        let hz = tiled(2, 2, 4);
        let dp = DeltaPatch {
            hz_rows: IndexSet::from_sorted(vec![0, 1]).unwrap(),
            cols: IndexSet::from_sorted(vec![0, 1]).unwrap(),
            delta: BitMatrix::zeros(2, 2),
            flip_count: 0,
            optimal: true,
        };
        assert_eq!(apply_delta(&hz, &dp).unwrap(), hz);
    }

    #[test]
    fn apply_delta_rejects_out_of_range() {
        let hz = BitMatrix::zeros(2, 2);
        let dp = DeltaPatch {
            hz_rows: IndexSet::from_sorted(vec![5]).unwrap(),
            cols: IndexSet::from_sorted(vec![0]).unwrap(),
            delta: BitMatrix::zeros(1, 1),
            flip_count: 0,
            optimal: true,
        };
        assert!(apply_delta(&hz, &dp).is_err());
    }

    #[test]
    fn lp_export_of_a_single_parity_row() {
        let hxp = BitMatrix::from_fn(1, 2, |_, _| true);
        let hz = BitMatrix::zeros(1, 2);
        let mut residual = BitMatrix::zeros(1, 1);
        residual.set(0, 0, true);
        let sys = synthetic_system(&hz, &hxp, &residual);
        let lp = export_ilp(&sys);
        assert!(lp.contains("Minimize"), "{lp}");
        assert!(lp.contains(" p0: x_0_0 + x_0_1 - 2 s0 = 1"), "{lp}");
        assert!(lp.contains(" 0 <= s0 <= 1"), "{lp}");
        assert!(lp.contains("Binary"), "{lp}");
        assert!(lp.ends_with("End\n"), "{lp}");
    }

    #[test]
    fn lp_export_golden_counts() {
        let (sys, _, _) = golden_system();
        let lp = export_ilp(&sys);
        let binaries: std::collections::BTreeSet<&str> = lp
            .split_whitespace()
            .filter(|t| t.starts_with("x_"))
            .collect();
        assert_eq!(binaries.len(), 96);
        let slacks: std::collections::BTreeSet<&str> = lp
            .split_whitespace()
            .filter(|t| t.starts_with('s') && t[1..].chars().all(|c| c.is_ascii_digit()))
            .collect();
        assert_eq!(slacks.len(), 36);
        let row_balances = lp.lines().filter(|l| l.trim_start().starts_with("rb_")).count();
        let col_balances = lp.lines().filter(|l| l.trim_start().starts_with("cb_")).count();
        assert_eq!(row_balances, 6);
        assert_eq!(col_balances, 16);
    }

    #[test]
    fn lp_export_agrees_with_the_oracle_optimum() {
        // The exported file is a transliteration of the same system the
        // in-process solver and the exhaustive oracle agree on.
        let mut rng = RngState::from_seed(33);
        let hz_local = BitMatrix::from_fn(2, 4, |_, _| rng.next_u64().is_multiple_of(2));
        let hx_local = BitMatrix::from_fn(2, 4, |_, _| rng.next_u64().is_multiple_of(2));
        let residual = BitMatrix::from_fn(2, 2, |_, _| true);
        let sys = synthetic_system(&hz_local, &hx_local, &residual);
        let oracle = exhaustive_min_flips(&sys);
        let budget = SolverBudget {
            max_nodes: 1_000_000,
            mode: SolveMode::ProveOptimal,
        };
        match solve_min_flip(&sys, &hz_local, &budget) {
            SolveOutcome::Solution(dp) => assert_eq!(Some(dp.flip_count), oracle),
            SolveOutcome::Infeasible => assert_eq!(oracle, None),
            other => panic!("unexpected outcome {other:?}"),
        }
        let lp = export_ilp(&sys);
        assert_eq!(
            lp.lines().filter(|l| l.trim_start().starts_with('p')).count(),
            sys.num_parity_rows()
        );
    }
}
