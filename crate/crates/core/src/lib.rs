//! Ensembles of orthogonal sparse binary matrix pairs for CSS quantum LDPC
//! codes.
//!
//! A CSS code is defined by two binary parity-check matrices `H_X`, `H_Z`
//! with `H_X H_Z^T = 0` over GF(2). This crate starts from a structured
//! orthogonal pair, then repeatedly applies a random 2x2 cross swap to one
//! matrix and repairs the other with a minimal local patch that restores
//! orthogonality while preserving every row and column weight exactly. The
//! repair is confined to a submatrix whose size depends only on the maximum
//! row and column weights, never on the code length, so randomization scales
//! to large blocks.
//!
//! Pipeline, one iteration:
//!
//! 1. [`perturb::sample_cross_swap`] picks a weight-preserving 2x2 switch on
//!    the active matrix.
//! 2. [`localize::compute_violation_after_swap`] confines the broken inner
//!    products to index sets over rows and columns of the partner matrix.
//! 3. [`localize::assemble_repair_system`] flattens the restricted
//!    orthogonality condition into a GF(2) linear system plus signed
//!    row/column balance constraints.
//! 4. [`repair::solve_min_flip`] finds a minimum-flip binary patch by
//!    branch and bound over the solution coset; [`repair::apply_delta`]
//!    XORs it into the partner matrix.
//! 5. [`driver::randomize_run`] alternates the roles of the two matrices and
//!    repeats, with full verification after every accepted iteration.
//!
//! Everything is deterministic given the run seed: the generator is a fixed
//! xoshiro256** stream and the solver's search order is canonical.

pub mod driver;
pub mod error;
pub mod gf2;
pub mod localize;
pub mod perturb;
pub mod repair;
pub mod seed;

pub use error::{Error, Result};
pub use gf2::{gf2_eliminate, BitMatrix, BitVec, EliminationResult, IndexSet};
pub use localize::{assemble_repair_system, compute_violation, RepairSystem, ViolationPatch};
pub use perturb::{apply_cross_swap, sample_cross_swap, CrossSwap, RngState};
pub use repair::{
    apply_delta, export_ilp, solve_min_flip, DeltaPatch, SolveMode, SolveOutcome, SolverBudget,
};
pub use seed::{build_tiled_seed, load_pair, OrthoPair, SeedParams};
