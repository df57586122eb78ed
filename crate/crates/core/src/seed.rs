//! Initial orthogonal pairs.
//!
//! The built-in construction tiles the P x P identity matrix in a dc x dr
//! block array and uses the same matrix for both sides of the pair. Two rows
//! overlap exactly when they share a residue mod P, and then they overlap in
//! all dr block columns, so the pair is orthogonal precisely when dr is even.
//! Arbitrary pairs with irregular weight distributions can be loaded instead;
//! only orthogonality is enforced.

use crate::driver::formats::parse_matrix_auto;
use crate::error::{Error, Result};
use crate::gf2::BitMatrix;

/// Parameters of the tiled identity construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SeedParams {
    /// Identity block size P.
    pub block_size: usize,
    /// Column weight dc (number of block rows).
    pub col_weight: usize,
    /// Row weight dr (number of block columns); must be even.
    pub row_weight: usize,
}

impl SeedParams {
    pub fn new(block_size: usize, col_weight: usize, row_weight: usize) -> Self {
        Self {
            block_size,
            col_weight,
            row_weight,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.block_size == 0 || self.col_weight == 0 || self.row_weight == 0 {
            return Err(Error::InvalidSeedParams);
        }
        if !self.row_weight.is_multiple_of(2) {
            return Err(Error::OddRowWeight(self.row_weight));
        }
        Ok(())
    }
}

/// An orthogonal pair (H_X, H_Z) with its weight histograms recorded at
/// construction time.
#[derive(Clone, Debug)]
pub struct OrthoPair {
    hx: BitMatrix,
    hz: BitMatrix,
    row_hist_x: Vec<usize>,
    col_hist_x: Vec<usize>,
    row_hist_z: Vec<usize>,
    col_hist_z: Vec<usize>,
}

impl OrthoPair {
    /// Builds the pair, verifying column counts and orthogonality.
    pub fn new(hx: BitMatrix, hz: BitMatrix) -> Result<Self> {
        if hx.cols() != hz.cols() {
            return Err(Error::ColumnCountMismatch {
                left: hx.cols(),
                right: hz.cols(),
            });
        }
        for k in 0..hx.rows() {
            for i in 0..hz.rows() {
                if hx.row_dot_parity(k, &hz, i) {
                    return Err(Error::PairNotOrthogonal {
                        hx_row: k,
                        hz_row: i,
                    });
                }
            }
        }
        let (rx, cx) = hx.row_col_weights();
        let (rz, cz) = hz.row_col_weights();
        Ok(Self {
            hx,
            hz,
            row_hist_x: sorted(rx),
            col_hist_x: sorted(cx),
            row_hist_z: sorted(rz),
            col_hist_z: sorted(cz),
        })
    }

    /// Wraps two matrices without the orthogonality scan, recording their
    /// current histograms. For verification and diagnostic flows that must
    /// accept possibly-broken inputs; [`OrthoPair::new`] is the validating
    /// constructor.
    pub fn unchecked(hx: BitMatrix, hz: BitMatrix) -> Self {
        let (rx, cx) = hx.row_col_weights();
        let (rz, cz) = hz.row_col_weights();
        Self {
            hx,
            hz,
            row_hist_x: sorted(rx),
            col_hist_x: sorted(cx),
            row_hist_z: sorted(rz),
            col_hist_z: sorted(cz),
        }
    }

    pub fn hx(&self) -> &BitMatrix {
        &self.hx
    }

    pub fn hz(&self) -> &BitMatrix {
        &self.hz
    }

    /// Code length (shared column count).
    pub fn n(&self) -> usize {
        self.hx.cols()
    }

    /// Recorded weight multisets, sorted ascending:
    /// (rows of H_X, columns of H_X, rows of H_Z, columns of H_Z).
    pub fn histograms(&self) -> (&[usize], &[usize], &[usize], &[usize]) {
        (
            &self.row_hist_x,
            &self.col_hist_x,
            &self.row_hist_z,
            &self.col_hist_z,
        )
    }

    /// Largest column weight across both matrices.
    pub fn max_col_weight(&self) -> usize {
        self.col_hist_x
            .iter()
            .chain(&self.col_hist_z)
            .copied()
            .max()
            .unwrap_or(0)
    }

    /// Largest row weight across both matrices.
    pub fn max_row_weight(&self) -> usize {
        self.row_hist_x
            .iter()
            .chain(&self.row_hist_z)
            .copied()
            .max()
            .unwrap_or(0)
    }

    pub fn into_parts(self) -> (BitMatrix, BitMatrix) {
        (self.hx, self.hz)
    }
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

/// Builds the tiled identity pair: H_X = H_Z of shape (dc*P) x (dr*P), block
/// (a, b) equal to I_P. All row weights are dr, all column weights dc.
pub fn build_tiled_seed(params: &SeedParams) -> Result<OrthoPair> {
    params.validate()?;
    let p = params.block_size;
    let h = BitMatrix::from_fn(params.col_weight * p, params.row_weight * p, |i, j| {
        i % p == j % p
    });
    OrthoPair::new(h.clone(), h)
}

/// Parses two matrices (alist or dense 0/1 text, auto-detected) and verifies
/// they form an orthogonal pair.
pub fn load_pair(hx_source: &str, hz_source: &str) -> Result<OrthoPair> {
    let hx = parse_matrix_auto(hx_source)?;
    let hz = parse_matrix_auto(hz_source)?;
    OrthoPair::new(hx, hz)
}
