//! Bit-packed linear algebra over GF(2).
//!
//! Everything downstream (seed construction, swap perturbation, violation
//! localization, repair solving) reduces to a handful of operations on dense
//! binary matrices: mod-2 products against a transpose, XOR patching, weight
//! queries, submatrix extraction, and Gaussian elimination with a nullspace
//! basis. All of them live here.
//!
//! Rows are stored as packed 64-bit words. Column weights are kept in a
//! counter vector updated on every single-bit write, so per-column weight
//! queries are O(1); row weights are a popcount over the row's words.
//!
//! All operations are deterministic: elimination pivots on the lowest row
//! index, and every returned basis is in a canonical form, so identical
//! inputs give bit-identical results on every platform.

use crate::error::Error;

const WORD_BITS: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

/// A packed binary vector.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    words: Vec<u64>,
    len: usize,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; words_for(len)],
            len,
        }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let bits: Vec<bool> = bits.into_iter().collect();
        let mut v = Self::zeros(bits.len());
        for (i, b) in bits.iter().enumerate() {
            if *b {
                v.set(i, true);
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range (len {})", self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range (len {})", self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "xor of mismatched lengths");
        for (d, s) in self.words.iter_mut().zip(&other.words) {
            *d ^= s;
        }
    }

    /// Indices of set bits, ascending.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let base = wi * WORD_BITS;
            let mut rem = w;
            std::iter::from_fn(move || {
                if rem == 0 {
                    None
                } else {
                    let b = rem.trailing_zeros() as usize;
                    rem &= rem - 1;
                    Some(base + b)
                }
            })
        })
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

impl std::fmt::Debug for BitVec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitVec[")?;
        for i in 0..self.len {
            write!(f, "{}", u8::from(self.get(i)))?;
        }
        write!(f, "]")
    }
}

/// A sorted, duplicate-free set of indices into one dimension of a matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexSet {
    indices: Vec<usize>,
}

impl IndexSet {
    pub fn empty() -> Self {
        Self {
            indices: Vec::new(),
        }
    }

    /// Validates that `indices` is strictly increasing.
    pub fn from_sorted(indices: Vec<usize>) -> Result<Self, Error> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidIndexSet);
        }
        Ok(Self { indices })
    }

    pub fn from_unsorted<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut indices: Vec<usize> = iter.into_iter().collect();
        indices.sort_unstable();
        indices.dedup();
        Self { indices }
    }

    /// The full range `0..n`.
    pub fn full(n: usize) -> Self {
        Self {
            indices: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// The index stored at position `pos`.
    pub fn get(&self, pos: usize) -> usize {
        self.indices[pos]
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, value: usize) -> bool {
        self.indices.binary_search(&value).is_ok()
    }

    /// Position of `value` within the set, if present.
    pub fn position(&self, value: usize) -> Option<usize> {
        self.indices.binary_search(&value).ok()
    }

    pub fn max(&self) -> Option<usize> {
        self.indices.last().copied()
    }
}

/// A dense binary matrix with packed rows and cached column weights.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    bits: Vec<u64>,
    col_weights: Vec<u32>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = words_for(cols);
        Self {
            rows,
            cols,
            words_per_row,
            bits: vec![0; rows * words_per_row],
            col_weights: vec![0; cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> bool>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                if f(i, j) {
                    m.set(i, j, true);
                }
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        assert!(row < self.rows && col < self.cols, "entry ({row},{col}) out of range");
        let w = self.bits[row * self.words_per_row + col / WORD_BITS];
        (w >> (col % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        assert!(row < self.rows && col < self.cols, "entry ({row},{col}) out of range");
        let idx = row * self.words_per_row + col / WORD_BITS;
        let mask = 1u64 << (col % WORD_BITS);
        let was = self.bits[idx] & mask != 0;
        if value && !was {
            self.bits[idx] |= mask;
            self.col_weights[col] += 1;
        } else if !value && was {
            self.bits[idx] &= !mask;
            self.col_weights[col] -= 1;
        }
    }

    /// XORs `value` into the entry.
    #[inline]
    pub fn flip(&mut self, row: usize, col: usize) {
        let was = self.get(row, col);
        self.set(row, col, !was);
    }

    pub fn row_words(&self, row: usize) -> &[u64] {
        let start = row * self.words_per_row;
        &self.bits[start..start + self.words_per_row]
    }

    pub fn row_weight(&self, row: usize) -> usize {
        self.row_words(row)
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    pub fn col_weight(&self, col: usize) -> usize {
        self.col_weights[col] as usize
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// Mod-2 inner product of row `i` of `self` with row `k` of `other`.
    #[inline]
    pub fn row_dot_parity(&self, i: usize, other: &BitMatrix, k: usize) -> bool {
        debug_assert_eq!(self.cols, other.cols);
        self.row_words(i)
            .iter()
            .zip(other.row_words(k))
            .map(|(a, b)| (a & b).count_ones())
            .sum::<u32>()
            & 1
            == 1
    }

    /// Whether row `i` has any one in a position set in `mask`.
    pub fn row_intersects(&self, i: usize, mask: &BitVec) -> bool {
        self.row_words(i)
            .iter()
            .zip(mask.words())
            .any(|(a, b)| a & b != 0)
    }

    /// ORs row `i` into `acc`.
    pub fn or_row_into(&self, i: usize, acc: &mut BitVec) {
        assert_eq!(acc.len(), self.cols);
        let start = i * self.words_per_row;
        for (d, s) in acc.words.iter_mut().zip(&self.bits[start..]) {
            *d |= s;
        }
    }

    /// Ones count per row and per column.
    pub fn row_col_weights(&self) -> (Vec<usize>, Vec<usize>) {
        let rw = (0..self.rows).map(|i| self.row_weight(i)).collect();
        let cw = self.col_weights.iter().map(|&w| w as usize).collect();
        (rw, cw)
    }

    /// `self * other^T` over GF(2): entry (k, i) is the mod-2 inner product of
    /// row k of `self` with row i of `other`. Both operands must have the same
    /// column count.
    pub fn mul_transpose(&self, other: &BitMatrix) -> Result<BitMatrix, Error> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                context: "product against transpose",
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        let mut out = BitMatrix::zeros(self.rows, other.rows);
        for k in 0..self.rows {
            for i in 0..other.rows {
                if self.row_dot_parity(k, other, i) {
                    out.set(k, i, true);
                }
            }
        }
        Ok(out)
    }

    /// Returns a copy of `self` with `patch` XORed into the cells selected by
    /// `rows` x `cols`. Applying the same patch twice restores the input.
    pub fn xor_patch(
        &self,
        rows: &IndexSet,
        cols: &IndexSet,
        patch: &BitMatrix,
    ) -> Result<BitMatrix, Error> {
        if patch.rows() != rows.len() || patch.cols() != cols.len() {
            return Err(Error::DimensionMismatch {
                context: "patch shape vs index sets",
                left: (patch.rows(), patch.cols()),
                right: (rows.len(), cols.len()),
            });
        }
        self.check_in_range(rows, cols)?;
        let mut out = self.clone();
        for (a, r) in rows.iter().enumerate() {
            for (b, c) in cols.iter().enumerate() {
                if patch.get(a, b) {
                    out.flip(r, c);
                }
            }
        }
        Ok(out)
    }

    /// The `|rows| x |cols|` matrix of selected entries, in index-set order.
    pub fn submatrix(&self, rows: &IndexSet, cols: &IndexSet) -> Result<BitMatrix, Error> {
        self.check_in_range(rows, cols)?;
        let mut out = BitMatrix::zeros(rows.len(), cols.len());
        for (a, r) in rows.iter().enumerate() {
            for (b, c) in cols.iter().enumerate() {
                if self.get(r, c) {
                    out.set(a, b, true);
                }
            }
        }
        Ok(out)
    }

    pub fn transposed(&self) -> BitMatrix {
        let mut out = BitMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) {
                    out.set(j, i, true);
                }
            }
        }
        out
    }

    fn check_in_range(&self, rows: &IndexSet, cols: &IndexSet) -> Result<(), Error> {
        if let Some(r) = rows.max() {
            if r >= self.rows {
                return Err(Error::IndexOutOfRange {
                    index: r,
                    bound: self.rows,
                    axis: "row",
                });
            }
        }
        if let Some(c) = cols.max() {
            if c >= self.cols {
                return Err(Error::IndexOutOfRange {
                    index: c,
                    bound: self.cols,
                    axis: "column",
                });
            }
        }
        Ok(())
    }
}

impl std::fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            for j in 0..self.cols {
                write!(f, "{}", u8::from(self.get(i, j)))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Outcome of Gaussian elimination on `A x = b` over GF(2).
#[derive(Clone, Debug)]
pub struct EliminationResult {
    pub rank: usize,
    pub consistent: bool,
    /// One solution with all free variables set to zero; present iff consistent.
    pub particular: Option<BitVec>,
    /// Canonical nullspace basis, one vector per free column in ascending
    /// column order. Each vector has a single one among the free columns.
    pub nullspace_basis: Vec<BitVec>,
    pub pivot_columns: IndexSet,
}

impl EliminationResult {
    pub fn nullity(&self) -> usize {
        self.nullspace_basis.len()
    }
}

/// Reduces `A x = b` to reduced row echelon form, pivoting on the lowest row
/// index in each column sweep. Inconsistency is reported, not an error.
pub fn gf2_eliminate(a: &BitMatrix, b: &BitVec) -> EliminationResult {
    assert_eq!(b.len(), a.rows(), "rhs length must equal the row count");
    let rows = a.rows();
    let cols = a.cols();
    let mut work: Vec<Vec<u64>> = (0..rows).map(|i| a.row_words(i).to_vec()).collect();
    let mut rhs: Vec<bool> = (0..rows).map(|i| b.get(i)).collect();

    let bit = |row: &[u64], c: usize| (row[c / WORD_BITS] >> (c % WORD_BITS)) & 1 == 1;

    let mut pivot_cols = Vec::new();
    let mut rank = 0usize;
    for c in 0..cols {
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

    // Rows below the rank are all-zero after a full sweep.
    let consistent = rhs[rank..].iter().all(|&r| !r);

    let particular = consistent.then(|| {
        let mut x = BitVec::zeros(cols);
        for (t, &pc) in pivot_cols.iter().enumerate() {
            if rhs[t] {
                x.set(pc, true);
            }
        }
        x
    });

    let mut nullspace_basis = Vec::with_capacity(cols - rank);
    let mut next_pivot = 0usize;
    for f in 0..cols {
        if next_pivot < pivot_cols.len() && pivot_cols[next_pivot] == f {
            next_pivot += 1;
            continue;
        }
        let mut n = BitVec::zeros(cols);
        n.set(f, true);
        for (t, &pc) in pivot_cols.iter().enumerate() {
            if bit(&work[t], f) {
                n.set(pc, true);
            }
        }
        nullspace_basis.push(n);
    }

    EliminationResult {
        rank,
        consistent,
        particular,
        nullspace_basis,
        pivot_columns: IndexSet::from_sorted(pivot_cols).expect("pivot columns ascend"),
    }
}

/// GF(2) rank.
pub fn rank(a: &BitMatrix) -> usize {
    gf2_eliminate(a, &BitVec::zeros(a.rows())).rank
}

/// `A x` over GF(2).
pub fn mat_vec(a: &BitMatrix, x: &BitVec) -> BitVec {
    assert_eq!(x.len(), a.cols());
    let mut out = BitVec::zeros(a.rows());
    for i in 0..a.rows() {
        let parity = a
            .row_words(i)
            .iter()
            .zip(x.words())
            .map(|(r, w)| (r & w).count_ones())
            .sum::<u32>()
            & 1;
        if parity == 1 {
            out.set(i, true);
        }
    }
    out
}
