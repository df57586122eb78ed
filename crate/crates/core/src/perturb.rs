//! Random 2x2 cross swaps.
//!
//! A cross swap picks rows i1, i2 and columns j1, j2 with
//! `H[i1][j1] = H[i2][j2] = 1` and `H[i1][j2] = H[i2][j1] = 0`, then replaces
//! the identity-pattern 2x2 submatrix with its anti-diagonal. Row and column
//! weights are untouched; connectivity changes. This is the sole source of
//! randomness in the pipeline.
//!
//! Sampling is row-first with rejection: draw a distinct row pair, then one
//! column from each side of their support difference. This is O(row weight)
//! per attempt and does not enumerate admissible quadruples globally, at the
//! cost of a non-uniform distribution over quadruples. Draws come from a
//! self-contained xoshiro256** generator seeded through splitmix64, so a run
//! seed reproduces the same swap sequence on every platform.

use crate::error::{Error, Result};
use crate::gf2::BitMatrix;

/// Deterministic xoshiro256** stream expanded from a 64-bit seed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RngState {
    s: [u64; 4],
}

impl RngState {
    pub fn from_seed(seed: u64) -> Self {
        let mut sm = seed;
        let mut next = || {
            sm = sm.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = sm;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^ (z >> 31)
        };
        // splitmix64 outputs are distinct, so the state is never all-zero.
        Self {
            s: [next(), next(), next(), next()],
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform draw from `0..bound` via threshold rejection (no modulo bias).
    pub fn gen_range(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "gen_range bound must be positive");
        let bound = bound as u64;
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let r = self.next_u64();
            if r >= threshold {
                return (r % bound) as usize;
            }
        }
    }
}

/// A validated 2x2 switch: entries (i1,j1) and (i2,j2) are ones, the
/// anti-diagonal entries are zeros.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CrossSwap {
    pub i1: usize,
    pub j1: usize,
    pub i2: usize,
    pub j2: usize,
}

impl CrossSwap {
    /// Checks the swap against its target matrix.
    pub fn validate(&self, h: &BitMatrix) -> Result<()> {
        let CrossSwap { i1, j1, i2, j2 } = *self;
        if i1 == i2 || j1 == j2 {
            return Err(Error::InvalidSwap(format!(
                "rows ({i1},{i2}) and columns ({j1},{j2}) must be distinct"
            )));
        }
        if i1.max(i2) >= h.rows() || j1.max(j2) >= h.cols() {
            return Err(Error::InvalidSwap(format!(
                "indices ({i1},{j1}),({i2},{j2}) outside a {}x{} matrix",
                h.rows(),
                h.cols()
            )));
        }
        if !(h.get(i1, j1) && h.get(i2, j2) && !h.get(i1, j2) && !h.get(i2, j1)) {
            return Err(Error::InvalidSwap(format!(
                "entries at ({i1},{j1}),({i2},{j2}) do not form the identity pattern"
            )));
        }
        Ok(())
    }

    /// The swap that undoes this one on the swapped matrix.
    pub fn mirrored(&self) -> CrossSwap {
        CrossSwap {
            i1: self.i1,
            j1: self.j2,
            i2: self.i2,
            j2: self.j1,
        }
    }
}

/// Index of the `n`-th set bit (0-based) across packed words.
fn nth_set_bit(words: impl Iterator<Item = u64>, mut n: usize) -> Option<usize> {
    for (wi, w) in words.enumerate() {
        let count = w.count_ones() as usize;
        if n < count {
            let mut rem = w;
            for _ in 0..n {
                rem &= rem - 1;
            }
            return Some(wi * 64 + rem.trailing_zeros() as usize);
        }
        n -= count;
    }
    None
}

/// Samples a valid cross swap: distinct rows uniformly, then j1 uniform over
/// supp(row i1) \ supp(row i2) and j2 uniform over the reverse difference,
/// redrawing when either difference is empty. Capped at 128 attempts per row.
pub fn sample_cross_swap(h: &BitMatrix, rng: &mut RngState) -> Result<CrossSwap> {
    let rows = h.rows();
    let attempt_cap = 128 * rows;
    if rows < 2 || h.cols() < 2 {
        return Err(Error::NoValidSwap { attempts: 0 });
    }
    for _ in 0..attempt_cap {
        let i1 = rng.gen_range(rows);
        let mut i2 = rng.gen_range(rows - 1);
        if i2 >= i1 {
            i2 += 1;
        }
        let w1 = h.row_words(i1);
        let w2 = h.row_words(i2);
        let only1: u32 = w1.iter().zip(w2).map(|(a, b)| (a & !b).count_ones()).sum();
        let only2: u32 = w1.iter().zip(w2).map(|(a, b)| (!a & b).count_ones()).sum();
        if only1 == 0 || only2 == 0 {
            continue;
        }
        let pick1 = rng.gen_range(only1 as usize);
        let pick2 = rng.gen_range(only2 as usize);
        let j1 = nth_set_bit(w1.iter().zip(w2).map(|(a, b)| a & !b), pick1)
            .expect("rank below popcount");
        let j2 = nth_set_bit(w1.iter().zip(w2).map(|(a, b)| !a & b), pick2)
            .expect("rank below popcount");
        return Ok(CrossSwap { i1, j1, i2, j2 });
    }
    Err(Error::NoValidSwap {
        attempts: attempt_cap,
    })
}

/// Returns a copy of `h` with the swap applied. Row and column weights are
/// preserved exactly.
pub fn apply_cross_swap(h: &BitMatrix, sw: &CrossSwap) -> Result<BitMatrix> {
    sw.validate(h)?;
    let mut out = h.clone();
    out.set(sw.i1, sw.j1, false);
    out.set(sw.i2, sw.j2, false);
    out.set(sw.i1, sw.j2, true);
    out.set(sw.i2, sw.j1, true);
    Ok(out)
}
