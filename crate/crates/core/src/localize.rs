//! Violation localization and repair-system assembly.
//!
//! After a cross swap turns H_X into H'_X, the broken inner products are
//! confined to three index sets:
//!
//! - rows of H_Z whose product column is nonzero,
//! - columns of H_Z supported by those rows,
//! - rows of H'_X that touch any of those columns.
//!
//! Any patch supported on that row/column block which zeroes the restricted
//! product zeroes the full product as well: a row of H'_X outside the third
//! set shares no column with any affected H_Z row, and a patch row outside
//! the first set is empty. So the repair never needs to look beyond the
//! block, whose size is bounded by the maximum row and column weights alone.
//!
//! The restricted condition flattens into one GF(2) equation per (affected
//! H'_X row, affected H_Z row) pair over one variable per (affected H_Z row,
//! affected column) cell, plus one signed balance constraint per affected row
//! and column forcing equally many upward and downward flips there.

use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, BitVec, IndexSet};
use crate::perturb::CrossSwap;

/// The localized orthogonality violation of a perturbed pair.
#[derive(Clone, Debug)]
pub struct ViolationPatch {
    /// Rows of H_Z with a nonzero product column.
    pub hz_rows: IndexSet,
    /// Columns supported by any affected H_Z row.
    pub cols: IndexSet,
    /// Rows of H'_X supported on any affected column.
    pub hx_rows: IndexSet,
    /// The restricted product: entry (k, i) over `hx_rows` x `hz_rows`.
    pub residual: BitMatrix,
}

impl ViolationPatch {
    /// True when the pair is already orthogonal.
    pub fn is_empty(&self) -> bool {
        self.hz_rows.is_empty()
    }

    /// Checks the locality bounds implied by the maximum degrees of the pair.
    ///
    /// A swap touches two columns, each meeting at most `dc_max` rows of H_Z,
    /// so at most `2 * dc_max` rows can lose orthogonality; the column and
    /// H'_X-row sets then grow by factors of `dr_max` and `dc_max`. The hard
    /// check admits twice each bound; exceeding the nominal bound is logged
    /// but tolerated.
    pub fn check_locality_bounds(&self, dc_max: usize, dr_max: usize) -> Result<()> {
        let checks = [
            ("affected partner rows", self.hz_rows.len(), 2 * dc_max),
            ("affected columns", self.cols.len(), 2 * dc_max * dr_max),
            (
                "affected perturbed rows",
                self.hx_rows.len(),
                2 * dc_max * dc_max * dr_max,
            ),
        ];
        for (what, actual, nominal) in checks {
            if actual > 2 * nominal {
                return Err(Error::LocalityBound(format!(
                    "{what}: {actual} exceeds twice the degree bound {nominal}"
                )));
            }
            if actual > nominal {
                log::warn!("{what}: {actual} exceeds the degree bound {nominal}");
            }
        }
        Ok(())
    }
}

fn patch_from_row_set(
    hx_prime: &BitMatrix,
    hz: &BitMatrix,
    affected: BitVec,
) -> Result<ViolationPatch> {
    let hz_rows = IndexSet::from_unsorted(affected.iter_ones());
    if hz_rows.is_empty() {
        return Ok(ViolationPatch {
            hz_rows,
            cols: IndexSet::empty(),
            hx_rows: IndexSet::empty(),
            residual: BitMatrix::zeros(0, 0),
        });
    }
    let mut col_mask = BitVec::zeros(hz.cols());
    for i in hz_rows.iter() {
        hz.or_row_into(i, &mut col_mask);
    }
    let cols = IndexSet::from_unsorted(col_mask.iter_ones());
    let hx_rows = IndexSet::from_unsorted(
        (0..hx_prime.rows()).filter(|&k| hx_prime.row_intersects(k, &col_mask)),
    );
    let mut residual = BitMatrix::zeros(hx_rows.len(), hz_rows.len());
    for (kpos, k) in hx_rows.iter().enumerate() {
        for (ipos, i) in hz_rows.iter().enumerate() {
            if hx_prime.row_dot_parity(k, hz, i) {
                residual.set(kpos, ipos, true);
            }
        }
    }
    Ok(ViolationPatch {
        hz_rows,
        cols,
        hx_rows,
        residual,
    })
}

/// Localizes the violation of an arbitrary pair by scanning the full product.
pub fn compute_violation(hx_prime: &BitMatrix, hz: &BitMatrix) -> Result<ViolationPatch> {
    if hx_prime.cols() != hz.cols() {
        return Err(Error::ColumnCountMismatch {
            left: hx_prime.cols(),
            right: hz.cols(),
        });
    }
    let mut affected = BitVec::zeros(hz.rows());
    for k in 0..hx_prime.rows() {
        for i in 0..hz.rows() {
            if !affected.get(i) && hx_prime.row_dot_parity(k, hz, i) {
                affected.set(i, true);
            }
        }
    }
    patch_from_row_set(hx_prime, hz, affected)
}

/// Localizes the violation after `sw` perturbed an orthogonal pair. Only the
/// two swapped rows of H'_X can hold nonzero product entries, so only they
/// are scanned. The caller must guarantee the pair was orthogonal before the
/// swap; use [`compute_violation`] otherwise.
pub fn compute_violation_after_swap(
    hx_prime: &BitMatrix,
    hz: &BitMatrix,
    sw: &CrossSwap,
) -> Result<ViolationPatch> {
    if hx_prime.cols() != hz.cols() {
        return Err(Error::ColumnCountMismatch {
            left: hx_prime.cols(),
            right: hz.cols(),
        });
    }
    let mut affected = BitVec::zeros(hz.rows());
    for k in [sw.i1, sw.i2] {
        for i in 0..hz.rows() {
            if !affected.get(i) && hx_prime.row_dot_parity(k, hz, i) {
                affected.set(i, true);
            }
        }
    }
    patch_from_row_set(hx_prime, hz, affected)
}

/// A signed integer equality `sum of sign * delta over terms = 0`.
#[derive(Clone, Debug)]
pub struct SignedConstraint {
    /// (flat variable index, +1 or -1) pairs.
    pub terms: Vec<(usize, i8)>,
}

/// The assembled repair problem: GF(2) parity system plus signed balance
/// constraints over the flattened patch variables.
///
/// Variables are ordered row-major over (position in `hz_rows`, position in
/// `cols`), which fixes a canonical system: ranks, exports and solver traces
/// are reproducible.
#[derive(Clone, Debug)]
pub struct RepairSystem {
    pub hz_rows: IndexSet,
    pub cols: IndexSet,
    /// Orthogonality parities: one row per (hx_row, hz_row) pair.
    pub a_big: BitMatrix,
    pub b_big: BitVec,
    /// Per variable: +1 where H_Z is 0 (a flip adds a one), -1 where it is 1.
    pub row_signs: Vec<i8>,
    /// One balance constraint per affected H_Z row.
    pub balance_rows: Vec<SignedConstraint>,
    /// One balance constraint per affected column.
    pub balance_cols: Vec<SignedConstraint>,
}

impl RepairSystem {
    /// Number of patch variables.
    pub fn num_vars(&self) -> usize {
        self.hz_rows.len() * self.cols.len()
    }

    /// Number of orthogonality parity equations.
    pub fn num_parity_rows(&self) -> usize {
        self.a_big.rows()
    }

    /// Flat variable index of patch cell (row position, column position).
    pub fn var_of(&self, ipos: usize, jpos: usize) -> usize {
        ipos * self.cols.len() + jpos
    }

    /// Inverse of [`Self::var_of`].
    pub fn var_pair(&self, var: usize) -> (usize, usize) {
        (var / self.cols.len(), var % self.cols.len())
    }

    /// The full parity system the solver eliminates: the orthogonality rows
    /// followed by every balance constraint reduced mod 2 (a balanced line
    /// flips an even number of cells). Its rank is the reported system rank.
    pub fn parity_matrix(&self) -> (BitMatrix, BitVec) {
        let v = self.num_vars();
        let extra = self.balance_rows.len() + self.balance_cols.len();
        let mut a = BitMatrix::zeros(self.a_big.rows() + extra, v);
        for r in 0..self.a_big.rows() {
            for c in 0..v {
                if self.a_big.get(r, c) {
                    a.set(r, c, true);
                }
            }
        }
        for (offset, con) in self.balance_rows.iter().chain(&self.balance_cols).enumerate() {
            for &(var, _) in &con.terms {
                a.set(self.a_big.rows() + offset, var, true);
            }
        }
        let mut b = BitVec::zeros(a.rows());
        for i in 0..self.b_big.len() {
            if self.b_big.get(i) {
                b.set(i, true);
            }
        }
        (a, b)
    }
}

/// Flattens the restricted orthogonality condition into the parity system
/// and records the balance constraints.
///
/// Equation (k, i) reads: sum over affected columns j of
/// `H'_X[k][j] * delta[i][j]  =  residual[k][i]  (mod 2)`.
pub fn assemble_repair_system(
    patch: &ViolationPatch,
    hx_prime: &BitMatrix,
    hz: &BitMatrix,
) -> Result<RepairSystem> {
    if patch.is_empty() {
        return Err(Error::NothingToRepair);
    }
    let n_i = patch.hz_rows.len();
    let n_j = patch.cols.len();
    let n_k = patch.hx_rows.len();
    let v = n_i * n_j;
    let m = n_k * n_i;

    let mut a_big = BitMatrix::zeros(m, v);
    let mut b_big = BitVec::zeros(m);
    for (kpos, k) in patch.hx_rows.iter().enumerate() {
        for ipos in 0..n_i {
            let row = kpos * n_i + ipos;
            if patch.residual.get(kpos, ipos) {
                b_big.set(row, true);
            }
            for (jpos, j) in patch.cols.iter().enumerate() {
                if hx_prime.get(k, j) {
                    a_big.set(row, ipos * n_j + jpos, true);
                }
            }
        }
    }

    let mut row_signs = Vec::with_capacity(v);
    for i in patch.hz_rows.iter() {
        for j in patch.cols.iter() {
            row_signs.push(if hz.get(i, j) { -1 } else { 1 });
        }
    }

    let balance_rows = (0..n_i)
        .map(|ipos| SignedConstraint {
            terms: (0..n_j)
                .map(|jpos| {
                    let var = ipos * n_j + jpos;
                    (var, row_signs[var])
                })
                .collect(),
        })
        .collect();
    let balance_cols = (0..n_j)
        .map(|jpos| SignedConstraint {
            terms: (0..n_i)
                .map(|ipos| {
                    let var = ipos * n_j + jpos;
                    (var, row_signs[var])
                })
                .collect(),
        })
        .collect();

    Ok(RepairSystem {
        hz_rows: patch.hz_rows.clone(),
        cols: patch.cols.clone(),
        a_big,
        b_big,
        row_signs,
        balance_rows,
        balance_cols,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::{gf2_eliminate, BitMatrix};
    use crate::perturb::{apply_cross_swap, CrossSwap, RngState};

    fn tiled(p: usize, dc: usize, dr: usize) -> BitMatrix {
        BitMatrix::from_fn(dc * p, dr * p, |i, j| i % p == j % p)
    }

    fn golden_instance() -> (BitMatrix, BitMatrix) {
        let h = tiled(4, 3, 8);
        let sw = CrossSwap { i1: 10, j1: 6, i2: 7, j2: 23 };
        let hxp = apply_cross_swap(&h, &sw).unwrap();
        (hxp, h)
    }

    #[test]
    fn orthogonal_pair_has_empty_patch() {
        let h = tiled(4, 3, 8);
        let patch = compute_violation(&h, &h).unwrap();
        assert!(patch.is_empty());
        assert!(patch.cols.is_empty());
        assert!(patch.hx_rows.is_empty());
        assert_eq!((patch.residual.rows(), patch.residual.cols()), (0, 0));
    }

    #[test]
    fn golden_index_sets() {
        let (hxp, hz) = golden_instance();
        let patch = compute_violation(&hxp, &hz).unwrap();
        assert_eq!(patch.hz_rows.as_slice(), &[2, 3, 6, 7, 10, 11]);
        assert_eq!(
            patch.cols.as_slice(),
            &[2, 3, 6, 7, 10, 11, 14, 15, 18, 19, 22, 23, 26, 27, 30, 31]
        );
        assert_eq!(patch.hx_rows.as_slice(), &[2, 3, 6, 7, 10, 11]);
        // Only the two swapped rows hold violations, against every affected
        // partner row.
        for (kpos, k) in patch.hx_rows.iter().enumerate() {
            for ipos in 0..patch.hz_rows.len() {
                let expected = k == 7 || k == 10;
                assert_eq!(patch.residual.get(kpos, ipos), expected);
            }
        }
    }

    #[test]
    fn fast_path_matches_full_product_path() {
        let mut rng = RngState::from_seed(21);
        let mut checked = 0;
        while checked < 30 {
            let p = 1 + (rng.next_u64() % 3) as usize;
            let seed = crate::seed::build_tiled_seed(&crate::seed::SeedParams::new(p, 3, 4))
                .unwrap();
            let (hx, hz) = seed.into_parts();
            let Ok(sw) = crate::perturb::sample_cross_swap(&hx, &mut rng) else {
                continue;
            };
            let hxp = apply_cross_swap(&hx, &sw).unwrap();
            let fast = compute_violation_after_swap(&hxp, &hz, &sw).unwrap();
            let full = compute_violation(&hxp, &hz).unwrap();
            assert_eq!(fast.hz_rows, full.hz_rows);
            assert_eq!(fast.cols, full.cols);
            assert_eq!(fast.hx_rows, full.hx_rows);
            assert_eq!(fast.residual, full.residual);
            checked += 1;
        }
    }

    #[test]
    fn single_bit_flip_matches_dense_oracle() {
        let mut rng = RngState::from_seed(22);
        for _ in 0..20 {
            let h = tiled(2, 2, 4);
            let mut hz = h.clone();
            let i = rng.gen_range(hz.rows());
            let j = rng.gen_range(hz.cols());
            hz.flip(i, j);
            let patch = compute_violation(&h, &hz).unwrap();

            // Dense recomputation of the definitions.
            let prod = h.mul_transpose(&hz).unwrap();
            let i_oracle: Vec<usize> = (0..hz.rows())
                .filter(|&i| (0..h.rows()).any(|k| prod.get(k, i)))
                .collect();
            let j_oracle: Vec<usize> = (0..hz.cols())
                .filter(|&j| i_oracle.iter().any(|&i| hz.get(i, j)))
                .collect();
            let k_oracle: Vec<usize> = (0..h.rows())
                .filter(|&k| j_oracle.iter().any(|&j| h.get(k, j)))
                .collect();
            assert_eq!(patch.hz_rows.as_slice(), &i_oracle[..]);
            assert_eq!(patch.cols.as_slice(), &j_oracle[..]);
            assert_eq!(patch.hx_rows.as_slice(), &k_oracle[..]);
        }
    }

    #[test]
    fn golden_system_shape_and_rank() {
        let (hxp, hz) = golden_instance();
        let patch = compute_violation(&hxp, &hz).unwrap();
        let sys = assemble_repair_system(&patch, &hxp, &hz).unwrap();
        assert_eq!(sys.num_vars(), 96);
        assert_eq!(sys.num_parity_rows(), 36);

        // The orthogonality block alone: each affected partner row sees the
        // same four distinct equations, one dependent, giving rank 3 * 6.
        let orth = gf2_eliminate(&sys.a_big, &sys.b_big);
        assert!(orth.consistent);
        assert_eq!(orth.rank, 18);

        // With the balance parities folded in, the full system has rank 31
        // and 96 - 31 = 65 degrees of freedom.
        let (a, b) = sys.parity_matrix();
        let full = gf2_eliminate(&a, &b);
        assert!(full.consistent);
        assert_eq!(full.rank, 31);
        assert_eq!(full.nullity(), 65);
    }

    #[test]
    fn assembly_is_deterministic() {
        let (hxp, hz) = golden_instance();
        let patch = compute_violation(&hxp, &hz).unwrap();
        let s1 = assemble_repair_system(&patch, &hxp, &hz).unwrap();
        let s2 = assemble_repair_system(&patch, &hxp, &hz).unwrap();
        assert_eq!(s1.a_big, s2.a_big);
        assert_eq!(s1.b_big, s2.b_big);
        assert_eq!(s1.row_signs, s2.row_signs);
    }

    #[test]
    fn empty_patch_is_rejected() {
        let h = tiled(2, 2, 2);
        let patch = compute_violation(&h, &h).unwrap();
        match assemble_repair_system(&patch, &h, &h) {
            Err(Error::NothingToRepair) => {}
            other => panic!("expected NothingToRepair, got {other:?}"),
        }
    }

    #[test]
    fn toy_single_parity_row() {
        // One affected partner row {0}, columns {0,1}, one perturbed row {0}
        // supported on both columns, residual 1: the system is one equation
        // x00 + x01 = 1.
        let hxp = BitMatrix::from_fn(1, 2, |_, _| true);
        let hz = BitMatrix::zeros(1, 2);
        let mut residual = BitMatrix::zeros(1, 1);
        residual.set(0, 0, true);
        let patch = ViolationPatch {
            hz_rows: IndexSet::from_sorted(vec![0]).unwrap(),
            cols: IndexSet::from_sorted(vec![0, 1]).unwrap(),
            hx_rows: IndexSet::from_sorted(vec![0]).unwrap(),
            residual,
        };
        let sys = assemble_repair_system(&patch, &hxp, &hz).unwrap();
        assert_eq!(sys.num_vars(), 2);
        assert_eq!(sys.num_parity_rows(), 1);
        assert!(sys.a_big.get(0, 0) && sys.a_big.get(0, 1));
        assert!(sys.b_big.get(0));
        assert_eq!(sys.row_signs, vec![1, 1]);
    }

    #[test]
    fn parity_rows_follow_the_definition() {
        let (hxp, hz) = golden_instance();
        let patch = compute_violation(&hxp, &hz).unwrap();
        let sys = assemble_repair_system(&patch, &hxp, &hz).unwrap();
        for (kpos, k) in patch.hx_rows.iter().enumerate() {
            for (ipos, _) in patch.hz_rows.iter().enumerate() {
                let row = kpos * patch.hz_rows.len() + ipos;
                for (jpos, j) in patch.cols.iter().enumerate() {
                    assert_eq!(sys.a_big.get(row, sys.var_of(ipos, jpos)), hxp.get(k, j));
                }
                assert_eq!(sys.b_big.get(row), patch.residual.get(kpos, ipos));
            }
        }
    }

    #[test]
    fn golden_patch_respects_locality_bounds() {
        let (hxp, hz) = golden_instance();
        let patch = compute_violation(&hxp, &hz).unwrap();
        patch.check_locality_bounds(3, 8).unwrap();
        assert!(patch.hz_rows.len() <= 2 * 3);
        assert!(patch.cols.len() <= 2 * 3 * 8);
        assert!(patch.hx_rows.len() <= 2 * 3 * 3 * 8);
    }
}
