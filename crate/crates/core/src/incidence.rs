//! The 0/1 incidence matrix between `k`-subspaces (rows) and `t`-subspaces (columns)
//! of `F_q^n`: entry `(b, a)` is 1 exactly when `a ⊆ b`.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gf::FieldSpec;
use crate::grassmann::{map_unchecked, sub_ranks, transport_map, GrassmannIndex, SubspaceBasis};
use crate::qcount::gaussian;

/// Default cap on `|A| * |B|`.
pub const INCIDENCE_BITS_CAP: u64 = 1_000_000_000;

#[derive(Clone, Debug)]
pub struct IncidenceStructure {
    field: FieldSpec,
    n: usize,
    k: usize,
    t: usize,
    rows: Vec<SubspaceBasis>,
    cols: Vec<SubspaceBasis>,
    row_lookup: GrassmannIndex,
    col_lookup: GrassmannIndex,
    words: usize,
    bits: Vec<u64>,
    row_weight: BigInt,
    col_weight: BigInt,
}

pub fn build_incidence(n: usize, k: usize, t: usize, field: &FieldSpec) -> Result<IncidenceStructure> {
    build_incidence_capped(n, k, t, field, INCIDENCE_BITS_CAP)
}

pub fn build_incidence_capped(
    n: usize,
    k: usize,
    t: usize,
    field: &FieldSpec,
    cap: u64,
) -> Result<IncidenceStructure> {
    if !(t <= k && k <= n) {
        return Err(Error::InvalidParameters(format!("need t <= k <= n, got t={t} k={k} n={n}")));
    }
    let q = field.q();
    let cells = gaussian(n, k, q) * gaussian(n, t, q);
    if cells > BigInt::from(cap) {
        return Err(Error::too_large("incidence matrix", cells, cap));
    }
    let row_lookup = GrassmannIndex::new(field, n, k)?;
    let col_lookup = GrassmannIndex::new(field, n, t)?;
    let rows = row_lookup.all();
    let cols = col_lookup.all();
    let words = cols.len().div_ceil(64);
    // The t-subspaces of a row are the images of the t-subspaces of F_q^k.
    let local = GrassmannIndex::new(field, k, t)?.all();
    let row_weight = gaussian(k, t, q);
    let col_weight = q_binomial_shift(n, k, t, q);

    let bits: Vec<u64> = rows
        .par_iter()
        .flat_map_iter(|row| {
            let mut line = vec![0u64; words];
            let mut ranks = Vec::with_capacity(local.len());
            sub_ranks(&col_lookup, &local, row, &mut ranks);
            for a in ranks {
                line[a as usize / 64] |= 1 << (a % 64);
            }
            line
        })
        .collect();

    let m = IncidenceStructure {
        field: field.clone(),
        n,
        k,
        t,
        rows,
        cols,
        row_lookup,
        col_lookup,
        words,
        bits,
        row_weight,
        col_weight,
    };
    for b in 0..m.rows.len() {
        assert_eq!(BigInt::from(m.row_sum(b)), m.row_weight, "row {b} has the wrong weight");
    }
    for (a, &s) in m.column_sums().iter().enumerate() {
        assert_eq!(BigInt::from(s), m.col_weight, "column {a} has the wrong weight");
    }
    Ok(m)
}

fn q_binomial_shift(n: usize, k: usize, t: usize, q: u32) -> BigInt {
    gaussian(n - t, k - t, q)
}

impl IncidenceStructure {
    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn params(&self) -> (usize, usize, usize) {
        (self.n, self.k, self.t)
    }

    /// The `k`-subspaces indexing the rows (the set `B`).
    pub fn row_index(&self) -> &[SubspaceBasis] {
        &self.rows
    }

    /// The `t`-subspaces indexing the columns (the set `A`).
    pub fn col_index(&self) -> &[SubspaceBasis] {
        &self.cols
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols.len()
    }

    /// `[k t]_q`, the common row weight.
    pub fn row_weight(&self) -> &BigInt {
        &self.row_weight
    }

    /// `[n-t k-t]_q`, the common column weight.
    pub fn col_weight(&self) -> &BigInt {
        &self.col_weight
    }

    #[inline]
    pub fn get(&self, b: usize, a: usize) -> bool {
        self.bits[b * self.words + a / 64] >> (a % 64) & 1 == 1
    }

    pub fn row_bits(&self, b: usize) -> &[u64] {
        &self.bits[b * self.words..(b + 1) * self.words]
    }

    pub fn row_sum(&self, b: usize) -> u64 {
        self.row_bits(b).iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn column_sums(&self) -> Vec<u64> {
        let mut sums = vec![0u64; self.cols.len()];
        for b in 0..self.rows.len() {
            for (w, &word) in self.row_bits(b).iter().enumerate() {
                let mut x = word;
                while x != 0 {
                    sums[w * 64 + x.trailing_zeros() as usize] += 1;
                    x &= x - 1;
                }
            }
        }
        sums
    }

    /// Sum of all entries.
    pub fn total_ones(&self) -> u64 {
        self.bits.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    /// Largest absolute entry: the boundedness parameter `c_2`.
    pub fn boundedness(&self) -> BigInt {
        BigInt::from(u8::from(self.bits.iter().any(|&w| w != 0)))
    }

    pub fn row_of(&self, s: &SubspaceBasis) -> usize {
        self.row_lookup.rank(s) as usize
    }

    pub fn col_of(&self, s: &SubspaceBasis) -> usize {
        self.col_lookup.rank(s) as usize
    }

    /// The matrix as a plain PBM (`P1`) bitmap: one row of 0/1 characters per block.
    pub fn to_pbm(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * (self.cols.len() + 1) + 32);
        writeln!(out, "P1\n{} {}", self.cols.len(), self.rows.len()).unwrap();
        for b in 0..self.rows.len() {
            for a in 0..self.cols.len() {
                out.push(if self.get(b, a) { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }
}

/// The scalar value of every coordinate of the average row, `[k t]_q / [n t]_q`.
///
/// Computed from the actual column sums and checked against both closed forms,
/// `[k t]_q / [n t]_q` and `[n-t k-t]_q / [n k]_q`.
pub fn average_row(m: &IncidenceStructure) -> BigRational {
    let (n, k, t) = m.params();
    let q = m.field.q();
    let by_rows = BigRational::new(gaussian(k, t, q), gaussian(n, t, q));
    let by_cols = BigRational::new(gaussian(n - t, k - t, q), gaussian(n, k, q));
    assert_eq!(by_rows, by_cols, "the two average-row identities disagree");
    let rows = BigInt::from(m.num_rows());
    for (a, s) in m.column_sums().into_iter().enumerate() {
        assert_eq!(
            BigRational::new(BigInt::from(s), rows.clone()),
            by_rows,
            "column {a} average differs"
        );
    }
    by_rows
}

/// Every row sums to `[k t]_q`, so the all-ones column vector is `1/[k t]_q` times the
/// sum of the columns.
pub fn check_constant_vector_property(m: &IncidenceStructure) -> bool {
    (0..m.num_rows()).all(|b| BigInt::from(m.row_sum(b)) == m.row_weight)
}

/// Entries compared per trial in [`check_symmetry_transitivity`].
pub const SYMMETRY_SAMPLES: usize = 1000;

/// For `trials` random row pairs `(b1, b2)`, builds `L ∈ GL(n, q)` carrying `b1` to `b2`
/// and checks that the row and column permutations it induces are permutations,
/// send `b1` to `b2`, and preserve sampled matrix entries.
pub fn check_symmetry_transitivity(m: &IncidenceStructure, trials: usize, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nb, na) = (m.num_rows(), m.num_cols());
    for _ in 0..trials {
        let b1 = rng.gen_range(0..nb);
        let b2 = rng.gen_range(0..nb);
        let l = transport_map(&m.rows[b1], &m.rows[b2]).expect("rows share dimension");
        let pi: Vec<usize> = m.rows.iter().map(|s| m.row_of(&map_unchecked(&l, s))).collect();
        let sigma: Vec<usize> = m.cols.iter().map(|s| m.col_of(&map_unchecked(&l, s))).collect();
        if pi[b1] != b2 || !is_permutation(&pi) || !is_permutation(&sigma) {
            return false;
        }
        for _ in 0..SYMMETRY_SAMPLES.min(nb * na) {
            let b = rng.gen_range(0..nb);
            let a = rng.gen_range(0..na);
            if m.get(pi[b], sigma[a]) != m.get(b, a) {
                return false;
            }
        }
    }
    true
}

fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter().all(|&i| i < p.len() && !std::mem::replace(&mut seen[i], true))
}
