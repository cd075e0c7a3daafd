//! Subspaces of `F_q^n` in canonical form, their enumeration, and the basic
//! predicates between them.
//!
//! A subspace is identified by the reduced row echelon form of any basis. The
//! canonical order on `k`-subspaces sorts first by pivot-column set
//! (lexicographically), then by the free entries read row-major as a base-`q`
//! integer whose least significant digit is the last free position.
//! [`GrassmannIndex`] ranks and unranks in exactly that order.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gf::{element_char, rref_in_place, FieldSpec, Matrix};
use crate::qcount::gaussian;

/// Default cap on the size of a materialized list of subspaces.
pub const ENUMERATION_CAP: u64 = 10_000_000;

/// A subspace of `F_q^n`, stored as its RREF basis (no zero rows).
#[derive(Clone)]
pub struct SubspaceBasis {
    field: FieldSpec,
    n: usize,
    pivots: Vec<usize>,
    rows: Vec<u8>,
}

impl SubspaceBasis {
    /// The span of `count` row vectors of length `n` packed in `vectors`.
    pub fn span(field: &FieldSpec, n: usize, vectors: &[u8]) -> Self {
        assert_eq!(vectors.len() % n.max(1), 0, "vector buffer is not a multiple of n");
        let count = if n == 0 { 0 } else { vectors.len() / n };
        let mut data = vectors.to_vec();
        let pivots = rref_in_place(field, &mut data, count, n);
        data.truncate(pivots.len() * n);
        SubspaceBasis {
            field: field.clone(),
            n,
            pivots,
            rows: data,
        }
    }

    /// The row space of `m`.
    pub fn row_space(m: &Matrix) -> Self {
        SubspaceBasis::span(m.field(), m.cols(), m.entries())
    }

    /// Builds a subspace from `rows`, requiring them to be linearly independent.
    pub fn from_rows(field: &FieldSpec, n: usize, rows: &[Vec<u8>]) -> Result<Self> {
        let m = Matrix::from_rows(field, rows)?;
        if !rows.is_empty() && m.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "rows have length {}, ambient dimension is {n}",
                m.cols()
            )));
        }
        let s = SubspaceBasis::span(field, n, m.entries());
        if s.dim() != rows.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows span only a {}-dimensional subspace",
                rows.len(),
                s.dim()
            )));
        }
        Ok(s)
    }

    pub fn zero(field: &FieldSpec, n: usize) -> Self {
        SubspaceBasis {
            field: field.clone(),
            n,
            pivots: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn full(field: &FieldSpec, n: usize) -> Self {
        let id = Matrix::identity(field, n);
        SubspaceBasis {
            field: field.clone(),
            n,
            pivots: (0..n).collect(),
            rows: id.into_entries(),
        }
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.rows[i * self.n..(i + 1) * self.n]
    }

    /// Row-major RREF entries, `dim x n`.
    pub fn entries(&self) -> &[u8] {
        &self.rows
    }

    pub fn basis(&self) -> Matrix {
        Matrix::from_raw(&self.field, self.dim(), self.n, self.rows.clone())
    }

    fn check_ambient(&self, other: &SubspaceBasis) -> Result<()> {
        if self.field != other.field || self.n != other.n {
            return Err(Error::AmbientMismatch {
                q1: self.field.q(),
                n1: self.n,
                q2: other.field.q(),
                n2: other.n,
            });
        }
        Ok(())
    }

    /// Subtracts the basis rows from `v` until `v` vanishes on every pivot column.
    #[inline]
    pub(crate) fn reduce(&self, v: &mut [u8]) {
        for (r, &p) in self.pivots.iter().enumerate() {
            let c = v[p];
            if c != 0 {
                self.field.axpy_neg(v, c, self.row(r));
            }
        }
    }

    pub fn contains_vector(&self, v: &[u8]) -> bool {
        let mut w = v.to_vec();
        self.reduce(&mut w);
        w.iter().all(|&x| x == 0)
    }

    /// `other ⊆ self`, assuming a shared ambient space.
    pub(crate) fn includes(&self, other: &SubspaceBasis) -> bool {
        if other.dim() > self.dim() {
            return false;
        }
        let mut w = vec![0u8; self.n];
        (0..other.dim()).all(|i| {
            w.copy_from_slice(other.row(i));
            self.reduce(&mut w);
            w.iter().all(|&x| x == 0)
        })
    }

    /// `dim(self ∩ other)`, assuming a shared ambient space.
    pub(crate) fn meet_dim(&self, other: &SubspaceBasis) -> usize {
        let b = other.dim();
        let mut residues = other.rows.clone();
        for chunk in residues.chunks_exact_mut(self.n.max(1)).take(b) {
            self.reduce(chunk);
        }
        b - rref_in_place(&self.field, &mut residues, b, self.n).len()
    }

    /// `self + other`.
    pub fn sum(&self, other: &SubspaceBasis) -> Result<SubspaceBasis> {
        self.check_ambient(other)?;
        let mut data = self.rows.clone();
        data.extend_from_slice(&other.rows);
        Ok(SubspaceBasis::span(&self.field, self.n, &data))
    }

    /// `self ∩ other`, via the Zassenhaus block elimination.
    pub fn intersection(&self, other: &SubspaceBasis) -> Result<SubspaceBasis> {
        self.check_ambient(other)?;
        let n = self.n;
        let (a, b) = (self.dim(), other.dim());
        let w = 2 * n;
        let mut data = vec![0u8; (a + b) * w];
        for i in 0..a {
            data[i * w..i * w + n].copy_from_slice(self.row(i));
            data[i * w + n..(i + 1) * w].copy_from_slice(self.row(i));
        }
        for i in 0..b {
            data[(a + i) * w..(a + i) * w + n].copy_from_slice(other.row(i));
        }
        let pivots = rref_in_place(&self.field, &mut data, a + b, w);
        let mut meet = Vec::new();
        for (r, &p) in pivots.iter().enumerate() {
            if p >= n {
                meet.extend_from_slice(&data[r * w + n..(r + 1) * w]);
            }
        }
        Ok(SubspaceBasis::span(&self.field, n, &meet))
    }

    /// Every vector of the subspace, in coefficient order.
    pub fn vectors(&self) -> Vec<Vec<u8>> {
        let q = self.field.q() as usize;
        let k = self.dim();
        let total = q.pow(k as u32);
        let mut out = Vec::with_capacity(total);
        let mut coeffs = vec![0u8; k];
        for _ in 0..total {
            let mut v = vec![0u8; self.n];
            for (i, &c) in coeffs.iter().enumerate() {
                if c != 0 {
                    self.field.axpy_neg(&mut v, self.field.neg(c), self.row(i));
                }
            }
            out.push(v);
            for c in coeffs.iter_mut() {
                *c += 1;
                if (*c as usize) < q {
                    break;
                }
                *c = 0;
            }
        }
        out
    }

    /// The subspace written as `dim` lines of `n` digits.
    pub fn to_lines(&self) -> Vec<String> {
        (0..self.dim())
            .map(|i| self.row(i).iter().map(|&v| element_char(v)).collect())
            .collect()
    }

    /// Extends the basis by the standard vectors at the non-pivot columns, giving an
    /// invertible `n x n` matrix whose first `dim` rows are the RREF basis.
    fn completed_basis(&self) -> Matrix {
        let n = self.n;
        let mut data = self.rows.clone();
        for c in (0..n).filter(|c| !self.pivots.contains(c)) {
            let start = data.len();
            data.resize(start + n, 0);
            data[start + c] = 1;
        }
        Matrix::from_raw(&self.field, n, n, data)
    }
}

impl PartialEq for SubspaceBasis {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && self.n == other.n && self.rows == other.rows
            && self.pivots == other.pivots
    }
}

impl Eq for SubspaceBasis {}

impl Hash for SubspaceBasis {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.field.q().hash(state);
        self.n.hash(state);
        self.pivots.hash(state);
        self.rows.hash(state);
    }
}

impl Ord for SubspaceBasis {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.field.q(), self.n, self.dim())
            .cmp(&(other.field.q(), other.n, other.dim()))
            .then_with(|| self.pivots.cmp(&other.pivots))
            .then_with(|| self.rows.cmp(&other.rows))
    }
}

impl PartialOrd for SubspaceBasis {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for SubspaceBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.to_lines().join(","))
    }
}

impl fmt::Display for SubspaceBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in self.to_lines() {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// `V ⊆ U`.
pub fn contains(u: &SubspaceBasis, v: &SubspaceBasis) -> Result<bool> {
    u.check_ambient(v)?;
    Ok(u.includes(v))
}

/// `dim(U ∩ V)`.
pub fn intersect_dim(u: &SubspaceBasis, v: &SubspaceBasis) -> Result<usize> {
    u.check_ambient(v)?;
    Ok(u.meet_dim(v))
}

/// Rank of the matrix obtained by stacking both bases.
pub fn stacked_rank(u: &SubspaceBasis, v: &SubspaceBasis) -> Result<usize> {
    u.check_ambient(v)?;
    let mut data = u.rows.clone();
    data.extend_from_slice(&v.rows);
    Ok(rref_in_place(&u.field, &mut data, u.dim() + v.dim(), u.n).len())
}

/// The image of `V` under the row-vector map `x -> x L`.
pub fn apply_map(l: &Matrix, v: &SubspaceBasis) -> Result<SubspaceBasis> {
    if l.rows() != v.n || l.cols() != v.n || *l.field() != v.field {
        return Err(Error::DimensionMismatch(format!(
            "map is {}x{}, subspace lives in dimension {}",
            l.rows(),
            l.cols(),
            v.n
        )));
    }
    if !l.is_invertible() {
        return Err(Error::SingularMap);
    }
    Ok(map_unchecked(l, v))
}

pub(crate) fn map_unchecked(l: &Matrix, v: &SubspaceBasis) -> SubspaceBasis {
    SubspaceBasis::row_space(&v.basis().mul(l).expect("shapes checked"))
}

/// An invertible `L` with `apply_map(L, from) == to`. Both subspaces must have the
/// same dimension.
pub fn transport_map(from: &SubspaceBasis, to: &SubspaceBasis) -> Result<Matrix> {
    from.check_ambient(to)?;
    if from.dim() != to.dim() {
        return Err(Error::DimensionMismatch(format!(
            "cannot map a {}-subspace onto a {}-subspace",
            from.dim(),
            to.dim()
        )));
    }
    let b1 = from.completed_basis();
    let b2 = to.completed_basis();
    b1.inverse().expect("completed basis is invertible").mul(&b2)
}

/// Ranks and unranks `k`-subspaces of `F_q^n` in canonical order without
/// materializing them.
#[derive(Clone, Debug)]
pub struct GrassmannIndex {
    field: FieldSpec,
    n: usize,
    k: usize,
    pivot_sets: Vec<Vec<usize>>,
    free: Vec<Vec<(usize, usize)>>,
    offsets: Vec<u64>,
    total: u64,
}

impl GrassmannIndex {
    pub fn new(field: &FieldSpec, n: usize, k: usize) -> Result<Self> {
        GrassmannIndex::with_cap(field, n, k, ENUMERATION_CAP)
    }

    pub fn with_cap(field: &FieldSpec, n: usize, k: usize, cap: u64) -> Result<Self> {
        if k > n {
            return Err(Error::InvalidParameters(format!("k = {k} exceeds n = {n}")));
        }
        let count = gaussian(n, k, field.q());
        if count > BigInt::from(cap) {
            return Err(Error::too_large("Grassmannian", count, cap));
        }
        let pivot_sets = combinations(n, k);
        let free: Vec<Vec<(usize, usize)>> = pivot_sets
            .iter()
            .map(|p| {
                p.iter()
                    .enumerate()
                    .flat_map(|(r, &pc)| {
                        (pc + 1..n).filter(|c| !p.contains(c)).map(move |c| (r, c))
                    })
                    .collect()
            })
            .collect();
        let q = u64::from(field.q());
        let mut offsets = Vec::with_capacity(pivot_sets.len());
        let mut total = 0u64;
        for f in &free {
            offsets.push(total);
            total += q.pow(f.len() as u32);
        }
        debug_assert_eq!(BigInt::from(total), count);
        Ok(GrassmannIndex {
            field: field.clone(),
            n,
            k,
            pivot_sets,
            free,
            offsets,
            total,
        })
    }

    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    /// Position of `s` in canonical order.
    pub fn rank(&self, s: &SubspaceBasis) -> u64 {
        debug_assert_eq!((s.n, s.dim()), (self.n, self.k));
        let set = self
            .pivot_sets
            .binary_search_by(|p| p.as_slice().cmp(&s.pivots))
            .expect("pivot set of a k-subspace");
        let q = u64::from(self.field.q());
        let value = self.free[set]
            .iter()
            .fold(0u64, |acc, &(r, c)| acc * q + u64::from(s.rows[r * self.n + c]));
        self.offsets[set] + value
    }

    /// Position of the span of `rows` row vectors in `buf`, which must be linearly
    /// independent and number `k`; `buf` is left in RREF.
    pub(crate) fn rank_of_span(&self, buf: &mut [u8], rows: usize) -> u64 {
        let pivots = rref_in_place(&self.field, buf, rows, self.n);
        debug_assert_eq!(pivots.len(), self.k);
        let set = self
            .pivot_sets
            .binary_search(&pivots)
            .expect("pivot set of a k-subspace");
        let q = u64::from(self.field.q());
        let value = self.free[set]
            .iter()
            .fold(0u64, |acc, &(r, c)| acc * q + u64::from(buf[r * self.n + c]));
        self.offsets[set] + value
    }

    /// The subspace at position `index` in canonical order.
    pub fn unrank(&self, index: u64) -> SubspaceBasis {
        assert!(index < self.total, "index {index} out of range");
        let set = self.offsets.partition_point(|&o| o <= index) - 1;
        self.build(set, index - self.offsets[set])
    }

    fn build(&self, set: usize, mut value: u64) -> SubspaceBasis {
        let (n, q) = (self.n, u64::from(self.field.q()));
        let pivots = self.pivot_sets[set].clone();
        let mut rows = vec![0u8; self.k * n];
        for (r, &p) in pivots.iter().enumerate() {
            rows[r * n + p] = 1;
        }
        for &(r, c) in self.free[set].iter().rev() {
            rows[r * n + c] = (value % q) as u8;
            value /= q;
        }
        SubspaceBasis {
            field: self.field.clone(),
            n,
            pivots,
            rows,
        }
    }

    fn block(&self, set: usize) -> Vec<SubspaceBasis> {
        let q = u64::from(self.field.q());
        let size = q.pow(self.free[set].len() as u32);
        (0..size).map(|v| self.build(set, v)).collect()
    }

    /// All subspaces in canonical order, built in parallel per pivot set.
    pub fn all(&self) -> Vec<SubspaceBasis> {
        let blocks: Vec<Vec<SubspaceBasis>> = (0..self.pivot_sets.len())
            .into_par_iter()
            .map(|set| self.block(set))
            .collect();
        blocks.into_iter().flatten().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = SubspaceBasis> + '_ {
        (0..self.pivot_sets.len()).flat_map(move |set| {
            let q = u64::from(self.field.q());
            let size = q.pow(self.free[set].len() as u32);
            (0..size).map(move |v| self.build(set, v))
        })
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let Some(i) = (0..k).rev().find(|&i| c[i] < n - k + i) else {
            break;
        };
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
    out
}

/// Every `k`-subspace of `F_q^n` exactly once, in canonical order.
pub fn enumerate_subspaces(n: usize, k: usize, field: &FieldSpec) -> Result<Vec<SubspaceBasis>> {
    enumerate_subspaces_capped(n, k, field, ENUMERATION_CAP)
}

pub fn enumerate_subspaces_capped(
    n: usize,
    k: usize,
    field: &FieldSpec,
    cap: u64,
) -> Result<Vec<SubspaceBasis>> {
    Ok(GrassmannIndex::with_cap(field, n, k, cap)?.all())
}

/// Number of `k`-subspaces, as a `u64` when it fits.
pub fn count_subspaces(n: usize, k: usize, q: u32) -> Option<u64> {
    gaussian(n, k, q).to_u64()
}

/// The `k`-subspaces `U` with `V ⊆ U ⊆ F_q^n`, in canonical order.
pub fn extensions(v: &SubspaceBasis, k: usize) -> Result<Vec<SubspaceBasis>> {
    extensions_capped(v, k, ENUMERATION_CAP)
}

pub fn extensions_capped(v: &SubspaceBasis, k: usize, cap: u64) -> Result<Vec<SubspaceBasis>> {
    let (n, t) = (v.n, v.dim());
    if k < t || k > n {
        return Err(Error::InvalidParameters(format!(
            "need dim V = {t} <= k = {k} <= n = {n}"
        )));
    }
    // Vectors supported off the pivot columns of V form a complement of V, so the
    // extensions correspond to (k - t)-subspaces of that complement.
    let free_cols: Vec<usize> = (0..n).filter(|c| !v.pivots.contains(c)).collect();
    let quotient = GrassmannIndex::with_cap(&v.field, n - t, k - t, cap)?;
    let mut out: Vec<SubspaceBasis> = quotient
        .iter()
        .map(|w| {
            let mut data = v.rows.clone();
            for i in 0..w.dim() {
                let start = data.len();
                data.resize(start + n, 0);
                for (j, &c) in free_cols.iter().enumerate() {
                    data[start + c] = w.row(i)[j];
                }
            }
            SubspaceBasis::span(&v.field, n, &data)
        })
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// The `k`-subspaces contained in `w`, i.e. the images of the `k`-subspaces of
/// `F_q^{dim W}` under the basis of `w`.
pub fn subspaces_within(w: &SubspaceBasis, k: usize, cap: u64) -> Result<Vec<SubspaceBasis>> {
    let index = GrassmannIndex::with_cap(&w.field, w.dim(), k, cap)?;
    let basis = w.basis();
    let mut out: Vec<SubspaceBasis> = index
        .iter()
        .map(|c| SubspaceBasis::row_space(&c.basis().mul(&basis).expect("shapes agree")))
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// Ranks, in `index`, the images inside `block` of the `t`-subspaces `local` of
/// `F_q^k`: the `t`-subspaces of `block` in a fixed order. Appends to `out`.
pub(crate) fn sub_ranks(index: &GrassmannIndex, local: &[SubspaceBasis], block: &SubspaceBasis, out: &mut Vec<u64>) {
    let (n, k, t) = (block.n, block.dim(), index.k);
    let field = &block.field;
    let mut buf = vec![0u8; t * n];
    for c in local {
        buf.fill(0);
        for i in 0..t {
            let dst = &mut buf[i * n..(i + 1) * n];
            for j in 0..k {
                let coeff = c.rows[i * k + j];
                if coeff != 0 {
                    field.axpy_neg(dst, field.neg(coeff), &block.rows[j * n..(j + 1) * n]);
                }
            }
        }
        out.push(index.rank_of_span(&mut buf, t));
    }
}
