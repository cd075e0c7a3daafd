//! Table-driven arithmetic in small finite fields and dense linear algebra over them.
//!
//! Elements of `F_q` are represented by their index `0..q`. For a prime field the
//! index is the residue; for `q = p^e` the index encodes the polynomial
//! `c_0 + c_1 x + ... + c_{e-1} x^{e-1}` as `c_0 + c_1 p + ... + c_{e-1} p^{e-1}`,
//! reduced modulo a fixed irreducible polynomial.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Field orders the library supports.
pub const SUPPORTED_ORDERS: [u32; 10] = [2, 3, 4, 5, 7, 8, 9, 11, 13, 16];

/// Reduction polynomials for the prime-power orders, monic, coefficients low to high.
/// These are the Conway polynomials for each `(p, e)`.
const REDUCTION_POLYS: [(u32, u32, u32, &[u8]); 4] = [
    (4, 2, 2, &[1, 1, 1]),
    (8, 2, 3, &[1, 1, 0, 1]),
    (9, 3, 2, &[2, 2, 1]),
    (16, 2, 4, &[1, 1, 0, 0, 1]),
];

struct Tables {
    q: u32,
    p: u32,
    e: u32,
    poly: Option<Vec<u8>>,
    add: Vec<u8>,
    mul: Vec<u8>,
    neg: Vec<u8>,
    inv: Vec<u8>,
}

/// The finite field `F_q` with precomputed operation tables.
///
/// Cloning is cheap; the tables are shared.
#[derive(Clone)]
pub struct FieldSpec {
    inner: Arc<Tables>,
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.inner.q)
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.inner.q == other.inner.q
    }
}

impl Eq for FieldSpec {}

/// Builds `F_q` for one of the [`SUPPORTED_ORDERS`].
pub fn make_field(q: u32) -> Result<FieldSpec> {
    FieldSpec::new(q)
}

impl FieldSpec {
    pub fn new(q: u32) -> Result<Self> {
        if !SUPPORTED_ORDERS.contains(&q) {
            return Err(Error::UnsupportedOrder(q));
        }
        let (p, e, poly) = match REDUCTION_POLYS.iter().find(|(order, ..)| *order == q) {
            Some(&(_, p, e, poly)) => (p, e, Some(poly.to_vec())),
            None => (q, 1, None),
        };
        let qs = q as usize;
        let mut add = vec![0u8; qs * qs];
        let mut mul = vec![0u8; qs * qs];
        for a in 0..q {
            for b in 0..q {
                let (s, m) = match &poly {
                    None => ((a + b) % q, (a * b) % q),
                    Some(poly) => (poly_add(a, b, p, e), poly_mul(a, b, p, e, poly)),
                };
                add[(a * q + b) as usize] = s as u8;
                mul[(a * q + b) as usize] = m as u8;
            }
        }
        let mut neg = vec![0u8; qs];
        let mut inv = vec![0u8; qs];
        for a in 0..qs {
            neg[a] = (0..qs).find(|&b| add[a * qs + b] == 0).unwrap() as u8;
            if a != 0 {
                inv[a] = (1..qs)
                    .find(|&b| mul[a * qs + b] == 1)
                    .expect("nonzero element without inverse") as u8;
            }
        }
        Ok(FieldSpec {
            inner: Arc::new(Tables {
                q,
                p,
                e,
                poly,
                add,
                mul,
                neg,
                inv,
            }),
        })
    }

    #[inline]
    pub fn q(&self) -> u32 {
        self.inner.q
    }

    pub fn characteristic(&self) -> u32 {
        self.inner.p
    }

    pub fn degree(&self) -> u32 {
        self.inner.e
    }

    /// Monic reduction polynomial, coefficients low to high; `None` for prime fields.
    pub fn reduction_polynomial(&self) -> Option<&[u8]> {
        self.inner.poly.as_deref()
    }

    #[inline]
    pub fn add(&self, a: u8, b: u8) -> u8 {
        self.inner.add[a as usize * self.inner.q as usize + b as usize]
    }

    #[inline]
    pub fn sub(&self, a: u8, b: u8) -> u8 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        self.inner.mul[a as usize * self.inner.q as usize + b as usize]
    }

    #[inline]
    pub fn neg(&self, a: u8) -> u8 {
        self.inner.neg[a as usize]
    }

    /// Multiplicative inverse; `inv(0)` is 0.
    #[inline]
    pub fn inv(&self, a: u8) -> u8 {
        self.inner.inv[a as usize]
    }

    /// `dst -= c * src`, elementwise.
    #[inline]
    pub(crate) fn axpy_neg(&self, dst: &mut [u8], c: u8, src: &[u8]) {
        if c == 0 {
            return;
        }
        let nc = self.neg(c);
        let q = self.inner.q as usize;
        let mul = &self.inner.mul[nc as usize * q..nc as usize * q + q];
        for (d, &s) in dst.iter_mut().zip(src) {
            *d = self.inner.add[*d as usize * q + mul[s as usize] as usize];
        }
    }

    #[inline]
    pub(crate) fn scale(&self, row: &mut [u8], c: u8) {
        for x in row {
            *x = self.mul(*x, c);
        }
    }
}

fn poly_add(a: u32, b: u32, p: u32, e: u32) -> u32 {
    let (mut a, mut b) = (a, b);
    let mut out = 0;
    let mut place = 1;
    for _ in 0..e {
        out += ((a % p + b % p) % p) * place;
        a /= p;
        b /= p;
        place *= p;
    }
    out
}

fn digits(mut a: u32, p: u32, e: u32) -> Vec<u32> {
    (0..e)
        .map(|_| {
            let d = a % p;
            a /= p;
            d
        })
        .collect()
}

fn poly_mul(a: u32, b: u32, p: u32, e: u32, poly: &[u8]) -> u32 {
    let (da, db) = (digits(a, p, e), digits(b, p, e));
    let e = e as usize;
    let mut prod = vec![0u32; 2 * e - 1];
    for i in 0..e {
        for j in 0..e {
            prod[i + j] = (prod[i + j] + da[i] * db[j]) % p;
        }
    }
    // Reduce from the top using x^e = -(poly_0 + ... + poly_{e-1} x^{e-1}).
    for deg in (e..prod.len()).rev() {
        let c = prod[deg];
        if c == 0 {
            continue;
        }
        prod[deg] = 0;
        for (i, &pc) in poly[..e].iter().enumerate() {
            let sub = (c * pc as u32) % p;
            prod[deg - e + i] = (prod[deg - e + i] + p - sub) % p;
        }
    }
    prod[..e].iter().rev().fold(0, |acc, &d| acc * p + d)
}

/// Renders an element index as a single digit (`0-9`, then `a-f`).
pub fn element_char(v: u8) -> char {
    char::from_digit(v as u32, 16).expect("element index below 16")
}

/// Parses one digit written by [`element_char`].
pub fn parse_element(c: char) -> Option<u8> {
    c.to_digit(16).map(|d| d as u8)
}

/// A dense matrix over `F_q`, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    field: FieldSpec,
    rows: usize,
    cols: usize,
    entries: Vec<u8>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix<{:?}>[", self.field)?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, " ")?;
            }
            for &v in self.row(r) {
                write!(f, "{}", element_char(v))?;
            }
        }
        write!(f, "]")
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            for &v in self.row(r) {
                write!(f, "{}", element_char(v))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl Matrix {
    pub fn zeros(field: &FieldSpec, rows: usize, cols: usize) -> Self {
        Matrix {
            field: field.clone(),
            rows,
            cols,
            entries: vec![0; rows * cols],
        }
    }

    pub fn identity(field: &FieldSpec, n: usize) -> Self {
        let mut m = Matrix::zeros(field, n, n);
        for i in 0..n {
            m.entries[i * n + i] = 1;
        }
        m
    }

    /// Builds a matrix from row-major entries, checking shape and range.
    pub fn new(field: &FieldSpec, rows: usize, cols: usize, entries: Vec<u8>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        if let Some(&bad) = entries.iter().find(|&&v| u32::from(v) >= field.q()) {
            return Err(Error::InvalidParameters(format!(
                "entry {bad} is not an element of F_{}",
                field.q()
            )));
        }
        Ok(Matrix {
            field: field.clone(),
            rows,
            cols,
            entries,
        })
    }

    pub fn from_rows(field: &FieldSpec, rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Matrix::new(field, rows.len(), cols, rows.concat())
    }

    pub(crate) fn from_raw(field: &FieldSpec, rows: usize, cols: usize, entries: Vec<u8>) -> Self {
        debug_assert_eq!(entries.len(), rows * cols);
        Matrix {
            field: field.clone(),
            rows,
            cols,
            entries,
        }
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }

    pub(crate) fn into_entries(self) -> Vec<u8> {
        self.entries
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: u8) {
        assert!(u32::from(v) < self.field.q());
        self.entries[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u8] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    /// Reduced row echelon form and rank. Zero rows trail; the shape is unchanged.
    pub fn rref(&self) -> (Matrix, usize) {
        let mut out = self.clone();
        let rank = rref_in_place(&self.field, &mut out.entries, self.rows, self.cols).len();
        (out, rank)
    }

    pub fn rank(&self) -> usize {
        let mut scratch = self.entries.clone();
        rref_in_place(&self.field, &mut scratch, self.rows, self.cols).len()
    }

    pub fn mul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows || self.field != rhs.field {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let f = &self.field;
        let mut out = vec![0u8; self.rows * rhs.cols];
        for r in 0..self.rows {
            let dst = &mut out[r * rhs.cols..(r + 1) * rhs.cols];
            for (i, &a) in self.row(r).iter().enumerate() {
                if a != 0 {
                    f.axpy_neg(dst, f.neg(a), rhs.row(i));
                }
            }
        }
        Ok(Matrix::from_raw(f, self.rows, rhs.cols, out))
    }

    /// Inverse of a square matrix, or `None` when singular.
    pub fn inverse(&self) -> Option<Matrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let w = 2 * n;
        let mut aug = vec![0u8; n * w];
        for r in 0..n {
            aug[r * w..r * w + n].copy_from_slice(self.row(r));
            aug[r * w + n + r] = 1;
        }
        let pivots = rref_in_place(&self.field, &mut aug, n, w);
        if pivots.len() < n || pivots.iter().enumerate().any(|(i, &p)| i != p) {
            return None;
        }
        let mut inv = Vec::with_capacity(n * n);
        for r in 0..n {
            inv.extend_from_slice(&aug[r * w + n..(r + 1) * w]);
        }
        Some(Matrix::from_raw(&self.field, n, n, inv))
    }

    pub fn is_invertible(&self) -> bool {
        self.rows == self.cols && self.rank() == self.rows
    }
}

/// Row-reduces `data` (`rows x cols`, row-major) in place to RREF and returns the pivot
/// columns. Pivot search scans columns left to right, taking the first row at or below
/// the current one with a nonzero entry.
pub(crate) fn rref_in_place(field: &FieldSpec, data: &mut [u8], rows: usize, cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(src) = (r..rows).find(|&i| data[i * cols + c] != 0) else {
            continue;
        };
        if src != r {
            for j in 0..cols {
                data.swap(src * cols + j, r * cols + j);
            }
        }
        let lead = data[r * cols + c];
        if lead != 1 {
            field.scale(&mut data[r * cols..(r + 1) * cols], field.inv(lead));
        }
        let (before, rest) = data.split_at_mut(r * cols);
        let (pivot_row, after) = rest.split_at_mut(cols);
        for other in before.chunks_exact_mut(cols).chain(after.chunks_exact_mut(cols)) {
            let factor = other[c];
            if factor != 0 {
                field.axpy_neg(other, factor, pivot_row);
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// A uniformly random element of `GL(n, q)`, deterministic in `seed`.
pub fn random_invertible(field: &FieldSpec, n: usize, seed: u64) -> Matrix {
    assert!(n >= 1, "random_invertible needs n >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let entries: Vec<u8> = (0..n * n).map(|_| rng.gen_range(0..field.q()) as u8).collect();
        let m = Matrix::from_raw(field, n, n, entries);
        if m.is_invertible() {
            return m;
        }
    }
}
