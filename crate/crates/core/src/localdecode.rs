//! The local-decoding system for the `t`-vs-`k` incidence matrix.
//!
//! Fix a `t`-subspace `V` and a `(t+k)`-subspace `W ⊇ V`. Giving every `k`-subspace
//! `U ⊆ W` the coefficient `f(dim(U ∩ V))` produces `m e_V` as an integer combination
//! of rows exactly when `D f = (0, .., 0, m)^T`, where `D` is the upper-triangular
//! `(t+1) x (t+1)` matrix
//!
//! ```text
//! d[l][j] = [t-l, t-j]_q [k-t+l, j]_q q^((k-t-j+l)(t-j)),   0 <= l <= j <= t.
//! ```
//!
//! Row `t` says the `[k, k-t]_q` subspaces through `V` carry `m` in total; row `l < t`
//! says every other `t`-subspace `V'` with `dim(V ∩ V') = l` receives zero. Taking
//! `m = det D` makes Cramer's rule give integral `f(j) = det D_j`, with `D_j` equal to
//! `D` after replacing column `j` by `(0, .., 0, 1)^T`.
//!
//! The second half of the module holds brute-force oracles for the subspace count
//! behind the rows of `D`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gf::FieldSpec;
use crate::grassmann::{
    enumerate_subspaces_capped, extensions, subspaces_within, GrassmannIndex, SubspaceBasis,
    ENUMERATION_CAP,
};
use crate::qcount::{gaussian, q_binomial, qpow};
use crate::report::{ser_big, ser_big_matrix, ser_big_opt, ser_big_vec};

/// Default cap on `[k+t, k]_q`, the number of rows a certificate touches.
pub const CERTIFICATE_CAP: u64 = 1_000_000;

fn check_tk(t: usize, k: usize) -> Result<()> {
    if t == 0 {
        return Err(Error::InvalidParameters("t = 0 has no decoding system; need t >= 1".into()));
    }
    if t > k {
        return Err(Error::InvalidParameters(format!("need t <= k, got t={t} k={k}")));
    }
    Ok(())
}

/// `d[l][j]`; zero below the diagonal and wherever a Gaussian factor vanishes.
pub fn decode_entry(q: u32, t: usize, k: usize, l: usize, j: usize) -> BigInt {
    let (t, k, l, j) = (t as i64, k as i64, l as i64, j as i64);
    let a = q_binomial(t - l, t - j, q);
    let b = q_binomial(k - t + l, j, q);
    if a.is_zero() || b.is_zero() {
        return BigInt::zero();
    }
    let e = (k - t - j + l) * (t - j);
    debug_assert!(e >= 0);
    a * b * qpow(q, e as u64)
}

pub fn build_d(q: u32, t: usize, k: usize) -> Result<Vec<Vec<BigInt>>> {
    check_tk(t, k)?;
    Ok((0..=t)
        .map(|l| (0..=t).map(|j| decode_entry(q, t, k, l, j)).collect())
        .collect())
}

/// Determinant by Bareiss fraction-free elimination (row swaps on zero pivots).
pub fn bareiss_det(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a: Vec<Vec<BigInt>> = m.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for i in 0..n - 1 {
        if a[i][i].is_zero() {
            let Some(r) = (i + 1..n).find(|&r| !a[r][i].is_zero()) else {
                return BigInt::zero();
            };
            a.swap(i, r);
            sign = -sign;
        }
        for r in i + 1..n {
            for c in i + 1..n {
                let v = &a[r][c] * &a[i][i] - &a[r][i] * &a[i][c];
                let (quot, rem) = v.div_rem(&prev);
                debug_assert!(rem.is_zero(), "Bareiss step must divide exactly");
                a[r][c] = quot;
            }
            a[r][i] = BigInt::zero();
        }
        prev = a[i][i].clone();
    }
    sign * &a[n - 1][n - 1]
}

fn replace_column(d: &[Vec<BigInt>], j: usize) -> Vec<Vec<BigInt>> {
    let last = d.len() - 1;
    d.iter()
        .enumerate()
        .map(|(l, row)| {
            let mut row = row.clone();
            row[j] = BigInt::from(u8::from(l == last));
            row
        })
        .collect()
}

fn mat_vec(d: &[Vec<BigInt>], f: &[BigInt]) -> Vec<BigInt> {
    d.iter()
        .map(|row| row.iter().zip(f).map(|(a, b)| a * b).sum())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DecodeSystem {
    pub q: u32,
    pub t: usize,
    pub k: usize,
    #[serde(rename = "D", serialize_with = "ser_big_matrix")]
    pub d: Vec<Vec<BigInt>>,
    #[serde(serialize_with = "ser_big")]
    pub m: BigInt,
    #[serde(serialize_with = "ser_big_vec")]
    pub f: Vec<BigInt>,
    #[serde(serialize_with = "ser_big_vec")]
    pub dj_dets: Vec<BigInt>,
}

impl DecodeSystem {
    /// `f(j)` for the intersection dimension `j`.
    pub fn coefficient(&self, j: usize) -> &BigInt {
        &self.f[j]
    }
}

/// Builds `D`, takes `m = det D`, and solves for `f` by Cramer's rule.
///
/// `det D` is computed both as the diagonal product and by Bareiss elimination; each
/// `det D_j` is computed by Bareiss and the result is cross-checked by exact
/// back-substitution, `D f = m e_t`, and `f(t) [k, k-t]_q = m`.
pub fn solve_coefficients(q: u32, t: usize, k: usize) -> Result<DecodeSystem> {
    let d = build_d(q, t, k)?;
    if let Some(i) = (0..=t).find(|&i| d[i][i].is_zero()) {
        return Err(Error::DegenerateSystem(i));
    }
    let diag: BigInt = (0..=t).map(|i| &d[i][i]).product();
    let m = bareiss_det(&d);
    assert_eq!(m, diag, "diagonal product and Bareiss disagree on det D");

    let dj_dets: Vec<BigInt> = (0..=t).map(|j| bareiss_det(&replace_column(&d, j))).collect();
    let f = dj_dets.clone();

    let mut back = vec![BigInt::zero(); t + 1];
    for l in (0..=t).rev() {
        let rhs = if l == t { m.clone() } else { BigInt::zero() };
        let partial: BigInt = (l + 1..=t).map(|j| &d[l][j] * &back[j]).sum();
        let (quot, rem) = (rhs - partial).div_rem(&d[l][l]);
        assert!(rem.is_zero(), "back-substitution left a remainder at row {l}");
        back[l] = quot;
    }
    assert_eq!(back, f, "Cramer and back-substitution disagree");

    let mut target = vec![BigInt::zero(); t + 1];
    target[t] = m.clone();
    assert_eq!(mat_vec(&d, &f), target, "D f != m e_t");
    assert_eq!(&f[t] * gaussian(k, k - t, q), m, "f(t) [k, k-t] != m");

    Ok(DecodeSystem { q, t, k, d, m, f, dj_dets })
}

/// The `t` vanishing conditions, evaluated straight from the entry formula with the
/// solved coefficients.
pub fn check_cond2(q: u32, t: usize, k: usize) -> Result<bool> {
    let sys = solve_coefficients(q, t, k)?;
    Ok((0..t).all(|l| {
        (l..=t)
            .map(|j| {
                let (ti, ki, li, ji) = (t as i64, k as i64, l as i64, j as i64);
                let a = q_binomial(ti - li, ti - ji, q);
                let b = q_binomial(ki - ti + li, ji, q);
                let e = (ki - ti - ji + li) * (ti - ji);
                if a.is_zero() || b.is_zero() {
                    BigInt::zero()
                } else {
                    &sys.f[j] * a * b * qpow(q, e as u64)
                }
            })
            .sum::<BigInt>()
            .is_zero()
    }))
}

/// A short integer combination of rows of the incidence matrix equal to `m e_V`.
#[derive(Clone, Debug)]
pub struct CoefficientCertificate {
    pub decoded_column: SubspaceBasis,
    pub envelope: SubspaceBasis,
    /// `(U, f(dim(U ∩ V)))` for every `k`-subspace `U ⊆ W`, canonical order.
    pub coefficients: Vec<(SubspaceBasis, BigInt)>,
    pub m: BigInt,
    pub l1_norm: BigInt,
}

/// `V` plus the `k` lowest-index standard vectors off the pivot columns of `V`.
pub fn canonical_envelope(v: &SubspaceBasis, k: usize) -> Result<SubspaceBasis> {
    let n = v.ambient_dim();
    if v.dim() + k > n {
        return Err(Error::InvalidParameters(format!(
            "need n >= t + k, got n={n} t={} k={k}",
            v.dim()
        )));
    }
    let mut data = v.entries().to_vec();
    for c in (0..n).filter(|c| !v.pivots().contains(c)).take(k) {
        let start = data.len();
        data.resize(start + n, 0);
        data[start + c] = 1;
    }
    Ok(SubspaceBasis::span(v.field(), n, &data))
}

pub fn decode_certificate(v: &SubspaceBasis, k: usize) -> Result<CoefficientCertificate> {
    decode_certificate_capped(v, k, CERTIFICATE_CAP)
}

pub fn decode_certificate_capped(v: &SubspaceBasis, k: usize, cap: u64) -> Result<CoefficientCertificate> {
    let t = v.dim();
    let q = v.field().q();
    let sys = solve_coefficients(q, t, k)?;
    let w = canonical_envelope(v, k)?;
    let rows = gaussian(t + k, k, q);
    if rows > BigInt::from(cap) {
        return Err(Error::too_large("certificate support", rows, cap));
    }
    let coefficients: Vec<(SubspaceBasis, BigInt)> = subspaces_within(&w, k, cap)?
        .into_iter()
        .map(|u| {
            let j = u.meet_dim(v);
            (u, sys.f[j].clone())
        })
        .collect();
    let l1_norm: BigInt = coefficients.iter().map(|(_, c)| c.abs()).sum();
    let max_f = sys.f.iter().map(Signed::abs).max().expect("t + 1 coefficients");
    assert!(l1_norm <= rows * max_f, "l1 norm exceeds support size times max |f|");
    Ok(CoefficientCertificate {
        decoded_column: v.clone(),
        envelope: w,
        coefficients,
        m: sys.m,
        l1_norm,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CertificateCheck {
    pub t_subspaces_checked: u64,
    #[serde(serialize_with = "ser_big")]
    pub value_at_target: BigInt,
    pub nonzero_elsewhere: u64,
    pub ok: bool,
}

/// Sums the certificate's rows over every `t`-subspace `V'` of `F_q^n` directly, by
/// containment tests, and checks the result is `m` at `V` and 0 elsewhere.
pub fn verify_certificate(cert: &CoefficientCertificate) -> Result<CertificateCheck> {
    let v = &cert.decoded_column;
    let (n, t) = (v.ambient_dim(), v.dim());
    let columns = enumerate_subspaces_capped(n, t, v.field(), ENUMERATION_CAP)?;
    let sums: Vec<BigInt> = columns
        .par_iter()
        .map(|col| {
            cert.coefficients
                .iter()
                .filter(|(u, _)| u.includes(col))
                .map(|(_, c)| c)
                .sum()
        })
        .collect();
    let mut value_at_target = BigInt::zero();
    let mut nonzero_elsewhere = 0;
    for (col, s) in columns.iter().zip(&sums) {
        if col == v {
            value_at_target = s.clone();
        } else if !s.is_zero() {
            nonzero_elsewhere += 1;
        }
    }
    Ok(CertificateCheck {
        t_subspaces_checked: columns.len() as u64,
        ok: value_at_target == cert.m && nonzero_elsewhere == 0,
        value_at_target,
        nonzero_elsewhere,
    })
}

/// One inequality `lhs <= rhs`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundLine {
    pub name: String,
    #[serde(serialize_with = "ser_big")]
    pub lhs: BigInt,
    #[serde(serialize_with = "ser_big")]
    pub rhs: BigInt,
    pub ok: bool,
}

impl BoundLine {
    fn new(name: impl Into<String>, lhs: BigInt, rhs: BigInt) -> Self {
        let ok = lhs <= rhs;
        BoundLine { name: name.into(), lhs, rhs, ok }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DetBoundsReport {
    pub q: u32,
    pub t: usize,
    pub k: usize,
    pub lines: Vec<BoundLine>,
    pub ok: bool,
}

/// Number of permutations `π` of `0..n` with every `m[i][π(i)]` nonzero.
pub fn nonzero_generalized_diagonals(m: &[Vec<BigInt>]) -> u64 {
    fn walk(m: &[Vec<BigInt>], row: usize, used: &mut [bool]) -> u64 {
        if row == m.len() {
            return 1;
        }
        let mut total = 0;
        for c in 0..m.len() {
            if !used[c] && !m[row][c].is_zero() {
                used[c] = true;
                total += walk(m, row + 1, used);
                used[c] = false;
            }
        }
        total
    }
    walk(m, 0, &mut vec![false; m.len()])
}

/// Largest `t` for which diagonals are counted by permutation search.
pub const DIAGONAL_T_MAX: usize = 6;

/// The determinant bounds on `D` and every `D_j`, the row-maxima product bound, and
/// the generalized-diagonal count of every `D_j`.
pub fn check_det_bounds(q: u32, t: usize, k: usize) -> Result<DetBoundsReport> {
    if t > DIAGONAL_T_MAX {
        return Err(Error::InvalidParameters(format!(
            "diagonal counting enumerates (t+1)! permutations; need t <= {DIAGONAL_T_MAX}"
        )));
    }
    let sys = solve_coefficients(q, t, k)?;
    let det_bound = qpow(q, (k * (t + 1) * (t + 1)) as u64);
    let mut lines = vec![BoundLine::new("|det D|", sys.m.abs(), det_bound.clone())];
    for (j, dj) in sys.dj_dets.iter().enumerate() {
        lines.push(BoundLine::new(format!("|det D_{j}|"), dj.abs(), det_bound.clone()));
    }
    let row_max: BigInt = sys
        .d
        .iter()
        .map(|row| row.iter().max().expect("nonempty row").clone())
        .product();
    let row_max_bound =
        qpow(2, (k * (t + 1) + 1) as u64) * qpow(q, ((k - t) * t * (t + 1)) as u64);
    lines.push(BoundLine::new("prod_l max_j d[l][j]", row_max, row_max_bound));
    lines.push(BoundLine::new(
        "nonzero diagonals of D",
        BigInt::from(nonzero_generalized_diagonals(&sys.d)),
        BigInt::one(),
    ));
    for j in 0..=t {
        lines.push(BoundLine::new(
            format!("nonzero diagonals of D_{j}"),
            BigInt::from(nonzero_generalized_diagonals(&replace_column(&sys.d, j))),
            qpow(2, t as u64),
        ));
    }
    let ok = lines.iter().all(|l| l.ok);
    Ok(DetBoundsReport { q, t, k, lines, ok })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct C3Report {
    pub q: u32,
    pub t: usize,
    pub k: usize,
    #[serde(serialize_with = "ser_big")]
    pub m: BigInt,
    #[serde(serialize_with = "ser_big_opt")]
    pub l1_norm: Option<BigInt>,
    #[serde(serialize_with = "ser_big_opt")]
    pub exact_c3: Option<BigInt>,
    /// `q^{2k(t+1)^2}`
    #[serde(serialize_with = "ser_big")]
    pub bound: BigInt,
    pub ok: Option<bool>,
}

/// `max{m, ||γ||_1}` for the canonical certificate, against `q^{2k(t+1)^2}`.
///
/// The norm does not depend on `n`, so it is taken at `n = t + k` where `W` is the
/// whole space. When `[k+t, k]_q` exceeds the cap only the bound is returned.
pub fn c3_bound(q: u32, t: usize, k: usize) -> Result<C3Report> {
    c3_bound_capped(q, t, k, CERTIFICATE_CAP)
}

pub fn c3_bound_capped(q: u32, t: usize, k: usize, cap: u64) -> Result<C3Report> {
    let sys = solve_coefficients(q, t, k)?;
    let bound = qpow(q, (2 * k * (t + 1) * (t + 1)) as u64);
    let field = FieldSpec::new(q)?;
    let v = GrassmannIndex::new(&field, t + k, t)?.unrank(0);
    let (l1_norm, exact_c3, ok) = match decode_certificate_capped(&v, k, cap) {
        Ok(cert) => {
            let exact = (&cert.l1_norm).max(&sys.m).clone();
            let ok = exact <= bound;
            (Some(cert.l1_norm), Some(exact), Some(ok))
        }
        Err(Error::TooLarge { .. }) => (None, None, None),
        Err(e) => return Err(e),
    };
    Ok(C3Report { q, t, k, m: sys.m, l1_norm, exact_c3, bound, ok })
}

// ---------------------------------------------------------------------------
// Counting oracles
// ---------------------------------------------------------------------------

fn pair_params(v1: &SubspaceBasis, v2: &SubspaceBasis, k: usize, j: usize) -> Result<(usize, usize)> {
    if v1.dim() != v2.dim() {
        return Err(Error::DimensionMismatch(format!(
            "V1 has dimension {}, V2 has dimension {}",
            v1.dim(),
            v2.dim()
        )));
    }
    let t = v1.dim();
    let l = crate::grassmann::intersect_dim(v1, v2)?;
    if l >= t {
        return Err(Error::DimensionMismatch("V1 and V2 must be distinct".into()));
    }
    if j < l || j > t || k < t || k > v1.ambient_dim() {
        return Err(Error::DimensionMismatch(format!(
            "need l={l} <= j={j} <= t={t} <= k={k} <= n"
        )));
    }
    Ok((t, l))
}

/// `q^{(k-t-j+l)(t-j)} [t-l, j-l]_q [n-2t+l, k-t-j+l]_q`: the number of `k`-subspaces
/// `U ⊇ V1` with `dim(U ∩ V2) = j`, where `l = dim(V1 ∩ V2) < t`.
pub fn lemma2_formula(q: u32, n: usize, t: usize, k: usize, l: usize, j: usize) -> BigInt {
    let (n, t, k, l, j) = (n as i64, t as i64, k as i64, l as i64, j as i64);
    let top = k - t - j + l;
    if top < 0 {
        return BigInt::zero();
    }
    qpow(q, (top * (t - j)) as u64) * q_binomial(t - l, j - l, q) * q_binomial(n - 2 * t + l, top, q)
}

pub fn lemma2_count(v1: &SubspaceBasis, v2: &SubspaceBasis, k: usize, j: usize) -> Result<BigInt> {
    let (t, l) = pair_params(v1, v2, k, j)?;
    Ok(lemma2_formula(v1.field().q(), v1.ambient_dim(), t, k, l, j))
}

/// The same count by filtering every `k`-subspace of `F_q^n`.
pub fn lemma2_count_bruteforce(v1: &SubspaceBasis, v2: &SubspaceBasis, k: usize, j: usize) -> Result<BigInt> {
    pair_params(v1, v2, k, j)?;
    let all = enumerate_subspaces_capped(v1.ambient_dim(), k, v1.field(), ENUMERATION_CAP)?;
    Ok(BigInt::from(
        all.iter()
            .filter(|u| u.includes(v1) && u.meet_dim(v2) == j)
            .count(),
    ))
}

fn product(range: std::ops::Range<usize>, f: impl Fn(usize) -> BigInt) -> BigInt {
    range.map(f).product()
}

/// Retraces the two-stage count for one `(V1, V2, k, j)` by enumeration.
///
/// With `Y = V1 + V2`, every such `U` meets `Y` in a `(t+j-l)`-subspace `Z ⊇ V1` with
/// `dim(Z ∩ V2) = j`. The number of such `Z` must match the ordered-basis ratio
/// `N1/N2 = [t-l, j-l]_q`, and every `Z` must have exactly
/// `N3/N4 = q^{(k-t-j+l)(t-j)} [n-2t+l, k-t-j+l]_q` extensions `U` with `U ∩ Y = Z`.
pub fn lemma2_intermediates_check(
    v1: &SubspaceBasis,
    v2: &SubspaceBasis,
    k: usize,
    j: usize,
) -> Result<bool> {
    let (t, l) = pair_params(v1, v2, k, j)?;
    let q = v1.field().q();
    let n = v1.ambient_dim();
    let z_dim = t + j - l;
    let y_dim = 2 * t - l;
    let y = v1.sum(v2)?;
    if y.dim() != y_dim {
        return Ok(false);
    }
    let qp = |e: usize| qpow(q, e as u64);

    let n1 = product(0..j - l, |i| qp(y_dim) - qp(t + i));
    let n2 = product(0..j - l, |i| qp(z_dim) - qp(t + i));
    let (z_formula, rem) = n1.div_rem(&n2);
    if !rem.is_zero() || z_formula != gaussian(t - l, j - l, q) {
        return Ok(false);
    }
    let zs: Vec<SubspaceBasis> = subspaces_within(&y, z_dim, ENUMERATION_CAP)?
        .into_iter()
        .filter(|z| z.includes(v1) && z.meet_dim(v2) == j)
        .collect();
    if BigInt::from(zs.len()) != z_formula {
        return Ok(false);
    }

    if k < z_dim {
        return Ok(lemma2_formula(q, n, t, k, l, j).is_zero());
    }
    let ext = k - z_dim;
    let n3 = product(0..ext, |i| qp(n) - qp(y_dim + i));
    let n4 = product(0..ext, |i| qp(k) - qp(z_dim + i));
    let (u_formula, rem) = n3.div_rem(&n4);
    let closed = qp((k + l - t - j) * (t - j))
        * q_binomial(n as i64 - y_dim as i64, ext as i64, q);
    if !rem.is_zero() || u_formula != closed {
        return Ok(false);
    }
    for z in &zs {
        let hits = extensions(z, k)?.iter().filter(|u| u.meet_dim(&y) == z_dim).count();
        if BigInt::from(hits) != u_formula {
            return Ok(false);
        }
    }
    Ok(&z_formula * &u_formula == lemma2_formula(q, n, t, k, l, j))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Lemma2Summary {
    pub q: u32,
    pub n: usize,
    pub t: usize,
    /// pairs `(V1, V2)` of distinct `t`-subspaces examined
    pub pairs: u64,
    /// individual `(V1, V2, k, j)` count comparisons
    pub comparisons: u64,
    /// `(V1, V2, k)` triples whose counts summed over `j` were compared with `[n-t, k-t]_q`
    pub sum_checks: u64,
    /// `(V1, V2, k, j)` cases retraced through the two-stage count
    pub intermediate_checks: u64,
    /// counts observed per `(l, k, j)`: every pair in a class must agree
    pub classes: BTreeMap<String, String>,
    pub failures: Vec<String>,
}

impl Lemma2Summary {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Compares the closed-form count with enumeration for every ordered pair of
/// distinct `t`-subspaces of `F_q^n` and every `t <= k <= k_max`, `l <= j <= t`; also
/// checks that the counts over `j` sum to `[n-t, k-t]_q`. The two-stage retracing
/// runs for every pair whose first entry is the first `t`-subspace in canonical order,
/// which meets every `GL(n, q)` orbit of pairs.
pub fn check_lemma2_grid(field: &FieldSpec, n: usize, t: usize, k_max: usize) -> Result<Lemma2Summary> {
    let q = field.q();
    let lines = enumerate_subspaces_capped(n, t, field, ENUMERATION_CAP)?;
    let ks: Vec<usize> = (t..=k_max.min(n)).collect();

    struct Partial {
        pairs: u64,
        comparisons: u64,
        sum_checks: u64,
        intermediate_checks: u64,
        failures: Vec<String>,
    }

    let partials: Vec<Partial> = lines
        .par_iter()
        .enumerate()
        .map(|(i1, v1)| -> Result<Partial> {
            let mut p = Partial { pairs: 0, comparisons: 0, sum_checks: 0, intermediate_checks: 0, failures: Vec::new() };
            let exts: Vec<Vec<SubspaceBasis>> =
                ks.iter().map(|&k| extensions(v1, k)).collect::<Result<_>>()?;
            for (i2, v2) in lines.iter().enumerate() {
                if i1 == i2 {
                    continue;
                }
                p.pairs += 1;
                let l = v1.meet_dim(v2);
                for (ki, &k) in ks.iter().enumerate() {
                    let mut hist = vec![0u64; t + 1];
                    for u in &exts[ki] {
                        hist[u.meet_dim(v2)] += 1;
                    }
                    if hist[..l].iter().any(|&h| h != 0) {
                        p.failures.push(format!("pair ({i1},{i2}) k={k}: dim(U ∩ V2) below l"));
                    }
                    let mut total = BigInt::zero();
                    for (j, &h) in hist.iter().enumerate().skip(l) {
                        let expected = lemma2_formula(q, n, t, k, l, j);
                        p.comparisons += 1;
                        if BigInt::from(h) != expected {
                            p.failures.push(format!(
                                "pair ({i1},{i2}) l={l} k={k} j={j}: enumerated {h}, formula {expected}"
                            ));
                        }
                        total += expected;
                        if i1 == 0 {
                            p.intermediate_checks += 1;
                            if !lemma2_intermediates_check(v1, v2, k, j)? {
                                p.failures.push(format!(
                                    "pair ({i1},{i2}) l={l} k={k} j={j}: two-stage count mismatch"
                                ));
                            }
                        }
                    }
                    p.sum_checks += 1;
                    if total != gaussian(n - t, k - t, q) {
                        p.failures.push(format!("pair ({i1},{i2}) k={k}: sum over j is {total}"));
                    }
                }
            }
            Ok(p)
        })
        .collect::<Result<_>>()?;

    let mut summary = Lemma2Summary { q, n, t, ..Default::default() };
    for p in partials {
        summary.pairs += p.pairs;
        summary.comparisons += p.comparisons;
        summary.sum_checks += p.sum_checks;
        summary.intermediate_checks += p.intermediate_checks;
        summary.failures.extend(p.failures);
    }
    for l in 0..t {
        for &k in &ks {
            for j in l..=t {
                summary.classes.insert(
                    format!("l={l} k={k} j={j}"),
                    lemma2_formula(q, n, t, k, l, j).to_string(),
                );
            }
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::make_field;
    use crate::grassmann::enumerate_subspaces;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    /// Independent determinant by cofactor expansion along the first row.
    fn laplace_det(m: &[Vec<BigInt>]) -> BigInt {
        let n = m.len();
        if n == 0 {
            return BigInt::one();
        }
        let mut total = BigInt::zero();
        for c in 0..n {
            if m[0][c].is_zero() {
                continue;
            }
            let minor: Vec<Vec<BigInt>> = m[1..]
                .iter()
                .map(|row| row.iter().enumerate().filter(|&(i, _)| i != c).map(|(_, x)| x.clone()).collect())
                .collect();
            let term = &m[0][c] * laplace_det(&minor);
            if c % 2 == 0 {
                total += term;
            } else {
                total -= term;
            }
        }
        total
    }

    #[test]
    fn worked_system() {
        let d = build_d(2, 1, 2).unwrap();
        assert_eq!(d, vec![ints(&[2, 1]), ints(&[0, 3])]);
        let sys = solve_coefficients(2, 1, 2).unwrap();
        assert_eq!(sys.m, BigInt::from(6));
        assert_eq!(sys.f, ints(&[-1, 2]));
        assert_eq!(sys.dj_dets, sys.f);
    }

    #[test]
    fn entries_match_direct_evaluation() {
        // (q, t, k) = (2, 2, 3), by hand from the entry formula:
        // d00 = [2,2][1,0] 2^{1*2} = 4     d01 = [2,1][1,1] 2^{0} = 3   d02 = [2,0][1,2] = 0
        // d11 = [1,1][2,1] 2^{1} = 6       d12 = [1,0][2,2] 2^{0} = 1
        // d22 = [0,0][3,2] = 7
        let d = build_d(2, 2, 3).unwrap();
        assert_eq!(d, vec![ints(&[4, 3, 0]), ints(&[0, 6, 1]), ints(&[0, 0, 7])]);
        for (q, t, k) in [(2, 3, 5), (3, 2, 4), (5, 1, 3)] {
            let d = build_d(q, t, k).unwrap();
            assert_eq!(d[t][t], gaussian(k, t, q));
            for l in 0..=t {
                for j in 0..l {
                    assert!(d[l][j].is_zero());
                }
                assert!(d[l][l] > BigInt::zero());
                assert_eq!(
                    d[l][l],
                    gaussian(k - t + l, l, q) * qpow(q, ((k - t) * (t - l)) as u64)
                );
            }
        }
    }

    #[test]
    fn bareiss_matches_laplace() {
        let samples = [
            vec![ints(&[0, 1]), ints(&[1, 3])],
            vec![ints(&[2, -1, 0]), ints(&[4, 3, 5]), ints(&[-7, 1, 2])],
            vec![ints(&[0, 0, 1]), ints(&[0, 1, 0]), ints(&[1, 0, 0])],
            vec![ints(&[1, 2, 3]), ints(&[2, 4, 6]), ints(&[0, 1, 1])],
            vec![ints(&[3, 1, 4, 1]), ints(&[5, 9, 2, 6]), ints(&[5, 3, 5, 8]), ints(&[9, 7, 9, 3])],
        ];
        for m in &samples {
            assert_eq!(bareiss_det(m), laplace_det(m));
        }
        for (q, t, k) in [(2, 3, 4), (3, 3, 6), (2, 4, 8)] {
            let d = build_d(q, t, k).unwrap();
            assert_eq!(bareiss_det(&d), laplace_det(&d));
            for j in 0..=t {
                let dj = replace_column(&d, j);
                assert_eq!(bareiss_det(&dj), laplace_det(&dj));
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(solve_coefficients(2, 0, 3).is_err());
        assert!(solve_coefficients(2, 3, 2).is_err());
        assert!(build_d(2, 0, 1).is_err());
    }

    #[test]
    fn grid_identities() {
        for q in [2, 3] {
            for t in 1..=3 {
                for k in t..=t + 4 {
                    let sys = solve_coefficients(q, t, k).unwrap();
                    assert_eq!(&sys.f[t] * gaussian(k, t, q), sys.m);
                    assert!(check_cond2(q, t, k).unwrap());
                }
            }
        }
        assert!(check_cond2(2, 1, 2).unwrap());
        assert!(check_cond2(2, 2, 3).unwrap());
        assert!(check_cond2(3, 1, 3).unwrap());
    }

    #[test]
    fn certificate_on_fano_plane() {
        let f2 = make_field(2).unwrap();
        for v in enumerate_subspaces(3, 1, &f2).unwrap() {
            let cert = decode_certificate(&v, 2).unwrap();
            assert_eq!(cert.envelope, SubspaceBasis::full(&f2, 3));
            assert_eq!(cert.coefficients.len(), 7);
            let through: Vec<_> = cert.coefficients.iter().filter(|(u, _)| u.includes(&v)).collect();
            assert_eq!(through.len(), 3);
            assert!(through.iter().all(|(_, c)| *c == BigInt::from(2)));
            assert_eq!(cert.coefficients.iter().filter(|(_, c)| *c == BigInt::from(-1)).count(), 4);
            assert_eq!(cert.m, BigInt::from(6));
            assert_eq!(cert.l1_norm, BigInt::from(10));
            let check = verify_certificate(&cert).unwrap();
            assert!(check.ok);
            assert_eq!(check.t_subspaces_checked, 7);
        }
    }

    #[test]
    fn certificates_sum_to_m_e_v() {
        let f2 = make_field(2).unwrap();
        for (n, t, k) in [(4, 1, 2), (5, 2, 3), (5, 1, 3)] {
            for v in enumerate_subspaces(n, t, &f2).unwrap().iter().step_by(11) {
                let cert = decode_certificate(v, k).unwrap();
                assert!(cert.envelope.includes(v));
                assert_eq!(cert.envelope.dim(), t + k);
                let check = verify_certificate(&cert).unwrap();
                assert!(check.ok, "n={n} t={t} k={k} v={v:?}: {check:?}");
            }
        }
        let f3 = make_field(3).unwrap();
        let v = enumerate_subspaces(4, 1, &f3).unwrap().remove(5);
        assert!(verify_certificate(&decode_certificate(&v, 2).unwrap()).unwrap().ok);
    }

    #[test]
    fn certificate_needs_room() {
        let f2 = make_field(2).unwrap();
        let v = enumerate_subspaces(3, 2, &f2).unwrap().remove(0);
        assert!(decode_certificate(&v, 2).is_err());
        let v = enumerate_subspaces(6, 2, &f2).unwrap().remove(0);
        assert!(matches!(
            decode_certificate_capped(&v, 3, 100),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn lemma2_examples() {
        let f2 = make_field(2).unwrap();
        let lines = enumerate_subspaces(4, 1, &f2).unwrap();
        let (v1, v2) = (&lines[0], &lines[1]);
        assert_eq!(lemma2_count(v1, v2, 2, 0).unwrap(), BigInt::from(6));
        assert_eq!(lemma2_count(v1, v2, 2, 1).unwrap(), BigInt::from(1));
        assert_eq!(lemma2_count_bruteforce(v1, v2, 2, 0).unwrap(), BigInt::from(6));
        assert_eq!(lemma2_count_bruteforce(v1, v2, 2, 1).unwrap(), BigInt::from(1));
        assert!(lemma2_count(v1, v1, 2, 1).is_err());
        assert!(lemma2_count(v1, v2, 2, 2).is_err());
        let plane = enumerate_subspaces(4, 2, &f2).unwrap().remove(3);
        assert!(matches!(lemma2_count(v1, &plane, 2, 0), Err(Error::DimensionMismatch(_))));
        assert!(lemma2_intermediates_check(v1, v2, 2, 0).unwrap());
        assert!(lemma2_intermediates_check(v1, v2, 3, 1).unwrap());
    }

    #[test]
    fn lemma2_single_pairs_bruteforce() {
        let f3 = make_field(3).unwrap();
        let planes = enumerate_subspaces(4, 2, &f3).unwrap();
        let v1 = &planes[0];
        for v2 in planes.iter().skip(1).step_by(17) {
            let l = v1.meet_dim(v2);
            for k in 2..=4 {
                for j in l..=2 {
                    assert_eq!(
                        lemma2_count(v1, v2, k, j).unwrap(),
                        lemma2_count_bruteforce(v1, v2, k, j).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn lemma2_small_grid() {
        let f2 = make_field(2).unwrap();
        let s = check_lemma2_grid(&f2, 4, 1, 4).unwrap();
        assert!(s.ok(), "{:?}", s.failures);
        assert_eq!(s.pairs, 15 * 14);
        let s = check_lemma2_grid(&f2, 5, 2, 4).unwrap();
        assert!(s.ok(), "{:?}", s.failures);
    }

    #[test]
    fn det_bound_examples() {
        let r = check_det_bounds(2, 1, 2).unwrap();
        assert!(r.ok);
        let find = |name: &str| r.lines.iter().find(|l| l.name == name).unwrap().clone();
        let det = find("|det D|");
        assert_eq!((det.lhs, det.rhs), (BigInt::from(6), BigInt::from(256)));
        let rows = find("prod_l max_j d[l][j]");
        assert_eq!((rows.lhs, rows.rhs), (BigInt::from(6), BigInt::from(128)));
        let d0 = find("nonzero diagonals of D_0");
        assert_eq!((d0.lhs, d0.rhs), (BigInt::from(1), BigInt::from(2)));
        assert!(check_det_bounds(2, 7, 8).is_err());
    }

    #[test]
    fn diagonal_counts() {
        let full = vec![ints(&[1, 1, 1]), ints(&[1, 1, 1]), ints(&[1, 1, 1])];
        assert_eq!(nonzero_generalized_diagonals(&full), 6);
        let tri = vec![ints(&[1, 1, 1]), ints(&[0, 1, 1]), ints(&[0, 0, 1])];
        assert_eq!(nonzero_generalized_diagonals(&tri), 1);
    }

    #[test]
    fn c3_examples() {
        let r = c3_bound(2, 1, 2).unwrap();
        assert_eq!(r.l1_norm, Some(BigInt::from(10)));
        assert_eq!(r.exact_c3, Some(BigInt::from(10)));
        assert_eq!(r.bound, BigInt::from(65536));
        assert_eq!(r.ok, Some(true));
        let r = c3_bound(2, 2, 3).unwrap();
        assert_eq!(r.ok, Some(true));
        let mut prev = BigInt::zero();
        for k in 1..8 {
            let b = c3_bound_capped(2, 1, k, 0).unwrap();
            assert!(b.exact_c3.is_none());
            assert!(b.bound > prev);
            prev = b.bound;
        }
    }
}
