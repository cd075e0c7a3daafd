//! Exact evaluation of the parameter bounds fed to the row-sampling theorem, and of
//! the resulting inequality
//!
//! ```text
//! c |A|^{52/5} c1 (c2 c3)^{12/5} log(|A| c2)^8  <=  N  <  |B|
//! ```
//!
//! for the `t`-vs-`k` incidence matrix. `c` is a free parameter here, so
//! "feasible" always means "feasible for the supplied constant". Fractional powers
//! are rounded up to integers and the logarithm is replaced by the bit length, which
//! can only enlarge the left-hand side.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Pow, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::localdecode::solve_coefficients;
use crate::qcount::{gaussian, qpow};
use crate::report::{ser_big, ser_big_opt};

/// Exact values are filled in up to this ambient dimension.
pub const EXACT_N_MAX: usize = 64;

/// Smallest integer `y` with `y^den >= x^num`.
pub fn ceil_pow_ratio(x: &BigInt, num: u32, den: u32) -> BigInt {
    assert!(den >= 1 && *x >= BigInt::zero());
    let target: BigInt = Pow::pow(x, num);
    let mut y = target.nth_root(den);
    if Pow::pow(&y, den) < target {
        y += 1;
    }
    y
}

/// Number of binary digits of `x`; an upper bound on `log2(x)` for `x >= 1`.
pub fn bit_length(x: &BigInt) -> u64 {
    x.bits()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Threshold {
    pub label: String,
    pub bound: usize,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KLPReport {
    pub q: u32,
    pub n: usize,
    pub k: usize,
    pub t: usize,
    #[serde(serialize_with = "ser_big")]
    pub constant: BigInt,
    /// `q^{k(t+1)^2 + t(n-t) + n}`
    #[serde(serialize_with = "ser_big")]
    pub c1_bound: BigInt,
    #[serde(serialize_with = "ser_big")]
    pub c2: BigInt,
    /// `q^{2k(t+1)^2}`
    #[serde(serialize_with = "ser_big")]
    pub c3_bound: BigInt,
    /// `q^{t(n-t)+n} >= [n t]_q`
    #[serde(rename = "A_upper", serialize_with = "ser_big")]
    pub a_upper: BigInt,
    /// `q^{k(n-k)} <= [n k]_q`
    #[serde(rename = "B_lower", serialize_with = "ser_big")]
    pub b_lower: BigInt,
    #[serde(rename = "A_exact", serialize_with = "ser_big_opt")]
    pub a_exact: Option<BigInt>,
    #[serde(rename = "B_exact", serialize_with = "ser_big_opt")]
    pub b_exact: Option<BigInt>,
    #[serde(serialize_with = "ser_big")]
    pub rhs_final: BigInt,
    /// `rhs_final < B_lower`, relative to the supplied constant
    pub feasible: bool,
    /// `q^{12(t+1)n}`
    #[serde(serialize_with = "ser_big")]
    pub block_budget: BigInt,
    /// `block_budget < B_exact`, when `B_exact` is known
    pub budget_below_trivial: Option<bool>,
    pub thresholds: Vec<Threshold>,
    pub log_reading: String,
    pub feasibility_note: String,
}

pub fn klp_report(q: u32, n: usize, k: usize, t: usize, constant: &BigInt) -> Result<KLPReport> {
    if !(1 <= t && t <= k && k <= n) {
        return Err(Error::InvalidParameters(format!("need 1 <= t <= k <= n, got t={t} k={k} n={n}")));
    }
    if *constant < BigInt::one() {
        return Err(Error::InvalidParameters("the constant must be at least 1".into()));
    }
    let tp = (t + 1) * (t + 1);
    let c1_bound = qpow(q, (k * tp + t * (n - t) + n) as u64);
    let c2 = BigInt::one();
    let c3_bound = qpow(q, (2 * k * tp) as u64);
    let a_upper = qpow(q, (t * (n - t) + n) as u64);
    let b_lower = qpow(q, (k * (n - k)) as u64);
    let (a_exact, b_exact) = if n <= EXACT_N_MAX {
        (Some(gaussian(n, t, q)), Some(gaussian(n, k, q)))
    } else {
        (None, None)
    };
    if let Some(a) = &a_exact {
        assert!(*a <= a_upper, "[n t]_q above its upper bound");
    }
    if let Some(b) = &b_exact {
        assert!(*b >= b_lower, "[n k]_q below its lower bound");
    }
    let log_term: BigInt = Pow::pow(BigInt::from(bit_length(&(&a_upper * &c2))), 8u32);
    let rhs_final = constant
        * ceil_pow_ratio(&a_upper, 52, 5)
        * &c1_bound
        * ceil_pow_ratio(&(&c2 * &c3_bound), 12, 5)
        * log_term;
    let feasible = rhs_final < b_lower;
    let block_budget = qpow(q, (12 * (t + 1) * n) as u64);
    let budget_below_trivial = b_exact.as_ref().map(|b| block_budget < *b);
    let thresholds = vec![
        Threshold { label: "k > 12(t+1)".into(), bound: 12 * (t + 1), satisfied: k > 12 * (t + 1) },
        Threshold { label: "k > 12t".into(), bound: 12 * t, satisfied: k > 12 * t },
    ];
    Ok(KLPReport {
        q,
        n,
        k,
        t,
        constant: constant.clone(),
        c1_bound,
        c2,
        c3_bound,
        a_upper,
        b_lower,
        a_exact,
        b_exact,
        rhs_final,
        feasible,
        block_budget,
        budget_below_trivial,
        thresholds,
        log_reading: "(log(|A| c2))^8, evaluated as bit_length(A_upper * c2)^8".into(),
        feasibility_note: "relative to the supplied constant".into(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DivisibilityWitness {
    #[serde(serialize_with = "ser_big")]
    pub m: BigInt,
    #[serde(serialize_with = "ser_big")]
    pub witness: BigInt,
    /// `witness * [k t]_q / [n t]_q` is an integer
    pub integral: bool,
    /// `witness <= c1_bound`
    pub within_c1_bound: bool,
}

/// `m [n t]_q`: multiplying the average row by it gives an integer vector.
pub fn divisibility_witness(q: u32, n: usize, k: usize, t: usize) -> Result<DivisibilityWitness> {
    if !(1 <= t && t <= k && k <= n && n <= EXACT_N_MAX) {
        return Err(Error::InvalidParameters(format!(
            "need 1 <= t <= k <= n <= {EXACT_N_MAX}, got t={t} k={k} n={n}"
        )));
    }
    let m = solve_coefficients(q, t, k)?.m;
    let nt = gaussian(n, t, q);
    let witness = &m * &nt;
    let integral = (&witness * gaussian(k, t, q)).is_multiple_of(&nt);
    let c1 = qpow(q, (k * (t + 1) * (t + 1) + t * (n - t) + n) as u64);
    Ok(DivisibilityWitness { within_c1_bound: witness <= c1, m, witness, integral })
}
