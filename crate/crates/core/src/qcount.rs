//! Exact q-combinatorics: q-integers, q-factorials and Gaussian binomial coefficients.

use std::collections::HashMap;
use std::sync::{LazyLock, RwLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Pow, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// All counts in the library are carried as arbitrary-precision signed integers.
pub type ExactInteger = BigInt;

/// Default cap on the number of terms in [`q_binomial_via_sum`].
pub const SUM_TERMS_CAP: u64 = 1_000_000;

static MEMO: LazyLock<RwLock<HashMap<(i64, i64, u32), BigInt>>> =
    LazyLock::new(|| RwLock::new(HashMap::new()));

/// `q^e` as an exact integer.
pub fn qpow(q: u32, e: u64) -> BigInt {
    Pow::pow(BigInt::from(q), e)
}

/// The q-integer `[n]_q = 1 + q + ... + q^{n-1}`.
pub fn q_integer(n: u64, q: u32) -> BigInt {
    (qpow(q, n) - 1u32) / (q - 1)
}

/// `[n]_q! = [1]_q [2]_q ... [n]_q`, with `[0]_q! = 1`.
pub fn q_factorial(n: u64, q: u32) -> BigInt {
    assert!(q >= 2, "q must be at least 2");
    (1..=n).fold(BigInt::one(), |acc, i| acc * q_integer(i, q))
}

/// The Gaussian coefficient `[n k]_q`: the number of `k`-subspaces of `F_q^n`.
///
/// Zero whenever `k < 0` or `k > n`, which lets formulas with shifted arguments be
/// written verbatim.
pub fn q_binomial(n: i64, k: i64, q: u32) -> BigInt {
    assert!(q >= 2, "q must be at least 2");
    if k < 0 || k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    if k == 0 {
        return BigInt::one();
    }
    if let Some(v) = MEMO.read().unwrap().get(&(n, k, q)) {
        return v.clone();
    }
    // After step s the accumulator equals [n, s+1]_q, so each division is exact.
    let mut acc = BigInt::one();
    for s in 0..k {
        let num = qpow(q, (n - s) as u64) - 1u32;
        let den = qpow(q, (s + 1) as u64) - 1u32;
        let (quot, rem) = (acc * num).div_rem(&den);
        assert!(rem.is_zero(), "inexact division in q_binomial({n}, {k}, {q})");
        acc = quot;
    }
    MEMO.write().unwrap().insert((n, k, q), acc.clone());
    acc
}

/// `[n k]_q` with natural-number arguments.
pub fn gaussian(n: usize, k: usize, q: u32) -> BigInt {
    q_binomial(n as i64, k as i64, q)
}

/// The ordinary binomial coefficient `C(n, k)`.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(BigInt::one(), |acc, i| acc * (n - i) / (i + 1))
}

/// `[n k]_q` as the sum of `q^{(s_1 + ... + s_k) - k(k+1)/2}` over
/// `1 <= s_1 < ... < s_k <= n`.
///
/// Terms are enumerated one by one, so the cost is `C(n, k)`; calls above
/// [`SUM_TERMS_CAP`] terms are refused.
pub fn q_binomial_via_sum(n: usize, k: usize, q: u32) -> Result<BigInt> {
    q_binomial_via_sum_capped(n, k, q, SUM_TERMS_CAP)
}

pub fn q_binomial_via_sum_capped(n: usize, k: usize, q: u32, cap: u64) -> Result<BigInt> {
    if k > n {
        return Err(Error::InvalidParameters(format!("k = {k} exceeds n = {n}")));
    }
    let terms = binomial(n as u64, k as u64);
    if terms > BigInt::from(cap) {
        return Err(Error::TooManyTerms {
            terms: terms.to_string(),
            cap,
        });
    }
    let offset = k * (k + 1) / 2;
    // Tally how many index sets hit each exponent, then sum once per exponent.
    let mut tally = vec![0u64; k * (n - k) + 1];
    let mut s: Vec<usize> = (1..=k).collect();
    loop {
        let exp = s.iter().sum::<usize>() - offset;
        tally[exp] += 1;
        // Advance to the next k-subset of {1..n} in lexicographic order.
        let Some(i) = (0..k).rev().find(|&i| s[i] < n - (k - 1 - i)) else {
            break;
        };
        s[i] += 1;
        for j in i + 1..k {
            s[j] = s[j - 1] + 1;
        }
    }
    Ok(tally
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(e, &c)| qpow(q, e as u64) * c)
        .sum())
}

/// Lower bound, value and upper bound of `q^{k(n-k)} <= [n k]_q <= C(n,k) q^{k(n-k)}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundsCheck {
    #[serde(serialize_with = "crate::report::ser_big")]
    pub lower: BigInt,
    #[serde(serialize_with = "crate::report::ser_big")]
    pub value: BigInt,
    #[serde(serialize_with = "crate::report::ser_big")]
    pub upper: BigInt,
    pub ok: bool,
}

pub fn check_bounds(n: usize, k: usize, q: u32) -> BoundsCheck {
    assert!(k <= n, "check_bounds needs k <= n");
    let lower = qpow(q, (k * (n - k)) as u64);
    let value = gaussian(n, k, q);
    let upper = binomial(n as u64, k as u64) * &lower;
    let ok = lower <= value && value <= upper;
    BoundsCheck {
        lower,
        value,
        upper,
        ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn q_factorial_values() {
        assert_eq!(q_factorial(0, 2), big(1));
        assert_eq!(q_factorial(3, 2), big(21));
        assert_eq!(q_factorial(2, 3), big(4));
    }

    #[test]
    fn q_binomial_values() {
        for q in [2, 3, 7] {
            for n in 0..6 {
                assert_eq!(q_binomial(n, 0, q), big(1));
                assert_eq!(q_binomial(n, n, q), big(1));
            }
        }
        assert_eq!(q_binomial(4, 2, 2), big(35));
        assert_eq!(q_binomial(3, 1, 2), big(7));
        assert_eq!(q_binomial(3, 4, 2), big(0));
        assert_eq!(q_binomial(3, -1, 2), big(0));
        assert_eq!(q_binomial(-2, 1, 2), big(0));
    }

    #[test]
    fn q_binomial_matches_factorial_quotient() {
        for q in [2, 3, 4, 5] {
            for n in 0..10u64 {
                for k in 0..=n {
                    let quotient =
                        q_factorial(n, q) / (q_factorial(k, q) * q_factorial(n - k, q));
                    assert_eq!(q_binomial(n as i64, k as i64, q), quotient);
                }
            }
        }
    }

    #[test]
    fn via_sum_values() {
        assert_eq!(q_binomial_via_sum(2, 1, 2).unwrap(), big(3));
        assert_eq!(q_binomial_via_sum(4, 2, 2).unwrap(), big(35));
        for n in 0..8 {
            assert_eq!(q_binomial_via_sum(n, n, 5).unwrap(), big(1));
            assert_eq!(q_binomial_via_sum(n, 0, 5).unwrap(), big(1));
        }
    }

    #[test]
    fn via_sum_cap() {
        // C(40, 20) is far above a million.
        assert!(matches!(
            q_binomial_via_sum(40, 20, 2),
            Err(Error::TooManyTerms { .. })
        ));
        assert!(q_binomial_via_sum_capped(6, 3, 2, 19).is_err());
        assert!(q_binomial_via_sum_capped(6, 3, 2, 20).is_ok());
    }

    #[test]
    fn bounds_examples() {
        assert_eq!(
            check_bounds(4, 2, 2),
            BoundsCheck {
                lower: big(16),
                value: big(35),
                upper: big(96),
                ok: true
            }
        );
        let c = check_bounds(7, 0, 3);
        assert_eq!((c.lower, c.value, c.upper, c.ok), (big(1), big(1), big(1), true));
        let c = check_bounds(5, 2, 3);
        assert_eq!(c.lower, big(729));
        assert_eq!(c.upper, big(7290));
        assert!(c.ok);
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(4, 2), big(6));
        assert_eq!(binomial(10, 3), big(120));
        assert_eq!(binomial(3, 5), big(0));
    }

    proptest! {
        #[test]
        fn symmetry_and_pascal(n in 1i64..=12, k_frac in 0.0f64..=1.0, q in 2u32..=5) {
            let k = ((n as f64) * k_frac).round() as i64;
            prop_assert_eq!(q_binomial(n, k, q), q_binomial(n, n - k, q));
            let pascal = q_binomial(n - 1, k - 1, q) + qpow(q, k.max(0) as u64) * q_binomial(n - 1, k, q);
            prop_assert_eq!(q_binomial(n, k, q), pascal);
        }

        #[test]
        fn sum_identity(n in 0usize..=12, k_frac in 0.0f64..=1.0, q in 2u32..=9) {
            let k = ((n as f64) * k_frac).round() as usize;
            prop_assert_eq!(q_binomial_via_sum(n, k, q).unwrap(), gaussian(n, k, q));
        }
    }
}
