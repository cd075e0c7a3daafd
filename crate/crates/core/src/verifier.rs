//! Checking that a collection of `k`-subspaces is a `t-(n,k,λ)` design over `F_q`,
//! and reading/writing the design file formats.
//!
//! Text format: a header line `q n k`, then the blocks separated by blank lines,
//! each block written as `k` lines of `n` digits (element indices, `0-9a-f`).
//! Lines starting with `#` are ignored. The JSON format carries the same fields:
//! `{"q": .., "n": .., "k": .., "blocks": [["1000", "0100"], ..]}`.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::atomic::{AtomicU32, Ordering};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{make_field, parse_element, FieldSpec};
use crate::grassmann::{map_unchecked, sub_ranks, GrassmannIndex, SubspaceBasis};
use crate::qcount::gaussian;
use crate::Matrix;

/// Default cap on the number of `t`-subspaces a verification may count over.
pub const VERIFY_CAP: u64 = 10_000_000;

/// A list of blocks, all `k`-subspaces of the same `F_q^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DesignCandidate {
    field: FieldSpec,
    n: usize,
    k: usize,
    blocks: Vec<SubspaceBasis>,
}

impl DesignCandidate {
    pub fn new(field: &FieldSpec, n: usize, k: usize, blocks: Vec<SubspaceBasis>) -> Result<Self> {
        if k > n {
            return Err(Error::DimensionMismatch(format!("block dimension {k} exceeds n = {n}")));
        }
        for (i, b) in blocks.iter().enumerate() {
            if b.field() != field || b.ambient_dim() != n || b.dim() != k {
                return Err(Error::DimensionMismatch(format!(
                    "block {i} is a {}-subspace of F_{}^{}, expected a {k}-subspace of F_{}^{n}",
                    b.dim(),
                    b.field().q(),
                    b.ambient_dim(),
                    field.q()
                )));
            }
        }
        Ok(DesignCandidate {
            field: field.clone(),
            n,
            k,
            blocks,
        })
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn blocks(&self) -> &[SubspaceBasis] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// The image of every block under the invertible map `l`.
    pub fn map(&self, l: &Matrix) -> Result<DesignCandidate> {
        if l.rows() != self.n || !l.is_invertible() {
            return Err(Error::SingularMap);
        }
        let blocks = self.blocks.iter().map(|b| map_unchecked(l, b)).collect();
        DesignCandidate::new(&self.field, self.n, self.k, blocks)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.field.q(), self.n, self.k);
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            for line in b.to_lines() {
                out.push_str(&line);
                out.push('\n');
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let file = DesignFile {
            q: self.field.q(),
            n: self.n,
            k: self.k,
            blocks: self.blocks.iter().map(SubspaceBasis::to_lines).collect(),
        };
        serde_json::to_string_pretty(&file).expect("plain data serializes")
    }

    /// Parses either format, detected by a leading `{`.
    pub fn parse(src: &str) -> Result<Self> {
        if src.trim_start().starts_with('{') {
            Self::parse_json(src)
        } else {
            Self::parse_text(src)
        }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse_text(src: &str) -> Result<Self> {
        let mut lines = src
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.starts_with('#'));
        let (hline, header) = lines
            .by_ref()
            .find(|(_, l)| !l.is_empty())
            .ok_or(Error::Parse { line: 1, msg: "missing `q n k` header".into() })?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse { line: hline, msg: format!("bad header: {e}") })?;
        let [q, n, k] = nums[..] else {
            return Err(Error::Parse { line: hline, msg: "header must be `q n k`".into() });
        };
        if k == 0 {
            return Err(Error::Parse { line: hline, msg: "blocks must have k >= 1".into() });
        }
        let field = make_field(q as u32)?;
        let mut groups: Vec<Vec<(usize, &str)>> = Vec::new();
        let mut current = Vec::new();
        for (no, line) in lines {
            if line.is_empty() {
                if !current.is_empty() {
                    groups.push(std::mem::take(&mut current));
                }
            } else {
                current.push((no, line));
            }
        }
        if !current.is_empty() {
            groups.push(current);
        }
        let blocks = groups
            .into_iter()
            .map(|g| {
                if g.len() != k {
                    return Err(Error::Parse {
                        line: g[0].0,
                        msg: format!("block has {} rows, expected {k}", g.len()),
                    });
                }
                let rows = g
                    .iter()
                    .map(|&(no, l)| parse_row(&field, n, l).map_err(|msg| Error::Parse { line: no, msg }))
                    .collect::<Result<Vec<_>>>()?;
                SubspaceBasis::from_rows(&field, n, &rows).map_err(|e| Error::Parse {
                    line: g[0].0,
                    msg: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        DesignCandidate::new(&field, n, k, blocks)
    }

    pub fn parse_json(src: &str) -> Result<Self> {
        let file: DesignFile = serde_json::from_str(src)?;
        let field = make_field(file.q)?;
        let blocks = file
            .blocks
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let rows = b
                    .iter()
                    .map(|l| parse_row(&field, file.n, l))
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|msg| Error::Parse { line: i + 1, msg })?;
                SubspaceBasis::from_rows(&field, file.n, &rows)
            })
            .collect::<Result<Vec<_>>>()?;
        DesignCandidate::new(&field, file.n, file.k, blocks)
    }
}

fn parse_row(field: &FieldSpec, n: usize, line: &str) -> std::result::Result<Vec<u8>, String> {
    let row: Vec<u8> = line
        .chars()
        .map(|c| {
            parse_element(c)
                .filter(|&v| u32::from(v) < field.q())
                .ok_or_else(|| format!("`{c}` is not an element of F_{}", field.q()))
        })
        .collect::<std::result::Result<_, _>>()?;
    if row.len() != n {
        return Err(format!("row `{line}` has {} entries, expected {n}", row.len()));
    }
    Ok(row)
}

#[derive(Serialize, Deserialize)]
struct DesignFile {
    q: u32,
    n: usize,
    k: usize,
    blocks: Vec<Vec<String>>,
}

/// How many `t`-subspaces are covered a given number of times.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoverageBucket {
    pub coverage: u64,
    pub t_subspaces: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub is_design: bool,
    pub t: usize,
    pub lambda: Option<BigInt>,
    pub is_simple: bool,
    pub is_trivial: bool,
    pub failing_t_subspace: Option<SubspaceBasis>,
    /// coverage count -> number of `t`-subspaces with that count
    pub counts_histogram: BTreeMap<u64, u64>,
    pub blocks: usize,
}

impl VerificationReport {
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "is_design": self.is_design,
            "t": self.t,
            "lambda": self.lambda.as_ref().map(|l| l.to_string()),
            "is_simple": self.is_simple,
            "is_trivial": self.is_trivial,
            "failing_t_subspace": self.failing_t_subspace.as_ref().map(SubspaceBasis::to_lines),
            "counts_histogram": self.counts_histogram.iter()
                .map(|(&coverage, &t_subspaces)| CoverageBucket { coverage, t_subspaces })
                .collect::<Vec<_>>(),
            "blocks": self.blocks,
        })
    }
}

pub fn verify_design(c: &DesignCandidate, t: usize) -> Result<VerificationReport> {
    verify_design_capped(c, t, VERIFY_CAP)
}

/// Counts, for every `t`-subspace, the blocks containing it.
///
/// Each block contributes its own `[k t]_q` subspaces, ranked directly into a
/// coverage array, so the incidence matrix is never built.
pub fn verify_design_capped(c: &DesignCandidate, t: usize, cap: u64) -> Result<VerificationReport> {
    if t > c.k {
        return Err(Error::DimensionMismatch(format!("t = {t} exceeds block dimension {}", c.k)));
    }
    let q = c.field.q();
    let index = GrassmannIndex::with_cap(&c.field, c.n, t, cap)?;
    let local = GrassmannIndex::new(&c.field, c.k, t)?.all();
    let counts: Vec<AtomicU32> = (0..index.len()).map(|_| AtomicU32::new(0)).collect();
    c.blocks.par_iter().for_each_init(Vec::new, |ranks, block| {
        ranks.clear();
        sub_ranks(&index, &local, block, ranks);
        for &a in ranks.iter() {
            counts[a as usize].fetch_add(1, Ordering::Relaxed);
        }
    });
    let counts: Vec<u64> = counts.into_iter().map(|a| u64::from(a.into_inner())).collect();

    let mut histogram = BTreeMap::new();
    for &x in &counts {
        *histogram.entry(x).or_insert(0u64) += 1;
    }
    let is_design = histogram.len() == 1;
    let lambda = is_design.then(|| BigInt::from(counts[0]));
    let failing_t_subspace = if is_design {
        None
    } else {
        // Most common coverage, larger value on ties.
        let mode = histogram
            .iter()
            .max_by_key(|(&cov, &num)| (num, cov))
            .map(|(&cov, _)| cov)
            .expect("nonempty histogram");
        counts.iter().position(|&x| x != mode).map(|i| index.unrank(i as u64))
    };

    let mut seen = HashSet::with_capacity(c.blocks.len());
    let is_simple = c.blocks.iter().all(|b| seen.insert(b));
    let n_blocks = BigInt::from(c.blocks.len());
    let is_trivial = is_simple && n_blocks == gaussian(c.n, c.k, q);

    if let Some(l) = &lambda {
        assert_eq!(
            l * gaussian(c.n, t, q),
            &n_blocks * gaussian(c.k, t, q),
            "lambda identity violated"
        );
    }
    Ok(VerificationReport {
        is_design,
        t,
        lambda,
        is_simple,
        is_trivial,
        failing_t_subspace,
        counts_histogram: histogram,
        blocks: c.blocks.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LambdaIdentity {
    Lambda(BigInt),
    Infeasible,
}

/// `λ = N [k t]_q / [n t]_q` when that division is exact.
pub fn lambda_identity_check(n: usize, k: usize, t: usize, q: u32, blocks: &BigInt) -> LambdaIdentity {
    assert!(t <= k && k <= n, "need t <= k <= n");
    let (quot, rem) = (blocks * gaussian(k, t, q)).div_rem(&gaussian(n, t, q));
    if rem.is_zero() {
        LambdaIdentity::Lambda(quot)
    } else {
        LambdaIdentity::Infeasible
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::random_invertible;
    use crate::grassmann::enumerate_subspaces;

    fn trivial(q: u32, n: usize, k: usize) -> DesignCandidate {
        let field = make_field(q).unwrap();
        DesignCandidate::new(&field, n, k, enumerate_subspaces(n, k, &field).unwrap()).unwrap()
    }

    fn spread_f2_4() -> DesignCandidate {
        DesignCandidate::parse_text(
            "2 4 2\n1000\n0100\n\n0010\n0001\n\n1010\n0101\n\n1001\n0111\n\n1011\n0110\n",
        )
        .unwrap()
    }

    #[test]
    fn trivial_design() {
        let c = trivial(2, 4, 2);
        let r = verify_design(&c, 1).unwrap();
        assert!(r.is_design && r.is_simple && r.is_trivial);
        assert_eq!(r.lambda, Some(BigInt::from(7)));
        assert_eq!(r.counts_histogram, BTreeMap::from([(7, 15)]));
        assert!(r.failing_t_subspace.is_none());
    }

    #[test]
    fn trivial_designs_on_grid() {
        for q in [2, 3] {
            for n in 0..=5 {
                for k in 0..=n {
                    let c = trivial(q, n, k);
                    for t in 0..=k {
                        let r = verify_design(&c, t).unwrap();
                        assert!(r.is_design && r.is_trivial);
                        assert_eq!(r.lambda, Some(gaussian(n - t, k - t, q)));
                    }
                }
            }
        }
    }

    #[test]
    fn spread_is_a_design() {
        let r = verify_design(&spread_f2_4(), 1).unwrap();
        assert!(r.is_design && r.is_simple && !r.is_trivial);
        assert_eq!(r.lambda, Some(BigInt::from(1)));
        assert_eq!(r.counts_histogram, BTreeMap::from([(1, 15)]));
    }

    #[test]
    fn dropping_a_block_breaks_it() {
        let full = trivial(2, 4, 2);
        let field = full.field().clone();
        let fewer = DesignCandidate::new(&field, 4, 2, full.blocks()[1..].to_vec()).unwrap();
        let r = verify_design(&fewer, 1).unwrap();
        assert!(!r.is_design);
        assert_eq!(r.lambda, None);
        assert_eq!(r.counts_histogram, BTreeMap::from([(6, 3), (7, 12)]));
        let failing = r.failing_t_subspace.unwrap();
        assert!(full.blocks()[0].includes(&failing));
    }

    #[test]
    fn repeated_blocks_are_not_simple() {
        let s = spread_f2_4();
        let mut blocks = s.blocks().to_vec();
        blocks.extend_from_slice(s.blocks());
        let doubled = DesignCandidate::new(s.field(), 4, 2, blocks).unwrap();
        let r = verify_design(&doubled, 1).unwrap();
        assert!(r.is_design && !r.is_simple && !r.is_trivial);
        assert_eq!(r.lambda, Some(BigInt::from(2)));
    }

    #[test]
    fn gl_image_of_design() {
        let s = spread_f2_4();
        for seed in 0..10 {
            let l = random_invertible(s.field(), 4, seed);
            let r = verify_design(&s.map(&l).unwrap(), 1).unwrap();
            assert!(r.is_design && r.is_simple);
            assert_eq!(r.lambda, Some(BigInt::from(1)));
        }
    }

    #[test]
    fn lambda_identity() {
        assert_eq!(
            lambda_identity_check(4, 2, 1, 2, &BigInt::from(5)),
            LambdaIdentity::Lambda(BigInt::from(1))
        );
        assert_eq!(lambda_identity_check(4, 2, 1, 2, &BigInt::from(4)), LambdaIdentity::Infeasible);
        for q in [2, 3] {
            for n in 1..=7 {
                for k in 1..=n {
                    for t in 0..=k {
                        assert_eq!(
                            lambda_identity_check(n, k, t, q, &gaussian(n, k, q)),
                            LambdaIdentity::Lambda(gaussian(n - t, k - t, q))
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn errors() {
        let c = trivial(2, 4, 2);
        assert!(matches!(verify_design(&c, 3), Err(Error::DimensionMismatch(_))));
        assert!(matches!(verify_design_capped(&c, 1, 10), Err(Error::TooLarge { .. })));
        let field = make_field(2).unwrap();
        let line = enumerate_subspaces(4, 1, &field).unwrap().remove(0);
        assert!(DesignCandidate::new(&field, 4, 2, vec![line]).is_err());
    }

    #[test]
    fn text_and_json_formats() {
        let s = spread_f2_4();
        assert_eq!(DesignCandidate::parse(&s.to_text()).unwrap(), s);
        assert_eq!(DesignCandidate::parse(&s.to_json()).unwrap(), s);
        assert!(s.to_text().starts_with("2 4 2\n1000\n0100\n\n0010\n"));
        let f16 = trivial(16, 2, 1);
        assert!(f16.to_text().contains("1f\n"));
        assert_eq!(DesignCandidate::parse(&f16.to_text()).unwrap(), f16);
    }

    #[test]
    fn parse_errors() {
        let bad = [
            "",
            "2 4\n1000\n0100\n",
            "6 4 2\n1000\n0100\n",
            "2 4 2\n1000\n",
            "2 4 2\n1000\n1000\n",
            "2 4 2\n1002\n0100\n",
            "2 4 2\n100\n010\n",
        ];
        for src in bad {
            assert!(DesignCandidate::parse(src).is_err(), "{src:?}");
        }
        // Non-canonical bases are accepted and canonicalized.
        let c = DesignCandidate::parse("# comment\n2 3 2\n110\n011\n").unwrap();
        assert_eq!(c.blocks()[0].to_lines(), ["101", "011"]);
    }
}
