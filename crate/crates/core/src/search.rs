//! Small-scale search for simple `t-(n,k,λ)` designs over `F_q`, as exact
//! multi-cover: choose distinct `k`-subspaces so that every `t`-subspace lies in
//! exactly `λ` of them.
//!
//! The exhaustive method is Algorithm X on arrays (no linked lists), generalized to
//! multiplicity `λ`: it always branches on the `t`-subspace with the fewest usable
//! blocks relative to its remaining need, and forbids each tried block in later
//! sibling branches so every block set is visited once. It is complete. The greedy
//! method is randomized and is not.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gf::FieldSpec;
use crate::grassmann::{sub_ranks, GrassmannIndex, SubspaceBasis};
use crate::qcount::gaussian;
use crate::verifier::{lambda_identity_check, verify_design, DesignCandidate, LambdaIdentity};

pub const EXHAUSTIVE_UNIVERSE_CAP: u64 = 10_000;
pub const EXHAUSTIVE_CANDIDATE_CAP: u64 = 100_000;
/// Greedy search refuses more candidate blocks than this.
pub const GREEDY_CANDIDATE_CAP: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exhaustive,
    Greedy,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exhaustive" => Ok(Method::Exhaustive),
            "greedy" => Ok(Method::Greedy),
            _ => Err(format!("unknown method {s:?}; expected exhaustive or greedy")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CoverInstance {
    pub universe: Vec<SubspaceBasis>,
    pub candidates: Vec<SubspaceBasis>,
    /// sorted universe indices contained in each candidate
    pub covers: Vec<Vec<u32>>,
    pub lambda: u32,
}

impl CoverInstance {
    pub fn new(field: &FieldSpec, n: usize, k: usize, t: usize, lambda: u32, candidate_cap: u64) -> Result<Self> {
        let universe_index = GrassmannIndex::new(field, n, t)?;
        let candidate_index = GrassmannIndex::with_cap(field, n, k, candidate_cap)?;
        let local = GrassmannIndex::new(field, k, t)?.all();
        let universe = universe_index.all();
        let candidates = candidate_index.all();
        let covers = candidates
            .iter()
            .map(|b| {
                let mut ranks = Vec::with_capacity(local.len());
                sub_ranks(&universe_index, &local, b, &mut ranks);
                let mut c: Vec<u32> = ranks.into_iter().map(|a| a as u32).collect();
                c.sort_unstable();
                c
            })
            .collect::<Vec<_>>();
        let weight = local.len();
        assert!(covers.iter().all(|c| c.len() == weight));
        Ok(CoverInstance { universe, candidates, covers, lambda })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub nodes: u64,
    pub restarts: u64,
    /// most blocks placed in any partial solution
    pub best_blocks: usize,
    /// most `t`-subspaces at full multiplicity in any partial solution
    pub best_covered: u64,
    pub universe: u64,
}

#[derive(Clone, Debug)]
pub enum SearchOutcome {
    Found(DesignCandidate, SearchStats),
    NotFound(SearchStats),
    Timeout(SearchStats),
}

impl SearchOutcome {
    pub fn stats(&self) -> &SearchStats {
        match self {
            SearchOutcome::Found(_, s) | SearchOutcome::NotFound(s) | SearchOutcome::Timeout(s) => s,
        }
    }
}

/// `N = λ [n t]_q / [k t]_q` when the division is exact.
pub fn required_blocks(n: usize, k: usize, t: usize, q: u32, lambda: u32) -> Option<BigInt> {
    let (quot, rem) = (BigInt::from(lambda) * gaussian(n, t, q)).div_rem(&gaussian(k, t, q));
    if !rem.is_zero() {
        return None;
    }
    match lambda_identity_check(n, k, t, q, &quot) {
        LambdaIdentity::Lambda(l) if l == BigInt::from(lambda) => Some(quot),
        _ => None,
    }
}

#[allow(clippy::too_many_arguments)]
pub fn search_design(
    field: &FieldSpec,
    n: usize,
    k: usize,
    t: usize,
    lambda: u32,
    method: Method,
    seed: u64,
    limit: Duration,
) -> Result<SearchOutcome> {
    if !(1 <= t && t <= k && k <= n) {
        return Err(Error::InvalidParameters(format!("need 1 <= t <= k <= n, got t={t} k={k} n={n}")));
    }
    if lambda == 0 {
        return Err(Error::InvalidParameters("lambda must be at least 1".into()));
    }
    let q = field.q();
    let universe = gaussian(n, t, q);
    let candidates = gaussian(n, k, q);
    let (ucap, ccap) = match method {
        Method::Exhaustive => (EXHAUSTIVE_UNIVERSE_CAP, EXHAUSTIVE_CANDIDATE_CAP),
        Method::Greedy => (u64::MAX, GREEDY_CANDIDATE_CAP),
    };
    if universe > BigInt::from(ucap) {
        return Err(Error::too_large("search universe of t-subspaces", universe, ucap));
    }
    if candidates > BigInt::from(ccap) {
        return Err(Error::too_large("search candidate k-subspaces", candidates, ccap));
    }
    let stats = SearchStats { universe: universe.to_u64().expect("capped"), ..Default::default() };
    let Some(blocks_needed) = required_blocks(n, k, t, q, lambda) else {
        return Ok(SearchOutcome::NotFound(stats));
    };
    if blocks_needed > candidates {
        return Ok(SearchOutcome::NotFound(stats));
    }
    let inst = CoverInstance::new(field, n, k, t, lambda, ccap)?;
    let deadline = Instant::now() + limit;
    let (found, stats) = match method {
        Method::Exhaustive => Exact::new(&inst, deadline).run(),
        Method::Greedy => greedy(&inst, seed, deadline),
    };
    Ok(match found {
        Found::Yes(chosen) => {
            let blocks = chosen.iter().map(|&i| inst.candidates[i].clone()).collect();
            let design = DesignCandidate::new(field, n, k, blocks)?;
            let report = verify_design(&design, t)?;
            assert!(
                report.is_design && report.is_simple && report.lambda == Some(BigInt::from(lambda)),
                "search returned a block set that does not verify"
            );
            SearchOutcome::Found(design, stats)
        }
        Found::Exhausted => SearchOutcome::NotFound(stats),
        Found::OutOfTime => SearchOutcome::Timeout(stats),
    })
}

enum Found {
    Yes(Vec<usize>),
    Exhausted,
    OutOfTime,
}

struct Exact<'a> {
    inst: &'a CoverInstance,
    /// candidates covering each universe element
    by_elem: Vec<Vec<u32>>,
    need: Vec<u32>,
    /// usable candidates covering each element
    avail: Vec<u32>,
    /// a candidate is usable iff its counter is zero
    off: Vec<u32>,
    chosen: Vec<usize>,
    covered: u64,
    stats: SearchStats,
    deadline: Instant,
    timed_out: bool,
}

impl<'a> Exact<'a> {
    fn new(inst: &'a CoverInstance, deadline: Instant) -> Self {
        let u = inst.universe.len();
        let mut by_elem = vec![Vec::new(); u];
        for (i, c) in inst.covers.iter().enumerate() {
            for &e in c {
                by_elem[e as usize].push(i as u32);
            }
        }
        let avail = by_elem.iter().map(|v| v.len() as u32).collect();
        Exact {
            inst,
            by_elem,
            need: vec![inst.lambda; u],
            avail,
            off: vec![0; inst.candidates.len()],
            chosen: Vec::new(),
            covered: 0,
            stats: SearchStats { universe: u as u64, ..Default::default() },
            deadline,
            timed_out: false,
        }
    }

    fn disable(&mut self, j: usize) {
        self.off[j] += 1;
        if self.off[j] == 1 {
            for &e in &self.inst.covers[j] {
                self.avail[e as usize] -= 1;
            }
        }
    }

    fn enable(&mut self, j: usize) {
        self.off[j] -= 1;
        if self.off[j] == 0 {
            for &e in &self.inst.covers[j] {
                self.avail[e as usize] += 1;
            }
        }
    }

    fn choose(&mut self, i: usize) {
        self.disable(i);
        self.chosen.push(i);
        for idx in 0..self.inst.covers[i].len() {
            let e = self.inst.covers[i][idx] as usize;
            self.need[e] -= 1;
            if self.need[e] == 0 {
                self.covered += 1;
                for jdx in 0..self.by_elem[e].len() {
                    let j = self.by_elem[e][jdx] as usize;
                    self.disable(j);
                }
            }
        }
    }

    fn unchoose(&mut self, i: usize) {
        for idx in (0..self.inst.covers[i].len()).rev() {
            let e = self.inst.covers[i][idx] as usize;
            if self.need[e] == 0 {
                self.covered -= 1;
                for jdx in (0..self.by_elem[e].len()).rev() {
                    let j = self.by_elem[e][jdx] as usize;
                    self.enable(j);
                }
            }
            self.need[e] += 1;
        }
        self.chosen.pop();
        self.enable(i);
    }

    fn run(mut self) -> (Found, SearchStats) {
        let found = if self.descend() {
            Found::Yes(self.chosen.clone())
        } else if self.timed_out {
            Found::OutOfTime
        } else {
            Found::Exhausted
        };
        (found, self.stats)
    }

    fn descend(&mut self) -> bool {
        self.stats.nodes += 1;
        self.stats.best_blocks = self.stats.best_blocks.max(self.chosen.len());
        self.stats.best_covered = self.stats.best_covered.max(self.covered);
        if self.stats.nodes % 1024 == 0 && Instant::now() >= self.deadline {
            self.timed_out = true;
            return false;
        }
        // Element with the least slack; stop early if some element cannot be filled.
        let mut best: Option<(u32, usize)> = None;
        for e in 0..self.need.len() {
            let need = self.need[e];
            if need == 0 {
                continue;
            }
            let avail = self.avail[e];
            if avail < need {
                return false;
            }
            let slack = avail - need;
            if best.is_none_or(|(s, _)| slack < s) {
                best = Some((slack, e));
            }
        }
        let Some((_, e)) = best else {
            return true;
        };
        let options: Vec<usize> = self.by_elem[e]
            .iter()
            .map(|&j| j as usize)
            .filter(|&j| self.off[j] == 0)
            .collect();
        let mut forbidden = Vec::new();
        for &i in &options {
            if self.avail[e] < self.need[e] {
                break;
            }
            self.choose(i);
            if self.descend() {
                return true;
            }
            self.unchoose(i);
            if self.timed_out {
                break;
            }
            self.disable(i);
            forbidden.push(i);
        }
        for &i in forbidden.iter().rev() {
            self.enable(i);
        }
        false
    }
}

/// Randomized greedy with restarts: each step adds the unused block with the least
/// over-coverage, preferring the most newly useful coverage, ties broken by a
/// seeded shuffle. A restart ends as soon as any over-coverage becomes unavoidable.
fn greedy(inst: &CoverInstance, seed: u64, deadline: Instant) -> (Found, SearchStats) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = inst.universe.len();
    let mut stats = SearchStats { universe: u as u64, ..Default::default() };
    let mut order: Vec<usize> = (0..inst.candidates.len()).collect();
    loop {
        if Instant::now() >= deadline {
            return (Found::OutOfTime, stats);
        }
        stats.restarts += 1;
        order.shuffle(&mut rng);
        let mut need = vec![inst.lambda; u];
        let mut used = vec![false; inst.candidates.len()];
        let mut chosen = Vec::new();
        let mut covered = 0u64;
        loop {
            stats.nodes += 1;
            if covered == u as u64 {
                return (Found::Yes(chosen), stats);
            }
            let mut best: Option<(usize, usize, usize)> = None;
            for &i in &order {
                if used[i] {
                    continue;
                }
                let over = inst.covers[i].iter().filter(|&&e| need[e as usize] == 0).count();
                let gain = inst.covers[i].len() - over;
                if best.is_none_or(|(bo, bg, _)| (over, std::cmp::Reverse(gain)) < (bo, std::cmp::Reverse(bg))) {
                    best = Some((over, gain, i));
                }
            }
            match best {
                Some((0, _, i)) => {
                    used[i] = true;
                    chosen.push(i);
                    for &e in &inst.covers[i] {
                        need[e as usize] -= 1;
                        if need[e as usize] == 0 {
                            covered += 1;
                        }
                    }
                    stats.best_blocks = stats.best_blocks.max(chosen.len());
                    stats.best_covered = stats.best_covered.max(covered);
                }
                _ => break,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::make_field;

    const LIMIT: Duration = Duration::from_secs(60);

    fn exhaustive(q: u32, n: usize, k: usize, t: usize, lambda: u32) -> SearchOutcome {
        let f = make_field(q).unwrap();
        search_design(&f, n, k, t, lambda, Method::Exhaustive, 0, LIMIT).unwrap()
    }

    #[test]
    fn spreads() {
        for (n, k, blocks) in [(4, 2, 5), (6, 3, 9), (6, 2, 21)] {
            match exhaustive(2, n, k, 1, 1) {
                SearchOutcome::Found(d, _) => assert_eq!(d.len(), blocks),
                other => panic!("n={n} k={k}: {other:?}"),
            }
        }
        match exhaustive(3, 4, 2, 1, 1) {
            SearchOutcome::Found(d, _) => assert_eq!(d.len(), 10),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_is_immediate() {
        match exhaustive(2, 3, 2, 1, 1) {
            SearchOutcome::NotFound(s) => assert_eq!(s.nodes, 0),
            other => panic!("{other:?}"),
        }
        assert!(required_blocks(2, 4, 1, 2, 1).is_none());
        assert_eq!(required_blocks(4, 2, 1, 2, 1), Some(BigInt::from(5)));
    }

    #[test]
    fn exhaustive_proves_absence() {
        // λ = 3 on lines of F_2^3 needs all 7 planes: the trivial design.
        match exhaustive(2, 3, 2, 1, 3) {
            SearchOutcome::Found(d, _) => assert_eq!(d.len(), 7),
            other => panic!("{other:?}"),
        }
        // 1-(5,2,1) over F_2: 31 points, 3 per line, 3 ∤ 31.
        assert!(matches!(exhaustive(2, 5, 2, 1, 1), SearchOutcome::NotFound(_)));
        // λ = 1 with t = k: each t-subspace must be its own block, so every
        // t-subspace is a block; N = [n t] and the design is trivial.
        match exhaustive(2, 4, 2, 2, 1) {
            SearchOutcome::Found(d, _) => assert_eq!(d.len(), 35),
            other => panic!("{other:?}"),
        }
        // λ above [n-t k-t]_q cannot be simple.
        assert!(matches!(exhaustive(2, 3, 2, 1, 6), SearchOutcome::NotFound(_)));
    }

    #[test]
    fn multiplicity_two() {
        match exhaustive(2, 4, 2, 1, 2) {
            SearchOutcome::Found(d, _) => {
                assert_eq!(d.len(), 10);
                let r = verify_design(&d, 1).unwrap();
                assert_eq!(r.lambda, Some(BigInt::from(2)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn deterministic() {
        let f = make_field(2).unwrap();
        let a = search_design(&f, 6, 3, 1, 1, Method::Exhaustive, 0, LIMIT).unwrap();
        let b = search_design(&f, 6, 3, 1, 1, Method::Exhaustive, 99, LIMIT).unwrap();
        match (a, b) {
            (SearchOutcome::Found(x, sx), SearchOutcome::Found(y, sy)) => {
                assert_eq!(x, y);
                assert_eq!(sx, sy);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn greedy_finds_small_spreads() {
        let f = make_field(2).unwrap();
        for seed in 0..5 {
            let out = search_design(&f, 4, 2, 1, 1, Method::Greedy, seed, LIMIT).unwrap();
            assert!(matches!(out, SearchOutcome::Found(ref d, _) if d.len() == 5), "{out:?}");
        }
        let a = search_design(&f, 6, 3, 1, 1, Method::Greedy, 7, LIMIT).unwrap();
        let b = search_design(&f, 6, 3, 1, 1, Method::Greedy, 7, LIMIT).unwrap();
        if let (SearchOutcome::Found(x, _), SearchOutcome::Found(y, _)) = (a, b) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn timeout_and_caps() {
        let f = make_field(2).unwrap();
        let out = search_design(&f, 7, 3, 2, 1, Method::Exhaustive, 0, Duration::ZERO).unwrap();
        assert!(matches!(out, SearchOutcome::Timeout(_) | SearchOutcome::NotFound(_)));
        assert!(matches!(
            search_design(&f, 9, 4, 1, 1, Method::Exhaustive, 0, LIMIT),
            Err(Error::TooLarge { .. })
        ));
        assert!(search_design(&f, 4, 2, 0, 1, Method::Exhaustive, 0, LIMIT).is_err());
        assert!(search_design(&f, 4, 2, 1, 0, Method::Exhaustive, 0, LIMIT).is_err());
    }
}
