//! Every invariant suite of the library at its full grid, with a plain-text report.
//!
//! The report contains only counts and verdicts (no timings), so it is identical
//! from run to run and for any number of worker threads.

use std::fmt::Write as _;
use std::time::Duration;

use num_bigint::BigInt;
use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::gf::{make_field, random_invertible, FieldSpec, Matrix, SUPPORTED_ORDERS};
use crate::grassmann::{
    apply_map, enumerate_subspaces, extensions, intersect_dim, stacked_rank, SubspaceBasis,
};
use crate::incidence::{
    average_row, build_incidence_capped, check_constant_vector_property, check_symmetry_transitivity,
};
use crate::klp::{divisibility_witness, klp_report};
use crate::localdecode::{
    bareiss_det, build_d, c3_bound, check_cond2, check_det_bounds, check_lemma2_grid,
    decode_certificate, solve_coefficients, verify_certificate,
};
use crate::qcount::{binomial, check_bounds, gaussian, q_binomial, q_binomial_via_sum, qpow, SUM_TERMS_CAP};
use crate::search::{search_design, Method, SearchOutcome};
use crate::verifier::{verify_design, DesignCandidate};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteResult {
    pub module: &'static str,
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SelftestReport {
    pub suites: Vec<SuiteResult>,
}

impl SelftestReport {
    pub fn ok(&self) -> bool {
        self.suites.iter().all(|s| s.ok)
    }

    pub fn failed(&self) -> usize {
        self.suites.iter().filter(|s| !s.ok).count()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.suites {
            let tag = if s.ok { "ok  " } else { "FAIL" };
            writeln!(out, "{tag} {:<12} {}: {}", s.module, s.name, s.detail).unwrap();
        }
        writeln!(out, "{} suites, {} failed", self.suites.len(), self.failed()).unwrap();
        out
    }

    fn push(&mut self, module: &'static str, name: &str, ok: bool, detail: impl Into<String>) {
        self.suites.push(SuiteResult { module, name: name.into(), ok, detail: detail.into() });
    }
}

/// Runs all suites. Grid failures are reported, never panicked on; errors from the
/// library itself (a cap hit, say) propagate.
pub fn run() -> Result<SelftestReport> {
    let mut r = SelftestReport::default();
    gf_suites(&mut r)?;
    qcount_suites(&mut r)?;
    grassmann_suites(&mut r)?;
    incidence_suites(&mut r)?;
    verifier_suites(&mut r)?;
    localdecode_suites(&mut r)?;
    klp_suites(&mut r)?;
    search_suites(&mut r)?;
    Ok(r)
}

fn field_axioms(f: &FieldSpec) -> bool {
    let q = f.q() as u8;
    (0..q).all(|a| {
        f.add(a, 0) == a
            && f.mul(a, 1) == a
            && f.add(a, f.neg(a)) == 0
            && (a == 0 || f.mul(a, f.inv(a)) == 1)
            && (0..q).all(|b| {
                f.add(a, b) == f.add(b, a)
                    && f.mul(a, b) == f.mul(b, a)
                    && (0..q).all(|c| {
                        f.add(f.add(a, b), c) == f.add(a, f.add(b, c))
                            && f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c))
                            && f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c))
                    })
            })
    })
}

fn random_matrix(f: &FieldSpec, rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let q = f.q() as u8;
    let entries = (0..rows * cols).map(|_| rng.gen_range(0..q)).collect();
    Matrix::new(f, rows, cols, entries).expect("entries in range")
}

fn gf_suites(r: &mut SelftestReport) -> Result<()> {
    let mut ok = true;
    for q in SUPPORTED_ORDERS {
        ok &= field_axioms(&make_field(q)?);
    }
    r.push("gf", "field axioms", ok, format!("{} fields, all triples", SUPPORTED_ORDERS.len()));

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut idem, mut span, mut full) = (true, true, true);
    let mut count = 0;
    for q in SUPPORTED_ORDERS {
        let f = make_field(q)?;
        for _ in 0..50 {
            let rows = rng.gen_range(1..=6);
            let cols = rng.gen_range(1..=7);
            let m = random_matrix(&f, rows, cols, &mut rng);
            let (e, rank) = m.rref();
            idem &= e.rref().0 == e;
            let stacked: Vec<Vec<u8>> = (0..rows).map(|i| m.row(i).to_vec()).chain((0..rows).map(|i| e.row(i).to_vec())).collect();
            span &= Matrix::from_rows(&f, &stacked)?.rank() == rank && m.rank() == rank;
            count += 1;
        }
        for n in 1..=5 {
            for seed in 0..10 {
                full &= random_invertible(&f, n, seed).rref().0 == Matrix::identity(&f, n);
            }
        }
    }
    r.push("gf", "rref idempotent", idem, format!("{count} random matrices"));
    r.push("gf", "row space invariant", span, format!("{count} random matrices"));
    r.push("gf", "random invertible reduces to I", full, "n <= 5, 10 seeds per field");
    Ok(())
}

fn qcount_suites(r: &mut SelftestReport) -> Result<()> {
    let (mut sym, mut pascal, mut bounds, mut sums) = (true, true, true, true);
    let (mut npts, mut nsum) = (0, 0);
    for q in 2..=5u32 {
        for n in 0..=12i64 {
            for k in 0..=n {
                npts += 1;
                sym &= q_binomial(n, k, q) == q_binomial(n, n - k, q);
                if n >= 1 {
                    pascal &= q_binomial(n, k, q)
                        == q_binomial(n - 1, k - 1, q) + qpow(q, k as u64) * q_binomial(n - 1, k, q);
                }
                bounds &= check_bounds(n as usize, k as usize, q).ok;
                if binomial(n as u64, k as u64) <= BigInt::from(SUM_TERMS_CAP) {
                    nsum += 1;
                    sums &= q_binomial_via_sum(n as usize, k as usize, q)? == q_binomial(n, k, q);
                }
            }
        }
    }
    r.push("qcount", "symmetry", sym, format!("{npts} points, n <= 12, q <= 5"));
    r.push("qcount", "pascal recurrence", pascal, format!("{npts} points"));
    r.push("qcount", "size bounds", bounds, format!("{npts} points"));
    r.push("qcount", "sum identity", sums, format!("{nsum} points with C(n,k) <= {SUM_TERMS_CAP}"));

    let mut agree = true;
    let mut total = 0u64;
    for (q, nmax) in [(2, 6), (3, 5), (4, 4), (5, 4)] {
        let f = make_field(q)?;
        for n in 0..=nmax {
            for k in 0..=n {
                let list = enumerate_subspaces(n, k, &f)?;
                total += list.len() as u64;
                agree &= BigInt::from(list.len()) == gaussian(n, k, q);
            }
        }
    }
    r.push("qcount", "enumeration count", agree, format!("{total} subspaces enumerated"));
    Ok(())
}

fn grassmann_suites(r: &mut SelftestReport) -> Result<()> {
    let (mut canon, mut lemma3, mut dimf, mut perm) = (true, true, true, true);
    let (mut nlists, mut next, mut npairs, mut nmaps) = (0, 0, 0, 0);
    for (q, nmax) in [(2, 6), (3, 5), (4, 4), (5, 4)] {
        let f = make_field(q)?;
        for n in 0..=nmax {
            for k in 0..=n {
                let list = enumerate_subspaces(n, k, &f)?;
                nlists += 1;
                canon &= list.windows(2).all(|w| w[0] < w[1]);
            }
        }
    }
    for q in [2, 3] {
        let f = make_field(q)?;
        for n in 0..=5 {
            let all: Vec<Vec<SubspaceBasis>> = (0..=n).map(|k| enumerate_subspaces(n, k, &f)).collect::<Result<_>>()?;
            for t in 0..=n {
                let results: Vec<(bool, u64)> = all[t]
                    .par_iter()
                    .map(|v| -> Result<(bool, u64)> {
                        let mut ok = true;
                        let mut c = 0;
                        for k in t..=n {
                            let ext = extensions(v, k)?;
                            c += 1;
                            ok &= BigInt::from(ext.len()) == gaussian(n - t, k - t, q)
                                && ext.iter().all(|u| u.includes(v));
                        }
                        Ok((ok, c))
                    })
                    .collect::<Result<_>>()?;
                for (ok, c) in results {
                    lemma3 &= ok;
                    next += c;
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64 + 10 * q as u64);
            for _ in 0..200 {
                let a = &all[rng.gen_range(0..=n)];
                let b = &all[rng.gen_range(0..=n)];
                let u = &a[rng.gen_range(0..a.len())];
                let v = &b[rng.gen_range(0..b.len())];
                npairs += 1;
                dimf &= intersect_dim(u, v)? + stacked_rank(u, v)? == u.dim() + v.dim();
            }
            for k in (0..=n).filter(|_| n >= 1) {
                for seed in 0..3 {
                    let l = random_invertible(&f, n, seed);
                    let mut image: Vec<SubspaceBasis> = all[k].iter().map(|s| apply_map(&l, s)).collect::<Result<_>>()?;
                    image.sort();
                    nmaps += 1;
                    perm &= image == all[k];
                }
            }
        }
    }
    r.push("grassmann", "canonical order", canon, format!("{nlists} lists strictly increasing"));
    r.push("grassmann", "extension count", lemma3, format!("{next} (V, k) cases, n <= 5, q in {{2,3}}"));
    r.push("grassmann", "dimension formula", dimf, format!("{npairs} random pairs"));
    r.push("grassmann", "GL acts by permutation", perm, format!("{nmaps} maps"));
    Ok(())
}

const INCIDENCE_CELLS: u64 = 10_000_000;

fn incidence_suites(r: &mut SelftestReport) -> Result<()> {
    let (mut weights, mut double, mut avg) = (true, true, true);
    let mut built = 0;
    for q in [2, 3] {
        let f = make_field(q)?;
        // Beyond this n even the line-vs-line matrix exceeds the cap.
        let nmax = (1..).take_while(|&n| gaussian(n, 1, q).pow(2) <= BigInt::from(INCIDENCE_CELLS)).last().unwrap();
        for n in 1..=nmax {
            for k in 0..=n {
                for t in 0..=k {
                    let cells = gaussian(n, k, q) * gaussian(n, t, q);
                    // A single row or column: only small n carries information.
                    let degenerate = t == 0 || k == n;
                    if cells > BigInt::from(INCIDENCE_CELLS) || (degenerate && n > 6) {
                        continue;
                    }
                    // Weights are asserted during construction.
                    let m = build_incidence_capped(n, k, t, &f, INCIDENCE_CELLS)?;
                    built += 1;
                    weights &= check_constant_vector_property(&m) && m.boundedness() == BigInt::one();
                    double &= BigInt::from(m.total_ones()) == BigInt::from(m.num_rows()) * m.row_weight()
                        && BigInt::from(m.total_ones()) == BigInt::from(m.num_cols()) * m.col_weight();
                    if m.num_rows() * m.num_cols() <= 1_000_000 {
                        avg &= average_row(&m) > num_rational::BigRational::from_integer(0.into());
                    }
                }
            }
        }
    }
    r.push("incidence", "row and column weights, c2 = 1", weights, format!("{built} matrices with |A||B| <= {INCIDENCE_CELLS} (t = 0 or k = n only for n <= 6)"));
    r.push("incidence", "double counting", double, format!("{built} matrices"));
    r.push("incidence", "average row", avg, "closed forms agree with column sums");

    let f2 = make_field(2)?;
    let mut sym = true;
    for (n, k, t) in [(3, 2, 1), (4, 2, 1), (5, 3, 2)] {
        let m = build_incidence_capped(n, k, t, &f2, INCIDENCE_CELLS)?;
        sym &= check_symmetry_transitivity(&m, 20, 7);
    }
    r.push("incidence", "GL transitivity", sym, "20 pairs each for (3,2,1), (4,2,1), (5,3,2) over F_2");
    Ok(())
}

fn found(out: SearchOutcome) -> Option<DesignCandidate> {
    match out {
        SearchOutcome::Found(d, _) => Some(d),
        _ => None,
    }
}

fn verifier_suites(r: &mut SelftestReport) -> Result<()> {
    let mut ok = true;
    let mut cases = 0;
    for q in [2, 3] {
        let f = make_field(q)?;
        for n in 0..=5 {
            for k in 0..=n {
                let d = DesignCandidate::new(&f, n, k, enumerate_subspaces(n, k, &f)?)?;
                for t in 0..=k {
                    let rep = verify_design(&d, t)?;
                    cases += 1;
                    ok &= rep.is_design
                        && rep.is_simple
                        && rep.is_trivial
                        && rep.lambda == Some(gaussian(n - t, k - t, q));
                }
            }
        }
    }
    r.push("verifier", "trivial designs", ok, format!("{cases} (n, k, t) points, n <= 5, q in {{2,3}}"));

    let f2 = make_field(2)?;
    let limit = Duration::from_secs(60);
    let mut union_ok = true;
    let mut gl_ok = true;
    let mut unions = 0;
    for (n, k) in [(4, 2), (6, 3), (6, 2)] {
        let Some(s) = found(search_design(&f2, n, k, 1, 1, Method::Exhaustive, 0, limit)?) else {
            union_ok = false;
            continue;
        };
        for seed in 0..20u64 {
            let l = random_invertible(&f2, n, seed);
            let image = s.map(&l)?;
            gl_ok &= verify_design(&image, 1)?.lambda == Some(BigInt::one());
            if image.blocks().iter().any(|b| s.blocks().contains(b)) {
                continue;
            }
            let blocks = s.blocks().iter().chain(image.blocks()).cloned().collect();
            let rep = verify_design(&DesignCandidate::new(&f2, n, k, blocks)?, 1)?;
            unions += 1;
            union_ok &= rep.is_design && rep.is_simple && rep.lambda == Some(BigInt::from(2));
        }
    }
    union_ok &= unions > 0;
    r.push("verifier", "union of disjoint designs", union_ok, format!("{unions} unions of disjoint spreads, lambda 1 + 1"));
    r.push("verifier", "GL invariance", gl_ok, "20 random maps per spread");

    let trivial = DesignCandidate::new(&f2, 4, 2, enumerate_subspaces(4, 2, &f2)?)?;
    let rep = verify_design(&trivial, 1)?;
    let mut fail = trivial.blocks().to_vec();
    fail.remove(0);
    let broken = verify_design(&DesignCandidate::new(&f2, 4, 2, fail)?, 1)?;
    let hist_ok = broken.counts_histogram.iter().map(|(&a, &b)| (a, b)).collect::<Vec<_>>() == vec![(6, 3), (7, 12)];
    r.push(
        "verifier",
        "trivial 1-(4,2,7) and one block removed",
        rep.lambda == Some(BigInt::from(7)) && !broken.is_design && hist_ok,
        "lambda 7; histogram {6: 3, 7: 12}",
    );
    Ok(())
}

fn localdecode_suites(r: &mut SelftestReport) -> Result<()> {
    let (mut system, mut cond2, mut det_routes) = (true, true, true);
    let mut points = 0;
    for q in [2, 3] {
        for t in 1..=3 {
            for k in t + 1..=t + 4 {
                let sys = solve_coefficients(q, t, k)?;
                points += 1;
                let mut target = vec![BigInt::from(0); t + 1];
                target[t] = sys.m.clone();
                let df: Vec<BigInt> = sys.d.iter().map(|row| row.iter().zip(&sys.f).map(|(a, b)| a * b).sum()).collect();
                system &= df == target && &sys.f[t] * gaussian(k, k - t, q) == sys.m;
                cond2 &= check_cond2(q, t, k)?;
                let d = build_d(q, t, k)?;
                let diag: BigInt = (0..=t).map(|i| &d[i][i]).product();
                det_routes &= diag == bareiss_det(&d) && diag == sys.m;
            }
        }
    }
    r.push("localdecode", "D f = m e_t and f(t) [k, k-t] = m", system, format!("{points} (q, t, k) points"));
    r.push("localdecode", "off-target rows vanish", cond2, format!("{points} points"));
    r.push("localdecode", "det D by two routes", det_routes, format!("{points} points"));

    let sys = solve_coefficients(2, 1, 2)?;
    let worked = sys.m == BigInt::from(6) && sys.f == vec![BigInt::from(-1), BigInt::from(2)];
    r.push("localdecode", "worked system (2,1,2)", worked, format!("m = {}, f = ({}, {})", sys.m, sys.f[0], sys.f[1]));

    let mut bounds = true;
    let mut nb = 0;
    for q in [2, 3] {
        for t in 1..=4 {
            for k in t..=8 {
                bounds &= check_det_bounds(q, t, k)?.ok;
                nb += 1;
            }
        }
    }
    r.push("localdecode", "determinant, row-maxima and diagonal bounds", bounds, format!("{nb} points, t <= 4, k <= 8"));

    let mut summaries = Vec::new();
    for n in 2..=6 {
        for t in 1..=2usize.min(n - 1) {
            summaries.push((2, n, t));
        }
    }
    for n in 2..=4 {
        for t in 1..=2usize.min(n - 1) {
            summaries.push((3, n, t));
        }
    }
    let (mut lemma_ok, mut cmp, mut sums, mut inter) = (true, 0, 0, 0);
    for (q, n, t) in summaries {
        let s = check_lemma2_grid(&make_field(q)?, n, t, 4)?;
        lemma_ok &= s.ok();
        cmp += s.comparisons;
        sums += s.sum_checks;
        inter += s.intermediate_checks;
    }
    r.push("localdecode", "two-subspace count", lemma_ok, format!("{cmp} comparisons, q=2 n<=6 and q=3 n<=4, t<=2, k<=4"));
    r.push("localdecode", "count sums to [n-t, k-t]", lemma_ok, format!("{sums} sums"));
    r.push("localdecode", "two-stage count", lemma_ok, format!("{inter} retraced cases"));

    let f2 = make_field(2)?;
    let mut cert_ok = true;
    let mut ncert = 0;
    for (n, t, k) in [(3, 1, 2), (4, 1, 2), (5, 2, 3)] {
        for v in enumerate_subspaces(n, t, &f2)? {
            ncert += 1;
            cert_ok &= verify_certificate(&decode_certificate(&v, k)?)?.ok;
        }
    }
    r.push("localdecode", "certificate sums to m e_V", cert_ok, format!("{ncert} certificates, every t-subspace checked"));

    let c3 = c3_bound(2, 1, 2)?;
    let c3b = c3_bound(2, 2, 3)?;
    r.push(
        "localdecode",
        "c3 against its bound",
        c3.exact_c3 == Some(BigInt::from(10)) && c3.ok == Some(true) && c3b.ok == Some(true),
        format!("(2,1,2): {} <= {}", c3.exact_c3.as_ref().map_or("-".into(), |x| x.to_string()), c3.bound),
    );
    Ok(())
}

fn klp_suites(r: &mut SelftestReport) -> Result<()> {
    let one = BigInt::one();
    let (mut exact, mut mono, mut c2) = (true, true, true);
    let mut pts = 0;
    for q in [2, 3] {
        for n in 1..=20 {
            for k in 1..=n {
                for t in 1..=k.min(3) {
                    let a = klp_report(q, n, k, t, &one)?;
                    let b = klp_report(q, n, k, t, &BigInt::from(7))?;
                    pts += 1;
                    exact &= a.a_exact.as_ref().is_some_and(|x| *x <= a.a_upper)
                        && a.b_exact.as_ref().is_some_and(|x| *x >= a.b_lower);
                    mono &= a.rhs_final <= b.rhs_final && (a.feasible || !b.feasible);
                    c2 &= a.c2 == one;
                }
            }
        }
    }
    r.push("klp", "exact sizes within bounds", exact, format!("{pts} points"));
    r.push("klp", "rhs monotone in constant", mono, format!("{pts} points"));
    r.push("klp", "c2 = 1", c2, format!("{pts} points"));
    let yes = klp_report(2, 1000, 25, 1, &one)?;
    let no = klp_report(2, 1000, 12, 1, &one)?;
    r.push("klp", "feasibility at n = 1000", yes.feasible && !no.feasible, "k = 25 feasible, k = 12 not");

    let mut wit = true;
    let mut nw = 0;
    for q in [2, 3] {
        for t in 1..=2 {
            for k in t..=5 {
                for n in k..=10 {
                    let w = divisibility_witness(q, n, k, t)?;
                    nw += 1;
                    wit &= w.integral && w.within_c1_bound && w.witness.is_positive();
                }
            }
        }
    }
    let w = divisibility_witness(2, 4, 2, 1)?;
    r.push("klp", "divisibility witness", wit && w.witness == BigInt::from(90), format!("{nw} points; (2,4,2,1) gives {}", w.witness));
    Ok(())
}

fn search_suites(r: &mut SelftestReport) -> Result<()> {
    let f2 = make_field(2)?;
    let limit = Duration::from_secs(60);
    for (n, k, want) in [(4, 2, 5), (6, 3, 9)] {
        let out = search_design(&f2, n, k, 1, 1, Method::Exhaustive, 0, limit)?;
        let (ok, detail) = match &out {
            SearchOutcome::Found(d, s) => {
                let rep = verify_design(d, 1)?;
                (
                    d.len() == want && rep.is_design && rep.is_simple && !rep.is_trivial,
                    format!("{} blocks after {} nodes", d.len(), s.nodes),
                )
            }
            SearchOutcome::NotFound(_) => (false, "not found".into()),
            SearchOutcome::Timeout(_) => (false, "timed out".into()),
        };
        r.push("search", &format!("spread 1-({n},{k},1)"), ok, detail);
    }
    let out = search_design(&f2, 3, 2, 1, 1, Method::Exhaustive, 0, limit)?;
    r.push(
        "search",
        "no 1-(3,2,1)",
        matches!(out, SearchOutcome::NotFound(ref s) if s.nodes == 0),
        "rejected by the block-count identity",
    );
    Ok(())
}
