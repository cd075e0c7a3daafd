//! `qdesign`: exact computations on subspace designs from the command line.
//!
//! Exit status: 0 success, 1 mathematical failure (not a design, a check failed,
//! nothing found), 2 usage or input error, 3 resource cap or timeout.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde_json::{json, Value};

use qdesign::grassmann::{enumerate_subspaces_capped, GrassmannIndex, ENUMERATION_CAP};
use qdesign::incidence::{average_row, build_incidence_capped, INCIDENCE_BITS_CAP};
use qdesign::localdecode::{
    c3_bound_capped, check_det_bounds, check_lemma2_grid, decode_certificate_capped,
    verify_certificate, CERTIFICATE_CAP,
};
use qdesign::search::{EXHAUSTIVE_CANDIDATE_CAP, EXHAUSTIVE_UNIVERSE_CAP};
use qdesign::qcount::{check_bounds, gaussian, q_binomial_via_sum_capped, SUM_TERMS_CAP};
use qdesign::verifier::{verify_design_capped, VERIFY_CAP};
use qdesign::{
    divisibility_witness, klp_report, make_field, search_design, selftest, solve_coefficients,
    DesignCandidate, Error, Method, SearchOutcome, SubspaceBasis,
};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "qdesign", version, about = "Exact computations for subspace designs over finite fields")]
struct Cli {
    /// Worker threads for parallel enumeration and verification
    #[arg(long, global = true, env = "QDESIGN_WORKERS")]
    workers: Option<usize>,

    /// Print a single JSON object instead of text
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SearchMethod {
    Exhaustive,
    Greedy,
}

#[derive(Subcommand)]
enum Command {
    /// Gaussian binomial coefficient [n k]_q
    Qbinom {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Also evaluate the subset-sum expansion and compare
        #[arg(long)]
        via_sum: bool,
        /// Also check q^{k(n-k)} <= [n k]_q <= C(n,k) q^{k(n-k)}
        #[arg(long)]
        bounds: bool,
        #[arg(long, default_value_t = SUM_TERMS_CAP)]
        max_terms: u64,
    },
    /// List the k-subspaces of F_q^n in canonical order
    Enumerate {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        count_only: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long, default_value_t = ENUMERATION_CAP)]
        max_subspaces: u64,
    },
    /// Build the k-vs-t incidence matrix and report its parameters
    Incidence {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: usize,
        /// Report the closed-form weights without building the matrix
        #[arg(long)]
        weights_only: bool,
        /// Write the matrix as a plain PBM (P1) bitmap
        #[arg(long)]
        export: Option<PathBuf>,
        #[arg(long, default_value_t = INCIDENCE_BITS_CAP)]
        max_cells: u64,
    },
    /// Check whether a design file is a t-design
    Verify {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = VERIFY_CAP)]
        max_subspaces: u64,
    },
    /// Solve the local-decoding system D f = m e_t
    Decode {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        k: usize,
        /// Build and check the certificate for one t-subspace of F_q^n
        #[arg(long, requires = "n")]
        certify: bool,
        #[arg(long)]
        n: Option<usize>,
        /// Canonical index of the decoded t-subspace
        #[arg(long, default_value_t = 0)]
        v_index: u64,
        /// Also check the determinant and diagonal bounds and c3
        #[arg(long)]
        bounds: bool,
        #[arg(long, default_value_t = CERTIFICATE_CAP)]
        max_rows: u64,
    },
    /// Compare the two-subspace count formula with enumeration on F_q^n
    #[command(name = "lemma2-check")]
    Lemma2Check {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: usize,
        /// Largest k checked (default n)
        #[arg(long)]
        k_max: Option<usize>,
        /// Cap on the number of ordered pairs of t-subspaces
        #[arg(long, default_value_t = 1_000_000)]
        max_pairs: u64,
    },
    /// Exact bounds and feasibility of the row-sampling inequality
    #[command(name = "klp-report")]
    KlpReport {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: usize,
        /// The absolute constant c (feasibility is relative to it)
        #[arg(long, default_value = "1")]
        constant: BigInt,
    },
    /// Search for a simple t-(n,k,lambda) design
    Search {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = 1)]
        lambda: u32,
        #[arg(long, value_enum, default_value = "exhaustive")]
        method: SearchMethod,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Seconds before giving up
        #[arg(long, default_value_t = 60)]
        timeout: u64,
        /// Write the design here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every invariant suite
    Selftest,
}

enum Failure {
    Math(String),
    Usage(String),
    Cap(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::TooLarge { .. } | Error::TooManyTerms { .. } => {
                Failure::Cap(format!("{e}; the matching --max-* option raises the cap"))
            }
            Error::DegenerateSystem(_) | Error::SingularMap => Failure::Math(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

/// Stdout text plus whether the mathematical outcome was a success.
struct Output {
    text: String,
    ok: bool,
}

fn emit(json: bool, command: &str, mut value: Value, text: String, ok: bool) -> Output {
    if json {
        let obj = value.as_object_mut().expect("reports are objects");
        obj.insert("schema_version".into(), json!(SCHEMA_VERSION));
        obj.insert("command".into(), json!(command));
        Output { text: serde_json::to_string_pretty(&value).expect("json values serialize") + "\n", ok }
    } else {
        Output { text, ok }
    }
}

fn to_value(x: &impl serde::Serialize) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn joined(s: &SubspaceBasis) -> String {
    if s.dim() == 0 {
        "0".into()
    } else {
        s.to_lines().join("|")
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .expect("the global pool is configured once");
    }
    match run(&cli) {
        Ok(out) => {
            print!("{}", out.text);
            ExitCode::from(if out.ok { 0 } else { 1 })
        }
        Err(Failure::Math(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Cap(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    let json = cli.json;
    match &cli.command {
        Command::Qbinom { q, n, k, via_sum, bounds, max_terms } => {
            make_field(*q)?;
            let value = gaussian(*n, *k, *q);
            let mut text = format!("{value}\n");
            let mut report = json!({ "q": q, "n": n, "k": k, "value": value.to_string() });
            let mut ok = true;
            if *via_sum {
                if k > n {
                    return Err(Failure::Usage(format!("k = {k} exceeds n = {n}")));
                }
                let s = q_binomial_via_sum_capped(*n, *k, *q, *max_terms)?;
                ok &= s == value;
                writeln!(text, "via sum: {s}").unwrap();
                report["via_sum"] = json!(s.to_string());
                report["agree"] = json!(s == value);
            }
            if *bounds {
                if k > n {
                    return Err(Failure::Usage(format!("k = {k} exceeds n = {n}")));
                }
                let b = check_bounds(*n, *k, *q);
                ok &= b.ok;
                writeln!(text, "bounds: {} <= {} <= {} ({})", b.lower, b.value, b.upper, verdict(b.ok)).unwrap();
                report["bounds"] = to_value(&b);
            }
            Ok(emit(json, "qbinom", report, text, ok))
        }

        Command::Enumerate { q, n, k, count_only, format, max_subspaces } => {
            let field = make_field(*q)?;
            if k > n {
                return Err(Failure::Usage(format!("k = {k} exceeds n = {n}")));
            }
            let json = json || matches!(format, Format::Json);
            if *count_only {
                let count = gaussian(*n, *k, *q);
                let report = json!({ "q": q, "n": n, "k": k, "count": count.to_string() });
                return Ok(emit(json, "enumerate", report, format!("{count}\n"), true));
            }
            let list = enumerate_subspaces_capped(*n, *k, &field, *max_subspaces)?;
            let mut text = String::new();
            for (i, s) in list.iter().enumerate() {
                if i > 0 {
                    text.push('\n');
                }
                for line in s.to_lines() {
                    text.push_str(&line);
                    text.push('\n');
                }
            }
            let report = json!({
                "q": q, "n": n, "k": k,
                "count": list.len().to_string(),
                "subspaces": list.iter().map(SubspaceBasis::to_lines).collect::<Vec<_>>(),
            });
            Ok(emit(json, "enumerate", report, text, true))
        }

        Command::Incidence { q, n, k, t, weights_only, export, max_cells } => {
            let field = make_field(*q)?;
            if !(t <= k && k <= n) {
                return Err(Failure::Usage(format!("need t <= k <= n, got t={t} k={k} n={n}")));
            }
            let rows = gaussian(*n, *k, *q);
            let cols = gaussian(*n, *t, *q);
            let row_w = gaussian(*k, *t, *q);
            let col_w = gaussian(n - t, k - t, *q);
            let mut report = json!({
                "q": q, "n": n, "k": k, "t": t,
                "rows": rows.to_string(), "cols": cols.to_string(),
                "row_weight": row_w.to_string(), "col_weight": col_w.to_string(),
            });
            let mut text = format!(
                "rows (k-subspaces): {rows}\ncols (t-subspaces): {cols}\nrow weight: {row_w}\ncolumn weight: {col_w}\n"
            );
            if *weights_only {
                return Ok(emit(json, "incidence", report, text, true));
            }
            let m = build_incidence_capped(*n, *k, *t, &field, *max_cells)?;
            let avg = average_row(&m);
            let c2 = m.boundedness();
            writeln!(text, "total ones: {}\nc2 (largest entry): {c2}\naverage row entry: {avg}", m.total_ones()).unwrap();
            report["total_ones"] = json!(m.total_ones().to_string());
            report["c2"] = json!(c2.to_string());
            report["average_row_entry"] = json!(avg.to_string());
            if let Some(path) = export {
                std::fs::write(path, m.to_pbm()).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
                writeln!(text, "wrote {}", path.display()).unwrap();
                report["export"] = json!(path.display().to_string());
            }
            Ok(emit(json, "incidence", report, text, true))
        }

        Command::Verify { design, t, max_subspaces } => {
            let src = std::fs::read_to_string(design)
                .map_err(|e| Failure::Usage(format!("{}: {e}", design.display())))?;
            let cand = DesignCandidate::parse(&src)?;
            let rep = verify_design_capped(&cand, *t, *max_subspaces)?;
            let mut text = format!(
                "q = {}, n = {}, k = {}, t = {}, blocks = {}\n",
                cand.field().q(),
                cand.n(),
                cand.k(),
                t,
                rep.blocks
            );
            match &rep.lambda {
                Some(l) => writeln!(text, "design: yes, lambda = {l}").unwrap(),
                None => writeln!(text, "design: no").unwrap(),
            }
            writeln!(text, "simple: {}\ntrivial: {}", yes_no(rep.is_simple), yes_no(rep.is_trivial)).unwrap();
            let hist: Vec<String> = rep.counts_histogram.iter().map(|(c, s)| format!("{c}: {s}")).collect();
            writeln!(text, "coverage histogram: {{{}}}", hist.join(", ")).unwrap();
            if let Some(f) = &rep.failing_t_subspace {
                writeln!(text, "first failing t-subspace: {}", joined(f)).unwrap();
            }
            Ok(emit(json, "verify", rep.to_json_value(), text, rep.is_design))
        }

        Command::Decode { q, t, k, certify, n, v_index, bounds, max_rows } => {
            let field = make_field(*q)?;
            let sys = solve_coefficients(*q, *t, *k)?;
            let mut text = String::from("D:\n");
            for row in &sys.d {
                let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
                writeln!(text, "  {}", cells.join(" ")).unwrap();
            }
            let f: Vec<String> = sys.f.iter().map(|x| x.to_string()).collect();
            writeln!(text, "m: {}\nf: {}", sys.m, f.join(" ")).unwrap();
            let mut report = to_value(&sys);
            let mut ok = true;
            if *bounds {
                let b = check_det_bounds(*q, *t, *k)?;
                for line in &b.lines {
                    writeln!(text, "bound {}: {} <= {} ({})", line.name, line.lhs, line.rhs, verdict(line.ok)).unwrap();
                }
                let c3 = c3_bound_capped(*q, *t, *k, *max_rows)?;
                match &c3.exact_c3 {
                    Some(x) => writeln!(text, "c3: {x} <= {} ({})", c3.bound, verdict(c3.ok == Some(true))).unwrap(),
                    None => writeln!(text, "c3: not computed (above --max-rows); bound {}", c3.bound).unwrap(),
                }
                ok &= b.ok && c3.ok != Some(false);
                report["bounds"] = to_value(&b);
                report["c3"] = to_value(&c3);
            }
            if *certify {
                let n = n.expect("clap enforces --n with --certify");
                if n < t + k {
                    return Err(Failure::Usage(format!("--certify needs n >= t + k, got n={n}")));
                }
                let index = GrassmannIndex::new(&field, n, *t)?;
                if *v_index >= index.len() {
                    return Err(Failure::Usage(format!("--v-index must be below {}", index.len())));
                }
                let v = index.unrank(*v_index);
                let cert = decode_certificate_capped(&v, *k, *max_rows)?;
                let check = verify_certificate(&cert)?;
                writeln!(text, "certificate for V = {} in F_{q}^{n}", joined(&v)).unwrap();
                writeln!(text, "envelope W: {}", joined(&cert.envelope)).unwrap();
                writeln!(text, "rows used: {}\nl1 norm: {}", cert.coefficients.len(), cert.l1_norm).unwrap();
                writeln!(
                    text,
                    "checked {} t-subspaces: {} at V, {} nonzero elsewhere ({})",
                    check.t_subspaces_checked,
                    check.value_at_target,
                    check.nonzero_elsewhere,
                    verdict(check.ok)
                )
                .unwrap();
                ok &= check.ok;
                report["certificate"] = json!({
                    "n": n,
                    "v": v.to_lines(),
                    "envelope": cert.envelope.to_lines(),
                    "rows_used": cert.coefficients.len(),
                    "l1_norm": cert.l1_norm.to_string(),
                    "check": to_value(&check),
                });
            }
            Ok(emit(json, "decode", report, text, ok))
        }

        Command::Lemma2Check { q, n, t, k_max, max_pairs } => {
            let field = make_field(*q)?;
            if *t == 0 || t >= n {
                return Err(Failure::Usage(format!("need 1 <= t < n, got t={t} n={n}")));
            }
            let lines = gaussian(*n, *t, *q);
            let pairs = &lines * &lines;
            if pairs > BigInt::from(*max_pairs) {
                return Err(Failure::Cap(format!("{pairs} ordered pairs of t-subspaces, above --max-pairs {max_pairs}")));
            }
            let k_max = k_max.unwrap_or(*n);
            let s = check_lemma2_grid(&field, *n, *t, k_max)?;
            let mut text = format!(
                "q = {q}, n = {n}, t = {t}, k from {t} to {}\npairs: {}\ncount comparisons: {}\nsums over j: {}\ntwo-stage retracings: {}\n",
                k_max.min(*n),
                s.pairs,
                s.comparisons,
                s.sum_checks,
                s.intermediate_checks
            );
            for (class, count) in &s.classes {
                writeln!(text, "  {class}: {count}").unwrap();
            }
            for f in s.failures.iter().take(20) {
                writeln!(text, "FAIL {f}").unwrap();
            }
            writeln!(text, "result: {}", verdict(s.ok())).unwrap();
            let ok = s.ok();
            Ok(emit(json, "lemma2-check", to_value(&s), text, ok))
        }

        Command::KlpReport { q, n, k, t, constant } => {
            make_field(*q)?;
            let r = klp_report(*q, *n, *k, *t, constant)?;
            let mut report = to_value(&r);
            let mut text = format!("q = {q}, n = {n}, k = {k}, t = {t}, constant = {constant}\n");
            let p = |x: &BigInt| power_or_plain(x, *q);
            writeln!(text, "c1 bound: {}", p(&r.c1_bound)).unwrap();
            writeln!(text, "c2: {}", r.c2).unwrap();
            writeln!(text, "c3 bound: {}", p(&r.c3_bound)).unwrap();
            writeln!(text, "|A| upper: {}", p(&r.a_upper)).unwrap();
            writeln!(text, "|B| lower: {}", p(&r.b_lower)).unwrap();
            if let (Some(a), Some(b)) = (&r.a_exact, &r.b_exact) {
                writeln!(text, "|A| exact: {a}\n|B| exact: {b}").unwrap();
            }
            writeln!(text, "left-hand side: {}", plain(&r.rhs_final)).unwrap();
            writeln!(text, "log term: {}", r.log_reading).unwrap();
            writeln!(text, "feasible: {} ({})", r.feasible, r.feasibility_note).unwrap();
            writeln!(text, "block budget: {}", p(&r.block_budget)).unwrap();
            for th in &r.thresholds {
                writeln!(text, "threshold {}: {}", th.label, th.satisfied).unwrap();
            }
            if *n <= qdesign::klp::EXACT_N_MAX && t <= k {
                let w = divisibility_witness(*q, *n, *k, *t)?;
                writeln!(text, "divisibility witness m [n t]_q: {} (integral: {})", w.witness, w.integral).unwrap();
                report["divisibility_witness"] = to_value(&w);
            }
            Ok(emit(json, "klp-report", report, text, true))
        }

        Command::Search { q, n, k, t, lambda, method, seed, timeout, out } => {
            let field = make_field(*q)?;
            let method = match method {
                SearchMethod::Exhaustive => Method::Exhaustive,
                SearchMethod::Greedy => Method::Greedy,
            };
            let outcome = search_design(&field, *n, *k, *t, *lambda, method, *seed, Duration::from_secs(*timeout))
                .map_err(|e| match e {
                    Error::TooLarge { .. } => Failure::Cap(format!(
                        "{e}; search is meant for desk-scale parameters only (exhaustive: at most \
                         {EXHAUSTIVE_UNIVERSE_CAP} t-subspaces and {EXHAUSTIVE_CANDIDATE_CAP} k-subspaces)"
                    )),
                    e => e.into(),
                })?;
            let stats = outcome.stats().clone();
            let mut report = json!({
                "q": q, "n": n, "k": k, "t": t, "lambda": lambda,
                "method": to_value(&method), "seed": seed,
                "stats": to_value(&stats),
            });
            match outcome {
                SearchOutcome::Found(design, _) => {
                    report["status"] = json!("found");
                    report["blocks"] = json!(design.len());
                    let mut text = String::new();
                    match out {
                        Some(path) => {
                            std::fs::write(path, design.to_text())
                                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
                            writeln!(text, "found {} blocks; wrote {}", design.len(), path.display()).unwrap();
                        }
                        None => {
                            report["design"] = json!(design.blocks().iter().map(SubspaceBasis::to_lines).collect::<Vec<_>>());
                            text = design.to_text();
                        }
                    }
                    Ok(emit(json, "search", report, text, true))
                }
                SearchOutcome::NotFound(_) => {
                    report["status"] = json!("not_found");
                    let text = format!("no simple {t}-({n},{k},{lambda}) design over F_{q} ({} nodes)\n", stats.nodes);
                    Ok(emit(json, "search", report, text, false))
                }
                SearchOutcome::Timeout(_) => {
                    if json {
                        report["status"] = json!("timeout");
                        let out = emit(true, "search", report, String::new(), false);
                        print!("{}", out.text);
                    }
                    Err(Failure::Cap(format!(
                        "timed out after {timeout} s: best partial {} blocks, {} of {} t-subspaces complete",
                        stats.best_blocks, stats.best_covered, stats.universe
                    )))
                }
            }
        }

        Command::Selftest => {
            let r = selftest::run()?;
            let suites: Vec<Value> = r
                .suites
                .iter()
                .map(|s| json!({ "module": s.module, "name": s.name, "ok": s.ok, "detail": s.detail }))
                .collect();
            let report = json!({ "suites": suites, "failed": r.failed(), "ok": r.ok() });
            Ok(emit(json, "selftest", report, r.to_text(), r.ok()))
        }
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Integers longer than this many digits are summarized in text output; JSON
/// always carries every digit.
const TEXT_DIGITS: usize = 60;

fn plain(x: &BigInt) -> String {
    let s = x.to_string();
    if s.len() <= TEXT_DIGITS {
        s
    } else {
        format!("{}-digit integer, bit length {}", s.len(), x.bits())
    }
}

/// `q^e` when `x` is an exact power of `q`, with the digits when they are short.
fn power_or_plain(x: &BigInt, q: u32) -> String {
    let mut e = 0u64;
    let mut y = x.clone();
    let qb = BigInt::from(q);
    while y > BigInt::from(1) && (&y % &qb) == BigInt::from(0) {
        y /= &qb;
        e += 1;
    }
    if y != BigInt::from(1) {
        return plain(x);
    }
    let s = x.to_string();
    if s.len() <= TEXT_DIGITS {
        format!("{q}^{e} = {s}")
    } else {
        format!("{q}^{e}")
    }
}
