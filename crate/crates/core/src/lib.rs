//! Exact computations for subspace designs (q-analogs of combinatorial designs).
//!
//! The building blocks are finite-field linear algebra ([`gf`]), exact Gaussian
//! binomials ([`qcount`]) and canonical subspaces ([`grassmann`]). On top of those:
//! the `t`-vs-`k` incidence structure ([`incidence`]), design verification
//! ([`verifier`]), the local-decoding coefficient system ([`localdecode`]), the
//! existence-bound report ([`klp`]), small exhaustive design search ([`search`]) and a
//! deterministic self-test over all of the above ([`selftest`]).

pub mod error;
pub mod gf;
pub mod grassmann;
pub mod incidence;
pub mod klp;
pub mod localdecode;
pub mod qcount;
pub mod report;
pub mod search;
pub mod selftest;
pub mod verifier;

pub use error::{Error, Result};
pub use gf::{make_field, random_invertible, FieldSpec, Matrix};
pub use grassmann::{
    apply_map, contains, enumerate_subspaces, extensions, intersect_dim, GrassmannIndex,
    SubspaceBasis,
};
pub use qcount::{check_bounds, q_binomial, q_binomial_via_sum, q_factorial, ExactInteger};
pub use incidence::{build_incidence, IncidenceStructure};
pub use localdecode::{decode_certificate, solve_coefficients, CoefficientCertificate, DecodeSystem};
pub use verifier::{verify_design, DesignCandidate, VerificationReport};
pub use klp::{divisibility_witness, klp_report, KLPReport};
pub use search::{search_design, Method, SearchOutcome};
