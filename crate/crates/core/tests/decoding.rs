use num_bigint::BigInt;
use proptest::prelude::*;

use qdesign::grassmann::{apply_map, GrassmannIndex};
use qdesign::localdecode::verify_certificate;
use qdesign::{build_incidence, decode_certificate, make_field, random_invertible, solve_coefficients};

#[test]
fn certificate_rows_lie_in_the_incidence_matrix() {
    let f2 = make_field(2).unwrap();
    let m = build_incidence(4, 2, 1, &f2).unwrap();
    let rows = GrassmannIndex::new(&f2, 4, 2).unwrap();
    let cols = GrassmannIndex::new(&f2, 4, 1).unwrap();
    for v in cols.iter() {
        let cert = decode_certificate(&v, 2).unwrap();
        let mut acc = vec![BigInt::from(0); cols.len() as usize];
        for (w, c) in &cert.coefficients {
            let r = rows.rank(w) as usize;
            for (a, x) in acc.iter_mut().enumerate() {
                *x += c * BigInt::from(m.get(r, a));
            }
        }
        let target = cols.rank(&v) as usize;
        for (a, x) in acc.iter().enumerate() {
            assert_eq!(*x, if a == target { cert.m.clone() } else { BigInt::from(0) });
        }
    }
}

#[test]
fn coefficient_signs_alternate() {
    for q in [2, 3, 4] {
        for t in 1..=3 {
            for k in t + 1..=t + 3 {
                let s = solve_coefficients(q, t, k).unwrap();
                assert!(s.m > BigInt::from(0));
                for j in 0..=t {
                    let positive = s.f[j] > BigInt::from(0);
                    assert_eq!(positive, (t - j) % 2 == 0, "q={q} t={t} k={k} j={j}: {:?}", s.f);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn certificates_transport_under_gl(seed in any::<u64>(), index in 0u64..31) {
        let f2 = make_field(2).unwrap();
        let v = GrassmannIndex::new(&f2, 5, 1).unwrap().unrank(index);
        let l = random_invertible(&f2, 5, seed);
        let u = apply_map(&l, &v).unwrap();
        let a = decode_certificate(&v, 2).unwrap();
        let b = decode_certificate(&u, 2).unwrap();
        prop_assert_eq!(&a.l1_norm, &b.l1_norm);
        prop_assert_eq!(&a.m, &b.m);
        prop_assert!(verify_certificate(&b).unwrap().ok);
    }
}
