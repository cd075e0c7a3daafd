use std::time::Duration;

use num_bigint::BigInt;
use proptest::prelude::*;

use qdesign::grassmann::GrassmannIndex;
use qdesign::search::{search_design, Method, SearchOutcome};
use qdesign::{enumerate_subspaces, make_field, random_invertible, verify_design, DesignCandidate};

fn spread(n: usize, k: usize) -> DesignCandidate {
    let f2 = make_field(2).unwrap();
    match search_design(&f2, n, k, 1, 1, Method::Exhaustive, 0, Duration::from_secs(60)).unwrap() {
        SearchOutcome::Found(d, _) => d,
        other => panic!("no spread for ({n},{k}): {other:?}"),
    }
}

#[test]
fn text_and_json_round_trip() {
    for q in [2, 3, 4, 11, 13] {
        let f = make_field(q).unwrap();
        let index = GrassmannIndex::new(&f, 3, 2).unwrap();
        let blocks = (0..index.len()).step_by(3).map(|i| index.unrank(i)).collect();
        let d = DesignCandidate::new(&f, 3, 2, blocks).unwrap();
        assert_eq!(DesignCandidate::parse(&d.to_text()).unwrap(), d);
        assert_eq!(DesignCandidate::parse(&d.to_json()).unwrap(), d);
        assert_eq!(DesignCandidate::parse(&d.to_text()).unwrap().to_text(), d.to_text());
    }
}

#[test]
fn malformed_files_are_rejected() {
    for src in ["", "2 4", "2 4 2\n1000\n", "2 4 2\n1000\n0200\n", "2 4 2\n1000\n1000\n", "6 4 2\n1000\n0100\n"] {
        assert!(DesignCandidate::parse(src).is_err(), "{src:?}");
    }
}

#[test]
fn union_with_image_doubles_lambda() {
    let s = spread(4, 2);
    let f2 = make_field(2).unwrap();
    for seed in 0..10 {
        let image = s.map(&random_invertible(&f2, 4, seed)).unwrap();
        let mut blocks = s.blocks().to_vec();
        blocks.extend_from_slice(image.blocks());
        let u = DesignCandidate::new(&f2, 4, 2, blocks).unwrap();
        let r = verify_design(&u, 1).unwrap();
        assert_eq!(r.lambda, Some(BigInt::from(2)));
        assert_eq!(r.is_simple, s.blocks().iter().all(|b| !image.blocks().contains(b)));
    }
}

#[test]
fn larger_spreads_verify() {
    let s = spread(6, 3);
    assert_eq!(s.len(), 9);
    let r = verify_design(&s, 1).unwrap();
    assert!(r.is_design && r.is_simple && !r.is_trivial);
    assert_eq!(verify_design(&spread(6, 2), 1).unwrap().lambda, Some(BigInt::from(1)));
}

#[test]
fn trivial_designs_for_every_t() {
    for q in [2, 3] {
        let f = make_field(q).unwrap();
        for n in 1..=4 {
            for k in 0..=n {
                let d = DesignCandidate::new(&f, n, k, enumerate_subspaces(n, k, &f).unwrap()).unwrap();
                for t in 0..=k {
                    let r = verify_design(&d, t).unwrap();
                    assert!(r.is_design && r.is_trivial);
                    assert_eq!(r.lambda, Some(qdesign::qcount::gaussian(n - t, k - t, q)));
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn images_of_a_spread_are_spreads(seed in any::<u64>()) {
        let s = spread(4, 2);
        let f2 = make_field(2).unwrap();
        let r = verify_design(&s.map(&random_invertible(&f2, 4, seed)).unwrap(), 1).unwrap();
        prop_assert!(r.is_design && r.is_simple);
        prop_assert_eq!(r.lambda, Some(BigInt::from(1)));
    }

    #[test]
    fn histogram_invariant_under_gl(seed in any::<u64>(), mask in 1u64..(1 << 35)) {
        let f2 = make_field(2).unwrap();
        let all = enumerate_subspaces(4, 2, &f2).unwrap();
        let blocks: Vec<_> = all.into_iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, b)| b).collect();
        let d = DesignCandidate::new(&f2, 4, 2, blocks).unwrap();
        let before = verify_design(&d, 1).unwrap();
        let after = verify_design(&d.map(&random_invertible(&f2, 4, seed)).unwrap(), 1).unwrap();
        prop_assert_eq!(&before.counts_histogram, &after.counts_histogram);
        prop_assert_eq!(before.is_design, after.is_design);
        let covered: u64 = before.counts_histogram.iter().map(|(c, s)| c * s).sum();
        prop_assert_eq!(covered, 3 * d.len() as u64);
    }

    #[test]
    fn greedy_results_always_verify(seed in 0u64..32) {
        let f2 = make_field(2).unwrap();
        if let SearchOutcome::Found(d, _) =
            search_design(&f2, 4, 2, 1, 1, Method::Greedy, seed, Duration::from_secs(10)).unwrap()
        {
            prop_assert!(verify_design(&d, 1).unwrap().is_design);
        }
    }
}
