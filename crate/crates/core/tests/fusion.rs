mod common;

use common::*;
use hgr_core::nn::{fuse_scores_average, fuse_scores_max, predict, ScoreVector};
use proptest::prelude::*;

fn simplex_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    prop_oneof![Just(14usize), Just(28usize)].prop_flat_map(|c| {
        (
            prop::collection::vec(1e-6f64..1.0, c).prop_map(|v| simplex(&v)),
            prop::collection::vec(1e-6f64..1.0, c).prop_map(|v| simplex(&v)),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn simplex_pairs_satisfy_fusion_oracles((a, b) in simplex_pair()) {
        prop_assert_eq!(check_fusion_pair(&a, &b), Ok(()));
    }

    #[test]
    fn average_is_linear((a, b) in simplex_pair(), k in 0.0f64..4.0) {
        let scaled = |v: &[f64]| ScoreVector(v.iter().map(|x| x * k).collect());
        let lhs = fuse_scores_average(&scaled(&a), &scaled(&b)).unwrap();
        let rhs = fuse_scores_average(&ScoreVector(a.clone()), &ScoreVector(b.clone())).unwrap();
        for (x, y) in lhs.0.iter().zip(&rhs.0) {
            prop_assert!((x - k * y).abs() <= 1e-12);
        }
    }

    #[test]
    fn max_is_monotone((a, b) in simplex_pair(), bump in 0.0f64..0.5, at in 0usize..14) {
        let base = fuse_scores_max(&ScoreVector(a.clone()), &ScoreVector(b.clone())).unwrap();
        let mut a2 = a.clone();
        a2[at] += bump;
        let raised = fuse_scores_max(&ScoreVector(a2), &ScoreVector(b.clone())).unwrap();
        prop_assert!(raised.0.iter().zip(&base.0).all(|(r, s)| r >= s));
    }
}

#[test]
fn documented_examples() {
    let a = ScoreVector(vec![0.2, 0.8]);
    let b = ScoreVector(vec![0.6, 0.4]);
    let avg = fuse_scores_average(&a, &b).unwrap();
    assert!((avg.0[0] - 0.4).abs() < 1e-15 && (avg.0[1] - 0.6).abs() < 1e-15);
    let mx = fuse_scores_max(&a, &b).unwrap();
    assert_eq!(mx.0, vec![0.6, 0.8]);
    assert_eq!(predict(&mx.0).unwrap().get(), 2);
    assert_eq!(predict(&[0.1, 0.7, 0.2]).unwrap().get(), 2);
    assert_eq!(predict(&[0.25; 4]).unwrap().get(), 1);
    assert!(fuse_scores_average(&a, &ScoreVector(vec![1.0])).is_err());
    assert!(fuse_scores_max(&a, &ScoreVector(vec![1.0])).is_err());
    assert!(predict(&[]).is_err());
}
