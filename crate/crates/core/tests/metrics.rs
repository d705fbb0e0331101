mod common;

use std::path::Path;

use common::*;
use hgr_core::dataset::{ClassId, ClassMode};
use hgr_core::metrics::*;
use hgr_core::training::{accuracy, Prediction};
use proptest::prelude::*;

#[test]
fn hand_counted_confusion_matrix() {
    let pairs = [(1, 1), (1, 2), (2, 2), (3, 1), (3, 3), (3, 3), (2, 3), (1, 1), (2, 2), (3, 2)];
    let preds: Vec<Prediction> = pairs.iter().map(|&(t, p)| pred(t, p, 14)).collect();
    let cm = confusion_matrix(&preds, ClassMode::C14).unwrap();
    let expected = [[2, 1, 0], [0, 2, 1], [1, 1, 2]];
    for (i, row) in expected.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            assert_eq!(cm.get(ClassId(i as u16 + 1), ClassId(j as u16 + 1)), v, "cell ({i}, {j})");
        }
    }
    assert_eq!(cm.total(), 10);
    assert_eq!(cm.correct(), 6);
    let acc = per_class_accuracy(&cm);
    assert_eq!(acc[0], Some(2.0 / 3.0));
    assert_eq!(acc[2], Some(0.5));
    assert!(acc[3..].iter().all(Option::is_none));
    assert!(confusion_matrix(&[pred(1, 15, 28)], ClassMode::C14).is_err());
}

#[test]
fn per_class_accuracy_from_counts() {
    let mut counts = vec![vec![0u64; 14]; 14];
    counts[0][0] = 8;
    counts[0][1] = 2;
    counts[1][0] = 1;
    counts[1][1] = 9;
    // zero diagonal, uniform confusion
    for j in 0..14 {
        if j != 5 {
            counts[5][j] = 3;
        }
    }
    let cm = ConfusionMatrix::from_counts(ClassMode::C14, counts).unwrap();
    let acc = per_class_accuracy(&cm);
    assert_eq!(acc[0], Some(0.8));
    assert_eq!(acc[1], Some(0.9));
    assert_eq!(acc[5], Some(0.0));
    assert_eq!(acc[2], None);
}

#[test]
fn grab_row_reading() {
    // 100 grab sequences: 33 right, 42 read as pinch, the rest spread
    let mut preds = Vec::new();
    for k in 0..100 {
        let p = match k {
            0..=32 => 1,
            33..=74 => 4,
            _ => 2 + (k % 2) as u16,
        };
        preds.push(pred(1, p, 14));
    }
    let cm = confusion_matrix(&preds, ClassMode::C14).unwrap();
    assert_eq!(per_class_accuracy(&cm)[0], Some(0.33));
    let pct = cm.percent();
    let row = pct[0].as_ref().unwrap();
    assert!((row[3] - 42.0).abs() < 1e-12);
    assert!((row[0] - 33.0).abs() < 1e-12);
}

#[test]
fn lawrfd_documented_toy() {
    let preds = lawrfd_toy();
    assert_eq!(preds.len(), 20);
    assert_eq!(intra_pair_errors(&preds), 3);
    let cm = confusion_matrix(&preds, ClassMode::C28).unwrap();
    assert!((cm.accuracy() - 14.0 / 20.0).abs() < 1e-15);
    let collapsed = collapse_28_to_14(&cm).unwrap();
    assert!((collapsed.accuracy() - 17.0 / 20.0).abs() < 1e-15);
    assert!((lawrfd(&cm).unwrap() - 3.0 / 20.0).abs() < 1e-12);
    // (Grab, 1 finger) read as (Grab, 2 fingers): wrong before, right after
    let g = collapse_predictions(&[pred(1, 2, 28)]).unwrap();
    assert!(g[0].is_correct());
}

#[test]
fn intra_pair_only_confusion_collapses_to_perfect() {
    let preds: Vec<Prediction> = (1..=28u16).flat_map(|t| [pred(t, t, 28), pred(t, if t % 2 == 1 { t + 1 } else { t - 1 }, 28)]).collect();
    let cm = confusion_matrix(&preds, ClassMode::C28).unwrap();
    assert_eq!(cm.accuracy(), 0.5);
    assert_eq!(collapse_28_to_14(&cm).unwrap().accuracy(), 1.0);
    assert!((lawrfd(&cm).unwrap() - 0.5).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn collapse_properties(seed in any::<u64>(), n in 1usize..120) {
        let preds = random_predictions_28(&mut rng(seed), n);
        let cm = confusion_matrix(&preds, ClassMode::C28).unwrap();
        let c = collapse_28_to_14(&cm).unwrap();
        let l = lawrfd(&cm).unwrap();
        prop_assert_eq!(c.total(), cm.total());
        prop_assert!(c.accuracy() >= cm.accuracy());
        prop_assert!((0.0..=1.0).contains(&l));
        let intra = intra_pair_errors(&preds);
        prop_assert_eq!(l == 0.0, intra == 0);
        prop_assert!((l - intra as f64 / n as f64).abs() < 1e-12);
        let via_predictions = confusion_matrix(&collapse_predictions(&preds).unwrap(), ClassMode::C14).unwrap();
        prop_assert_eq!(via_predictions, c);
    }

    #[test]
    fn rates_and_round_trip(seed in any::<u64>(), n in 1usize..200) {
        let preds = random_predictions_28(&mut rng(seed), n);
        let cm = confusion_matrix(&preds, ClassMode::C28).unwrap();
        for (i, row) in cm.percent().iter().enumerate() {
            match row {
                Some(r) => prop_assert!((r.iter().sum::<f64>() - 100.0).abs() < 1e-9),
                None => prop_assert_eq!(cm.row_sum(i), 0),
            }
        }
        let back = ConfusionMatrix::from_counts_csv(&cm.to_counts_csv(), Path::new("cm.csv")).unwrap();
        prop_assert_eq!(per_class_accuracy(&back), per_class_accuracy(&cm));
        prop_assert_eq!(back, cm);
    }

    #[test]
    fn grain_summary_bounds(values in prop::collection::vec(0.0f64..100.0, 1..40)) {
        let s = grain_summary(&values).unwrap();
        prop_assert!(s.worst <= s.mean + 1e-9 && s.mean <= s.best + 1e-9);
        prop_assert!(s.std >= 0.0);
        prop_assert_eq!(s.n_units, values.len());
    }
}

fn fold(fold: u32, pairs: &[(u16, u16)]) -> FoldPredictions {
    FoldPredictions {
        fold,
        predictions: pairs.iter().map(|&(t, p)| Prediction { subject: fold, ..pred(t, p, 14) }).collect(),
    }
}

#[test]
fn both_grain_is_recomputed_from_units() {
    // fold 1: fine 1/2, coarse 2/2; fold 2: fine 2/2, coarse 0/1
    let folds = [fold(1, &[(1, 1), (3, 2), (2, 2), (7, 7)]), fold(2, &[(1, 1), (4, 4), (8, 9)])];
    let r = aggregate_folds("n", ClassMode::C14, &folds, &[1, 2]).unwrap();
    assert_eq!((r.fold_grain.fine.unwrap().best, r.fold_grain.fine.unwrap().worst), (100.0, 50.0));
    assert_eq!((r.fold_grain.coarse.unwrap().best, r.fold_grain.coarse.unwrap().worst), (100.0, 0.0));
    let both = grain_summary(&[75.0, 200.0 / 3.0]).unwrap();
    assert_eq!(r.fold_grain.both, Some(both));
    assert!((r.pooled_accuracy - 5.0 / 7.0).abs() < 1e-15);
    let accs: Vec<f64> = folds.iter().map(|f| accuracy(&f.predictions)).collect();
    assert_eq!(r.fold_accuracies, vec![(1, accs[0]), (2, accs[1])]);
}

#[test]
fn identical_folds_pool_to_the_fold_accuracy() {
    let pairs = [(1, 1), (2, 3), (5, 5), (9, 9)];
    let r = aggregate_folds("n", ClassMode::C14, &[fold(1, &pairs), fold(2, &pairs)], &[1, 2]).unwrap();
    assert_eq!(r.pooled_accuracy, 0.75);
    assert_eq!(r.fold_grain.both.unwrap().std, 0.0);
}

#[test]
fn missing_grain_is_reported_as_absent() {
    // only Grab, a fine gesture
    let r = aggregate_folds("n", ClassMode::C14, &[fold(1, &[(1, 1), (1, 4)])], &[1]).unwrap();
    assert_eq!(r.fold_grain.coarse, None);
    assert_eq!(r.gesture_grain.coarse, None);
    assert_eq!(r.fold_grain.fine.unwrap().mean, 50.0);
    let table = render_grain_table(&[("n", &r.fold_grain)]);
    assert!(table.contains("n/a"));
    assert!(grain_table_csv(&[("n", &r.fold_grain)]).contains("n,fold,coarse,,,,,0"));
}
