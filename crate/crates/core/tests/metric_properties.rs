use fgpd::evaluation::{confusion, roc, ConfusionMatrix};
use fgpd::Label;
use proptest::prelude::*;

fn pair_count_auc(labels: &[Label], scores: &[f64]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, li) in labels.iter().enumerate() {
        for (j, lj) in labels.iter().enumerate() {
            if *li == Label::Real && *lj == Label::Fake {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

fn instance() -> impl Strategy<Value = (Vec<Label>, Vec<f64>)> {
    (2usize..100).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::bool::ANY, n).prop_map(|b| {
                let mut l: Vec<Label> = b.into_iter().map(|r| if r { Label::Real } else { Label::Fake }).collect();
                l[0] = Label::Real;
                l[1] = Label::Fake;
                l
            }),
            // coarse values so ties are common
            prop::collection::vec((-10i32..10).prop_map(|v| v as f64 / 4.0), n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn auc_matches_pair_counting((labels, scores) in instance()) {
        let r = roc(&labels, &scores).unwrap();
        prop_assert!((r.auc - pair_count_auc(&labels, &scores)).abs() <= 1e-12);
    }

    #[test]
    fn roc_ignores_monotone_transforms((labels, scores) in instance()) {
        let warped: Vec<f64> = scores.iter().map(|s| (0.7 * s).exp() + s).collect();
        prop_assert_eq!(roc(&labels, &scores).unwrap(), roc(&labels, &warped).unwrap());
    }

    #[test]
    fn metrics_ignore_order((labels, scores) in instance(), rot in 0usize..100) {
        let preds: Vec<Label> = scores.iter().map(|&s| Label::from_decision(s)).collect();
        let k = rot % labels.len();
        let (mut l2, mut p2) = (labels.clone(), preds.clone());
        l2.rotate_left(k);
        p2.rotate_left(k);
        prop_assert_eq!(confusion(&labels, &preds).unwrap(), confusion(&l2, &p2).unwrap());
    }
}

#[test]
fn worked_confusion_case() {
    let cm = ConfusionMatrix { tp: 50, fp: 5, tn: 45, fn_: 0 };
    assert!((cm.accuracy() - 0.95).abs() < 1e-12);
    assert!((cm.f1() - 100.0 / 105.0).abs() < 1e-12);
    assert!((cm.f1() - 0.9524).abs() < 5e-5);
}
