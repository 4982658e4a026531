use fgpd::stats::statistical_feature;
use proptest::prelude::*;

/// Two-pass evaluation written independently of the library: sample std,
/// population central moments over that std.
fn oracle(s: &[f64]) -> [f64; 4] {
    let l = s.len() as f64;
    let mean = s.iter().sum::<f64>() / l;
    let dev: Vec<f64> = s.iter().map(|v| v - mean).collect();
    let std = (dev.iter().map(|d| d * d).sum::<f64>() / (l - 1.0)).sqrt();
    if std < 1e-12 {
        return [mean, std, 0.0, 0.0];
    }
    let m3 = dev.iter().map(|d| d * d * d).sum::<f64>() / l;
    let m4 = dev.iter().map(|d| d * d * d * d).sum::<f64>() / l;
    [mean, std, m3 / std.powi(3), m4 / std.powi(4) - 3.0]
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

fn sample() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 2..200)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn matches_brute_force(s in sample()) {
        let f = statistical_feature(&s).unwrap().to_array();
        let o = oracle(&s);
        for i in 0..4 {
            prop_assert!(close(f[i], o[i], 1e-10), "{i}: {} vs {}", f[i], o[i]);
        }
    }

    #[test]
    fn shift_moves_only_the_mean(s in sample(), c in -10.0f64..10.0) {
        let a = statistical_feature(&s).unwrap();
        let shifted: Vec<f64> = s.iter().map(|v| v + c).collect();
        let b = statistical_feature(&shifted).unwrap();
        prop_assert!(close(b.mean, a.mean + c, 1e-10));
        prop_assert!(close(b.std, a.std, 1e-10));
        prop_assert!(close(b.skewness, a.skewness, 1e-8));
        prop_assert!(close(b.kurtosis, a.kurtosis, 1e-8));
    }

    #[test]
    fn scale_covariance(s in sample(), a in 0.1f64..10.0) {
        let x = statistical_feature(&s).unwrap();
        let scaled: Vec<f64> = s.iter().map(|v| v * a).collect();
        let y = statistical_feature(&scaled).unwrap();
        prop_assert!(close(y.mean, a * x.mean, 1e-10));
        prop_assert!(close(y.std, a * x.std, 1e-10));
        prop_assert!(close(y.skewness, x.skewness, 1e-9));
        prop_assert!(close(y.kurtosis, x.kurtosis, 1e-9));
    }

    #[test]
    fn symmetric_sample_has_no_skew(half in prop::collection::vec(0.0f64..5.0, 1..50), m in -3.0f64..3.0) {
        let s: Vec<f64> = half.iter().flat_map(|d| [m + d, m - d]).collect();
        prop_assert!(statistical_feature(&s).unwrap().skewness.abs() < 1e-9);
    }
}

#[test]
fn two_point_case() {
    let f = statistical_feature(&[0.0, 1.0]).unwrap();
    assert_eq!(f.mean, 0.5);
    assert!((f.std - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    assert_eq!(f.skewness, 0.0);
    assert!((f.kurtosis + 2.75).abs() < 1e-12);
}

#[test]
fn constant_sample() {
    let f = statistical_feature(&[3.0; 4]).unwrap();
    assert_eq!(f.to_array(), [3.0, 0.0, 0.0, 0.0]);
}
