//! Univariate moment features of a spectrum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Standard deviations below this are treated as zero.
pub const DEGENERATE_STD: f64 = 1e-12;

/// Mean, sample standard deviation, skewness and excess kurtosis.
///
/// The standard deviation uses the `L - 1` divisor while the third and
/// fourth central moments are averaged over `L`; skewness and kurtosis are
/// those moments divided by the matching power of that standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatFeature {
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

impl StatFeature {
    pub const DIM: usize = 4;

    pub fn to_array(self) -> [f64; 4] {
        [self.mean, self.std, self.skewness, self.kurtosis]
    }
}

/// Row-major flattening of the spectrum.
pub fn flatten(spec: &Spectrum) -> Vec<f64> {
    spec.plane().data().to_vec()
}

pub fn statistical_feature(values: &[f64]) -> Result<StatFeature> {
    let len = values.len();
    if len < 2 {
        return Err(Error::InsufficientData(format!(
            "moment features need at least 2 values, got {len}"
        )));
    }
    let n = len as f64;
    let mean = values.iter().sum::<f64>() / n;

    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let std = (m2 / (n - 1.0)).sqrt();
    if std < DEGENERATE_STD {
        return Ok(StatFeature {
            mean,
            std,
            skewness: 0.0,
            kurtosis: 0.0,
        });
    }
    Ok(StatFeature {
        mean,
        std,
        skewness: (m3 / n) / std.powi(3),
        kurtosis: (m4 / n) / std.powi(4) - 3.0,
    })
}

pub fn spectrum_statistics(spec: &Spectrum) -> Result<StatFeature> {
    statistical_feature(spec.plane().data())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plane::Plane;

    #[test]
    fn two_point_hand_case() {
        let f = statistical_feature(&[0.0, 1.0]).unwrap();
        assert_eq!(f.mean, 0.5);
        assert!((f.std - 0.7071067812).abs() < 1e-10);
        assert!(f.skewness.abs() < 1e-15);
        // m4/L = 0.0625, std^4 = 0.25
        assert!((f.kurtosis + 2.75).abs() < 1e-12);
    }

    #[test]
    fn degenerate_constant() {
        let f = statistical_feature(&[0.3; 4]).unwrap();
        assert!((f.mean - 0.3).abs() < 1e-15);
        assert_eq!((f.std, f.skewness, f.kurtosis), (0.0, 0.0, 0.0));
    }

    #[test]
    fn symmetric_has_zero_skew() {
        let f = statistical_feature(&[0.1, 0.4, 0.5, 0.6, 0.9]).unwrap();
        assert!(f.skewness.abs() < 1e-12);
    }

    #[test]
    fn too_short() {
        assert!(statistical_feature(&[1.0]).is_err());
        assert!(statistical_feature(&[]).is_err());
    }

    #[test]
    fn flatten_is_row_major() {
        let s = Spectrum::new(Plane::from_rows(&[vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap()).unwrap();
        assert_eq!(flatten(&s), vec![0.1, 0.2, 0.3, 0.4]);
        let single = Spectrum::new(Plane::filled(1, 1, 0.7)).unwrap();
        assert_eq!(flatten(&single), vec![0.7]);
        assert_eq!(flatten(&Spectrum::new(Plane::zeros(256, 256)).unwrap()).len(), 65536);
    }
}
