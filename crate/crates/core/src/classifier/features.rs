use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::FisherVector;
use crate::stats::StatFeature;

/// Fisher vector length for 16 components over 9 orientation bins.
pub const DEFAULT_FISHER_DIM: usize = 2 * 16 * 9;

/// `[statistics | fisher vector | blob count]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Offsets of the three feature families inside a [`FeatureVector`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub fisher_dim: usize,
}

impl Default for FeatureLayout {
    fn default() -> Self {
        FeatureLayout {
            fisher_dim: DEFAULT_FISHER_DIM,
        }
    }
}

impl FeatureLayout {
    pub fn new(fisher_dim: usize) -> Self {
        FeatureLayout { fisher_dim }
    }

    pub fn dim(&self) -> usize {
        StatFeature::DIM + self.fisher_dim + 1
    }

    pub fn stat_range(&self) -> std::ops::Range<usize> {
        0..StatFeature::DIM
    }

    pub fn fisher_range(&self) -> std::ops::Range<usize> {
        StatFeature::DIM..StatFeature::DIM + self.fisher_dim
    }

    pub fn blob_index(&self) -> usize {
        StatFeature::DIM + self.fisher_dim
    }

    pub fn assemble(&self, stat: &StatFeature, fv: &FisherVector, blob: f64) -> Result<FeatureVector> {
        if fv.len() != self.fisher_dim {
            return Err(Error::mismatch(
                format!("{}-dim fisher vector", self.fisher_dim),
                fv.len(),
            ));
        }
        let mut out = Vec::with_capacity(self.dim());
        out.extend_from_slice(&stat.to_array());
        out.extend_from_slice(fv.as_slice());
        out.push(blob);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("feature values must be finite".into()));
        }
        Ok(FeatureVector(out))
    }
}

/// Concatenates the three families using the default 288-dim Fisher layout.
pub fn assemble_feature(stat: &StatFeature, fv: &FisherVector, blob: f64) -> Result<FeatureVector> {
    FeatureLayout::default().assemble(stat, fv, blob)
}

/// Which feature families participate in a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureMask {
    pub stat: bool,
    pub hog: bool,
    pub blob: bool,
}

impl Default for FeatureMask {
    fn default() -> Self {
        FeatureMask::ALL
    }
}

impl FeatureMask {
    pub const ALL: FeatureMask = FeatureMask {
        stat: true,
        hog: true,
        blob: true,
    };

    /// The six subsets compared in the ablation study, in table order.
    pub const ABLATION: [FeatureMask; 6] = [
        FeatureMask { stat: true, hog: false, blob: false },
        FeatureMask { stat: false, hog: true, blob: false },
        FeatureMask { stat: false, hog: true, blob: true },
        FeatureMask { stat: true, hog: true, blob: false },
        FeatureMask { stat: true, hog: false, blob: true },
        FeatureMask { stat: true, hog: true, blob: true },
    ];

    pub fn is_empty(&self) -> bool {
        !(self.stat || self.hog || self.blob)
    }

    pub fn dim(&self, layout: &FeatureLayout) -> usize {
        self.stat as usize * StatFeature::DIM + self.hog as usize * layout.fisher_dim + self.blob as usize
    }

    /// Copies the enabled families out of a full vector, preserving order.
    pub fn select(&self, layout: &FeatureLayout, full: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim(layout));
        if self.stat {
            out.extend_from_slice(&full[layout.stat_range()]);
        }
        if self.hog {
            out.extend_from_slice(&full[layout.fisher_range()]);
        }
        if self.blob {
            out.push(full[layout.blob_index()]);
        }
        out
    }

    /// Short name such as `stat+hog+blob`.
    pub fn name(&self) -> String {
        let parts: Vec<&str> = [(self.stat, "stat"), (self.hog, "hog"), (self.blob, "blob")]
            .into_iter()
            .filter_map(|(on, n)| on.then_some(n))
            .collect();
        if parts.is_empty() {
            "none".into()
        } else {
            parts.join("+")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stat() -> StatFeature {
        StatFeature { mean: 1.0, std: 2.0, skewness: 3.0, kurtosis: 4.0 }
    }

    #[test]
    fn zero_assembly() {
        let zero = StatFeature { mean: 0.0, std: 0.0, skewness: 0.0, kurtosis: 0.0 };
        let f = assemble_feature(&zero, &FisherVector(vec![0.0; 288]), 0.0).unwrap();
        assert_eq!(f.0, vec![0.0; 293]);
    }

    #[test]
    fn layout_offsets() {
        let fv: Vec<f64> = (0..288).map(|i| i as f64 / 1000.0).collect();
        let f = assemble_feature(&stat(), &FisherVector(fv.clone()), 9.0).unwrap();
        let layout = FeatureLayout::default();
        assert_eq!(&f.0[0..4], &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(&f.0[4..292], fv.as_slice());
        assert_eq!(f.0[292], 9.0);
        assert_eq!(layout.blob_index(), 292);
        assert_eq!(layout.dim(), 293);
    }

    #[test]
    fn wrong_fisher_length() {
        assert!(assemble_feature(&stat(), &FisherVector(vec![0.0; 287]), 0.0).is_err());
    }

    #[test]
    fn masks() {
        let layout = FeatureLayout::default();
        let full: Vec<f64> = (0..293).map(|i| i as f64).collect();
        let only_stat = FeatureMask::ABLATION[0];
        assert_eq!(only_stat.select(&layout, &full), vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(only_stat.dim(&layout), 4);
        let stat_blob = FeatureMask::ABLATION[4];
        assert_eq!(stat_blob.select(&layout, &full), vec![0.0, 1.0, 2.0, 3.0, 292.0]);
        assert_eq!(FeatureMask::ALL.select(&layout, &full), full);
        assert_eq!(FeatureMask::ABLATION[2].name(), "hog+blob");
    }
}
