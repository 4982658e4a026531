use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::blob::BlobParams;
use crate::classifier::{FeatureMask, GridSpec, SolverSettings};
use crate::error::{Error, Result};
use crate::gmm::GmmConfig;
use crate::hog::HogConfig;

/// Every tunable of the detector. Missing keys in a config file fall back to
/// the defaults below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub hog: HogConfig,
    pub gmm: GmmConfig,
    pub blob: BlobParams,
    pub svm: SolverSettings,
    pub grid: GridSpec,
    pub features: FeatureMask,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            hog: HogConfig::default(),
            gmm: GmmConfig::default(),
            blob: BlobParams::default(),
            svm: SolverSettings::default(),
            grid: GridSpec::default(),
            features: FeatureMask::ALL,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.hog.validate()?;
        self.blob.validate()?;
        if self.gmm.components == 0 {
            return Err(Error::InvalidParameter("gmm.components must be at least 1".into()));
        }
        if self.gmm.max_iterations == 0 || !(self.gmm.tolerance > 0.0) || !(self.gmm.variance_floor > 0.0) {
            return Err(Error::InvalidParameter(
                "gmm iteration cap, tolerance and variance floor must be positive".into(),
            ));
        }
        if self.grid.folds < 2 {
            return Err(Error::InvalidParameter("grid.folds must be at least 2".into()));
        }
        if self.grid.c_grid.is_empty() || self.grid.gamma_grid.is_empty() {
            return Err(Error::Empty("parameter grid"));
        }
        if self.features.is_empty() {
            return Err(Error::InvalidParameter("at least one feature family must be enabled".into()));
        }
        if !(self.svm.tolerance > 0.0) || !(self.svm.real_weight > 0.0) || !(self.svm.fake_weight > 0.0) {
            return Err(Error::InvalidParameter("svm tolerance and class weights must be positive".into()));
        }
        Ok(())
    }

    /// Length of the Fisher vector this configuration produces.
    pub fn fisher_dim(&self) -> usize {
        2 * self.gmm.components * self.hog.orientations
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config is always representable as TOML")
    }
}
