//! Fisher vector encoding of a descriptor set against a diagonal GMM.
//!
//! For descriptors `x_1..x_N` with posteriors `γ_i(k)`:
//!
//! ```text
//! G_μ(k,d) = 1 / (N √w_k)   Σ_i γ_i(k) (x_id − μ_kd) / σ_kd
//! G_σ(k,d) = 1 / (N √(2w_k)) Σ_i γ_i(k) ((x_id − μ_kd)² / σ²_kd − 1)
//! ```
//!
//! These are the log-likelihood gradients with respect to the means and
//! standard deviations, whitened by the diagonal approximation of the Fisher
//! information. The encoded vector stacks all mean entries (component-major)
//! followed by all variance entries, then applies a signed square root and a
//! global L2 normalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmm::GmmModel;
use crate::hog::CellDescriptor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FisherVector(pub Vec<f64>);

impl FisherVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl AsRef<[f64]> for CellDescriptor {
    fn as_ref(&self) -> &[f64] {
        &self.bins
    }
}

/// Dimension of the encoding: `2·K·D`.
pub fn fisher_dim(model: &GmmModel) -> usize {
    2 * model.components() * model.dim()
}

/// Whitened mean and variance gradients before post-processing.
pub fn fisher_vector_raw<R: AsRef<[f64]>>(model: &GmmModel, descriptors: &[R]) -> Result<FisherVector> {
    if descriptors.is_empty() {
        return Err(Error::Empty("descriptor list"));
    }
    let (k, d) = (model.components(), model.dim());
    if let Some(bad) = descriptors.iter().find(|x| x.as_ref().len() != d) {
        return Err(Error::mismatch(d, bad.as_ref().len()));
    }
    let n = descriptors.len() as f64;
    let mut out = vec![0.0; 2 * k * d];
    let (mean_block, var_block) = out.split_at_mut(k * d);
    let stds: Vec<Vec<f64>> = model
        .variances()
        .iter()
        .map(|v| v.iter().map(|s| s.sqrt()).collect())
        .collect();

    for x in descriptors {
        let x = x.as_ref();
        let gamma = model.responsibilities(x);
        for j in 0..k {
            if gamma[j] == 0.0 {
                continue;
            }
            for dim in 0..d {
                let z = (x[dim] - model.means()[j][dim]) / stds[j][dim];
                mean_block[j * d + dim] += gamma[j] * z;
                var_block[j * d + dim] += gamma[j] * (z * z - 1.0);
            }
        }
    }
    for j in 0..k {
        let w = model.weights()[j];
        let mean_scale = 1.0 / (n * w.sqrt());
        let var_scale = 1.0 / (n * (2.0 * w).sqrt());
        for dim in 0..d {
            mean_block[j * d + dim] *= mean_scale;
            var_block[j * d + dim] *= var_scale;
        }
    }
    Ok(FisherVector(out))
}

/// Signed square root followed by L2 normalization; an all-zero input stays zero.
pub fn improved_normalization(fv: &FisherVector) -> FisherVector {
    let powered: Vec<f64> = fv.0.iter().map(|v| v.signum() * v.abs().sqrt()).collect();
    let norm = powered.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return FisherVector(powered.into_iter().map(|_| 0.0).collect());
    }
    FisherVector(powered.into_iter().map(|v| v / norm).collect())
}

pub fn fisher_vector<R: AsRef<[f64]>>(model: &GmmModel, descriptors: &[R]) -> Result<FisherVector> {
    fisher_vector_raw(model, descriptors).map(|fv| improved_normalization(&fv))
}
