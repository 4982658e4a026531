//! Diagonal-covariance Gaussian mixtures fitted by expectation-maximization.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest variance any component may take on any dimension.
pub const VARIANCE_FLOOR: f64 = 1e-6;

/// Effective responsibility mass given to components that lose all support.
const MIN_COMPONENT_MASS: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmmConfig {
    pub components: usize,
    pub max_iterations: usize,
    /// Stop once the mean per-point log-likelihood improves by less than this.
    pub tolerance: f64,
    pub variance_floor: f64,
}

impl Default for GmmConfig {
    fn default() -> Self {
        GmmConfig {
            components: 16,
            max_iterations: 200,
            tolerance: 1e-6,
            variance_floor: VARIANCE_FLOOR,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
    seed: u64,
    iterations: usize,
    /// Total log-likelihood of the training data under the final parameters.
    log_likelihood: f64,
}

impl GmmModel {
    /// Assembles a model from explicit parameters.
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, variances: Vec<Vec<f64>>) -> Result<Self> {
        let model = GmmModel {
            weights,
            means,
            variances,
            seed: 0,
            iterations: 0,
            log_likelihood: f64::NAN,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.weights.len();
        if k == 0 {
            return Err(Error::InvalidParameter("mixture has no components".into()));
        }
        if self.means.len() != k || self.variances.len() != k {
            return Err(Error::mismatch(k, format!("{}/{}", self.means.len(), self.variances.len())));
        }
        let d = self.means[0].len();
        if d == 0 || self.means.iter().chain(&self.variances).any(|v| v.len() != d) {
            return Err(Error::InvalidShape("inconsistent component dimensions".into()));
        }
        if self.weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidParameter("weights must be positive".into()));
        }
        if (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter("weights must sum to one".into()));
        }
        if self.variances.iter().flatten().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter("variances must be positive".into()));
        }
        if self.means.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("means must be finite".into()));
        }
        Ok(())
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn variances(&self) -> &[Vec<f64>] {
        &self.variances
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn training_log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    /// Free parameters: `K - 1` weights plus `2·K·D` means and variances.
    pub fn free_parameters(&self) -> usize {
        let (k, d) = (self.components(), self.dim());
        (k - 1) + 2 * k * d
    }

    fn log_norms(&self) -> Vec<f64> {
        self.variances
            .iter()
            .zip(&self.weights)
            .map(|(var, w)| {
                w.ln() - 0.5 * var.iter().map(|v| (2.0 * PI * v).ln()).sum::<f64>()
            })
            .collect()
    }

    /// Writes `ln(w_k N(x | k))` into `out` and returns their log-sum-exp.
    fn joint_log_densities(&self, log_norms: &[f64], x: &[f64], out: &mut [f64]) -> f64 {
        for (k, slot) in out.iter_mut().enumerate() {
            let quad: f64 = x
                .iter()
                .zip(&self.means[k])
                .zip(&self.variances[k])
                .map(|((xi, m), v)| (xi - m) * (xi - m) / v)
                .sum();
            *slot = log_norms[k] - 0.5 * quad;
        }
        log_sum_exp(out)
    }

    /// Posterior component probabilities for one sample.
    pub fn responsibilities(&self, x: &[f64]) -> Vec<f64> {
        let norms = self.log_norms();
        let mut buf = vec![0.0; self.components()];
        let lse = self.joint_log_densities(&norms, x, &mut buf);
        buf.iter().map(|v| (v - lse).exp()).collect()
    }

    /// Total log-likelihood `Σ_i ln p(x_i)`.
    pub fn log_likelihood<R: AsRef<[f64]>>(&self, data: &[R]) -> f64 {
        let norms = self.log_norms();
        let mut buf = vec![0.0; self.components()];
        data.iter()
            .map(|x| self.joint_log_densities(&norms, x.as_ref(), &mut buf))
            .sum()
    }
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// A fitted mixture together with the mean per-point log-likelihood recorded
/// after initialization and after every EM iteration.
#[derive(Clone, Debug)]
pub struct GmmFit {
    pub model: GmmModel,
    pub trace: Vec<f64>,
}

fn check_data<R: AsRef<[f64]>>(data: &[R], k: usize) -> Result<usize> {
    if k == 0 {
        return Err(Error::InvalidParameter("component count must be at least 1".into()));
    }
    if data.len() < 10 * k {
        return Err(Error::InsufficientData(format!(
            "fitting {k} components needs at least {} descriptors, got {}",
            10 * k,
            data.len()
        )));
    }
    let d = data[0].as_ref().len();
    if d == 0 {
        return Err(Error::InvalidShape("descriptors have no dimensions".into()));
    }
    if let Some(bad) = data.iter().find(|x| x.as_ref().len() != d) {
        return Err(Error::mismatch(d, bad.as_ref().len()));
    }
    if data.iter().flat_map(|x| x.as_ref()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("descriptors must be finite".into()));
    }
    Ok(d)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: first center uniform, then proportional to squared
/// distance from the nearest chosen center.
fn kmeans_plus_plus<R: AsRef<[f64]>>(data: &[R], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = data.len();
    let mut centers = vec![data[rng.random_range(0..n)].as_ref().to_vec()];
    let mut nearest: Vec<f64> = data
        .iter()
        .map(|x| squared_distance(x.as_ref(), &centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let center = data[pick].as_ref().to_vec();
        for (slot, x) in nearest.iter_mut().zip(data) {
            *slot = slot.min(squared_distance(x.as_ref(), &center));
        }
        centers.push(center);
    }
    centers
}

fn initial_model<R: AsRef<[f64]>>(data: &[R], d: usize, cfg: &GmmConfig, rng: &mut ChaCha8Rng) -> GmmModel {
    let k = cfg.components;
    let n = data.len() as f64;
    let centers = kmeans_plus_plus(data, k, rng);

    let mut global_mean = vec![0.0; d];
    for x in data {
        for (m, v) in global_mean.iter_mut().zip(x.as_ref()) {
            *m += v / n;
        }
    }
    let mut global_var = vec![0.0; d];
    for x in data {
        for ((s, v), m) in global_var.iter_mut().zip(x.as_ref()).zip(&global_mean) {
            *s += (v - m) * (v - m) / n;
        }
    }

    let mut counts = vec![0usize; k];
    let mut sq = vec![vec![0.0; d]; k];
    for x in data {
        let x = x.as_ref();
        let (best, _) = centers
            .iter()
            .enumerate()
            .map(|(j, c)| (j, squared_distance(x, c)))
            .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
        counts[best] += 1;
        for ((s, v), c) in sq[best].iter_mut().zip(x).zip(&centers[best]) {
            *s += (v - c) * (v - c);
        }
    }

    let total: usize = counts.iter().map(|&c| c.max(1)).sum();
    let weights = counts.iter().map(|&c| c.max(1) as f64 / total as f64).collect();
    let variances = (0..k)
        .map(|j| {
            if counts[j] > 1 {
                sq[j]
                    .iter()
                    .map(|s| (s / counts[j] as f64).max(cfg.variance_floor))
                    .collect()
            } else {
                global_var.iter().map(|v| v.max(cfg.variance_floor)).collect()
            }
        })
        .collect();
    GmmModel {
        weights,
        means: centers,
        variances,
        seed: 0,
        iterations: 0,
        log_likelihood: f64::NAN,
    }
}

/// Fits a `cfg.components`-component mixture, reporting the EM trace.
pub fn fit_gmm_traced<R: AsRef<[f64]>>(data: &[R], cfg: &GmmConfig, seed: u64) -> Result<GmmFit> {
    let d = check_data(data, cfg.components)?;
    if !(cfg.variance_floor > 0.0) {
        return Err(Error::InvalidParameter("variance floor must be positive".into()));
    }
    let k = cfg.components;
    let n = data.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = initial_model(data, d, cfg, &mut rng);

    let mut resp = vec![0.0; n * k];
    let e_step = |model: &GmmModel, resp: &mut [f64]| -> f64 {
        let norms = model.log_norms();
        let mut total = 0.0;
        for (x, row) in data.iter().zip(resp.chunks_exact_mut(k)) {
            let lse = model.joint_log_densities(&norms, x.as_ref(), row);
            for v in row.iter_mut() {
                *v = (*v - lse).exp();
            }
            total += lse;
        }
        total
    };

    let mut ll = e_step(&model, &mut resp);
    let mut trace = vec![ll / n as f64];
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        // M-step
        let mut mass = vec![0.0; k];
        let mut sums = vec![vec![0.0; d]; k];
        for (x, row) in data.iter().zip(resp.chunks_exact(k)) {
            for j in 0..k {
                mass[j] += row[j];
                for (s, v) in sums[j].iter_mut().zip(x.as_ref()) {
                    *s += row[j] * v;
                }
            }
        }
        let mass: Vec<f64> = mass.iter().map(|m| m.max(MIN_COMPONENT_MASS)).collect();
        for j in 0..k {
            for (m, s) in model.means[j].iter_mut().zip(&sums[j]) {
                *m = s / mass[j];
            }
        }
        let mut sq = vec![vec![0.0; d]; k];
        for (x, row) in data.iter().zip(resp.chunks_exact(k)) {
            for j in 0..k {
                for ((s, v), m) in sq[j].iter_mut().zip(x.as_ref()).zip(&model.means[j]) {
                    *s += row[j] * (v - m) * (v - m);
                }
            }
        }
        for j in 0..k {
            for (var, s) in model.variances[j].iter_mut().zip(&sq[j]) {
                *var = (s / mass[j]).max(cfg.variance_floor);
            }
        }
        let total_mass: f64 = mass.iter().sum();
        model.weights = mass.iter().map(|m| m / total_mass).collect();

        let next = e_step(&model, &mut resp);
        iterations += 1;
        trace.push(next / n as f64);
        let improvement = (next - ll) / n as f64;
        ll = next;
        if improvement < cfg.tolerance {
            break;
        }
    }

    model.seed = seed;
    model.iterations = iterations;
    model.log_likelihood = ll;
    Ok(GmmFit { model, trace })
}

/// EM fit seeded by k-means++; deterministic for a fixed `seed`.
pub fn fit_gmm<R: AsRef<[f64]>>(data: &[R], cfg: &GmmConfig, seed: u64) -> Result<GmmModel> {
    fit_gmm_traced(data, cfg, seed).map(|f| f.model)
}

/// `p·ln(n) − 2·ln L`; lower is better.
pub fn bic<R: AsRef<[f64]>>(model: &GmmModel, data: &[R]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("BIC data"));
    }
    let n = data.len() as f64;
    Ok(model.free_parameters() as f64 * n.ln() - 2.0 * model.log_likelihood(data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn cloud(rng: &mut ChaCha8Rng, center: &[f64], sigma: f64, n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| {
                center
                    .iter()
                    .map(|c| c + sigma * Distribution::<f64>::sample(&StandardNormal, rng))
                    .collect()
            })
            .collect()
    }

    fn sample_mean(data: &[Vec<f64>]) -> Vec<f64> {
        let d = data[0].len();
        (0..d)
            .map(|j| data.iter().map(|x| x[j]).sum::<f64>() / data.len() as f64)
            .collect()
    }

    #[test]
    fn single_component_matches_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = cloud(&mut rng, &[1.0, -2.0, 0.5], 0.7, 400);
        let cfg = GmmConfig {
            components: 1,
            ..GmmConfig::default()
        };
        let m = fit_gmm(&data, &cfg, 11).unwrap();
        assert_eq!(m.weights(), &[1.0]);
        let mean = sample_mean(&data);
        let stderr = 0.7 / (400f64).sqrt();
        for (a, b) in m.means()[0].iter().zip(&mean) {
            assert!((a - b).abs() < 3.0 * stderr);
        }
    }

    #[test]
    fn separated_pair_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = cloud(&mut rng, &[0.0, 0.0], 1.0, 300);
        let b = cloud(&mut rng, &[20.0, 0.0], 1.0, 100);
        let data: Vec<Vec<f64>> = a.iter().chain(&b).cloned().collect();
        let cfg = GmmConfig {
            components: 2,
            ..GmmConfig::default()
        };
        let fit = fit_gmm_traced(&data, &cfg, 5).unwrap();
        let m = &fit.model;
        let (ma, mb) = (sample_mean(&a), sample_mean(&b));
        let (ia, ib) = if m.means()[0][0] < m.means()[1][0] { (0, 1) } else { (1, 0) };
        for j in 0..2 {
            assert!((m.means()[ia][j] - ma[j]).abs() < 0.1);
            assert!((m.means()[ib][j] - mb[j]).abs() < 0.1);
        }
        assert!((m.weights()[ia] - 0.75).abs() < 0.05);
        assert!((m.weights()[ib] - 0.25).abs() < 0.05);
        for w in fit.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-8);
        }

        let one = fit_gmm(&data, &GmmConfig { components: 1, ..cfg.clone() }, 5).unwrap();
        assert!(bic(m, &data).unwrap() < bic(&one, &data).unwrap());
    }

    #[test]
    fn deterministic_per_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data = cloud(&mut rng, &[0.0; 4], 1.0, 200);
        let cfg = GmmConfig {
            components: 3,
            ..GmmConfig::default()
        };
        assert_eq!(fit_gmm(&data, &cfg, 42).unwrap(), fit_gmm(&data, &cfg, 42).unwrap());
    }

    #[test]
    fn guards() {
        let data = vec![vec![0.0; 2]; 15];
        let cfg = GmmConfig {
            components: 2,
            ..GmmConfig::default()
        };
        assert!(matches!(fit_gmm(&data, &cfg, 0), Err(Error::InsufficientData(_))));
        let cfg0 = GmmConfig {
            components: 0,
            ..GmmConfig::default()
        };
        assert!(fit_gmm(&data, &cfg0, 0).is_err());
        // identical points: the floor keeps every variance positive
        let one = GmmConfig {
            components: 1,
            ..GmmConfig::default()
        };
        let m = fit_gmm(&data, &one, 0).unwrap();
        assert!(m.variances()[0].iter().all(|&v| v == VARIANCE_FLOOR));
        m.validate().unwrap();
    }

    #[test]
    fn bic_with_single_point() {
        let m = GmmModel::new(vec![1.0], vec![vec![0.0]], vec![vec![1.0]]).unwrap();
        let x = [vec![0.5]];
        let ll = m.log_likelihood(&x);
        assert_eq!(bic(&m, &x).unwrap(), -2.0 * ll);
        assert_eq!(bic(&m, &x).unwrap(), bic(&m, &x).unwrap());
        assert!(bic::<Vec<f64>>(&m, &[]).is_err());
    }

    #[test]
    fn responsibilities_sum_to_one() {
        let m = GmmModel::new(
            vec![0.2, 0.5, 0.3],
            vec![vec![0.0, 0.0], vec![3.0, 1.0], vec![-40.0, 2.0]],
            vec![vec![1.0, 0.5], vec![2.0, 2.0], vec![1e-3, 1.0]],
        )
        .unwrap();
        for x in [[0.0, 0.0], [1000.0, -300.0], [-40.0, 2.0]] {
            let r = m.responsibilities(&x);
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_invalid_models() {
        assert!(GmmModel::new(vec![0.5, 0.6], vec![vec![0.0]; 2], vec![vec![1.0]; 2]).is_err());
        assert!(GmmModel::new(vec![1.0], vec![vec![0.0]], vec![vec![0.0]]).is_err());
        assert!(GmmModel::new(vec![1.0], vec![vec![0.0, 1.0]], vec![vec![1.0]]).is_err());
    }
}
