//! Exhaustive (C, γ) selection by stratified k-fold cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::squared_distance;
use super::svm::{solve_smo, SolverSettings, SvmParams};
use crate::error::{Error, Result};
use crate::label::Label;

/// Largest training set for which all pairwise distances are precomputed.
const DENSE_DISTANCE_LIMIT: usize = 4096;

/// `2^-5, 2^-3, …, 2^15`.
pub fn default_c_grid() -> Vec<f64> {
    (-5..=15).step_by(2).map(|e| 2f64.powi(e)).collect()
}

/// `2^-15, 2^-13, …, 2^3`.
pub fn default_gamma_grid() -> Vec<f64> {
    (-15..=3).step_by(2).map(|e| 2f64.powi(e)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub c_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub folds: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            c_grid: default_c_grid(),
            gamma_grid: default_gamma_grid(),
            folds: 5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub c: f64,
    pub gamma: f64,
    pub cv_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: GridPoint,
    /// Every evaluated point, C-major in grid order.
    pub evaluated: Vec<GridPoint>,
}

/// Assigns each sample a fold so that every fold receives a near-equal share
/// of each class. Class members are shuffled with `seed` first.
pub fn stratified_folds(labels: &[Label], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 folds, got {folds}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut offset = 0;
    for class in Label::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < folds {
            return Err(Error::InsufficientData(format!(
                "class {class} has {} samples, fewer than {folds} folds",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for (pos, &i) in members.iter().enumerate() {
            assignment[i] = (pos + offset) % folds;
        }
        offset += members.len();
    }
    Ok(assignment)
}

/// Pairwise squared distances, either precomputed or evaluated on demand.
enum Distances<'a, R> {
    Dense(Vec<f64>, usize),
    Lazy(&'a [R]),
}

impl<R: AsRef<[f64]> + Sync> Distances<'_, R> {
    #[inline]
    fn get(&self, a: usize, b: usize) -> f64 {
        match self {
            Distances::Dense(d, n) => d[a * n + b],
            Distances::Lazy(x) => squared_distance(x[a].as_ref(), x[b].as_ref()),
        }
    }
}

fn cv_accuracy<R: AsRef<[f64]> + Sync>(
    dist: &Distances<'_, R>,
    y: &[f64],
    fold_of: &[usize],
    folds: usize,
    params: &SvmParams,
) -> f64 {
    let mut correct = 0usize;
    for fold in 0..folds {
        let train: Vec<usize> = (0..y.len()).filter(|&i| fold_of[i] != fold).collect();
        let test: Vec<usize> = (0..y.len()).filter(|&i| fold_of[i] == fold).collect();
        let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let gamma = params.gamma;
        let entry = |a: usize, b: usize| (-gamma * dist.get(train[a], train[b])).exp();
        let sol = solve_smo(&y_train, &entry, params, false);
        for &t in &test {
            let score: f64 = train
                .iter()
                .zip(&sol.alphas)
                .filter(|(_, &a)| a > 0.0)
                .map(|(&s, &a)| a * y[s] * (-gamma * dist.get(s, t)).exp())
                .sum::<f64>()
                - sol.rho;
            if Label::from_decision(score).sign() == y[t] {
                correct += 1;
            }
        }
    }
    correct as f64 / y.len() as f64
}

/// Picks the grid point with the highest cross-validated accuracy; ties go
/// to the smaller C, then the smaller γ.
pub fn grid_search<R: AsRef<[f64]> + Sync>(
    x: &[R],
    labels: &[Label],
    spec: &GridSpec,
    solver: &SolverSettings,
    seed: u64,
) -> Result<GridSearchResult> {
    SvmParams::with_solver(1.0, 1.0, *solver).validate()?;
    if spec.c_grid.is_empty() || spec.gamma_grid.is_empty() {
        return Err(Error::Empty("parameter grid"));
    }
    if x.len() != labels.len() {
        return Err(Error::mismatch(x.len(), labels.len()));
    }
    for &v in spec.c_grid.iter().chain(&spec.gamma_grid) {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter(format!("grid value {v} is not positive")));
        }
    }
    let fold_of = stratified_folds(labels, spec.folds, seed)?;
    let d = x[0].as_ref().len();
    if let Some(bad) = x.iter().find(|r| r.as_ref().len() != d) {
        return Err(Error::mismatch(d, bad.as_ref().len()));
    }
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let n = x.len();
    let dist = if n <= DENSE_DISTANCE_LIMIT {
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|a| (0..n).map(|b| squared_distance(x[a].as_ref(), x[b].as_ref())).collect())
            .collect();
        Distances::Dense(rows.concat(), n)
    } else {
        Distances::Lazy(x)
    };

    let points: Vec<(f64, f64)> = spec
        .c_grid
        .iter()
        .flat_map(|&c| spec.gamma_grid.iter().map(move |&g| (c, g)))
        .collect();
    let evaluated: Vec<GridPoint> = points
        .par_iter()
        .map(|&(c, gamma)| GridPoint {
            c,
            gamma,
            cv_accuracy: cv_accuracy(&dist, &y, &fold_of, spec.folds, &SvmParams::with_solver(c, gamma, *solver)),
        })
        .collect();

    let best = *evaluated
        .iter()
        .min_by(|a, b| {
            b.cv_accuracy
                .total_cmp(&a.cv_accuracy)
                .then(a.c.total_cmp(&b.c))
                .then(a.gamma.total_cmp(&b.gamma))
        })
        .expect("grid is non-empty");
    Ok(GridSearchResult { best, evaluated })
}
