use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;

use super::bundle::{ModelBundle, TrainingSummary, BUNDLE_FORMAT_VERSION};
use super::config::PipelineConfig;
use super::extract::{extract_manifest, extract_paths, masked_features, Failure, ImageFeatures};
use super::manifest::{overlapping_paths, path_key, DatasetManifest};
use crate::classifier::{
    grid_search, train_svm, FeatureMask, GridSearchResult, Standardizer, SvmModel, SvmParams,
};
use crate::error::{Error, Result};
use crate::evaluation::{confusion, roc, ConfusionMatrix, RocCurve};
use crate::gmm::{fit_gmm, GmmModel};
use crate::label::Label;

/// Fits the descriptor mixture on every cell descriptor of the training rows.
pub fn fit_descriptor_gmm(rows: &[ImageFeatures], cfg: &PipelineConfig) -> Result<GmmModel> {
    let pooled: Vec<&[f64]> = rows
        .iter()
        .flat_map(|r| r.descriptors.iter().map(|d| d.bins.as_slice()))
        .collect();
    fit_gmm(&pooled, &cfg.gmm, cfg.seed)
}

/// Standardizer, SVM and the grid search that chose its parameters.
#[derive(Clone, Debug)]
pub struct TrainedClassifier {
    pub standardizer: Standardizer,
    pub svm: SvmModel,
    pub search: GridSearchResult,
}

impl TrainedClassifier {
    pub fn decision_values(&self, features: &[Vec<f64>]) -> Result<Vec<f64>> {
        features
            .par_iter()
            .map(|f| self.svm.decision_value(&self.standardizer.apply(f)?))
            .collect()
    }
}

fn labels_of(rows: &[ImageFeatures]) -> Result<Vec<Label>> {
    rows.iter()
        .map(|r| {
            r.label.ok_or_else(|| {
                Error::InvalidParameter(format!("{} has no label", r.path.display()))
            })
        })
        .collect()
}

fn feature_rows(rows: &[ImageFeatures], gmm: Option<&GmmModel>, mask: &FeatureMask) -> Result<Vec<Vec<f64>>> {
    rows.par_iter().map(|r| masked_features(r, gmm, mask)).collect()
}

/// Standardizes, searches the grid and fits the final SVM on all rows.
pub fn train_classifier(features: &[Vec<f64>], labels: &[Label], cfg: &PipelineConfig) -> Result<TrainedClassifier> {
    if !labels.contains(&Label::Real) || !labels.contains(&Label::Fake) {
        return Err(Error::SingleClass);
    }
    let standardizer = Standardizer::fit(features)?;
    let z = standardizer.apply_all(features)?;
    let search = grid_search(&z, labels, &cfg.grid, &cfg.svm, cfg.seed)?;
    log::info!(
        "selected C={} gamma={} (cv accuracy {:.4})",
        search.best.c,
        search.best.gamma,
        search.best.cv_accuracy
    );
    let params = SvmParams::with_solver(search.best.c, search.best.gamma, cfg.svm);
    let svm = train_svm(&z, labels, &params)?;
    Ok(TrainedClassifier {
        standardizer,
        svm,
        search,
    })
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub bundle: ModelBundle,
    pub failures: Vec<Failure>,
}

/// Trains from already extracted rows.
pub fn train_from_rows(rows: &[ImageFeatures], cfg: &PipelineConfig) -> Result<ModelBundle> {
    cfg.validate()?;
    let labels = labels_of(rows)?;
    if !labels.contains(&Label::Real) || !labels.contains(&Label::Fake) {
        return Err(Error::SingleClass);
    }
    let gmm = if cfg.features.hog {
        Some(fit_descriptor_gmm(rows, cfg)?)
    } else {
        None
    };
    let features = feature_rows(rows, gmm.as_ref(), &cfg.features)?;
    let trained = train_classifier(&features, &labels, cfg)?;
    Ok(ModelBundle {
        format_version: BUNDLE_FORMAT_VERSION,
        config: cfg.clone(),
        gmm,
        standardizer: trained.standardizer,
        svm: trained.svm,
        summary: TrainingSummary {
            real_count: labels.iter().filter(|&&l| l == Label::Real).count(),
            fake_count: labels.iter().filter(|&&l| l == Label::Fake).count(),
            selected: trained.search.best,
            training_paths: rows.iter().map(|r| path_key(&r.path)).collect(),
        },
    })
}

/// Extracts the manifest and trains a complete bundle.
pub fn train_pipeline(manifest: &DatasetManifest, cfg: &PipelineConfig) -> Result<TrainOutcome> {
    let extraction = extract_manifest(manifest, cfg)?;
    if extraction.rows.is_empty() {
        return Err(Error::InsufficientData("no training image could be read".into()));
    }
    let bundle = train_from_rows(&extraction.rows, cfg)?;
    Ok(TrainOutcome {
        bundle,
        failures: extraction.failures,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub path: std::path::PathBuf,
    pub label: Label,
    pub score: f64,
}

pub fn score_rows(bundle: &ModelBundle, rows: &[ImageFeatures]) -> Result<Vec<f64>> {
    let features = feature_rows(rows, bundle.gmm.as_ref(), &bundle.config.features)?;
    features
        .par_iter()
        .map(|f| bundle.svm.decision_value(&bundle.standardizer.apply(f)?))
        .collect()
}

pub fn predict_paths(bundle: &ModelBundle, paths: &[std::path::PathBuf]) -> Result<(Vec<Prediction>, Vec<Failure>)> {
    let items: Vec<_> = paths.iter().map(|p| (p.clone(), None)).collect();
    let extraction = extract_paths(&items, &bundle.config);
    let scores = score_rows(bundle, &extraction.rows)?;
    let predictions = extraction
        .rows
        .iter()
        .zip(scores)
        .map(|(r, score)| Prediction {
            path: r.path.clone(),
            label: Label::from_decision(score),
            score,
        })
        .collect();
    Ok((predictions, extraction.failures))
}

/// `path,label,score`.
pub fn write_predictions<W: Write>(predictions: &[Prediction], mut out: W) -> std::io::Result<()> {
    writeln!(out, "path,label,score")?;
    for p in predictions {
        writeln!(out, "{},{},{}", p.path.display(), p.label, p.score)?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub f1: f64,
    /// Absent when the test set holds a single class.
    pub roc: Option<RocCurve>,
    /// Test paths that were also used for training.
    pub leaked: Vec<String>,
    pub failures: Vec<Failure>,
}

impl Evaluation {
    pub fn auc(&self) -> Option<f64> {
        self.roc.as_ref().map(|r| r.auc)
    }
}

pub fn evaluate_rows(bundle: &ModelBundle, rows: &[ImageFeatures]) -> Result<Evaluation> {
    let labels = labels_of(rows)?;
    let scores = score_rows(bundle, rows)?;
    let predictions: Vec<Label> = scores.iter().map(|&s| Label::from_decision(s)).collect();
    let cm = confusion(&labels, &predictions)?;
    let roc = match roc(&labels, &scores) {
        Ok(r) => Some(r),
        Err(Error::SingleClass) => {
            log::warn!("test set holds a single class; ROC is undefined");
            None
        }
        Err(e) => return Err(e),
    };
    let leaked = overlapping_paths(
        bundle.summary.training_paths.iter().map(String::as_str),
        rows.iter().map(|r| r.path.as_path()),
    );
    if !leaked.is_empty() {
        log::warn!("{} test images were also used for training", leaked.len());
    }
    Ok(Evaluation {
        accuracy: cm.accuracy(),
        f1: cm.f1(),
        confusion: cm,
        roc,
        leaked,
        failures: Vec::new(),
    })
}

pub fn evaluate_dataset(bundle: &ModelBundle, manifest: &DatasetManifest) -> Result<Evaluation> {
    let extraction = extract_manifest(manifest, &bundle.config)?;
    if extraction.rows.is_empty() {
        return Err(Error::InsufficientData("no test image could be read".into()));
    }
    let mut eval = evaluate_rows(bundle, &extraction.rows)?;
    eval.failures = extraction.failures;
    Ok(eval)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub mask: FeatureMask,
    pub accuracy: f64,
    pub f1: f64,
    pub c: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
    /// Paths present in both manifests.
    pub leaked: Vec<String>,
    pub failures: Vec<Failure>,
}

impl AblationReport {
    pub fn row(&self, mask: FeatureMask) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.mask == mask)
    }

    /// Fixed-width table with one line per feature subset.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<6} {:<6} {:<6} {:>9} {:>9}", "stat", "hog", "blob", "accuracy", "f1");
        let tick = |on: bool| if on { "x" } else { "-" };
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<6} {:<6} {:<6} {:>9.4} {:>9.4}",
                tick(r.mask.stat),
                tick(r.mask.hog),
                tick(r.mask.blob),
                r.accuracy,
                r.f1
            );
        }
        s
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "features,stat,hog,blob,accuracy,f1,c,gamma")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.mask.name(),
                r.mask.stat as u8,
                r.mask.hog as u8,
                r.mask.blob as u8,
                r.accuracy,
                r.f1,
                r.c,
                r.gamma
            )?;
        }
        Ok(())
    }
}

/// Trains and tests one classifier per feature subset. The descriptor
/// mixture is fitted once on the training rows and shared by all subsets.
pub fn ablation_from_rows(
    train: &[ImageFeatures],
    test: &[ImageFeatures],
    masks: &[FeatureMask],
    cfg: &PipelineConfig,
) -> Result<Vec<AblationRow>> {
    if masks.is_empty() {
        return Err(Error::Empty("feature subsets"));
    }
    let train_labels = labels_of(train)?;
    let test_labels = labels_of(test)?;
    let gmm = if masks.iter().any(|m| m.hog) {
        Some(fit_descriptor_gmm(train, cfg)?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(masks.len());
    for mask in masks {
        if mask.is_empty() {
            return Err(Error::InvalidParameter("empty feature subset".into()));
        }
        let xtr = feature_rows(train, gmm.as_ref(), mask)?;
        let xte = feature_rows(test, gmm.as_ref(), mask)?;
        let trained = train_classifier(&xtr, &train_labels, cfg)?;
        let predictions: Vec<Label> = trained
            .decision_values(&xte)?
            .into_iter()
            .map(Label::from_decision)
            .collect();
        let cm = confusion(&test_labels, &predictions)?;
        log::info!("{}: accuracy {:.4}", mask.name(), cm.accuracy());
        out.push(AblationRow {
            mask: *mask,
            accuracy: cm.accuracy(),
            f1: cm.f1(),
            c: trained.search.best.c,
            gamma: trained.search.best.gamma,
        });
    }
    Ok(out)
}

pub fn ablation(train: &DatasetManifest, test: &DatasetManifest, cfg: &PipelineConfig) -> Result<AblationReport> {
    let leaked = overlapping_paths(
        train.paths().map(|p| p.to_str().unwrap_or_default()),
        test.paths(),
    );
    if !leaked.is_empty() {
        log::warn!("{} paths appear in both the training and test manifests", leaked.len());
    }
    let tr = extract_manifest(train, cfg)?;
    let te = extract_manifest(test, cfg)?;
    let rows = ablation_from_rows(&tr.rows, &te.rows, &FeatureMask::ABLATION, cfg)?;
    let mut failures = tr.failures;
    failures.extend(te.failures);
    Ok(AblationReport {
        rows,
        leaked,
        failures,
    })
}
