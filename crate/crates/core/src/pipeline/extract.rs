use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::PipelineConfig;
use super::manifest::DatasetManifest;
use crate::blob::{blob_count_feature, detect_blobs};
use crate::classifier::{FeatureLayout, FeatureMask, FeatureVector};
use crate::error::{Error, Result};
use crate::fisher::fisher_vector;
use crate::gmm::GmmModel;
use crate::hog::{spectrum_descriptors, CellDescriptor};
use crate::label::Label;
use crate::spectrum::{compute_spectrum, load_image, rgb_to_luma, Spectrum};
use crate::stats::{spectrum_statistics, StatFeature};

/// Everything extracted from one image before the Fisher encoding, which
/// needs a mixture fitted on the training set.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageFeatures {
    pub path: PathBuf,
    pub label: Option<Label>,
    pub stat: StatFeature,
    pub descriptors: Vec<CellDescriptor>,
    pub blob_count: f64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct Extraction {
    /// Successful rows in manifest order.
    pub rows: Vec<ImageFeatures>,
    pub failures: Vec<Failure>,
}

pub fn spectrum_features(spec: &Spectrum, cfg: &PipelineConfig) -> Result<(StatFeature, Vec<CellDescriptor>, f64)> {
    let stat = spectrum_statistics(spec)?;
    let descriptors = spectrum_descriptors(spec, &cfg.hog)?;
    let blobs = detect_blobs(spec, &cfg.blob)?;
    Ok((stat, descriptors, blob_count_feature(&blobs)))
}

pub fn extract_image(path: &Path, label: Option<Label>, cfg: &PipelineConfig) -> Result<ImageFeatures> {
    let spec = compute_spectrum(&rgb_to_luma(&load_image(path)?));
    let (stat, descriptors, blob_count) = spectrum_features(&spec, cfg)?;
    Ok(ImageFeatures {
        path: path.to_path_buf(),
        label,
        stat,
        descriptors,
        blob_count,
    })
}

/// Extracts every path in parallel; results keep input order and failures
/// are collected instead of aborting the batch.
pub fn extract_paths(items: &[(PathBuf, Option<Label>)], cfg: &PipelineConfig) -> Extraction {
    let results: Vec<Result<ImageFeatures>> = items
        .par_iter()
        .map(|(p, l)| extract_image(p, *l, cfg))
        .collect();
    let mut out = Extraction::default();
    for ((path, _), r) in items.iter().zip(results) {
        match r {
            Ok(row) => out.rows.push(row),
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                out.failures.push(Failure {
                    path: path.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    out
}

pub fn extract_manifest(manifest: &DatasetManifest, cfg: &PipelineConfig) -> Result<Extraction> {
    if manifest.is_empty() {
        return Err(Error::Empty("manifest"));
    }
    cfg.validate()?;
    let items: Vec<(PathBuf, Option<Label>)> = manifest
        .entries()
        .iter()
        .map(|e| (e.path.clone(), Some(e.label)))
        .collect();
    Ok(extract_paths(&items, cfg))
}

/// The enabled feature families of one image, in `stat | fisher | blob` order.
pub fn masked_features(
    row: &ImageFeatures,
    gmm: Option<&GmmModel>,
    mask: &FeatureMask,
) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    if mask.stat {
        out.extend_from_slice(&row.stat.to_array());
    }
    if mask.hog {
        let gmm = gmm.ok_or_else(|| {
            Error::InvalidParameter("oriented-gradient features need a fitted mixture".into())
        })?;
        out.extend(fisher_vector(gmm, &row.descriptors)?.0);
    }
    if mask.blob {
        out.push(row.blob_count);
    }
    Ok(out)
}

/// The complete concatenated vector.
pub fn full_feature(row: &ImageFeatures, gmm: &GmmModel) -> Result<FeatureVector> {
    let fv = fisher_vector(gmm, &row.descriptors)?;
    FeatureLayout::new(fv.len()).assemble(&row.stat, &fv, row.blob_count)
}

/// `path,label,f0,...,f{d-1}` with one row per image.
pub fn write_feature_table<W: Write>(rows: &[ImageFeatures], gmm: &GmmModel, mut out: W) -> Result<()> {
    let features: Vec<FeatureVector> = rows
        .par_iter()
        .map(|r| full_feature(r, gmm))
        .collect::<Result<_>>()?;
    let dim = features.first().map_or(0, FeatureVector::len);
    let io = |e| Error::io("feature table", e);
    write!(out, "path,label").map_err(io)?;
    for i in 0..dim {
        write!(out, ",f{i}").map_err(io)?;
    }
    writeln!(out).map_err(io)?;
    for (row, f) in rows.iter().zip(&features) {
        write!(out, "{},{}", row.path.display(), row.label.map_or("", Label::as_str)).map_err(io)?;
        for v in f.as_slice() {
            write!(out, ",{v}").map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    Ok(())
}

/// Pre-encoding features: statistics, blob count, and the raw cell
/// descriptors flattened cell by cell.
pub fn write_raw_table<W: Write>(rows: &[ImageFeatures], mut out: W) -> Result<()> {
    let io = |e| Error::io("feature table", e);
    let cells = rows.first().map_or(0, |r| r.descriptors.len());
    let bins = rows
        .first()
        .and_then(|r| r.descriptors.first())
        .map_or(0, |d| d.bins.len());
    write!(out, "path,label,mean,std,skewness,kurtosis,blob_count").map_err(io)?;
    for c in 0..cells {
        for b in 0..bins {
            write!(out, ",cell{c}_bin{b}").map_err(io)?;
        }
    }
    writeln!(out).map_err(io)?;
    for r in rows {
        let s = r.stat;
        write!(
            out,
            "{},{},{},{},{},{},{}",
            r.path.display(),
            r.label.map_or("", Label::as_str),
            s.mean,
            s.std,
            s.skewness,
            s.kurtosis,
            r.blob_count
        )
        .map_err(io)?;
        for d in &r.descriptors {
            for v in &d.bins {
                write!(out, ",{v}").map_err(io)?;
            }
        }
        writeln!(out).map_err(io)?;
    }
    Ok(())
}
