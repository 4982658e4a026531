use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::PipelineConfig;
use super::manifest::DatasetManifest;
use crate::blob::detect_blobs;
use crate::error::{Error, Result};
use crate::label::Label;
use crate::spectrum::{average_spectra, diagonal_profile, spectrum_of_file, Spectrum};

/// Files written by [`inspect_dataset`].
#[derive(Clone, Debug, Default)]
pub struct InspectOutput {
    pub written: Vec<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn class_spectra(manifest: &DatasetManifest, label: Label) -> Result<Vec<(PathBuf, Spectrum)>> {
    let paths: Vec<PathBuf> = manifest
        .entries()
        .iter()
        .filter(|e| e.label == label)
        .map(|e| e.path.clone())
        .collect();
    if paths.is_empty() {
        return Err(Error::InsufficientData(format!("no {label} images to average")));
    }
    paths
        .into_par_iter()
        .map(|p| spectrum_of_file(&p).map(|s| (p, s)))
        .collect()
}

/// Writes, per class, the averaged spectrum (PNG and CSV), its diagonal
/// profile, and one blob table per image.
pub fn inspect_dataset(manifest: &DatasetManifest, cfg: &PipelineConfig, out: &Path) -> Result<InspectOutput> {
    cfg.blob.validate()?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut report = InspectOutput::default();
    for label in Label::ALL {
        let spectra = class_spectra(manifest, label)?;
        let avg = average_spectra(&spectra.iter().map(|(_, s)| s.clone()).collect::<Vec<_>>())?;

        let png = out.join(format!("{label}_mean_spectrum.png"));
        avg.save_png(&png)?;
        report.written.push(png);

        let csv = out.join(format!("{label}_mean_spectrum.csv"));
        let mut w = create(&csv)?;
        avg.write_csv(&mut w).map_err(|e| Error::io(&csv, e))?;
        report.written.push(csv);

        let diag = out.join(format!("{label}_diagonal.csv"));
        let mut w = create(&diag)?;
        let write_diag = |w: &mut BufWriter<File>| -> std::io::Result<()> {
            writeln!(w, "index,value")?;
            for (i, v) in diagonal_profile(&avg).unwrap_or_default().iter().enumerate() {
                writeln!(w, "{i},{v}")?;
            }
            w.flush()
        };
        write_diag(&mut w).map_err(|e| Error::io(&diag, e))?;
        report.written.push(diag);

        let blob_dir = out.join(format!("{label}_blobs"));
        fs::create_dir_all(&blob_dir).map_err(|e| Error::io(&blob_dir, e))?;
        for (path, spec) in &spectra {
            let stem = path.file_stem().map_or_else(|| "image".into(), |s| s.to_string_lossy());
            let dest = blob_dir.join(format!("{stem}.csv"));
            let blobs = detect_blobs(spec, &cfg.blob)?;
            let mut w = create(&dest)?;
            blobs.write_csv(&mut w).map_err(|e| Error::io(&dest, e))?;
            report.written.push(dest);
        }
    }
    Ok(report)
}
