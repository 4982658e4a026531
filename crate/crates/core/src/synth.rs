//! Synthetic labelled corpus with planted periodic artifacts.
//!
//! Real-like images are smoothed noise with a `1/f^α` amplitude spectrum,
//! the usual statistical model of natural images and paintings. Fake-like
//! images share that construction and additionally carry a faint periodic
//! dot lattice (period 8–16 px), the spatial signature of upsampling layers
//! in generators. A lattice with period `p` puts a grid of peaks spaced
//! `256 / p` bins apart into the spectrum.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::gaussian_blur;
use crate::label::Label;
use crate::pipeline::{DatasetManifest, ManifestEntry};
use crate::plane::Plane;
use crate::spectrum::RgbImage;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub side: usize,
    /// Range of the spectral decay exponent α.
    pub alpha: (f64, f64),
    /// Blur applied to the noise field.
    pub smoothing_sigma: f64,
    /// Range of lattice periods in pixels, inclusive.
    pub period: (usize, usize),
    /// Range of the lattice dot amplitude.
    pub amplitude: (f64, f64),
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            side: 256,
            alpha: (1.6, 2.4),
            smoothing_sigma: 1.0,
            period: (8, 16),
            amplitude: (0.03, 0.06),
        }
    }
}

fn inverse_fft_real(h: usize, w: usize, mut buf: Vec<Complex64>) -> Plane {
    let mut planner = FftPlanner::<f64>::new();
    let row = planner.plan_fft_inverse(w);
    for r in buf.chunks_exact_mut(w) {
        row.process(r);
    }
    let col = planner.plan_fft_inverse(h);
    let mut column = vec![Complex64::new(0.0, 0.0); h];
    for c in 0..w {
        for r in 0..h {
            column[r] = buf[r * w + c];
        }
        col.process(&mut column);
        for r in 0..h {
            buf[r * w + c] = column[r];
        }
    }
    Plane::new(h, w, buf.into_iter().map(|z| z.re).collect()).expect("shape preserved")
}

/// Zero-mean, unit-variance noise whose amplitude spectrum falls as `1/f^α`.
pub fn power_law_noise(side: usize, alpha: f64, rng: &mut impl Rng) -> Plane {
    let signed = |k: usize| if k <= side / 2 { k as f64 } else { k as f64 - side as f64 };
    let mut coeffs = Vec::with_capacity(side * side);
    for u in 0..side {
        for v in 0..side {
            let f = signed(u).hypot(signed(v));
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            let amp = if f == 0.0 { 0.0 } else { f.powf(-alpha) };
            coeffs.push(Complex64::new(re * amp, im * amp));
        }
    }
    let field = inverse_fft_real(side, side, coeffs);
    let n = field.data().len() as f64;
    let mean = field.data().iter().sum::<f64>() / n;
    let std = (field.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    field.map(|v| (v - mean) / std.max(f64::MIN_POSITIVE))
}

/// Renders one image of the requested class.
pub fn synth_image(label: Label, cfg: &SynthConfig, rng: &mut impl Rng) -> RgbImage {
    let side = cfg.side;
    let alpha = rng.random_range(cfg.alpha.0..=cfg.alpha.1);
    let noise = gaussian_blur(
        &power_law_noise(side, alpha, rng),
        (3.0 * cfg.smoothing_sigma).ceil() as usize,
        cfg.smoothing_sigma,
    );
    let contrast = rng.random_range(0.10..0.16);
    let brightness = rng.random_range(0.4..0.6);
    let gains: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.85..1.15));

    let lattice = match label {
        Label::Real => None,
        Label::Fake => {
            let period = rng.random_range(cfg.period.0..=cfg.period.1);
            let amplitude = rng.random_range(cfg.amplitude.0..=cfg.amplitude.1);
            let phase = (rng.random_range(0..period), rng.random_range(0..period));
            Some((period, amplitude, phase))
        }
    };

    RgbImage::from_fn(side, side, |r, c| {
        let base = brightness + contrast * noise[(r, c)];
        let dot = match lattice {
            Some((p, a, (pr, pc))) if (r + pr) % p == 0 && (c + pc) % p == 0 => a,
            _ => 0.0,
        };
        std::array::from_fn(|ch| (base * gains[ch]).clamp(0.0, 1.0 - 0.1) + dot)
    })
}

/// Generated corpus locations.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub train_manifest: PathBuf,
    pub test_manifest: PathBuf,
    pub train: DatasetManifest,
    pub test: DatasetManifest,
}

fn render_split(
    dir: &Path,
    split: &str,
    count: usize,
    seed: u64,
    cfg: &SynthConfig,
) -> Result<DatasetManifest> {
    let split_dir = dir.join(split);
    fs::create_dir_all(&split_dir).map_err(|e| Error::io(&split_dir, e))?;
    let entries: Vec<Result<ManifestEntry>> = (0..count)
        .into_par_iter()
        .map(|i| {
            // alternate classes so any prefix stays balanced
            let label = if i % 2 == 0 { Label::Real } else { Label::Fake };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let img = synth_image(label, cfg, &mut rng);
            let name = format!("{split}/{label}_{i:05}.png");
            img.save_png(&dir.join(&name))?;
            Ok(ManifestEntry {
                path: PathBuf::from(name),
                label,
                split: Some(split.to_string()),
            })
        })
        .collect();
    DatasetManifest::new(entries.into_iter().collect::<Result<Vec<_>>>()?)
}

/// Writes `train/`, `test/` and their manifests under `dir`.
pub fn generate_corpus(
    dir: &Path,
    train: usize,
    test: usize,
    seed: u64,
    cfg: &SynthConfig,
) -> Result<Corpus> {
    if train < 2 || test < 2 {
        return Err(Error::InsufficientData("each split needs at least 2 images".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let train_set = render_split(dir, "train", train, seed, cfg)?;
    let test_set = render_split(dir, "test", test, seed ^ 0x9E37_79B9_7F4A_7C15, cfg)?;
    let train_manifest = dir.join("train.csv");
    let test_manifest = dir.join("test.csv");
    train_set.save(&train_manifest)?;
    test_set.save(&test_manifest)?;
    Ok(Corpus {
        train: DatasetManifest::load(&train_manifest)?,
        test: DatasetManifest::load(&test_manifest)?,
        train_manifest,
        test_manifest,
    })
}
