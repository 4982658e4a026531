//! Difference-of-Gaussians blob detection on spectra.
//!
//! Grid-like periodic artifacts show up as a lattice of bright spots in the
//! spectrum. Blobs are located as strict maxima of a scale-normalized DoG
//! stack, overlapping detections are pruned, and the number of survivors is
//! used as a scalar feature.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::gaussian_blur;
use crate::plane::Plane;
use crate::spectrum::Spectrum;

/// Fraction of the smaller disc that may be covered before the weaker blob is dropped.
pub const OVERLAP_LIMIT: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlobParams {
    pub min_sigma: f64,
    pub max_sigma: f64,
    /// Multiplier between consecutive scales.
    pub ratio: f64,
    /// Minimum scale-normalized DoG response.
    pub threshold: f64,
}

impl Default for BlobParams {
    fn default() -> Self {
        BlobParams {
            min_sigma: 11.0,
            max_sigma: 30.0,
            ratio: 1.8,
            threshold: 0.05,
        }
    }
}

impl BlobParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_sigma > 0.0) {
            return Err(Error::InvalidParameter("min_sigma must be positive".into()));
        }
        if !(self.ratio > 1.0) {
            return Err(Error::InvalidParameter("ratio must exceed 1".into()));
        }
        if !(self.max_sigma >= self.min_sigma) {
            return Err(Error::InvalidParameter("max_sigma must be at least min_sigma".into()));
        }
        if !self.threshold.is_finite() {
            return Err(Error::InvalidParameter("threshold must be finite".into()));
        }
        Ok(())
    }

    /// Every `min_sigma · ratio^j` up to `max_sigma`, plus the first one beyond it.
    pub fn sigma_ladder(&self) -> Vec<f64> {
        let mut ladder = vec![self.min_sigma];
        while *ladder.last().unwrap() <= self.max_sigma {
            let next = self.min_sigma * self.ratio.powi(ladder.len() as i32);
            ladder.push(next);
        }
        ladder
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub y: usize,
    pub x: usize,
    pub sigma: f64,
    pub response: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BlobSet {
    blobs: Vec<Blob>,
}

impl BlobSet {
    pub fn blobs(&self) -> &[Blob] {
        &self.blobs
    }

    pub fn count(&self) -> usize {
        self.blobs.len()
    }

    /// One row per blob: `y,x,sigma,response`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "y,x,sigma,response")?;
        for b in &self.blobs {
            writeln!(out, "{},{},{},{}", b.y, b.x, b.sigma, b.response)?;
        }
        Ok(())
    }
}

/// Scale-normalized DoG layers `(G_j − G_{j+1}) · σ_j / (σ_{j+1} − σ_j)`.
pub fn dog_stack(plane: &Plane, ladder: &[f64]) -> Vec<Plane> {
    let blurred: Vec<Plane> = ladder
        .iter()
        .map(|&s| gaussian_blur(plane, (3.0 * s).ceil() as usize, s))
        .collect();
    blurred
        .windows(2)
        .zip(ladder.windows(2))
        .map(|(pair, sig)| {
            let scale = sig[0] / (sig[1] - sig[0]);
            let data = pair[0]
                .data()
                .iter()
                .zip(pair[1].data())
                .map(|(a, b)| (a - b) * scale)
                .collect();
            Plane::new(plane.height(), plane.width(), data).expect("shape preserved")
        })
        .collect()
}

/// Strict maxima over the available 3×3×3 (scale, y, x) neighbourhood.
pub fn local_maxima(stack: &[Plane], threshold: f64) -> Vec<(usize, usize, usize, f64)> {
    let mut found = Vec::new();
    let Some(first) = stack.first() else {
        return found;
    };
    let (h, w) = (first.height(), first.width());
    for (layer, plane) in stack.iter().enumerate() {
        for y in 0..h {
            'pixel: for x in 0..w {
                let v = plane[(y, x)];
                if !(v > threshold) {
                    continue;
                }
                for nl in layer.saturating_sub(1)..=(layer + 1).min(stack.len() - 1) {
                    for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                        for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                            if (nl, ny, nx) != (layer, y, x) && stack[nl][(ny, nx)] >= v {
                                continue 'pixel;
                            }
                        }
                    }
                }
                found.push((layer, y, x, v));
            }
        }
    }
    found
}

/// Fraction of the smaller of two discs covered by their intersection.
pub fn disc_overlap(r1: f64, r2: f64, distance: f64) -> f64 {
    let (small, large) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
    if distance >= small + large {
        return 0.0;
    }
    if distance <= large - small {
        return 1.0;
    }
    let d = distance;
    let a1 = ((d * d + small * small - large * large) / (2.0 * d * small)).clamp(-1.0, 1.0).acos();
    let a2 = ((d * d + large * large - small * small) / (2.0 * d * large)).clamp(-1.0, 1.0).acos();
    let kite = 0.5
        * ((-d + small + large) * (d + small - large) * (d - small + large) * (d + small + large))
            .max(0.0)
            .sqrt();
    let lens = small * small * a1 + large * large * a2 - kite;
    (lens / (PI * small * small)).clamp(0.0, 1.0)
}

fn overlaps(a: &Blob, b: &Blob) -> bool {
    let dy = a.y as f64 - b.y as f64;
    let dx = a.x as f64 - b.x as f64;
    disc_overlap(a.sigma * SQRT_2, b.sigma * SQRT_2, dy.hypot(dx)) > OVERLAP_LIMIT
}

/// Keeps blobs strongest-first, dropping any that overlap a kept one too much.
pub fn prune_overlapping(mut candidates: Vec<Blob>) -> Vec<Blob> {
    candidates.sort_by(|a, b| {
        b.response
            .total_cmp(&a.response)
            .then(a.sigma.total_cmp(&b.sigma))
            .then((a.y, a.x).cmp(&(b.y, b.x)))
    });
    let mut kept: Vec<Blob> = Vec::new();
    for c in candidates {
        if kept.iter().all(|k| !overlaps(k, &c)) {
            kept.push(c);
        }
    }
    kept
}

pub fn detect_blobs(spec: &Spectrum, params: &BlobParams) -> Result<BlobSet> {
    params.validate()?;
    let ladder = params.sigma_ladder();
    let stack = dog_stack(spec.plane(), &ladder);
    let candidates = local_maxima(&stack, params.threshold)
        .into_iter()
        .map(|(layer, y, x, response)| Blob {
            y,
            x,
            sigma: ladder[layer],
            response,
        })
        .collect();
    Ok(BlobSet {
        blobs: prune_overlapping(candidates),
    })
}

pub fn blob_count_feature(blobs: &BlobSet) -> f64 {
    blobs.count() as f64
}
