//! Spectrum preprocessing and per-cell histograms of oriented gradients.
//!
//! The spectrum is halved in each dimension, its top-left quarter is kept
//! (the centered spectrum of a real image is point-symmetric, so one quadrant
//! of the low-resolution copy carries the information), and the crop is
//! smoothed with a 9×9 Gaussian before gradients are binned.
//!
//! Histograms use unsigned orientations in `[0°, 180°)`. Bin `k` is centered
//! on `k · 180° / orientations`, and each pixel splits its gradient magnitude
//! linearly between the two nearest bin centers. Cells are grouped into
//! non-overlapping square blocks whose concatenated histograms are
//! L2-normalized; every cell's descriptor is its slice of the normalized block.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::separable_convolve;
use crate::filter::gaussian_kernel;
use crate::plane::Plane;
use crate::spectrum::Spectrum;

const BLOCK_EPSILON: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HogConfig {
    /// Side of the square smoothing mask, odd.
    pub smoothing_size: usize,
    pub smoothing_sigma: f64,
    pub orientations: usize,
    /// Cell side in pixels.
    pub cell_size: usize,
    /// Block (and detection window) side in pixels; a multiple of `cell_size`.
    pub block_size: usize,
}

impl Default for HogConfig {
    fn default() -> Self {
        HogConfig {
            smoothing_size: 9,
            smoothing_sigma: 2.0,
            orientations: 9,
            cell_size: 16,
            block_size: 64,
        }
    }
}

impl HogConfig {
    pub fn validate(&self) -> Result<()> {
        if self.smoothing_size == 0 || self.smoothing_size % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "smoothing size must be odd and positive, got {}",
                self.smoothing_size
            )));
        }
        if !(self.smoothing_sigma > 0.0) {
            return Err(Error::InvalidParameter("smoothing sigma must be positive".into()));
        }
        if self.orientations == 0 || self.cell_size == 0 {
            return Err(Error::InvalidParameter(
                "orientations and cell size must be positive".into(),
            ));
        }
        if self.block_size == 0 || self.block_size % self.cell_size != 0 {
            return Err(Error::InvalidParameter(format!(
                "block size {} is not a multiple of cell size {}",
                self.block_size, self.cell_size
            )));
        }
        Ok(())
    }
}

/// The smoothed top-left quarter of a half-resolution spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct QuarterSpectrum(Plane);

impl QuarterSpectrum {
    pub fn new(plane: Plane) -> Result<Self> {
        if plane.data().iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(
                "quarter spectrum values must be finite and non-negative".into(),
            ));
        }
        Ok(QuarterSpectrum(plane))
    }

    pub fn plane(&self) -> &Plane {
        &self.0
    }
}

/// One cell's orientation histogram after block normalization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellDescriptor {
    pub cell_y: usize,
    pub cell_x: usize,
    pub bins: Vec<f64>,
}

/// Bilinear resampling with pixel-center alignment.
pub fn resize_bilinear(plane: &Plane, height: usize, width: usize) -> Plane {
    let axis = |out: usize, src: usize| -> Vec<(usize, usize, f64)> {
        let scale = src as f64 / out as f64;
        (0..out)
            .map(|o| {
                let x = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
                let lo = x.floor() as usize;
                let hi = (lo + 1).min(src - 1);
                (lo, hi, x - lo as f64)
            })
            .collect()
    };
    let rows = axis(height, plane.height());
    let cols = axis(width, plane.width());
    Plane::from_fn(height, width, |r, c| {
        let (r0, r1, fr) = rows[r];
        let (c0, c1, fc) = cols[c];
        let top = plane[(r0, c0)] * (1.0 - fc) + plane[(r0, c1)] * fc;
        let bottom = plane[(r1, c0)] * (1.0 - fc) + plane[(r1, c1)] * fc;
        top * (1.0 - fr) + bottom * fr
    })
}

/// Halve, crop the top-left quarter, and smooth.
pub fn preprocess_spectrum(spec: &Spectrum, cfg: &HogConfig) -> Result<QuarterSpectrum> {
    let p = spec.plane();
    if !p.is_square() || p.height() < 8 || p.height() % 4 != 0 {
        return Err(Error::InvalidShape(format!(
            "spectrum must be square with a side divisible by 4 and at least 8, got {}x{}",
            p.height(),
            p.width()
        )));
    }
    cfg.validate()?;
    let side = p.height();
    let half = resize_bilinear(p, side / 2, side / 2);
    let quarter = half.crop(0, 0, side / 4, side / 4)?;
    let kernel = gaussian_kernel(cfg.smoothing_size / 2, cfg.smoothing_sigma);
    QuarterSpectrum::new(separable_convolve(&quarter, &kernel))
}

/// Per-pixel gradients: centered `[-1, 0, 1] / 2` in the interior and
/// one-sided differences on the outermost rows and columns.
pub fn gradients(plane: &Plane) -> (Plane, Plane) {
    let (h, w) = (plane.height(), plane.width());
    let diff = |lo: f64, hi: f64, span: usize| (hi - lo) / span as f64;
    let gx = Plane::from_fn(h, w, |r, c| {
        if w == 1 {
            0.0
        } else if c == 0 {
            diff(plane[(r, 0)], plane[(r, 1)], 1)
        } else if c == w - 1 {
            diff(plane[(r, w - 2)], plane[(r, w - 1)], 1)
        } else {
            diff(plane[(r, c - 1)], plane[(r, c + 1)], 2)
        }
    });
    let gy = Plane::from_fn(h, w, |r, c| {
        if h == 1 {
            0.0
        } else if r == 0 {
            diff(plane[(0, c)], plane[(1, c)], 1)
        } else if r == h - 1 {
            diff(plane[(h - 2, c)], plane[(h - 1, c)], 1)
        } else {
            diff(plane[(r - 1, c)], plane[(r + 1, c)], 2)
        }
    });
    (gx, gy)
}

pub fn hog_descriptors(q: &QuarterSpectrum, cfg: &HogConfig) -> Result<Vec<CellDescriptor>> {
    cfg.validate()?;
    let plane = q.plane();
    let (h, w) = (plane.height(), plane.width());
    let cell = cfg.cell_size;
    if h % cell != 0 || w % cell != 0 {
        return Err(Error::InvalidShape(format!(
            "{h}x{w} is not divisible by the {cell}px cell size"
        )));
    }
    let (cells_y, cells_x) = (h / cell, w / cell);
    let block_cells = cfg.block_size / cell;
    if cells_y % block_cells != 0 || cells_x % block_cells != 0 {
        return Err(Error::InvalidShape(format!(
            "{cells_y}x{cells_x} cells cannot be tiled by {block_cells}x{block_cells} blocks"
        )));
    }

    let bins = cfg.orientations;
    let bin_width = PI / bins as f64;
    let (gx, gy) = gradients(plane);
    let mut hist = vec![0.0; cells_y * cells_x * bins];
    for r in 0..h {
        for c in 0..w {
            let (dx, dy) = (gx[(r, c)], gy[(r, c)]);
            let magnitude = dx.hypot(dy);
            if magnitude == 0.0 {
                continue;
            }
            let theta = dy.atan2(dx).rem_euclid(PI);
            let pos = theta / bin_width;
            let lo = pos.floor();
            let frac = pos - lo;
            let lo = (lo as usize) % bins;
            let hi = (lo + 1) % bins;
            let base = ((r / cell) * cells_x + c / cell) * bins;
            hist[base + lo] += magnitude * (1.0 - frac);
            hist[base + hi] += magnitude * frac;
        }
    }

    let mut descriptors = Vec::with_capacity(cells_y * cells_x);
    for by in 0..cells_y / block_cells {
        for bx in 0..cells_x / block_cells {
            let members: Vec<(usize, usize)> = (0..block_cells)
                .flat_map(|dy| (0..block_cells).map(move |dx| (by * block_cells + dy, bx * block_cells + dx)))
                .collect();
            let norm_sq: f64 = members
                .iter()
                .flat_map(|&(cy, cx)| &hist[(cy * cells_x + cx) * bins..][..bins])
                .map(|v| v * v)
                .sum();
            let scale = 1.0 / (norm_sq + BLOCK_EPSILON * BLOCK_EPSILON).sqrt();
            for (cy, cx) in members {
                let slice = &hist[(cy * cells_x + cx) * bins..][..bins];
                descriptors.push(CellDescriptor {
                    cell_y: cy,
                    cell_x: cx,
                    bins: slice.iter().map(|v| v * scale).collect(),
                });
            }
        }
    }
    descriptors.sort_by_key(|d| (d.cell_y, d.cell_x));
    Ok(descriptors)
}

/// Spectrum → preprocessed quarter → cell descriptors.
pub fn spectrum_descriptors(spec: &Spectrum, cfg: &HogConfig) -> Result<Vec<CellDescriptor>> {
    hog_descriptors(&preprocess_spectrum(spec, cfg)?, cfg)
}

/// One row per cell: `cell_y,cell_x,bin_0,...`.
pub fn write_descriptors_csv<W: Write>(descriptors: &[CellDescriptor], mut out: W) -> std::io::Result<()> {
    for d in descriptors {
        write!(out, "{},{}", d.cell_y, d.cell_x)?;
        for v in &d.bins {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quarter(side: usize, f: impl FnMut(usize, usize) -> f64) -> QuarterSpectrum {
        QuarterSpectrum::new(Plane::from_fn(side, side, f)).unwrap()
    }

    fn dominant_bins(descriptors: &[CellDescriptor]) -> Vec<usize> {
        descriptors
            .iter()
            .map(|d| {
                d.bins
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .unwrap()
                    .0
            })
            .collect()
    }

    #[test]
    fn preprocess_shapes() {
        let cfg = HogConfig::default();
        let s = Spectrum::new(Plane::filled(256, 256, 0.4)).unwrap();
        let q = preprocess_spectrum(&s, &cfg).unwrap();
        assert_eq!((q.plane().height(), q.plane().width()), (64, 64));
        assert!(q.plane().data().iter().all(|v| (v - 0.4).abs() < 1e-14));

        assert!(preprocess_spectrum(&Spectrum::new(Plane::zeros(30, 30)).unwrap(), &cfg).is_err());
        assert!(preprocess_spectrum(&Spectrum::new(Plane::zeros(32, 16)).unwrap(), &cfg).is_err());
        assert!(preprocess_spectrum(&Spectrum::new(Plane::zeros(4, 4)).unwrap(), &cfg).is_err());
    }

    #[test]
    fn half_resize_is_box_average() {
        let p = Plane::from_fn(4, 4, |r, c| (r * 4 + c) as f64);
        let h = resize_bilinear(&p, 2, 2);
        assert_eq!(h.data(), &[2.5, 4.5, 10.5, 12.5]);
    }

    #[test]
    fn one_hot_matches_direct_convolution() {
        let cfg = HogConfig::default();
        // a 2×2 block at the origin survives halving as a single unit sample
        let mut p = Plane::zeros(64, 64);
        for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            p[(r, c)] = 1.0;
        }
        let q = preprocess_spectrum(&Spectrum::new(p).unwrap(), &cfg).unwrap();

        // oracle: explicit 2D kernel, reflected source positions of the impulse
        let g = |d: f64| (-d * d / 8.0).exp();
        let norm: f64 = (-4..=4).map(|d| g(d as f64)).sum::<f64>().powi(2);
        let oracle = |r: isize, c: isize| -> f64 {
            let mut acc = 0.0;
            for dr in -4isize..=4 {
                for dc in -4isize..=4 {
                    let (sr, sc) = (r + dr, c + dc);
                    // impulse at (0,0); reflect padding mirrors it to (-1,*), (*,-1)
                    let hits_r = sr == 0 || sr == -1;
                    let hits_c = sc == 0 || sc == -1;
                    if hits_r && hits_c {
                        acc += g(dr as f64) * g(dc as f64);
                    }
                }
            }
            acc / norm
        };
        for r in 0..16 {
            for c in 0..16 {
                let want = oracle(r as isize, c as isize);
                assert!((q.plane()[(r, c)] - want).abs() < 1e-14, "({r},{c})");
            }
        }
    }

    #[test]
    fn constant_input_gives_zero_descriptors() {
        let d = hog_descriptors(&quarter(64, |_, _| 0.3), &HogConfig::default()).unwrap();
        assert_eq!(d.len(), 16);
        assert!(d.iter().all(|c| c.bins.len() == 9 && c.bins.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn horizontal_ramp_votes_in_one_bin() {
        let d = hog_descriptors(&quarter(64, |_, c| c as f64), &HogConfig::default()).unwrap();
        for cell in &d {
            let nonzero: Vec<usize> = (0..9).filter(|&k| cell.bins[k] != 0.0).collect();
            assert_eq!(nonzero, vec![0]);
        }
        let norm: f64 = d.iter().flat_map(|c| &c.bins).map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn transpose_mirrors_orientation() {
        let theta = 25f64.to_radians();
        let plane = Plane::from_fn(64, 64, |r, c| c as f64 * theta.cos() + r as f64 * theta.sin());
        let cfg = HogConfig::default();
        let direct = hog_descriptors(&QuarterSpectrum::new(plane.map(|v| v + 100.0)).unwrap(), &cfg).unwrap();
        let flipped =
            hog_descriptors(&QuarterSpectrum::new(plane.transpose().map(|v| v + 100.0)).unwrap(), &cfg).unwrap();
        // 25° sits closest to bin 1 (20°); 65° closest to bin 3 (60°)
        assert!(dominant_bins(&direct).iter().all(|&b| b == 1));
        assert!(dominant_bins(&flipped).iter().all(|&b| b == 3));
    }

    #[test]
    fn rejects_misaligned_input() {
        let cfg = HogConfig::default();
        assert!(hog_descriptors(&quarter(40, |_, _| 0.0), &cfg).is_err());
        assert!(hog_descriptors(&quarter(32, |_, _| 0.0), &cfg).is_err());
        let d = hog_descriptors(&quarter(128, |r, c| ((r * c) % 7) as f64), &cfg).unwrap();
        assert_eq!(d.len(), 64);
    }

    #[test]
    fn csv_dump() {
        let d = vec![CellDescriptor {
            cell_y: 1,
            cell_x: 2,
            bins: vec![0.5, 0.0],
        }];
        let mut buf = Vec::new();
        write_descriptors_csv(&d, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1,2,0.5,0\n");
    }
}
