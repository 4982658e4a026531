//! Image ingestion and the centered log-magnitude Fourier spectrum.
//!
//! Only the luma channel is analysed. The spectrum of an image is obtained by
//! taking its unnormalized 2D DFT, shifting the DC bin to the center, mapping
//! magnitudes through `ln(1 + |F|)` and min-max scaling the result to `[0, 1]`.

use std::io::Write;
use std::path::Path;

use image::imageops::FilterType;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::plane::Plane;

/// Side length every loaded image is resampled to.
pub const CANONICAL_SIDE: u32 = 256;

/// BT.601 luma weights for R, G and B.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Relative magnitude below which a frequency bin is treated as exactly zero.
const ROUNDOFF_FLOOR: f64 = 1e-12;

/// An RGB image with channel values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RgbImage {
    height: usize,
    width: usize,
    data: Vec<[f64; 3]>,
}

impl RgbImage {
    pub fn new(height: usize, width: usize, data: Vec<[f64; 3]>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidShape(format!("{height}x{width} image")));
        }
        if data.len() != height * width {
            return Err(Error::mismatch(height * width, data.len()));
        }
        if data.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter(
                "rgb channel values must lie in [0, 1]".into(),
            ));
        }
        Ok(RgbImage {
            height,
            width,
            data,
        })
    }

    /// Builds an image from a per-pixel generator; values are clamped to `[0, 1]`.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Self {
        assert!(height > 0 && width > 0, "image must be non-empty");
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c).map(|v| v.clamp(0.0, 1.0)));
            }
        }
        RgbImage {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.data
    }

    /// Encodes as an 8-bit RGB PNG.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let bytes: Vec<u8> = self
            .data
            .iter()
            .flat_map(|px| px.map(|v| (v * 255.0).round() as u8))
            .collect();
        let buffer = image::RgbImage::from_raw(self.width as u32, self.height as u32, bytes)
            .expect("buffer length matches dimensions");
        buffer.save(path).map_err(|source| Error::Decode {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// The luma (Y) channel of an image.
#[derive(Clone, Debug, PartialEq)]
pub struct LumaImage(Plane);

impl LumaImage {
    pub fn new(plane: Plane) -> Result<Self> {
        if plane.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter("luma values must lie in [0, 1]".into()));
        }
        Ok(LumaImage(plane))
    }

    pub fn plane(&self) -> &Plane {
        &self.0
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }
}

/// A normalized log-magnitude spectrum with values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    plane: Plane,
    dc_centered: bool,
}

impl Spectrum {
    /// Wraps an arbitrary `[0, 1]` grid, e.g. a synthetic test pattern.
    pub fn new(plane: Plane) -> Result<Self> {
        if plane.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter(
                "spectrum values must lie in [0, 1]".into(),
            ));
        }
        Ok(Spectrum {
            plane,
            dc_centered: false,
        })
    }

    pub fn plane(&self) -> &Plane {
        &self.plane
    }

    pub fn height(&self) -> usize {
        self.plane.height()
    }

    pub fn width(&self) -> usize {
        self.plane.width()
    }

    pub fn dc_centered(&self) -> bool {
        self.dc_centered
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        self.plane.write_csv(out)
    }

    /// Saves the spectrum as an 8-bit grayscale PNG.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let bytes: Vec<u8> = self
            .plane
            .data()
            .iter()
            .map(|v| (v * 255.0).round() as u8)
            .collect();
        let buffer =
            image::GrayImage::from_raw(self.width() as u32, self.height() as u32, bytes)
                .expect("buffer length matches dimensions");
        buffer.save(path).map_err(|source| Error::Decode {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Decodes a PNG or JPEG file, resampling it bilinearly to 256×256 when needed.
pub fn load_image(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let reader = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let decoded = reader.decode().map_err(|source| Error::Decode {
        path: path.to_path_buf(),
        source,
    })?;
    if decoded.width() == 0 || decoded.height() == 0 {
        return Err(Error::EmptyImage(path.to_path_buf()));
    }
    let mut rgb = decoded.to_rgb32f();
    if rgb.dimensions() != (CANONICAL_SIDE, CANONICAL_SIDE) {
        rgb = image::imageops::resize(&rgb, CANONICAL_SIDE, CANONICAL_SIDE, FilterType::Triangle);
    }
    let (w, h) = rgb.dimensions();
    let data = rgb
        .pixels()
        .map(|p| p.0.map(|v| f64::from(v).clamp(0.0, 1.0)))
        .collect();
    RgbImage::new(h as usize, w as usize, data)
}

pub fn rgb_to_luma(img: &RgbImage) -> LumaImage {
    let [wr, wg, wb] = LUMA_WEIGHTS;
    let data = img
        .pixels()
        .iter()
        .map(|&[r, g, b]| (wr * r + wg * g + wb * b).clamp(0.0, 1.0))
        .collect();
    LumaImage(Plane::new(img.height(), img.width(), data).expect("shape preserved"))
}

/// Unnormalized 2D DFT, `F(u, v) = Σ y(i, j) e^{-2πi(ui/H + vj/W)}`, row-major.
///
/// Uses exact-length mixed-radix transforms, so any side length is supported.
pub fn fourier_transform(plane: &Plane) -> Vec<Complex64> {
    let (h, w) = (plane.height(), plane.width());
    let mut buf: Vec<Complex64> = plane.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::<f64>::new();

    let row_fft = planner.plan_fft_forward(w);
    for row in buf.chunks_exact_mut(w) {
        row_fft.process(row);
    }

    let col_fft = planner.plan_fft_forward(h);
    let mut column = vec![Complex64::new(0.0, 0.0); h];
    for c in 0..w {
        for r in 0..h {
            column[r] = buf[r * w + c];
        }
        col_fft.process(&mut column);
        for r in 0..h {
            buf[r * w + c] = column[r];
        }
    }
    buf
}

/// Moves bin `(0, 0)` to `(⌊H/2⌋, ⌊W/2⌋)`.
pub fn fft_shift(plane: &Plane) -> Plane {
    let (h, w) = (plane.height(), plane.width());
    let mut out = Plane::zeros(h, w);
    for r in 0..h {
        for c in 0..w {
            out[((r + h / 2) % h, (c + w / 2) % w)] = plane[(r, c)];
        }
    }
    out
}

pub fn compute_spectrum(img: &LumaImage) -> Spectrum {
    let (h, w) = (img.height(), img.width());
    let raw = fourier_transform(img.plane());
    // |F| never exceeds Σ|y|; anything this far below it is FFT roundoff
    let floor = ROUNDOFF_FLOOR * img.plane().data().iter().map(|v| v.abs()).sum::<f64>();
    let log_mag = Plane::new(
        h,
        w,
        raw.iter()
            .map(|z| z.norm())
            .map(|m| if m <= floor { 0.0 } else { m.ln_1p() })
            .collect(),
    )
    .expect("shape preserved");
    let shifted = fft_shift(&log_mag);

    let (lo, hi) = shifted.min_max();
    let plane = if hi - lo > 0.0 {
        shifted.map(|v| (v - lo) / (hi - lo))
    } else {
        // flat log-magnitude: treat the whole response as a DC delta
        let mut one_hot = Plane::zeros(h, w);
        one_hot[(h / 2, w / 2)] = 1.0;
        one_hot
    };
    Spectrum {
        plane,
        dc_centered: true,
    }
}

/// Element-wise mean of equally sized spectra, min-max re-normalized.
pub fn average_spectra(specs: &[Spectrum]) -> Result<Spectrum> {
    let first = specs.first().ok_or(Error::Empty("spectrum list"))?;
    let (h, w) = (first.height(), first.width());
    let mut acc = vec![0.0; h * w];
    for s in specs {
        if (s.height(), s.width()) != (h, w) {
            return Err(Error::mismatch(
                format!("{h}x{w}"),
                format!("{}x{}", s.height(), s.width()),
            ));
        }
        for (a, v) in acc.iter_mut().zip(s.plane.data()) {
            *a += v;
        }
    }
    let n = specs.len() as f64;
    let mean = Plane::new(h, w, acc.into_iter().map(|v| v / n).collect())?;
    let (lo, hi) = mean.min_max();
    let plane = if hi - lo > 0.0 {
        mean.map(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0))
    } else {
        mean
    };
    Ok(Spectrum {
        plane,
        dc_centered: specs.iter().all(|s| s.dc_centered),
    })
}

/// Values along the main diagonal, top-left to bottom-right.
pub fn diagonal_profile(spec: &Spectrum) -> Result<Vec<f64>> {
    let p = spec.plane();
    if !p.is_square() {
        return Err(Error::InvalidShape(format!(
            "diagonal profile needs a square spectrum, got {}x{}",
            p.height(),
            p.width()
        )));
    }
    Ok((0..p.height()).map(|i| p[(i, i)]).collect())
}

/// Convenience: file → luma → spectrum.
pub fn spectrum_of_file(path: impl AsRef<Path>) -> Result<Spectrum> {
    let rgb = load_image(path)?;
    Ok(compute_spectrum(&rgb_to_luma(&rgb)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn luma(h: usize, w: usize, f: impl FnMut(usize, usize) -> f64) -> LumaImage {
        LumaImage::new(Plane::from_fn(h, w, f)).unwrap()
    }

    #[test]
    fn luma_weights() {
        let white = RgbImage::from_fn(4, 4, |_, _| [1.0; 3]);
        assert!(rgb_to_luma(&white).plane().data().iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let black = RgbImage::from_fn(4, 4, |_, _| [0.0; 3]);
        assert!(rgb_to_luma(&black).plane().data().iter().all(|&v| v == 0.0));
        let red = RgbImage::from_fn(4, 4, |_, _| [1.0, 0.0, 0.0]);
        assert!(rgb_to_luma(&red).plane().data().iter().all(|&v| v == 0.299));
    }

    #[test]
    fn rgb_rejects_out_of_range() {
        assert!(RgbImage::new(1, 1, vec![[1.5, 0.0, 0.0]]).is_err());
        assert!(RgbImage::new(0, 1, vec![]).is_err());
    }

    #[test]
    fn constant_image_is_dc_delta() {
        for side in [8, 15, 256] {
            let s = compute_spectrum(&luma(side, side, |_, _| 0.37));
            let c = side / 2;
            assert_eq!(s.plane()[(c, c)], 1.0);
            let off_max = s
                .plane()
                .data()
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != c * side + c)
                .map(|(_, v)| *v)
                .fold(0.0, f64::max);
            assert!(off_max < 1e-12, "side {side}: {off_max}");
            assert!(s.dc_centered());
        }
    }

    #[test]
    fn black_image_degenerates_to_center_delta() {
        let s = compute_spectrum(&luma(6, 6, |_, _| 0.0));
        let mut expected = Plane::zeros(6, 6);
        expected[(3, 3)] = 1.0;
        assert_eq!(s.plane(), &expected);
    }

    #[test]
    fn normalized_range() {
        let s = compute_spectrum(&luma(12, 10, |r, c| ((r * 7 + c * 3) % 5) as f64 / 4.0));
        let (lo, hi) = s.plane().min_max();
        assert_eq!(lo, 0.0);
        assert_eq!(hi, 1.0);
    }

    #[test]
    fn horizontal_cosine_has_two_side_peaks() {
        let n = 16;
        let k = 3;
        let s = compute_spectrum(&luma(n, n, |_, c| {
            0.5 + 0.5 * (2.0 * PI * (k * c) as f64 / n as f64).cos()
        }));
        let center = n / 2;
        let peaks: Vec<(usize, usize)> = (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .filter(|&(r, c)| (r, c) != (center, center) && s.plane()[(r, c)] > 1e-9)
            .collect();
        assert_eq!(peaks, vec![(center, center - k), (center, center + k)]);
    }

    #[test]
    fn averaging() {
        let a = compute_spectrum(&luma(8, 8, |r, c| ((r + 2 * c) % 3) as f64 / 2.0));
        let avg = average_spectra(&[a.clone(), a.clone()]).unwrap();
        for (x, y) in avg.plane().data().iter().zip(a.plane().data()) {
            assert!((x - y).abs() < 1e-15);
        }

        let mut p1 = Plane::zeros(4, 4);
        p1[(0, 1)] = 1.0;
        let mut p2 = Plane::zeros(4, 4);
        p2[(2, 3)] = 1.0;
        let avg = average_spectra(&[Spectrum::new(p1).unwrap(), Spectrum::new(p2).unwrap()]).unwrap();
        assert_eq!(avg.plane()[(0, 1)], 1.0);
        assert_eq!(avg.plane()[(2, 3)], 1.0);
        assert_eq!(avg.plane().data().iter().filter(|&&v| v > 0.0).count(), 2);

        assert!(matches!(average_spectra(&[]), Err(Error::Empty(_))));
        let small = Spectrum::new(Plane::zeros(2, 2)).unwrap();
        let big = Spectrum::new(Plane::zeros(3, 3)).unwrap();
        assert!(average_spectra(&[small, big]).is_err());
    }

    #[test]
    fn diagonal() {
        let eye = Spectrum::new(Plane::from_fn(5, 5, |r, c| (r == c) as u8 as f64)).unwrap();
        assert_eq!(diagonal_profile(&eye).unwrap(), vec![1.0; 5]);

        let m = Spectrum::new(Plane::from_fn(4, 4, |r, c| (r * 4 + c) as f64 / 15.0)).unwrap();
        let d = diagonal_profile(&m).unwrap();
        assert_eq!(d, vec![0.0, 5.0 / 15.0, 10.0 / 15.0, 1.0]);

        let s = compute_spectrum(&luma(256, 256, |_, _| 0.5));
        let d = diagonal_profile(&s).unwrap();
        assert_eq!(d.len(), 256);
        assert_eq!(d[128], 1.0);
        assert!(d.iter().enumerate().all(|(i, &v)| i == 128 || v < 1e-12));

        let rect = Spectrum::new(Plane::zeros(3, 4)).unwrap();
        assert!(diagonal_profile(&rect).is_err());
    }
}
