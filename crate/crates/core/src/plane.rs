use std::io::Write;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// A dense row-major grid of `f64` samples.
///
/// Images, spectra and filtered intermediates all share this layout: the
/// sample at row `r`, column `c` lives at `data[r * width + c]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidShape(format!(
                "plane must be non-empty, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(Error::mismatch(height * width, data.len()));
        }
        Ok(Plane {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        assert!(height > 0 && width > 0, "plane must be non-empty");
        Plane {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(height > 0 && width > 0, "plane must be non-empty");
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Plane {
            height,
            width,
            data,
        }
    }

    /// Builds a plane from nested rows; all rows must share one length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidShape("ragged rows".into()));
        }
        Self::new(height, width, rows.concat())
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.height == self.width
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.width..(r + 1) * self.width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.width)
    }

    pub fn transpose(&self) -> Plane {
        Plane::from_fn(self.width, self.height, |r, c| self[(c, r)])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Plane {
        Plane {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Copies the sub-rectangle starting at `(top, left)`.
    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Result<Plane> {
        if top + height > self.height || left + width > self.width || height == 0 || width == 0 {
            return Err(Error::InvalidShape(format!(
                "crop {height}x{width}@({top},{left}) outside {}x{}",
                self.height, self.width
            )));
        }
        Ok(Plane::from_fn(height, width, |r, c| self[(top + r, left + c)]))
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Writes one CSV line per row with a `.` decimal point.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for row in self.rows() {
            let mut first = true;
            for v in row {
                if !first {
                    out.write_all(b",")?;
                }
                write!(out, "{v}")?;
                first = false;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for Plane {
    type Output = f64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.width + c]
    }
}

impl IndexMut<(usize, usize)> for Plane {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.width + c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Plane::new(0, 3, vec![]).is_err());
        assert!(Plane::new(2, 2, vec![0.0; 3]).is_err());
        assert!(Plane::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn csv_layout() {
        let p = Plane::from_rows(&[vec![0.5, 1.0], vec![0.0, 0.25]]).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0.5,1\n0,0.25\n");
    }

    #[test]
    fn crop_and_transpose() {
        let p = Plane::from_fn(3, 4, |r, c| (r * 10 + c) as f64);
        let q = p.crop(1, 2, 2, 2).unwrap();
        assert_eq!(q.data(), &[12.0, 13.0, 22.0, 23.0]);
        assert_eq!(p.transpose()[(3, 2)], 23.0);
        assert!(p.crop(2, 0, 2, 1).is_err());
    }
}
