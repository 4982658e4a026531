//! Separable Gaussian smoothing with half-sample symmetric borders.

use crate::plane::Plane;

/// Maps an out-of-range index by mirroring about the edge (`d c b a | a b c d`).
#[inline]
pub fn reflect_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Sampled 1D Gaussian of `2 * radius + 1` taps, normalized to sum to one.
pub fn gaussian_kernel(radius: usize, sigma: f64) -> Vec<f64> {
    assert!(sigma > 0.0, "sigma must be positive");
    let taps: Vec<f64> = (-(radius as isize)..=radius as isize)
        .map(|x| (-((x * x) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / total).collect()
}

/// Convolves rows then columns with the same symmetric 1D kernel.
pub fn separable_convolve(plane: &Plane, kernel: &[f64]) -> Plane {
    assert!(kernel.len() % 2 == 1, "kernel must have odd length");
    let radius = (kernel.len() / 2) as isize;
    let (h, w) = (plane.height(), plane.width());

    let mut horizontal = Plane::zeros(h, w);
    for r in 0..h {
        let row = plane.row(r);
        for c in 0..w {
            let mut acc = 0.0;
            for (k, tap) in kernel.iter().enumerate() {
                acc += tap * row[reflect_index(c as isize + k as isize - radius, w)];
            }
            horizontal[(r, c)] = acc;
        }
    }

    let mut out = Plane::zeros(h, w);
    for r in 0..h {
        for (k, tap) in kernel.iter().enumerate() {
            let src = reflect_index(r as isize + k as isize - radius, h);
            let src_row = horizontal.row(src);
            let dst = &mut out.data_mut()[r * w..(r + 1) * w];
            for (d, s) in dst.iter_mut().zip(src_row) {
                *d += tap * s;
            }
        }
    }
    out
}

pub fn gaussian_blur(plane: &Plane, radius: usize, sigma: f64) -> Plane {
    separable_convolve(plane, &gaussian_kernel(radius, sigma))
}
