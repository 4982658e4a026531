use fgpd::spectrum::{compute_spectrum, fourier_transform, LumaImage};
use fgpd::Plane;
use proptest::prelude::*;

/// Direct double sum, O(N⁴) for an N×N input.
fn naive_dft(p: &Plane) -> Vec<(f64, f64)> {
    let (h, w) = (p.height(), p.width());
    let mut out = Vec::with_capacity(h * w);
    for u in 0..h {
        for v in 0..w {
            let (mut re, mut im) = (0.0, 0.0);
            for r in 0..h {
                for c in 0..w {
                    let phase = -2.0 * std::f64::consts::PI
                        * ((u * r) as f64 / h as f64 + (v * c) as f64 / w as f64);
                    re += p[(r, c)] * phase.cos();
                    im += p[(r, c)] * phase.sin();
                }
            }
            out.push((re, im));
        }
    }
    out
}

fn plane_16() -> impl Strategy<Value = Plane> {
    prop::collection::vec(0.0f64..1.0, 256).prop_map(|d| Plane::new(16, 16, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fft_agrees_with_direct_sum(p in plane_16()) {
        let fast = fourier_transform(&p);
        let slow = naive_dft(&p);
        let scale = slow.iter().map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max).max(1.0);
        for (z, (re, im)) in fast.iter().zip(&slow) {
            prop_assert!((z.re - re).abs() / scale < 1e-9);
            prop_assert!((z.im - im).abs() / scale < 1e-9);
        }
    }

    #[test]
    fn parseval(p in plane_16()) {
        let energy: f64 = fourier_transform(&p).iter().map(|z| z.norm_sqr()).sum();
        let spatial: f64 = p.data().iter().map(|v| v * v).sum::<f64>() * 256.0;
        prop_assert!((energy - spatial).abs() <= 1e-9 * spatial.max(1e-300));
    }

    #[test]
    fn magnitude_is_point_symmetric(p in plane_16()) {
        let f = fourier_transform(&p);
        for u in 0..16 {
            for v in 0..16 {
                let a = f[u * 16 + v].norm();
                let b = f[((16 - u) % 16) * 16 + (16 - v) % 16].norm();
                prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
            }
        }
    }

    #[test]
    fn normalized_range(p in plane_16()) {
        let s = compute_spectrum(&LumaImage::new(p).unwrap());
        let (lo, hi) = s.plane().min_max();
        prop_assert!(lo >= 0.0);
        prop_assert_eq!(hi, 1.0);
        prop_assert!(s.dc_centered());
    }

    #[test]
    fn constant_image_is_a_centered_delta(c in 0.0f64..=1.0, h in 2usize..20, w in 2usize..20) {
        let s = compute_spectrum(&LumaImage::new(Plane::filled(h, w, c)).unwrap());
        for r in 0..h {
            for col in 0..w {
                let expect = if (r, col) == (h / 2, w / 2) { 1.0 } else { 0.0 };
                prop_assert_eq!(s.plane()[(r, col)], expect);
            }
        }
    }
}

#[test]
fn cosine_has_two_symmetric_bins() {
    for k in 1..8 {
        let p = Plane::from_fn(16, 16, |_, c| (2.0 * std::f64::consts::PI * (k * c) as f64 / 16.0).cos());
        let slow = naive_dft(&p);
        let nonzero: Vec<usize> = (0..256).filter(|&i| slow[i].0.hypot(slow[i].1) > 1e-9).collect();
        assert_eq!(nonzero, vec![k, 16 - k]);
        let fast = fourier_transform(&p);
        let fast_nonzero: Vec<usize> = (0..256).filter(|&i| fast[i].norm() > 1e-9).collect();
        assert_eq!(fast_nonzero, nonzero);

        // after centering the two peaks sit at ±k around column 8 of the center row
        let luma = LumaImage::new(p.map(|v| 0.5 + 0.5 * v)).unwrap();
        let s = compute_spectrum(&luma);
        let peaks: Vec<(usize, usize)> = (0..16)
            .flat_map(|r| (0..16).map(move |c| (r, c)))
            .filter(|&(r, c)| (r, c) != (8, 8) && s.plane()[(r, c)] > 1e-9)
            .collect();
        assert_eq!(peaks, vec![(8, 8 - k), (8, 8 + k)]);
    }
}

#[test]
fn bt601_red() {
    use fgpd::spectrum::{rgb_to_luma, RgbImage};
    let red = RgbImage::from_fn(4, 4, |_, _| [1.0, 0.0, 0.0]);
    assert!(rgb_to_luma(&red).plane().data().iter().all(|&y| (y - 0.299).abs() < 1e-15));
}
