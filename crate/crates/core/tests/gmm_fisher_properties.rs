use fgpd::fisher::{fisher_vector, fisher_vector_raw};
use fgpd::gmm::{bic, fit_gmm, fit_gmm_traced, GmmConfig, GmmModel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn blobs(seed: u64, n: usize, d: usize, centers: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offsets: Vec<Vec<f64>> = (0..centers)
        .map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect())
        .collect();
    (0..n)
        .map(|i| offsets[i % centers].iter().map(|o| o + rng.random_range(-1.0..1.0)).collect())
        .collect()
}

fn random_model(rng: &mut ChaCha8Rng, k: usize, d: usize) -> GmmModel {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    GmmModel::new(
        raw.iter().map(|w| w / total).collect(),
        (0..k).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect(),
        (0..k).map(|_| (0..d).map(|_| rng.random_range(0.3..2.0)).collect()).collect(),
    )
    .unwrap()
}

fn with_mean(model: &GmmModel, k: usize, d: usize, delta: f64) -> GmmModel {
    let mut means = model.means().to_vec();
    means[k][d] += delta;
    GmmModel::new(model.weights().to_vec(), means, model.variances().to_vec()).unwrap()
}

#[test]
fn em_is_monotone() {
    for seed in 0..50 {
        let data = blobs(seed, 300, 3, 3);
        let cfg = GmmConfig {
            components: 3,
            ..GmmConfig::default()
        };
        let fit = fit_gmm_traced(&data, &cfg, seed).unwrap();
        for w in fit.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-8, "seed {seed}: {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn mean_block_is_whitened_likelihood_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let k = rng.random_range(1..=3);
        let d = rng.random_range(1..=4);
        let model = random_model(&mut rng, k, d);
        let n = rng.random_range(5..40);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let fv = fisher_vector_raw(&model, &x).unwrap();
        let avg_ll = |m: &GmmModel| m.log_likelihood(&x) / n as f64;
        let h = 1e-5;
        for j in 0..k {
            for dim in 0..d {
                let g = (avg_ll(&with_mean(&model, j, dim, h)) - avg_ll(&with_mean(&model, j, dim, -h))) / (2.0 * h);
                let whitened = g * model.variances()[j][dim].sqrt() / model.weights()[j].sqrt();
                let analytic = fv.0[j * d + dim];
                let scale = analytic.abs().max(whitened.abs()).max(1e-3);
                assert!((analytic - whitened).abs() / scale < 1e-5, "{analytic} vs {whitened}");
            }
        }
    }
}

#[test]
fn default_dimension() {
    let data = blobs(3, 400, 9, 4);
    let model = fit_gmm(&data, &GmmConfig::default(), 0).unwrap();
    assert_eq!(fisher_vector(&model, &data[..16]).unwrap().len(), 2 * 16 * 9);
}

#[test]
fn separated_clusters_prefer_two_components() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let data: Vec<Vec<f64>> = (0..400)
        .map(|i| {
            let c = if i % 2 == 0 { 0.0 } else { 20.0 };
            vec![c + rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]
        })
        .collect();
    let one = fit_gmm(&data, &GmmConfig { components: 1, ..GmmConfig::default() }, 0).unwrap();
    let two = fit_gmm(&data, &GmmConfig { components: 2, ..GmmConfig::default() }, 0).unwrap();
    assert!(bic(&two, &data).unwrap() < bic(&one, &data).unwrap());
    assert_eq!(bic(&two, &data).unwrap(), bic(&two, &data).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn responsibilities_sum_to_one(seed in any::<u64>(), x in prop::collection::vec(-50.0f64..50.0, 3)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, 4, 3);
        let total: f64 = model.responsibilities(&x).iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn replication_invariance(seed in any::<u64>(), n in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, 3, 4);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let doubled: Vec<Vec<f64>> = x.iter().chain(&x).cloned().collect();
        let a = fisher_vector(&model, &x).unwrap();
        let b = fisher_vector(&model, &doubled).unwrap();
        for (u, v) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((u - v).abs() < 1e-10);
        }
        prop_assert!((a.norm() - 1.0).abs() < 1e-9);
    }
}
