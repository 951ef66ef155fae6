mod common;

use common::{brute_means, first_argmax, pinv_coefficients, scalar_loss};
use dcidc::cluster::{self, labels_of};
use dcidc::data::{normalize, synth_blobs, synth_blobs_with_centers, BlobSpec};
use dcidc::gradcheck::{self, GradCheckConfig};
use dcidc::network::{self, backprop_signals, gradients_from_signals};
use dcidc::trainer::{self, lambda1_sweep, train, TrainConfig};
use dcidc::{ActivationKind, Activations, Matrix, NormalizeMode, Penalties};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

#[test]
fn loss_terms_match_scalar_loops() {
    for (seed, kind) in [(1, ActivationKind::Tanh), (2, ActivationKind::Softplus)] {
        let cfg = GradCheckConfig {
            activations: Activations::same(kind),
            seed,
            ..GradCheckConfig::default()
        };
        let (params, data, h, s) = gradcheck::random_instance(&cfg).unwrap();
        let trace = params.forward(&data).unwrap();
        let pen = Penalties { lambda1: 0.3, lambda2: 3e-4 };
        let got = trainer::objective(&params, &trace, &h, &s, pen).unwrap();
        let (j1, j2, j3) = scalar_loss(&params, &data, &h, &s, 0.3, 3e-4);
        assert!((got.j1 - j1).abs() <= 1e-10 * j1.max(1.0));
        assert!((got.j2 - j2).abs() <= 1e-10 * j2.max(1.0));
        assert!((got.j3 - j3).abs() <= 1e-10 * j3.max(1.0));
        assert_eq!(got.total, got.j1 + got.j2 + got.j3);
    }
}

#[test]
fn gradients_match_differences_of_scalar_loss() {
    // dims [3,2,3], five samples
    let cfg = GradCheckConfig {
        dims: vec![3, 2, 3],
        samples: 5,
        seed: 11,
        ..GradCheckConfig::default()
    };
    let (params, data, h, s) = gradcheck::random_instance(&cfg).unwrap();
    let pen = Penalties { lambda1: 0.3, lambda2: 3e-4 };
    let trace = params.forward(&data).unwrap();
    let grads = network::backward(&params, &trace, &h, &s, pen).unwrap();
    let total = |p: &dcidc::NetworkParams| {
        let (a, b, c) = scalar_loss(p, &data, &h, &s, pen.lambda1, pen.lambda2);
        a + b + c
    };
    let step = 1e-6;
    for l in 0..params.layers() {
        let w = &params.weights[l];
        for r in 0..w.rows() {
            for c in 0..w.cols() {
                let mut plus = params.clone();
                let mut minus = params.clone();
                plus.weights[l].set(r, c, w.get(r, c) + step);
                minus.weights[l].set(r, c, w.get(r, c) - step);
                let numeric = (total(&plus) - total(&minus)) / (2.0 * step);
                let analytic = grads.d_weights[l].get(r, c);
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3);
                assert!(rel <= 1e-5, "W{}[{r},{c}]: {analytic} vs {numeric}", l + 1);
            }
        }
        for i in 0..params.biases[l].len() {
            let mut plus = params.clone();
            let mut minus = params.clone();
            plus.biases[l][i] += step;
            minus.biases[l][i] -= step;
            let numeric = (total(&plus) - total(&minus)) / (2.0 * step);
            let analytic = grads.d_biases[l][i];
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3);
            assert!(rel <= 1e-5, "b{}[{i}]: {analytic} vs {numeric}", l + 1);
        }
    }
}

#[test]
fn zero_lambda1_equals_plain_autoencoder() {
    for kind in ActivationKind::ALL {
        let cfg = GradCheckConfig {
            activations: Activations::same(kind),
            seed: 4,
            ..GradCheckConfig::default()
        };
        let (params, data, h, s) = gradcheck::random_instance(&cfg).unwrap();
        let trace = params.forward(&data).unwrap();
        let pen = Penalties { lambda1: 0.0, lambda2: 3e-4 };
        let joint = network::backward(&params, &trace, &h, &s, pen).unwrap();
        // the plain autoencoder path drops the clustering signal entirely
        let mut signals = backprop_signals(&params, &trace, &h, &s).unwrap();
        signals.lambdas.iter_mut().for_each(|l| *l = None);
        let plain = gradients_from_signals(&params, &trace, &signals, pen).unwrap();
        assert_eq!(joint.d_weights, plain.d_weights);
        assert_eq!(joint.d_biases, plain.d_biases);
    }
}

#[test]
fn decoder_layers_carry_no_cluster_signal() {
    let (params, data, h, s) = gradcheck::random_instance(&GradCheckConfig::default()).unwrap();
    let trace = params.forward(&data).unwrap();
    let signals = backprop_signals(&params, &trace, &h, &s).unwrap();
    let mid = params.code_layer();
    for (m, l) in signals.lambdas.iter().enumerate() {
        assert_eq!(l.is_some(), m < mid, "layer {}", m + 1);
    }
}

#[test]
fn indicator_matches_pseudoinverse_on_orthogonal_ish_centers() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // three well-separated, nearly orthogonal centers in 4-D
    let mut centers = Matrix::zeros(4, 3);
    for k in 0..3 {
        centers.set(k, k, 2.0);
        for d in 0..4 {
            centers.set(d, k, centers.get(d, k) + rng.random_range(-0.1..0.1));
        }
    }
    let codes = random_matrix(&mut rng, 10, 4, -1.0, 3.0);
    let got = labels_of(&cluster::update_indicator(&codes, &centers).unwrap()).unwrap();
    let want: Vec<usize> = pinv_coefficients(&codes, &centers).iter().map(|h| first_argmax(h)).collect();
    assert_eq!(got, want);
}

#[test]
fn centers_match_brute_force_means() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let codes = random_matrix(&mut rng, 20, 3, -5.0, 5.0);
    let labels: Vec<usize> = (0..20).map(|i| if i < 3 { i } else { rng.random_range(0..3) }).collect();
    let h = cluster::one_hot(&labels, 3).unwrap();
    let got = cluster::update_centers(&codes, &h).unwrap();
    assert!(got.reseeded.is_empty());
    assert_eq!(got.centers, brute_means(&codes, &labels, 3));
}

#[test]
fn wide_separation_blobs_are_nearest_center_separable() {
    let spec = BlobSpec {
        n_per_cluster: 300,
        k: 4,
        dim: 5,
        separation: 10.0,
        noise_sigma: 1.0,
        seed: 21,
    };
    let (ds, centers) = synth_blobs_with_centers(&spec).unwrap();
    let truth = ds.labels.as_ref().unwrap();
    let hits = (0..ds.len())
        .filter(|&i| {
            let x = ds.features.row(i);
            let dist: Vec<f64> = (0..spec.k)
                .map(|k| -x.iter().zip(centers.row(k)).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
                .collect();
            first_argmax(&dist) == truth[i]
        })
        .count();
    assert!(hits as f64 / ds.len() as f64 >= 0.999);
}

#[test]
fn zero_noise_blobs_sit_on_their_centers() {
    let spec = BlobSpec {
        n_per_cluster: 5,
        k: 3,
        dim: 4,
        separation: 2.0,
        noise_sigma: 0.0,
        seed: 2,
    };
    let (ds, centers) = synth_blobs_with_centers(&spec).unwrap();
    let truth = ds.labels.as_ref().unwrap();
    for i in 0..ds.len() {
        assert_eq!(ds.features.row(i), centers.row(truth[i]));
    }
}

fn blob_data(seed: u64) -> (Matrix, Vec<usize>) {
    let ds = normalize(&synth_blobs(200, 3, 10, 6.0, 1.0, seed).unwrap(), NormalizeMode::MinmaxPerBand);
    (ds.features, ds.labels.unwrap().into_inner())
}

#[test]
fn training_is_deterministic() {
    let (x, y) = blob_data(5);
    let mut cfg = TrainConfig::new(vec![10, 6, 2, 6, 10], 3);
    cfg.max_epochs = 15;
    cfg.seed = 5;
    let a = train(&x, &cfg, Some(&y)).unwrap();
    let b = train(&x, &cfg, Some(&y)).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.state.indicator, b.state.indicator);
}

#[test]
fn objective_drops_within_five_epochs() {
    let mut improved = 0;
    for seed in 0..5 {
        let (x, _) = blob_data(seed);
        let mut cfg = TrainConfig::new(vec![10, 6, 2, 6, 10], 3);
        cfg.seed = seed;
        cfg.max_epochs = 5;
        let out = train(&x, &cfg, None).unwrap();
        if out.history[5].j_total < out.history[0].j_total {
            improved += 1;
        }
    }
    assert!(improved >= 4, "{improved}/5");
}

#[test]
fn pure_autoencoder_run_has_no_penalty_terms() {
    let (x, _) = blob_data(1);
    let mut cfg = TrainConfig::new(vec![10, 6, 2, 6, 10], 3);
    cfg.lambda1 = 0.0;
    cfg.lambda2 = 0.0;
    cfg.max_epochs = 10;
    let out = train(&x, &cfg, None).unwrap();
    assert!(out.history.iter().all(|r| r.j2 == 0.0 && r.j3 == 0.0));
}

#[test]
fn separated_blobs_are_recovered() {
    let (x, y) = blob_data(0);
    let cfg = TrainConfig::new(vec![10, 6, 2, 6, 10], 3);
    let out = train(&x, &cfg, Some(&y)).unwrap();
    assert!(out.final_report().accuracy.unwrap() >= 0.95);
}

#[test]
fn sweep_is_reproducible_and_matches_direct_runs() {
    let (x, y) = blob_data(2);
    let mut cfg = TrainConfig::new(vec![10, 6, 2, 6, 10], 3);
    cfg.max_epochs = 20;
    let grid = [0.0, 0.1, 0.3, 1.0];
    let first = lambda1_sweep(&x, &y, &cfg, &grid, &[0]);
    let second = lambda1_sweep(&x, &y, &cfg, &grid, &[0]);
    assert_eq!(first, second);
    assert_eq!(first.len(), 4);
    assert!(first.iter().all(|r| r.error.is_none() && r.accuracy.unwrap().is_finite() && r.nmi.unwrap().is_finite()));

    let single = lambda1_sweep(&x, &y, &cfg, &[0.3], &[0]);
    let direct = train(&x, &TrainConfig { lambda1: 0.3, ..cfg.clone() }, Some(&y)).unwrap();
    assert_eq!(single[0].accuracy, direct.final_report().accuracy);
    assert_eq!(single[0].nmi, direct.final_report().nmi);
    assert_eq!(single[0].epochs, direct.final_report().epoch);
}
