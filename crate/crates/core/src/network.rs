//! The symmetric `M`-layer autoencoder and its hand-derived gradients.
//!
//! Layers are numbered `1..=M` in the docs below; in code, layer `m` lives at
//! index `m - 1` of `weights`/`biases`. Layers `1..=M/2` form the encoder and
//! use the encoder activation, layers `M/2+1..=M` form the decoder.
//!
//! Batches are row-major (`N × width`), so the pre-activation of layer `m` is
//! `Y_m = Z_{m-1} W_mᵀ + 1 b_mᵀ` and `Z_m = F(Y_m)`.
//!
//! The backward pass carries two separate error signals:
//!
//! * `Δ` for the reconstruction term, seeded at the output layer with
//!   `-(Z_0 - Z_M) ⊙ G'(Y_M)` and pushed down through every layer;
//! * `Λ` for the intra-class distance term, seeded at the code layer with
//!   `(Z_{M/2} - H Sᵀ) ⊙ G'(Y_{M/2})` and pushed down through the encoder
//!   only. Decoder layers have no `Λ` at all.
//!
//! Layer gradients combine them as `(Δ_m + λ₁ Λ_m)ᵀ Z_{m-1} + λ₂ W_m` and
//! `colsum(Δ_m + λ₁ Λ_m) + λ₂ b_m`, summed (not averaged) over the batch.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{self, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    dims: Vec<usize>,
    /// `weights[m-1]` is `W_m`, shape `dims[m] × dims[m-1]`.
    pub weights: Vec<Matrix>,
    /// `biases[m-1]` is `b_m`, length `dims[m]`.
    pub biases: Vec<Vec<f64>>,
    pub enc_activation: ActivationKind,
    pub dec_activation: ActivationKind,
}

/// Encoder/decoder activation pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Activations {
    pub encoder: ActivationKind,
    pub decoder: ActivationKind,
}

impl Activations {
    pub fn same(kind: ActivationKind) -> Self {
        Activations {
            encoder: kind,
            decoder: kind,
        }
    }
}

/// Checks the layer-width contract: an even number of layers, equal input and
/// output width, a non-widening encoder and a non-narrowing decoder.
pub fn validate_dims(dims: &[usize]) -> Result<()> {
    let fail = |reason: &str| {
        Err(Error::InvalidDims {
            dims: dims.to_vec(),
            reason: reason.to_string(),
        })
    };
    if dims.len() < 3 {
        return fail("need at least one encoder and one decoder layer");
    }
    let layers = dims.len() - 1;
    if !layers.is_multiple_of(2) {
        return fail("the number of layers M must be even");
    }
    if dims.contains(&0) {
        return fail("layer widths must be positive");
    }
    if dims[0] != dims[layers] {
        return fail("output width must equal input width");
    }
    let mid = layers / 2;
    if dims[1..=mid].iter().zip(&dims[..mid]).any(|(cur, prev)| cur > prev) {
        return fail("encoder widths must not increase");
    }
    if dims[mid + 1..].iter().zip(&dims[mid..layers]).any(|(cur, prev)| cur < prev) {
        return fail("decoder widths must not decrease");
    }
    Ok(())
}

/// Expands an encoder half `[D, d1, ..., d_mid]` into the mirrored full stack.
pub fn mirror_dims(encoder: &[usize]) -> Vec<usize> {
    let mut dims = encoder.to_vec();
    dims.extend(encoder.iter().rev().skip(1));
    dims
}

impl NetworkParams {
    /// Uniform Glorot initialization in `±sqrt(6 / (fan_in + fan_out))` with
    /// zero biases, drawn from the seed's weight-init stream.
    pub fn init(dims: &[usize], activations: Activations, seed: u64) -> Result<Self> {
        validate_dims(dims)?;
        let mut rng = rng::stream(seed, Stream::WeightInit);
        let mut weights = Vec::with_capacity(dims.len() - 1);
        let mut biases = Vec::with_capacity(dims.len() - 1);
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push(Matrix::from_fn(fan_out, fan_in, |_, _| {
                rng.random_range(-limit..=limit)
            }));
            biases.push(vec![0.0; fan_out]);
        }
        Ok(NetworkParams {
            dims: dims.to_vec(),
            weights,
            biases,
            enc_activation: activations.encoder,
            dec_activation: activations.decoder,
        })
    }

    /// Builds parameters from explicit tensors, checking every shape.
    pub fn from_parts(
        dims: Vec<usize>,
        weights: Vec<Matrix>,
        biases: Vec<Vec<f64>>,
        activations: Activations,
    ) -> Result<Self> {
        validate_dims(&dims)?;
        let layers = dims.len() - 1;
        if weights.len() != layers || biases.len() != layers {
            return Err(Error::InvalidDims {
                dims,
                reason: format!(
                    "expected {layers} weight and bias tensors, got {} and {}",
                    weights.len(),
                    biases.len()
                ),
            });
        }
        for (m, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.shape() != (dims[m + 1], dims[m]) || b.len() != dims[m + 1] {
                return Err(Error::Shape {
                    op: "from_parts",
                    left: (dims[m + 1], dims[m]),
                    right: w.shape(),
                });
            }
        }
        Ok(NetworkParams {
            dims,
            weights,
            biases,
            enc_activation: activations.encoder,
            dec_activation: activations.decoder,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of weight layers `M`.
    pub fn layers(&self) -> usize {
        self.dims.len() - 1
    }

    /// Index of the code layer, `M/2`.
    pub fn code_layer(&self) -> usize {
        self.layers() / 2
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn code_dim(&self) -> usize {
        self.dims[self.code_layer()]
    }

    pub fn activations(&self) -> Activations {
        Activations {
            encoder: self.enc_activation,
            decoder: self.dec_activation,
        }
    }

    /// Activation of layer `m` (1-based).
    pub fn activation_of(&self, m: usize) -> ActivationKind {
        if m <= self.code_layer() {
            self.enc_activation
        } else {
            self.dec_activation
        }
    }

    /// `Σ_m ‖W_m‖²_F + ‖b_m‖²`.
    pub fn squared_norm(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.frobenius_sq() + b.iter().map(|v| v * v).sum::<f64>())
            .sum()
    }

    pub fn parameter_count(&self) -> usize {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.rows() * w.cols() + b.len())
            .sum()
    }

    /// `W ← W − μ dW`, `b ← b − μ db` for every layer.
    pub fn apply_update(&mut self, grads: &Gradients, learning_rate: f64) -> Result<()> {
        if learning_rate.is_nan() || learning_rate <= 0.0 || !learning_rate.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        grads.check_shapes(self)?;
        for (w, dw) in self.weights.iter_mut().zip(&grads.d_weights) {
            w.axpy(-learning_rate, dw)?;
        }
        for (b, db) in self.biases.iter_mut().zip(&grads.d_biases) {
            for (v, d) in b.iter_mut().zip(db) {
                *v -= learning_rate * d;
            }
        }
        Ok(())
    }

    pub fn forward(&self, batch: &Matrix) -> Result<ForwardTrace> {
        forward(self, batch)
    }
}

/// All intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// `pre_activations[m-1]` is `Y_m`.
    pub pre_activations: Vec<Matrix>,
    /// `activations[m]` is `Z_m`; `activations[0]` is the input batch.
    pub activations: Vec<Matrix>,
}

impl ForwardTrace {
    pub fn input(&self) -> &Matrix {
        &self.activations[0]
    }

    pub fn code(&self) -> &Matrix {
        &self.activations[self.pre_activations.len() / 2]
    }

    pub fn reconstruction(&self) -> &Matrix {
        self.activations.last().expect("trace always holds the input")
    }
}

pub fn forward(params: &NetworkParams, batch: &Matrix) -> Result<ForwardTrace> {
    if batch.cols() != params.input_dim() {
        return Err(Error::Shape {
            op: "forward",
            left: batch.shape(),
            right: (batch.rows(), params.input_dim()),
        });
    }
    let layers = params.layers();
    let mut pre_activations = Vec::with_capacity(layers);
    let mut activations = Vec::with_capacity(layers + 1);
    activations.push(batch.clone());
    for m in 1..=layers {
        let mut y = activations[m - 1].matmul_nt(&params.weights[m - 1])?;
        y.add_row_broadcast(&params.biases[m - 1])?;
        let z = params.activation_of(m).apply(&y);
        pre_activations.push(y);
        activations.push(z);
    }
    Ok(ForwardTrace {
        pre_activations,
        activations,
    })
}

/// Loss gradients with the same layout as [`NetworkParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub d_weights: Vec<Matrix>,
    pub d_biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(params: &NetworkParams) -> Self {
        Gradients {
            d_weights: params
                .weights
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect(),
            d_biases: params.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    fn check_shapes(&self, params: &NetworkParams) -> Result<()> {
        let ok = self.d_weights.len() == params.weights.len()
            && self.d_biases.len() == params.biases.len()
            && self
                .d_weights
                .iter()
                .zip(&params.weights)
                .all(|(d, w)| d.shape() == w.shape())
            && self
                .d_biases
                .iter()
                .zip(&params.biases)
                .all(|(d, b)| d.len() == b.len());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(
                "gradient shapes do not match network parameters".into(),
            ))
        }
    }

    /// Elementwise sum, used to accumulate mini-batch gradients.
    pub fn add_assign(&mut self, other: &Gradients) -> Result<()> {
        for (a, b) in self.d_weights.iter_mut().zip(&other.d_weights) {
            a.axpy(1.0, b)?;
        }
        for (a, b) in self.d_biases.iter_mut().zip(&other.d_biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.d_weights
            .iter()
            .flat_map(|w| w.as_slice().iter())
            .chain(self.d_biases.iter().flatten())
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// Error signals of one backward pass.
#[derive(Debug, Clone)]
pub struct BackpropSignals {
    /// `deltas[m-1]` is `Δ_m`, present for every layer.
    pub deltas: Vec<Matrix>,
    /// `lambdas[m-1]` is `Λ_m`; `None` marks layers where it is identically zero
    /// (every decoder layer).
    pub lambdas: Vec<Option<Matrix>>,
}

/// Coefficients of the intra-class and weight-decay terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalties {
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Propagates `Δ` and `Λ` through the network.
///
/// `indicator` holds the one-hot rows of the samples in `trace` and `centers`
/// is the `d_code × K` center matrix; both are held constant.
pub fn backprop_signals(
    params: &NetworkParams,
    trace: &ForwardTrace,
    indicator: &Matrix,
    centers: &Matrix,
) -> Result<BackpropSignals> {
    let layers = params.layers();
    let mid = params.code_layer();
    let n = trace.input().rows();
    if trace.pre_activations.len() != layers || trace.activations.len() != layers + 1 {
        return Err(Error::InvalidConfig(
            "forward trace does not match the network depth".into(),
        ));
    }
    if indicator.rows() != n || indicator.cols() != centers.cols() {
        return Err(Error::Shape {
            op: "backward(indicator)",
            left: indicator.shape(),
            right: (n, centers.cols()),
        });
    }
    if centers.rows() != params.code_dim() {
        return Err(Error::Shape {
            op: "backward(centers)",
            left: centers.shape(),
            right: (params.code_dim(), centers.cols()),
        });
    }

    let g_prime = |m: usize| params.activation_of(m).derivative_matrix(&trace.pre_activations[m - 1]);

    let mut deltas: Vec<Option<Matrix>> = vec![None; layers];
    let residual = trace.reconstruction().sub(trace.input())?;
    deltas[layers - 1] = Some(residual.hadamard(&g_prime(layers))?);
    for m in (1..layers).rev() {
        let upstream = deltas[m].as_ref().expect("filled top-down");
        let back = upstream.matmul(&params.weights[m])?;
        deltas[m - 1] = Some(back.hadamard(&g_prime(m))?);
    }

    let mut lambdas: Vec<Option<Matrix>> = vec![None; layers];
    let target = indicator.matmul_nt(centers)?;
    let code_gap = trace.code().sub(&target)?;
    lambdas[mid - 1] = Some(code_gap.hadamard(&g_prime(mid))?);
    for m in (1..mid).rev() {
        let upstream = lambdas[m].as_ref().expect("filled top-down");
        let back = upstream.matmul(&params.weights[m])?;
        lambdas[m - 1] = Some(back.hadamard(&g_prime(m))?);
    }

    Ok(BackpropSignals {
        deltas: deltas.into_iter().map(|d| d.expect("every layer has a delta")).collect(),
        lambdas,
    })
}

/// Gradients of the half-scaled joint loss, summed over the batch in `trace`.
pub fn backward(
    params: &NetworkParams,
    trace: &ForwardTrace,
    indicator: &Matrix,
    centers: &Matrix,
    penalties: Penalties,
) -> Result<Gradients> {
    let signals = backprop_signals(params, trace, indicator, centers)?;
    gradients_from_signals(params, trace, &signals, penalties)
}

pub fn gradients_from_signals(
    params: &NetworkParams,
    trace: &ForwardTrace,
    signals: &BackpropSignals,
    penalties: Penalties,
) -> Result<Gradients> {
    let layers = params.layers();
    let mut d_weights = Vec::with_capacity(layers);
    let mut d_biases = Vec::with_capacity(layers);
    for m in 1..=layers {
        let mut signal = signals.deltas[m - 1].clone();
        if let Some(lambda) = &signals.lambdas[m - 1] {
            signal.axpy(penalties.lambda1, lambda)?;
        }
        let mut dw = signal.matmul_tn(&trace.activations[m - 1])?;
        dw.axpy(penalties.lambda2, &params.weights[m - 1])?;
        let mut db = signal.column_sums().into_vec();
        for (d, b) in db.iter_mut().zip(&params.biases[m - 1]) {
            *d += penalties.lambda2 * b;
        }
        d_weights.push(dw);
        d_biases.push(db);
    }
    Ok(Gradients {
        d_weights,
        d_biases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_batch(n: usize, d: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(n, d, |_, _| rng.random_range(0.0..1.0))
    }

    #[test]
    fn dims_validation() {
        assert!(validate_dims(&[4, 2, 4]).is_ok());
        assert!(validate_dims(&[200, 128, 64, 32, 64, 128, 200]).is_ok());
        assert!(validate_dims(&[4, 6, 4]).is_err());
        assert!(validate_dims(&[4, 2, 3, 4]).is_err());
        assert!(validate_dims(&[4, 2, 5]).is_err());
        assert!(validate_dims(&[4, 2, 3, 2, 4]).is_err());
        assert!(validate_dims(&[4]).is_err());
    }

    #[test]
    fn mirror_expands_encoder_half() {
        assert_eq!(mirror_dims(&[10, 6, 2]), vec![10, 6, 2, 6, 10]);
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = NetworkParams::init(&[4, 2, 4], Activations::default(), 5).unwrap();
        let b = NetworkParams::init(&[4, 2, 4], Activations::default(), 5).unwrap();
        assert_eq!(a, b);
        let limit = (6.0f64 / 6.0).sqrt();
        assert!(a.weights[0].as_slice().iter().all(|v| v.abs() <= limit));
        assert!(a.biases.iter().flatten().all(|&v| v == 0.0));
        assert_eq!(a.weights[0].shape(), (2, 4));
        assert_eq!(a.weights[1].shape(), (4, 2));
        let c = NetworkParams::init(&[4, 2, 4], Activations::default(), 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_rejects_widening_encoder() {
        assert!(NetworkParams::init(&[4, 6, 4], Activations::default(), 0).is_err());
    }

    #[test]
    fn zero_network_outputs_zero_under_tanh() {
        let mut p = NetworkParams::init(&[3, 2, 3], Activations::default(), 0).unwrap();
        for w in &mut p.weights {
            *w = Matrix::zeros(w.rows(), w.cols());
        }
        let t = p.forward(&random_batch(4, 3, 1)).unwrap();
        assert!(t.code().as_slice().iter().all(|&v| v == 0.0));
        assert!(t.reconstruction().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn trace_shapes_follow_dims() {
        let dims = [6, 4, 2, 4, 6];
        let p = NetworkParams::init(&dims, Activations::default(), 2).unwrap();
        let t = p.forward(&random_batch(7, 6, 3)).unwrap();
        assert_eq!(t.activations.len(), 5);
        assert_eq!(t.pre_activations.len(), 4);
        for (m, z) in t.activations.iter().enumerate() {
            assert_eq!(z.shape(), (7, dims[m]));
        }
        assert_eq!(t.code().shape(), (7, 2));
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let p = NetworkParams::init(&[3, 2, 3], Activations::default(), 0).unwrap();
        assert!(p.forward(&Matrix::zeros(2, 4)).is_err());
    }

    #[test]
    fn linear_regime_identity_pair_reconstructs_input() {
        // W1 = a I, W2 = (1/a) I; tanh is ~linear for tiny inputs
        let a = 0.5;
        let p = NetworkParams::from_parts(
            vec![2, 2, 2],
            vec![Matrix::identity(2).scale(a), Matrix::identity(2).scale(1.0 / a)],
            vec![vec![0.0; 2], vec![0.0; 2]],
            Activations::default(),
        )
        .unwrap();
        let x = Matrix::from_rows(&[[1e-4, -2e-4], [3e-5, 5e-5]]).unwrap();
        let t = p.forward(&x).unwrap();
        // direct composition
        for r in 0..2 {
            for c in 0..2 {
                let direct = ((a * x.get(r, c)).tanh() / a).tanh();
                assert!((t.reconstruction().get(r, c) - direct).abs() < 1e-18);
                assert!((t.reconstruction().get(r, c) - x.get(r, c)).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn perfect_reconstruction_gives_zero_gradient() {
        // A net whose output is identically equal to its input: zero weights,
        // output bias chosen so tanh(b) equals the constant input row.
        let target = [0.3, -0.2, 0.1];
        let mut p = NetworkParams::init(&[3, 2, 3], Activations::default(), 0).unwrap();
        for w in &mut p.weights {
            *w = Matrix::zeros(w.rows(), w.cols());
        }
        p.biases[1] = target.iter().map(|v: &f64| v.atanh()).collect();
        let x = Matrix::from_rows(&[target, target]).unwrap();
        let t = p.forward(&x).unwrap();
        let h = Matrix::from_rows(&[[1.0], [1.0]]).unwrap();
        let s = Matrix::zeros(2, 1);
        let g = backward(
            &p,
            &t,
            &h,
            &s,
            Penalties {
                lambda1: 0.0,
                lambda2: 0.0,
            },
        )
        .unwrap();
        assert!(g.max_abs() < 1e-15, "{}", g.max_abs());
    }

    #[test]
    fn decoder_lambdas_are_structurally_absent() {
        let p = NetworkParams::init(&[5, 3, 2, 3, 5], Activations::default(), 9).unwrap();
        let x = random_batch(4, 5, 2);
        let t = p.forward(&x).unwrap();
        let h = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let s = Matrix::from_rows(&[[0.1, -0.1], [0.2, 0.3]]).unwrap();
        let sig = backprop_signals(&p, &t, &h, &s).unwrap();
        assert!(sig.lambdas[..2].iter().all(Option::is_some));
        assert!(sig.lambdas[2..].iter().all(Option::is_none));
    }

    #[test]
    fn zero_gradient_update_is_fixed_point() {
        let mut p = NetworkParams::init(&[4, 2, 4], Activations::default(), 1).unwrap();
        let before = p.clone();
        p.apply_update(&Gradients::zeros_like(&before), 0.1).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn unit_step_on_own_weights_cancels() {
        let mut p = NetworkParams::init(&[4, 2, 4], Activations::default(), 1).unwrap();
        let g = Gradients {
            d_weights: p.weights.clone(),
            d_biases: p.biases.clone(),
        };
        p.apply_update(&g, 1.0).unwrap();
        assert!(p.weights.iter().all(|w| w.as_slice().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn sequential_updates_equal_summed_update() {
        let base = NetworkParams::init(&[4, 3, 4], Activations::default(), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut rand_grad = || Gradients {
            d_weights: base
                .weights
                .iter()
                .map(|w| Matrix::from_fn(w.rows(), w.cols(), |_, _| rng.random_range(-1.0..1.0)))
                .collect(),
            d_biases: base.biases.iter().map(|b| vec![0.25; b.len()]).collect(),
        };
        let (g1, g2) = (rand_grad(), rand_grad());
        let mut twice = base.clone();
        twice.apply_update(&g1, 0.01).unwrap();
        twice.apply_update(&g2, 0.01).unwrap();
        let mut summed = g1.clone();
        summed.add_assign(&g2).unwrap();
        let mut once = base.clone();
        once.apply_update(&summed, 0.01).unwrap();
        for (a, b) in twice.weights.iter().zip(&once.weights) {
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn non_positive_learning_rate_rejected() {
        let mut p = NetworkParams::init(&[4, 2, 4], Activations::default(), 1).unwrap();
        let g = Gradients::zeros_like(&p);
        assert!(p.apply_update(&g, 0.0).is_err());
        assert!(p.apply_update(&g, -1.0).is_err());
    }
}
