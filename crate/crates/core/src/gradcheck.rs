//! Central-difference check of the analytic gradients on a random instance.
//!
//! The indicator and centers are frozen while the weights are perturbed, the
//! same way the training step treats them.

use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::cluster;
use crate::error::Result;
use crate::matrix::Matrix;
use crate::network::{self, Activations, Gradients, NetworkParams, Penalties};
use crate::rng::{self, Stream};
use crate::trainer::objective;

/// Default finite-difference step.
pub const DEFAULT_STEP: f64 = 1e-6;
/// Default pass threshold on the worst relative error.
pub const DEFAULT_TOLERANCE: f64 = 1e-5;
/// Denominator floor of the relative error, so entries whose true gradient is
/// ~0 are judged on absolute error instead of amplified rounding noise.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ParamCoord {
    Weight { layer: usize, row: usize, col: usize },
    Bias { layer: usize, index: usize },
}

impl fmt::Display for ParamCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamCoord::Weight { layer, row, col } => write!(f, "W{layer}[{row},{col}]"),
            ParamCoord::Bias { layer, index } => write!(f, "b{layer}[{index}]"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst: ParamCoord,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_relative_error <= tolerance
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR)
}

#[derive(Debug, Clone)]
pub struct GradCheckConfig {
    pub dims: Vec<usize>,
    pub activations: Activations,
    pub lambda1: f64,
    pub lambda2: f64,
    pub samples: usize,
    pub k: usize,
    pub seed: u64,
    pub step: f64,
    /// Flips the sign of the largest analytic gradient entry before
    /// comparing; the check must then fail.
    pub perturb: bool,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            dims: vec![5, 3, 2, 3, 5],
            activations: Activations::default(),
            lambda1: 0.3,
            lambda2: 3e-4,
            samples: 5,
            k: 2,
            seed: 0,
            step: DEFAULT_STEP,
            perturb: false,
        }
    }
}

/// A random network with non-zero biases, data in `[0, 1)`, a random indicator
/// and random centers.
pub fn random_instance(cfg: &GradCheckConfig) -> Result<(NetworkParams, Matrix, Matrix, Matrix)> {
    let mut params = NetworkParams::init(&cfg.dims, cfg.activations, cfg.seed)?;
    let mut rng = rng::stream(cfg.seed, Stream::GradCheck);
    for b in &mut params.biases {
        b.iter_mut().for_each(|v| *v = rng.random_range(-0.5..0.5));
    }
    let data = Matrix::from_fn(cfg.samples, cfg.dims[0], |_, _| rng.random_range(0.0..1.0));
    let indicator = cluster::init_indicator(cfg.samples, cfg.k, cfg.seed)?;
    let centers = Matrix::from_fn(params.code_dim(), cfg.k, |_, _| rng.random_range(-1.0..1.0));
    Ok((params, data, indicator, centers))
}

pub fn run(cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    let (params, data, indicator, centers) = random_instance(cfg)?;
    let penalties = Penalties {
        lambda1: cfg.lambda1,
        lambda2: cfg.lambda2,
    };
    let trace = params.forward(&data)?;
    let mut grads = network::backward(&params, &trace, &indicator, &centers, penalties)?;
    if cfg.perturb {
        flip_largest(&mut grads);
    }
    compare(&params, &data, &indicator, &centers, penalties, &grads, cfg.step)
}

fn flip_largest(grads: &mut Gradients) {
    let max = grads.max_abs();
    for v in grads
        .d_weights
        .iter_mut()
        .flat_map(|w| w.as_mut_slice().iter_mut())
        .chain(grads.d_biases.iter_mut().flatten())
    {
        if v.abs() == max {
            *v = -*v;
            return;
        }
    }
}

/// Compares `grads` entry by entry against central differences of the total
/// loss and reports the worst relative error.
pub fn compare(
    params: &NetworkParams,
    data: &Matrix,
    indicator: &Matrix,
    centers: &Matrix,
    penalties: Penalties,
    grads: &Gradients,
    step: f64,
) -> Result<GradCheckReport> {
    let total = |p: &NetworkParams| -> Result<f64> {
        let t = p.forward(data)?;
        Ok(objective(p, &t, indicator, centers, penalties)?.total)
    };
    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: ParamCoord::Bias { layer: 1, index: 0 },
        analytic: 0.0,
        numeric: 0.0,
        checked: 0,
    };
    let mut consider = |coord: ParamCoord, analytic: f64, numeric: f64| {
        let err = relative_error(analytic, numeric);
        if report.checked == 0 || err > report.max_relative_error {
            report.max_relative_error = err;
            report.worst = coord;
            report.analytic = analytic;
            report.numeric = numeric;
        }
        report.checked += 1;
    };
    for m in 0..params.layers() {
        let (rows, cols) = params.weights[m].shape();
        for r in 0..rows {
            for c in 0..cols {
                let orig = params.weights[m].get(r, c);
                probe.weights[m].set(r, c, orig + step);
                let plus = total(&probe)?;
                probe.weights[m].set(r, c, orig - step);
                let minus = total(&probe)?;
                probe.weights[m].set(r, c, orig);
                let numeric = (plus - minus) / (2.0 * step);
                consider(
                    ParamCoord::Weight { layer: m + 1, row: r, col: c },
                    grads.d_weights[m].get(r, c),
                    numeric,
                );
            }
        }
        for i in 0..params.biases[m].len() {
            let orig = params.biases[m][i];
            probe.biases[m][i] = orig + step;
            let plus = total(&probe)?;
            probe.biases[m][i] = orig - step;
            let minus = total(&probe)?;
            probe.biases[m][i] = orig;
            let numeric = (plus - minus) / (2.0 * step);
            consider(ParamCoord::Bias { layer: m + 1, index: i }, grads.d_biases[m][i], numeric);
        }
    }
    Ok(report)
}
