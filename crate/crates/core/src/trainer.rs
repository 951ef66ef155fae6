//! The joint optimization loop over network weights and cluster state.
//!
//! Every epoch runs, in order: forward pass over all samples, center update
//! from the current indicator, loss evaluation, indicator update against
//! those centers, one gradient step on all weights and biases. The loop body
//! is rotated so that the loss of epoch `e` is evaluated right after step `e`,
//! with epoch 0 reporting the freshly initialized model.
//!
//! Losses use the half-scaled convention:
//!
//! ```text
//! J1 = ½ ‖Z0 − ZM‖²_F
//! J2 = ½ λ1 ‖Zcode − H Sᵀ‖²_F
//! J3 = ½ λ2 Σ_m (‖W_m‖²_F + ‖b_m‖²)
//! ```
//!
//! Gradients are summed over samples, so the learning rate has to shrink as
//! the sample count grows.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::cluster::{self, ClusterState};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics;
use crate::network::{self, Activations, ForwardTrace, Gradients, NetworkParams, Penalties};
use crate::rng::{self, Stream};

pub const DEFAULT_LAMBDA1: f64 = 0.3;
pub const DEFAULT_LAMBDA2: f64 = 0.0003;
pub const DEFAULT_LEARNING_RATE: f64 = 1e-3;
pub const DEFAULT_MAX_EPOCHS: usize = 300;
pub const DEFAULT_TOL: f64 = 1e-5;
/// Consecutive epochs the relative loss change must stay under `tol`.
pub const CONVERGENCE_WINDOW: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Full layer widths `[D, d1, ..., d_code, ..., D]`.
    pub dims: Vec<usize>,
    pub activations: Activations,
    pub lambda1: f64,
    pub lambda2: f64,
    pub learning_rate: f64,
    pub k: usize,
    pub max_epochs: usize,
    pub tol: f64,
    pub seed: u64,
    /// `None` trains on the full batch every epoch.
    pub batch_size: Option<usize>,
}

impl TrainConfig {
    pub fn new(dims: Vec<usize>, k: usize) -> Self {
        TrainConfig {
            dims,
            activations: Activations::default(),
            lambda1: DEFAULT_LAMBDA1,
            lambda2: DEFAULT_LAMBDA2,
            learning_rate: DEFAULT_LEARNING_RATE,
            k,
            max_epochs: DEFAULT_MAX_EPOCHS,
            tol: DEFAULT_TOL,
            seed: 0,
            batch_size: None,
        }
    }

    pub fn penalties(&self) -> Penalties {
        Penalties {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.lambda1 >= 0.0 && self.lambda1.is_finite()) {
            return bad(format!("lambda1 must be a finite value >= 0, got {}", self.lambda1));
        }
        if !(self.lambda2 >= 0.0 && self.lambda2.is_finite()) {
            return bad(format!("lambda2 must be a finite value >= 0, got {}", self.lambda2));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be > 0, got {}", self.learning_rate));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return bad(format!("tolerance must be > 0, got {}", self.tol));
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.batch_size == Some(0) {
            return bad("batch size must be at least 1".into());
        }
        network::validate_dims(&self.dims)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub total: f64,
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub j_total: f64,
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
    pub accuracy: Option<f64>,
    pub nmi: Option<f64>,
    pub empty_cluster_events: usize,
    /// Samples whose indicator differs from nearest-center assignment.
    pub nearest_center_disagreements: usize,
}

impl EpochReport {
    pub const CSV_HEADER: &'static str = "epoch,j_total,j1,j2,j3,accuracy,nmi,empty_cluster_events";

    pub fn csv_line(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.epoch,
            self.j_total,
            self.j1,
            self.j2,
            self.j3,
            opt(self.accuracy),
            opt(self.nmi),
            self.empty_cluster_events
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxEpochs,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: NetworkParams,
    pub state: ClusterState,
    pub history: Vec<EpochReport>,
    pub stop: StopReason,
}

impl TrainOutcome {
    pub fn final_report(&self) -> &EpochReport {
        self.history.last().expect("history always holds epoch 0")
    }
}

/// The three loss terms for explicit indicator and centers.
pub fn objective(
    params: &NetworkParams,
    trace: &ForwardTrace,
    indicator: &Matrix,
    centers: &Matrix,
    penalties: Penalties,
) -> Result<LossTerms> {
    let j1 = 0.5 * trace.reconstruction().sub(trace.input())?.frobenius_sq();
    let j2 = if penalties.lambda1 == 0.0 {
        0.0
    } else {
        0.5 * penalties.lambda1 * cluster::intra_class_error(trace.code(), indicator, centers)?
    };
    let j3 = if penalties.lambda2 == 0.0 {
        0.0
    } else {
        0.5 * penalties.lambda2 * params.squared_norm()
    };
    Ok(LossTerms {
        total: j1 + j2 + j3,
        j1,
        j2,
        j3,
    })
}

pub fn loss(params: &NetworkParams, trace: &ForwardTrace, state: &ClusterState, config: &TrainConfig) -> Result<LossTerms> {
    objective(params, trace, &state.indicator, &state.centers, config.penalties())
}

/// Runs [`train_with`] without an epoch callback.
pub fn train(data: &Matrix, config: &TrainConfig, labels: Option<&[usize]>) -> Result<TrainOutcome> {
    train_with(data, config, labels, |_| {})
}

/// Trains the network and cluster state jointly. `on_epoch` sees every report
/// as soon as it is produced. Ground-truth `labels` only feed the reported
/// metrics.
pub fn train_with(
    data: &Matrix,
    config: &TrainConfig,
    labels: Option<&[usize]>,
    mut on_epoch: impl FnMut(&EpochReport),
) -> Result<TrainOutcome> {
    config.validate()?;
    let n = data.rows();
    if data.cols() != config.dims[0] {
        return Err(Error::Shape {
            op: "train",
            left: data.shape(),
            right: (n, config.dims[0]),
        });
    }
    if n < config.k {
        return Err(Error::InvalidConfig(format!(
            "need at least k={} samples, got {n}",
            config.k
        )));
    }
    if let Some(l) = labels {
        if l.len() != n {
            return Err(Error::LengthMismatch { left: n, right: l.len() });
        }
    }

    let penalties = config.penalties();
    let mut params = NetworkParams::init(&config.dims, config.activations, config.seed)?;
    let mut indicator = cluster::init_indicator(n, config.k, config.seed)?;
    let mut shuffle_rng = rng::stream(config.seed, Stream::Shuffle);
    let mut order: Vec<usize> = (0..n).collect();

    let mut trace = params.forward(data)?;
    let mut update = cluster::update_centers(trace.code(), &indicator)?;
    let mut centers = update.centers;

    let mut history = Vec::new();
    let report = evaluate(0, &params, &trace, &indicator, &centers, update.reseeded.len(), penalties, labels)?;
    on_epoch(&report);
    history.push(report);

    let mut calm_epochs = 0;
    let mut stop = StopReason::MaxEpochs;
    for epoch in 1..=config.max_epochs {
        indicator = cluster::update_indicator(trace.code(), &centers)?;

        match config.batch_size {
            Some(b) if b < n => {
                order.shuffle(&mut shuffle_rng);
                for chunk in order.chunks(b) {
                    let batch = data.select_rows(chunk);
                    let batch_trace = params.forward(&batch)?;
                    let h = indicator.select_rows(chunk);
                    let grads = network::backward(&params, &batch_trace, &h, &centers, penalties)?;
                    step(&mut params, &grads, config.learning_rate)?;
                }
            }
            _ => {
                let grads = network::backward(&params, &trace, &indicator, &centers, penalties)?;
                step(&mut params, &grads, config.learning_rate)?;
            }
        }

        trace = params.forward(data)?;
        update = cluster::update_centers(trace.code(), &indicator)?;
        centers = update.centers;
        let report = evaluate(
            epoch,
            &params,
            &trace,
            &indicator,
            &centers,
            update.reseeded.len(),
            penalties,
            labels,
        )?;
        let previous = history.last().map_or(report.j_total, |r: &EpochReport| r.j_total);
        on_epoch(&report);
        let change = (report.j_total - previous).abs() / previous.abs().max(f64::MIN_POSITIVE);
        history.push(report);

        calm_epochs = if change < config.tol { calm_epochs + 1 } else { 0 };
        if calm_epochs >= CONVERGENCE_WINDOW {
            stop = StopReason::Converged;
            break;
        }
    }

    Ok(TrainOutcome {
        params,
        state: ClusterState {
            centers,
            indicator,
            k: config.k,
        },
        history,
        stop,
    })
}

fn step(params: &mut NetworkParams, grads: &Gradients, learning_rate: f64) -> Result<()> {
    params.apply_update(grads, learning_rate)
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    epoch: usize,
    params: &NetworkParams,
    trace: &ForwardTrace,
    indicator: &Matrix,
    centers: &Matrix,
    empty_cluster_events: usize,
    penalties: Penalties,
    labels: Option<&[usize]>,
) -> Result<EpochReport> {
    let terms = objective(params, trace, indicator, centers, penalties)?;
    if !terms.total.is_finite() {
        return Err(Error::Divergence {
            epoch,
            value: terms.total,
        });
    }
    let (accuracy, nmi) = match labels {
        Some(truth) => {
            let predicted = cluster::labels_of(indicator)?;
            (
                Some(metrics::accuracy(&predicted, truth)?),
                Some(metrics::nmi(&predicted, truth)?),
            )
        }
        None => (None, None),
    };
    Ok(EpochReport {
        epoch,
        j_total: terms.total,
        j1: terms.j1,
        j2: terms.j2,
        j3: terms.j3,
        accuracy,
        nmi,
        empty_cluster_events,
        nearest_center_disagreements: cluster::nearest_center_disagreements(trace.code(), indicator, centers)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda1: f64,
    pub seed: u64,
    pub accuracy: Option<f64>,
    pub nmi: Option<f64>,
    pub epochs: usize,
    /// Failure message when this cell's training run errored.
    pub error: Option<String>,
}

/// One training run per `(λ1, seed)` cell. A failing cell is recorded and the
/// sweep moves on.
pub fn lambda1_sweep(
    data: &Matrix,
    labels: &[usize],
    config: &TrainConfig,
    grid: &[f64],
    seeds: &[u64],
) -> Vec<SweepRow> {
    let mut rows = Vec::with_capacity(grid.len() * seeds.len());
    for &lambda1 in grid {
        for &seed in seeds {
            let cfg = TrainConfig {
                lambda1,
                seed,
                ..config.clone()
            };
            rows.push(match train(data, &cfg, Some(labels)) {
                Ok(out) => {
                    let last = out.final_report();
                    SweepRow {
                        lambda1,
                        seed,
                        accuracy: last.accuracy,
                        nmi: last.nmi,
                        epochs: last.epoch,
                        error: None,
                    }
                }
                Err(e) => SweepRow {
                    lambda1,
                    seed,
                    accuracy: None,
                    nmi: None,
                    epochs: 0,
                    error: Some(e.to_string()),
                },
            });
        }
    }
    rows
}

/// Mean and population standard deviation of the finite values.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}
