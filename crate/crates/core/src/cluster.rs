//! Closed-form updates of the cluster centers `S` and the indicator `H`.
//!
//! Codes are the `N × d` rows of the encoder output. `S` is `d × K` with one
//! center per column and `H` is `N × K` with one-hot rows, so `H Sᵀ` places
//! each sample's assigned center on its row.
//!
//! The indicator update solves, per sample, the least-squares problem
//! `min_h ‖zᵀ − S hᵀ‖²`, i.e. `hᵀ = (SᵀS)⁻¹ Sᵀ zᵀ`, and then keeps only the
//! largest coefficient. That is not the same as nearest-center assignment
//! unless the centers are orthonormal; [`nearest_center_disagreements`]
//! counts how often the two rules differ.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{dot, Cholesky, Matrix};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState {
    /// `d × K`, column `i` is the center of cluster `i`.
    pub centers: Matrix,
    /// `N × K`, one-hot rows.
    pub indicator: Matrix,
    pub k: usize,
}

impl ClusterState {
    pub fn labels(&self) -> Vec<usize> {
        labels_of(&self.indicator).expect("cluster state keeps a one-hot indicator")
    }
}

/// Result of a center update.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterUpdate {
    pub centers: Matrix,
    /// Clusters that had no members and were re-seeded.
    pub reseeded: Vec<usize>,
}

/// One-hot encoding of `labels` into an `N × k` matrix.
pub fn one_hot(labels: &[usize], k: usize) -> Result<Matrix> {
    let mut h = Matrix::zeros(labels.len(), k);
    for (i, &l) in labels.iter().enumerate() {
        if l >= k {
            return Err(Error::LabelOutOfRange { index: i, label: l, k });
        }
        h.set(i, l, 1.0);
    }
    Ok(h)
}

/// Column index of the single 1 in each row. Fails on rows that are not
/// one-hot.
pub fn labels_of(indicator: &Matrix) -> Result<Vec<usize>> {
    indicator
        .row_iter()
        .enumerate()
        .map(|(i, row)| {
            let mut hot = None;
            for (c, &v) in row.iter().enumerate() {
                if v == 1.0 && hot.is_none() {
                    hot = Some(c);
                } else if v != 0.0 {
                    hot = None;
                    break;
                }
            }
            hot.ok_or_else(|| Error::InvalidConfig(format!("indicator row {i} is not one-hot: {row:?}")))
        })
        .collect()
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// The binarization map: 1 at the row maximum, 0 elsewhere.
pub fn binarize(coefficients: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(coefficients.rows(), coefficients.cols());
    if coefficients.cols() == 0 {
        return out;
    }
    for (r, row) in coefficients.row_iter().enumerate() {
        out.set(r, argmax(row), 1.0);
    }
    out
}

/// Random one-hot rows with every cluster used at least once: row `i < k` goes
/// to cluster `i`, the remaining rows are uniform.
pub fn init_indicator(n: usize, k: usize, seed: u64) -> Result<Matrix> {
    if k == 0 || n < k {
        return Err(Error::InvalidConfig(format!(
            "need 1 <= k <= n to initialize the indicator, got n={n}, k={k}"
        )));
    }
    let mut rng = rng::stream(seed, Stream::IndicatorInit);
    let labels: Vec<usize> = (0..n)
        .map(|i| if i < k { i } else { rng.random_range(0..k) })
        .collect();
    one_hot(&labels, k)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Per-cluster means of the code rows. An empty cluster takes the code row
/// that lies farthest from its own cluster center, skipping rows already
/// used to re-seed another empty cluster.
pub fn update_centers(codes: &Matrix, indicator: &Matrix) -> Result<CenterUpdate> {
    if codes.rows() != indicator.rows() {
        return Err(Error::Shape {
            op: "update_centers",
            left: codes.shape(),
            right: indicator.shape(),
        });
    }
    let labels = labels_of(indicator)?;
    let (d, k) = (codes.cols(), indicator.cols());
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (row, &l) in codes.row_iter().zip(&labels) {
        counts[l] += 1;
        for (s, &v) in sums[l].iter_mut().zip(row) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|v| *v /= c as f64);
        }
    }

    let mut reseeded = Vec::new();
    let empty: Vec<usize> = (0..k).filter(|&i| counts[i] == 0).collect();
    if !empty.is_empty() {
        let mut spread: Vec<(f64, usize)> = codes
            .row_iter()
            .zip(&labels)
            .enumerate()
            .map(|(i, (row, &l))| (sq_dist(row, &sums[l]), i))
            .collect();
        // farthest first, lowest row index on ties
        spread.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for (&cluster, &(_, row)) in empty.iter().zip(&spread) {
            sums[cluster].copy_from_slice(codes.row(row));
            reseeded.push(cluster);
        }
    }

    let mut centers = Matrix::zeros(d, k);
    for (c, s) in sums.iter().enumerate() {
        for (r, &v) in s.iter().enumerate() {
            centers.set(r, c, v);
        }
    }
    Ok(CenterUpdate { centers, reseeded })
}

/// Raw least-squares coefficients `(SᵀS)⁻¹ Sᵀ z` for every code row (`N × K`).
pub fn least_squares_coefficients(codes: &Matrix, centers: &Matrix) -> Result<Matrix> {
    if codes.cols() != centers.rows() {
        return Err(Error::Shape {
            op: "update_indicator",
            left: codes.shape(),
            right: centers.shape(),
        });
    }
    let k = centers.cols();
    let gram = centers.matmul_tn(centers)?;
    let chol = Cholesky::factor(&gram).map_err(|_| Error::CollapsedCenters {
        columns: collapsed_columns(centers),
    })?;
    // More centers than code dimensions leave SᵀS singular and the ridge picks
    // the minimum-norm coefficients. Duplicated or zero centers make the
    // argmax arbitrary instead, so they are rejected.
    if chol.ridged() {
        let collapsed = collapsed_columns(centers);
        if !collapsed.is_empty() {
            return Err(Error::CollapsedCenters { columns: collapsed });
        }
    }
    let st = centers.transpose();
    let mut out = Matrix::zeros(codes.rows(), k);
    if k == 0 {
        return Ok(out);
    }
    out.as_mut_slice()
        .par_chunks_mut(k)
        .zip(codes.as_slice().par_chunks(codes.cols().max(1)))
        .for_each(|(h, z)| {
            for (j, hj) in h.iter_mut().enumerate() {
                *hj = dot(st.row(j), z);
            }
            chol.solve_in_place(h);
        });
    if !out.is_finite() {
        return Err(Error::CollapsedCenters {
            columns: collapsed_columns(centers),
        });
    }
    Ok(out)
}

/// Columns that duplicate an earlier column or are zero.
pub fn collapsed_columns(centers: &Matrix) -> Vec<usize> {
    let cols: Vec<Vec<f64>> = (0..centers.cols()).map(|c| centers.column(c)).collect();
    let scale = cols
        .iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale * scale;
    let mut out = Vec::new();
    for (j, cj) in cols.iter().enumerate() {
        let zero = cj.iter().all(|v| v * v <= tol);
        let dup = cols[..j].iter().any(|ci| sq_dist(ci, cj) <= tol);
        if zero || dup {
            out.push(j);
        }
    }
    out
}

/// New indicator: least-squares coefficients binarized at their maximum.
pub fn update_indicator(codes: &Matrix, centers: &Matrix) -> Result<Matrix> {
    Ok(binarize(&least_squares_coefficients(codes, centers)?))
}

/// `‖Z − H Sᵀ‖²_F`.
pub fn intra_class_error(codes: &Matrix, indicator: &Matrix, centers: &Matrix) -> Result<f64> {
    if codes.rows() != indicator.rows() || codes.cols() != centers.rows() {
        return Err(Error::Shape {
            op: "intra_class_error",
            left: codes.shape(),
            right: (indicator.rows(), centers.rows()),
        });
    }
    let target = indicator.matmul_nt(centers)?;
    Ok(codes.sub(&target)?.frobenius_sq())
}

/// Number of samples whose assigned cluster is not their nearest center.
pub fn nearest_center_disagreements(codes: &Matrix, indicator: &Matrix, centers: &Matrix) -> Result<usize> {
    let labels = labels_of(indicator)?;
    if codes.cols() != centers.rows() || labels.len() != codes.rows() {
        return Err(Error::Shape {
            op: "nearest_center_disagreements",
            left: codes.shape(),
            right: centers.shape(),
        });
    }
    let cols: Vec<Vec<f64>> = (0..centers.cols()).map(|c| centers.column(c)).collect();
    Ok(codes
        .row_iter()
        .zip(&labels)
        .filter(|(row, &l)| {
            let dists: Vec<f64> = cols.iter().map(|c| -sq_dist(row, c)).collect();
            argmax(&dists) != l
        })
        .count())
}
