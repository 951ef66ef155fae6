//! Clustering accuracy under the best one-to-one cluster/class matching, and
//! normalized mutual information with natural-log entropies normalized by
//! their geometric mean.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cluster or class index per sample.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelVector(Vec<usize>);

impl LabelVector {
    pub fn new(labels: Vec<usize>) -> Self {
        LabelVector(labels)
    }

    /// One past the largest label, i.e. the smallest `k` the labels fit in.
    pub fn k(&self) -> usize {
        self.0.iter().max().map_or(0, |m| m + 1)
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl From<Vec<usize>> for LabelVector {
    fn from(v: Vec<usize>) -> Self {
        LabelVector(v)
    }
}

impl Deref for LabelVector {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

/// `table[p][t]` counts samples with predicted label `p` and true label `t`.
pub fn contingency(predicted: &[usize], truth: &[usize]) -> Result<Vec<Vec<u64>>> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    let k = predicted.iter().max().map_or(0, |m| m + 1);
    let c = truth.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; c]; k];
    for (&p, &t) in predicted.iter().zip(truth) {
        table[p][t] += 1;
    }
    Ok(table)
}

/// Fraction of samples labeled correctly under the best one-to-one mapping
/// from predicted clusters to true classes. Unmatched clusters count as wrong.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(predicted, truth)?;
    if predicted.is_empty() {
        return Err(Error::InvalidConfig("cannot score an empty labeling".into()));
    }
    let matched = max_weight_matching(&table);
    Ok(matched as f64 / predicted.len() as f64)
}

/// Total weight of a maximum-weight one-to-one matching between the rows and
/// columns of a (possibly rectangular) count table.
pub fn max_weight_matching(table: &[Vec<u64>]) -> u64 {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    let n = rows.max(cols);
    if n == 0 {
        return 0;
    }
    let max = table.iter().flatten().copied().max().unwrap_or(0) as i64;
    // square cost matrix; padding cells cost `max` like a zero count
    let cost = |r: usize, c: usize| -> i64 {
        let w = if r < rows && c < cols { table[r][c] as i64 } else { 0 };
        max - w
    };
    let assignment = hungarian(n, cost);
    assignment
        .iter()
        .enumerate()
        .filter(|&(r, &c)| r < rows && c < cols)
        .map(|(r, &c)| table[r][c])
        .sum()
}

/// Minimum-cost perfect assignment on an `n × n` integer cost matrix
/// (shortest augmenting paths with potentials). Returns the column of each row.
fn hungarian(n: usize, cost: impl Fn(usize, usize) -> i64) -> Vec<usize> {
    const INF: i64 = i64::MAX / 4;
    // 1-based internally; index 0 is the virtual source
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of_row = vec![0usize; n];
    for j in 1..=n {
        if row_of_col[j] > 0 {
            col_of_row[row_of_col[j] - 1] = j - 1;
        }
    }
    col_of_row
}

fn entropy(counts: impl Iterator<Item = u64>, total: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum()
}

/// `I(P;T) / sqrt(H(P) H(T))`. Two single-cluster partitions score 1; a
/// single-cluster partition against anything else scores 0.
pub fn nmi(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(predicted, truth)?;
    if predicted.is_empty() {
        return Err(Error::InvalidConfig("cannot score an empty labeling".into()));
    }
    let total = predicted.len() as f64;
    let c = table.first().map_or(0, Vec::len);
    let row_sums: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<u64> = (0..c).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let h_pred = entropy(row_sums.iter().copied(), total);
    let h_truth = entropy(col_sums.iter().copied(), total);
    let pred_single = row_sums.iter().filter(|&&s| s > 0).count() <= 1;
    let truth_single = col_sums.iter().filter(|&&s| s > 0).count() <= 1;
    if pred_single && truth_single {
        return Ok(1.0);
    }
    if pred_single || truth_single || h_pred == 0.0 || h_truth == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let nij = nij as f64;
                mi += nij / total * (total * nij / (row_sums[i] as f64 * col_sums[j] as f64)).ln();
            }
        }
    }
    Ok((mi / (h_pred * h_truth).sqrt()).clamp(0.0, 1.0))
}
