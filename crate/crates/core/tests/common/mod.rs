//! Reference implementations used only by tests. Each one is written from the
//! defining formula with plain loops, independent of the library code paths.

#![allow(dead_code, clippy::needless_range_loop)]

use dcidc::{ActivationKind, Matrix, NetworkParams};
use nalgebra::DMatrix;

pub fn act(kind: ActivationKind, y: f64) -> f64 {
    match kind {
        ActivationKind::Tanh => y.tanh(),
        ActivationKind::Sigmoid => 1.0 / (1.0 + (-y).exp()),
        ActivationKind::Nssigmoid => y / (1.0 + y.abs()),
        ActivationKind::Softplus => (1.0 + y.exp()).ln(),
    }
}

/// Layer outputs of one sample, `out[0]` being the input.
pub fn forward_sample(params: &NetworkParams, x: &[f64]) -> Vec<Vec<f64>> {
    let mut out = vec![x.to_vec()];
    for m in 1..=params.layers() {
        let w = &params.weights[m - 1];
        let b = &params.biases[m - 1];
        let prev = &out[m - 1];
        let mut z = Vec::with_capacity(w.rows());
        for r in 0..w.rows() {
            let mut y = b[r];
            for c in 0..w.cols() {
                y += w.get(r, c) * prev[c];
            }
            z.push(act(params.activation_of(m), y));
        }
        out.push(z);
    }
    out
}

/// `(j1, j2, j3)` of the half-scaled objective by scalar loops.
pub fn scalar_loss(
    params: &NetworkParams,
    data: &Matrix,
    indicator: &Matrix,
    centers: &Matrix,
    lambda1: f64,
    lambda2: f64,
) -> (f64, f64, f64) {
    let mid = params.layers() / 2;
    let (mut j1, mut j2) = (0.0, 0.0);
    for i in 0..data.rows() {
        let zs = forward_sample(params, data.row(i));
        let x = data.row(i);
        let rec = zs.last().unwrap();
        for d in 0..x.len() {
            j1 += (x[d] - rec[d]).powi(2);
        }
        let code = &zs[mid];
        for d in 0..code.len() {
            let mut target = 0.0;
            for k in 0..centers.cols() {
                target += indicator.get(i, k) * centers.get(d, k);
            }
            j2 += (code[d] - target).powi(2);
        }
    }
    let mut norm = 0.0;
    for (w, b) in params.weights.iter().zip(&params.biases) {
        for r in 0..w.rows() {
            for c in 0..w.cols() {
                norm += w.get(r, c).powi(2);
            }
        }
        for v in b {
            norm += v * v;
        }
    }
    (0.5 * j1, 0.5 * lambda1 * j2, 0.5 * lambda2 * norm)
}

/// Per-cluster means, `d × K`, with zero columns for empty clusters.
pub fn brute_means(codes: &Matrix, labels: &[usize], k: usize) -> Matrix {
    let mut out = Matrix::zeros(codes.cols(), k);
    for c in 0..k {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        for d in 0..codes.cols() {
            let mut sum = 0.0;
            for &i in &members {
                sum += codes.get(i, d);
            }
            if !members.is_empty() {
                out.set(d, c, sum / members.len() as f64);
            }
        }
    }
    out
}

/// Least-squares coefficients `pinv(S) z` for every code row via SVD.
pub fn pinv_coefficients(codes: &Matrix, centers: &Matrix) -> Vec<Vec<f64>> {
    let s = DMatrix::from_fn(centers.rows(), centers.cols(), |r, c| centers.get(r, c));
    let pinv = s.pseudo_inverse(1e-12).expect("non-negative epsilon");
    (0..codes.rows())
        .map(|i| {
            let z = DMatrix::from_fn(codes.cols(), 1, |r, _| codes.get(i, r));
            (&pinv * z).iter().copied().collect()
        })
        .collect()
}

pub fn first_argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Best matched count over every one-to-one cluster→class assignment.
pub fn brute_accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    let kp = pred.iter().max().unwrap() + 1;
    let kt = truth.iter().max().unwrap() + 1;
    let n = kp.max(kt);
    let mut best = 0;
    for perm in permutations(n) {
        let hits = pred
            .iter()
            .zip(truth)
            .filter(|&(&p, &t)| perm[p] == t)
            .count();
        best = best.max(hits);
    }
    best as f64 / pred.len() as f64
}

/// `I / sqrt(H_p H_t)` from direct probability sums.
pub fn brute_nmi(pred: &[usize], truth: &[usize]) -> f64 {
    let n = pred.len() as f64;
    let kp = pred.iter().max().unwrap() + 1;
    let kt = truth.iter().max().unwrap() + 1;
    let p = |a: usize| pred.iter().filter(|&&x| x == a).count() as f64 / n;
    let t = |b: usize| truth.iter().filter(|&&x| x == b).count() as f64 / n;
    let joint = |a: usize, b: usize| {
        pred.iter()
            .zip(truth)
            .filter(|&(&x, &y)| x == a && y == b)
            .count() as f64
            / n
    };
    let h = |probs: Vec<f64>| -> f64 {
        probs.into_iter().filter(|&q| q > 0.0).map(|q| -q * q.ln()).sum()
    };
    let hp = h((0..kp).map(p).collect());
    let ht = h((0..kt).map(t).collect());
    let used_p = (0..kp).filter(|&a| p(a) > 0.0).count();
    let used_t = (0..kt).filter(|&b| t(b) > 0.0).count();
    if used_p <= 1 && used_t <= 1 {
        return 1.0;
    }
    if used_p <= 1 || used_t <= 1 {
        return 0.0;
    }
    let mut mi = 0.0;
    for a in 0..kp {
        for b in 0..kt {
            let j = joint(a, b);
            if j > 0.0 {
                mi += j * (j / (p(a) * t(b))).ln();
            }
        }
    }
    mi / (hp * ht).sqrt()
}
