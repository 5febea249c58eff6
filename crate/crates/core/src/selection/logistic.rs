use log::warn;
use serde::{Deserialize, Serialize};

use super::aggregate::AggregatedDataset;
use crate::error::{Error, Result};
use crate::numerics::{softmax_in_place, Tensor2};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub l2: f64,
    pub max_iter: usize,
    /// Stop once the largest gradient entry falls below this.
    pub tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            l2: 1e-3,
            max_iter: 500,
            tol: 1e-6,
        }
    }
}

/// Multinomial logistic regression on z-scored features, fitted by full-batch
/// gradient descent.
#[derive(Clone, Debug, PartialEq)]
pub struct LogisticModel {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// `d × K` coefficients on the standardized features.
    pub w: Tensor2,
    pub b: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

fn standardize(x: &Tensor2) -> (Vec<f64>, Vec<f64>) {
    let (m, d) = x.shape();
    let mut mean = vec![0.0; d];
    let mut scale = vec![0.0; d];
    for j in 0..d {
        let col = x.column(j);
        let mu = col.iter().sum::<f64>() / m as f64;
        let var = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / m as f64;
        mean[j] = mu;
        scale[j] = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    }
    (mean, scale)
}

fn apply_standardize(x: &Tensor2, mean: &[f64], scale: &[f64]) -> Tensor2 {
    let mut z = x.clone();
    for r in 0..z.rows() {
        for (j, v) in z.row_mut(r).iter_mut().enumerate() {
            *v = (*v - mean[j]) / scale[j];
        }
    }
    z
}

/// Largest eigenvalue of `zᵀz / m` by power iteration.
fn top_eigenvalue(z: &Tensor2) -> f64 {
    let (m, d) = z.shape();
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut lambda = 0.0;
    for _ in 0..50 {
        let mut zv = vec![0.0; m];
        for r in 0..m {
            zv[r] = z.row(r).iter().zip(&v).map(|(a, b)| a * b).sum();
        }
        let mut w = vec![0.0; d];
        for r in 0..m {
            for (j, a) in z.row(r).iter().enumerate() {
                w[j] += a * zv[r] / m as f64;
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm;
        v = w.into_iter().map(|x| x / norm).collect();
    }
    lambda
}

impl LogisticModel {
    pub fn fit(data: &AggregatedDataset, config: &LogisticConfig) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Invalid(
                "logistic regression on an empty dataset".into(),
            ));
        }
        let (m, d) = data.x.shape();
        let k = data.num_classes;
        let (mean, scale) = standardize(&data.x);
        let z = apply_standardize(&data.x, &mean, &scale);
        // softmax cross-entropy has curvature at most 1/2 per logit
        let lipschitz = 0.5 * top_eigenvalue(&z).max(1.0) + config.l2;
        let lr = 1.0 / lipschitz;

        let mut w = Tensor2::zeros(d, k);
        let mut b = vec![0.0; k];
        let mut converged = false;
        let mut iterations = 0;
        let mut probs = vec![0.0; k];
        for it in 0..config.max_iter {
            iterations = it + 1;
            let mut gw = Tensor2::zeros(d, k);
            let mut gb = vec![0.0; k];
            for r in 0..m {
                let row = z.row(r);
                for c in 0..k {
                    probs[c] = b[c] + (0..d).map(|j| row[j] * w.get(j, c)).sum::<f64>();
                }
                softmax_in_place(&mut probs);
                probs[data.y[r]] -= 1.0;
                for c in 0..k {
                    let e = probs[c] / m as f64;
                    gb[c] += e;
                    for j in 0..d {
                        gw.data_mut()[j * k + c] += row[j] * e;
                    }
                }
            }
            let mut max_g: f64 = gb.iter().fold(0.0, |a, v| a.max(v.abs()));
            for (g, wv) in gw.data_mut().iter_mut().zip(w.data()) {
                *g += config.l2 * wv;
                max_g = max_g.max(g.abs());
            }
            if max_g < config.tol {
                converged = true;
                break;
            }
            for (wv, g) in w.data_mut().iter_mut().zip(gw.data()) {
                *wv -= lr * g;
            }
            for (bv, g) in b.iter_mut().zip(&gb) {
                *bv -= lr * g;
            }
        }
        Ok(Self {
            mean,
            scale,
            w,
            b,
            converged,
            iterations,
        })
    }

    pub fn predict(&self, x: &Tensor2) -> Vec<usize> {
        let z = apply_standardize(x, &self.mean, &self.scale);
        let (d, k) = self.w.shape();
        (0..z.rows())
            .map(|r| {
                let row = z.row(r);
                let logits: Vec<f64> = (0..k)
                    .map(|c| self.b[c] + (0..d).map(|j| row[j] * self.w.get(j, c)).sum::<f64>())
                    .collect();
                crate::model::argmax(&logits)
            })
            .collect()
    }

    /// L2 norm of each feature's coefficients across classes.
    pub fn coefficient_norms(&self) -> Vec<f64> {
        (0..self.w.rows())
            .map(|j| self.w.row(j).iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect()
    }
}

/// Recursive elimination, one feature per round. Returns ranks in schema
/// order: 1 for the survivor, `d` for the first feature dropped.
pub fn rfe_ranks(data: &AggregatedDataset, config: &LogisticConfig) -> Result<Vec<f64>> {
    let d = data.dim();
    if data.len() <= d {
        warn!("RFE with {} examples for {d} features", data.len());
    }
    let mut remaining: Vec<usize> = (0..d).collect();
    let mut ranks = vec![0.0; d];
    let mut unconverged = 0;
    while remaining.len() > 1 {
        let model = LogisticModel::fit(&data.select_features(&remaining), config)?;
        unconverged += (!model.converged) as usize;
        let norms = model.coefficient_norms();
        // among equal norms the later schema index goes first
        let mut drop = 0;
        for (p, &n) in norms.iter().enumerate() {
            if n <= norms[drop] {
                drop = p;
            }
        }
        ranks[remaining[drop]] = remaining.len() as f64;
        remaining.remove(drop);
    }
    ranks[remaining[0]] = 1.0;
    if unconverged > 0 {
        warn!(
            "logistic regression stopped at {} iterations without converging in {unconverged} RFE rounds",
            config.max_iter
        );
    }
    Ok(ranks)
}
