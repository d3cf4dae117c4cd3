//! Class-weighted L2-regularized logistic regression on sparse vectors,
//! trained by full-batch gradient descent.
//!
//! The objective is the weighted negative log-likelihood averaged over rows
//! plus `(lambda/2)*||theta||^2`; the intercept is not regularized and
//! feature values are used as given, without standardization.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::vectorizer::{SparseVector, Vocabulary};

/// Stop when the objective improves by less than this between epochs.
pub const EARLY_STOP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    theta: Vec<f64>,
    intercept: f64,
    lambda: f64,
    trained: bool,
}

impl LinearModel {
    /// Builds a model directly from parameters (considered trained).
    pub fn from_parts(theta: Vec<f64>, intercept: f64, lambda: f64) -> Result<Self> {
        if lambda < 0.0 {
            return Err(Error::param("lambda", "must be non-negative"));
        }
        if !theta.iter().all(|t| t.is_finite()) || !intercept.is_finite() {
            return Err(Error::param("theta", "coefficients must be finite"));
        }
        Ok(LinearModel {
            theta,
            intercept,
            lambda,
            trained: true,
        })
    }

    pub fn zeros(dim: usize, lambda: f64) -> Result<Self> {
        Self::from_parts(vec![0.0; dim], 0.0, lambda)
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn coefficient(&self, j: usize) -> f64 {
        self.theta[j]
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }
}

/// One training row: sparse features, binary label, positive weight.
#[derive(Debug, Clone)]
pub struct Example {
    pub x: SparseVector,
    pub label: bool,
    pub weight: f64,
}

#[derive(Debug, Clone, Default)]
pub struct WeightedDataset {
    rows: Vec<Example>,
    dim: usize,
}

impl WeightedDataset {
    pub fn new(dim: usize) -> Self {
        WeightedDataset {
            rows: Vec::new(),
            dim,
        }
    }

    pub fn push(&mut self, x: SparseVector, label: bool, weight: f64) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::param("weight", format!("{weight} is not positive")));
        }
        self.rows.push(Example { x, label, weight });
        Ok(())
    }

    pub fn rows(&self) -> &[Example] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn has_both_classes(&self) -> bool {
        self.rows.iter().any(|r| r.label) && self.rows.iter().any(|r| !r.label)
    }
}

/// Inverse-class-frequency weights: with `p` positives and `n` negatives,
/// positives get `(n+p)/(2p)` and negatives `(n+p)/(2n)`.
pub fn class_weights(p: usize, n: usize) -> Result<(f64, f64)> {
    if p == 0 {
        return Err(Error::ZeroClassCount { class: "positive" });
    }
    if n == 0 {
        return Err(Error::ZeroClassCount { class: "negative" });
    }
    let total = (n + p) as f64;
    Ok((total / (2.0 * p as f64), total / (2.0 * n as f64)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitParams {
    pub lambda: f64,
    pub lr: f64,
    pub epochs: usize,
    /// Reserved seed slot; full-batch descent from zero needs no randomness,
    /// so identical inputs always produce identical models.
    pub seed: u64,
}

impl Default for FitParams {
    fn default() -> Self {
        FitParams {
            lambda: 1.0,
            lr: 0.1,
            epochs: 200,
            seed: 0,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Evaluates the weighted regularized objective and its gradient at the
/// model's parameters. The gradient has length k+1 with the intercept
/// component last. Exposed for testability.
pub fn loss_and_gradient(model: &LinearModel, data: &WeightedDataset) -> Result<(f64, Vec<f64>)> {
    if data.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if data.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: data.dim(),
        });
    }

    let k = model.dim();
    let n = data.len() as f64;
    let mut grad = vec![0.0; k + 1];
    let mut loss = 0.0;
    for row in data.rows() {
        let z = row.x.dot(&model.theta) + model.intercept;
        let y = if row.label { 1.0 } else { 0.0 };
        loss += row.weight * (softplus(z) - y * z);
        let common = row.weight * (sigmoid(z) - y);
        for &(j, v) in row.x.entries() {
            grad[j] += common * v;
        }
        grad[k] += common;
    }

    loss /= n;
    for g in grad.iter_mut() {
        *g /= n;
    }
    for (g, &t) in grad.iter_mut().zip(&model.theta) {
        loss += 0.5 * model.lambda * t * t;
        *g += model.lambda * t;
    }
    Ok((loss, grad))
}

/// Fits from a zero model and also returns the objective value observed at
/// the start of every epoch.
pub fn fit_traced(data: &WeightedDataset, params: &FitParams) -> Result<(LinearModel, Vec<f64>)> {
    if data.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if !data.has_both_classes() {
        return Err(Error::SingleClass);
    }
    if !params.lr.is_finite() || params.lr <= 0.0 {
        return Err(Error::param("lr", "must be positive"));
    }
    if params.epochs < 1 {
        return Err(Error::param("epochs", "must be at least 1"));
    }
    if params.lambda < 0.0 {
        return Err(Error::param("lambda", "must be non-negative"));
    }

    let mut model = LinearModel::zeros(data.dim(), params.lambda)?;
    let mut history: Vec<f64> = Vec::with_capacity(params.epochs);
    for epoch in 0..params.epochs {
        let (loss, grad) = loss_and_gradient(&model, data)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch });
        }
        if let Some(&prev) = history.last() {
            if (prev - loss).abs() < EARLY_STOP_TOL {
                history.push(loss);
                break;
            }
        }
        history.push(loss);
        let k = model.theta.len();
        for (t, &g) in model.theta.iter_mut().zip(&grad) {
            *t -= params.lr * g;
        }
        model.intercept -= params.lr * grad[k];
    }
    Ok((model, history))
}

/// Fits a weighted L2-regularized logistic regression by full-batch
/// gradient descent. Deterministic for identical inputs.
pub fn fit(data: &WeightedDataset, params: &FitParams) -> Result<LinearModel> {
    fit_traced(data, params).map(|(model, _)| model)
}

/// sigmoid(theta . x + intercept)
pub fn predict_proba(model: &LinearModel, x: &SparseVector) -> Result<f64> {
    if !model.trained {
        return Err(Error::NotTrained);
    }
    if x.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: x.dim(),
        });
    }
    Ok(sigmoid(x.dot(&model.theta) + model.intercept))
}

/// The `n` terms with the largest coefficients, descending. Ties break by
/// feature index.
pub fn top_terms(model: &LinearModel, vocab: &Vocabulary, n: usize) -> Vec<(String, f64)> {
    let mut order: Vec<usize> = (0..model.dim()).collect();
    order.sort_by(|&a, &b| {
        model.theta[b]
            .partial_cmp(&model.theta[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
        .into_iter()
        .take(n)
        .map(|j| (vocab.term(j).to_string(), model.theta[j]))
        .collect()
}

/// CSV as `term,coefficient`, one row per top term.
pub fn top_terms_csv(model: &LinearModel, vocab: &Vocabulary, n: usize) -> String {
    let mut out = String::from("term,coefficient\n");
    for (term, coef) in top_terms(model, vocab, n) {
        out.push_str(&format!("{term},{coef}\n"));
    }
    out
}

/// Flat text format: one header line `k \t lambda \t intercept`, then one
/// `j \t value` line per nonzero coefficient.
pub fn save_model(model: &LinearModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(
        w,
        "k={}\tlambda={}\tintercept={}",
        model.dim(),
        model.lambda,
        model.intercept
    )
    .map_err(|e| Error::io(path, e))?;
    for (j, &t) in model.theta.iter().enumerate() {
        if t != 0.0 {
            writeln!(w, "{j}\t{t}").map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LinearModel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::record(path, 1, "header", "missing"))?;
    let header = header.map_err(|e| Error::io(path, e))?;
    let mut k = None;
    let mut lambda = None;
    let mut intercept = None;
    for part in header.split('\t') {
        match part.split_once('=') {
            Some(("k", v)) => k = v.parse::<usize>().ok(),
            Some(("lambda", v)) => lambda = v.parse::<f64>().ok(),
            Some(("intercept", v)) => intercept = v.parse::<f64>().ok(),
            _ => {}
        }
    }
    let (k, lambda, intercept) = match (k, lambda, intercept) {
        (Some(k), Some(l), Some(i)) => (k, l, i),
        _ => {
            return Err(Error::record(
                path,
                1,
                "header",
                "expected k, lambda, intercept",
            ))
        }
    };

    let mut theta = vec![0.0; k];
    for (lineno, line) in lines {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let (j, v) = line
            .split_once('\t')
            .ok_or_else(|| Error::record(path, lineno, "record", "expected j\\tvalue"))?;
        let j: usize = j.parse().map_err(|e: std::num::ParseIntError| {
            Error::record(path, lineno, "index", e.to_string())
        })?;
        if j >= k {
            return Err(Error::record(
                path,
                lineno,
                "index",
                format!("{j} out of range for k={k}"),
            ));
        }
        theta[j] = v.parse().map_err(|e: std::num::ParseFloatError| {
            Error::record(path, lineno, "value", e.to_string())
        })?;
    }
    LinearModel::from_parts(theta, intercept, lambda)
}
