//! Multinomial logistic regression trained by seeded mini-batch gradient descent.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::ClassId;
use crate::features::{read_header, FeatureMatrix};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub l2_penalty: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Stop early once the full-data loss changes by less than this between
    /// epochs. Zero disables early stopping.
    pub tolerance: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            l2_penalty: 1e-4,
            epochs: 50,
            batch_size: 256,
            seed: 0,
            tolerance: 1e-7,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if !(self.l2_penalty >= 0.0 && self.l2_penalty.is_finite()) {
            return Err(Error::invalid("l2_penalty must be non-negative"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::invalid("tolerance must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs_run: usize,
    pub learning_rate: f64,
    pub l2_penalty: f64,
    pub initial_loss: f64,
    pub final_loss: f64,
    /// Full-data objective after each epoch.
    pub loss_trace: Vec<f64>,
}

/// `classes x dims` weights plus a bias per class.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    classes: usize,
    dims: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    pub meta: Option<TrainingMeta>,
}

impl LinearModel {
    pub fn zeros(classes: usize, dims: usize) -> Self {
        LinearModel {
            classes,
            dims,
            weights: vec![0.0; classes * dims],
            bias: vec![0.0; classes],
            meta: None,
        }
    }

    pub fn from_parts(classes: usize, dims: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != classes * dims {
            return Err(Error::DimensionMismatch {
                expected: classes * dims,
                actual: weights.len(),
            });
        }
        if bias.len() != classes {
            return Err(Error::DimensionMismatch {
                expected: classes,
                actual: bias.len(),
            });
        }
        if let Some(pos) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dims.max(1),
                col: pos % dims.max(1),
            });
        }
        if let Some(pos) = bias.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFinite { row: pos, col: dims });
        }
        Ok(LinearModel {
            classes,
            dims,
            weights,
            bias,
            meta: None,
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_row(&self, class: usize) -> &[f64] {
        &self.weights[class * self.dims..(class + 1) * self.dims]
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    fn scores_into(&self, x: &[f32], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            let w = self.weight_row(c);
            *o = self.bias[c]
                + w.iter()
                    .zip(x)
                    .map(|(wi, &xi)| wi * xi as f64)
                    .sum::<f64>();
        }
    }

    fn check_dims(&self, features: &FeatureMatrix) -> Result<()> {
        if features.dims() != self.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims,
                actual: features.dims(),
            });
        }
        Ok(())
    }

    /// Raw scores, `rows x classes`.
    pub fn logits(&self, features: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
        self.check_dims(features)?;
        Ok(features
            .iter_rows()
            .map(|x| {
                let mut s = vec![0.0; self.classes];
                self.scores_into(x, &mut s);
                s
            })
            .collect())
    }

    /// Model file layout: `GFLM`, u64 classes, u64 dims, bias then weights as
    /// little-endian f32. Weights are narrowed from f64 on write.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(20 + 4 * (self.bias.len() + self.weights.len()));
        buf.extend_from_slice(MODEL_MAGIC);
        buf.extend_from_slice(&(self.classes as u64).to_le_bytes());
        buf.extend_from_slice(&(self.dims as u64).to_le_bytes());
        for v in self.bias.iter().chain(&self.weights) {
            buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (header, payload) = read_header(bytes, MODEL_MAGIC, 2)?;
        let (classes, dims) = (header[0], header[1]);
        let count = classes * (dims + 1);
        if payload.len() != count * 4 {
            return Err(Error::invalid(format!(
                "model header declares {classes}x{dims} but payload has {} bytes",
                payload.len()
            )));
        }
        let vals: Vec<f64> = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        let (bias, weights) = vals.split_at(classes);
        Self::from_parts(classes, dims, weights.to_vec(), bias.to_vec())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

const MODEL_MAGIC: &[u8; 4] = b"GFLM";

fn softmax_in_place(s: &mut [f64]) {
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in s.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in s.iter_mut() {
        *v /= sum;
    }
}

fn argmax_lowest(s: &[f64]) -> usize {
    let mut best = 0;
    for (c, &v) in s.iter().enumerate().skip(1) {
        if v > s[best] {
            best = c;
        }
    }
    best
}

pub fn predict(model: &LinearModel, features: &FeatureMatrix) -> Result<Vec<ClassId>> {
    Ok(model
        .logits(features)?
        .iter()
        .map(|s| ClassId(argmax_lowest(s)))
        .collect())
}

/// Softmax probabilities, `rows x classes`.
pub fn predict_proba(model: &LinearModel, features: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
    let mut scores = model.logits(features)?;
    for s in &mut scores {
        softmax_in_place(s);
    }
    Ok(scores)
}

/// Sparse view of the rows used during training.
struct SparseRows {
    rows: Vec<Vec<(u32, f64)>>,
}

impl SparseRows {
    fn new(features: &FeatureMatrix) -> Self {
        SparseRows {
            rows: features
                .iter_rows()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|(_, &v)| v != 0.0)
                        .map(|(j, &v)| (j as u32, v as f64))
                        .collect()
                })
                .collect(),
        }
    }
}

struct Objective<'a> {
    x: &'a SparseRows,
    labels: &'a [ClassId],
    classes: usize,
    dims: usize,
}

impl Objective<'_> {
    /// Mean cross-entropy over `rows`; when `grad` is given, accumulates the
    /// mean data gradient (no penalty term) into it.
    fn data_term(
        &self,
        weights: &[f64],
        bias: &[f64],
        rows: &[usize],
        mut grad: Option<(&mut [f64], &mut [f64])>,
    ) -> f64 {
        let c = self.classes;
        let d = self.dims;
        let inv_n = 1.0 / rows.len() as f64;
        let mut scores = vec![0.0; c];
        let mut loss = 0.0;
        for &i in rows {
            let x = &self.x.rows[i];
            for (k, s) in scores.iter_mut().enumerate() {
                let w = &weights[k * d..(k + 1) * d];
                *s = bias[k] + x.iter().map(|&(j, v)| w[j as usize] * v).sum::<f64>();
            }
            let y = self.labels[i].0;
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
            loss += lse - scores[y];
            if let Some((gw, gb)) = grad.as_mut() {
                for k in 0..c {
                    let coef = ((scores[k] - lse).exp() - if k == y { 1.0 } else { 0.0 }) * inv_n;
                    gb[k] += coef;
                    let row = &mut gw[k * d..(k + 1) * d];
                    for &(j, v) in x {
                        row[j as usize] += coef * v;
                    }
                }
            }
        }
        loss * inv_n
    }

    fn full(&self, weights: &[f64], bias: &[f64], rows: &[usize], l2: f64) -> f64 {
        self.data_term(weights, bias, rows, None) + penalty(weights, l2)
    }
}

fn penalty(weights: &[f64], l2: f64) -> f64 {
    0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>()
}

/// Objective value and gradient on a subset of rows:
/// `mean cross-entropy + (l2 / 2) * ||W||^2` (the bias is not penalised).
pub fn loss_and_gradient(
    model: &LinearModel,
    features: &FeatureMatrix,
    labels: &[ClassId],
    rows: &[usize],
    l2: f64,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    model.check_dims(features)?;
    let x = SparseRows::new(features);
    let obj = Objective {
        x: &x,
        labels,
        classes: model.classes,
        dims: model.dims,
    };
    let mut gw = vec![0.0; model.weights.len()];
    let mut gb = vec![0.0; model.classes];
    let loss = obj.data_term(&model.weights, &model.bias, rows, Some((&mut gw, &mut gb)))
        + penalty(&model.weights, l2);
    for (g, w) in gw.iter_mut().zip(&model.weights) {
        *g += l2 * w;
    }
    Ok((loss, gw, gb))
}

/// Fits `classes`-way softmax regression.
///
/// Each mini-batch takes a gradient step on the cross-entropy and applies the
/// L2 term as a proximal shrink, `W <- (W - lr * g) / (1 + lr * l2)`. The
/// fixed points are those of the penalised objective and the update stays
/// stable for arbitrarily large penalties. Weights start at zero; the seed
/// only drives the batch order.
pub fn train(
    features: &FeatureMatrix,
    labels: &[ClassId],
    classes: usize,
    config: &TrainConfig,
) -> Result<LinearModel> {
    train_on_stream(features, labels, classes, config, rng::stream::TRAIN)
}

pub(crate) fn train_on_stream(
    features: &FeatureMatrix,
    labels: &[ClassId],
    classes: usize,
    config: &TrainConfig,
    stream: u64,
) -> Result<LinearModel> {
    config.validate()?;
    if features.rows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.rows(),
            actual: labels.len(),
        });
    }
    if features.rows() == 0 {
        return Err(Error::invalid("cannot train on zero rows"));
    }
    if let Some(bad) = labels.iter().find(|l| l.0 >= classes) {
        return Err(Error::invalid(format!(
            "label {} outside [0, {classes})",
            bad.0
        )));
    }
    let first = labels[0];
    if labels.iter().all(|&l| l == first) {
        return Err(Error::invalid(format!(
            "all training labels are class {}; need at least two classes",
            first.0
        )));
    }

    let dims = features.dims();
    let x = SparseRows::new(features);
    let obj = Objective {
        x: &x,
        labels,
        classes,
        dims,
    };
    let mut weights = vec![0.0; classes * dims];
    let mut bias = vec![0.0; classes];
    let mut gw = vec![0.0; weights.len()];
    let mut gb = vec![0.0; classes];
    let all: Vec<usize> = (0..features.rows()).collect();
    let mut order = all.clone();
    let mut rng = rng::derive(config.seed, stream);

    let lr = config.learning_rate;
    let shrink = 1.0 / (1.0 + lr * config.l2_penalty);
    let initial_loss = obj.full(&weights, &bias, &all, config.l2_penalty);
    let mut prev = initial_loss;
    let mut trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            gw.iter_mut().for_each(|g| *g = 0.0);
            gb.iter_mut().for_each(|g| *g = 0.0);
            obj.data_term(&weights, &bias, batch, Some((&mut gw, &mut gb)));
            for (w, g) in weights.iter_mut().zip(&gw) {
                *w = (*w - lr * g) * shrink;
            }
            for (b, g) in bias.iter_mut().zip(&gb) {
                *b -= lr * g;
            }
        }
        let loss = obj.full(&weights, &bias, &all, config.l2_penalty);
        if !loss.is_finite() {
            return Err(Error::Diverged(format!("loss became {loss} at epoch {}", epoch + 1)));
        }
        trace.push(loss);
        let converged = config.tolerance > 0.0 && (prev - loss).abs() < config.tolerance;
        prev = loss;
        if converged {
            break;
        }
    }

    let mut model = LinearModel::from_parts(classes, dims, weights, bias)
        .map_err(|e| Error::Diverged(e.to_string()))?;
    model.meta = Some(TrainingMeta {
        seed: config.seed,
        epochs_run: trace.len(),
        learning_rate: lr,
        l2_penalty: config.l2_penalty,
        initial_loss,
        final_loss: prev,
        loss_trace: trace,
    });
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn separable_1d() -> (FeatureMatrix, Vec<ClassId>) {
        let rows: Vec<Vec<f32>> = (0..40).map(|i| vec![if i % 2 == 0 { -1.0 } else { 1.0 }]).collect();
        let labels = (0..40).map(|i| ClassId(i % 2)).collect();
        (FeatureMatrix::from_rows(&rows).unwrap(), labels)
    }

    #[test]
    fn separable_classes_fit_exactly() {
        let (x, y) = separable_1d();
        let cfg = TrainConfig {
            epochs: 200,
            ..TrainConfig::default()
        };
        let m = train(&x, &y, 2, &cfg).unwrap();
        assert_eq!(predict(&m, &x).unwrap(), y);
        let meta = m.meta.unwrap();
        assert!(meta.final_loss <= meta.initial_loss);
    }

    #[test]
    fn huge_penalty_collapses_to_majority() {
        let rows: Vec<Vec<f32>> = (0..30).map(|i| vec![(i % 3) as f32 - 1.0, 1.0]).collect();
        let labels: Vec<ClassId> = (0..30).map(|i| ClassId(if i % 3 == 0 { 1 } else { 0 })).collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let cfg = TrainConfig {
            l2_penalty: 1e6,
            epochs: 100,
            ..TrainConfig::default()
        };
        let m = train(&x, &labels, 2, &cfg).unwrap();
        assert!(m.weights().iter().all(|w| w.abs() < 1e-5), "{:?}", m.weights());
        assert!(predict(&m, &x).unwrap().iter().all(|&p| p == ClassId(0)));
    }

    #[test]
    fn rejects_single_class_and_bad_shapes() {
        let x = FeatureMatrix::zeros(3, 2);
        let same = vec![ClassId(1); 3];
        assert!(train(&x, &same, 2, &TrainConfig::default()).is_err());
        assert!(train(&x, &same[..2], 2, &TrainConfig::default()).is_err());
        let out_of_range = vec![ClassId(0), ClassId(1), ClassId(5)];
        assert!(train(&x, &out_of_range, 2, &TrainConfig::default()).is_err());
        let bad = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let rows: Vec<Vec<f32>> = (0..20).map(|i| vec![(i as f32 - 10.0) * 1e30]).collect();
        let labels: Vec<ClassId> = (0..20).map(|i| ClassId(i % 2)).collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e300,
            l2_penalty: 0.0,
            ..TrainConfig::default()
        };
        assert!(matches!(train(&x, &labels, 2, &cfg), Err(Error::Diverged(_))));
    }

    #[test]
    fn zero_model_predicts_class_zero_and_uniform_proba() {
        let m = LinearModel::zeros(4, 3);
        let x = FeatureMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![0.0, -1.0, 5.0]]).unwrap();
        assert_eq!(predict(&m, &x).unwrap(), vec![ClassId(0); 2]);
        for row in predict_proba(&m, &x).unwrap() {
            for p in row {
                assert!((p - 0.25).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dominant_bias_wins() {
        let m = LinearModel::from_parts(4, 2, vec![0.0; 8], vec![0.0, 10.0, 0.0, 0.0]).unwrap();
        let x = FeatureMatrix::from_rows(&[vec![3.0, -2.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(predict(&m, &x).unwrap(), vec![ClassId(1); 2]);
    }

    #[test]
    fn dimension_mismatch() {
        let m = LinearModel::zeros(2, 3);
        assert!(predict(&m, &FeatureMatrix::zeros(1, 2)).is_err());
    }

    fn random_model(rng: &mut ChaCha8Rng, c: usize, d: usize) -> LinearModel {
        let w = (0..c * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = (0..c).map(|_| rng.random_range(-1.0..1.0)).collect();
        LinearModel::from_parts(c, d, w, b).unwrap()
    }

    fn random_features(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureMatrix {
        let v = (0..n * d).map(|_| rng.random_range(-2.0f32..2.0)).collect();
        FeatureMatrix::new(n, d, v).unwrap()
    }

    #[test]
    fn proba_rows_normalised_and_argmax_matches_predict() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_model(&mut rng, 5, 6);
        let x = random_features(&mut rng, 1000, 6);
        let proba = predict_proba(&m, &x).unwrap();
        let pred = predict(&m, &x).unwrap();
        for (row, p) in proba.iter().zip(&pred) {
            assert!(row.iter().all(|&v| v >= 0.0));
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            // independent argmax over probabilities
            let mut best = 0;
            for k in 1..row.len() {
                if row[k] > row[best] {
                    best = k;
                }
            }
            assert_eq!(ClassId(best), *p);
        }
    }

    #[test]
    fn softmax_shift_invariance() {
        let mut a = vec![0.3, -1.2, 2.0, 0.0];
        let mut b: Vec<f64> = a.iter().map(|v| v + 17.5).collect();
        softmax_in_place(&mut a);
        softmax_in_place(&mut b);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let (c, d, n) = (3, 4, 12);
            let model = random_model(&mut rng, c, d);
            let x = random_features(&mut rng, n, d);
            let y: Vec<ClassId> = (0..n).map(|_| ClassId(rng.random_range(0..c))).collect();
            let rows: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.7)).collect();
            let rows = if rows.is_empty() { vec![0] } else { rows };
            let l2 = 0.05;
            let (_, gw, gb) = loss_and_gradient(&model, &x, &y, &rows, l2).unwrap();
            let h = 1e-5;
            let f = |m: &LinearModel| loss_and_gradient(m, &x, &y, &rows, l2).unwrap().0;
            for k in 0..c * d {
                let mut plus = model.clone();
                plus.weights[k] += h;
                let mut minus = model.clone();
                minus.weights[k] -= h;
                let fd = (f(&plus) - f(&minus)) / (2.0 * h);
                assert!((fd - gw[k]).abs() <= 1e-4 * fd.abs().max(1e-3), "w{k}: {fd} vs {}", gw[k]);
            }
            for k in 0..c {
                let mut plus = model.clone();
                plus.bias[k] += h;
                let mut minus = model.clone();
                minus.bias[k] -= h;
                let fd = (f(&plus) - f(&minus)) / (2.0 * h);
                assert!((fd - gb[k]).abs() <= 1e-4 * fd.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn full_batch_loss_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_features(&mut rng, 60, 5);
        let y: Vec<ClassId> = (0..60).map(|_| ClassId(rng.random_range(0..3))).collect();
        let cfg = TrainConfig {
            learning_rate: 0.05,
            batch_size: 60,
            epochs: 80,
            tolerance: 0.0,
            ..TrainConfig::default()
        };
        let m = train(&x, &y, 3, &cfg).unwrap();
        let trace = m.meta.unwrap().loss_trace;
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn same_seed_is_bit_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = random_features(&mut rng, 300, 7);
        let y: Vec<ClassId> = (0..300).map(|_| ClassId(rng.random_range(0..4))).collect();
        let cfg = TrainConfig {
            batch_size: 32,
            epochs: 5,
            seed: 42,
            ..TrainConfig::default()
        };
        let a = train(&x, &y, 4, &cfg).unwrap();
        let b = train(&x, &y, 4, &cfg).unwrap();
        assert_eq!(a.weights(), b.weights());
        let c = train(&x, &y, 4, &TrainConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.weights(), c.weights());
    }

    #[test]
    fn model_file_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_model(&mut rng, 3, 5);
        let back = LinearModel::from_bytes(&m.to_bytes()).unwrap();
        assert_eq!(back.to_bytes(), m.to_bytes());
        for (a, b) in back.weights().iter().zip(m.weights()) {
            assert!((a - b).abs() < 1e-6);
        }
        let mut short = m.to_bytes();
        short.pop();
        assert!(LinearModel::from_bytes(&short).is_err());
    }
}
