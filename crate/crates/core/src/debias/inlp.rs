//! Iterative nullspace projection.
//!
//! A linear guard is trained to predict the group from the features, the
//! direction it relies on is removed, and the loop repeats on the projected
//! features until the guard is no better than always guessing the majority
//! group.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::{self, TrainConfig};
use crate::corpus::{ClassId, GroupId};
use crate::features::{read_header, FeatureMatrix};
use crate::rng;
use crate::{Error, Result};

pub(crate) const PROJECTION_MAGIC: &[u8; 4] = b"GFPJ";

/// The projector is stored densely, so feature width is capped.
pub const MAX_DENSE_DIMS: usize = 4096;

/// Orthogonalized directions shorter than this are dropped.
const MIN_DIRECTION_NORM: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InlpParams {
    pub max_iters: usize,
    /// Guard accuracy (fraction) allowed above the majority rate at exit.
    pub stop_margin: f64,
    pub guard: TrainConfig,
}

impl Default for InlpParams {
    fn default() -> Self {
        InlpParams {
            max_iters: 30,
            stop_margin: 0.02,
            guard: TrainConfig::default(),
        }
    }
}

/// `P = I - sum_k w_k w_k^T` over orthonormal removed directions.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    dims: usize,
    matrix: Vec<f64>,
    removed_directions: Vec<Vec<f64>>,
    pub iterations_run: usize,
    /// Guard accuracy before each removal, plus the final check.
    pub guard_accuracy_trace: Vec<f64>,
    pub majority_rate: f64,
}

impl Projection {
    pub fn identity(dims: usize) -> Self {
        Self::from_directions(dims, Vec::new()).expect("identity projection")
    }

    /// Builds the projector from unit directions that are mutually orthogonal.
    pub fn from_directions(dims: usize, directions: Vec<Vec<f64>>) -> Result<Self> {
        if dims > MAX_DENSE_DIMS {
            return Err(Error::invalid(format!(
                "projection over {dims} dimensions exceeds the dense limit of {MAX_DENSE_DIMS}; \
                 reduce max_features or use embeddings"
            )));
        }
        if directions.len() > dims {
            return Err(Error::invalid(format!(
                "{} directions in {dims} dimensions",
                directions.len()
            )));
        }
        for (i, w) in directions.iter().enumerate() {
            if w.len() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    actual: w.len(),
                });
            }
            if (dot(w, w) - 1.0).abs() > 1e-4 {
                return Err(Error::invalid(format!("direction {i} is not unit length")));
            }
            for v in &directions[..i] {
                if dot(v, w).abs() > 1e-4 {
                    return Err(Error::invalid(format!(
                        "direction {i} is not orthogonal to the earlier ones"
                    )));
                }
            }
        }
        let mut matrix = vec![0.0; dims * dims];
        for i in 0..dims {
            matrix[i * dims + i] = 1.0;
        }
        for w in &directions {
            for i in 0..dims {
                if w[i] == 0.0 {
                    continue;
                }
                let row = &mut matrix[i * dims..(i + 1) * dims];
                for (m, wj) in row.iter_mut().zip(w) {
                    *m -= w[i] * wj;
                }
            }
        }
        Ok(Projection {
            dims,
            matrix,
            iterations_run: 0,
            guard_accuracy_trace: Vec::new(),
            majority_rate: 0.0,
            removed_directions: directions,
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Row-major `dims x dims`.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn removed_directions(&self) -> &[Vec<f64>] {
        &self.removed_directions
    }

    pub fn rank(&self) -> usize {
        self.dims - self.removed_directions.len()
    }

    /// `P x` for one vector.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        for w in &self.removed_directions {
            let c = dot(w, &out);
            for (o, wi) in out.iter_mut().zip(w) {
                *o -= c * wi;
            }
        }
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let d = self.dims;
        let k = self.removed_directions.len();
        let mut out = Vec::with_capacity(20 + 4 * (d * d + k * d));
        out.extend_from_slice(PROJECTION_MAGIC);
        out.extend_from_slice(&(d as u64).to_le_bytes());
        out.extend_from_slice(&(k as u64).to_le_bytes());
        for v in self.matrix.iter().chain(self.removed_directions.iter().flatten()) {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out
    }

    /// Reads a projection and checks the stored matrix against its directions.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (header, body) = read_header(bytes, PROJECTION_MAGIC, 2)?;
        let (d, k) = (header[0], header[1]);
        let expected = d
            .checked_mul(d)
            .and_then(|dd| k.checked_mul(d).and_then(|kd| dd.checked_add(kd)))
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::invalid("projection header overflows"))?;
        if body.len() != expected {
            return Err(Error::invalid(format!(
                "projection body has {} bytes, header implies {expected}",
                body.len()
            )));
        }
        let floats: Vec<f64> = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        if let Some(pos) = floats.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / d.max(1),
                col: pos % d.max(1),
            });
        }
        let directions: Vec<Vec<f64>> = floats[d * d..].chunks(d.max(1)).map(|c| c.to_vec()).collect();
        let directions = orthonormalize_stored(directions);
        let p = Self::from_directions(d, directions)?;
        let drift = p
            .matrix
            .iter()
            .zip(&floats[..d * d])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if drift > 1e-4 {
            return Err(Error::invalid(format!(
                "stored projector disagrees with its directions by {drift:.2e}"
            )));
        }
        Ok(Projection {
            iterations_run: p.removed_directions.len(),
            ..p
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Directions read back from f32 are renormalized in f64.
fn orthonormalize_stored(directions: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(directions.len());
    for w in directions {
        if let Some(u) = gram_schmidt(&w, &out) {
            out.push(u);
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthogonalizes `w` against orthonormal `basis` (two passes) and normalizes.
fn gram_schmidt(w: &[f64], basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let mut v = w.to_vec();
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, &v);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= c * bi;
            }
        }
    }
    let norm = dot(&v, &v).sqrt();
    if !(norm >= MIN_DIRECTION_NORM) {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(v)
}

/// Directions a fitted guard separates groups along. Two groups give the
/// single difference of the class rows; more groups give every row minus the
/// row mean.
fn guard_directions(guard: &classifier::LinearModel) -> Vec<Vec<f64>> {
    let g = guard.classes();
    if g == 2 {
        let (a, b) = (guard.weight_row(0), guard.weight_row(1));
        return vec![b.iter().zip(a).map(|(x, y)| x - y).collect()];
    }
    let d = guard.dims();
    let mut mean = vec![0.0; d];
    for z in 0..g {
        for (m, w) in mean.iter_mut().zip(guard.weight_row(z)) {
            *m += w / g as f64;
        }
    }
    (0..g)
        .map(|z| guard.weight_row(z).iter().zip(&mean).map(|(w, m)| w - m).collect())
        .collect()
}

fn to_matrix(rows: usize, dims: usize, x: &[f64]) -> Result<FeatureMatrix> {
    FeatureMatrix::new(rows, dims, x.iter().map(|&v| v as f32).collect())
}

fn accuracy(pred: &[ClassId], truth: &[ClassId]) -> f64 {
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}

/// Fits the projector on training features and their group ids.
pub fn inlp_fit(features: &FeatureMatrix, groups: &[GroupId], params: &InlpParams) -> Result<Projection> {
    let (n, d) = (features.rows(), features.dims());
    if groups.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: groups.len(),
        });
    }
    if n == 0 {
        return Err(Error::invalid("INLP needs at least one row"));
    }
    if d > MAX_DENSE_DIMS {
        return Err(Error::invalid(format!(
            "INLP over {d} features exceeds the dense projector limit of {MAX_DENSE_DIMS}; \
             reduce max_features or use embeddings"
        )));
    }
    if !(params.stop_margin >= 0.0) {
        return Err(Error::invalid("stop_margin must be non-negative"));
    }
    let num_groups = groups.iter().map(|g| g.0).max().unwrap_or(0) + 1;
    let mut counts = vec![0usize; num_groups];
    for g in groups {
        counts[g.0] += 1;
    }
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::invalid("INLP needs rows from at least two groups"));
    }
    let majority = *counts.iter().max().unwrap() as f64 / n as f64;
    let target: Vec<ClassId> = groups.iter().map(|g| ClassId(g.0)).collect();

    let mut x: Vec<f64> = features.values().iter().map(|&v| v as f64).collect();
    let mut directions: Vec<Vec<f64>> = Vec::new();
    let mut trace = Vec::new();

    for iter in 0..=params.max_iters {
        let current = to_matrix(n, d, &x)?;
        let guard = classifier::train_on_stream(&current, &target, num_groups, &params.guard, rng::stream::GUARD)?;
        let acc = accuracy(&classifier::predict(&guard, &current)?, &target);
        trace.push(acc);
        log::debug!("inlp iteration {iter}: guard accuracy {acc:.4} (majority {majority:.4})");
        if acc <= majority + params.stop_margin || iter == params.max_iters {
            break;
        }
        let mut added = Vec::new();
        for w in guard_directions(&guard) {
            if let Some(u) = gram_schmidt(&w, &directions) {
                directions.push(u.clone());
                added.push(u);
            }
        }
        if added.is_empty() {
            return Err(Error::invalid(format!(
                "guard accuracy {acc:.4} is above majority {majority:.4} + margin but no \
                 independent direction remains ({} of {d} removed)",
                directions.len()
            )));
        }
        for u in &added {
            for row in x.chunks_mut(d) {
                let c = dot(row, u);
                for (v, ui) in row.iter_mut().zip(u) {
                    *v -= c * ui;
                }
            }
        }
    }

    let mut p = Projection::from_directions(d, directions)?;
    p.iterations_run = trace.len() - 1;
    p.guard_accuracy_trace = trace;
    p.majority_rate = majority;
    Ok(p)
}

/// Projects every row.
pub fn inlp_apply(projection: &Projection, features: &FeatureMatrix) -> Result<FeatureMatrix> {
    if features.dims() != projection.dims {
        return Err(Error::DimensionMismatch {
            expected: projection.dims,
            actual: features.dims(),
        });
    }
    let mut values = Vec::with_capacity(features.values().len());
    for row in features.iter_rows() {
        let x: Vec<f64> = row.iter().map(|&v| v as f64).collect();
        values.extend(projection.project(&x).into_iter().map(|v| v as f32));
    }
    let mut out = FeatureMatrix::new(features.rows(), features.dims(), values)?;
    out.row_ids = features.row_ids.clone();
    Ok(out)
}
