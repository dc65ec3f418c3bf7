//! Equality-of-opportunity post-processing by randomized demotion.
//!
//! On a calibration split the per-class TPR of each group is measured; a
//! prediction `p` for a group whose TPR exceeds the class minimum is demoted
//! with probability `1 - min / tpr`, which in expectation brings every group
//! down to the worst group's rate.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{ClassId, GroupId};
use crate::rng;
use crate::{Error, Result};

/// Where a demoted prediction goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    /// The most probable class other than the current prediction.
    #[default]
    SecondBest,
    /// A fixed class id.
    AbstainClass(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EoPolicy {
    /// `theta[class][group]`, demotion probability.
    pub theta: Vec<Vec<f64>>,
    pub fallback: Fallback,
    /// Calibration TPR as a fraction; `None` for empty cells.
    pub calibration_tpr: Vec<Vec<Option<f64>>>,
    /// Minimum calibration TPR per class over the non-empty cells.
    pub target_tpr: Vec<Option<f64>>,
}

impl EoPolicy {
    pub fn identity(classes: usize, groups: usize) -> Self {
        EoPolicy {
            theta: vec![vec![0.0; groups]; classes],
            fallback: Fallback::SecondBest,
            calibration_tpr: vec![vec![None; groups]; classes],
            target_tpr: vec![None; classes],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.theta.len()
    }

    pub fn num_groups(&self) -> usize {
        self.theta.first().map_or(0, Vec::len)
    }
}

fn check_lengths(predictions: &[ClassId], groups: &[GroupId], proba: &[Vec<f64>], classes: usize) -> Result<()> {
    if predictions.len() != groups.len() || proba.len() != groups.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} predictions, {} groups, {} probability rows",
            predictions.len(),
            groups.len(),
            proba.len()
        )));
    }
    if let Some(i) = proba.iter().position(|p| p.len() != classes) {
        return Err(Error::invalid(format!(
            "probability row {i} has {} entries for {classes} classes",
            proba[i].len()
        )));
    }
    Ok(())
}

/// Measures calibration TPRs and derives demotion probabilities.
pub fn eo_calibrate(
    predictions: &[ClassId],
    labels: &[ClassId],
    groups: &[GroupId],
    proba: &[Vec<f64>],
    classes: usize,
    num_groups: usize,
    fallback: Fallback,
) -> Result<EoPolicy> {
    check_lengths(predictions, groups, proba, classes)?;
    if labels.len() != groups.len() {
        return Err(Error::DimensionMismatch {
            expected: groups.len(),
            actual: labels.len(),
        });
    }
    if let Fallback::AbstainClass(c) = fallback {
        if c >= classes {
            return Err(Error::invalid(format!("abstain class {c} outside [0, {classes})")));
        }
    }
    let mut support = vec![vec![0u64; num_groups]; classes];
    let mut hits = vec![vec![0u64; num_groups]; classes];
    for ((&p, &y), &z) in predictions.iter().zip(labels).zip(groups) {
        if y.0 >= classes || p.0 >= classes || z.0 >= num_groups {
            return Err(Error::invalid(format!(
                "id outside catalogs (prediction {}, label {}, group {})",
                p.0, y.0, z.0
            )));
        }
        support[y.0][z.0] += 1;
        if p == y {
            hits[y.0][z.0] += 1;
        }
    }
    let mut policy = EoPolicy::identity(classes, num_groups);
    policy.fallback = fallback;
    for c in 0..classes {
        for z in 0..num_groups {
            if support[c][z] == 0 {
                log::warn!("EO calibration cell (class {c}, group {z}) is empty; theta set to 0");
            } else {
                policy.calibration_tpr[c][z] = Some(hits[c][z] as f64 / support[c][z] as f64);
            }
        }
        let target = policy.calibration_tpr[c]
            .iter()
            .flatten()
            .copied()
            .fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.min(t))));
        policy.target_tpr[c] = target;
        let Some(target) = target else { continue };
        if target <= 0.0 {
            continue;
        }
        for z in 0..num_groups {
            if let Some(t) = policy.calibration_tpr[c][z] {
                if t > target {
                    policy.theta[c][z] = (1.0 - target / t).clamp(0.0, 1.0);
                }
            }
        }
    }
    Ok(policy)
}

fn second_best(proba: &[f64], current: usize) -> usize {
    let mut best: Option<usize> = None;
    for (k, &p) in proba.iter().enumerate() {
        if k != current && best.is_none_or(|b| p > proba[b]) {
            best = Some(k);
        }
    }
    best.unwrap_or(current)
}

/// Demotes each prediction with its cell's probability, drawing one uniform
/// per example from the seeded EO stream.
pub fn eo_apply(
    policy: &EoPolicy,
    predictions: &[ClassId],
    groups: &[GroupId],
    proba: &[Vec<f64>],
    seed: u64,
) -> Result<Vec<ClassId>> {
    let classes = policy.num_classes();
    check_lengths(predictions, groups, proba, classes)?;
    let mut rng = rng::derive(seed, rng::stream::EO);
    predictions
        .iter()
        .zip(groups)
        .zip(proba)
        .map(|((&p, &z), probs)| {
            let theta = policy
                .theta
                .get(p.0)
                .and_then(|row| row.get(z.0))
                .copied()
                .ok_or_else(|| Error::invalid(format!("no theta for class {} group {}", p.0, z.0)))?;
            let u: f64 = rng.random();
            if u < theta {
                Ok(ClassId(match policy.fallback {
                    Fallback::SecondBest => second_best(probs, p.0),
                    Fallback::AbstainClass(c) => c,
                }))
            } else {
                Ok(p)
            }
        })
        .collect()
}
