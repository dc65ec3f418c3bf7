//! Decoupled classifiers: one independently trained model per group, with
//! each example routed to the model of its observed group.

use rayon::prelude::*;

use crate::classifier::{self, LinearModel, TrainConfig};
use crate::corpus::{ClassId, GroupId};
use crate::features::FeatureMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DecoupledModel {
    /// Indexed by group id.
    pub models: Vec<LinearModel>,
}

impl DecoupledModel {
    pub fn num_groups(&self) -> usize {
        self.models.len()
    }

    fn route(&self, features: &FeatureMatrix, groups: &[GroupId]) -> Result<Vec<Vec<usize>>> {
        if features.rows() != groups.len() {
            return Err(Error::DimensionMismatch {
                expected: features.rows(),
                actual: groups.len(),
            });
        }
        let mut rows = vec![Vec::new(); self.models.len()];
        for (i, g) in groups.iter().enumerate() {
            rows.get_mut(g.0)
                .ok_or_else(|| Error::invalid(format!("no decoupled model for group {}", g.0)))?
                .push(i);
        }
        Ok(rows)
    }

    /// Scores each row with its own group's model; output is in row order.
    pub fn predict_proba(&self, features: &FeatureMatrix, groups: &[GroupId]) -> Result<Vec<Vec<f64>>> {
        let routes = self.route(features, groups)?;
        let mut out = vec![Vec::new(); features.rows()];
        for (model, rows) in self.models.iter().zip(&routes) {
            if rows.is_empty() {
                continue;
            }
            let proba = classifier::predict_proba(model, &features.select_rows(rows))?;
            for (&i, p) in rows.iter().zip(proba) {
                out[i] = p;
            }
        }
        Ok(out)
    }

    pub fn predict(&self, features: &FeatureMatrix, groups: &[GroupId]) -> Result<Vec<ClassId>> {
        let routes = self.route(features, groups)?;
        let mut out = vec![ClassId(0); features.rows()];
        for (model, rows) in self.models.iter().zip(&routes) {
            if rows.is_empty() {
                continue;
            }
            let pred = classifier::predict(model, &features.select_rows(rows))?;
            for (&i, p) in rows.iter().zip(pred) {
                out[i] = p;
            }
        }
        Ok(out)
    }
}

/// Trains one model per group on that group's rows with the shared config.
///
/// Every group id below the largest one present must have rows spanning at
/// least two classes.
pub fn train_decoupled(
    features: &FeatureMatrix,
    labels: &[ClassId],
    groups: &[GroupId],
    classes: usize,
    config: &TrainConfig,
) -> Result<DecoupledModel> {
    if features.rows() != labels.len() || labels.len() != groups.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} rows, {} labels, {} groups",
            features.rows(),
            labels.len(),
            groups.len()
        )));
    }
    let num_groups = groups.iter().map(|g| g.0 + 1).max().unwrap_or(0);
    let mut rows = vec![Vec::new(); num_groups];
    for (i, g) in groups.iter().enumerate() {
        rows[g.0].push(i);
    }
    for (g, r) in rows.iter().enumerate() {
        let distinct = r.iter().map(|&i| labels[i]).collect::<std::collections::BTreeSet<_>>();
        if distinct.len() < 2 {
            return Err(Error::invalid(format!(
                "group {g} has {} training rows covering {} class(es); need at least two classes",
                r.len(),
                distinct.len()
            )));
        }
    }
    let models = rows
        .par_iter()
        .map(|r| {
            let x = features.select_rows(r);
            let y: Vec<ClassId> = r.iter().map(|&i| labels[i]).collect();
            classifier::train(&x, &y, classes, config)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecoupledModel { models })
}
