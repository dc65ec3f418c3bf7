//! Repeated seeded runs and Welch's two-sample t-test over their metrics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::corpus::Splits;
use crate::debias::pipeline::{run_pipeline, PipelineConfig, PipelineManifest};
use crate::metrics::{evaluate, EvalResult};
use crate::{Error, Result};

/// Significance threshold for underlining.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    /// Infinite when both samples are constant with different means.
    #[serde(with = "signed_inf")]
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p: f64,
}

/// JSON has no infinities; write them as the strings `inf` and `-inf`.
mod signed_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of
/// freedom. `t` is positive when `a` has the larger mean.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::invalid(format!(
            "t-test needs at least 2 values per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::invalid("t-test samples must be finite"));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    if se2 == 0.0 {
        let df = na + nb - 2.0;
        return Ok(if ma == mb {
            WelchResult { t: 0.0, df, p: 1.0 }
        } else {
            WelchResult {
                t: if ma > mb { f64::INFINITY } else { f64::NEG_INFINITY },
                df,
                p: 0.0,
            }
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::invalid(format!("t distribution: {e}")))?;
    let p = (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0);
    Ok(WelchResult { t, df, p })
}

/// One metric across seeded runs, optionally tested against a baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAggregate {
    pub metric: String,
    pub values: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
    pub baseline_values: Option<Vec<f64>>,
    pub baseline_mean: Option<f64>,
    pub test: Option<WelchResult>,
    pub significant: bool,
}

impl RunAggregate {
    pub fn new(metric: impl Into<String>, values: Vec<f64>, baseline: Option<Vec<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("aggregate needs at least one value"));
        }
        let (mean, var) = mean_var(&values);
        let std = if values.len() > 1 { var.sqrt() } else { 0.0 };
        let test = match &baseline {
            Some(b) => Some(welch_t_test(&values, b)?),
            None => None,
        };
        Ok(RunAggregate {
            metric: metric.into(),
            baseline_mean: baseline.as_ref().map(|b| b.iter().sum::<f64>() / b.len() as f64),
            baseline_values: baseline,
            mean,
            std,
            significant: test.is_some_and(|t| t.p < ALPHA),
            test,
            values,
        })
    }
}

/// Test-split evaluation of one seeded pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub eval: EvalResult,
    pub manifest: PipelineManifest,
}

/// Runs the pipeline once per seed (in parallel) and evaluates each on the
/// test split. Results come back in seed order.
pub fn run_repeated(splits: &Splits, config: &PipelineConfig, seeds: &[u64]) -> Result<Vec<RunRecord>> {
    if seeds.len() < 2 {
        return Err(Error::invalid(format!(
            "repeated runs need at least 2 seeds, got {}",
            seeds.len()
        )));
    }
    let test = &splits.test;
    seeds
        .par_iter()
        .enumerate()
        .map(|(i, &seed)| {
            let run = || -> Result<RunRecord> {
                let out = run_pipeline(splits, &config.with_seed(seed))?;
                let eval = evaluate(
                    &out.test_predictions,
                    &test.labels(),
                    &test.groups(),
                    &test.class_names,
                    &test.group_names,
                )?;
                Ok(RunRecord {
                    seed,
                    eval,
                    manifest: out.manifest,
                })
            };
            run().map_err(|e| e.in_stage(&format!("run {} (seed {seed})", i + 1)))
        })
        .collect()
}

/// Scalar metrics tracked per run: accuracy, GAP RMS and per-group TPR.
pub fn run_metrics(eval: &EvalResult) -> Vec<(String, Option<f64>)> {
    let mut out = vec![
        ("accuracy".to_string(), eval.accuracy),
        ("gap_rms".to_string(), eval.gap_rms),
    ];
    for (name, tpr) in eval.group_names.iter().zip(&eval.group_tpr) {
        out.push((format!("tpr_{name}"), *tpr));
    }
    out
}

/// Aggregates each scalar metric, testing against `baseline` runs when given.
pub fn aggregate_runs(runs: &[RunRecord], baseline: Option<&[RunRecord]>) -> Result<Vec<RunAggregate>> {
    let first = runs.first().ok_or_else(|| Error::invalid("no runs to aggregate"))?;
    let collect = |records: &[RunRecord], k: usize, name: &str| -> Result<Vec<f64>> {
        records
            .iter()
            .map(|r| {
                run_metrics(&r.eval)[k]
                    .1
                    .ok_or_else(|| Error::invalid(format!("metric {name} undefined for seed {}", r.seed)))
            })
            .collect()
    };
    run_metrics(&first.eval)
        .iter()
        .enumerate()
        .map(|(k, (name, _))| {
            let values = collect(runs, k, name)?;
            let base = baseline.map(|b| collect(b, k, name)).transpose()?;
            RunAggregate::new(name.clone(), values, base)
        })
        .collect()
}
