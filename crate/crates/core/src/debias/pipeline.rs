//! Stage composition: `cda -> featurize -> inlp -> train | decoupled -> eo`.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::cda::cda_augment;
use super::decoupled::{train_decoupled, DecoupledModel};
use super::eo::{eo_apply, eo_calibrate, EoPolicy, Fallback};
use super::inlp::{inlp_apply, inlp_fit, InlpParams, Projection};
use crate::classifier::{self, LinearModel, TrainConfig};
use crate::corpus::{remove_stopwords, ClassId, Dataset, GroupId, Splits, Stopwords, SwapLexicon};
use crate::features::{fit_bow, load_embeddings_for, transform, FeatureMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CdaParams {
    /// Toggle the group of each swapped copy (two groups only).
    pub flip_group: bool,
    /// Tab-separated word pairs; the built-in gender list when absent.
    pub lexicon: Option<PathBuf>,
}

impl Default for CdaParams {
    fn default() -> Self {
        CdaParams {
            flip_group: true,
            lexicon: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EoParams {
    pub fallback: Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stage {
    Cda(CdaParams),
    Inlp(InlpParams),
    Decoupled,
    Eo(EoParams),
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Cda(_) => "cda",
            Stage::Inlp(_) => "inlp",
            Stage::Decoupled => "decoupled",
            Stage::Eo(_) => "eo",
        }
    }

    fn rank(&self) -> usize {
        match self {
            Stage::Cda(_) => 0,
            Stage::Inlp(_) => 1,
            Stage::Decoupled => 2,
            Stage::Eo(_) => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BowParams {
    pub min_df: usize,
    pub max_features: usize,
    pub tfidf: bool,
    /// `"default"`, `"none"`, or a path to a one-word-per-line file.
    pub stopwords: String,
}

impl Default for BowParams {
    fn default() -> Self {
        BowParams {
            min_df: 2,
            max_features: 50_000,
            tfidf: true,
            stopwords: "default".into(),
        }
    }
}

impl BowParams {
    fn stopword_set(&self) -> Result<Stopwords> {
        match self.stopwords.as_str() {
            "default" => Ok(Stopwords::default()),
            "none" | "" => Ok(Stopwords::empty()),
            path => Stopwords::load(std::path::Path::new(path)),
        }
    }
}

/// Precomputed row-aligned embeddings, one file per split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingPaths {
    pub train: PathBuf,
    pub dev: PathBuf,
    pub test: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Featurizer {
    Bow(BowParams),
    Embeddings(EmbeddingPaths),
}

impl Default for Featurizer {
    fn default() -> Self {
        Featurizer::Bow(BowParams::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub name: String,
    pub stages: Vec<Stage>,
    pub featurizer: Featurizer,
    pub train: TrainConfig,
    /// Drives classifier batch order, INLP guards and EO draws. Overrides the
    /// seeds inside `train` and any guard config.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            name: "baseline".into(),
            stages: Vec::new(),
            featurizer: Featurizer::default(),
            train: TrainConfig::default(),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        for pair in self.stages.windows(2) {
            if pair[0].rank() == pair[1].rank() {
                return Err(Error::invalid(format!(
                    "stage `{}` appears more than once",
                    pair[1].name()
                )));
            }
            if pair[0].rank() > pair[1].rank() {
                return Err(Error::invalid(format!(
                    "stage `{}` cannot come after `{}`; order is cda, inlp, decoupled, eo",
                    pair[1].name(),
                    pair[0].name()
                )));
            }
        }
        let mut seen = [false; 4];
        for s in &self.stages {
            if std::mem::replace(&mut seen[s.rank()], true) {
                return Err(Error::invalid(format!("stage `{}` appears more than once", s.name())));
            }
        }
        if matches!(self.featurizer, Featurizer::Embeddings(_)) && self.stage(0).is_some() {
            return Err(Error::invalid(
                "stage `cda` rewrites text and cannot precede precomputed embeddings",
            ));
        }
        self.train.validate()
    }

    fn stage(&self, rank: usize) -> Option<&Stage> {
        self.stages.iter().find(|s| s.rank() == rank)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        PipelineConfig {
            seed,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Single(LinearModel),
    Decoupled(DecoupledModel),
}

impl TrainedModel {
    pub fn predict(&self, features: &FeatureMatrix, groups: &[GroupId]) -> Result<Vec<ClassId>> {
        match self {
            TrainedModel::Single(m) => classifier::predict(m, features),
            TrainedModel::Decoupled(d) => d.predict(features, groups),
        }
    }

    pub fn predict_proba(&self, features: &FeatureMatrix, groups: &[GroupId]) -> Result<Vec<Vec<f64>>> {
        match self {
            TrainedModel::Single(m) => classifier::predict_proba(m, features),
            TrainedModel::Decoupled(d) => d.predict_proba(features, groups),
        }
    }

    fn training_summaries(&self) -> Vec<TrainingSummary> {
        let models: Vec<&LinearModel> = match self {
            TrainedModel::Single(m) => vec![m],
            TrainedModel::Decoupled(d) => d.models.iter().collect(),
        };
        models
            .into_iter()
            .filter_map(|m| m.meta.as_ref())
            .map(|meta| TrainingSummary {
                epochs_run: meta.epochs_run,
                initial_loss: meta.initial_loss,
                final_loss: meta.final_loss,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub epochs_run: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InlpSummary {
    pub iterations_run: usize,
    pub removed_directions: usize,
    pub guard_accuracy_trace: Vec<f64>,
    pub majority_rate: f64,
}

/// Everything needed to understand and repeat a pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineManifest {
    pub config: PipelineConfig,
    pub executed_stages: Vec<String>,
    pub train_rows: usize,
    pub dev_rows: usize,
    pub test_rows: usize,
    pub feature_dims: usize,
    pub training: Vec<TrainingSummary>,
    pub inlp: Option<InlpSummary>,
    pub eo: Option<EoPolicy>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub model: TrainedModel,
    pub projection: Option<Projection>,
    pub eo_policy: Option<EoPolicy>,
    /// Final test predictions, after EO when present.
    pub test_predictions: Vec<ClassId>,
    pub manifest: PipelineManifest,
}

fn strip_stopwords(data: &Dataset, stopwords: &Stopwords) -> Dataset {
    let mut out = data.clone();
    for ex in &mut out.examples {
        ex.tokens = remove_stopwords(&ex.tokens, stopwords);
    }
    out
}

/// Runs the configured stages on fixed splits.
pub fn run_pipeline(splits: &Splits, config: &PipelineConfig) -> Result<PipelineOutput> {
    config.validate()?;
    let classes = splits.train.num_classes();
    let num_groups = splits.train.num_groups();
    let mut executed = Vec::new();

    let mut train_data = splits.train.clone();
    if let Some(Stage::Cda(p)) = config.stage(0) {
        let lexicon = match &p.lexicon {
            Some(path) => SwapLexicon::load(path),
            None => Ok(SwapLexicon::default()),
        }
        .map_err(|e| e.in_stage("cda"))?;
        train_data = cda_augment(&train_data, &lexicon, p.flip_group).map_err(|e| e.in_stage("cda"))?;
        executed.push("cda".to_string());
    }

    let (mut x_train, mut x_dev, mut x_test) = (|| -> Result<_> {
        match &config.featurizer {
            Featurizer::Bow(p) => {
                let sw = p.stopword_set()?;
                let train_sw = strip_stopwords(&train_data, &sw);
                let vocab = fit_bow(&train_sw, p.min_df, p.max_features, p.tfidf)?;
                Ok((
                    transform(&vocab, &train_sw),
                    transform(&vocab, &strip_stopwords(&splits.dev, &sw)),
                    transform(&vocab, &strip_stopwords(&splits.test, &sw)),
                ))
            }
            Featurizer::Embeddings(paths) => {
                let tr = load_embeddings_for(&paths.train, &train_data)?;
                let dv = load_embeddings_for(&paths.dev, &splits.dev)?;
                let te = load_embeddings_for(&paths.test, &splits.test)?;
                if dv.dims() != tr.dims() || te.dims() != tr.dims() {
                    return Err(Error::invalid(format!(
                        "embedding widths differ across splits: {}, {}, {}",
                        tr.dims(),
                        dv.dims(),
                        te.dims()
                    )));
                }
                Ok((tr, dv, te))
            }
        }
    })()
    .map_err(|e| e.in_stage("featurize"))?;
    executed.push("featurize".to_string());

    let train_groups = train_data.groups();
    let mut projection = None;
    if let Some(Stage::Inlp(p)) = config.stage(1) {
        let params = InlpParams {
            guard: TrainConfig {
                seed: config.seed,
                ..p.guard.clone()
            },
            ..p.clone()
        };
        let (proj, a, b, c) = (|| -> Result<_> {
            let proj = inlp_fit(&x_train, &train_groups, &params)?;
            let a = inlp_apply(&proj, &x_train)?;
            let b = inlp_apply(&proj, &x_dev)?;
            let c = inlp_apply(&proj, &x_test)?;
            Ok((proj, a, b, c))
        })()
        .map_err(|e| e.in_stage("inlp"))?;
        x_train = a;
        x_dev = b;
        x_test = c;
        projection = Some(proj);
        executed.push("inlp".to_string());
    }

    let train_cfg = TrainConfig {
        seed: config.seed,
        ..config.train.clone()
    };
    let labels = train_data.labels();
    let model = if config.stage(2).is_some() {
        executed.push("decoupled".to_string());
        TrainedModel::Decoupled(
            train_decoupled(&x_train, &labels, &train_groups, classes, &train_cfg)
                .map_err(|e| e.in_stage("decoupled"))?,
        )
    } else {
        executed.push("train".to_string());
        TrainedModel::Single(
            classifier::train(&x_train, &labels, classes, &train_cfg).map_err(|e| e.in_stage("train"))?,
        )
    };

    let test_groups = splits.test.groups();
    let mut test_predictions = model
        .predict(&x_test, &test_groups)
        .map_err(|e| e.in_stage("predict"))?;

    let mut eo_policy = None;
    if let Some(Stage::Eo(p)) = config.stage(3) {
        let (policy, preds) = (|| -> Result<_> {
            if splits.dev.is_empty() {
                return Err(Error::invalid("EO calibration needs a non-empty dev split"));
            }
            let dev_groups = splits.dev.groups();
            let dev_pred = model.predict(&x_dev, &dev_groups)?;
            let dev_proba = model.predict_proba(&x_dev, &dev_groups)?;
            let policy = eo_calibrate(
                &dev_pred,
                &splits.dev.labels(),
                &dev_groups,
                &dev_proba,
                classes,
                num_groups,
                p.fallback,
            )?;
            let test_proba = model.predict_proba(&x_test, &test_groups)?;
            let preds = eo_apply(&policy, &test_predictions, &test_groups, &test_proba, config.seed)?;
            Ok((policy, preds))
        })()
        .map_err(|e| e.in_stage("eo"))?;
        test_predictions = preds;
        eo_policy = Some(policy);
        executed.push("eo".to_string());
    }

    let manifest = PipelineManifest {
        config: config.clone(),
        executed_stages: executed,
        train_rows: train_data.len(),
        dev_rows: splits.dev.len(),
        test_rows: splits.test.len(),
        feature_dims: x_train.dims(),
        training: model.training_summaries(),
        inlp: projection.as_ref().map(|p| InlpSummary {
            iterations_run: p.iterations_run,
            removed_directions: p.removed_directions().len(),
            guard_accuracy_trace: p.guard_accuracy_trace.clone(),
            majority_rate: p.majority_rate,
        }),
        eo: eo_policy.clone(),
    };
    Ok(PipelineOutput {
        model,
        projection,
        eo_policy,
        test_predictions,
        manifest,
    })
}
