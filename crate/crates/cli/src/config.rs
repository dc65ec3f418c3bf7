//! TOML run configuration.
//!
//! ```toml
//! seeds = [1, 2, 3, 4, 5]
//!
//! [data]
//! train = "splits/train.jsonl"
//! dev = "splits/dev.jsonl"
//! test = "splits/test.jsonl"
//!
//! [debiased]
//! name = "inlp"
//! [[debiased.stages]]
//! kind = "inlp"
//! ```
//!
//! `[data]` takes either three split files, a single `input` plus a `[data.split]`
//! block, or a `[data.synthetic]` generator block. `[baseline]` defaults to the
//! debiased pipeline with its stages removed. Relative paths resolve against
//! the config file's directory.

use std::path::{Path, PathBuf};

use gapfair::corpus::{
    generate_synthetic, load_dataset, load_datasets, split, DataFormat, SplitSpec, Splits, SyntheticConfig,
};
use gapfair::debias::pipeline::{Featurizer, PipelineConfig, Stage};
use gapfair::metrics::Epsilons;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dev: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticConfig>,
    /// `jsonl` or `csv`; inferred from extensions when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run_id: Option<String>,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    pub data: DataConfig,
    #[serde(default)]
    pub baseline: Option<PipelineConfig>,
    pub debiased: PipelineConfig,
    #[serde(default)]
    pub epsilons: Epsilons,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn resolve_pipeline(base: &Path, cfg: &mut PipelineConfig) {
    if let Featurizer::Embeddings(paths) = &mut cfg.featurizer {
        paths.train = resolve(base, &paths.train);
        paths.dev = resolve(base, &paths.dev);
        paths.test = resolve(base, &paths.test);
    }
    if let Featurizer::Bow(p) = &mut cfg.featurizer {
        if !matches!(p.stopwords.as_str(), "default" | "none" | "") {
            p.stopwords = resolve(base, Path::new(&p.stopwords)).to_string_lossy().into_owned();
        }
    }
    for stage in &mut cfg.stages {
        if let Stage::Cda(p) = stage {
            if let Some(l) = &p.lexicon {
                p.lexicon = Some(resolve(base, l));
            }
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Data(format!("{}: {e}", origin.display())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text, path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.data.train, &mut self.data.dev, &mut self.data.test, &mut self.data.input]
            .into_iter()
            .flatten()
        {
            *p = resolve(base, p);
        }
        resolve_pipeline(base, &mut self.debiased);
        if let Some(b) = &mut self.baseline {
            resolve_pipeline(base, b);
        }
    }

    /// Fills every default so the echoed config pins the run completely.
    pub fn complete(mut self, seeds_override: Option<Vec<u64>>, run_id: Option<String>) -> Self {
        if self.baseline.is_none() {
            self.baseline = Some(PipelineConfig {
                name: "original".into(),
                stages: Vec::new(),
                ..self.debiased.clone()
            });
        }
        if let Some(s) = seeds_override {
            self.seeds = Some(s);
        }
        if self.seeds.is_none() {
            self.seeds = Some(DEFAULT_SEEDS.to_vec());
        }
        if run_id.is_some() {
            self.run_id = run_id;
        }
        if self.data.input.is_some() && self.data.split.is_none() {
            self.data.split = Some(SplitSpec::default());
        }
        if let Some(syn) = &self.data.synthetic {
            if self.data.split.is_none() {
                self.data.split = Some(SplitSpec {
                    seed: syn.seed,
                    ..SplitSpec::default()
                });
            }
        }
        self
    }

    pub fn baseline(&self) -> &PipelineConfig {
        self.baseline.as_ref().expect("completed config has a baseline")
    }

    pub fn seeds(&self) -> &[u64] {
        self.seeds.as_deref().expect("completed config has seeds")
    }

    /// Files whose digests go into the manifest.
    pub fn input_files(&self) -> Vec<PathBuf> {
        let mut files: Vec<PathBuf> = [&self.data.train, &self.data.dev, &self.data.test, &self.data.input]
            .into_iter()
            .flatten()
            .cloned()
            .collect();
        for cfg in [Some(&self.debiased), self.baseline.as_ref()].into_iter().flatten() {
            if let Featurizer::Embeddings(p) = &cfg.featurizer {
                files.extend([p.train.clone(), p.dev.clone(), p.test.clone()]);
            }
            if let Featurizer::Bow(p) = &cfg.featurizer {
                if !matches!(p.stopwords.as_str(), "default" | "none" | "") {
                    files.push(PathBuf::from(&p.stopwords));
                }
            }
            for s in &cfg.stages {
                if let Stage::Cda(c) = s {
                    files.extend(c.lexicon.clone());
                }
            }
        }
        files.sort();
        files.dedup();
        files
    }

    pub fn load_splits(&self) -> Result<Splits, CliError> {
        let d = &self.data;
        let fmt = |p: &Path| -> Result<DataFormat, CliError> {
            match d.format.as_deref() {
                Some("jsonl") => Ok(DataFormat::Jsonl),
                Some("csv") => Ok(DataFormat::Csv),
                Some(other) => Err(CliError::Data(format!("unknown data format `{other}`"))),
                None => DataFormat::from_path(p).ok_or_else(|| {
                    CliError::Data(format!("{}: cannot infer format; set data.format", p.display()))
                }),
            }
        };
        let sources = [d.train.is_some() as u8, d.input.is_some() as u8, d.synthetic.is_some() as u8];
        if sources.iter().sum::<u8>() != 1 {
            return Err(CliError::Data(
                "[data] needs exactly one of: train/dev/test files, `input`, or a [data.synthetic] block".into(),
            ));
        }
        if let (Some(tr), Some(dv), Some(te)) = (&d.train, &d.dev, &d.test) {
            let mut sets = load_datasets(&[tr, dv, te], fmt(tr)?)?;
            let test = sets.pop().unwrap();
            let dev = sets.pop().unwrap();
            let train = sets.pop().unwrap();
            return Ok(Splits { train, dev, test });
        }
        if d.train.is_some() {
            return Err(CliError::Data("[data] split files need all of train, dev and test".into()));
        }
        let spec = d.split.clone().unwrap_or_default();
        let dataset = match (&d.input, &d.synthetic) {
            (Some(p), _) => load_dataset(p, fmt(p)?)?,
            (_, Some(s)) => generate_synthetic(s)?,
            _ => unreachable!(),
        };
        Ok(split(&dataset, &spec)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config_and_fills_defaults() {
        let text = r#"
            [data]
            input = "bios.jsonl"
            [debiased]
            name = "inlp"
            [[debiased.stages]]
            kind = "inlp"
            max_iters = 5
        "#;
        let mut cfg = RunConfig::parse(text, Path::new("x.toml")).unwrap();
        cfg.resolve_paths(Path::new("/cfg"));
        let cfg = cfg.complete(None, None);
        assert_eq!(cfg.data.input.as_deref(), Some(Path::new("/cfg/bios.jsonl")));
        assert_eq!(cfg.seeds(), DEFAULT_SEEDS);
        assert!(cfg.baseline().stages.is_empty());
        assert_eq!(cfg.baseline().featurizer, cfg.debiased.featurizer);
        assert_eq!(cfg.data.split, Some(SplitSpec::default()));
    }

    #[test]
    fn unknown_stage_is_named() {
        let text = r#"
            [data]
            input = "a.jsonl"
            [debiased]
            [[debiased.stages]]
            kind = "adversarial"
        "#;
        let err = RunConfig::parse(text, Path::new("x.toml")).unwrap_err().to_string();
        assert!(err.contains("adversarial"), "{err}");
    }
}
