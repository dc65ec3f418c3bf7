use std::fs;
use std::path::{Path, PathBuf};

use gapfair::corpus::{
    generate_synthetic, load_dataset, remove_stopwords, split, DataFormat, Dataset, SplitSpec, Stopwords,
    SyntheticConfig,
};
use gapfair::features::hashed_embeddings;
use gapfair::metrics::{compare, Epsilons, EvalResult};
use gapfair::report::{self, emit, replay_published_table, Format, PublishedTable, Report};
use gapfair::stats::{aggregate_runs, run_repeated};
use serde::Serialize;

use crate::config::RunConfig;
use crate::manifest::{config_hash, output_digests, FileDigest, RunManifest};
use crate::{CliError, EmbedArgs, Globals, PrepareArgs, ReplayArgs, ReportArgs, RunArgs, SynthArgs};

const DEFAULT_OUT_DIR: &str = "gapfair-out";

fn out_root(g: &Globals) -> PathBuf {
    g.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn run_dir(g: &Globals, run_id: &str) -> Result<PathBuf, CliError> {
    if run_id.is_empty() || run_id.contains(['/', '\\']) || run_id == "." || run_id == ".." {
        return Err(CliError::Usage(format!("invalid run id `{run_id}`")));
    }
    let dir = out_root(g).join(run_id);
    fs::create_dir_all(&dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn data_format(path: &Path, flag: Option<&str>) -> Result<DataFormat, CliError> {
    match flag {
        Some("jsonl") => Ok(DataFormat::Jsonl),
        Some("csv") => Ok(DataFormat::Csv),
        Some(other) => Err(CliError::Usage(format!("unknown format `{other}`; use jsonl or csv"))),
        None => DataFormat::from_path(path)
            .ok_or_else(|| CliError::Usage(format!("{}: cannot infer format; pass --format", path.display()))),
    }
}

fn stopword_set(choice: &str) -> Result<Stopwords, CliError> {
    Ok(match choice {
        "default" => Stopwords::default(),
        "none" | "" => Stopwords::empty(),
        path => Stopwords::load(Path::new(path))?,
    })
}

#[derive(Serialize)]
struct PrepareConfig<'a> {
    input: &'a Path,
    format: &'a str,
    split: SplitSpec,
    stopwords: &'a str,
}

pub fn prepare(g: &Globals, a: &PrepareArgs) -> Result<(), CliError> {
    let fmt = data_format(&a.input, a.format.as_deref())?;
    let fractions: [f64; 3] = a
        .split
        .as_slice()
        .try_into()
        .map_err(|_| CliError::Usage("--split takes exactly three fractions".into()))?;
    let spec = SplitSpec {
        fractions,
        seed: g.seed.unwrap_or(0),
        stratified: !a.unstratified,
    };
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let sw = stopword_set(&a.stopwords)?;

    let mut data = load_dataset(&a.input, fmt)?;
    for ex in &mut data.examples {
        ex.tokens = remove_stopwords(&ex.tokens, &sw);
    }
    let splits = split(&data, &spec)?;

    let dir = run_dir(g, &a.run_id)?;
    let config = PrepareConfig {
        input: &a.input,
        format: match fmt {
            DataFormat::Jsonl => "jsonl",
            DataFormat::Csv => "csv",
        },
        split: spec.clone(),
        stopwords: &a.stopwords,
    };
    let mut manifest = RunManifest::new("prepare", &a.run_id, &config, vec![spec.seed])?;
    manifest.inputs.push(FileDigest::of(&a.input)?);
    if !matches!(a.stopwords.as_str(), "default" | "none" | "") {
        manifest.inputs.push(FileDigest::of(Path::new(&a.stopwords))?);
    }
    let mut outputs = Vec::new();
    for (name, set) in [("train", &splits.train), ("dev", &splits.dev), ("test", &splits.test)] {
        let path = dir.join(format!("{name}.jsonl"));
        set.write_jsonl(&path)?;
        outputs.push(path);
    }
    manifest.outputs = output_digests(&outputs)?;
    manifest.write(&dir)?;
    println!(
        "wrote {} train, {} dev, {} test examples to {}",
        splits.train.len(),
        splits.dev.len(),
        splits.test.len(),
        dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct RunRecords<'a> {
    baseline: &'a [gapfair::stats::RunRecord],
    debiased: &'a [gapfair::stats::RunRecord],
}

pub fn run(g: &Globals, a: &RunArgs) -> Result<(), CliError> {
    let (cfg, recorded_inputs) = match (&a.config, &a.manifest) {
        (Some(path), _) => (RunConfig::load(path)?.complete(g.seeds.clone(), a.run_id.clone()), None),
        (None, Some(path)) => {
            let m = RunManifest::load(path)?;
            if m.command != "run" {
                return Err(CliError::Data(format!(
                    "{} records a `{}` command, not `run`",
                    path.display(),
                    m.command
                )));
            }
            if config_hash(&m.config) != m.config_hash {
                return Err(CliError::Data(format!("{}: config hash does not match its config", path.display())));
            }
            m.verify_inputs()?;
            let cfg: RunConfig = serde_json::from_value(m.config.clone())
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let run_id = a.run_id.clone().or(cfg.run_id.clone());
            (cfg.complete(None, run_id), Some(m.inputs))
        }
        (None, None) => return Err(CliError::Usage("run needs --config or --manifest".into())),
    };
    cfg.debiased.validate()?;
    cfg.baseline().validate()?;
    let seeds = cfg.seeds().to_vec();

    let config_value = serde_json::to_value(&cfg).map_err(|e| CliError::Data(e.to_string()))?;
    let run_id = cfg
        .run_id
        .clone()
        .unwrap_or_else(|| config_hash(&config_value)[..12].to_string());
    let mut manifest = RunManifest::new("run", &run_id, &cfg, seeds.clone())?;
    manifest.inputs = match recorded_inputs {
        Some(inputs) => inputs,
        None => cfg
            .input_files()
            .iter()
            .map(|p| FileDigest::of(p))
            .collect::<Result<_, _>>()?,
    };

    let splits = cfg.load_splits()?;
    log::info!(
        "running {} seeds: {} train, {} dev, {} test",
        seeds.len(),
        splits.train.len(),
        splits.dev.len(),
        splits.test.len()
    );
    let base_runs = run_repeated(&splits, cfg.baseline(), &seeds)?;
    let deb_runs = run_repeated(&splits, &cfg.debiased, &seeds)?;

    let before = EvalResult::mean(&base_runs.iter().map(|r| r.eval.clone()).collect::<Vec<_>>())?;
    let after = EvalResult::mean(&deb_runs.iter().map(|r| r.eval.clone()).collect::<Vec<_>>())?;
    let populations: Vec<u64> = splits.test.class_populations().iter().map(|&n| n as u64).collect();
    let comparison = compare(&before, &after, &populations, cfg.epsilons)?;
    let rep = Report {
        method: cfg.debiased.name.clone(),
        comparison,
        aggregates: aggregate_runs(&deb_runs, Some(&base_runs))?,
        verdict_diffs: Vec::new(),
    };

    let dir = run_dir(g, &run_id)?;
    let mut written = emit(&rep, &dir, &Format::ALL)?;
    let runs_path = dir.join("runs.json");
    let mut runs_text = serde_json::to_string_pretty(&RunRecords {
        baseline: &base_runs,
        debiased: &deb_runs,
    })
    .map_err(|e| CliError::Data(e.to_string()))?;
    runs_text.push('\n');
    fs::write(&runs_path, runs_text).map_err(|e| CliError::Data(format!("{}: {e}", runs_path.display())))?;
    written.push(runs_path);
    manifest.outputs = output_digests(&written)?;
    manifest.pipelines = serde_json::json!({
        "baseline": base_runs.iter().map(|r| &r.manifest).collect::<Vec<_>>(),
        "debiased": deb_runs.iter().map(|r| &r.manifest).collect::<Vec<_>>(),
    });
    manifest.write(&dir)?;

    print_summary(&rep);
    println!("outputs in {}", dir.display());
    Ok(())
}

fn pct(x: f64) -> String {
    format!("{:.0}%", 100.0 * x)
}

fn print_summary(rep: &Report) {
    let c = &rep.comparison;
    println!("method: {}", rep.method);
    println!("classes judged: {} (excluded {})", c.judged_classes, c.excluded_classes);
    println!(
        "base satisfied: {}/{} ({}, weighted {})",
        c.base_count,
        c.judged_classes,
        pct(c.unweighted_base_rate),
        pct(c.weighted_base_rate)
    );
    println!(
        "advanced satisfied: {}/{} ({}, weighted {})",
        c.advanced_count,
        c.judged_classes,
        pct(c.unweighted_advanced_rate),
        pct(c.weighted_advanced_rate)
    );
    println!(
        "worsened GAP: {}/{} ({})",
        c.worsened_gap_count,
        c.judged_classes,
        pct(c.worsened_gap_fraction)
    );
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.2}"));
    println!("GAP RMS original: {}", fmt(c.before.gap_rms));
    println!("GAP RMS debiased: {}", fmt(c.after.gap_rms));
    for agg in &rep.aggregates {
        let p = agg.test.map_or("n/a".to_string(), |t| format!("{:.4}", t.p));
        println!(
            "{}: {:.2} (baseline {}) p={p}{}",
            agg.metric,
            agg.mean,
            fmt(agg.baseline_mean),
            if agg.significant { " *" } else { "" }
        );
    }
}

pub fn replay(g: &Globals, a: &ReplayArgs) -> Result<(), CliError> {
    let table = match (&a.fixture, &a.builtin) {
        (Some(p), _) => PublishedTable::load(p)?,
        (None, Some(name)) => PublishedTable::builtin(name)?,
        (None, None) => return Err(CliError::Usage("replay needs --fixture or --builtin".into())),
    };
    let eps = Epsilons {
        gap: a.epsilon_gap,
        harm: a.epsilon_harm,
    };
    let rep = replay_published_table(&table, eps)?;
    print_summary(&rep);
    println!("verdict mismatches: {}", rep.verdict_diffs.len());
    for d in &rep.verdict_diffs {
        println!(
            "  {}: published base={} advanced={}, computed base={} advanced={}",
            d.class, d.published_base, d.published_advanced, d.computed_base, d.computed_advanced
        );
    }
    if g.out_dir.is_some() {
        let dir = run_dir(g, &a.run_id)?;
        let mut manifest = RunManifest::new(
            "replay",
            &a.run_id,
            &serde_json::json!({
                "fixture": a.fixture,
                "builtin": a.builtin,
                "epsilons": eps,
            }),
            Vec::new(),
        )?;
        if let Some(p) = &a.fixture {
            manifest.inputs.push(FileDigest::of(p)?);
        }
        let written = emit(&rep, &dir, &Format::ALL)?;
        manifest.outputs = output_digests(&written)?;
        manifest.write(&dir)?;
        println!("outputs in {}", dir.display());
    }
    Ok(())
}

pub fn report(g: &Globals, a: &ReportArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.input).map_err(|e| CliError::Data(format!("{}: {e}", a.input.display())))?;
    let rep = report::from_json(&text)?;
    let formats: Vec<Format> = a
        .formats
        .iter()
        .map(|f| f.parse::<Format>().map_err(|e| CliError::Usage(e.to_string())))
        .collect::<Result<_, _>>()?;
    let dir = run_dir(g, &a.run_id)?;
    for p in emit(&rep, &dir, &formats)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

pub fn synth(g: &Globals, a: &SynthArgs) -> Result<(), CliError> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            toml::from_str::<SyntheticConfig>(&text).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?
        }
        None => SyntheticConfig::default(),
    };
    if let Some(v) = a.classes {
        cfg.classes = v;
    }
    if let Some(v) = a.groups {
        cfg.groups = v;
    }
    if let Some(v) = a.n {
        cfg.n = v;
    }
    if let Some(v) = a.bias {
        cfg.bias = v;
    }
    if let Some(v) = g.seed {
        cfg.seed = v;
    }
    let data: Dataset = generate_synthetic(&cfg)?;
    let path = match &a.output {
        Some(p) => p.clone(),
        None => {
            let root = out_root(g);
            fs::create_dir_all(&root).map_err(|e| CliError::Data(format!("{}: {e}", root.display())))?;
            root.join("synthetic.jsonl")
        }
    };
    data.write_jsonl(&path)?;
    println!("wrote {} examples to {}", data.len(), path.display());
    Ok(())
}

pub fn embed(g: &Globals, a: &EmbedArgs) -> Result<(), CliError> {
    let fmt = data_format(&a.input, None)?;
    let data = load_dataset(&a.input, fmt)?;
    let m = hashed_embeddings(&data, a.dims, g.seed.unwrap_or(0))?;
    m.write_embeddings(&a.output)?;
    println!("wrote {}x{} embeddings to {}", m.rows(), m.dims(), a.output.display());
    Ok(())
}
