//! Labeled text records, ingestion, stopwords, splits and the swap lexicon.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupId(pub usize);

impl ClassId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl GroupId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "class#{}", self.0)
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "group#{}", self.0)
    }
}

/// One labeled bio.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub tokens: Vec<String>,
    pub class_label: ClassId,
    pub group: GroupId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub examples: Vec<Example>,
    pub class_names: Vec<String>,
    pub group_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset and checks the catalog invariants.
    pub fn new(
        examples: Vec<Example>,
        class_names: Vec<String>,
        group_names: Vec<String>,
    ) -> Result<Self> {
        let ds = Dataset {
            examples,
            class_names,
            group_names,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.class_names.len() < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 classes, found {}",
                self.class_names.len()
            )));
        }
        if self.group_names.len() < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 groups, found {}",
                self.group_names.len()
            )));
        }
        for (i, ex) in self.examples.iter().enumerate() {
            if ex.class_label.0 >= self.class_names.len() {
                return Err(Error::invalid(format!(
                    "example {i}: class id {} outside catalog of {}",
                    ex.class_label.0,
                    self.class_names.len()
                )));
            }
            if ex.group.0 >= self.group_names.len() {
                return Err(Error::invalid(format!(
                    "example {i}: group id {} outside catalog of {}",
                    ex.group.0,
                    self.group_names.len()
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn num_groups(&self) -> usize {
        self.group_names.len()
    }

    pub fn labels(&self) -> Vec<ClassId> {
        self.examples.iter().map(|e| e.class_label).collect()
    }

    pub fn groups(&self) -> Vec<GroupId> {
        self.examples.iter().map(|e| e.group).collect()
    }

    /// Same catalogs, a subset of examples in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            examples: indices.iter().map(|&i| self.examples[i].clone()).collect(),
            class_names: self.class_names.clone(),
            group_names: self.group_names.clone(),
        }
    }

    /// `counts[class][group]`.
    pub fn cell_counts(&self) -> Vec<Vec<usize>> {
        let mut counts = vec![vec![0; self.num_groups()]; self.num_classes()];
        for ex in &self.examples {
            counts[ex.class_label.0][ex.group.0] += 1;
        }
        counts
    }

    pub fn class_populations(&self) -> Vec<usize> {
        self.cell_counts().iter().map(|r| r.iter().sum()).collect()
    }

    /// Writes one JSON object per example with the tokens joined by spaces.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for ex in &self.examples {
            let rec = RawRecord {
                text: ex.tokens.join(" "),
                class: self.class_names[ex.class_label.0].clone(),
                group: self.group_names[ex.group.0].clone(),
            };
            out.push_str(&serde_json::to_string(&rec).expect("string record serializes"));
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Whitespace split, lowercase, strip leading and trailing punctuation.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.trim_matches(|c: char| c.is_ascii_punctuation() || c.is_ascii_control())
                .to_lowercase()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Jsonl,
    Csv,
}

impl DataFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "jsonl" | "json" => Some(DataFormat::Jsonl),
            "csv" => Some(DataFormat::Csv),
            _ => None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    text: String,
    class: String,
    group: String,
}

#[derive(Default)]
struct CatalogBuilder {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl CatalogBuilder {
    fn intern(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        i
    }
}

pub fn load_dataset(path: &Path, format: DataFormat) -> Result<Dataset> {
    Ok(load_datasets(&[path], format)?.remove(0))
}

/// Loads several files (e.g. train/dev/test) against one shared pair of
/// class and group catalogs, built in first-appearance order across files.
pub fn load_datasets(paths: &[&Path], format: DataFormat) -> Result<Vec<Dataset>> {
    let mut classes = CatalogBuilder::default();
    let mut groups = CatalogBuilder::default();
    let mut per_file = Vec::with_capacity(paths.len());
    for path in paths {
        let records = match format {
            DataFormat::Jsonl => read_jsonl(path)?,
            DataFormat::Csv => read_csv(path)?,
        };
        if records.is_empty() {
            return Err(Error::EmptyFile(path.to_path_buf()));
        }
        let examples: Vec<Example> = records
            .iter()
            .map(|r| Example {
                tokens: tokenize(&r.text),
                class_label: ClassId(classes.intern(&r.class)),
                group: GroupId(groups.intern(&r.group)),
            })
            .collect();
        per_file.push(examples);
    }
    per_file
        .into_iter()
        .map(|examples| Dataset::new(examples, classes.names.clone(), groups.names.clone()))
        .collect()
}

fn read_jsonl(path: &Path) -> Result<Vec<RawRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RawRecord = serde_json::from_str(&line).map_err(|e| Error::Record {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(rec);
    }
    Ok(records)
}

fn read_csv(path: &Path) -> Result<Vec<RawRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    for h in headers.iter() {
        if !matches!(h, "text" | "class" | "group") {
            return Err(Error::Record {
                path: path.to_path_buf(),
                line: 1,
                message: format!("unknown field `{h}`"),
            });
        }
    }
    let mut records = Vec::new();
    for row in reader.deserialize::<RawRecord>() {
        records.push(row.map_err(|e| csv_error(path, e))?);
    }
    Ok(records)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::Record {
            path: path.to_path_buf(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// English stopword list removed before featurization.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your", "yours",
    "yourself", "yourselves", "he", "him", "his", "himself", "she", "her", "hers", "herself",
    "it", "its", "itself", "they", "them", "their", "theirs", "themselves", "what", "which",
    "who", "whom", "this", "that", "these", "those", "am", "is", "are", "was", "were", "be",
    "been", "being", "have", "has", "had", "having", "do", "does", "did", "doing", "a", "an",
    "the", "and", "but", "if", "or", "because", "as", "until", "while", "of", "at", "by",
    "for", "with", "about", "against", "between", "into", "through", "during", "before",
    "after", "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over",
    "under", "again", "further", "then", "once", "here", "there", "when", "where", "why",
    "how", "all", "any", "both", "each", "few", "more", "most", "other", "some", "such", "no",
    "nor", "not", "only", "own", "same", "so", "than", "too", "very", "s", "t", "can", "will",
    "just", "don", "should", "now",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Default for Stopwords {
    fn default() -> Self {
        Stopwords(DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect())
    }
}

impl Stopwords {
    pub fn empty() -> Self {
        Stopwords(HashSet::new())
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Stopwords(words.into_iter().map(Into::into).collect())
    }

    /// One word per line; blank lines ignored.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_words(
            text.lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty()),
        ))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn remove_stopwords(tokens: &[String], stopwords: &Stopwords) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !stopwords.contains(t))
        .cloned()
        .collect()
}

/// Symmetric word-pair substitution table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapLexicon {
    pairs: Vec<(String, String)>,
    partner: HashMap<String, String>,
}

const DEFAULT_GENDER_PAIRS: &[(&str, &str)] = &[
    ("he", "she"),
    ("him", "her"),
    ("his", "hers"),
    ("himself", "herself"),
    ("man", "woman"),
    ("men", "women"),
    ("boy", "girl"),
    ("boys", "girls"),
    ("male", "female"),
    ("males", "females"),
    ("mr", "mrs"),
    ("sir", "madam"),
    ("gentleman", "lady"),
    ("gentlemen", "ladies"),
    ("father", "mother"),
    ("fathers", "mothers"),
    ("dad", "mom"),
    ("daddy", "mommy"),
    ("son", "daughter"),
    ("sons", "daughters"),
    ("brother", "sister"),
    ("brothers", "sisters"),
    ("husband", "wife"),
    ("husbands", "wives"),
    ("boyfriend", "girlfriend"),
    ("boyfriends", "girlfriends"),
    ("uncle", "aunt"),
    ("uncles", "aunts"),
    ("nephew", "niece"),
    ("nephews", "nieces"),
    ("grandfather", "grandmother"),
    ("grandson", "granddaughter"),
    ("king", "queen"),
    ("prince", "princess"),
    ("actor", "actress"),
    ("actors", "actresses"),
    ("waiter", "waitress"),
    ("host", "hostess"),
    ("hero", "heroine"),
    ("steward", "stewardess"),
    ("chairman", "chairwoman"),
    ("spokesman", "spokeswoman"),
    ("businessman", "businesswoman"),
    ("congressman", "congresswoman"),
    ("fraternity", "sorority"),
    ("masculine", "feminine"),
    ("groom", "bride"),
    ("monk", "nun"),
    ("widower", "widow"),
    ("stepfather", "stepmother"),
];

impl Default for SwapLexicon {
    /// Common English gender word pairs.
    fn default() -> Self {
        Self::new(
            DEFAULT_GENDER_PAIRS
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string())),
        )
        .expect("built-in lexicon is consistent")
    }
}

impl SwapLexicon {
    pub fn new<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut partner = HashMap::new();
        let mut kept = Vec::new();
        for (a, b) in pairs {
            let (a, b) = (a.to_lowercase(), b.to_lowercase());
            if a == b {
                return Err(Error::invalid(format!("lexicon pair maps `{a}` to itself")));
            }
            for w in [&a, &b] {
                if partner.contains_key(w) {
                    return Err(Error::invalid(format!(
                        "lexicon word `{w}` appears in more than one pair"
                    )));
                }
            }
            partner.insert(a.clone(), b.clone());
            partner.insert(b.clone(), a.clone());
            kept.push((a, b));
        }
        Ok(SwapLexicon {
            pairs: kept,
            partner,
        })
    }

    /// Two tab-separated columns per line, `#` comments ignored.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() != 2 || cols.iter().any(|c| c.is_empty()) {
                return Err(Error::Record {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: "expected two tab-separated words".into(),
                });
            }
            pairs.push((cols[0].to_string(), cols[1].to_string()));
        }
        Self::new(pairs)
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn partner(&self, word: &str) -> Option<&str> {
        self.partner.get(word).map(String::as_str)
    }

    pub fn swap_tokens(&self, tokens: &[String]) -> Vec<String> {
        tokens
            .iter()
            .map(|t| self.partner(t).map(str::to_string).unwrap_or_else(|| t.clone()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub fractions: [f64; 3],
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            fractions: [0.8, 0.1, 0.1],
            seed: 0,
            stratified: true,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::invalid("split fractions must lie in [0, 1]"));
        }
        let sum: f64 = self.fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "split fractions must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits {
    pub train: Dataset,
    pub dev: Dataset,
    pub test: Dataset,
}

/// Seeded train/dev/test partition.
///
/// Each (class, group) cell is rounded down per split and its leftover
/// examples go to the splits furthest behind their running target, so a
/// cell's share of a split is within one example of its exact fraction and
/// split totals track `n * fraction`.
pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<Splits> {
    spec.validate()?;
    let mut rng = rng::derive(spec.seed, rng::stream::SPLIT);

    let cells: Vec<Vec<usize>> = if spec.stratified {
        let mut cells = vec![Vec::new(); dataset.num_classes() * dataset.num_groups()];
        for (i, ex) in dataset.examples.iter().enumerate() {
            cells[ex.class_label.0 * dataset.num_groups() + ex.group.0].push(i);
        }
        for (ci, cell) in cells.iter().enumerate() {
            if !cell.is_empty() && cell.len() < 3 {
                let (c, g) = (ci / dataset.num_groups(), ci % dataset.num_groups());
                return Err(Error::invalid(format!(
                    "cell ({}, {}) has {} example(s); stratified splitting needs at least 3",
                    dataset.class_names[c],
                    dataset.group_names[g],
                    cell.len()
                )));
            }
        }
        cells
    } else {
        vec![(0..dataset.len()).collect()]
    };

    let fr = spec.fractions;
    let mut parts: [Vec<usize>; 3] = Default::default();
    let mut assigned = [0usize; 3];
    let mut seen = 0usize;
    for mut cell in cells {
        cell.shuffle(&mut rng);
        let m = cell.len();
        seen += m;
        let exact: Vec<f64> = fr.iter().map(|f| m as f64 * f).collect();
        let mut take: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
        let extra = m - take.iter().sum::<usize>();
        // hand the leftover units to the splits furthest behind their running target
        let mut order: Vec<usize> = (0..3).filter(|&k| exact[k] > exact[k].floor()).collect();
        let deficit = |k: usize, take: &[usize]| seen as f64 * fr[k] - (assigned[k] + take[k]) as f64;
        order.sort_by(|&a, &b| {
            deficit(b, &take)
                .partial_cmp(&deficit(a, &take))
                .unwrap()
                .then(a.cmp(&b))
        });
        for &k in order.iter().take(extra) {
            take[k] += 1;
        }
        let mut at = 0;
        for k in 0..3 {
            parts[k].extend_from_slice(&cell[at..at + take[k]]);
            at += take[k];
            assigned[k] += take[k];
        }
    }
    let [mut train, mut dev, mut test] = parts;
    train.sort_unstable();
    dev.sort_unstable();
    test.sort_unstable();
    Ok(Splits {
        train: dataset.subset(&train),
        dev: dataset.subset(&dev),
        test: dataset.subset(&test),
    })
}

/// Configuration of the synthetic biased-corpus generator.
///
/// `bias` ties classes to groups: class `c` draws its majority group
/// `c mod G` with probability `1/G + bias * (1 - 1/G)`. Because group marker
/// words travel with the group, a classifier can use them as a proxy for
/// the class, which is what produces a group TPR gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub classes: usize,
    pub groups: usize,
    pub n: usize,
    pub seed: u64,
    pub bias: f64,
    /// Per (class, group) sampling probabilities; overrides `bias`.
    pub cell_probs: Option<Vec<Vec<f64>>>,
    /// Exact per (class, group) counts; overrides `n`, `bias` and `cell_probs`.
    pub cell_counts: Option<Vec<Vec<usize>>>,
    pub tokens_per_example: usize,
    /// Probability that a content token comes from the class vocabulary.
    pub class_signal: f64,
    pub marker_tokens: usize,
    pub class_vocab: usize,
    pub shared_vocab: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            classes: 4,
            groups: 2,
            n: 2000,
            seed: 0,
            bias: 0.5,
            cell_probs: None,
            cell_counts: None,
            tokens_per_example: 12,
            class_signal: 0.3,
            marker_tokens: 2,
            class_vocab: 12,
            shared_vocab: 60,
        }
    }
}

const MALE_MARKERS: &[&str] = &["he", "his", "him", "man", "mr", "husband", "father"];
const FEMALE_MARKERS: &[&str] = &["she", "her", "hers", "woman", "mrs", "wife", "mother"];

impl SyntheticConfig {
    /// `probs[class][group]` implied by the configuration.
    pub fn resolved_cell_probs(&self) -> Vec<Vec<f64>> {
        if let Some(p) = &self.cell_probs {
            return p.clone();
        }
        let g = self.groups as f64;
        let major = 1.0 / g + self.bias * (1.0 - 1.0 / g);
        let minor = if self.groups > 1 {
            (1.0 - major) / (g - 1.0)
        } else {
            0.0
        };
        (0..self.classes)
            .map(|c| {
                (0..self.groups)
                    .map(|z| {
                        let p = if z == c % self.groups { major } else { minor };
                        p / self.classes as f64
                    })
                    .collect()
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.classes < 2 || self.groups < 2 {
            return Err(Error::invalid("synthetic corpus needs C >= 2 and G >= 2"));
        }
        for (name, p) in [("bias", self.bias), ("class_signal", self.class_signal)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if self.tokens_per_example == 0 || self.class_vocab == 0 || self.shared_vocab == 0 {
            return Err(Error::invalid("vocabulary sizes and token count must be positive"));
        }
        let check_shape = |rows: usize, cols: &[usize]| {
            if rows != self.classes || cols.iter().any(|&c| c != self.groups) {
                Err(Error::invalid("per-cell table must be classes x groups"))
            } else {
                Ok(())
            }
        };
        if let Some(counts) = &self.cell_counts {
            check_shape(counts.len(), &counts.iter().map(Vec::len).collect::<Vec<_>>())?;
        } else if let Some(probs) = &self.cell_probs {
            check_shape(probs.len(), &probs.iter().map(Vec::len).collect::<Vec<_>>())?;
            if probs.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::invalid("cell probabilities must lie in [0, 1]"));
            }
            let total: f64 = probs.iter().flatten().sum();
            if (total - 1.0).abs() > 1e-6 {
                return Err(Error::invalid(format!(
                    "cell probabilities must sum to 1, got {total}"
                )));
            }
        }
        let n = self.total();
        if n < self.classes * self.groups {
            return Err(Error::invalid(format!(
                "n = {n} is smaller than C*G = {}",
                self.classes * self.groups
            )));
        }
        Ok(())
    }

    fn total(&self) -> usize {
        match &self.cell_counts {
            Some(c) => c.iter().flatten().sum(),
            None => self.n,
        }
    }

    fn markers(&self, group: usize) -> Vec<String> {
        if self.groups == 2 {
            let list = if group == 0 { MALE_MARKERS } else { FEMALE_MARKERS };
            list.iter().map(|s| s.to_string()).collect()
        } else {
            (0..5).map(|k| format!("g{group}m{k}")).collect()
        }
    }
}

pub fn generate_synthetic(config: &SyntheticConfig) -> Result<Dataset> {
    config.validate()?;
    let mut rng = rng::derive(config.seed, rng::stream::SYNTHETIC);
    let n_groups = config.groups;

    let mut cells: Vec<(usize, usize)> = match &config.cell_counts {
        Some(counts) => {
            let mut cells = Vec::with_capacity(config.total());
            for (c, row) in counts.iter().enumerate() {
                for (z, &k) in row.iter().enumerate() {
                    cells.extend(std::iter::repeat_n((c, z), k));
                }
            }
            cells.shuffle(&mut rng);
            cells
        }
        None => {
            let probs: Vec<f64> = config.resolved_cell_probs().into_iter().flatten().collect();
            let dist = WeightedIndex::new(&probs)
                .map_err(|e| Error::invalid(format!("cell probabilities: {e}")))?;
            (0..config.n)
                .map(|_| {
                    let k = dist.sample(&mut rng);
                    (k / n_groups, k % n_groups)
                })
                .collect()
        }
    };
    // keep the generated order; sorting would make row order leak the label
    cells.truncate(config.total());

    let markers: Vec<Vec<String>> = (0..n_groups).map(|z| config.markers(z)).collect();
    let examples = cells
        .into_iter()
        .map(|(c, z)| {
            let mut tokens = Vec::with_capacity(config.tokens_per_example + config.marker_tokens);
            for _ in 0..config.tokens_per_example {
                if rng.random_bool(config.class_signal) {
                    tokens.push(format!("c{c}w{}", rng.random_range(0..config.class_vocab)));
                } else {
                    tokens.push(format!("w{}", rng.random_range(0..config.shared_vocab)));
                }
            }
            for _ in 0..config.marker_tokens {
                let list = &markers[z];
                let pos = rng.random_range(0..=tokens.len());
                tokens.insert(pos, list[rng.random_range(0..list.len())].clone());
            }
            Example {
                tokens,
                class_label: ClassId(c),
                group: GroupId(z),
            }
        })
        .collect();

    let class_names = (0..config.classes).map(|c| format!("class{c}")).collect();
    let group_names = if n_groups == 2 {
        vec!["male".to_string(), "female".to_string()]
    } else {
        (0..n_groups).map(|z| format!("group{z}")).collect()
    };
    Dataset::new(examples, class_names, group_names)
}
