//! Published-table replay and report rendering (JSON, CSV, Markdown, SVG).

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::metrics::{compare, ComparisonReport, Epsilons, EvalResult};
use crate::stats::RunAggregate;
use crate::{Error, Result};

/// One row of a published per-class before/after table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PublishedRow {
    pub class: String,
    pub tpr_m_orig: f64,
    pub tpr_m_deb: f64,
    pub tpr_f_orig: f64,
    pub tpr_f_deb: f64,
    pub gap_orig: f64,
    pub gap_deb: f64,
    /// Underlined in the source table.
    pub base: bool,
    /// Starred in the source table.
    pub advanced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishedTable {
    pub method: String,
    pub rows: Vec<PublishedRow>,
}

/// Transcribed per-profession tables shipped with the crate.
pub const BUILTIN_FIXTURES: &[(&str, &str)] = &[
    ("eo", include_str!("../fixtures/eo.csv")),
    ("decoupled", include_str!("../fixtures/decoupled.csv")),
    ("cda", include_str!("../fixtures/cda.csv")),
    ("inlp", include_str!("../fixtures/inlp.csv")),
    ("cda_inlp", include_str!("../fixtures/cda_inlp.csv")),
];

impl PublishedTable {
    pub fn from_reader<R: Read>(reader: R, method: &str, source: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut rows = Vec::new();
        for (i, rec) in rdr.deserialize::<PublishedRow>().enumerate() {
            let line = i + 2;
            let row = rec.map_err(|e| Error::Record {
                path: source.to_path_buf(),
                line,
                message: e.to_string(),
            })?;
            let values = [
                row.tpr_m_orig,
                row.tpr_m_deb,
                row.tpr_f_orig,
                row.tpr_f_deb,
                row.gap_orig,
                row.gap_deb,
            ];
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Record {
                    path: source.to_path_buf(),
                    line,
                    message: "non-finite value".into(),
                });
            }
            if row.gap_orig < 0.0 || row.gap_deb < 0.0 {
                return Err(Error::Record {
                    path: source.to_path_buf(),
                    line,
                    message: "gaps must be non-negative".into(),
                });
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::EmptyFile(source.to_path_buf()));
        }
        Ok(PublishedTable {
            method: method.to_string(),
            rows,
        })
    }

    /// Loads a fixture CSV; the method name defaults to the file stem.
    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let method = path.file_stem().and_then(|s| s.to_str()).unwrap_or("table");
        Self::from_reader(file, method, path)
    }

    pub fn builtin(method: &str) -> Result<Self> {
        let (name, text) = BUILTIN_FIXTURES
            .iter()
            .find(|(n, _)| *n == method)
            .ok_or_else(|| {
                let names: Vec<&str> = BUILTIN_FIXTURES.iter().map(|(n, _)| *n).collect();
                Error::invalid(format!("no built-in fixture `{method}`; have {}", names.join(", ")))
            })?;
        Self::from_reader(text.as_bytes(), name, &PathBuf::from(format!("<builtin>/{name}.csv")))
    }

    fn results(&self) -> Result<(EvalResult, EvalResult)> {
        let classes: Vec<String> = self.rows.iter().map(|r| r.class.clone()).collect();
        let groups = vec!["male".to_string(), "female".to_string()];
        let before = EvalResult::from_rates(
            classes.clone(),
            groups.clone(),
            self.rows.iter().map(|r| vec![r.tpr_m_orig, r.tpr_f_orig]).collect(),
            Some(self.rows.iter().map(|r| r.gap_orig).collect()),
        )?;
        let after = EvalResult::from_rates(
            classes,
            groups,
            self.rows.iter().map(|r| vec![r.tpr_m_deb, r.tpr_f_deb]).collect(),
            Some(self.rows.iter().map(|r| r.gap_deb).collect()),
        )?;
        Ok((before, after))
    }
}

/// A row whose computed verdict disagrees with the published flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictDiff {
    pub class: String,
    pub published_base: bool,
    pub published_advanced: bool,
    pub computed_base: bool,
    pub computed_advanced: bool,
}

/// Everything rendered for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub method: String,
    pub comparison: ComparisonReport,
    /// Per-run scalar metrics with significance against the baseline.
    pub aggregates: Vec<RunAggregate>,
    /// Disagreements with published flags (replay only).
    pub verdict_diffs: Vec<VerdictDiff>,
}

/// Recomputes verdicts, worsened fraction and GAP RMS from a published
/// table. Every class gets equal weight.
pub fn replay_published_table(table: &PublishedTable, eps: Epsilons) -> Result<Report> {
    let (before, after) = table.results()?;
    let comparison = compare(&before, &after, &vec![1; table.rows.len()], eps)?;
    let verdict_diffs = table
        .rows
        .iter()
        .zip(&comparison.verdicts)
        .filter_map(|(row, v)| {
            let v = v.as_ref()?;
            (v.base != row.base || v.advanced != row.advanced).then(|| VerdictDiff {
                class: row.class.clone(),
                published_base: row.base,
                published_advanced: row.advanced,
                computed_base: v.base,
                computed_advanced: v.advanced,
            })
        })
        .collect();
    Ok(Report {
        method: table.method.clone(),
        comparison,
        aggregates: Vec::new(),
        verdict_diffs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Markdown,
    SvgBars,
}

impl Format {
    pub const ALL: [Format; 4] = [Format::Json, Format::Csv, Format::Markdown, Format::SvgBars];

    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Markdown => "md",
            Format::SvgBars => "svg",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "md" | "markdown" => Ok(Format::Markdown),
            "svg" | "svg_bars" => Ok(Format::SvgBars),
            other => Err(Error::invalid(format!("unknown report format `{other}`"))),
        }
    }
}

pub fn render(report: &Report, format: Format) -> Result<String> {
    match format {
        Format::Json => to_json(report),
        Format::Csv => to_csv(report),
        Format::Markdown => Ok(to_markdown(report)),
        Format::SvgBars => Ok(to_svg(report)),
    }
}

/// Writes `<dir>/<method>.<ext>` for each format and returns the paths.
pub fn emit(report: &Report, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    formats
        .iter()
        .map(|&f| {
            let path = dir.join(format!("{}.{}", report.method, f.extension()));
            fs::write(&path, render(report, f)?).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

pub fn to_json(report: &Report) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| Error::invalid(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str) -> Result<Report> {
    serde_json::from_str(text).map_err(|e| Error::invalid(format!("report JSON: {e}")))
}

fn escape_pointer(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

fn unescape_pointer(seg: &str) -> String {
    seg.replace("~1", "/").replace("~0", "~")
}

fn flatten(value: &Value, pointer: &str, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            out.push((pointer.to_string(), "{}".into()));
            for (k, v) in map {
                flatten(v, &format!("{pointer}/{}", escape_pointer(k)), out);
            }
        }
        Value::Array(items) => {
            out.push((pointer.to_string(), "[]".into()));
            for (i, v) in items.iter().enumerate() {
                flatten(v, &format!("{pointer}/{i}"), out);
            }
        }
        scalar => out.push((pointer.to_string(), scalar.to_string())),
    }
}

/// One `pointer,value` row per node. Containers appear as `{}` or `[]` ahead
/// of their children; scalars are JSON literals, so numbers keep full
/// precision.
pub fn to_csv(report: &Report) -> Result<String> {
    let value = serde_json::to_value(report).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rows = Vec::new();
    flatten(&value, "", &mut rows);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["pointer", "value"]).map_err(|e| Error::invalid(e.to_string()))?;
    for (p, v) in rows {
        w.write_record([p, v]).map_err(|e| Error::invalid(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
}

fn insert(root: &mut Value, pointer: &str, node: Value) -> Result<()> {
    if pointer.is_empty() {
        *root = node;
        return Ok(());
    }
    let segs: Vec<String> = pointer[1..].split('/').map(unescape_pointer).collect();
    let (last, parents) = segs.split_last().unwrap();
    let mut cur = root;
    for seg in parents {
        cur = match cur {
            Value::Object(m) => m.get_mut(seg.as_str()),
            Value::Array(a) => seg.parse::<usize>().ok().and_then(|i| a.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| Error::invalid(format!("report CSV: parent of {pointer} missing")))?;
    }
    match cur {
        Value::Object(m) => {
            m.insert(last.clone(), node);
        }
        Value::Array(a) if last.parse::<usize>().ok() == Some(a.len()) => a.push(node),
        _ => return Err(Error::invalid(format!("report CSV: cannot place {pointer}"))),
    }
    Ok(())
}

pub fn from_csv(text: &str) -> Result<Report> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut root = Value::Null;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::invalid(format!("report CSV row {}: {e}", i + 2)))?;
        let (pointer, raw) = (&rec[0], &rec[1]);
        let node = match raw {
            "{}" => Value::Object(Map::new()),
            "[]" => Value::Array(Vec::new()),
            lit => serde_json::from_str(lit)
                .map_err(|e| Error::invalid(format!("report CSV row {}: {e}", i + 2)))?,
        };
        insert(&mut root, pointer, node)?;
    }
    serde_json::from_value(root).map_err(|e| Error::invalid(format!("report CSV: {e}")))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.2}"))
}

fn with_delta(before: Option<f64>, after: Option<f64>) -> String {
    match (before, after) {
        (Some(b), Some(a)) => {
            let d = a - b;
            let arrow = if d > 0.0 {
                "↑"
            } else if d < 0.0 {
                "↓"
            } else {
                "±"
            };
            format!("{a:.2} {arrow}{:.2}", d.abs())
        }
        (_, a) => fmt_opt(a),
    }
}

fn underline(s: String, on: bool) -> String {
    if on {
        format!("<u>{s}</u>")
    } else {
        s
    }
}

/// Markdown with a metric summary (accuracy, per-group TPR, GAP RMS), the
/// satisfaction summary, and a per-class table.
pub fn to_markdown(report: &Report) -> String {
    let c = &report.comparison;
    let mut md = String::new();
    let _ = writeln!(md, "# {}\n", report.method);
    let _ = writeln!(md, "| Metric | Original | {} |", report.method);
    let _ = writeln!(md, "|---|---|---|");

    let mut rows: Vec<(String, Option<f64>, Option<f64>, bool)> = Vec::new();
    let agg = |name: &str| report.aggregates.iter().find(|a| a.metric == name);
    let mut push = |label: String, metric: String, before: Option<f64>, after: Option<f64>| match agg(&metric) {
        Some(a) => rows.push((label, a.baseline_mean.or(before), Some(a.mean), a.significant)),
        None => rows.push((label, before, after, false)),
    };
    push("Accuracy".into(), "accuracy".into(), c.before.accuracy, c.after.accuracy);
    for (z, g) in c.before.group_names.iter().enumerate() {
        push(format!("TPR_{g}"), format!("tpr_{g}"), c.before.group_tpr[z], c.after.group_tpr[z]);
    }
    push("GAP^RMS".into(), "gap_rms".into(), c.before.gap_rms, c.after.gap_rms);
    for (label, b, a, sig) in rows {
        let _ = writeln!(md, "| {label} | {} | {} |", fmt_opt(b), underline(with_delta(b, a), sig));
    }

    let pct = |x: f64| format!("{:.0}%", 100.0 * x);
    let _ = writeln!(md);
    let _ = writeln!(
        md,
        "Satisfied (base): {}/{} ({}, weighted {})  ",
        c.base_count,
        c.judged_classes,
        pct(c.unweighted_base_rate),
        pct(c.weighted_base_rate)
    );
    let _ = writeln!(
        md,
        "Satisfied (advanced): {}/{} ({}, weighted {})  ",
        c.advanced_count,
        c.judged_classes,
        pct(c.unweighted_advanced_rate),
        pct(c.weighted_advanced_rate)
    );
    let _ = writeln!(
        md,
        "Worsened GAP: {}/{} ({})",
        c.worsened_gap_count,
        c.judged_classes,
        pct(c.worsened_gap_fraction)
    );
    if c.excluded_classes > 0 {
        let _ = writeln!(md, "\nExcluded classes (undefined TPR): {}", c.excluded_classes);
    }

    let groups = &c.before.group_names;
    let _ = writeln!(md, "\n| Class | {} | GAP | Verdict |", groups.iter().map(|g| format!("TPR_{g}")).collect::<Vec<_>>().join(" | "));
    let _ = writeln!(md, "|---|{}---|---|", "---|".repeat(groups.len()));
    for (k, name) in c.before.class_names.iter().enumerate() {
        let verdict = c.verdicts[k].as_ref();
        let base = verdict.is_some_and(|v| v.base);
        let mut cells = vec![name.clone()];
        for z in 0..groups.len() {
            cells.push(with_delta(c.before.cells[k][z].tpr, c.after.cells[k][z].tpr));
        }
        cells.push(with_delta(c.before.gaps[k].map(f64::abs), c.after.gaps[k].map(f64::abs)));
        let mark = match verdict {
            None => "excluded",
            Some(v) if v.advanced => "advanced",
            Some(v) if v.base => "base",
            Some(_) => "",
        };
        cells.push(mark.to_string());
        cells[0] = underline(cells[0].clone(), base);
        if verdict.is_some_and(|v| v.advanced) {
            cells[0].push('*');
        }
        let _ = writeln!(md, "| {} |", cells.join(" | "));
    }

    if !report.verdict_diffs.is_empty() {
        let _ = writeln!(md, "\nRows disagreeing with the published flags:\n");
        for d in &report.verdict_diffs {
            let _ = writeln!(
                md,
                "- {}: published base={} advanced={}, computed base={} advanced={}",
                d.class, d.published_base, d.published_advanced, d.computed_base, d.computed_advanced
            );
        }
    }
    md
}

const ROW_H: f64 = 18.0;
const LABEL_W: f64 = 150.0;
const PANEL_W: f64 = 220.0;
const PANEL_GAP: f64 = 20.0;
const TOP: f64 = 40.0;

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Horizontal bars per class: one panel per group for the TPR change and a
/// final panel for the change in |GAP|, where a shrinking gap is drawn as an
/// improvement.
pub fn to_svg(report: &Report) -> String {
    let c = &report.comparison;
    let groups = &c.before.group_names;
    let n = c.before.class_names.len();
    let tpr_delta: Vec<Vec<Option<f64>>> = c.deltas.iter().map(|d| d.tpr_delta.clone()).collect();
    let gap_delta: Vec<Option<f64>> = c.deltas.iter().map(|d| d.gap_delta).collect();

    let mut panels: Vec<(String, Vec<Option<f64>>, bool)> = groups
        .iter()
        .enumerate()
        .map(|(z, g)| (format!("ΔTPR {g}"), tpr_delta.iter().map(|r| r[z]).collect(), false))
        .collect();
    panels.push(("Δ|GAP|".to_string(), gap_delta, true));

    let width = LABEL_W + panels.len() as f64 * (PANEL_W + PANEL_GAP);
    let height = TOP + n as f64 * ROW_H + 20.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<style>.improved{{fill:#2a9d4b}}.worsened{{fill:#c0392b}}.up{{fill:#3366cc}}.down{{fill:#e08a1e}}</style>"#
    );
    let _ = writeln!(s, r#"<text x="4" y="14" font-size="13">{}</text>"#, xml_escape(&report.method));

    for (p, (title, values, is_gap)) in panels.iter().enumerate() {
        let x0 = LABEL_W + p as f64 * (PANEL_W + PANEL_GAP);
        let mid = x0 + PANEL_W / 2.0;
        let scale = values.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-9);
        let _ = writeln!(s, r#"<text x="{mid:.1}" y="32" text-anchor="middle">{}</text>"#, xml_escape(title));
        let _ = writeln!(
            s,
            r##"<line x1="{mid:.1}" y1="{:.1}" x2="{mid:.1}" y2="{:.1}" stroke="#444"/>"##,
            TOP - 4.0,
            TOP + n as f64 * ROW_H
        );
        for (k, v) in values.iter().enumerate() {
            let Some(v) = *v else { continue };
            let len = v.abs() / scale * (PANEL_W / 2.0 - 4.0);
            let x = if v < 0.0 { mid - len } else { mid };
            let y = TOP + k as f64 * ROW_H + 3.0;
            let class = match (is_gap, v < 0.0) {
                (true, true) => "improved",
                (true, false) => "worsened",
                (false, false) => "up",
                (false, true) => "down",
            };
            let _ = writeln!(
                s,
                r#"<rect class="{class}" data-class="{}" x="{x:.1}" y="{y:.1}" width="{len:.1}" height="{:.1}"><title>{:+.2}</title></rect>"#,
                xml_escape(&c.before.class_names[k]),
                ROW_H - 6.0,
                v
            );
        }
    }
    for (k, name) in c.before.class_names.iter().enumerate() {
        let y = TOP + k as f64 * ROW_H + ROW_H - 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{y:.1}" text-anchor="end">{}</text>"#,
            LABEL_W - 6.0,
            xml_escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::RunAggregate;

    fn replay(method: &str) -> Report {
        replay_published_table(&PublishedTable::builtin(method).unwrap(), Epsilons::default()).unwrap()
    }

    #[test]
    fn builtin_fixtures_have_28_rows() {
        for (name, _) in BUILTIN_FIXTURES {
            assert_eq!(PublishedTable::builtin(name).unwrap().rows.len(), 28, "{name}");
        }
        assert!(PublishedTable::builtin("nope").is_err());
    }

    #[test]
    fn worsened_counts() {
        for (m, k) in [("eo", 11), ("decoupled", 11), ("cda", 11), ("inlp", 4)] {
            let r = replay(m);
            assert_eq!(r.comparison.worsened_gap_count, k, "{m}");
            assert_eq!(r.comparison.judged_classes, 28);
        }
    }

    #[test]
    fn decoupled_base_set() {
        let r = replay("decoupled");
        assert_eq!(r.comparison.base_count, 13);
        assert!(r.comparison.base_classes().contains(&"Accountant"));
        assert!(r.verdict_diffs.is_empty(), "{:?}", r.verdict_diffs);
    }

    #[test]
    fn identity_table_is_inert() {
        let mut t = PublishedTable::builtin("eo").unwrap();
        for r in &mut t.rows {
            r.tpr_m_deb = r.tpr_m_orig;
            r.tpr_f_deb = r.tpr_f_orig;
            r.gap_deb = r.gap_orig;
        }
        let rep = replay_published_table(&t, Epsilons::default()).unwrap();
        assert_eq!(rep.comparison.base_count, 0);
        assert_eq!(rep.comparison.worsened_gap_count, 0);
    }

    #[test]
    fn malformed_fixtures() {
        let header = "class,tpr_m_orig,tpr_m_deb,tpr_f_orig,tpr_f_deb,gap_orig,gap_deb,base,advanced\n";
        let p = Path::new("x.csv");
        assert!(matches!(
            PublishedTable::from_reader(header.as_bytes(), "x", p),
            Err(Error::EmptyFile(_))
        ));
        let missing = format!("{header}A,1,2,3,4,5,,true,false\n");
        let err = PublishedTable::from_reader(missing.as_bytes(), "x", p).unwrap_err();
        assert!(matches!(err, Error::Record { line: 2, .. }), "{err}");
        let negative = format!("{header}A,1,2,3,4,-5,1,true,false\n");
        assert!(PublishedTable::from_reader(negative.as_bytes(), "x", p).is_err());
    }

    fn with_aggregates() -> Report {
        let mut r = replay("eo");
        r.aggregates = vec![
            RunAggregate::new("accuracy", vec![72.8, 72.82, 72.81], Some(vec![79.9, 79.88, 79.89])).unwrap(),
            RunAggregate::new("gap_rms", vec![2.0, 2.0], Some(vec![1.0, 1.0])).unwrap(),
        ];
        r
    }

    #[test]
    fn json_and_csv_round_trip() {
        let r = with_aggregates();
        assert_eq!(from_json(&to_json(&r).unwrap()).unwrap(), r);
        let csv = to_csv(&r).unwrap();
        assert_eq!(from_csv(&csv).unwrap(), r);
        let back = from_csv(&to_csv(&from_json(&to_json(&r).unwrap()).unwrap()).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn markdown_layout() {
        let md = to_markdown(&with_aggregates());
        assert!(md.contains("| Accuracy | 79.89 | <u>72.81 ↓7.08</u> |"), "{md}");
        assert!(md.contains("Worsened GAP: 11/28 (39%)"));
    }

    #[test]
    fn surgeon_gap_bar_is_an_improvement() {
        let svg = to_svg(&replay("inlp"));
        let gap_bar = svg
            .lines()
            .filter(|l| l.contains(r#"data-class="Surgeon""#))
            .last()
            .unwrap();
        assert!(gap_bar.contains(r#"class="improved""#), "{gap_bar}");
        assert!(gap_bar.contains("-10.63"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let r = with_aggregates();
        for f in Format::ALL {
            assert_eq!(render(&r, f).unwrap(), render(&r.clone(), f).unwrap());
        }
        let dir = tempfile::tempdir().unwrap();
        let a = emit(&r, dir.path(), &Format::ALL).unwrap();
        let first: Vec<Vec<u8>> = a.iter().map(|p| fs::read(p).unwrap()).collect();
        emit(&r, dir.path(), &Format::ALL).unwrap();
        let second: Vec<Vec<u8>> = a.iter().map(|p| fs::read(p).unwrap()).collect();
        assert_eq!(first, second);
        assert!(a[0].ends_with("eo.json"));
    }
}
