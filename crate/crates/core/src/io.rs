//! File formats and run records.
//!
//! All files use 1-based indices. Tables are CSV, records are JSON.
//!
//! | file      | columns            |
//! |-----------|--------------------|
//! | p-values  | `index,pvalue` or a single headerless column |
//! | edges     | `i,j`              |
//! | groups    | `index,group` (group is any label) |
//! | weights   | `index,weight`     |
//! | statistics| `index,statistic`  |

use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::AdmmConfig;
use crate::procedures::{
    bh, sabha, storey_bh, MethodConfig, PValues, RejectionResult, WeightVector,
};
use crate::stats::normal_cdf;
use crate::structure::{Graph, Grouping, StructureSpec};
use crate::weights::{estimate_weights, sign_grouping};

struct Row {
    line: usize,
    fields: Vec<String>,
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Reads a CSV file into rows, dropping a header line whose first field is
/// not numeric.
fn read_rows(path: &Path) -> Result<Vec<Row>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(k + 1, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if k == 0 && rec.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        rows.push(Row {
            line,
            fields: rec.iter().map(String::from).collect(),
        });
    }
    Ok(rows)
}

fn field<'a>(path: &Path, row: &'a Row, i: usize, width: usize) -> Result<&'a str> {
    if row.fields.len() != width {
        return Err(parse_err(
            path,
            row.line,
            format!("expected {width} columns, found {}", row.fields.len()),
        ));
    }
    Ok(&row.fields[i])
}

fn parse_index(path: &Path, row: &Row, s: &str) -> Result<usize> {
    match s.parse::<usize>() {
        Ok(i) if i >= 1 => Ok(i),
        _ => Err(parse_err(
            path,
            row.line,
            format!("`{s}` is not a 1-based index"),
        )),
    }
}

fn parse_real(path: &Path, row: &Row, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| parse_err(path, row.line, format!("`{s}` is not a number")))
}

/// Reads `index,value` rows (or a single headerless column) into a dense
/// vector, checking that indices are exactly `1..=n`.
fn read_indexed_reals(path: &Path) -> Result<Vec<(usize, f64)>> {
    let rows = read_rows(path)?;
    if rows.is_empty() {
        return Err(Error::invalid(format!(
            "{} has no data rows",
            path.display()
        )));
    }
    let width = rows[0].fields.len();
    if width == 1 {
        return rows
            .iter()
            .map(|r| Ok((r.line, parse_real(path, r, field(path, r, 0, 1)?)?)))
            .collect();
    }
    let n = rows.len();
    let mut out: Vec<Option<(usize, f64)>> = vec![None; n];
    for r in &rows {
        let i = parse_index(path, r, field(path, r, 0, 2)?)?;
        let v = parse_real(path, r, field(path, r, 1, 2)?)?;
        if i > n {
            return Err(parse_err(
                path,
                r.line,
                format!("index {i} exceeds the row count {n}"),
            ));
        }
        if out[i - 1].replace((r.line, v)).is_some() {
            return Err(parse_err(path, r.line, format!("index {i} appears twice")));
        }
    }
    Ok(out
        .into_iter()
        .map(|o| o.expect("all indices present"))
        .collect())
}

/// Reads a p-value file.
pub fn read_pvalues(path: impl AsRef<Path>) -> Result<PValues> {
    let path = path.as_ref();
    let rows = read_indexed_reals(path)?;
    for &(line, v) in &rows {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::invalid(format!(
                "{}:{line}: p-value {v} is outside [0, 1]",
                path.display()
            )));
        }
    }
    PValues::new(rows.into_iter().map(|(_, v)| v).collect())
}

/// Reads per-hypothesis test statistics.
pub fn read_statistics(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let rows = read_indexed_reals(path)?;
    for &(line, v) in &rows {
        if !v.is_finite() {
            return Err(Error::invalid(format!(
                "{}:{line}: statistic {v} is not finite",
                path.display()
            )));
        }
    }
    Ok(rows.into_iter().map(|(_, v)| v).collect())
}

/// Reads a weights file written by [`write_weights`].
pub fn read_weights(path: impl AsRef<Path>) -> Result<WeightVector> {
    let path = path.as_ref();
    let rows = read_indexed_reals(path)?;
    for &(line, v) in &rows {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::invalid(format!(
                "{}:{line}: weight {v} is outside (0, 1]",
                path.display()
            )));
        }
    }
    WeightVector::new(rows.into_iter().map(|(_, v)| v).collect())
}

/// Reads an `i,j` edge list over nodes `1..=n`.
pub fn read_edges(path: impl AsRef<Path>, n: usize) -> Result<Graph> {
    let path = path.as_ref();
    let rows = read_rows(path)?;
    let mut edges = Vec::with_capacity(rows.len());
    for r in &rows {
        let i = parse_index(path, r, field(path, r, 0, 2)?)?;
        let j = parse_index(path, r, field(path, r, 1, 2)?)?;
        edges.push((i - 1, j - 1));
    }
    Graph::new(n, edges)
}

/// Reads an `index,group` file covering `1..=n`. Group labels are
/// arbitrary strings, numbered in order of first appearance.
pub fn read_grouping(path: impl AsRef<Path>, n: usize) -> Result<Grouping> {
    let path = path.as_ref();
    let rows = read_rows(path)?;
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut labels: Vec<Option<usize>> = vec![None; n];
    for r in &rows {
        let i = parse_index(path, r, field(path, r, 0, 2)?)?;
        if i > n {
            return Err(Error::invalid(format!(
                "{}:{}: index {i} is outside 1..={n}",
                path.display(),
                r.line
            )));
        }
        let next = ids.len();
        let g = *ids.entry(r.fields[1].clone()).or_insert(next);
        if labels[i - 1].replace(g).is_some() {
            return Err(parse_err(path, r.line, format!("index {i} appears twice")));
        }
    }
    if let Some(i) = labels.iter().position(Option::is_none) {
        return Err(Error::invalid(format!(
            "{}: index {} has no group",
            path.display(),
            i + 1
        )));
    }
    Grouping::from_labels(labels.into_iter().map(Option::unwrap).collect())
}

/// Writes `index,weight` rows.
pub fn write_weights<W: Write>(w: W, q: &WeightVector) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["index", "weight"])?;
    for (i, v) in q.q.iter().enumerate() {
        wtr.write_record([(i + 1).to_string(), v.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes one `index,pvalue,threshold` row per rejection.
pub fn write_rejections<W: Write>(w: W, result: &RejectionResult, p: &PValues) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["index", "pvalue", "threshold"])?;
    for &i in &result.rejected {
        wtr.write_record([
            (i + 1).to_string(),
            p[i].to_string(),
            result.thresholds[i].to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    File::create(path)?.write_all(contents)?;
    Ok(())
}

/// Inputs to one adjustment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub pvalues: PValues,
    pub grouping: Option<Grouping>,
    pub graph: Option<Graph>,
    pub statistics: Option<Vec<f64>>,
    pub sources: Vec<PathBuf>,
}

impl Dataset {
    pub fn from_pvalues(pvalues: PValues) -> Self {
        Dataset {
            pvalues,
            grouping: None,
            graph: None,
            statistics: None,
            sources: Vec::new(),
        }
    }

    /// Loads the p-values plus any auxiliary files, checking that they all
    /// refer to the same `n`.
    pub fn load(
        pvalues: &Path,
        groups: Option<&Path>,
        edges: Option<&Path>,
        statistics: Option<&Path>,
    ) -> Result<Self> {
        let p = read_pvalues(pvalues)?;
        let n = p.len();
        let mut ds = Dataset::from_pvalues(p);
        ds.sources.push(pvalues.to_path_buf());
        if let Some(path) = groups {
            ds.grouping = Some(read_grouping(path, n)?);
            ds.sources.push(path.to_path_buf());
        }
        if let Some(path) = edges {
            ds.graph = Some(read_edges(path, n)?);
            ds.sources.push(path.to_path_buf());
        }
        if let Some(path) = statistics {
            let s = read_statistics(path)?;
            if s.len() != n {
                return Err(Error::invalid(format!(
                    "{} has {} statistics for {n} p-values",
                    path.display(),
                    s.len()
                )));
            }
            ds.statistics = Some(s);
            ds.sources.push(path.to_path_buf());
        }
        Ok(ds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdjustMethod {
    Bh,
    Storey,
    Sabha,
}

/// Where SABHA's weights come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "source")]
pub enum WeightSource {
    /// Fit with the named structure (`ordered-step`, `grouped`, `tv-l1`, ...).
    Estimate { structure: String },
    /// Read from a weights file; the values are stored in the record.
    File { path: PathBuf },
}

/// Everything needed to repeat a run on the same dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: AdjustMethod,
    pub alpha: f64,
    pub tau: f64,
    pub epsilon: f64,
    pub m: Option<f64>,
    pub weights: Option<WeightSource>,
    pub seed: u64,
}

/// Builds a structure spec by name from the dataset's auxiliary inputs.
pub fn build_spec(name: &str, epsilon: f64, m: Option<f64>, ds: &Dataset) -> Result<StructureSpec> {
    let need = |what: &str, flag: &str| {
        Error::invalid(format!("structure `{name}` needs {what} ({flag})"))
    };
    match name {
        "ordered-step" => StructureSpec::ordered_step(epsilon),
        "ordered-mle" => StructureSpec::ordered_mle(epsilon),
        "constant" => StructureSpec::constant(epsilon),
        "grouped" => {
            let g = ds
                .grouping
                .clone()
                .ok_or_else(|| need("a grouping", "--groups"))?;
            StructureSpec::grouped(epsilon, g)
        }
        "tv-l1" => {
            let g = ds
                .graph
                .clone()
                .ok_or_else(|| need("an edge list", "--edges"))?;
            let m = m.ok_or_else(|| need("a budget", "--m"))?;
            StructureSpec::tv_graph(epsilon, g, m)
        }
        "sign-split" => {
            let x = ds
                .statistics
                .as_ref()
                .ok_or_else(|| need("statistics", "--statistics"))?;
            let (grouping, _) = sign_grouping(x, normal_cdf)?;
            StructureSpec::sign_split(epsilon, grouping)
        }
        other => Err(Error::invalid(format!("unknown structure `{other}`"))),
    }
}

/// Rejections and weights of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub result: RejectionResult,
    pub weights: WeightVector,
}

/// Runs the configured procedure. `file_weights` supplies the weights when
/// the config names a weights file.
pub fn execute(
    cfg: &RunConfig,
    ds: &Dataset,
    file_weights: Option<&WeightVector>,
    admm: &AdmmConfig,
) -> Result<RunOutput> {
    let p = &ds.pvalues;
    let n = p.len();
    let mcfg = MethodConfig::new(cfg.alpha, cfg.tau)?;
    match cfg.method {
        AdjustMethod::Bh => Ok(RunOutput {
            result: bh(p, cfg.alpha)?,
            weights: WeightVector::ones(n),
        }),
        AdjustMethod::Storey => Ok(RunOutput {
            result: storey_bh(p, &mcfg)?,
            weights: WeightVector::ones(n),
        }),
        AdjustMethod::Sabha => {
            let q = match &cfg.weights {
                Some(WeightSource::Estimate { structure }) => {
                    let spec = build_spec(structure, cfg.epsilon, cfg.m, ds)?;
                    estimate_weights(p, cfg.tau, &spec, admm)?
                }
                Some(WeightSource::File { .. }) => {
                    let q = file_weights
                        .ok_or_else(|| Error::invalid("weights file was not loaded"))?
                        .clone();
                    if q.len() != n {
                        return Err(Error::invalid(format!(
                            "{} weights for {n} p-values",
                            q.len()
                        )));
                    }
                    q.certify(p, cfg.tau)
                }
                None => return Err(Error::invalid("sabha needs --structure or --weights")),
            };
            Ok(RunOutput {
                result: sabha(p, &mcfg, &q)?,
                weights: q,
            })
        }
    }
}

/// JSON record of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: RunConfig,
    pub n: usize,
    pub k_hat: usize,
    /// 1-based indices of rejected hypotheses.
    pub rejected: Vec<usize>,
    pub weights: Vec<f64>,
    pub weights_constraint_satisfied: bool,
    pub elapsed_ms: f64,
}

impl RunRecord {
    pub fn new(config: RunConfig, out: &RunOutput, elapsed_ms: f64) -> Self {
        RunRecord {
            config,
            n: out.weights.len(),
            k_hat: out.result.k_hat,
            rejected: out.result.rejected.iter().map(|i| i + 1).collect(),
            weights: out.weights.q.clone(),
            weights_constraint_satisfied: out.weights.constraint_satisfied,
            elapsed_ms,
        }
    }

    /// Repeats the run on `ds`. Weights that came from a file are taken from
    /// the record itself.
    pub fn replay(&self, ds: &Dataset, admm: &AdmmConfig) -> Result<RunOutput> {
        let stored = match self.config.weights {
            Some(WeightSource::File { .. }) => Some(WeightVector::new(self.weights.clone())?),
            _ => None,
        };
        execute(&self.config, ds, stored.as_ref(), admm)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
