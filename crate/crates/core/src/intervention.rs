//! Counterfactual interventions on the visible layer.
//!
//! An intervention clamps one one-hot group to a target category while every
//! other bit is held fixed. Its effect is measured as the percentage change in
//! variational free energy,
//!
//! ```text
//! ΔF% = (F̃(v_intervened) − F̃(v_original)) / |F̃(v_original)| × 100
//! ```
//!
//! so that a positive value always means the intervened configuration is less
//! probable. [`Denominator::Signed`] keeps the raw (signed) denominator.

use std::fmt::Write as _;

use ndarray::ArrayView1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dbm::{score_visible, DbmParams, EntropyTerm, MeanFieldConfig};
use crate::schema::{AttributeSchema, Dataset, Record, VisibleVector};
use crate::stats::{mean_and_sd, ranks, spearman, student_t_two_sided};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterventionSpec {
    pub group: String,
    /// Only samples currently in this category are intervened on.
    #[serde(default)]
    pub source: Option<String>,
    pub target: String,
    /// Extra `(group, category)` conditions restricting the samples.
    #[serde(default)]
    pub strata: Vec<(String, String)>,
}

impl InterventionSpec {
    pub fn new(group: &str, source: Option<&str>, target: &str) -> Self {
        Self {
            group: group.to_owned(),
            source: source.map(str::to_owned),
            target: target.to_owned(),
            strata: Vec::new(),
        }
    }

    pub fn with_stratum(mut self, group: &str, category: &str) -> Self {
        self.strata.push((group.to_owned(), category.to_owned()));
        self
    }

    pub fn validate(&self, schema: &AttributeSchema) -> Result<()> {
        schema.category_position(&self.group, &self.target)?;
        if let Some(src) = &self.source {
            schema.category_position(&self.group, src)?;
            if src == &self.target {
                return Err(Error::InvalidConfig(format!(
                    "intervention source and target are both {src:?}"
                )));
            }
        }
        for (g, c) in &self.strata {
            schema.category_position(g, c)?;
        }
        Ok(())
    }

    /// `group: source -> target`, or `group: * -> target` without a source.
    pub fn label(&self) -> String {
        format!(
            "{}: {} -> {}",
            self.group,
            self.source.as_deref().unwrap_or("*"),
            self.target
        )
    }

    /// The inverse intervention, when a source category is set.
    pub fn inverse(&self) -> Option<Self> {
        self.source.as_ref().map(|src| Self {
            group: self.group.clone(),
            source: Some(self.target.clone()),
            target: src.clone(),
            strata: self.strata.clone(),
        })
    }

    /// Whether `v` meets the source filter and every stratum condition.
    pub fn selects(&self, v: &VisibleVector, schema: &AttributeSchema) -> Result<bool> {
        let hot = |g: &str, c: &str| -> Result<bool> { Ok(v.bits()[schema.unit_index(g, c)?] == 1) };
        if let Some(src) = &self.source {
            if !hot(&self.group, src)? {
                return Ok(false);
            }
        }
        for (g, c) in &self.strata {
            if !hot(g, c)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Moves the hot bit of `spec.group` to `spec.target`; all other bits are
/// copied unchanged.
pub fn apply_intervention(
    v: &VisibleVector,
    spec: &InterventionSpec,
    schema: &AttributeSchema,
) -> Result<VisibleVector> {
    v.validate(schema)?;
    spec.validate(schema)?;
    if let Some(src) = &spec.source {
        if v.bits()[schema.unit_index(&spec.group, src)?] != 1 {
            return Err(Error::FilterMismatch(format!("group {:?} is not {src:?}", spec.group)));
        }
    }
    let range = schema.group_range(&spec.group)?;
    let target = schema.unit_index(&spec.group, &spec.target)?;
    let mut out = v.clone();
    let bits = out.bits_mut();
    bits[range].fill(0);
    bits[target] = 1;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub p_two_sided: f64,
    pub df: usize,
}

/// One-sample t-test of the mean of paired differences against zero.
pub fn paired_t_test(differences: &[f64]) -> Result<TTestResult> {
    let (mean, sd) = mean_and_sd(differences)?;
    if sd == 0.0 || !sd.is_finite() {
        return Err(Error::DegenerateVariance);
    }
    let n = differences.len();
    let t = mean / (sd / (n as f64).sqrt());
    let df = n - 1;
    Ok(TTestResult {
        t,
        p_two_sided: student_t_two_sided(t, df as f64),
        df,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Denominator {
    /// Divide by `|F̃(v_original)|`.
    #[default]
    Absolute,
    /// Divide by the signed `F̃(v_original)`.
    Signed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeltaOptions {
    pub denominator: Denominator,
    pub entropy: EntropyTerm,
    /// Records with `|F̃(v_original)|` below this are excluded.
    pub min_abs_free_energy: f64,
}

impl Default for DeltaOptions {
    fn default() -> Self {
        Self {
            denominator: Denominator::Absolute,
            entropy: EntropyTerm::Subtract,
            min_abs_free_energy: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleDelta {
    pub id: String,
    pub f_original: f64,
    pub f_intervened: f64,
    pub delta_pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterventionResult {
    pub records: Vec<SampleDelta>,
    pub count: usize,
    pub mean_delta_pct: f64,
    /// `None` when fewer than two records remain or every ΔF% is identical.
    pub t_test: Option<TTestResult>,
    pub excluded: Vec<String>,
}

impl InterventionResult {
    pub fn is_degenerate(&self) -> bool {
        self.t_test.is_none()
    }

    pub fn significance_marker(&self) -> &'static str {
        match self.t_test {
            Some(t) if t.p_two_sided < 0.001 => "†",
            _ => "",
        }
    }
}

pub fn delta_pct(f_original: f64, f_intervened: f64, denominator: Denominator) -> f64 {
    let denom = match denominator {
        Denominator::Absolute => f_original.abs(),
        Denominator::Signed => f_original,
    };
    (f_intervened - f_original) / denom * 100.0
}

fn free_energy(v: ArrayView1<'_, f64>, params: &DbmParams, mf: &MeanFieldConfig, entropy: EntropyTerm) -> Result<f64> {
    score_visible(v, params, mf, entropy).map(|(f, _)| f)
}

/// ΔF% for every record selected by `spec`, with a t-test of the mean.
pub fn delta_free_energy(
    dataset: &Dataset,
    spec: &InterventionSpec,
    params: &DbmParams,
    mf: &MeanFieldConfig,
    opts: &DeltaOptions,
) -> Result<InterventionResult> {
    let schema = dataset.schema();
    spec.validate(schema)?;
    let selected: Vec<&Record> = dataset
        .records()
        .iter()
        .filter_map(|r| match spec.selects(&r.visible, schema) {
            Ok(true) => Some(Ok(r)),
            Ok(false) => None,
            Err(e) => Some(Err(e)),
        })
        .collect::<Result<_>>()?;
    if selected.is_empty() {
        return Err(Error::Empty("no records match the intervention filter"));
    }
    let scored = selected
        .par_iter()
        .map(|r| {
            let moved = apply_intervention(&r.visible, spec, schema)?;
            let f0 = free_energy(r.visible.to_array().view(), params, mf, opts.entropy)?;
            let f1 = free_energy(moved.to_array().view(), params, mf, opts.entropy)?;
            Ok((r.id.clone(), f0, f1))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::with_capacity(scored.len());
    let mut excluded = Vec::new();
    for (id, f0, f1) in scored {
        if f0.abs() < opts.min_abs_free_energy {
            excluded.push(id);
            continue;
        }
        records.push(SampleDelta {
            id,
            f_original: f0,
            f_intervened: f1,
            delta_pct: delta_pct(f0, f1, opts.denominator),
        });
    }
    if records.is_empty() {
        return Err(Error::Empty("every selected record has near-zero free energy"));
    }
    let deltas: Vec<f64> = records.iter().map(|r| r.delta_pct).collect();
    let mean_delta_pct = deltas.iter().sum::<f64>() / deltas.len() as f64;
    Ok(InterventionResult {
        count: records.len(),
        t_test: paired_t_test(&deltas).ok(),
        mean_delta_pct,
        records,
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stratum {
    pub label: String,
    #[serde(default)]
    pub conditions: Vec<(String, String)>,
}

impl Stratum {
    pub fn all() -> Self {
        Self {
            label: "all".to_owned(),
            conditions: Vec::new(),
        }
    }

    pub fn new(label: &str, conditions: &[(&str, &str)]) -> Self {
        Self {
            label: label.to_owned(),
            conditions: conditions
                .iter()
                .map(|(g, c)| ((*g).to_owned(), (*c).to_owned()))
                .collect(),
        }
    }
}

/// Interventions crossed with strata. An empty stratum list means a single
/// unrestricted stratum.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(default, rename = "intervention")]
    pub interventions: Vec<InterventionSpec>,
    #[serde(default, rename = "stratum")]
    pub strata: Vec<Stratum>,
}

impl GridSpec {
    fn effective_strata(&self) -> Vec<Stratum> {
        if self.strata.is_empty() {
            vec![Stratum::all()]
        } else {
            self.strata.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub intervention: String,
    pub stratum: String,
    pub outcome: std::result::Result<InterventionResult, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    pub cells: Vec<GridCell>,
}

/// Column header of [`render_delimited`].
pub const GRID_COLUMNS: [&str; 7] = ["spec", "stratum", "n", "mean_delta_f_pct", "t", "p", "excluded"];

/// Flat summary of one grid cell, as written to and read from report files.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub intervention: String,
    pub stratum: String,
    pub n: usize,
    pub mean_delta_pct: Option<f64>,
    pub t: Option<f64>,
    pub p: Option<f64>,
    pub excluded: usize,
    /// Why a cell has no result.
    pub note: Option<String>,
}

impl GridRow {
    pub fn significance_marker(&self) -> &'static str {
        match self.p {
            Some(p) if p < 0.001 => "†",
            _ => "",
        }
    }
}

impl GridReport {
    pub fn cell(&self, intervention: &str, stratum: &str) -> Option<&GridCell> {
        self.cells
            .iter()
            .find(|c| c.intervention == intervention && c.stratum == stratum)
    }

    pub fn rows(&self) -> Vec<GridRow> {
        self.cells
            .iter()
            .map(|c| match &c.outcome {
                Ok(r) => GridRow {
                    intervention: c.intervention.clone(),
                    stratum: c.stratum.clone(),
                    n: r.count,
                    mean_delta_pct: Some(r.mean_delta_pct),
                    t: r.t_test.map(|t| t.t),
                    p: r.t_test.map(|t| t.p_two_sided),
                    excluded: r.excluded.len(),
                    note: None,
                },
                Err(e) => GridRow {
                    intervention: c.intervention.clone(),
                    stratum: c.stratum.clone(),
                    n: 0,
                    mean_delta_pct: None,
                    t: None,
                    p: None,
                    excluded: 0,
                    note: Some(e.clone()),
                },
            })
            .collect()
    }

    pub fn to_delimited(&self) -> String {
        render_delimited(&self.rows())
    }

    pub fn to_table(&self) -> String {
        render_table(&self.rows())
    }

    /// Per-sample rows: `spec,stratum,id,f_original,f_intervened,delta_f_pct`.
    pub fn to_detail(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let _ = w.write_record(["spec", "stratum", "id", "f_original", "f_intervened", "delta_f_pct"]);
        for c in &self.cells {
            if let Ok(r) = &c.outcome {
                for s in &r.records {
                    let _ = w.write_record([
                        c.intervention.as_str(),
                        c.stratum.as_str(),
                        s.id.as_str(),
                        &s.f_original.to_string(),
                        &s.f_intervened.to_string(),
                        &s.delta_pct.to_string(),
                    ]);
                }
            }
        }
        String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
    }
}

fn opt_field(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Comma-delimited rows under [`GRID_COLUMNS`]. Failed cells report `n = 0`
/// and leave the statistics empty; degenerate cells leave `t` and `p` empty.
pub fn render_delimited(rows: &[GridRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record(GRID_COLUMNS);
    for r in rows {
        let _ = w.write_record([
            r.intervention.clone(),
            r.stratum.clone(),
            r.n.to_string(),
            opt_field(r.mean_delta_pct),
            opt_field(r.t),
            opt_field(r.p),
            r.excluded.to_string(),
        ]);
    }
    String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
}

pub fn parse_delimited(text: &str) -> Result<Vec<GridRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != GRID_COLUMNS {
        return Err(Error::Parse(format!("grid header must be {}", GRID_COLUMNS.join(","))));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |what: &str| Error::Row {
            line,
            message: format!("bad {what}"),
        };
        let num = |k: usize, what: &str| -> Result<Option<f64>> {
            match &rec[k] {
                "" => Ok(None),
                s => s.parse().map(Some).map_err(|_| bad(what)),
            }
        };
        let mean = num(3, "mean")?;
        rows.push(GridRow {
            intervention: rec[0].to_owned(),
            stratum: rec[1].to_owned(),
            n: rec[2].parse().map_err(|_| bad("n"))?,
            mean_delta_pct: mean,
            t: num(4, "t")?,
            p: num(5, "p")?,
            excluded: rec[6].parse().map_err(|_| bad("excluded"))?,
            note: mean.is_none().then(|| "no matching records".to_owned()),
        });
    }
    Ok(rows)
}

/// Aligned human-readable table; `†` marks p < 0.001.
pub fn render_table(rows: &[GridRow]) -> String {
    let cells: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            let mean = match (r.mean_delta_pct, &r.note) {
                (Some(m), _) => format!("{m:+.2}%{}", r.significance_marker()),
                (None, Some(note)) => format!("({note})"),
                (None, None) => "-".into(),
            };
            let (t, p) = match (r.t, r.p, r.mean_delta_pct) {
                (Some(t), Some(p), _) => (format!("{t:.3}"), format!("{p:.3e}")),
                (_, _, Some(_)) => ("-".into(), "degenerate".into()),
                _ => ("-".into(), "-".into()),
            };
            [
                r.intervention.clone(),
                r.stratum.clone(),
                r.n.to_string(),
                mean,
                t,
                p,
                r.excluded.to_string(),
            ]
        })
        .collect();
    let header = ["intervention", "stratum", "n", "mean dF%", "t", "p", "excluded"];
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in &cells {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |row: &[&str]| {
        let mut s = String::new();
        for (i, (cell, w)) in row.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            let pad = " ".repeat(w - cell.chars().count());
            // labels left-aligned, numbers right-aligned
            if i >= 2 {
                s.push_str(&pad);
                s.push_str(cell);
            } else {
                s.push_str(cell);
                s.push_str(&pad);
            }
        }
        s.trim_end().to_owned()
    };
    let mut out = line(&header);
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for r in &cells {
        let refs: Vec<&str> = r.iter().map(String::as_str).collect();
        out.push_str(&line(&refs));
        out.push('\n');
    }
    out
}

/// Runs every `(intervention, stratum)` cell. Invalid specs abort the run;
/// empty cells are recorded and the grid continues.
pub fn run_experiment_grid(
    dataset: &Dataset,
    grid: &GridSpec,
    params: &DbmParams,
    mf: &MeanFieldConfig,
    opts: &DeltaOptions,
) -> Result<GridReport> {
    let strata = grid.effective_strata();
    for spec in &grid.interventions {
        spec.validate(dataset.schema())?;
    }
    for s in &strata {
        for (g, c) in &s.conditions {
            dataset.schema().category_position(g, c)?;
        }
    }
    let mut cells = Vec::with_capacity(grid.interventions.len() * strata.len());
    for spec in &grid.interventions {
        for stratum in &strata {
            let mut cell_spec = spec.clone();
            cell_spec.strata.extend(stratum.conditions.iter().cloned());
            let outcome = match delta_free_energy(dataset, &cell_spec, params, mf, opts) {
                Ok(r) => Ok(r),
                Err(Error::Empty(msg)) => Err(msg.to_owned()),
                Err(e) => return Err(e),
            };
            cells.push(GridCell {
                intervention: spec.label(),
                stratum: stratum.label.clone(),
                outcome,
            });
        }
    }
    Ok(GridReport { cells })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConsistencyThresholds {
    /// Largest tolerated `|train − test|` of mean ΔF%, in percentage points.
    pub max_abs_diff_pct: f64,
    pub min_rank_correlation: f64,
}

impl Default for ConsistencyThresholds {
    fn default() -> Self {
        Self {
            max_abs_diff_pct: 3.0,
            min_rank_correlation: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellComparison {
    pub intervention: String,
    pub stratum: String,
    pub train: f64,
    pub test: f64,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub cells: Vec<CellComparison>,
    /// Cells that failed in either grid and were not compared.
    pub skipped: Vec<String>,
    pub max_abs_diff: f64,
    pub rank_correlation: Option<f64>,
    /// Train and test rank the compared cells identically.
    pub rank_order_preserved: bool,
    pub passed: bool,
}

/// Compares two grids of identical shape cell by cell.
pub fn train_test_consistency(
    train: &GridReport,
    test: &GridReport,
    thresholds: &ConsistencyThresholds,
) -> Result<ConsistencyReport> {
    compare_grid_rows(&train.rows(), &test.rows(), thresholds)
}

pub fn compare_grid_rows(
    train: &[GridRow],
    test: &[GridRow],
    thresholds: &ConsistencyThresholds,
) -> Result<ConsistencyReport> {
    let same_shape = train.len() == test.len()
        && train
            .iter()
            .zip(test)
            .all(|(a, b)| a.intervention == b.intervention && a.stratum == b.stratum);
    if !same_shape {
        return Err(Error::InvalidConfig("train and test grids differ in shape".into()));
    }
    let mut cells = Vec::new();
    let mut skipped = Vec::new();
    for (a, b) in train.iter().zip(test) {
        match (a.mean_delta_pct, b.mean_delta_pct) {
            (Some(x), Some(y)) => cells.push(CellComparison {
                intervention: a.intervention.clone(),
                stratum: a.stratum.clone(),
                train: x,
                test: y,
                abs_diff: (x - y).abs(),
            }),
            _ => skipped.push(format!("{} | {}", a.intervention, a.stratum)),
        }
    }
    let tr: Vec<f64> = cells.iter().map(|c| c.train).collect();
    let te: Vec<f64> = cells.iter().map(|c| c.test).collect();
    let max_abs_diff = cells.iter().map(|c| c.abs_diff).fold(0.0, f64::max);
    let rank_correlation = if cells.len() == 1 {
        Some(1.0)
    } else {
        spearman(&tr, &te)
    };
    let rank_order_preserved = ranks(&tr) == ranks(&te);
    let passed = !cells.is_empty()
        && max_abs_diff < thresholds.max_abs_diff_pct
        && rank_correlation.is_some_and(|r| r >= thresholds.min_rank_correlation);
    Ok(ConsistencyReport {
        cells,
        skipped,
        max_abs_diff,
        rank_correlation,
        rank_order_preserved,
        passed,
    })
}

impl ConsistencyReport {
    /// `key=value` lines, one per compared cell, then a summary line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.cells {
            let _ = writeln!(
                out,
                "cell=\"{} | {}\" train={:.4} test={:.4} abs_diff={:.4}",
                c.intervention, c.stratum, c.train, c.test, c.abs_diff
            );
        }
        for s in &self.skipped {
            let _ = writeln!(out, "skipped=\"{s}\"");
        }
        let rho = self
            .rank_correlation
            .map_or("undefined".to_owned(), |r| format!("{r:.4}"));
        let _ = writeln!(
            out,
            "max_abs_diff={:.4} spearman={rho} rank_order_preserved={} verdict={}",
            self.max_abs_diff,
            self.rank_order_preserved,
            if self.passed { "pass" } else { "fail" }
        );
        out
    }
}
