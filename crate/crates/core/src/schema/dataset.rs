//! Datasets of encoded profiles: ingestion, writing and splitting.
//!
//! # Delimited-text layout
//!
//! UTF-8, comma-delimited, one record per line. The header names every group
//! and flag of the schema (any order). Two optional columns are recognised:
//! `id` (record identifier, defaults to the zero-based row index) and `text`
//! (associated review text, quoted as needed). Flag cells accept `0`/`1` or
//! `false`/`true`.
//!
//! The record-per-line variant ([`DatasetFormat::JsonLines`]) holds one JSON
//! object per line with the same keys.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use rand::seq::SliceRandom;

use super::{encode, AttributeSchema, Profile, VisibleVector};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
    Unassigned,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub id: String,
    pub profile: Profile,
    pub visible: VisibleVector,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    schema: Arc<AttributeSchema>,
    records: Vec<Record>,
    splits: Vec<Split>,
}

impl Dataset {
    /// Builds a dataset; every record must encode to its stored vector.
    pub fn new(schema: Arc<AttributeSchema>, records: Vec<Record>) -> Result<Self> {
        for r in &records {
            let v = encode(&r.profile, &schema)?;
            if v != r.visible {
                return Err(Error::InvalidVector(format!(
                    "record {} does not match its encoded profile",
                    r.id
                )));
            }
        }
        let splits = vec![Split::Unassigned; records.len()];
        Ok(Self {
            schema,
            records,
            splits,
        })
    }

    pub fn from_profiles(schema: Arc<AttributeSchema>, profiles: Vec<Profile>) -> Result<Self> {
        let records = profiles
            .into_iter()
            .enumerate()
            .map(|(i, profile)| {
                let visible = encode(&profile, &schema)?;
                Ok(Record {
                    id: i.to_string(),
                    profile,
                    visible,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            splits: vec![Split::Unassigned; records.len()],
            schema,
            records,
        })
    }

    pub fn empty(schema: Arc<AttributeSchema>) -> Self {
        Self {
            schema,
            records: Vec::new(),
            splits: Vec::new(),
        }
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn schema_arc(&self) -> Arc<AttributeSchema> {
        Arc::clone(&self.schema)
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn splits(&self) -> &[Split] {
        &self.splits
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Copy of the records carrying `label`, in original order.
    pub fn subset(&self, label: Split) -> Dataset {
        let records: Vec<Record> = self
            .records
            .iter()
            .zip(&self.splits)
            .filter(|(_, s)| **s == label)
            .map(|(r, _)| r.clone())
            .collect();
        Dataset {
            splits: vec![label; records.len()],
            schema: Arc::clone(&self.schema),
            records,
        }
    }

    /// Visible vectors stacked row-wise as an `n × J` matrix.
    pub fn visible_matrix(&self) -> Array2<f64> {
        let j = self.schema.visible_dim();
        let mut m = Array2::zeros((self.records.len(), j));
        for (mut row, r) in m.rows_mut().into_iter().zip(&self.records) {
            for (dst, &b) in row.iter_mut().zip(r.visible.bits()) {
                *dst = f64::from(b);
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DatasetFormat {
    #[default]
    Csv,
    JsonLines,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    /// Fail on the first malformed row instead of collecting row errors.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub dataset: Dataset,
    pub row_errors: Vec<RowError>,
    pub warnings: Vec<String>,
}

struct Columns {
    id: Option<usize>,
    text: Option<usize>,
    groups: Vec<(String, usize)>,
    flags: Vec<(String, usize)>,
}

fn map_header(header: &[String], schema: &AttributeSchema) -> Result<Columns> {
    let mut cols = Columns {
        id: None,
        text: None,
        groups: Vec::new(),
        flags: Vec::new(),
    };
    let mut seen = BTreeMap::new();
    for (i, name) in header.iter().enumerate() {
        if seen.insert(name.as_str(), i).is_some() {
            return Err(Error::SchemaMismatch(format!("duplicate column {name:?}")));
        }
    }
    for g in schema.groups() {
        let i = seen
            .get(g.name.as_str())
            .ok_or_else(|| Error::SchemaMismatch(format!("missing column for group {:?}", g.name)))?;
        cols.groups.push((g.name.clone(), *i));
    }
    for f in schema.flags() {
        let i = seen
            .get(f.as_str())
            .ok_or_else(|| Error::SchemaMismatch(format!("missing column for flag {f:?}")))?;
        cols.flags.push((f.clone(), *i));
    }
    for (name, &i) in &seen {
        match *name {
            "id" => cols.id = Some(i),
            "text" => cols.text = Some(i),
            _ if schema.group_index(name).is_some() || schema.flag_index(name).is_ok() => {}
            _ => return Err(Error::SchemaMismatch(format!("unknown column {name:?}"))),
        }
    }
    Ok(cols)
}

fn parse_flag(raw: &str) -> std::result::Result<bool, String> {
    match raw.trim() {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        other => Err(format!("flag value {other:?} is not 0/1")),
    }
}

fn build_row(
    cells: &[&str],
    cols: &Columns,
    schema: &AttributeSchema,
    index: usize,
) -> std::result::Result<Record, String> {
    let width = cols
        .groups
        .iter()
        .chain(&cols.flags)
        .map(|(_, i)| *i)
        .chain(cols.id)
        .chain(cols.text)
        .max()
        .map_or(0, |m| m + 1);
    if cells.len() < width {
        return Err(format!("expected {width} fields, got {}", cells.len()));
    }
    let mut profile = Profile::new();
    for (g, i) in &cols.groups {
        profile.assignments.insert(g.clone(), cells[*i].trim().to_owned());
    }
    for (f, i) in &cols.flags {
        profile.flags.insert(f.clone(), parse_flag(cells[*i])?);
    }
    profile.text = cols.text.map(|i| cells[i].to_owned()).filter(|t| !t.is_empty());
    let visible = encode(&profile, schema).map_err(|e| e.to_string())?;
    let id = cols
        .id
        .map(|i| cells[i].trim().to_owned())
        .unwrap_or_else(|| index.to_string());
    Ok(Record { id, profile, visible })
}

/// Reads a dataset file. Malformed rows are collected in
/// [`IngestOutcome::row_errors`] unless `options.strict` is set.
pub fn ingest(
    path: impl AsRef<Path>,
    format: DatasetFormat,
    schema: Arc<AttributeSchema>,
    options: IngestOptions,
) -> Result<IngestOutcome> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    match format {
        DatasetFormat::Csv => ingest_csv(file, schema, options),
        DatasetFormat::JsonLines => ingest_jsonl(BufReader::new(file), path, schema, options),
    }
}

fn finish(
    schema: Arc<AttributeSchema>,
    records: Vec<Record>,
    row_errors: Vec<RowError>,
    mut warnings: Vec<String>,
) -> IngestOutcome {
    if records.is_empty() {
        warnings.push("dataset contains no records".to_owned());
    }
    if !row_errors.is_empty() {
        warnings.push(format!("{} malformed rows skipped", row_errors.len()));
    }
    IngestOutcome {
        dataset: Dataset {
            splits: vec![Split::Unassigned; records.len()],
            schema,
            records,
        },
        row_errors,
        warnings,
    }
}

fn ingest_csv<R: std::io::Read>(
    reader: R,
    schema: Arc<AttributeSchema>,
    options: IngestOptions,
) -> Result<IngestOutcome> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut rows = rdr.records();
    let header = match rows.next() {
        None => return Ok(finish(schema, Vec::new(), Vec::new(), Vec::new())),
        Some(h) => h?,
    };
    let header: Vec<String> = header.iter().map(|h| h.trim().to_owned()).collect();
    let cols = map_header(&header, &schema)?;
    let mut records = Vec::new();
    let mut row_errors = Vec::new();
    for (index, row) in rows.enumerate() {
        let row = row?;
        let line = row.position().map_or(index + 2, |p| p.line() as usize);
        let cells: Vec<&str> = row.iter().collect();
        if cells.len() == 1 && cells[0].trim().is_empty() {
            continue;
        }
        match build_row(&cells, &cols, &schema, index) {
            Ok(r) => records.push(r),
            Err(message) if options.strict => return Err(Error::Row { line, message }),
            Err(message) => row_errors.push(RowError { line, message }),
        }
    }
    Ok(finish(schema, records, row_errors, Vec::new()))
}

fn ingest_jsonl<R: BufRead>(
    reader: R,
    path: &Path,
    schema: Arc<AttributeSchema>,
    options: IngestOptions,
) -> Result<IngestOutcome> {
    let mut records = Vec::new();
    let mut row_errors = Vec::new();
    let mut header: Option<(Vec<String>, Columns)> = None;
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: std::result::Result<BTreeMap<String, serde_json::Value>, _> = serde_json::from_str(&line);
        let outcome = parsed.map_err(|e| e.to_string()).and_then(|obj| {
            let keys: Vec<String> = obj.keys().cloned().collect();
            if header.as_ref().map(|(k, _)| k != &keys).unwrap_or(true) {
                let cols = map_header(&keys, &schema).map_err(|e| e.to_string())?;
                header = Some((keys, cols));
            }
            let cells: Vec<String> = obj
                .values()
                .map(|v| match v {
                    serde_json::Value::String(s) => s.clone(),
                    serde_json::Value::Bool(b) => u8::from(*b).to_string(),
                    serde_json::Value::Null => String::new(),
                    other => other.to_string(),
                })
                .collect();
            let refs: Vec<&str> = cells.iter().map(String::as_str).collect();
            let (_, cols) = header.as_ref().expect("header set above");
            build_row(&refs, cols, &schema, records.len() + row_errors.len())
        });
        match outcome {
            Ok(r) => records.push(r),
            Err(message) if options.strict => return Err(Error::Row { line: n + 1, message }),
            Err(message) => row_errors.push(RowError { line: n + 1, message }),
        }
    }
    Ok(finish(schema, records, row_errors, Vec::new()))
}

/// Writes `dataset` in the delimited-text layout. A `text` column is emitted
/// only when at least one record carries text.
pub fn write_dataset<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let schema = dataset.schema();
    let with_text = dataset.records.iter().any(|r| r.profile.text.is_some());
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_owned()];
    header.extend(schema.groups().iter().map(|g| g.name.clone()));
    header.extend(schema.flags().iter().cloned());
    if with_text {
        header.push("text".to_owned());
    }
    w.write_record(&header)?;
    for r in &dataset.records {
        let mut row = vec![r.id.clone()];
        for g in schema.groups() {
            row.push(r.profile.assignments[&g.name].clone());
        }
        for f in schema.flags() {
            row.push(if r.profile.flags[f] { "1" } else { "0" }.to_owned());
        }
        if with_text {
            row.push(r.profile.text.clone().unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<dataset writer>", e))?;
    Ok(())
}

/// Seed-deterministic partition into `(train, val, test)` of the given sizes;
/// remaining records are labelled [`Split::Unassigned`].
pub fn split(dataset: &Dataset, sizes: (usize, usize, usize), seed: u64) -> Result<Dataset> {
    let (train, val, test) = sizes;
    let requested = train + val + test;
    if requested > dataset.len() {
        return Err(Error::SplitTooLarge {
            requested,
            available: dataset.len(),
        });
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let mut splits = vec![Split::Unassigned; dataset.len()];
    for (rank, &i) in order.iter().enumerate() {
        splits[i] = if rank < train {
            Split::Train
        } else if rank < train + val {
            Split::Val
        } else if rank < requested {
            Split::Test
        } else {
            Split::Unassigned
        };
    }
    Ok(Dataset {
        schema: dataset.schema_arc(),
        records: dataset.records.clone(),
        splits,
    })
}
