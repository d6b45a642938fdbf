//! Categorical attribute schema and the one-hot visible layer.
//!
//! Index layout is part of the checkpoint contract: one-hot groups occupy
//! contiguous ranges in declaration order, followed by one unit per binary flag.
//!
//! # Schema text format
//!
//! ```text
//! # comment lines and blank lines are ignored
//! group brand: Lux, Major, Generic
//! group tier: Entry, Mid, High, Premium
//! flag repeat_buyer
//! ```
//!
//! Names may not contain `,`, `:`, `#` or surrounding whitespace; group and
//! flag names may not contain whitespace at all. [`AttributeSchema::render`]
//! emits the canonical form (single space after `:`, `", "` between
//! categories, `\n` line endings, groups before flags), and parsing a
//! canonical document and rendering it again reproduces it byte for byte.

mod dataset;
pub mod synthetic;

use std::collections::{BTreeMap, HashSet};
use std::ops::Range;
use std::path::Path;

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use dataset::{
    ingest, split, write_dataset, Dataset, DatasetFormat, IngestOptions, IngestOutcome, Record, RowError, Split,
};
pub use synthetic::{generate_synthetic_market, FlagModel, GroupModel, SyntheticConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryGroup {
    pub name: String,
    pub categories: Vec<String>,
}

/// Ordered description of the one-hot groups and binary flags of a profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSchema {
    groups: Vec<CategoryGroup>,
    flags: Vec<String>,
    offsets: Vec<usize>,
    visible_dim: usize,
}

fn check_token(kind: &str, name: &str, allow_space: bool) -> Result<()> {
    let bad = name.is_empty()
        || name.trim() != name
        || name.contains([',', ':', '#', '\n', '\r'])
        || (!allow_space && name.contains(char::is_whitespace));
    if bad {
        return Err(Error::InvalidSchema(format!("invalid {kind} name {name:?}")));
    }
    Ok(())
}

impl AttributeSchema {
    pub fn new(groups: Vec<CategoryGroup>, flags: Vec<String>) -> Result<Self> {
        let mut names = HashSet::new();
        let mut offsets = Vec::with_capacity(groups.len());
        let mut offset = 0;
        for g in &groups {
            check_token("group", &g.name, false)?;
            if !names.insert(g.name.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate name {:?}", g.name)));
            }
            if g.categories.is_empty() {
                return Err(Error::InvalidSchema(format!("group {:?} has no categories", g.name)));
            }
            let mut cats = HashSet::new();
            for c in &g.categories {
                check_token("category", c, true)?;
                if !cats.insert(c.as_str()) {
                    return Err(Error::InvalidSchema(format!(
                        "duplicate category {c:?} in group {:?}",
                        g.name
                    )));
                }
            }
            offsets.push(offset);
            offset += g.categories.len();
        }
        for f in &flags {
            check_token("flag", f, false)?;
            if !names.insert(f.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate name {f:?}")));
            }
        }
        let visible_dim = offset + flags.len();
        Ok(Self {
            groups,
            flags,
            offsets,
            visible_dim,
        })
    }

    /// Convenience constructor from string slices.
    pub fn from_parts(groups: &[(&str, &[&str])], flags: &[&str]) -> Result<Self> {
        Self::new(
            groups
                .iter()
                .map(|(name, cats)| CategoryGroup {
                    name: (*name).to_owned(),
                    categories: cats.iter().map(|c| (*c).to_owned()).collect(),
                })
                .collect(),
            flags.iter().map(|f| (*f).to_owned()).collect(),
        )
    }

    pub fn groups(&self) -> &[CategoryGroup] {
        &self.groups
    }

    pub fn flags(&self) -> &[String] {
        &self.flags
    }

    /// Total number of visible units `J`.
    pub fn visible_dim(&self) -> usize {
        self.visible_dim
    }

    pub fn group_index(&self, name: &str) -> Option<usize> {
        self.groups.iter().position(|g| g.name == name)
    }

    pub fn group(&self, name: &str) -> Result<&CategoryGroup> {
        self.group_index(name)
            .map(|i| &self.groups[i])
            .ok_or_else(|| Error::SchemaMismatch(format!("unknown group {name:?}")))
    }

    /// Index range of a group's one-hot block inside the visible vector.
    pub fn group_range(&self, name: &str) -> Result<Range<usize>> {
        let i = self
            .group_index(name)
            .ok_or_else(|| Error::SchemaMismatch(format!("unknown group {name:?}")))?;
        Ok(self.range_of(i))
    }

    fn range_of(&self, group: usize) -> Range<usize> {
        let start = self.offsets[group];
        start..start + self.groups[group].categories.len()
    }

    /// Position of `category` inside its group (not the visible index).
    pub fn category_position(&self, group: &str, category: &str) -> Result<usize> {
        self.group(group)?
            .categories
            .iter()
            .position(|c| c == category)
            .ok_or_else(|| Error::SchemaMismatch(format!("unknown category {category:?} in group {group:?}")))
    }

    /// Visible index of a `(group, category)` unit.
    pub fn unit_index(&self, group: &str, category: &str) -> Result<usize> {
        let range = self.group_range(group)?;
        Ok(range.start + self.category_position(group, category)?)
    }

    pub fn flag_index(&self, name: &str) -> Result<usize> {
        let flag_start = self.visible_dim - self.flags.len();
        self.flags
            .iter()
            .position(|f| f == name)
            .map(|i| flag_start + i)
            .ok_or_else(|| Error::SchemaMismatch(format!("unknown flag {name:?}")))
    }

    /// Human-readable label of each visible unit, e.g. `brand=Lux`.
    pub fn unit_labels(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.visible_dim);
        for g in &self.groups {
            out.extend(g.categories.iter().map(|c| format!("{}={}", g.name, c)));
        }
        out.extend(self.flags.iter().cloned());
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut groups = Vec::new();
        let mut flags = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row_err = |message: String| Error::Row { line: n + 1, message };
            if let Some(rest) = line.strip_prefix("group ") {
                let (name, cats) = rest
                    .split_once(':')
                    .ok_or_else(|| row_err("expected `group <name>: <categories>`".into()))?;
                groups.push(CategoryGroup {
                    name: name.trim().to_owned(),
                    categories: cats.split(',').map(|c| c.trim().to_owned()).collect(),
                });
            } else if let Some(name) = line.strip_prefix("flag ") {
                flags.push(name.trim().to_owned());
            } else {
                return Err(row_err(format!("unrecognised line {line:?}")));
            }
        }
        Self::new(groups, flags)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for g in &self.groups {
            out.push_str("group ");
            out.push_str(&g.name);
            out.push_str(": ");
            out.push_str(&g.categories.join(", "));
            out.push('\n');
        }
        for f in &self.flags {
            out.push_str("flag ");
            out.push_str(f);
            out.push('\n');
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    pub assignments: BTreeMap<String, String>,
    pub flags: BTreeMap<String, bool>,
    pub text: Option<String>,
}

impl Profile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, group: &str, category: &str) -> Self {
        self.assignments.insert(group.to_owned(), category.to_owned());
        self
    }

    pub fn with_flag(mut self, flag: &str, on: bool) -> Self {
        self.flags.insert(flag.to_owned(), on);
        self
    }

    pub fn category(&self, group: &str) -> Option<&str> {
        self.assignments.get(group).map(String::as_str)
    }

    /// Equality ignoring the attached review text.
    pub fn same_attributes(&self, other: &Profile) -> bool {
        self.assignments == other.assignments && self.flags == other.flags
    }
}

/// Binary visible vector `v ∈ {0,1}^J`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VisibleVector {
    bits: Vec<u8>,
}

impl VisibleVector {
    /// Wraps raw bits after checking them against the schema's one-hot layout.
    pub fn new(bits: Vec<u8>, schema: &AttributeSchema) -> Result<Self> {
        let v = Self { bits };
        v.validate(schema)?;
        Ok(v)
    }

    /// Wraps raw bits without any layout check.
    pub fn from_bits_unchecked(bits: Vec<u8>) -> Self {
        Self { bits }
    }

    /// Rounds a real vector at 0.5.
    pub fn from_activations(values: ArrayView1<'_, f64>) -> Self {
        Self {
            bits: values.iter().map(|&x| u8::from(x >= 0.5)).collect(),
        }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn to_array(&self) -> Array1<f64> {
        self.bits.iter().map(|&b| f64::from(b)).collect()
    }

    pub fn validate(&self, schema: &AttributeSchema) -> Result<()> {
        if self.bits.len() != schema.visible_dim() {
            return Err(Error::InvalidVector(format!(
                "length {} does not match visible dimension {}",
                self.bits.len(),
                schema.visible_dim()
            )));
        }
        if let Some(i) = self.bits.iter().position(|&b| b > 1) {
            return Err(Error::InvalidVector(format!("non-binary value at index {i}")));
        }
        for (gi, g) in schema.groups().iter().enumerate() {
            let hot = self.bits[schema.range_of(gi)].iter().filter(|&&b| b == 1).count();
            if hot != 1 {
                return Err(Error::InvalidVector(format!(
                    "group {:?} has {hot} hot bits, expected exactly 1",
                    g.name
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn bits_mut(&mut self) -> &mut [u8] {
        &mut self.bits
    }
}

/// One-hot encodes a profile under `schema`.
pub fn encode(profile: &Profile, schema: &AttributeSchema) -> Result<VisibleVector> {
    for g in profile.assignments.keys() {
        schema.group(g)?;
    }
    for f in profile.flags.keys() {
        schema.flag_index(f)?;
    }
    let mut bits = vec![0u8; schema.visible_dim()];
    for g in schema.groups() {
        let cat = profile
            .category(&g.name)
            .ok_or_else(|| Error::SchemaMismatch(format!("profile has no category for group {:?}", g.name)))?;
        bits[schema.unit_index(&g.name, cat)?] = 1;
    }
    for f in schema.flags() {
        let on = profile
            .flags
            .get(f)
            .ok_or_else(|| Error::SchemaMismatch(format!("profile has no value for flag {f:?}")))?;
        bits[schema.flag_index(f)?] = u8::from(*on);
    }
    Ok(VisibleVector { bits })
}

/// Inverse of [`encode`]; the returned profile carries no text.
pub fn decode(v: &VisibleVector, schema: &AttributeSchema) -> Result<Profile> {
    v.validate(schema)?;
    let mut profile = Profile::new();
    for (gi, g) in schema.groups().iter().enumerate() {
        let range = schema.range_of(gi);
        let pos = v.bits[range]
            .iter()
            .position(|&b| b == 1)
            .expect("validated one-hot group");
        profile.assignments.insert(g.name.clone(), g.categories[pos].clone());
    }
    for f in schema.flags() {
        let idx = schema.flag_index(f)?;
        profile.flags.insert(f.clone(), v.bits[idx] == 1);
    }
    Ok(profile)
}
