//! Synthetic markets drawn from explicit conditional probability tables.
//!
//! Groups are sampled ancestrally in schema order; a group may condition on
//! one earlier group, and a flag may condition on any group. The generating
//! tables are the planted ground truth against which trained models are
//! checked, so they never depend on the model under test.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AttributeSchema, Dataset, Profile};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupModel {
    pub name: String,
    /// Conditioning group; `None` means `table` has exactly one row.
    #[serde(default)]
    pub parent: Option<String>,
    /// One probability row per parent category, one column per category.
    pub table: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagModel {
    pub name: String,
    #[serde(default)]
    pub parent: Option<String>,
    /// `P(flag = 1)`, one entry per parent category (or a single entry).
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub samples: usize,
    pub groups: Vec<GroupModel>,
    #[serde(default)]
    pub flags: Vec<FlagModel>,
}

struct CompiledGroup {
    parent: Option<usize>,
    rows: Vec<Vec<f64>>,
}

struct CompiledFlag {
    parent: Option<usize>,
    p: Vec<f64>,
}

fn parent_rows(schema: &AttributeSchema, parent: &Option<String>) -> Result<(Option<usize>, usize)> {
    match parent {
        None => Ok((None, 1)),
        Some(p) => {
            let i = schema
                .group_index(p)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown parent group {p:?}")))?;
            Ok((Some(i), schema.groups()[i].categories.len()))
        }
    }
}

fn compile(schema: &AttributeSchema, cfg: &SyntheticConfig) -> Result<(Vec<CompiledGroup>, Vec<CompiledFlag>)> {
    let mut groups = Vec::with_capacity(schema.groups().len());
    for (gi, g) in schema.groups().iter().enumerate() {
        let model = cfg
            .groups
            .iter()
            .find(|m| m.name == g.name)
            .ok_or_else(|| Error::InvalidConfig(format!("no generative table for group {:?}", g.name)))?;
        let (parent, nrows) = parent_rows(schema, &model.parent)?;
        if parent.is_some_and(|p| p >= gi) {
            return Err(Error::InvalidConfig(format!(
                "group {:?} must condition on an earlier group",
                g.name
            )));
        }
        if model.table.len() != nrows {
            return Err(Error::InvalidConfig(format!(
                "group {:?}: expected {nrows} table rows, got {}",
                g.name,
                model.table.len()
            )));
        }
        for (ri, row) in model.table.iter().enumerate() {
            if row.len() != g.categories.len() {
                return Err(Error::InvalidConfig(format!(
                    "group {:?} row {ri}: expected {} probabilities, got {}",
                    g.name,
                    g.categories.len(),
                    row.len()
                )));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidConfig(format!(
                    "group {:?} row {ri}: probabilities must lie in [0, 1]",
                    g.name
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::ProbabilitySum {
                    context: format!("group {:?} row {ri}", g.name),
                    sum,
                });
            }
        }
        groups.push(CompiledGroup {
            parent,
            rows: model.table.clone(),
        });
    }
    for m in &cfg.groups {
        if schema.group_index(&m.name).is_none() {
            return Err(Error::InvalidConfig(format!("table for unknown group {:?}", m.name)));
        }
    }
    let mut flags = Vec::with_capacity(schema.flags().len());
    for f in schema.flags() {
        let model = cfg
            .flags
            .iter()
            .find(|m| &m.name == f)
            .ok_or_else(|| Error::InvalidConfig(format!("no generative model for flag {f:?}")))?;
        let (parent, nrows) = parent_rows(schema, &model.parent)?;
        if model.p.len() != nrows || model.p.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidConfig(format!(
                "flag {f:?}: expected {nrows} probabilities in [0, 1]"
            )));
        }
        flags.push(CompiledFlag {
            parent,
            p: model.p.clone(),
        });
    }
    for m in &cfg.flags {
        if !schema.flags().contains(&m.name) {
            return Err(Error::InvalidConfig(format!("model for unknown flag {:?}", m.name)));
        }
    }
    Ok((groups, flags))
}

fn draw(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding slack at the top; take the last nonzero entry
    row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
}

/// Draws `cfg.samples` i.i.d. profiles from the configured tables.
pub fn generate_synthetic_market(schema: Arc<AttributeSchema>, cfg: &SyntheticConfig, seed: u64) -> Result<Dataset> {
    let (groups, flags) = compile(&schema, cfg)?;
    let mut rng = rng_from_seed(seed);
    let mut profiles = Vec::with_capacity(cfg.samples);
    let mut picks = vec![0usize; groups.len()];
    for _ in 0..cfg.samples {
        let mut profile = Profile::new();
        for (gi, g) in groups.iter().enumerate() {
            let row = &g.rows[g.parent.map_or(0, |p| picks[p])];
            picks[gi] = draw(row, rng.random::<f64>());
            let def = &schema.groups()[gi];
            profile
                .assignments
                .insert(def.name.clone(), def.categories[picks[gi]].clone());
        }
        for (f, name) in flags.iter().zip(schema.flags()) {
            let p = f.p[f.parent.map_or(0, |g| picks[g])];
            profile.flags.insert(name.clone(), rng.random::<f64>() < p);
        }
        profiles.push(profile);
    }
    Dataset::from_profiles(schema, profiles)
}

/// Reference planted-structure market.
///
/// * `Lux` almost never sells at `Entry`, `Major` spans every tier uniformly
///   and `Generic` leans towards the cheap end.
/// * `high_price_range` and `accessories` track the tier.
/// * `negative_topic` tracks low ratings; `repeat_buyer` tracks the brand.
pub mod planted {
    use super::*;

    pub const BRANDS: [&str; 3] = ["Lux", "Major", "Generic"];
    pub const TIERS: [&str; 4] = ["Entry", "Mid", "High", "Premium"];
    pub const RATINGS: [&str; 5] = ["1", "2", "3", "4", "5"];

    pub fn schema() -> AttributeSchema {
        AttributeSchema::from_parts(
            &[("brand", &BRANDS), ("tier", &TIERS), ("rating", &RATINGS)],
            &["repeat_buyer", "high_price_range", "accessories", "negative_topic"],
        )
        .expect("static schema is valid")
    }

    pub fn config(samples: usize) -> SyntheticConfig {
        SyntheticConfig {
            samples,
            groups: vec![
                GroupModel {
                    name: "brand".into(),
                    parent: None,
                    table: vec![vec![0.35, 0.30, 0.35]],
                },
                GroupModel {
                    name: "tier".into(),
                    parent: Some("brand".into()),
                    table: vec![
                        vec![0.01, 0.19, 0.35, 0.45],
                        vec![0.25, 0.25, 0.25, 0.25],
                        vec![0.40, 0.28, 0.18, 0.14],
                    ],
                },
                GroupModel {
                    name: "rating".into(),
                    parent: None,
                    table: vec![vec![0.12, 0.08, 0.15, 0.25, 0.40]],
                },
            ],
            flags: vec![
                FlagModel {
                    name: "repeat_buyer".into(),
                    parent: Some("brand".into()),
                    p: vec![0.6, 0.4, 0.2],
                },
                FlagModel {
                    name: "high_price_range".into(),
                    parent: Some("tier".into()),
                    p: vec![0.02, 0.05, 0.6, 0.9],
                },
                FlagModel {
                    name: "accessories".into(),
                    parent: Some("tier".into()),
                    p: vec![0.1, 0.2, 0.35, 0.5],
                },
                FlagModel {
                    name: "negative_topic".into(),
                    parent: Some("rating".into()),
                    p: vec![0.8, 0.7, 0.2, 0.1, 0.05],
                },
            ],
        }
    }
}
