//! Belief export and model-generated profiles.
//!
//! Text format: one line per record, `id,μ_1,…,μ_n` with `n = Σ H_l` and each
//! value printed as the shortest decimal that reads back to the same `f32`.
//!
//! Binary format, all integers and floats little-endian:
//!
//! ```text
//! b"BWBELIEF"   magic, 8 bytes
//! u32           L
//! u32 × L       H_1..H_L
//! u32           record count
//! f32 × count·ΣH  row-major beliefs
//! ```
//!
//! The binary form carries no ids; rows follow dataset order.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::dbm::{belief_vector, mean_field_infer, DbmParams, DbmSampler, MeanFieldConfig};
use crate::schema::{decode, AttributeSchema, Dataset, Profile, VisibleVector};
use crate::{Error, Result};

pub const BINARY_MAGIC: &[u8; 8] = b"BWBELIEF";

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefTable {
    pub layer_sizes: Vec<usize>,
    pub ids: Vec<String>,
    /// One row of `Σ H_l` values per record.
    pub rows: Vec<Vec<f32>>,
}

impl BeliefTable {
    pub fn width(&self) -> usize {
        self.layer_sizes.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn check(&self) -> Result<()> {
        if self.ids.len() != self.rows.len() {
            return Err(Error::DimensionMismatch {
                what: "belief ids",
                expected: self.rows.len(),
                actual: self.ids.len(),
            });
        }
        let width = self.width();
        for r in &self.rows {
            if r.len() != width {
                return Err(Error::DimensionMismatch {
                    what: "belief row",
                    expected: width,
                    actual: r.len(),
                });
            }
        }
        Ok(())
    }

    pub fn write_text<W: Write>(&self, out: W) -> Result<()> {
        self.check()?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for (id, row) in self.ids.iter().zip(&self.rows) {
            let mut rec = Vec::with_capacity(row.len() + 1);
            rec.push(id.clone());
            rec.extend(row.iter().map(f32::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<belief text>", e))
    }

    /// Reads the text form; the layer sizes are not stored in it.
    pub fn read_text<R: Read>(input: R, layer_sizes: &[usize]) -> Result<Self> {
        let mut table = Self {
            layer_sizes: layer_sizes.to_vec(),
            ids: Vec::new(),
            rows: Vec::new(),
        };
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(input);
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let mut fields = rec.iter();
            let id = fields.next().unwrap_or_default().to_owned();
            let row = fields
                .map(|s| {
                    s.parse::<f32>().map_err(|_| Error::Row {
                        line: i + 1,
                        message: format!("bad belief value {s:?}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            table.ids.push(id);
            table.rows.push(row);
        }
        table.check()?;
        Ok(table)
    }

    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        self.check()?;
        let io = |e| Error::io("<belief binary>", e);
        let u32_of = |n: usize, what: &'static str| -> Result<[u8; 4]> {
            u32::try_from(n)
                .map(u32::to_le_bytes)
                .map_err(|_| Error::InvalidConfig(format!("{what} does not fit in u32")))
        };
        let mut buf = Vec::with_capacity(16 + 4 * self.layer_sizes.len() + 4 * self.width() * self.len());
        buf.extend_from_slice(BINARY_MAGIC);
        buf.extend_from_slice(&u32_of(self.layer_sizes.len(), "layer count")?);
        for &h in &self.layer_sizes {
            buf.extend_from_slice(&u32_of(h, "layer size")?);
        }
        buf.extend_from_slice(&u32_of(self.len(), "record count")?);
        for row in &self.rows {
            for x in row {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
        out.write_all(&buf).map_err(io)?;
        out.flush().map_err(io)
    }

    /// Reads the binary form; ids become row indices `"0"`, `"1"`, ….
    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut bytes = Vec::new();
        input
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io("<belief binary>", e))?;
        let truncated = || Error::Parse("truncated belief file".into());
        if bytes.get(..8) != Some(&BINARY_MAGIC[..]) {
            return Err(Error::Parse("not a belief file".into()));
        }
        let mut pos = 8;
        let mut word = || -> Result<[u8; 4]> {
            let w = bytes.get(pos..pos + 4).ok_or_else(truncated)?;
            pos += 4;
            Ok([w[0], w[1], w[2], w[3]])
        };
        let depth = u32::from_le_bytes(word()?) as usize;
        let layer_sizes = (0..depth)
            .map(|_| word().map(|w| u32::from_le_bytes(w) as usize))
            .collect::<Result<Vec<_>>>()?;
        let count = u32::from_le_bytes(word()?) as usize;
        let width: usize = layer_sizes.iter().sum();
        let mut rows = Vec::with_capacity(count);
        for _ in 0..count {
            let row = (0..width)
                .map(|_| word().map(f32::from_le_bytes))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        if pos != bytes.len() {
            return Err(Error::Parse("trailing bytes after belief payload".into()));
        }
        Ok(Self {
            layer_sizes,
            ids: (0..count).map(|i| i.to_string()).collect(),
            rows,
        })
    }
}

/// Converged mean-field beliefs for every record, in dataset order.
pub fn export_beliefs(dataset: &Dataset, params: &DbmParams, mf: &MeanFieldConfig) -> Result<BeliefTable> {
    if dataset.schema().visible_dim() != params.visible_dim() {
        return Err(Error::DimensionMismatch {
            what: "dataset visible width",
            expected: params.visible_dim(),
            actual: dataset.schema().visible_dim(),
        });
    }
    let rows = dataset
        .records()
        .par_iter()
        .map(|r| {
            let state = mean_field_infer(r.visible.to_array().view(), params, mf)?;
            Ok(belief_vector(&state).iter().map(|&x| x as f32).collect())
        })
        .collect::<Result<Vec<Vec<f32>>>>()?;
    Ok(BeliefTable {
        layer_sizes: params.hidden_sizes(),
        ids: dataset.records().iter().map(|r| r.id.clone()).collect(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledProfiles {
    pub profiles: Vec<Profile>,
    pub visible: Vec<VisibleVector>,
    /// Draws discarded for breaking a one-hot constraint.
    pub resampled: usize,
    /// Requested profiles not produced before the attempt cap.
    pub shortfall: usize,
}

/// Draws `n` valid profiles from one block-Gibbs chain, replacing draws that
/// are not one-hot per group with further draws. At most `n · max_tries_per_profile`
/// draws are made.
pub fn sample_profiles(
    params: &DbmParams,
    schema: &AttributeSchema,
    n: usize,
    burn_in: usize,
    thin: usize,
    max_tries_per_profile: usize,
    seed: u64,
) -> Result<SampledProfiles> {
    if schema.visible_dim() != params.visible_dim() {
        return Err(Error::DimensionMismatch {
            what: "schema visible width",
            expected: params.visible_dim(),
            actual: schema.visible_dim(),
        });
    }
    let mut out = SampledProfiles {
        profiles: Vec::with_capacity(n),
        visible: Vec::with_capacity(n),
        resampled: 0,
        shortfall: 0,
    };
    if n == 0 {
        return Ok(out);
    }
    let budget = n.saturating_mul(max_tries_per_profile.max(1));
    let thin = thin.max(1);
    let mut sampler = DbmSampler::new(params, seed);
    for _ in 0..burn_in {
        sampler.step();
    }
    for _ in 0..budget {
        if out.profiles.len() == n {
            break;
        }
        for _ in 0..thin {
            sampler.step();
        }
        let v = VisibleVector::from_activations(sampler.visible());
        match decode(&v, schema) {
            Ok(p) => {
                out.profiles.push(p);
                out.visible.push(v);
            }
            Err(_) => out.resampled += 1,
        }
    }
    out.shortfall = n - out.profiles.len();
    Ok(out)
}
