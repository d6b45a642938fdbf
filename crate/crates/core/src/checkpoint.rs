//! Self-describing model checkpoints.
//!
//! Layout: a line-oriented text header terminated by `end_header`, then the
//! schema text (`schema_bytes` long), then the parameters as little-endian
//! `f32` in the order `W^(1..L)` (row-major), `b`, `c^(1..L)`.
//!
//! ```text
//! boltzworld-checkpoint
//! version=1
//! visible_dim=16
//! hidden_dims=12,8
//! pretrain_epochs=20
//! finetune_epochs=10
//! config_hash=3f9a…
//! schema_bytes=211
//! end_header
//! ```

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::dbm::DbmParams;
use crate::schema::AttributeSchema;
use crate::{Error, Result};

pub const MAGIC: &str = "boltzworld-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    pub config_hash: String,
    pub pretrain_epochs: usize,
    pub finetune_epochs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub schema: AttributeSchema,
    pub params: DbmParams,
    pub provenance: Provenance,
}

impl Checkpoint {
    pub fn new(schema: AttributeSchema, params: DbmParams, provenance: Provenance) -> Result<Self> {
        if schema.visible_dim() != params.visible_dim() {
            return Err(Error::DimensionMismatch {
                what: "checkpoint visible layer",
                expected: schema.visible_dim(),
                actual: params.visible_dim(),
            });
        }
        if provenance.config_hash.contains(['\n', '\r']) {
            return Err(Error::InvalidConfig("config hash must be a single line".into()));
        }
        Ok(Self {
            schema,
            params,
            provenance,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let schema_text = self.schema.render();
        let hidden: Vec<String> = self.params.hidden_sizes().iter().map(usize::to_string).collect();
        let mut header = String::new();
        let _ = writeln!(header, "{MAGIC}");
        let _ = writeln!(header, "version={VERSION}");
        let _ = writeln!(header, "visible_dim={}", self.params.visible_dim());
        let _ = writeln!(header, "hidden_dims={}", hidden.join(","));
        let _ = writeln!(header, "pretrain_epochs={}", self.provenance.pretrain_epochs);
        let _ = writeln!(header, "finetune_epochs={}", self.provenance.finetune_epochs);
        let _ = writeln!(header, "config_hash={}", self.provenance.config_hash);
        let _ = writeln!(header, "schema_bytes={}", schema_text.len());
        header.push_str("end_header\n");

        let mut out = header.into_bytes();
        out.extend_from_slice(schema_text.as_bytes());
        out.reserve(4 * self.params.parameter_count());
        let mut put = |x: f64| out.extend_from_slice(&(x as f32).to_le_bytes());
        for w in &self.params.weights {
            w.iter().copied().for_each(&mut put);
        }
        self.params.visible_bias.iter().copied().for_each(&mut put);
        for c in &self.params.hidden_biases {
            c.iter().copied().for_each(&mut put);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let mut next_line = || -> Result<&str> {
            let rest = &bytes[pos..];
            let end = rest
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| Error::Checkpoint("truncated header".into()))?;
            pos += end + 1;
            std::str::from_utf8(&rest[..end]).map_err(|_| Error::Checkpoint("header is not UTF-8".into()))
        };
        if next_line()? != MAGIC {
            return Err(Error::Incompatible("not a boltzworld checkpoint".into()));
        }
        let mut fields = std::collections::BTreeMap::new();
        loop {
            let line = next_line()?;
            if line == "end_header" {
                break;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Checkpoint(format!("malformed header line {line:?}")))?;
            fields.insert(k.to_owned(), v.to_owned());
        }
        let field = |k: &str| {
            fields
                .get(k)
                .map(String::as_str)
                .ok_or_else(|| Error::Checkpoint(format!("missing header field {k}")))
        };
        let number = |k: &str| -> Result<usize> {
            field(k)?
                .parse()
                .map_err(|_| Error::Checkpoint(format!("header field {k} is not a number")))
        };
        let version = number("version")?;
        if version != VERSION as usize {
            return Err(Error::Incompatible(format!(
                "checkpoint version {version}, this build reads version {VERSION}"
            )));
        }
        let visible = number("visible_dim")?;
        let hidden: Vec<usize> = field("hidden_dims")?
            .split(',')
            .map(|s| s.parse().map_err(|_| Error::Checkpoint("bad hidden_dims".into())))
            .collect::<Result<_>>()?;
        if hidden.contains(&0) {
            return Err(Error::Checkpoint("zero-width hidden layer".into()));
        }
        let provenance = Provenance {
            config_hash: field("config_hash")?.to_owned(),
            pretrain_epochs: number("pretrain_epochs")?,
            finetune_epochs: number("finetune_epochs")?,
        };
        let schema_len = number("schema_bytes")?;
        let schema_raw = bytes
            .get(pos..pos + schema_len)
            .ok_or_else(|| Error::Checkpoint("truncated schema".into()))?;
        let schema_text =
            std::str::from_utf8(schema_raw).map_err(|_| Error::Checkpoint("schema is not UTF-8".into()))?;
        let schema = AttributeSchema::parse(schema_text)?;
        if schema.visible_dim() != visible {
            return Err(Error::Checkpoint(format!(
                "schema has {} units, header says {visible}",
                schema.visible_dim()
            )));
        }

        let payload = &bytes[pos + schema_len..];
        let mut sizes = vec![visible];
        sizes.extend(&hidden);
        let count: usize = sizes.windows(2).map(|w| w[0] * w[1]).sum::<usize>() + sizes.iter().sum::<usize>();
        if payload.len() != 4 * count {
            return Err(Error::Checkpoint(format!(
                "payload has {} bytes, expected {}",
                payload.len(),
                4 * count
            )));
        }
        let mut values = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64);
        let mut take = |n: usize| -> Vec<f64> { values.by_ref().take(n).collect() };
        let weights: Vec<Array2<f64>> = sizes
            .windows(2)
            .map(|w| Array2::from_shape_vec((w[0], w[1]), take(w[0] * w[1])).expect("sized above"))
            .collect();
        let visible_bias = Array1::from(take(visible));
        let hidden_biases = hidden.iter().map(|&h| Array1::from(take(h))).collect();
        let params =
            DbmParams::new(weights, visible_bias, hidden_biases).map_err(|e| Error::Checkpoint(e.to_string()))?;
        Self::new(schema, params, provenance)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Fails with [`Error::Incompatible`] naming the first group or flag on
    /// which `other` differs from the checkpoint schema.
    pub fn ensure_schema(&self, other: &AttributeSchema) -> Result<()> {
        match schema_difference(&self.schema, other) {
            None => Ok(()),
            Some(msg) => Err(Error::Incompatible(msg)),
        }
    }
}

/// First difference between two schemas, if any.
pub fn schema_difference(a: &AttributeSchema, b: &AttributeSchema) -> Option<String> {
    for (i, ga) in a.groups().iter().enumerate() {
        match b.groups().get(i) {
            None => return Some(format!("group {:?} is missing", ga.name)),
            Some(gb) if gb.name != ga.name => {
                return Some(format!("group {:?} where {:?} was expected", gb.name, ga.name))
            }
            Some(gb) if gb.categories != ga.categories => {
                return Some(format!("group {:?} has different categories", ga.name))
            }
            _ => {}
        }
    }
    if let Some(extra) = b.groups().get(a.groups().len()) {
        return Some(format!("unexpected group {:?}", extra.name));
    }
    if a.flags() != b.flags() {
        let first = a
            .flags()
            .iter()
            .zip(b.flags())
            .find(|(x, y)| x != y)
            .map(|(x, _)| x.clone())
            .or_else(|| a.flags().get(b.flags().len()).cloned())
            .or_else(|| b.flags().get(a.flags().len()).cloned())
            .unwrap_or_default();
        return Some(format!("flag {first:?} differs"));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand_distr::{Distribution, Normal};

    fn schema() -> AttributeSchema {
        AttributeSchema::from_parts(&[("brand", &["A", "B"]), ("tier", &["lo", "mid", "hi"])], &["repeat"]).unwrap()
    }

    fn params(hidden: &[usize]) -> DbmParams {
        let mut rng = rng_from_seed(7);
        let n = Normal::new(0.0, 1.0).unwrap();
        let mut p = DbmParams::zeros(6, hidden);
        for w in &mut p.weights {
            w.mapv_inplace(|_| n.sample(&mut rng));
        }
        p.visible_bias.mapv_inplace(|_| n.sample(&mut rng));
        for c in &mut p.hidden_biases {
            c.mapv_inplace(|_| n.sample(&mut rng));
        }
        p
    }

    fn checkpoint(hidden: &[usize]) -> Checkpoint {
        let prov = Provenance {
            config_hash: "abc123".into(),
            pretrain_epochs: 3,
            finetune_epochs: 1,
        };
        Checkpoint::new(schema(), params(hidden), prov).unwrap()
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        for hidden in [&[4][..], &[4, 3], &[2, 3, 2]] {
            let ck = checkpoint(hidden);
            let bytes = ck.to_bytes();
            let back = Checkpoint::from_bytes(&bytes).unwrap();
            assert_eq!(back.to_bytes(), bytes);
            assert_eq!(back.provenance, ck.provenance);
            assert_eq!(back.schema, ck.schema);
            assert_eq!(back.params.hidden_sizes(), hidden);
            // f32 storage
            let w = ck.params.weights[0][[1, 1]];
            assert_eq!(back.params.weights[0][[1, 1]], w as f32 as f64);
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let ck = checkpoint(&[3, 2]);
        ck.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        back.save(&path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), ck.to_bytes());
        assert!(matches!(
            Checkpoint::load(dir.path().join("missing")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn header_is_text() {
        let bytes = checkpoint(&[4, 3]).to_bytes();
        let text = String::from_utf8_lossy(&bytes);
        assert!(text.starts_with("boltzworld-checkpoint\nversion=1\nvisible_dim=6\nhidden_dims=4,3\n"));
    }

    #[test]
    fn rejects_bad_input() {
        let bytes = checkpoint(&[4]).to_bytes();
        let bumped = String::from_utf8_lossy(&bytes).replacen("version=1", "version=2", 1);
        assert!(matches!(
            Checkpoint::from_bytes(bumped.as_bytes()),
            Err(Error::Incompatible(_))
        ));
        assert!(matches!(
            Checkpoint::from_bytes(b"hello\n"),
            Err(Error::Incompatible(_))
        ));
        assert!(matches!(
            Checkpoint::from_bytes(&bytes[..bytes.len() - 1]),
            Err(Error::Checkpoint(_))
        ));
        assert!(matches!(
            Checkpoint::from_bytes(&bytes[..30]),
            Err(Error::Checkpoint(_))
        ));
        let mut nan = bytes.clone();
        let n = nan.len();
        nan[n - 4..].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(Checkpoint::from_bytes(&nan).is_err());
    }

    #[test]
    fn schema_mismatch_names_group() {
        let ck = checkpoint(&[4]);
        assert!(ck.ensure_schema(&schema()).is_ok());
        let other = AttributeSchema::from_parts(&[("brand", &["A", "B"]), ("tier", &["lo", "hi", "mid"])], &["repeat"])
            .unwrap();
        let err = ck.ensure_schema(&other).unwrap_err().to_string();
        assert!(err.contains("tier"), "{err}");
        let other =
            AttributeSchema::from_parts(&[("brand", &["A", "B"]), ("tier", &["lo", "mid", "hi"])], &["loyal"]).unwrap();
        assert!(ck.ensure_schema(&other).unwrap_err().to_string().contains("repeat"));
    }
}
