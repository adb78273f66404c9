//! Versioned binary checkpoint.
//!
//! ```text
//! magic    8 bytes   "KSTMIXER"
//! version  u32 LE
//! hlen     u64 LE    byte length of the JSON header
//! header   hlen      UTF-8 JSON: config, normalization stats, patch ordering,
//!                    tensor directory [{name, rows, cols}], notes
//! tensors            f64 LE, directory order, row-major
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::io::write_atomic;
use crate::data::{NormalizationStats, PATCH_ORDERING};
use crate::error::{Error, Result};
use crate::model::{MixerConfig, Model, ModelParams};
use crate::nn::{Parameters, Shape};

pub const MAGIC: &[u8; 8] = b"KSTMIXER";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    config: MixerConfig,
    stats: NormalizationStats,
    patch_ordering: String,
    tensors: Vec<TensorEntry>,
    notes: Vec<String>,
}

fn notes(cfg: &MixerConfig) -> Vec<String> {
    vec![
        format!("hidden_dim C = {} is an assumed value (not published)", cfg.hidden_dim),
        "outputs are normalized marker coordinates; denormalize with stats.marker".to_string(),
    ]
}

pub fn encode_checkpoint(model: &Model) -> Result<Vec<u8>> {
    let tensors = model.params.named_tensors();
    let header = Header {
        config: model.config.clone(),
        stats: model.stats.clone(),
        patch_ordering: PATCH_ORDERING.to_string(),
        tensors: tensors
            .iter()
            .map(|(n, t)| TensorEntry {
                name: n.clone(),
                rows: t.rows(),
                cols: t.cols(),
            })
            .collect(),
        notes: notes(&model.config),
    };
    let header = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(20 + header.len() + 8 * model.params.parameter_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for (_, t) in tensors {
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

fn take<'a>(bytes: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::CheckpointTruncated(format!(
            "{what}: need {n} bytes, {} remain",
            bytes.len()
        )));
    }
    let (head, rest) = bytes.split_at(n);
    *bytes = rest;
    Ok(head)
}

pub fn decode_checkpoint(mut bytes: &[u8]) -> Result<Model> {
    let magic = take(&mut bytes, MAGIC.len(), "magic")?;
    if magic != MAGIC {
        return Err(Error::CheckpointFormat("not a KST-Mixer checkpoint (bad magic)".into()));
    }
    let version = u32::from_le_bytes(take(&mut bytes, 4, "version")?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::CheckpointVersion {
            expected: FORMAT_VERSION,
            found: version,
        });
    }
    let hlen = u64::from_le_bytes(take(&mut bytes, 8, "header length")?.try_into().unwrap()) as usize;
    let header: Header = serde_json::from_slice(take(&mut bytes, hlen, "header")?)
        .map_err(|e| Error::CheckpointFormat(format!("header: {e}")))?;
    header.config.validate()?;
    header.stats.validate()?;
    if header.patch_ordering != PATCH_ORDERING {
        return Err(Error::CheckpointFormat(format!(
            "unsupported patch ordering {:?}",
            header.patch_ordering
        )));
    }

    let layout = ModelParams::layout(&header.config);
    if layout.len() != header.tensors.len() {
        return Err(Error::CheckpointFormat(format!(
            "directory lists {} tensors, config implies {}",
            header.tensors.len(),
            layout.len()
        )));
    }
    for ((name, shape), entry) in layout.iter().zip(&header.tensors) {
        if *name != entry.name {
            return Err(Error::CheckpointFormat(format!(
                "directory entry {:?} where {name:?} was expected",
                entry.name
            )));
        }
        let found = Shape(entry.rows, entry.cols);
        if *shape != found {
            return Err(Error::CheckpointShape {
                name: name.clone(),
                expected: shape.to_string(),
                found: found.to_string(),
            });
        }
    }

    let mut params = ModelParams::zeros(&header.config);
    for (name, t) in params.named_tensors_mut() {
        let raw = take(&mut bytes, 8 * t.len(), &format!("tensor {name}"))?;
        for (v, chunk) in t.data_mut().iter_mut().zip(raw.chunks_exact(8)) {
            *v = f64::from_le_bytes(chunk.try_into().unwrap());
        }
    }
    if !bytes.is_empty() {
        return Err(Error::CheckpointFormat(format!("{} trailing bytes", bytes.len())));
    }
    Ok(Model {
        config: header.config,
        params,
        stats: header.stats,
    })
}

pub fn save_checkpoint(model: &Model, path: &Path) -> Result<()> {
    write_atomic(path, &encode_checkpoint(model)?)
}

pub fn load_checkpoint(path: &Path) -> Result<Model> {
    decode_checkpoint(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::AxisRange;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn model(cfg: MixerConfig, seed: u64) -> Model {
        let params = ModelParams::init(&cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        Model {
            config: cfg,
            params,
            stats: NormalizationStats {
                position: [AxisRange {
                    min: -200.0,
                    max: 250.0,
                }; 3],
                direction: AxisRange { min: -1.0, max: 1.0 },
                length: AxisRange {
                    min: 100.0,
                    max: 1150.0,
                },
                marker: [AxisRange {
                    min: -180.0,
                    max: 240.0,
                }; 3],
            },
        }
    }

    #[test]
    fn round_trip_is_bitwise() {
        let m = model(MixerConfig::tiny(), 4);
        let bytes = encode_checkpoint(&m).unwrap();
        let back = decode_checkpoint(&bytes).unwrap();
        assert_eq!(back.params, m.params);
        assert_eq!(back.config, m.config);
        assert_eq!(back.stats, m.stats);
        assert_eq!(encode_checkpoint(&back).unwrap(), bytes);
    }

    fn tamper_header(bytes: &[u8], from: &str, to: &str) -> Vec<u8> {
        let hlen = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let header = std::str::from_utf8(&bytes[20..20 + hlen]).unwrap();
        assert!(header.contains(from));
        let header = header.replacen(from, to, 1);
        let mut out = bytes[..12].to_vec();
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        out.extend_from_slice(&bytes[20 + hlen..]);
        out
    }

    #[test]
    fn tampered_tensor_shape_is_named() {
        let bytes = encode_checkpoint(&model(MixerConfig::tiny(), 1)).unwrap();
        let bad = tamper_header(
            &bytes,
            r#"{"name":"head.w","rows":36,"cols":128}"#,
            r#"{"name":"head.w","rows":36,"cols":127}"#,
        );
        let msg = decode_checkpoint(&bad).unwrap_err().to_string();
        assert!(msg.starts_with("shape mismatch: head.w (expected 36×128"), "{msg}");
    }

    #[test]
    fn wrong_version_is_distinct() {
        let mut bytes = encode_checkpoint(&model(MixerConfig::tiny(), 1)).unwrap();
        bytes[8..12].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(
            decode_checkpoint(&bytes),
            Err(Error::CheckpointVersion { expected: 1, found: 7 })
        ));
    }

    #[test]
    fn truncated_file_is_distinct() {
        let bytes = encode_checkpoint(&model(MixerConfig::tiny(), 1)).unwrap();
        let err = decode_checkpoint(&bytes[..bytes.len() - 3]).unwrap_err();
        assert!(matches!(err, Error::CheckpointTruncated(_)), "{err}");
        assert!(err.to_string().contains("head.b"), "{err}");
    }
}
