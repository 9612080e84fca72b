//! Checkpoint file: one line of JSON header, then every parameter as raw
//! little-endian `f64` values in header order.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::HierPolicy;

const FORMAT: &str = "hiersum-checkpoint/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamShape {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub feature_dim: usize,
    pub hidden: usize,
    pub seed: u64,
    #[serde(default)]
    pub hyperparameters: serde_json::Value,
    pub params: Vec<ParamShape>,
}

/// Writes to a sibling temp file and renames it into place.
pub fn write_checkpoint<S: Real>(
    path: &Path,
    policy: &HierPolicy<S>,
    hyperparameters: serde_json::Value,
) -> Result<()> {
    let shape = policy.shape();
    let header = CheckpointHeader {
        format: FORMAT.into(),
        feature_dim: shape.feature_dim,
        hidden: shape.hidden,
        seed: policy.seed(),
        hyperparameters,
        params: policy
            .named_params()
            .map(|(name, p)| ParamShape {
                name,
                rows: p.rows,
                cols: p.cols,
            })
            .collect(),
    };
    let mut bytes = serde_json::to_vec(&header).expect("serializable header");
    bytes.push(b'\n');
    for (_, p) in policy.named_params() {
        for v in &p.value {
            bytes.extend_from_slice(&v.as_f64().to_le_bytes());
        }
    }

    let tmp = path.with_extension("tmp");
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(&bytes)
        .and_then(|_| file.sync_all())
        .map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint<S: Real>(path: &Path) -> Result<(HierPolicy<S>, CheckpointHeader)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let split = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::format(path, "missing checkpoint header"))?;
    let header: CheckpointHeader = serde_json::from_slice(&bytes[..split])
        .map_err(|e| Error::format(path, format!("bad header: {e}")))?;
    if header.format != FORMAT {
        return Err(Error::format(
            path,
            format!("unknown format `{}`", header.format),
        ));
    }
    if header.feature_dim == 0 || header.hidden == 0 {
        return Err(Error::format(path, "zero-sized model"));
    }

    let mut policy = HierPolicy::<S>::new(header.feature_dim, header.hidden, header.seed);
    let expected: Vec<ParamShape> = policy
        .named_params()
        .map(|(name, p)| ParamShape {
            name,
            rows: p.rows,
            cols: p.cols,
        })
        .collect();
    if expected != header.params {
        return Err(Error::format(
            path,
            "parameter layout does not match the model",
        ));
    }
    let payload = &bytes[split + 1..];
    let total: usize = expected.iter().map(|p| p.rows * p.cols).sum();
    if payload.len() != 8 * total {
        return Err(Error::format(
            path,
            format!(
                "expected {} parameter bytes, found {}",
                8 * total,
                payload.len()
            ),
        ));
    }
    let mut values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut fill = |store: &mut crate::nn::ParamStore<S>| {
        for p in store.iter_mut() {
            for v in p.value.iter_mut() {
                *v = S::lit(values.next().expect("length checked"));
            }
        }
    };
    fill(policy.manager.store_mut());
    fill(policy.worker.store_mut());
    Ok((policy, header))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let policy = HierPolicy::<f64>::new(3, 4, 17);
        write_checkpoint(&path, &policy, serde_json::json!({"alpha": 0.5})).unwrap();
        let (back, header) = read_checkpoint::<f64>(&path).unwrap();
        assert_eq!(back, policy);
        assert_eq!(header.hyperparameters["alpha"], 0.5);
        assert!(!path.with_extension("tmp").exists());
    }

    #[test]
    fn rejects_truncated_payload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        write_checkpoint(
            &path,
            &HierPolicy::<f64>::new(3, 4, 1),
            serde_json::Value::Null,
        )
        .unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 8);
        fs::write(&path, bytes).unwrap();
        assert!(matches!(
            read_checkpoint::<f64>(&path).unwrap_err(),
            Error::Format { .. }
        ));
    }
}
