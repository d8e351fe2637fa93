//! JSON checkpoints: config, a manifest of parameter shapes plus a SHA-256
//! of the values, and the row-major values themselves.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::biattend::FUSED_LAYOUT;
use crate::error::NnError;
use crate::matrix::Matrix;
use crate::model::{Model, ModelConfig};
use crate::params::ParamStore;

pub const CHECKPOINT_FORMAT: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub shape: [usize; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub fused_layout: String,
    pub params: Vec<ParamSpec>,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamData {
    pub shape: [usize; 2],
    pub data: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: u32,
    pub config: ModelConfig,
    pub manifest: Manifest,
    pub params: BTreeMap<String, ParamData>,
}

fn specs(store: &ParamStore) -> Vec<ParamSpec> {
    store
        .ids()
        .map(|id| {
            let m = store.get(id);
            ParamSpec {
                name: store.name(id).to_string(),
                shape: [m.rows(), m.cols()],
            }
        })
        .collect()
}

/// SHA-256 over names, shapes and little-endian values in parameter order.
pub fn param_hash(store: &ParamStore) -> String {
    let mut h = Sha256::new();
    for id in store.ids() {
        let m = store.get(id);
        h.update(store.name(id).as_bytes());
        h.update([0u8]);
        h.update((m.rows() as u64).to_le_bytes());
        h.update((m.cols() as u64).to_le_bytes());
        for x in m.as_slice() {
            h.update(x.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

impl Model {
    pub fn to_checkpoint(&self) -> Checkpoint {
        let params = self
            .store
            .ids()
            .map(|id| {
                let m = self.store.get(id);
                (
                    self.store.name(id).to_string(),
                    ParamData {
                        shape: [m.rows(), m.cols()],
                        data: m.as_slice().to_vec(),
                    },
                )
            })
            .collect();
        Checkpoint {
            format: CHECKPOINT_FORMAT,
            config: self.config,
            manifest: Manifest {
                fused_layout: FUSED_LAYOUT.to_string(),
                params: specs(&self.store),
                sha256: param_hash(&self.store),
            },
            params,
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Model, NnError> {
        let bad = |m: String| NnError::CheckpointMismatch(m);
        if ck.format != CHECKPOINT_FORMAT {
            return Err(bad(format!("format {} (expected {CHECKPOINT_FORMAT})", ck.format)));
        }
        if ck.manifest.fused_layout != FUSED_LAYOUT {
            return Err(bad(format!("fused layout {:?}", ck.manifest.fused_layout)));
        }
        let mut model = Model::new(ck.config)?;
        if specs(&model.store) != ck.manifest.params {
            return Err(bad("parameter layout differs from the config's".into()));
        }
        for id in model.store.ids().collect::<Vec<_>>() {
            let name = model.store.name(id).to_string();
            let p = ck.params.get(&name).ok_or_else(|| bad(format!("missing {name}")))?;
            let want = model.store.get(id).shape();
            if (p.shape[0], p.shape[1]) != want || p.data.len() != want.0 * want.1 {
                return Err(bad(format!("shape of {name}")));
            }
            *model.store.get_mut(id) = Matrix::from_vec(want.0, want.1, p.data.clone());
        }
        if ck.params.len() != model.store.len() {
            return Err(bad("unexpected extra parameters".into()));
        }
        let hash = param_hash(&model.store);
        if hash != ck.manifest.sha256 {
            return Err(bad(format!("hash {hash} != manifest {}", ck.manifest.sha256)));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, &self.to_checkpoint())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Model, NnError> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let ck: Checkpoint = serde_json::from_reader(file)?;
        Model::from_checkpoint(&ck)
    }
}
