//! Run manifests and the resumable per-replica store.
//!
//! Layout of a run directory:
//!
//! ```text
//! manifest.json            written first, updated when the run completes
//! timing.json              wall-clock timings (not part of the results)
//! replicas/nNNNNN/rRRRRR.bin   frames, little-endian f64, grid-major
//! replicas/nNNNNN/rRRRRR.json  replica record; its presence marks completion
//! ```

use std::path::{Path, PathBuf};

use kaclab::kac_process::{FailedReplica, ReplicaRecord};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, LabResult};

pub const RUN_FORMAT: &str = "kaclab-run/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedBlock {
    pub n: usize,
    pub base_seed: u64,
    pub replica_seeds: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureNote {
    pub n: usize,
    #[serde(flatten)]
    pub replica: FailedReplica,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub code_version: String,
    pub experiment: String,
    pub name: String,
    pub config_sha256: String,
    /// The configuration file, verbatim.
    pub config: String,
    pub seeds: Vec<SeedBlock>,
    pub environment: String,
    /// Timings live in `timing.json` so that results stay byte-identical.
    pub timing: String,
    pub status: RunStatus,
    pub results: Vec<String>,
    pub failed: Vec<FailureNote>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn environment_note() -> String {
    format!("{}-{}", std::env::consts::ARCH, std::env::consts::OS)
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> LabResult<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

impl RunManifest {
    pub fn path(dir: &Path) -> PathBuf {
        dir.join("manifest.json")
    }

    pub fn write(&self, dir: &Path) -> LabResult<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_atomic(&Self::path(dir), text.as_bytes())
    }

    pub fn read(path: &Path) -> LabResult<Self> {
        let path = if path.is_dir() { Self::path(path) } else { path.to_path_buf() };
        let m: RunManifest = serde_json::from_slice(&std::fs::read(&path)?)?;
        if m.format != RUN_FORMAT {
            return Err(LabError::Runtime(format!("{} is not a run manifest (format {:?})", path.display(), m.format)));
        }
        Ok(m)
    }
}

/// Completed replicas of one particle number.
pub struct ReplicaStore {
    dir: PathBuf,
}

impl ReplicaStore {
    pub fn new(run_dir: &Path, n: usize) -> LabResult<Self> {
        let dir = run_dir.join("replicas").join(format!("n{n:05}"));
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    fn stem(&self, index: usize) -> PathBuf {
        self.dir.join(format!("r{index:05}"))
    }

    pub fn save(&self, rec: &ReplicaRecord) -> LabResult<()> {
        let stem = self.stem(rec.index);
        let bytes: Vec<u8> = rec.frames.iter().flatten().flat_map(|x| x.to_le_bytes()).collect();
        write_atomic(&stem.with_extension("bin"), &bytes)?;
        write_atomic(&stem.with_extension("json"), serde_json::to_string(rec)?.as_bytes())
    }

    /// A stored replica, if present and consistent with `seed` and the
    /// frame shape.
    pub fn load(&self, index: usize, seed: u64, frames: usize, frame_len: usize) -> Option<ReplicaRecord> {
        let stem = self.stem(index);
        let meta = std::fs::read(stem.with_extension("json")).ok()?;
        let mut rec: ReplicaRecord = serde_json::from_slice(&meta).ok()?;
        if rec.seed != seed || rec.index != index || rec.collisions.len() != frames {
            return None;
        }
        let bytes = std::fs::read(stem.with_extension("bin")).ok()?;
        if bytes.len() != frames * frame_len * 8 {
            return None;
        }
        let values: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        rec.frames = values.chunks_exact(frame_len).map(<[f64]>::to_vec).collect();
        Some(rec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replica_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let store = ReplicaStore::new(dir.path(), 4).unwrap();
        let rec = ReplicaRecord {
            index: 3,
            seed: 99,
            frames: vec![vec![0.1, -2.5e-300, 1.0 / 3.0, 7.0], vec![1.0, 2.0, 3.0, f64::MIN_POSITIVE]],
            collisions: vec![0, 12],
            frozen_at: None,
        };
        store.save(&rec).unwrap();
        assert_eq!(store.load(3, 99, 2, 4), Some(rec));
        assert_eq!(store.load(3, 98, 2, 4), None);
        assert_eq!(store.load(4, 99, 2, 4), None);
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
