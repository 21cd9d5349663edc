//! Binary parameter snapshots.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic        8 bytes  "XQLBCKPT"
//! version      u32      1
//! filters      u32
//! layers       u32
//! policy_ch    u32
//! value_hidden u32
//! actions      u32      move table length
//! table_sha    32 bytes move table checksum
//! tag          u64      caller-defined version tag (training step)
//! count        u64      number of parameters
//! payload      count * f32
//! payload_sha  32 bytes SHA-256 of the payload bytes
//! ```

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::move_table::MoveTable;
use super::network::{Arch, Network};

pub const MAGIC: &[u8; 8] = b"XQLBCKPT";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 4 * 4 + 4 + 32 + 8 + 8;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint format version {0} (this build reads version {FORMAT_VERSION})")]
    UnsupportedVersion(u32),
    #[error("checkpoint was written for a different move table")]
    MoveTableMismatch,
    #[error("payload checksum mismatch")]
    ChecksumMismatch,
    #[error("file truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("parameter count {found} does not match the architecture ({expected})")]
    Shape { expected: usize, found: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub arch: Arch,
    pub tag: u64,
    pub params: Vec<f32>,
}

impl Checkpoint {
    pub fn from_network(net: &Network<f32>, tag: u64) -> Checkpoint {
        Checkpoint {
            arch: net.arch(),
            tag,
            params: net.params().to_vec(),
        }
    }

    pub fn into_network(self, table: &MoveTable) -> Result<Network<f32>, CheckpointError> {
        let expected = Network::<f32>::parameter_count(&self.arch, table.len());
        let found = self.params.len();
        Network::from_params(self.arch, table.len(), self.params)
            .map_err(|_| CheckpointError::Shape { expected, found })
    }

    pub fn to_bytes(&self, table: &MoveTable) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.params.len() * 4 + 32);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        for v in [
            self.arch.filters,
            self.arch.layers,
            self.arch.policy_channels,
            self.arch.value_hidden,
            table.len(),
        ] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&table.checksum());
        out.extend_from_slice(&self.tag.to_le_bytes());
        out.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        let start = out.len();
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        let digest: [u8; 32] = Sha256::digest(&out[start..]).into();
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8], table: &MoveTable) -> Result<Checkpoint, CheckpointError> {
        if bytes.len() < 8 || &bytes[..8] != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        if bytes.len() < HEADER_LEN {
            return Err(CheckpointError::Truncated {
                expected: HEADER_LEN,
                found: bytes.len(),
            });
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u32_at(8);
        if version != FORMAT_VERSION {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        let arch = Arch {
            filters: u32_at(12) as usize,
            layers: u32_at(16) as usize,
            policy_channels: u32_at(20) as usize,
            value_hidden: u32_at(24) as usize,
        };
        let actions = u32_at(28) as usize;
        if actions != table.len() || bytes[32..64] != table.checksum() {
            return Err(CheckpointError::MoveTableMismatch);
        }
        let tag = u64_at(64);
        let count = u64_at(72) as usize;
        let expected = HEADER_LEN + count * 4 + 32;
        if bytes.len() != expected {
            return Err(CheckpointError::Truncated {
                expected,
                found: bytes.len(),
            });
        }
        let payload = &bytes[HEADER_LEN..HEADER_LEN + count * 4];
        let digest: [u8; 32] = Sha256::digest(payload).into();
        if digest[..] != bytes[HEADER_LEN + count * 4..] {
            return Err(CheckpointError::ChecksumMismatch);
        }
        let want = Network::<f32>::parameter_count(&arch, actions);
        if count != want {
            return Err(CheckpointError::Shape {
                expected: want,
                found: count,
            });
        }
        let params = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Checkpoint { arch, tag, params })
    }

    /// Writes to a sibling temporary file, syncs it, then renames it over
    /// `path`, so a crash never leaves a partially written file at `path`.
    pub fn save(&self, path: &Path, table: &MoveTable) -> Result<(), CheckpointError> {
        write_atomic(path, &self.to_bytes(table))?;
        Ok(())
    }

    pub fn load(path: &Path, table: &MoveTable) -> Result<Checkpoint, CheckpointError> {
        Checkpoint::from_bytes(&fs::read(path)?, table)
    }
}

/// Write-then-rename helper shared by every persisted format.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}
