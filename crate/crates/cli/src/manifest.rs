//! Run manifest: the effective configuration plus content hashes.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub tool: String,
    pub version: String,
    pub config: Value,
    pub config_sha256: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn digest_file(path: &Path, stage: &'static str) -> CliResult<FileDigest> {
    let file = File::open(path).map_err(|e| CliError::io(stage, path, e))?;
    let mut reader = BufReader::with_capacity(1 << 20, file);
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut bytes = 0u64;
    loop {
        let n = reader.read(&mut buf).map_err(|e| CliError::io(stage, path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        bytes += n as u64;
    }
    Ok(FileDigest {
        path: path.to_owned(),
        sha256: hex::encode(hasher.finalize()),
        bytes,
    })
}

/// Hash of the compact JSON form of `config` (object keys are sorted).
pub fn config_digest(config: &Value) -> String {
    let text = serde_json::to_string(config).expect("JSON values serialize");
    hex::encode(Sha256::digest(text.as_bytes()))
}

impl Manifest {
    pub fn new(config: Value, inputs: Vec<FileDigest>, outputs: Vec<FileDigest>) -> Self {
        Self {
            manifest_version: MANIFEST_VERSION,
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            config_sha256: config_digest(&config),
            config,
            inputs,
            outputs,
        }
    }
}
