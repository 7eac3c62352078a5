//! Optional on-disk cache of a nearest-neighbor pairing.
//!
//! The cache stores the partner array together with a content hash of the
//! dataset and the pairing seed, so a stale or mismatched cache is detected
//! instead of silently reused.

use std::fs;
use std::path::Path;

use esr_core::data::Dataset;
use esr_core::pairing::{pair_accelerated, PairedIndex, PairingError};
use esr_core::SeededRng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const CACHE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cache does not match dataset (hash or seed differs)")]
    Mismatch,
    #[error("unsupported cache version {0}")]
    Version(u32),
    #[error("pairing failed: {0}")]
    Pairing(PairingError),
}

/// Hex SHA-256 over a canonical byte encoding of the dataset (dimension,
/// then per row: action, outcome bits, feature bits).
pub fn dataset_content_hash(ds: &Dataset) -> String {
    let mut hasher = Sha256::new();
    hasher.update((ds.dim as u64).to_le_bytes());
    hasher.update((ds.len() as u64).to_le_bytes());
    for ex in ds.iter() {
        hasher.update([ex.action.index() as u8]);
        hasher.update(ex.outcome.to_bits().to_le_bytes());
        for &w in ex.context.as_slice() {
            hasher.update(w.to_bits().to_le_bytes());
        }
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    version: u32,
    dataset_sha256: String,
    seed: u64,
    partner: Vec<usize>,
}

pub fn save_pairing(
    path: &Path,
    ds: &Dataset,
    seed: u64,
    pairs: &PairedIndex,
) -> Result<(), CacheError> {
    let file = CacheFile {
        version: CACHE_VERSION,
        dataset_sha256: dataset_content_hash(ds),
        seed,
        partner: pairs.as_slice().to_vec(),
    };
    let mut text = serde_json::to_string(&file)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Load a cached pairing, verifying it was computed for exactly this
/// dataset and seed.
pub fn load_pairing(path: &Path, ds: &Dataset, seed: u64) -> Result<PairedIndex, CacheError> {
    let file: CacheFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    if file.version != CACHE_VERSION {
        return Err(CacheError::Version(file.version));
    }
    if file.seed != seed
        || file.partner.len() != ds.len()
        || file.dataset_sha256 != dataset_content_hash(ds)
    {
        return Err(CacheError::Mismatch);
    }
    Ok(PairedIndex::from_partners(file.partner))
}

/// Load the pairing from `path` when valid, otherwise compute it with
/// [`pair_accelerated`] and write the cache.
pub fn pairing_cached(path: &Path, ds: &Dataset, seed: u64) -> Result<PairedIndex, CacheError> {
    if path.exists() {
        if let Ok(pairs) = load_pairing(path, ds, seed) {
            return Ok(pairs);
        }
    }
    let pairs = pair_accelerated(ds, &SeededRng::new(seed)).map_err(CacheError::Pairing)?;
    save_pairing(path, ds, seed, &pairs)?;
    Ok(pairs)
}
