//! On-disk memo of generated basis matrices, enabled by `CS_CERTIFY_CACHE`.

use std::path::{Path, PathBuf};

use cs_certify_core::bases::{generate_basis, Basis, BasisKind};

use crate::error::{CliError, Result};

pub const CACHE_ENV: &str = "CS_CERTIFY_CACHE";

/// Cache directory from the environment, if set and non-empty.
pub fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn entry_path(dir: &Path, kind: BasisKind, size: usize, seed: Option<u64>) -> PathBuf {
    let seed = seed.map_or_else(|| "none".to_string(), |s| s.to_string());
    dir.join(format!("{}-{size}-{seed}.json", kind.name()))
}

/// Generates a basis, reading and writing the cache when one is configured.
///
/// Unreadable or mismatched cache entries are regenerated and overwritten.
pub fn basis(kind: BasisKind, size: usize, seed: Option<u64>) -> Result<Basis> {
    let seed = if kind.needs_seed() { seed } else { None };
    let Some(dir) = cache_dir() else {
        return Ok(generate_basis(kind, size, seed)?);
    };
    let path = entry_path(&dir, kind, size, seed);
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(b) = serde_json::from_str::<Basis>(&text) {
            if b.kind() == kind && b.size() == size && b.seed() == seed {
                return Ok(b);
            }
        }
    }
    let b = generate_basis(kind, size, seed)?;
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(dir.display(), e))?;
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, serde_json::to_string(&b)?).map_err(|e| CliError::io(tmp.display(), e))?;
    std::fs::rename(&tmp, &path).map_err(|e| CliError::io(path.display(), e))?;
    Ok(b)
}
