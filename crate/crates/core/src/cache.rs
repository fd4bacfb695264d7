//! Spectrum sources: direct diagonalization and a keyed cache with optional
//! on-disk persistence.
//!
//! Cache keys are `(M, lambda)` with `lambda` rounded to 12 decimal places.
//! Each persisted entry is one file:
//!
//! ```text
//! twomode-spectrum\n
//! version=1\n
//! m=<M>\n
//! lambda=<lambda key>\n
//! values=<count>\n
//! vectors=<0|1>\n
//! checksum=<sha256 of the payload, hex>\n
//! \n
//! <eigenvalues: count x f64, little-endian>
//! <eigenvectors, if present: count² x f64, little-endian, one vector per row>
//! ```

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use sha2::{Digest, Sha256};

use crate::spectrum::{build_hamiltonian, eigenvalues, Spectrum};
use crate::{Error, Result};

const MAGIC: &str = "twomode-spectrum";
const FORMAT_VERSION: u32 = 1;

/// Anything that can hand out the sorted eigenvalues of `H_M(lambda)`.
pub trait SpectrumSource: Sync {
    fn spectrum(&self, m: usize, lambda: f64) -> Result<Arc<Spectrum>>;
}

/// Diagonalizes on every request.
#[derive(Debug, Clone, Copy, Default)]
pub struct DirectSource;

impl SpectrumSource for DirectSource {
    fn spectrum(&self, m: usize, lambda: f64) -> Result<Arc<Spectrum>> {
        eigenvalues(&build_hamiltonian(m, lambda)).map(Arc::new)
    }
}

/// `lambda` rounded to 12 decimal digits, as used in keys and file names.
pub fn lambda_key(lambda: f64) -> String {
    let key = format!("{lambda:.12}");
    if key.starts_with('-') && key[1..].bytes().all(|b| b == b'0' || b == b'.') {
        key[1..].to_string()
    } else {
        key
    }
}

type Key = (usize, String);

/// Concurrent spectrum cache. Readers share a lock; inserts and disk
/// writes are serialized.
#[derive(Debug, Default)]
pub struct SpectrumCache {
    memory: RwLock<HashMap<Key, Arc<Spectrum>>>,
    dir: Option<PathBuf>,
    write_lock: std::sync::Mutex<()>,
}

impl SpectrumCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Cache persisted under `dir` (created if missing).
    pub fn with_dir(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self {
            dir: Some(dir),
            ..Self::default()
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn entry_path(&self, m: usize, lambda: f64) -> Option<PathBuf> {
        self.dir
            .as_ref()
            .map(|d| d.join(format!("m{m}_l{}.spec", lambda_key(lambda))))
    }

    pub fn len(&self) -> usize {
        self.memory.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Memory lookup, then disk. A corrupt file is reported as
    /// `CacheCorrupt`.
    pub fn get(&self, m: usize, lambda: f64) -> Result<Option<Arc<Spectrum>>> {
        let key = (m, lambda_key(lambda));
        if let Some(s) = self.memory.read().expect("cache lock poisoned").get(&key) {
            return Ok(Some(Arc::clone(s)));
        }
        let Some(path) = self.entry_path(m, lambda) else {
            return Ok(None);
        };
        if !path.exists() {
            return Ok(None);
        }
        let spectrum = Arc::new(read_entry(&path, m, &key.1)?);
        self.memory
            .write()
            .expect("cache lock poisoned")
            .insert(key, Arc::clone(&spectrum));
        Ok(Some(spectrum))
    }

    pub fn put(&self, m: usize, lambda: f64, spectrum: Spectrum) -> Result<Arc<Spectrum>> {
        let key = (m, lambda_key(lambda));
        let spectrum = Arc::new(spectrum);
        let _guard = self.write_lock.lock().expect("cache lock poisoned");
        if let Some(path) = self.entry_path(m, lambda) {
            write_entry(&path, m, &key.1, &spectrum)?;
        }
        self.memory
            .write()
            .expect("cache lock poisoned")
            .insert(key, Arc::clone(&spectrum));
        Ok(spectrum)
    }

    /// Cached spectrum, recomputing (and overwriting) on a miss or a
    /// corrupt entry.
    pub fn get_or_compute(&self, m: usize, lambda: f64) -> Result<Arc<Spectrum>> {
        match self.get(m, lambda) {
            Ok(Some(s)) => return Ok(s),
            Ok(None) | Err(Error::CacheCorrupt { .. }) => {}
            Err(e) => return Err(e),
        }
        let fresh = eigenvalues(&build_hamiltonian(m, lambda))?;
        self.put(m, lambda, fresh)
    }
}

impl SpectrumSource for SpectrumCache {
    fn spectrum(&self, m: usize, lambda: f64) -> Result<Arc<Spectrum>> {
        self.get_or_compute(m, lambda)
    }
}

fn payload(spectrum: &Spectrum) -> Vec<u8> {
    let vectors = spectrum.eigenvectors.as_deref().unwrap_or(&[]);
    let mut out = Vec::with_capacity(8 * (spectrum.eigenvalues.len() + vectors.len()));
    for v in spectrum.eigenvalues.iter().chain(vectors) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn write_entry(path: &Path, m: usize, key: &str, spectrum: &Spectrum) -> Result<()> {
    let body = payload(spectrum);
    let header = format!(
        "{MAGIC}\nversion={FORMAT_VERSION}\nm={m}\nlambda={key}\nvalues={}\nvectors={}\nchecksum={}\n\n",
        spectrum.eigenvalues.len(),
        u8::from(spectrum.eigenvectors.is_some()),
        hex_digest(&body),
    );
    let tmp = path.with_extension("tmp");
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(header.as_bytes())?;
        f.write_all(&body)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| Error::io(path, e))
}

fn read_entry(path: &Path, m: usize, key: &str) -> Result<Spectrum> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let corrupt = |reason: &str| Error::CacheCorrupt {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let split = bytes
        .windows(2)
        .position(|w| w == b"\n\n")
        .ok_or_else(|| corrupt("missing header terminator"))?;
    let header =
        std::str::from_utf8(&bytes[..split]).map_err(|_| corrupt("header is not UTF-8"))?;
    let body = &bytes[split + 2..];

    let mut lines = header.lines();
    if lines.next() != Some(MAGIC) {
        return Err(corrupt("bad magic"));
    }
    let fields: HashMap<&str, &str> = lines.filter_map(|l| l.split_once('=')).collect();
    let field = |name: &str| {
        fields
            .get(name)
            .copied()
            .ok_or_else(|| corrupt(&format!("missing {name}")))
    };
    if field("version")? != FORMAT_VERSION.to_string() {
        return Err(corrupt("unsupported version"));
    }
    if field("m")? != m.to_string() || field("lambda")? != key {
        return Err(corrupt("key mismatch"));
    }
    let count: usize = field("values")?
        .parse()
        .map_err(|_| corrupt("bad value count"))?;
    let has_vectors = field("vectors")? == "1";
    if field("checksum")? != hex_digest(body) {
        return Err(corrupt("checksum mismatch"));
    }
    let expected = 8 * (count + if has_vectors { count * count } else { 0 });
    if body.len() != expected {
        return Err(corrupt("payload length mismatch"));
    }
    let mut floats = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    let eigenvalues: Vec<f64> = floats.by_ref().take(count).collect();
    let eigenvectors = has_vectors.then(|| floats.collect());
    Ok(Spectrum {
        m,
        eigenvalues,
        eigenvectors,
        parities: None,
    })
}
