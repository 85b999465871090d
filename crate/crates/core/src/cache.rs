//! On-disk cache of momentum-grid correlator tables.
//!
//! Layout (little endian): magic `FFCT`, format version `u32`, scalar width
//! `u8`, dimension `u8`, shifted `u8`, zero-mode policy `u8`, `N` as `u64`,
//! `λ` and `γ` as `f64`, entry count `u64`, then `g` and `a` as interleaved
//! `(re, im)` `f64` pairs, followed by the SHA-256 of everything before it.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::Complex;
use sha2::{Digest, Sha256};

use crate::correlators::{build_correlator_table_with, CorrelatorTable, TableSource, ZeroModePolicy};
use crate::error::{Error, Result};
use crate::grid::KGrid;
use crate::model::ModelParams;
use crate::scalar::{lit, Real};

const MAGIC: &[u8; 4] = b"FFCT";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8 + 8 + 8;
const DIGEST_LEN: usize = 32;

static TMP_COUNTER: AtomicUsize = AtomicUsize::new(0);

fn policy_code(policy: ZeroModePolicy) -> u8 {
    match policy {
        ZeroModePolicy::Reject => 0,
        ZeroModePolicy::HalfFill => 1,
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Serializes a momentum-grid table.
pub fn encode_table<T: Real>(table: &CorrelatorTable<T>, policy: ZeroModePolicy) -> Result<Vec<u8>> {
    let TableSource::Momentum(grid) = table.source() else {
        return Err(Error::Cache("only momentum-grid tables are cached".into()));
    };
    let params = table.params();
    let mut out = Vec::with_capacity(HEADER_LEN + 32 * table.g_values().len() + DIGEST_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(std::mem::size_of::<T>() as u8);
    out.push(params.dim() as u8);
    out.push(grid.is_shifted() as u8);
    out.push(policy_code(policy));
    out.extend_from_slice(&(grid.n() as u64).to_le_bytes());
    out.extend_from_slice(&params.lambda().to_f64_exact().to_le_bytes());
    out.extend_from_slice(&params.gamma().to_f64_exact().to_le_bytes());
    out.extend_from_slice(&(table.g_values().len() as u64).to_le_bytes());
    for values in [table.g_values(), table.a_values()] {
        for z in values {
            out.extend_from_slice(&z.re.to_f64_exact().to_le_bytes());
            out.extend_from_slice(&z.im.to_f64_exact().to_le_bytes());
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Cache("truncated file".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Parses and verifies a cache file against the expected key.
pub fn decode_table<T: Real>(
    bytes: &[u8],
    params: &ModelParams<T>,
    grid: &KGrid,
    policy: ZeroModePolicy,
) -> Result<CorrelatorTable<T>> {
    if bytes.len() < HEADER_LEN + DIGEST_LEN {
        return Err(Error::Cache("truncated file".into()));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Cache("checksum mismatch".into()));
    }
    let mut r = Reader { bytes: body, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Cache(format!("format version {version}, expected {FORMAT_VERSION}")));
    }
    let width = r.u8()?;
    let dim = r.u8()? as usize;
    let shifted = r.u8()? != 0;
    let code = r.u8()?;
    let n = r.u64()? as usize;
    let lambda = r.f64()?;
    let gamma = r.f64()?;
    let key_matches = width as usize == std::mem::size_of::<T>()
        && dim == params.dim()
        && shifted == grid.is_shifted()
        && code == policy_code(policy)
        && n == grid.n()
        && lambda.to_bits() == params.lambda().to_f64_exact().to_bits()
        && gamma.to_bits() == params.gamma().to_f64_exact().to_bits();
    if !key_matches {
        return Err(Error::Cache("key mismatch".into()));
    }
    let count = r.u64()? as usize;
    if body.len() != HEADER_LEN + count.saturating_mul(32) {
        return Err(Error::Cache("length mismatch".into()));
    }
    let read = |r: &mut Reader| -> Result<Vec<Complex<T>>> {
        (0..count).map(|_| Ok(Complex::new(lit::<T>(r.f64()?), lit::<T>(r.f64()?)))).collect()
    };
    let g = read(&mut r)?;
    let a = read(&mut r)?;
    CorrelatorTable::from_parts(*params, n, TableSource::Momentum(*grid), grid.boundary_sign(), g, a)
}

/// Directory of cached tables, one file per `(scalar, λ, γ, d, N, shifted, policy)`.
#[derive(Debug, Clone)]
pub struct CorrelatorCache {
    dir: PathBuf,
}

impl CorrelatorCache {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(Self { dir: dir.as_ref().to_path_buf() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for<T: Real>(&self, params: &ModelParams<T>, grid: &KGrid, policy: ZeroModePolicy) -> PathBuf {
        let key = format!(
            "v{FORMAT_VERSION}|w{}|l{:016x}|g{:016x}|d{}|n{}|s{}|p{}",
            std::mem::size_of::<T>(),
            params.lambda().to_f64_exact().to_bits(),
            params.gamma().to_f64_exact().to_bits(),
            params.dim(),
            grid.n(),
            grid.is_shifted() as u8,
            policy_code(policy),
        );
        let digest = Sha256::digest(key.as_bytes());
        self.dir.join(format!("{}.fct", hex(&digest[..16])))
    }

    /// `Ok(None)` when absent; an error when present but unreadable.
    pub fn load<T: Real>(
        &self,
        params: &ModelParams<T>,
        grid: &KGrid,
        policy: ZeroModePolicy,
    ) -> Result<Option<CorrelatorTable<T>>> {
        let path = self.path_for(params, grid, policy);
        match fs::read(&path) {
            Ok(bytes) => decode_table(&bytes, params, grid, policy).map(Some),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Writes through a temporary file and renames it into place.
    pub fn store<T: Real>(&self, table: &CorrelatorTable<T>, policy: ZeroModePolicy) -> Result<PathBuf> {
        let TableSource::Momentum(grid) = table.source() else {
            return Err(Error::Cache("only momentum-grid tables are cached".into()));
        };
        let bytes = encode_table(table, policy)?;
        let path = self.path_for(table.params(), &grid, policy);
        let tmp = path.with_extension(format!(
            "tmp{}-{}",
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    /// Cached table if valid; otherwise builds, stores and returns a fresh one.
    pub fn load_or_build<T: Real>(
        &self,
        params: &ModelParams<T>,
        grid: &KGrid,
        policy: ZeroModePolicy,
    ) -> Result<CorrelatorTable<T>> {
        match self.load(params, grid, policy) {
            Ok(Some(table)) => return Ok(table),
            Ok(None) => {}
            Err(e) => log::warn!(
                "ignoring cache file {}: {e}; recomputing",
                self.path_for(params, grid, policy).display()
            ),
        }
        let table = build_correlator_table_with(params, grid, policy)?;
        if let Err(e) = self.store(&table, policy) {
            log::warn!("could not write correlator cache: {e}");
        }
        Ok(table)
    }
}
