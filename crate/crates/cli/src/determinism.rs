//! Scan determinism: reruns, worker counts, warm and cold caches, and
//! recovery from corrupted cache files must all give identical tables.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fermi_entropy::checks::CheckOutcome;

use crate::config::{Overrides, SweepConfig};
use crate::scan::run_scan;

pub const CHECK_ID: u32 = 10;

const TABLES: [&str; 3] = ["entropy.csv", "fits.csv", "errors.csv"];

/// A small sweep covering all three phases, a Widom point and a per-L failure.
pub fn probe_config(out_dir: PathBuf, cache_dir: Option<PathBuf>, workers: usize) -> Result<SweepConfig, String> {
    SweepConfig::resolve(
        None,
        Overrides {
            lambdas: Some(vec![0.0, 1.0, 2.5]),
            gammas: Some(vec![0.0, 1.0]),
            dim: Some(2),
            l_min: Some(2),
            l_max: Some(8),
            fit_l_min: Some(2),
            grid_n: Some(64),
            workers: Some(workers),
            out_dir: Some(out_dir),
            cache_dir,
            ..Default::default()
        },
    )
}

fn read_tables(dir: &Path) -> Result<Vec<Vec<u8>>, String> {
    TABLES
        .iter()
        .map(|name| fs::read(dir.join(name)).map_err(|e| format!("{}: {e}", dir.join(name).display())))
        .collect()
}

/// Overwrites the middle of every file in `dir`; returns how many were touched.
pub fn corrupt_cache(dir: &Path) -> std::io::Result<usize> {
    let mut count = 0;
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if !path.is_file() {
            continue;
        }
        let mut bytes = fs::read(&path)?;
        let mid = bytes.len() / 2;
        for b in bytes.iter_mut().skip(mid).take(16) {
            *b ^= 0xA5;
        }
        fs::write(&path, bytes)?;
        count += 1;
    }
    Ok(count)
}

fn compare(work: &Path, cache: &Path) -> Result<(usize, String), String> {
    let run = |name: &str, workers: usize, cached: bool| -> Result<Vec<Vec<u8>>, String> {
        let out = work.join(name);
        let cfg = probe_config(out.clone(), cached.then(|| cache.to_path_buf()), workers)?;
        run_scan(&cfg)?;
        read_tables(&out)
    };
    let reference = run("reference", 1, false)?;
    let mut labels = Vec::new();
    let mut mismatches = 0;
    let mut record = |label: &str, tables: Vec<Vec<u8>>| {
        let bad = tables.iter().zip(&reference).filter(|(a, b)| a != b).count();
        mismatches += bad;
        labels.push(format!("{label}:{}", if bad == 0 { "same" } else { "DIFF" }));
    };
    record("rerun", run("rerun", 1, false)?);
    record("workers=3", run("workers3", 3, false)?);
    record("cold-cache", run("cold", 2, true)?);
    record("warm-cache", run("warm", 1, true)?);
    let corrupted = corrupt_cache(cache).map_err(|e| format!("corrupting cache: {e}"))?;
    if corrupted == 0 {
        return Err("cache directory is empty after a cached run".into());
    }
    record(&format!("corrupted({corrupted})"), run("recovered", 1, true)?);
    record("rewarmed", run("rewarmed", 2, true)?);
    let rows = reference[0].iter().filter(|&&b| b == b'\n').count().saturating_sub(1);
    Ok((mismatches, format!("{rows} entropy rows; {}", labels.join(" "))))
}

/// Check 10. Uses `cache_dir` when given, otherwise a temporary directory.
pub fn check_scan_determinism(cache_dir: Option<&Path>) -> CheckOutcome {
    let start = Instant::now();
    let result = tempfile::tempdir().map_err(|e| format!("temporary directory: {e}")).and_then(|tmp| {
        let cache = match cache_dir {
            Some(dir) => {
                fs::create_dir_all(dir).map_err(|e| format!("cache directory: {e}"))?;
                dir.to_path_buf()
            }
            None => tmp.path().join("cache"),
        };
        compare(tmp.path(), &cache)
    });
    let (measured, detail) = match result {
        Ok(v) => v,
        Err(e) => (usize::MAX, e),
    };
    CheckOutcome {
        id: CHECK_ID,
        name: "scan determinism across reruns, workers and cache state".into(),
        measured: measured as f64,
        threshold: 0.0,
        passed: measured == 0,
        seconds: start.elapsed().as_secs_f64(),
        detail,
    }
}
