//! Parameter sweeps: one task per `(λ, γ)` point, deterministic output files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fermi_entropy::{
    build_correlator_table_with, classify_phase, entropy_series_from_table, extract_fermi_surface, select_model,
    widom_closed_form_2d, widom_prefactor, CorrelatorCache, CorrelatorTable, ModelParams, ScalingFit, ScalingModel,
    SeriesOptions,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{OutputFormat, SweepConfig};

/// Twelve significant digits; `-0` prints as `0`.
pub fn fmt_float(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct WidomSummary {
    pub c_value: f64,
    pub grid_n: usize,
    pub refinement_delta: f64,
    pub closed_form: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointError {
    pub block_l: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub lambda: f64,
    pub gamma: f64,
    pub dim: usize,
    pub phase: String,
    pub codimension: usize,
    pub entropy: Vec<(usize, f64)>,
    pub log_area: Option<ScalingFit<f64>>,
    pub area_only: Option<ScalingFit<f64>>,
    pub verdict: Option<ScalingModel>,
    pub widom: Option<WidomSummary>,
    pub errors: Vec<PointError>,
    pub elapsed_seconds: f64,
    pub version: &'static str,
    pub config_hash: String,
}

impl RunRecord {
    /// True when nothing at all was computed for this point.
    pub fn failed(&self) -> bool {
        self.entropy.is_empty() && !self.errors.is_empty()
    }
}

#[derive(Debug)]
pub struct ScanSummary {
    pub records: Vec<RunRecord>,
    pub files: Vec<PathBuf>,
}

impl ScanSummary {
    pub fn all_failed(&self) -> bool {
        self.records.iter().all(RunRecord::failed)
    }
}

fn table_for(
    params: &ModelParams<f64>,
    cfg: &SweepConfig,
    cache: Option<&CorrelatorCache>,
) -> fermi_entropy::Result<CorrelatorTable<f64>> {
    let grid = cfg.kgrid().map_err(fermi_entropy::Error::InvalidGrid)?;
    match cache {
        Some(c) => c.load_or_build(params, &grid, cfg.zero_modes),
        None => build_correlator_table_with(params, &grid, cfg.zero_modes),
    }
}

fn run_point(lambda: f64, gamma: f64, cfg: &SweepConfig, cache: Option<&CorrelatorCache>, hash: &str) -> RunRecord {
    let start = Instant::now();
    let mut record = RunRecord {
        lambda,
        gamma,
        dim: cfg.dim,
        phase: String::new(),
        codimension: 0,
        entropy: Vec::new(),
        log_area: None,
        area_only: None,
        verdict: None,
        widom: None,
        errors: Vec::new(),
        elapsed_seconds: 0.0,
        version: env!("CARGO_PKG_VERSION"),
        config_hash: hash.to_string(),
    };
    let params = match ModelParams::new(lambda, gamma, cfg.dim) {
        Ok(p) => p,
        Err(e) => {
            record.errors.push(PointError { block_l: None, message: e.to_string() });
            return record;
        }
    };
    let label = classify_phase(&params);
    record.phase = label.to_string();
    record.codimension = label.codimension;

    match table_for(&params, cfg, cache) {
        Ok(table) => {
            let opts = SeriesOptions { zero_modes: cfg.zero_modes, ..SeriesOptions::default() };
            let series = entropy_series_from_table(&table, &cfg.l_values, &opts);
            for pt in &series.points {
                if let Err(e) = &pt.result {
                    record.errors.push(PointError { block_l: Some(pt.block_l), message: e.to_string() });
                }
            }
            record.entropy = series.successes();
            match select_model(&record.entropy, cfg.dim, &cfg.fit) {
                Ok(sel) => {
                    record.log_area = Some(sel.log_area);
                    record.area_only = Some(sel.area_only);
                    record.verdict = Some(sel.verdict);
                }
                Err(e) => record.errors.push(PointError { block_l: None, message: format!("fit: {e}") }),
            }
        }
        Err(e) => record.errors.push(PointError { block_l: None, message: e.to_string() }),
    }

    if extract_fermi_surface(&params, 64).is_ok() {
        match widom_prefactor(&params, cfg.widom_grid()) {
            Ok(w) => {
                let closed_form = (cfg.dim == 2 && gamma == 0.0).then(|| widom_closed_form_2d(lambda).ok()).flatten();
                record.widom = Some(WidomSummary {
                    c_value: w.c_value,
                    grid_n: w.grid_n,
                    refinement_delta: w.refinement_delta,
                    closed_form,
                });
            }
            Err(e) => record.errors.push(PointError { block_l: None, message: format!("widom: {e}") }),
        }
    }
    record.elapsed_seconds = start.elapsed().as_secs_f64();
    record
}

/// Computes every point with `cfg.workers` threads and writes the output files.
pub fn run_scan(cfg: &SweepConfig) -> Result<ScanSummary, String> {
    let cache = match &cfg.cache_dir {
        Some(dir) => Some(CorrelatorCache::new(dir).map_err(|e| format!("cache directory: {e}"))?),
        None => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| format!("cannot start worker pool: {e}"))?;
    let hash = cfg.hash();
    let points = cfg.points();
    let records: Vec<RunRecord> = pool.install(|| {
        points.par_iter().map(|&(l, g)| run_point(l, g, cfg, cache.as_ref(), &hash)).collect()
    });
    let files = write_outputs(&records, &cfg.output.dir, cfg.output.format).map_err(|e| format!("writing outputs: {e}"))?;
    Ok(ScanSummary { records, files })
}

#[derive(Serialize)]
struct EntropyRow {
    lambda: f64,
    gamma: f64,
    dim: usize,
    #[serde(rename = "L")]
    block_l: usize,
    #[serde(rename = "S_bits")]
    s_bits: f64,
}

#[derive(Serialize)]
struct FitRow {
    lambda: f64,
    gamma: f64,
    dim: usize,
    model: ScalingModel,
    #[serde(rename = "C")]
    c: f64,
    #[serde(rename = "B")]
    b: f64,
    #[serde(rename = "A")]
    a: f64,
    residual: f64,
    verdict: ScalingModel,
}

#[derive(Serialize)]
struct ErrorRow {
    lambda: f64,
    gamma: f64,
    dim: usize,
    #[serde(rename = "L")]
    block_l: Option<usize>,
    error: String,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn write_file(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(contents)?;
    f.sync_all()
}

fn write_outputs(records: &[RunRecord], dir: &Path, format: OutputFormat) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut entropy = Vec::new();
    let mut fits = Vec::new();
    let mut errors = Vec::new();
    for r in records {
        for &(l, s) in &r.entropy {
            entropy.push(EntropyRow { lambda: r.lambda, gamma: r.gamma, dim: r.dim, block_l: l, s_bits: s });
        }
        if let (Some(verdict), Some(la), Some(ao)) = (r.verdict, r.log_area, r.area_only) {
            for fit in [la, ao] {
                fits.push(FitRow {
                    lambda: r.lambda,
                    gamma: r.gamma,
                    dim: r.dim,
                    model: fit.model,
                    c: fit.c_coef,
                    b: fit.b_coef,
                    a: fit.a_coef,
                    residual: fit.rms_residual,
                    verdict,
                });
            }
        }
        for e in &r.errors {
            errors.push(ErrorRow { lambda: r.lambda, gamma: r.gamma, dim: r.dim, block_l: e.block_l, error: e.message.clone() });
        }
    }

    let mut files = Vec::new();
    match format {
        OutputFormat::Csv => {
            let mut text = String::from("lambda,gamma,dim,L,S_bits\n");
            for row in &entropy {
                text += &format!(
                    "{},{},{},{},{}\n",
                    fmt_float(row.lambda),
                    fmt_float(row.gamma),
                    row.dim,
                    row.block_l,
                    fmt_float(row.s_bits)
                );
            }
            files.push(dir.join("entropy.csv"));
            write_file(files.last().expect("pushed"), text.as_bytes())?;

            let mut text = String::from("lambda,gamma,dim,model,C,B,A,residual,verdict\n");
            for row in &fits {
                text += &format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    fmt_float(row.lambda),
                    fmt_float(row.gamma),
                    row.dim,
                    row.model,
                    fmt_float(row.c),
                    fmt_float(row.b),
                    fmt_float(row.a),
                    fmt_float(row.residual),
                    row.verdict
                );
            }
            files.push(dir.join("fits.csv"));
            write_file(files.last().expect("pushed"), text.as_bytes())?;

            let mut text = String::from("lambda,gamma,dim,L,error\n");
            for row in &errors {
                let l = row.block_l.map(|l| l.to_string()).unwrap_or_default();
                text += &format!(
                    "{},{},{},{},{}\n",
                    fmt_float(row.lambda),
                    fmt_float(row.gamma),
                    row.dim,
                    l,
                    csv_field(&row.error)
                );
            }
            files.push(dir.join("errors.csv"));
            write_file(files.last().expect("pushed"), text.as_bytes())?;
        }
        OutputFormat::Json => {
            for (name, value) in [
                ("entropy.json", serde_json::to_vec_pretty(&entropy)?),
                ("fits.json", serde_json::to_vec_pretty(&fits)?),
                ("errors.json", serde_json::to_vec_pretty(&errors)?),
            ] {
                files.push(dir.join(name));
                write_file(files.last().expect("pushed"), &value)?;
            }
        }
    }

    let mut jsonl = Vec::new();
    for r in records {
        serde_json::to_writer(&mut jsonl, r)?;
        jsonl.push(b'\n');
    }
    files.push(dir.join("records.jsonl"));
    write_file(files.last().expect("pushed"), &jsonl)?;
    Ok(files)
}
