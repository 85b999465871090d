//! Subcommand implementations.

use std::fs::File;
use std::io::BufWriter;

use fermi_entropy::checks::{self, CheckOutcome, Fault};
use fermi_entropy::{
    build_correlator_table_with, classify_decay, classify_phase, dos_estimate, dos_trend,
    extract_fermi_surface, spectral_gap, widom_closed_form_2d, widom_prefactor, Error, KGrid, ModelParams,
};
use serde::Serialize;
use serde_json::json;

use crate::args::{
    Cli, Command, CorrelatorArgs, DosArgs, InjectedFault, PhaseArgs, PointArgs, ReportFormat, ScanArgs, ValidateArgs,
    WidomArgs,
};
use crate::config::{Overrides, SweepConfig};
use crate::determinism;
use crate::scan::{fmt_float, run_scan};
use crate::CliError;

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Phase(a) => cmd_phase(&a),
        Command::Scan(a) => cmd_scan(&a),
        Command::Widom(a) => cmd_widom(&a),
        Command::Dos(a) => cmd_dos(&a),
        Command::Correlators(a) => cmd_correlators(&a),
        Command::Validate(a) => cmd_validate(&a),
    }
}

fn params(p: &PointArgs) -> Result<ModelParams<f64>, CliError> {
    ModelParams::new(p.lambda, p.gamma, p.dim).map_err(|e| CliError::Invalid(e.to_string()))
}

/// Library errors caused by the request rather than by the computation.
fn classify(e: Error) -> CliError {
    match e {
        Error::InvalidParams(_)
        | Error::InvalidGrid(_)
        | Error::NoFermiSurface(_)
        | Error::UnderResolved(_)
        | Error::MarginViolation { .. } => CliError::Invalid(e.to_string()),
        other => CliError::Failed(other.to_string()),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Failed(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn sample_grid(dim: usize, grid_n: Option<usize>) -> usize {
    grid_n.unwrap_or(match dim {
        1 => 4096,
        2 => 256,
        _ => 64,
    })
}

fn cmd_phase(a: &PhaseArgs) -> Result<(), CliError> {
    let p = params(&a.point)?;
    let label = classify_phase(&p);
    let n = sample_grid(p.dim(), a.grid_n);
    let gap = spectral_gap(&p, n).map_err(classify)?;
    let trend = dos_trend(&p, n, 32).map_err(classify)?;
    match a.format {
        ReportFormat::Json => print_json(&json!({
            "lambda": p.lambda(),
            "gamma": p.gamma(),
            "dim": p.dim(),
            "label": label.to_string(),
            "phase": label.phase,
            "codimension": label.codimension,
            "dos_positive": label.dos_positive,
            "gap": gap,
            "grid_n": n,
            "dos_trend": trend,
            "dos_trend_vanishes": trend.vanishes(),
        })),
        ReportFormat::Csv => {
            if label.is_gapped() {
                println!(
                    "Phase {}, gap {gap:.3}, codim {}, {}",
                    label.phase,
                    label.codimension,
                    if label.dos_positive { "g(0)>0" } else { "g(0)=0" }
                );
            } else {
                println!("{label}");
            }
            println!("gap estimate: {} (minimum of Lambda_k on a {n}^{} grid)", fmt_float(gap), p.dim());
            let steps: Vec<String> = trend
                .bin_widths
                .iter()
                .zip(&trend.lowest_densities)
                .map(|(w, g)| format!("{:.3e} @ bin {:.3e}", g, w))
                .collect();
            let verdict = if trend.vanishes() { "extrapolates to 0" } else { "stays finite" };
            println!("g(0) trend: {} ({verdict})", steps.join(", "));
            Ok(())
        }
    }
}

fn cmd_scan(a: &ScanArgs) -> Result<(), CliError> {
    let base = match &a.config {
        Some(path) => Some(SweepConfig::from_file(path).map_err(CliError::Invalid)?),
        None => None,
    };
    let overrides = Overrides {
        lambdas: a.lambda.clone(),
        gammas: a.gamma.clone(),
        dim: a.dim,
        l_min: a.l_min,
        l_max: a.l_max,
        fit_l_min: a.fit_l_min,
        grid_n: a.grid_n,
        shifted: a.shifted(),
        workers: a.workers,
        out_dir: a.out_dir.clone(),
        format: a.format,
        cache_dir: a.cache_dir.clone(),
        zero_modes: a.zero_modes.map(Into::into),
    };
    let cfg = SweepConfig::resolve(base, overrides).map_err(CliError::Invalid)?;
    log::info!("scan: {} points, L = {:?}, config hash {}", cfg.points().len(), cfg.l_values, cfg.hash());
    let summary = run_scan(&cfg).map_err(CliError::Failed)?;
    for r in &summary.records {
        let verdict = r.verdict.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
        let c = r.log_area.map(|f| format!("{:.4}", f.c_coef)).unwrap_or_else(|| "-".into());
        let widom = r.widom.as_ref().map(|w| format!(", widom C={:.4}", w.c_value)).unwrap_or_default();
        eprintln!(
            "lambda={} gamma={} {}: {verdict} C={c}{widom}, {} errors, {:.1} s",
            r.lambda,
            r.gamma,
            r.phase,
            r.errors.len(),
            r.elapsed_seconds
        );
    }
    for f in &summary.files {
        println!("{}", f.display());
    }
    if summary.all_failed() {
        return Err(CliError::Failed("every scan point failed; see errors table".into()));
    }
    Ok(())
}

fn cmd_widom(a: &WidomArgs) -> Result<(), CliError> {
    let p = params(&a.point)?;
    let grid_n = a.grid_n.unwrap_or(if p.dim() == 3 { 128 } else { 1024 });
    let result = widom_prefactor(&p, grid_n).map_err(classify)?;
    let closed = if p.dim() == 2 && p.gamma() == 0.0 { widom_closed_form_2d(p.lambda()).ok() } else { None };
    if let Some(path) = &a.surface_csv {
        let surface = extract_fermi_surface(&p, grid_n).map_err(classify)?;
        let file = File::create(path).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
        surface.write_csv(BufWriter::new(file)).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
    }
    match a.format {
        ReportFormat::Json => print_json(&json!({
            "lambda": p.lambda(),
            "gamma": p.gamma(),
            "dim": p.dim(),
            "c_value": result.c_value,
            "grid_n": result.grid_n,
            "refinement_delta": result.refinement_delta,
            "closed_form": closed,
            "difference": closed.map(|c| result.c_value - c),
        })),
        ReportFormat::Csv => {
            println!(
                "quadrature C = {:.6} (grid {}, refinement delta {:.3e})",
                result.c_value, result.grid_n, result.refinement_delta
            );
            if let Some(c) = closed {
                println!("closed form C = {c:.6}");
                println!("difference = {:.3e}", result.c_value - c);
            }
            Ok(())
        }
    }
}

fn cmd_dos(a: &DosArgs) -> Result<(), CliError> {
    let p = params(&a.point)?;
    let n = sample_grid(p.dim(), a.grid_n);
    let hist = dos_estimate(&p, n, a.bins).map_err(classify)?;
    let trend = dos_trend(&p, n, a.bins).map_err(classify)?;
    match a.format {
        ReportFormat::Json => print_json(&json!({
            "lambda": p.lambda(),
            "gamma": p.gamma(),
            "dim": p.dim(),
            "histogram": hist,
            "trend": trend,
            "g0_vanishes": trend.vanishes(),
        })),
        ReportFormat::Csv => {
            println!("energy_lo,energy_hi,density");
            for (w, rho) in hist.bin_edges.windows(2).zip(&hist.densities) {
                println!("{},{},{}", fmt_float(w[0]), fmt_float(w[1]), fmt_float(*rho));
            }
            let verdict = if trend.vanishes() { "g(0)=0" } else { "g(0)>0" };
            eprintln!("lowest-bin densities {:?} at widths {:?}: {verdict}", trend.lowest_densities, trend.bin_widths);
            Ok(())
        }
    }
}

fn cmd_correlators(a: &CorrelatorArgs) -> Result<(), CliError> {
    let p = params(&a.point)?;
    if a.r_max < 6 {
        return Err(CliError::Invalid(format!("r_max must be >= 6 for the decay fit (got {})", a.r_max)));
    }
    let default = KGrid::default_for(p.dim(), a.r_max);
    let shifted = if a.no_shifted { false } else { a.shifted || default.is_shifted() };
    let grid = KGrid::new(a.grid_n.unwrap_or(default.n()), shifted).map_err(classify)?;
    if 2 * a.r_max >= grid.n() {
        return Err(CliError::Invalid(format!("r_max = {} needs more than {} samples per axis", a.r_max, 2 * a.r_max)));
    }
    let table = build_correlator_table_with(&p, &grid, a.zero_modes.into()).map_err(classify)?;
    let sep = |r: usize| {
        let mut v = vec![0i64; p.dim()];
        v[0] = r as i64;
        v
    };
    let rows: Vec<(usize, f64, f64, f64, f64)> = (0..=a.r_max)
        .map(|r| {
            let g = table.g(&sep(r));
            let f = table.a(&sep(r));
            (r, g.re, g.im, f.re, f.im)
        })
        .collect();
    let decay = |pick: fn(&(usize, f64, f64, f64, f64)) -> f64| {
        let series: Vec<(f64, f64)> = rows.iter().skip(1).map(|row| (row.0 as f64, pick(row))).collect();
        classify_decay(&series)
    };
    let g_decay = decay(|r| r.1.hypot(r.2)).map_err(classify)?;
    let a_decay = decay(|r| r.3.hypot(r.4)).map_err(classify)?;
    match a.format {
        ReportFormat::Json => print_json(&json!({
            "lambda": p.lambda(),
            "gamma": p.gamma(),
            "dim": p.dim(),
            "grid_n": grid.n(),
            "shifted": grid.is_shifted(),
            "rows": rows.iter().map(|r| json!({"r": r.0, "g_re": r.1, "g_im": r.2, "a_re": r.3, "a_im": r.4})).collect::<Vec<_>>(),
            "g_decay": g_decay,
            "a_decay": a_decay,
        })),
        ReportFormat::Csv => {
            println!("r,g_re,g_im,a_re,a_im");
            for r in &rows {
                println!("{},{},{},{},{}", r.0, fmt_float(r.1), fmt_float(r.2), fmt_float(r.3), fmt_float(r.4));
            }
            eprintln!("g decay: {:?}", g_decay);
            eprintln!("a decay: {:?}", a_decay);
            Ok(())
        }
    }
}

fn cmd_validate(a: &ValidateArgs) -> Result<(), CliError> {
    let ids: Vec<u32> = match &a.only {
        Some(ids) => ids.clone(),
        None => (1..=determinism::CHECK_ID).collect(),
    };
    if let Some(bad) = ids.iter().find(|&&id| id == 0 || id > determinism::CHECK_ID) {
        return Err(CliError::Invalid(format!("unknown check id {bad} (valid: 1-{})", determinism::CHECK_ID)));
    }
    let fault = match a.inject_fault {
        Some(InjectedFault::AnomalousSign) => Fault::AnomalousSign,
        None => Fault::None,
    };
    let mut outcomes: Vec<CheckOutcome> = Vec::new();
    for &id in &ids {
        let outcome = if id == determinism::CHECK_ID {
            determinism::check_scan_determinism(a.cache_dir.as_deref())
        } else {
            checks::run_check(id, fault).expect("id range checked above")
        };
        if a.format == ReportFormat::Csv {
            println!("{outcome}");
        }
        outcomes.push(outcome);
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    match a.format {
        ReportFormat::Json => print_json(&json!({
            "passed": failed == 0,
            "checks": outcomes,
        }))?,
        ReportFormat::Csv => println!("{}/{} checks passed", outcomes.len() - failed, outcomes.len()),
    }
    if failed > 0 {
        return Err(CliError::Failed(format!("{failed} check(s) failed")));
    }
    Ok(())
}
