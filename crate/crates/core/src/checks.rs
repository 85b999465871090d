//! End-to-end numerical checks: closed forms, fitted prefactors and oracle
//! equivalence. Each returns a [`CheckOutcome`] instead of panicking.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::correlators::{block_matrices_with_margin, build_correlator_table_with, CorrelatorTable, ZeroModePolicy};
use crate::entanglement::{
    block_entropy, entropy_series, mode_spectrum_with, SeriesOptions, SpectrumMethod,
};
use crate::error::Result;
use crate::grid::KGrid;
use crate::model::ModelParams;
use crate::oracle::{brute_force_block_entropy, oracle_bdg_with, table_block};
use crate::scaling::{fit_scaling, select_model, ScalingModel, SelectionConfig};
use crate::widom::{widom_closed_form_2d, widom_prefactor};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub id: u32,
    pub name: String,
    /// Worst-case value of the checked quantity.
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
    pub seconds: f64,
    pub detail: String,
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "[{tag}] {:>2} {}: measured {:.3e} (threshold {:.3e}, {:.1} s) {}",
            self.id, self.name, self.measured, self.threshold, self.seconds, self.detail
        )
    }
}

/// Test hooks that deliberately break a computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Negates the anomalous correlator of every momentum-grid table.
    AnomalousSign,
}

struct Timer(Instant);

impl Timer {
    fn start() -> Self {
        Self(Instant::now())
    }

    fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

fn outcome(id: u32, name: &str, measured: f64, threshold: f64, ok: bool, timer: &Timer, detail: String) -> CheckOutcome {
    CheckOutcome {
        id,
        name: name.into(),
        measured,
        threshold,
        passed: ok && measured.is_finite(),
        seconds: timer.seconds(),
        detail,
    }
}

fn failed(id: u32, name: &str, threshold: f64, timer: &Timer, err: impl std::fmt::Display) -> CheckOutcome {
    CheckOutcome {
        id,
        name: name.into(),
        measured: f64::NAN,
        threshold,
        passed: false,
        seconds: timer.seconds(),
        detail: format!("error: {err}"),
    }
}

fn log_fit(params: &ModelParams<f64>, ls: &[usize]) -> Result<f64> {
    let l_max = *ls.last().expect("non-empty L range");
    let grid = KGrid::default_for(params.dim(), l_max);
    fit_c(params, ls, &grid)
}

fn fit_c(params: &ModelParams<f64>, ls: &[usize], grid: &KGrid) -> Result<f64> {
    let series = entropy_series(params, ls, grid, &SeriesOptions::default())?;
    for pt in &series.points {
        if let Err(e) = &pt.result {
            return Err(crate::error::Error::InvalidSeries(format!("L = {}: {e}", pt.block_l)));
        }
    }
    Ok(fit_scaling(&series.successes(), params.dim(), ScalingModel::LogArea)?.c_coef)
}

/// Surface quadrature against `(2/π) arccos(λ - 1)` for λ = 0.1, 0.3, …, 1.9.
pub fn check_widom_closed_form() -> CheckOutcome {
    const NAME: &str = "Widom quadrature vs closed form, d=2";
    let timer = Timer::start();
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for i in 0..10 {
        let lambda = 0.1 + 0.2 * i as f64;
        let params = match ModelParams::new(lambda, 0.0, 2) {
            Ok(p) => p,
            Err(e) => return failed(1, NAME, 1e-3, &timer, e),
        };
        let quad = match widom_prefactor(&params, 1024) {
            Ok(r) => r.c_value,
            Err(e) => return failed(1, NAME, 1e-3, &timer, e),
        };
        let exact = widom_closed_form_2d(lambda).expect("lambda in [0, 2]");
        if (quad - exact).abs() > worst {
            worst = (quad - exact).abs();
            detail = format!("worst at lambda={lambda:.1}");
        }
    }
    let fast = timer.seconds() < 10.0;
    outcome(1, NAME, worst, 1e-3, worst < 1e-3 && fast, &timer, detail)
}

/// Fitted `C` for the square-lattice metal against the closed form.
pub fn check_metal_prefactor_2d() -> CheckOutcome {
    const NAME: &str = "fitted C vs closed form, d=2 metal";
    let timer = Timer::start();
    let ls: Vec<usize> = (6..=40).collect();
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for lambda in [0.2, 0.6, 1.0, 1.4, 1.8] {
        let params = ModelParams::new(lambda, 0.0, 2).expect("valid params");
        let c = match log_fit(&params, &ls) {
            Ok(c) => c,
            Err(e) => return failed(2, NAME, 0.05, &timer, e),
        };
        let exact = widom_closed_form_2d(lambda).expect("lambda in [0, 2]");
        let rel = (c - exact).abs() / exact;
        worst = worst.max(rel);
        parts.push(format!("{lambda:.1}:{c:.4}/{exact:.4}"));
    }
    let fast = timer.seconds() < 900.0;
    outcome(2, NAME, worst, 0.05, worst < 0.05 && fast, &timer, parts.join(" "))
}

/// Fitted `C` at λ = 0, γ = 1 in d = 2, expected 1.
pub fn check_nodal_line_prefactor() -> CheckOutcome {
    const NAME: &str = "fitted C = 1 at lambda=0, gamma=1, d=2";
    let timer = Timer::start();
    let ls: Vec<usize> = (6..=40).collect();
    let params = ModelParams::new(0.0, 1.0, 2).expect("valid params");
    // odd N keeps the nodal line k_y = k_x + π off the grid
    let grid = KGrid::new(511, true).expect("valid grid");
    match fit_c(&params, &ls, &grid) {
        Ok(c) => {
            let rel = (c - 1.0).abs();
            outcome(3, NAME, rel, 0.05, rel < 0.05, &timer, format!("C={c:.4}"))
        }
        Err(e) => failed(3, NAME, 0.05, &timer, e),
    }
}

/// Fitted `C` in the cubic metal against the surface quadrature.
pub fn check_metal_prefactor_3d() -> CheckOutcome {
    const NAME: &str = "fitted C vs Widom quadrature, d=3 metal";
    let timer = Timer::start();
    let ls: Vec<usize> = (4..=12).collect();
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for lambda in [0.5, 1.5, 2.5] {
        let params = ModelParams::new(lambda, 0.0, 3).expect("valid params");
        let quad = match widom_prefactor(&params, 128) {
            Ok(r) => r.c_value,
            Err(e) => return failed(4, NAME, 0.10, &timer, e),
        };
        let c = match log_fit(&params, &ls) {
            Ok(c) => c,
            Err(e) => return failed(4, NAME, 0.10, &timer, e),
        };
        let rel = (c - quad).abs() / quad;
        worst = worst.max(rel);
        parts.push(format!("{lambda:.1}:{c:.4}/{quad:.4}"));
    }
    let fast = timer.seconds() < 1200.0;
    outcome(4, NAME, worst, 0.10, worst < 0.10 && fast, &timer, parts.join(" "))
}

/// Phase II points must select the area law with a negligible log term.
pub fn check_phase_two_area_law() -> CheckOutcome {
    const NAME: &str = "area law in phase II, d=2";
    let timer = Timer::start();
    let ls: Vec<usize> = (6..=40).collect();
    let cfg = SelectionConfig::default();
    let mut worst = 0.0f64;
    let mut all_area = true;
    let mut parts = Vec::new();
    for (lambda, gamma) in [(1.0, 1.0), (0.5, 1.0)] {
        let params = ModelParams::new(lambda, gamma, 2).expect("valid params");
        let grid = KGrid::default_for(2, 40);
        let series: crate::entanglement::EntropySeries<f64> = match entropy_series(&params, &ls, &grid, &SeriesOptions::default()) {
            Ok(s) => s,
            Err(e) => return failed(5, NAME, 0.05, &timer, e),
        };
        let sel = match select_model(&series.successes(), 2, &cfg) {
            Ok(s) => s,
            Err(e) => return failed(5, NAME, 0.05, &timer, e),
        };
        all_area &= sel.verdict == ScalingModel::AreaOnly;
        worst = worst.max(sel.log_area.c_coef.abs());
        parts.push(format!("({lambda},{gamma}):{} C={:.4}", sel.verdict, sel.log_area.c_coef));
    }
    outcome(5, NAME, worst, 0.05, all_area && worst < 0.05, &timer, parts.join(" "))
}

/// The gapped full band has zero block entropy.
pub fn check_product_state() -> CheckOutcome {
    const NAME: &str = "product state at lambda=3, gamma=0, d=2";
    let timer = Timer::start();
    let params = ModelParams::new(3.0, 0.0, 2).expect("valid params");
    let ls: Vec<usize> = (1..=20).collect();
    let series: crate::entanglement::EntropySeries<f64> = match entropy_series(&params, &ls, &KGrid::default_for(2, 20), &SeriesOptions::default()) {
        Ok(s) => s,
        Err(e) => return failed(6, NAME, 1e-10, &timer, e),
    };
    let mut worst = 0.0f64;
    for pt in &series.points {
        match &pt.result {
            Ok(e) => worst = worst.max(e.entropy_bits.abs()),
            Err(e) => return failed(6, NAME, 1e-10, &timer, e),
        }
    }
    outcome(6, NAME, worst, 1e-10, worst < 1e-10, &timer, "max S_L over L<=20".into())
}

fn random_points(count: usize, seed: u64, dims: &[usize]) -> Vec<ModelParams<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let dim = dims[i % dims.len()];
            let d = dim as f64;
            let (lambda, gamma) = match i % 5 {
                // metal
                0 => (rng.gen_range(0.05..d - 0.05), 0.0),
                // nodal line (d = 2) or nodal superconductor
                1 => (0.0, rng.gen_range(0.2..2.0)),
                2 => (rng.gen_range(0.05..d - 0.05), rng.gen_range(0.2..2.0)),
                // gapped
                3 => (rng.gen_range(d + 0.1..d + 2.0), 0.0),
                _ => (rng.gen_range(d + 0.1..d + 2.0), rng.gen_range(0.2..2.0)),
            };
            ModelParams::new(lambda, gamma, dim).expect("sampled inside the domain")
        })
        .collect()
}

fn max_table_difference(a: &CorrelatorTable<f64>, b: &CorrelatorTable<f64>) -> f64 {
    let pairs = a.g_values().iter().zip(b.g_values()).chain(a.a_values().iter().zip(b.a_values()));
    pairs.fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

/// Momentum-grid tables against real-space diagonalization, and L = 2
/// entropies against the explicit reduced density matrix.
pub fn check_oracle_equivalence(fault: Fault) -> CheckOutcome {
    const NAME: &str = "k-grid vs real-space oracle, d=2";
    let timer = Timer::start();
    let grid = KGrid::new(10, true).expect("valid grid");
    let policy = ZeroModePolicy::HalfFill;
    let mut worst_table: f64 = 0.0;
    let mut worst_entropy: f64 = 0.0;
    for params in random_points(10, 0x5eed_0007, &[2]) {
        let mut table = match build_correlator_table_with(&params, &grid, policy) {
            Ok(t) => t,
            Err(e) => return failed(7, NAME, 1e-9, &timer, e),
        };
        if fault == Fault::AnomalousSign {
            table.flip_anomalous_sign();
        }
        let oracle = match oracle_bdg_with(&params, 10, true, policy) {
            Ok(t) => t,
            Err(e) => return failed(7, NAME, 1e-9, &timer, e),
        };
        worst_table = worst_table.max(max_table_difference(&table, &oracle));

        let spectral = block_matrices_with_margin(&table, 2, 1)
            .and_then(|bc| mode_spectrum_with(&bc, SpectrumMethod::Auto))
            .map(|s| block_entropy(&s).entropy_bits);
        let (c, f) = table_block(&oracle, 2);
        let brute = brute_force_block_entropy(&c, &f);
        match (spectral, brute) {
            (Ok(s), Ok(b)) => worst_entropy = worst_entropy.max((s - b).abs()),
            (Err(e), _) | (_, Err(e)) => return failed(7, NAME, 1e-9, &timer, e),
        }
    }
    let ok = worst_table < 1e-9 && worst_entropy < 1e-8;
    let detail = format!("table {worst_table:.2e} (tol 1e-9), entropy {worst_entropy:.2e} (tol 1e-8)");
    outcome(7, NAME, worst_table.max(worst_entropy), 1e-9, ok, &timer, detail)
}

/// ν stays inside `[0, 1/4]` with negligible imaginary parts across phases and dimensions.
pub fn check_spectrum_validity() -> CheckOutcome {
    const NAME: &str = "entanglement spectrum validity sweep";
    let timer = Timer::start();
    let tol = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0008);
    let mut worst = 0.0f64;
    let mut ranges = (f64::INFINITY, f64::NEG_INFINITY);
    for params in random_points(50, 0x5eed_0008, &[1, 2, 3]) {
        let (l, n) = match params.dim() {
            1 => (rng.gen_range(4..=32), 257),
            2 => (rng.gen_range(2..=6), 49),
            _ => (rng.gen_range(2..=3), 25),
        };
        let grid = KGrid::new(n, true).expect("valid grid");
        let spec = build_correlator_table_with(&params, &grid, ZeroModePolicy::HalfFill)
            .and_then(|t| block_matrices_with_margin(&t, l, 8))
            .and_then(|bc| mode_spectrum_with(&bc, SpectrumMethod::General));
        match spec {
            Ok(s) => {
                ranges = (ranges.0.min(s.raw_range.0), ranges.1.max(s.raw_range.1));
                let excess = (-s.raw_range.0).max(s.raw_range.1 - 0.25).max(0.0);
                worst = worst.max(excess).max(s.max_imag);
            }
            Err(e) => return failed(8, NAME, tol, &timer, format!("{params:?}, L={l}: {e}")),
        }
    }
    let detail = format!("Re nu in [{:.3e}, {:.6}]", ranges.0, ranges.1);
    outcome(8, NAME, worst, tol, worst <= tol, &timer, detail)
}

/// The critical chain has log coefficient `1/3`, i.e. `C = 1`.
pub fn check_chain_log_coefficient() -> CheckOutcome {
    const NAME: &str = "d=1 chain log coefficient 1/3";
    let timer = Timer::start();
    let ls: Vec<usize> = (8..=200).collect();
    let params = ModelParams::new(0.5, 0.0, 1).expect("valid params");
    match log_fit(&params, &ls) {
        Ok(c) => {
            let coef = c / 3.0;
            let rel = (coef - 1.0 / 3.0).abs() * 3.0;
            outcome(9, NAME, rel, 0.05, rel < 0.05, &timer, format!("log2 coefficient {coef:.5}"))
        }
        Err(e) => failed(9, NAME, 0.05, &timer, e),
    }
}

/// Number of library-level checks; ids run from 1 to this value.
pub const CHECK_COUNT: u32 = 9;

/// Runs one check by id, or `None` for an unknown id.
pub fn run_check(id: u32, fault: Fault) -> Option<CheckOutcome> {
    let outcome = match id {
        1 => check_widom_closed_form(),
        2 => check_metal_prefactor_2d(),
        3 => check_nodal_line_prefactor(),
        4 => check_metal_prefactor_3d(),
        5 => check_phase_two_area_law(),
        6 => check_product_state(),
        7 => check_oracle_equivalence(fault),
        8 => check_spectrum_validity(),
        9 => check_chain_log_coefficient(),
        _ => return None,
    };
    Some(outcome)
}

/// All library-level checks in order.
pub fn run_all(fault: Fault) -> Vec<CheckOutcome> {
    (1..=CHECK_COUNT).filter_map(|id| run_check(id, fault)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_points_cover_every_phase() {
        use crate::model::{classify_phase, Phase};
        let pts = random_points(10, 1, &[2]);
        let phases: Vec<Phase> = pts.iter().map(|p| classify_phase(p).phase).collect();
        for ph in [Phase::I, Phase::II, Phase::III] {
            assert!(phases.contains(&ph));
        }
        assert!(pts.iter().any(|p| p.lambda() == 0.0 && p.gamma() > 0.0));
        assert_eq!(pts, random_points(10, 1, &[2]));
    }

    #[test]
    fn outcome_display() {
        let o = CheckOutcome {
            id: 6,
            name: "x".into(),
            measured: 0.0,
            threshold: 1e-10,
            passed: true,
            seconds: 0.1,
            detail: String::new(),
        };
        assert!(o.to_string().starts_with("[PASS]  6 x"));
    }

    #[test]
    fn negative_control_breaks_oracle_check() {
        assert!(!check_oracle_equivalence(Fault::AnomalousSign).passed);
    }
}
