//! Finite-size scaling fits of block entropies and correlation-decay classification.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScalingModel {
    /// `S = (C/3) L^{d-1} log₂L + B L^{d-1} + A L^{d-2}`.
    #[serde(rename = "LOG_AREA")]
    LogArea,
    /// `S = B L^{d-1} + A L^{d-2}`.
    #[serde(rename = "AREA_ONLY")]
    AreaOnly,
}

impl ScalingModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScalingModel::LogArea => "LOG_AREA",
            ScalingModel::AreaOnly => "AREA_ONLY",
        }
    }
}

impl std::fmt::Display for ScalingModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFit<T> {
    /// Prefactor `C` of the logarithmic term (3 × fitted coefficient).
    pub c_coef: T,
    pub b_coef: T,
    pub a_coef: T,
    pub rms_residual: T,
    pub model: ScalingModel,
    pub l_range: (usize, usize),
    pub points: usize,
}

/// Model-selection thresholds and fit window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    /// Smallest block size kept in the fit.
    pub l_min: usize,
    /// Required ratio `rms(AREA_ONLY) / rms(LOG_AREA)` to accept the log term.
    pub residual_factor: f64,
    /// Required `|C|` to accept the log term.
    pub c_threshold: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self { l_min: 4, residual_factor: 10.0, c_threshold: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelSelection<T> {
    pub log_area: ScalingFit<T>,
    pub area_only: ScalingFit<T>,
    pub verdict: ScalingModel,
}

fn basis<T: Real>(l: usize, dim: usize, model: ScalingModel) -> Vec<T> {
    let lt: T = from_usize(l);
    let log2 = lt.ln() / T::ln_2();
    let area = lt.powi(dim as i32 - 1);
    match (model, dim) {
        (ScalingModel::LogArea, 1) => vec![log2, T::one()],
        (ScalingModel::AreaOnly, 1) => vec![T::one()],
        (ScalingModel::LogArea, _) => vec![area * log2, area, lt.powi(dim as i32 - 2)],
        (ScalingModel::AreaOnly, _) => vec![area, lt.powi(dim as i32 - 2)],
    }
}

/// Ordinary least squares of `S_L` on the chosen basis.
pub fn fit_scaling<T: Real>(series: &[(usize, T)], dim: usize, model: ScalingModel) -> Result<ScalingFit<T>> {
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidSeries(format!("dim must be 1, 2 or 3 (got {dim})")));
    }
    const MIN_POINTS: usize = 4;
    if series.len() < MIN_POINTS {
        return Err(Error::TooFewPoints { have: series.len(), need: MIN_POINTS });
    }
    if let Some(&(l, _)) = series.iter().find(|(l, _)| *l < 2) {
        return Err(Error::InvalidSeries(format!("block sizes must be >= 2 (got {l})")));
    }
    let mut ls: Vec<usize> = series.iter().map(|&(l, _)| l).collect();
    ls.sort_unstable();
    if ls.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::RankDeficient("repeated block sizes".into()));
    }

    let cols = basis::<T>(2, dim, model).len();
    let design = DMatrix::from_fn(series.len(), cols, |i, j| basis::<T>(series[i].0, dim, model)[j]);
    let rhs = DVector::from_iterator(series.len(), series.iter().map(|&(_, s)| s));

    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax <= T::zero() || smin / smax < lit(1e-12) {
        return Err(Error::RankDeficient(format!("condition number exceeds 1e12 ({} / {})", smax, smin)));
    }
    let coef = svd.solve(&rhs, T::zero()).map_err(|e| Error::RankDeficient(e.to_string()))?;
    let resid = &design * &coef - &rhs;
    let rms = (resid.norm_squared() / from_usize::<T>(series.len())).sqrt();

    let three: T = lit(3.0);
    let (c, b, a) = match (model, dim) {
        (ScalingModel::LogArea, 1) => (three * coef[0], coef[1], T::zero()),
        (ScalingModel::AreaOnly, 1) => (T::zero(), coef[0], T::zero()),
        (ScalingModel::LogArea, _) => (three * coef[0], coef[1], coef[2]),
        (ScalingModel::AreaOnly, _) => (T::zero(), coef[0], coef[1]),
    };
    Ok(ScalingFit {
        c_coef: c,
        b_coef: b,
        a_coef: a,
        rms_residual: rms,
        model,
        l_range: (ls[0], ls[ls.len() - 1]),
        points: series.len(),
    })
}

/// Fits both models on `L >= l_min` and picks one.
pub fn select_model<T: Real>(series: &[(usize, T)], dim: usize, cfg: &SelectionConfig) -> Result<ModelSelection<T>> {
    let window: Vec<(usize, T)> = series.iter().copied().filter(|&(l, _)| l >= cfg.l_min).collect();
    let log_area = fit_scaling(&window, dim, ScalingModel::LogArea)?;
    let area_only = fit_scaling(&window, dim, ScalingModel::AreaOnly)?;
    let factor: T = lit(cfg.residual_factor);
    let improves = if log_area.rms_residual > T::zero() {
        area_only.rms_residual >= factor * log_area.rms_residual
    } else {
        area_only.rms_residual > T::zero()
    };
    let verdict = if improves && log_area.c_coef.abs() > lit(cfg.c_threshold) {
        ScalingModel::LogArea
    } else {
        ScalingModel::AreaOnly
    };
    Ok(ModelSelection { log_area, area_only, verdict })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecayKind {
    #[serde(rename = "POWER_LAW")]
    PowerLaw,
    #[serde(rename = "EXPONENTIAL")]
    Exponential,
    #[serde(rename = "ZERO")]
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit<T> {
    pub kind: DecayKind,
    /// Power-law exponent (slope of `log|g|` vs `log r`) or correlation length `ξ`.
    pub exponent_or_xi: T,
    /// `R²` of the winning log-space regression.
    pub fit_quality: T,
}

/// Values below this count as zero.
const DECAY_FLOOR: f64 = 1e-12;

/// Decides between power-law and exponential decay of `|g(r)|`.
///
/// Regressions run on the upper envelope `max_{r' >= r} |g(r')|`, so
/// oscillating correlators are judged by their decay rather than their nodes.
/// Points below `1e-12` are dropped.
pub fn classify_decay<T: Real>(values: &[(T, T)]) -> Result<DecayFit<T>> {
    if values.len() < 6 {
        return Err(Error::TooFewPoints { have: values.len(), need: 6 });
    }
    if values.iter().any(|&(r, _)| r < T::one()) {
        return Err(Error::InvalidSeries("distances must be >= 1".into()));
    }
    if values.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidSeries("distances must be strictly ascending".into()));
    }
    let floor: T = lit(DECAY_FLOOR);
    if values.iter().all(|&(_, g)| g.abs() < floor) {
        return Ok(DecayFit { kind: DecayKind::Zero, exponent_or_xi: T::zero(), fit_quality: T::one() });
    }

    let mut envelope: Vec<(T, T)> = Vec::with_capacity(values.len());
    let mut running = T::zero();
    for &(r, g) in values.iter().rev() {
        running = running.max(g.abs());
        envelope.push((r, running));
    }
    envelope.reverse();
    let kept: Vec<(T, T)> = envelope.into_iter().filter(|&(_, g)| g >= floor).collect();
    if kept.len() < 3 {
        return Err(Error::TooFewPoints { have: kept.len(), need: 3 });
    }

    let log_g: Vec<T> = kept.iter().map(|&(_, g)| g.ln()).collect();
    let log_r: Vec<T> = kept.iter().map(|&(r, _)| r.ln()).collect();
    let r: Vec<T> = kept.iter().map(|&(r, _)| r).collect();
    let (power_slope, power_r2) = linear_regression(&log_r, &log_g);
    let (exp_slope, exp_r2) = linear_regression(&r, &log_g);

    if power_r2 >= exp_r2 {
        Ok(DecayFit { kind: DecayKind::PowerLaw, exponent_or_xi: power_slope, fit_quality: power_r2 })
    } else {
        Ok(DecayFit { kind: DecayKind::Exponential, exponent_or_xi: -T::one() / exp_slope, fit_quality: exp_r2 })
    }
}

/// Slope and `R²` (clamped to `[0, 1]`) of `y` against `x`.
fn linear_regression<T: Real>(x: &[T], y: &[T]) -> (T, T) {
    let n = from_usize::<T>(x.len());
    let mx = x.iter().fold(T::zero(), |a, &v| a + v) / n;
    let my = y.iter().fold(T::zero(), |a, &v| a + v) / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    let mut syy = T::zero();
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
        syy += (yi - my) * (yi - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy > T::zero() { sxy * sxy / (sxx * syy) } else { T::one() };
    (slope, r2.max(T::zero()).min(T::one()))
}
