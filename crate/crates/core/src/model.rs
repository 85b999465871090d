//! Hamiltonian instance, dispersion and phase classification.
//!
//! The model is a nearest-neighbour spinless-fermion hopping problem on the
//! hypercubic lattice with chemical potential `2λ` and p-wave pairing `γ`.
//! In momentum space the band function is `t_k = λ - Σ cos k_α`, the gap
//! function `Δ_k = γ Σ sin k_α`, and the Bogoliubov quasiparticle energy
//! `Λ_k = 2 sqrt(t_k² + Δ_k²)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::KGrid;
use crate::scalar::{from_usize, lit, Real};

/// `(λ, γ, d)` defining one Hamiltonian instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams<T> {
    lambda: T,
    gamma: T,
    dim: usize,
}

impl<T: Real> ModelParams<T> {
    /// Validates `dim ∈ {1, 2, 3}`, `λ ≥ 0` and `γ ≥ 0`.
    pub fn new(lambda: T, gamma: T, dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParams(format!("dim must be 1, 2 or 3 (got {dim})")));
        }
        if !lambda.is_finite() || lambda < T::zero() {
            return Err(Error::InvalidParams(format!("lambda must be >= 0 (got {lambda})")));
        }
        if !gamma.is_finite() || gamma < T::zero() {
            return Err(Error::InvalidParams(format!("gamma must be >= 0 (got {gamma})")));
        }
        Ok(Self { lambda, gamma, dim })
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `t_k = λ - Σ_α cos k_α`.
    #[inline]
    pub fn band(&self, k: &[T]) -> T {
        debug_assert_eq!(k.len(), self.dim);
        k.iter().fold(self.lambda, |acc, &ka| acc - ka.cos())
    }

    /// `Δ_k = γ Σ_α sin k_α`.
    #[inline]
    pub fn pairing(&self, k: &[T]) -> T {
        debug_assert_eq!(k.len(), self.dim);
        self.gamma * k.iter().fold(T::zero(), |acc, &ka| acc + ka.sin())
    }

    /// `Λ_k = 2 sqrt(t_k² + Δ_k²)`.
    #[inline]
    pub fn quasiparticle_energy(&self, k: &[T]) -> T {
        let t = self.band(k);
        let d = self.pairing(k);
        lit::<T>(2.0) * (t * t + d * d).sqrt()
    }
}

/// A point of the first Brillouin zone, every component in `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Momentum<T> {
    comps: [T; 3],
    dim: usize,
}

impl<T: Real> Momentum<T> {
    pub fn new(comps: &[T]) -> Result<Self> {
        if comps.is_empty() || comps.len() > 3 {
            return Err(Error::InvalidMomentum(format!(
                "expected 1 to 3 components, got {}",
                comps.len()
            )));
        }
        let pi = T::pi();
        for &c in comps {
            if !(c > -pi && c <= pi) {
                return Err(Error::InvalidMomentum(format!("component {c} outside (-pi, pi]")));
            }
        }
        let mut arr = [T::zero(); 3];
        arr[..comps.len()].copy_from_slice(comps);
        Ok(Self { comps: arr, dim: comps.len() })
    }

    /// Folds arbitrary components into the first Brillouin zone.
    pub fn wrapped(comps: &[T]) -> Result<Self> {
        let folded: Vec<T> = comps.iter().map(|&c| wrap_to_zone(c)).collect();
        Self::new(&folded)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[T] {
        &self.comps[..self.dim]
    }
}

/// Maps an angle into `(-π, π]`.
pub fn wrap_to_zone<T: Real>(x: T) -> T {
    let two_pi = T::two_pi();
    let pi = T::pi();
    let mut y = x - two_pi * ((x + pi) / two_pi).floor();
    // y is now in [-π, π)
    if y <= -pi {
        y += two_pi;
    }
    y
}

pub fn t_k<T: Real>(params: &ModelParams<T>, k: &Momentum<T>) -> T {
    params.band(k.as_slice())
}

pub fn delta_k<T: Real>(params: &ModelParams<T>, k: &Momentum<T>) -> T {
    params.pairing(k.as_slice())
}

pub fn lambda_k<T: Real>(params: &ModelParams<T>, k: &Momentum<T>) -> T {
    params.quasiparticle_energy(k.as_slice())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Phase {
    /// Gapless with a finite Fermi surface.
    I,
    /// Gapless with point (d = 2) or line (d = 3) nodes.
    II,
    /// Gapped.
    III,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Phase::I => "I",
            Phase::II => "II",
            Phase::III => "III",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PhaseLabel {
    pub phase: Phase,
    /// Dimension of k-space minus the dimension of the gapless manifold.
    pub codimension: usize,
    /// Whether the density of states at zero energy is positive.
    pub dos_positive: bool,
}

impl PhaseLabel {
    fn new(phase: Phase, codimension: usize) -> Self {
        Self { phase, codimension, dos_positive: phase == Phase::I }
    }

    pub fn is_gapped(&self) -> bool {
        self.phase == Phase::III
    }
}

impl std::fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let dos = if self.dos_positive { "g(0)>0" } else { "g(0)=0" };
        write!(f, "Phase {}, codim {}, {}", self.phase, self.codimension, dos)
    }
}

/// Classifies a parameter point into phases I, II and III.
///
/// In d = 2, 3 the phase boundaries are those of the hypercubic model:
/// `γ = 0, λ ≤ d` is the metal (I), with `λ = 0, γ > 0` joining it in d = 2
/// and phase II in d = 3; `0 < λ ≤ d, γ > 0` is the nodal superconductor (II);
/// `λ > d` is gapped (III). The band-edge point `λ = d, γ = 0` keeps
/// label I with codimension 2.
///
/// In d = 1 the pairing opens a full gap except on the line `λ = 1`, so the
/// labels follow the actual gapless set: Fermi points give I, anything else III.
pub fn classify_phase<T: Real>(params: &ModelParams<T>) -> PhaseLabel {
    let d = params.dim;
    let lambda = params.lambda;
    let gamma = params.gamma;
    let dim_t: T = from_usize(d);
    let zero = T::zero();

    if d == 1 {
        let gapless = (gamma == zero && lambda <= T::one()) || lambda == T::one();
        return if gapless { PhaseLabel::new(Phase::I, 1) } else { PhaseLabel::new(Phase::III, 1) };
    }

    if lambda > dim_t {
        return PhaseLabel::new(Phase::III, d);
    }
    if gamma == zero {
        let codim = if lambda == dim_t { 2 } else { 1 };
        return PhaseLabel::new(Phase::I, codim);
    }
    if lambda == zero && d == 2 {
        return PhaseLabel::new(Phase::I, 1);
    }
    PhaseLabel::new(Phase::II, 2)
}

/// Minimum of `Λ_k` over the unshifted grid `k = 2πn/N - π`, which contains
/// `k = 0` and `k = π` for even `N`.
pub fn spectral_gap<T: Real>(params: &ModelParams<T>, grid_n: usize) -> Result<T> {
    let grid = KGrid::new(grid_n, false)?;
    let mut min = T::infinity();
    grid.for_each_point(params.dim, |_, k| {
        let e = params.quasiparticle_energy(k);
        if e < min {
            min = e;
        }
    });
    Ok(min)
}

/// Normalized histogram of `Λ_k` sampled on the half-step-shifted grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DosHistogram<T> {
    pub bin_edges: Vec<T>,
    pub densities: Vec<T>,
    pub grid_n: usize,
}

impl<T: Real> DosHistogram<T> {
    pub fn bin_width(&self) -> T {
        self.bin_edges[1] - self.bin_edges[0]
    }

    /// The `g(0)` estimate: density in the lowest bin.
    pub fn lowest_density(&self) -> T {
        self.densities[0]
    }

    pub fn integral(&self) -> T {
        self.densities
            .iter()
            .zip(self.bin_edges.windows(2))
            .fold(T::zero(), |acc, (&rho, w)| acc + rho * (w[1] - w[0]))
    }
}

/// Lowest-bin densities at three successively halved bin widths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DosTrend<T> {
    pub bin_widths: [T; 3],
    pub lowest_densities: [T; 3],
}

impl<T: Real> DosTrend<T> {
    /// True when the lowest-bin density at least halves over two halvings
    /// of the bin width, i.e. the estimate extrapolates to `g(0) = 0`.
    pub fn vanishes(&self) -> bool {
        let [coarse, _, fine] = self.lowest_densities;
        fine <= lit::<T>(0.5) * coarse
    }
}

const MIN_DOS_GRID: usize = 64;
const MIN_DOS_BINS: usize = 32;
const MIN_SAMPLES_PER_BIN: usize = 16;

/// Histogram of `Λ_k` over `[0, max Λ]` with `bins` equal bins.
pub fn dos_estimate<T: Real>(params: &ModelParams<T>, grid_n: usize, bins: usize) -> Result<DosHistogram<T>> {
    let (max, counts) = dos_counts(params, grid_n, bins)?;
    Ok(histogram_from_counts(&counts, max, grid_n))
}

/// `g(0)` estimates for `bins`, `2 bins` and `4 bins` over the same range.
pub fn dos_trend<T: Real>(params: &ModelParams<T>, grid_n: usize, bins: usize) -> Result<DosTrend<T>> {
    let (max, fine) = dos_counts(params, grid_n, 4 * bins)?;
    let medium: Vec<u64> = fine.chunks(2).map(|c| c[0] + c[1]).collect();
    let coarse: Vec<u64> = medium.chunks(2).map(|c| c[0] + c[1]).collect();
    let hists = [
        histogram_from_counts(&coarse, max, grid_n),
        histogram_from_counts(&medium, max, grid_n),
        histogram_from_counts(&fine, max, grid_n),
    ];
    Ok(DosTrend {
        bin_widths: [hists[0].bin_width(), hists[1].bin_width(), hists[2].bin_width()],
        lowest_densities: [hists[0].lowest_density(), hists[1].lowest_density(), hists[2].lowest_density()],
    })
}

fn dos_counts<T: Real>(params: &ModelParams<T>, grid_n: usize, bins: usize) -> Result<(T, Vec<u64>)> {
    if grid_n < MIN_DOS_GRID {
        return Err(Error::UnderResolved(format!("grid_n must be >= {MIN_DOS_GRID} (got {grid_n})")));
    }
    if bins < MIN_DOS_BINS {
        return Err(Error::UnderResolved(format!("bins must be >= {MIN_DOS_BINS} (got {bins})")));
    }
    let grid = KGrid::new(grid_n, true)?;
    let samples = grid.point_count(params.dim)?;
    if samples < MIN_SAMPLES_PER_BIN * bins {
        return Err(Error::UnderResolved(format!(
            "{samples} momentum samples cannot populate {bins} bins (need {} per bin on average)",
            MIN_SAMPLES_PER_BIN
        )));
    }

    let mut max = T::zero();
    grid.for_each_point(params.dim, |_, k| {
        let e = params.quasiparticle_energy(k);
        if e > max {
            max = e;
        }
    });
    if max <= T::zero() {
        return Err(Error::UnderResolved("dispersion vanishes on every sample".into()));
    }
    // Widen slightly so the maximum lands inside the last bin.
    let top = max * lit(1.0 + 1e-12);
    let scale = from_usize::<T>(bins) / top;
    let mut counts = vec![0u64; bins];
    grid.for_each_point(params.dim, |_, k| {
        let e = params.quasiparticle_energy(k);
        let idx = (e * scale).floor().to_usize().unwrap_or(0).min(bins - 1);
        counts[idx] += 1;
    });
    Ok((top, counts))
}

fn histogram_from_counts<T: Real>(counts: &[u64], top: T, grid_n: usize) -> DosHistogram<T> {
    let bins = counts.len();
    let width = top / from_usize::<T>(bins);
    let total: u64 = counts.iter().sum();
    let norm = T::one() / (T::from_u64(total).expect("count fits") * width);
    let bin_edges = (0..=bins).map(|i| width * from_usize::<T>(i)).collect();
    let densities = counts.iter().map(|&c| T::from_u64(c).expect("count fits") * norm).collect();
    DosHistogram { bin_edges, densities, grid_n }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn p(l: f64, g: f64, d: usize) -> ModelParams<f64> {
        ModelParams::new(l, g, d).unwrap()
    }

    fn k(c: &[f64]) -> Momentum<f64> {
        Momentum::new(c).unwrap()
    }

    #[test]
    fn band_function_values() {
        assert_abs_diff_eq!(t_k(&p(0.0, 0.0, 2), &k(&[0.0, 0.0])), -2.0);
        assert_abs_diff_eq!(t_k(&p(0.0, 0.0, 2), &k(&[FRAC_PI_2, FRAC_PI_2])), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t_k(&p(1.0, 0.0, 3), &k(&[PI, PI, PI])), 4.0);
    }

    #[test]
    fn pairing_function_values() {
        assert_abs_diff_eq!(delta_k(&p(0.0, 1.0, 2), &k(&[FRAC_PI_2, FRAC_PI_2])), 2.0);
        assert_eq!(delta_k(&p(0.7, 0.3, 3), &k(&[0.0, 0.0, 0.0])), 0.0);
        assert_abs_diff_eq!(delta_k(&p(1.0, 0.5, 2), &k(&[FRAC_PI_2, 0.0])), 0.5);
    }

    #[test]
    fn quasiparticle_energy_values() {
        assert_abs_diff_eq!(lambda_k(&p(0.0, 0.0, 2), &k(&[FRAC_PI_2, FRAC_PI_2])), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(lambda_k(&p(0.0, 0.0, 2), &k(&[0.0, 0.0])), 4.0);
        // t = 1, Δ = 2
        assert_abs_diff_eq!(lambda_k(&p(1.0, 1.0, 2), &k(&[FRAC_PI_2, FRAC_PI_2])), 2.0 * 5f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(lambda_k(&p(0.0, 1.0, 2), &k(&[FRAC_PI_2, FRAC_PI_2])), 4.0, epsilon = 1e-14);
    }

    #[test]
    fn generic_over_f32() {
        let params = ModelParams::<f32>::new(1.0, 1.0, 2).unwrap();
        let e = params.quasiparticle_energy(&[std::f32::consts::FRAC_PI_2, std::f32::consts::FRAC_PI_2]);
        assert!((e - 2.0 * 5f32.sqrt()).abs() < 1e-5);
        assert_eq!(classify_phase(&params).phase, Phase::II);
    }

    #[test]
    fn rejects_out_of_domain_params() {
        assert!(ModelParams::new(-1.0, 0.0, 2).is_err());
        assert!(ModelParams::new(1.0, -0.1, 2).is_err());
        assert!(ModelParams::new(1.0, 0.1, 4).is_err());
        assert!(ModelParams::new(1.0, 0.1, 0).is_err());
        assert!(ModelParams::new(f64::NAN, 0.1, 2).is_err());
        let msg = ModelParams::new(-1.0, 0.0, 2).unwrap_err().to_string();
        assert!(msg.contains("lambda must be >= 0"), "{msg}");
    }

    #[test]
    fn momentum_must_lie_in_zone() {
        assert!(Momentum::new(&[PI, -3.0]).is_ok());
        assert!(Momentum::new(&[-PI]).is_err());
        assert!(Momentum::new(&[0.0, 3.2]).is_err());
        let m = Momentum::wrapped(&[-PI, 3.0 * PI, 0.5]).unwrap();
        assert_abs_diff_eq!(m.as_slice()[0], PI);
        assert_abs_diff_eq!(m.as_slice()[1], PI, epsilon = 1e-12);
    }

    #[test]
    fn phase_examples() {
        let l = classify_phase(&p(1.0, 1.0, 2));
        assert_eq!((l.phase, l.codimension, l.dos_positive), (Phase::II, 2, false));
        let l = classify_phase(&p(0.0, 0.7, 2));
        assert_eq!((l.phase, l.codimension, l.dos_positive), (Phase::I, 1, true));
        let l = classify_phase(&p(4.0, 0.3, 3));
        assert_eq!((l.phase, l.codimension, l.dos_positive), (Phase::III, 3, false));
    }

    #[test]
    fn phase_boundaries() {
        assert_eq!(classify_phase(&p(0.0, 0.0, 2)).phase, Phase::I);
        let edge = classify_phase(&p(2.0, 0.0, 2));
        assert_eq!((edge.phase, edge.codimension), (Phase::I, 2));
        assert_eq!(classify_phase(&p(0.0, 0.5, 3)).phase, Phase::II);
        assert_eq!(classify_phase(&p(3.0, 0.5, 3)).phase, Phase::II);
        assert_eq!(classify_phase(&p(3.0001, 0.0, 3)).phase, Phase::III);
        // chain: pairing gaps everything except λ = 1
        assert_eq!(classify_phase(&p(0.5, 0.0, 1)).phase, Phase::I);
        assert_eq!(classify_phase(&p(0.5, 0.5, 1)).phase, Phase::III);
        assert_eq!(classify_phase(&p(1.0, 0.5, 1)).phase, Phase::I);
    }

    #[test]
    fn phase_label_display() {
        assert_eq!(classify_phase(&p(1.0, 1.0, 2)).to_string(), "Phase II, codim 2, g(0)=0");
    }

    #[test]
    fn gapped_phase_gap_formula() {
        for (lambda, dim) in [(3.0, 2), (4.0, 3), (2.5, 2), (1.7, 1)] {
            let gap = spectral_gap(&p(lambda, 0.0, dim), 64).unwrap();
            assert_abs_diff_eq!(gap, 2.0 * (lambda - dim as f64), epsilon = 1e-12);
        }
    }

    #[test]
    fn dos_normalized_and_nonnegative() {
        let h = dos_estimate(&p(0.5, 0.0, 2), 256, 64).unwrap();
        assert!(h.densities.iter().all(|&x| x >= 0.0));
        assert_abs_diff_eq!(h.integral(), 1.0, epsilon = 1e-10);
        assert_eq!(h.bin_edges.len(), 65);
    }

    #[test]
    fn dos_metal_stays_finite() {
        let trend = dos_trend(&p(0.5, 0.0, 2), 512, 32).unwrap();
        assert!(!trend.vanishes(), "{trend:?}");
        assert!(trend.lowest_densities[2] > 0.05);
    }

    #[test]
    fn dos_nodal_superconductor_vanishes_linearly() {
        let trend = dos_trend(&p(1.0, 1.0, 2), 512, 32).unwrap();
        assert!(trend.vanishes(), "{trend:?}");
        let [a, b, c] = trend.lowest_densities;
        // linear g(ε): each halving of the width roughly halves the lowest bin
        assert!((b / a - 0.5).abs() < 0.15 && (c / b - 0.5).abs() < 0.15, "{trend:?}");
    }

    #[test]
    fn dos_gapped_phase_empty_below_gap() {
        let h = dos_estimate(&p(3.0, 0.0, 2), 512, 64).unwrap();
        let grid_min = spectral_gap(&p(3.0, 0.0, 2), 512).unwrap();
        assert_abs_diff_eq!(grid_min, 2.0, epsilon = 1e-12);
        for (i, &rho) in h.densities.iter().enumerate() {
            if h.bin_edges[i + 1] < 2.0 {
                assert_eq!(rho, 0.0);
            }
        }
        assert!(dos_trend(&p(3.0, 0.0, 2), 512, 32).unwrap().vanishes());
    }

    #[test]
    fn dos_reports_under_resolution() {
        assert!(matches!(dos_estimate(&p(0.5, 0.0, 1), 64, 32), Err(Error::UnderResolved(_))));
        assert!(matches!(dos_estimate(&p(0.5, 0.0, 2), 32, 32), Err(Error::UnderResolved(_))));
        assert!(matches!(dos_estimate(&p(0.5, 0.0, 2), 128, 8), Err(Error::UnderResolved(_))));
    }
}
