//! Entanglement spectrum and block entropy from correlation matrices.
//!
//! The single-particle entanglement energies `ε_l` of an `L^d` block are
//! fixed by the eigenvalues `ν_l = ¼ tanh²(ε_l / 2)` of
//! `M = (C - F - I/2)(C + F - I/2)`. Each mode contributes the binary
//! entropy of its occupation `p_l = 1/(e^{ε_l} + 1) = ½ - sqrt(ν_l)`.

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;
use serde::Serialize;

use crate::correlators::{block_matrices_with_margin, build_correlator_table_with, BlockCorrelations, CorrelatorTable};
use crate::correlators::{ZeroModePolicy, DEFAULT_MARGIN};
use crate::dense::{complex_eigenvalues, symmetric_eigenvalues};
use crate::error::{Error, Result};
use crate::grid::KGrid;
use crate::model::ModelParams;
use crate::scalar::{lit, Real};

/// Tolerance on `Im ν` and on `ν` leaving `[0, 1/4]`. Single precision
/// cannot reach it, so the effective value is at least `1000 ε`.
pub const SPECTRUM_TOLERANCE: f64 = 1e-9;

/// Distance from the ends of `[0, 1/4]` inside which a mode is treated as
/// exactly pure (`ν → 1/4`) or exactly maximally mixed (`ν → 0`).
pub const EXTREMAL_CUTOFF: f64 = 1e-14;

/// Matrices are considered real when every imaginary part is below this (at least `100 ε`).
const REALNESS_TOLERANCE: f64 = 1e-12;

fn tolerance<T: Real>(base: f64, ulps: f64) -> T {
    lit::<T>(base).max(T::default_epsilon() * lit(ulps))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum SpectrumMethod {
    /// Symmetric eigensolver whenever `C` and `F` are real: for real
    /// symmetric `C` and antisymmetric `F`, `M = Xᵀ X` with `X = C + F - I/2`.
    /// Falls back to [`SpectrumMethod::General`] for complex input.
    #[default]
    Auto,
    /// Non-Hermitian eigenvalues of the product matrix as written.
    General,
}

/// Per-mode entanglement spectrum of a block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSpectrum<T> {
    pub block_l: usize,
    /// Eigenvalues of the product matrix, clamped to `[0, 1/4]`.
    pub nu: Vec<T>,
    /// Entanglement energies; `+∞` marks a pure mode.
    pub epsilon: Vec<T>,
    /// Occupations in `[0, 1/2]`.
    pub p: Vec<T>,
    /// Largest `|Im ν|` seen before clamping.
    pub max_imag: T,
    /// Smallest and largest `Re ν` seen before clamping.
    pub raw_range: (T, T),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockEntropy<T> {
    pub block_l: usize,
    pub entropy_bits: T,
    pub entropy_nats: T,
}

pub fn mode_spectrum<T: Real>(bc: &BlockCorrelations<T>) -> Result<ModeSpectrum<T>> {
    mode_spectrum_with(bc, SpectrumMethod::Auto)
}

pub fn mode_spectrum_with<T: Real>(bc: &BlockCorrelations<T>, method: SpectrumMethod) -> Result<ModeSpectrum<T>> {
    let tol: T = tolerance(SPECTRUM_TOLERANCE, 1e3);
    let n = bc.sites();
    let real = bc.is_real(tolerance(REALNESS_TOLERANCE, 1e2));

    let raw: Vec<Complex<T>> = match method {
        SpectrumMethod::Auto if real => real_spectrum(bc),
        _ => general_spectrum(bc)?,
    };
    debug_assert_eq!(raw.len(), n);

    let quarter: T = lit(0.25);
    let mut max_imag = T::zero();
    let mut raw_range = (T::infinity(), -T::infinity());
    for z in &raw {
        max_imag = max_imag.max(z.im.abs());
        raw_range = (raw_range.0.min(z.re), raw_range.1.max(z.re));
        if z.im.abs() > tol {
            return Err(Error::InvalidSpectrum(format!("eigenvalue {z} has imaginary part beyond {tol}")));
        }
        if z.re < -tol || z.re > quarter + tol {
            return Err(Error::InvalidSpectrum(format!("eigenvalue {} outside [0, 1/4]", z.re)));
        }
    }

    let mut nu: Vec<T> = raw.iter().map(|z| z.re.max(T::zero()).min(quarter)).collect();
    nu.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    let cutoff: T = lit(EXTREMAL_CUTOFF);
    let half: T = lit(0.5);
    let mut epsilon = Vec::with_capacity(n);
    let mut p = Vec::with_capacity(n);
    for &v in &nu {
        if v > quarter - cutoff {
            epsilon.push(T::infinity());
            p.push(T::zero());
        } else if v < cutoff {
            epsilon.push(T::zero());
            p.push(half);
        } else {
            let s = v.sqrt();
            // ε = 2 artanh(2 sqrt ν)
            let two_s = lit::<T>(2.0) * s;
            epsilon.push(((T::one() + two_s) / (T::one() - two_s)).ln());
            p.push(half - s);
        }
    }
    Ok(ModeSpectrum { block_l: bc.block_l, nu, epsilon, p, max_imag, raw_range })
}

fn real_spectrum<T: Real>(bc: &BlockCorrelations<T>) -> Vec<Complex<T>> {
    let n = bc.sites();
    let half: T = lit(0.5);
    let f_zero = bc.f_matrix.iter().all(|z| z.re == T::zero() && z.im == T::zero());
    if f_zero {
        // ν = (c - 1/2)² for the eigenvalues c of C
        let c = DMatrix::from_fn(n, n, |i, j| (bc.c_matrix[(i, j)].re + bc.c_matrix[(j, i)].re) * half);
        return symmetric_eigenvalues(&c)
            .iter()
            .map(|&ev| {
                let a = ev - half;
                Complex::new(a * a, T::zero())
            })
            .collect();
    }
    let x = DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { half } else { T::zero() };
        bc.c_matrix[(i, j)].re + bc.f_matrix[(i, j)].re - diag
    });
    let gram = x.tr_mul(&x);
    let sym = DMatrix::from_fn(n, n, |i, j| (gram[(i, j)] + gram[(j, i)]) * half);
    symmetric_eigenvalues(&sym).iter().map(|&v| Complex::new(v, T::zero())).collect()
}

fn general_spectrum<T: Real>(bc: &BlockCorrelations<T>) -> Result<Vec<Complex<T>>> {
    let n = bc.sites();
    let half = Complex::new(lit::<T>(0.5), T::zero());
    let eye = DMatrix::<Complex<T>>::identity(n, n) * half;
    let left = &bc.c_matrix - &bc.f_matrix - &eye;
    let right = &bc.c_matrix + &bc.f_matrix - &eye;
    let product = left * right;
    complex_eigenvalues(&product).ok_or_else(|| Error::InvalidSpectrum("eigenvalue iteration did not converge".into()))
}

/// Binary entropy in bits, `h(0) = h(1) = 0`.
pub fn binary_entropy_bits<T: Real>(p: T) -> T {
    if p <= T::zero() || p >= T::one() {
        return T::zero();
    }
    let ln2 = T::ln_2();
    -(p * p.ln() + (T::one() - p) * (-p).ln_1p()) / ln2
}

/// One mode's entropy in nats written through its entanglement energy,
/// `ln(1 + e^{-ε}) + ε / (e^ε + 1)`, evaluated without overflow.
pub fn mode_entropy_from_epsilon_nats<T: Real>(epsilon: T) -> T {
    if !epsilon.is_finite() {
        return T::zero();
    }
    let decay = (-epsilon).exp();
    decay.ln_1p() + epsilon * decay / (T::one() + decay)
}

pub fn block_entropy<T: Real>(spec: &ModeSpectrum<T>) -> BlockEntropy<T> {
    let bits = spec.p.iter().fold(T::zero(), |acc, &p| acc + binary_entropy_bits(p));
    BlockEntropy { block_l: spec.block_l, entropy_bits: bits, entropy_nats: bits * T::ln_2() }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    pub margin: usize,
    pub method: SpectrumMethod,
    pub zero_modes: ZeroModePolicy,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self { margin: DEFAULT_MARGIN, method: SpectrumMethod::Auto, zero_modes: ZeroModePolicy::Reject }
    }
}

#[derive(Debug)]
pub struct SeriesPoint<T> {
    pub block_l: usize,
    pub result: Result<BlockEntropy<T>>,
}

/// Block entropies for several `L` sharing one correlator table.
#[derive(Debug)]
pub struct EntropySeries<T> {
    pub points: Vec<SeriesPoint<T>>,
}

impl<T: Real> EntropySeries<T> {
    /// `(L, S_L bits)` for every block that succeeded.
    pub fn successes(&self) -> Vec<(usize, T)> {
        self.points
            .iter()
            .filter_map(|pt| pt.result.as_ref().ok().map(|e| (pt.block_l, e.entropy_bits)))
            .collect()
    }

    /// Block sizes where the entropy decreased relative to the previous success.
    pub fn monotonicity_violations(&self) -> Vec<usize> {
        self.successes().windows(2).filter(|w| w[1].1 < w[0].1).map(|w| w[1].0).collect()
    }
}

pub fn entropy_series<T: Real>(
    params: &ModelParams<T>,
    l_values: &[usize],
    grid: &KGrid,
    opts: &SeriesOptions,
) -> Result<EntropySeries<T>> {
    if l_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("block sizes must be strictly ascending".into()));
    }
    if let Some(&l_max) = l_values.last() {
        if grid.n() < opts.margin.max(1) * l_max {
            return Err(Error::MarginViolation { block_l: l_max, margin: opts.margin, n: grid.n() });
        }
    }
    let table = build_correlator_table_with(params, grid, opts.zero_modes)?;
    Ok(entropy_series_from_table(&table, l_values, opts))
}

/// Entropies for each `L`, evaluated in parallel; failures are kept per point.
pub fn entropy_series_from_table<T: Real>(
    table: &CorrelatorTable<T>,
    l_values: &[usize],
    opts: &SeriesOptions,
) -> EntropySeries<T> {
    let points: Vec<SeriesPoint<T>> = l_values
        .par_iter()
        .map(|&l| {
            let result = block_matrices_with_margin(table, l, opts.margin)
                .and_then(|bc| mode_spectrum_with(&bc, opts.method))
                .map(|spec| block_entropy(&spec));
            SeriesPoint { block_l: l, result }
        })
        .collect();
    let series = EntropySeries { points };
    let violations = series.monotonicity_violations();
    if !violations.is_empty() {
        log::warn!("block entropy decreased at L = {violations:?}");
    }
    series
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlators::{block_matrices, build_correlator_table};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p(l: f64, g: f64, d: usize) -> ModelParams<f64> {
        ModelParams::new(l, g, d).unwrap()
    }

    fn diag_block(values: &[f64]) -> BlockCorrelations<f64> {
        let n = values.len();
        let c = DMatrix::from_fn(n, n, |i, j| Complex::new(if i == j { values[i] } else { 0.0 }, 0.0));
        let f = DMatrix::from_element(n, n, Complex::new(0.0, 0.0));
        BlockCorrelations { block_l: 1, dim: 1, c_matrix: c, f_matrix: f }
    }

    #[test]
    fn half_filled_site_is_maximally_mixed() {
        let spec = mode_spectrum(&diag_block(&[0.5])).unwrap();
        assert_eq!(spec.nu, vec![0.0]);
        assert_eq!(spec.epsilon, vec![0.0]);
        assert_eq!(spec.p, vec![0.5]);
        assert_abs_diff_eq!(block_entropy(&spec).entropy_bits, 1.0);
    }

    #[test]
    fn filled_site_is_pure() {
        let spec = mode_spectrum(&diag_block(&[1.0])).unwrap();
        assert_eq!(spec.nu, vec![0.25]);
        assert!(spec.epsilon[0].is_infinite());
        assert_eq!(spec.p, vec![0.0]);
        assert_eq!(block_entropy(&spec).entropy_bits, 0.0);
    }

    #[test]
    fn four_maximally_mixed_modes() {
        let spec = mode_spectrum(&diag_block(&[0.5; 4])).unwrap();
        let s = block_entropy(&spec);
        assert_abs_diff_eq!(s.entropy_bits, 4.0);
        assert_eq!(s.entropy_nats, s.entropy_bits * std::f64::consts::LN_2);
    }

    #[test]
    fn out_of_range_spectrum_is_rejected() {
        let err = mode_spectrum(&diag_block(&[1.5])).unwrap_err();
        assert!(matches!(err, Error::InvalidSpectrum(_)), "{err}");
    }

    #[test]
    fn general_and_symmetric_paths_agree() {
        for (l, g) in [(0.5, 0.0), (1.0, 1.0), (0.3, 0.6), (2.5, 0.4)] {
            let table = build_correlator_table(&p(l, g, 2), &KGrid::new(64, true).unwrap()).unwrap();
            let bc = block_matrices(&table, 4).unwrap();
            let fast = mode_spectrum_with(&bc, SpectrumMethod::Auto).unwrap();
            let slow = mode_spectrum_with(&bc, SpectrumMethod::General).unwrap();
            assert!(slow.max_imag < 1e-9);
            for (a, b) in fast.nu.iter().zip(&slow.nu) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
            assert_abs_diff_eq!(block_entropy(&fast).entropy_bits, block_entropy(&slow).entropy_bits, epsilon = 1e-8);
        }
    }

    #[test]
    fn spectrum_consistency_relations() {
        let table = build_correlator_table(&p(0.8, 0.5, 2), &KGrid::new(64, true).unwrap()).unwrap();
        let spec = mode_spectrum(&block_matrices(&table, 5).unwrap()).unwrap();
        assert_eq!(spec.nu.len(), 25);
        for ((&nu, &eps), &pl) in spec.nu.iter().zip(&spec.epsilon).zip(&spec.p) {
            assert!((0.0..=0.25).contains(&nu));
            assert!((0.0..=0.5).contains(&pl));
            assert_abs_diff_eq!(pl, 0.5 - nu.sqrt(), epsilon = 1e-10);
            if eps.is_finite() {
                assert_abs_diff_eq!(nu, 0.25 * (eps / 2.0).tanh().powi(2), epsilon = 1e-10);
                assert_abs_diff_eq!(pl, 1.0 / (eps.exp() + 1.0), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn epsilon_route_matches_occupation_route() {
        let table = build_correlator_table(&p(0.5, 0.0, 2), &KGrid::new(128, true).unwrap()).unwrap();
        let spec = mode_spectrum(&block_matrices(&table, 8).unwrap()).unwrap();
        let via_eps: f64 = spec.epsilon.iter().map(|&e| mode_entropy_from_epsilon_nats(e)).sum::<f64>();
        let direct = block_entropy(&spec).entropy_nats;
        assert_abs_diff_eq!(via_eps, direct, epsilon = 1e-12);
    }

    #[test]
    fn product_state_has_no_entropy() {
        let series = entropy_series(&p(3.0, 0.0, 2), &[1, 2, 5, 8], &KGrid::new(64, true).unwrap(), &SeriesOptions::default())
            .unwrap();
        for (_, s) in series.successes() {
            assert!(s.abs() < 1e-10);
        }
    }

    #[test]
    fn series_keeps_partial_results() {
        let opts = SeriesOptions { margin: 8, ..Default::default() };
        let table = build_correlator_table(&p(0.5, 0.5, 2), &KGrid::new(32, true).unwrap()).unwrap();
        let series = entropy_series_from_table(&table, &[2, 4, 6], &opts);
        assert!(series.points[0].result.is_ok());
        assert!(series.points[1].result.is_ok());
        assert!(matches!(series.points[2].result, Err(Error::MarginViolation { .. })));
        assert_eq!(series.successes().len(), 2);
    }

    #[test]
    fn series_rejects_unsorted_sizes() {
        let grid = KGrid::new(64, true).unwrap();
        assert!(entropy_series(&p(0.5, 0.5, 2), &[4, 2], &grid, &SeriesOptions::default()).is_err());
    }

    #[test]
    fn entropy_series_grows_in_metal() {
        let series =
            entropy_series(&p(0.5, 0.0, 2), &[2, 4, 6, 8], &KGrid::new(64, true).unwrap(), &SeriesOptions::default()).unwrap();
        assert!(series.monotonicity_violations().is_empty());
    }

    proptest! {
        #[test]
        fn binary_entropy_bounded_and_symmetric(p in 0.0f64..=1.0) {
            let h = binary_entropy_bits(p);
            prop_assert!((0.0..=1.0 + 1e-15).contains(&h));
            prop_assert!((h - binary_entropy_bits(1.0 - p)).abs() < 1e-12);
        }

        #[test]
        fn entropy_at_most_one_bit_per_mode(l in 0.0f64..3.0, g in 0.0f64..2.0, block in 1usize..5) {
            let table = build_correlator_table(&p(l, g, 2), &KGrid::new(41, true).unwrap()).unwrap();
            let s = block_entropy(&mode_spectrum(&block_matrices(&table, block).unwrap()).unwrap());
            prop_assert!(s.entropy_bits >= 0.0);
            prop_assert!(s.entropy_bits <= (block * block) as f64 + 1e-12);
        }
    }
}
