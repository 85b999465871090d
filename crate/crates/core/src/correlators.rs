//! Ground-state two-point functions and block correlation matrices.
//!
//! For each momentum of the grid the Bogoliubov ground state has
//!
//! ```text
//! n_k = <c†_k c_k>      = (1 + 2 t_k / Λ_k) / 2
//! b_k = <c†_k c†_{-k}>  = -i Δ_k / Λ_k
//! ```
//!
//! and the displacement tables `g(r) = <c†_0 c_r>`, `a(r) = <c†_0 c†_r>`
//! are their inverse Fourier transforms on the `N^d` torus. The sign
//! conventions are pinned by the real-space oracle in [`crate::oracle`].

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{unflatten, KGrid};
use crate::model::ModelParams;
use crate::scalar::{from_usize, lit, Real};

/// Quasiparticle energies below this are treated as zero modes.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// Default ratio `N / L` required by [`block_matrices`].
pub const DEFAULT_MARGIN: usize = 8;

/// What to do with momenta (or BdG modes) at zero energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroModePolicy {
    /// Fail with [`Error::DegenerateMode`] / [`Error::ZeroEnergyMode`].
    #[default]
    Reject,
    /// Occupy zero modes with probability 1/2 (zero-temperature limit of
    /// the thermal state), with no anomalous amplitude.
    HalfFill,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableSource {
    Momentum(KGrid),
    RealSpace { antiperiodic: bool },
}

/// Displacement-indexed `g(r)` and `a(r)` for one parameter set.
///
/// Values are stored for `r ∈ [0, N)^d` in row-major order; other
/// displacements follow from `f(r + N e_α) = s f(r)` with
/// `s = boundary_sign`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorTable<T> {
    pub(crate) params: ModelParams<T>,
    pub(crate) n: usize,
    pub(crate) source: TableSource,
    pub(crate) boundary_sign: i8,
    pub(crate) g: Vec<Complex<T>>,
    pub(crate) a: Vec<Complex<T>>,
}

impl<T: Real> CorrelatorTable<T> {
    pub(crate) fn from_parts(
        params: ModelParams<T>,
        n: usize,
        source: TableSource,
        boundary_sign: i8,
        g: Vec<Complex<T>>,
        a: Vec<Complex<T>>,
    ) -> Result<Self> {
        let expected = n.pow(params.dim() as u32);
        if g.len() != expected || a.len() != expected {
            return Err(Error::InvalidGrid(format!(
                "table length mismatch: expected {expected}, got {} / {}",
                g.len(),
                a.len()
            )));
        }
        if boundary_sign != 1 && boundary_sign != -1 {
            return Err(Error::InvalidGrid(format!("boundary sign must be +-1 (got {boundary_sign})")));
        }
        Ok(Self { params, n, source, boundary_sign, g, a })
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    /// Linear size of the torus the table lives on.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn source(&self) -> TableSource {
        self.source
    }

    pub fn boundary_sign(&self) -> i8 {
        self.boundary_sign
    }

    /// Raw `g` values for `r ∈ [0, N)^d`, row-major.
    pub fn g_values(&self) -> &[Complex<T>] {
        &self.g
    }

    /// Raw `a` values for `r ∈ [0, N)^d`, row-major.
    pub fn a_values(&self) -> &[Complex<T>] {
        &self.a
    }

    /// `<c†_0 c_r>` for any integer displacement.
    pub fn g(&self, r: &[i64]) -> Complex<T> {
        let (idx, flip) = self.locate(r);
        if flip {
            -self.g[idx]
        } else {
            self.g[idx]
        }
    }

    /// `<c†_0 c†_r>` for any integer displacement.
    pub fn a(&self, r: &[i64]) -> Complex<T> {
        let (idx, flip) = self.locate(r);
        if flip {
            -self.a[idx]
        } else {
            self.a[idx]
        }
    }

    /// Negates the anomalous table. Used as a negative control for the
    /// oracle comparison.
    pub fn flip_anomalous_sign(&mut self) {
        for x in &mut self.a {
            *x = -*x;
        }
    }

    fn locate(&self, r: &[i64]) -> (usize, bool) {
        debug_assert_eq!(r.len(), self.dim());
        let n = self.n as i64;
        let mut idx = 0usize;
        let mut flip = false;
        for &ra in r {
            let wraps = ra.div_euclid(n);
            let m = ra.rem_euclid(n);
            if self.boundary_sign < 0 && wraps % 2 != 0 {
                flip = !flip;
            }
            idx = idx * self.n + m as usize;
        }
        (idx, flip)
    }

    /// Largest violation of `g(r) = conj g(-r)`, `a(r) = -a(-r)` and `Im g(0) = 0`.
    pub fn symmetry_defect(&self) -> T {
        let dim = self.dim();
        let mut worst = self.g[0].im.abs();
        for idx in 0..self.g.len() {
            let r = unflatten(idx, self.n, dim);
            let r: Vec<i64> = r[..dim].iter().map(|&x| x as i64).collect();
            let neg: Vec<i64> = r.iter().map(|&x| -x).collect();
            let dg = (self.g(&r) - self.g(&neg).conj()).norm_sqr().sqrt();
            let da = (self.a(&r) + self.a(&neg)).norm_sqr().sqrt();
            worst = worst.max(dg).max(da);
        }
        worst
    }
}

/// Builds the correlator table from the momentum-space ground state,
/// rejecting grids that sample a zero mode.
pub fn build_correlator_table<T: Real>(params: &ModelParams<T>, grid: &KGrid) -> Result<CorrelatorTable<T>> {
    build_correlator_table_with(params, grid, ZeroModePolicy::Reject)
}

pub fn build_correlator_table_with<T: Real>(
    params: &ModelParams<T>,
    grid: &KGrid,
    policy: ZeroModePolicy,
) -> Result<CorrelatorTable<T>> {
    let dim = params.dim();
    let n = grid.n();
    let total = grid.point_count(dim)?;
    let coords: Vec<T> = (0..n).map(|i| grid.coordinate(i)).collect();
    let threshold: T = lit(DEGENERACY_THRESHOLD);
    let half: T = lit(0.5);

    // Per-momentum occupations and anomalous amplitudes, one row of the
    // leading axis per task.
    let row = total / n;
    let rows: Vec<Result<Vec<(Complex<T>, Complex<T>)>>> = (0..n)
        .into_par_iter()
        .map(|i0| {
            let mut out = Vec::with_capacity(row);
            let mut k = [T::zero(); 3];
            for rest in 0..row {
                let idx = i0 * row + rest;
                let axes = unflatten(idx, n, dim);
                for axis in 0..dim {
                    k[axis] = coords[axes[axis]];
                }
                let k = &k[..dim];
                let t = params.band(k);
                let delta = params.pairing(k);
                let energy = lit::<T>(2.0) * (t * t + delta * delta).sqrt();
                if energy < threshold {
                    match policy {
                        ZeroModePolicy::Reject => {
                            return Err(Error::DegenerateMode {
                                k: k.iter().map(|x| x.to_f64_exact()).collect(),
                                energy: energy.to_f64_exact(),
                                threshold: DEGENERACY_THRESHOLD,
                            })
                        }
                        ZeroModePolicy::HalfFill => {
                            out.push((Complex::new(half, T::zero()), Complex::new(T::zero(), T::zero())));
                            continue;
                        }
                    }
                }
                let occ = half * (T::one() + lit::<T>(2.0) * t / energy);
                let anomalous = Complex::new(T::zero(), -delta / energy);
                out.push((Complex::new(occ, T::zero()), anomalous));
            }
            Ok(out)
        })
        .collect();

    let mut g = Vec::with_capacity(total);
    let mut a = Vec::with_capacity(total);
    for r in rows {
        for (occ, anom) in r? {
            g.push(occ);
            a.push(anom);
        }
    }

    inverse_dft(&mut g, n, dim);
    inverse_dft(&mut a, n, dim);

    // Restore the grid offset: e^{ik·r} = e^{2πi n·r/N} e^{iθ Σ r_α}.
    let theta: T = grid.phase_offset();
    let phases: Vec<Complex<T>> = (0..n)
        .map(|r| {
            let arg = theta * from_usize::<T>(r);
            Complex::new(arg.cos(), arg.sin())
        })
        .collect();
    let norm = T::one() / from_usize::<T>(total);
    for (idx, (gv, av)) in g.iter_mut().zip(a.iter_mut()).enumerate() {
        let axes = unflatten(idx, n, dim);
        let mut ph = Complex::new(norm, T::zero());
        for &x in &axes[..dim] {
            ph *= phases[x];
        }
        *gv *= ph;
        *av *= ph;
    }

    CorrelatorTable::from_parts(*params, n, TableSource::Momentum(*grid), grid.boundary_sign(), g, a)
}

/// Unnormalized `x_r = Σ_n e^{+2πi n·r/N} x_n` over every axis, in place.
fn inverse_dft<T: Real>(data: &mut [Complex<T>], n: usize, dim: usize) {
    let mut planner = FftPlanner::<T>::new();
    let fft = planner.plan_fft_inverse(n);
    let total = data.len();
    let mut line = vec![Complex::new(T::zero(), T::zero()); n];
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        if stride == 1 {
            for chunk in data.chunks_exact_mut(n) {
                fft.process(chunk);
            }
            continue;
        }
        let block = stride * n;
        for base in (0..total).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (i, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + i * stride];
                }
                fft.process(&mut line);
                for (i, &v) in line.iter().enumerate() {
                    data[start + i * stride] = v;
                }
            }
        }
    }
}

/// `C` and `F` restricted to an `L^d` hypercubic block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCorrelations<T: Real> {
    pub block_l: usize,
    pub dim: usize,
    /// `C_ij = <c†_i c_j>`, Hermitian.
    pub c_matrix: DMatrix<Complex<T>>,
    /// `F_ij = <c†_i c†_j>`, antisymmetric.
    pub f_matrix: DMatrix<Complex<T>>,
}

impl<T: Real> BlockCorrelations<T> {
    pub fn sites(&self) -> usize {
        self.c_matrix.nrows()
    }

    /// Largest deviation from Hermiticity of `C` and antisymmetry of `F`.
    pub fn structure_defect(&self) -> T {
        let n = self.sites();
        let mut worst = T::zero();
        for i in 0..n {
            for j in 0..n {
                let dc = (self.c_matrix[(i, j)] - self.c_matrix[(j, i)].conj()).norm_sqr().sqrt();
                let df = (self.f_matrix[(i, j)] + self.f_matrix[(j, i)]).norm_sqr().sqrt();
                worst = worst.max(dc).max(df);
            }
        }
        worst
    }

    /// Whether both matrices are real to within `tol`.
    pub fn is_real(&self, tol: T) -> bool {
        self.c_matrix.iter().chain(self.f_matrix.iter()).all(|z| z.im.abs() <= tol)
    }
}

/// Integer coordinates of the sites of an `L^d` block, row-major.
pub fn block_sites(block_l: usize, dim: usize) -> Vec<[i64; 3]> {
    let count = block_l.pow(dim as u32);
    (0..count)
        .map(|idx| {
            let axes = unflatten(idx, block_l, dim);
            [axes[0] as i64, axes[1] as i64, axes[2] as i64]
        })
        .collect()
}

/// Block matrices with the default margin `N >= 8 L`.
pub fn block_matrices<T: Real>(table: &CorrelatorTable<T>, block_l: usize) -> Result<BlockCorrelations<T>> {
    block_matrices_with_margin(table, block_l, DEFAULT_MARGIN)
}

/// `C_ij = g(r_j - r_i)` and `F_ij = a(r_j - r_i)` over the block sites.
pub fn block_matrices_with_margin<T: Real>(
    table: &CorrelatorTable<T>,
    block_l: usize,
    margin: usize,
) -> Result<BlockCorrelations<T>> {
    let margin = margin.max(1);
    if block_l == 0 || table.n < margin * block_l {
        return Err(Error::MarginViolation { block_l, margin, n: table.n });
    }
    let dim = table.dim();
    let sites = block_sites(block_l, dim);
    let m = sites.len();
    let mut c = DMatrix::from_element(m, m, Complex::new(T::zero(), T::zero()));
    let mut f = c.clone();
    let mut r = [0i64; 3];
    for (i, si) in sites.iter().enumerate() {
        for (j, sj) in sites.iter().enumerate() {
            for axis in 0..dim {
                r[axis] = sj[axis] - si[axis];
            }
            c[(i, j)] = table.g(&r[..dim]);
            f[(i, j)] = table.a(&r[..dim]);
        }
    }
    Ok(BlockCorrelations { block_l, dim, c_matrix: c, f_matrix: f })
}
