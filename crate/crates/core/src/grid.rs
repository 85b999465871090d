//! Uniform momentum grids on the Brillouin-zone torus.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Real};

/// Upper bound on `N^d` accepted by [`KGrid::point_count`].
pub const MAX_GRID_POINTS: usize = 1 << 25;

/// `N` momentum samples per axis at `k_n = 2π(n + s)/N - π`, with `s = 1/2`
/// when shifted and `s = 0` otherwise.
///
/// A shifted grid with even `N` is the momentum set of an antiperiodic
/// lattice; an unshifted grid with even `N` is the periodic one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KGrid {
    n_per_dim: usize,
    shifted: bool,
}

impl KGrid {
    pub fn new(n_per_dim: usize, shifted: bool) -> Result<Self> {
        if n_per_dim < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 samples per axis (got {n_per_dim})")));
        }
        Ok(Self { n_per_dim, shifted })
    }

    /// Default grid for a dimension and largest block: 4096, 512 and 64
    /// points per axis for d = 1, 2, 3, raised to satisfy `N >= 8 L_max`.
    pub fn default_for(dim: usize, l_max: usize) -> Self {
        let base = match dim {
            1 => 4096,
            2 => 512,
            _ => 64,
        };
        let n = base.max(8 * l_max);
        Self { n_per_dim: n + (n % 2), shifted: true }
    }

    pub fn n(&self) -> usize {
        self.n_per_dim
    }

    pub fn is_shifted(&self) -> bool {
        self.shifted
    }

    /// Momentum of sample `i` along one axis.
    #[inline]
    pub fn coordinate<T: Real>(&self, i: usize) -> T {
        let off = if self.shifted { 0.5 } else { 0.0 };
        let frac = (from_usize::<T>(i) + lit(off)) / from_usize::<T>(self.n_per_dim);
        T::two_pi() * frac - T::pi()
    }

    /// `θ` such that `k_n = 2πn/N + θ`.
    pub fn phase_offset<T: Real>(&self) -> T {
        let off = if self.shifted { 0.5 } else { 0.0 };
        T::two_pi() * lit::<T>(off) / from_usize::<T>(self.n_per_dim) - T::pi()
    }

    /// `N^d`, rejected above [`MAX_GRID_POINTS`].
    pub fn point_count(&self, dim: usize) -> Result<usize> {
        let count = (0..dim).try_fold(1usize, |acc, _| acc.checked_mul(self.n_per_dim));
        match count {
            Some(c) if c <= MAX_GRID_POINTS => Ok(c),
            _ => Err(Error::InvalidGrid(format!(
                "{}^{dim} momentum points exceed the budget of {MAX_GRID_POINTS}",
                self.n_per_dim
            ))),
        }
    }

    /// Sign `s` with `f(r + N e_α) = s f(r)` for any lattice Fourier sum over this grid.
    pub fn boundary_sign(&self) -> i8 {
        let even = self.n_per_dim % 2 == 0;
        match (self.shifted, even) {
            (true, true) | (false, false) => -1,
            _ => 1,
        }
    }

    /// Calls `f(flat_index, k)` for every grid point in row-major order.
    pub fn for_each_point<T: Real, F: FnMut(usize, &[T])>(&self, dim: usize, mut f: F) {
        let n = self.n_per_dim;
        let coords: Vec<T> = (0..n).map(|i| self.coordinate(i)).collect();
        let mut k = [T::zero(); 3];
        match dim {
            1 => {
                for (i, &c) in coords.iter().enumerate() {
                    k[0] = c;
                    f(i, &k[..1]);
                }
            }
            2 => {
                for i in 0..n {
                    k[0] = coords[i];
                    for j in 0..n {
                        k[1] = coords[j];
                        f(i * n + j, &k[..2]);
                    }
                }
            }
            3 => {
                for i in 0..n {
                    k[0] = coords[i];
                    for j in 0..n {
                        k[1] = coords[j];
                        for l in 0..n {
                            k[2] = coords[l];
                            f((i * n + j) * n + l, &k[..3]);
                        }
                    }
                }
            }
            _ => unreachable!("dimension validated by ModelParams"),
        }
    }
}

/// Splits a flat row-major index into per-axis indices.
#[inline]
pub(crate) fn unflatten(mut idx: usize, n: usize, dim: usize) -> [usize; 3] {
    let mut out = [0usize; 3];
    for axis in (0..dim).rev() {
        out[axis] = idx % n;
        idx /= n;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn shifted_grid_avoids_zone_center() {
        let g = KGrid::new(8, true).unwrap();
        let ks: Vec<f64> = (0..8).map(|i| g.coordinate(i)).collect();
        assert!(ks.iter().all(|k| k.abs() > 1e-3));
        assert!((ks[0] + PI - PI / 8.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_sign_matches_exponential() {
        for n in [4usize, 5, 10, 11] {
            for shifted in [true, false] {
                let g = KGrid::new(n, shifted).unwrap();
                let k0: f64 = g.coordinate(0);
                let phase = (k0 * n as f64).cos();
                assert!((phase - g.boundary_sign() as f64).abs() < 1e-12, "n={n} shifted={shifted}");
            }
        }
    }

    #[test]
    fn default_grid_respects_margin() {
        assert_eq!(KGrid::default_for(2, 40).n(), 512);
        assert_eq!(KGrid::default_for(3, 12).n(), 96);
        assert_eq!(KGrid::default_for(3, 4).n(), 64);
    }

    #[test]
    fn rejects_tiny_and_huge_grids() {
        assert!(KGrid::new(1, true).is_err());
        assert!(KGrid::new(4096, true).unwrap().point_count(3).is_err());
    }

    #[test]
    fn row_major_enumeration() {
        let g = KGrid::new(3, false).unwrap();
        let mut seen = Vec::new();
        g.for_each_point::<f64, _>(2, |idx, _| seen.push(idx));
        assert_eq!(seen, (0..9).collect::<Vec<_>>());
        assert_eq!(unflatten(5, 3, 2), [1, 2, 0]);
        assert_eq!(unflatten(23, 3, 3), [2, 1, 2]);
    }
}
