//! Fermi-surface extraction and the Widom surface-integral prefactor for a
//! unit hypercubic block.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::KGrid;
use crate::model::{classify_phase, wrap_to_zone, ModelParams, Phase};
use crate::scalar::{from_usize, lit, Real};

/// Smallest grid accepted by [`extract_fermi_surface`].
pub const MIN_SURFACE_GRID: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfaceElement<T> {
    pub centroid: [T; 3],
    /// Length (d = 2), area (d = 3) or 1 for a Fermi point (d = 1).
    pub measure: T,
    pub normal: [T; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FermiSurface<T> {
    pub dim: usize,
    pub elements: Vec<SurfaceElement<T>>,
}

impl<T: Real> FermiSurface<T> {
    pub fn total_measure(&self) -> T {
        self.elements.iter().fold(T::zero(), |acc, e| acc + e.measure)
    }

    /// Largest deviation of a normal from unit length.
    pub fn normal_defect(&self) -> T {
        self.elements.iter().fold(T::zero(), |acc, e| {
            let n2 = e.normal[..self.dim].iter().fold(T::zero(), |s, &c| s + c * c);
            acc.max((n2.sqrt() - T::one()).abs())
        })
    }

    /// Copy with every normal reversed.
    pub fn flipped(&self) -> Self {
        let elements = self
            .elements
            .iter()
            .map(|e| SurfaceElement { normal: e.normal.map(|c| -c), ..*e })
            .collect();
        Self { dim: self.dim, elements }
    }

    /// CSV with columns `k1..kd, measure, n1..nd`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let d = self.dim;
        let mut header: Vec<String> = (1..=d).map(|a| format!("k{a}")).collect();
        header.push("measure".into());
        header.extend((1..=d).map(|a| format!("n{a}")));
        writeln!(w, "{}", header.join(","))?;
        for e in &self.elements {
            let mut row: Vec<String> = e.centroid[..d].iter().map(|c| format!("{:.11e}", c.to_f64_exact())).collect();
            row.push(format!("{:.11e}", e.measure.to_f64_exact()));
            row.extend(e.normal[..d].iter().map(|c| format!("{:.11e}", c.to_f64_exact())));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WidomResult<T> {
    pub c_value: T,
    pub grid_n: usize,
    /// `|C(grid_n) - C(grid_n / 2)|`.
    pub refinement_delta: T,
}

/// Level set of the band function (γ = 0) or the nodal line at λ = 0 (d = 2).
pub fn extract_fermi_surface<T: Real>(params: &ModelParams<T>, grid_n: usize) -> Result<FermiSurface<T>> {
    if grid_n < MIN_SURFACE_GRID {
        return Err(Error::UnderResolved(format!(
            "surface grid needs at least {MIN_SURFACE_GRID} points per axis (got {grid_n})"
        )));
    }
    extract_unchecked(params, grid_n)
}

fn extract_unchecked<T: Real>(params: &ModelParams<T>, grid_n: usize) -> Result<FermiSurface<T>> {
    let label = classify_phase(params);
    let d = params.dim();
    if label.phase != Phase::I {
        return Err(Error::NoFermiSurface(format!("phase {} has no finite Fermi surface", label.phase)));
    }
    if label.codimension != 1 {
        return Err(Error::NoFermiSurface(format!(
            "at lambda = {d}, gamma = 0 the Fermi surface degenerates to points"
        )));
    }
    let gamma_zero = params.gamma() == T::zero();
    match d {
        1 if gamma_zero => Ok(fermi_points(params)),
        1 => Err(Error::NoFermiSurface("a gapless chain with pairing has no sign-changing band".into())),
        2 if gamma_zero => Ok(marching_squares(params, grid_n)),
        2 => Ok(diagonal_line(grid_n)),
        _ => Ok(marching_tetrahedra(params, grid_n)),
    }
}

fn fermi_points<T: Real>(params: &ModelParams<T>) -> FermiSurface<T> {
    let kf = params.lambda().acos();
    let elements = [-kf, kf]
        .into_iter()
        .map(|k| SurfaceElement {
            centroid: [k, T::zero(), T::zero()],
            measure: T::one(),
            normal: [k.sin().signum(), T::zero(), T::zero()],
        })
        .collect();
    FermiSurface { dim: 1, elements }
}

/// `k_y = k_x + π` on the torus, which also covers `k_y = k_x - π`.
fn diagonal_line<T: Real>(grid_n: usize) -> FermiSurface<T> {
    let pi = T::pi();
    let step = T::two_pi() / from_usize::<T>(grid_n);
    let sqrt2 = lit::<T>(2.0).sqrt();
    let inv = T::one() / sqrt2;
    let elements = (0..grid_n)
        .map(|i| {
            let kx = -pi + (from_usize::<T>(i) + lit(0.5)) * step;
            SurfaceElement {
                centroid: [kx, wrap_to_zone(kx + pi), T::zero()],
                measure: step * sqrt2,
                normal: [inv, -inv, T::zero()],
            }
        })
        .collect();
    FermiSurface { dim: 2, elements }
}

struct Lattice<T> {
    n: usize,
    coords: Vec<T>,
    cosines: Vec<T>,
    step: T,
}

impl<T: Real> Lattice<T> {
    fn new(n: usize) -> Self {
        let grid = KGrid::new(n, false).expect("n >= 2");
        let coords: Vec<T> = (0..n).map(|i| grid.coordinate(i)).collect();
        let cosines = coords.iter().map(|c| c.cos()).collect();
        Self { n, coords, cosines, step: T::two_pi() / from_usize::<T>(n) }
    }

    /// Coordinate of corner `i + off`, continued past the zone edge.
    fn coord(&self, i: usize, off: usize) -> T {
        if i + off < self.n {
            self.coords[i + off]
        } else {
            self.coords[i + off - self.n] + T::two_pi()
        }
    }

    fn cos(&self, i: usize, off: usize) -> T {
        self.cosines[(i + off) % self.n]
    }
}

fn crossing<T: Real, const D: usize>(pa: [T; D], ta: T, pb: [T; D], tb: T) -> [T; D] {
    let s = ta / (ta - tb);
    std::array::from_fn(|a| pa[a] + s * (pb[a] - pa[a]))
}

/// Unit normal oriented along `∇t = (sin k_α)` at the centroid, or `None` for a degenerate element.
fn oriented<T: Real>(raw: [T; 3], centroid: &[T; 3], dim: usize) -> Option<([T; 3], T)> {
    let len = raw.iter().fold(T::zero(), |s, &c| s + c * c).sqrt();
    if len <= T::zero() {
        return None;
    }
    let mut n = raw.map(|c| c / len);
    let dot = (0..dim).fold(T::zero(), |s, a| s + n[a] * centroid[a].sin());
    if dot < T::zero() {
        n = n.map(|c| -c);
    }
    Some((n, len))
}

fn marching_squares<T: Real>(params: &ModelParams<T>, n: usize) -> FermiSurface<T> {
    let lat = Lattice::<T>::new(n);
    let lambda = params.lambda();
    let tiny = lit::<T>(1e-12) * lat.step;
    let rows: Vec<Vec<SurfaceElement<T>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            for j in 0..n {
                let corner = |di: usize, dj: usize| -> ([T; 2], T) {
                    let p = [lat.coord(i, di), lat.coord(j, dj)];
                    (p, lambda - lat.cos(i, di) - lat.cos(j, dj))
                };
                // counter-clockwise: (0,0) (1,0) (1,1) (0,1)
                let c = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)];
                let pos: [bool; 4] = std::array::from_fn(|q| c[q].1 > T::zero());
                let edge_point = |e: usize| {
                    let (a, b) = (c[e], c[(e + 1) % 4]);
                    crossing(a.0, a.1, b.0, b.1)
                };
                let cut: Vec<usize> = (0..4).filter(|&e| pos[e] != pos[(e + 1) % 4]).collect();
                let pairs: Vec<(usize, usize)> = match cut.len() {
                    2 => vec![(cut[0], cut[1])],
                    4 => {
                        let mean = (c[0].1 + c[1].1 + c[2].1 + c[3].1) / lit(4.0);
                        // corner q sits between edges q - 1 and q
                        let isolate_positive = mean <= T::zero();
                        let corners: Vec<usize> = (0..4).filter(|&q| pos[q] == isolate_positive).collect();
                        corners.iter().map(|&q| ((q + 3) % 4, q)).collect()
                    }
                    _ => Vec::new(),
                };
                for (ea, eb) in pairs {
                    let (p0, p1) = (edge_point(ea), edge_point(eb));
                    let mid = [(p0[0] + p1[0]) / lit(2.0), (p0[1] + p1[1]) / lit(2.0), T::zero()];
                    let raw = [-(p1[1] - p0[1]), p1[0] - p0[0], T::zero()];
                    if let Some((normal, len)) = oriented(raw, &mid, 2) {
                        if len > tiny {
                            out.push(SurfaceElement {
                                centroid: [wrap_to_zone(mid[0]), wrap_to_zone(mid[1]), T::zero()],
                                measure: len,
                                normal,
                            });
                        }
                    }
                }
            }
            out
        })
        .collect();
    FermiSurface { dim: 2, elements: rows.into_iter().flatten().collect() }
}

/// Splits each cube into the six tetrahedra sharing its main diagonal.
const TETRAHEDRA: [[usize; 4]; 6] = [
    [0b000, 0b001, 0b011, 0b111],
    [0b000, 0b001, 0b101, 0b111],
    [0b000, 0b010, 0b011, 0b111],
    [0b000, 0b010, 0b110, 0b111],
    [0b000, 0b100, 0b101, 0b111],
    [0b000, 0b100, 0b110, 0b111],
];

fn marching_tetrahedra<T: Real>(params: &ModelParams<T>, n: usize) -> FermiSurface<T> {
    let lat = Lattice::<T>::new(n);
    let lambda = params.lambda();
    let tiny = lit::<T>(1e-12) * lat.step * lat.step;
    let half: T = lit(0.5);
    let third: T = lit(1.0 / 3.0);
    let slabs: Vec<Vec<SurfaceElement<T>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            let mut emit = |a: [T; 3], b: [T; 3], c: [T; 3]| {
                let u: [T; 3] = std::array::from_fn(|q| b[q] - a[q]);
                let v: [T; 3] = std::array::from_fn(|q| c[q] - a[q]);
                let cross = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
                let centroid: [T; 3] = std::array::from_fn(|q| (a[q] + b[q] + c[q]) * third);
                if let Some((normal, len)) = oriented(cross, &centroid, 3) {
                    let area = len * half;
                    if area > tiny {
                        out.push(SurfaceElement { centroid: centroid.map(wrap_to_zone), measure: area, normal });
                    }
                }
            };
            for j in 0..n {
                for l in 0..n {
                    let corners: [([T; 3], T); 8] = std::array::from_fn(|bits| {
                        let (dx, dy, dz) = ((bits >> 2) & 1, (bits >> 1) & 1, bits & 1);
                        let p = [lat.coord(i, dx), lat.coord(j, dy), lat.coord(l, dz)];
                        (p, lambda - lat.cos(i, dx) - lat.cos(j, dy) - lat.cos(l, dz))
                    });
                    let any_pos = corners.iter().any(|c| c.1 > T::zero());
                    let any_neg = corners.iter().any(|c| c.1 <= T::zero());
                    if !(any_pos && any_neg) {
                        continue;
                    }
                    for tet in TETRAHEDRA {
                        let v = tet.map(|b| corners[b]);
                        let (pos, neg): (Vec<usize>, Vec<usize>) = (0..4).partition(|&q| v[q].1 > T::zero());
                        let x = |a: usize, b: usize| crossing(v[a].0, v[a].1, v[b].0, v[b].1);
                        match (pos.len(), neg.len()) {
                            (1, 3) => emit(x(pos[0], neg[0]), x(pos[0], neg[1]), x(pos[0], neg[2])),
                            (3, 1) => emit(x(neg[0], pos[0]), x(neg[0], pos[1]), x(neg[0], pos[2])),
                            (2, 2) => {
                                let (a, b, c, d) = (pos[0], pos[1], neg[0], neg[1]);
                                let (ac, ad, bd, bc) = (x(a, c), x(a, d), x(b, d), x(b, c));
                                emit(ac, ad, bd);
                                emit(ac, bd, bc);
                            }
                            _ => {}
                        }
                    }
                }
            }
            out
        })
        .collect();
    FermiSurface { dim: 3, elements: slabs.into_iter().flatten().collect() }
}

/// `C = (1 / (4 (2π)^{d-1})) Σ_α 2 Σ_elements |n_α| measure` for the unit block.
pub fn widom_from_surface<T: Real>(fs: &FermiSurface<T>) -> T {
    let d = fs.dim;
    let projected = fs.elements.iter().fold(T::zero(), |acc, e| {
        acc + e.measure * e.normal[..d].iter().fold(T::zero(), |s, c| s + c.abs())
    });
    let norm = lit::<T>(4.0) * T::two_pi().powi(d as i32 - 1);
    lit::<T>(2.0) * projected / norm
}

/// Surface quadrature at `grid_n`, with the change from `grid_n / 2`.
pub fn widom_prefactor<T: Real>(params: &ModelParams<T>, grid_n: usize) -> Result<WidomResult<T>> {
    let fine = extract_fermi_surface(params, grid_n)?;
    let c_value = widom_from_surface(&fine);
    drop(fine);
    let coarse = widom_from_surface(&extract_unchecked(params, grid_n / 2)?);
    Ok(WidomResult { c_value, grid_n, refinement_delta: (c_value - coarse).abs() })
}

/// `(2/π) arccos(λ - 1)`, the d = 2, γ = 0 prefactor.
pub fn widom_closed_form_2d<T: Real>(lambda: T) -> Result<T> {
    if !(lambda >= T::zero() && lambda <= lit(2.0)) {
        return Err(Error::InvalidParams(format!("closed form needs 0 <= lambda <= 2 (got {lambda})")));
    }
    Ok(lit::<T>(2.0) / T::pi() * (lambda - T::one()).acos())
}

/// Widom prefactor for γ = 0 from counting Fermi crossings along lattice axes.
///
/// `∫|n_α| dS` equals the integral over the orthogonal coordinates of the
/// number of roots of `t_k` along the α line, which is 2 where
/// `|λ - Σ_{β≠α} cos k_β| < 1`. The remaining integral is evaluated with the
/// innermost coordinate done exactly and `samples` midpoints per outer axis.
pub fn widom_crossing_integral<T: Real>(params: &ModelParams<T>, samples: usize) -> Result<T> {
    if params.gamma() != T::zero() {
        return Err(Error::InvalidParams("crossing integral needs gamma = 0".into()));
    }
    let d = params.dim();
    let lambda = params.lambda();
    // measure of {k ∈ (-π, π] : lo < cos k < hi}
    let band = |lo: T, hi: T| -> T {
        let lo = lo.max(-T::one());
        let hi = hi.min(T::one());
        if hi <= lo {
            T::zero()
        } else {
            lit::<T>(2.0) * (lo.acos() - hi.acos())
        }
    };
    let area = match d {
        1 => {
            if (lambda.abs()) < T::one() {
                T::one()
            } else {
                T::zero()
            }
        }
        2 => band(lambda - T::one(), lambda + T::one()),
        _ => {
            let step = T::two_pi() / from_usize::<T>(samples);
            let sum = (0..samples).fold(T::zero(), |acc, i| {
                let k = -T::pi() + (from_usize::<T>(i) + lit(0.5)) * step;
                let c = lambda - k.cos();
                acc + band(c - T::one(), c + T::one())
            });
            sum * step
        }
    };
    Ok(from_usize::<T>(d) * area / T::two_pi().powi(d as i32 - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn p(l: f64, g: f64, d: usize) -> ModelParams<f64> {
        ModelParams::new(l, g, d).unwrap()
    }

    #[test]
    fn half_filled_square_perimeter() {
        let fs = extract_fermi_surface(&p(0.0, 0.0, 2), 128).unwrap();
        assert_abs_diff_eq!(fs.total_measure(), 4.0 * 2f64.sqrt() * PI, epsilon = 1e-9);
        assert!(fs.normal_defect() < 1e-12);
        assert!(fs.elements.iter().all(|e| e.measure > 0.0));
    }

    #[test]
    fn nodal_line_is_one_closed_curve() {
        let fs = extract_fermi_surface(&p(0.0, 2.0, 2), 64).unwrap();
        assert_abs_diff_eq!(fs.total_measure(), 2.0 * PI * 2f64.sqrt(), epsilon = 1e-12);
        for e in &fs.elements {
            let dk = wrap_to_zone(e.centroid[1] - e.centroid[0] - PI);
            assert!(dk.abs() < 1e-12);
        }
    }

    #[test]
    fn pocket_shrinks_near_band_edge() {
        let fs = extract_fermi_surface(&p(1.9, 0.0, 2), 256).unwrap();
        // small pocket: cos kx + cos ky = 1.9 is nearly the circle |k|² = 0.2
        let circle = 2.0 * PI * 0.2f64.sqrt();
        assert!(fs.total_measure() < 3.0);
        assert!((fs.total_measure() - circle).abs() / circle < 0.02);
    }

    #[test]
    fn rejects_surfaces_that_do_not_exist() {
        assert!(matches!(extract_fermi_surface(&p(1.0, 1.0, 2), 64), Err(Error::NoFermiSurface(_))));
        assert!(matches!(extract_fermi_surface(&p(3.0, 0.0, 2), 64), Err(Error::NoFermiSurface(_))));
        assert!(matches!(extract_fermi_surface(&p(2.0, 0.0, 2), 64), Err(Error::NoFermiSurface(_))));
        assert!(matches!(extract_fermi_surface(&p(0.5, 0.0, 2), 32), Err(Error::UnderResolved(_))));
    }

    #[test]
    fn prefactor_examples() {
        for (l, g, c) in [(1.0, 0.0, 1.0), (0.0, 0.0, 2.0), (0.0, 1.0, 1.0)] {
            let r = widom_prefactor(&p(l, g, 2), 256).unwrap();
            assert_abs_diff_eq!(r.c_value, c, epsilon = 1e-3);
        }
    }

    #[test]
    fn closed_form_values() {
        assert_abs_diff_eq!(widom_closed_form_2d(0.0).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(widom_closed_form_2d(1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(widom_closed_form_2d(2.0).unwrap(), 0.0, epsilon = 1e-15);
        assert!(widom_closed_form_2d(2.1).is_err());
        assert!(widom_closed_form_2d(-0.1).is_err());
    }

    #[test]
    fn quadrature_matches_closed_form() {
        for i in 1..=19 {
            let l = i as f64 / 10.0;
            let q = widom_prefactor(&p(l, 0.0, 2), 512).unwrap().c_value;
            assert_abs_diff_eq!(q, widom_closed_form_2d(l).unwrap(), epsilon = 1e-3);
        }
    }

    #[test]
    fn mirror_symmetry() {
        for l in [0.3, 0.7, 1.2] {
            let a = widom_prefactor(&p(l, 0.0, 2), 1024).unwrap().c_value;
            let b = widom_prefactor(&p(2.0 - l, 0.0, 2), 1024).unwrap().c_value;
            assert_abs_diff_eq!(a, 2.0 - b, epsilon = 1e-6);
            let ca = widom_closed_form_2d(l).unwrap();
            let cb = widom_closed_form_2d(2.0 - l).unwrap();
            assert_abs_diff_eq!(ca, 2.0 - cb, epsilon = 1e-12);
        }
    }

    #[test]
    fn flipping_normals_changes_nothing() {
        let fs = extract_fermi_surface(&p(0.8, 0.0, 2), 128).unwrap();
        assert_eq!(widom_from_surface(&fs), widom_from_surface(&fs.flipped()));
        let fs3 = extract_fermi_surface(&p(1.0, 0.0, 3), 64).unwrap();
        assert_eq!(widom_from_surface(&fs3), widom_from_surface(&fs3.flipped()));
    }

    #[test]
    fn refinement_converges() {
        for l in [0.4, 1.3] {
            let a = widom_prefactor(&p(l, 0.0, 2), 128).unwrap();
            let b = widom_prefactor(&p(l, 0.0, 2), 256).unwrap();
            assert!(b.refinement_delta <= 0.5 * a.refinement_delta + 1e-12, "{a:?} {b:?}");
        }
    }

    #[test]
    fn crossing_integral_reproduces_closed_form() {
        for l in [0.0, 0.5, 1.0, 1.7] {
            let c = widom_crossing_integral(&p(l, 0.0, 2), 0).unwrap();
            assert_abs_diff_eq!(c, widom_closed_form_2d(l).unwrap(), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(widom_crossing_integral(&p(0.5, 0.0, 1), 0).unwrap(), 1.0);
    }

    #[test]
    fn three_dimensional_surface_matches_crossings() {
        for l in [0.5, 1.5, 2.5] {
            let r = widom_prefactor(&p(l, 0.0, 3), 96).unwrap();
            let oracle = widom_crossing_integral(&p(l, 0.0, 3), 20000).unwrap();
            assert!((r.c_value - oracle).abs() < 5e-3, "lambda {l}: {} vs {oracle}", r.c_value);
            let fs = extract_fermi_surface(&p(l, 0.0, 3), 64).unwrap();
            assert!(fs.normal_defect() < 1e-12);
        }
    }

    #[test]
    fn chain_has_two_fermi_points() {
        let fs = extract_fermi_surface(&p(0.5, 0.0, 1), 64).unwrap();
        assert_eq!(fs.elements.len(), 2);
        assert_abs_diff_eq!(widom_from_surface(&fs), 1.0);
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let fs = extract_fermi_surface(&p(0.0, 1.0, 2), 64).unwrap();
        let mut buf = Vec::new();
        fs.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k1,k2,measure,n1,n2\n"));
        assert_eq!(text.lines().count(), 65);
    }

    #[test]
    fn single_precision_surface() {
        let params = ModelParams::<f32>::new(1.0, 0.0, 2).unwrap();
        let r = widom_prefactor(&params, 256).unwrap();
        assert!((r.c_value - 1.0).abs() < 1e-3);
    }
}
