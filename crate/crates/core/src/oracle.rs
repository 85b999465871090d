//! Independent reference computations.
//!
//! [`oracle_bdg`] diagonalizes the real-space Bogoliubov–de Gennes matrix of
//! a finite (anti)periodic lattice and reads the correlators off the
//! positive-energy projector. [`gaussian_block_density_matrix`] builds the
//! full `2^n`-dimensional reduced density matrix of a Gaussian state from its
//! two-point functions via Wick's theorem, with no reference to the
//! entanglement-spectrum route.

use nalgebra::{Complex, DMatrix};

use crate::correlators::{block_sites, CorrelatorTable, TableSource, ZeroModePolicy};
use crate::dense::{hermitian_eigenvalues, symmetric_eigen};
use crate::error::{Error, Result};
use crate::grid::unflatten;
use crate::model::ModelParams;
use crate::scalar::{lit, Real};

/// Largest lattice accepted by [`oracle_bdg`].
pub const MAX_ORACLE_SITES: usize = 4096;

/// BdG energies with `|E|` below this count as zero modes.
pub const ZERO_MODE_THRESHOLD: f64 = 1e-10;

pub fn oracle_bdg<T: Real>(params: &ModelParams<T>, lattice_n: usize, antiperiodic: bool) -> Result<CorrelatorTable<T>> {
    oracle_bdg_with(params, lattice_n, antiperiodic, ZeroModePolicy::Reject)
}

/// Real-space BdG ground-state correlators on an `N^d` torus.
///
/// With `H = Σ_ij h_ij c†_i c_j + ½ Σ_ij (Δ_ij c†_i c†_j + h.c.)` the
/// Nambu matrix `[[h, Δ], [-Δ, -h]]` is real symmetric, and
/// `<Ψ Ψ†>` with `Ψ = (c, c†)` is the projector onto its positive
/// eigenspace. Its lower blocks give `C` and `F`.
pub fn oracle_bdg_with<T: Real>(
    params: &ModelParams<T>,
    lattice_n: usize,
    antiperiodic: bool,
    policy: ZeroModePolicy,
) -> Result<CorrelatorTable<T>> {
    let dim = params.dim();
    if lattice_n < 2 {
        return Err(Error::InvalidGrid(format!("lattice needs at least 2 sites per axis (got {lattice_n})")));
    }
    let sites = lattice_n.checked_pow(dim as u32).unwrap_or(usize::MAX);
    if sites > MAX_ORACLE_SITES {
        return Err(Error::LatticeTooLarge { sites, limit: MAX_ORACLE_SITES });
    }

    let m = sites;
    let mut bdg = DMatrix::<T>::zeros(2 * m, 2 * m);
    let mu = lit::<T>(2.0) * params.lambda();
    let gamma = params.gamma();
    let index = |axes: &[usize; 3]| axes[..dim].iter().fold(0usize, |acc, &x| acc * lattice_n + x);

    for i in 0..m {
        bdg[(i, i)] -= mu;
        bdg[(m + i, m + i)] += mu;
        let axes = unflatten(i, lattice_n, dim);
        for axis in 0..dim {
            let mut nb = axes;
            nb[axis] = (axes[axis] + 1) % lattice_n;
            let wraps = axes[axis] + 1 == lattice_n;
            let bc = if wraps && antiperiodic { -T::one() } else { T::one() };
            let j = index(&nb);
            // hopping c†_i c_j + c†_j c_i
            bdg[(i, j)] += bc;
            bdg[(j, i)] += bc;
            bdg[(m + i, m + j)] -= bc;
            bdg[(m + j, m + i)] -= bc;
            // pairing -γ (c†_i c†_j + c_j c_i): Δ_ij = -γ, Δ_ji = +γ
            let pair = gamma * bc;
            bdg[(i, m + j)] -= pair;
            bdg[(j, m + i)] += pair;
            bdg[(m + i, j)] += pair;
            bdg[(m + j, i)] -= pair;
        }
    }

    let (eigenvalues, vecs) = symmetric_eigen(&bdg);
    let threshold: T = lit(ZERO_MODE_THRESHOLD);
    let half: T = lit(0.5);
    let mut weights = Vec::with_capacity(2 * m);
    for &e in eigenvalues.iter() {
        if e.abs() < threshold {
            match policy {
                ZeroModePolicy::Reject => return Err(Error::ZeroEnergyMode { energy: e.abs().to_f64_exact() }),
                ZeroModePolicy::HalfFill => weights.push(half),
            }
        } else if e > T::zero() {
            weights.push(T::one());
        } else {
            weights.push(T::zero());
        }
    }

    // Only rows m (site 0 in the c† block) of the projector are needed.
    let mut g = Vec::with_capacity(m);
    let mut a = Vec::with_capacity(m);
    for r in 0..m {
        let mut c_val = T::zero();
        let mut f_val = T::zero();
        for (n, &w) in weights.iter().enumerate() {
            if w == T::zero() {
                continue;
            }
            let row = vecs[(m, n)] * w;
            c_val += row * vecs[(m + r, n)];
            f_val += row * vecs[(r, n)];
        }
        g.push(Complex::new(c_val, T::zero()));
        a.push(Complex::new(f_val, T::zero()));
    }

    let sign = if antiperiodic { -1 } else { 1 };
    CorrelatorTable::from_parts(*params, lattice_n, TableSource::RealSpace { antiperiodic }, sign, g, a)
}

/// Majorana operators `w_{2j} = c_j + c†_j`, `w_{2j+1} = i (c†_j - c_j)` acting
/// on the Jordan–Wigner occupation basis (bit `j` of the index = mode `j`).
/// Each operator maps a basis state to one basis state times a phase.
#[derive(Clone)]
struct Monomial<T: Real> {
    target: Vec<u32>,
    phase: Vec<Complex<T>>,
}

impl<T: Real> Monomial<T> {
    fn identity(dim: usize) -> Self {
        Self { target: (0..dim as u32).collect(), phase: vec![Complex::new(T::one(), T::zero()); dim] }
    }

    fn majorana(a: usize, modes: usize) -> Self {
        let dim = 1usize << modes;
        let j = a / 2;
        let bit = 1u32 << j;
        let mut target = Vec::with_capacity(dim);
        let mut phase = Vec::with_capacity(dim);
        for s in 0..dim as u32 {
            let parity = (s & (bit - 1)).count_ones() % 2;
            let sign = if parity == 1 { -T::one() } else { T::one() };
            let occupied = s & bit != 0;
            target.push(s ^ bit);
            let ph = if a % 2 == 0 {
                Complex::new(sign, T::zero())
            } else if occupied {
                // i (c† - c)|..1..> = -i c|..1..>
                Complex::new(T::zero(), -sign)
            } else {
                Complex::new(T::zero(), sign)
            };
            phase.push(ph);
        }
        Self { target, phase }
    }

    /// `self * rhs` (apply `rhs` first).
    fn then_left(&self, rhs: &Self) -> Self {
        let target = rhs.target.iter().map(|&t| self.target[t as usize]).collect();
        let phase = rhs.phase.iter().zip(&rhs.target).map(|(&p, &t)| p * self.phase[t as usize]).collect();
        Self { target, phase }
    }
}

/// Two-point Majorana matrix `K_ab = <w_a w_b>` of a block.
fn majorana_two_point<T: Real>(c: &DMatrix<Complex<T>>, f: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    let n = c.nrows();
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    let i_unit = Complex::new(T::zero(), T::one());
    // w_a = Σ_j alpha[a][j] c_j + beta[a][j] c†_j
    let mut alpha = DMatrix::from_element(2 * n, n, zero);
    let mut beta = DMatrix::from_element(2 * n, n, zero);
    for j in 0..n {
        alpha[(2 * j, j)] = one;
        beta[(2 * j, j)] = one;
        alpha[(2 * j + 1, j)] = -i_unit;
        beta[(2 * j + 1, j)] = i_unit;
    }
    // <c_j c_k> = conj F_kj,  <c_j c†_k> = δ_jk - C_kj,  <c†_j c_k> = C_jk,  <c†_j c†_k> = F_jk
    let cc = DMatrix::from_fn(n, n, |j, k| f[(k, j)].conj());
    let ccd = DMatrix::from_fn(n, n, |j, k| if j == k { one - c[(k, j)] } else { -c[(k, j)] });
    alpha.clone() * cc * alpha.transpose()
        + alpha.clone() * ccd * beta.transpose()
        + beta.clone() * c * alpha.transpose()
        + beta.clone() * f * beta.transpose()
}

/// Pfaffian of a complex antisymmetric matrix by Parlett–Reid elimination
/// with partial pivoting.
pub fn pfaffian<T: Real>(mut a: DMatrix<Complex<T>>) -> Complex<T> {
    let n = a.nrows();
    if n % 2 == 1 {
        return Complex::new(T::zero(), T::zero());
    }
    let mut result = Complex::new(T::one(), T::zero());
    let mut k = 0;
    while k + 1 < n {
        // pivot: largest entry in column k below row k
        let mut piv = k + 1;
        let mut best = a[(k + 1, k)].norm_sqr().sqrt();
        for r in k + 2..n {
            let v = a[(r, k)].norm_sqr().sqrt();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if piv != k + 1 {
            a.swap_rows(k + 1, piv);
            a.swap_columns(k + 1, piv);
            result = -result;
        }
        let pivot = a[(k + 1, k)];
        if pivot.norm_sqr().sqrt() == T::zero() {
            return Complex::new(T::zero(), T::zero());
        }
        // Pf = a_{k,k+1} * Pf(reduced)
        result *= a[(k, k + 1)];
        if k + 2 < n {
            let tau: Vec<Complex<T>> = (k + 2..n).map(|r| a[(r, k)] / pivot).collect();
            // congruence that clears row k beyond k+1
            for (ii, &ti) in tau.iter().enumerate() {
                let i = k + 2 + ii;
                for (jj, &tj) in tau.iter().enumerate() {
                    let j = k + 2 + jj;
                    let upd = ti * a[(k + 1, j)] + a[(i, k + 1)] * tj;
                    a[(i, j)] -= upd;
                }
            }
        }
        k += 2;
    }
    result
}

/// Reduced density matrix of a Gaussian state on `n = C.nrows()` modes
/// (`n ≤ 10`), expanded in the Majorana monomial basis:
/// `ρ = 2^{-n} Σ_S <w_S†> w_S`, with `<w_S>` given by Wick's theorem as a
/// Pfaffian of two-point functions.
pub fn gaussian_block_density_matrix<T: Real>(
    c: &DMatrix<Complex<T>>,
    f: &DMatrix<Complex<T>>,
) -> Result<DMatrix<Complex<T>>> {
    let modes = c.nrows();
    if modes == 0 || modes > 10 {
        return Err(Error::InvalidParams(format!("brute-force density matrix supports 1..=10 modes (got {modes})")));
    }
    let dim = 1usize << modes;
    let k = majorana_two_point(c, f);
    let majoranas: Vec<Monomial<T>> = (0..2 * modes).map(|a| Monomial::majorana(a, modes)).collect();
    let mut rho = DMatrix::from_element(dim, dim, Complex::new(T::zero(), T::zero()));
    let norm = T::one() / T::from_usize(dim).expect("dimension fits");

    // Depth-first over increasing index sets; `op` is the product w_{a1}...w_{am}.
    let mut stack: Vec<(Vec<usize>, Monomial<T>)> = vec![(Vec::new(), Monomial::identity(dim))];
    while let Some((set, op)) = stack.pop() {
        if set.len() % 2 == 0 {
            let expectation = if set.is_empty() {
                Complex::new(T::one(), T::zero())
            } else {
                let sub = DMatrix::from_fn(set.len(), set.len(), |p, q| {
                    if p < q {
                        k[(set[p], set[q])]
                    } else if p > q {
                        -k[(set[q], set[p])]
                    } else {
                        Complex::new(T::zero(), T::zero())
                    }
                });
                pfaffian(sub)
            };
            // <w_S†> = (-1)^{|S|/2} <w_S>
            let coeff = if (set.len() / 2) % 2 == 1 { -expectation } else { expectation } * norm;
            if coeff.norm_sqr().sqrt() > T::zero() {
                for s in 0..dim {
                    let t = op.target[s] as usize;
                    rho[(t, s)] += coeff * op.phase[s];
                }
            }
        }
        let start = set.last().map_or(0, |&x| x + 1);
        for a in start..2 * modes {
            let mut next = set.clone();
            next.push(a);
            stack.push((next, op.then_left(&majoranas[a])));
        }
    }
    Ok(rho)
}

/// Von Neumann entropy (bits) of the block's brute-force reduced density matrix.
pub fn brute_force_block_entropy<T: Real>(c: &DMatrix<Complex<T>>, f: &DMatrix<Complex<T>>) -> Result<T> {
    let rho = gaussian_block_density_matrix(c, f)?;
    let eigenvalues = hermitian_eigenvalues(&rho);
    let ln2 = T::ln_2();
    let floor: T = lit(1e-15);
    Ok(eigenvalues.iter().filter(|&&x| x > floor).fold(T::zero(), |acc, &x| acc - x * x.ln() / ln2))
}

/// Block matrices read straight off a table for the given sites.
pub fn table_block<T: Real>(table: &CorrelatorTable<T>, block_l: usize) -> (DMatrix<Complex<T>>, DMatrix<Complex<T>>) {
    let dim = table.dim();
    let sites = block_sites(block_l, dim);
    let m = sites.len();
    let c = DMatrix::from_fn(m, m, |i, j| {
        let r: Vec<i64> = (0..dim).map(|x| sites[j][x] - sites[i][x]).collect();
        table.g(&r)
    });
    let f = DMatrix::from_fn(m, m, |i, j| {
        let r: Vec<i64> = (0..dim).map(|x| sites[j][x] - sites[i][x]).collect();
        table.a(&r)
    });
    (c, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(l: f64, g: f64, d: usize) -> ModelParams<f64> {
        ModelParams::new(l, g, d).unwrap()
    }

    fn cm(rows: usize, data: &[f64]) -> DMatrix<Complex<f64>> {
        DMatrix::from_row_slice(rows, rows, &data.iter().map(|&x| Complex::new(x, 0.0)).collect::<Vec<_>>())
    }

    #[test]
    fn pfaffian_small_cases() {
        let a = cm(2, &[0.0, 3.0, -3.0, 0.0]);
        assert_abs_diff_eq!(pfaffian(a).re, 3.0);
        // Pf of 4x4 = a01 a23 - a02 a13 + a03 a12
        let (a01, a02, a03, a12, a13, a23) = (1.0, 2.0, 3.0, 4.0, 5.0, 6.0);
        let m = cm(
            4,
            &[0.0, a01, a02, a03, -a01, 0.0, a12, a13, -a02, -a12, 0.0, a23, -a03, -a13, -a23, 0.0],
        );
        assert_abs_diff_eq!(pfaffian(m).re, a01 * a23 - a02 * a13 + a03 * a12, epsilon = 1e-12);
    }

    #[test]
    fn pfaffian_squares_to_determinant() {
        let n = 6;
        let mut m = DMatrix::from_element(n, n, Complex::new(0.0, 0.0));
        for i in 0..n {
            for j in i + 1..n {
                let v = Complex::new(((i * 7 + j * 3) as f64).sin(), ((i + 2 * j) as f64).cos());
                m[(i, j)] = v;
                m[(j, i)] = -v;
            }
        }
        let pf = pfaffian(m.clone());
        let det = m.determinant();
        assert!((pf * pf - det).norm() < 1e-10);
    }

    #[test]
    fn single_mode_density_matrix() {
        let c = cm(1, &[0.3]);
        let f = cm(1, &[0.0]);
        let rho = gaussian_block_density_matrix(&c, &f).unwrap();
        assert_abs_diff_eq!(rho[(0, 0)].re, 0.7, epsilon = 1e-14);
        assert_abs_diff_eq!(rho[(1, 1)].re, 0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(rho[(0, 1)].norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn density_matrix_reproduces_two_point_functions() {
        let table = oracle_bdg(&p(0.6, 0.8, 2), 6, true).unwrap();
        let (c, f) = table_block(&table, 2);
        let rho = gaussian_block_density_matrix(&c, &f).unwrap();
        assert_abs_diff_eq!(rho.trace().re, 1.0, epsilon = 1e-12);
        let modes = 4;
        let ann: Vec<DMatrix<Complex<f64>>> = (0..modes)
            .map(|j| {
                let mut op = DMatrix::from_element(16, 16, Complex::new(0.0, 0.0));
                for s in 0..16u32 {
                    if s & (1 << j) != 0 {
                        let sign = if (s & ((1 << j) - 1)).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                        op[((s ^ (1 << j)) as usize, s as usize)] = Complex::new(sign, 0.0);
                    }
                }
                op
            })
            .collect();
        for i in 0..modes {
            for j in 0..modes {
                let cij = (&rho * ann[i].adjoint() * &ann[j]).trace();
                let fij = (&rho * ann[i].adjoint() * ann[j].adjoint()).trace();
                assert!((cij - c[(i, j)]).norm() < 1e-12);
                assert!((fij - f[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn oracle_half_filling_with_zero_modes() {
        let err = oracle_bdg(&p(0.0, 0.0, 2), 8, true).unwrap_err();
        assert!(matches!(err, Error::ZeroEnergyMode { .. }));
        let t = oracle_bdg_with(&p(0.0, 0.0, 2), 8, true, ZeroModePolicy::HalfFill).unwrap();
        assert_abs_diff_eq!(t.g(&[0, 0]).re, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn oracle_gapped_full_band() {
        let t = oracle_bdg(&p(3.0, 0.0, 2), 6, false).unwrap();
        assert_abs_diff_eq!(t.g(&[0, 0]).re, 1.0, epsilon = 1e-12);
        for v in &t.g_values()[1..] {
            assert!(v.norm() < 1e-12);
        }
        assert!(t.a_values().iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn oracle_nodal_phase_pairs_on_bonds() {
        let t = oracle_bdg(&p(1.0, 1.0, 2), 6, true).unwrap();
        assert!(t.a(&[1, 0]).norm() > 1e-3);
        assert!(t.a(&[0, 1]).norm() > 1e-3);
    }

    #[test]
    fn oracle_rejects_huge_lattices() {
        assert!(matches!(oracle_bdg(&p(1.0, 1.0, 3), 17, true), Err(Error::LatticeTooLarge { .. })));
    }
}
