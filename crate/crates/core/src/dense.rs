//! Dense eigensolvers, evaluated in double precision.

use faer::complex_native::c64;
use faer::{Mat, Side};
use nalgebra::{Complex, DMatrix};

use crate::scalar::{lit, Real};

fn to_faer<T: Real>(m: &DMatrix<T>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].to_f64_exact())
}

fn to_faer_complex<T: Real>(m: &DMatrix<Complex<T>>) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        c64::new(z.re.to_f64_exact(), z.im.to_f64_exact())
    })
}

/// Ascending eigenvalues of a real symmetric matrix (lower triangle read).
pub(crate) fn symmetric_eigenvalues<T: Real>(m: &DMatrix<T>) -> Vec<T> {
    to_faer(m).selfadjoint_eigenvalues(Side::Lower).into_iter().map(lit).collect()
}

/// Ascending eigenvalues and column eigenvectors of a real symmetric matrix.
pub(crate) fn symmetric_eigen<T: Real>(m: &DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let eig = to_faer(m).selfadjoint_eigendecomposition(Side::Lower);
    let s = eig.s().column_vector();
    let u = eig.u();
    let values = (0..m.nrows()).map(|i| lit(s.read(i))).collect();
    let vectors = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| lit(u.read(i, j)));
    (values, vectors)
}

/// Ascending eigenvalues of a complex Hermitian matrix.
pub(crate) fn hermitian_eigenvalues<T: Real>(m: &DMatrix<Complex<T>>) -> Vec<T> {
    to_faer_complex(m).selfadjoint_eigenvalues(Side::Lower).into_iter().map(lit).collect()
}

/// Eigenvalues of a general complex matrix; `None` if any is not finite.
pub(crate) fn complex_eigenvalues<T: Real>(m: &DMatrix<Complex<T>>) -> Option<Vec<Complex<T>>> {
    let eig: Vec<c64> = to_faer_complex(m).eigenvalues();
    if eig.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return None;
    }
    Some(eig.iter().map(|z| Complex::new(lit(z.re), lit(z.im))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reconstructs_structured_symmetric_matrix() {
        // periodic chain with degenerate levels
        let n = 60;
        let m = DMatrix::<f64>::from_fn(n, n, |i, j| if (i + 1) % n == j || (j + 1) % n == i { 1.0 } else { 0.0 });
        let (vals, vecs) = symmetric_eigen(&m);
        let recon = &vecs * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vals.clone())) * vecs.transpose();
        assert!((recon - &m).amax() < 1e-13);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        for (k, v) in vals.iter().enumerate() {
            assert!(v.abs() <= 2.0 + 1e-12, "eigenvalue {k} = {v}");
        }
    }

    #[test]
    fn complex_eigenvalues_of_triangular_matrix() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[Complex::new(1.0, 1.0), Complex::new(3.0, 0.0), Complex::new(0.0, 0.0), Complex::new(-2.0, 0.5)],
        );
        let mut eig = complex_eigenvalues(&m).unwrap();
        eig.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((eig[0] - Complex::new(-2.0, 0.5)).norm() < 1e-14);
        assert!((eig[1] - Complex::new(1.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn hermitian_eigenvalues_are_real_and_sorted() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[Complex::new(2.0, 0.0), Complex::new(0.0, -1.0), Complex::new(0.0, 1.0), Complex::new(2.0, 0.0)],
        );
        let e: Vec<f64> = hermitian_eigenvalues(&m);
        assert!((e[0] - 1.0).abs() < 1e-14 && (e[1] - 3.0).abs() < 1e-14);
    }
}
