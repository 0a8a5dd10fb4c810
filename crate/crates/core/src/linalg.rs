//! Small dense Hermitian helpers shared across modules.
//!
//! All matrix functions go through a Hermitian eigendecomposition; inputs
//! are symmetrized first so round-off asymmetry never leaks into the
//! eigensolver.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Dense complex matrix.
pub type CMat = DMatrix<Complex64>;
/// Dense complex vector.
pub type CVec = DVector<Complex64>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn zeros(d: usize) -> CMat {
    CMat::zeros(d, d)
}

pub fn diag_real(values: &[f64]) -> CMat {
    let d = values.len();
    CMat::from_fn(d, d, |i, j| if i == j { c(values[i]) } else { c(0.0) })
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn asymmetry(a: &CMat) -> f64 {
    let d = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in i..d {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// ½(A + A*).
pub fn symmetrize(a: &CMat) -> CMat {
    (a + a.adjoint()) * c(0.5)
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let d = a.nrows();
    if d == 1 {
        return (vec![a[(0, 0)].re], identity(1));
    }
    let eig = symmetrize(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(d, d, |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

pub fn eigenvalues(a: &CMat) -> Vec<f64> {
    if a.nrows() == 1 {
        return vec![a[(0, 0)].re];
    }
    let mut v: Vec<f64> = symmetrize(a).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn min_eigenvalue(a: &CMat) -> f64 {
    eigenvalues(a)[0]
}

pub fn max_eigenvalue(a: &CMat) -> f64 {
    *eigenvalues(a).last().unwrap()
}

/// f(A) for Hermitian A via its eigendecomposition.
pub fn hermitian_map(a: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let d = a.nrows();
    if d == 1 {
        return CMat::from_element(1, 1, c(f(a[(0, 0)].re)));
    }
    let (values, v) = hermitian_eigen(a);
    let mut scaled = v.clone();
    for (k, &lam) in values.iter().enumerate() {
        let fk = c(f(lam));
        for r in 0..d {
            scaled[(r, k)] *= fk;
        }
    }
    symmetrize(&(scaled * v.adjoint()))
}

pub fn sqrtm(a: &CMat) -> CMat {
    hermitian_map(a, |x| x.max(0.0).sqrt())
}

pub fn inv_sqrtm(a: &CMat) -> CMat {
    hermitian_map(a, |x| 1.0 / x.sqrt())
}

pub fn logm(a: &CMat) -> CMat {
    hermitian_map(a, f64::ln)
}

pub fn inverse_hermitian(a: &CMat) -> CMat {
    hermitian_map(a, |x| 1.0 / x)
}

/// log det of a Hermitian positive definite matrix.
pub fn logdet(a: &CMat) -> f64 {
    if a.nrows() == 1 {
        return a[(0, 0)].re.ln();
    }
    eigenvalues(a).iter().map(|x| x.ln()).sum()
}

/// Spectral norm (largest singular value) of an arbitrary square matrix.
pub fn spectral_norm(a: &CMat) -> f64 {
    if a.nrows() == 1 && a.ncols() == 1 {
        return a[(0, 0)].norm();
    }
    let g = a.adjoint() * a;
    max_eigenvalue(&g).max(0.0).sqrt()
}

/// Spectral norm of a Hermitian matrix: largest |eigenvalue|.
pub fn hermitian_norm(a: &CMat) -> f64 {
    let v = eigenvalues(a);
    v[0].abs().max(v[v.len() - 1].abs())
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// ‖A^{1/2} B^{1/2}‖ for Hermitian positive semidefinite A, B.
///
/// Uses ‖A^{1/2}B^{1/2}‖² = λ_max(A^{1/2} B A^{1/2}).
pub fn sqrt_product_norm(a: &CMat, b: &CMat) -> f64 {
    if a.nrows() == 1 {
        return (a[(0, 0)].re * b[(0, 0)].re).max(0.0).sqrt();
    }
    let ah = sqrtm(a);
    let m = &ah * b * &ah;
    max_eigenvalue(&m).max(0.0).sqrt()
}

/// (A e, e) for Hermitian A.
pub fn quad_form(a: &CMat, e: &CVec) -> f64 {
    (e.adjoint() * a * e)[(0, 0)].re
}

/// Determinant of a Hermitian positive definite matrix (real).
pub fn det_hermitian(a: &CMat) -> f64 {
    logdet(a).exp()
}

/// Lower-triangular Cholesky factor of a Hermitian positive definite matrix.
pub fn cholesky_lower(a: &CMat) -> Option<CMat> {
    nalgebra::linalg::Cholesky::new(symmetrize(a)).map(|ch| ch.l())
}
