//! Vector kernels with a fixed reduction order, so results do not depend on
//! the number of worker threads.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

pub type C64 = Complex64;

const CHUNK: usize = 4096;

/// Pairwise summation of a slice.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

fn reduce_chunks(partials: Vec<f64>) -> f64 {
    pairwise_sum(&partials)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let partials: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum())
        .collect();
    reduce_chunks(partials)
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `<a|b>` with `a` conjugated.
pub fn cdot(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    let partials: Vec<(f64, f64)> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| {
            let s: C64 = x.iter().zip(y).map(|(p, q)| p.conj() * q).sum();
            (s.re, s.im)
        })
        .collect();
    let re: Vec<f64> = partials.iter().map(|p| p.0).collect();
    let im: Vec<f64> = partials.iter().map(|p| p.1).collect();
    C64::new(reduce_chunks(re), reduce_chunks(im))
}

pub fn cnorm(a: &[C64]) -> f64 {
    let partials: Vec<f64> = a
        .par_chunks(CHUNK)
        .map(|x| x.iter().map(|p| p.norm_sqr()).sum())
        .collect();
    reduce_chunks(partials).sqrt()
}

/// `y += alpha * x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.par_iter_mut()
        .zip(x.par_iter())
        .for_each(|(yi, xi)| *yi += alpha * xi);
}

pub fn caxpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    y.par_iter_mut()
        .zip(x.par_iter())
        .for_each(|(yi, xi)| *yi += alpha * xi);
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    x.par_iter_mut().for_each(|v| *v *= alpha);
}

pub fn cscale(alpha: C64, x: &mut [C64]) {
    x.par_iter_mut().for_each(|v| *v *= alpha);
}

pub fn to_complex(x: &[f64]) -> Vec<C64> {
    x.iter().map(|&v| C64::new(v, 0.0)).collect()
}

/// Eigen-decomposition of a real symmetric tridiagonal matrix, ascending.
pub fn tridiagonal_eigen(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    symmetric_eigen_sorted(t)
}

/// Eigenpairs of a real symmetric matrix sorted by ascending eigenvalue.
pub fn symmetric_eigen_sorted(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::<f64>::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (values, vecs)
}

/// `exp(-i A t)` for real symmetric `A`.
pub fn expm_symmetric(a: &DMatrix<f64>, t: f64) -> DMatrix<C64> {
    let (vals, vecs) = symmetric_eigen_sorted(a.clone());
    let n = a.nrows();
    let q = vecs.map(|v| C64::new(v, 0.0));
    let phases = DVector::from_iterator(n, vals.iter().map(|&l| C64::from_polar(1.0, -l * t)));
    let mut left = q.clone();
    for (j, mut col) in left.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    left * q.transpose()
}

/// Eigenpairs of a Hermitian matrix sorted by ascending eigenvalue.
pub fn hermitian_eigen_sorted(m: DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    let m = (&m + m.adjoint()).scale(0.5);
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::<C64>::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (values, vecs)
}

/// `exp(-i A t)` for Hermitian `A`.
pub fn expm_hermitian(a: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let (vals, vecs) = hermitian_eigen_sorted(a.clone());
    let mut left = vecs.clone();
    for (j, mut col) in left.column_iter_mut().enumerate() {
        col *= C64::from_polar(1.0, -vals[j] * t);
    }
    left * vecs.adjoint()
}

/// Eigenphases beyond `pi - BRANCH_MARGIN` make the principal logarithm
/// ambiguous.
pub const BRANCH_MARGIN: f64 = 1e-6;

/// Decomposition `U = Q diag(exp(-i lambda t)) Q^dagger` of a unitary.
///
/// The Cayley transform `C = i (I - U)(I + U)^-1` is Hermitian with
/// eigenvalues `tan(theta/2)`, one-to-one on `(-pi, pi)`, so a Hermitian
/// eigensolve yields the eigenvectors even for clustered phases. Phases are
/// then read off as Rayleigh quotients of `U`. Returns `(lambda, Q)` with
/// `lambda` ascending, or a branch error if any eigenphase reaches `pi`.
pub fn unitary_generator(u: &DMatrix<C64>, t: f64) -> crate::Result<(Vec<f64>, DMatrix<C64>)> {
    let n = u.nrows();
    let id = DMatrix::<C64>::identity(n, n);
    let plus = (&id + u).transpose();
    let minus = (&id - u).transpose();
    // C^T = (I + U)^-T (I - U)^T i, solved as a linear system
    let ct = plus
        .lu()
        .solve(&minus)
        .ok_or(crate::Error::BranchAmbiguity { phase: std::f64::consts::PI, t })?;
    let c = ct.transpose() * C64::new(0.0, 1.0);
    let (_, q) = hermitian_eigen_sorted(c);
    let uq = u * &q;
    let mut lambda = Vec::with_capacity(n);
    for j in 0..n {
        let phase = q.column(j).dotc(&uq.column(j)).arg();
        if phase.abs() >= std::f64::consts::PI - BRANCH_MARGIN {
            return Err(crate::Error::BranchAmbiguity { phase, t });
        }
        lambda.push(-phase / t);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| lambda[a].total_cmp(&lambda[b]));
    let mut vecs = DMatrix::<C64>::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &q.column(i));
    }
    Ok((order.iter().map(|&i| lambda[i]).collect(), vecs))
}

/// `(i / t) log U` for a unitary `U`, on the principal branch.
pub fn log_unitary(u: &DMatrix<C64>, t: f64) -> crate::Result<DMatrix<C64>> {
    let (lambda, q) = unitary_generator(u, t)?;
    let mut left = q.clone();
    for (j, mut col) in left.column_iter_mut().enumerate() {
        col *= C64::new(lambda[j], 0.0);
    }
    Ok(left * q.adjoint())
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = pairwise_sum(x) / n;
    let my = pairwise_sum(y) / n;
    let sxy: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let sxx: Vec<f64> = x.iter().map(|a| (a - mx).powi(2)).collect();
    let syy: Vec<f64> = y.iter().map(|b| (b - my).powi(2)).collect();
    pairwise_sum(&sxy) / (pairwise_sum(&sxx) * pairwise_sum(&syy)).sqrt()
}
