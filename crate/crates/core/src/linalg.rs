//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<Complex64>;

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn diagonal(values: &[Complex64]) -> CMat {
    CMat::from_diagonal(&nalgebra::DVector::from_column_slice(values))
}

pub fn real_diagonal(values: &[f64]) -> CMat {
    let v: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    diagonal(&v)
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases
/// of `R`'s diagonal moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 {
            d / norm
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Squared singular values, descending.
pub fn squared_singular_values(m: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().singular_values().iter().map(|v| v * v).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Squared singular values (descending) and the matching right singular
/// vectors `V` of `M = U·Σ·Vᴴ`, i.e. the eigen-decomposition of `Mᴴ·M`.
///
/// The values come from a values-only SVD and the vectors from the Hermitian
/// eigen-solver on `Mᴴ·M`: nalgebra's complex SVD loses accuracy in the
/// singular values when vectors are requested and values are degenerate.
pub fn right_singular(m: &CMat) -> (Vec<f64>, CMat) {
    let values = squared_singular_values(m);
    let (_, vectors) = hermitian_eigen(&gram(m));
    (values, vectors)
}

/// `σ_max / σ_min`; infinite for a singular or non-finite matrix.
pub fn condition_number(m: &CMat) -> f64 {
    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return f64::INFINITY;
    }
    let s = m.clone().singular_values();
    let max = s.max();
    let min = s.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Input-side Gram operator `Mᴴ·M`.
pub fn gram(m: &CMat) -> CMat {
    m.adjoint() * m
}

/// Eigen-decomposition of a Hermitian matrix. Eigenvalues are returned in
/// descending order with matching eigenvector columns.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    // symmetrize against round-off before handing to the solver
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(h);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `V·diag(values)·Vᴴ`.
pub fn from_eigen(values: &[f64], vectors: &CMat) -> CMat {
    let n = values.len();
    let scaled = CMat::from_fn(n, n, |r, c| vectors[(r, c)] * values[c]);
    scaled * vectors.adjoint()
}

pub fn frobenius_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}
