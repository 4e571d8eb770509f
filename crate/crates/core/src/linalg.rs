//! Small dense helpers shared across modules.

use nalgebra::DMatrix;
pub use num_complex::Complex64 as C64;

pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Kronecker product; the first factor is the most significant index.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_all(factors: &[&CMatrix]) -> CMatrix {
    let mut out = CMatrix::identity(1, 1);
    for f in factors {
        out = kron(&out, f);
    }
    out
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Spectral norm of a Hermitian or anti-Hermitian matrix via its
/// eigenvalues, cheaper than an SVD.
pub fn normal_norm(m: &CMatrix, anti_hermitian: bool) -> f64 {
    let h = if anti_hermitian { m * C64::new(0.0, -1.0) } else { m.clone() };
    let h = (&h + h.adjoint()) * real(0.5);
    h.symmetric_eigenvalues().iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `y <- y - c x`
pub fn axpy_neg(y: &mut [C64], c: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi -= c * xi;
    }
}

pub fn scale(v: &mut [C64], f: f64) {
    for x in v {
        *x *= f;
    }
}

/// Reorders the tensor factors of `m`. `dims[k]` is the dimension of factor
/// `k` (most significant first); factor `k` of the input becomes factor
/// `perm[k]` of the output.
pub fn permute_factors(m: &CMatrix, dims: &[usize], perm: &[usize]) -> CMatrix {
    let n = dims.len();
    let mut new_dims = vec![0; n];
    for k in 0..n {
        new_dims[perm[k]] = dims[k];
    }
    let total: usize = dims.iter().product();
    let map = |idx: usize| -> usize {
        let mut digits = vec![0; n];
        let mut rest = idx;
        for k in (0..n).rev() {
            digits[k] = rest % dims[k];
            rest /= dims[k];
        }
        let mut new_digits = vec![0; n];
        for k in 0..n {
            new_digits[perm[k]] = digits[k];
        }
        new_digits.iter().zip(&new_dims).fold(0, |acc, (d, m)| acc * m + d)
    };
    let targets: Vec<usize> = (0..total).map(map).collect();
    let mut out = CMatrix::zeros(total, total);
    for i in 0..total {
        for j in 0..total {
            out[(targets[i], targets[j])] = m[(i, j)];
        }
    }
    out
}
