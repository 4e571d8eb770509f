//! Single-site spin matrices.

use crate::lattice::TwiceSpin;
use crate::linalg::{real, CMatrix, I, ZERO};

/// The standard spin-`s` matrices in the basis `m = s, s-1, ..., -s`
/// (descending `S³`).
#[derive(Clone, Debug)]
pub struct SpinMatrices {
    pub s1: CMatrix,
    pub s2: CMatrix,
    pub s3: CMatrix,
    pub plus: CMatrix,
    pub minus: CMatrix,
}

impl SpinMatrices {
    pub fn new(spin: TwiceSpin) -> Self {
        let n = spin.dim();
        let s = spin.value();
        let m = |k: usize| s - k as f64;
        let s3 = CMatrix::from_fn(n, n, |i, j| if i == j { real(m(i)) } else { ZERO });
        // S+ |m> = sqrt(s(s+1) - m(m+1)) |m+1>; |m+1> sits one index lower.
        let plus = CMatrix::from_fn(n, n, |i, j| {
            if j == i + 1 {
                let mj = m(j);
                real((s * (s + 1.0) - mj * (mj + 1.0)).sqrt())
            } else {
                ZERO
            }
        });
        let minus = plus.adjoint();
        let s1 = (&plus + &minus) * real(0.5);
        let s2 = (&plus - &minus) * (-I * 0.5);
        SpinMatrices { s1, s2, s3, plus, minus }
    }

    pub fn dim(&self) -> usize {
        self.s3.nrows()
    }

    /// `S·S'` acting on the two-site space (first factor most significant).
    pub fn dot(&self, other: &SpinMatrices) -> CMatrix {
        self.s1.kronecker(&other.s1) + self.s2.kronecker(&other.s2) + self.s3.kronecker(&other.s3)
    }
}

/// Site matrices for a spin given as a real number; errors unless `2s` is
/// a positive integer.
pub fn spin_matrices(s: f64) -> crate::Result<SpinMatrices> {
    Ok(SpinMatrices::new(TwiceSpin::from_f64(s)?))
}

/// Hermitian basis of `n x n` matrices (generalized Gell-Mann set), each
/// scaled to unit operator norm. Contains `n² - 1` traceless elements.
pub fn hermitian_unit_basis(n: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(n * n - 1);
    for j in 0..n {
        for k in j + 1..n {
            let mut sym = CMatrix::zeros(n, n);
            sym[(j, k)] = real(1.0);
            sym[(k, j)] = real(1.0);
            out.push(sym);
            let mut anti = CMatrix::zeros(n, n);
            anti[(j, k)] = -I;
            anti[(k, j)] = I;
            out.push(anti);
        }
    }
    for l in 1..n {
        // diag(1, ..., 1, -l, 0, ...) has operator norm l.
        let mut d = CMatrix::zeros(n, n);
        for i in 0..l {
            d[(i, i)] = real(1.0 / l as f64);
        }
        d[(l, l)] = real(-1.0);
        out.push(d);
    }
    out
}
