use num_complex::Complex64 as C64;

use super::{SectorBasis, SpinSpace};
use crate::error::{domain, Error, Result};
use crate::lattice::Vertex;
use crate::linalg::{CMatrix, ONE, ZERO};

/// Entries at or below this magnitude are not stored.
pub const DROP_TOL: f64 = 1e-15;
/// Tolerance for the Hermiticity check.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Anything that can act on a vector. Implemented by [`SparseOperator`] and
/// by composite operators such as Casimirs that are never formed explicitly.
pub trait LinearMap: Sync {
    fn dim(&self) -> usize;

    /// `y <- self * x`
    fn apply(&self, x: &[C64], y: &mut [C64]);

    /// An upper bound on the operator norm.
    fn norm_bound(&self) -> f64;

    fn apply_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.dim()];
        self.apply(x, &mut y);
        y
    }
}

/// Square matrix in compressed sparse row form.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    hermitian: bool,
}

impl SparseOperator {
    /// Builds from `(row, col, value)` triplets. Duplicates are summed in
    /// the order given, so the result is bit-identical for a fixed input
    /// order.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|(r, c, _)| *r >= dim || *c >= dim) {
            return domain(format!("entry ({r}, {c}) outside a {dim}x{dim} operator"));
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals = Vec::with_capacity(triplets.len());
        let mut iter = triplets.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v.norm() > DROP_TOL {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(SparseOperator { dim, row_ptr, cols, vals, hermitian: false })
    }

    pub fn zero(dim: usize) -> Self {
        SparseOperator { dim, row_ptr: vec![0; dim + 1], cols: vec![], vals: vec![], hermitian: true }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![ONE; dim])
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let trip = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        let op = Self::from_triplets(diag.len(), trip).expect("diagonal indices in range");
        let herm = diag.iter().all(|v| v.im.abs() <= HERMITIAN_TOL);
        SparseOperator { hermitian: herm, ..op }
    }

    pub fn from_dense(m: &CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return domain("operator must be square");
        }
        let mut trip = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)].norm() > DROP_TOL {
                    trip.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), trip)
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn diagonal_entries(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> C64 {
        self.diagonal_entries().iter().sum()
    }

    /// `max |M_ij - conj(M_ji)|` over stored entries.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (r, c, v) in self.iter() {
            worst = worst.max((v - self.get(c, r).conj()).norm());
        }
        worst
    }

    /// Verifies Hermiticity and records it.
    pub fn into_hermitian(mut self) -> Result<Self> {
        let dev = self.hermitian_deviation();
        if dev >= HERMITIAN_TOL {
            return domain(format!("operator is not Hermitian (deviation {dev:e})"));
        }
        self.hermitian = true;
        Ok(self)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn is_real(&self) -> bool {
        self.vals.iter().all(|v| v.im == 0.0)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.vals.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    fn check_dim(&self, other: &SparseOperator) -> Result<()> {
        if self.dim != other.dim {
            return domain(format!("dimension mismatch {} vs {}", self.dim, other.dim));
        }
        Ok(())
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, other: &SparseOperator, factor: C64) -> Result<Self> {
        self.check_dim(other)?;
        let mut trip: Vec<_> = self.iter().collect();
        trip.extend(other.iter().map(|(r, c, v)| (r, c, v * factor)));
        let mut out = Self::from_triplets(self.dim, trip)?;
        out.hermitian = self.hermitian && other.hermitian && factor.im == 0.0;
        Ok(out)
    }

    pub fn add(&self, other: &SparseOperator) -> Result<Self> {
        self.add_scaled(other, ONE)
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= factor;
        }
        out.hermitian = self.hermitian && factor.im == 0.0;
        out
    }

    pub fn adjoint(&self) -> Self {
        let trip = self.iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        let mut out = Self::from_triplets(self.dim, trip).expect("same dimension");
        out.hermitian = self.hermitian;
        out
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &SparseOperator) -> Result<Self> {
        self.check_dim(other)?;
        let mut trip = Vec::new();
        let mut acc = vec![ZERO; self.dim];
        let mut touched = Vec::new();
        for r in 0..self.dim {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if acc[c] == ZERO {
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                trip.push((r, c, acc[c]));
                acc[c] = ZERO;
            }
            touched.clear();
        }
        Self::from_triplets(self.dim, trip)
    }

    pub fn commutator(&self, other: &SparseOperator) -> Result<Self> {
        self.matmul(other)?.add_scaled(&other.matmul(self)?, -ONE)
    }

    /// Restriction to a sector. Fails if any element couples the sector to
    /// its complement by more than `tol`.
    pub fn restrict(&self, sector: &SectorBasis, tol: f64) -> Result<Self> {
        if sector.parent_dim() != self.dim {
            return domain(format!("sector of a {}-dim space applied to a {}-dim operator", sector.parent_dim(), self.dim));
        }
        const OUTSIDE: usize = usize::MAX;
        let mut position = vec![OUTSIDE; self.dim];
        for (k, &s) in sector.states().iter().enumerate() {
            position[s] = k;
        }
        let mut trip = Vec::new();
        for (r, c, v) in self.iter() {
            match (position[r], position[c]) {
                (OUTSIDE, OUTSIDE) => {}
                (pr, pc) if pr != OUTSIDE && pc != OUTSIDE => trip.push((pr, pc, v)),
                _ if v.norm() > tol => {
                    return Err(Error::SectorLeak {
                        sector: sector.label().to_string(),
                        row: r,
                        col: c,
                        value: v.norm(),
                    })
                }
                _ => {}
            }
        }
        let mut out = Self::from_triplets(sector.len(), trip)?;
        out.hermitian = self.hermitian;
        Ok(out)
    }

    /// `sqrt(‖M‖_1 ‖M‖_∞)`, an upper bound on the spectral norm.
    pub fn norm_estimate(&self) -> f64 {
        let row_max = (0..self.dim).map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>()).fold(0.0, f64::max);
        let mut col_sums = vec![0.0; self.dim];
        for (_, c, v) in self.iter() {
            col_sums[c] += v.norm();
        }
        let col_max = col_sums.into_iter().fold(0.0, f64::max);
        (row_max * col_max).sqrt()
    }
}

impl LinearMap for SparseOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        for (r, out) in y.iter_mut().enumerate().take(self.dim) {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *out = acc;
        }
    }

    fn norm_bound(&self) -> f64 {
        self.norm_estimate()
    }
}

/// Kronecker embedding of local matrices: acts with `m` on site `x` for
/// each `(x, m)` and as the identity elsewhere. Sites must be distinct.
pub fn embed_at(space: &SpinSpace, ops: &[(Vertex, CMatrix)]) -> Result<SparseOperator> {
    let mut sites: Vec<Vertex> = ops.iter().map(|(x, _)| *x).collect();
    sites.sort_unstable();
    if sites.windows(2).any(|w| w[0] == w[1]) {
        return domain("embed_at: sites must be distinct");
    }
    for (x, m) in ops {
        if *x >= space.num_sites() {
            return domain(format!("embed_at: site {x} outside the space"));
        }
        let d = space.site_dim(*x);
        if m.nrows() != d || m.ncols() != d {
            return domain(format!("embed_at: {}x{} matrix at site {x} of dimension {d}", m.nrows(), m.ncols()));
        }
    }
    // Column-wise nonzeros of each local matrix: cols[k][c] = [(row, val)].
    let columns: Vec<Vec<Vec<(usize, C64)>>> = ops
        .iter()
        .map(|(_, m)| {
            (0..m.ncols())
                .map(|c| (0..m.nrows()).filter(|&r| m[(r, c)].norm() > DROP_TOL).map(|r| (r, m[(r, c)])).collect())
                .collect()
        })
        .collect();
    let mut trip = Vec::new();
    let mut partial: Vec<(usize, C64)> = Vec::new();
    let mut next = Vec::new();
    for col in 0..space.total_dim() {
        partial.clear();
        partial.push((col, ONE));
        for ((x, _), cols) in ops.iter().zip(&columns) {
            let stride = space.stride(*x);
            let digit = space.digit(col, *x);
            next.clear();
            for &(state, amp) in &partial {
                let base = state - digit * stride;
                for &(r, v) in &cols[digit] {
                    next.push((base + r * stride, amp * v));
                }
            }
            std::mem::swap(&mut partial, &mut next);
        }
        trip.extend(partial.iter().map(|&(row, v)| (row, col, v)));
    }
    let op = SparseOperator::from_triplets(space.total_dim(), trip)?;
    let all_hermitian = ops.iter().all(|(_, m)| crate::linalg::hermitian_deviation(m) < HERMITIAN_TOL);
    Ok(if all_hermitian { op.into_hermitian().unwrap_or_else(|o| panic!("{o}")) } else { op })
}
