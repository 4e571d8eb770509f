//! Hermitian eigensolvers: dense diagonalization for small matrices, Lanczos
//! for the low end of large ones, sector-blocked spectra and gaps.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::hilbert::{LinearMap, SectorBasis, SectorLabel, SparseOperator, SpinSpace};
use crate::linalg::{axpy_neg, dot, norm, real, scale, CMatrix, ZERO};
use crate::models::Interaction;

/// Largest dimension handled by [`full_spectrum`].
pub const DENSE_CUTOFF: usize = 4096;
/// Default tolerance for calling two eigenvalues equal.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Default Lanczos residual tolerance.
pub const LANCZOS_TOL: f64 = 1e-9;
/// Sector dimension up to which blocked solvers diagonalize densely.
pub const SMALL_SECTOR: usize = 400;

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumReport {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as columns, in the order of `eigenvalues`.
    pub eigenvectors: Option<CMatrix>,
    pub sector: Option<SectorLabel>,
    /// `‖Hv - Ev‖` per pair; empty when no vectors were computed.
    pub residuals: Vec<f64>,
}

impl SpectrumReport {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, k: usize) -> Option<Vec<C64>> {
        self.eigenvectors.as_ref().map(|v| v.column(k).iter().copied().collect())
    }

    pub fn with_sector(mut self, label: SectorLabel) -> Self {
        self.sector = Some(label);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapReport {
    pub ground_energy: f64,
    pub ground_degeneracy: usize,
    pub gap: f64,
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix.
/// Real matrices take the real symmetric path. Within each degenerate block
/// the vectors are re-orthogonalized, and every vector is phased so that its
/// first large component is real and positive.
pub fn dense_eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (vec![], CMatrix::zeros(0, 0));
    }
    let (values, vectors) = if m.iter().all(|z| z.im == 0.0) {
        let re = DMatrix::<f64>::from_fn(n, n, |i, j| 0.5 * (m[(i, j)].re + m[(j, i)].re));
        let eig = SymmetricEigen::new(re);
        (eig.eigenvalues.iter().copied().collect::<Vec<_>>(), eig.eigenvectors.map(real))
    } else {
        let h = (m + m.adjoint()) * real(0.5);
        let eig = SymmetricEigen::new(h);
        (eig.eigenvalues.iter().copied().collect::<Vec<_>>(), eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&k| values[k]).collect();
    let mut vecs = CMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    let scale_tol = DEGENERACY_TOL * (1.0 + sorted.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && sorted[end] - sorted[end - 1] <= scale_tol {
            end += 1;
        }
        orthonormalize_columns(&mut vecs, start, end);
        start = end;
    }
    for j in 0..n {
        fix_phase(&mut vecs, j);
    }
    (sorted, vecs)
}

/// Modified Gram-Schmidt, applied twice, on columns `start..end`.
fn orthonormalize_columns(v: &mut CMatrix, start: usize, end: usize) {
    for _ in 0..2 {
        for j in start..end {
            for k in start..j {
                let c: C64 = (0..v.nrows()).map(|i| v[(i, k)].conj() * v[(i, j)]).sum();
                for i in 0..v.nrows() {
                    let t = v[(i, k)];
                    v[(i, j)] -= c * t;
                }
            }
            let nrm = v.column(j).norm();
            if nrm > 0.0 {
                v.column_mut(j).scale_mut(1.0 / nrm);
            }
        }
    }
}

fn fix_phase(v: &mut CMatrix, j: usize) {
    let big = v.column(j).iter().fold(0.0f64, |a, z| a.max(z.norm()));
    if let Some(i) = (0..v.nrows()).find(|&i| v[(i, j)].norm() > 0.5 * big) {
        let p = v[(i, j)].conj() / v[(i, j)].norm();
        for r in 0..v.nrows() {
            v[(r, j)] *= p;
        }
    }
}

fn residuals(h: &dyn LinearMap, values: &[f64], vecs: &CMatrix) -> Vec<f64> {
    (0..values.len())
        .map(|k| {
            let v: Vec<C64> = vecs.column(k).iter().copied().collect();
            let mut r = h.apply_vec(&v);
            axpy_neg(&mut r, real(values[k]), &v);
            norm(&r)
        })
        .collect()
}

/// Every eigenpair of a Hermitian operator by dense diagonalization.
pub fn full_spectrum(h: &SparseOperator, want_vectors: bool) -> Result<SpectrumReport> {
    if h.dim() > DENSE_CUTOFF {
        return Err(Error::TooLarge { dim: h.dim(), cutoff: DENSE_CUTOFF });
    }
    check_hermitian(h)?;
    let (values, vecs) = dense_eigh(&h.to_dense());
    let res = if want_vectors { residuals(h, &values, &vecs) } else { vec![] };
    Ok(SpectrumReport {
        eigenvalues: values,
        eigenvectors: want_vectors.then_some(vecs),
        sector: None,
        residuals: res,
    })
}

fn check_hermitian(h: &SparseOperator) -> Result<()> {
    if h.is_hermitian() {
        return Ok(());
    }
    let dev = h.hermitian_deviation();
    if dev >= crate::hilbert::HERMITIAN_TOL {
        return domain(format!("operator is not Hermitian (deviation {dev:e})"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LanczosOptions {
    /// Residual `‖Hv - θv‖` required for each returned pair.
    pub tol: f64,
    /// Krylov dimension per restart.
    pub krylov: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { tol: LANCZOS_TOL, krylov: 160, max_restarts: 60, seed: 0x5eed_1a9c }
    }
}

/// The `k` lowest eigenpairs by Lanczos with full reorthogonalization.
///
/// Pairs are found one at a time: each run computes the lowest Ritz pair of
/// the operator projected off the pairs already locked, which resolves
/// degenerate levels one vector at a time. Start vectors come from a fixed
/// seed, so results are reproducible.
pub fn extremal_eigs(h: &dyn LinearMap, k: usize, opts: LanczosOptions) -> Result<SpectrumReport> {
    let n = h.dim();
    if k == 0 || k > n {
        return domain(format!("requested {k} eigenpairs of a {n}-dim operator"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<Vec<C64>> = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    let mut res = Vec::with_capacity(k);
    for _ in 0..k {
        let start = random_vector(&mut rng, n);
        let (theta, v, r) = lowest_pair(h, &locked, start, opts)?;
        values.push(theta);
        res.push(r);
        locked.push(v);
    }
    // Deflation finds levels in order up to round-off; sort for safety.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let vecs = CMatrix::from_fn(n, k, |i, j| locked[order[j]][i]);
    Ok(SpectrumReport {
        eigenvalues: order.iter().map(|&j| values[j]).collect(),
        eigenvectors: Some(vecs),
        sector: None,
        residuals: order.iter().map(|&j| res[j]).collect(),
    })
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
}

fn project_out(v: &mut [C64], basis: &[Vec<C64>]) {
    for b in basis {
        let c = dot(b, v);
        axpy_neg(v, c, b);
    }
}

/// Lowest eigenpair of `P H P`, `P` projecting off `locked`.
fn lowest_pair(h: &dyn LinearMap, locked: &[Vec<C64>], mut start: Vec<C64>, opts: LanczosOptions) -> Result<(f64, Vec<C64>, f64)> {
    let n = h.dim();
    let room = n - locked.len();
    let m = opts.krylov.min(room).max(1);
    let mut best = f64::INFINITY;
    for _ in 0..=opts.max_restarts {
        project_out(&mut start, locked);
        project_out(&mut start, locked);
        let s = norm(&start);
        if s < 1e-300 {
            return Err(Error::NoConvergence { iterations: 0, best_residual: best });
        }
        scale(&mut start, 1.0 / s);
        let mut q: Vec<Vec<C64>> = vec![start.clone()];
        let mut alpha: Vec<f64> = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        let mut w = vec![ZERO; n];
        let mut ritz = (0.0, Vec::new());
        for j in 0..m {
            h.apply(&q[j], &mut w);
            project_out(&mut w, locked);
            let a = dot(&q[j], &w).re;
            alpha.push(a);
            for _ in 0..2 {
                project_out(&mut w, &q);
                project_out(&mut w, locked);
            }
            let b = norm(&w);
            let last = j + 1 == m;
            let exhausted = b < 1e-12 * (1.0 + a.abs());
            if exhausted || last || (j + 1) % 8 == 0 {
                let (theta, s) = tridiagonal_lowest(&alpha, &beta);
                let estimate = b * s[j].abs();
                ritz = (theta, s);
                if exhausted || last || estimate < 0.1 * opts.tol {
                    break;
                }
            }
            beta.push(b);
            let mut next = w.clone();
            scale(&mut next, 1.0 / b);
            q.push(next);
        }
        let (_, s) = ritz;
        let mut v = vec![ZERO; n];
        for (coef, qi) in s.iter().zip(&q) {
            for (vi, x) in v.iter_mut().zip(qi) {
                *vi += real(*coef) * x;
            }
        }
        project_out(&mut v, locked);
        let nv = norm(&v);
        scale(&mut v, 1.0 / nv);
        let hv = h.apply_vec(&v);
        let theta = dot(&v, &hv).re;
        let mut r = hv;
        axpy_neg(&mut r, real(theta), &v);
        let resid = norm(&r);
        best = best.min(resid);
        if resid < opts.tol {
            return Ok((theta, v, resid));
        }
        start = v;
    }
    Err(Error::NoConvergence { iterations: opts.max_restarts * m, best_residual: best })
}

/// Lowest eigenpair of the symmetric tridiagonal matrix with diagonal
/// `alpha` and off-diagonal `beta` (`beta.len() >= alpha.len() - 1`).
fn tridiagonal_lowest(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let k = alpha.len();
    let t = DMatrix::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let (idx, &theta) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    (theta, eig.eigenvectors.column(idx).iter().copied().collect())
}

/// How many levels to compute in a sector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Levels {
    All,
    Lowest(usize),
}

/// Spectrum of `H` restricted to a sector. Fails if `H` couples the sector to
/// its complement.
pub fn sector_spectrum(h: &SparseOperator, sector: &SectorBasis, levels: Levels, want_vectors: bool) -> Result<SpectrumReport> {
    let block = h.restrict(sector, 1e-10)?;
    Ok(block_spectrum(&block, levels, want_vectors, LanczosOptions::default())?.with_sector(sector.label()))
}

/// Dense for small blocks or full spectra, Lanczos otherwise.
pub fn block_spectrum(block: &SparseOperator, levels: Levels, want_vectors: bool, opts: LanczosOptions) -> Result<SpectrumReport> {
    match levels {
        Levels::All => full_spectrum(block, want_vectors),
        Levels::Lowest(k) if block.dim() <= SMALL_SECTOR => {
            let mut r = full_spectrum(block, want_vectors)?;
            let k = k.min(r.eigenvalues.len());
            r.eigenvalues.truncate(k);
            r.residuals.truncate(k.min(r.residuals.len()));
            if let Some(v) = r.eigenvectors.take() {
                r.eigenvectors = Some(v.columns(0, k).into_owned());
            }
            Ok(r)
        }
        Levels::Lowest(k) => {
            let mut r = extremal_eigs(block, k.min(block.dim()), opts)?;
            if !want_vectors {
                r.eigenvectors = None;
            }
            Ok(r)
        }
    }
}

/// Ground energy, its degeneracy, and the gap to the next distinct level.
pub fn spectral_gap(report: &SpectrumReport, degeneracy_tol: f64) -> Result<GapReport> {
    let e = &report.eigenvalues;
    let Some(&e0) = e.iter().min_by(|a, b| a.total_cmp(b)) else {
        return Err(Error::DegenerateSpectrum);
    };
    let degeneracy = e.iter().filter(|&&v| v <= e0 + degeneracy_tol).count();
    let next = e.iter().copied().filter(|&v| v > e0 + degeneracy_tol).min_by(|a, b| a.total_cmp(b));
    match next {
        Some(e1) => Ok(GapReport { ground_energy: e0, ground_degeneracy: degeneracy, gap: e1 - e0 }),
        None => Err(Error::DegenerateSpectrum),
    }
}

/// Low-lying levels of `Φ` in every magnetization sector, enough to certify
/// the ground energy, its degeneracy and the gap.
#[derive(Clone, Debug, PartialEq)]
pub struct LowSpectrum {
    /// Per sector, in the order of [`SectorBasis::all_magnetizations`].
    pub sectors: Vec<SpectrumReport>,
    pub gap: GapReport,
}

impl LowSpectrum {
    /// All computed levels merged and sorted.
    pub fn merged(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.sectors.iter().flat_map(|s| s.eigenvalues.iter().copied()).collect();
        all.sort_by(f64::total_cmp);
        all
    }
}

/// Computes the lowest levels sector by sector (in parallel), growing the
/// per-sector count until every sector has a level above the ground
/// multiplet or is exhausted. Each sector is assembled directly.
pub fn low_spectrum(phi: &Interaction, space: &SpinSpace, degeneracy_tol: f64, opts: LanczosOptions) -> Result<LowSpectrum> {
    let sectors = SectorBasis::all_magnetizations(space);
    let blocks: Vec<SparseOperator> = sectors.iter().map(|s| phi.assemble_in_sector(space, s)).collect::<Result<_>>()?;
    let mut want: Vec<usize> = blocks.iter().map(|b| 2.min(b.dim())).collect();
    loop {
        let reports: Vec<SpectrumReport> = blocks
            .par_iter()
            .zip(&want)
            .zip(&sectors)
            .map(|((b, &k), s)| Ok(block_spectrum(b, Levels::Lowest(k), false, opts)?.with_sector(s.label())))
            .collect::<Result<_>>()?;
        let e0 = reports.iter().map(|r| r.eigenvalues[0]).fold(f64::INFINITY, f64::min);
        let mut grow = false;
        for (i, r) in reports.iter().enumerate() {
            let top = *r.eigenvalues.last().unwrap();
            if top <= e0 + degeneracy_tol && want[i] < blocks[i].dim() {
                want[i] = (2 * want[i]).min(blocks[i].dim());
                grow = true;
            }
        }
        if !grow {
            let merged = SpectrumReport { eigenvalues: reports.iter().flat_map(|r| r.eigenvalues.clone()).collect(), eigenvectors: None, sector: None, residuals: vec![] };
            let gap = spectral_gap(&merged, degeneracy_tol)?;
            return Ok(LowSpectrum { sectors: reports, gap });
        }
    }
}

/// Whole spectrum as the union of the sector spectra, sorted.
pub fn spectrum_by_sectors(phi: &Interaction, space: &SpinSpace) -> Result<Vec<SpectrumReport>> {
    SectorBasis::all_magnetizations(space)
        .par_iter()
        .map(|s| Ok(full_spectrum(&phi.assemble_in_sector(space, s)?, false)?.with_sector(s.label())))
        .collect()
}
