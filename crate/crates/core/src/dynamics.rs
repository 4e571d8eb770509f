//! Heisenberg dynamics `τ_t(A) = e^{itH} A e^{-itH}`, commutator growth
//! against the Lieb-Robinson bound, and ground-state correlations in
//! imaginary time against the exponential-clustering bound.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::hilbert::{embed_at, hermitian_unit_basis, LinearMap, SectorBasis, SectorLabel, SparseOperator, SpinSpace};
use crate::lattice::{SpinGraph, Vertex};
use crate::linalg::{axpy_neg, dot, norm, normal_norm, operator_norm, scale, CMatrix, ZERO};
use crate::models::Interaction;
use crate::spectral::{dense_eigh, extremal_eigs, low_spectrum, GapReport, LanczosOptions, DEGENERACY_TOL, DENSE_CUTOFF};

/// Full eigendecomposition `H = V diag(E) V*`, computed once and shared.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigensystem {
    pub fn new(h: &SparseOperator) -> Result<Self> {
        if h.dim() > DENSE_CUTOFF {
            return Err(Error::TooLarge { dim: h.dim(), cutoff: DENSE_CUTOFF });
        }
        let (values, vectors) = dense_eigh(&h.to_dense());
        Ok(Eigensystem { values, vectors })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V* A V`.
    pub fn to_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        self.vectors.adjoint() * a * &self.vectors
    }

    /// `V A V*`.
    pub fn from_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        &self.vectors * a * self.vectors.adjoint()
    }

    /// `τ_t` applied to an operator already in the eigenbasis:
    /// entries pick up `e^{i(E_m - E_n)t}`.
    pub fn evolve_in_eigenbasis(&self, a: &CMatrix, t: f64) -> CMatrix {
        let phases: Vec<C64> = self.values.iter().map(|&e| C64::from_polar(1.0, e * t)).collect();
        CMatrix::from_fn(a.nrows(), a.ncols(), |m, n| a[(m, n)] * phases[m] * phases[n].conj())
    }

    /// `τ_t(A)` in the computational basis.
    pub fn evolve(&self, a: &CMatrix, t: f64) -> CMatrix {
        if t == 0.0 {
            return a.clone();
        }
        self.from_eigenbasis(&self.evolve_in_eigenbasis(&self.to_eigenbasis(a), t))
    }
}

/// `τ_t(A) = U* A U` with `U = e^{-itH}`, by dense eigendecomposition.
pub fn evolve_observable(h: &SparseOperator, a: &SparseOperator, t: f64) -> Result<CMatrix> {
    if a.dim() != h.dim() {
        return domain("observable and Hamiltonian differ in dimension");
    }
    Ok(Eigensystem::new(h)?.evolve(&a.to_dense(), t))
}

/// `[A, M]` for sparse `A` and dense `M`.
fn sparse_dense_commutator(a: &SparseOperator, m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (r, c, v) in a.iter() {
        // (A M)[r, :] += v M[c, :]   and   (M A)[:, c] += v M[:, r]
        for j in 0..n {
            out[(r, j)] += v * m[(c, j)];
        }
        for i in 0..n {
            out[(i, c)] -= m[(i, r)] * v;
        }
    }
    out
}

/// Precomputed data for scanning `C̃_B(x, t)` over sites and times.
pub struct CommutatorScan<'a> {
    eig: &'a Eigensystem,
    b: CMatrix,
    b_eigen: CMatrix,
    probes: Vec<Vec<SparseOperator>>,
}

impl<'a> CommutatorScan<'a> {
    /// `b` is the full-space matrix of `B`. For every site the probe set is
    /// the unit-norm Hermitian basis of that site's matrix algebra.
    pub fn new(eig: &'a Eigensystem, space: &SpinSpace, b: &CMatrix) -> Result<Self> {
        if b.nrows() != eig.dim() {
            return domain("observable and eigensystem differ in dimension");
        }
        let probes = (0..space.num_sites())
            .map(|x| hermitian_unit_basis(space.site_dim(x)).into_iter().map(|m| embed_at(space, &[(x, m)])).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(CommutatorScan { eig, b: b.clone(), b_eigen: eig.to_eigenbasis(b), probes })
    }

    /// `τ_{-t}(B)`, shared by all sites at one time. Exact at `t = 0`.
    pub fn backward(&self, t: f64) -> CMatrix {
        if t == 0.0 {
            return self.b.clone();
        }
        self.eig.from_eigenbasis(&self.eig.evolve_in_eigenbasis(&self.b_eigen, -t))
    }

    /// `max_A ‖[τ_t(A), B]‖` over the probe set at `x`, using
    /// `‖[τ_t(A), B]‖ = ‖[A, τ_{-t}(B)]‖`. A lower bound on `C_B(x, t)`.
    pub fn growth_at(&self, x: Vertex, b_back: &CMatrix) -> f64 {
        self.probes[x].iter().map(|a| normal_norm(&sparse_dense_commutator(a, b_back), true)).fold(0.0, f64::max)
    }
}

/// `C̃_B(x, t)`: the largest `‖[τ_t(A), B]‖ / ‖A‖` over a unit-norm Hermitian
/// basis `A` of the site algebra at `x`.
pub fn commutator_growth(eig: &Eigensystem, space: &SpinSpace, b: &CMatrix, x: Vertex, t: f64) -> Result<f64> {
    if x >= space.num_sites() {
        return domain(format!("vertex {x} outside the space"));
    }
    let scan = CommutatorScan::new(eig, space, b)?;
    Ok(scan.growth_at(x, &scan.backward(t)))
}

/// Right-hand sides of the Lieb-Robinson bounds for a given `‖Φ‖_λ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LrBound {
    pub lambda: f64,
    pub phi_norm: f64,
}

impl LrBound {
    pub fn new(lambda: f64, phi_norm: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return domain("lambda must be positive");
        }
        if !(phi_norm >= 0.0) || !phi_norm.is_finite() {
            return domain("the interaction norm must be finite and nonnegative");
        }
        Ok(LrBound { lambda, phi_norm })
    }

    fn growth(&self, t: f64) -> f64 {
        (2.0 * t.abs() * self.phi_norm).exp()
    }

    /// `e^{2|t|‖Φ‖_λ} C_B(x,0) + Σ_{y≠x} e^{-λ d(x,y)} (e^{2|t|‖Φ‖_λ} - 1) C_B(y,0)`,
    /// with `profile[y] = C_B(y, 0)`.
    pub fn theorem(&self, g: &SpinGraph, x: Vertex, profile: &[f64], t: f64) -> Result<f64> {
        if profile.len() != g.num_vertices() {
            return domain("profile length differs from the vertex count");
        }
        let e = self.growth(t);
        // `e` may overflow to infinity; zero profile entries must not give NaN.
        let mut total = if profile[x] == 0.0 { 0.0 } else { e * profile[x] };
        for (y, &c) in profile.iter().enumerate() {
            if y == x || c == 0.0 {
                continue;
            }
            let d = g.distance(x, y)?.finite().ok_or_else(|| Error::Domain("bound needs a connected graph".into()))?;
            total += (-self.lambda * d as f64).exp() * (e - 1.0) * c;
        }
        Ok(total)
    }

    /// `2|Y| ‖A‖ ‖B‖ (e^{2|t|‖Φ‖_λ} - 1) e^{-λ d(x,Y)}`, for `x ∉ Y`.
    pub fn corollary(&self, support_size: usize, norm_a: f64, norm_b: f64, distance: usize, t: f64) -> f64 {
        2.0 * support_size as f64 * norm_a * norm_b * (self.growth(t) - 1.0) * (-self.lambda * distance as f64).exp()
    }

    /// `N^{2|X|} ‖A‖ Σ_{x∈X} C_B(x, t)` for `A` supported on `X`, with each
    /// `C_B(x, t)` replaced by its theorem bound.
    pub fn multi_site(&self, g: &SpinGraph, n_max: usize, support: &[Vertex], norm_a: f64, profile: &[f64], t: f64) -> Result<f64> {
        let mut sum = 0.0;
        for &x in support {
            sum += self.theorem(g, x, profile, t)?;
        }
        Ok((n_max as f64).powi(2 * support.len() as i32) * norm_a * sum)
    }
}

/// `C_B(y, 0) ≤ 2 ‖B‖ χ_Y(y)`.
pub fn default_profile(num_vertices: usize, support: &[Vertex], norm_b: f64) -> Vec<f64> {
    let mut p = vec![0.0; num_vertices];
    for &y in support {
        p[y] = 2.0 * norm_b;
    }
    p
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LightconeRow {
    pub x: Vertex,
    pub t: f64,
    pub measured: f64,
    pub bound_thm1: f64,
    /// Only defined for `x ∉ Y`.
    pub bound_corollary: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LightconeGrid {
    pub support: Vec<Vertex>,
    pub lambda: f64,
    pub phi_norm: f64,
    pub rows: Vec<LightconeRow>,
}

impl LightconeGrid {
    /// Grid points with `measured > bound + tol`.
    pub fn violations(&self, tol: f64) -> usize {
        self.rows.iter().filter(|r| r.measured > r.bound_thm1 + tol).count()
    }
}

/// Measures `C̃_B(x, t)` for all `x` and the given times and evaluates the
/// bounds next to it. `b_local` is `B` as a matrix on its support (canonical
/// Kronecker order, sorted support).
pub fn lightcone(phi: &Interaction, g: &SpinGraph, support: &[Vertex], b_local: &CMatrix, times: &[f64], lambda: f64) -> Result<LightconeGrid> {
    g.require_connected()?;
    let space = phi.space()?;
    let phi_norm = phi.lambda_norm(lambda, g)?;
    let bound = LrBound::new(lambda, phi_norm)?;
    let mut sorted = support.to_vec();
    sorted.sort_unstable();
    if sorted != support {
        return domain("observable support must be sorted");
    }
    let b = embed_local(&space, support, b_local)?.to_dense();
    let norm_b = operator_norm(b_local);
    let profile = default_profile(g.num_vertices(), support, norm_b);
    let eig = Eigensystem::new(&phi.assemble(&space)?)?;
    let scan = CommutatorScan::new(&eig, &space, &b)?;
    let per_time: Vec<Vec<LightconeRow>> = times
        .par_iter()
        .map(|&t| {
            let back = scan.backward(t);
            (0..g.num_vertices())
                .map(|x| {
                    let measured = scan.growth_at(x, &back);
                    let bound_thm1 = bound.theorem(g, x, &profile, t)?;
                    let bound_corollary = if support.contains(&x) {
                        None
                    } else {
                        let d = g.set_distance(x, support)?.finite().expect("connected");
                        Some(bound.corollary(support.len(), 1.0, norm_b, d, t))
                    };
                    Ok(LightconeRow { x, t, measured, bound_thm1, bound_corollary })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(LightconeGrid { support: support.to_vec(), lambda, phi_norm, rows: per_time.into_iter().flatten().collect() })
}

/// Embeds a Hermitian matrix given on a sorted support as a full-space operator.
pub fn embed_local(space: &SpinSpace, support: &[Vertex], m: &CMatrix) -> Result<SparseOperator> {
    crate::models::custom(space.spins().to_vec(), vec![(support.to_vec(), m.clone())])?.assemble(space)
}

/// `μ = γλ / (4‖Φ‖_λ + γ)`.
pub fn clustering_mu(gamma: f64, lambda: f64, phi_norm: f64) -> Result<f64> {
    if !(gamma > 0.0 && lambda > 0.0 && phi_norm > 0.0) {
        return domain("gamma, lambda and the interaction norm must be positive");
    }
    Ok(gamma * lambda / (4.0 * phi_norm + gamma))
}

/// Upper end of the admissible window `0 ≤ γb ≤ 2μ d`.
pub fn b_max(mu: f64, d: usize, gamma: f64) -> f64 {
    2.0 * mu * d as f64 / gamma
}

/// `e^{-μ d (1 + γ²b²/(4μ²d²))}`, the distance and time dependence of the
/// clustering bound (without the constant).
pub fn decay_shape(mu: f64, gamma: f64, d: usize, b: f64) -> f64 {
    let d = d as f64;
    (-mu * d * (1.0 + gamma * gamma * b * b / (4.0 * mu * mu * d * d))).exp()
}

/// A unique ground state found by Lanczos in its magnetization sector.
#[derive(Clone, Debug)]
pub struct GroundState {
    pub space: SpinSpace,
    pub sector: SectorBasis,
    pub block: SparseOperator,
    pub energy: f64,
    /// Sector coordinates, unit norm.
    pub vector: Vec<C64>,
    pub gap: GapReport,
}

impl GroundState {
    /// Errors with the degeneracy if the ground state is not unique.
    pub fn find(phi: &Interaction, opts: LanczosOptions) -> Result<Self> {
        let space = phi.space()?;
        let low = low_spectrum(phi, &space, DEGENERACY_TOL, opts)?;
        if low.gap.ground_degeneracy != 1 {
            return Err(Error::GroundDegeneracy(low.gap.ground_degeneracy));
        }
        let e0 = low.gap.ground_energy;
        let label = low
            .sectors
            .iter()
            .find(|r| (r.eigenvalues[0] - e0).abs() <= DEGENERACY_TOL)
            .and_then(|r| r.sector)
            .expect("some sector holds the ground energy");
        let SectorLabel::Magnetization { twice_m } = label else { unreachable!("sectors are magnetizations") };
        let sector = SectorBasis::magnetization(&space, twice_m)?;
        let block = phi.assemble_in_sector(&space, &sector)?;
        let r = extremal_eigs(&block, 1, opts)?;
        let vector = r.vector(0).expect("Lanczos returns vectors");
        Ok(GroundState { space, sector, block, energy: r.eigenvalues[0], vector, gap: low.gap })
    }

    /// A local operator restricted to the ground-state sector. It must
    /// conserve total `S³`.
    pub fn local_operator(&self, x: Vertex, m: &CMatrix) -> Result<SparseOperator> {
        embed_at(&self.space, &[(x, m.clone())])?.restrict(&self.sector, 1e-12)
    }

    pub fn expectation(&self, op: &SparseOperator) -> C64 {
        dot(&self.vector, &op.apply_vec(&self.vector))
    }

    /// `e^{-b(H - E_0)} v` for every `b`, from one Krylov space of `v`.
    pub fn imaginary_time(&self, v: &[C64], bs: &[f64], krylov: usize) -> Vec<Vec<C64>> {
        krylov_exp(&self.block, v, self.energy, bs, krylov)
    }
}

/// Krylov approximation of `e^{-b(H - e0)} v` for several `b`.
pub fn krylov_exp(h: &SparseOperator, v: &[C64], e0: f64, bs: &[f64], krylov: usize) -> Vec<Vec<C64>> {
    let n = v.len();
    let beta0 = norm(v);
    if beta0 == 0.0 {
        return bs.iter().map(|_| vec![ZERO; n]).collect();
    }
    let mut q0 = v.to_vec();
    scale(&mut q0, 1.0 / beta0);
    let mut q = vec![q0];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let m = krylov.min(n);
    for j in 0..m {
        let mut w = h.apply_vec(&q[j]);
        alpha.push(dot(&q[j], &w).re);
        for _ in 0..2 {
            for qi in &q {
                let c = dot(qi, &w);
                axpy_neg(&mut w, c, qi);
            }
        }
        let b = norm(&w);
        if j + 1 == m || b < 1e-12 {
            break;
        }
        beta.push(b);
        scale(&mut w, 1.0 / b);
        q.push(w);
    }
    let k = alpha.len();
    let t = DMatrix::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i] - e0
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    bs.iter()
        .map(|&b| {
            // e^{-bT} e_1 = S e^{-bΘ} S^T e_1
            let coef: DVector<f64> = DVector::from_fn(k, |i, _| (-b * eig.eigenvalues[i]).exp() * eig.eigenvectors[(0, i)]);
            let y = &eig.eigenvectors * coef;
            let mut out = vec![ZERO; n];
            for (yi, qi) in y.iter().zip(&q) {
                for (o, x) in out.iter_mut().zip(qi) {
                    *o += x * (beta0 * yi);
                }
            }
            out
        })
        .collect()
}

/// `⟨Ω, A τ_{ib}(B) Ω⟩ = ⟨AΩ, e^{-b(H - E_0)} B̃ Ω⟩` with `B̃ = B - ⟨Ω,BΩ⟩`,
/// by full eigendecomposition of the sector block. Reference route for small
/// systems.
pub fn ground_correlation_dense(gs: &GroundState, a: &SparseOperator, b_op: &SparseOperator, b: f64) -> Result<C64> {
    if !(b >= 0.0) {
        return domain("imaginary time must be nonnegative");
    }
    let eig = Eigensystem::new(&gs.block)?;
    let mean_b = gs.expectation(b_op);
    let mut bv = b_op.apply_vec(&gs.vector);
    axpy_neg(&mut bv, mean_b, &gs.vector);
    let av = a.apply_vec(&gs.vector);
    let mut total = ZERO;
    for k in 0..eig.dim() {
        let col: Vec<C64> = eig.vectors.column(k).iter().copied().collect();
        total += dot(&av, &col) * dot(&col, &bv) * (-b * (eig.values[k] - gs.energy)).exp();
    }
    Ok(total)
}

/// The same correlation by Krylov evaluation of the imaginary-time
/// propagator; scales to sectors far beyond the dense cutoff.
pub fn ground_correlation(gs: &GroundState, a: &SparseOperator, b_op: &SparseOperator, b: f64) -> Result<C64> {
    if !(b >= 0.0) {
        return domain("imaginary time must be nonnegative");
    }
    let mean_b = gs.expectation(b_op);
    let mut bv = b_op.apply_vec(&gs.vector);
    axpy_neg(&mut bv, mean_b, &gs.vector);
    let av = a.apply_vec(&gs.vector);
    let evolved = gs.imaginary_time(&bv, &[b], KRYLOV_CORRELATION);
    Ok(dot(&av, &evolved[0]))
}

/// Krylov dimension for imaginary-time correlations.
pub const KRYLOV_CORRELATION: usize = 120;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterRow {
    pub x: Vertex,
    pub y: Vertex,
    pub d: usize,
    pub b: f64,
    pub corr_abs: f64,
    /// `c · e^{-μd(1 + γ²b²/(4μ²d²))}` with the fitted `c`.
    pub bound_decay: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusteringReport {
    pub gamma: f64,
    pub lambda: f64,
    pub phi_norm: f64,
    pub mu: f64,
    /// Smallest constant making the bound hold at `d = 1`.
    pub c_fit: f64,
    /// Points inside the window `0 ≤ γb ≤ 2μd`.
    pub rows: Vec<ClusterRow>,
    /// Rows at `d ≥ 2` exceeding the bound.
    pub violations: usize,
    /// Largest `|corr(b=0) - (⟨AB⟩ - ⟨A⟩⟨B⟩)|`.
    pub zero_b_deviation: f64,
    /// `(b, max |corr|, ‖A‖‖B‖e^{-γb})` beyond the window.
    pub large_b: Vec<(f64, f64, f64)>,
}

impl ClusteringReport {
    pub fn large_b_holds(&self) -> bool {
        self.large_b.iter().all(|&(_, c, bound)| c <= bound * (1.0 + 1e-9) + 1e-12)
    }
}

/// Tabulates `|⟨Ω, A_x τ_{ib}(B_y) Ω⟩|` for all pairs `x < y` with
/// `A_x = B_x = obs - ⟨Ω, obs_x Ω⟩` at each site, over `b_points` values of
/// `b` spanning each pair's window, and checks the decay bound.
pub fn clustering_report(phi: &Interaction, g: &SpinGraph, obs: &CMatrix, lambda: f64, b_points: usize, opts: LanczosOptions) -> Result<ClusteringReport> {
    g.require_connected()?;
    if b_points < 2 {
        return domain("need at least two b values per pair");
    }
    let gs = GroundState::find(phi, opts)?;
    let gamma = gs.gap.gap;
    let phi_norm = phi.lambda_norm(lambda, g)?;
    let mu = clustering_mu(gamma, lambda, phi_norm)?;
    let v = g.num_vertices();
    let ops: Vec<SparseOperator> = (0..v).map(|x| gs.local_operator(x, obs)).collect::<Result<_>>()?;
    let means: Vec<C64> = ops.iter().map(|o| gs.expectation(o)).collect();
    // Centered vectors B̃_x Ω; A_x = B_x so A_xΩ uses the same centering.
    let centered: Vec<Vec<C64>> = ops
        .iter()
        .zip(&means)
        .map(|(o, &m)| {
            let mut w = o.apply_vec(&gs.vector);
            axpy_neg(&mut w, m, &gs.vector);
            w
        })
        .collect();
    let raw: Vec<Vec<C64>> = ops.iter().map(|o| o.apply_vec(&gs.vector)).collect();
    let norm_centered = (0..v)
        .map(|x| operator_norm(&(obs - CMatrix::identity(obs.nrows(), obs.ncols()) * means[x])))
        .collect::<Vec<_>>();
    let large_bs: Vec<f64> = [1.0, 2.0, 4.0].iter().map(|k| k / gamma).collect();
    let mut rows = Vec::new();
    let mut zero_b_deviation: f64 = 0.0;
    let mut large_b: Vec<(f64, f64, f64)> = large_bs.iter().map(|&b| (b, 0.0, 0.0)).collect();
    let per_y: Vec<(Vec<ClusterRow>, f64, Vec<f64>)> = (0..v)
        .into_par_iter()
        .map(|y| {
            let pairs: Vec<(Vertex, usize)> = (0..y).map(|x| (x, g.distance(x, y).unwrap().finite().unwrap())).collect();
            let mut bs: Vec<f64> = Vec::new();
            for &(_, d) in &pairs {
                let top = b_max(mu, d, gamma);
                bs.extend((0..b_points).map(|k| top * k as f64 / (b_points - 1) as f64));
            }
            bs.extend(&large_bs);
            let evolved = gs.imaginary_time(&centered[y], &bs, KRYLOV_CORRELATION);
            let mut out = Vec::new();
            let mut zero_dev: f64 = 0.0;
            let mut big = vec![0.0f64; large_bs.len()];
            let mut k = 0;
            for &(x, d) in &pairs {
                for _ in 0..b_points {
                    let c = dot(&centered[x], &evolved[k]);
                    if bs[k] == 0.0 {
                        let truncated = dot(&raw[x], &raw[y]) - means[x].conj() * means[y];
                        zero_dev = zero_dev.max((c - truncated).norm());
                    }
                    out.push(ClusterRow { x, y, d, b: bs[k], corr_abs: c.norm(), bound_decay: 0.0 });
                    k += 1;
                }
            }
            for (j, _) in large_bs.iter().enumerate() {
                for &(x, _) in &pairs {
                    big[j] = big[j].max(dot(&centered[x], &evolved[k + j]).norm());
                }
            }
            (out, zero_dev, big)
        })
        .collect();
    for (out, dev, big) in per_y {
        rows.extend(out);
        zero_b_deviation = zero_b_deviation.max(dev);
        for (slot, value) in large_b.iter_mut().zip(big) {
            slot.1 = slot.1.max(value);
        }
    }
    let norm_ab = norm_centered.iter().fold(0.0f64, |a, &b| a.max(b)).powi(2);
    for slot in &mut large_b {
        slot.2 = norm_ab * (-gamma * slot.0).exp();
    }
    let c_fit = rows
        .iter()
        .filter(|r| r.d == 1)
        .map(|r| r.corr_abs / decay_shape(mu, gamma, r.d, r.b))
        .fold(0.0, f64::max);
    let mut violations = 0;
    for r in &mut rows {
        r.bound_decay = c_fit * decay_shape(mu, gamma, r.d, r.b);
        if r.d >= 2 && r.corr_abs > r.bound_decay * (1.0 + 1e-9) + 1e-14 {
            violations += 1;
        }
    }
    rows.sort_by_key(|r| (r.x, r.y, r.b.to_bits()));
    Ok(ClusteringReport { gamma, lambda, phi_norm, mu, c_fit, rows, violations, zero_b_deviation, large_b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::SpinMatrices;
    use crate::lattice::TwiceSpin;
    use crate::linalg::{max_abs_diff, real};
    use crate::models::{aklt, heisenberg};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chain(l: usize) -> (Interaction, SpinGraph, Eigensystem, SpinSpace) {
        let g = SpinGraph::path(l, 1.0).unwrap();
        let phi = heisenberg(&g);
        let space = SpinSpace::from_graph(&g);
        let eig = Eigensystem::new(&phi.assemble(&space).unwrap()).unwrap();
        (phi, g, eig, space)
    }

    fn random_local(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        let m = CMatrix::from_fn(n, n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        &m + m.adjoint()
    }

    #[test]
    fn evolution_identities() {
        let (phi, _, eig, space) = chain(5);
        let h = phi.assemble(&space).unwrap().to_dense();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for x in 0..5 {
            let a = embed_at(&space, &[(x, random_local(&mut rng, 2))]).unwrap().to_dense();
            assert_eq!(eig.evolve(&a, 0.0), a);
            let na = operator_norm(&a);
            for t in [0.1, 1.0, 10.0] {
                let at = eig.evolve(&a, t);
                assert!((operator_norm(&at) - na).abs() < 1e-10);
                assert!(max_abs_diff(&eig.evolve(&at, -t), &a) < 1e-10);
                assert!(max_abs_diff(&eig.evolve(&eig.evolve(&a, 0.3), t), &eig.evolve(&a, t + 0.3)) < 1e-10);
            }
        }
        assert!(max_abs_diff(&eig.evolve(&h, 2.5), &h) < 1e-10);
    }

    #[test]
    fn evolution_matches_small_oracle() {
        // One spin 1/2 in a field: H = S³, τ_t(S¹) = cos t S¹ - sin t S².
        let s = SpinMatrices::new(TwiceSpin::HALF);
        let h = SparseOperator::from_dense(&s.s3).unwrap().into_hermitian().unwrap();
        let a = SparseOperator::from_dense(&s.s1).unwrap();
        for t in [0.3, 1.7] {
            let got = evolve_observable(&h, &a, t).unwrap();
            let want = &s.s1 * real(t.cos()) - &s.s2 * real(t.sin());
            assert!(max_abs_diff(&got, &want) < 1e-12);
        }
    }

    #[test]
    fn growth_at_time_zero() {
        let (_, _, eig, space) = chain(4);
        let sigma3 = SpinMatrices::new(TwiceSpin::HALF).s3 * real(2.0);
        let b = embed_at(&space, &[(2, sigma3)]).unwrap().to_dense();
        assert!((commutator_growth(&eig, &space, &b, 2, 0.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(commutator_growth(&eig, &space, &b, 0, 0.0).unwrap() < 1e-12);
        assert!(commutator_growth(&eig, &space, &b, 0, 0.5).unwrap() > 1e-6);
    }

    #[test]
    fn commutator_identity_matches_forward_evolution() {
        let (_, _, eig, space) = chain(4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = embed_at(&space, &[(3, random_local(&mut rng, 2))]).unwrap().to_dense();
        let scan = CommutatorScan::new(&eig, &space, &b).unwrap();
        let t = 0.7;
        let back = scan.backward(t);
        for x in 0..4 {
            let direct = hermitian_unit_basis(2)
                .into_iter()
                .map(|m| {
                    let a = embed_at(&space, &[(x, m)]).unwrap().to_dense();
                    let at = eig.evolve(&a, t);
                    operator_norm(&(&at * &b - &b * &at))
                })
                .fold(0.0, f64::max);
            assert!((scan.growth_at(x, &back) - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn bound_forms() {
        let g = SpinGraph::path(8, 1.0).unwrap();
        let e = std::f64::consts::E;
        let lr = LrBound::new(1.0, 48.0 * e).unwrap();
        let profile = default_profile(8, &[4], 1.0);
        assert_eq!(lr.corollary(1, 1.0, 1.0, 3, 0.0), 0.0);
        assert_eq!(lr.theorem(&g, 4, &profile, 0.0).unwrap(), 2.0);
        assert_eq!(lr.theorem(&g, 1, &profile, 0.0).unwrap(), 0.0);
        // Independent evaluation of 2(e^{0.96e} - 1)e^{-3}.
        let x: f64 = 0.96 * e;
        let mut exp_x = 1.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= x / k as f64;
            exp_x += term;
        }
        let oracle = 2.0 * (exp_x - 1.0) / (e * e * e);
        assert!((lr.corollary(1, 1.0, 1.0, 3, 0.01) - oracle).abs() < 1e-12);
        assert!((oracle - 1.2536).abs() < 1e-3);
        assert!(LrBound::new(0.0, 1.0).is_err());
        let ms = lr.multi_site(&g, 2, &[0, 1], 1.0, &profile, 0.01).unwrap();
        let single = lr.theorem(&g, 0, &profile, 0.01).unwrap() + lr.theorem(&g, 1, &profile, 0.01).unwrap();
        assert!((ms - 16.0 * single).abs() < 1e-12);
    }

    #[test]
    fn mu_formula() {
        let e = std::f64::consts::E;
        let mu = clustering_mu(1.0, 1.0, 48.0 * e).unwrap();
        assert!((mu - 1.0 / (192.0 * e + 1.0)).abs() < 1e-15);
        assert!((mu - 1.9124e-3).abs() < 1e-7);
        assert!((clustering_mu(2.0, 1.0, 10.0).unwrap() - 2.0 / 42.0).abs() < 1e-15);
        assert!((clustering_mu(1e12, 0.7, 3.0).unwrap() - 0.7).abs() < 1e-9);
        assert!(clustering_mu(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn bound_overflow_is_infinite_not_nan() {
        let g = SpinGraph::path(3, 1.0).unwrap();
        let lr = LrBound::new(1.0, 500.0).unwrap();
        let profile = default_profile(3, &[0], 1.0);
        assert_eq!(lr.theorem(&g, 2, &profile, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(lr.theorem(&g, 2, &profile, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn lightcone_small_chain() {
        let g = SpinGraph::path(6, 1.0).unwrap();
        let phi = heisenberg(&g);
        let sigma3 = SpinMatrices::new(TwiceSpin::HALF).s3 * real(2.0);
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.2).collect();
        for lambda in [0.5, 1.0] {
            let grid = lightcone(&phi, &g, &[3], &sigma3, &times, lambda).unwrap();
            assert_eq!(grid.violations(1e-9), 0);
            for r in grid.rows.iter().filter(|r| r.t == 0.0 && r.x != 3) {
                assert_eq!(r.measured, 0.0);
                assert_eq!(r.bound_corollary, Some(0.0));
            }
        }
    }

    #[test]
    fn lightcone_spin_one() {
        let g = SpinGraph::path(4, 1.0).unwrap().with_uniform_spin(TwiceSpin::ONE);
        let phi = heisenberg(&g);
        let s3 = SpinMatrices::new(TwiceSpin::ONE).s3;
        let grid = lightcone(&phi, &g, &[1], &s3, &[0.0, 0.5, 1.0, 2.0], 1.0).unwrap();
        assert_eq!(grid.violations(1e-9), 0);
    }

    #[test]
    fn krylov_correlation_matches_dense() {
        let phi = aklt(6, true).unwrap();
        let gs = GroundState::find(&phi, LanczosOptions::default()).unwrap();
        assert!(gs.energy.abs() < 1e-10);
        let s3 = SpinMatrices::new(TwiceSpin::ONE).s3;
        let a = gs.local_operator(0, &s3).unwrap();
        for y in 1..6 {
            let b_op = gs.local_operator(y, &s3).unwrap();
            for b in [0.0, 0.01, 0.5, 3.0] {
                let k = ground_correlation(&gs, &a, &b_op, b).unwrap();
                let d = ground_correlation_dense(&gs, &a, &b_op, b).unwrap();
                assert!((k - d).norm() < 1e-10, "y={y} b={b}: {k} vs {d}");
            }
            // b = 0 is the truncated correlation, real for Hermitian A = B family.
            let c0 = ground_correlation(&gs, &a, &b_op, 0.0).unwrap();
            assert!(c0.im.abs() < 1e-10);
        }
    }

    #[test]
    fn degenerate_ground_state_is_rejected() {
        let phi = aklt(4, false).unwrap();
        assert!(matches!(GroundState::find(&phi, LanczosOptions::default()), Err(Error::GroundDegeneracy(4))));
    }

    #[test]
    fn clustering_on_small_ring() {
        let g = SpinGraph::ring(6, 1.0).unwrap().with_uniform_spin(TwiceSpin::ONE);
        let phi = aklt(6, true).unwrap();
        let s3 = SpinMatrices::new(TwiceSpin::ONE).s3;
        let r = clustering_report(&phi, &g, &s3, 1.0, 5, LanczosOptions::default()).unwrap();
        assert!(r.gamma > 0.1);
        assert_eq!(r.violations, 0);
        assert!(r.zero_b_deviation < 1e-10);
        assert!(r.large_b_holds());
        for row in &r.rows {
            assert!(r.gamma * row.b <= 2.0 * r.mu * row.d as f64 * (1.0 + 1e-12));
        }
    }
}
