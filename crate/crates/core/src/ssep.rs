//! Symmetric simple exclusion process on a weighted graph, its spectral gaps
//! per particle number, and its conjugacy to the spin-1/2 XXX chain.

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::hilbert::{LinearMap, SectorBasis, SparseOperator, SpinSpace};
use crate::lattice::{SpinGraph, TwiceSpin};
use crate::linalg::real;
use crate::models::Interaction;
use crate::spectral::{block_spectrum, dense_eigh, full_spectrum, spectral_gap, LanczosOptions, Levels, DEGENERACY_TOL};

/// Configurations of `n` particles on the vertices of a graph, as bitmasks
/// in increasing order.
#[derive(Clone, Debug, PartialEq)]
pub struct ExclusionSpace {
    graph: SpinGraph,
    n: usize,
    configs: Vec<u64>,
}

impl ExclusionSpace {
    pub fn new(graph: &SpinGraph, n: usize) -> Result<Self> {
        let v = graph.num_vertices();
        if v > 63 {
            return domain("exclusion spaces support at most 63 vertices");
        }
        if n > v {
            return domain(format!("{n} particles do not fit on {v} vertices"));
        }
        if let Some(e) = graph.edges().iter().find(|e| !(e.weight > 0.0)) {
            return domain(format!("rate on edge ({}, {}) must be positive", e.a, e.b));
        }
        Ok(ExclusionSpace { graph: graph.clone(), n, configs: combinations(v, n) })
    }

    pub fn graph(&self) -> &SpinGraph {
        &self.graph
    }

    pub fn particles(&self) -> usize {
        self.n
    }

    pub fn configs(&self) -> &[u64] {
        &self.configs
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn index_of(&self, eta: u64) -> Option<usize> {
        self.configs.binary_search(&eta).ok()
    }
}

/// All `v`-bit words with `n` ones, ascending (Gosper's hack).
fn combinations(v: usize, n: usize) -> Vec<u64> {
    if n == 0 {
        return vec![0];
    }
    let limit = 1u64 << v;
    let mut out = Vec::new();
    let mut x: u64 = (1u64 << n) - 1;
    while x < limit {
        out.push(x);
        let c = x & x.wrapping_neg();
        let r = x + c;
        x = (((r ^ x) >> 2) / c) | r;
    }
    out
}

/// `L f(η) = Σ_{xy} r_xy (f(η) - f(η^{xy}))` on `l²(Ω_n)`.
pub fn ssep_generator(space: &ExclusionSpace) -> Result<SparseOperator> {
    let mut trip = Vec::new();
    for (i, &eta) in space.configs.iter().enumerate() {
        let mut diag = 0.0;
        for e in space.graph.edges() {
            let (bx, by) = ((eta >> e.a) & 1, (eta >> e.b) & 1);
            if bx != by {
                let swapped = eta ^ (1 << e.a) ^ (1 << e.b);
                let j = space.index_of(swapped).expect("exchange preserves particle number");
                trip.push((i, j, real(-e.weight)));
                diag += e.weight;
            }
        }
        trip.push((i, i, real(diag)));
    }
    SparseOperator::from_triplets(space.len(), trip)?.into_hermitian()
}

/// `λ(n)` for one particle number.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectorGap {
    pub n: usize,
    pub dim: usize,
    pub lambda: f64,
    /// `‖L 1‖` for the uniform vector.
    pub stationary_defect: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorReport {
    pub gaps: Vec<SectorGap>,
    /// `max_n |λ(n) - λ(1)|`.
    pub aldous_margin: f64,
}

/// `λ(n)` for every `1 ≤ n ≤ |V| - 1`.
pub fn ssep_gaps(g: &SpinGraph) -> Result<GeneratorReport> {
    let v = g.num_vertices();
    if v < 2 {
        return domain("the exclusion process needs at least two vertices");
    }
    if !g.is_connected() {
        return domain("graph is disconnected, so lambda(1) = 0");
    }
    let gaps: Vec<SectorGap> = (1..v)
        .into_par_iter()
        .map(|n| {
            let space = ExclusionSpace::new(g, n)?;
            let l = ssep_generator(&space)?;
            let ones = vec![real(1.0); l.dim()];
            let stationary_defect = crate::linalg::norm(&l.apply_vec(&ones));
            let report = block_spectrum(&l, Levels::Lowest(2), false, LanczosOptions::default())?;
            let gap = spectral_gap(&report, DEGENERACY_TOL)?;
            if gap.ground_degeneracy != 1 || gap.ground_energy.abs() > 1e-9 {
                return Err(Error::Domain(format!("generator kernel at n = {n} is not one-dimensional")));
            }
            Ok(SectorGap { n, dim: space.len(), lambda: gap.gap, stationary_defect })
        })
        .collect::<Result<_>>()?;
    let l1 = gaps[0].lambda;
    let aldous_margin = gaps.iter().map(|s| (s.lambda - l1).abs()).fold(0.0, f64::max);
    Ok(GeneratorReport { gaps, aldous_margin })
}

/// `Σ_{xy} [-2 r_xy S_x·S_y + r_xy / 2]` on spin 1/2.
pub fn xxx_from_rates(g: &SpinGraph) -> Result<Interaction> {
    let spins = vec![TwiceSpin::HALF; g.num_vertices()];
    let s = crate::hilbert::SpinMatrices::new(TwiceSpin::HALF);
    let dot = s.dot(&s);
    let mut phi = Interaction::empty("xxx_from_rates", spins);
    for e in g.edges() {
        let term = &dot * real(-2.0 * e.weight) + crate::linalg::CMatrix::identity(4, 4) * real(e.weight / 2.0);
        phi.push(&[e.a, e.b], term)?;
    }
    Ok(phi)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConjugacyReport {
    /// `(n, largest eigenvalue deviation)`.
    pub per_sector: Vec<(usize, f64)>,
    pub max_deviation: f64,
}

/// Compares `spec(L on Ω_n)` with the spectrum of the rate-weighted XXX
/// chain on the sector `M = n - |V|/2`, for every `n`.
pub fn xxx_conjugacy_check(g: &SpinGraph, tol: f64) -> Result<ConjugacyReport> {
    g.require_connected()?;
    let v = g.num_vertices();
    let phi = xxx_from_rates(g)?;
    let spin_space = SpinSpace::uniform(v, TwiceSpin::HALF)?;
    let per_sector: Vec<(usize, f64)> = (0..=v)
        .into_par_iter()
        .map(|n| {
            let l = ssep_generator(&ExclusionSpace::new(g, n)?)?;
            let sector = SectorBasis::magnetization(&spin_space, 2 * n as i64 - v as i64)?;
            let h = phi.assemble_in_sector(&spin_space, &sector)?;
            let a = full_spectrum(&l, false)?.eigenvalues;
            let b = full_spectrum(&h, false)?.eigenvalues;
            if a.len() != b.len() {
                return Err(Error::Conjugacy(f64::INFINITY));
            }
            Ok((n, a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)))
        })
        .collect::<Result<_>>()?;
    let max_deviation = per_sector.iter().map(|p| p.1).fold(0.0, f64::max);
    if max_deviation > tol {
        return Err(Error::Conjugacy(max_deviation));
    }
    Ok(ConjugacyReport { per_sector, max_deviation })
}

/// `μ_t = e^{-tL} μ_0` for a symmetric generator.
pub fn semigroup_evolve(l: &SparseOperator, mu0: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return domain("evolution time must be nonnegative");
    }
    if mu0.len() != l.dim() {
        return domain("initial distribution has the wrong length");
    }
    if mu0.iter().any(|&p| p < 0.0) || (mu0.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return domain("initial vector is not a probability distribution");
    }
    if t == 0.0 {
        return Ok(mu0.to_vec());
    }
    let (values, vecs) = dense_eigh(&l.to_dense());
    let n = l.dim();
    let mut out = vec![0.0; n];
    for k in 0..n {
        let coef: num_complex::Complex64 = (0..n).map(|i| vecs[(i, k)].conj() * mu0[i]).sum();
        let w = coef * (-t * values[k]).exp();
        for (i, o) in out.iter_mut().enumerate() {
            *o += (vecs[(i, k)] * w).re;
        }
    }
    Ok(out)
}
