//! Finite-size probes of gap stability for frustration-free models:
//! the frustration-free check, relative-bound constants of a perturbation,
//! and gap-versus-coupling sweeps.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::dynamics::GroundState;
use crate::error::{domain, Error, Result};
use crate::hilbert::LinearMap;
use crate::linalg::{dot, hermitian_deviation, operator_norm, CMatrix};
use crate::models::Interaction;
use crate::spectral::{dense_eigh, extremal_eigs, low_spectrum, LanczosOptions, LowSpectrum, DEGENERACY_TOL};

/// Tolerance for `H ≥ 0`, `HΩ = 0` and kernel detection.
pub const ZERO_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct FrustrationFreeReport {
    pub ground_energy: f64,
    pub ground_degeneracy: usize,
    /// `H ≥ 0` up to [`ZERO_TOL`].
    pub nonnegative: bool,
    /// The ground energy is zero.
    pub zero_energy: bool,
    /// Largest `⟨Ω, Φ(X) Ω⟩` over the terms; zero for a frustration-free
    /// ground state. `None` when the ground state is degenerate.
    pub max_term_energy: Option<f64>,
    /// Largest `c` with `H ≥ c(1 - |Ω⟩⟨Ω|)`: the first excitation energy
    /// above a unique zero-energy ground state.
    pub c: f64,
    pub v0_size: usize,
    /// `c ≥ |V₀|`.
    pub a0_holds: bool,
}

/// Checks `H ≥ 0`, `HΩ = 0` and the size of the excitation gap against
/// `|V₀|`. With `require_unique`, a degenerate zero-energy space is an error.
pub fn frustration_free_check(phi: &Interaction, v0_size: usize, require_unique: bool) -> Result<FrustrationFreeReport> {
    let space = phi.space()?;
    let opts = LanczosOptions::default();
    let low = low_spectrum(phi, &space, DEGENERACY_TOL, opts)?;
    let e0 = low.gap.ground_energy;
    let zero_energy = e0.abs() <= ZERO_TOL;
    if require_unique && zero_energy && low.gap.ground_degeneracy != 1 {
        return Err(Error::GroundDegeneracy(low.gap.ground_degeneracy));
    }
    let max_term_energy = if low.gap.ground_degeneracy == 1 {
        let gs = GroundState::find(phi, opts)?;
        let full = gs.sector.embed_vector(&gs.vector);
        let mut worst = 0.0f64;
        for term in phi.grouped() {
            let op = crate::models::custom(phi.spins().to_vec(), vec![(term.support().to_vec(), term.matrix().clone())])?.assemble(&space)?;
            worst = worst.max(dot(&full, &op.apply_vec(&full)).re.abs());
        }
        Some(worst)
    } else {
        None
    };
    let c = if zero_energy && low.gap.ground_degeneracy == 1 { low.gap.gap } else { 0.0 };
    Ok(FrustrationFreeReport {
        ground_energy: e0,
        ground_degeneracy: low.gap.ground_degeneracy,
        nonnegative: e0 >= -ZERO_TOL,
        zero_energy,
        max_term_energy,
        c,
        v0_size,
        a0_holds: c >= v0_size as f64,
    })
}

/// Smallest `α` with `|⟨ψ, φψ⟩| ≤ α ‖h^{1/2}ψ‖²` for all `ψ`: infinite unless
/// `φ` vanishes on `ker h` (including its off-diagonal blocks), otherwise
/// the spectral radius of `h^{-1/2} φ h^{-1/2}` on `range(h)`.
pub fn relative_bound_alpha(phi: &CMatrix, h: &CMatrix) -> Result<f64> {
    if phi.shape() != h.shape() || !phi.is_square() {
        return domain("matrices must be square and of equal size");
    }
    let scale = operator_norm(h).max(operator_norm(phi)).max(1.0);
    if hermitian_deviation(phi) > 1e-12 * scale || hermitian_deviation(h) > 1e-12 * scale {
        return domain("relative bound needs Hermitian matrices");
    }
    let (values, vectors) = dense_eigh(h);
    let tol = ZERO_TOL * scale;
    if values.first().is_some_and(|&v| v < -tol) {
        return domain("h must be positive semidefinite");
    }
    let kernel: Vec<usize> = (0..values.len()).filter(|&k| values[k] <= tol).collect();
    let range: Vec<usize> = (0..values.len()).filter(|&k| values[k] > tol).collect();
    if !kernel.is_empty() {
        let vk = vectors.select_columns(&kernel);
        if operator_norm(&(phi * vk)) > tol {
            return Ok(f64::INFINITY);
        }
    }
    if range.is_empty() {
        return Ok(0.0);
    }
    let vr = vectors.select_columns(&range);
    let inv_sqrt: Vec<f64> = range.iter().map(|&k| values[k].sqrt().recip()).collect();
    let m = vr.adjoint() * phi * &vr;
    let pencil = CMatrix::from_fn(range.len(), range.len(), |i, j| m[(i, j)] * (inv_sqrt[i] * inv_sqrt[j]));
    let (ev, _) = dense_eigh(&pencil);
    Ok(ev.iter().fold(0.0f64, |a, &e| a.max(e.abs())))
}

/// `β = max_x ‖φ^(b)_x‖` over the bounded part of a user-declared split.
pub fn beta_bounded(terms: &[CMatrix]) -> f64 {
    terms.iter().map(operator_norm).fold(0.0, f64::max)
}

/// Merged low levels that are exact lowest eigenvalues of the whole
/// Hamiltonian: everything below the top computed level of every sector
/// whose spectrum was truncated.
pub fn certified_levels(low: &LowSpectrum, sector_dims: &[usize]) -> Vec<f64> {
    let ceiling = low
        .sectors
        .iter()
        .zip(sector_dims)
        .filter(|(r, &d)| r.len() < d)
        .map(|(r, _)| *r.eigenvalues.last().unwrap())
        .fold(f64::INFINITY, f64::min);
    let mut all = low.merged();
    all.retain(|&e| e <= ceiling);
    all
}

/// `‖O‖` for a Hermitian operator, from both ends of its spectrum.
pub fn hermitian_norm(phi: &Interaction, opts: LanczosOptions) -> Result<f64> {
    let space = phi.space()?;
    let op = phi.assemble(&space)?;
    if op.dim() <= crate::spectral::SMALL_SECTOR {
        let (ev, _) = dense_eigh(&op.to_dense());
        return Ok(ev.iter().fold(0.0f64, |a, &e| a.max(e.abs())));
    }
    let low = extremal_eigs(&op, 1, opts)?.eigenvalues[0];
    let high = -extremal_eigs(&op.scaled(crate::linalg::real(-1.0)), 1, opts)?.eigenvalues[0];
    Ok(low.abs().max(high.abs()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub l: usize,
    pub lambda: f64,
    pub ground_energy: f64,
    pub degeneracy: usize,
    pub gap: f64,
    /// Certified lowest levels, ascending.
    pub levels: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilitySweep {
    pub lambdas: Vec<f64>,
    pub ls: Vec<usize>,
    /// `‖Σ_x Φ_x‖` per `L`.
    pub perturbation_norms: BTreeMap<usize, f64>,
    /// Ordered by `L`, then by `λ` in grid order.
    pub points: Vec<SweepPoint>,
}

impl StabilitySweep {
    pub fn point(&self, l: usize, lambda: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.l == l && p.lambda == lambda)
    }

    fn baseline(&self, l: usize) -> Option<&SweepPoint> {
        self.point(l, 0.0)
    }

    /// Largest `|E_i(λ) - E_i(0)| - |λ|‖ΣΦ‖` over certified levels; `≤ 0`
    /// when the Weyl inequality holds everywhere.
    pub fn weyl_level_excess(&self) -> Option<f64> {
        let mut worst = f64::NEG_INFINITY;
        for p in &self.points {
            let base = self.baseline(p.l)?;
            let norm = self.perturbation_norms[&p.l];
            for (a, b) in p.levels.iter().zip(&base.levels) {
                worst = worst.max((a - b).abs() - p.lambda.abs() * norm);
            }
        }
        Some(worst)
    }

    /// Largest `|gap(λ) - gap(0)| - 2|λ|‖ΣΦ‖` over points with a unique
    /// ground state at both couplings.
    pub fn weyl_gap_excess(&self) -> Option<f64> {
        let mut worst = f64::NEG_INFINITY;
        for p in &self.points {
            let base = self.baseline(p.l)?;
            if p.degeneracy == 1 && base.degeneracy == 1 {
                worst = worst.max((p.gap - base.gap).abs() - 2.0 * p.lambda.abs() * self.perturbation_norms[&p.l]);
            }
        }
        Some(worst)
    }

    /// Largest `|gap(λ_{i+1}) - gap(λ_i)| - 2‖ΣΦ‖|λ_{i+1} - λ_i|` over
    /// neighbouring grid points with unique ground states.
    pub fn continuity_excess(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for w in self.points.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if a.l == b.l && a.degeneracy == 1 && b.degeneracy == 1 {
                worst = worst.max((b.gap - a.gap).abs() - 2.0 * self.perturbation_norms[&a.l] * (b.lambda - a.lambda).abs());
            }
        }
        worst
    }

    pub fn gap_positive(&self) -> bool {
        self.points.iter().all(|p| p.gap > 0.0)
    }

    /// At the largest `L`: the contiguous range of grid couplings around
    /// `λ = 0` where the gap stays above half its `λ = 0` value.
    pub fn stable_range(&self) -> Option<(f64, f64)> {
        let l = *self.ls.iter().max()?;
        let half = self.baseline(l)?.gap / 2.0;
        let row: Vec<&SweepPoint> = self.points.iter().filter(|p| p.l == l).collect();
        let zero = row.iter().position(|p| p.lambda == 0.0)?;
        let ok = |p: &SweepPoint| p.degeneracy == 1 && p.gap > half;
        let mut lo = zero;
        while lo > 0 && ok(row[lo - 1]) {
            lo -= 1;
        }
        let mut hi = zero;
        while hi + 1 < row.len() && ok(row[hi + 1]) {
            hi += 1;
        }
        Some((row[lo].lambda, row[hi].lambda))
    }

    /// `(L, gap(0))` ascending in `L`: the finite-size trend of the
    /// unperturbed gap.
    pub fn gap_trend(&self) -> Vec<(usize, f64)> {
        let mut ls = self.ls.clone();
        ls.sort_unstable();
        ls.dedup();
        ls.into_iter().filter_map(|l| self.baseline(l).map(|p| (l, p.gap))).collect()
    }
}

/// Ground energy, degeneracy and gap of `base(L) + λ pert(L)` over the
/// grid. `family(L)` returns `(base, pert)`; `λ = 0` evaluates `base` as is.
/// The grid must contain `λ = 0`.
pub fn gap_sweep<F>(family: F, lambdas: &[f64], ls: &[usize], opts: LanczosOptions) -> Result<StabilitySweep>
where
    F: Fn(usize) -> Result<(Interaction, Interaction)> + Sync,
{
    if !lambdas.contains(&0.0) {
        return domain("the coupling grid must contain 0");
    }
    if lambdas.windows(2).any(|w| !(w[0] < w[1])) {
        return domain("the coupling grid must be strictly increasing");
    }
    let models: Vec<(usize, Interaction, Interaction)> = ls.iter().map(|&l| family(l).map(|(b, p)| (l, b, p))).collect::<Result<_>>()?;
    let mut perturbation_norms = BTreeMap::new();
    for (l, _, p) in &models {
        perturbation_norms.insert(*l, hermitian_norm(p, opts)?);
    }
    let jobs: Vec<(usize, f64)> = models.iter().enumerate().flat_map(|(i, _)| lambdas.iter().map(move |&lam| (i, lam))).collect();
    let points = jobs
        .par_iter()
        .map(|&(i, lambda)| {
            let (l, base, pert) = &models[i];
            let h = if lambda == 0.0 { base.clone() } else { base.plus(pert, lambda)? };
            let space = h.space()?;
            let low = low_spectrum(&h, &space, DEGENERACY_TOL, opts)?;
            let dims: Vec<usize> = crate::hilbert::SectorBasis::all_magnetizations(&space).iter().map(|s| s.len()).collect();
            Ok(SweepPoint {
                l: *l,
                lambda,
                ground_energy: low.gap.ground_energy,
                degeneracy: low.gap.ground_degeneracy,
                gap: low.gap.gap,
                levels: certified_levels(&low, &dims),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilitySweep { lambdas: lambdas.to_vec(), ls: ls.to_vec(), perturbation_norms, points })
}
