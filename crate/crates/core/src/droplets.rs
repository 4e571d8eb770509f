//! Droplet spectroscopy of the ferromagnetic XXZ chain: the limiting
//! droplet energies `E(n)`, finite-size sector energies of the periodic and
//! the `SU_q(2)`-symmetric open chain, and droplet band widths.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::hilbert::{SectorBasis, SpinSpace};
use crate::linalg::CMatrix;
use crate::models::{xxz, Boundary, XxzParams};
use crate::spectral::{dense_eigh, full_spectrum, SpectrumReport, DENSE_CUTOFF};
use crate::symmetry::{classify_sector, CasimirKind, SectorCasimir};

/// Relative window for matching a measured band width to a formula.
pub const WIDTH_MATCH: f64 = 0.15;

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return domain(format!("q must lie in (0, 1), got {q}"));
    }
    Ok(())
}

/// `E(n) = (1 - q²)(1 - qⁿ) / ((1 + q²)(1 + qⁿ))`.
pub fn droplet_energy_formula(q: f64, n: usize) -> Result<f64> {
    check_q(q)?;
    let qn = q.powi(n as i32);
    Ok((1.0 - q * q) * (1.0 - qn) / ((1.0 + q * q) * (1.0 + qn)))
}

/// The reference band width `4qⁿ(1 - q²) / (1 - q²ⁿ)`, labelled `printed`.
pub fn bandwidth_formula(q: f64, n: usize) -> Result<f64> {
    check_q(q)?;
    if n == 0 {
        return domain("band width is singular at n = 0");
    }
    let qn = q.powi(n as i32);
    Ok(4.0 * qn * (1.0 - q * q) / (1.0 - qn * qn))
}

/// The reference width divided by `Δ = (q + 1/q)/2`.
pub fn bandwidth_formula_over_delta(q: f64, n: usize) -> Result<f64> {
    Ok(bandwidth_formula(q, n)? * 2.0 * q / (1.0 + q * q))
}

/// `4qⁿ(1 - q²) / ((1 + q²)(1 - q²ⁿ))`: the reference width divided by
/// `1 + q²`. Equals the exact one-magnon width `2/Δ` at `n = 1` for every
/// `q`, and coincides with [`bandwidth_formula_over_delta`] at `q = 1/2`.
pub fn bandwidth_formula_corrected(q: f64, n: usize) -> Result<f64> {
    Ok(bandwidth_formula(q, n)? / (1.0 + q * q))
}

/// Sector of `n` overturned spins, `2M = L - 2n`.
fn droplet_sector(space: &SpinSpace, l: usize, n: usize) -> Result<SectorBasis> {
    if n > l {
        return domain(format!("cannot overturn {n} of {l} spins"));
    }
    SectorBasis::magnetization(space, l as i64 - 2 * n as i64)
}

/// Lowest energy with `n` overturned spins. Periodic: the sector minimum
/// `E_L(n)`. Open `SU_q(2)` chain: `E(H_L, S_max - n)`, the lowest level in
/// the sector whose q-Casimir label is `S = S_max - n`; `None` if `2n > L`.
pub fn sector_ground_energy(p: &XxzParams, n: usize) -> Result<Option<f64>> {
    let l = p.l;
    let space = SpinSpace::uniform(l, crate::lattice::TwiceSpin::HALF)?;
    let sector = droplet_sector(&space, l, n)?;
    if sector.len() > DENSE_CUTOFF {
        return Err(Error::TooLarge { dim: sector.len(), cutoff: DENSE_CUTOFF });
    }
    let phi = xxz(p);
    let block = phi.assemble_in_sector(&space, &sector)?;
    match p.boundary {
        Boundary::Periodic => Ok(Some(full_spectrum(&block, false)?.eigenvalues[0])),
        Boundary::OpenWithField => {
            if 2 * n > l {
                return Ok(None);
            }
            let twice_m = l as i64 - 2 * n as i64;
            let casimir = SectorCasimir::new(&space, &sector, CasimirKind::Suq(p.q))?;
            let levels = classify_sector(&block, &casimir, twice_m, l as i64)?;
            let e = levels.iter().filter(|lv| lv.twice_s == twice_m).map(|lv| lv.energy).fold(f64::INFINITY, f64::min);
            if e.is_finite() {
                Ok(Some(e))
            } else {
                Err(Error::Classification(format!("no level labeled 2S = {twice_m}")))
            }
        }
    }
}

/// Spectrum of the periodic chain on the `n`-droplet sector.
pub fn periodic_sector_spectrum(p: &XxzParams, n: usize) -> Result<SpectrumReport> {
    if p.boundary != Boundary::Periodic {
        return domain("sector spectrum is taken on the periodic chain");
    }
    let space = SpinSpace::uniform(p.l, crate::lattice::TwiceSpin::HALF)?;
    let sector = droplet_sector(&space, p.l, n)?;
    let block = xxz(p).assemble_in_sector(&space, &sector)?;
    Ok(full_spectrum(&block, false)?.with_sector(sector.label()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Band {
    pub min: f64,
    pub max: f64,
    pub width: f64,
    /// Separation from the band top to the next level above the band.
    pub isolation: f64,
}

/// The lowest `L` sector levels read as the droplet band (one per momentum
/// when the band is isolated), with the gap to level `L + 1`.
pub fn band_extract(report: &SpectrumReport, l: usize) -> Result<Band> {
    let e = &report.eigenvalues;
    if e.len() < l + 1 || l == 0 {
        return Err(Error::InsufficientData(format!("band of {l} levels needs {} eigenvalues, have {}", l + 1, e.len())));
    }
    let (min, max) = (e[0], e[l - 1]);
    Ok(Band { min, max, width: max - min, isolation: e[l] - max })
}

/// Lowest and next-lowest levels at one crystal momentum `K = 2πj/L`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentumLevel {
    pub j: usize,
    pub lowest: f64,
    pub next: Option<f64>,
}

/// Orthonormal Bloch vectors of momentum `2πj/L` in sector coordinates.
/// Translation moves site `x` to `x + 1`, which rotates the bit pattern of
/// overturned spins.
fn bloch_basis(sector: &SectorBasis, l: usize, j: usize) -> CMatrix {
    let mask = (1usize << l) - 1;
    let rot = |s: usize| ((s << 1) | (s >> (l - 1))) & mask;
    let mut seen = vec![false; sector.len()];
    let mut cols: Vec<Vec<(usize, C64)>> = Vec::new();
    for (i, &s) in sector.states().iter().enumerate() {
        if seen[i] {
            continue;
        }
        let mut orbit = vec![s];
        let mut t = rot(s);
        while t != s {
            orbit.push(t);
            t = rot(t);
        }
        for &o in &orbit {
            seen[sector.index_of(o).expect("translation preserves the sector")] = true;
        }
        let p = orbit.len();
        if (j * p) % l != 0 {
            continue;
        }
        let k = 2.0 * PI * j as f64 / l as f64;
        let amp = 1.0 / (p as f64).sqrt();
        cols.push(orbit.iter().enumerate().map(|(r, &o)| (sector.index_of(o).unwrap(), C64::from_polar(amp, -k * r as f64))).collect());
    }
    let mut b = CMatrix::zeros(sector.len(), cols.len());
    for (c, col) in cols.iter().enumerate() {
        for &(r, v) in col {
            b[(r, c)] = v;
        }
    }
    b
}

/// Lowest levels of the periodic chain on the `n`-droplet sector in every
/// momentum block `j = 0..L-1`.
pub fn momentum_levels(p: &XxzParams, n: usize) -> Result<Vec<MomentumLevel>> {
    if p.boundary != Boundary::Periodic {
        return domain("momentum resolution needs the periodic chain");
    }
    let l = p.l;
    let space = SpinSpace::uniform(l, crate::lattice::TwiceSpin::HALF)?;
    let sector = droplet_sector(&space, l, n)?;
    if sector.len() > DENSE_CUTOFF {
        return Err(Error::TooLarge { dim: sector.len(), cutoff: DENSE_CUTOFF });
    }
    let h = xxz(p).assemble_in_sector(&space, &sector)?.to_dense();
    (0..l)
        .into_par_iter()
        .map(|j| {
            let b = bloch_basis(&sector, l, j);
            if b.ncols() == 0 {
                return Err(Error::InsufficientData(format!("momentum block j = {j} is empty")));
            }
            let hk = b.adjoint() * &h * &b;
            let (ev, _) = dense_eigh(&hk);
            Ok(MomentumLevel { j, lowest: ev[0], next: ev.get(1).copied() })
        })
        .collect()
}

/// The droplet band as the lowest level in each momentum block. The
/// isolation is the smallest separation to the next level in the same block.
pub fn momentum_band(levels: &[MomentumLevel]) -> Result<Band> {
    if levels.is_empty() {
        return Err(Error::InsufficientData("no momentum blocks".into()));
    }
    let min = levels.iter().map(|m| m.lowest).fold(f64::INFINITY, f64::min);
    let max = levels.iter().map(|m| m.lowest).fold(f64::NEG_INFINITY, f64::max);
    let isolation = levels.iter().filter_map(|m| m.next.map(|e| e - m.lowest)).fold(f64::INFINITY, f64::min);
    Ok(Band { min, max, width: max - min, isolation })
}

/// Which width formula a measured width matches within [`WIDTH_MATCH`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WidthMatch {
    Printed,
    PrintedOverDelta,
    Both,
    Neither,
}

impl WidthMatch {
    pub fn classify(measured: f64, printed: f64, over_delta: f64) -> Self {
        let near = |f: f64| ((measured - f) / f).abs() <= WIDTH_MATCH;
        match (near(printed), near(over_delta)) {
            (true, false) => WidthMatch::Printed,
            (false, true) => WidthMatch::PrintedOverDelta,
            (true, true) => WidthMatch::Both,
            (false, false) => WidthMatch::Neither,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WidthMatch::Printed => "printed",
            WidthMatch::PrintedOverDelta => "printed_over_delta",
            WidthMatch::Both => "both",
            WidthMatch::Neither => "neither",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DropletRow {
    pub l: usize,
    pub e_periodic: f64,
    /// `None` when `2n > L`.
    pub e_open: Option<f64>,
    /// `|E_L(n) - E(n)|`.
    pub abs_dev: f64,
    /// Momentum-resolved band width of the periodic chain; `None` for `n = 0`.
    pub band_width: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DropletTable {
    pub q: f64,
    pub n: usize,
    pub formula_e: f64,
    /// Reference width; `None` at `n = 0`.
    pub formula_width: Option<f64>,
    pub formula_width_over_delta: Option<f64>,
    /// Ascending in `L`.
    pub rows: Vec<DropletRow>,
}

impl DropletTable {
    pub fn largest(&self) -> Option<&DropletRow> {
        self.rows.last()
    }

    /// Width match at the largest `L`.
    pub fn winner(&self) -> Option<WidthMatch> {
        let w = self.largest()?.band_width?;
        Some(WidthMatch::classify(w, self.formula_width?, self.formula_width_over_delta?))
    }

    /// `|E(H_L, S_max - n) - E(n)|` at the largest `L` with an open value.
    pub fn open_deviation(&self) -> Option<f64> {
        self.rows.iter().rev().find_map(|r| r.e_open).map(|e| (e - self.formula_e).abs())
    }

    /// Smallest `L_min` from which the periodic deviations are non-increasing
    /// in `L` (up to `tol`).
    pub fn monotone_from(&self, tol: f64) -> Option<usize> {
        let mut start = self.rows.len().checked_sub(1)?;
        while start > 0 && self.rows[start].abs_dev <= self.rows[start - 1].abs_dev + tol {
            start -= 1;
        }
        Some(self.rows[start].l)
    }
}

/// Periodic and open sector energies for each `L`, next to `E(n)`.
pub fn convergence_table(q: f64, n: usize, ls: &[usize]) -> Result<DropletTable> {
    let formula_e = droplet_energy_formula(q, n)?;
    let (formula_width, formula_width_over_delta) = if n == 0 { (None, None) } else { (Some(bandwidth_formula(q, n)?), Some(bandwidth_formula_over_delta(q, n)?)) };
    let mut ls = ls.to_vec();
    ls.sort_unstable();
    ls.dedup();
    let rows = ls
        .par_iter()
        .map(|&l| {
            let periodic = XxzParams::from_q(l, q, 1.0, Boundary::Periodic)?;
            let open = periodic.with_boundary(Boundary::OpenWithField)?;
            let e_periodic = sector_ground_energy(&periodic, n)?.expect("periodic energy always exists");
            let e_open = sector_ground_energy(&open, n)?;
            let band_width = if n == 0 { None } else { Some(momentum_band(&momentum_levels(&periodic, n)?)?.width) };
            Ok(DropletRow { l, e_periodic, e_open, abs_dev: (e_periodic - formula_e).abs(), band_width })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DropletTable { q, n, formula_e, formula_width, formula_width_over_delta, rows })
}
