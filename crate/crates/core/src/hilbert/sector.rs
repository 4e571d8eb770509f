use std::fmt;

use num_complex::Complex64 as C64;

use super::SpinSpace;
use crate::error::{Error, Result};
use crate::linalg::ZERO;

/// Above this total dimension sectors are enumerated by recursion over
/// per-site magnetizations instead of scanning every basis state.
pub const SCAN_LIMIT: usize = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SectorLabel {
    /// The whole space.
    Full,
    /// Fixed total `S³ = twice_m / 2`.
    Magnetization { twice_m: i64 },
    /// Fixed particle number (exclusion-process configurations).
    Particles(usize),
}

impl fmt::Display for SectorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SectorLabel::Full => write!(f, "full"),
            SectorLabel::Magnetization { twice_m } if twice_m % 2 == 0 => write!(f, "M={}", twice_m / 2),
            SectorLabel::Magnetization { twice_m } => write!(f, "M={twice_m}/2"),
            SectorLabel::Particles(n) => write!(f, "n={n}"),
        }
    }
}

/// Ordered subset of basis states of a parent space. The state list is
/// strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectorBasis {
    label: SectorLabel,
    parent_dim: usize,
    states: Vec<usize>,
}

impl SectorBasis {
    pub fn full(space: &SpinSpace) -> Self {
        SectorBasis {
            label: SectorLabel::Full,
            parent_dim: space.total_dim(),
            states: (0..space.total_dim()).collect(),
        }
    }

    /// All product states with total `S³ = twice_m / 2`.
    pub fn magnetization(space: &SpinSpace, twice_m: i64) -> Result<Self> {
        let states = if space.total_dim() <= SCAN_LIMIT {
            scan_states(space, twice_m)
        } else {
            compose_states(space, twice_m)
        };
        if states.is_empty() {
            return Err(Error::EmptySector(format!(
                "no basis state has total S3 = {}",
                SectorLabel::Magnetization { twice_m }
            )));
        }
        Ok(SectorBasis {
            label: SectorLabel::Magnetization { twice_m },
            parent_dim: space.total_dim(),
            states,
        })
    }

    /// Every non-empty magnetization sector, from `S_max` downwards.
    pub fn all_magnetizations(space: &SpinSpace) -> Vec<SectorBasis> {
        let top = space.twice_max_magnetization();
        (0..=top)
            .map(|k| top - 2 * k)
            .filter_map(|tm| Self::magnetization(space, tm).ok())
            .collect()
    }

    /// Arbitrary sorted state list, for callers with their own conserved
    /// quantity.
    pub fn from_states(label: SectorLabel, parent_dim: usize, mut states: Vec<usize>) -> Result<Self> {
        states.sort_unstable();
        states.dedup();
        if states.is_empty() {
            return Err(Error::EmptySector(label.to_string()));
        }
        if *states.last().unwrap() >= parent_dim {
            return Err(Error::Domain("sector state outside parent space".into()));
        }
        Ok(SectorBasis { label, parent_dim, states })
    }

    pub fn label(&self) -> SectorLabel {
        self.label
    }

    pub fn parent_dim(&self) -> usize {
        self.parent_dim
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, state: usize) -> Option<usize> {
        if matches!(self.label, SectorLabel::Full) {
            return (state < self.parent_dim).then_some(state);
        }
        self.states.binary_search(&state).ok()
    }

    /// Lifts sector coordinates to the parent space.
    pub fn embed_vector(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.parent_dim];
        for (&s, &x) in self.states.iter().zip(v) {
            out[s] = x;
        }
        out
    }

    /// Sector coordinates of a parent-space vector, plus the norm of the
    /// discarded part.
    pub fn project_vector(&self, v: &[C64]) -> (Vec<C64>, f64) {
        let kept: Vec<C64> = self.states.iter().map(|&s| v[s]).collect();
        let total: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        let inside: f64 = kept.iter().map(|x| x.norm_sqr()).sum();
        (kept, (total - inside).max(0.0).sqrt())
    }
}

fn scan_states(space: &SpinSpace, twice_m: i64) -> Vec<usize> {
    (0..space.total_dim())
        .filter(|&i| space.twice_magnetization(i) == twice_m)
        .collect()
}

/// Depth-first over sites from most to least significant, so states come
/// out in increasing order without a sort.
fn compose_states(space: &SpinSpace, twice_m: i64) -> Vec<usize> {
    let n = space.num_sites();
    // Range of 2M reachable by sites 0..k.
    let mut max_prefix = vec![0i64; n + 1];
    for x in 0..n {
        max_prefix[x + 1] = max_prefix[x] + space.spins()[x].twice() as i64;
    }
    let mut out = Vec::new();
    fn rec(space: &SpinSpace, max_prefix: &[i64], site: usize, remaining: i64, acc: usize, out: &mut Vec<usize>) {
        if remaining.abs() > max_prefix[site + 1] {
            return;
        }
        let stride = space.stride(site);
        for digit in 0..space.site_dim(site) {
            let m = space.twice_m(site, digit);
            let rest = remaining - m;
            if site == 0 {
                if rest == 0 {
                    out.push(acc + digit * stride);
                }
            } else {
                rec(space, max_prefix, site - 1, rest, acc + digit * stride, out);
            }
        }
    }
    rec(space, &max_prefix, n - 1, twice_m, 0, &mut out);
    out
}
