use crate::error::{domain, Result};
use crate::lattice::{SpinGraph, TwiceSpin, Vertex};

/// Tensor product of site spaces `C^(2s_x + 1)`.
///
/// Basis states are mixed-radix integers, little-endian in vertex id: site
/// 0 is the least significant digit. Digit `k` at a spin-`s` site is the
/// state with `S³ = s - k`, so digit 0 is "up".
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinSpace {
    spins: Vec<TwiceSpin>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    total_dim: usize,
}

impl SpinSpace {
    pub fn new(spins: Vec<TwiceSpin>) -> Result<Self> {
        if spins.is_empty() {
            return domain("a spin space needs at least one site");
        }
        let dims: Vec<usize> = spins.iter().map(|s| s.dim()).collect();
        let mut strides = Vec::with_capacity(dims.len());
        let mut total: usize = 1;
        for &d in &dims {
            strides.push(total);
            total = total
                .checked_mul(d)
                .filter(|&t| t <= 1 << 40)
                .ok_or_else(|| crate::Error::Domain("Hilbert space dimension overflows".into()))?;
        }
        Ok(SpinSpace { spins, dims, strides, total_dim: total })
    }

    pub fn uniform(sites: usize, spin: TwiceSpin) -> Result<Self> {
        Self::new(vec![spin; sites])
    }

    pub fn from_graph(g: &SpinGraph) -> Self {
        Self::new(g.spins().to_vec()).expect("graph spins form a valid space")
    }

    pub fn num_sites(&self) -> usize {
        self.spins.len()
    }

    pub fn spins(&self) -> &[TwiceSpin] {
        &self.spins
    }

    pub fn site_dim(&self, x: Vertex) -> usize {
        self.dims[x]
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn stride(&self, x: Vertex) -> usize {
        self.strides[x]
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// `N = max_x n_x`.
    pub fn max_site_dim(&self) -> usize {
        self.dims.iter().copied().max().unwrap_or(0)
    }

    pub fn encode(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.dims.len());
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }

    pub fn decode(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        self.decode_into(index, &mut out);
        out
    }

    pub fn decode_into(&self, mut index: usize, out: &mut [usize]) {
        for (slot, &d) in out.iter_mut().zip(&self.dims) {
            *slot = index % d;
            index /= d;
        }
    }

    pub fn digit(&self, index: usize, x: Vertex) -> usize {
        (index / self.strides[x]) % self.dims[x]
    }

    /// `2 m` for digit `k` at site `x`.
    pub fn twice_m(&self, x: Vertex, digit: usize) -> i64 {
        self.spins[x].twice() as i64 - 2 * digit as i64
    }

    /// Twice the total `S³` eigenvalue of a basis state.
    pub fn twice_magnetization(&self, index: usize) -> i64 {
        let mut rest = index;
        let mut total = 0;
        for (x, &d) in self.dims.iter().enumerate() {
            total += self.twice_m(x, rest % d);
            rest /= d;
        }
        total
    }

    /// `2 S_max = Σ_x 2 s_x`.
    pub fn twice_max_magnetization(&self) -> i64 {
        self.spins.iter().map(|s| s.twice() as i64).sum()
    }
}
