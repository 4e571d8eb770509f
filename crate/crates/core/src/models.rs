//! Interactions `Φ` (finite supports carrying Hermitian local terms), the
//! model builders, the norm `‖Φ‖_λ`, and assembly into sparse operators.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::hilbert::{SectorBasis, SparseOperator, SpinMatrices, SpinSpace, HERMITIAN_TOL};
use crate::lattice::{SpinGraph, TwiceSpin, Vertex};
use crate::linalg::{hermitian_deviation, kron, operator_norm, permute_factors, real, CMatrix};

/// Local term `Φ(X)`. The support is sorted ascending and the matrix acts on
/// `⊗_{x∈X} C^{n_x}` with the first support site as the most significant
/// Kronecker factor.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    support: Vec<Vertex>,
    matrix: CMatrix,
}

impl Term {
    pub fn support(&self) -> &[Vertex] {
        &self.support
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// A finite family of local Hermitian terms on sites with given spins.
#[derive(Clone, Debug, PartialEq)]
pub struct Interaction {
    name: String,
    params: Vec<(String, f64)>,
    spins: Vec<TwiceSpin>,
    terms: Vec<Term>,
}

impl Interaction {
    pub fn empty(name: impl Into<String>, spins: Vec<TwiceSpin>) -> Self {
        Interaction { name: name.into(), params: Vec::new(), spins, terms: Vec::new() }
    }

    /// Adds a term. `support` may be in any order; the matrix is taken with
    /// factors in the order given and reordered to the canonical form.
    pub fn push(&mut self, support: &[Vertex], matrix: CMatrix) -> Result<()> {
        if support.is_empty() {
            return domain("term support must be nonempty");
        }
        let mut dims = Vec::with_capacity(support.len());
        for &x in support {
            if x >= self.spins.len() {
                return domain(format!("term support vertex {x} outside {} sites", self.spins.len()));
            }
            dims.push(self.spins[x].dim());
        }
        let local: usize = dims.iter().product();
        if matrix.nrows() != local || matrix.ncols() != local {
            return domain(format!(
                "term on {support:?} is {}x{}, expected {local}x{local}",
                matrix.nrows(),
                matrix.ncols()
            ));
        }
        let dev = hermitian_deviation(&matrix);
        if dev >= HERMITIAN_TOL {
            return domain(format!("term on {support:?} is not Hermitian (deviation {dev:e})"));
        }
        let mut order: Vec<usize> = (0..support.len()).collect();
        order.sort_by_key(|&k| support[k]);
        let sorted: Vec<Vertex> = order.iter().map(|&k| support[k]).collect();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return domain(format!("term support {support:?} repeats a vertex"));
        }
        let matrix = if order.iter().enumerate().all(|(i, &k)| i == k) {
            matrix
        } else {
            // Input factor k lands at the position of support[k] in sorted order.
            let mut perm = vec![0; support.len()];
            for (pos, &k) in order.iter().enumerate() {
                perm[k] = pos;
            }
            permute_factors(&matrix, &dims, &perm)
        };
        self.terms.push(Term { support: sorted, matrix });
        Ok(())
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.push((key.to_string(), value));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn spins(&self) -> &[TwiceSpin] {
        &self.spins
    }

    pub fn num_sites(&self) -> usize {
        self.spins.len()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn space(&self) -> Result<SpinSpace> {
        SpinSpace::new(self.spins.clone())
    }

    /// Every term multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.matrix *= real(c);
        }
        out
    }

    /// `self + c · other`, as the union of the two term lists.
    pub fn plus(&self, other: &Interaction, c: f64) -> Result<Self> {
        if self.spins != other.spins {
            return domain("interactions live on different spin spaces");
        }
        let mut out = self.clone();
        out.name = format!("{}+{}", self.name, other.name);
        out.terms.extend(other.scaled(c).terms);
        Ok(out)
    }

    /// Terms merged per support, i.e. the actual map `X -> Φ(X)`, in
    /// canonical order.
    pub fn grouped(&self) -> Vec<Term> {
        let mut out: Vec<Term> = Vec::new();
        for t in self.canonical_terms() {
            match out.last_mut() {
                Some(last) if last.support == t.support => last.matrix += &t.matrix,
                _ => out.push(t.clone()),
            }
        }
        out
    }

    /// Terms sorted by support, then by matrix entries. Sums performed in this
    /// order do not depend on the order terms were added in.
    fn canonical_terms(&self) -> Vec<&Term> {
        let mut refs: Vec<&Term> = self.terms.iter().collect();
        refs.sort_by(|a, b| {
            a.support.len().cmp(&b.support.len()).then_with(|| a.support.cmp(&b.support)).then_with(|| {
                let ka = a.matrix.iter().map(|z| (z.re.to_bits(), z.im.to_bits()));
                let kb = b.matrix.iter().map(|z| (z.re.to_bits(), z.im.to_bits()));
                ka.cmp(kb)
            })
        });
        refs
    }

    /// `sup_x Σ_{X∋x} |X| ‖Φ(X)‖ N^{2|X|} e^{λ D(X)}` with `N` the largest site
    /// dimension and `D` the graph diameter.
    pub fn lambda_norm(&self, lambda: f64, g: &SpinGraph) -> Result<f64> {
        if !(lambda > 0.0) {
            return domain("lambda must be positive");
        }
        if g.num_vertices() != self.num_sites() {
            return domain("graph and interaction have different vertex counts");
        }
        let n_max = self.spins.iter().map(|s| s.dim()).max().unwrap_or(0) as f64;
        let mut per_site = vec![0.0; self.num_sites()];
        for t in self.grouped() {
            let diam = g
                .diameter(&t.support)?
                .finite()
                .ok_or_else(|| Error::Domain(format!("support {:?} is disconnected", t.support)))?;
            let k = t.support.len() as f64;
            let w = k * operator_norm(&t.matrix) * n_max.powf(2.0 * k) * (lambda * diam as f64).exp();
            for &x in &t.support {
                per_site[x] += w;
            }
        }
        Ok(per_site.into_iter().fold(0.0, f64::max))
    }

    /// `H = Σ_X Φ(X)` on the full space.
    pub fn assemble(&self, space: &SpinSpace) -> Result<SparseOperator> {
        self.assemble_in_sector(space, &SectorBasis::full(space))
    }

    /// Matrix of `H` in the given sector, built by acting with every term on
    /// every sector basis state. Fails with a leak error if a term maps a
    /// sector state outside the sector.
    pub fn assemble_in_sector(&self, space: &SpinSpace, sector: &SectorBasis) -> Result<SparseOperator> {
        if space.spins() != self.spins.as_slice() {
            return domain("interaction and space disagree on site spins");
        }
        if sector.parent_dim() != space.total_dim() {
            return domain("sector does not belong to this space");
        }
        let compiled: Vec<CompiledTerm> = self.canonical_terms().into_iter().map(|t| CompiledTerm::new(t, space)).collect();
        let columns: Vec<Result<Vec<(usize, usize, C64)>>> = sector
            .states()
            .par_iter()
            .enumerate()
            .map(|(col, &state)| {
                let mut out = Vec::new();
                for term in &compiled {
                    let local = term.local_index(space, state);
                    let base = state - term.offset(local);
                    for &(r, v) in &term.columns[local] {
                        let target = base + term.offset(r);
                        match sector.index_of(target) {
                            Some(row) => out.push((row, col, v)),
                            None => {
                                return Err(Error::SectorLeak {
                                    sector: sector.label().to_string(),
                                    row: target,
                                    col: state,
                                    value: v.norm(),
                                })
                            }
                        }
                    }
                }
                Ok(out)
            })
            .collect();
        let mut trip = Vec::new();
        for c in columns {
            trip.extend(c?);
        }
        SparseOperator::from_triplets(sector.len(), trip)?.into_hermitian()
    }
}

/// A term prepared for repeated action on basis states.
struct CompiledTerm {
    support: Vec<Vertex>,
    dims: Vec<usize>,
    // Nonzeros per column of the local matrix: (row, value).
    columns: Vec<Vec<(usize, C64)>>,
    // offsets[k][d] = d * stride(support[k]).
    offsets: Vec<Vec<usize>>,
}

impl CompiledTerm {
    fn new(t: &Term, space: &SpinSpace) -> Self {
        let dims: Vec<usize> = t.support.iter().map(|&x| space.site_dim(x)).collect();
        let columns = (0..t.matrix.ncols())
            .map(|c| {
                (0..t.matrix.nrows())
                    .filter(|&r| t.matrix[(r, c)].norm() > crate::hilbert::DROP_TOL)
                    .map(|r| (r, t.matrix[(r, c)]))
                    .collect()
            })
            .collect();
        let offsets = t.support.iter().zip(&dims).map(|(&x, &d)| (0..d).map(|k| k * space.stride(x)).collect()).collect();
        CompiledTerm { support: t.support.clone(), dims, columns, offsets }
    }

    fn local_index(&self, space: &SpinSpace, state: usize) -> usize {
        self.support.iter().zip(&self.dims).fold(0, |acc, (&x, &d)| acc * d + space.digit(state, x))
    }

    /// Global index contribution of a local (Kronecker-ordered) index.
    fn offset(&self, mut local: usize) -> usize {
        let mut total = 0;
        for k in (0..self.dims.len()).rev() {
            total += self.offsets[k][local % self.dims[k]];
            local /= self.dims[k];
        }
        total
    }
}

fn bond_dot(a: TwiceSpin, b: TwiceSpin) -> CMatrix {
    SpinMatrices::new(a).dot(&SpinMatrices::new(b))
}

/// `-Σ_{xy} J_xy S_x·S_y` over the edges of `g`, with `J_xy` the edge weight
/// (`J > 0` is ferromagnetic).
pub fn heisenberg(g: &SpinGraph) -> Interaction {
    let mut phi = Interaction::empty("heisenberg", g.spins().to_vec());
    for e in g.edges() {
        let m = bond_dot(g.spin(e.a), g.spin(e.b)) * real(-e.weight);
        phi.push(&[e.a, e.b], m).expect("graph edges give valid terms");
    }
    phi
}

/// Projector onto total spin 2 for a pair of spin-1 sites:
/// `(1/2) S·S' + (1/6) (S·S')² + 1/3`.
pub fn aklt_bond() -> CMatrix {
    let ss = bond_dot(TwiceSpin::ONE, TwiceSpin::ONE);
    &ss * real(0.5) + (&ss * &ss) * real(1.0 / 6.0) + CMatrix::identity(9, 9) * real(1.0 / 3.0)
}

/// The spin-1 AKLT chain on `l` sites, open or closed into a ring.
pub fn aklt(l: usize, periodic: bool) -> Result<Interaction> {
    if l < 2 {
        return domain("AKLT chain needs L >= 2");
    }
    if periodic && l < 3 {
        return domain("periodic AKLT chain needs L >= 3");
    }
    let mut phi = Interaction::empty(if periodic { "aklt_periodic" } else { "aklt" }, vec![TwiceSpin::ONE; l]);
    let p = aklt_bond();
    let bonds = if periodic { l } else { l - 1 };
    for x in 0..bonds {
        phi.push(&[x, (x + 1) % l], p.clone())?;
    }
    Ok(phi.with_param("L", l as f64))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// Open chain with the boundary fields that make it `SU_q(2)` invariant.
    OpenWithField,
    /// Ring without boundary field.
    Periodic,
}

/// Parameters of the spin-1/2 XXZ chain. `Δ = (q + 1/q) / 2` with
/// `q ∈ (0, 1)`, and `A(Δ) = √(1 - 1/Δ²) / 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XxzParams {
    pub l: usize,
    pub delta: f64,
    pub j: f64,
    pub q: f64,
    pub a_delta: f64,
    pub boundary: Boundary,
}

impl XxzParams {
    pub fn from_delta(l: usize, delta: f64, j: f64, boundary: Boundary) -> Result<Self> {
        if !(delta > 1.0) || !delta.is_finite() {
            return domain(format!("XXZ needs Delta > 1, got {delta}"));
        }
        let q = delta - (delta * delta - 1.0).sqrt();
        Self::build(l, delta, j, q, boundary)
    }

    pub fn from_q(l: usize, q: f64, j: f64, boundary: Boundary) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return domain(format!("q must lie in (0, 1), got {q}"));
        }
        Self::build(l, (q + 1.0 / q) / 2.0, j, q, boundary)
    }

    fn build(l: usize, delta: f64, j: f64, q: f64, boundary: Boundary) -> Result<Self> {
        if !(j > 0.0) {
            return domain("XXZ needs J > 0");
        }
        let min_l = if boundary == Boundary::Periodic { 3 } else { 2 };
        if l < min_l {
            return domain(format!("XXZ chain needs L >= {min_l}"));
        }
        let a_delta = 0.5 * (1.0 - 1.0 / (delta * delta)).sqrt();
        Ok(XxzParams { l, delta, j, q, a_delta, boundary })
    }

    pub fn with_length(&self, l: usize) -> Result<Self> {
        Self::build(l, self.delta, self.j, self.q, self.boundary)
    }

    pub fn with_boundary(&self, boundary: Boundary) -> Result<Self> {
        Self::build(self.l, self.delta, self.j, self.q, boundary)
    }
}

/// `-J [Δ⁻¹ (S¹S¹ + S²S²) + (S³S³ - 1/4)]` on two spin-1/2 sites.
pub fn xxz_bond(delta: f64, j: f64) -> CMatrix {
    let s = SpinMatrices::new(TwiceSpin::HALF);
    let xy = kron(&s.s1, &s.s1) + kron(&s.s2, &s.s2);
    let zz = kron(&s.s3, &s.s3) - CMatrix::identity(4, 4) * real(0.25);
    (xy * real(1.0 / delta) + zz) * real(-j)
}

/// The XXZ chain. The open variant carries the boundary field
/// `A(Δ) (S³_{L-1} - S³_0)`, which is the sign for which the chain commutes
/// with the twisted generators in [`crate::symmetry::suq2_generators`].
pub fn xxz(p: &XxzParams) -> Interaction {
    let l = p.l;
    let periodic = p.boundary == Boundary::Periodic;
    let name = if periodic { "xxz_periodic" } else { "xxz_open" };
    let mut phi = Interaction::empty(name, vec![TwiceSpin::HALF; l]);
    let bond = xxz_bond(p.delta, p.j);
    let bonds = if periodic { l } else { l - 1 };
    for x in 0..bonds {
        phi.push(&[x, (x + 1) % l], bond.clone()).expect("valid bond");
    }
    if !periodic {
        let s3 = SpinMatrices::new(TwiceSpin::HALF).s3;
        phi.push(&[l - 1], &s3 * real(p.a_delta)).expect("valid field");
        phi.push(&[0], &s3 * real(-p.a_delta)).expect("valid field");
    }
    phi.with_param("L", l as f64).with_param("Delta", p.delta).with_param("q", p.q).with_param("J", p.j)
}

/// Terms supplied verbatim as `(support, matrix)` pairs.
pub fn custom(spins: Vec<TwiceSpin>, terms: Vec<(Vec<Vertex>, CMatrix)>) -> Result<Interaction> {
    let mut phi = Interaction::empty("custom", spins);
    for (support, m) in terms {
        phi.push(&support, m)?;
    }
    Ok(phi)
}

/// The translated family `Φ_x` = `local` on `{x, x+1, ..., x+r}` for every
/// `x` whose support fits in the chain (or wraps, if periodic).
pub fn translated(spins: Vec<TwiceSpin>, local: &CMatrix, range: usize, periodic: bool) -> Result<Interaction> {
    let l = spins.len();
    if range + 1 > l {
        return domain("translated term is longer than the chain");
    }
    let mut phi = Interaction::empty("translated", spins);
    let count = if periodic && range > 0 { l } else { l - range };
    for x in 0..count {
        let support: Vec<Vertex> = (0..=range).map(|k| (x + k) % l).collect();
        phi.push(&support, local.clone())?;
    }
    Ok(phi)
}

/// `-Σ_{xy} J_xy S³_x S³_y` over the edges of `g`.
pub fn ising(g: &SpinGraph) -> Interaction {
    let mut phi = Interaction::empty("ising", g.spins().to_vec());
    for e in g.edges() {
        let m = kron(&SpinMatrices::new(g.spin(e.a)).s3, &SpinMatrices::new(g.spin(e.b)).s3) * real(-e.weight);
        phi.push(&[e.a, e.b], m).expect("graph edges give valid terms");
    }
    phi
}

/// Total `S³` as a diagonal operator on `space`.
pub fn total_s3(space: &SpinSpace, sector: &SectorBasis) -> SparseOperator {
    let diag: Vec<C64> = sector.states().iter().map(|&i| real(space.twice_magnetization(i) as f64 / 2.0)).collect();
    SparseOperator::diagonal(&diag)
}

/// `‖[H, S³]‖` entrywise maximum, zero for magnetization-conserving `H`.
pub fn s3_commutator_defect(h: &SparseOperator, space: &SpinSpace) -> f64 {
    let mut worst: f64 = 0.0;
    for (r, c, v) in h.iter() {
        let dm = (space.twice_magnetization(c) - space.twice_magnetization(r)) as f64 / 2.0;
        worst = worst.max((v * dm).norm());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn eigs(m: &CMatrix) -> Vec<f64> {
        let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn two_site_heisenberg() {
        let g = SpinGraph::path(2, 1.0).unwrap();
        let h = heisenberg(&g).assemble(&SpinSpace::from_graph(&g)).unwrap();
        let e = eigs(&h.to_dense());
        for (a, b) in e.iter().zip([-0.25, -0.25, -0.25, 0.75]) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(h.trace().norm() < 1e-15);
    }

    #[test]
    fn ferro_ground_energy_is_polarized() {
        let g = SpinGraph::path(5, 1.0).unwrap().with_uniform_spin(TwiceSpin::ONE);
        let h = heisenberg(&g).assemble(&SpinSpace::from_graph(&g)).unwrap();
        assert!((eigs(&h.to_dense())[0] + 4.0).abs() < 1e-10);
        let g = SpinGraph::new(4, [(0, 1, 0.5), (1, 2, 2.0), (2, 3, 1.0), (0, 3, 0.3)])
            .unwrap()
            .with_spins(vec![TwiceSpin::HALF, TwiceSpin::ONE, TwiceSpin::HALF, TwiceSpin::new(3).unwrap()])
            .unwrap();
        let h = heisenberg(&g).assemble(&SpinSpace::from_graph(&g)).unwrap();
        let expected: f64 = -g.edges().iter().map(|e| e.weight * g.spin(e.a).value() * g.spin(e.b).value()).sum::<f64>();
        assert!((eigs(&h.to_dense())[0] - expected).abs() < 1e-10);
    }

    #[test]
    fn aklt_bond_is_spin_two_projector() {
        let p = aklt_bond();
        assert!(max_abs_diff(&(&p * &p), &p) < 1e-12);
        let e = eigs(&p);
        assert!(e[..4].iter().all(|v| v.abs() < 1e-12));
        assert!(e[4..].iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn aklt_three_sites() {
        let phi = aklt(3, false).unwrap();
        let h = phi.assemble(&phi.space().unwrap()).unwrap();
        let e = eigs(&h.to_dense());
        assert!(e[0] > -1e-12);
        assert_eq!(e.iter().filter(|v| v.abs() < 1e-10).count(), 4);
        assert!(aklt(1, false).is_err());
    }

    #[test]
    fn xxz_params() {
        let p = XxzParams::from_q(6, 0.5, 1.0, Boundary::OpenWithField).unwrap();
        assert!((p.delta - 1.25).abs() < 1e-12);
        assert!((p.a_delta - 0.5 * (1.0f64 - 1.0 / 1.5625).sqrt()).abs() < 1e-12);
        let p2 = XxzParams::from_delta(6, 1.25, 1.0, Boundary::OpenWithField).unwrap();
        assert!((p2.q - 0.5).abs() < 1e-12);
        assert!(XxzParams::from_delta(6, 1.0, 1.0, Boundary::Periodic).is_err());
        assert!(XxzParams::from_q(6, 1.2, 1.0, Boundary::Periodic).is_err());
    }

    #[test]
    fn xxz_vacuum_and_ising_limit() {
        for b in [Boundary::OpenWithField, Boundary::Periodic] {
            let p = XxzParams::from_q(5, 0.4, 1.0, b).unwrap();
            let h = xxz(&p).assemble(&SpinSpace::uniform(5, TwiceSpin::HALF).unwrap()).unwrap();
            // All-up is basis state 0.
            assert!(h.row(0).all(|(_, v)| v.norm() < 1e-15));
        }
        let s = SpinMatrices::new(TwiceSpin::HALF);
        let ising = (kron(&s.s3, &s.s3) - CMatrix::identity(4, 4) * real(0.25)) * real(-1.0);
        assert!(max_abs_diff(&xxz_bond(1e12, 1.0), &ising) < 1e-12);
    }

    #[test]
    fn xxz_single_magnon() {
        let p = XxzParams::from_delta(8, 1.25, 1.0, Boundary::Periodic).unwrap();
        let space = SpinSpace::uniform(8, TwiceSpin::HALF).unwrap();
        let sector = SectorBasis::magnetization(&space, 6).unwrap();
        let h = xxz(&p).assemble_in_sector(&space, &sector).unwrap();
        assert_eq!(h.dim(), 8);
        assert!((eigs(&h.to_dense())[0] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn custom_and_translated() {
        let spins = vec![TwiceSpin::HALF; 4];
        let space = SpinSpace::new(spins.clone()).unwrap();
        let h = custom(spins.clone(), vec![]).unwrap().assemble(&space).unwrap();
        assert_eq!(h.nnz(), 0);
        let h = custom(spins.clone(), vec![(vec![0], CMatrix::identity(2, 2))]).unwrap().assemble(&space).unwrap();
        assert!(max_abs_diff(&h.to_dense(), &CMatrix::identity(16, 16)) == 0.0);
        let s = SpinMatrices::new(TwiceSpin::HALF);
        let fam = translated(spins.clone(), &kron(&s.s3, &s.s3), 1, false).unwrap();
        assert_eq!(fam.terms().len(), 3);
        assert!(custom(spins, vec![(vec![0], s.plus.clone())]).is_err());
    }

    #[test]
    fn reversed_support_is_canonicalized() {
        let spins = vec![TwiceSpin::HALF, TwiceSpin::ONE];
        let a = SpinMatrices::new(TwiceSpin::HALF);
        let b = SpinMatrices::new(TwiceSpin::ONE);
        let forward = custom(spins.clone(), vec![(vec![0, 1], kron(&a.s1, &b.s3))]).unwrap();
        let backward = custom(spins, vec![(vec![1, 0], kron(&b.s3, &a.s1))]).unwrap();
        assert_eq!(forward, backward.clone());
        let space = forward.space().unwrap();
        assert_eq!(forward.assemble(&space).unwrap(), backward.assemble(&space).unwrap());
    }

    #[test]
    fn assembly_is_independent_of_term_order() {
        let g = SpinGraph::new(5, [(0, 1, 0.7), (1, 2, 1.3), (2, 3, 0.1), (3, 4, 2.2), (4, 0, 0.9), (1, 3, 0.4)]).unwrap();
        let phi = heisenberg(&g).plus(&ising(&g), 0.37).unwrap();
        let mut reversed = phi.clone();
        reversed.terms.reverse();
        let space = SpinSpace::from_graph(&g);
        assert_eq!(phi.assemble(&space).unwrap(), reversed.assemble(&space).unwrap());
    }

    #[test]
    fn lambda_norm_values() {
        let g = SpinGraph::path(8, 1.0).unwrap();
        let phi = heisenberg(&g);
        let v = phi.lambda_norm(1.0, &g).unwrap();
        assert!((v - 48.0 * std::f64::consts::E).abs() < 1e-9);
        let doubled = phi.scaled(2.0).lambda_norm(1.0, &g).unwrap();
        assert!((doubled - 2.0 * v).abs() < 1e-9);
        let zero = Interaction::empty("zero", vec![TwiceSpin::HALF; 8]);
        assert_eq!(zero.lambda_norm(1.0, &g).unwrap(), 0.0);
        assert!(phi.lambda_norm(0.5, &g).unwrap() < v);
    }

    #[test]
    fn magnetization_is_conserved() {
        let g = SpinGraph::ring(5, 1.0).unwrap();
        let space = SpinSpace::from_graph(&g);
        assert!(s3_commutator_defect(&heisenberg(&g).assemble(&space).unwrap(), &space) < 1e-12);
        let p = XxzParams::from_q(5, 0.3, 1.0, Boundary::OpenWithField).unwrap();
        assert!(s3_commutator_defect(&xxz(&p).assemble(&space).unwrap(), &space) < 1e-12);
    }

    #[test]
    fn sector_assembly_matches_restriction() {
        let g = SpinGraph::ring(6, 1.0).unwrap();
        let phi = heisenberg(&g);
        let space = SpinSpace::from_graph(&g);
        let full = phi.assemble(&space).unwrap();
        for sector in SectorBasis::all_magnetizations(&space) {
            let direct = phi.assemble_in_sector(&space, &sector).unwrap();
            let restricted = full.restrict(&sector, 1e-12).unwrap();
            assert!(max_abs_diff(&direct.to_dense(), &restricted.to_dense()) == 0.0);
        }
        let s = SpinMatrices::new(TwiceSpin::HALF);
        let leaky = custom(vec![TwiceSpin::HALF; 6], vec![(vec![2], s.s1)]).unwrap();
        let sector = SectorBasis::magnetization(&space, 0).unwrap();
        assert!(matches!(leaky.assemble_in_sector(&space, &sector), Err(Error::SectorLeak { .. })));
    }
}
