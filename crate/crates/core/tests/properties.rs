//! Randomized properties across modules, on systems small enough for many
//! cases.

use proptest::prelude::*;

use qspin::droplets;
use qspin::dynamics;
use qspin::hilbert::{SparseOperator, SpinMatrices};
use qspin::lattice::{SpinGraph, TwiceSpin};
use qspin::linalg::{real, CMatrix};
use qspin::models::{self, Boundary, XxzParams};
use qspin::spectral::{self, LanczosOptions};
use qspin::ssep;

fn connected_graph(n: usize, extra: &[(usize, usize)], weights: &[f64]) -> SpinGraph {
    let mut edges: Vec<(usize, usize, f64)> = (1..n).map(|x| (x - 1, x, 0.0)).collect();
    for &(a, b) in extra {
        let (a, b) = (a % n, b % n);
        if a != b && !edges.iter().any(|e| (e.0, e.1) == (a.min(b), a.max(b))) {
            edges.push((a.min(b), a.max(b), 0.0));
        }
    }
    for (k, e) in edges.iter_mut().enumerate() {
        e.2 = weights[k % weights.len()];
    }
    SpinGraph::new(n, edges).unwrap()
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn lieb_robinson_bound_holds(
        n in 3usize..=6,
        extra in proptest::collection::vec((0usize..6, 0usize..6), 0..3),
        weights in proptest::collection::vec(-1.5f64..1.5, 1..6),
        site in 0usize..6,
        lambda in 0.3f64..2.0,
        tmax in 0.1f64..1.5,
    ) {
        let g = connected_graph(n, &extra, &weights);
        let phi = models::heisenberg(&g);
        prop_assume!(phi.lambda_norm(lambda, &g).unwrap() > 0.0);
        let b = SpinMatrices::new(TwiceSpin::HALF).s3 * real(2.0);
        let times: Vec<f64> = (0..=4).map(|k| tmax * k as f64 / 4.0).collect();
        let grid = dynamics::lightcone(&phi, &g, &[site % n], &b, &times, lambda).unwrap();
        for r in &grid.rows {
            prop_assert!(r.measured <= r.bound_thm1 * (1.0 + 1e-12), "x={} t={}: {} > {}", r.x, r.t, r.measured, r.bound_thm1);
            if let Some(c) = r.bound_corollary {
                prop_assert!(r.measured <= c * (1.0 + 1e-12) + 1e-12);
            }
        }
    }

    #[test]
    fn sector_union_is_full_spectrum(
        n in 2usize..=6,
        extra in proptest::collection::vec((0usize..6, 0usize..6), 0..4),
        weights in proptest::collection::vec(-2.0f64..2.0, 1..6),
        spins in proptest::collection::vec(1u32..=3, 6),
    ) {
        let spins: Vec<TwiceSpin> = spins[..n].iter().map(|&t| TwiceSpin::new(t).unwrap()).collect();
        let g = connected_graph(n, &extra, &weights).with_spins(spins).unwrap();
        let phi = models::heisenberg(&g);
        let space = phi.space().unwrap();
        prop_assume!(space.total_dim() <= 1024);
        let union = sorted(spectral::spectrum_by_sectors(&phi, &space).unwrap().into_iter().flat_map(|r| r.eigenvalues).collect());
        let full = spectral::full_spectrum(&phi.assemble(&space).unwrap(), false).unwrap().eigenvalues;
        prop_assert_eq!(union.len(), full.len());
        for (a, b) in union.iter().zip(&full) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn lanczos_matches_dense(seed in any::<u64>(), n in 2usize..80, k in 1usize..4) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let k = k.min(n);
        let mut m = CMatrix::from_fn(n, n, |_, _| qspin::linalg::C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        m = (&m + m.adjoint()) * real(0.5);
        let dense = sorted(m.clone().symmetric_eigenvalues().iter().copied().collect());
        let op = SparseOperator::from_dense(&m).unwrap();
        let lz = spectral::extremal_eigs(&op, k, LanczosOptions::default()).unwrap();
        for (a, b) in lz.eigenvalues.iter().zip(&dense) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn ssep_uniform_measure_and_conjugacy(
        n in 2usize..=5,
        extra in proptest::collection::vec((0usize..5, 0usize..5), 0..3),
        weights in proptest::collection::vec(0.1f64..3.0, 1..5),
    ) {
        let g = connected_graph(n, &extra, &weights);
        let r = ssep::ssep_gaps(&g).unwrap();
        for gap in &r.gaps {
            prop_assert!(gap.stationary_defect < 1e-12);
            prop_assert!(gap.lambda > 0.0);
        }
        let c = ssep::xxx_conjugacy_check(&g, 1e-10).unwrap();
        prop_assert!(c.max_deviation < 1e-10);
    }

    #[test]
    fn graph_text_round_trips(
        n in 2usize..=7,
        extra in proptest::collection::vec((0usize..7, 0usize..7), 0..4),
        weights in proptest::collection::vec(-3.0f64..3.0, 1..6),
    ) {
        let g = connected_graph(n, &extra, &weights).with_uniform_spin(TwiceSpin::ONE);
        let back = SpinGraph::parse(&g.to_text()).unwrap();
        prop_assert_eq!(back, g);
    }
}

#[test]
fn one_magnon_dispersion() {
    for l in 3..=12 {
        for q in [0.2, 0.5, 0.8] {
            let p = XxzParams::from_q(l, q, 1.0, Boundary::Periodic).unwrap();
            let got = droplets::periodic_sector_spectrum(&p, 1).unwrap().eigenvalues;
            let want = sorted((0..l).map(|j| 1.0 - (2.0 * std::f64::consts::PI * j as f64 / l as f64).cos() / p.delta).collect());
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-10, "L={l} q={q}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn periodic_spectra_are_translation_invariant() {
    let l = 8;
    let p = XxzParams::from_q(l, 0.5, 1.0, Boundary::Periodic).unwrap();
    let phi = models::xxz(&p);
    let space = phi.space().unwrap();
    let reference = sorted(spectral::spectrum_by_sectors(&phi, &space).unwrap().into_iter().flat_map(|r| r.eigenvalues).collect());
    let g = SpinGraph::ring(l, 1.0).unwrap();
    for shift in 1..l {
        let perm: Vec<usize> = (0..l).map(|x| (x + shift) % l).collect();
        let moved = g.relabeled(&perm).unwrap();
        let mut terms = Vec::new();
        for e in moved.edges() {
            terms.push((vec![e.a, e.b], models::xxz_bond(p.delta, 1.0)));
        }
        let shifted = models::custom(vec![TwiceSpin::HALF; l], terms).unwrap();
        let spec = sorted(spectral::spectrum_by_sectors(&shifted, &space).unwrap().into_iter().flat_map(|r| r.eigenvalues).collect());
        for (a, b) in spec.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn clustering_needs_a_unique_ground_state() {
    let g = SpinGraph::path(6, 1.0).unwrap().with_uniform_spin(TwiceSpin::ONE);
    // The open chain has a fourfold ground state; the ring has a unique one.
    let open = models::aklt(6, false).unwrap();
    let s3 = SpinMatrices::new(TwiceSpin::ONE).s3;
    assert!(dynamics::clustering_report(&open, &g, &s3, 1.0, 3, LanczosOptions::default()).is_err());
    let ring = SpinGraph::ring(6, 1.0).unwrap().with_uniform_spin(TwiceSpin::ONE);
    let r = dynamics::clustering_report(&models::aklt(6, true).unwrap(), &ring, &s3, 1.0, 3, LanczosOptions::default()).unwrap();
    assert_eq!(r.violations, 0);
    assert!(r.zero_b_deviation < 1e-9);
    assert!(r.large_b_holds());
}
