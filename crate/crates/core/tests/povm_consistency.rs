//! Cross-module consistency: POVM distributions against brute-force traces,
//! the weak-coupling factorization of the entropies, and property tests over
//! random inputs.

use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qscramble::entropy::{
    outcome_distribution, renyi_entropy, shannon_entropy, von_neumann_entropy,
    OutcomeDistribution,
};
use qscramble::models::{
    build_hamiltonian, gibbs_state, heisenberg_evolve, ChainVariant, DensityState, SpinChainModel,
};
use qscramble::operators::{
    eig_hermitian, embed_pauli, schatten_norm, CMatrix, Operator, PauliAxis,
};
use qscramble::weakmeas::{
    forward_povm, reverse_povm, DetectorGrid, DetectorModel, OutcomeId, StrongMeasurement,
};

fn chain(n: usize) -> SpinChainModel {
    SpinChainModel {
        n_sites: n,
        coupling_j: 1.0,
        zeta: 6.0,
        range: (n - 1).min(5),
        h_x: 1.05,
        h_z_amp: 0.375,
        variant: ChainVariant::PowerLaw,
    }
}

struct Pieces {
    fwd: qscramble::weakmeas::KrausSet,
    rev: qscramble::weakmeas::KrausSet,
    rho: DensityState,
    grid: DetectorGrid,
    strong: StrongMeasurement,
}

fn povm_pair(n: usize, gtilde: f64, t: f64) -> Pieces {
    let h = build_hamiltonian(&chain(n)).unwrap();
    let rho = gibbs_state(&h, 1.0).unwrap();
    let detector = DetectorModel::new(0.3, 0.4, 1.0, gtilde).unwrap();
    let grid = DetectorGrid::with_window(&detector, 5).unwrap();
    let v = embed_pauli(PauliAxis::Z, 0, n).unwrap();
    let w = embed_pauli(PauliAxis::Z, n - 1, n).unwrap();
    let wt = heisenberg_evolve(&w, &h, t).unwrap();
    let v_sd = eig_hermitian(&v, None).unwrap();
    let strong =
        StrongMeasurement::from_clusters(eig_hermitian(&wt, None).unwrap().labeled_projectors());
    let fwd = forward_povm(&grid, 1.0, &v_sd.cluster_near(1.0).projector(), strong.clone()).unwrap();
    let rev = reverse_povm(&grid, -1.0, &v_sd.cluster_near(-1.0).projector(), strong.clone()).unwrap();
    Pieces { fwd, rev, rho, grid, strong }
}

#[test]
fn n2_distributions_match_brute_force_traces() {
    let pieces = povm_pair(2, 0.3, 1.3);
    for povm in [&pieces.fwd, &pieces.rev] {
        let dist = outcome_distribution(povm, &pieces.rho).unwrap();
        for idx in 0..povm.len() {
            let k = povm.element(idx).unwrap();
            let m = k.matrix().adjoint() * k.matrix();
            let brute = (m * pieces.rho.matrix()).diagonal().sum();
            assert!((dist.probs()[idx] - brute.re).abs() <= 1e-12);
        }
    }
}

#[test]
fn weak_limit_entropies_factorize() {
    // At g̃ = 0 both POVM entropies split into the detector's Shannon entropy
    // plus the strong-measurement entropy.
    let pieces = povm_pair(3, 0.0, 2.0);
    let fwd_dist = outcome_distribution(&pieces.fwd, &pieces.rho).unwrap();
    let rev_dist = outcome_distribution(&pieces.rev, &pieces.rho).unwrap();
    let lhs = von_neumann_entropy(&fwd_dist) + von_neumann_entropy(&rev_dist);

    let h_detector = shannon_entropy(pieces.grid.probs());
    let w_probs: Vec<f64> = (0..pieces.strong.len())
        .map(|k| {
            let p = pieces.strong.projector(k);
            (p.matrix() * pieces.rho.matrix()).diagonal().sum().re
        })
        .collect();
    let h_w = shannon_entropy(&w_probs);
    assert_relative_eq!(lhs, 2.0 * (h_detector + h_w), epsilon = 1e-10);
}

#[test]
fn fine_grained_distributions_match_brute_force() {
    let n = 2;
    let h = build_hamiltonian(&chain(n)).unwrap();
    let rho = gibbs_state(&h, 0.8).unwrap();
    let detector = DetectorModel::new(0.3, 0.4, 1.0, 0.35).unwrap();
    let grid = DetectorGrid::with_window(&detector, 4).unwrap();
    let v = embed_pauli(PauliAxis::Z, 0, n).unwrap();
    let w = embed_pauli(PauliAxis::Z, n - 1, n).unwrap();
    let v_sd = eig_hermitian(&v, None).unwrap();
    let basis = qscramble::weakmeas::fine_grained_wt_projectors(&w, &h, 1.1).unwrap();
    let strong = StrongMeasurement::Fine(basis);
    let fwd = forward_povm(&grid, 1.0, &v_sd.cluster_near(1.0).projector(), strong.clone()).unwrap();
    let rev = reverse_povm(&grid, -1.0, &v_sd.cluster_near(-1.0).projector(), strong).unwrap();
    for povm in [&fwd, &rev] {
        let dist = outcome_distribution(povm, &rho).unwrap();
        for idx in 0..povm.len() {
            let k = povm.element(idx).unwrap();
            let m = k.matrix().adjoint() * k.matrix();
            let brute = (m * rho.matrix()).diagonal().sum().re;
            assert!((dist.probs()[idx] - brute).abs() <= 1e-12);
        }
    }
}

#[test]
fn weak_set_distribution_matches_brute_force() {
    let n = 2;
    let h = build_hamiltonian(&chain(n)).unwrap();
    let rho = gibbs_state(&h, 0.8).unwrap();
    let detector = DetectorModel::new(0.3, 0.4, 1.0, 0.2).unwrap();
    let grid = DetectorGrid::with_window(&detector, 5).unwrap();
    let v = embed_pauli(PauliAxis::Z, 0, n).unwrap();
    let proj = eig_hermitian(&v, None).unwrap().cluster_near(1.0).projector();
    let set = qscramble::weakmeas::weak_set(&grid, &proj).unwrap();
    let dist = outcome_distribution(&set, &rho).unwrap();
    for idx in 0..set.len() {
        let k = set.element(idx).unwrap();
        let m = k.matrix().adjoint() * k.matrix();
        let brute = (m * rho.matrix()).diagonal().sum().re;
        assert!((dist.probs()[idx] - brute).abs() <= 1e-12);
    }
}

#[test]
fn povm_element_eigenvalues_nonnegative() {
    let pieces = povm_pair(2, 0.25, 0.7);
    for povm in [&pieces.fwd, &pieces.rev] {
        for idx in (0..povm.len()).step_by(5) {
            let k = povm.element(idx).unwrap();
            let m = Operator::new_hermitian(k.matrix().adjoint() * k.matrix()).unwrap();
            let sd = eig_hermitian(&m, None).unwrap();
            assert!(sd.eigenvalues[0] >= -1e-12);
        }
    }
}

#[test]
fn completeness_within_tolerance_on_production_grid() {
    let detector = DetectorModel::new(0.1, 0.1, 10.0, 0.02).unwrap();
    let grid = DetectorGrid::build(&detector).unwrap();
    let h = build_hamiltonian(&chain(3)).unwrap();
    let v = embed_pauli(PauliAxis::Z, 0, 3).unwrap();
    let w = embed_pauli(PauliAxis::Z, 2, 3).unwrap();
    let wt = heisenberg_evolve(&w, &h, 2.0).unwrap();
    let v_sd = eig_hermitian(&v, None).unwrap();
    let strong =
        StrongMeasurement::from_clusters(eig_hermitian(&wt, None).unwrap().labeled_projectors());
    let fwd = forward_povm(&grid, 1.0, &v_sd.cluster_near(1.0).projector(), strong.clone()).unwrap();
    let rev = reverse_povm(&grid, -1.0, &v_sd.cluster_near(-1.0).projector(), strong).unwrap();
    let (f1, f2) = fwd.completeness_residuals();
    let (r1, r2) = rev.completeness_residuals();
    assert!(f1 <= 1e-9 && f2 <= 1e-9);
    assert!(r1 <= 1e-9 && r2 <= 1e-9);
}

fn distribution_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-6f64..1.0, 2..10).prop_map(|raw| {
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / total).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn renyi_entropy_monotone_under_order(probs in distribution_strategy(),
                                          a in 0.6f64..4.0, b in 0.6f64..4.0) {
        let labels: Vec<OutcomeId> =
            (0..probs.len()).map(|k| OutcomeId { weak: Some(k as i32), strong: None }).collect();
        let dist = OutcomeDistribution::new(labels, probs).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let h_lo = if (lo - 1.0).abs() < 1e-9 {
            von_neumann_entropy(&dist)
        } else {
            renyi_entropy(&dist, lo).unwrap()
        };
        let h_hi = if (hi - 1.0).abs() < 1e-9 {
            von_neumann_entropy(&dist)
        } else {
            renyi_entropy(&dist, hi).unwrap()
        };
        prop_assert!(h_lo >= h_hi - 1e-9);
    }

    #[test]
    fn schatten_norm_monotone_under_order(seed in 0u64..1000, p in 1.0f64..6.0, q in 1.0f64..6.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 2 + (seed % 5) as usize;
        let mut g = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                g[(i, j)] = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        let op = Operator::from_matrix(g).unwrap();
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        let n_lo = schatten_norm(&op, lo).unwrap();
        let n_hi = schatten_norm(&op, hi).unwrap();
        prop_assert!(n_lo >= n_hi - 1e-9 * (1.0 + n_lo.abs()));
    }
}
