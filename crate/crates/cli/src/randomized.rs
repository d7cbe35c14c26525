//! Randomized theorem verification: small chains, random Hamiltonians and
//! states, coarse detector grids, exact overlaps.

use anyhow::Result;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use qscramble::bounds::{
    overlap_c_exact, scrambling_bound_exact_trace, scrambling_bound_taylor,
};
use qscramble::entropy::{entropy_of_order, outcome_distribution};
use qscramble::models::{heisenberg_evolve, DensityState};
use qscramble::operators::{eig_hermitian, embed_pauli, CMatrix, Operator, PauliAxis};
use qscramble::weakmeas::{forward_povm, reverse_povm, DetectorGrid, DetectorModel, StrongMeasurement};

/// One random instance's slacks, all in bits.
#[derive(Debug, Clone, Serialize)]
pub struct InstanceResult {
    pub n_sites: usize,
    pub gtilde: f64,
    pub t: f64,
    pub slack_minmax: f64,
    pub slack_vn: f64,
    pub chain_slack: f64,
    pub taylor_gap: Option<f64>,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RandomCheckSummary {
    pub instances: usize,
    pub failures: usize,
    pub worst_slack_minmax: f64,
    pub worst_slack_vn: f64,
    pub worst_chain_slack: f64,
    pub worst_taylor_gap: f64,
}

fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> Operator {
    let mut g = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            g[(i, j)] = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
    }
    let h = (&g + g.adjoint()).scale(0.5);
    Operator::new(h, true, false).expect("symmetrized matrix is Hermitian")
}

fn random_density(dim: usize, rng: &mut ChaCha8Rng) -> DensityState {
    let mut g = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            g[(i, j)] = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
    }
    let w = &g * g.adjoint();
    let tr: Complex64 = w.diagonal().sum();
    DensityState::new(w.map(|z| z / tr.re), "random").expect("Wishart matrix is a valid state")
}

fn random_axis(rng: &mut ChaCha8Rng) -> PauliAxis {
    match rng.gen_range(0..3) {
        0 => PauliAxis::X,
        1 => PauliAxis::Y,
        _ => PauliAxis::Z,
    }
}

/// Runs `n` random instances at `N ∈ {2, 3}` with 11-cell detector grids.
///
/// Each instance checks, with the exact overlap `c`:
///   H_min + H_max ≥ −log₂ c  and  H_vN + H_vN ≥ −log₂ c  (slack ≥ −1e-9),
/// the bound chain −log₂ c ≥ exact-trace bound, and, when `g̃ ≤ 0.05`,
/// exact-trace ≥ Taylor − 0.05 bits.
pub fn run_random_checks(n: usize, seed: u64) -> Result<(Vec<InstanceResult>, RandomCheckSummary)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut results = Vec::with_capacity(n);
    for round in 0..n {
        let n_sites = 2 + (round % 2);
        let dim = 1usize << n_sites;
        let h = random_hermitian(dim, &mut rng);
        let rho = random_density(dim, &mut rng);
        let gtilde = rng.gen::<f64>() * 0.3;
        let t = rng.gen::<f64>() * 3.0;
        let x0 = rng.gen::<f64>() * 2.0;
        let detector = DetectorModel::new(0.4, 0.5, x0, gtilde)?;
        let grid = DetectorGrid::with_window(&detector, 5)?;

        let v = embed_pauli(random_axis(&mut rng), 0, n_sites)?;
        let w = embed_pauli(random_axis(&mut rng), n_sites - 1, n_sites)?;
        let wt = heisenberg_evolve(&w, &h, t)?;
        let v_sd = eig_hermitian(&v, None)?;
        let strong =
            StrongMeasurement::from_clusters(eig_hermitian(&wt, None)?.labeled_projectors());
        let v1 = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let v2 = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let fwd = forward_povm(&grid, v1, &v_sd.cluster_near(v1).projector(), strong.clone())?;
        let rev = reverse_povm(&grid, v2, &v_sd.cluster_near(v2).projector(), strong)?;

        let fwd_dist = outcome_distribution(&fwd, &rho)?;
        let rev_dist = outcome_distribution(&rev, &rho)?;
        let lhs_minmax =
            entropy_of_order(&fwd_dist, f64::INFINITY)? + entropy_of_order(&rev_dist, 0.5)?;
        let lhs_vn = entropy_of_order(&fwd_dist, 1.0)? + entropy_of_order(&rev_dist, 1.0)?;

        let c = overlap_c_exact(&fwd, &rev, None)?;
        let rhs = -c.log2();
        let exact = scrambling_bound_exact_trace(&fwd, &rev)?;
        let taylor = scrambling_bound_taylor(&fwd, &rev, None)?;

        let slack_minmax = lhs_minmax - rhs;
        let slack_vn = lhs_vn - rhs;
        let chain_slack = rhs - exact.value;
        let taylor_gap = (gtilde <= 0.05).then_some(taylor.value - exact.value);
        let ok = slack_minmax >= -1e-9
            && slack_vn >= -1e-9
            && chain_slack >= -1e-9
            && taylor_gap.is_none_or(|g| g <= 0.05);
        results.push(InstanceResult {
            n_sites,
            gtilde,
            t,
            slack_minmax,
            slack_vn,
            chain_slack,
            taylor_gap,
            ok,
        });
    }
    let summary = RandomCheckSummary {
        instances: results.len(),
        failures: results.iter().filter(|r| !r.ok).count(),
        worst_slack_minmax: results.iter().map(|r| r.slack_minmax).fold(f64::INFINITY, f64::min),
        worst_slack_vn: results.iter().map(|r| r.slack_vn).fold(f64::INFINITY, f64::min),
        worst_chain_slack: results.iter().map(|r| r.chain_slack).fold(f64::INFINITY, f64::min),
        worst_taylor_gap: results
            .iter()
            .filter_map(|r| r.taylor_gap)
            .fold(f64::NEG_INFINITY, f64::max),
    };
    Ok((results, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_batch_all_pass() {
        let (results, summary) = run_random_checks(12, 424242).unwrap();
        assert_eq!(results.len(), 12);
        assert_eq!(summary.failures, 0);
        assert!(summary.worst_slack_minmax >= -1e-9);
        assert!(summary.worst_chain_slack >= -1e-9);
    }

    #[test]
    fn deterministic_under_seed() {
        let (a, _) = run_random_checks(4, 7).unwrap();
        let (b, _) = run_random_checks(4, 7).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.slack_minmax, y.slack_minmax);
            assert_eq!(x.chain_slack, y.chain_slack);
        }
    }
}
