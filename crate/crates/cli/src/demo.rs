//! Small self-contained demonstrations: the single-qubit weak-value
//! uncertainty relation and a K̄-fold protocol on a short chain.

use anyhow::{anyhow, Result};
use num_complex::Complex64;
use serde::Serialize;

use qscramble::bounds::{kfold_bound, weak_value_bound, BoundReport, KfoldWeakSlot, WeakDetector, TERM_KFOLD_QUASI};
use qscramble::entropy::{outcome_distribution, renyi_entropy, OutcomeDistribution};
use qscramble::models::{build_hamiltonian, gibbs_state, heisenberg_evolve, ChainVariant, DensityState, SpinChainModel};
use qscramble::operators::{eig_hermitian, embed_pauli, CVector, Operator, PauliAxis};
use qscramble::quasiprob::{kfold_coarse_grain, kfold_otoc, kfold_quasiprobability, weak_value, WeakValue};
use qscramble::weakmeas::{explicit_set, qubit_detector_kraus, KrausKind, OutcomeId};

/// End-to-end single-qubit demonstration: detector in `|x+⟩`, weak `σ^y`
/// measurement via a z-controlled-y, strong `σ^x` postselection, state `|z+⟩`.
#[derive(Debug, Clone, Serialize)]
pub struct QubitDemo {
    pub gtilde: f64,
    pub h_min_povm1: f64,
    pub h_max_povm2: f64,
    pub lhs_minmax: f64,
    pub f_weak: BoundReport,
    pub weak_values: Vec<WeakValue>,
    pub povm1_probs: Vec<f64>,
    pub povm2_probs: Vec<f64>,
    pub satisfied: bool,
}

pub fn run_qubit_weakvalue_demo(gtilde: f64) -> Result<QubitDemo> {
    let detector_set = qubit_detector_kraus(gtilde)?;
    let zp = eig_hermitian(&embed_pauli(PauliAxis::Z, 0, 1)?, None)?.labeled_projectors();
    let xp = eig_hermitian(&embed_pauli(PauliAxis::X, 0, 1)?, None)?.labeled_projectors();
    let a = embed_pauli(PauliAxis::Y, 0, 1)?;

    // ρ = |z+⟩⟨z+|.
    let mut psi = CVector::zeros(2);
    psi[0] = Complex64::new(1.0, 0.0);
    let rho = DensityState::from_pure(&psi, "z+")?;

    // POVM I: weak σ^y measurement (outcome y) then strong σ^x (outcome x).
    let mut povm1_elements = Vec::new();
    for y_idx in 0..detector_set.len() {
        let k = detector_set.element(y_idx)?;
        let y = detector_set.label(y_idx).weak.expect("detector outcomes are labeled by y");
        for (x_label, px) in &xp {
            let m = px.matrix() * k.matrix();
            povm1_elements.push((
                OutcomeId {
                    weak: Some(y),
                    strong: Some(qscramble::weakmeas::StrongLabel { value: *x_label, sub: None }),
                },
                Operator::from_matrix(m)?,
            ));
        }
    }
    let povm1 = explicit_set(KrausKind::Forward, povm1_elements)?;
    let dist1 = outcome_distribution(&povm1, &rho)?;
    let h_min = renyi_entropy(&dist1, f64::INFINITY)?;

    // POVM II: strong σ^z measurement.
    let povm2_elements: Vec<(OutcomeId, Operator)> = zp
        .iter()
        .map(|(label, p)| {
            (
                OutcomeId {
                    weak: None,
                    strong: Some(qscramble::weakmeas::StrongLabel { value: *label, sub: None }),
                },
                p.clone(),
            )
        })
        .collect();
    let povm2 = explicit_set(KrausKind::Reverse, povm2_elements)?;
    let dist2 = outcome_distribution(&povm2, &rho)?;
    let h_max = renyi_entropy(&dist2, 0.5)?;

    // First-order couplings g^Y_y = −y i g̃ / √2 on probabilities 1/2.
    let detector = WeakDetector {
        probs: vec![0.5, 0.5],
        couplings: vec![
            Complex64::new(0.0, -gtilde / 2f64.sqrt()),
            Complex64::new(0.0, gtilde / 2f64.sqrt()),
        ],
    };
    let f_weak = weak_value_bound(&zp, &a, &xp, &detector)?;

    let mut weak_values = Vec::new();
    for (z_label, pz) in &zp {
        for (x_label, px) in &xp {
            let value = weak_value(pz, &a, px)?;
            weak_values.push(WeakValue {
                value,
                initial_label: format!("z={z_label:+}"),
                final_label: format!("x={x_label:+}"),
                operator_label: "sigma_y".to_string(),
            });
        }
    }

    let lhs = h_min + h_max;
    Ok(QubitDemo {
        gtilde,
        h_min_povm1: h_min,
        h_max_povm2: h_max,
        lhs_minmax: lhs,
        satisfied: lhs >= f_weak.value - 1e-9,
        f_weak,
        weak_values,
        povm1_probs: dist1.probs().to_vec(),
        povm2_probs: dist2.probs().to_vec(),
    })
}

/// K̄-fold protocol on a 3-site chain: quasiprobability table, coarse-graining
/// residual, and the zeroth-order bound with its quasiprobability term.
#[derive(Debug, Clone, Serialize)]
pub struct KfoldDemo {
    pub kbar: usize,
    pub t: f64,
    pub correlator_re: f64,
    pub correlator_im: f64,
    pub coarse_grain_residual: f64,
    pub table_total_re: f64,
    pub bound: BoundReport,
    pub quasi_term: f64,
}

pub fn run_kfold_demo(kbar: usize, t: f64) -> Result<KfoldDemo> {
    if kbar < 2 {
        return Err(anyhow!("K̄ must be at least 2"));
    }
    if kbar > 4 {
        return Err(anyhow!("K̄ above 4 exceeds the demo's table size"));
    }
    let model = SpinChainModel {
        n_sites: 3,
        coupling_j: 1.0,
        zeta: 6.0,
        range: 2,
        h_x: 1.05,
        h_z_amp: 0.375,
        variant: ChainVariant::PowerLaw,
    };
    let h = build_hamiltonian(&model)?;
    let rho = gibbs_state(&h, 1.0)?;
    let v = embed_pauli(PauliAxis::Z, 0, 3)?;
    let w = embed_pauli(PauliAxis::Z, 2, 3)?;
    let wt = heisenberg_evolve(&w, &h, t)?;
    let v_projs = eig_hermitian(&v, None)?.labeled_projectors();
    let w_projs = eig_hermitian(&wt, None)?.labeled_projectors();

    // Alternating sequence W(t), V, W(t), V, … of 2K̄ slots.
    let mut ops: Vec<&Operator> = Vec::new();
    let mut slots: Vec<&[(f64, Operator)]> = Vec::new();
    for k in 0..2 * kbar {
        if k % 2 == 0 {
            ops.push(&wt);
            slots.push(&w_projs);
        } else {
            ops.push(&v);
            slots.push(&v_projs);
        }
    }
    let correlator = kfold_otoc(Some(&rho), &ops)?;
    let table = kfold_quasiprobability(Some(&rho), &slots)?;
    let residual = (kfold_coarse_grain(&table) - correlator).norm();

    // Identity-weighted table feeds the bound's quasiprobability term.
    let id_table = kfold_quasiprobability(None, &slots)?;
    let detector_model = qscramble::weakmeas::DetectorModel::new(0.4, 0.5, 1.0, 0.1)?;
    let grid = qscramble::weakmeas::DetectorGrid::with_window(&detector_model, 5)?;
    let det = WeakDetector { probs: grid.probs().to_vec(), couplings: grid.couplings().to_vec() };
    // Chosen eigenvalue +1 on every weakly measured slot.
    let weak_slots: Vec<KfoldWeakSlot> = (0..2 * kbar - 2)
        .map(|_| KfoldWeakSlot { detector: det.clone(), chosen: 1 })
        .collect();
    let bound = kfold_bound(&weak_slots, &w_projs, slots[kbar], &id_table)?;
    let quasi_term = bound.term(TERM_KFOLD_QUASI).unwrap_or(f64::NAN);

    Ok(KfoldDemo {
        kbar,
        t,
        correlator_re: correlator.re,
        correlator_im: correlator.im,
        coarse_grain_residual: residual,
        table_total_re: table.total().re,
        bound,
        quasi_term,
    })
}

/// Point-mass check helper used by the demo tests.
pub fn distribution_is_uniform(dist: &OutcomeDistribution, tol: f64) -> bool {
    let n = dist.len() as f64;
    dist.probs().iter().all(|&p| (p - 1.0 / n).abs() <= tol)
}
