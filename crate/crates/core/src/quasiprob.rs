//! Out-of-time-ordered correlators, the OTOC quasiprobability and its K̄-fold
//! generalization, magnitude-squared commutators, Kirkwood–Dirac
//! quasiprobabilities, and weak values.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::DensityState;
use crate::operators::{max_abs, trace_pair, CMatrix, Operator, PROJECTOR_TOL};

/// Sum convention of a quasiprobability table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Normalization {
    /// Traces against a unit-trace state; the table sums to 1.
    State,
    /// Raw traces against the identity; the table sums to D.
    Identity,
    /// No sum constraint (partial projector sets).
    Raw,
}

/// Complex-valued table over outcome tuples, one axis of eigenvalue labels per
/// projector slot, stored row-major.
#[derive(Debug, Clone, Serialize)]
pub struct QuasiprobTable {
    axes: Vec<Vec<f64>>,
    values: Vec<Complex64>,
    normalization: Normalization,
}

impl QuasiprobTable {
    fn new(axes: Vec<Vec<f64>>, values: Vec<Complex64>, normalization: Normalization, dim: usize) -> Result<Self> {
        let expected: usize = axes.iter().map(|a| a.len()).product();
        if expected != values.len() {
            return Err(Error::DimensionMismatch(expected, values.len()));
        }
        let table = Self { axes, values, normalization };
        let total = table.total();
        let target = match normalization {
            Normalization::State => 1.0,
            Normalization::Identity => dim as f64,
            Normalization::Raw => return Ok(table),
        };
        let drift = (total - Complex64::new(target, 0.0)).norm();
        if drift > 1e-10 * (1.0 + target) {
            return Err(Error::NormalizationDrift(drift));
        }
        Ok(table)
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn n_slots(&self) -> usize {
        self.axes.len()
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.axes.len());
        let mut flat = 0;
        for (k, &i) in idx.iter().enumerate() {
            flat = flat * self.axes[k].len() + i;
        }
        flat
    }

    pub fn value(&self, idx: &[usize]) -> Complex64 {
        self.values[self.flat_index(idx)]
    }

    /// Eigenvalue labels of the tuple `idx`.
    pub fn labels(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().enumerate().map(|(k, &i)| self.axes[k][i]).collect()
    }

    pub fn total(&self) -> Complex64 {
        self.values.iter().sum()
    }

    /// Iterates `(tuple, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, Complex64)> + '_ {
        let shape: Vec<usize> = self.axes.iter().map(|a| a.len()).collect();
        let len = self.values.len();
        (0..len).map(move |mut flat| {
            let mut idx = vec![0usize; shape.len()];
            for k in (0..shape.len()).rev() {
                idx[k] = flat % shape[k];
                flat /= shape[k];
            }
            (idx.clone(), self.values[self.flat_index(&idx)])
        })
    }

    /// Identity-normalized view `values / D` of an identity table.
    pub fn identity_normalized(&self, dim: usize) -> Result<Self> {
        if self.normalization != Normalization::Identity {
            return Err(Error::InvalidParameter(
                "identity_normalized applies to identity-weighted tables".into(),
            ));
        }
        Ok(Self {
            axes: self.axes.clone(),
            values: self.values.iter().map(|z| z / dim as f64).collect(),
            normalization: Normalization::Raw,
        })
    }
}

fn check_resolution(projs: &[(f64, Operator)]) -> Result<usize> {
    let dim = projs
        .first()
        .map(|(_, p)| p.dim())
        .ok_or_else(|| Error::InvalidParameter("empty projector set".into()))?;
    let mut sum = CMatrix::zeros(dim, dim);
    for (_, p) in projs {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch(dim, p.dim()));
        }
        sum += p.matrix();
    }
    let res = max_abs(&(&sum - CMatrix::identity(dim, dim)));
    if res > PROJECTOR_TOL {
        return Err(Error::NonResolvingProjectors(res));
    }
    Ok(dim)
}

fn state_matrix(rho: Option<&DensityState>, dim: usize) -> Result<Option<&CMatrix>> {
    match rho {
        Some(r) => {
            if r.dim() != dim {
                return Err(Error::DimensionMismatch(r.dim(), dim));
            }
            Ok(Some(r.matrix()))
        }
        None => Ok(None),
    }
}

/// OTOC `F(t) = Tr(W(t)† V† W(t) V ρ)`; `rho = None` evaluates the raw trace
/// against the identity.
pub fn otoc(rho: Option<&DensityState>, v: &Operator, wt: &Operator) -> Result<Complex64> {
    if v.dim() != wt.dim() {
        return Err(Error::DimensionMismatch(v.dim(), wt.dim()));
    }
    let m = wt.matrix().adjoint() * v.matrix().adjoint() * wt.matrix();
    match state_matrix(rho, v.dim())? {
        Some(r) => {
            let vr = v.matrix() * r;
            Ok(trace_pair(&m, &vr))
        }
        None => Ok(trace_pair(&m, v.matrix())),
    }
}

/// Magnitude-squared commutator `⟨[W(t), V]† [W(t), V]⟩_ρ`.
pub fn commutator_magnitude(
    rho: Option<&DensityState>,
    v: &Operator,
    wt: &Operator,
) -> Result<f64> {
    if v.dim() != wt.dim() {
        return Err(Error::DimensionMismatch(v.dim(), wt.dim()));
    }
    let c = wt.matrix() * v.matrix() - v.matrix() * wt.matrix();
    let cc = c.adjoint() * &c;
    let val = match state_matrix(rho, v.dim())? {
        Some(r) => trace_pair(&cc, r),
        None => cc.diagonal().sum(),
    };
    Ok(val.re)
}

/// OTOC quasiprobability
/// `Ã_ρ(v₁, w₁, v₂, w₂) = Tr(Π^{W(t)}_{w₂} Π^V_{v₂} Π^{W(t)}_{w₁} Π^V_{v₁} ρ)`,
/// stored as raw traces when `rho = None`.
pub fn otoc_quasiprobability(
    rho: Option<&DensityState>,
    v_projs: &[(f64, Operator)],
    w_projs: &[(f64, Operator)],
) -> Result<QuasiprobTable> {
    let dim = check_resolution(v_projs)?;
    let dim_w = check_resolution(w_projs)?;
    if dim != dim_w {
        return Err(Error::DimensionMismatch(dim, dim_w));
    }
    let rho_m = state_matrix(rho, dim)?;
    let n_v = v_projs.len();
    let n_w = w_projs.len();

    // wv[w][v] = Π_w Π_v; right[w][v] additionally absorbs ρ.
    let mut wv: Vec<Vec<CMatrix>> = Vec::with_capacity(n_w);
    for (_, pw) in w_projs {
        let mut row = Vec::with_capacity(n_v);
        for (_, pv) in v_projs {
            row.push(pw.matrix() * pv.matrix());
        }
        wv.push(row);
    }
    let right: Vec<Vec<CMatrix>> = match rho_m {
        Some(r) => wv
            .iter()
            .map(|row| row.iter().map(|m| m * r).collect())
            .collect(),
        None => wv.clone(),
    };

    let v_labels: Vec<f64> = v_projs.iter().map(|(l, _)| *l).collect();
    let w_labels: Vec<f64> = w_projs.iter().map(|(l, _)| *l).collect();
    let axes = vec![v_labels.clone(), w_labels.clone(), v_labels, w_labels];
    // Row-major over (v1, w1, v2, w2).
    let mut values = Vec::with_capacity(n_v * n_w * n_v * n_w);
    #[allow(clippy::needless_range_loop)]
    for iv1 in 0..n_v {
        for iw1 in 0..n_w {
            for iv2 in 0..n_v {
                for iw2 in 0..n_w {
                    // Tr(Π_{w2} Π_{v2} Π_{w1} Π_{v1} ρ)
                    values.push(trace_pair(&wv[iw2][iv2], &right[iw1][iv1]));
                }
            }
        }
    }
    let normalization = if rho_m.is_some() { Normalization::State } else { Normalization::Identity };
    QuasiprobTable::new(axes, values, normalization, dim)
}

/// Coarse-graining `F(t) = Σ v₁ w₁ v₂* w₂* Ã_ρ(v₁, w₁, v₂, w₂)` over a
/// state-normalized table.
pub fn otoc_from_quasiprob(table: &QuasiprobTable) -> Result<Complex64> {
    if table.n_slots() != 4 {
        return Err(Error::InvalidParameter(format!(
            "OTOC coarse-graining needs 4 slots, table has {}",
            table.n_slots()
        )));
    }
    let mut f = Complex64::new(0.0, 0.0);
    for (idx, val) in table.iter() {
        let l = table.labels(&idx);
        f += val * (l[0] * l[1] * l[2] * l[3]);
    }
    Ok(f)
}

/// K̄-fold quasiprobability: ordered product of one eigenspace projector per
/// slot traced against `ρ`, slots ordered as the correlator's operators, left
/// to right.
pub fn kfold_quasiprobability(
    rho: Option<&DensityState>,
    slots: &[&[(f64, Operator)]],
) -> Result<QuasiprobTable> {
    if slots.is_empty() || !slots.len().is_multiple_of(2) {
        return Err(Error::OddSequence(slots.len()));
    }
    let mut dim = 0usize;
    for slot in slots {
        let d = check_resolution(slot)?;
        if dim == 0 {
            dim = d;
        } else if d != dim {
            return Err(Error::DimensionMismatch(dim, d));
        }
    }
    let rho_m = state_matrix(rho, dim)?;
    let axes: Vec<Vec<f64>> = slots
        .iter()
        .map(|slot| slot.iter().map(|(l, _)| *l).collect())
        .collect();
    let shape: Vec<usize> = axes.iter().map(|a| a.len()).collect();
    let total: usize = shape.iter().product();
    let mut values = vec![Complex64::new(0.0, 0.0); total];

    // Depth-first enumeration reusing prefix products.
    fn recurse(
        slots: &[&[(f64, Operator)]],
        depth: usize,
        prefix: &CMatrix,
        rho_m: Option<&CMatrix>,
        flat: usize,
        values: &mut [Complex64],
    ) {
        if depth == slots.len() {
            values[flat] = match rho_m {
                Some(r) => trace_pair(prefix, r),
                None => prefix.diagonal().sum(),
            };
            return;
        }
        for (k, (_, p)) in slots[depth].iter().enumerate() {
            let next = if depth == 0 { p.matrix().clone() } else { prefix * p.matrix() };
            recurse(slots, depth + 1, &next, rho_m, flat * slots[depth].len() + k, values);
        }
    }
    let seed = CMatrix::identity(dim, dim);
    recurse(slots, 0, &seed, rho_m, 0, &mut values);

    let normalization = if rho_m.is_some() { Normalization::State } else { Normalization::Identity };
    QuasiprobTable::new(axes, values, normalization, dim)
}

/// `⟨A(t₁) B(t₂) … R(t_{2K̄})⟩_ρ`: trace of the ordered product.
pub fn kfold_otoc(rho: Option<&DensityState>, ops: &[&Operator]) -> Result<Complex64> {
    if ops.is_empty() || !ops.len().is_multiple_of(2) {
        return Err(Error::OddSequence(ops.len()));
    }
    let dim = ops[0].dim();
    for op in ops {
        if op.dim() != dim {
            return Err(Error::DimensionMismatch(dim, op.dim()));
        }
    }
    let mut acc = ops[0].matrix().clone();
    for op in &ops[1..] {
        acc *= op.matrix();
    }
    match state_matrix(rho, dim)? {
        Some(r) => Ok(trace_pair(&acc, r)),
        None => Ok(acc.diagonal().sum()),
    }
}

/// Eigenvalue-weighted sum `Σ (∏ labels) Ã` of a K̄-fold table.
pub fn kfold_coarse_grain(table: &QuasiprobTable) -> Complex64 {
    let mut f = Complex64::new(0.0, 0.0);
    for (idx, val) in table.iter() {
        let weight: f64 = table.labels(&idx).iter().product();
        f += val * weight;
    }
    f
}

/// Conditioned expectation value
/// `A_w(i, f) = Tr(Π^F_f A Π^I_i) / (Tr(Π^F_f Π^I_i) · Tr(Π^I_i))`.
///
/// Errors when the postselection overlap vanishes; the weak value diverges
/// there rather than taking a number.
pub fn weak_value(proj_i: &Operator, a: &Operator, proj_f: &Operator) -> Result<Complex64> {
    let dim = proj_i.dim();
    if a.dim() != dim || proj_f.dim() != dim {
        return Err(Error::DimensionMismatch(dim, a.dim().max(proj_f.dim())));
    }
    let overlap = trace_pair(proj_f.matrix(), proj_i.matrix());
    if overlap.norm() <= 1e-12 * dim as f64 {
        return Err(Error::UndefinedWeakValue {
            i: format!("{:.3}", proj_i.trace().re),
            f: format!("{:.3}", proj_f.trace().re),
        });
    }
    let fa = proj_f.matrix() * a.matrix();
    let numerator = trace_pair(&fa, proj_i.matrix());
    let tr_i = proj_i.trace();
    Ok(numerator / (overlap * tr_i.re))
}

/// A weak value together with its conditioning labels.
#[derive(Debug, Clone, Serialize)]
pub struct WeakValue {
    pub value: Complex64,
    pub initial_label: String,
    pub final_label: String,
    pub operator_label: String,
}

/// Kirkwood–Dirac quasiprobability table `(f, a, i) ↦ Tr(Π^F_f Π^A_a Π^I_i)`.
///
/// The F and A slots must resolve the identity; the I slot may be a partial
/// set (for instance a single pure state), in which case the table's sum
/// follows `Tr(Σ_i Π_i)`.
pub fn kirkwood_dirac(
    f_projs: &[(f64, Operator)],
    a_projs: &[(f64, Operator)],
    i_projs: &[(f64, Operator)],
) -> Result<QuasiprobTable> {
    let dim = check_resolution(f_projs)?;
    let dim_a = check_resolution(a_projs)?;
    if dim != dim_a {
        return Err(Error::DimensionMismatch(dim, dim_a));
    }
    let mut i_trace = 0.0f64;
    for (_, p) in i_projs {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch(dim, p.dim()));
        }
        let r = p.projector_residual();
        if r > PROJECTOR_TOL {
            return Err(Error::NotProjector(r));
        }
        i_trace += p.trace().re;
    }
    let axes: Vec<Vec<f64>> = vec![
        f_projs.iter().map(|(l, _)| *l).collect(),
        a_projs.iter().map(|(l, _)| *l).collect(),
        i_projs.iter().map(|(l, _)| *l).collect(),
    ];
    let mut values = Vec::with_capacity(f_projs.len() * a_projs.len() * i_projs.len());
    for (_, pf) in f_projs {
        for (_, pa) in a_projs {
            let fa = pf.matrix() * pa.matrix();
            for (_, pi) in i_projs {
                values.push(trace_pair(&fa, pi.matrix()));
            }
        }
    }
    let normalization = if (i_trace - 1.0).abs() <= 1e-10 {
        Normalization::State
    } else if (i_trace - dim as f64).abs() <= 1e-10 * dim as f64 {
        Normalization::Identity
    } else {
        Normalization::Raw
    };
    QuasiprobTable::new(axes, values, normalization, dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_hamiltonian, gibbs_state, heisenberg_evolve, DensityState};
    use crate::operators::{eig_hermitian, embed_pauli, PauliAxis};
    use crate::testutil::chain8;
    use approx::assert_relative_eq;

    fn pauli_projectors(axis: PauliAxis, site: usize, n: usize) -> Vec<(f64, Operator)> {
        let op = embed_pauli(axis, site, n).unwrap();
        eig_hermitian(&op, None).unwrap().labeled_projectors()
    }

    #[test]
    fn otoc_commuting_paulis_is_one() {
        let v = embed_pauli(PauliAxis::Z, 0, 3).unwrap();
        let w = embed_pauli(PauliAxis::Z, 2, 3).unwrap();
        let rho = DensityState::maximally_mixed(8);
        let f = otoc(Some(&rho), &v, &w).unwrap();
        assert_relative_eq!(f.re, 1.0, epsilon = 1e-13);
        assert_relative_eq!(f.im, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn otoc_single_qubit_anticommuting() {
        // Tr(σˣ σᶻ σˣ σᶻ)/2 = −1.
        let v = embed_pauli(PauliAxis::Z, 0, 1).unwrap();
        let w = embed_pauli(PauliAxis::X, 0, 1).unwrap();
        let rho = DensityState::maximally_mixed(2);
        let f = otoc(Some(&rho), &v, &w).unwrap();
        let oracle = {
            let m = w.matrix() * v.matrix() * w.matrix() * v.matrix();
            m.diagonal().sum() / 2.0
        };
        assert_relative_eq!(f.re, oracle.re, epsilon = 1e-14);
        assert_relative_eq!(f.re, -1.0, epsilon = 1e-14);
    }

    #[test]
    fn commutator_magnitude_matches_otoc_identity() {
        // ⟨[W(t),V]†[W(t),V]⟩ = 2(1 − Re F) for Hermitian-unitary pairs.
        let h = build_hamiltonian(&chain8()).unwrap();
        let v = embed_pauli(PauliAxis::Z, 0, 8).unwrap();
        let w = embed_pauli(PauliAxis::Z, 7, 8).unwrap();
        let rho = gibbs_state(&h, 1.0).unwrap();
        for &t in &[0.0, 2.0, 5.0] {
            let wt = heisenberg_evolve(&w, &h, t).unwrap();
            let c2 = commutator_magnitude(Some(&rho), &v, &wt).unwrap();
            let f = otoc(Some(&rho), &v, &wt).unwrap();
            assert_relative_eq!(c2, 2.0 * (1.0 - f.re), epsilon = 1e-10);
        }
    }

    #[test]
    fn commutator_magnitude_qubit_oracle() {
        let v = embed_pauli(PauliAxis::Z, 0, 1).unwrap();
        let w = embed_pauli(PauliAxis::X, 0, 1).unwrap();
        let rho = DensityState::maximally_mixed(2);
        assert_relative_eq!(commutator_magnitude(Some(&rho), &v, &w).unwrap(), 4.0, epsilon = 1e-13);
        assert_relative_eq!(
            commutator_magnitude(Some(&rho), &v, &v).unwrap(),
            0.0,
            epsilon = 1e-13
        );
    }

    #[test]
    fn quasiprobability_t0_identity_diagonal() {
        // Commuting single-site projectors: raw value 2^{N−2} δ_{w1w2} δ_{v1v2}.
        let n = 4;
        let v = pauli_projectors(PauliAxis::Z, 0, n);
        let w = pauli_projectors(PauliAxis::Z, n - 1, n);
        let table = otoc_quasiprobability(None, &v, &w).unwrap();
        let expected = 2f64.powi(n as i32 - 2);
        for (idx, val) in table.iter() {
            let diag = idx[0] == idx[2] && idx[1] == idx[3];
            if diag {
                assert_relative_eq!(val.re, expected, epsilon = 1e-10);
            } else {
                assert!(val.norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn quasiprobability_sums_to_state_trace() {
        let h = build_hamiltonian(&chain8()).unwrap();
        let rho = gibbs_state(&h, 1.0).unwrap();
        let v = pauli_projectors(PauliAxis::Z, 0, 8);
        let w_op = embed_pauli(PauliAxis::Z, 7, 8).unwrap();
        let wt = heisenberg_evolve(&w_op, &h, 3.0).unwrap();
        let w = eig_hermitian(&wt, None).unwrap().labeled_projectors();
        let table = otoc_quasiprobability(Some(&rho), &v, &w).unwrap();
        assert!((table.total() - Complex64::new(1.0, 0.0)).norm() <= 1e-10);
    }

    #[test]
    fn equal_w_slice_matches_pauli_expansion() {
        // Ã_{1/D}(v1, w, v2, w) = (2 + v1 v2 + 2w(v1+v2)⟨VW(t)⟩ + v1 v2 F(t)) / 16
        // for single-site Pauli V, W on the maximally mixed state.
        let h = build_hamiltonian(&chain8()).unwrap();
        let rho = DensityState::maximally_mixed(256);
        let v_op = embed_pauli(PauliAxis::Z, 0, 8).unwrap();
        let w_op = embed_pauli(PauliAxis::Z, 7, 8).unwrap();
        let t = 4.0;
        let wt = heisenberg_evolve(&w_op, &h, t).unwrap();
        let v = pauli_projectors(PauliAxis::Z, 0, 8);
        let w = eig_hermitian(&wt, None).unwrap().labeled_projectors();
        let table = otoc_quasiprobability(Some(&rho), &v, &w).unwrap();
        let f = otoc(Some(&rho), &v_op, &wt).unwrap();
        let vw = {
            let m = v_op.matrix() * wt.matrix();
            m.diagonal().sum() / 256.0
        };
        for (iv1, &v1) in [-1.0f64, 1.0].iter().enumerate() {
            for (iv2, &v2) in [-1.0f64, 1.0].iter().enumerate() {
                for (iw, &wv) in [-1.0f64, 1.0].iter().enumerate() {
                    let lhs = table.value(&[iv1, iw, iv2, iw]);
                    let rhs = (2.0 + v1 * v2 + 2.0 * wv * (v1 + v2) * vw.re + v1 * v2 * f.re) / 16.0;
                    assert_relative_eq!(lhs.re, rhs, epsilon = 1e-10);
                    assert!(lhs.im.abs() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn coarse_graining_reproduces_otoc() {
        let h = build_hamiltonian(&chain8()).unwrap();
        let rho = gibbs_state(&h, 1.0).unwrap();
        let v_op = embed_pauli(PauliAxis::Z, 0, 8).unwrap();
        let w_op = embed_pauli(PauliAxis::Z, 7, 8).unwrap();
        let v = pauli_projectors(PauliAxis::Z, 0, 8);
        for &t in &[0.0, 2.0, 4.0, 10.0] {
            let wt = heisenberg_evolve(&w_op, &h, t).unwrap();
            let w = eig_hermitian(&wt, None).unwrap().labeled_projectors();
            let table = otoc_quasiprobability(Some(&rho), &v, &w).unwrap();
            let from_table = otoc_from_quasiprob(&table).unwrap();
            let direct = otoc(Some(&rho), &v_op, &wt).unwrap();
            assert!((from_table - direct).norm() <= 1e-10);
        }
    }

    #[test]
    fn single_qubit_coarse_graining() {
        let v = pauli_projectors(PauliAxis::Z, 0, 1);
        let w = pauli_projectors(PauliAxis::X, 0, 1);
        let rho = DensityState::maximally_mixed(2);
        let table = otoc_quasiprobability(Some(&rho), &v, &w).unwrap();
        let f = otoc_from_quasiprob(&table).unwrap();
        assert_relative_eq!(f.re, -1.0, epsilon = 1e-12);

        // Identity table at t = 0 coarse-grains to D · F for commuting slots.
        let w0 = pauli_projectors(PauliAxis::Z, 0, 1);
        let id_table = otoc_quasiprobability(None, &v, &w0).unwrap();
        let raw = otoc_from_quasiprob(&id_table).unwrap();
        assert_relative_eq!(raw.re, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn kfold_two_matches_otoc_quasiprobability() {
        let h = build_hamiltonian(&chain8()).unwrap();
        let rho = gibbs_state(&h, 1.0).unwrap();
        let v = pauli_projectors(PauliAxis::Z, 0, 8);
        let w_op = embed_pauli(PauliAxis::Z, 7, 8).unwrap();
        let wt = heisenberg_evolve(&w_op, &h, 2.0).unwrap();
        let w = eig_hermitian(&wt, None).unwrap().labeled_projectors();
        // Slot order (W(t), V, W(t), V) evaluates the same traces as the
        // (v1, w1, v2, w2) table up to index relabeling.
        let table4 = kfold_quasiprobability(Some(&rho), &[&w, &v, &w, &v]).unwrap();
        let table = otoc_quasiprobability(Some(&rho), &v, &w).unwrap();
        for iv1 in 0..2 {
            for iw1 in 0..2 {
                for iv2 in 0..2 {
                    for iw2 in 0..2 {
                        let a = table.value(&[iv1, iw1, iv2, iw2]);
                        let b = table4.value(&[iw2, iv2, iw1, iv1]);
                        assert!((a - b).norm() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn kfold_one_is_joint_projector_trace() {
        let v = pauli_projectors(PauliAxis::Z, 0, 2);
        let w = pauli_projectors(PauliAxis::X, 0, 2);
        let rho = DensityState::maximally_mixed(4);
        let table = kfold_quasiprobability(Some(&rho), &[&w, &v]).unwrap();
        for (idx, val) in table.iter() {
            let direct = trace_pair(
                &(w[idx[0]].1.matrix() * v[idx[1]].1.matrix()),
                rho.matrix(),
            );
            assert!((val - direct).norm() <= 1e-13);
        }
        assert!((table.total() - Complex64::new(1.0, 0.0)).norm() <= 1e-12);
    }

    #[test]
    fn kfold_three_coarse_grains_to_correlator() {
        // N = 3 chain, K̄ = 3 alternating W(t), V sequence.
        let model = crate::models::SpinChainModel {
            n_sites: 3,
            coupling_j: 1.0,
            zeta: 6.0,
            range: 2,
            h_x: 1.05,
            h_z_amp: 0.375,
            variant: crate::models::ChainVariant::PowerLaw,
        };
        let h = build_hamiltonian(&model).unwrap();
        let rho = gibbs_state(&h, 0.7).unwrap();
        let v_op = embed_pauli(PauliAxis::Z, 0, 3).unwrap();
        let w_op = embed_pauli(PauliAxis::Z, 2, 3).unwrap();
        let wt = heisenberg_evolve(&w_op, &h, 1.4).unwrap();
        let v = pauli_projectors(PauliAxis::Z, 0, 3);
        let w = eig_hermitian(&wt, None).unwrap().labeled_projectors();
        let table = kfold_quasiprobability(Some(&rho), &[&w, &v, &w, &v, &w, &v]).unwrap();
        let direct = kfold_otoc(Some(&rho), &[&wt, &v_op, &wt, &v_op, &wt, &v_op]).unwrap();
        let summed = kfold_coarse_grain(&table);
        assert!((summed - direct).norm() <= 1e-10);
        assert!((table.total() - Complex64::new(1.0, 0.0)).norm() <= 1e-10);
    }

    #[test]
    fn kfold_trivial_identity_sequence() {
        let rho = DensityState::maximally_mixed(4);
        let id = Operator::identity(4);
        let f = kfold_otoc(Some(&rho), &[&id, &id, &id, &id]).unwrap();
        assert_relative_eq!(f.re, 1.0, epsilon = 1e-14);
        assert!(kfold_otoc(Some(&rho), &[&id, &id, &id]).is_err());
    }

    #[test]
    fn weak_value_identity_operator() {
        // Rank-1 preselection: A = 1 gives 1.
        let v = pauli_projectors(PauliAxis::Z, 0, 1);
        let f = pauli_projectors(PauliAxis::X, 0, 1);
        let a = Operator::identity(2);
        let wv = weak_value(&v[1].1, &a, &f[1].1).unwrap();
        assert_relative_eq!(wv.re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(wv.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn weak_value_qubit_mub_example() {
        // I = σᶻ, A = σʸ, F = σˣ: A_w(z, x) = x z i.
        let zp = pauli_projectors(PauliAxis::Z, 0, 1);
        let xp = pauli_projectors(PauliAxis::X, 0, 1);
        let a = embed_pauli(PauliAxis::Y, 0, 1).unwrap();
        for (iz, &z) in [-1.0f64, 1.0].iter().enumerate() {
            for (ix, &x) in [-1.0f64, 1.0].iter().enumerate() {
                let wv = weak_value(&zp[iz].1, &a, &xp[ix].1).unwrap();
                assert_relative_eq!(wv.re, 0.0, epsilon = 1e-12);
                assert_relative_eq!(wv.im, x * z, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn weak_value_no_postselection_is_expectation() {
        let zp = pauli_projectors(PauliAxis::Z, 0, 1);
        let a = embed_pauli(PauliAxis::Z, 0, 1).unwrap();
        let wv = weak_value(&zp[1].1, &a, &zp[1].1).unwrap();
        assert_relative_eq!(wv.re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn weak_value_rejects_orthogonal_postselection() {
        let zp = pauli_projectors(PauliAxis::Z, 0, 1);
        let a = embed_pauli(PauliAxis::Y, 0, 1).unwrap();
        assert!(matches!(
            weak_value(&zp[0].1, &a, &zp[1].1),
            Err(Error::UndefinedWeakValue { .. })
        ));
    }

    #[test]
    fn kirkwood_dirac_mub_magnitudes() {
        // Mutually unbiased triple: |Tr(Π^x Π^y Π^z)| = 1/(2√2) for every tuple.
        let xp = pauli_projectors(PauliAxis::X, 0, 1);
        let yp = pauli_projectors(PauliAxis::Y, 0, 1);
        let zp = pauli_projectors(PauliAxis::Z, 0, 1);
        let table = kirkwood_dirac(&xp, &yp, &zp).unwrap();
        for (_, val) in table.iter() {
            assert_relative_eq!(val.norm(), 1.0 / (2.0 * 2.0f64.sqrt()), epsilon = 1e-12);
        }
        assert_eq!(table.normalization(), Normalization::Identity);
    }

    #[test]
    fn kirkwood_dirac_pure_state_sums_to_one() {
        let xp = pauli_projectors(PauliAxis::X, 0, 1);
        let yp = pauli_projectors(PauliAxis::Y, 0, 1);
        let zp = pauli_projectors(PauliAxis::Z, 0, 1);
        let pure_i = vec![(1.0, zp[1].1.clone())];
        let table = kirkwood_dirac(&xp, &yp, &pure_i).unwrap();
        assert_eq!(table.normalization(), Normalization::State);
        assert!((table.total() - Complex64::new(1.0, 0.0)).norm() <= 1e-12);
    }

    #[test]
    fn kirkwood_dirac_a_marginal_is_classical() {
        let xp = pauli_projectors(PauliAxis::X, 0, 1);
        let yp = pauli_projectors(PauliAxis::Y, 0, 1);
        let zp = pauli_projectors(PauliAxis::Z, 0, 1);
        let table = kirkwood_dirac(&xp, &yp, &zp).unwrap();
        for (f, xproj) in xp.iter().enumerate() {
            for (i, zproj) in zp.iter().enumerate() {
                let marginal: Complex64 = (0..2).map(|a| table.value(&[f, a, i])).sum();
                let direct = trace_pair(xproj.1.matrix(), zproj.1.matrix());
                assert!((marginal - direct).norm() <= 1e-12);
                assert!(marginal.im.abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn equal_v_slots_are_real_for_identity_weighting() {
        // Ã_1(v, w1, v, w2) is real for every argument pair.
        let h = build_hamiltonian(&chain8()).unwrap();
        let v = pauli_projectors(PauliAxis::Z, 0, 8);
        let w_op = embed_pauli(PauliAxis::Z, 7, 8).unwrap();
        let wt = heisenberg_evolve(&w_op, &h, 6.0).unwrap();
        let w = eig_hermitian(&wt, None).unwrap().labeled_projectors();
        let table = otoc_quasiprobability(None, &v, &w).unwrap();
        for iv in 0..2 {
            for iw1 in 0..2 {
                for iw2 in 0..2 {
                    assert!(table.value(&[iv, iw1, iv, iw2]).im.abs() <= 1e-10);
                }
            }
        }
        // Equal-w slices are real as well.
        for iv1 in 0..2 {
            for iv2 in 0..2 {
                for iw in 0..2 {
                    assert!(table.value(&[iv1, iw, iv2, iw]).im.abs() <= 1e-10);
                }
            }
        }
    }
}
