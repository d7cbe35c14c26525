//! Entropic uncertainty bounds: the exact pre-Taylor trace bound, its
//! second-order Taylor decomposition, the exact POVM overlap for small
//! instances, the weak-value bound, and the K̄-fold zeroth-order bound.
//!
//! The exact trace evaluation is the authoritative bound. Each candidate
//! tuple's trace is assembled from eight precomputed projector traces and the
//! detector scalars, so a tuple costs O(1) after the per-time setup; the
//! Taylor report expands the same scalar form, which keeps the term
//! bookkeeping consistent with the exact value.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::entropy::{entropy_of_order, entropy_pair_beta, outcome_distribution};
use crate::error::{Error, Result};
use crate::models::DensityState;
use crate::operators::{trace_pair, CMatrix, Operator, PROJECTOR_TOL};
use crate::weakmeas::{DetectorGrid, KrausSet, StrongLabel, StrongMeasurement};

pub const TERM_C0: &str = "c0";
pub const TERM_G1_SUM: &str = "g1_sum";
pub const TERM_G2_CLASSICAL: &str = "g2_classical";
pub const TERM_QUASI_CROSS: &str = "g2_quasi_cross";
pub const TERM_QUASI_11: &str = "g2_quasi_11";
pub const TERM_QUASI_22: &str = "g2_quasi_22";
pub const TERM_REMAINDER: &str = "higher_order_remainder";
pub const TERM_KFOLD_QUASI: &str = "kfold_quasi";

/// Default ceiling on `|g|/√p` before the Taylor report attaches a warning.
pub const TAYLOR_DIAG_THRESHOLD: f64 = 0.5;

/// Default budget for the exact overlap: outcome pairs × dim³.
pub const OVERLAP_BUDGET: usize = 1_000_000_000;

const LN2: f64 = std::f64::consts::LN_2;
const TRACE_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundMethod {
    Taylor,
    ExactTrace,
    ExactOverlap,
}

/// Outcome tuple attaining the minimum.
#[derive(Debug, Clone, Serialize)]
pub enum Minimizer {
    Scrambling { j1: i32, j2: i32, w1: StrongLabel, w2: StrongLabel },
    WeakValue { i: String, j: usize, f: String },
    KFold { weak: Vec<usize>, a: String, f: String },
    None,
}

/// Term-by-term decomposition of an uncertainty bound, in bits.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub method: BoundMethod,
    pub value: f64,
    pub terms: BTreeMap<String, f64>,
    pub minimizer: Minimizer,
    pub warnings: Vec<String>,
}

impl BoundReport {
    pub fn term(&self, key: &str) -> Option<f64> {
        self.terms.get(key).copied()
    }

    /// Sum of every coupling-dependent term (everything except the leading
    /// classical term and the remainder).
    pub fn coupling_dependent_sum(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(k, _)| k.as_str() != TERM_C0 && k.as_str() != TERM_REMAINDER)
            .map(|(_, v)| v)
            .sum()
    }
}

struct Parts<'a> {
    grid: &'a DetectorGrid,
    v1: f64,
    proj_v1: &'a Operator,
    v2: f64,
    proj_v2: &'a Operator,
    strong: &'a StrongMeasurement,
}

fn extract_parts<'a>(fwd: &'a KrausSet, rev: &'a KrausSet) -> Result<Parts<'a>> {
    let (g_f, v1, pv1, strong_f, rev_f) = fwd
        .composite_parts()
        .ok_or_else(|| Error::InconsistentSlots("forward set is not a composite POVM".into()))?;
    let (g_r, v2, pv2, strong_r, rev_r) = rev
        .composite_parts()
        .ok_or_else(|| Error::InconsistentSlots("reverse set is not a composite POVM".into()))?;
    if rev_f || !rev_r {
        return Err(Error::InconsistentSlots(
            "expected a forward set and a reverse set, in that order".into(),
        ));
    }
    if fwd.dim() != rev.dim() {
        return Err(Error::DimensionMismatch(fwd.dim(), rev.dim()));
    }
    if g_f.len() != g_r.len() {
        return Err(Error::InconsistentSlots("detector grids differ in length".into()));
    }
    for k in 0..g_f.len() {
        if (g_f.probs()[k] - g_r.probs()[k]).abs() > 1e-12
            || (g_f.couplings()[k] - g_r.couplings()[k]).norm() > 1e-12
        {
            return Err(Error::InconsistentSlots("detector grids differ".into()));
        }
    }
    if strong_f.len() != strong_r.len() {
        return Err(Error::InconsistentSlots("strong measurements differ in size".into()));
    }
    Ok(Parts { grid: g_f, v1, proj_v1: pv1, v2, proj_v2: pv2, strong: strong_f })
}

/// Equal-outcome (`w₁ = w₂ = w`) projector traces feeding the Taylor series.
struct DiagTraces {
    tw: Vec<f64>,
    t1: Vec<f64>,
    t2: Vec<f64>,
    a11: Vec<f64>,
    a22: Vec<f64>,
    ax: Vec<f64>,
}

/// Full off-diagonal trace tables for the coarse exact bound.
struct CoarseTraces {
    diag: DiagTraces,
    a11: Vec<Vec<f64>>,
    a22: Vec<Vec<f64>>,
    ax: Vec<Vec<Complex64>>,
}

fn coarse_traces(list: &[(f64, Operator)], pv1: &Operator, pv2: &Operator) -> CoarseTraces {
    let n = list.len();
    let mut tw = vec![0.0; n];
    let mut t1 = vec![0.0; n];
    let mut t2 = vec![0.0; n];
    let mut a11 = vec![vec![0.0; n]; n];
    let mut a22 = vec![vec![0.0; n]; n];
    let mut ax = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for (w1, (_, pw1)) in list.iter().enumerate() {
        tw[w1] = pw1.trace().re;
        t1[w1] = trace_pair(pw1.matrix(), pv1.matrix()).re;
        t2[w1] = trace_pair(pw1.matrix(), pv2.matrix()).re;
        let e1 = pw1.matrix() * pv1.matrix();
        let e2 = pw1.matrix() * pv2.matrix();
        let c1 = pv1.matrix() * &e1;
        let c2 = pv2.matrix() * &e2;
        let ex = pv2.matrix() * &e1;
        for (w2, (_, pw2)) in list.iter().enumerate() {
            a11[w1][w2] = trace_pair(pw2.matrix(), &c1).re;
            a22[w1][w2] = trace_pair(pw2.matrix(), &c2).re;
            ax[w1][w2] = trace_pair(pw2.matrix(), &ex);
        }
    }
    let diag = DiagTraces {
        tw,
        t1,
        t2,
        a11: (0..n).map(|w| a11[w][w]).collect(),
        a22: (0..n).map(|w| a22[w][w]).collect(),
        ax: (0..n).map(|w| ax[w][w].re).collect(),
    };
    CoarseTraces { diag, a11, a22, ax }
}

fn fine_diag_traces(d1: &[f64], same_v: bool) -> DiagTraces {
    let n = d1.len();
    let mut t2 = Vec::with_capacity(n);
    for &d in d1 {
        t2.push(if same_v { d } else { 1.0 - d });
    }
    DiagTraces {
        tw: vec![1.0; n],
        t1: d1.to_vec(),
        t2: t2.clone(),
        a11: d1.iter().map(|d| d * d).collect(),
        a22: t2.iter().map(|d| d * d).collect(),
        ax: d1.iter().zip(&t2).map(|(a, b)| a * b).collect(),
    }
}

/// Per-cell detector scalars.
struct CellData {
    p: Vec<f64>,
    sp: Vec<f64>,
    g: Vec<Complex64>,
}

fn cell_data(grid: &DetectorGrid) -> CellData {
    CellData {
        p: grid.probs().to_vec(),
        sp: grid.probs().iter().map(|p| p.sqrt()).collect(),
        g: grid.couplings().to_vec(),
    }
}

/// Exact trace of
/// `Tr(Π_{w2} K_{v2,j2} K†_{v1,j1} Π_{w1} K_{v1,j1} K†_{v2,j2})`
/// from the multiplied-out scalar expansion.
#[allow(clippy::too_many_arguments)]
fn exact_trace_scalar(
    cd: &CellData,
    ct: &CoarseTraces,
    same_v: bool,
    j1: usize,
    j2: usize,
    w1: usize,
    w2: usize,
) -> f64 {
    let (p1, p2) = (cd.p[j1], cd.p[j2]);
    let (sp1, sp2) = (cd.sp[j1], cd.sp[j2]);
    let (g1, g2) = (cd.g[j1], cd.g[j2]);
    let a11 = ct.a11[w1][w2];
    let a22 = ct.a22[w1][w2];
    let ax = ct.ax[w1][w2];
    let mut tr = p2 * g1.norm_sqr() * a11 + p1 * g2.norm_sqr() * a22
        + 2.0 * sp1 * sp2 * (g1 * g2 * ax).re;
    if w1 == w2 {
        tr += p1 * p2 * ct.diag.tw[w2]
            + 2.0 * sp1 * p2 * g1.re * ct.diag.t1[w2]
            + 2.0 * p1 * sp2 * g2.re * ct.diag.t2[w2];
        if same_v {
            tr += 2.0 * sp1 * sp2 * (g1 * g2.conj()).re * ct.diag.t1[w2];
        }
    }
    if same_v {
        // Equal-v quasiprobability slices are real; a11 carries them.
        tr += (2.0 * sp2 * g1.norm_sqr() * g2.re
            + 2.0 * sp1 * g2.norm_sqr() * g1.re
            + g1.norm_sqr() * g2.norm_sqr())
            * a11;
    }
    tr
}

/// Second-order Taylor terms of `−log₂ trace` at `w₁ = w₂ = w`.
fn taylor_terms(
    cd: &CellData,
    dt: &DiagTraces,
    same_v: bool,
    j1: usize,
    j2: usize,
    w: usize,
) -> BTreeMap<String, f64> {
    let (p1, p2) = (cd.p[j1], cd.p[j2]);
    let (sp1, sp2) = (cd.sp[j1], cd.sp[j2]);
    let (g1, g2) = (cd.g[j1], cd.g[j2]);
    let tw = dt.tw[w];
    let x1 = (2.0 * g1.re * dt.t1[w] / sp1 + 2.0 * g2.re * dt.t2[w] / sp2) / tw;
    let quasi_cross = -(2.0 * (g1 * g2).re * dt.ax[w] / (sp1 * sp2 * tw)) / LN2;
    let quasi_11 = -(g1.norm_sqr() * dt.a11[w] / (p1 * tw)) / LN2;
    let quasi_22 = -(g2.norm_sqr() * dt.a22[w] / (p2 * tw)) / LN2;
    let classical_dv = if same_v {
        -(2.0 * (g1 * g2.conj()).re * dt.t1[w] / (sp1 * sp2 * tw)) / LN2
    } else {
        0.0
    };
    let mut terms = BTreeMap::new();
    terms.insert(TERM_C0.to_string(), -(p1 * p2 * tw).log2());
    terms.insert(TERM_G1_SUM.to_string(), -x1 / LN2);
    terms.insert(TERM_G2_CLASSICAL.to_string(), classical_dv + x1 * x1 / (2.0 * LN2));
    terms.insert(TERM_QUASI_CROSS.to_string(), quasi_cross);
    terms.insert(TERM_QUASI_11.to_string(), quasi_11);
    terms.insert(TERM_QUASI_22.to_string(), quasi_22);
    terms
}

fn taylor_value(cd: &CellData, dt: &DiagTraces, same_v: bool, j1: usize, j2: usize, w: usize) -> f64 {
    let (p1, p2) = (cd.p[j1], cd.p[j2]);
    let (sp1, sp2) = (cd.sp[j1], cd.sp[j2]);
    let (g1, g2) = (cd.g[j1], cd.g[j2]);
    let tw = dt.tw[w];
    let x1 = (2.0 * g1.re * dt.t1[w] / sp1 + 2.0 * g2.re * dt.t2[w] / sp2) / tw;
    let mut x2 = (g1.norm_sqr() * dt.a11[w] / p1
        + g2.norm_sqr() * dt.a22[w] / p2
        + 2.0 * (g1 * g2).re * dt.ax[w] / (sp1 * sp2))
        / tw;
    if same_v {
        x2 += 2.0 * (g1 * g2.conj()).re * dt.t1[w] / (sp1 * sp2 * tw);
    }
    -(p1 * p2 * tw).log2() - (x1 + x2 - x1 * x1 / 2.0) / LN2
}

fn labels_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

fn diag_traces_for(parts: &Parts<'_>) -> Result<(DiagTraces, Option<CoarseTraces>, Option<Vec<f64>>)> {
    let same_v = labels_equal(parts.v1, parts.v2);
    match parts.strong {
        StrongMeasurement::Coarse(list) => {
            let ct = coarse_traces(list, parts.proj_v1, parts.proj_v2);
            let diag = DiagTraces {
                tw: ct.diag.tw.clone(),
                t1: ct.diag.t1.clone(),
                t2: ct.diag.t2.clone(),
                a11: ct.diag.a11.clone(),
                a22: ct.diag.a22.clone(),
                ax: ct.diag.ax.clone(),
            };
            Ok((diag, Some(ct), None))
        }
        StrongMeasurement::Fine(basis) => {
            check_fine_v_structure(parts, same_v)?;
            let t = basis.transform();
            let p_tilde = t.adjoint() * parts.proj_v1.matrix() * t;
            let d1: Vec<f64> = p_tilde.diagonal().iter().map(|z| z.re).collect();
            Ok((fine_diag_traces(&d1, same_v), None, Some(d1)))
        }
    }
}

fn check_fine_v_structure(parts: &Parts<'_>, same_v: bool) -> Result<()> {
    if same_v {
        let r = parts.proj_v1.max_abs_diff(parts.proj_v2);
        if r > PROJECTOR_TOL {
            return Err(Error::InconsistentSlots(
                "equal v labels with different projectors".into(),
            ));
        }
        return Ok(());
    }
    let sum = parts.proj_v1.matrix() + parts.proj_v2.matrix();
    let dim = parts.proj_v1.dim();
    let res = crate::operators::max_abs(&(&sum - CMatrix::identity(dim, dim)));
    if res > PROJECTOR_TOL {
        return Err(Error::NonResolvingProjectors(res));
    }
    Ok(())
}

/// Exact pre-Taylor bound
/// `min over (j₁, j₂, w₁, w₂) of −log₂ Tr(Π_{w₂} K_{j₂} K†_{j₁} Π_{w₁} K_{j₁} K†_{j₂})`,
/// traces clamped below at 1e-300.
pub fn scrambling_bound_exact_trace(fwd: &KrausSet, rev: &KrausSet) -> Result<BoundReport> {
    let parts = extract_parts(fwd, rev)?;
    if parts.grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let same_v = labels_equal(parts.v1, parts.v2);
    let cd = cell_data(parts.grid);
    let (diag, coarse, fine_d1) = diag_traces_for(&parts)?;

    let n_j = cd.p.len();
    let mut best_tr = -1.0f64;
    let mut best: (usize, usize, usize, usize) = (0, 0, 0, 0);

    if let Some(ct) = &coarse {
        let n_w = diag.tw.len();
        for j1 in 0..n_j {
            for j2 in 0..n_j {
                for w1 in 0..n_w {
                    for w2 in 0..n_w {
                        let tr = exact_trace_scalar(&cd, ct, same_v, j1, j2, w1, w2);
                        if tr > best_tr {
                            best_tr = tr;
                            best = (j1, j2, w1, w2);
                        }
                    }
                }
            }
        }
    } else {
        // Rank-1 strong outcomes: the tuple trace is |⟨w₁| K_{j₁} K†_{j₂} |w₂⟩|²,
        // linear in the matrix element of the weakly measured projector, so the
        // equal-w branch maximizes at an extreme diagonal value and the
        // unequal-w branch factorizes.
        let basis = match parts.strong {
            StrongMeasurement::Fine(b) => b,
            StrongMeasurement::Coarse(_) => unreachable!(),
        };
        let d1 = fine_d1.as_ref().expect("fine path provides diagonals");
        let t = basis.transform();
        let p_tilde = t.adjoint() * parts.proj_v1.matrix() * t;
        let n_w = d1.len();
        let (mut idx_min, mut idx_max) = (0usize, 0usize);
        for (k, &d) in d1.iter().enumerate() {
            if d < d1[idx_min] {
                idx_min = k;
            }
            if d > d1[idx_max] {
                idx_max = k;
            }
        }
        let mut m1_best = 0.0f64;
        let mut m1_pair = (0usize, 1usize.min(n_w - 1));
        for w1 in 0..n_w {
            for w2 in 0..n_w {
                if w1 == w2 {
                    continue;
                }
                let m = p_tilde[(w1, w2)].norm_sqr();
                if m > m1_best {
                    m1_best = m;
                    m1_pair = (w1, w2);
                }
            }
        }
        for j1 in 0..n_j {
            for j2 in 0..n_j {
                let (sp1, sp2) = (cd.sp[j1], cd.sp[j2]);
                let (g1, g2) = (cd.g[j1], cd.g[j2]);
                let root = sp1 * sp2;
                let (alpha, zeta) = if same_v {
                    let zeta = g1 * sp2 + g2.conj() * sp1 + g1 * g2.conj();
                    (Complex64::new(root, 0.0), zeta)
                } else {
                    let zeta = g1 * sp2 - g2.conj() * sp1;
                    (Complex64::new(root, 0.0) + g2.conj() * sp1, zeta)
                };
                let s_min = (alpha + zeta * d1[idx_min]).norm_sqr();
                let s_max = (alpha + zeta * d1[idx_max]).norm_sqr();
                let (tr_eq, w_eq) =
                    if s_min >= s_max { (s_min, idx_min) } else { (s_max, idx_max) };
                let tr_neq = zeta.norm_sqr() * m1_best;
                let (tr, w1, w2) = if tr_eq >= tr_neq {
                    (tr_eq, w_eq, w_eq)
                } else {
                    (tr_neq, m1_pair.0, m1_pair.1)
                };
                if tr > best_tr {
                    best_tr = tr;
                    best = (j1, j2, w1, w2);
                }
            }
        }
    }

    let value = -best_tr.max(TRACE_FLOOR).log2();
    let (j1, j2, w1, w2) = best;
    let mut terms = BTreeMap::new();
    if w1 == w2 {
        terms = taylor_terms(&cd, &diag, same_v, j1, j2, w1);
        let partial: f64 = terms.values().sum();
        terms.insert(TERM_REMAINDER.to_string(), value - partial);
    }
    Ok(BoundReport {
        method: BoundMethod::ExactTrace,
        value,
        terms,
        minimizer: Minimizer::Scrambling {
            j1: parts.grid.ells()[j1],
            j2: parts.grid.ells()[j2],
            w1: parts.strong.label(w1),
            w2: parts.strong.label(w2),
        },
        warnings: Vec::new(),
    })
}

/// Second-order Taylor bound, minimized over `(j₁, j₂, w)` with `w₁ = w₂ = w`.
pub fn scrambling_bound_taylor(
    fwd: &KrausSet,
    rev: &KrausSet,
    diag_threshold: Option<f64>,
) -> Result<BoundReport> {
    let parts = extract_parts(fwd, rev)?;
    if parts.grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let same_v = labels_equal(parts.v1, parts.v2);
    let cd = cell_data(parts.grid);
    let (diag, _, _) = diag_traces_for(&parts)?;
    let n_j = cd.p.len();
    let n_w = diag.tw.len();

    let mut best_val = f64::INFINITY;
    let mut best = (0usize, 0usize, 0usize);
    for j1 in 0..n_j {
        for j2 in 0..n_j {
            for w in 0..n_w {
                let val = taylor_value(&cd, &diag, same_v, j1, j2, w);
                if val < best_val {
                    best_val = val;
                    best = (j1, j2, w);
                }
            }
        }
    }
    let (j1, j2, w) = best;
    let terms = taylor_terms(&cd, &diag, same_v, j1, j2, w);
    let mut warnings = Vec::new();
    let threshold = diag_threshold.unwrap_or(TAYLOR_DIAG_THRESHOLD);
    let ratio = parts.grid.weak_ratio_mean();
    if ratio > threshold {
        warnings.push(format!(
            "coupling diagnostic Σ p·|g|/√p = {ratio:.3} exceeds {threshold}; \
             second-order expansion unreliable"
        ));
    }
    Ok(BoundReport {
        method: BoundMethod::Taylor,
        value: best_val,
        terms,
        minimizer: Minimizer::Scrambling {
            j1: parts.grid.ells()[j1],
            j2: parts.grid.ells()[j2],
            w1: parts.strong.label(w),
            w2: parts.strong.label(w),
        },
        warnings,
    })
}

/// Exact POVM overlap `c = max ‖K^F K^R‖²` over outcome pairs, by direct
/// singular-value computation; gated behind a size budget.
pub fn overlap_c_exact(fwd: &KrausSet, rev: &KrausSet, budget: Option<usize>) -> Result<f64> {
    let budget = budget.unwrap_or(OVERLAP_BUDGET);
    let dim = fwd.dim();
    if rev.dim() != dim {
        return Err(Error::DimensionMismatch(dim, rev.dim()));
    }
    let pairs = fwd.len().saturating_mul(rev.len());
    let cost = pairs.saturating_mul(dim.saturating_pow(3));
    if cost > budget {
        return Err(Error::BudgetExceeded { cost, budget });
    }
    let fwd_elements: Vec<Operator> =
        (0..fwd.len()).map(|i| fwd.element(i)).collect::<Result<_>>()?;
    let rev_elements: Vec<Operator> =
        (0..rev.len()).map(|i| rev.element(i)).collect::<Result<_>>()?;
    let mut c = 0.0f64;
    for kf in &fwd_elements {
        for kr in &rev_elements {
            let prod = kf.matrix() * kr.matrix();
            let svd = nalgebra::SVD::new(prod, false, false);
            let top = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
            c = c.max(top * top);
        }
    }
    Ok(c)
}

/// Explicit detector description for bounds that take raw `(p_j, g_j)` pairs.
#[derive(Debug, Clone)]
pub struct WeakDetector {
    pub probs: Vec<f64>,
    pub couplings: Vec<Complex64>,
}

impl WeakDetector {
    pub fn validate(&self) -> Result<()> {
        if self.probs.is_empty() || self.probs.len() != self.couplings.len() {
            return Err(Error::InconsistentSlots("detector probability/coupling lists".into()));
        }
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::NormalizationDrift((total - 1.0).abs()));
        }
        Ok(())
    }
}

/// First-order weak-value bound
/// `min over (i, j, f) of −log₂(p_j Tr(Π^F_f Π^I_i)) − (2/ln 2)(Tr Π^I_i/√p_j) Re(g_j A_w(i, f))`.
///
/// Tuples with vanishing postselection overlap are excluded from the
/// minimization (the weak value diverges there); a warning records how many.
pub fn weak_value_bound(
    i_projs: &[(f64, Operator)],
    a: &Operator,
    f_projs: &[(f64, Operator)],
    detector: &WeakDetector,
) -> Result<BoundReport> {
    detector.validate()?;
    let mut best_val = f64::INFINITY;
    let mut best: Option<(usize, usize, usize)> = None;
    let mut best_terms = (0.0f64, 0.0f64);
    let mut excluded = 0usize;
    for (ii, (_, pi)) in i_projs.iter().enumerate() {
        let tr_i = pi.trace().re;
        for (fi, (_, pf)) in f_projs.iter().enumerate() {
            let overlap = trace_pair(pf.matrix(), pi.matrix()).re;
            if overlap <= 1e-12 * pi.dim() as f64 {
                excluded += detector.probs.len();
                continue;
            }
            let aw = crate::quasiprob::weak_value(pi, a, pf)?;
            for (j, (&p, g)) in detector.probs.iter().zip(&detector.couplings).enumerate() {
                let zeroth = -(p * overlap).log2();
                let first = -(2.0 / LN2) * (tr_i / p.sqrt()) * (g * aw).re;
                let val = zeroth + first;
                if val < best_val {
                    best_val = val;
                    best = Some((ii, j, fi));
                    best_terms = (zeroth, first);
                }
            }
        }
    }
    let (ii, j, fi) = best.ok_or(Error::AllTuplesExcluded)?;
    let mut terms = BTreeMap::new();
    terms.insert(TERM_C0.to_string(), best_terms.0);
    terms.insert(TERM_G1_SUM.to_string(), best_terms.1);
    let mut warnings = Vec::new();
    if excluded > 0 {
        warnings.push(format!("{excluded} tuples excluded: vanishing postselection overlap"));
    }
    Ok(BoundReport {
        method: BoundMethod::Taylor,
        value: best_val,
        terms,
        minimizer: Minimizer::WeakValue {
            i: format!("{:+}", i_projs[ii].0),
            j,
            f: format!("{:+}", f_projs[fi].0),
        },
        warnings,
    })
}

/// One weakly measured slot of a K̄-fold protocol: its detector and the index
/// of the chosen eigenvalue on the matching quasiprobability axis.
///
/// Weak Kraus elements use the cell amplitude `√p` on the identity; the raw
/// cell mass `p` convention differs only at higher order and is not used here.
#[derive(Debug, Clone)]
pub struct KfoldWeakSlot {
    pub detector: WeakDetector,
    pub chosen: usize,
}

/// Zeroth-order K̄-fold bound
/// `min −log₂(∏ weak-slot probabilities × Tr(Π^{A}_a Π^{F}_f))`, with the
/// displayed quasiprobability term `Re(∏ couplings × Ã^{(K̄)}_1)` reported at
/// the minimizing tuple. Intermediate-order coupling terms are not computed.
pub fn kfold_bound(
    weak_slots: &[KfoldWeakSlot],
    a_projs: &[(f64, Operator)],
    f_projs: &[(f64, Operator)],
    quasi: &crate::quasiprob::QuasiprobTable,
) -> Result<BoundReport> {
    let n_slots = quasi.n_slots();
    if weak_slots.len() + 2 != n_slots || weak_slots.len() < 2 {
        return Err(Error::InconsistentSlots(format!(
            "{} weak slots with a {}-slot quasiprobability table",
            weak_slots.len(),
            n_slots
        )));
    }
    let kbar = n_slots / 2;
    if quasi.axes()[0].len() != a_projs.len() || quasi.axes()[kbar].len() != f_projs.len() {
        return Err(Error::InconsistentSlots(
            "boundary projector counts disagree with the table axes".into(),
        ));
    }
    let weak_axis_positions: Vec<usize> =
        (1..n_slots).filter(|&pos| pos != kbar).collect();
    for (slot, &pos) in weak_slots.iter().zip(&weak_axis_positions) {
        slot.detector.validate()?;
        if slot.chosen >= quasi.axes()[pos].len() {
            return Err(Error::InconsistentSlots("chosen eigenvalue index out of range".into()));
        }
    }

    // Independent maxima: each weak slot contributes its largest cell
    // probability, the boundary pair its largest joint trace.
    let mut prob_product = 1.0f64;
    let mut coupling_product = Complex64::new(1.0, 0.0);
    let mut weak_argmax = Vec::with_capacity(weak_slots.len());
    for slot in weak_slots {
        let (jmax, pmax) = slot
            .detector
            .probs
            .iter()
            .enumerate()
            .fold((0usize, -1.0f64), |acc, (j, &p)| if p > acc.1 { (j, p) } else { acc });
        prob_product *= pmax;
        coupling_product *= slot.detector.couplings[jmax];
        weak_argmax.push(jmax);
    }
    let mut best_af = (0usize, 0usize);
    let mut best_tr = -1.0f64;
    for (ia, (_, pa)) in a_projs.iter().enumerate() {
        for (fi, (_, pf)) in f_projs.iter().enumerate() {
            let tr = trace_pair(pa.matrix(), pf.matrix()).re;
            if tr > best_tr {
                best_tr = tr;
                best_af = (ia, fi);
            }
        }
    }
    if best_tr <= 0.0 {
        return Err(Error::AllTuplesExcluded);
    }
    let value = -(prob_product * best_tr).log2();

    // Quasiprobability term at the minimizing tuple: chosen eigenvalues on the
    // weak axes, the minimizing (a, f) on the boundary axes.
    let mut idx = vec![0usize; n_slots];
    idx[0] = best_af.0;
    idx[kbar] = best_af.1;
    let mut weak_iter = weak_slots.iter();
    for (slot_idx, slot_val) in idx.iter_mut().enumerate() {
        if slot_idx != 0 && slot_idx != kbar {
            *slot_val = weak_iter.next().expect("slot counts validated").chosen;
        }
    }
    let quasi_term = (coupling_product * quasi.value(&idx)).re;

    let mut terms = BTreeMap::new();
    terms.insert(TERM_C0.to_string(), value);
    terms.insert(TERM_KFOLD_QUASI.to_string(), quasi_term);
    Ok(BoundReport {
        method: BoundMethod::Taylor,
        value,
        terms,
        minimizer: Minimizer::KFold {
            weak: weak_argmax,
            a: format!("{:+}", a_projs[best_af.0].0),
            f: format!("{:+}", f_projs[best_af.1].0),
        },
        warnings: Vec::new(),
    })
}

/// One evaluated uncertainty relation.
#[derive(Debug, Clone, Serialize)]
pub struct TheoremCheck {
    pub alpha: f64,
    pub beta: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

/// Evaluates `H_α(forward) + H_β(reverse) ≥ rhs` with `1/α + 1/β = 2` and the
/// selected bound method on the right-hand side.
pub fn theorem1_check(
    rho: &DensityState,
    alpha: f64,
    fwd: &KrausSet,
    rev: &KrausSet,
    method: BoundMethod,
    budget: Option<usize>,
) -> Result<TheoremCheck> {
    let beta = entropy_pair_beta(alpha)?;
    let fwd_dist = outcome_distribution(fwd, rho)?;
    let rev_dist = outcome_distribution(rev, rho)?;
    let lhs = entropy_of_order(&fwd_dist, alpha)? + entropy_of_order(&rev_dist, beta)?;
    let rhs = match method {
        BoundMethod::Taylor => scrambling_bound_taylor(fwd, rev, None)?.value,
        BoundMethod::ExactTrace => scrambling_bound_exact_trace(fwd, rev)?.value,
        BoundMethod::ExactOverlap => -overlap_c_exact(fwd, rev, budget)?.log2(),
    };
    Ok(TheoremCheck { alpha, beta, lhs, rhs, satisfied: lhs >= rhs - 1e-9 })
}
