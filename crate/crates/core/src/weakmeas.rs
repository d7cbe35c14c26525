//! Gaussian-detector weak measurements: the discretized outcome grid with its
//! outcome-dependent couplings, weak-measurement Kraus operators, and the
//! forward/reverse scrambling POVMs in coarse and fine-grained variants, plus
//! the two-outcome qubit detector.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::TimeEvolver;
use crate::operators::{max_abs, CMatrix, Operator, I, ONE, PROJECTOR_TOL, ZERO};

/// Completeness tolerance for every Kraus set.
pub const KRAUS_TOL: f64 = 1e-9;

/// Gaussian detector: momentum-space width `Δ`, position precision `L`,
/// displacement `x₀`, interaction strength `g̃`; `ℏ = 1`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DetectorModel {
    pub delta: f64,
    pub length: f64,
    pub x0: f64,
    pub gtilde: f64,
    pub tail_mass: f64,
}

impl DetectorModel {
    pub fn new(delta: f64, length: f64, x0: f64, gtilde: f64) -> Result<Self> {
        let model = Self { delta, length, x0, gtilde, tail_mass: 1e-12 };
        model.validate()?;
        Ok(model)
    }

    pub fn with_tail_mass(mut self, tail_mass: f64) -> Result<Self> {
        self.tail_mass = tail_mass;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta <= 0.0 || self.length <= 0.0 || self.delta.is_nan() || self.length.is_nan() {
            return Err(Error::InvalidParameter(format!(
                "detector widths must be positive (Δ = {}, L = {})",
                self.delta, self.length
            )));
        }
        if self.tail_mass <= 0.0 || self.tail_mass >= 1.0 || self.tail_mass.is_nan() {
            return Err(Error::InvalidParameter(format!(
                "tail mass must lie in (0, 1), got {}",
                self.tail_mass
            )));
        }
        Ok(())
    }

    /// Raw cell mass `(LΔ/√π) e^{−Δ²x²}` before renormalization.
    pub fn raw_cell_mass(&self, x: f64) -> f64 {
        self.length * self.delta / std::f64::consts::PI.sqrt()
            * (-self.delta * self.delta * x * x).exp()
    }
}

/// Positivity of the leading uncertainty-bound term at the chosen detector:
/// `LΔ ≤ √(π / 2^{N−1})`.
pub fn is_nontrivial(delta: f64, length: f64, n_sites: usize) -> bool {
    length * delta <= (std::f64::consts::PI / 2f64.powi(n_sites as i32 - 1)).sqrt()
}

/// Complementary error function, fractional error ~1e-7 (used only to choose
/// the retained grid window).
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398
                                    + t * (1.48851587
                                        + t * (-0.82215223 + t * 0.17087277)))))))))
            .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

/// Discretized detector: outcomes `x_ℓ = ℓ·L`, renormalized cell probabilities
/// `P_ℓ`, and couplings `g_ℓ = √P_ℓ (e^{−i g̃ (x_ℓ − x₀)} − 1)`.
#[derive(Debug, Clone)]
pub struct DetectorGrid {
    ells: Vec<i32>,
    xs: Vec<f64>,
    probs: Vec<f64>,
    couplings: Vec<Complex64>,
    raw_total: f64,
}

impl DetectorGrid {
    fn from_half_width(model: &DetectorModel, half: i32) -> Result<Self> {
        model.validate()?;
        if half < 0 {
            return Err(Error::EmptyGrid);
        }
        let ells: Vec<i32> = (-half..=half).collect();
        let xs: Vec<f64> = ells.iter().map(|&l| l as f64 * model.length).collect();
        let raw: Vec<f64> = xs.iter().map(|&x| model.raw_cell_mass(x)).collect();
        let raw_total: f64 = raw.iter().sum();
        if raw_total <= 0.0 || !raw_total.is_finite() || raw_total.is_nan() {
            return Err(Error::EmptyGrid);
        }
        let probs: Vec<f64> = raw.iter().map(|p| p / raw_total).collect();
        let couplings: Vec<Complex64> = xs
            .iter()
            .zip(&probs)
            .map(|(&x, &p)| {
                let phase = (-I * Complex64::new(model.gtilde * (x - model.x0), 0.0)).exp();
                (phase - ONE) * p.sqrt()
            })
            .collect();
        Ok(Self { ells, xs, probs, couplings, raw_total })
    }

    /// Window chosen so the excluded Gaussian mass stays below `tail_mass`.
    pub fn build(model: &DetectorModel) -> Result<Self> {
        model.validate()?;
        let step = model.delta * model.length;
        let mut half: i32 = 0;
        while erfc(step * (half as f64 + 0.5)) > model.tail_mass {
            half += 1;
            if half > 100_000_000 {
                return Err(Error::InvalidParameter(
                    "detector grid window exceeds 1e8 cells".into(),
                ));
            }
        }
        Self::from_half_width(model, half)
    }

    /// Fixed window `ℓ ∈ [−half, half]`, renormalized; used for coarse grids.
    pub fn with_window(model: &DetectorModel, half: i32) -> Result<Self> {
        Self::from_half_width(model, half)
    }

    /// Explicit probabilities and couplings (test detectors).
    pub fn from_parts(probs: Vec<f64>, couplings: Vec<Complex64>) -> Result<Self> {
        if probs.is_empty() || probs.len() != couplings.len() {
            return Err(Error::EmptyGrid);
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::NormalizationDrift((total - 1.0).abs()));
        }
        let n = probs.len() as i32;
        let ells: Vec<i32> = (0..n).collect();
        let xs = vec![0.0; probs.len()];
        Ok(Self { ells, xs, probs, couplings, raw_total: total })
    }

    pub fn len(&self) -> usize {
        self.ells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ells.is_empty()
    }

    pub fn ells(&self) -> &[i32] {
        &self.ells
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.xs
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn couplings(&self) -> &[Complex64] {
        &self.couplings
    }

    /// Sum of raw cell masses before renormalization.
    pub fn raw_total(&self) -> f64 {
        self.raw_total
    }

    pub fn max_prob(&self) -> f64 {
        self.probs.iter().cloned().fold(0.0, f64::max)
    }

    /// Per-cell weak-coupling ratio `|g_ℓ| / √P_ℓ`.
    pub fn weak_ratio(&self, idx: usize) -> f64 {
        let p = self.probs[idx];
        if p > 0.0 {
            self.couplings[idx].norm() / p.sqrt()
        } else {
            0.0
        }
    }

    /// Largest per-cell ratio over the retained window, tail cells included.
    pub fn weak_ratio_max(&self) -> f64 {
        (0..self.len()).map(|k| self.weak_ratio(k)).fold(0.0, f64::max)
    }

    /// Probability-weighted coupling ratio `Σ_ℓ P_ℓ |g_ℓ|/√P_ℓ`: the smallness
    /// diagnostic for the cells that actually carry measure. Tail cells can
    /// have O(1) ratios without affecting any minimization.
    pub fn weak_ratio_mean(&self) -> f64 {
        self.probs
            .iter()
            .zip(&self.couplings)
            .map(|(&p, g)| p.sqrt() * g.norm())
            .sum()
    }
}

/// Builds the detector grid for a model; see [`DetectorGrid::build`].
pub fn build_detector_grid(model: &DetectorModel) -> Result<DetectorGrid> {
    DetectorGrid::build(model)
}

/// `K_{v,ℓ} = √P_ℓ·1 + g_ℓ·Π`; the identity coefficient is real positive by
/// construction of the couplings.
pub fn kraus_weak(grid: &DetectorGrid, projector: &Operator, outcome_index: usize) -> Result<Operator> {
    if outcome_index >= grid.len() {
        return Err(Error::OutcomeOutOfRange { index: outcome_index, len: grid.len() });
    }
    check_projector(projector)?;
    let p = grid.probs[outcome_index];
    let g = grid.couplings[outcome_index];
    let dim = projector.dim();
    let mut m = projector.matrix().map(|z| z * g);
    for k in 0..dim {
        m[(k, k)] += Complex64::new(p.sqrt(), 0.0);
    }
    Operator::from_matrix(m)
}

fn check_projector(p: &Operator) -> Result<()> {
    if !p.is_hermitian() {
        return Err(Error::NotHermitian(f64::NAN));
    }
    let r = p.projector_residual();
    if r > PROJECTOR_TOL {
        return Err(Error::NotProjector(r));
    }
    Ok(())
}

/// Label of a strong-measurement outcome: eigenvalue plus, for fine-grained
/// measurements, the index within the degenerate eigenspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrongLabel {
    pub value: f64,
    pub sub: Option<u32>,
}

impl std::fmt::Display for StrongLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.sub {
            Some(k) => write!(f, "{:+}:{k}", self.value),
            None => write!(f, "{:+}", self.value),
        }
    }
}

/// Projective measurement closing a composite Kraus operator: either the
/// coarse eigenspace projectors of `W(t)` or the full rank-1 eigenbasis.
#[derive(Debug, Clone)]
pub enum StrongMeasurement {
    Coarse(Vec<(f64, Operator)>),
    Fine(FineBasis),
}

/// Rank-1 measurement basis stored as the columns of a unitary transform;
/// column `k` is the evolved computational-basis vector with eigenvalue
/// `values[k]` and degeneracy index `subs[k]`.
#[derive(Debug, Clone)]
pub struct FineBasis {
    transform: CMatrix,
    values: Vec<f64>,
    subs: Vec<u32>,
}

impl FineBasis {
    pub fn transform(&self) -> &CMatrix {
        &self.transform
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Materializes the rank-1 projector for outcome `k`.
    pub fn projector(&self, k: usize) -> Operator {
        let col = self.transform.column(k);
        let m = col * col.adjoint();
        let sym = (&m + m.adjoint()).scale(0.5);
        Operator::unchecked(sym, true, false)
    }

    pub fn label(&self, k: usize) -> StrongLabel {
        StrongLabel { value: self.values[k], sub: Some(self.subs[k]) }
    }
}

impl StrongMeasurement {
    pub fn from_clusters(clusters: Vec<(f64, Operator)>) -> Self {
        StrongMeasurement::Coarse(clusters)
    }

    pub fn dim(&self) -> usize {
        match self {
            StrongMeasurement::Coarse(list) => list.first().map_or(0, |(_, p)| p.dim()),
            StrongMeasurement::Fine(basis) => basis.transform.nrows(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            StrongMeasurement::Coarse(list) => list.len(),
            StrongMeasurement::Fine(basis) => basis.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn label(&self, k: usize) -> StrongLabel {
        match self {
            StrongMeasurement::Coarse(list) => StrongLabel { value: list[k].0, sub: None },
            StrongMeasurement::Fine(basis) => basis.label(k),
        }
    }

    pub fn projector(&self, k: usize) -> Operator {
        match self {
            StrongMeasurement::Coarse(list) => list[k].1.clone(),
            StrongMeasurement::Fine(basis) => basis.projector(k),
        }
    }

    /// `Tr Π_w` for outcome `k`.
    pub fn projector_trace(&self, k: usize) -> f64 {
        match self {
            StrongMeasurement::Coarse(list) => list[k].1.trace().re,
            StrongMeasurement::Fine(_) => 1.0,
        }
    }

    /// Residual of `Σ_w Π_w = 1`.
    pub fn resolution_residual(&self) -> f64 {
        let dim = self.dim();
        match self {
            StrongMeasurement::Coarse(list) => {
                let mut sum = CMatrix::zeros(dim, dim);
                for (_, p) in list {
                    sum += p.matrix();
                }
                max_abs(&(&sum - CMatrix::identity(dim, dim)))
            }
            StrongMeasurement::Fine(basis) => {
                let p = basis.transform() * basis.transform().adjoint();
                max_abs(&(&p - CMatrix::identity(dim, dim)))
            }
        }
    }

    /// `Σ_w Π_w S Π_w`.
    pub(crate) fn sandwich(&self, s: &CMatrix) -> CMatrix {
        match self {
            StrongMeasurement::Coarse(list) => {
                let dim = s.nrows();
                let mut out = CMatrix::zeros(dim, dim);
                for (_, p) in list {
                    out += p.matrix() * s * p.matrix();
                }
                out
            }
            StrongMeasurement::Fine(basis) => {
                let t = basis.transform();
                let inner = t.adjoint() * s * t;
                let mut diag = CMatrix::zeros(s.nrows(), s.ncols());
                for k in 0..s.nrows() {
                    diag[(k, k)] = inner[(k, k)];
                }
                t * diag * t.adjoint()
            }
        }
    }
}

/// The `D` rank-1 projectors `U† |w, sub⟩⟨w, sub| U` onto the evolved
/// computational basis, labeled by the `W` eigenvalue and a running index
/// within each eigenvalue class.
pub fn fine_grained_wt_projectors(w: &Operator, h: &Operator, t: f64) -> Result<FineBasis> {
    let dim = w.dim();
    if h.dim() != dim {
        return Err(Error::DimensionMismatch(dim, h.dim()));
    }
    let u = TimeEvolver::new(h)?.unitary(t);
    fine_basis_from_unitary(w, &u)
}

/// Fine-grained basis from an already-built evolution unitary (sweeps reuse a
/// cached Hamiltonian eigendecomposition).
pub fn fine_basis_from_unitary(w: &Operator, u: &Operator) -> Result<FineBasis> {
    let dim = w.dim();
    if u.dim() != dim {
        return Err(Error::DimensionMismatch(dim, u.dim()));
    }
    let mut off = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            if i != j {
                off = off.max(w.matrix()[(i, j)].norm());
            }
        }
    }
    if off > 1e-12 {
        return Err(Error::InvalidParameter(
            "fine-grained projectors require a computational-basis-diagonal W".into(),
        ));
    }
    let transform = u.matrix().adjoint();
    let mut values = Vec::with_capacity(dim);
    let mut subs = Vec::with_capacity(dim);
    let mut counters: std::collections::BTreeMap<i64, u32> = std::collections::BTreeMap::new();
    for k in 0..dim {
        let v = w.matrix()[(k, k)].re;
        let key = (v * 1e6).round() as i64;
        let c = counters.entry(key).or_insert(0);
        values.push(v);
        subs.push(*c);
        *c += 1;
    }
    Ok(FineBasis { transform, values, subs })
}

/// Which protocol a Kraus set realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KrausKind {
    WeakV,
    Forward,
    Reverse,
    FineGrainedForward,
    FineGrainedReverse,
    QubitDetector,
}

/// Outcome label of one Kraus element; `weak` is the detector cell index,
/// `strong` the projective outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeId {
    pub weak: Option<i32>,
    pub strong: Option<StrongLabel>,
}

impl std::fmt::Display for OutcomeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.weak, &self.strong) {
            (Some(j), Some(s)) => write!(f, "(j={j}, w={s})"),
            (Some(j), None) => write!(f, "j={j}"),
            (None, Some(s)) => write!(f, "w={s}"),
            (None, None) => write!(f, "()"),
        }
    }
}

#[derive(Debug, Clone)]
enum Payload {
    Weak {
        grid: DetectorGrid,
        proj: Operator,
    },
    Composite {
        grid: DetectorGrid,
        v_label: f64,
        proj_v: Operator,
        strong: StrongMeasurement,
        reverse: bool,
    },
    Explicit(Vec<(OutcomeId, Operator)>),
}

/// A labeled set of Kraus operators forming a POVM.
///
/// Composite sets store the detector grid, the weakly measured projector, and
/// the strong measurement; elements are synthesized on demand so fine-grained
/// sets never materialize `|grid|·D` dense matrices.
#[derive(Debug, Clone)]
pub struct KrausSet {
    kind: KrausKind,
    dim: usize,
    payload: Payload,
}

impl KrausSet {
    pub fn kind(&self) -> KrausKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        match &self.payload {
            Payload::Weak { grid, .. } => grid.len(),
            Payload::Composite { grid, strong, .. } => grid.len() * strong.len(),
            Payload::Explicit(list) => list.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Outcome label for element `idx`; composite forward sets enumerate the
    /// detector cell as the major index, reverse sets the strong outcome.
    pub fn label(&self, idx: usize) -> OutcomeId {
        match &self.payload {
            Payload::Weak { grid, .. } => OutcomeId { weak: Some(grid.ells[idx]), strong: None },
            Payload::Composite { grid, strong, reverse, .. } => {
                let (j, w) = if *reverse {
                    (idx % grid.len(), idx / grid.len())
                } else {
                    (idx / strong.len(), idx % strong.len())
                };
                OutcomeId { weak: Some(grid.ells[j]), strong: Some(strong.label(w)) }
            }
            Payload::Explicit(list) => list[idx].0,
        }
    }

    /// Materializes Kraus element `idx`.
    pub fn element(&self, idx: usize) -> Result<Operator> {
        if idx >= self.len() {
            return Err(Error::OutcomeOutOfRange { index: idx, len: self.len() });
        }
        match &self.payload {
            Payload::Weak { grid, proj } => kraus_weak(grid, proj, idx),
            Payload::Composite { grid, proj_v, strong, reverse, .. } => {
                let (j, w) = if *reverse {
                    (idx % grid.len(), idx / grid.len())
                } else {
                    (idx / strong.len(), idx % strong.len())
                };
                let k = kraus_weak(grid, proj_v, j)?;
                let pw = strong.projector(w);
                if *reverse {
                    // K^R = (Π_w K)† = K† Π_w
                    Ok(Operator::unchecked(k.matrix().adjoint() * pw.matrix(), false, false))
                } else {
                    Ok(Operator::unchecked(pw.matrix() * k.matrix(), false, false))
                }
            }
            Payload::Explicit(list) => Ok(list[idx].1.clone()),
        }
    }

    pub(crate) fn composite_parts(
        &self,
    ) -> Option<(&DetectorGrid, f64, &Operator, &StrongMeasurement, bool)> {
        match &self.payload {
            Payload::Composite { grid, v_label, proj_v, strong, reverse } => {
                Some((grid, *v_label, proj_v, strong, *reverse))
            }
            _ => None,
        }
    }

    pub(crate) fn explicit_parts(&self) -> Option<&[(OutcomeId, Operator)]> {
        match &self.payload {
            Payload::Explicit(list) => Some(list),
            _ => None,
        }
    }

    pub(crate) fn weak_parts(&self) -> Option<(&DetectorGrid, &Operator)> {
        match &self.payload {
            Payload::Weak { grid, proj } => Some((grid, proj)),
            _ => None,
        }
    }

    /// Residuals of `Σ K†K = 1` and `Σ K K† = 1`.
    pub fn completeness_residuals(&self) -> (f64, f64) {
        (self.kdagk_residual(), self.kkdag_residual())
    }

    // Forward composites: Σ K†K = Σ_j K_j† (Σ_w Π_w) K_j and
    // Σ K K† = Σ_w Π_w S Π_w with S = Σ_j K_j K_j†; reverse sets swap the two.
    fn conjugation_residual(&self, flip: bool) -> f64 {
        let dim = self.dim;
        let id = CMatrix::identity(dim, dim);
        match &self.payload {
            Payload::Weak { grid, proj } => {
                let s = weak_channel_sum(grid, proj, &id, flip);
                max_abs(&(&s - &id))
            }
            Payload::Composite { grid, proj_v, strong, .. } => {
                if flip {
                    let s = weak_channel_sum(grid, proj_v, &id, true);
                    let sandwich = strong.sandwich(&s);
                    max_abs(&(&sandwich - &id))
                } else {
                    let r = {
                        let mut sum = CMatrix::zeros(dim, dim);
                        match strong {
                            StrongMeasurement::Coarse(list) => {
                                for (_, p) in list {
                                    sum += p.matrix();
                                }
                            }
                            StrongMeasurement::Fine(basis) => {
                                sum = basis.transform() * basis.transform().adjoint();
                            }
                        }
                        sum
                    };
                    let conj_sum = weak_channel_sum(grid, proj_v, &r, false);
                    max_abs(&(&conj_sum - &id))
                }
            }
            Payload::Explicit(list) => {
                let mut sum = CMatrix::zeros(dim, dim);
                for (_, k) in list {
                    if flip {
                        sum += k.matrix() * k.matrix().adjoint();
                    } else {
                        sum += k.matrix().adjoint() * k.matrix();
                    }
                }
                max_abs(&(&sum - &id))
            }
        }
    }

    /// Residual of `Σ K†K = 1`.
    pub fn kdagk_residual(&self) -> f64 {
        let reverse = matches!(self.payload, Payload::Composite { reverse: true, .. });
        self.conjugation_residual(reverse)
    }

    /// Residual of `Σ K K† = 1`.
    pub fn kkdag_residual(&self) -> f64 {
        let reverse = matches!(self.payload, Payload::Composite { reverse: true, .. });
        self.conjugation_residual(!reverse)
    }
}

/// `Σ_j K_j† R K_j` (or `Σ_j K_j R K_j†` when `flip`), using only the scalar
/// sums of the grid.
fn weak_channel_sum(grid: &DetectorGrid, proj: &Operator, r: &CMatrix, flip: bool) -> CMatrix {
    let mut a_lin = ZERO; // Σ √p ḡ   (coefficient of Π R)
    let mut a_abs = 0.0f64; // Σ |g|²
    let mut a_p = 0.0f64; // Σ p
    for (&p, g) in grid.probs.iter().zip(&grid.couplings) {
        let gc = if flip { g.conj() } else { *g };
        a_lin += gc.conj() * p.sqrt();
        a_abs += g.norm_sqr();
        a_p += p;
    }
    let pm = proj.matrix();
    let pr = pm * r;
    let rp = r * pm;
    let prp = &pr * pm;
    let mut out = r.map(|z| z * a_p);
    out += pr.map(|z| z * a_lin);
    out += rp.map(|z| z * a_lin.conj());
    out += prp.map(|z| z * Complex64::new(a_abs, 0.0));
    out
}

fn validate_composite(
    grid: &DetectorGrid,
    proj_v: &Operator,
    strong: &StrongMeasurement,
) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    check_projector(proj_v)?;
    if strong.dim() != proj_v.dim() {
        return Err(Error::DimensionMismatch(strong.dim(), proj_v.dim()));
    }
    let res = strong.resolution_residual();
    if res > PROJECTOR_TOL {
        return Err(Error::NonResolvingProjectors(res));
    }
    Ok(())
}

/// Forward POVM: weak measurement of `Π^V_{v₁}` followed by a strong `W(t)`
/// measurement, `K^F_{j,w} = Π_w K_{v₁,j}`.
pub fn forward_povm(
    grid: &DetectorGrid,
    v_label: f64,
    proj_v: &Operator,
    strong: StrongMeasurement,
) -> Result<KrausSet> {
    validate_composite(grid, proj_v, &strong)?;
    let fine = matches!(strong, StrongMeasurement::Fine(_));
    let set = KrausSet {
        kind: if fine { KrausKind::FineGrainedForward } else { KrausKind::Forward },
        dim: proj_v.dim(),
        payload: Payload::Composite {
            grid: grid.clone(),
            v_label,
            proj_v: proj_v.clone(),
            strong,
            reverse: false,
        },
    };
    let r = set.kdagk_residual();
    if r > KRAUS_TOL {
        return Err(Error::CompletenessViolated(r));
    }
    Ok(set)
}

/// Reverse POVM: the adjoint protocol `K^R_{w,j} = (Π_w K_{v₂,j})† = K†_{v₂,j} Π_w`;
/// both completeness directions must hold.
pub fn reverse_povm(
    grid: &DetectorGrid,
    v_label: f64,
    proj_v: &Operator,
    strong: StrongMeasurement,
) -> Result<KrausSet> {
    validate_composite(grid, proj_v, &strong)?;
    let fine = matches!(strong, StrongMeasurement::Fine(_));
    let set = KrausSet {
        kind: if fine { KrausKind::FineGrainedReverse } else { KrausKind::Reverse },
        dim: proj_v.dim(),
        payload: Payload::Composite {
            grid: grid.clone(),
            v_label,
            proj_v: proj_v.clone(),
            strong,
            reverse: true,
        },
    };
    let (r1, r2) = set.completeness_residuals();
    let r = r1.max(r2);
    if r > KRAUS_TOL {
        return Err(Error::CompletenessViolated(r));
    }
    Ok(set)
}

/// Plain weak measurement of one projector over the whole grid.
pub fn weak_set(grid: &DetectorGrid, proj: &Operator) -> Result<KrausSet> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    check_projector(proj)?;
    let set = KrausSet {
        kind: KrausKind::WeakV,
        dim: proj.dim(),
        payload: Payload::Weak { grid: grid.clone(), proj: proj.clone() },
    };
    let r = set.kdagk_residual();
    if r > KRAUS_TOL {
        return Err(Error::CompletenessViolated(r));
    }
    Ok(set)
}

/// Two-outcome qubit detector: the detector qubit starts in `|x+⟩`, a
/// z-controlled-y rotation of strength `g̃` couples it to the system, and its
/// `σ^y` is measured, yielding `y = ±1`. Elements are exact in `g̃`, with the
/// global phase removed so the identity coefficient is real positive.
pub fn qubit_detector_kraus(gtilde: f64) -> Result<KrausSet> {
    if gtilde.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::InvalidParameter(format!(
            "qubit detector requires |g̃| < π/2, got {gtilde}"
        )));
    }
    // ⟨y|x+⟩ and ⟨y|σ^y|x+⟩ from the explicit eigenvectors.
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let x_plus = [Complex64::new(inv_sqrt2, 0.0), Complex64::new(inv_sqrt2, 0.0)];
    let sz = crate::operators::PauliAxis::Z.matrix();
    let sy = crate::operators::PauliAxis::Y.matrix();
    let mut elements = Vec::with_capacity(2);
    for &y in &[1.0f64, -1.0] {
        let y_vec = [Complex64::new(inv_sqrt2, 0.0), Complex64::new(0.0, y * inv_sqrt2)];
        let overlap = y_vec[0].conj() * x_plus[0] + y_vec[1].conj() * x_plus[1];
        let sy_xp = [
            sy[(0, 0)] * x_plus[0] + sy[(0, 1)] * x_plus[1],
            sy[(1, 0)] * x_plus[0] + sy[(1, 1)] * x_plus[1],
        ];
        let y_sy_xp = y_vec[0].conj() * sy_xp[0] + y_vec[1].conj() * sy_xp[1];
        let id_coeff = Complex64::new(gtilde.cos() * overlap.norm(), 0.0);
        let z_coeff = -I * gtilde.sin() * y_sy_xp * overlap.norm() / overlap;
        let m = CMatrix::identity(2, 2).map(|z| z * id_coeff) + sz.map(|z| z * z_coeff);
        let label = OutcomeId { weak: Some(y as i32), strong: None };
        elements.push((label, Operator::from_matrix(m)?));
    }
    let set = KrausSet { kind: KrausKind::QubitDetector, dim: 2, payload: Payload::Explicit(elements) };
    let (r1, r2) = set.completeness_residuals();
    if r1.max(r2) > KRAUS_TOL {
        return Err(Error::CompletenessViolated(r1.max(r2)));
    }
    Ok(set)
}

/// Explicit Kraus set from materialized elements.
pub fn explicit_set(kind: KrausKind, elements: Vec<(OutcomeId, Operator)>) -> Result<KrausSet> {
    let dim = elements.first().map_or(0, |(_, k)| k.dim());
    if dim == 0 {
        return Err(Error::EmptyGrid);
    }
    for (_, k) in &elements {
        if k.dim() != dim {
            return Err(Error::DimensionMismatch(dim, k.dim()));
        }
    }
    let set = KrausSet { kind, dim, payload: Payload::Explicit(elements) };
    let r = set.kdagk_residual();
    if r > KRAUS_TOL {
        return Err(Error::CompletenessViolated(r));
    }
    Ok(set)
}
