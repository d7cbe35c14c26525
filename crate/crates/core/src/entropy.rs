//! Classical outcome distributions of POVMs applied to states, and the Rényi
//! entropy family in base-2 bits.
//!
//! Entropies act on the classical outcome distribution rather than on
//! explicit register density operators; the two coincide because the register
//! states are diagonal.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::DensityState;
use crate::operators::trace_pair;
use crate::weakmeas::{KrausSet, OutcomeId, StrongMeasurement};

/// Labeled probability vector over POVM outcome tuples.
#[derive(Debug, Clone, Serialize)]
pub struct OutcomeDistribution {
    labels: Vec<OutcomeId>,
    probs: Vec<f64>,
}

impl OutcomeDistribution {
    /// Clamps tiny negatives to zero and renormalizes; errors when a
    /// probability is genuinely negative or the total drifts beyond 1e-10.
    pub fn new(labels: Vec<OutcomeId>, mut probs: Vec<f64>) -> Result<Self> {
        if labels.len() != probs.len() {
            return Err(Error::DimensionMismatch(labels.len(), probs.len()));
        }
        for p in probs.iter_mut() {
            if *p < -1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "outcome probability {p:.3e} below tolerance"
                )));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        let drift = (total - 1.0).abs();
        if drift > 1e-10 {
            return Err(Error::NormalizationDrift(drift));
        }
        for p in probs.iter_mut() {
            *p /= total;
        }
        Ok(Self { labels, probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn labels(&self) -> &[OutcomeId] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn max_prob(&self) -> f64 {
        self.probs.iter().cloned().fold(0.0, f64::max)
    }

    /// Number of outcomes carrying nonzero probability.
    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|&&p| p > 0.0).count()
    }
}

/// Outcome probabilities `Tr(K† K ρ)` of a POVM on a state, using the closed
/// forms of the structured Kraus sets.
pub fn outcome_distribution(povm: &KrausSet, rho: &DensityState) -> Result<OutcomeDistribution> {
    if povm.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(povm.dim(), rho.dim()));
    }
    let labels: Vec<OutcomeId> = (0..povm.len()).map(|i| povm.label(i)).collect();

    if let Some((grid, proj)) = povm.weak_parts() {
        let t_v = trace_pair(proj.matrix(), rho.matrix()).re;
        let probs: Vec<f64> = grid
            .probs()
            .iter()
            .zip(grid.couplings())
            .map(|(&p, g)| {
                let xi = 2.0 * p.sqrt() * g.re + g.norm_sqr();
                p + xi * t_v
            })
            .collect();
        return OutcomeDistribution::new(labels, probs);
    }

    if let Some((grid, _, proj_v, strong, reverse)) = povm.composite_parts() {
        let n_w = strong.len();
        let rho_m = rho.matrix();
        let pv = proj_v.matrix();
        let mut probs = vec![0.0f64; grid.len() * n_w];
        if reverse {
            // q(w, j) = p_j Tr(Π_w ρ) + ξ_j Tr(Π_w Π_v Π_w ρ)
            let (tw, twvw) = reverse_strong_traces(strong, pv, rho_m);
            for w in 0..n_w {
                for (j, (&p, g)) in grid.probs().iter().zip(grid.couplings()).enumerate() {
                    let xi = 2.0 * p.sqrt() * g.re + g.norm_sqr();
                    probs[w * grid.len() + j] = p * tw[w] + xi * twvw[w];
                }
            }
        } else {
            // q(j, w) = p_j Tr(Π_w ρ) + 2√p_j Re(g_j Tr(Π_w Π_v ρ)) + |g_j|² Tr(Π_w Π_v ρ Π_v)
            let (tw, tvw, tvwv) = forward_strong_traces(strong, pv, rho_m);
            for (j, (&p, g)) in grid.probs().iter().zip(grid.couplings()).enumerate() {
                let sp = p.sqrt();
                for w in 0..n_w {
                    probs[j * n_w + w] =
                        p * tw[w] + 2.0 * sp * (g * tvw[w]).re + g.norm_sqr() * tvwv[w];
                }
            }
        }
        return OutcomeDistribution::new(labels, probs);
    }

    // Explicit sets: literal traces.
    let elements = povm.explicit_parts().expect("non-structured sets are explicit");
    let probs: Vec<f64> = elements
        .iter()
        .map(|(_, k)| {
            let m = k.matrix().adjoint() * k.matrix();
            trace_pair(&m, rho.matrix()).re
        })
        .collect();
    OutcomeDistribution::new(labels, probs)
}

fn forward_strong_traces(
    strong: &StrongMeasurement,
    pv: &crate::operators::CMatrix,
    rho: &crate::operators::CMatrix,
) -> (Vec<f64>, Vec<Complex64>, Vec<f64>) {
    let a = pv * rho; // Π_v ρ
    let b = &a * pv; // Π_v ρ Π_v
    match strong {
        StrongMeasurement::Coarse(list) => {
            let mut tw = Vec::with_capacity(list.len());
            let mut tvw = Vec::with_capacity(list.len());
            let mut tvwv = Vec::with_capacity(list.len());
            for (_, p) in list {
                tw.push(trace_pair(p.matrix(), rho).re);
                tvw.push(trace_pair(p.matrix(), &a));
                tvwv.push(trace_pair(p.matrix(), &b).re);
            }
            (tw, tvw, tvwv)
        }
        StrongMeasurement::Fine(basis) => {
            let t = basis.transform();
            let d_rho = (t.adjoint() * rho * t).diagonal();
            let d_a = (t.adjoint() * &a * t).diagonal();
            let d_b = (t.adjoint() * &b * t).diagonal();
            (
                d_rho.iter().map(|z| z.re).collect(),
                d_a.iter().copied().collect(),
                d_b.iter().map(|z| z.re).collect(),
            )
        }
    }
}

fn reverse_strong_traces(
    strong: &StrongMeasurement,
    pv: &crate::operators::CMatrix,
    rho: &crate::operators::CMatrix,
) -> (Vec<f64>, Vec<f64>) {
    match strong {
        StrongMeasurement::Coarse(list) => {
            let mut tw = Vec::with_capacity(list.len());
            let mut twvw = Vec::with_capacity(list.len());
            for (_, p) in list {
                tw.push(trace_pair(p.matrix(), rho).re);
                let pwvw = p.matrix() * pv * p.matrix();
                twvw.push(trace_pair(&pwvw, rho).re);
            }
            (tw, twvw)
        }
        StrongMeasurement::Fine(basis) => {
            let t = basis.transform();
            let d_rho = (t.adjoint() * rho * t).diagonal();
            let d_v = (t.adjoint() * pv * t).diagonal();
            let tw: Vec<f64> = d_rho.iter().map(|z| z.re).collect();
            let twvw: Vec<f64> =
                d_rho.iter().zip(d_v.iter()).map(|(r, v)| r.re * v.re).collect();
            (tw, twvw)
        }
    }
}

/// Order-α Rényi entropy `(1/(1−α)) log₂ Σ p^α` in bits; `α = ∞` gives the min
/// entropy `−log₂ max p`, `α = 1/2` the max entropy. Zero-probability outcomes
/// are excluded. `α = 1` is rejected; use [`von_neumann_entropy`].
pub fn renyi_entropy(dist: &OutcomeDistribution, alpha: f64) -> Result<f64> {
    if alpha <= 0.0 || alpha.is_nan() {
        return Err(Error::InvalidParameter(format!("Rényi order must be positive, got {alpha}")));
    }
    if alpha == 1.0 {
        return Err(Error::InvalidParameter(
            "Rényi order 1 is the von Neumann entropy; call von_neumann_entropy".into(),
        ));
    }
    let pmax = dist.max_prob();
    if pmax == 0.0 {
        return Err(Error::InvalidParameter("distribution has empty support".into()));
    }
    if alpha.is_infinite() {
        return Ok(-pmax.log2());
    }
    // Scale by the largest probability so large α cannot underflow.
    let scaled: f64 = dist.probs().iter().filter(|&&p| p > 0.0).map(|&p| (p / pmax).powf(alpha)).sum();
    let log_sum = alpha * pmax.log2() + scaled.log2();
    Ok(log_sum / (1.0 - alpha))
}

/// Shannon entropy `−Σ p log₂ p` of the outcome distribution (the register
/// states are diagonal, so this equals the von Neumann entropy).
pub fn von_neumann_entropy(dist: &OutcomeDistribution) -> f64 {
    shannon_entropy(dist.probs())
}

/// `−Σ p log₂ p` with `0 log 0 := 0`.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
}

/// Rényi entropy with `α = 1` routed to the von Neumann entropy.
pub fn entropy_of_order(dist: &OutcomeDistribution, alpha: f64) -> Result<f64> {
    if alpha == 1.0 {
        Ok(von_neumann_entropy(dist))
    } else {
        renyi_entropy(dist, alpha)
    }
}

/// Conjugate Rényi order: `β = α/(2α−1)`, so `1/α + 1/β = 2`; `α = ∞ ↦ 1/2`.
pub fn entropy_pair_beta(alpha: f64) -> Result<f64> {
    if alpha <= 0.5 || alpha.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "conjugate order requires α > 1/2, got {alpha}"
        )));
    }
    if alpha.is_infinite() {
        return Ok(0.5);
    }
    Ok(alpha / (2.0 * alpha - 1.0))
}
