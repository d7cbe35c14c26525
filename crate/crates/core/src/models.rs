//! Spin-chain Hamiltonians, Heisenberg-picture evolution, and state
//! preparation (Gibbs states and evolved computational-basis eigenstates).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    eig_hermitian, embed_pauli, matrix_function, max_abs, trace_pair, CMatrix, Operator,
    PauliAxis, SpectralDecomposition, HERMITIAN_TOL, I,
};

/// Which interaction pattern the chain carries.
///
/// `TransverseFieldOnly` is the integrable comparison: nearest-neighbor ZZ
/// bonds of uniform weight and a transverse field, no longitudinal field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChainVariant {
    PowerLaw,
    TransverseFieldOnly,
}

/// Power-law quantum Ising chain
/// `H = −J Σ_{ℓ=1..ℓ0} Σ_j ℓ^{−ζ} σ^z_j σ^z_{j+ℓ} − h^x Σ_j σ^x_j − Σ_j h^z_j σ^z_j`
/// with staggered longitudinal field `h^z_j = h^z_amp (−1)^j` (1-based j).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpinChainModel {
    pub n_sites: usize,
    pub coupling_j: f64,
    pub zeta: f64,
    pub range: usize,
    pub h_x: f64,
    pub h_z_amp: f64,
    pub variant: ChainVariant,
}

impl SpinChainModel {
    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::InvalidParameter(format!(
                "chain needs at least 2 sites, got {}",
                self.n_sites
            )));
        }
        if self.zeta <= 0.0 {
            return Err(Error::InvalidParameter(format!("zeta must be positive, got {}", self.zeta)));
        }
        let range = self.effective_range();
        if range < 1 || range > self.n_sites - 1 {
            return Err(Error::InvalidParameter(format!(
                "interaction range {} invalid for {} sites",
                self.range, self.n_sites
            )));
        }
        Ok(())
    }

    fn effective_range(&self) -> usize {
        match self.variant {
            ChainVariant::PowerLaw => self.range,
            ChainVariant::TransverseFieldOnly => 1,
        }
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_sites
    }
}

/// Assembles the dense Hamiltonian; Hermitian flag set.
pub fn build_hamiltonian(model: &SpinChainModel) -> Result<Operator> {
    model.validate()?;
    let n = model.n_sites;
    let dim = model.dim();
    let mut h = CMatrix::zeros(dim, dim);

    let range = match model.variant {
        ChainVariant::PowerLaw => model.range,
        ChainVariant::TransverseFieldOnly => 1,
    };
    for ell in 1..=range {
        let weight = match model.variant {
            ChainVariant::PowerLaw => model.coupling_j / (ell as f64).powf(model.zeta),
            ChainVariant::TransverseFieldOnly => model.coupling_j,
        };
        for site in 0..n - ell {
            let zz = embed_pauli(PauliAxis::Z, site, n)?
                .mul(&embed_pauli(PauliAxis::Z, site + ell, n)?)?;
            h += zz.matrix().map(|z| z * Complex64::new(-weight, 0.0));
        }
    }
    for site in 0..n {
        let sx = embed_pauli(PauliAxis::X, site, n)?;
        h += sx.matrix().map(|z| z * Complex64::new(-model.h_x, 0.0));
        if model.variant == ChainVariant::PowerLaw && model.h_z_amp != 0.0 {
            // Staggering follows the 1-based site label: internal i maps to j = i + 1.
            let j = site + 1;
            let hz = model.h_z_amp * if j % 2 == 0 { 1.0 } else { -1.0 };
            let sz = embed_pauli(PauliAxis::Z, site, n)?;
            h += sz.matrix().map(|z| z * Complex64::new(-hz, 0.0));
        }
    }
    Operator::new(h, true, false)
}

/// Density operator: positive semidefinite, unit trace, Hermitian.
#[derive(Debug, Clone)]
pub struct DensityState {
    dim: usize,
    m: CMatrix,
    label: String,
}

impl DensityState {
    pub fn new(m: CMatrix, label: impl Into<String>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(m.nrows(), m.ncols()));
        }
        let herm = {
            let r = max_abs(&(&m - m.adjoint()));
            if r > HERMITIAN_TOL {
                return Err(Error::NotHermitian(r));
            }
            (&m + m.adjoint()).scale(0.5)
        };
        let tr: Complex64 = herm.diagonal().sum();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "density matrix trace {} must equal 1",
                tr.re
            )));
        }
        let op = Operator::new(herm.clone(), true, false)?;
        let sd = eig_hermitian(&op, None)?;
        if let Some(min) = sd.eigenvalues.first() {
            if *min < -1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "density matrix has negative eigenvalue {min:.3e}"
                )));
            }
        }
        let dim = herm.nrows();
        Ok(Self { dim, m: herm, label: label.into() })
    }

    /// Maximally mixed state `1/D`.
    pub fn maximally_mixed(dim: usize) -> Self {
        let m = CMatrix::identity(dim, dim).map(|z| z / dim as f64);
        Self { dim, m, label: format!("maximally mixed D={dim}") }
    }

    /// Pure state `|ψ⟩⟨ψ|` from a normalized vector.
    pub fn from_pure(psi: &crate::operators::CVector, label: impl Into<String>) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "state vector norm {norm} must equal 1"
            )));
        }
        let m = psi * psi.adjoint();
        let sym = (&m + m.adjoint()).scale(0.5);
        Ok(Self { dim: psi.len(), m: sym, label: label.into() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn purity(&self) -> f64 {
        trace_pair(&self.m, &self.m).re
    }

    pub fn expectation(&self, op: &Operator) -> Complex64 {
        trace_pair(op.matrix(), &self.m)
    }
}

/// Cached eigendecomposition of a Hamiltonian, reused across sweep times.
#[derive(Debug, Clone)]
pub struct TimeEvolver {
    sd: SpectralDecomposition,
}

impl TimeEvolver {
    pub fn new(h: &Operator) -> Result<Self> {
        if !h.is_hermitian() {
            return Err(Error::NotHermitian(f64::NAN));
        }
        Ok(Self { sd: eig_hermitian(h, None)? })
    }

    /// `U = e^{−iHt}`.
    pub fn unitary(&self, t: f64) -> Operator {
        matrix_function(&self.sd, |l| (-I * Complex64::new(l * t, 0.0)).exp())
    }

    /// Heisenberg conjugation `U† op U`, preserving Hermitian/unitary flags.
    pub fn evolve(&self, op: &Operator, t: f64) -> Result<Operator> {
        let u = self.unitary(t);
        Self::evolve_with(op, &u)
    }

    /// Conjugation by an already-built evolution unitary; sweeps build `U`
    /// once per time and reuse it.
    pub fn evolve_with(op: &Operator, u: &Operator) -> Result<Operator> {
        if op.dim() != u.dim() {
            return Err(Error::DimensionMismatch(op.dim(), u.dim()));
        }
        let m = u.matrix().adjoint() * op.matrix() * u.matrix();
        if op.is_hermitian() {
            let sym = (&m + m.adjoint()).scale(0.5);
            Ok(Operator::unchecked(sym, true, op.is_unitary()))
        } else {
            Ok(Operator::unchecked(m, false, op.is_unitary()))
        }
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.sd
    }
}

/// `U† op U` with `U = e^{−iHt}`; see [`TimeEvolver`] for the cached variant.
pub fn heisenberg_evolve(op: &Operator, h: &Operator, t: f64) -> Result<Operator> {
    TimeEvolver::new(h)?.evolve(op, t)
}

/// Gibbs state `e^{−βH}/Z`, computed spectrally with the spectrum shifted by
/// its minimum before exponentiation so large `β` cannot overflow.
pub fn gibbs_state(h: &Operator, beta: f64) -> Result<DensityState> {
    if beta < 0.0 {
        return Err(Error::InvalidParameter(format!("inverse temperature must be ≥ 0, got {beta}")));
    }
    if !h.is_hermitian() {
        return Err(Error::NotHermitian(f64::NAN));
    }
    let sd = eig_hermitian(h, None)?;
    let e0 = sd.eigenvalues[0];
    let unnorm = matrix_function(&sd, |l| Complex64::new((-beta * (l - e0)).exp(), 0.0));
    let z: Complex64 = unnorm.trace();
    let m = unnorm.matrix().map(|x| x / z.re);
    let mut label = format!("gibbs beta={beta}");
    if beta == 0.0 {
        label = format!("maximally mixed D={}", h.dim());
    }
    DensityState::new(m, label)
}

/// Pure state `U(t*)† |e_which⟩⟨e_which| U(t*)`: an eigenstate of `W(t*)` when
/// `W` is diagonal in the computational basis.
pub fn w_eigenstate(w: &Operator, h: &Operator, t_star: f64, which: usize) -> Result<DensityState> {
    let dim = w.dim();
    if which >= dim {
        return Err(Error::OutcomeOutOfRange { index: which, len: dim });
    }
    let off_diag = {
        let mut r = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                if i != j {
                    r = r.max(w.matrix()[(i, j)].norm());
                }
            }
        }
        r
    };
    if off_diag > 1e-12 {
        return Err(Error::InvalidParameter(
            "w_eigenstate requires a computational-basis-diagonal W".into(),
        ));
    }
    let evolver = TimeEvolver::new(h)?;
    let u = evolver.unitary(t_star);
    // Column `which` of U† is U†|e_which⟩.
    let psi = u.matrix().adjoint().column(which).into_owned();
    DensityState::from_pure(&psi, format!("W(t*={t_star}) eigenstate k={which}"))
}
