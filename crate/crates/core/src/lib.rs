//! Numerical toolkit for information scrambling in spin chains: exact
//! diagonalization, Gaussian-detector weak measurements, out-of-time-ordered
//! correlators and their quasiprobabilities, Rényi-family entropies, and the
//! entropic uncertainty bounds those ingredients assemble into.
//!
//! Everything is dense, double precision, and pure: values are immutable after
//! construction and safe to share across threads.

pub mod bounds;
pub mod entropy;
pub mod error;
pub mod models;
pub mod operators;
pub mod quasiprob;
pub mod weakmeas;

pub use error::{Error, Result};
pub use operators::{CMatrix, CVector, Operator, PauliAxis, SpectralDecomposition};

#[cfg(test)]
pub(crate) mod testutil {
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    use crate::models::{ChainVariant, DensityState, SpinChainModel};
    use crate::operators::{CMatrix, Operator};

    /// N = 8 power-law chain at the simulation parameters used throughout.
    pub fn chain8() -> SpinChainModel {
        SpinChainModel {
            n_sites: 8,
            coupling_j: 1.0,
            zeta: 6.0,
            range: 5,
            h_x: 1.05,
            h_z_amp: 0.375,
            variant: ChainVariant::PowerLaw,
        }
    }

    pub fn random_complex_matrix(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let mut g = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                g[(i, j)] = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        g
    }

    pub fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> Operator {
        let g = random_complex_matrix(dim, rng);
        let h = (&g + g.adjoint()).map(|z| z * 0.5);
        Operator::new(h, true, false).unwrap()
    }

    /// Full-rank random density matrix (normalized Wishart).
    pub fn random_density(dim: usize, rng: &mut ChaCha8Rng) -> DensityState {
        let g = random_complex_matrix(dim, rng);
        let w = &g * g.adjoint();
        let tr: Complex64 = w.diagonal().sum();
        let rho = w.map(|z| z / tr.re);
        DensityState::new(rho, "random").unwrap()
    }
}
