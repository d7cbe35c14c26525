//! Dense complex linear algebra for many-body operators: Kronecker embedding
//! of single-site Paulis, Hermitian eigendecomposition with eigenspace
//! clustering, matrix functions, traces, and Schatten norms.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Largest chain length accepted by [`embed_pauli`]; 2^14 is the desk-scale cap.
pub const MAX_SITES: usize = 14;

/// Entrywise tolerance for the Hermitian flag.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on `U U† − 1` for the unitary flag.
pub const UNITARY_TOL: f64 = 1e-10;
/// Tolerance for projector idempotence and resolutions of the identity.
pub const PROJECTOR_TOL: f64 = 1e-10;

pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);
pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Dense complex square matrix with Hermitian/unitary flags.
///
/// Projectors built from eigenspace clusters additionally carry a low-rank
/// factor `Q` with `M = Q Q†`, which [`trace_product`] exploits.
#[derive(Debug, Clone)]
pub struct Operator {
    dim: usize,
    m: CMatrix,
    hermitian: bool,
    unitary: bool,
    factor: Option<CMatrix>,
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

fn hermitian_residual(m: &CMatrix) -> f64 {
    let mut r = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            r = r.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    r
}

fn unitary_residual(m: &CMatrix) -> f64 {
    let p = m * m.adjoint();
    let mut r = 0.0f64;
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            let expect = if i == j { ONE } else { ZERO };
            r = r.max((p[(i, j)] - expect).norm());
        }
    }
    r
}

impl Operator {
    /// Wraps a matrix, validating any claimed flags.
    pub fn new(m: CMatrix, hermitian: bool, unitary: bool) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(m.nrows(), m.ncols()));
        }
        if hermitian {
            let r = hermitian_residual(&m);
            if r > HERMITIAN_TOL {
                return Err(Error::NotHermitian(r));
            }
        }
        if unitary {
            let r = unitary_residual(&m);
            if r > UNITARY_TOL {
                return Err(Error::NotUnitary(r));
            }
        }
        let dim = m.nrows();
        Ok(Self { dim, m, hermitian, unitary, factor: None })
    }

    /// Wraps a matrix with no flags claimed.
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        Self::new(m, false, false)
    }

    /// Symmetrizes `(M + M†)/2` and wraps the result as Hermitian.
    ///
    /// Intended for products that are Hermitian in exact arithmetic but carry
    /// rounding noise; errors if the asymmetry exceeds `1e-9`.
    pub fn new_hermitian(m: CMatrix) -> Result<Self> {
        let r = hermitian_residual(&m);
        if r > 1e-9 {
            return Err(Error::NotHermitian(r));
        }
        let sym = (&m + m.adjoint()).scale(0.5);
        let dim = sym.nrows();
        Ok(Self { dim, m: sym, hermitian: true, unitary: false, factor: None })
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, m: CMatrix::identity(dim, dim), hermitian: true, unitary: true, factor: None }
    }

    pub(crate) fn with_factor(mut self, q: CMatrix) -> Self {
        self.factor = Some(q);
        self
    }

    pub(crate) fn unchecked(m: CMatrix, hermitian: bool, unitary: bool) -> Self {
        let dim = m.nrows();
        Self { dim, m, hermitian, unitary, factor: None }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    /// Low-rank factor `Q` with `M = Q Q†`, when one is attached.
    pub fn low_rank_factor(&self) -> Option<&CMatrix> {
        self.factor.as_ref()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            dim: self.dim,
            m: self.m.adjoint(),
            hermitian: self.hermitian,
            unitary: self.unitary,
            factor: None,
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.m.diagonal().sum()
    }

    /// Matrix product; the unitary flag survives, hermiticity does not.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        Ok(Self {
            dim: self.dim,
            m: &self.m * &other.m,
            hermitian: false,
            unitary: self.unitary && other.unitary,
            factor: None,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        Ok(Self {
            dim: self.dim,
            m: &self.m + &other.m,
            hermitian: self.hermitian && other.hermitian,
            unitary: false,
            factor: None,
        })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            m: self.m.map(|z| z * s),
            hermitian: self.hermitian && s.im == 0.0,
            unitary: false,
            factor: None,
        }
    }

    /// Largest entry magnitude of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs(&(&self.m - &other.m))
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.m)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        Self {
            dim: self.dim * other.dim,
            m: self.m.kronecker(&other.m),
            hermitian: self.hermitian && other.hermitian,
            unitary: self.unitary && other.unitary,
            factor: None,
        }
    }

    /// Idempotence residual `max |M² − M|`; small for projectors.
    pub fn projector_residual(&self) -> f64 {
        max_abs(&(&self.m * &self.m - &self.m))
    }
}

/// Single-site Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub fn matrix(self) -> CMatrix {
        match self {
            PauliAxis::X => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            PauliAxis::Y => CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
            PauliAxis::Z => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        }
    }
}

impl std::str::FromStr for PauliAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(PauliAxis::X),
            "y" => Ok(PauliAxis::Y),
            "z" => Ok(PauliAxis::Z),
            other => Err(Error::InvalidParameter(format!("unknown Pauli axis '{other}'"))),
        }
    }
}

/// `1 ⊗ … ⊗ σ^axis ⊗ … ⊗ 1` with the Pauli at position `site` (leftmost factor
/// is site 0).
pub fn embed_pauli(axis: PauliAxis, site: usize, n_sites: usize) -> Result<Operator> {
    if n_sites == 0 || n_sites > MAX_SITES {
        return Err(Error::DimensionOverflow { n_sites, max: MAX_SITES });
    }
    if site >= n_sites {
        return Err(Error::SiteOutOfRange { site, n_sites });
    }
    let sigma = axis.matrix();
    let mut m = CMatrix::identity(1, 1);
    for k in 0..n_sites {
        let next = if k == site { &sigma } else { &CMatrix::identity(2, 2) };
        m = m.kronecker(next);
    }
    let dim = m.nrows();
    Ok(Operator { dim, m, hermitian: true, unitary: true, factor: None })
}

/// One merged eigenspace of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct EigenCluster {
    /// Representative eigenvalue (mean over the merged group).
    pub value: f64,
    pub degeneracy: usize,
    basis: CMatrix,
}

impl EigenCluster {
    /// Orthogonal projector `Q Q†` onto this eigenspace, materialized on demand.
    pub fn projector(&self) -> Operator {
        let m = &self.basis * self.basis.adjoint();
        let sym = (&m + m.adjoint()).scale(0.5);
        let dim = sym.nrows();
        Operator { dim, m: sym, hermitian: true, unitary: false, factor: None }
            .with_factor(self.basis.clone())
    }

    /// Isometry whose columns span the eigenspace.
    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }
}

/// Eigenvalues (ascending), eigenvector columns, and clustered eigenspaces of a
/// Hermitian operator.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
    pub clusters: Vec<EigenCluster>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `(eigenvalue, projector)` pairs in ascending eigenvalue order.
    pub fn labeled_projectors(&self) -> Vec<(f64, Operator)> {
        self.clusters.iter().map(|c| (c.value, c.projector())).collect()
    }

    /// Cluster whose representative eigenvalue is closest to `value`.
    pub fn cluster_near(&self, value: f64) -> &EigenCluster {
        self.clusters
            .iter()
            .min_by(|a, b| {
                (a.value - value).abs().partial_cmp(&(b.value - value).abs()).unwrap()
            })
            .expect("decomposition has at least one cluster")
    }
}

/// Hermitian eigendecomposition with eigenvalue clustering.
///
/// Eigenvalues within `cluster_tol` of their neighbor are merged into one
/// eigenspace projector; the default tolerance is `1e-9` times the spectral
/// range, so exactly degenerate Pauli spectra stay merged under floating-point
/// splitting.
pub fn eig_hermitian(op: &Operator, cluster_tol: Option<f64>) -> Result<SpectralDecomposition> {
    if !op.is_hermitian() {
        return Err(Error::NotHermitian(hermitian_residual(op.matrix())));
    }
    if let Some(t) = cluster_tol {
        if t <= 0.0 {
            return Err(Error::InvalidParameter(format!("cluster_tol must be positive, got {t}")));
        }
    }
    let dim = op.dim();
    let se = SymmetricEigen::new(op.matrix().clone());
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    if eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure("non-finite eigenvalue".into()));
    }
    let mut eigenvectors = CMatrix::zeros(dim, dim);
    for (col, &k) in order.iter().enumerate() {
        eigenvectors.set_column(col, &se.eigenvectors.column(k));
    }

    let range = eigenvalues[dim - 1] - eigenvalues[0];
    let tol = cluster_tol.unwrap_or(1e-9 * range);
    let mut clusters = Vec::new();
    let mut start = 0;
    for k in 1..=dim {
        if k == dim || eigenvalues[k] - eigenvalues[k - 1] > tol {
            let deg = k - start;
            let value = eigenvalues[start..k].iter().sum::<f64>() / deg as f64;
            let basis = eigenvectors.columns(start, deg).into_owned();
            clusters.push(EigenCluster { value, degeneracy: deg, basis });
            start = k;
        }
    }
    Ok(SpectralDecomposition { eigenvalues, eigenvectors, clusters })
}

/// `Σ f(λ_k) P_k` over the clustered eigenspaces.
pub fn matrix_function<F>(sd: &SpectralDecomposition, f: F) -> Operator
where
    F: Fn(f64) -> Complex64,
{
    let dim = sd.dim();
    let mut fvals = Vec::with_capacity(dim);
    for c in &sd.clusters {
        let fv = f(c.value);
        for _ in 0..c.degeneracy {
            fvals.push(fv);
        }
    }
    let mut scaled = sd.eigenvectors.clone();
    for (col, fv) in fvals.iter().enumerate() {
        let mut column = scaled.column_mut(col);
        for x in column.iter_mut() {
            *x *= *fv;
        }
    }
    let m = &scaled * sd.eigenvectors.adjoint();
    let all_real = fvals.iter().all(|z| z.im.abs() <= 1e-14 * (1.0 + z.re.abs()));
    let all_unit = fvals.iter().all(|z| (z.norm() - 1.0).abs() <= 1e-12);
    if all_real {
        let sym = (&m + m.adjoint()).scale(0.5);
        Operator { dim, m: sym, hermitian: true, unitary: all_unit, factor: None }
    } else {
        Operator { dim, m, hermitian: false, unitary: all_unit, factor: None }
    }
}

/// Schatten p-norm `(Σ_j s_j^p)^{1/p}` over singular values; `p = ∞` gives the
/// operator norm. Hermitian inputs use `|eigenvalues|` directly.
pub fn schatten_norm(op: &Operator, p: f64) -> Result<f64> {
    if p < 1.0 || p.is_nan() {
        return Err(Error::InvalidParameter(format!("Schatten order must satisfy p ≥ 1, got {p}")));
    }
    let svals: Vec<f64> = if op.is_hermitian() {
        let se = SymmetricEigen::new(op.matrix().clone());
        se.eigenvalues.iter().map(|v| v.abs()).collect()
    } else {
        let svd = SVD::new(op.matrix().clone(), false, false);
        svd.singular_values.iter().copied().collect()
    };
    let smax = svals.iter().cloned().fold(0.0f64, f64::max);
    if p.is_infinite() || smax == 0.0 {
        return Ok(smax);
    }
    // Scale by the largest singular value so large p cannot underflow.
    let sum: f64 = svals.iter().map(|s| (s / smax).powf(p)).sum();
    Ok(smax * sum.powf(1.0 / p))
}

/// Trace of the left-to-right product.
///
/// When every input carries a low-rank factor `Q_i` (eigenspace projectors),
/// the trace is evaluated through the small Gram blocks `Q_i† Q_{i+1}` without
/// forming any full-dimension intermediate.
pub fn trace_product(ops: &[&Operator]) -> Result<Complex64> {
    let first = ops.first().ok_or_else(|| {
        Error::InvalidParameter("trace_product requires a non-empty operator list".into())
    })?;
    let dim = first.dim();
    for op in ops {
        if op.dim() != dim {
            return Err(Error::DimensionMismatch(dim, op.dim()));
        }
    }
    if ops.len() == 1 {
        return Ok(first.trace());
    }
    if ops.iter().all(|op| op.low_rank_factor().is_some()) {
        let factors: Vec<&CMatrix> = ops.iter().map(|op| op.low_rank_factor().unwrap()).collect();
        let n = factors.len();
        let mut acc = factors[0].adjoint() * factors[1 % n];
        for k in 1..n {
            let block = factors[k].adjoint() * factors[(k + 1) % n];
            acc *= block;
        }
        return Ok(acc.diagonal().sum());
    }
    let mut acc = ops[0].matrix().clone();
    for op in &ops[1..ops.len() - 1] {
        acc *= op.matrix();
    }
    // Last factor enters through the Frobenius pairing instead of a full product.
    let last = ops[ops.len() - 1].matrix();
    let mut tr = ZERO;
    for i in 0..dim {
        for k in 0..dim {
            tr += acc[(i, k)] * last[(k, i)];
        }
    }
    Ok(tr)
}

/// `Tr(A B)` for dense matrices without forming the product.
pub(crate) fn trace_pair(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut tr = ZERO;
    for i in 0..n {
        for k in 0..n {
            tr += a[(i, k)] * b[(k, i)];
        }
    }
    tr
}
