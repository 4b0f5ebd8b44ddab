//! Quantum-state and channel data model: density matrices, maximally
//! coherent/entangled state families, Schmidt decomposition, incoherent
//! channel structure, and seeded random ensembles.
//!
//! All sampling takes explicit seeds so parallel campaigns stay reproducible
//! without shared RNG state.

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qmath::{self, CMatrix, Subsystem};

/// Residual above which a matrix is rejected as non-Hermitian.
pub const STATE_HERM_TOL: f64 = 1e-10;
/// Allowed deviation of the trace from one.
pub const STATE_TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue a state may carry.
pub const STATE_PSD_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum StateError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("not Hermitian: residual {residual:.3e} exceeds {STATE_HERM_TOL:.0e}")]
    NotHermitian { residual: f64 },

    #[error("trace is {trace:.12} instead of 1")]
    NotUnitTrace { trace: f64 },

    #[error("not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPSD { min_eigenvalue: f64 },

    #[error("bad dimension: {0}")]
    BadDimension(String),

    #[error("matrix is not unitary: residual {residual:.3e}")]
    NotUnitary { residual: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("bad rank {rank} for dimension {dim}")]
    BadRank { rank: usize, dim: usize },

    #[error("state vector norm is {norm:.12}, expected 1")]
    NotNormalized { norm: f64 },

    #[error("kraus list fails completeness: residual {residual:.3e}")]
    BadCompleteness { residual: f64 },

    #[error("channel is not trace preserving")]
    NotTracePreserving,

    #[error("probabilities must be nonnegative and sum to 1 (sum = {sum:.12})")]
    BadDistribution { sum: f64 },

    #[error(transparent)]
    Math(#[from] qmath::QmathError),
}

pub type Result<T> = std::result::Result<T, StateError>;

// ---------------------------------------------------------------------------
// Density matrices
// ---------------------------------------------------------------------------

/// A validated density operator: Hermitian, PSD, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    mat: CMatrix,
    /// Bipartite split (d_A, d_B), when the state is declared bipartite.
    dims: Option<(usize, usize)>,
}

impl DensityMatrix {
    /// Validate a matrix as a state. Each failure names the violated
    /// invariant together with its residual.
    pub fn new(mat: CMatrix) -> Result<Self> {
        if !mat.is_square() {
            return Err(StateError::NotSquare {
                rows: mat.rows(),
                cols: mat.cols(),
            });
        }
        let residual = mat.hermiticity_residual();
        if residual > STATE_HERM_TOL * mat.frob_norm().max(1.0) {
            return Err(StateError::NotHermitian { residual });
        }
        let trace = mat.trace().re;
        if (trace - 1.0).abs() > STATE_TRACE_TOL {
            return Err(StateError::NotUnitTrace { trace });
        }
        let min_eigenvalue = qmath::min_eigenvalue(&mat.hermitize())?;
        if min_eigenvalue < -STATE_PSD_TOL {
            return Err(StateError::NotPSD { min_eigenvalue });
        }
        let dim = mat.rows();
        Ok(Self {
            dim,
            mat,
            dims: None,
        })
    }

    /// Tag the state as bipartite on ℂ^{dA} ⊗ ℂ^{dB}.
    pub fn with_dims(mut self, d_a: usize, d_b: usize) -> Result<Self> {
        if d_a * d_b != self.dim {
            return Err(StateError::BadDimension(format!(
                "{}x{} split does not match dimension {}",
                d_a, d_b, self.dim
            )));
        }
        self.dims = Some((d_a, d_b));
        Ok(self)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            dim: d,
            mat: CMatrix::identity(d).scale(1.0 / d as f64),
            dims: None,
        }
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self {
            dim: psi.dim(),
            mat: CMatrix::outer(psi.amplitudes(), psi.amplitudes()),
            dims: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn bipartite_dims(&self) -> Option<(usize, usize)> {
        self.dims
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.mat[(i, j)]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.mat[(i, i)].re).collect()
    }

    /// ‖off-diagonal part‖_F.
    pub fn off_diagonal_mass(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    s += self.mat[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    }

    pub fn fidelity(&self, other: &DensityMatrix) -> Result<f64> {
        Ok(qmath::fidelity(&self.mat, &other.mat)?)
    }

    /// Reduced state of one subsystem. The trace is preserved, so the
    /// result is again a valid state.
    pub fn partial_trace(&self, dims: (usize, usize), keep: Subsystem) -> Result<DensityMatrix> {
        if dims.0 * dims.1 != self.dim {
            return Err(StateError::DimensionMismatch {
                left: self.dim,
                right: dims.0 * dims.1,
            });
        }
        let red = qmath::partial_trace(&self.mat, dims, keep)?;
        DensityMatrix::new(red.hermitize())
    }

    pub fn eig(&self) -> Result<qmath::HermitianEig> {
        Ok(qmath::hermitian_eig(&self.mat.hermitize())?)
    }

    pub fn purity(&self) -> f64 {
        self.mat.inner_re(&self.mat)
    }
}

/// Validate a raw matrix as a density operator (checked constructor alias).
pub fn validate_state(mat: CMatrix) -> Result<DensityMatrix> {
    DensityMatrix::new(mat)
}

/// Project a Hermitian matrix onto the set of density operators: clamp the
/// spectrum to the probability simplex. Used by optimizers that walk
/// through infeasible iterates.
pub fn project_to_density(m: &CMatrix) -> Result<DensityMatrix> {
    let eig = qmath::hermitian_eig(&m.hermitize())?;
    let lam = project_to_simplex(&eig.eigenvalues);
    let d = eig.eigenvalues.len();
    let v = &eig.eigenvectors;
    let mat = CMatrix::from_fn(d, d, |i, j| {
        (0..d).map(|k| v[(i, k)] * lam[k] * v[(j, k)].conj()).sum()
    });
    DensityMatrix::new(mat.hermitize())
}

/// Euclidean projection of a real vector onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

// ---------------------------------------------------------------------------
// Pure states and phase vectors
// ---------------------------------------------------------------------------

/// A normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: Vec<Complex64>,
}

impl PureState {
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(StateError::NotNormalized { norm });
        }
        Ok(Self { amps })
    }

    /// Normalize and wrap; fails only on the zero vector.
    pub fn normalized(mut amps: Vec<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-14 {
            return Err(StateError::NotNormalized { norm });
        }
        for a in &mut amps {
            *a /= norm;
        }
        Ok(Self { amps })
    }

    pub fn basis_vector(d: usize, k: usize) -> Self {
        let mut amps = vec![Complex64::ZERO; d];
        amps[k] = Complex64::ONE;
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        PureState { amps }
    }
}

/// Relative phases of a maximally coherent state; the first phase is pinned
/// to zero (global-phase gauge).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    phases: Vec<f64>,
}

impl PhaseVector {
    /// Store phases in the θ₀ = 0 gauge (the first entry is subtracted).
    pub fn new(mut phases: Vec<f64>) -> Self {
        let base = phases[0];
        for p in &mut phases {
            *p -= base;
        }
        Self { phases }
    }

    pub fn zero(d: usize) -> Self {
        Self {
            phases: vec![0.0; d],
        }
    }

    pub fn random_rng(d: usize, rng: &mut impl Rng) -> Self {
        let mut phases: Vec<f64> = (0..d)
            .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
            .collect();
        phases[0] = 0.0;
        Self { phases }
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }
}

/// The maximally coherent state (1/√d) Σᵢ e^{iθᵢ} |i⟩.
pub fn max_coherent(d: usize, theta: &PhaseVector) -> Result<PureState> {
    if d < 2 {
        return Err(StateError::BadDimension(format!(
            "maximally coherent states need d ≥ 2, got {d}"
        )));
    }
    if theta.dim() != d {
        return Err(StateError::DimensionMismatch {
            left: theta.dim(),
            right: d,
        });
    }
    let inv = 1.0 / (d as f64).sqrt();
    let amps = theta
        .phases()
        .iter()
        .map(|&t| Complex64::from_polar(inv, t))
        .collect();
    Ok(PureState { amps })
}

/// The maximally entangled state (1/√d) Σᵢ (U_A|i⟩) ⊗ (U_B|i⟩).
pub fn max_entangled(d: usize, u_a: &CMatrix, u_b: &CMatrix) -> Result<PureState> {
    for u in [u_a, u_b] {
        if u.rows() != d || u.cols() != d {
            return Err(StateError::DimensionMismatch {
                left: u.rows(),
                right: d,
            });
        }
        let residual = (&(&u.adjoint() * u) - &CMatrix::identity(d)).frob_norm();
        if residual > 1e-9 {
            return Err(StateError::NotUnitary { residual });
        }
    }
    let inv = 1.0 / (d as f64).sqrt();
    let mut amps = vec![Complex64::ZERO; d * d];
    for a in 0..d {
        for b in 0..d {
            let mut acc = Complex64::ZERO;
            for i in 0..d {
                acc += u_a[(a, i)] * u_b[(b, i)];
            }
            amps[a * d + b] = acc * inv;
        }
    }
    Ok(PureState { amps })
}

// ---------------------------------------------------------------------------
// Schmidt decomposition
// ---------------------------------------------------------------------------

/// Canonical form |ψ⟩ = Σᵢ qᵢ |aᵢ⟩|bᵢ⟩ with nonnegative coefficients in
/// descending order; coefficients below 1e−12 are dropped.
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    pub coefficients: Vec<f64>,
    pub basis_a: Vec<Vec<Complex64>>,
    pub basis_b: Vec<Vec<Complex64>>,
}

impl SchmidtDecomposition {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    /// Rebuild the state vector Σᵢ qᵢ |aᵢ⟩|bᵢ⟩.
    pub fn reconstruct(&self) -> Vec<Complex64> {
        let da = self.basis_a[0].len();
        let db = self.basis_b[0].len();
        let mut amps = vec![Complex64::ZERO; da * db];
        for (k, &q) in self.coefficients.iter().enumerate() {
            for a in 0..da {
                for b in 0..db {
                    amps[a * db + b] += q * self.basis_a[k][a] * self.basis_b[k][b];
                }
            }
        }
        amps
    }
}

/// Schmidt decomposition of a bipartite pure state.
pub fn schmidt(psi: &PureState, dims: (usize, usize)) -> Result<SchmidtDecomposition> {
    let (da, db) = dims;
    if da * db != psi.dim() {
        return Err(StateError::DimensionMismatch {
            left: psi.dim(),
            right: da * db,
        });
    }
    // coefficient matrix C[a,b] and the Gram matrix C†C on system B
    let c = CMatrix::from_fn(da, db, |a, b| psi.amplitudes()[a * db + b]);
    let gram = c.gram().hermitize();
    let eig = qmath::hermitian_eig(&gram)?;

    let mut triples: Vec<(f64, Vec<Complex64>)> = Vec::new();
    for k in (0..db).rev() {
        let lam = eig.eigenvalues[k].max(0.0);
        let q = lam.sqrt();
        if q <= 1e-12 {
            continue;
        }
        triples.push((q, eig.eigenvectors.column(k)));
    }
    triples.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());

    let mut coefficients = Vec::new();
    let mut basis_a = Vec::new();
    let mut basis_b = Vec::new();
    for (q, v) in triples {
        // left vector u = C v / q; right Schmidt vector is the conjugate of v
        let u: Vec<Complex64> = (0..da)
            .map(|a| (0..db).map(|b| c[(a, b)] * v[b]).sum::<Complex64>() / q)
            .collect();
        coefficients.push(q);
        basis_a.push(u);
        basis_b.push(v.iter().map(|z| z.conj()).collect());
    }
    Ok(SchmidtDecomposition {
        coefficients,
        basis_a,
        basis_b,
    })
}

// ---------------------------------------------------------------------------
// Kraus channels
// ---------------------------------------------------------------------------

/// A CP map given by Kraus operators. Trace preserving when
/// Σ Kₙ†Kₙ = 𝕀, trace nonincreasing when Σ Kₙ†Kₙ ⪯ 𝕀.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    kraus: Vec<CMatrix>,
    trace_preserving: bool,
}

impl KrausChannel {
    pub fn new(kraus: Vec<CMatrix>, trace_preserving: bool) -> Result<Self> {
        assert!(!kraus.is_empty(), "a channel needs at least one Kraus operator");
        let d = kraus[0].rows();
        let mut sum = CMatrix::zeros(d, d);
        for k in kraus.iter() {
            if k.rows() != d || k.cols() != d {
                return Err(StateError::DimensionMismatch {
                    left: k.rows(),
                    right: d,
                });
            }
            sum = &sum + &k.gram();
        }
        let gap = (&CMatrix::identity(d) - &sum).hermitize();
        if trace_preserving {
            let residual = gap.frob_norm();
            if residual > 1e-9 {
                return Err(StateError::BadCompleteness { residual });
            }
        } else {
            let min_eig = qmath::min_eigenvalue(&gap)?;
            if min_eig < -1e-9 {
                return Err(StateError::BadCompleteness {
                    residual: -min_eig,
                });
            }
        }
        Ok(Self {
            kraus,
            trace_preserving,
        })
    }

    pub fn dim(&self) -> usize {
        self.kraus[0].rows()
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    /// Identity channel.
    pub fn identity(d: usize) -> Self {
        Self {
            kraus: vec![CMatrix::identity(d)],
            trace_preserving: true,
        }
    }

    /// Full dephasing in the computational basis: Kraus {|i⟩⟨i|}.
    pub fn dephasing(d: usize) -> Self {
        let kraus = (0..d)
            .map(|i| {
                let mut k = CMatrix::zeros(d, d);
                k[(i, i)] = Complex64::ONE;
                k
            })
            .collect();
        Self {
            kraus,
            trace_preserving: true,
        }
    }
}

/// Deterministic channel application Σₙ Kₙ ρ Kₙ†.
pub fn apply_channel(rho: &DensityMatrix, ch: &KrausChannel) -> Result<DensityMatrix> {
    if ch.dim() != rho.dim() {
        return Err(StateError::DimensionMismatch {
            left: ch.dim(),
            right: rho.dim(),
        });
    }
    if !ch.trace_preserving {
        return Err(StateError::NotTracePreserving);
    }
    let d = rho.dim();
    let mut out = CMatrix::zeros(d, d);
    for k in ch.kraus() {
        out = &out + &(&(k * rho.matrix()) * &k.adjoint());
    }
    DensityMatrix::new(out.hermitize())
}

/// Selective channel application: branches (pₙ, σₙ) with
/// σₙ = Kₙ ρ Kₙ†/pₙ. Branches with pₙ < 1e−12 are dropped.
pub fn apply_channel_selective(
    rho: &DensityMatrix,
    ch: &KrausChannel,
) -> Result<Vec<(f64, DensityMatrix)>> {
    if ch.dim() != rho.dim() {
        return Err(StateError::DimensionMismatch {
            left: ch.dim(),
            right: rho.dim(),
        });
    }
    let mut branches = Vec::new();
    for k in ch.kraus() {
        let raw = &(k * rho.matrix()) * &k.adjoint();
        let p = raw.trace().re;
        if p < 1e-12 {
            continue;
        }
        let sigma = DensityMatrix::new(raw.scale(1.0 / p).hermitize())?;
        branches.push((p, sigma));
    }
    Ok(branches)
}

/// Draw a random incoherent channel: each Kraus operator carries one
/// nonzero entry per column, the column positions given by a random
/// permutation and the magnitudes normalized jointly across operators so
/// that Σ Kₙ†Kₙ = 𝕀 exactly. Diagonal states map to diagonal states.
pub fn sample_incoherent_channel(d: usize, n_kraus: usize, seed: u64) -> KrausChannel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_incoherent_channel_rng(d, n_kraus, &mut rng)
}

pub fn sample_incoherent_channel_rng(
    d: usize,
    n_kraus: usize,
    rng: &mut impl Rng,
) -> KrausChannel {
    assert!(n_kraus >= 1, "need at least one Kraus operator");
    let mut perms: Vec<Vec<usize>> = Vec::with_capacity(n_kraus);
    let mut mags: Vec<Vec<Complex64>> = Vec::with_capacity(n_kraus);
    for _ in 0..n_kraus {
        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(rng);
        perms.push(perm);
        mags.push((0..d).map(|_| gaussian_complex(rng)).collect());
    }
    // joint column normalization: Σₙ |gₙ(j)|² = 1 per column j
    for j in 0..d {
        let mut s: f64 = mags.iter().map(|g| g[j].norm_sqr()).sum();
        if s < 1e-24 {
            mags[0][j] = Complex64::ONE;
            s = 1.0;
        }
        let inv = 1.0 / s.sqrt();
        for g in &mut mags {
            g[j] *= inv;
        }
    }
    let kraus = (0..n_kraus)
        .map(|n| {
            let mut k = CMatrix::zeros(d, d);
            for j in 0..d {
                k[(perms[n][j], j)] = mags[n][j];
            }
            k
        })
        .collect();
    KrausChannel::new(kraus, true).expect("normalized by construction")
}

// ---------------------------------------------------------------------------
// Random ensembles
// ---------------------------------------------------------------------------

fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u: f64 = rng.random::<f64>().max(1e-300);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

fn gaussian_complex(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(gaussian(rng), gaussian(rng))
}

/// Haar-random pure state.
pub fn random_pure(d: usize, seed: u64) -> PureState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_pure_rng(d, &mut rng)
}

pub fn random_pure_rng(d: usize, rng: &mut impl Rng) -> PureState {
    let amps: Vec<Complex64> = (0..d).map(|_| gaussian_complex(rng)).collect();
    PureState::normalized(amps).expect("gaussian vector is nonzero")
}

/// Haar-random unitary via Gram-Schmidt on a Ginibre matrix.
pub fn random_unitary(d: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_unitary_rng(d, &mut rng)
}

pub fn random_unitary_rng(d: usize, rng: &mut impl Rng) -> CMatrix {
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    for _ in 0..d {
        let mut v: Vec<Complex64> = (0..d).map(|_| gaussian_complex(rng)).collect();
        for c in &cols {
            let ip: Complex64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, ci) in v.iter_mut().zip(c) {
                *vi -= ip * ci;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for vi in &mut v {
            *vi /= norm;
        }
        cols.push(v);
    }
    CMatrix::from_columns(&cols)
}

/// Kraus operators of a random CPTP map: a stack of Ginibre matrices
/// normalized by S^{−1/2} with S = Σ Gₙ†Gₙ.
pub fn sample_cptp_kraus_rng(d: usize, n_kraus: usize, rng: &mut impl Rng) -> Vec<CMatrix> {
    assert!(n_kraus >= 1);
    let raw: Vec<CMatrix> = (0..n_kraus)
        .map(|_| CMatrix::from_fn(d, d, |_, _| gaussian_complex(rng)))
        .collect();
    let mut sum = CMatrix::zeros(d, d);
    for g in &raw {
        sum = &sum + &g.gram();
    }
    let whiten = qmath::inv_sqrt_psd(&sum.hermitize(), 1e-12).expect("sum is Hermitian");
    raw.iter().map(|g| g * &whiten).collect()
}

/// Random density matrix of the requested rank: partial trace of a
/// Haar-random pure state on a dilated space with environment dimension
/// equal to the rank.
pub fn random_density(d: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_density_rng(d, rank, &mut rng)
}

pub fn random_density_rng(d: usize, rank: usize, rng: &mut impl Rng) -> Result<DensityMatrix> {
    if rank == 0 || rank > d {
        return Err(StateError::BadRank { rank, dim: d });
    }
    let psi = random_pure_rng(d * rank, rng);
    let full = CMatrix::outer(psi.amplitudes(), psi.amplitudes());
    let red = qmath::partial_trace(&full, (d, rank), Subsystem::A)?;
    DensityMatrix::new(red.hermitize())
}

// ---------------------------------------------------------------------------
// JSON encoding
// ---------------------------------------------------------------------------

pub(crate) fn matrix_to_re_im(m: &CMatrix) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let re = (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m[(i, j)].re).collect())
        .collect();
    let im = (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m[(i, j)].im).collect())
        .collect();
    (re, im)
}

pub(crate) fn matrix_from_re_im(
    re: &[Vec<f64>],
    im: &[Vec<f64>],
) -> std::result::Result<CMatrix, String> {
    let rows = re.len();
    if rows == 0 || im.len() != rows {
        return Err("re/im row counts differ or are empty".to_string());
    }
    let cols = re[0].len();
    for r in re.iter().chain(im.iter()) {
        if r.len() != cols {
            return Err("ragged re/im rows".to_string());
        }
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| {
        Complex64::new(re[i][j], im[i][j])
    }))
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dims: Option<[usize; 2]>,
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (re, im) = matrix_to_re_im(&self.mat);
        StateJson {
            dim: self.dim,
            re,
            im,
            dims: self.dims.map(|(a, b)| [a, b]),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let raw = StateJson::deserialize(d)?;
        let mat = matrix_from_re_im(&raw.re, &raw.im).map_err(D::Error::custom)?;
        if mat.rows() != raw.dim {
            return Err(D::Error::custom(format!(
                "declared dim {} does not match matrix size {}",
                raw.dim,
                mat.rows()
            )));
        }
        let state = DensityMatrix::new(mat).map_err(D::Error::custom)?;
        match raw.dims {
            Some([a, b]) => state.with_dims(a, b).map_err(D::Error::custom),
            None => Ok(state),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn validate_accepts_maximally_mixed() {
        let m = CMatrix::identity(2).scale(0.5);
        assert!(DensityMatrix::new(m).is_ok());
    }

    #[test]
    fn validate_rejects_bad_trace() {
        let m = CMatrix::from_diagonal(&[0.7, 0.4]);
        assert!(matches!(
            DensityMatrix::new(m),
            Err(StateError::NotUnitTrace { .. })
        ));
    }

    #[test]
    fn validate_rejects_non_psd() {
        // [[0.5, 0.6], [0.6, 0.5]] has eigenvalues 1.1 and −0.1
        let m = CMatrix::from_slice(2, 2, &[c(0.5, 0.), c(0.6, 0.), c(0.6, 0.), c(0.5, 0.)]);
        match DensityMatrix::new(m) {
            Err(StateError::NotPSD { min_eigenvalue }) => {
                assert!((min_eigenvalue + 0.1).abs() < 1e-12);
            }
            other => panic!("expected NotPSD, got {other:?}"),
        }
    }

    #[test]
    fn max_coherent_examples() {
        let plus = max_coherent(2, &PhaseVector::zero(2)).unwrap();
        let inv = 1.0 / 2f64.sqrt();
        assert!((plus.amplitudes()[0] - c(inv, 0.)).norm() < 1e-15);
        assert!((plus.amplitudes()[1] - c(inv, 0.)).norm() < 1e-15);

        let minus = max_coherent(2, &PhaseVector::new(vec![0.0, PI])).unwrap();
        assert!((minus.amplitudes()[1] + c(inv, 0.)).norm() < 1e-12);

        // balanced qutrit: every pairwise overlap ⟨i|ρ|j⟩ has modulus 1/3
        let theta = PhaseVector::new(vec![0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0]);
        let rho = max_coherent(3, &theta).unwrap().to_density();
        for i in 0..3 {
            for j in 0..3 {
                assert!((rho.entry(i, j).norm() - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn max_coherent_diagonal_is_uniform() {
        let psi = max_coherent(3, &PhaseVector::new(vec![0.3, 1.0, 2.0])).unwrap();
        let rho = psi.to_density();
        for i in 0..3 {
            assert!((rho.entry(i, i).re - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn max_entangled_examples() {
        let id = CMatrix::identity(2);
        let phi_plus = max_entangled(2, &id, &id).unwrap();
        let inv = 1.0 / 2f64.sqrt();
        assert!((phi_plus.amplitudes()[0] - c(inv, 0.)).norm() < 1e-15);
        assert!((phi_plus.amplitudes()[3] - c(inv, 0.)).norm() < 1e-15);

        let x = CMatrix::from_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
        let psi_plus = max_entangled(2, &id, &x).unwrap();
        assert!((psi_plus.amplitudes()[1] - c(inv, 0.)).norm() < 1e-15);
        assert!((psi_plus.amplitudes()[2] - c(inv, 0.)).norm() < 1e-15);

        // defining property: both reductions are 𝕀/d
        for seed in 0..5u64 {
            let d = 3;
            let u_a = random_unitary(d, 100 + seed);
            let u_b = random_unitary(d, 200 + seed);
            let me = max_entangled(d, &u_a, &u_b).unwrap();
            let rho = me.to_density();
            for keep in [Subsystem::A, Subsystem::B] {
                let red = rho.partial_trace((d, d), keep).unwrap();
                let dev = (red.matrix() - &CMatrix::identity(d).scale(1.0 / d as f64)).frob_norm();
                assert!(dev < 1e-9, "reduction deviates by {dev:.3e}");
            }
        }
    }

    #[test]
    fn max_entangled_rejects_non_unitary() {
        let bad = CMatrix::from_diagonal(&[1.0, 0.5]);
        assert!(matches!(
            max_entangled(2, &bad, &CMatrix::identity(2)),
            Err(StateError::NotUnitary { .. })
        ));
    }

    #[test]
    fn schmidt_examples() {
        // |00⟩: single coefficient 1
        let ket00 = PureState::basis_vector(4, 0);
        let sd = schmidt(&ket00, (2, 2)).unwrap();
        assert_eq!(sd.rank(), 1);
        assert!((sd.coefficients[0] - 1.0).abs() < 1e-12);

        // |Φ+⟩: coefficients (1/√2, 1/√2)
        let id = CMatrix::identity(2);
        let phi = max_entangled(2, &id, &id).unwrap();
        let sd = schmidt(&phi, (2, 2)).unwrap();
        assert_eq!(sd.rank(), 2);
        for q in &sd.coefficients {
            assert!((q - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        }

        // √0.9|00⟩ + √0.1|11⟩ is already in Schmidt form
        let amps = vec![c(0.9f64.sqrt(), 0.), c(0., 0.), c(0., 0.), c(0.1f64.sqrt(), 0.)];
        let psi = PureState::new(amps).unwrap();
        let sd = schmidt(&psi, (2, 2)).unwrap();
        assert!((sd.coefficients[0] - 0.9f64.sqrt()).abs() < 1e-12);
        assert!((sd.coefficients[1] - 0.1f64.sqrt()).abs() < 1e-12);

        // reconstruction
        let rec = sd.reconstruct();
        for (a, b) in rec.iter().zip(psi.amplitudes()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn incoherent_channel_single_kraus_is_permutation_like() {
        let ch = sample_incoherent_channel(2, 1, 1);
        let k = &ch.kraus()[0];
        // unitary with exactly one unit-modulus entry per column
        for j in 0..2 {
            let col = k.column(j);
            let nonzero: Vec<_> = col.iter().filter(|z| z.norm() > 1e-14).collect();
            assert_eq!(nonzero.len(), 1);
            assert!((nonzero[0].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn permutation_channel_is_diagonal_preserving() {
        // Σₙ pₙ Pₙ ρ Pₙ† with cyclic shifts
        let d = 3;
        let probs: [f64; 3] = [0.2, 0.5, 0.3];
        let kraus: Vec<CMatrix> = (0..d)
            .map(|shift| {
                let mut k = CMatrix::zeros(d, d);
                for j in 0..d {
                    k[((j + shift) % d, j)] = c(probs[shift].sqrt(), 0.);
                }
                k
            })
            .collect();
        let ch = KrausChannel::new(kraus, true).unwrap();
        let rho = DensityMatrix::new(CMatrix::from_diagonal(&[0.2, 0.3, 0.5])).unwrap();
        let out = apply_channel(&rho, &ch).unwrap();
        assert!(out.off_diagonal_mass() < 1e-12);
    }

    #[test]
    fn incoherent_channels_preserve_diagonality() {
        for seed in 0..100u64 {
            let d = 2 + (seed % 3) as usize;
            let n = 1 + (seed % 4) as usize;
            let ch = sample_incoherent_channel(d, n, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
            let raw: Vec<f64> = (0..d).map(|_| rng.random::<f64>() + 0.01).collect();
            let total: f64 = raw.iter().sum();
            let diag: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let rho = DensityMatrix::new(CMatrix::from_diagonal(&diag)).unwrap();
            let out = apply_channel(&rho, &ch).unwrap();
            assert!(
                out.off_diagonal_mass() <= 1e-12,
                "seed {seed}: off-diagonal mass {:.3e}",
                out.off_diagonal_mass()
            );
        }
    }

    #[test]
    fn incoherent_channel_example_d3() {
        let ch = sample_incoherent_channel(3, 4, 7);
        let rho = DensityMatrix::new(CMatrix::from_diagonal(&[0.2, 0.3, 0.5])).unwrap();
        let out = apply_channel(&rho, &ch).unwrap();
        assert!(out.off_diagonal_mass() <= 1e-12);
    }

    #[test]
    fn apply_channel_examples() {
        let plus = max_coherent(2, &PhaseVector::zero(2)).unwrap().to_density();

        let id_ch = KrausChannel::identity(2);
        let same = apply_channel(&plus, &id_ch).unwrap();
        assert!((same.matrix() - plus.matrix()).frob_norm() < 1e-14);

        let deph = KrausChannel::dephasing(2);
        let out = apply_channel(&plus, &deph).unwrap();
        assert!((out.matrix() - &CMatrix::identity(2).scale(0.5)).frob_norm() < 1e-14);

        let branches = apply_channel_selective(&plus, &deph).unwrap();
        assert_eq!(branches.len(), 2);
        for (k, (p, sigma)) in branches.iter().enumerate() {
            assert!((p - 0.5).abs() < 1e-14);
            assert!((sigma.entry(k, k).re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_density_examples() {
        let pure = random_density(3, 1, 9).unwrap();
        let eig = pure.eig().unwrap();
        assert!((eig.eigenvalues[2] - 1.0).abs() < 1e-10);

        let full = random_density(2, 2, 42).unwrap();
        let eig = full.eig().unwrap();
        assert!(eig.eigenvalues[0] > 0.0);

        let a = random_density(4, 3, 5).unwrap();
        let b = random_density(4, 3, 5).unwrap();
        assert!((a.matrix() - b.matrix()).frob_norm() == 0.0);

        assert!(matches!(
            random_density(2, 3, 0),
            Err(StateError::BadRank { .. })
        ));
    }

    #[test]
    fn state_json_roundtrip() {
        let rho = random_density(3, 2, 17).unwrap();
        let s = serde_json::to_string(&rho).unwrap();
        let back: DensityMatrix = serde_json::from_str(&s).unwrap();
        assert!((rho.matrix() - back.matrix()).frob_norm() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, .. ProptestConfig::default() })]

        #[test]
        fn partial_trace_of_valid_state_is_valid(seed in 0u64..10_000, da in 2usize..4, db in 2usize..4) {
            let rho = random_density(da * db, da * db, seed).unwrap();
            for keep in [Subsystem::A, Subsystem::B] {
                let red = rho.partial_trace((da, db), keep).unwrap();
                let want = if keep == Subsystem::A { da } else { db };
                prop_assert_eq!(red.dim(), want);
                // the constructor re-validates Hermiticity, trace, PSD
            }
        }

        #[test]
        fn schmidt_coefficients_normalized(seed in 0u64..10_000, d in 2usize..4) {
            let psi = random_pure(d * d, seed);
            let sd = schmidt(&psi, (d, d)).unwrap();
            let total: f64 = sd.coefficients.iter().map(|q| q * q).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            let rec = sd.reconstruct();
            let dev: f64 = rec.iter().zip(psi.amplitudes())
                .map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(dev < 1e-9);
        }

        #[test]
        fn selective_and_deterministic_channels_agree(seed in 0u64..10_000) {
            let d = 2 + (seed % 3) as usize;
            let rho = random_density(d, d, seed).unwrap();
            let ch = sample_incoherent_channel(d, 3, seed ^ 0x5555);
            let det = apply_channel(&rho, &ch).unwrap();
            let branches = apply_channel_selective(&rho, &ch).unwrap();
            let mut mix = CMatrix::zeros(d, d);
            let mut total = 0.0;
            for (p, sigma) in &branches {
                mix.add_assign_scaled(sigma.matrix(), *p);
                total += p;
            }
            prop_assert!((total - 1.0).abs() < 1e-10);
            prop_assert!((&mix - det.matrix()).frob_norm() < 1e-10);
        }
    }
}
