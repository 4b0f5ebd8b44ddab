//! Subchannel discrimination: strategies, success probabilities, the
//! optimal-ratio constructions, and the max-min disadvantage check.
//!
//! A strategy is a finite family of subchannels {Ψᵢ} (CP trace-nonincreasing
//! maps whose sum is trace preserving) together with a POVM {Mᵢ}, aligned by
//! index; its success probability on ρ is Σᵢ tr(MᵢΨᵢ(ρ)). The module builds
//! the twirl strategy attaining the optimal ratio 1 + R⁺(ρ,σ), the
//! kernel-projector strategy witnessing the infinite branch, the Ω_σ family
//! of strategies that are perfect on a pure σ, and sweeps that compare all
//! of these against sampled random strategies.

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::{
    self, alpha_superiority, coherence_deficiency, entanglement_deficiency, MeasureError,
};
use crate::qmath::{self, CMatrix};
use crate::report::{digest_f64s, CaseRecord, ScenarioReport};
use crate::sdpcore::{self, SdpError};
use crate::states::{
    max_coherent, max_entangled, random_unitary_rng, sample_cptp_kraus_rng, DensityMatrix,
    PhaseVector, PureState, StateError,
};

#[derive(Debug, Error)]
pub enum DiscriminationError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid strategy: {reason}")]
    InvalidStrategy { reason: String },

    #[error("ratio is unbounded: support of rho leaks outside sigma (residual {residual:.3e})")]
    UnboundedRatio { residual: f64 },

    #[error("supports are actually nested; the infinite-ratio construction does not apply")]
    SupportsActuallyNested,

    #[error("bad probability distribution: {detail}")]
    BadDistribution { detail: String },

    #[error(transparent)]
    Measure(#[from] MeasureError),

    #[error(transparent)]
    Sdp(#[from] SdpError),

    #[error(transparent)]
    State(#[from] StateError),

    #[error(transparent)]
    Math(#[from] qmath::QmathError),
}

pub type Result<T> = std::result::Result<T, DiscriminationError>;

// ---------------------------------------------------------------------------
// Strategies
// ---------------------------------------------------------------------------

/// A completely positive trace-nonincreasing map as a Kraus list.
#[derive(Debug, Clone)]
pub struct Subchannel {
    kraus: Vec<CMatrix>,
}

impl Subchannel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(DiscriminationError::InvalidStrategy {
                reason: "subchannel needs at least one Kraus operator".into(),
            });
        }
        let d = kraus[0].rows();
        let mut sum = CMatrix::zeros(d, d);
        for k in &kraus {
            if k.rows() != d || k.cols() != d {
                return Err(DiscriminationError::DimensionMismatch {
                    left: k.rows(),
                    right: d,
                });
            }
            sum = &sum + &k.gram();
        }
        let gap = (&CMatrix::identity(d) - &sum).hermitize();
        let min_eig = qmath::min_eigenvalue(&gap)?;
        if min_eig < -1e-9 {
            return Err(DiscriminationError::InvalidStrategy {
                reason: format!("subchannel increases trace: residual {:.3e}", -min_eig),
            });
        }
        Ok(Self { kraus })
    }

    /// The zero map (absorbs no probability); usable as a padding branch.
    pub fn zero(d: usize) -> Self {
        Self {
            kraus: vec![CMatrix::zeros(d, d)],
        }
    }

    /// Unitary conjugation scaled by a branch probability: Ψ(·) = p U·U†.
    pub fn scaled_unitary(u: &CMatrix, p: f64) -> Self {
        Self {
            kraus: vec![u.scale(p.sqrt())],
        }
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn dim(&self) -> usize {
        self.kraus[0].rows()
    }

    /// Ψ(ρ) as a raw (trace ≤ 1) operator.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let d = self.dim();
        let mut out = CMatrix::zeros(d, d);
        for k in &self.kraus {
            out = &out + &(&(k * rho) * &k.adjoint());
        }
        out
    }
}

/// A discrimination strategy: subchannels composing a CPTP map and a POVM,
/// labels aligned by index.
#[derive(Debug, Clone)]
pub struct Strategy {
    subchannels: Vec<Subchannel>,
    povm: Vec<CMatrix>,
}

impl Strategy {
    pub fn new(subchannels: Vec<Subchannel>, povm: Vec<CMatrix>) -> Result<Self> {
        if subchannels.len() != povm.len() {
            return Err(DiscriminationError::InvalidStrategy {
                reason: format!(
                    "labels misaligned: {} subchannels vs {} POVM elements",
                    subchannels.len(),
                    povm.len()
                ),
            });
        }
        if subchannels.is_empty() {
            return Err(DiscriminationError::InvalidStrategy {
                reason: "strategy needs at least one branch".into(),
            });
        }
        let d = subchannels[0].dim();

        // Σᵢ Ψᵢ must be trace preserving
        let mut total = CMatrix::zeros(d, d);
        for sc in &subchannels {
            if sc.dim() != d {
                return Err(DiscriminationError::DimensionMismatch {
                    left: sc.dim(),
                    right: d,
                });
            }
            for k in sc.kraus() {
                total = &total + &k.gram();
            }
        }
        let cptp_residual = (&total - &CMatrix::identity(d)).frob_norm();
        if cptp_residual > 1e-9 {
            return Err(DiscriminationError::InvalidStrategy {
                reason: format!(
                    "subchannels do not compose a CPTP map: residual {cptp_residual:.3e}"
                ),
            });
        }

        // POVM:每 element PSD, summing to the identity
        let mut msum = CMatrix::zeros(d, d);
        for m in &povm {
            if m.rows() != d || m.cols() != d {
                return Err(DiscriminationError::DimensionMismatch {
                    left: m.rows(),
                    right: d,
                });
            }
            let min_eig = qmath::min_eigenvalue(&m.hermitize())?;
            if min_eig < -1e-9 {
                return Err(DiscriminationError::InvalidStrategy {
                    reason: format!("POVM element not PSD: min eigenvalue {min_eig:.3e}"),
                });
            }
            msum = &msum + m;
        }
        let povm_residual = (&msum - &CMatrix::identity(d)).frob_norm();
        if povm_residual > 1e-9 {
            return Err(DiscriminationError::InvalidStrategy {
                reason: format!("POVM does not sum to identity: residual {povm_residual:.3e}"),
            });
        }
        Ok(Self { subchannels, povm })
    }

    pub fn dim(&self) -> usize {
        self.subchannels[0].dim()
    }

    pub fn branches(&self) -> usize {
        self.subchannels.len()
    }

    pub fn subchannels(&self) -> &[Subchannel] {
        &self.subchannels
    }

    pub fn povm(&self) -> &[CMatrix] {
        &self.povm
    }
}

/// Success probability with its per-branch contributions tr(MᵢΨᵢ(ρ)).
#[derive(Debug, Clone)]
pub struct DiscriminationOutcome {
    pub p_succ: f64,
    pub per_branch: Vec<f64>,
}

/// P_succ({Ψᵢ},{Mᵢ},ρ) = Σᵢ tr(MᵢΨᵢ(ρ)).
pub fn succ_probability(strategy: &Strategy, rho: &DensityMatrix) -> Result<DiscriminationOutcome> {
    if strategy.dim() != rho.dim() {
        return Err(DiscriminationError::DimensionMismatch {
            left: strategy.dim(),
            right: rho.dim(),
        });
    }
    let per_branch: Vec<f64> = strategy
        .subchannels
        .iter()
        .zip(&strategy.povm)
        .map(|(sc, m)| m.inner_re(&sc.apply(rho.matrix())))
        .collect();
    Ok(DiscriminationOutcome {
        p_succ: per_branch.iter().sum(),
        per_branch,
    })
}

// ---------------------------------------------------------------------------
// Twirl construction (optimal ratio)
// ---------------------------------------------------------------------------

/// The cyclic-shift unitaries X_d⁰, …, X_d^{d−1}. For every basis vector
/// |j⟩ they satisfy Σᵢ Uᵢ|j⟩⟨j|Uᵢ† = 𝕀.
pub fn twirl_unitaries(d: usize) -> Vec<CMatrix> {
    let shift = CMatrix::from_fn(d, d, |i, j| {
        if i == (j + 1) % d {
            Complex64::ONE
        } else {
            Complex64::ZERO
        }
    });
    let mut out = Vec::with_capacity(d);
    let mut u = CMatrix::identity(d);
    for _ in 0..d {
        out.push(u.clone());
        u = &shift * &u;
    }
    out
}

/// The strategy attaining P_succ(ρ)/P_succ(σ) = 1 + R⁺(ρ,σ): subchannels
/// Ψᵢ = pᵢUᵢ(·)Uᵢ† and measurements Mᵢ = UᵢXUᵢ†/tr X, where X is the
/// witness of the relative-robustness program and the Uᵢ twirl its
/// eigenbasis. The ratio does not depend on (pᵢ).
pub fn lemma3_strategy_with_distribution(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    probs: &[f64],
) -> Result<Strategy> {
    let d = rho.dim();
    if probs.len() != d {
        return Err(DiscriminationError::BadDistribution {
            detail: format!("need {d} branch probabilities, got {}", probs.len()),
        });
    }
    check_distribution(probs)?;
    let sol = match sdpcore::solve_relative_dual(rho, sigma) {
        Ok(sol) => sol,
        Err(SdpError::UnboundedProgram { residual }) => {
            return Err(DiscriminationError::UnboundedRatio { residual })
        }
        Err(e) => return Err(e.into()),
    };
    let x = sol.witness;
    let tr_x = x.trace().re;
    let eig = qmath::hermitian_eig(&x.hermitize())?;
    let v = &eig.eigenvectors;

    let mut subchannels = Vec::with_capacity(d);
    let mut povm = Vec::with_capacity(d);
    for (i, shift) in twirl_unitaries(d).into_iter().enumerate() {
        let u = &(v * &shift) * &v.adjoint();
        subchannels.push(Subchannel::scaled_unitary(&u, probs[i]));
        povm.push((&(&u * &x) * &u.adjoint()).scale(1.0 / tr_x).hermitize());
    }
    Strategy::new(subchannels, povm)
}

pub fn lemma3_strategy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Strategy> {
    let d = rho.dim();
    lemma3_strategy_with_distribution(rho, sigma, &vec![1.0 / d as f64; d])
}

/// When supp(ρ) ⊄ supp(σ), a strategy that succeeds on ρ with positive
/// probability but never on σ: project onto kernel-of-σ directions that
/// overlap ρ.
pub fn infinite_ratio_strategy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Strategy> {
    let d = rho.dim();
    if sigma.dim() != d {
        return Err(DiscriminationError::DimensionMismatch {
            left: d,
            right: sigma.dim(),
        });
    }
    let eig_sigma = qmath::hermitian_eig(&sigma.matrix().hermitize())?;
    let kernel: Vec<Vec<Complex64>> = (0..d)
        .filter(|&k| eig_sigma.eigenvalues[k] <= sdpcore::KERNEL_TOL)
        .map(|k| eig_sigma.eigenvectors.column(k))
        .collect();
    if kernel.is_empty() {
        return Err(DiscriminationError::SupportsActuallyNested);
    }
    // directions inside ker σ that carry weight of ρ
    let kb = CMatrix::from_columns(&kernel);
    let leak = (&(&kb.adjoint() * rho.matrix()) * &kb).hermitize();
    let leak_eig = qmath::hermitian_eig(&leak)?;
    let mut directions: Vec<Vec<Complex64>> = Vec::new();
    for k in 0..kernel.len() {
        if leak_eig.eigenvalues[k] > 1e-9 {
            let small = leak_eig.eigenvectors.column(k);
            directions.push(kb.matvec(&small));
        }
    }
    if directions.is_empty() {
        return Err(DiscriminationError::SupportsActuallyNested);
    }

    let m = directions.len();
    let p = 1.0 / m as f64;
    let mut subchannels: Vec<Subchannel> = directions
        .iter()
        .map(|_| Subchannel::scaled_unitary(&CMatrix::identity(d), p))
        .collect();
    let mut povm: Vec<CMatrix> = directions
        .iter()
        .map(|phi| CMatrix::outer(phi, phi))
        .collect();
    // padding branch completes the POVM without contributing probability
    let mut rest = CMatrix::identity(d);
    for mi in &povm {
        rest = &rest - mi;
    }
    subchannels.push(Subchannel::zero(d));
    povm.push(rest.hermitize());
    Strategy::new(subchannels, povm)
}

// ---------------------------------------------------------------------------
// Random strategies and the ratio sweep
// ---------------------------------------------------------------------------

/// Sample a valid strategy: a random Kraus-dilated CPTP map split into
/// subchannels by random PSD fractions √Fᵢ·Λ(·)·√Fᵢ with Σ Fᵢ = 𝕀, and a
/// POVM from normalized Wishart blocks.
pub fn sample_strategy_rng(d: usize, n_branches: usize, rng: &mut impl Rng) -> Result<Strategy> {
    let kraus = sample_cptp_kraus_rng(d, 2, rng);

    let wisharts: Vec<CMatrix> = (0..n_branches)
        .map(|_| {
            let g = CMatrix::from_fn(d, d, |_, _| {
                Complex64::new(gauss(rng), gauss(rng))
            });
            (&g * &g.adjoint()).hermitize()
        })
        .collect();
    let mut total = CMatrix::zeros(d, d);
    for w in &wisharts {
        total = &total + w;
    }
    let whiten = qmath::inv_sqrt_psd(&total.hermitize(), 1e-12)?;
    let mut subchannels = Vec::with_capacity(n_branches);
    for w in &wisharts {
        let frac = (&(&whiten * w) * &whiten).hermitize();
        let root = qmath::matrix_sqrt(&frac)?;
        let branch: Vec<CMatrix> = kraus.iter().map(|k| &root * k).collect();
        subchannels.push(Subchannel { kraus: branch });
    }

    let blocks: Vec<CMatrix> = (0..n_branches)
        .map(|_| {
            let g = CMatrix::from_fn(d, d, |_, _| {
                Complex64::new(gauss(rng), gauss(rng))
            });
            (&g * &g.adjoint()).hermitize()
        })
        .collect();
    let mut bsum = CMatrix::zeros(d, d);
    for b in &blocks {
        bsum = &bsum + b;
    }
    let bw = qmath::inv_sqrt_psd(&bsum.hermitize(), 1e-12)?;
    let povm: Vec<CMatrix> = blocks.iter().map(|b| (&(&bw * b) * &bw).hermitize()).collect();

    Strategy::new(subchannels, povm)
}

fn gauss(rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random::<f64>().max(1e-300);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// Sweep the ratio P_succ(ρ)/P_succ(σ) over random strategies and the twirl
/// construction; no sampled ratio may exceed 1 + R⁺(ρ,σ) and the
/// construction must attain it.
pub fn ratio_sweep(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    n_random: usize,
    seed: u64,
) -> Result<ScenarioReport> {
    let d = rho.dim();
    let sol = match sdpcore::solve_relative_dual(rho, sigma) {
        Ok(sol) => sol,
        Err(SdpError::UnboundedProgram { residual }) => {
            return Err(DiscriminationError::UnboundedRatio { residual })
        }
        Err(e) => return Err(e.into()),
    };
    let bound = 1.0 + sol.optimal_value;
    let digest = digest_f64s(
        rho.matrix()
            .entries()
            .iter()
            .chain(sigma.matrix().entries())
            .flat_map(|z| [z.re, z.im]),
    );

    let constructed = {
        let strat = lemma3_strategy(rho, sigma)?;
        let pr = succ_probability(&strat, rho)?.p_succ;
        let ps = succ_probability(&strat, sigma)?.p_succ;
        pr / ps
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_sampled = f64::NEG_INFINITY;
    let mut sampled = 0usize;
    for k in 0..n_random {
        let n_branches = 2 + (k % 3);
        let strat = sample_strategy_rng(d, n_branches, &mut rng)?;
        let pr = succ_probability(&strat, rho)?.p_succ;
        let ps = succ_probability(&strat, sigma)?.p_succ;
        if ps < 1e-14 {
            continue;
        }
        sampled += 1;
        max_sampled = max_sampled.max(pr / ps);
    }

    let cases = vec![
        CaseRecord::new("lemma3-attained", d)
            .with_digest(digest.clone())
            .with_values(bound, constructed)
            .check((constructed - bound).abs(), 1e-5),
        CaseRecord::new("lemma3-upper-bound", d)
            .with_digest(digest)
            .with_values(bound, max_sampled)
            .with_extra("sampled", sampled as f64)
            .check((max_sampled - bound).max(0.0), 1e-6),
    ];
    Ok(ScenarioReport::new("ratio-sweep", seed, cases))
}

/// The min-max ratio over the set of states with robustness at most α:
/// min over σ' of max over strategies of the success ratio equals
/// max{(1 + R_r(ρ))/(1 + α), 1}. The minimizing σ' is constructed from the
/// α-superiority mixing state; random members of the set can only do worse.
pub fn corollary4_check(
    rho: &DensityMatrix,
    alpha: f64,
    n_sigma: usize,
    seed: u64,
) -> Result<ScenarioReport> {
    let d = rho.dim();
    let sup = alpha_superiority(rho, alpha)?;
    let r_r = measures::robustness(rho)?.value;
    let closed = ((1.0 + r_r) / (1.0 + alpha)).max(1.0);

    // the witness state: mixing toward the target set at weight R_{r,α}
    let sigma_star = if sup.value > 1e-9 {
        let tau = sup.mixing_state.clone().expect("positive value carries tau");
        let mut m = rho.matrix().clone();
        m.add_assign_scaled(tau.matrix(), sup.value);
        DensityMatrix::new(m.scale(1.0 / (1.0 + sup.value)).hermitize())?
    } else {
        rho.clone()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates = vec![sigma_star];
    for _ in 0..n_sigma {
        candidates.push(measures::sample_state_with_robustness_below(
            d, alpha, &mut rng,
        )?);
    }

    let mut min_ratio = f64::INFINITY;
    for cand in &candidates {
        match sdpcore::solve_relative_dual(rho, cand) {
            Ok(sol) => min_ratio = min_ratio.min(1.0 + sol.optimal_value),
            Err(SdpError::UnboundedProgram { .. }) => continue,
            Err(e) => return Err(e.into()),
        }
    }

    let case = CaseRecord::new("corollary4-minmax", d)
        .with_alpha(alpha)
        .with_digest(digest_f64s(
            rho.matrix().entries().iter().flat_map(|z| [z.re, z.im]),
        ))
        .with_values(closed, min_ratio)
        .with_extra("candidates", candidates.len() as f64)
        .check((min_ratio - closed).abs(), 1e-4);
    Ok(ScenarioReport::new("corollary4", seed, vec![case]))
}

// ---------------------------------------------------------------------------
// Perfect strategies and the Ω_σ family
// ---------------------------------------------------------------------------

/// P_succ(σ) = 1 exactly when every measurement dominates the support
/// projector of its branch output: Mᵢ ⪰ Π_{Ψᵢ(σ)}.
pub fn is_perfect_strategy(strategy: &Strategy, sigma: &DensityMatrix) -> Result<bool> {
    if strategy.dim() != sigma.dim() {
        return Err(DiscriminationError::DimensionMismatch {
            left: strategy.dim(),
            right: sigma.dim(),
        });
    }
    for (sc, m) in strategy.subchannels.iter().zip(&strategy.povm) {
        let out = sc.apply(sigma.matrix()).hermitize();
        let eig = qmath::hermitian_eig(&out)?;
        let scale = out.frob_norm().max(1.0);
        let mut gap = m.hermitize();
        for k in 0..out.rows() {
            if eig.eigenvalues[k] > 1e-9 * scale {
                let v = eig.eigenvectors.column(k);
                let proj = CMatrix::outer(&v, &v);
                gap = &gap - &proj;
            }
        }
        if qmath::min_eigenvalue(&gap.hermitize())? < -1e-8 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn check_distribution(p: &[f64]) -> Result<()> {
    let sum: f64 = p.iter().sum();
    if p.iter().any(|&x| x < -1e-12) || (sum - 1.0).abs() > 1e-9 {
        return Err(DiscriminationError::BadDistribution {
            detail: format!("sum = {sum:.12}, entries must be nonnegative"),
        });
    }
    Ok(())
}

/// A member of Ω_σ for a pure σ: unitaries send |φ_σ⟩ to the vectors of a
/// random orthonormal basis, the POVM projects onto those vectors (the
/// leftover of the identity is absorbed into the last element). Succeeds on
/// σ with probability 1 for every branch distribution p.
pub fn omega_sigma_strategy(sigma: &PureState, p: &[f64], seed: u64) -> Result<Strategy> {
    let d = sigma.dim();
    let m = p.len();
    if m == 0 || m > d {
        return Err(DiscriminationError::BadDistribution {
            detail: format!("need between 1 and {d} branches, got {m}"),
        });
    }
    check_distribution(p)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = random_unitary_rng(d, &mut rng);
    let targets: Vec<Vec<Complex64>> = (0..d).map(|i| q.column(i)).collect();
    let source_basis = qmath::complete_orthonormal(&[sigma.amplitudes().to_vec()], d);

    let mut subchannels = Vec::with_capacity(m);
    let mut povm = Vec::with_capacity(m);
    for (i, &pi) in p.iter().enumerate() {
        // unitary with Uᵢ|φ_σ⟩ = |φᵢ⟩: map the completed source basis onto
        // the target basis cyclically shifted to start at i
        let mut u = CMatrix::zeros(d, d);
        for k in 0..d {
            let target = &targets[(i + k) % d];
            let source = &source_basis[k];
            for r in 0..d {
                for c in 0..d {
                    u[(r, c)] += target[r] * source[c].conj();
                }
            }
        }
        subchannels.push(Subchannel::scaled_unitary(&u, pi));
        povm.push(CMatrix::outer(&targets[i], &targets[i]));
    }
    // absorb the leftover projectors into the last POVM element
    let mut rest = CMatrix::identity(d);
    for mi in &povm {
        rest = &rest - mi;
    }
    let last = povm.len() - 1;
    povm[last] = (&povm[last] + &rest).hermitize();
    Strategy::new(subchannels, povm)
}

/// Result of minimizing the success probability over Ω_σ.
#[derive(Debug, Clone)]
pub struct OmegaMinimum {
    /// Value of the explicit minimizing construction; equals F(σ,ρ).
    pub value: f64,
    /// Smallest success probability among the sampled Ω_σ members; the
    /// lower-bound direction says this never drops below `value` − 1e−6.
    pub sampled_min: f64,
    pub sampled: usize,
}

/// min over Ω_σ of P_succ({Ψᵢ},{Mᵢ},ρ): the basis-projector construction
/// attains the fidelity F(σ,ρ), and every sampled Ω_σ member (random
/// distribution, random basis, random branch count) stays at or above it.
pub fn min_succ_over_omega(
    rho: &DensityMatrix,
    sigma: &PureState,
    n_random: usize,
    seed: u64,
) -> Result<OmegaMinimum> {
    let d = rho.dim();
    if sigma.dim() != d {
        return Err(DiscriminationError::DimensionMismatch {
            left: sigma.dim(),
            right: d,
        });
    }
    let uniform = vec![1.0 / d as f64; d];
    let construction = omega_sigma_strategy(sigma, &uniform, seed)?;
    let value = succ_probability(&construction, rho)?.p_succ;

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x517c_c1b7_2722_0a95);
    let mut sampled_min = f64::INFINITY;
    let mut sampled = 0usize;
    for _ in 0..n_random {
        let m = 1 + (rng.random::<u32>() as usize) % d;
        let mut p: Vec<f64> = (0..m).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = p.iter().sum();
        for x in &mut p {
            *x /= total;
        }
        let member = omega_sigma_strategy(sigma, &p, rng.random())?;
        debug_assert!(
            (succ_probability(&member, &sigma.to_density())?.p_succ - 1.0).abs() < 1e-10
        );
        sampled_min = sampled_min.min(succ_probability(&member, rho)?.p_succ);
        sampled += 1;
    }
    if sampled == 0 {
        sampled_min = value;
    }
    Ok(OmegaMinimum {
        value,
        sampled_min,
        sampled,
    })
}

// ---------------------------------------------------------------------------
// Max-min disadvantage (deficiency duality)
// ---------------------------------------------------------------------------

/// Which maximal-state family the disadvantage check runs against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResourceTheory {
    Coherence,
    Entanglement { d_local: usize },
}

/// Number of random maximal states added to the deficiency argmax when
/// taking the outer maximum.
pub const THEOREM7_RANDOM_MAXIMAL: usize = 64;

/// Check that the max-min success probability over perfect strategies
/// equals 1 − D_g(ρ): the outer maximum runs over the deficiency argmax
/// plus random maximal states, the inner minimum is the Ω_σ construction.
pub fn theorem7_check(
    rho: &DensityMatrix,
    theory: ResourceTheory,
    seed: u64,
) -> Result<ScenarioReport> {
    let d = rho.dim();
    let (deficiency, argmax) = match theory {
        ResourceTheory::Coherence => {
            let def = coherence_deficiency(rho)?;
            (def.value, def.argmax_state)
        }
        ResourceTheory::Entanglement { d_local } => {
            let def = entanglement_deficiency(rho, (d_local, d_local))?;
            (def.value, def.argmax_state)
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates = vec![argmax];
    for _ in 0..THEOREM7_RANDOM_MAXIMAL {
        let cand = match theory {
            ResourceTheory::Coherence => {
                max_coherent(d, &PhaseVector::random_rng(d, &mut rng))?
            }
            ResourceTheory::Entanglement { d_local } => max_entangled(
                d_local,
                &random_unitary_rng(d_local, &mut rng),
                &random_unitary_rng(d_local, &mut rng),
            )?,
        };
        candidates.push(cand);
    }

    let mut best = f64::NEG_INFINITY;
    let mut best_idx = 0usize;
    let mut worst_gap: f64 = 0.0;
    for (i, cand) in candidates.iter().enumerate() {
        let omega = min_succ_over_omega(rho, cand, 3, rng.random())?;
        if omega.value > best {
            best = omega.value;
            best_idx = i;
        }
        worst_gap = worst_gap.max(omega.value - 1e-6 - omega.sampled_min);
    }

    let digest = digest_f64s(rho.matrix().entries().iter().flat_map(|z| [z.re, z.im]));
    let mut equality_case = CaseRecord::new("theorem7-equality", d)
        .with_digest(digest.clone())
        .with_values(1.0 - deficiency, best)
        .with_extra("argmax_won", if best_idx == 0 { 1.0 } else { 0.0 })
        .check((best - (1.0 - deficiency)).abs(), 1e-4);
    if best_idx == 0 {
        equality_case = equality_case.with_detail("outer max attained by the deficiency argmax");
    }
    let cases = vec![
        equality_case,
        CaseRecord::new("omega-lower-bound", d)
            .with_digest(digest)
            .check(worst_gap.max(0.0), 1e-9),
    ];
    Ok(ScenarioReport::new("theorem7", seed, cases))
}

// ---------------------------------------------------------------------------
// JSON encoding
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl MatrixJson {
    fn from_matrix(m: &CMatrix) -> Self {
        let (re, im) = crate::states::matrix_to_re_im(m);
        Self { re, im }
    }

    fn to_matrix(&self) -> std::result::Result<CMatrix, String> {
        crate::states::matrix_from_re_im(&self.re, &self.im)
    }
}

#[derive(Serialize, Deserialize)]
struct StrategyJson {
    subchannels: Vec<Vec<MatrixJson>>,
    povm: Vec<MatrixJson>,
}

impl Serialize for Strategy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StrategyJson {
            subchannels: self
                .subchannels
                .iter()
                .map(|sc| sc.kraus.iter().map(MatrixJson::from_matrix).collect())
                .collect(),
            povm: self.povm.iter().map(MatrixJson::from_matrix).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Strategy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let raw = StrategyJson::deserialize(d)?;
        let mut subchannels = Vec::with_capacity(raw.subchannels.len());
        for sc in &raw.subchannels {
            let kraus = sc
                .iter()
                .map(|m| m.to_matrix())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(D::Error::custom)?;
            subchannels.push(Subchannel::new(kraus).map_err(D::Error::custom)?);
        }
        let povm = raw
            .povm
            .iter()
            .map(|m| m.to_matrix())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        Strategy::new(subchannels, povm).map_err(D::Error::custom)
    }
}
