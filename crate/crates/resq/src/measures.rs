//! Resource quantifiers and their verification harnesses.
//!
//! Robustness side: the generalized robustness R_r over incoherent states,
//! the α-superiority robustness R_{r,α} (closed form and direct definition),
//! and the relative robustness R⁺ between two states with its infinite
//! branch. Deficiency side: the geometric deficiency D_g = 1 − F against
//! the maximally coherent (phase optimization) or maximally entangled
//! (local-basis optimization) families. [`axiom_suite`] samples states,
//! channels and mixtures to check the faithfulness/monotonicity/convexity
//! conditions of each framework.

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::qmath::{self, CMatrix};
use crate::report::{digest_f64s, CaseRecord, ScenarioReport};
use crate::sdpcore::{self, SdpError};
use crate::states::{
    self, apply_channel, apply_channel_selective, max_coherent, max_entangled,
    project_to_density, random_density_rng, random_unitary_rng,
    sample_incoherent_channel_rng, DensityMatrix, KrausChannel, PhaseVector, PureState,
    StateError,
};

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("alpha = {alpha} outside the admissible range [0, {max})")]
    AlphaOutOfRange { alpha: f64, max: f64 },

    #[error("optimizer stalled; best bound {best:.6e}")]
    OptimizerStalled { best: f64 },

    #[error("entanglement deficiency needs equal local dimensions, got {da}x{db}")]
    NonSquareBipartition { da: usize, db: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error(transparent)]
    Sdp(#[from] SdpError),

    #[error(transparent)]
    State(#[from] StateError),

    #[error(transparent)]
    Math(#[from] qmath::QmathError),
}

pub type Result<T> = std::result::Result<T, MeasureError>;

// ---------------------------------------------------------------------------
// Robustness-type measures
// ---------------------------------------------------------------------------

/// Value of a robustness measure with its certificates: the dual witness X
/// and, when the value is positive, the mixing state τ that pushes ρ into
/// the target set.
#[derive(Debug, Clone)]
pub struct RobustnessResult {
    pub value: f64,
    pub witness: CMatrix,
    pub mixing_state: Option<DensityMatrix>,
    pub alpha: Option<f64>,
}

/// Generalized robustness of coherence R_r(ρ).
pub fn robustness(rho: &DensityMatrix) -> Result<RobustnessResult> {
    let sol = sdpcore::solve_robustness_coherence(rho)?;
    let s = sol.optimal_value;
    let mixing_state = if s > 1e-9 {
        let d_opt = sol.free_diagonal.as_ref().expect("program A carries D");
        let tau = (&CMatrix::from_diagonal(d_opt) - rho.matrix()).scale(1.0 / s);
        Some(DensityMatrix::new(tau.hermitize())?)
    } else {
        None
    };
    Ok(RobustnessResult {
        value: s,
        witness: sol.witness,
        mixing_state,
        alpha: None,
    })
}

fn check_alpha(alpha: f64, d: usize) -> Result<()> {
    let max = (d - 1) as f64;
    if !(0.0..max).contains(&alpha) {
        return Err(MeasureError::AlphaOutOfRange { alpha, max });
    }
    Ok(())
}

/// α-superiority robustness by the closed form
/// R_{r,α}(ρ) = max{(R_r(ρ) − α)/(1 + α), 0}.
///
/// The mixing state of the underlying robustness program also certifies the
/// α-superiority value: mixing ρ with it at weight (R_r − α)/(1 + α) lands
/// in the set of states with robustness at most α.
pub fn alpha_superiority(rho: &DensityMatrix, alpha: f64) -> Result<RobustnessResult> {
    check_alpha(alpha, rho.dim())?;
    let base = robustness(rho)?;
    let value = ((base.value - alpha) / (1.0 + alpha)).max(0.0);
    Ok(RobustnessResult {
        value,
        witness: base.witness,
        mixing_state: if value > 0.0 { base.mixing_state } else { None },
        alpha: Some(alpha),
    })
}

/// α-superiority robustness straight from its definition: bisection on the
/// mixing weight s, where feasibility of s is decided by minimizing
/// R_r((ρ + sτ)/(1 + s)) over mixing states τ with a multi-start projected
/// subgradient method (Polyak steps toward the level α). A weak-duality
/// bound from the robustness witness of ρ certifies infeasible weights
/// early. Agreement with [`alpha_superiority`] is the numerical proof of
/// the closed-form identity.
pub fn alpha_superiority_direct(
    rho: &DensityMatrix,
    alpha: f64,
    seed: u64,
) -> Result<RobustnessResult> {
    let d = rho.dim();
    check_alpha(alpha, d)?;
    let base = robustness(rho)?;
    let rr = base.value;
    if rr <= alpha + 1e-7 {
        // already inside the target set
        return Ok(RobustnessResult {
            value: 0.0,
            witness: base.witness,
            mixing_state: None,
            alpha: Some(alpha),
        });
    }
    let tau_rob = base
        .mixing_state
        .clone()
        .expect("positive robustness carries a mixing state");
    let y_min = qmath::min_eigenvalue(&base.witness.hermitize())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut lo = 0.0_f64;
    let mut hi = rr;
    // at s = R_r the robustness mixing state certifies feasibility
    let mut warm = minimize_mixture_robustness(rho, hi, alpha, &[tau_rob.clone()], 48)?;
    if warm.is_none() {
        return Err(MeasureError::OptimizerStalled { best: hi });
    }
    while hi - lo > 1e-5 {
        let s = 0.5 * (lo + hi);
        // for every τ: R_r(mix) ≥ tr(mix·Y) − 1 ≥ (1 + rr + s·λ_min(Y))/(1+s) − 1
        let lower_bound = (1.0 + rr + s * y_min) / (1.0 + s) - 1.0;
        if lower_bound > alpha + 1e-9 {
            lo = s;
            continue;
        }
        let mut starts: Vec<DensityMatrix> = Vec::new();
        if let Some(w) = &warm {
            starts.push(w.clone());
        }
        starts.push(tau_rob.clone());
        starts.push(DensityMatrix::maximally_mixed(d));
        starts.push(random_density_rng(d, d, &mut rng)?);
        match minimize_mixture_robustness(rho, s, alpha, &starts, 48)? {
            Some(tau) => {
                hi = s;
                warm = Some(tau);
            }
            None => lo = s,
        }
    }
    let mixing_state = match warm {
        Some(tau) => Some(tau),
        None => return Err(MeasureError::OptimizerStalled { best: hi }),
    };
    Ok(RobustnessResult {
        value: hi,
        witness: base.witness,
        mixing_state,
        alpha: Some(alpha),
    })
}

/// Minimize τ ↦ R_r((ρ + sτ)/(1 + s)) by projected subgradient descent;
/// returns the first τ reaching the level α (within 1e−7), or `None` when
/// no start gets there within the iteration budget.
fn minimize_mixture_robustness(
    rho: &DensityMatrix,
    s: f64,
    alpha: f64,
    starts: &[DensityMatrix],
    iters: usize,
) -> Result<Option<DensityMatrix>> {
    let weight = s / (1.0 + s);
    let mix_of = |tau: &DensityMatrix| -> Result<DensityMatrix> {
        let mut m = rho.matrix().clone();
        m.add_assign_scaled(tau.matrix(), s);
        Ok(DensityMatrix::new(m.scale(1.0 / (1.0 + s)).hermitize())?)
    };
    for start in starts {
        let mut tau = start.clone();
        for _ in 0..iters {
            let sol = sdpcore::solve_robustness_coherence(&mix_of(&tau)?)?;
            if sol.optimal_value <= alpha + 1e-7 {
                return Ok(Some(tau));
            }
            // subgradient of τ ↦ R_r(mix) is (s/(1+s))·Y with Y the dual
            // witness at the mixture; Polyak step toward the level α
            let grad = sol.witness.scale(weight);
            let gnorm2 = grad.frob_norm().powi(2);
            if gnorm2 < 1e-18 {
                break;
            }
            let eta = (sol.optimal_value - alpha) / gnorm2;
            let mut next = tau.matrix().clone();
            next.add_assign_scaled(&grad, -eta);
            tau = project_to_density(&next)?;
        }
    }
    Ok(None)
}

/// Relative robustness R⁺(ρ,σ): finite value with certificates, or the
/// infinite branch when the support of ρ is not contained in that of σ.
#[derive(Debug, Clone)]
pub enum RelativeRobustness {
    Finite(RobustnessResult),
    Infinite { residual: f64 },
}

impl RelativeRobustness {
    pub fn value(&self) -> Option<f64> {
        match self {
            RelativeRobustness::Finite(r) => Some(r.value),
            RelativeRobustness::Infinite { .. } => None,
        }
    }
}

pub fn relative_robustness(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
) -> Result<RelativeRobustness> {
    match sdpcore::solve_relative_dual(rho, sigma) {
        Ok(sol) => {
            let s = sol.optimal_value;
            let mixing_state = if s > 1e-9 {
                // τ = ((1+s)σ − ρ)/s, clipped back onto the state set;
                // the clip distortion scales like 1/s and cancels in the
                // mixture residual
                let mut raw = sigma.matrix().scale((1.0 + s) / s);
                raw.add_assign_scaled(rho.matrix(), -1.0 / s);
                Some(project_to_density(&raw)?)
            } else {
                None
            };
            Ok(RelativeRobustness::Finite(RobustnessResult {
                value: s,
                witness: sol.witness,
                mixing_state,
                alpha: None,
            }))
        }
        Err(SdpError::UnboundedProgram { residual }) => {
            Ok(RelativeRobustness::Infinite { residual })
        }
        Err(e) => Err(e.into()),
    }
}

/// Draw a state with R_r at most `alpha` (and full support): a random state
/// pulled toward its diagonal until convexity caps the robustness.
pub fn sample_state_with_robustness_below(
    d: usize,
    alpha: f64,
    rng: &mut impl Rng,
) -> Result<DensityMatrix> {
    let rho = random_density_rng(d, d, rng)?;
    let rr = sdpcore::solve_robustness_coherence(&rho)?.optimal_value;
    let mut beta = if rr > 1e-12 {
        (0.95 * alpha / rr).min(1.0)
    } else {
        1.0
    };
    let free = {
        let mut m = CMatrix::from_diagonal(&rho.diagonal()).scale(0.9);
        m.add_assign_scaled(&CMatrix::identity(d), 0.1 / d as f64);
        m
    };
    for _ in 0..8 {
        let mut m = rho.matrix().scale(beta);
        m.add_assign_scaled(&free, 1.0 - beta);
        let sigma = DensityMatrix::new(m.hermitize())?;
        if sdpcore::solve_robustness_coherence(&sigma)?.optimal_value <= alpha + 1e-9 {
            return Ok(sigma);
        }
        beta *= 0.8;
    }
    // beta → 0 gives the free state itself
    Ok(DensityMatrix::new(free.hermitize())?)
}

// ---------------------------------------------------------------------------
// Geometric deficiency: coherence
// ---------------------------------------------------------------------------

/// Outcome of a deficiency computation: the value 1 − F, the maximal state
/// attaining F, the objective trace of the best optimizer run, and whether
/// the optimizer converged (`certified = false` means the multi-start
/// budget ran out and the value is a best-found bound).
#[derive(Debug, Clone)]
pub struct DeficiencyResult {
    pub value: f64,
    pub argmax_state: PureState,
    pub optimizer_trace: Vec<(usize, f64)>,
    pub certified: bool,
}

/// Knobs of the phase-maximization search for F_C.
#[derive(Debug, Clone)]
pub struct CoherenceSearch {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Skip the pure-state closed-form shortcut.
    pub force_optimizer: bool,
    pub extra_starts: Vec<PhaseVector>,
}

impl Default for CoherenceSearch {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iters: 400,
            seed: 7,
            force_optimizer: false,
            extra_starts: Vec::new(),
        }
    }
}

/// ⟨ψ(θ)|ρ|ψ(θ)⟩ for the maximally coherent ψ(θ).
fn phase_objective(rho: &CMatrix, theta: &[f64]) -> f64 {
    let d = theta.len();
    let v: Vec<Complex64> = theta.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
    let rv = rho.matvec(&v);
    let s: f64 = v.iter().zip(&rv).map(|(a, b)| (a.conj() * b).re).sum();
    s / d as f64
}

/// Analytic gradient ∂/∂θ_k = (2/d)·Im[v̄_k (ρv)_k]; θ₀ is gauge-fixed.
fn phase_gradient(rho: &CMatrix, theta: &[f64]) -> Vec<f64> {
    let d = theta.len();
    let v: Vec<Complex64> = theta.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
    let rv = rho.matvec(&v);
    let mut g: Vec<f64> = v
        .iter()
        .zip(&rv)
        .map(|(a, b)| 2.0 * (a.conj() * b).im / d as f64)
        .collect();
    g[0] = 0.0;
    g
}

/// Backtracking gradient ascent from one start, followed by cyclic
/// coordinate maximization (each phase has the exact update
/// θ_k ← arg Σ_{j≠k} ρ_kj e^{iθ_j}). Returns (F, θ, converged, trace of
/// (iteration, objective)).
fn ascend_phases(
    rho: &CMatrix,
    mut theta: Vec<f64>,
    max_iters: usize,
) -> (f64, Vec<f64>, bool, Vec<(usize, f64)>) {
    let d = theta.len();
    let mut f = phase_objective(rho, &theta);
    let mut trace = vec![(0, f)];
    let mut alpha = 1.0_f64;
    for it in 1..=max_iters {
        let g = phase_gradient(rho, &theta);
        let gnorm2: f64 = g.iter().map(|x| x * x).sum();
        if gnorm2.sqrt() <= 1e-12 {
            break;
        }
        alpha = (alpha * 2.0).min(100.0);
        let mut stepped = false;
        while alpha > 1e-16 {
            let cand: Vec<f64> = theta.iter().zip(&g).map(|(t, gi)| t + alpha * gi).collect();
            let fc = phase_objective(rho, &cand);
            if fc >= f + 0.25 * alpha * gnorm2 {
                theta = cand;
                f = fc;
                stepped = true;
                break;
            }
            alpha *= 0.5;
        }
        trace.push((it, f));
        if !stepped {
            break;
        }
    }

    // coordinate polish: monotone and with exact per-phase updates, so it
    // settles the slow tail the gradient steps leave behind
    let mut converged = false;
    for sweep in 0..200 {
        let before = f;
        for k in 1..d {
            let v: Vec<Complex64> = theta
                .iter()
                .map(|&t| Complex64::from_polar(1.0, t))
                .collect();
            let rv = rho.matvec(&v);
            let b = rv[k] - rho[(k, k)] * v[k];
            if b.norm() > 1e-15 {
                theta[k] = b.arg();
            }
        }
        f = phase_objective(rho, &theta);
        trace.push((max_iters + sweep + 1, f));
        if f - before <= 1e-15 {
            converged = true;
            break;
        }
    }
    (f, theta, converged, trace)
}

/// Coherence deficiency D_g^C(ρ) = 1 − max_θ ⟨ψ(θ)|ρ|ψ(θ)⟩ with the
/// default search settings.
pub fn coherence_deficiency(rho: &DensityMatrix) -> Result<DeficiencyResult> {
    coherence_deficiency_with(rho, &CoherenceSearch::default())
}

pub fn coherence_deficiency_with(
    rho: &DensityMatrix,
    opts: &CoherenceSearch,
) -> Result<DeficiencyResult> {
    let d = rho.dim();
    let rmat = rho.matrix().hermitize();
    let eig = rho.eig()?;
    let lmax = eig.eigenvalues[d - 1];

    // pure states have the exact optimum θ_i = arg(v_i)
    let dominant = eig.eigenvectors.column(d - 1);
    let dominant_phases = PhaseVector::new(dominant.iter().map(|z| z.arg()).collect());
    if !opts.force_optimizer && lmax >= 1.0 - 1e-9 {
        let f = phase_objective(&rmat, dominant_phases.phases());
        let argmax_state = max_coherent(d, &dominant_phases)?;
        return Ok(DeficiencyResult {
            value: (1.0 - f).clamp(0.0, 1.0),
            argmax_state,
            optimizer_trace: vec![(0, f)],
            certified: true,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts: Vec<Vec<f64>> = vec![vec![0.0; d], dominant_phases.phases().to_vec()];
    for pv in &opts.extra_starts {
        starts.push(pv.phases().to_vec());
    }
    while starts.len() < opts.restarts.max(2) {
        starts.push(PhaseVector::random_rng(d, &mut rng).phases().to_vec());
    }

    let mut best: Option<(f64, Vec<f64>, bool, Vec<(usize, f64)>)> = None;
    for theta0 in starts {
        let run = ascend_phases(&rmat, theta0, opts.max_iters);
        if best.as_ref().map_or(true, |b| run.0 > b.0) {
            best = Some(run);
        }
    }
    let (f, theta, converged, trace) = best.expect("at least one start");
    let argmax_state = max_coherent(d, &PhaseVector::new(theta))?;
    Ok(DeficiencyResult {
        value: (1.0 - f).clamp(0.0, 1.0),
        argmax_state,
        optimizer_trace: trace,
        certified: converged,
    })
}

// ---------------------------------------------------------------------------
// Geometric deficiency: entanglement
// ---------------------------------------------------------------------------

/// Knobs of the local-basis ascent for F_E.
#[derive(Debug, Clone)]
pub struct EntanglementSearch {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub force_optimizer: bool,
    pub extra_starts: Vec<CMatrix>,
}

impl Default for EntanglementSearch {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_iters: 250,
            seed: 11,
            force_optimizer: false,
            extra_starts: Vec::new(),
        }
    }
}

/// Maximally entangled states (1/√d)Σᵢ (U_A|i⟩)(U_B|i⟩) are exactly the
/// states vec(W)/√d for a unitary W = U_A U_Bᵀ, so the fully entangled
/// fraction is a single-unitary maximization.
fn mes_from_unitary(w: &CMatrix) -> PureState {
    let d = w.rows();
    let inv = 1.0 / (d as f64).sqrt();
    let amps: Vec<Complex64> = (0..d * d)
        .map(|idx| w[(idx / d, idx % d)] * inv)
        .collect();
    PureState::normalized(amps).expect("unitary rows have unit norm")
}

fn fef_objective(rho: &CMatrix, w: &CMatrix, d: usize) -> f64 {
    let wv: Vec<Complex64> = (0..d * d).map(|idx| w[(idx / d, idx % d)]).collect();
    let rv = rho.matvec(&wv);
    let s: f64 = wv.iter().zip(&rv).map(|(a, b)| (a.conj() * b).re).sum();
    s / d as f64
}

/// Gradient contraction: T(W)_{ab} = (ρ vec W)_{a·d+b}.
fn fef_contraction(rho: &CMatrix, w: &CMatrix, d: usize) -> CMatrix {
    let wv: Vec<Complex64> = (0..d * d).map(|idx| w[(idx / d, idx % d)]).collect();
    let rv = rho.matvec(&wv);
    CMatrix::from_fn(d, d, |a, b| rv[a * d + b])
}

/// Unitary polar factor of T (the unitary maximizing Re tr(W†T)).
fn polar_unitary(t: &CMatrix) -> Option<CMatrix> {
    let d = t.rows();
    let gram = t.gram().hermitize();
    let eig = qmath::hermitian_eig(&gram).ok()?;
    let smax = eig.eigenvalues[d - 1].max(0.0).sqrt();
    if smax < 1e-14 {
        return None;
    }
    let mut us: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    let mut vs: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    for k in (0..d).rev() {
        let sig = eig.eigenvalues[k].max(0.0).sqrt();
        let v = eig.eigenvectors.column(k);
        if sig > 1e-10 * smax {
            let tv = t.matvec(&v);
            us.push(tv.into_iter().map(|z| z / sig).collect());
        }
        vs.push(v);
    }
    let us = qmath::complete_orthonormal(&us, d);
    let mut w = CMatrix::zeros(d, d);
    for (u, v) in us.iter().zip(&vs) {
        for i in 0..d {
            for j in 0..d {
                w[(i, j)] += u[i] * v[j].conj();
            }
        }
    }
    Some(w)
}

/// Monotone ascent W ← polar(T(W)); the objective is convex in vec(W), so
/// each polar step cannot decrease it.
fn fef_ascend(
    rho: &CMatrix,
    mut w: CMatrix,
    d: usize,
    max_iters: usize,
) -> (f64, CMatrix, bool, Vec<(usize, f64)>) {
    let mut f = fef_objective(rho, &w, d);
    let mut trace = vec![(0, f)];
    let mut converged = false;
    for it in 1..=max_iters {
        let t = fef_contraction(rho, &w, d);
        let Some(wn) = polar_unitary(&t) else { break };
        let fn_ = fef_objective(rho, &wn, d);
        trace.push((it, fn_));
        if fn_ <= f + 1e-12 {
            converged = true;
            if fn_ > f {
                w = wn;
                f = fn_;
            }
            break;
        }
        w = wn;
        f = fn_;
    }
    (f, w, converged, trace)
}

/// Schmidt-aligned unitary W = A·Bᵀ of a pure bipartite state, the natural
/// warm start (and the exact optimum when ρ is that pure state).
fn schmidt_unitary(psi: &PureState, d: usize) -> Result<CMatrix> {
    let sd = states::schmidt(psi, (d, d))?;
    let ua = qmath::complete_orthonormal(&sd.basis_a, d);
    let ub = qmath::complete_orthonormal(&sd.basis_b, d);
    let mut w = CMatrix::zeros(d, d);
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                w[(i, j)] += ua[k][i] * ub[k][j];
            }
        }
    }
    Ok(w)
}

/// Entanglement deficiency D_g^E(ρ) = 1 − max F(σ, ρ) over maximally
/// entangled σ, on a bipartition with equal local dimensions.
pub fn entanglement_deficiency(
    rho: &DensityMatrix,
    dims: (usize, usize),
) -> Result<DeficiencyResult> {
    entanglement_deficiency_with(rho, dims, &EntanglementSearch::default())
}

pub fn entanglement_deficiency_with(
    rho: &DensityMatrix,
    dims: (usize, usize),
    opts: &EntanglementSearch,
) -> Result<DeficiencyResult> {
    let (da, db) = dims;
    if da != db {
        return Err(MeasureError::NonSquareBipartition { da, db });
    }
    let d = da;
    if d * d != rho.dim() {
        return Err(MeasureError::DimensionMismatch {
            left: rho.dim(),
            right: d * d,
        });
    }
    let rmat = rho.matrix().hermitize();
    let eig = rho.eig()?;
    let lmax = eig.eigenvalues[rho.dim() - 1];
    let dominant = PureState::normalized(eig.eigenvectors.column(rho.dim() - 1))?;
    let schmidt_start = schmidt_unitary(&dominant, d)?;

    // pure ρ: the Schmidt-aligned maximally entangled state is optimal,
    // F = (Σᵢ qᵢ)²/d
    if !opts.force_optimizer && lmax >= 1.0 - 1e-9 {
        let f = fef_objective(&rmat, &schmidt_start, d);
        return Ok(DeficiencyResult {
            value: (1.0 - f).clamp(0.0, 1.0),
            argmax_state: mes_from_unitary(&schmidt_start),
            optimizer_trace: vec![(0, f)],
            certified: true,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts: Vec<CMatrix> = vec![CMatrix::identity(d), schmidt_start];
    starts.extend(opts.extra_starts.iter().cloned());
    while starts.len() < opts.restarts.max(2) {
        starts.push(random_unitary_rng(d, &mut rng));
    }

    let mut best: Option<(f64, CMatrix, bool, Vec<(usize, f64)>)> = None;
    for w0 in starts {
        let run = fef_ascend(&rmat, w0, d, opts.max_iters);
        if best.as_ref().map_or(true, |b| run.0 > b.0) {
            best = Some(run);
        }
    }
    let (f, w, converged, trace) = best.expect("at least one start");
    Ok(DeficiencyResult {
        value: (1.0 - f).clamp(0.0, 1.0),
        argmax_state: mes_from_unitary(&w),
        optimizer_trace: trace,
        certified: converged,
    })
}

// ---------------------------------------------------------------------------
// Axiom harnesses
// ---------------------------------------------------------------------------

/// Which measure an [`axiom_suite`] campaign exercises.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureTag {
    Robustness { d: usize },
    AlphaSuperiority { d: usize, alpha: f64 },
    CoherenceDeficiency { d: usize },
    EntanglementDeficiency { d_local: usize },
}

impl MeasureTag {
    pub fn dim(&self) -> usize {
        match *self {
            MeasureTag::Robustness { d } | MeasureTag::CoherenceDeficiency { d } => d,
            MeasureTag::AlphaSuperiority { d, .. } => d,
            MeasureTag::EntanglementDeficiency { d_local } => d_local * d_local,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MeasureTag::Robustness { .. } => "robustness",
            MeasureTag::AlphaSuperiority { .. } => "alpha_superiority",
            MeasureTag::CoherenceDeficiency { .. } => "coherence_deficiency",
            MeasureTag::EntanglementDeficiency { .. } => "entanglement_deficiency",
        }
    }
}

/// Which axiom family the campaign checks: the resource conditions
/// (faithful / selective monotone / convex) or the deficiency conditions
/// (faithful / reverse selective monotone / concave).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxiomKind {
    Resource,
    Deficiency,
}

/// Violation slack shared by all axiom checks.
pub const AXIOM_SLACK: f64 = 1e-6;

/// Sample states, selective channels and mixtures, and test the axioms of
/// the declared framework. Violations are recorded as failing cases.
pub fn axiom_suite(
    tag: MeasureTag,
    kind: AxiomKind,
    trials: usize,
    seed: u64,
) -> Result<ScenarioReport> {
    let mut cases = Vec::new();
    for k in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e3779b97f4a7c15_u64.wrapping_mul(k as u64 + 1)));
        match (tag, kind) {
            (MeasureTag::Robustness { d }, AxiomKind::Resource) => {
                resource_trial(&mut cases, k, d, None, &mut rng)?
            }
            (MeasureTag::AlphaSuperiority { d, alpha }, AxiomKind::Resource) => {
                resource_trial(&mut cases, k, d, Some(alpha), &mut rng)?
            }
            (MeasureTag::CoherenceDeficiency { d }, AxiomKind::Deficiency) => {
                coherence_deficiency_trial(&mut cases, k, d, &mut rng)?
            }
            (MeasureTag::EntanglementDeficiency { d_local }, AxiomKind::Deficiency) => {
                entanglement_deficiency_trial(&mut cases, k, d_local, &mut rng)?
            }
            _ => {
                return Err(MeasureError::OptimizerStalled { best: f64::NAN });
            }
        }
    }
    Ok(ScenarioReport::new(
        format!("axioms[{}/{:?}]", tag.name(), kind),
        seed,
        cases,
    ))
}

fn state_digest(rho: &DensityMatrix) -> String {
    digest_f64s(
        rho.matrix()
            .entries()
            .iter()
            .flat_map(|z| [z.re, z.im]),
    )
}

/// One trial of the (R1)/(R2b)/(R3) checks for R_r or R_{r,α}.
fn resource_trial(
    cases: &mut Vec<CaseRecord>,
    k: usize,
    d: usize,
    alpha: Option<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let measure = |rho: &DensityMatrix| -> Result<f64> {
        match alpha {
            Some(a) => Ok(alpha_superiority(rho, a)?.value),
            None => Ok(robustness(rho)?.value),
        }
    };
    let tag = |name: &str| format!("{name}-{k:04}");
    let with_alpha = |c: CaseRecord| match alpha {
        Some(a) => c.with_alpha(a),
        None => c,
    };

    // (R1) members of the free set score zero
    let free = match alpha {
        Some(a) => sample_state_with_robustness_below(d, a, rng)?,
        None => {
            let raw: Vec<f64> = (0..d).map(|_| rng.random::<f64>() + 0.01).collect();
            let t: f64 = raw.iter().sum();
            let diag: Vec<f64> = raw.iter().map(|x| x / t).collect();
            DensityMatrix::new(CMatrix::from_diagonal(&diag))?
        }
    };
    let v_free = measure(&free)?;
    cases.push(with_alpha(
        CaseRecord::new(tag("r1-free"), d)
            .with_digest(state_digest(&free))
            .with_extra("value", v_free)
            .check(v_free.max(0.0), AXIOM_SLACK),
    ));

    // (R1) the measure is nonnegative and vanishes only inside the set
    let rho = random_density_rng(d, d, rng)?;
    let v_rho = measure(&rho)?;
    let rr = robustness(&rho)?.value;
    let member = match alpha {
        Some(a) => rr <= a + AXIOM_SLACK,
        None => rho.off_diagonal_mass() <= 1e-9,
    };
    let faithful_violation = if v_rho <= 1e-7 && !member {
        1.0
    } else if v_rho > AXIOM_SLACK && member {
        v_rho
    } else {
        0.0_f64.max(-v_rho)
    };
    cases.push(with_alpha(
        CaseRecord::new(tag("r1-faithful"), d)
            .with_digest(state_digest(&rho))
            .with_extra("value", v_rho)
            .with_extra("base_robustness", rr)
            .check(faithful_violation, AXIOM_SLACK),
    ));

    // monotonicity under a sampled incoherent channel. The base robustness
    // is a selective monotone (R2b); the α-superiority measure is monotone
    // under deterministic free operations (R2a) but not branchwise — a
    // branch can concentrate robustness above α, and truncation at α is
    // convex, so the branch average may rise.
    let ch = sample_incoherent_channel_rng(d, 2 + (rng.random::<u32>() % 3) as usize, rng);
    let (monotone_id, evolved) = match alpha {
        Some(_) => {
            let out = apply_channel(&rho, &ch)?;
            (tag("r2a-monotone"), measure(&out)?)
        }
        None => {
            let branches = apply_channel_selective(&rho, &ch)?;
            let mut avg = 0.0;
            for (p, s) in &branches {
                avg += p * measure(s)?;
            }
            (tag("r2b-monotone"), avg)
        }
    };
    cases.push(with_alpha(
        CaseRecord::new(monotone_id, d)
            .with_digest(state_digest(&rho))
            .with_values(v_rho, evolved)
            .check((evolved - v_rho).max(0.0), AXIOM_SLACK),
    ));

    // (R3) convexity under a random two-state mixture
    let rho2 = random_density_rng(d, d, rng)?;
    let q: f64 = rng.random();
    let mut mixm = rho.matrix().scale(q);
    mixm.add_assign_scaled(rho2.matrix(), 1.0 - q);
    let mix = DensityMatrix::new(mixm.hermitize())?;
    let v_mix = measure(&mix)?;
    let bound = q * v_rho + (1.0 - q) * measure(&rho2)?;
    cases.push(with_alpha(
        CaseRecord::new(tag("r3-convex"), d)
            .with_digest(state_digest(&mix))
            .with_values(bound, v_mix)
            .check((v_mix - bound).max(0.0), AXIOM_SLACK),
    ));
    Ok(())
}

/// One trial of the (D1)/(D2b)/(D3) checks for the coherence deficiency.
fn coherence_deficiency_trial(
    cases: &mut Vec<CaseRecord>,
    k: usize,
    d: usize,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let tag = |name: &str| format!("{name}-{k:04}");
    let opts_seeded = |seed: u64, extra: Vec<PhaseVector>| CoherenceSearch {
        seed,
        extra_starts: extra,
        ..CoherenceSearch::default()
    };

    // (D1) maximally coherent states score zero
    let max_state = max_coherent(d, &PhaseVector::random_rng(d, rng))?.to_density();
    let v_max = coherence_deficiency_with(&max_state, &opts_seeded(rng.random(), vec![]))?;
    cases.push(
        CaseRecord::new(tag("d1-max"), d)
            .with_digest(state_digest(&max_state))
            .with_extra("value", v_max.value)
            .check(v_max.value, AXIOM_SLACK),
    );

    // (D1) full-rank states sit strictly above zero: D ≥ 1 − λ_max
    let rho = random_density_rng(d, d, rng)?;
    let def_rho = coherence_deficiency_with(&rho, &opts_seeded(rng.random(), vec![]))?;
    let lmax = rho.eig()?.eigenvalues[d - 1];
    let d1_violation = ((1.0 - lmax) - def_rho.value).max(0.0)
        + (-def_rho.value).max(0.0)
        + (def_rho.value - 1.0).max(0.0);
    cases.push(
        CaseRecord::new(tag("d1-positive"), d)
            .with_digest(state_digest(&rho))
            .with_extra("value", def_rho.value)
            .with_extra("lambda_max", lmax)
            .check(d1_violation, AXIOM_SLACK),
    );

    // (D2b) reversed selective monotonicity under incoherent channels:
    // Σ pₙ D(σₙ) ≥ D(ρ). The branch optima are pulled back through the
    // channel's column structure and fed to the ρ search as extra starts.
    let ch = sample_incoherent_channel_rng(d, 2 + (rng.random::<u32>() % 3) as usize, rng);
    let branches = apply_channel_selective(&rho, &ch)?;
    let mut avg = 0.0;
    let mut pullback_starts: Vec<PhaseVector> = Vec::new();
    for (n, (p, s)) in branches.iter().enumerate() {
        let branch = coherence_deficiency_with(s, &opts_seeded(rng.random(), vec![]))?;
        avg += p * branch.value;
        let branch_theta: Vec<f64> = branch
            .argmax_state
            .amplitudes()
            .iter()
            .map(|z| z.arg())
            .collect();
        let kraus = &ch.kraus()[n];
        let mut pulled = vec![0.0; d];
        for j in 0..d {
            for i in 0..d {
                if kraus[(i, j)].norm() > 1e-14 {
                    pulled[j] = branch_theta[i] + kraus[(i, j)].arg();
                }
            }
        }
        pullback_starts.push(PhaseVector::new(pulled));
    }
    let def_rho_seeded =
        coherence_deficiency_with(&rho, &opts_seeded(rng.random(), pullback_starts))?;
    let d_rho = def_rho_seeded.value.min(def_rho.value);
    cases.push(
        CaseRecord::new(tag("d2b-monotone"), d)
            .with_digest(state_digest(&rho))
            .with_values(d_rho, avg)
            .check((d_rho - avg).max(0.0), AXIOM_SLACK),
    );

    // (D3) concavity under a random two-state mixture
    let rho2 = random_density_rng(d, d, rng)?;
    let q: f64 = rng.random();
    let mut mixm = rho.matrix().scale(q);
    mixm.add_assign_scaled(rho2.matrix(), 1.0 - q);
    let mix = DensityMatrix::new(mixm.hermitize())?;
    let def2 = coherence_deficiency_with(&rho2, &opts_seeded(rng.random(), vec![]))?;
    let def_mix = coherence_deficiency_with(&mix, &opts_seeded(rng.random(), vec![]))?;
    let bound = q * def_rho.value + (1.0 - q) * def2.value;
    cases.push(
        CaseRecord::new(tag("d3-concave"), d)
            .with_digest(state_digest(&mix))
            .with_values(bound, def_mix.value)
            .check((bound - def_mix.value).max(0.0), AXIOM_SLACK),
    );
    Ok(())
}

/// One trial of the (D1)/(D2b)/(D3) checks for the entanglement deficiency
/// on a d×d bipartition.
fn entanglement_deficiency_trial(
    cases: &mut Vec<CaseRecord>,
    k: usize,
    d: usize,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let dims = (d, d);
    let tag = |name: &str| format!("{name}-{k:04}");
    let opts_seeded = |seed: u64, extra: Vec<CMatrix>| EntanglementSearch {
        seed,
        extra_starts: extra,
        ..EntanglementSearch::default()
    };

    // (D1) maximally entangled states score zero
    let mes = max_entangled(d, &random_unitary_rng(d, rng), &random_unitary_rng(d, rng))?
        .to_density();
    let v_max = entanglement_deficiency_with(&mes, dims, &opts_seeded(rng.random(), vec![]))?;
    cases.push(
        CaseRecord::new(tag("d1-max"), d * d)
            .with_digest(state_digest(&mes))
            .with_extra("value", v_max.value)
            .check(v_max.value, AXIOM_SLACK),
    );

    // (D1) full-rank states sit strictly above zero: D ≥ 1 − λ_max
    let rho = random_density_rng(d * d, d * d, rng)?;
    let def_rho = entanglement_deficiency_with(&rho, dims, &opts_seeded(rng.random(), vec![]))?;
    let lmax = rho.eig()?.eigenvalues[d * d - 1];
    let d1_violation = ((1.0 - lmax) - def_rho.value).max(0.0)
        + (-def_rho.value).max(0.0)
        + (def_rho.value - 1.0).max(0.0);
    cases.push(
        CaseRecord::new(tag("d1-positive"), d * d)
            .with_digest(state_digest(&rho))
            .with_extra("value", def_rho.value)
            .with_extra("lambda_max", lmax)
            .check(d1_violation, AXIOM_SLACK),
    );

    // (D2b) reversed selective monotonicity under mixtures of local
    // unitaries, the free family whose branches are local frame changes.
    // (The fidelity to the maximally entangled set is not monotone under
    // general local channels: a product state keeps fidelity 1/d, which
    // can exceed that of a weakly entangled input, so filtering or
    // measuring can lower the deficiency.) Branch optima pull back through
    // the frames and seed the ρ search.
    let n_branches = 2 + (rng.random::<u32>() % 2) as usize;
    let mut probs: Vec<f64> = (0..n_branches).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    let frames: Vec<(CMatrix, CMatrix)> = (0..n_branches)
        .map(|_| (random_unitary_rng(d, rng), random_unitary_rng(d, rng)))
        .collect();
    let kraus: Vec<CMatrix> = frames
        .iter()
        .zip(&probs)
        .map(|((ua, ub), p)| qmath::kron(ua, ub).scale(p.sqrt()))
        .collect();
    let ch = KrausChannel::new(kraus, true)?;
    let branches = apply_channel_selective(&rho, &ch)?;
    let mut avg = 0.0;
    let mut pullback: Vec<CMatrix> = Vec::new();
    for ((p, s), (ua, ub)) in branches.iter().zip(&frames) {
        let branch = entanglement_deficiency_with(s, dims, &opts_seeded(rng.random(), vec![]))?;
        avg += p * branch.value;
        // branch argmax W' maps back to the ρ frame as U_A† W' conj(U_B)
        let amps = branch.argmax_state.amplitudes();
        let w_branch = CMatrix::from_fn(d, d, |a, b| amps[a * d + b] * (d as f64).sqrt());
        let ub_conj = CMatrix::from_fn(d, d, |i, j| ub[(i, j)].conj());
        pullback.push(&(&ua.adjoint() * &w_branch) * &ub_conj);
    }
    let def_rho_seeded =
        entanglement_deficiency_with(&rho, dims, &opts_seeded(rng.random(), pullback))?;
    let d_rho = def_rho_seeded.value.min(def_rho.value);
    cases.push(
        CaseRecord::new(tag("d2b-monotone"), d * d)
            .with_digest(state_digest(&rho))
            .with_values(d_rho, avg)
            .check((d_rho - avg).max(0.0), AXIOM_SLACK),
    );

    // (D3) concavity under a random two-state mixture
    let rho2 = random_density_rng(d * d, d * d, rng)?;
    let q: f64 = rng.random();
    let mut mixm = rho.matrix().scale(q);
    mixm.add_assign_scaled(rho2.matrix(), 1.0 - q);
    let mix = DensityMatrix::new(mixm.hermitize())?;
    let def2 = entanglement_deficiency_with(&rho2, dims, &opts_seeded(rng.random(), vec![]))?;
    let def_mix = entanglement_deficiency_with(&mix, dims, &opts_seeded(rng.random(), vec![]))?;
    let bound = q * def_rho.value + (1.0 - q) * def2.value;
    cases.push(
        CaseRecord::new(tag("d3-concave"), d * d)
            .with_digest(state_digest(&mix))
            .with_values(bound, def_mix.value)
            .check((bound - def_mix.value).max(0.0), AXIOM_SLACK),
    );
    Ok(())
}
