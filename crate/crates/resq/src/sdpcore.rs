//! Small dense SDP solvers for the two robustness programs.
//!
//! Program A (generalized robustness over incoherent states), reformulated
//! with D = (1+s)·δ for a free diagonal state δ:
//!
//! ```text
//!   minimize  tr(D) − 1   subject to  D diagonal, D ⪰ ρ
//! ```
//!
//! Program B (relative robustness of ρ with respect to σ):
//!
//! ```text
//!   maximize  tr(ρX) − 1  subject to  X ⪰ 0, tr(σX) ≤ 1
//! ```
//!
//! Both run a logarithmic-barrier path-following method (barrier parameter
//! decrease factor 0.25, Newton budget 500). Newton steps use an exact
//! line search: restricted to a ray, the barrier objective is
//! t·α·a + Σᵢ ln(1 + α·μᵢ) + ln(g − α·b) with μᵢ the eigenvalues of the
//! whitened direction, so the maximizing α comes from a scalar bisection
//! instead of backtracking — that keeps long steps possible when a fresh
//! barrier parameter moves the center far away.
//!
//! Every outer round produces an explicit feasible point of the opposing
//! program — program A normalizes the diagonal-scaled S⁻¹ into a dual
//! witness with unit diagonal, program B restores the central-path
//! multiplier λ = 1/(t·g) to exact dual feasibility λσ ⪰ ρ — so the
//! reported duality gap is certified.

use num_complex::Complex64;
use thiserror::Error;

use crate::qmath::{self, CMatrix};
use crate::states::DensityMatrix;

/// Relative duality-gap stopping threshold.
pub const GAP_STOP_REL: f64 = 1e-9;
/// Absolute duality-gap floor of the stopping rule for the relative
/// program, whose optimal values can reach the hundreds.
pub const GAP_STOP_ABS: f64 = 5e-7;
/// Relative gap still accepted when the iteration stalls at its
/// floating-point wall.
pub const GAP_STALL_REL: f64 = 1e-7;
/// Rounds without progress on either bound before declaring a stall.
const STALL_ROUNDS: usize = 8;
/// Total Newton-step budget per solve.
pub const NEWTON_CAP: usize = 500;
/// Eigenvalues of σ at or below this are treated as kernel.
pub const KERNEL_TOL: f64 = 1e-9;
/// Projection of ρ onto the kernel of σ above this norm means R⁺ = ∞.
pub const SUPPORT_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("solver hit the iteration cap ({iterations} Newton steps); best value {best:.6e}")]
    SolverDiverged { best: f64, iterations: usize },

    #[error(
        "unbounded program: support of rho is not contained in support of sigma \
         (kernel residual {residual:.3e})"
    )]
    UnboundedProgram { residual: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error(transparent)]
    Math(#[from] qmath::QmathError),
}

pub type Result<T> = std::result::Result<T, SdpError>;

/// One outer round of the barrier method: the feasible values of the two
/// programs observed at that point.
#[derive(Debug, Clone, Copy)]
pub struct TracePoint {
    pub iteration: usize,
    /// Feasible value of the minimization side.
    pub upper: f64,
    /// Feasible value of the maximization side.
    pub lower: f64,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub optimal_value: f64,
    /// Feasible witness operator of the maximization form: the unit-diagonal
    /// PSD Y with value tr(ρY) − 1 for program A, the PSD X with
    /// tr(σX) ≤ 1 for program B.
    pub witness: CMatrix,
    /// Optimal diagonal D of program A (absent for program B).
    pub free_diagonal: Option<Vec<f64>>,
    pub duality_gap: f64,
    pub iterations: usize,
    pub trace: Vec<TracePoint>,
}

fn gap_closed(gap: f64, value: f64, abs_floor: f64) -> bool {
    gap <= (GAP_STOP_REL * value.abs().max(1.0)).max(abs_floor)
}

// ---------------------------------------------------------------------------
// Shared numeric helpers
// ---------------------------------------------------------------------------

/// Inverse of a lower-triangular matrix by forward substitution.
fn lower_tri_inverse(l: &CMatrix) -> CMatrix {
    let n = l.rows();
    let mut inv = CMatrix::zeros(n, n);
    for k in 0..n {
        inv[(k, k)] = Complex64::ONE / l[(k, k)];
        for i in (k + 1)..n {
            let mut s = Complex64::ZERO;
            for j in k..i {
                s += l[(i, j)] * inv[(j, k)];
            }
            inv[(i, k)] = -s / l[(i, i)];
        }
    }
    inv
}

/// Inverse of a Hermitian positive definite matrix via Cholesky.
fn pd_inverse(m: &CMatrix) -> Option<CMatrix> {
    let l = qmath::cholesky(m)?;
    let linv = lower_tri_inverse(&l);
    Some(&linv.adjoint() * &linv)
}

/// Eigenvalues of the whitened direction L⁻¹ Δ L⁻† for M = L L†. They
/// parameterize the barrier along the ray M + αΔ.
fn whitened_direction_eigs(m: &CMatrix, delta: &CMatrix) -> Option<Vec<f64>> {
    let l = qmath::cholesky(m)?;
    let linv = lower_tri_inverse(&l);
    let w = (&(&linv * delta) * &linv.adjoint()).hermitize();
    qmath::hermitian_eig(&w).ok().map(|e| e.eigenvalues)
}

/// Solve H x = b for a real symmetric positive definite H (row-major),
/// with one jittered retry if the factorization stalls near the boundary.
fn real_spd_solve(h: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    fn try_solve(h: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
        let mut l = vec![0.0_f64; n * n];
        for j in 0..n {
            let mut s = h[j * n + j];
            for k in 0..j {
                s -= l[j * n + k] * l[j * n + k];
            }
            if s <= 0.0 || !s.is_finite() {
                return None;
            }
            let ljj = s.sqrt();
            l[j * n + j] = ljj;
            for i in (j + 1)..n {
                let mut c = h[i * n + j];
                for k in 0..j {
                    c -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = c / ljj;
            }
        }
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        Some(x)
    }

    try_solve(h, n, b).or_else(|| {
        let scale: f64 = (0..n).map(|i| h[i * n + i].abs()).fold(0.0, f64::max);
        let mut hj = h.to_vec();
        for i in 0..n {
            hj[i * n + i] += 1e-12 * scale.max(1.0);
        }
        try_solve(&hj, n, b)
    })
}

/// Root of a monotone scalar function on (0, hi] by bisection; `increasing`
/// states the sign behavior of `f`. When `f` keeps its initial sign all the
/// way to `hi`, returns `hi`.
fn bisect_root(f: impl Fn(f64) -> f64, hi: f64, increasing: bool) -> f64 {
    let f_hi = f(hi);
    if (increasing && f_hi <= 0.0) || (!increasing && f_hi >= 0.0) {
        return hi;
    }
    let mut lo = 0.0;
    let mut hi = hi;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if (increasing && v <= 0.0) || (!increasing && v >= 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// ---------------------------------------------------------------------------
// Program A: generalized robustness over the incoherent (diagonal) states
// ---------------------------------------------------------------------------

/// Generalized robustness of coherence R_r(ρ) = min{tr D − 1 : D diagonal,
/// D ⪰ ρ}, with the optimal diagonal D and a unit-diagonal PSD dual
/// witness Y (value tr(ρY) − 1) certifying the gap.
pub fn solve_robustness_coherence(rho: &DensityMatrix) -> Result<SdpSolution> {
    let d = rho.dim();
    let rmat = rho.matrix().hermitize();
    let diag_rho: Vec<f64> = (0..d).map(|i| rmat[(i, i)].re).collect();

    // strictly feasible start: λ_min(diag(x₀) − ρ) ≥ 0.1
    let m0 = qmath::min_eigenvalue(&(&CMatrix::from_diagonal(&diag_rho) - &rmat))?;
    let shift = 0.1 + (-m0).max(0.0);
    let mut x: Vec<f64> = diag_rho.iter().map(|v| v + shift).collect();

    let slack = |x: &[f64]| -> CMatrix { &CMatrix::from_diagonal(x) - &rmat };

    let mut t = d as f64;
    let mut newton_steps = 0usize;
    let mut trace = Vec::new();
    let mut best_primal = f64::INFINITY;
    let mut best_dual = f64::NEG_INFINITY;
    let mut best_x = x.clone();
    let mut best_witness: Option<CMatrix> = None;
    let mut stall_rounds = 0usize;

    loop {
        // Newton centering of f(x) = t·Σx − log det(diag(x) − ρ); the
        // barrier parameter only advances once the decrement has collapsed,
        // otherwise the iterate drifts off the central path and the line
        // search degenerates into boundary-clamped micro-steps
        let mut centered = false;
        for _ in 0..50 {
            newton_steps += 1;
            let s = slack(&x);
            let sinv = match pd_inverse(&s) {
                Some(v) => v,
                None => {
                    // nudged onto the boundary by roundoff; re-interiorize
                    for xi in &mut x {
                        *xi += 1e-12;
                    }
                    continue;
                }
            };
            let grad: Vec<f64> = (0..d).map(|i| t - sinv[(i, i)].re).collect();
            let mut hess = vec![0.0; d * d];
            for i in 0..d {
                for j in 0..d {
                    hess[i * d + j] = sinv[(i, j)].norm_sqr();
                }
            }
            let neg_g: Vec<f64> = grad.iter().map(|g| -g).collect();
            let step = match real_spd_solve(&hess, d, &neg_g) {
                Some(s) => s,
                None => break,
            };
            let decrement: f64 = grad.iter().zip(&step).map(|(g, s)| -g * s).sum();
            if decrement <= 1e-11 {
                centered = true;
                break;
            }

            // exact line search on f(α) = t·α·Σstep − Σ ln(1 + α·μᵢ)
            let mus = match whitened_direction_eigs(&s, &CMatrix::from_diagonal(&step)) {
                Some(m) => m,
                None => break,
            };
            let mu_min = mus[0];
            let alpha_hi = if mu_min < 0.0 {
                (-1.0 / mu_min) * 0.999_999
            } else {
                1e8
            };
            let step_sum: f64 = step.iter().sum();
            let deriv = |a: f64| -> f64 {
                t * step_sum - mus.iter().map(|&mu| mu / (1.0 + a * mu)).sum::<f64>()
            };
            let alpha = bisect_root(deriv, alpha_hi, true);
            if alpha * step.iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-15 {
                break;
            }
            for (xi, si) in x.iter_mut().zip(&step) {
                *xi += alpha * si;
            }
        }

        // certified gap: dual witness with unit diagonal built from S⁻¹
        let s = slack(&x);
        let sinv = pd_inverse(&s).ok_or(SdpError::SolverDiverged {
            best: best_primal,
            iterations: newton_steps,
        })?;
        let norms: Vec<f64> = (0..d).map(|i| sinv[(i, i)].re.sqrt()).collect();
        let witness = CMatrix::from_fn(d, d, |i, j| sinv[(i, j)] / (norms[i] * norms[j]));
        let primal = x.iter().sum::<f64>() - 1.0;
        let dual = rmat.inner_re(&witness) - 1.0;
        let tick = 1e-16 * best_primal.abs().max(1.0);
        let improved = primal < best_primal - tick || dual > best_dual + tick;
        if primal < best_primal {
            best_primal = primal;
            best_x = x.clone();
        }
        if dual > best_dual {
            best_dual = dual;
            best_witness = Some(witness);
        }
        trace.push(TracePoint {
            iteration: newton_steps,
            upper: primal,
            lower: dual,
        });
        stall_rounds = if improved { 0 } else { stall_rounds + 1 };

        let gap = (best_primal - best_dual).max(0.0);
        let scale = best_primal.abs().max(1.0);
        let give_up = stall_rounds >= STALL_ROUNDS || newton_steps >= NEWTON_CAP;
        if gap_closed(gap, best_primal, 0.0) || (give_up && gap <= GAP_STALL_REL * scale) {
            return Ok(SdpSolution {
                optimal_value: best_primal.max(0.0),
                witness: best_witness.expect("at least one round ran"),
                free_diagonal: Some(best_x),
                duality_gap: gap,
                iterations: newton_steps,
                trace,
            });
        }
        if give_up {
            return Err(SdpError::SolverDiverged {
                best: best_primal,
                iterations: newton_steps,
            });
        }
        if centered {
            t *= 4.0;
        }
    }
}

// ---------------------------------------------------------------------------
// Program B: relative robustness between two states
// ---------------------------------------------------------------------------

/// Restore a multiplier candidate to dual feasibility λσ ⪰ ρ by Rayleigh
/// steps on the bottom eigenpair, plus a conservative final top-up.
fn restore_dual_multiplier(
    lam0: f64,
    sigma: &CMatrix,
    rho: &CMatrix,
    sigma_min: f64,
) -> Result<f64> {
    let mut lam = lam0.max(0.0);
    if !lam.is_finite() {
        lam = 0.0;
    }
    for _ in 0..48 {
        let mut w = sigma.scale(lam);
        w.add_assign_scaled(rho, -1.0);
        let eig = qmath::hermitian_eig(&w.hermitize())?;
        let mu = eig.eigenvalues[0];
        if mu >= -1e-13 * lam.max(1.0) {
            return Ok(lam + (-mu).max(0.0) / sigma_min);
        }
        let v = eig.eigenvectors.column(0);
        let sv: f64 = {
            let svec = sigma.matvec(&v);
            v.iter().zip(&svec).map(|(a, b)| (a.conj() * b).re).sum()
        };
        lam += (-mu) / sv.max(sigma_min * 1e-3);
    }
    let mut w = sigma.scale(lam);
    w.add_assign_scaled(rho, -1.0);
    let mu = qmath::min_eigenvalue(&w.hermitize())?;
    Ok(lam + (-mu).max(0.0) / sigma_min)
}

/// Relative robustness R⁺(ρ,σ) as the optimal value of
/// max{tr(ρX) − 1 : X ⪰ 0, tr(σX) ≤ 1}.
///
/// Returns `UnboundedProgram` when the support of ρ leaks outside the
/// support of σ (the measure is infinite there). With a rank-deficient σ
/// of contained support, the program is solved on the support subspace and
/// the witness is embedded back with zeros on the kernel.
pub fn solve_relative_dual(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<SdpSolution> {
    let d = rho.dim();
    if sigma.dim() != d {
        return Err(SdpError::DimensionMismatch {
            left: d,
            right: sigma.dim(),
        });
    }
    let rmat = rho.matrix().hermitize();
    let smat = sigma.matrix().hermitize();

    // support of σ and the containment test
    let eig_sigma = qmath::hermitian_eig(&smat)?;
    let support: Vec<usize> = (0..d)
        .filter(|&k| eig_sigma.eigenvalues[k] > KERNEL_TOL)
        .collect();
    let r = support.len();
    if r < d {
        let kernel: Vec<Vec<Complex64>> = (0..d)
            .filter(|&k| eig_sigma.eigenvalues[k] <= KERNEL_TOL)
            .map(|k| eig_sigma.eigenvectors.column(k))
            .collect();
        let kb = CMatrix::from_columns(&kernel);
        let leak = &(&kb.adjoint() * &rmat) * &kb;
        let residual = leak.frob_norm();
        if residual > SUPPORT_RESIDUAL_TOL {
            return Err(SdpError::UnboundedProgram { residual });
        }
    }

    let basis = CMatrix::from_columns(
        &support
            .iter()
            .map(|&k| eig_sigma.eigenvectors.column(k))
            .collect::<Vec<_>>(),
    );
    let rho_r = (&(&basis.adjoint() * &rmat) * &basis).hermitize();
    let sigma_r = (&(&basis.adjoint() * &smat) * &basis).hermitize();
    let sigma_min = support
        .iter()
        .map(|&k| eig_sigma.eigenvalues[k])
        .fold(f64::INFINITY, f64::min);

    // strictly feasible start aligned with ρ (shortens the damped phase
    // when the optimum is dominated by ρ's top eigenspace), kept strictly
    // positive by an identity部分: X₀ = 0.5·(ρ + 0.4·𝕀)/tr(σ(ρ + 0.4·𝕀)).
    // The slack g = 1 − tr(σX) is maintained incrementally afterwards:
    // recomputing it by subtraction once g is tiny would poison the
    // gradient with cancellation noise.
    let mut xm = {
        let mut seed = rho_r.clone();
        seed = &seed + &CMatrix::identity(r).scale(0.4);
        seed.scale(0.5 / sigma_r.inner_re(&seed))
    };
    let mut g = 1.0 - sigma_r.inner_re(&xm);
    let mut t = 1.0;
    let mut newton_steps = 0usize;
    let mut trace = Vec::new();
    let mut best_primal = f64::NEG_INFINITY;
    let mut best_dual = f64::INFINITY;
    let mut best_x = xm.clone();
    let mut stall_rounds = 0usize;
    let mut restarts_left = 4usize;
    let nu = (r + 1) as f64;

    loop {
        // Newton ascent on φ_t(X) = t·tr(ρX) + log det X + log(1 − tr σX);
        // t advances only after the centering converged
        let mut centered = false;
        for _ in 0..50 {
            newton_steps += 1;
            let xinv = match pd_inverse(&xm) {
                Some(v) => v,
                None => break,
            };
            let mut grad = rho_r.scale(t);
            grad = &grad + &xinv;
            grad.add_assign_scaled(&sigma_r, -1.0 / g);
            let grad = grad.hermitize();

            // closed-form Newton solve: the Hessian is Δ ↦ X⁻¹ΔX⁻¹ plus a
            // rank-one σ·tr(σΔ)/g² term, inverted by Sherman-Morrison
            let xgx = (&(&xm * &grad) * &xm).hermitize();
            let xsx = (&(&xm * &sigma_r) * &xm).hermitize();
            let denom = g * g + sigma_r.inner_re(&xsx);
            let coef = sigma_r.inner_re(&xgx) / denom;
            let mut step = xgx.clone();
            step.add_assign_scaled(&xsx, -coef);

            let decrement = grad.inner_re(&step);
            if decrement <= 1e-11 {
                centered = true;
                break;
            }

            // exact line search on
            // φ(α) = t·α·a + Σ ln(1 + α·μᵢ) + ln(g − α·b)
            let mus = match whitened_direction_eigs(&xm, &step) {
                Some(m) => m,
                None => break,
            };
            let mu_min = mus[0];
            let a_lin = rho_r.inner_re(&step);
            let b_lin = sigma_r.inner_re(&step);
            let mut alpha_hi = if mu_min < 0.0 { -0.999_999 / mu_min } else { 1e8 };
            if b_lin > 0.0 {
                alpha_hi = alpha_hi.min(0.999_999 * g / b_lin);
            }
            let deriv = |al: f64| -> f64 {
                t * a_lin + mus.iter().map(|&mu| mu / (1.0 + al * mu)).sum::<f64>()
                    - b_lin / (g - al * b_lin)
            };
            let alpha = bisect_root(deriv, alpha_hi, false);
            if alpha * step.max_abs() < 1e-16 * xm.max_abs().max(1.0) {
                break;
            }
            xm.add_assign_scaled(&step, alpha);
            xm = xm.hermitize();
            g -= alpha * b_lin;
        }

        // certificates: the restored dual multiplier is exactly feasible
        let lam = restore_dual_multiplier(1.0 / (t * g), &sigma_r, &rho_r, sigma_min)?;
        let primal = rho_r.inner_re(&xm) - 1.0;
        let dual = lam - 1.0;
        let tick = 1e-16 * best_primal.abs().max(1.0);
        let improved = primal > best_primal + tick || dual < best_dual - tick;
        if primal > best_primal {
            best_primal = primal;
            best_x = xm.clone();
        }
        best_dual = best_dual.min(dual);
        stall_rounds = if improved { 0 } else { stall_rounds + 1 };
        if std::env::var("RESQ_DEBUG").is_ok() {
            eprintln!("round t={t:.2e} steps={newton_steps} primal={primal:.12e} dual={dual:.12e} g={g:.3e}");
        }
        trace.push(TracePoint {
            iteration: newton_steps,
            upper: dual,
            lower: primal,
        });

        let gap = (best_dual - best_primal).max(0.0);
        let scale = best_primal.abs().max(1.0);
        if gap_closed(gap, best_primal, GAP_STOP_ABS) {
            let witness = (&(&basis * &best_x) * &basis.adjoint()).hermitize();
            return Ok(SdpSolution {
                optimal_value: best_primal.max(0.0),
                witness,
                free_diagonal: None,
                duality_gap: gap,
                iterations: newton_steps,
                trace,
            });
        }

        // a frozen iterate at extreme t usually means cond(X)·t has hit the
        // f64 ceiling; lift X off the boundary, rejoin the path at the
        // parameter matching the certified gap, and try again
        if stall_rounds >= STALL_ROUNDS && restarts_left > 0 && newton_steps < NEWTON_CAP {
            restarts_left -= 1;
            stall_rounds = 0;
            let lift = 1e-7 * best_x.trace().re / r as f64;
            let mut fresh = best_x.scale(1.0 - 1e-6);
            fresh = &fresh + &CMatrix::identity(r).scale(lift);
            let occupancy = sigma_r.inner_re(&fresh);
            if occupancy >= 1.0 {
                fresh = fresh.scale((1.0 - 1e-9) / occupancy);
            }
            xm = fresh.hermitize();
            g = 1.0 - sigma_r.inner_re(&xm);
            t = (nu / gap.max(1e-12)).max(1.0);
            continue;
        }

        let give_up = stall_rounds >= STALL_ROUNDS || newton_steps >= NEWTON_CAP;
        if give_up && gap <= GAP_STALL_REL * scale {
            let witness = (&(&basis * &best_x) * &basis.adjoint()).hermitize();
            return Ok(SdpSolution {
                optimal_value: best_primal.max(0.0),
                witness,
                free_diagonal: None,
                duality_gap: gap,
                iterations: newton_steps,
                trace,
            });
        }
        if give_up {
            return Err(SdpError::SolverDiverged {
                best: best_primal,
                iterations: newton_steps,
            });
        }
        if centered {
            t *= 4.0;
        }
    }
}
