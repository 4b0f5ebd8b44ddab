//! Independent oracles shared by the integration suites. These deliberately
//! avoid the solver code paths: robustness is bracketed by bisection with a
//! feasibility search over the diagonal, relative robustness comes from the
//! largest generalized eigenvalue.

use resq::qmath::{self, CMatrix};
use resq::states::{random_density, DensityMatrix};

/// max over {x : Σx = total} of λ_min(diag(x) − ρ), by supergradient
/// ascent followed by pairwise coordinate polish. The maximum is concave
/// in x, so the ascent is global.
fn max_min_eig(rho: &CMatrix, total: f64, x0: Option<Vec<f64>>, ascent_iters: usize) -> (f64, Vec<f64>) {
    let d = rho.rows();
    let mut x = x0.unwrap_or_else(|| vec![total / d as f64; d]);
    let adjust = (total - x.iter().sum::<f64>()) / d as f64;
    for xi in &mut x {
        *xi += adjust;
    }

    let lam_min = |x: &[f64]| -> (f64, Vec<f64>) {
        let s = &CMatrix::from_diagonal(x) - rho;
        let eig = qmath::hermitian_eig(&s).expect("hermitian by construction");
        let v = eig.eigenvectors.column(0);
        (eig.eigenvalues[0], v.iter().map(|z| z.norm_sqr()).collect())
    };

    let (mut best_val, mut best_x) = {
        let (l, _) = lam_min(&x);
        (l, x.clone())
    };

    // supergradient: the bottom eigenvector weights |v_i|², projected onto
    // the fixed-sum hyperplane
    for k in 0..ascent_iters {
        let (l, g) = lam_min(&x);
        if l > best_val {
            best_val = l;
            best_x = x.clone();
        }
        let mean = g.iter().sum::<f64>() / d as f64;
        let eta = 0.25 * total.max(1.0) / ((k + 1) as f64).sqrt();
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi += eta * (gi - mean);
        }
    }

    // fine-grained coordinate polish: transfer mass between pairs of
    // diagonal entries with a shrinking step
    x = best_x.clone();
    let mut delta = 0.02 * total.max(1.0);
    while delta > 1e-9 {
        let mut improved = false;
        for i in 0..d {
            for j in 0..d {
                if i == j {
                    continue;
                }
                x[i] += delta;
                x[j] -= delta;
                let (l, _) = lam_min(&x);
                if l > best_val + 1e-15 {
                    best_val = l;
                    best_x = x.clone();
                    improved = true;
                } else {
                    x[i] -= delta;
                    x[j] += delta;
                }
            }
        }
        if !improved {
            delta *= 0.5;
        }
    }
    (best_val, best_x)
}

/// Oracle A: generalized robustness of coherence by bisection on the mixing
/// weight; feasibility of s asks whether some diagonal D with tr D = 1 + s
/// dominates ρ.
pub fn oracle_robustness(rho: &DensityMatrix) -> f64 {
    let d = rho.dim();
    let rmat = rho.matrix().hermitize();
    let mut lo = 0.0_f64;
    let mut hi = (d - 1) as f64 + 1e-6;
    let mut warm: Option<Vec<f64>> = None;
    let mut first = true;
    while hi - lo > 1e-6 {
        let s = 0.5 * (lo + hi);
        let iters = if first { 120 } else { 40 };
        let scaled_warm = warm.as_ref().map(|w| {
            let wsum: f64 = w.iter().sum();
            w.iter().map(|wi| wi * (1.0 + s) / wsum).collect::<Vec<f64>>()
        });
        let (val, xbest) = max_min_eig(&rmat, 1.0 + s, scaled_warm, iters);
        if val >= -1e-9 {
            hi = s;
        } else {
            lo = s;
        }
        warm = Some(xbest);
        first = false;
    }
    0.5 * (lo + hi)
}

/// Oracle B: 1 + R⁺(ρ,σ) = λ_max(σ^{−1/2} ρ σ^{−1/2}) for full-support σ.
pub fn oracle_relative(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let is = qmath::inv_sqrt_psd(&sigma.matrix().hermitize(), 1e-12).unwrap();
    let m = (&(&is * rho.matrix()) * &is).hermitize();
    let eig = qmath::hermitian_eig(&m).unwrap();
    eig.eigenvalues[rho.dim() - 1] - 1.0
}

/// Oracle B, equivalent route: the smallest t with tσ ⪰ ρ by bisection on
/// the minimum eigenvalue of tσ − ρ.
pub fn oracle_relative_bisect(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let feasible = |t: f64| -> bool {
        let mut w = sigma.matrix().scale(t);
        w.add_assign_scaled(rho.matrix(), -1.0);
        qmath::min_eigenvalue(&w.hermitize()).unwrap() >= -1e-12
    };
    let mut hi = 1.0_f64;
    while !feasible(hi) {
        hi *= 2.0;
        assert!(hi < 1e9, "sigma appears rank-deficient");
    }
    let mut lo = 0.0_f64;
    for _ in 0..80 {
        let t = 0.5 * (lo + hi);
        if feasible(t) {
            hi = t;
        } else {
            lo = t;
        }
    }
    hi - 1.0
}

/// A random pair (ρ, σ) with σ solidly full support: σ is mixed with
/// 0.1·𝕀/d so the relative robustness stays at desk scale (raw induced
/// draws occasionally produce σ eigenvalues ~1e−4, which blow the value
/// into the thousands where 1e−6 absolute agreement is not meaningful in
/// f64 for any solver).
#[allow(dead_code)]
pub fn full_support_pair(d: usize, rank_rho: usize, seed: u64) -> (DensityMatrix, DensityMatrix) {
    let rho = random_density(d, rank_rho, seed).unwrap();
    let raw = random_density(d, d, seed ^ 0x5bd1e995).unwrap();
    let mut m = raw.matrix().scale(0.9);
    m.add_assign_scaled(&CMatrix::identity(d), 0.1 / d as f64);
    let sigma = DensityMatrix::new(m.hermitize()).unwrap();
    (rho, sigma)
}
