//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line with its residuals and wall time. Criteria compare independent
//! routes (closed forms, oracles, constructed strategies) at fixed
//! tolerances on seeded random ensembles.

mod common;

use std::time::Instant;

use resq::discrimination::{
    corollary4_check, infinite_ratio_strategy, is_perfect_strategy, omega_sigma_strategy,
    ratio_sweep, succ_probability, theorem7_check, ResourceTheory, Strategy,
};
use resq::measures::{
    alpha_superiority, alpha_superiority_direct, axiom_suite, coherence_deficiency,
    entanglement_deficiency, AxiomKind, MeasureTag,
};
use resq::qmath::CMatrix;
use resq::sdpcore::{solve_relative_dual, solve_robustness_coherence, SdpError};
use resq::states::{random_density, random_pure, schmidt, DensityMatrix};

fn verdict(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

/// Criterion 1: the α-superiority closed form matches the direct
/// bisection/minimization route within 1e−4 on random states.
#[test]
fn c1_theorem2_identity() {
    let t0 = Instant::now();
    let mut cases = 0usize;
    let mut max_residual = 0.0_f64;
    for d in [2usize, 3] {
        for i in 0..100u64 {
            let rank = 1 + (i as usize % d);
            let rho = random_density(d, rank, 100_000 + 1000 * d as u64 + i).unwrap();
            for (k, alpha) in [0.0, 0.2, 0.8].into_iter().enumerate() {
                let closed = alpha_superiority(&rho, alpha).unwrap().value;
                let direct = alpha_superiority_direct(&rho, alpha, i * 10 + k as u64)
                    .unwrap()
                    .value;
                max_residual = max_residual.max((closed - direct).abs());
                cases += 1;
            }
        }
    }
    let pass = max_residual <= 1e-4;
    verdict(
        "1 (theorem-2 identity)",
        pass,
        &format!(
            "{cases} cases, max |closed − direct| = {max_residual:.3e} (tol 1e-4), {:.1} s",
            t0.elapsed().as_secs_f64()
        ),
    );
}

/// Criterion 2: the relative-robustness solver agrees with the
/// λ_max(σ^{−1/2}ρσ^{−1/2}) oracle within 1e−6 on 200 full-support pairs.
#[test]
fn c2_relative_robustness_oracle() {
    let t0 = Instant::now();
    let mut max_residual = 0.0_f64;
    for i in 0..200u64 {
        let d = 2 + (i % 3) as usize;
        let (rho, sigma) = common::full_support_pair(d, 1 + (i as usize % d), 40_000 + i);
        let solver = solve_relative_dual(&rho, &sigma).unwrap().optimal_value;
        let oracle = common::oracle_relative(&rho, &sigma);
        max_residual = max_residual.max((solver - oracle).abs());
    }
    let pass = max_residual <= 1e-6;
    verdict(
        "2 (relative-robustness oracle)",
        pass,
        &format!(
            "200 pairs, max |solver − oracle| = {max_residual:.3e} (tol 1e-6), {:.1} s",
            t0.elapsed().as_secs_f64()
        ),
    );
}

/// Criterion 3: the twirl strategy attains 1 + R⁺ within 1e−5 and 500
/// random strategies per pair never exceed it by more than 1e−6.
#[test]
fn c3_lemma3_optimal_ratio() {
    let t0 = Instant::now();
    let mut worst_attain = 0.0_f64;
    let mut worst_excess = 0.0_f64;
    for p in 0..50u64 {
        let d = 2 + (p % 2) as usize;
        let rho = random_density(d, 1 + (p as usize % d), 50_000 + p).unwrap();
        let sigma = random_density(d, d, 51_000 + p).unwrap();
        let report = ratio_sweep(&rho, &sigma, 500, 52_000 + p).unwrap();
        for case in &report.cases {
            match case.case_id.as_str() {
                "lemma3-attained" => worst_attain = worst_attain.max(case.residual),
                "lemma3-upper-bound" => worst_excess = worst_excess.max(case.residual),
                _ => {}
            }
        }
    }
    let pass = worst_attain <= 1e-5 && worst_excess <= 1e-6;
    verdict(
        "3 (lemma-3 optimal ratio)",
        pass,
        &format!(
            "50 pairs x 500 strategies: construction off by {worst_attain:.3e} (tol 1e-5), \
             max bound excess {worst_excess:.3e} (tol 1e-6), {:.1} s",
            t0.elapsed().as_secs_f64()
        ),
    );
}

/// Criterion 4: the min-max ratio over the α-bounded set equals
/// max{(1 + R_r)/(1 + α), 1} within 1e−4 on random qubits.
#[test]
fn c4_corollary4_minmax() {
    let t0 = Instant::now();
    let mut max_residual = 0.0_f64;
    for i in 0..30u64 {
        let rho = random_density(2, 1 + (i as usize % 2), 60_000 + i).unwrap();
        for alpha in [0.0, 0.5] {
            let report = corollary4_check(&rho, alpha, 8, 61_000 + i).unwrap();
            for case in &report.cases {
                max_residual = max_residual.max(case.residual);
            }
        }
    }
    let pass = max_residual <= 1e-4;
    verdict(
        "4 (corollary-4 min-max ratio)",
        pass,
        &format!(
            "30 qubits x alpha in {{0, 0.5}}, max residual = {max_residual:.3e} (tol 1e-4), {:.1} s",
            t0.elapsed().as_secs_f64()
        ),
    );
}

/// Criterion 5: pure-state closed forms — coherence deficiency equals
/// 1 − Σ|ρ_ij|/d and entanglement deficiency equals 1 − (Σqᵢ)²/d, both
/// within 1e−8.
#[test]
fn c5_pure_state_closed_forms() {
    let t0 = Instant::now();
    let mut max_coh = 0.0_f64;
    for i in 0..100u64 {
        let d = 2 + (i % 3) as usize;
        let rho = random_pure(d, 70_000 + i).to_density();
        let mut sum = 0.0;
        for a in 0..d {
            for b in 0..d {
                sum += rho.entry(a, b).norm();
            }
        }
        let closed = 1.0 - sum / d as f64;
        let computed = coherence_deficiency(&rho).unwrap().value;
        max_coh = max_coh.max((closed - computed).abs());
    }

    let mut max_ent = 0.0_f64;
    for i in 0..100u64 {
        let d = if i < 50 { 2 } else { 3 };
        let psi = random_pure(d * d, 71_000 + i);
        let q = schmidt(&psi, (d, d)).unwrap().coefficients;
        let closed = 1.0 - q.iter().sum::<f64>().powi(2) / d as f64;
        let computed = entanglement_deficiency(&psi.to_density(), (d, d))
            .unwrap()
            .value;
        max_ent = max_ent.max((closed - computed).abs());
    }
    let pass = max_coh <= 1e-8 && max_ent <= 1e-8;
    verdict(
        "5 (pure-state closed forms)",
        pass,
        &format!(
            "100+100 pure states: coherence residual {max_coh:.3e}, entanglement residual \
             {max_ent:.3e} (tol 1e-8), {:.1} s",
            t0.elapsed().as_secs_f64()
        ),
    );
}

/// Criterion 6: zero axiom violations at slack 1e−6 across 200 trials per
/// measure (faithfulness, convexity/concavity, selective monotonicity
/// under 200 sampled incoherent resp. local channels).
#[test]
fn c6_axiom_suites() {
    let t0 = Instant::now();
    let reports = [
        axiom_suite(MeasureTag::Robustness { d: 3 }, AxiomKind::Resource, 200, 801).unwrap(),
        axiom_suite(
            MeasureTag::AlphaSuperiority { d: 3, alpha: 0.4 },
            AxiomKind::Resource,
            200,
            802,
        )
        .unwrap(),
        axiom_suite(
            MeasureTag::CoherenceDeficiency { d: 3 },
            AxiomKind::Deficiency,
            200,
            803,
        )
        .unwrap(),
        axiom_suite(
            MeasureTag::EntanglementDeficiency { d_local: 2 },
            AxiomKind::Deficiency,
            200,
            804,
        )
        .unwrap(),
    ];
    let mut detail = String::new();
    let mut violations = 0usize;
    for r in &reports {
        violations += r.summary.failed;
        detail.push_str(&format!(
            "{}: {}/{} ok (max residual {:.2e}); ",
            r.scenario, r.summary.passed, r.summary.total, r.summary.max_residual
        ));
    }
    detail.push_str(&format!("{:.1} s", t0.elapsed().as_secs_f64()));
    verdict("6 (axiom suites)", violations == 0, &detail);
}

/// Criterion 7: the perfect-strategy predicate and P_succ = 1 agree in
/// both directions on constructed and perturbed strategies.
#[test]
fn c7_fact8_biconditional() {
    let t0 = Instant::now();
    let d = 3;
    let mut checked = 0usize;
    let mut agree = true;
    for i in 0..100u64 {
        let sigma = random_pure(d, 80_000 + i);
        let sigma_rho = sigma.to_density();
        let probs = vec![1.0 / d as f64; d];
        let strat = omega_sigma_strategy(&sigma, &probs, 81_000 + i).unwrap();

        // constructed: perfect, with unit success probability
        let p = succ_probability(&strat, &sigma_rho).unwrap().p_succ;
        let perfect = is_perfect_strategy(&strat, &sigma_rho).unwrap();
        agree &= perfect && (p - 1.0).abs() <= 1e-8;
        checked += 1;

        // perturbed: one measurement shrunk below its branch support
        let mut povm = strat.povm().to_vec();
        let eps = 0.05 + 0.4 * ((i % 7) as f64 / 7.0);
        let diff = povm[0].scale(eps);
        povm[0] = povm[0].scale(1.0 - eps);
        povm[1] = (&povm[1] + &diff).hermitize();
        let perturbed = Strategy::new(strat.subchannels().to_vec(), povm).unwrap();
        let p2 = succ_probability(&perturbed, &sigma_rho).unwrap().p_succ;
        let perfect2 = is_perfect_strategy(&perturbed, &sigma_rho).unwrap();
        agree &= !perfect2 && p2 < 1.0 - 1e-8;
        checked += 1;
    }
    verdict(
        "7 (fact-8 biconditional)",
        agree && checked == 200,
        &format!(
            "{checked} constructed-and-perturbed strategies, predicate == (P_succ = 1) \
             in both directions, {:.1} s",
            t0.elapsed().as_secs_f64()
        ),
    );
}

/// Criterion 8: the max-min success probability over perfect strategies
/// equals 1 − D_g within 1e−4 for both theories.
#[test]
fn c8_theorem7_disadvantage() {
    let t0 = Instant::now();
    let mut max_residual = 0.0_f64;
    let mut cases = 0usize;
    for i in 0..50u64 {
        let d = if i < 25 { 2 } else { 3 };
        let rho = random_density(d, 1 + (i as usize % d), 90_000 + i).unwrap();
        let report = theorem7_check(&rho, ResourceTheory::Coherence, 91_000 + i).unwrap();
        assert!(
            report.all_passed(),
            "coherence case {i}: {:?}",
            report.failures().next().map(|c| (&c.case_id, c.residual))
        );
        max_residual = max_residual.max(report.summary.max_residual);
        cases += 1;
    }
    for i in 0..50u64 {
        let rho = random_density(4, 1 + (i as usize % 4), 92_000 + i).unwrap();
        let report = theorem7_check(&rho, ResourceTheory::Entanglement { d_local: 2 }, 93_000 + i)
            .unwrap();
        assert!(
            report.all_passed(),
            "entanglement case {i}: {:?}",
            report.failures().next().map(|c| (&c.case_id, c.residual))
        );
        max_residual = max_residual.max(report.summary.max_residual);
        cases += 1;
    }
    verdict(
        "8 (theorem-7 max-min equality)",
        cases == 100,
        &format!(
            "100 states (coherence d=2,3; entanglement 2x2), max residual = {max_residual:.3e} \
             (tol 1e-4), {:.1} s",
            t0.elapsed().as_secs_f64()
        ),
    );
}

/// Criterion 9: support-mismatched pairs trigger the unbounded-program
/// signal and admit an explicit strategy with P_succ(σ) ≤ 1e−10 and
/// P_succ(ρ) > 0.
#[test]
fn c9_infinite_branch() {
    let t0 = Instant::now();
    let mut ok = true;
    for i in 0..50u64 {
        let d = 2 + (i % 3) as usize;
        let rank = 1 + (i as usize % (d - 1)); // strictly rank deficient
        let rho = random_density(d, d, 95_000 + i).unwrap();
        let sigma = random_density(d, rank, 96_000 + i).unwrap();

        let unbounded = matches!(
            solve_relative_dual(&rho, &sigma),
            Err(SdpError::UnboundedProgram { .. })
        );
        let strat = infinite_ratio_strategy(&rho, &sigma).unwrap();
        let p_sigma = succ_probability(&strat, &sigma).unwrap().p_succ;
        let p_rho = succ_probability(&strat, &rho).unwrap().p_succ;
        ok &= unbounded && p_sigma <= 1e-10 && p_rho > 0.0;
        if !ok {
            println!("case {i}: unbounded={unbounded} p_sigma={p_sigma:.3e} p_rho={p_rho:.3e}");
            break;
        }
    }
    verdict(
        "9 (infinite branch)",
        ok,
        &format!(
            "50 support-mismatched pairs: unbounded signal + explicit strategy with \
             P(sigma) <= 1e-10 < P(rho), {:.1} s",
            t0.elapsed().as_secs_f64()
        ),
    );
}

/// Spot-check of CaseRecord JSON from a campaign (consumed by the CLI).
#[test]
fn scenario_reports_serialize() {
    let rho = random_density(2, 2, 42).unwrap();
    let report = theorem7_check(&rho, ResourceTheory::Coherence, 7).unwrap();
    let text = serde_json::to_string(&report).unwrap();
    assert!(text.contains("theorem7-equality"));
    let _m: CMatrix;
    let back: resq::report::ScenarioReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back.cases.len(), report.cases.len());
    // keep the DensityMatrix wire format stable too
    let state_text = serde_json::to_string(&rho).unwrap();
    let parsed: DensityMatrix = serde_json::from_str(&state_text).unwrap();
    assert!((parsed.matrix() - rho.matrix()).frob_norm() < 1e-12);
}
