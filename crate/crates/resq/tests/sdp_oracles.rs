//! Solver-versus-oracle agreement on random ensembles. The oracles live in
//! `common` and share no code with the barrier solvers.

mod common;

use resq::sdpcore::{solve_relative_dual, solve_robustness_coherence};
use resq::states::random_density;

#[test]
fn robustness_solver_agrees_with_bisection_oracle() {
    let mut checked = 0;
    for i in 0..200u64 {
        let d = 2 + (i % 3) as usize;
        let rank = 1 + (i as usize % d);
        let rho = random_density(d, rank, 9_000 + i).unwrap();
        let solver = solve_robustness_coherence(&rho).unwrap().optimal_value;
        let oracle = common::oracle_robustness(&rho);
        assert!(
            (solver - oracle).abs() <= 1e-5,
            "case {i} (d={d}, rank={rank}): solver {solver} oracle {oracle}"
        );
        checked += 1;
    }
    assert_eq!(checked, 200);
}

#[test]
fn relative_solver_agrees_with_eigenvalue_oracle() {
    let mut checked = 0;
    for i in 0..200u64 {
        let d = 2 + (i % 3) as usize;
        let (rho, sigma) = common::full_support_pair(d, 1 + (i as usize % d), 21_000 + i);
        let solver = solve_relative_dual(&rho, &sigma).unwrap().optimal_value;
        let oracle = common::oracle_relative(&rho, &sigma);
        assert!(
            (solver - oracle).abs() <= 1e-6,
            "case {i} (d={d}): solver {solver} oracle {oracle}"
        );
        checked += 1;
    }
    assert_eq!(checked, 200);
}

#[test]
fn the_two_relative_oracle_routes_agree() {
    for i in 0..20u64 {
        let d = 2 + (i % 3) as usize;
        let rho = random_density(d, d, 31_000 + i).unwrap();
        let sigma = random_density(d, d, 32_000 + i).unwrap();
        let a = common::oracle_relative(&rho, &sigma);
        let b = common::oracle_relative_bisect(&rho, &sigma);
        assert!((a - b).abs() < 1e-9, "eig route {a} vs bisection route {b}");
    }
}
