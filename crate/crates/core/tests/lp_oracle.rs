mod common;

use proptest::prelude::*;
use sparsezest::dantzig::simplex::{solve_lp, LpStatus, PivotRule, SimplexOptions};
use sparsezest::dantzig::{solve_dantzig, solve_dantzig_with, DantzigOptions, DantzigStatus};
use sparsezest::scorelab::ModelTag;
use sparsezest::{LinearScoreSystem, LinearScoreSystem32, Matrix, Matrix32};

fn system(a: &[Vec<f64>], b: &[f64]) -> LinearScoreSystem {
    LinearScoreSystem::new(Matrix::from_rows(a).unwrap(), b.to_vec(), 1, ModelTag::Regression).unwrap()
}

#[test]
fn identity_gram_soft_thresholds() {
    // with A = I the program separates: theta_j = sign(b_j)(|b_j| - lambda)_+
    let b = [1.0, -0.3, 0.05, -2.0];
    let a: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let fit = solve_dantzig(&system(&a, &b), 0.25).unwrap();
    let expect = [0.75, -0.05, 0.0, -1.75];
    for (x, e) in fit.theta_hat.iter().zip(expect) {
        assert!((x - e).abs() < 1e-12, "{x} vs {e}");
    }
    assert!((fit.l1_objective - 2.55).abs() < 1e-12);
}

#[test]
fn lambda_above_score_gives_zero() {
    let a = vec![vec![2.0, 0.5], vec![0.5, 1.0]];
    let fit = solve_dantzig(&system(&a, &[0.4, -0.2]), 0.4).unwrap();
    assert_eq!(fit.theta_hat, vec![0.0, 0.0]);
    assert!(fit.feasibility_slack >= 0.0);
}

#[test]
fn singular_gram_with_unreachable_score_is_infeasible() {
    // A theta has equal coordinates, b does not: no theta within lambda
    let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
    let fit = solve_dantzig(&system(&a, &[1.0, -1.0]), 0.1).unwrap();
    assert_eq!(fit.status, DantzigStatus::Infeasible);
    assert!(fit.into_optimal().is_err());
}

#[test]
fn pivot_rules_agree_with_oracle() {
    let mut rng = common::rng(77);
    for k in 0..40 {
        let p = 1 + k % 4;
        let (a, b, lambda) = common::random_instance(&mut rng, p);
        let oracle = common::brute_force_dantzig(&a, &b, lambda).unwrap();
        for rule in [PivotRule::Bland, PivotRule::Dantzig] {
            let opts = DantzigOptions {
                rule,
                ..DantzigOptions::default()
            };
            let fit = solve_dantzig_with(&system(&a, &b), lambda, &opts).unwrap();
            assert_eq!(fit.status, DantzigStatus::Optimal);
            assert!((fit.l1_objective - oracle).abs() < 1e-8, "{rule:?}: {} vs {oracle}", fit.l1_objective);
        }
    }
}

#[test]
fn single_precision_matches_double() {
    let a = vec![vec![2.0, 0.3, 0.1], vec![0.3, 1.5, -0.2], vec![0.1, -0.2, 1.0]];
    let b = vec![1.2, -0.4, 0.3];
    let lambda = 0.2;
    let oracle = common::brute_force_dantzig(&a, &b, lambda).unwrap();
    let rows32: Vec<Vec<f32>> = a.iter().map(|r| r.iter().map(|&x| x as f32).collect()).collect();
    let sys32 = LinearScoreSystem32::new(
        Matrix32::from_rows(&rows32).unwrap(),
        b.iter().map(|&x| x as f32).collect(),
        1,
        ModelTag::Regression,
    )
    .unwrap();
    let fit = solve_dantzig(&sys32, lambda as f32).unwrap();
    assert_eq!(fit.status, DantzigStatus::Optimal);
    assert!((f64::from(fit.l1_objective) - oracle).abs() < 1e-4);
}

#[test]
fn textbook_lp() {
    // max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), value 36
    let g = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]]).unwrap();
    let sol = solve_lp(&[-3.0, -5.0], &g, &[4.0, 12.0, 18.0], &SimplexOptions::default()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.objective + 36.0).abs() < 1e-12);
    assert!((sol.x[0] - 2.0).abs() < 1e-12 && (sol.x[1] - 6.0).abs() < 1e-12);
}

#[test]
fn unbounded_and_infeasible_lps() {
    let g = Matrix::from_rows(&[vec![1.0, -1.0]]).unwrap();
    let sol = solve_lp(&[-1.0, 0.0], &g, &[1.0], &SimplexOptions::default()).unwrap();
    assert_eq!(sol.status, LpStatus::Unbounded);
    // x >= 2 and x <= 1
    let g = Matrix::from_rows(&[vec![-1.0], vec![1.0]]).unwrap();
    let sol = solve_lp(&[1.0], &g, &[-2.0, 1.0], &SimplexOptions::default()).unwrap();
    assert_eq!(sol.status, LpStatus::Infeasible);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_programs_match_vertex_enumeration(seed in any::<u64>(), p in 1usize..=4) {
        let mut rng = common::rng(seed);
        let (a, b, lambda) = common::random_instance(&mut rng, p);
        let oracle = common::brute_force_dantzig(&a, &b, lambda).unwrap();
        let fit = solve_dantzig(&system(&a, &b), lambda).unwrap();
        prop_assert_eq!(fit.status, DantzigStatus::Optimal);
        prop_assert!((fit.l1_objective - oracle).abs() < 1e-6);
        prop_assert!(fit.feasibility_slack >= -1e-8);
    }

    #[test]
    fn objective_is_nonincreasing_in_lambda(seed in any::<u64>(), p in 1usize..=5) {
        let mut rng = common::rng(seed);
        let (a, b, lambda) = common::random_instance(&mut rng, p);
        let sys = system(&a, &b);
        let lo = solve_dantzig(&sys, lambda).unwrap();
        let hi = solve_dantzig(&sys, 1.5 * lambda).unwrap();
        prop_assert!(hi.l1_objective <= lo.l1_objective + 1e-9);
    }
}
