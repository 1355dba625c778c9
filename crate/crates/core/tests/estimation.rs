mod common;

use approx::assert_abs_diff_eq;
use sparsezest::dantzig::{threshold_support, ScoreMode};
use sparsezest::diagnostics::{estimate_f_infinity, f_infinity_grid, royston_test, selection_and_errors, shapiro_wilk};
use sparsezest::procsim::{simulate_inar, InarSpec};
use sparsezest::scorelab::build_weighted_system;
use sparsezest::twostep::{
    estimate_linear_variance, two_step_fit, NuisanceEstimate, NuisanceMode, TwoStepOptions,
};
use sparsezest::{Design, Error, Matrix};

fn case_one_design(n: usize, seed: u64) -> Design {
    let spec = InarSpec::new(0.5, vec![0.3, 0.2, 0.2, 0.2, 0.0, 0.0]);
    Design::inar(&simulate_inar(&spec, n, seed).unwrap(), 6).unwrap()
}

#[test]
fn weighted_system_by_hand() {
    // rows (1, x), response r, weights 1 / (h0 + h1 x) with h = (1, 1)
    let x = [0.0, 1.0, 3.0];
    let r = [1.0, 2.0, 5.0];
    let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![1.0, v]).collect();
    let design = Design::regression(Matrix::from_rows(&rows).unwrap(), r.to_vec()).unwrap();
    let nu = NuisanceEstimate::inar(vec![1.0, 1.0], vec![0, 1]);
    let sys = build_weighted_system(&design, &[0, 1], &nu).unwrap();
    let w: Vec<f64> = x.iter().map(|v| 1.0 / (1.0 + v)).collect();
    let g00 = w.iter().sum::<f64>() / 3.0;
    let g01 = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / 3.0;
    let g11 = w.iter().zip(x).map(|(a, b)| a * b * b).sum::<f64>() / 3.0;
    let m0 = w.iter().zip(r).map(|(a, b)| a * b).sum::<f64>() / 3.0;
    let m1 = (0..3).map(|i| w[i] * x[i] * r[i]).sum::<f64>() / 3.0;
    assert_abs_diff_eq!(sys.gram_w[(0, 0)], g00, epsilon = 1e-14);
    assert_abs_diff_eq!(sys.gram_w[(0, 1)], g01, epsilon = 1e-14);
    assert_abs_diff_eq!(sys.gram_w[(1, 1)], g11, epsilon = 1e-14);
    assert_abs_diff_eq!(sys.moment_w[0], m0, epsilon = 1e-14);
    assert_abs_diff_eq!(sys.moment_w[1], m1, epsilon = 1e-14);
    assert_eq!(sys.weights_summary.floored, 0);
}

#[test]
fn noiseless_sparse_regression_is_recovered() {
    let rows: Vec<Vec<f64>> = (0..60)
        .map(|t| {
            let t = t as f64;
            vec![(0.3 * t).sin(), (0.7 * t).cos(), (1.1 * t).sin(), (0.13 * t).cos()]
        })
        .collect();
    let theta0 = [0.8, 0.0, -0.6, 0.0];
    let y: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().zip(&theta0).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let design = Design::regression(Matrix::from_rows(&rows).unwrap(), y).unwrap();
    let opts = TwoStepOptions::default();
    let fit = two_step_fit(&design, 0.01, 0.05, Some(&[2, 0]), &opts).unwrap();
    assert_eq!(fit.support.indices, vec![0, 2]);
    assert_eq!(fit.selection_flag, Some(true));
    for (a, b) in fit.theta_tilde.iter().zip(theta0) {
        assert_abs_diff_eq!(*a, b, epsilon = 1e-9);
    }
}

#[test]
fn centered_and_raw_pipelines_select_the_same_support() {
    let d = case_one_design(3000, 21);
    let raw = TwoStepOptions {
        mode: ScoreMode::Raw,
        ..Default::default()
    };
    let a = two_step_fit(&d, 0.3, 0.05, None, &TwoStepOptions::default()).unwrap();
    let b = two_step_fit(&d, 0.3, 0.05, None, &raw).unwrap();
    assert_eq!(a.support.indices, vec![0, 1, 2, 3, 4]);
    assert_eq!(a.support.indices, b.support.indices);
    // the second steps differ only through the first-step residuals that
    // feed the variance fit
    for (x, y) in a.theta_tilde.iter().zip(&b.theta_tilde) {
        assert_abs_diff_eq!(*x, *y, epsilon = 0.02);
    }
}

#[test]
fn poisson_nuisance_recovers_intensity_coefficients() {
    // for Poisson counts the conditional variance equals the conditional
    // mean, so h = theta
    let d = case_one_design(10_000, 4);
    let theta = vec![0.5, 0.3, 0.2, 0.2, 0.2, 0.0, 0.0];
    let h = estimate_linear_variance(&d, &[0, 1, 2, 3, 4], &theta).unwrap();
    let tol = [0.35, 0.1, 0.1, 0.1, 0.1];
    for j in 0..5 {
        assert!((h.values[j] - theta[j]).abs() < tol[j], "h[{j}] = {}", h.values[j]);
    }
    assert_eq!(h.values[5], 0.0);
}

#[test]
fn oracle_and_estimated_nuisance_agree() {
    let d = case_one_design(20_000, 12);
    let truth = NuisanceEstimate::inar(vec![0.5, 0.3, 0.2, 0.2, 0.2, 0.0, 0.0], vec![0, 1, 2, 3, 4]);
    let est = two_step_fit(&d, 0.2, 0.05, None, &TwoStepOptions::default()).unwrap();
    let oracle_opts = TwoStepOptions {
        nuisance: NuisanceMode::Oracle(truth),
        ..TwoStepOptions::default()
    };
    let ora = two_step_fit(&d, 0.2, 0.05, None, &oracle_opts).unwrap();
    assert_eq!(est.support.indices, ora.support.indices);
    for j in 1..5 {
        assert!((est.theta_tilde[j] - ora.theta_tilde[j]).abs() < 0.01);
    }
}

#[test]
fn empty_selection_keeps_intercept() {
    let d = case_one_design(500, 1);
    let fit = two_step_fit(&d, 1e6, 0.05, Some(&[0, 1, 2, 3, 4]), &TwoStepOptions::default()).unwrap();
    assert_eq!(fit.support.indices, vec![0]);
    assert_eq!(fit.selection_flag, Some(false));
    assert!(fit.theta_tilde[1..].iter().all(|&v| v == 0.0));
    let sel = threshold_support(&fit.first_step, 0.05);
    assert!(sel.is_empty());
}

#[test]
fn metrics_on_known_vectors() {
    let m = selection_and_errors(&[0.3, 0.25, 0.0, 0.04], &[0.3, 0.2, 0.0, 0.0], &[0, 1], &[1, 0]).unwrap();
    assert_abs_diff_eq!(m.linf, 0.05, epsilon = 1e-15);
    assert_abs_diff_eq!(m.l2, (0.05f64 * 0.05 + 0.04 * 0.04).sqrt(), epsilon = 1e-15);
    assert!(m.exact_support);
    assert!(matches!(
        selection_and_errors(&[0.0], &[0.0, 1.0], &[], &[]),
        Err(Error::Dimension { .. })
    ));
}

#[test]
fn shapiro_wilk_reference_values() {
    // scipy.stats.shapiro
    let r = shapiro_wilk(&[2.1, 3.4, 1.9, 5.6, 4.4, 3.0, 2.8, 7.1, 3.3, 4.0]).unwrap();
    let x: Vec<f64> = (1..=30).map(|i| f64::from(i).powf(1.5)).collect();
    let s = shapiro_wilk(&x).unwrap();
    assert_abs_diff_eq!(s.statistic, 0.9345615, epsilon = 1e-6);
    assert_abs_diff_eq!(s.p_value, 0.064977, epsilon = 1e-5);
    assert!(r.p_value > 0.0 && r.p_value <= 1.0);
}

#[test]
fn royston_reference_value() {
    // independent scipy implementation of the H statistic
    let rows = vec![
        [1.211470984808, -0.028844494296, 0.333333333333],
        [1.649297426826, -0.766798192579, 1.333333333333],
        [1.25112000806, 0.677977742713, 3.0],
        [-0.576802495308, 1.26939749035, 1.666666666667],
        [-0.408924274663, -0.102011902685, 1.0],
        [0.640584501801, -0.114265652027, 1.0],
        [1.946986598719, 0.786070296141, 1.666666666667],
        [1.349358246623, 0.611703992453, 3.0],
        [1.142118485242, -0.717930780414, 1.333333333333],
        [0.555978889111, 0.024836661948, 0.333333333333],
        [-0.829990206551, 1.388837342694, 0.0],
        [0.003427082, 0.520350843332, 0.333333333333],
        [1.330167036827, -0.394081530929, 1.333333333333],
        [2.270607355695, 0.235813020951, 3.0],
        [1.000287840157, 1.033315112064, 1.666666666667],
        [0.432096683335, -0.276318048215, 1.0],
        [0.12860250812, -0.510573195972, 1.0],
        [-0.590987246772, 1.085193835264, 1.666666666667],
        [0.679877209663, 1.134006289574, 3.0],
        [1.812945250728, -0.248570274785, 1.333333333333],
        [2.106655638536, -0.415339073716, 0.333333333333],
        [0.33114869071, 1.055598580613, 0.0],
        [-0.136220404175, 0.369091841979, 0.333333333333],
        [0.174421637993, -0.699171686351, 1.333333333333],
        [0.017648249902, 0.488383699306, 3.0],
        [1.28255845048, 1.476396180269, 1.666666666667],
        [1.846375928405, 0.260009756536, 1.0],
        [1.530905788308, -0.8887844383, 1.0],
        [-0.333633884213, 0.669020206445, 1.666666666667],
        [-0.288031624093, 0.942154196814, 3.0],
    ];
    let m = Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap();
    let r = royston_test(&m).unwrap();
    assert_abs_diff_eq!(r.statistic, 10.797205639186082, epsilon = 1e-4);
    assert_abs_diff_eq!(r.p_value, 0.012609092313847452, epsilon = 1e-5);
}

#[test]
fn royston_rejects_degenerate_columns() {
    let m = Matrix::from_rows(&(0..10).map(|i| vec![f64::from(i), 2.0 * f64::from(i)]).collect::<Vec<_>>()).unwrap();
    assert!(matches!(royston_test(&m), Err(Error::DegenerateVariance(_))));
    let c = Matrix::from_rows(&(0..10).map(|i| vec![f64::from(i).sin(), 1.0]).collect::<Vec<_>>()).unwrap();
    assert!(royston_test(&c).is_err());
}

#[test]
fn compatibility_factor_of_identity() {
    // M = I, T = {0}: the cone has |v_1| <= |v_0| and the ratio is
    // (v_0^2 + v_1^2) / v_0^2, smallest at v_1 = 0
    let m = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let grid = f_infinity_grid(&m, &[0], 400).unwrap();
    assert_abs_diff_eq!(grid.value, 1.0, epsilon = 1e-4);
    let est = estimate_f_infinity(&m, &[0], 2000, 3).unwrap();
    assert!(est.value >= 1.0 - 1e-12 && est.value < 1.01);
}

#[test]
fn compatibility_factor_sampling_properties() {
    let m = Matrix::from_rows(&[
        vec![1.0, 0.4, 0.1],
        vec![0.4, 1.0, 0.3],
        vec![0.1, 0.3, 1.0],
    ])
    .unwrap();
    let few = estimate_f_infinity(&m, &[0, 1], 200, 9).unwrap();
    let many = estimate_f_infinity(&m, &[0, 1], 5000, 9).unwrap();
    assert!(many.value <= few.value);
    let scaled = estimate_f_infinity(&m.scale(3.0), &[0, 1], 5000, 9).unwrap();
    assert_abs_diff_eq!(scaled.value, 3.0 * many.value, epsilon = 1e-9);
    let grid = f_infinity_grid(&m, &[0, 1], 60).unwrap();
    // both are feasible-point evaluations of the same infimum
    assert!((many.value - grid.value).abs() < 0.05 * grid.value.max(1e-3) + 0.02);
}
