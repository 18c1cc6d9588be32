use approx::assert_abs_diff_eq;
use porous_convection::par::Execution;
use porous_convection::similarity::{
    far_field_miss, integrate_profile, ode_rhs, reconstruct_fields, shoot, shoot_all, PhysicalConstants,
    ShootingConfig, SimilarityCase, SimilarityProblem,
};

/// Frozen from `oracles/shooting_oracle.out`.
const GOLDEN_TEMP_THIRD: f64 = -0.677647992643510;
const GOLDEN_FLUX_ZERO: f64 = 0.898718084913878;

fn cfg() -> ShootingConfig {
    ShootingConfig::default()
}

#[test]
fn golden_temperature_third() {
    let p = shoot(&SimilarityProblem::temperature(1.0 / 3.0, 0.0), &cfg()).unwrap();
    assert_abs_diff_eq!(p.shot_parameter, GOLDEN_TEMP_THIRD, epsilon = 1e-8);
    assert!(p.residual <= 1e-8);
}

#[test]
fn golden_flux_zero() {
    let p = shoot(&SimilarityProblem::flux(0.0, 0.0), &cfg()).unwrap();
    assert_abs_diff_eq!(p.shot_parameter, GOLDEN_FLUX_ZERO, epsilon = 1e-8);
}

#[test]
fn suction_closed_form() {
    // m = 1: f = k − e^{−kt}/k with k² + γk − 1 = 0. The truncation forces
    // f'(t_max) = 0 against the true e^{−k t_max}, so t_max must make that negligible.
    let gamma = 0.5;
    let k = (-gamma + (gamma * gamma + 4.0_f64).sqrt()) / 2.0;
    let p = shoot(&SimilarityProblem::temperature(1.0, gamma).with_t_max(40.0), &cfg()).unwrap();
    assert_abs_diff_eq!(p.shot_parameter, -k, epsilon = 1e-10);
    for (t, f) in p.t.iter().zip(&p.f).step_by(1000) {
        assert_abs_diff_eq!(*f, k - (-k * t).exp() / k, epsilon = 1e-7);
    }
}

#[test]
fn moving_wall_blasius_variant() {
    // f''' + f f'' = 0, f(0) = 0, f'(0) = 1, f'(∞) = 0: the continuous-surface
    // value −0.44375 of f''' + ½ f f'' = 0, rescaled by √2.
    let problem = SimilarityProblem::blasius();
    let p = shoot(&problem, &ShootingConfig { bracket: (-2.0, 0.0), ..cfg() }).unwrap();
    assert_abs_diff_eq!(p.shot_parameter, -0.44375 * 2f64.sqrt(), epsilon = 2e-4);
}

#[test]
fn boundary_conditions_hold() {
    for problem in [SimilarityProblem::temperature(1.0 / 3.0, 0.0), SimilarityProblem::temperature(0.5, 0.0)] {
        let p = shoot(&problem, &cfg()).unwrap();
        assert_eq!(p.f[0], -problem.gamma);
        assert_eq!(p.fp[0], 1.0);
        assert!(p.fp.last().unwrap().abs() <= problem.far_field_tol);
    }
    let p = shoot(&SimilarityProblem::flux(0.0, 0.0), &cfg()).unwrap();
    assert_eq!((p.f[0], p.fpp[0]), (0.0, -1.0));
}

/// Sup-norm of `f''' + a f f'' − b f'²` with `f'''` from central differences of `f''`.
fn ode_residual(step: f64) -> f64 {
    let mut problem = SimilarityProblem::temperature(1.0 / 3.0, 0.0).with_t_max(4.0);
    problem.step = step;
    let p = integrate_profile(&problem, problem.initial_state(GOLDEN_TEMP_THIRD));
    let (a, b) = problem.coefficients();
    (1..p.t.len() - 1)
        .map(|k| {
            let fppp = (p.fpp[k + 1] - p.fpp[k - 1]) / (p.t[k + 1] - p.t[k - 1]);
            (fppp + a * p.f[k] * p.fpp[k] - b * p.fp[k] * p.fp[k]).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn ode_residual_shrinks_at_second_order() {
    let (r1, r2) = (ode_residual(4e-3), ode_residual(2e-3));
    let rate = r1 / r2;
    assert!((3.5..4.5).contains(&rate), "{r1:e} {r2:e}");
}

#[test]
fn rhs_matches_equation() {
    let problem = SimilarityProblem::flux(0.5, 0.0);
    let (a, b) = problem.coefficients();
    assert_eq!((a, b), (2.5, 2.0));
    let y = [0.3, -0.2, 0.7];
    assert_eq!(ode_rhs(&problem, y), [-0.2, 0.7, -a * 0.3 * 0.7 + b * 0.04]);
}

#[test]
fn miss_is_monotone_across_the_bracket() {
    let problem = SimilarityProblem::temperature(1.0 / 3.0, 0.0);
    let (lo, hi) = (GOLDEN_TEMP_THIRD - 5e-3, GOLDEN_TEMP_THIRD + 5e-3);
    let misses: Vec<f64> = (0..10).map(|k| far_field_miss(&problem, lo + (hi - lo) * k as f64 / 9.0)).collect();
    assert!(misses.windows(2).all(|w| w[1] >= w[0]) || misses.windows(2).all(|w| w[1] <= w[0]), "{misses:?}");
}

#[test]
fn truncation_shift_is_small() {
    let a = shoot(&SimilarityProblem::flux(0.0, 0.0), &cfg()).unwrap().shot_parameter;
    let b = shoot(&SimilarityProblem::flux(0.0, 0.0).with_t_max(40.0), &cfg()).unwrap().shot_parameter;
    assert!((a - b).abs() <= 1e-6, "{a} {b}");
}

#[test]
fn sweep_mode_agrees_with_single_shot_and_execution_modes() {
    let problem = SimilarityProblem::temperature(1.0, 0.0);
    let par = shoot_all(&problem, &ShootingConfig { bracket: (-3.0, 1.0), ..cfg() }).unwrap();
    let seq = shoot_all(
        &problem,
        &ShootingConfig {
            bracket: (-3.0, 1.0),
            execution: Execution::Sequential,
            ..cfg()
        },
    )
    .unwrap();
    assert_eq!(par, seq);
    assert!(par.iter().any(|p| (p.shot_parameter + 1.0).abs() < 1e-8));
}

#[test]
fn reconstruction_composes_with_closed_form() {
    let p = shoot(&SimilarityProblem::temperature(1.0, 0.0), &cfg()).unwrap();
    let c = PhysicalConstants::unit();
    let (psi, t) = reconstruct_fields(&p, SimilarityCase::Temperature, &c, 1.0, &[(1.0, 1.0), (2.0, 0.0), (1.0, 50.0)]).unwrap();
    assert_abs_diff_eq!(psi[0], 1.0 - (-1.0f64).exp(), epsilon = 1e-9);
    assert_abs_diff_eq!(t[1], 2.0, epsilon = 1e-12);
    assert_eq!(t[2], 0.0);
}

#[test]
fn csv_export_round_trips() {
    let p = shoot(&SimilarityProblem::temperature(1.0, 0.0), &cfg()).unwrap();
    let mut buf = Vec::new();
    p.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,f,fp,fpp"));
    for (k, line) in lines.enumerate().step_by(997) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(v, vec![p.t[k], p.f[k], p.fp[k], p.fpp[k]]);
    }
}
