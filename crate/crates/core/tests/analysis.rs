//! Property tests for the estimate machinery.

mod common;

use porous_convection::analysis::{
    poincare_constant, random_smooth_field, trilinear_a, trilinear_a_skew, EstimateContext, PoincareMode, Vanish,
};
use porous_convection::coupled::{solve_coupled_with, SolveOptions};
use porous_convection::elliptic::LinearSettings;
use porous_convection::grid::{h1_seminorm, l2_norm, linf_norm, BoundaryPartition, Edge, Grid};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grid() -> Grid {
    Grid::new(1.4, 1.0, 21, 15).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn skew_form_vanishes_on_the_diagonal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = grid();
        let u = random_smooth_field(&g, Vanish::Nowhere, &mut rng);
        let w = random_smooth_field(&g, Vanish::Nowhere, &mut rng);
        prop_assert_eq!(trilinear_a_skew(&u, &u, &w).unwrap(), 0.0);
    }

    #[test]
    fn skew_form_is_antisymmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = grid();
        let [u, v, w] = [(); 3].map(|_| random_smooth_field(&g, Vanish::Nowhere, &mut rng));
        prop_assert_eq!(trilinear_a_skew(&u, &v, &w).unwrap(), -trilinear_a_skew(&v, &u, &w).unwrap());
    }

    #[test]
    fn trilinear_bound(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = grid();
        let [u, v, w] = [(); 3].map(|_| random_smooth_field(&g, Vanish::Nowhere, &mut rng));
        let a = trilinear_a(&u, &v, &w).unwrap().abs();
        prop_assert!(a <= linf_norm(&u) * h1_seminorm(&v) * h1_seminorm(&w));
    }

    #[test]
    fn trilinear_is_linear_in_first_slot(seed in any::<u64>(), s in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = grid();
        let [u, v, w] = [(); 3].map(|_| random_smooth_field(&g, Vanish::Nowhere, &mut rng));
        let scaled = u.map(|x| s * x);
        let lhs = trilinear_a(&scaled, &v, &w).unwrap();
        let rhs = s * trilinear_a(&u, &v, &w).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn poincare_inequality_on_random_fields(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Grid::unit_square(24).unwrap();
        let bp = common::random_partition(&mut rng);
        let ctx = EstimateContext::compute(&g, &bp, LinearSettings::default()).unwrap();
        prop_assert!(ctx.c_dirichlet <= ctx.c_mixed * (1.0 + 1e-9));
        let u = random_smooth_field(&g, Vanish::Boundary, &mut rng);
        prop_assert!(l2_norm(&u) <= ctx.c_dirichlet * h1_seminorm(&u) * 1.02);
        let u = random_smooth_field(&g, Vanish::Gamma1(bp), &mut rng);
        prop_assert!(l2_norm(&u) <= ctx.c_mixed * h1_seminorm(&u) * 1.02);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Converged temperatures stay within the wall range; the bounds hold
    /// whenever their precondition does.
    #[test]
    fn solve_checks_hold_under_smallness(seed in any::<u64>(), target in 0.05f64..0.45) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = common::random_case(&mut rng, 16, target, f64::INFINITY);
        let report = solve_coupled_with(
            &case.params, &case.grid, &case.partition, &case.solver,
            SolveOptions { initial_h: None, estimates: Some(case.estimates) },
        ).unwrap();
        prop_assert!(report.converged);
        for c in &report.checks {
            prop_assert!(c.ok(), "{:?}", c);
        }
        let (lo, hi) = case.trace.boundary_min_max();
        let (tmin, tmax) = report.t.min_max();
        prop_assert!(tmin >= lo - 1e-9 && tmax <= hi + 1e-9);
    }
}

#[test]
fn poincare_constants_scale_with_the_domain() {
    // λ₁ ∝ 1/L² on a similar domain, so C ∝ L.
    let s = LinearSettings::default();
    let bp = BoundaryPartition::new(&[Edge::Bottom]).unwrap();
    let c1 = poincare_constant(&Grid::new(1.0, 0.5, 32, 16).unwrap(), &bp, PoincareMode::Mixed, s).unwrap();
    let c3 = poincare_constant(&Grid::new(3.0, 1.5, 32, 16).unwrap(), &bp, PoincareMode::Mixed, s).unwrap();
    assert!((c3 / c1 - 3.0).abs() < 1e-9, "{}", c3 / c1);
}

#[test]
fn poincare_inequality_for_a_hundred_fields() {
    let g = Grid::new(1.0, 0.6, 30, 18).unwrap();
    let bp = BoundaryPartition::new(&[Edge::Top, Edge::Left]).unwrap();
    let ctx = EstimateContext::compute(&g, &bp, LinearSettings::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..100 {
        let u = random_smooth_field(&g, Vanish::Boundary, &mut rng);
        assert!(l2_norm(&u) <= ctx.c_dirichlet * h1_seminorm(&u) * 1.02);
        let u = random_smooth_field(&g, Vanish::Gamma1(bp), &mut rng);
        assert!(l2_norm(&u) <= ctx.c_mixed * h1_seminorm(&u) * 1.02);
    }
}
