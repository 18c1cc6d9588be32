//! Seeded random coupled problems shared by the integration tests.
#![allow(dead_code)]

use porous_convection::analysis::{smallness_report, EstimateContext};
use porous_convection::coupled::{PhysicsParams, SolverConfig, WallTemperature};
use porous_convection::elliptic::{harmonic_lift, LinearSettings};
use porous_convection::grid::{BoundaryPartition, Edge, Grid, ScalarField, VectorField};
use rand::Rng;

pub struct Case {
    pub grid: Grid,
    pub partition: BoundaryPartition,
    pub params: PhysicsParams,
    pub solver: SolverConfig,
    pub estimates: EstimateContext,
    pub theta: ScalarField,
    pub trace: ScalarField,
}

/// Contiguous Γ₁ of one to four edges.
pub fn random_partition<R: Rng>(rng: &mut R) -> BoundaryPartition {
    let start = rng.gen_range(0..4);
    let len = rng.gen_range(1..=4);
    let edges: Vec<Edge> = (0..len).map(|k| Edge::ALL[(start + k) % 4]).collect();
    BoundaryPartition::new(&edges).unwrap()
}

/// Wall temperature interpolating random corner values linearly along each
/// edge, so it is continuous around Γ.
pub fn random_wall<R: Rng>(rng: &mut R) -> WallTemperature {
    let mut c = || rng.gen_range(0.5..2.5);
    let (c00, c10, c11, c01) = (c(), c(), c(), c());
    WallTemperature::EdgeLinear([(c00, c10), (c10, c11), (c01, c11), (c00, c01)])
}

/// `r_contract` and `r_unique` at `λ = 1`; both scale as `1/λ`.
fn unit_ratios(grid: &Grid, params: &PhysicsParams, est: &EstimateContext) -> (f64, f64, ScalarField, ScalarField) {
    let trace = params.tw.trace(grid).unwrap();
    let theta = harmonic_lift(&trace, LinearSettings::default()).unwrap();
    let s = smallness_report(params, &theta, est).unwrap();
    (s.r_contract.value * params.lambda, s.r_unique.value * params.lambda, theta, trace)
}

/// A random problem on an `n × n` unit square with λ chosen so that
/// `r_contract = target_contract` and `r_unique ≤ max_unique` (the larger
/// λ wins).
pub fn random_case<R: Rng>(rng: &mut R, n: usize, target_contract: f64, max_unique: f64) -> Case {
    let grid = Grid::unit_square(n).unwrap();
    let partition = random_partition(rng);
    let k = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let mut params = PhysicsParams::new(VectorField::constant(grid, k), 1.0, random_wall(rng));
    let solver = SolverConfig::default();
    let estimates = EstimateContext::compute(&grid, &partition, solver.linear()).unwrap();
    let (rc, ru, theta, trace) = unit_ratios(&grid, &params, &estimates);
    params.lambda = (rc / target_contract).max(ru / max_unique);
    Case {
        grid,
        partition,
        params,
        solver,
        estimates,
        theta,
        trace,
    }
}
