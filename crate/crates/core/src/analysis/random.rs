//! Seeded smooth random fields for property checks.
//!
//! Checks built on discrete gradients need resolved fields: nodal white
//! noise has central differences that vanish on checkerboard modes, which
//! no Poincaré-type inequality survives.

use rand::Rng;
use std::f64::consts::PI;

use crate::grid::{BoundaryPartition, Edge, Grid, ScalarField};

/// Where a generated field must vanish.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Vanish {
    Nowhere,
    /// On the whole boundary.
    Boundary,
    /// On the Γ₁ edges of a partition.
    Gamma1(BoundaryPartition),
}

/// Random low-mode trigonometric field times a factor vanishing where asked.
pub fn random_smooth_field<R: Rng + ?Sized>(grid: &Grid, vanish: Vanish, rng: &mut R) -> ScalarField {
    let (lx, ly) = (grid.lx(), grid.ly());
    let modes: Vec<(f64, f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..3.0),
                rng.gen_range(0.0..3.0),
                rng.gen_range(0.0..2.0 * PI),
                rng.gen_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let offset = rng.gen_range(-1.0..1.0);
    let edges: Vec<Edge> = match vanish {
        Vanish::Nowhere => Vec::new(),
        Vanish::Boundary => Edge::ALL.to_vec(),
        Vanish::Gamma1(bp) => bp.gamma1(),
    };
    ScalarField::from_fn(*grid, |x, y| {
        let (sx, sy) = (x / lx, y / ly);
        let base: f64 = offset
            + modes
                .iter()
                .map(|&(a, p, q, ph, qh)| a * (PI * p * sx + ph).cos() * (PI * q * sy + qh).cos())
                .sum::<f64>();
        let factor: f64 = edges
            .iter()
            .map(|e| match e {
                Edge::Left => sx,
                Edge::Right => 1.0 - sx,
                Edge::Bottom => sy,
                Edge::Top => 1.0 - sy,
            })
            .product();
        base * factor
    })
}

/// Independent uniform values in `[lo, hi]` at interior nodes, zero on Γ.
pub fn random_interior_field<R: Rng + ?Sized>(grid: &Grid, lo: f64, hi: f64, rng: &mut R) -> ScalarField {
    let mut f = ScalarField::zeros(*grid);
    for (i, j) in grid.interior_nodes() {
        f.set(i, j, rng.gen_range(lo..=hi));
    }
    f
}
