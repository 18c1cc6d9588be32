//! Assembly and solution of the linear elliptic problems
//! `-d Δu + v·∇u = s` on the grid, with Dirichlet rows eliminated and
//! zero-flux boundaries closed by mirror ghost nodes.
//!
//! Rows belonging to boundary (Neumann) unknowns are scaled by their
//! trapezoid weight fraction (½ on edges, ¼ at corners). This turns the
//! ghost-node stencil into a symmetric matrix for pure diffusion, so CG
//! applies to the mixed-boundary stream-function problem.

mod banded;
mod krylov;
mod sparse;

use serde::{Deserialize, Serialize};

pub use banded::BandedLu;
pub use krylov::{bicgstab, pcg, KrylovStats};
pub use sparse::CsrMatrix;

use crate::error::{Error, Result, Stage};
use crate::grid::{BoundaryClass, BoundaryPartition, Grid, ScalarField, VectorField};

/// Systems with fewer unknowns than this are solved by banded LU.
pub const DIRECT_SOLVE_LIMIT: usize = 2500;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdvectionScheme {
    /// First-order upwinding; yields an M-matrix.
    #[default]
    Upwind,
    /// Second-order central differences; no sign guarantee.
    Central,
}

/// Boundary treatment of a single node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Free,
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConditions {
    grid: Grid,
    kinds: Vec<NodeKind>,
}

impl BoundaryConditions {
    /// Every boundary node Dirichlet.
    pub fn dirichlet(grid: Grid) -> Self {
        let kinds = (0..grid.node_count())
            .map(|k| {
                let (i, j) = grid.coords(k);
                if grid.is_boundary(i, j) {
                    NodeKind::Dirichlet
                } else {
                    NodeKind::Free
                }
            })
            .collect();
        BoundaryConditions { grid, kinds }
    }

    /// Dirichlet on Γ₁ (corners included), zero flux on Γ₂.
    pub fn mixed(grid: Grid, bp: &BoundaryPartition) -> Self {
        let kinds = (0..grid.node_count())
            .map(|k| {
                let (i, j) = grid.coords(k);
                match bp.classify(&grid, i, j) {
                    None => NodeKind::Free,
                    Some(BoundaryClass::Gamma1) => NodeKind::Dirichlet,
                    Some(BoundaryClass::Gamma2) => NodeKind::Neumann,
                }
            })
            .collect();
        BoundaryConditions { grid, kinds }
    }

    /// Arbitrary per-node kinds; validated when assembled.
    pub fn from_kinds(grid: Grid, kinds: Vec<NodeKind>) -> Result<Self> {
        if kinds.len() != grid.node_count() {
            return Err(Error::InvalidParameter("one node kind per node expected".into()));
        }
        Ok(BoundaryConditions { grid, kinds })
    }

    pub fn kind(&self, i: usize, j: usize) -> NodeKind {
        self.kinds[self.grid.index(i, j)]
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn validate(&self) -> Result<()> {
        let g = &self.grid;
        for k in 0..g.node_count() {
            let (i, j) = g.coords(k);
            match (g.is_boundary(i, j), self.kinds[k]) {
                (true, NodeKind::Free) => {
                    return Err(Error::Config(format!(
                        "boundary node ({i}, {j}) has no boundary condition"
                    )))
                }
                (false, NodeKind::Dirichlet | NodeKind::Neumann) => {
                    return Err(Error::Config(format!(
                        "interior node ({i}, {j}) carries a boundary condition"
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// `-diffusion Δu + velocity·∇u = source` with the given boundary data.
#[derive(Debug, Clone, Copy)]
pub struct EllipticProblem<'a> {
    pub diffusion: f64,
    pub velocity: Option<&'a VectorField>,
    pub source: &'a ScalarField,
    /// Values imposed on Dirichlet nodes; ignored elsewhere.
    pub dirichlet: &'a ScalarField,
    pub conditions: &'a BoundaryConditions,
    pub scheme: AdvectionScheme,
}

/// Assembled system plus the node bookkeeping needed to rebuild a field.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    unknown_of_node: Vec<Option<usize>>,
    node_of_unknown: Vec<usize>,
    /// Row scaling applied during assembly (1 for interior rows).
    row_weights: Vec<f64>,
    template: ScalarField,
    symmetric: bool,
}

impl LinearSystem {
    pub fn unknowns(&self) -> usize {
        self.node_of_unknown.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn row_weights(&self) -> &[f64] {
        &self.row_weights
    }

    pub fn node_of_unknown(&self) -> &[usize] {
        &self.node_of_unknown
    }

    pub fn unknown_of_node(&self, k: usize) -> Option<usize> {
        self.unknown_of_node[k]
    }

    /// Scatter an unknown vector into a full field (Dirichlet values kept).
    pub fn to_field(&self, x: &[f64]) -> ScalarField {
        let mut f = self.template.clone();
        let vals = f.values_mut();
        for (u, &node) in self.node_of_unknown.iter().enumerate() {
            vals[node] = x[u];
        }
        f
    }

    /// Gather the unknown entries of a field.
    pub fn from_field(&self, f: &ScalarField) -> Vec<f64> {
        self.node_of_unknown.iter().map(|&n| f.values()[n]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LinearSettings {
    fn default() -> Self {
        LinearSettings {
            tol: 1e-12,
            max_iter: 20_000,
        }
    }
}

/// Upwind or central coefficients of `v ∂/∂x` along one axis at a node,
/// returned as (minus-neighbour, centre, plus-neighbour).
#[inline]
fn advection_weights(v: f64, h: f64, scheme: AdvectionScheme) -> (f64, f64, f64) {
    match scheme {
        AdvectionScheme::Upwind => {
            if v > 0.0 {
                (-v / h, v / h, 0.0)
            } else if v < 0.0 {
                (0.0, -v / h, v / h)
            } else {
                (0.0, 0.0, 0.0)
            }
        }
        AdvectionScheme::Central => (-v / (2.0 * h), 0.0, v / (2.0 * h)),
    }
}

/// Discrete `v·∇u` at interior nodes with the same stencil the assembler
/// uses; boundary entries are 0.
pub fn advection(velocity: &VectorField, u: &ScalarField, scheme: AdvectionScheme) -> Result<ScalarField> {
    if velocity.grid() != u.grid() {
        return Err(Error::GridMismatch);
    }
    let g = *u.grid();
    let (hx, hy) = (g.hx(), g.hy());
    let mut out = ScalarField::zeros(g);
    for (i, j) in g.interior_nodes() {
        let [vx, vy] = velocity.at(g.index(i, j));
        let (xm, xc, xp) = advection_weights(vx, hx, scheme);
        let (ym, yc, yp) = advection_weights(vy, hy, scheme);
        let val = xm * u.at(i - 1, j)
            + (xc + yc) * u.at(i, j)
            + xp * u.at(i + 1, j)
            + ym * u.at(i, j - 1)
            + yp * u.at(i, j + 1);
        out.set(i, j, val);
    }
    Ok(out)
}

pub fn assemble(problem: &EllipticProblem<'_>, grid: &Grid) -> Result<LinearSystem> {
    let bc = problem.conditions;
    if bc.grid() != grid || problem.source.grid() != grid || problem.dirichlet.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if let Some(v) = problem.velocity {
        if v.grid() != grid {
            return Err(Error::GridMismatch);
        }
    }
    if !(problem.diffusion > 0.0 && problem.diffusion.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "diffusion coefficient must be positive, got {}",
            problem.diffusion
        )));
    }
    bc.validate()?;

    let g = *grid;
    let (nx, ny, hx, hy) = (g.nx(), g.ny(), g.hx(), g.hy());
    let n_nodes = g.node_count();
    let mut unknown_of_node = vec![None; n_nodes];
    let mut node_of_unknown = Vec::new();
    for k in 0..n_nodes {
        let (i, j) = g.coords(k);
        if bc.kind(i, j) != NodeKind::Dirichlet {
            unknown_of_node[k] = Some(node_of_unknown.len());
            node_of_unknown.push(k);
        }
    }

    let mut template = ScalarField::zeros(g);
    for k in 0..n_nodes {
        let (i, j) = g.coords(k);
        if bc.kind(i, j) == NodeKind::Dirichlet {
            template.values_mut()[k] = problem.dirichlet.values()[k];
        }
    }

    let d = problem.diffusion;
    let (dx, dy) = (d / (hx * hx), d / (hy * hy));
    let mut rows = Vec::with_capacity(node_of_unknown.len());
    let mut rhs = Vec::with_capacity(node_of_unknown.len());
    let mut row_weights = Vec::with_capacity(node_of_unknown.len());

    for &node in &node_of_unknown {
        let (i, j) = g.coords(node);
        // Mirror ghosts: outside neighbours reflect back inside.
        let im = if i == 0 { 1 } else { i - 1 };
        let ip = if i == nx { nx - 1 } else { i + 1 };
        let jm = if j == 0 { 1 } else { j - 1 };
        let jp = if j == ny { ny - 1 } else { j + 1 };
        let wx = if i == 0 || i == nx { 0.5 } else { 1.0 };
        let wy = if j == 0 || j == ny { 0.5 } else { 1.0 };
        let w = wx * wy;

        let mut centre = 2.0 * dx + 2.0 * dy;
        let mut coeffs = [(im, j, -dx), (ip, j, -dx), (i, jm, -dy), (i, jp, -dy)];
        if let Some(v) = problem.velocity {
            let [vx, vy] = v.at(node);
            let (xm, xc, xp) = advection_weights(vx, hx, problem.scheme);
            let (ym, yc, yp) = advection_weights(vy, hy, problem.scheme);
            centre += xc + yc;
            coeffs[0].2 += xm;
            coeffs[1].2 += xp;
            coeffs[2].2 += ym;
            coeffs[3].2 += yp;
        }

        let row_id = unknown_of_node[node].expect("unknown");
        let mut row = vec![(row_id, w * centre)];
        let mut b = problem.source.values()[node];
        for (ni, nj, c) in coeffs {
            if c == 0.0 {
                continue;
            }
            let nk = g.index(ni, nj);
            match unknown_of_node[nk] {
                Some(col) => row.push((col, w * c)),
                None => b -= c * template.values()[nk],
            }
        }
        rows.push(row);
        rhs.push(w * b);
        row_weights.push(w);
    }

    let symmetric = problem.velocity.is_none_or(|v| v.is_zero());
    Ok(LinearSystem {
        matrix: CsrMatrix::from_rows(rows),
        rhs,
        unknown_of_node,
        node_of_unknown,
        row_weights,
        template,
        symmetric,
    })
}

enum Backend {
    Direct(BandedLu),
    Iterative,
    Empty,
}

/// A system prepared for one or more right-hand sides. Small systems are
/// factored once; large ones go through CG (symmetric) or BiCGStab.
pub struct LinearSolver<'a> {
    system: &'a LinearSystem,
    settings: LinearSettings,
    backend: Backend,
}

impl<'a> LinearSolver<'a> {
    pub fn new(system: &'a LinearSystem, settings: LinearSettings) -> Result<Self> {
        if !(settings.tol > 0.0) {
            return Err(Error::InvalidParameter("linear tolerance must be positive".into()));
        }
        let n = system.unknowns();
        let backend = if n == 0 {
            Backend::Empty
        } else if n < DIRECT_SOLVE_LIMIT {
            Backend::Direct(BandedLu::factor(&system.matrix)?)
        } else {
            Backend::Iterative
        };
        Ok(LinearSolver {
            system,
            settings,
            backend,
        })
    }

    pub fn solve_vector(&self, rhs: &[f64], guess: Option<&[f64]>) -> Result<Vec<f64>> {
        let n = self.system.unknowns();
        match &self.backend {
            Backend::Empty => Ok(Vec::new()),
            Backend::Direct(lu) => Ok(lu.solve(rhs)),
            Backend::Iterative => {
                let mut x = guess.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
                let LinearSettings { tol, max_iter } = self.settings;
                if self.system.symmetric {
                    pcg(&self.system.matrix, rhs, &mut x, tol, max_iter)?;
                } else {
                    bicgstab(&self.system.matrix, rhs, &mut x, tol, max_iter)?;
                }
                Ok(x)
            }
        }
    }

    pub fn solve(&self) -> Result<ScalarField> {
        let x = self.solve_vector(&self.system.rhs, None)?;
        Ok(self.system.to_field(&x))
    }
}

pub fn solve_linear(system: &LinearSystem, settings: LinearSettings) -> Result<ScalarField> {
    LinearSolver::new(system, settings)?.solve()
}

/// Harmonic function matching the boundary values of `tw` (interior values
/// of `tw` are ignored).
pub fn harmonic_lift(tw: &ScalarField, settings: LinearSettings) -> Result<ScalarField> {
    let g = *tw.grid();
    let (lo, hi) = tw.boundary_min_max();
    if lo == hi {
        return Ok(ScalarField::constant(g, lo));
    }
    let bc = BoundaryConditions::dirichlet(g);
    let zero = ScalarField::zeros(g);
    let problem = EllipticProblem {
        diffusion: 1.0,
        velocity: None,
        source: &zero,
        dirichlet: tw,
        conditions: &bc,
        scheme: AdvectionScheme::Upwind,
    };
    let system = assemble(&problem, &g)?;
    solve_linear(&system, settings).map_err(|e| e.at(Stage::Lift))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{l2_norm, Edge};
    use std::f64::consts::PI;

    fn dirichlet_poisson(g: Grid, source: &ScalarField, data: &ScalarField) -> LinearSystem {
        let bc = BoundaryConditions::dirichlet(g);
        let p = EllipticProblem {
            diffusion: 1.0,
            velocity: None,
            source,
            dirichlet: data,
            conditions: &bc,
            scheme: AdvectionScheme::Upwind,
        };
        assemble(&p, &g).unwrap()
    }

    #[test]
    fn pure_diffusion_stencil() {
        let g = Grid::unit_square(4).unwrap();
        let z = ScalarField::zeros(g);
        let sys = dirichlet_poisson(g, &z, &z);
        assert_eq!(sys.unknowns(), 9);
        let h2 = 0.25 * 0.25;
        for d in sys.matrix.diagonal() {
            assert!((d - 4.0 / h2).abs() < 1e-12);
        }
        assert!(sys.matrix.is_symmetric(1e-15));
    }

    #[test]
    fn zero_velocity_matches_pure_diffusion() {
        let g = Grid::new(1.0, 2.0, 6, 5).unwrap();
        let bp = BoundaryPartition::new(&[Edge::Bottom, Edge::Left]).unwrap();
        let bc = BoundaryConditions::mixed(g, &bp);
        let s = ScalarField::from_fn(g, |x, y| x + y);
        let z = ScalarField::zeros(g);
        let v = VectorField::zeros(g);
        let mut p = EllipticProblem {
            diffusion: 1.5,
            velocity: None,
            source: &s,
            dirichlet: &z,
            conditions: &bc,
            scheme: AdvectionScheme::Upwind,
        };
        let a = assemble(&p, &g).unwrap();
        p.velocity = Some(&v);
        let b = assemble(&p, &g).unwrap();
        assert_eq!(a.matrix, b.matrix);
        assert_eq!(a.rhs, b.rhs);
        assert!(a.matrix.is_symmetric(1e-14), "ghost-mirrored rows are weight-scaled");
    }

    #[test]
    fn upwind_gives_nonpositive_off_diagonals() {
        let g = Grid::unit_square(7).unwrap();
        let bp = BoundaryPartition::new(&[Edge::Top]).unwrap();
        let bc = BoundaryConditions::mixed(g, &bp);
        let v = VectorField::from_fn(g, |x, y| [30.0 * (5.0 * y).sin(), -20.0 * (3.0 * x).cos()]);
        let z = ScalarField::zeros(g);
        let p = EllipticProblem {
            diffusion: 0.1,
            velocity: Some(&v),
            source: &z,
            dirichlet: &z,
            conditions: &bc,
            scheme: AdvectionScheme::Upwind,
        };
        let sys = assemble(&p, &g).unwrap();
        for r in 0..sys.unknowns() {
            let mut off = 0.0;
            for (c, val) in sys.matrix.row(r) {
                if c == r {
                    assert!(val > 0.0);
                } else {
                    assert!(val <= 0.0);
                    off += val.abs();
                }
            }
            assert!(sys.matrix.get(r, r) >= off - 1e-9);
        }
    }

    #[test]
    fn uncovered_boundary_node_is_config_error() {
        let g = Grid::unit_square(3).unwrap();
        let kinds = vec![NodeKind::Free; g.node_count()];
        let bc = BoundaryConditions::from_kinds(g, kinds).unwrap();
        let z = ScalarField::zeros(g);
        let p = EllipticProblem {
            diffusion: 1.0,
            velocity: None,
            source: &z,
            dirichlet: &z,
            conditions: &bc,
            scheme: AdvectionScheme::Upwind,
        };
        assert!(matches!(assemble(&p, &g), Err(Error::Config(_))));
    }

    #[test]
    fn trivial_solves() {
        let g = Grid::unit_square(2).unwrap();
        let data = ScalarField::from_fn(g, |x, y| x + 3.0 * y);
        let z = ScalarField::zeros(g);
        // One interior unknown; Dirichlet data reinstated around it.
        let sol = solve_linear(&dirichlet_poisson(g, &z, &data), LinearSettings::default()).unwrap();
        for (i, j) in g.boundary_nodes() {
            assert_eq!(sol.at(i, j), data.at(i, j));
        }
        let g = Grid::unit_square(8).unwrap();
        let z = ScalarField::zeros(g);
        let sol = solve_linear(&dirichlet_poisson(g, &z, &z), LinearSettings::default()).unwrap();
        assert!(sol.values().iter().all(|&v| v == 0.0));
    }

    fn manufactured_error(n: usize) -> f64 {
        let g = Grid::unit_square(n).unwrap();
        // -Δu = 2π² sin(πx) sin(πy)
        let s = ScalarField::from_fn(g, |x, y| 2.0 * PI * PI * (PI * x).sin() * (PI * y).sin());
        let z = ScalarField::zeros(g);
        let u = solve_linear(&dirichlet_poisson(g, &s, &z), LinearSettings::default()).unwrap();
        let exact = ScalarField::from_fn(g, |x, y| (PI * x).sin() * (PI * y).sin());
        l2_norm(&u.sub(&exact).unwrap())
    }

    #[test]
    fn manufactured_solution_second_order() {
        let (e16, e32, e64) = (manufactured_error(16), manufactured_error(32), manufactured_error(64));
        for r in [e16 / e32, e32 / e64] {
            assert!((3.5..=4.5).contains(&r), "ratio {r}");
        }
    }

    #[test]
    fn krylov_path_matches_direct() {
        // 60x60 has 3481 unknowns, above the direct limit.
        let g = Grid::unit_square(60).unwrap();
        let s = ScalarField::from_fn(g, |x, y| (3.0 * x).sin() + y);
        let data = ScalarField::from_fn(g, |x, y| x * x - y);
        let sys = dirichlet_poisson(g, &s, &data);
        assert!(sys.unknowns() >= DIRECT_SOLVE_LIMIT);
        let it = solve_linear(&sys, LinearSettings::default()).unwrap();
        let lu = BandedLu::factor(&sys.matrix).unwrap().solve(&sys.rhs);
        let direct = sys.to_field(&lu);
        let diff = it.sub(&direct).unwrap();
        assert!(crate::grid::linf_norm(&diff) < 1e-9);
    }

    #[test]
    fn harmonic_lift_examples() {
        let g = Grid::new(2.0, 1.0, 10, 6).unwrap();
        let st = LinearSettings::default();
        let c = harmonic_lift(&ScalarField::constant(g, 3.5), st).unwrap();
        assert!(c.values().iter().all(|&v| v == 3.5));
        let lin = ScalarField::from_fn(g, |x, _| x);
        let t = harmonic_lift(&lin, st).unwrap();
        assert!(crate::grid::linf_norm(&t.sub(&lin).unwrap()) < 1e-12);
        let wild = ScalarField::from_fn(g, |x, y| (7.0 * x).sin() * (1.0 + y) + x * y);
        let t = harmonic_lift(&wild, st).unwrap();
        let (lo, hi) = wild.boundary_min_max();
        assert!(t.values().iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
    }

    #[test]
    fn mixed_zero_data_gives_zero() {
        let g = Grid::unit_square(12).unwrap();
        let bp = BoundaryPartition::new(&[Edge::Left]).unwrap();
        let bc = BoundaryConditions::mixed(g, &bp);
        let z = ScalarField::zeros(g);
        let p = EllipticProblem {
            diffusion: 1.0,
            velocity: None,
            source: &z,
            dirichlet: &z,
            conditions: &bc,
            scheme: AdvectionScheme::Upwind,
        };
        let u = solve_linear(&assemble(&p, &g).unwrap(), LinearSettings::default()).unwrap();
        assert!(crate::grid::linf_norm(&u) < 1e-14);
    }

    #[test]
    fn neumann_solution_is_second_order() {
        // u = cos(πx/2)... use u = sin(πx/2) on Γ₁ = left, zero flux elsewhere:
        // -Δu = (π²/4) sin(πx/2), ∂u/∂n = 0 on right/top/bottom.
        let err = |n: usize| {
            let g = Grid::unit_square(n).unwrap();
            let bp = BoundaryPartition::new(&[Edge::Left]).unwrap();
            let bc = BoundaryConditions::mixed(g, &bp);
            let s = ScalarField::from_fn(g, |x, _| PI * PI / 4.0 * (PI * x / 2.0).sin());
            let z = ScalarField::zeros(g);
            let p = EllipticProblem {
                diffusion: 1.0,
                velocity: None,
                source: &s,
                dirichlet: &z,
                conditions: &bc,
                scheme: AdvectionScheme::Upwind,
            };
            let u = solve_linear(&assemble(&p, &g).unwrap(), LinearSettings::default()).unwrap();
            let exact = ScalarField::from_fn(g, |x, _| (PI * x / 2.0).sin());
            l2_norm(&u.sub(&exact).unwrap())
        };
        let r = err(16) / err(32);
        assert!((3.5..=4.5).contains(&r), "ratio {r}");
    }

    #[test]
    fn advection_operator_matches_assembled_rows() {
        let g = Grid::unit_square(6).unwrap();
        let v = VectorField::from_fn(g, |x, y| [y - 0.5, 0.3 - x]);
        let u = ScalarField::from_fn(g, |x, y| x * x + (2.0 * y).sin());
        let adv = advection(&v, &u, AdvectionScheme::Upwind).unwrap();
        let linear = ScalarField::from_fn(g, |x, y| 2.0 * x - y);
        let c = advection(&v, &linear, AdvectionScheme::Central).unwrap();
        for (i, j) in g.interior_nodes() {
            let [vx, vy] = v.at(g.index(i, j));
            assert!((c.at(i, j) - (2.0 * vx - vy)).abs() < 1e-12);
            assert!(adv.at(i, j).is_finite());
        }
    }
}
