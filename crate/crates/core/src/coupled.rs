//! Picard solution of the shifted convection system and the contraction
//! iteration for its linearisation about `(ψ, H) = (0, 0)`.
//!
//! With `T = H + Θ` and Θ harmonic with `Θ = T_w` on Γ, one sweep solves
//!
//! ```text
//!   Δψ = K·∇(H_prev + Θ)                       ψ = 0 on Γ₁, ∂ψ/∂n = 0 on Γ₂
//!   λΔH − ∇H·(∇ψ)^⊥ = ∇Θ·(∇ψ)^⊥                 H = 0 on Γ
//! ```
//!
//! i.e. H is frozen in the ψ-equation and ψ is frozen in the H-equation.

use serde::{Deserialize, Serialize};

use crate::analysis::{
    check_apriori_norms, check_max_principle, smallness_report, CheckResult, EstimateContext,
    SmallnessReport,
};
use crate::elliptic::{
    advection, assemble, harmonic_lift, AdvectionScheme, BoundaryConditions, EllipticProblem,
    LinearSettings, LinearSolver,
};
use crate::error::{Error, Result, Stage};
use crate::grid::{
    gradient, h1_seminorm, l2_norm_vec, laplacian, linf_norm, linf_norm_vec, perp,
    BoundaryPartition, Edge, Grid, ScalarField, VectorField,
};

/// Wall temperature on Γ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WallTemperature {
    /// One constant per edge, `[bottom, right, top, left]`. Corners take the
    /// mean of their two edges.
    EdgeConstant([f64; 4]),
    /// Linear ramp per edge from its lower to its upper coordinate end,
    /// `[bottom, right, top, left]`. Corners take the mean of the two ramp
    /// ends meeting there.
    EdgeLinear([(f64, f64); 4]),
    /// Values at the boundary nodes in [`Grid::boundary_nodes`] order.
    NodeTable(Vec<f64>),
}

impl WallTemperature {
    pub fn uniform(c: f64) -> Self {
        WallTemperature::EdgeConstant([c; 4])
    }

    /// Boundary trace as a field; interior entries are zero.
    pub fn trace(&self, grid: &Grid) -> Result<ScalarField> {
        let mut f = ScalarField::zeros(*grid);
        let (nx, ny) = (grid.nx(), grid.ny());
        match self {
            WallTemperature::NodeTable(values) => {
                let nodes = grid.boundary_nodes();
                if values.len() != nodes.len() {
                    return Err(Error::InvalidParameter(format!(
                        "wall temperature table needs {} boundary values, got {}",
                        nodes.len(),
                        values.len()
                    )));
                }
                for (&(i, j), &v) in nodes.iter().zip(values) {
                    f.set(i, j, v);
                }
            }
            _ => {
                for (i, j) in grid.boundary_nodes() {
                    let edges = grid.edges_of(i, j);
                    let sum: f64 = edges.iter().map(|&e| self.edge_value(e, i, j, nx, ny)).sum();
                    f.set(i, j, sum / edges.len() as f64);
                }
            }
        }
        if let Some(v) = f.values().iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "wall temperature must be finite and nonnegative, found {v}"
            )));
        }
        Ok(f)
    }

    fn edge_value(&self, e: Edge, i: usize, j: usize, nx: usize, ny: usize) -> f64 {
        let slot = Edge::ALL.iter().position(|&x| x == e).unwrap();
        match self {
            WallTemperature::EdgeConstant(c) => c[slot],
            WallTemperature::EdgeLinear(r) => {
                let s = match e {
                    Edge::Bottom | Edge::Top => i as f64 / nx as f64,
                    Edge::Left | Edge::Right => j as f64 / ny as f64,
                };
                let (a, b) = r[slot];
                a + (b - a) * s
            }
            WallTemperature::NodeTable(_) => unreachable!(),
        }
    }

    /// Multiply every wall value by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        match self {
            WallTemperature::EdgeConstant(c) => WallTemperature::EdgeConstant(c.map(|v| v * s)),
            WallTemperature::EdgeLinear(r) => {
                WallTemperature::EdgeLinear(r.map(|(a, b)| (a * s, b * s)))
            }
            WallTemperature::NodeTable(v) => {
                WallTemperature::NodeTable(v.iter().map(|x| x * s).collect())
            }
        }
    }
}

/// Buoyancy vector K, diffusivity λ and wall temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsParams {
    pub k: VectorField,
    pub lambda: f64,
    pub tw: WallTemperature,
}

impl PhysicsParams {
    pub fn new(k: VectorField, lambda: f64, tw: WallTemperature) -> Self {
        PhysicsParams { k, lambda, tw }
    }

    /// Validate against a grid and return the wall trace.
    ///
    /// `K ≡ 0` is accepted as a degenerate decoupled case.
    pub fn validate(&self, grid: &Grid) -> Result<ScalarField> {
        if self.k.grid() != grid {
            return Err(Error::GridMismatch);
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        self.tw.trace(grid)
    }

    pub fn k_linf(&self) -> f64 {
        linf_norm_vec(&self.k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub linear_tol: f64,
    pub linear_max_iter: usize,
    pub damping: f64,
    pub advection_scheme: AdvectionScheme,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            picard_tol: 1e-10,
            picard_max_iter: 200,
            linear_tol: 1e-12,
            linear_max_iter: 20_000,
            damping: 1.0,
            advection_scheme: AdvectionScheme::Upwind,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.picard_tol > 0.0 && self.linear_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if self.picard_max_iter == 0 || self.linear_max_iter == 0 {
            return Err(Error::InvalidParameter("iteration budgets must be positive".into()));
        }
        Ok(())
    }

    pub fn linear(&self) -> LinearSettings {
        LinearSettings {
            tol: self.linear_tol,
            max_iter: self.linear_max_iter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualRecord {
    pub iter: usize,
    pub psi: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionNorms {
    pub grad_psi_l2: f64,
    pub grad_h_l2: f64,
    pub grad_theta_l2: f64,
    pub grad_theta_linf: f64,
    pub k_linf: f64,
    /// `sup_Γ T_w`.
    pub m: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub psi: ScalarField,
    pub h: ScalarField,
    pub theta: ScalarField,
    pub t: ScalarField,
    pub lambda: f64,
    pub iterations: usize,
    pub residual_history: Vec<ResidualRecord>,
    pub converged: bool,
    pub norms: SolutionNorms,
    pub estimates: EstimateContext,
    pub smallness: SmallnessReport,
    pub checks: Vec<CheckResult>,
}

impl SolveReport {
    /// All applicable checks satisfied.
    pub fn checks_pass(&self) -> bool {
        self.checks.iter().all(|c| !c.applicable || c.satisfied)
    }
}

/// Extra knobs for [`solve_coupled_with`].
#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    /// Starting H (must vanish on Γ). Defaults to zero.
    pub initial_h: Option<ScalarField>,
    /// Precomputed Poincaré constants for this grid and partition.
    pub estimates: Option<EstimateContext>,
}

/// Stream-function problem `−Δψ = −K·∇S` with the mixed boundary conditions.
fn psi_problem_rhs(
    k: &VectorField,
    driver: &ScalarField,
    bc: &BoundaryConditions,
    zero: &ScalarField,
) -> Result<crate::elliptic::LinearSystem> {
    let grid = *driver.grid();
    let source = k.dot(&gradient(driver))?.map(|v| -v);
    let problem = EllipticProblem {
        diffusion: 1.0,
        velocity: None,
        source: &source,
        dirichlet: zero,
        conditions: bc,
        scheme: AdvectionScheme::Upwind,
    };
    assemble(&problem, &grid)
}

/// One Picard sweep: returns `(ψ, H_next)`.
pub fn picard_step(
    h_prev: &ScalarField,
    theta: &ScalarField,
    params: &PhysicsParams,
    bp: &BoundaryPartition,
    cfg: &SolverConfig,
) -> Result<(ScalarField, ScalarField)> {
    h_prev.same_grid(theta)?;
    let grid = *theta.grid();
    let psi_bc = BoundaryConditions::mixed(grid, bp);
    let h_bc = BoundaryConditions::dirichlet(grid);
    let zero = ScalarField::zeros(grid);
    let sys = psi_problem_rhs(&params.k, &h_prev.add(theta)?, &psi_bc, &zero)?;
    let psi = LinearSolver::new(&sys, cfg.linear())
        .and_then(|s| s.solve())
        .map_err(|e| e.at(Stage::Psi))?;
    let h_raw = heat_stage(&psi, theta, params.lambda, &h_bc, &zero, cfg)?;
    Ok((psi, damp(h_prev, &h_raw, cfg.damping)?))
}

fn damp(prev: &ScalarField, raw: &ScalarField, damping: f64) -> Result<ScalarField> {
    if damping == 1.0 {
        Ok(raw.clone())
    } else {
        prev.axpby(1.0 - damping, raw, damping)
    }
}

/// `−λΔH + v·∇H = −v·∇Θ`, `v = (∇ψ)^⊥`, `H = 0` on Γ.
fn heat_stage(
    psi: &ScalarField,
    theta: &ScalarField,
    lambda: f64,
    bc: &BoundaryConditions,
    zero: &ScalarField,
    cfg: &SolverConfig,
) -> Result<ScalarField> {
    let grid = *psi.grid();
    let velocity = perp(&gradient(psi));
    let source = advection(&velocity, theta, cfg.advection_scheme)?.map(|v| -v);
    let problem = EllipticProblem {
        diffusion: lambda,
        velocity: Some(&velocity),
        source: &source,
        dirichlet: zero,
        conditions: bc,
        scheme: cfg.advection_scheme,
    };
    let sys = assemble(&problem, &grid).map_err(|e| e.at(Stage::Heat))?;
    LinearSolver::new(&sys, cfg.linear())
        .and_then(|s| s.solve())
        .map_err(|e| e.at(Stage::Heat))
}

/// Nodewise residuals of the original system at interior nodes:
/// `Δψ − K·∇T` and `λΔT − ∇T·(∇ψ)^⊥`, the advection term discretised with
/// `scheme` exactly as the solver does. Boundary entries are zero.
pub fn equation_residuals(
    psi: &ScalarField,
    t: &ScalarField,
    params: &PhysicsParams,
    scheme: AdvectionScheme,
) -> Result<(ScalarField, ScalarField)> {
    psi.same_grid(t)?;
    let grid = *psi.grid();
    let mut r_psi = laplacian(psi).sub(&params.k.dot(&gradient(t))?)?;
    let velocity = perp(&gradient(psi));
    let mut r_t = laplacian(t)
        .map(|v| params.lambda * v)
        .sub(&advection(&velocity, t, scheme)?)?;
    for (i, j) in grid.boundary_nodes() {
        r_psi.set(i, j, 0.0);
        r_t.set(i, j, 0.0);
    }
    Ok((r_psi, r_t))
}

/// Max interior residuals of the shifted system `(ψ-equation, H-equation)`.
fn shifted_residuals(
    psi: &ScalarField,
    h: &ScalarField,
    theta: &ScalarField,
    params: &PhysicsParams,
    scheme: AdvectionScheme,
) -> Result<(f64, f64)> {
    let t = h.add(theta)?;
    let grid = *psi.grid();
    let r_psi = laplacian(psi).sub(&params.k.dot(&gradient(&t))?)?;
    let velocity = perp(&gradient(psi));
    let r_h = laplacian(h)
        .map(|v| params.lambda * v)
        .sub(&advection(&velocity, &t, scheme)?)?;
    let interior_max = |f: &ScalarField| {
        grid.interior_nodes()
            .map(|(i, j)| f.at(i, j).abs())
            .fold(0.0, f64::max)
    };
    Ok((interior_max(&r_psi), interior_max(&r_h)))
}

pub fn solve_coupled(
    params: &PhysicsParams,
    grid: &Grid,
    bp: &BoundaryPartition,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    solve_coupled_with(params, grid, bp, cfg, SolveOptions::default())
}

pub fn solve_coupled_with(
    params: &PhysicsParams,
    grid: &Grid,
    bp: &BoundaryPartition,
    cfg: &SolverConfig,
    opts: SolveOptions,
) -> Result<SolveReport> {
    cfg.validate()?;
    let trace = params.validate(grid)?;
    let g = *grid;
    let theta = harmonic_lift(&trace, cfg.linear())?;

    let psi_bc = BoundaryConditions::mixed(g, bp);
    let h_bc = BoundaryConditions::dirichlet(g);
    let zero = ScalarField::zeros(g);

    let mut h = match opts.initial_h {
        Some(h0) => {
            h0.same_grid(&zero)?;
            let mut h0 = h0;
            for (i, j) in g.boundary_nodes() {
                h0.set(i, j, 0.0);
            }
            h0
        }
        None => zero.clone(),
    };

    // The ψ matrix never changes; factor it once.
    let psi_template = psi_problem_rhs(&params.k, &theta, &psi_bc, &zero)?;
    let psi_solver = LinearSolver::new(&psi_template, cfg.linear()).map_err(|e| e.at(Stage::Psi))?;

    let mut psi = zero.clone();
    let mut history = Vec::new();
    let mut converged = false;
    let mut guess: Option<Vec<f64>> = None;
    for iter in 1..=cfg.picard_max_iter {
        let sys = psi_problem_rhs(&params.k, &h.add(&theta)?, &psi_bc, &zero)?;
        let x = psi_solver
            .solve_vector(&sys.rhs, guess.as_deref())
            .map_err(|e| e.at(Stage::Psi))?;
        psi = sys.to_field(&x);
        guess = Some(x);
        let h_raw = heat_stage(&psi, &theta, params.lambda, &h_bc, &zero, cfg)?;
        h = damp(&h, &h_raw, cfg.damping)?;

        let (r_psi, r_h) = shifted_residuals(&psi, &h, &theta, params, cfg.advection_scheme)?;
        history.push(ResidualRecord {
            iter,
            psi: r_psi,
            h: r_h,
        });
        if !(r_psi.is_finite() && r_h.is_finite()) {
            break;
        }
        if r_psi <= cfg.picard_tol && r_h <= cfg.picard_tol {
            converged = true;
            break;
        }
    }

    let t = h.add(&theta)?;
    let grad_theta = gradient(&theta);
    let norms = SolutionNorms {
        grad_psi_l2: h1_seminorm(&psi),
        grad_h_l2: h1_seminorm(&h),
        grad_theta_l2: l2_norm_vec(&grad_theta),
        grad_theta_linf: linf_norm_vec(&grad_theta),
        k_linf: params.k_linf(),
        m: trace.boundary_min_max().1,
    };
    let estimates = match opts.estimates {
        Some(ctx) => ctx,
        None => EstimateContext::compute(&g, bp, cfg.linear())?,
    };
    let smallness = smallness_report(params, &theta, &estimates)?;
    let mut checks = vec![check_max_principle(&t, &trace, cfg.linear_tol)];
    checks.extend(check_apriori_norms(&norms, params.lambda, &estimates));

    Ok(SolveReport {
        psi,
        h,
        theta,
        t,
        lambda: params.lambda,
        iterations: history.len(),
        residual_history: history,
        converged,
        norms,
        estimates,
        smallness,
        checks,
    })
}

/// Result of the contraction iteration `G ↦ Q(S(G))`.
#[derive(Debug, Clone)]
pub struct LinearizedSolution {
    pub phi: ScalarField,
    pub g: ScalarField,
    pub iterations: usize,
    /// `‖∇(G_{k+1} − G_k)‖₂` for each sweep.
    pub increments: Vec<f64>,
    /// Successive increment ratios.
    pub ratio_history: Vec<f64>,
}

/// Solve `−Δφ + K·∇G = f`, `−λΔG + ∇Θ·(∇φ)^⊥ = g` (φ = 0 on Γ₁,
/// ∂φ/∂n = 0 on Γ₂, G = 0 on Γ) by iterating the composed map from G = 0.
pub fn solve_linearized(
    f: &ScalarField,
    g: &ScalarField,
    theta: &ScalarField,
    params: &PhysicsParams,
    grid: &Grid,
    bp: &BoundaryPartition,
    cfg: &SolverConfig,
) -> Result<LinearizedSolution> {
    cfg.validate()?;
    f.same_grid(g)?;
    f.same_grid(theta)?;
    if params.k.grid() != grid || f.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let grid = *grid;
    let zero = ScalarField::zeros(grid);
    let phi_bc = BoundaryConditions::mixed(grid, bp);
    let g_bc = BoundaryConditions::dirichlet(grid);
    let grad_theta = gradient(theta);

    let assemble_phi = |source: &ScalarField| {
        assemble(
            &EllipticProblem {
                diffusion: 1.0,
                velocity: None,
                source,
                dirichlet: &zero,
                conditions: &phi_bc,
                scheme: AdvectionScheme::Upwind,
            },
            &grid,
        )
    };
    let assemble_g = |source: &ScalarField| {
        assemble(
            &EllipticProblem {
                diffusion: params.lambda,
                velocity: None,
                source,
                dirichlet: &zero,
                conditions: &g_bc,
                scheme: AdvectionScheme::Upwind,
            },
            &grid,
        )
    };
    let phi_template = assemble_phi(f)?;
    let g_template = assemble_g(g)?;
    let phi_solver = LinearSolver::new(&phi_template, cfg.linear()).map_err(|e| e.at(Stage::Linearized))?;
    let g_solver = LinearSolver::new(&g_template, cfg.linear()).map_err(|e| e.at(Stage::Linearized))?;

    let mut g_cur = zero.clone();
    let mut increments = Vec::new();
    let mut ratios = Vec::new();
    for iter in 1..=cfg.picard_max_iter {
        // S: G ↦ φ
        let phi_src = f.sub(&params.k.dot(&gradient(&g_cur))?)?;
        let sys = assemble_phi(&phi_src)?;
        let phi = sys.to_field(&phi_solver.solve_vector(&sys.rhs, None).map_err(|e| e.at(Stage::Linearized))?);
        // Q: φ ↦ G₁
        let coupling = grad_theta.dot(&perp(&gradient(&phi)))?;
        let g_src = g.sub(&coupling)?;
        let sys = assemble_g(&g_src)?;
        let g_next = sys.to_field(&g_solver.solve_vector(&sys.rhs, None).map_err(|e| e.at(Stage::Linearized))?);

        let inc = h1_seminorm(&g_next.sub(&g_cur)?);
        if let Some(&prev) = increments.last() {
            let prev: f64 = prev;
            ratios.push(if prev > 0.0 { inc / prev } else { 0.0 });
        }
        increments.push(inc);
        let scale = h1_seminorm(&g_next);
        g_cur = g_next;
        if inc <= cfg.picard_tol * scale {
            return Ok(LinearizedSolution {
                phi,
                g: g_cur,
                iterations: iter,
                increments,
                ratio_history: ratios,
            });
        }
        if !inc.is_finite() {
            break;
        }
    }
    Err(Error::FixedPointNonConvergence {
        iterations: increments.len(),
        ratio_history: ratios,
    })
}

/// `‖∇(a − b)‖₂`.
pub fn h1_distance(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    Ok(h1_seminorm(&a.sub(b)?))
}

/// `‖·‖∞` of a residual field (boundary entries are zero by convention).
pub fn residual_max(r: &ScalarField) -> f64 {
    linf_norm(r)
}
