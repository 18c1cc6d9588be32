//! Structured rectangular node lattice and the discrete calculus shared by
//! every solver: gradients, the perp rotation, the 5-point Laplacian and
//! trapezoidal norms / inner products.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform node lattice on `[0, lx] x [0, ly]` with `(nx+1)(ny+1)` nodes.
///
/// Node `(i, j)` sits at `(i * hx, j * hy)` and is stored at linear index
/// `j * (nx + 1) + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    lx: f64,
    ly: f64,
    nx: usize,
    ny: usize,
}

impl Grid {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(lx.is_finite() && lx > 0.0 && ly.is_finite() && ly > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "domain sides must be positive, got lx={lx}, ly={ly}"
            )));
        }
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidParameter(format!(
                "cell counts must be at least 2, got nx={nx}, ny={ny}"
            )));
        }
        Ok(Grid { lx, ly, nx, ny })
    }

    pub fn unit_square(n: usize) -> Result<Self> {
        Grid::new(1.0, 1.0, n, n)
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }
    pub fn ly(&self) -> f64 {
        self.ly
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }
    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }
    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn node_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % (self.nx + 1), k / (self.nx + 1))
    }

    #[inline]
    pub fn position(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.hx(), j as f64 * self.hy())
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }

    /// Trapezoidal product-rule weight of node `(i, j)`.
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let wx = if i == 0 || i == self.nx { 0.5 } else { 1.0 };
        let wy = if j == 0 || j == self.ny { 0.5 } else { 1.0 };
        wx * wy * self.hx() * self.hy()
    }

    /// Boundary nodes counter-clockwise from the origin corner.
    pub fn boundary_nodes(&self) -> Vec<(usize, usize)> {
        let (nx, ny) = (self.nx, self.ny);
        let mut out = Vec::with_capacity(2 * (nx + ny));
        out.extend((0..nx).map(|i| (i, 0)));
        out.extend((0..ny).map(|j| (nx, j)));
        out.extend((1..=nx).rev().map(|i| (i, ny)));
        out.extend((1..=ny).rev().map(|j| (0, j)));
        out
    }

    /// Edges a boundary node lies on (two for corners).
    pub fn edges_of(&self, i: usize, j: usize) -> Vec<Edge> {
        let mut e = Vec::with_capacity(2);
        if j == 0 {
            e.push(Edge::Bottom);
        }
        if i == self.nx {
            e.push(Edge::Right);
        }
        if j == self.ny {
            e.push(Edge::Top);
        }
        if i == 0 {
            e.push(Edge::Left);
        }
        e
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..self.ny).flat_map(move |j| (1..self.nx).map(move |i| (i, j)))
    }
}

/// One side of the rectangle, listed counter-clockwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Bottom,
    Right,
    Top,
    Left,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Bottom, Edge::Right, Edge::Top, Edge::Left];

    fn slot(self) -> usize {
        self as usize
    }

    pub fn parse(name: &str) -> Result<Edge> {
        match name.trim().to_ascii_lowercase().as_str() {
            "bottom" => Ok(Edge::Bottom),
            "right" => Ok(Edge::Right),
            "top" => Ok(Edge::Top),
            "left" => Ok(Edge::Left),
            other => Err(Error::InvalidParameter(format!("unknown edge `{other}`"))),
        }
    }
}

/// Which part of the boundary a node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryClass {
    /// Impermeable part: Dirichlet for the stream function.
    Gamma1,
    /// Zero normal flux for the stream function.
    Gamma2,
}

/// Split of the four edges into Γ₁ and Γ₂. Corners touching Γ₁ belong to Γ₁.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryPartition {
    gamma1: [bool; 4],
}

impl BoundaryPartition {
    pub fn new(gamma1: &[Edge]) -> Result<Self> {
        let mut mask = [false; 4];
        for e in gamma1 {
            mask[e.slot()] = true;
        }
        if !mask.iter().any(|&b| b) {
            return Err(Error::InvalidParameter(
                "gamma1 must contain at least one edge".into(),
            ));
        }
        // Contiguous around the perimeter iff the cyclic sequence has at most
        // one rising transition.
        let rises = (0..4).filter(|&k| !mask[k] && mask[(k + 1) % 4]).count();
        if rises > 1 {
            return Err(Error::InvalidParameter(
                "gamma1 and gamma2 must each be contiguous around the perimeter".into(),
            ));
        }
        Ok(BoundaryPartition { gamma1: mask })
    }

    /// Whole boundary is Γ₁.
    pub fn all_dirichlet() -> Self {
        BoundaryPartition { gamma1: [true; 4] }
    }

    pub fn in_gamma1(&self, e: Edge) -> bool {
        self.gamma1[e.slot()]
    }

    pub fn gamma1(&self) -> Vec<Edge> {
        Edge::ALL.into_iter().filter(|&e| self.in_gamma1(e)).collect()
    }

    pub fn gamma2(&self) -> Vec<Edge> {
        Edge::ALL.into_iter().filter(|&e| !self.in_gamma1(e)).collect()
    }

    /// `None` for interior nodes.
    pub fn classify(&self, grid: &Grid, i: usize, j: usize) -> Option<BoundaryClass> {
        if !grid.is_boundary(i, j) {
            return None;
        }
        if grid.edges_of(i, j).into_iter().any(|e| self.in_gamma1(e)) {
            Some(BoundaryClass::Gamma1)
        } else {
            Some(BoundaryClass::Gamma2)
        }
    }
}

/// One real value per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        ScalarField::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.node_count()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::InvalidParameter(format!(
                "expected {} node values, got {}",
                grid.node_count(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value at node {k}"
            )));
        }
        Ok(ScalarField { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.node_count());
        ScalarField { grid, values }
    }

    /// Sample `f(x, y)` at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.node_count())
            .map(|k| {
                let (i, j) = grid.coords(k);
                let (x, y) = grid.position(i, j);
                f(x, y)
            })
            .collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.index(i, j);
        self.values[k] = v;
    }

    pub fn same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField::from_vec_unchecked(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// `a*self + b*other` nodewise.
    pub fn axpby(&self, a: f64, other: &ScalarField, b: f64) -> Result<ScalarField> {
        self.same_grid(other)?;
        Ok(ScalarField::from_vec_unchecked(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        ))
    }

    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        self.axpby(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.axpby(1.0, other, -1.0)
    }

    pub fn boundary_min_max(&self) -> (f64, f64) {
        self.grid
            .boundary_nodes()
            .into_iter()
            .map(|(i, j)| self.at(i, j))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// One real 2-vector per grid node, stored as two component arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        VectorField::constant(grid, [0.0, 0.0])
    }

    pub fn constant(grid: Grid, v: [f64; 2]) -> Self {
        let n = grid.node_count();
        VectorField {
            grid,
            x: vec![v[0]; n],
            y: vec![v[1]; n],
        }
    }

    pub fn from_components(grid: Grid, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = grid.node_count();
        if x.len() != n || y.len() != n {
            return Err(Error::InvalidParameter(format!(
                "expected {n} node vectors, got {} / {}",
                x.len(),
                y.len()
            )));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite vector component".into()));
        }
        Ok(VectorField { grid, x, y })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let n = grid.node_count();
        let (mut x, mut y) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for k in 0..n {
            let (i, j) = grid.coords(k);
            let (px, py) = grid.position(i, j);
            let v = f(px, py);
            x.push(v[0]);
            y.push(v[1]);
        }
        VectorField { grid, x, y }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn x(&self) -> &[f64] {
        &self.x
    }
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    #[inline]
    pub fn at(&self, k: usize) -> [f64; 2] {
        [self.x[k], self.y[k]]
    }

    pub fn scale(&self, s: f64) -> VectorField {
        VectorField {
            grid: self.grid,
            x: self.x.iter().map(|v| v * s).collect(),
            y: self.y.iter().map(|v| v * s).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.x.iter().chain(&self.y).all(|&v| v == 0.0)
    }

    /// Pointwise dot product with another vector field.
    pub fn dot(&self, other: &VectorField) -> Result<ScalarField> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(ScalarField::from_vec_unchecked(
            self.grid,
            (0..self.x.len())
                .map(|k| self.x[k] * other.x[k] + self.y[k] * other.y[k])
                .collect(),
        ))
    }
}

/// Second-order derivative along one axis: central inside, one-sided
/// three-point at the ends.
#[inline]
fn axis_derivative(u: impl Fn(usize) -> f64, i: usize, n: usize, h: f64) -> f64 {
    if i == 0 {
        (-3.0 * u(0) + 4.0 * u(1) - u(2)) / (2.0 * h)
    } else if i == n {
        (3.0 * u(n) - 4.0 * u(n - 1) + u(n - 2)) / (2.0 * h)
    } else {
        (u(i + 1) - u(i - 1)) / (2.0 * h)
    }
}

pub fn gradient(u: &ScalarField) -> VectorField {
    let g = *u.grid();
    let (nx, ny, hx, hy) = (g.nx(), g.ny(), g.hx(), g.hy());
    let n = g.node_count();
    let (mut gx, mut gy) = (vec![0.0; n], vec![0.0; n]);
    for j in 0..=ny {
        for i in 0..=nx {
            let k = g.index(i, j);
            gx[k] = axis_derivative(|a| u.at(a, j), i, nx, hx);
            gy[k] = axis_derivative(|b| u.at(i, b), j, ny, hy);
        }
    }
    VectorField { grid: g, x: gx, y: gy }
}

/// Pointwise rotation `(u, v) -> (v, -u)`.
pub fn perp(w: &VectorField) -> VectorField {
    VectorField {
        grid: w.grid,
        x: w.y.clone(),
        y: w.x.iter().map(|v| -v).collect(),
    }
}

/// 5-point Laplacian at interior nodes; boundary entries are 0 and carry no
/// meaning.
pub fn laplacian(u: &ScalarField) -> ScalarField {
    let g = *u.grid();
    let (ihx2, ihy2) = (1.0 / (g.hx() * g.hx()), 1.0 / (g.hy() * g.hy()));
    let mut out = vec![0.0; g.node_count()];
    for (i, j) in g.interior_nodes() {
        let c = u.at(i, j);
        out[g.index(i, j)] = (u.at(i + 1, j) - 2.0 * c + u.at(i - 1, j)) * ihx2
            + (u.at(i, j + 1) - 2.0 * c + u.at(i, j - 1)) * ihy2;
    }
    ScalarField::from_vec_unchecked(g, out)
}

/// Trapezoidal `∫ u v`.
pub fn inner(u: &ScalarField, v: &ScalarField) -> Result<f64> {
    u.same_grid(v)?;
    let g = u.grid();
    Ok((0..g.node_count())
        .map(|k| {
            let (i, j) = g.coords(k);
            g.weight(i, j) * u.values[k] * v.values[k]
        })
        .sum())
}

pub fn l2_norm(u: &ScalarField) -> f64 {
    inner(u, u).expect("same grid").max(0.0).sqrt()
}

pub fn l2_norm_vec(w: &VectorField) -> f64 {
    let g = w.grid();
    (0..g.node_count())
        .map(|k| {
            let (i, j) = g.coords(k);
            g.weight(i, j) * (w.x[k] * w.x[k] + w.y[k] * w.y[k])
        })
        .sum::<f64>()
        .sqrt()
}

/// `‖∇u‖₂` with the discrete gradient.
pub fn h1_seminorm(u: &ScalarField) -> f64 {
    l2_norm_vec(&gradient(u))
}

pub fn linf_norm(u: &ScalarField) -> f64 {
    u.values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Largest pointwise Euclidean length.
pub fn linf_norm_vec(w: &VectorField) -> f64 {
    w.x.iter()
        .zip(&w.y)
        .fold(0.0, |m: f64, (a, b)| m.max(a.hypot(*b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn build_grid_examples() {
        let g = Grid::new(1.0, 1.0, 4, 4).unwrap();
        assert_eq!(g.node_count(), 25);
        assert_eq!(g.hx(), 0.25);
        assert_eq!(g.hy(), 0.25);
        let g = Grid::new(2.0, 1.0, 4, 2).unwrap();
        assert_eq!((g.hx(), g.hy(), g.node_count()), (0.5, 0.5, 15));
        assert!(matches!(
            Grid::new(1.0, 1.0, 1, 4),
            Err(Error::InvalidParameter(_))
        ));
        assert!(Grid::new(0.0, 1.0, 4, 4).is_err());
        assert!(Grid::new(1.0, -1.0, 4, 4).is_err());
    }

    #[test]
    fn node_positions() {
        let g = Grid::new(2.0, 1.0, 4, 2).unwrap();
        assert_eq!(g.position(3, 1), (1.5, 0.5));
        let k = g.index(3, 1);
        assert_eq!(g.coords(k), (3, 1));
        assert_eq!(g.boundary_nodes().len(), 12);
    }

    #[test]
    fn partition_rules() {
        let g = Grid::unit_square(4).unwrap();
        let bp = BoundaryPartition::new(&[Edge::Left]).unwrap();
        assert_eq!(bp.classify(&g, 0, 0), Some(BoundaryClass::Gamma1));
        assert_eq!(bp.classify(&g, 0, 4), Some(BoundaryClass::Gamma1));
        assert_eq!(bp.classify(&g, 4, 0), Some(BoundaryClass::Gamma2));
        assert_eq!(bp.classify(&g, 2, 2), None);
        assert_eq!(bp.gamma2(), vec![Edge::Bottom, Edge::Right, Edge::Top]);

        assert!(BoundaryPartition::new(&[]).is_err());
        assert!(BoundaryPartition::new(&[Edge::Left, Edge::Right]).is_err());
        assert!(BoundaryPartition::new(&[Edge::Left, Edge::Bottom]).is_ok());
        assert!(BoundaryPartition::new(&[Edge::Top, Edge::Left, Edge::Bottom]).is_ok());
        assert!(BoundaryPartition::new(&Edge::ALL).is_ok());
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let g = Grid::unit_square(6).unwrap();
        let d = gradient(&ScalarField::constant(g, 7.0));
        assert!(d.is_zero());
    }

    #[test]
    fn gradient_exact_on_linear_and_quadratic() {
        let g = Grid::unit_square(8).unwrap();
        let d = gradient(&ScalarField::from_fn(g, |x, _| x));
        for k in 0..g.node_count() {
            assert_abs_diff_eq!(d.x()[k], 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(d.y()[k], 0.0, epsilon = 1e-12);
        }
        let d = gradient(&ScalarField::from_fn(g, |x, _| x * x));
        for (i, j) in g.interior_nodes() {
            let (x, _) = g.position(i, j);
            assert_abs_diff_eq!(d.x()[g.index(i, j)], 2.0 * x, epsilon = 1e-12);
        }
    }

    #[test]
    fn perp_examples() {
        let g = Grid::unit_square(3).unwrap();
        let w = VectorField::constant(g, [1.0, 2.0]);
        let p = perp(&w);
        assert_eq!(p.at(5), [2.0, -1.0]);
        assert_eq!(perp(&p), w.scale(-1.0));
        assert!(w.dot(&p).unwrap().values().iter().all(|&v| v == 0.0));
        assert_abs_diff_eq!(l2_norm_vec(&p), l2_norm_vec(&w), epsilon = 1e-15);
    }

    #[test]
    fn laplacian_examples() {
        let g = Grid::new(1.0, 2.0, 8, 10).unwrap();
        let l = laplacian(&ScalarField::from_fn(g, |x, y| x * x + y * y));
        for (i, j) in g.interior_nodes() {
            assert_abs_diff_eq!(l.at(i, j), 4.0, epsilon = 1e-10);
        }
        for f in [|x: f64, y: f64| 3.0 * x - y + 1.0, |x: f64, y: f64| x * y] {
            let l = laplacian(&ScalarField::from_fn(g, f));
            for (i, j) in g.interior_nodes() {
                assert_abs_diff_eq!(l.at(i, j), 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn laplacian_second_order() {
        let err = |n: usize| {
            let g = Grid::unit_square(n).unwrap();
            let u = ScalarField::from_fn(g, |x, y| (x + 2.0 * y).sin() * (0.5 * x).exp());
            let l = laplacian(&u);
            g.interior_nodes()
                .map(|(i, j)| {
                    let (x, y) = g.position(i, j);
                    // Δ[sin(x+2y) e^{x/2}] = e^{x/2} (-5 sin + cos + 0.25 sin)
                    let exact = (0.5 * x).exp()
                        * (-4.75 * (x + 2.0 * y).sin() + (x + 2.0 * y).cos());
                    (l.at(i, j) - exact).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2, e3) = (err(16), err(32), err(64));
        for r in [e1 / e2, e2 / e3] {
            assert!((3.5..=4.5).contains(&r), "ratio {r}");
        }
    }

    #[test]
    fn norms_and_inner() {
        let g = Grid::unit_square(5).unwrap();
        assert_abs_diff_eq!(l2_norm(&ScalarField::constant(g, 1.0)), 1.0, epsilon = 1e-14);
        let z = ScalarField::zeros(g);
        assert_eq!(l2_norm(&z), 0.0);
        assert_eq!(h1_seminorm(&z), 0.0);
        assert_eq!(linf_norm(&z), 0.0);
        let x = ScalarField::from_fn(g, |x, _| x);
        assert_abs_diff_eq!(inner(&x, &ScalarField::constant(g, 1.0)).unwrap(), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(inner(&x, &x).unwrap(), l2_norm(&x).powi(2), epsilon = 1e-14);
        let other = ScalarField::zeros(Grid::unit_square(6).unwrap());
        assert!(matches!(inner(&x, &other), Err(Error::GridMismatch)));
    }
}
