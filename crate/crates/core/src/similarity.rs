//! Boundary-layer similarity profiles for free convection along a vertical
//! wall, found by shooting on `f''' = −a·f·f'' + b·f'²`.
//!
//! The temperature profile is `θ = f'` in both the prescribed-temperature
//! and the prescribed-flux scaling.

use std::io::Write;

use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// Magnitude of `f'` or `f''` at which a trajectory is treated as blown up.
pub const DIVERGENCE_GUARD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimilarityCase {
    /// `f(0) = −γ`, `f'(0) = 1`, `f'(∞) = 0`; shoots on `f''(0)`.
    Temperature,
    /// `f(0) = −γ`, `f''(0) = −1`, `f'(∞) = 0`; shoots on `f'(0)`.
    Flux,
    /// User coefficients with the temperature-type boundary conditions.
    Generalized { a: f64, b: f64 },
}

impl SimilarityCase {
    pub fn name(&self) -> &'static str {
        match self {
            SimilarityCase::Temperature => "temp",
            SimilarityCase::Flux => "flux",
            SimilarityCase::Generalized { .. } => "general",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityProblem {
    pub case: SimilarityCase,
    pub m: f64,
    pub gamma: f64,
    pub t_max: f64,
    /// Upper bound on the RK4 step; the actual step divides `t_max` evenly.
    pub step: f64,
    pub far_field_tol: f64,
}

impl SimilarityProblem {
    pub fn new(case: SimilarityCase, m: f64, gamma: f64) -> Self {
        SimilarityProblem {
            case,
            m,
            gamma,
            t_max: 20.0,
            step: 1e-3,
            far_field_tol: 1e-8,
        }
    }

    pub fn temperature(m: f64, gamma: f64) -> Self {
        Self::new(SimilarityCase::Temperature, m, gamma)
    }

    pub fn flux(m: f64, gamma: f64) -> Self {
        Self::new(SimilarityCase::Flux, m, gamma)
    }

    pub fn blasius() -> Self {
        Self::new(SimilarityCase::Generalized { a: 1.0, b: 0.0 }, 0.0, 0.0)
    }

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.far_field_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.m, self.gamma].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("m and gamma must be finite".into()));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::InvalidParameter(format!("t_max must be positive, got {}", self.t_max)));
        }
        if !(self.step > 0.0 && self.step <= 1e-3 * self.t_max) {
            return Err(Error::InvalidParameter(format!(
                "step must lie in (0, 1e-3·t_max], got {}",
                self.step
            )));
        }
        if !(self.far_field_tol > 0.0) {
            return Err(Error::InvalidParameter("far_field_tol must be positive".into()));
        }
        if let SimilarityCase::Generalized { a, b } = self.case {
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::InvalidParameter("coefficients must be finite".into()));
            }
        }
        Ok(())
    }

    /// `(a, b)` in `f''' = −a·f·f'' + b·f'²`.
    pub fn coefficients(&self) -> (f64, f64) {
        match self.case {
            SimilarityCase::Temperature => ((self.m + 1.0) / 2.0, self.m),
            SimilarityCase::Flux => (self.m + 2.0, 2.0 * self.m + 1.0),
            SimilarityCase::Generalized { a, b } => (a, b),
        }
    }

    /// Initial state `(f, f', f'')` for a given free value.
    pub fn initial_state(&self, shot: f64) -> [f64; 3] {
        match self.case {
            SimilarityCase::Flux => [-self.gamma, shot, -1.0],
            _ => [-self.gamma, 1.0, shot],
        }
    }

    fn shot_of(&self, init: [f64; 3]) -> f64 {
        match self.case {
            SimilarityCase::Flux => init[1],
            _ => init[2],
        }
    }

    fn steps(&self) -> usize {
        (self.t_max / self.step).ceil() as usize
    }
}

/// `(f', f'', f''')` at `state = (f, f', f'')`.
pub fn ode_rhs(problem: &SimilarityProblem, state: [f64; 3]) -> [f64; 3] {
    let (a, b) = problem.coefficients();
    let [f, fp, fpp] = state;
    [fp, fpp, -a * f * fpp + b * fp * fp]
}

fn rk4_step(problem: &SimilarityProblem, y: [f64; 3], h: f64) -> [f64; 3] {
    let add = |y: [f64; 3], k: [f64; 3], s: f64| [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2]];
    let k1 = ode_rhs(problem, y);
    let k2 = ode_rhs(problem, add(y, k1, h / 2.0));
    let k3 = ode_rhs(problem, add(y, k2, h / 2.0));
    let k4 = ode_rhs(problem, add(y, k3, h));
    std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

fn blown_up(y: [f64; 3]) -> bool {
    !y.iter().all(|v| v.is_finite()) || y[1].abs() > DIVERGENCE_GUARD || y[2].abs() > DIVERGENCE_GUARD
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityProfile {
    pub t: Vec<f64>,
    pub f: Vec<f64>,
    pub fp: Vec<f64>,
    pub fpp: Vec<f64>,
    pub shot_parameter: f64,
    /// `|f'(t_max)|`; infinite when the trajectory diverged.
    pub residual: f64,
    pub diverged: bool,
    /// `residual ≤ far_field_tol` and `|f''(t_max)| ≤ √far_field_tol`. The
    /// second condition rejects trajectories whose `f'` merely crosses zero
    /// at `t_max` on the way to blow-up.
    pub converged: bool,
}

impl SimilarityProfile {
    pub fn t_max(&self) -> f64 {
        *self.t.last().unwrap()
    }

    /// `(f, f')` at `t`, cubic Hermite in each interval; the far-field values
    /// `(f(t_max), 0)` beyond the truncation.
    pub fn sample(&self, t: f64) -> (f64, f64) {
        let n = self.t.len();
        if t >= self.t[n - 1] {
            return (self.f[n - 1], 0.0);
        }
        let k = match self.t.partition_point(|&s| s <= t) {
            0 => 0,
            p => (p - 1).min(n - 2),
        };
        let (t0, t1) = (self.t[k], self.t[k + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let hermite = |y0: f64, y1: f64, d0: f64, d1: f64| {
            let s2 = s * s;
            let s3 = s2 * s;
            (2.0 * s3 - 3.0 * s2 + 1.0) * y0
                + (s3 - 2.0 * s2 + s) * h * d0
                + (-2.0 * s3 + 3.0 * s2) * y1
                + (s3 - s2) * h * d1
        };
        (
            hermite(self.f[k], self.f[k + 1], self.fp[k], self.fp[k + 1]),
            hermite(self.fp[k], self.fp[k + 1], self.fpp[k], self.fpp[k + 1]),
        )
    }

    /// CSV with header `t,f,fp,fpp`, 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,f,fp,fpp")?;
        for k in 0..self.t.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.t[k], self.f[k], self.fp[k], self.fpp[k]
            )?;
        }
        Ok(())
    }
}

/// Fixed-step RK4 on `[0, t_max]`, stopping early on blow-up.
pub fn integrate_profile(problem: &SimilarityProblem, init: [f64; 3]) -> SimilarityProfile {
    let n = problem.steps();
    let h = problem.t_max / n as f64;
    let mut profile = SimilarityProfile {
        t: Vec::with_capacity(n + 1),
        f: Vec::with_capacity(n + 1),
        fp: Vec::with_capacity(n + 1),
        fpp: Vec::with_capacity(n + 1),
        shot_parameter: problem.shot_of(init),
        residual: f64::INFINITY,
        diverged: false,
        converged: false,
    };
    let mut y = init;
    let push = |p: &mut SimilarityProfile, t: f64, y: [f64; 3]| {
        p.t.push(t);
        p.f.push(y[0]);
        p.fp.push(y[1]);
        p.fpp.push(y[2]);
    };
    push(&mut profile, 0.0, y);
    for k in 1..=n {
        let next = rk4_step(problem, y, h);
        if blown_up(next) {
            profile.diverged = true;
            return profile;
        }
        y = next;
        let t = if k == n { problem.t_max } else { k as f64 * h };
        push(&mut profile, t, y);
    }
    profile.residual = y[1].abs();
    let decaying = y[2].abs() <= problem.far_field_tol.sqrt();
    profile.converged = profile.residual <= problem.far_field_tol && decaying;
    profile
}

/// State at `t_max`, or at the step before blow-up together with `true`.
fn far_field_end(problem: &SimilarityProblem, shot: f64) -> ([f64; 3], bool) {
    let n = problem.steps();
    let h = problem.t_max / n as f64;
    let mut y = problem.initial_state(shot);
    for _ in 0..n {
        let next = rk4_step(problem, y, h);
        if blown_up(next) {
            let escape = if next[1].is_finite() { next[1] } else { y[1].signum() * DIVERGENCE_GUARD };
            return ([y[0], escape, y[2]], true);
        }
        y = next;
    }
    (y, false)
}

/// Signed far-field miss `f'(t_max; shot)`. A blown-up trajectory reports
/// its `f'` at exit, which carries the sign of the escape.
pub fn far_field_miss(problem: &SimilarityProblem, shot: f64) -> f64 {
    far_field_end(problem, shot).0[1]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingConfig {
    pub bracket: (f64, f64),
    pub subdivisions: usize,
    pub bisection_tol: f64,
    pub execution: Execution,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig {
            bracket: (-10.0, 10.0),
            subdivisions: 200,
            bisection_tol: 1e-10,
            execution: Execution::default(),
        }
    }
}

impl ShootingConfig {
    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bracket;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter(format!("bracket must satisfy lo < hi, got [{lo}, {hi}]")));
        }
        if self.subdivisions == 0 || !(self.bisection_tol > 0.0) {
            return Err(Error::InvalidParameter("subdivisions and bisection_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Scan levels spent zooming into a near-miss.
const ZOOM_DEPTH: usize = 5;
/// Near-misses zoomed into at the top level.
const ZOOM_CANDIDATES: usize = 8;
/// Subdivisions of each zoomed sub-bracket.
const ZOOM_SUBDIVISIONS: usize = 40;

/// Candidate roots of the scan in increasing order, as
/// `(lo, hi, miss(lo), miss(hi))`.
///
/// Besides sign changes of the far-field miss, scan points already within
/// the far-field tolerance appear as degenerate brackets `lo = hi`. Near a
/// decaying solution the miss is negative only in a window that can be far
/// narrower than the scan spacing, so the smallest local minima of `|miss|`
/// are rescanned on their neighbouring sub-brackets, down to `ZOOM_DEPTH`
/// levels.
///
/// A decaying far field needs `f''' ≈ −a·f(∞)·f''` with `a·f(∞) > 0`. Sign
/// changes between two trajectories that both end bounded with
/// `a·f(t_max) ≤ 0` cannot contain such a solution and are dropped.
pub fn scan_brackets(problem: &SimilarityProblem, cfg: &ShootingConfig) -> Result<Vec<(f64, f64, f64, f64)>> {
    problem.validate()?;
    cfg.validate()?;
    let mut out = scan_level(problem, cfg, cfg.bracket, cfg.subdivisions, ZOOM_DEPTH, ZOOM_CANDIDATES);
    out.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    out.dedup();
    Ok(out)
}

fn scan_level(
    problem: &SimilarityProblem,
    cfg: &ShootingConfig,
    (lo, hi): (f64, f64),
    n: usize,
    depth: usize,
    zooms: usize,
) -> Vec<(f64, f64, f64, f64)> {
    let (a, _) = problem.coefficients();
    let xs: Vec<f64> = (0..=n)
        .map(|i| if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 })
        .collect();
    let ends = par::map(&xs, cfg.execution, |&s| far_field_end(problem, s));
    let miss: Vec<f64> = ends.iter().map(|(y, _)| y[1]).collect();
    let may_decay = |i: usize| a == 0.0 || ends[i].1 || a * ends[i].0[0] > 0.0;
    let mut out = Vec::new();
    for i in 0..=n {
        if miss[i].abs() <= problem.far_field_tol {
            out.push((xs[i], xs[i], miss[i], miss[i]));
        }
        if i < n && miss[i] * miss[i + 1] < 0.0 && (may_decay(i) || may_decay(i + 1)) {
            out.push((xs[i], xs[i + 1], miss[i], miss[i + 1]));
        }
    }
    if depth == 0 || n < 2 {
        return out;
    }
    // A sign change next to a near-miss may straddle a blow-up jump rather
    // than the root, so near-misses are zoomed into regardless.
    let mut minima: Vec<usize> = (1..n)
        .filter(|&i| {
            let m = miss[i].abs();
            m > problem.far_field_tol && m <= miss[i - 1].abs() && m <= miss[i + 1].abs() && may_decay(i)
        })
        .collect();
    minima.sort_by(|&x, &y| miss[x].abs().total_cmp(&miss[y].abs()));
    for &i in minima.iter().take(zooms) {
        out.extend(scan_level(problem, cfg, (xs[i - 1], xs[i + 1]), ZOOM_SUBDIVISIONS, depth - 1, 1));
    }
    out
}

const JUMP_TEST_HALVINGS: usize = 12;

/// Bisection to `tol` on a sign-change bracket, then one secant polish.
fn refine(problem: &SimilarityProblem, bracket: (f64, f64, f64, f64), tol: f64) -> f64 {
    let (mut lo, mut hi, mut glo, mut ghi) = bracket;
    if lo == hi {
        return lo;
    }
    let initial = glo.abs().max(ghi.abs());
    let mut halvings = 0;
    while hi - lo > tol {
        // Across a continuous crossing the end values shrink with the
        // bracket; across a blow-up jump they do not.
        halvings += 1;
        if halvings == JUMP_TEST_HALVINGS && glo.abs().max(ghi.abs()) > 0.5 * initial {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let gm = far_field_miss(problem, mid);
        if gm == 0.0 {
            return mid;
        }
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
            ghi = gm;
        }
    }
    let mid = 0.5 * (lo + hi);
    let secant = lo - glo * (hi - lo) / (ghi - glo);
    if secant.is_finite() && (lo..=hi).contains(&secant) {
        let gs = far_field_miss(problem, secant).abs();
        if gs <= far_field_miss(problem, mid).abs() {
            return secant;
        }
    }
    mid
}

fn solve_in(problem: &SimilarityProblem, bracket: (f64, f64, f64, f64), tol: f64) -> SimilarityProfile {
    let shot = refine(problem, bracket, tol);
    integrate_profile(problem, problem.initial_state(shot))
}

/// First solution in the configured bracket, scanning from its lower end.
/// Sign changes caused by blow-up on both sides are rejected by the
/// far-field tolerance.
pub fn shoot(problem: &SimilarityProblem, cfg: &ShootingConfig) -> Result<SimilarityProfile> {
    let brackets = scan_brackets(problem, cfg)?;
    for &b in &brackets {
        let profile = solve_in(problem, b, cfg.bisection_tol);
        if profile.converged {
            return Ok(profile);
        }
    }
    Err(Error::NoSolutionFound {
        lo: cfg.bracket.0,
        hi: cfg.bracket.1,
        scanned: brackets,
    })
}

/// Every converged solution found in the scan, in increasing shot order.
pub fn shoot_all(problem: &SimilarityProblem, cfg: &ShootingConfig) -> Result<Vec<SimilarityProfile>> {
    let brackets = scan_brackets(problem, cfg)?;
    let profiles = par::map(&brackets, cfg.execution, |&b| solve_in(problem, b, cfg.bisection_tol));
    let mut found: Vec<SimilarityProfile> = Vec::new();
    for p in profiles.into_iter().filter(|p| p.converged) {
        // A scan point hit and its neighbouring sign change can yield the same root.
        match found.last() {
            Some(q) if (q.shot_parameter - p.shot_parameter).abs() <= 10.0 * cfg.bisection_tol => {}
            _ => found.push(p),
        }
    }
    Ok(found)
}

pub fn shoot_temperature(m: f64, gamma: f64, cfg: &ShootingConfig) -> Result<SimilarityProfile> {
    shoot(&SimilarityProblem::temperature(m, gamma), cfg)
}

pub fn shoot_flux(m: f64, gamma: f64, cfg: &ShootingConfig) -> Result<SimilarityProfile> {
    shoot(&SimilarityProblem::flux(m, gamma), cfg)
}

/// Dimensional data of the wall problem; `T_w(x) = T∞ + A·x^m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub rho_inf: f64,
    pub beta: f64,
    pub g: f64,
    pub k: f64,
    pub mu: f64,
    pub lambda: f64,
    pub a: f64,
    pub omega: f64,
    pub t_inf: f64,
}

impl PhysicalConstants {
    /// All positive constants equal to one, `ω = T∞ = 0`.
    pub fn unit() -> Self {
        PhysicalConstants {
            rho_inf: 1.0,
            beta: 1.0,
            g: 1.0,
            k: 1.0,
            mu: 1.0,
            lambda: 1.0,
            a: 1.0,
            omega: 0.0,
            t_inf: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.rho_inf, self.beta, self.g, self.k, self.mu, self.lambda, self.a];
        if !positive.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::InvalidParameter(
                "rho_inf, beta, g, k, mu, lambda and A must be positive".into(),
            ));
        }
        if !(self.omega.is_finite() && self.t_inf.is_finite()) {
            return Err(Error::InvalidParameter("omega and T_inf must be finite".into()));
        }
        Ok(())
    }

    /// `ρ∞βgk/(μλ)`.
    fn buoyancy_ratio(&self) -> f64 {
        self.rho_inf * self.beta * self.g * self.k / (self.mu * self.lambda)
    }
}

fn excluded_m(case: SimilarityCase, m: f64) -> Result<()> {
    match case {
        SimilarityCase::Temperature if m == -1.0 => {
            Err(Error::InvalidParameter("m = -1 is excluded for the temperature case".into()))
        }
        SimilarityCase::Flux if m == -2.0 => {
            Err(Error::InvalidParameter("m = -2 is excluded for the flux case".into()))
        }
        SimilarityCase::Generalized { .. } => Err(Error::InvalidParameter(
            "physical scalings exist only for the temperature and flux cases".into(),
        )),
        _ => Ok(()),
    }
}

/// Mass-transfer parameter from the wall suction/injection velocity ω.
pub fn gamma_value(case: SimilarityCase, c: &PhysicalConstants, m: f64) -> Result<f64> {
    c.validate()?;
    excluded_m(case, m)?;
    Ok(match case {
        SimilarityCase::Temperature => {
            2.0 * c.omega / (m + 1.0) * (c.mu / (c.rho_inf * c.beta * c.g * c.k * c.a * c.lambda)).sqrt()
        }
        _ => 3f64.cbrt() * c.buoyancy_ratio().powf(-1.0 / 3.0) * c.omega / (c.lambda * (m + 2.0)),
    })
}

/// Local `Ra_x` for the temperature case, the global `R_a` for the flux case.
pub fn rayleigh(case: SimilarityCase, c: &PhysicalConstants, x: f64, m: f64) -> Result<f64> {
    c.validate()?;
    match case {
        SimilarityCase::Temperature => {
            if !(x > 0.0) {
                return Err(Error::InvalidParameter(format!("Ra_x needs x > 0, got {x}")));
            }
            Ok(c.buoyancy_ratio() * c.a * x.powf(m + 1.0))
        }
        SimilarityCase::Flux => Ok(c.buoyancy_ratio()),
        SimilarityCase::Generalized { .. } => excluded_m(case, m).map(|_| f64::NAN),
    }
}

/// `(Ψ, T)` at sample points `(x, y)`, `x > 0`, `y ≥ 0`.
pub fn reconstruct_fields(
    profile: &SimilarityProfile,
    case: SimilarityCase,
    c: &PhysicalConstants,
    m: f64,
    points: &[(f64, f64)],
) -> Result<(Vec<f64>, Vec<f64>)> {
    c.validate()?;
    excluded_m(case, m)?;
    if !profile.converged {
        return Err(Error::InvalidParameter("profile did not converge".into()));
    }
    let mut psi = Vec::with_capacity(points.len());
    let mut temp = Vec::with_capacity(points.len());
    for &(x, y) in points {
        if !(x > 0.0) || !(y >= 0.0) {
            return Err(Error::InvalidParameter(format!("sample point needs x > 0 and y >= 0, got ({x}, {y})")));
        }
        match case {
            SimilarityCase::Temperature => {
                let ra = rayleigh(case, c, x, m)?.sqrt();
                let (f, theta) = profile.sample(ra * y / x);
                psi.push(c.lambda * ra * f);
                temp.push(c.a * x.powf(m) * theta + c.t_inf);
            }
            _ => {
                let ra = c.buoyancy_ratio();
                let t = 3f64.powf(-1.0 / 3.0) * ra.cbrt() * x.powf((m - 1.0) / 3.0) * y;
                let (f, theta) = profile.sample(t);
                psi.push(3f64.powf(2.0 / 3.0) * ra.cbrt() * c.lambda * x.powf((m + 2.0) / 3.0) * f);
                temp.push(3f64.cbrt() * ra.powf(-1.0 / 3.0) * x.powf((2.0 * m + 1.0) / 3.0) * theta + c.t_inf);
            }
        }
    }
    Ok((psi, temp))
}
