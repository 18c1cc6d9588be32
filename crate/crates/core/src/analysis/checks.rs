use serde::{Deserialize, Serialize};

use super::{CheckResult, EstimateContext};
use crate::coupled::{PhysicsParams, SolutionNorms, SolveReport};
use crate::error::Result;
use crate::grid::{gradient, l2_norm, linf_norm_vec, ScalarField};

/// Quadrature slack on norm inequalities.
pub const APRIORI_TOLERANCE: f64 = 0.02;

/// `inf_Γ T_w ≤ T ≤ sup_Γ T_w` up to `tol_abs = 10·linear_tol·(range + 1)`.
///
/// `lhs` is the largest excursion of `T` outside `[min T_w, max T_w]`
/// (non-positive when `T` stays inside), `rhs` is `tol_abs`.
pub fn check_max_principle(t: &ScalarField, trace: &ScalarField, linear_tol: f64) -> CheckResult {
    let (lo, hi) = trace.boundary_min_max();
    let tol_abs = 10.0 * linear_tol * (hi - lo + 1.0);
    let excess = t
        .values()
        .iter()
        .map(|&v| (v - hi).max(lo - v))
        .fold(f64::NEG_INFINITY, f64::max);
    CheckResult::compare("max_principle", excess, tol_abs, 0.0)
}

/// Energy bounds, applicable when `‖∇Θ‖∞ < λ/(2C²‖K‖∞)`.
pub fn check_apriori_norms(norms: &SolutionNorms, lambda: f64, ctx: &EstimateContext) -> Vec<CheckResult> {
    const NAMES: [&str; 4] = [
        "apriori_grad_psi",
        "apriori_grad_h",
        "apriori_grad_psi_area",
        "apriori_grad_h_area",
    ];
    let c = ctx.c;
    let k = norms.k_linf;
    if k <= 0.0 {
        return NAMES
            .iter()
            .map(|n| CheckResult::inapplicable(*n, "K vanishes identically"))
            .collect();
    }
    let threshold = lambda / (2.0 * c * c * k);
    if norms.grad_theta_linf >= threshold {
        let note = format!(
            "precondition fails: |grad theta|_inf = {:e} >= {:e}",
            norms.grad_theta_linf, threshold
        );
        return NAMES.iter().map(|n| CheckResult::inapplicable(*n, note.clone())).collect();
    }
    let area = ctx.mes_omega.sqrt();
    vec![
        CheckResult::compare(NAMES[0], norms.grad_psi_l2, 2.0 * c * k * norms.grad_theta_l2, APRIORI_TOLERANCE),
        CheckResult::compare(NAMES[1], norms.grad_h_l2, norms.grad_theta_l2, APRIORI_TOLERANCE),
        CheckResult::compare(NAMES[2], norms.grad_psi_l2, lambda / c * area, APRIORI_TOLERANCE),
        CheckResult::compare(NAMES[3], norms.grad_h_l2, threshold * area, APRIORI_TOLERANCE),
    ]
}

pub fn check_apriori(report: &SolveReport, ctx: &EstimateContext) -> Vec<CheckResult> {
    check_apriori_norms(&report.norms, report.lambda, ctx)
}

/// A dimensionless smallness ratio; the associated condition holds iff `value < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub value: f64,
    pub satisfied: bool,
}

impl Ratio {
    fn new(value: f64) -> Self {
        Ratio {
            value,
            satisfied: value < 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallnessReport {
    /// `M·C·‖K‖∞/λ`.
    pub r_unique: Ratio,
    /// `C²·‖K‖∞·‖∇Θ‖∞/λ`.
    pub r_contract: Ratio,
    /// `2C²·‖K‖∞·‖∇Θ‖∞/λ`.
    pub r_apriori: Ratio,
    /// `max(C‖∇Θ‖∞, M)·C‖K‖∞/λ`.
    pub r_existence: Ratio,
    /// `‖K·∇Θ‖₂`, reported without a threshold of its own.
    pub k_grad_theta_l2: f64,
    pub m: f64,
    pub c: f64,
    pub k_linf: f64,
    pub grad_theta_linf: f64,
    pub lambda: f64,
}

impl SmallnessReport {
    pub fn all_satisfied(&self) -> bool {
        self.r_unique.satisfied && self.r_contract.satisfied && self.r_apriori.satisfied
    }
}

pub fn smallness_report(params: &PhysicsParams, theta: &ScalarField, ctx: &EstimateContext) -> Result<SmallnessReport> {
    let grad = gradient(theta);
    let k_grad = params.k.dot(&grad)?;
    let c = ctx.c;
    let k = params.k_linf();
    let lambda = params.lambda;
    let m = theta.boundary_min_max().1;
    let g = linf_norm_vec(&grad);
    let r_contract = c * c * k * g / lambda;
    Ok(SmallnessReport {
        r_unique: Ratio::new(m * c * k / lambda),
        r_contract: Ratio::new(r_contract),
        r_apriori: Ratio::new(2.0 * r_contract),
        r_existence: Ratio::new((c * g).max(m) * c * k / lambda),
        k_grad_theta_l2: l2_norm(&k_grad),
        m,
        c,
        k_linf: k,
        grad_theta_linf: g,
        lambda,
    })
}
