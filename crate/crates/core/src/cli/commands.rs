use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{
    random_smooth_field, trilinear_a, trilinear_a_skew, CheckResult, EstimateContext, Ratio, SmallnessReport, Vanish,
    APRIORI_TOLERANCE,
};
use crate::coupled::{
    equation_residuals, residual_max, solve_coupled_with, solve_linearized, PhysicsParams, ResidualRecord,
    SolutionNorms, SolveOptions, SolveReport,
};
use crate::error::Error;
use crate::grid::{h1_seminorm, l2_norm, linf_norm};
use crate::par::{self, Execution};
use crate::similarity::{
    gamma_value, shoot, shoot_all, PhysicalConstants, ShootingConfig, SimilarityCase, SimilarityProblem,
    SimilarityProfile,
};

use super::config::{Format, Problem, RunConfig, Source, SweepConfig};
use super::output::{self, csv_cell};
use super::{
    CaseArg, CliError, ConfigArgs, SimilarityArgs, SweepArgs, EXIT_CHECK_FAILED, EXIT_NOT_CONVERGED, EXIT_OK,
    EXIT_USAGE, WORKERS_ENV,
};

/// Random fields drawn for each Poincaré and trilinear check.
const VERIFY_SAMPLES: usize = 100;
/// Relative floor for the skew identity, against `‖u‖∞‖∇u‖₂‖∇w‖₂`.
const SKEW_TOLERANCE: f64 = 1e-13;

fn output_dir(problem: &Problem, src: &Source) -> Result<PathBuf, CliError> {
    let dir = &problem.output.directory;
    let dir = if dir.is_absolute() {
        dir.clone()
    } else {
        src.path.parent().unwrap_or(Path::new(".")).join(dir)
    };
    output::create_dir(&dir)?;
    Ok(dir)
}

fn deterministic<R: Send>(on: bool, op: impl FnOnce() -> R + Send) -> R {
    if on {
        par::with_workers(1, op)
    } else {
        op()
    }
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    converged: bool,
    iterations: usize,
    final_residual: Option<&'a ResidualRecord>,
    /// Max-norm residuals of the unshifted equations at interior nodes.
    original_residual_psi: f64,
    original_residual_t: f64,
    norms: &'a SolutionNorms,
    estimates: &'a EstimateContext,
    smallness: &'a SmallnessReport,
    checks: &'a [CheckResult],
}

fn original_residuals(report: &SolveReport, params: &PhysicsParams, problem: &Problem) -> Result<(f64, f64), Error> {
    let (rp, rt) = equation_residuals(&report.psi, &report.t, params, problem.solver.advection_scheme)?;
    Ok((residual_max(&rp), residual_max(&rt)))
}

pub fn solve2d(args: &ConfigArgs) -> Result<i32, CliError> {
    let (cfg, src) = RunConfig::load(&args.config)?;
    let problem = cfg.problem(&src)?;
    let dir = output_dir(&problem, &src)?;
    let report = deterministic(args.deterministic, || {
        solve_coupled_with(
            &problem.params,
            &problem.grid,
            &problem.partition,
            &problem.solver,
            SolveOptions::default(),
        )
    })?;

    if problem.output.formats.contains(&Format::Csv) {
        output::write_fields_csv(&dir.join("fields.csv"), &report)?;
        output::write_convergence_csv(&dir.join("convergence.csv"), &report)?;
    }
    if problem.output.formats.contains(&Format::Vtk) {
        output::write_vtk(&dir.join("fields.vtk"), &report)?;
    }
    if problem.output.emit_report {
        let (rp, rt) = original_residuals(&report, &problem.params, &problem)?;
        let summary = SolveSummary {
            converged: report.converged,
            iterations: report.iterations,
            final_residual: report.residual_history.last(),
            original_residual_psi: rp,
            original_residual_t: rt,
            norms: &report.norms,
            estimates: &report.estimates,
            smallness: &report.smallness,
            checks: &report.checks,
        };
        output::write_json(&dir.join("report.json"), &summary)?;
    }

    Ok(if !report.converged {
        eprintln!("not converged after {} iterations", report.iterations);
        EXIT_NOT_CONVERGED
    } else if report.checks_pass() {
        EXIT_OK
    } else {
        for c in report.checks.iter().filter(|c| !c.ok()) {
            eprintln!("check failed: {} ({} > {})", c.name, c.lhs, c.rhs);
        }
        EXIT_CHECK_FAILED
    })
}

fn ratio_check(name: &str, r: &Ratio) -> CheckResult {
    let mut c = CheckResult::compare(name, r.value, 1.0, 0.0);
    // The smallness conditions are strict.
    c.satisfied = r.satisfied;
    c
}

fn verify_fields(problem: &Problem, est: &EstimateContext, seed: u64) -> Result<Vec<CheckResult>, Error> {
    let grid = &problem.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = vec![CheckResult::compare("poincare_order", est.c_dirichlet, est.c_mixed, 1e-9)];

    let worst = |name: &str, vanish: Vanish, c: f64, rng: &mut ChaCha8Rng| {
        let (mut lhs, mut rhs) = (0.0, 1.0);
        for _ in 0..VERIFY_SAMPLES {
            let u = random_smooth_field(grid, vanish, rng);
            let (l, r) = (l2_norm(&u), c * h1_seminorm(&u));
            if l * rhs > lhs * r {
                (lhs, rhs) = (l, r);
            }
        }
        CheckResult::compare(name, lhs, rhs, APRIORI_TOLERANCE)
    };
    checks.push(worst("poincare_dirichlet", Vanish::Boundary, est.c_dirichlet, &mut rng));
    checks.push(worst("poincare_mixed", Vanish::Gamma1(problem.partition), est.c_mixed, &mut rng));

    let (mut skew, mut skew_scale) = (0.0_f64, 0.0_f64);
    let (mut bound_lhs, mut bound_rhs) = (0.0, 1.0);
    for _ in 0..VERIFY_SAMPLES {
        let u = random_smooth_field(grid, Vanish::Nowhere, &mut rng);
        let v = random_smooth_field(grid, Vanish::Nowhere, &mut rng);
        let w = random_smooth_field(grid, Vanish::Boundary, &mut rng);
        skew = skew.max(trilinear_a_skew(&u, &u, &w)?.abs());
        skew_scale = skew_scale.max(linf_norm(&u) * h1_seminorm(&u) * h1_seminorm(&w));
        let l = trilinear_a(&u, &v, &w)?.abs();
        let r = linf_norm(&u) * h1_seminorm(&v) * h1_seminorm(&w);
        if l * bound_rhs > bound_lhs * r {
            (bound_lhs, bound_rhs) = (l, r);
        }
    }
    checks.push(CheckResult::compare("trilinear_skew", skew, SKEW_TOLERANCE * skew_scale, 0.0));
    checks.push(CheckResult::compare("trilinear_bound", bound_lhs, bound_rhs, 1e-12));
    Ok(checks)
}

fn contraction_checks(problem: &Problem, report: &SolveReport, seed: u64) -> Vec<CheckResult> {
    let r = report.smallness.r_contract.value;
    if !(r < 1.0) {
        let note = format!("r_contract = {r} >= 1");
        return vec![
            CheckResult::inapplicable("contraction_ratio", note.clone()),
            CheckResult::inapplicable("contraction_steps", note),
        ];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let f = random_smooth_field(&problem.grid, Vanish::Nowhere, &mut rng);
    let g = random_smooth_field(&problem.grid, Vanish::Boundary, &mut rng);
    let tol = problem.solver.picard_tol;
    match solve_linearized(
        &f,
        &g,
        &report.theta,
        &problem.params,
        &problem.grid,
        &problem.partition,
        &problem.solver,
    ) {
        Ok(sol) => {
            let worst = sol.ratio_history.iter().copied().fold(0.0, f64::max);
            let steps = (tol.ln() / r.ln()).ceil().max(0.0) + 5.0;
            vec![
                CheckResult::compare("contraction_ratio", worst, 1.1 * r, 0.0),
                CheckResult::compare("contraction_steps", sol.iterations as f64, steps, 0.0),
            ]
        }
        Err(e) => vec![CheckResult {
            name: "contraction_ratio".into(),
            lhs: f64::NAN,
            rhs: 1.1 * r,
            tolerance: 0.0,
            satisfied: false,
            applicable: true,
            note: Some(e.to_string()),
        }],
    }
}

#[derive(Serialize)]
struct VerifySummary<'a> {
    all_passed: bool,
    converged: bool,
    iterations: usize,
    estimates: &'a EstimateContext,
    smallness: &'a SmallnessReport,
    checks: &'a [CheckResult],
}

pub fn verify(args: &ConfigArgs) -> Result<i32, CliError> {
    let (cfg, src) = RunConfig::load(&args.config)?;
    let problem = cfg.problem(&src)?;
    let dir = output_dir(&problem, &src)?;

    let (report, mut checks) = deterministic(args.deterministic, || -> Result<_, Error> {
        let est = EstimateContext::compute(&problem.grid, &problem.partition, problem.solver.linear())?;
        let mut checks = verify_fields(&problem, &est, args.seed)?;
        let report = solve_coupled_with(
            &problem.params,
            &problem.grid,
            &problem.partition,
            &problem.solver,
            SolveOptions {
                initial_h: None,
                estimates: Some(est),
            },
        )?;
        let last = report.residual_history.last().map_or(f64::INFINITY, |r| r.psi.max(r.h));
        checks.push(CheckResult::compare("picard_converged", last, problem.solver.picard_tol, 0.0));
        checks.extend(report.checks.iter().cloned());
        if report.converged {
            let (rp, rt) = original_residuals(&report, &problem.params, &problem)?;
            let tol = problem.solver.picard_tol;
            checks.push(CheckResult::compare("original_residual_psi", rp, tol, 0.0));
            checks.push(CheckResult::compare("original_residual_t", rt, tol, 0.0));
        }
        let s = &report.smallness;
        checks.push(ratio_check("r_unique", &s.r_unique));
        checks.push(ratio_check("r_contract", &s.r_contract));
        checks.push(ratio_check("r_apriori", &s.r_apriori));
        checks.extend(contraction_checks(&problem, &report, args.seed));
        Ok((report, checks))
    })?;
    checks.iter_mut().for_each(|c| {
        if c.lhs.is_nan() && c.applicable {
            c.satisfied = false;
        }
    });

    let all_passed = checks.iter().all(CheckResult::ok);
    output::write_json(
        &dir.join("verify.json"),
        &VerifySummary {
            all_passed,
            converged: report.converged,
            iterations: report.iterations,
            estimates: &report.estimates,
            smallness: &report.smallness,
            checks: &checks,
        },
    )?;
    for c in checks.iter().filter(|c| !c.ok()) {
        eprintln!("check failed: {} ({} > {})", c.name, c.lhs, c.rhs);
    }
    Ok(if all_passed { EXIT_OK } else { EXIT_CHECK_FAILED })
}

/// One sweep point, in output column order.
#[derive(Debug, Clone, Copy)]
struct SweepPoint {
    lambda: f64,
    k_scale: f64,
    tw_scale: f64,
}

fn sweep_row(p: SweepPoint, problem: &Problem, est: &EstimateContext) -> Result<String, Error> {
    let params = PhysicsParams::new(problem.params.k.scale(p.k_scale), p.lambda, problem.params.tw.scaled(p.tw_scale));
    let report = solve_coupled_with(
        &params,
        &problem.grid,
        &problem.partition,
        &problem.solver,
        SolveOptions {
            initial_h: None,
            estimates: Some(*est),
        },
    )?;
    let max_principle_ok = report.checks.iter().filter(|c| c.name == "max_principle").all(CheckResult::ok);
    let apriori: Vec<&CheckResult> = report.checks.iter().filter(|c| c.name.starts_with("apriori")).collect();
    let apriori_ok = if apriori.iter().all(|c| !c.applicable) {
        "na".to_string()
    } else {
        apriori.iter().all(|c| c.ok()).to_string()
    };
    Ok(format!(
        "{},{},{:?},{:?},{},{},",
        report.converged,
        report.iterations,
        report.smallness.r_unique.value,
        report.smallness.r_contract.value,
        max_principle_ok,
        apriori_ok
    ))
}

fn resolve_workers(flag: Option<usize>, config: Option<usize>) -> Result<usize, CliError> {
    if let Some(w) = flag {
        return Ok(w);
    }
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        return v
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("{WORKERS_ENV} must be a non-negative integer, got {v:?}")));
    }
    Ok(config.unwrap_or(0))
}

pub fn sweep(args: &SweepArgs) -> Result<i32, CliError> {
    let src = Source::read(&args.config)?;
    let cfg: SweepConfig = src.parse()?;
    let problem = cfg.base().problem(&src)?;
    let s = &cfg.sweep;
    for (key, values, positive) in [("lambda", &s.lambda, true), ("k_scale", &s.k_scale, false), ("tw_scale", &s.tw_scale, false)] {
        if values.is_empty() {
            return Err(src.error_at(key, "needs at least one value"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0 || (positive && *v == 0.0)) {
            return Err(src.error_at(key, if positive { "values must be positive" } else { "values must be nonnegative" }));
        }
    }
    let workers = resolve_workers(args.workers, s.workers)?;
    let dir = output_dir(&problem, &src)?;

    let mut points = Vec::new();
    for &lambda in &s.lambda {
        for &k_scale in &s.k_scale {
            for &tw_scale in &s.tw_scale {
                points.push(SweepPoint { lambda, k_scale, tw_scale });
            }
        }
    }
    points.sort_by(|a, b| {
        a.lambda
            .total_cmp(&b.lambda)
            .then(a.k_scale.total_cmp(&b.k_scale))
            .then(a.tw_scale.total_cmp(&b.tw_scale))
    });

    let rows = par::with_workers(workers, || -> Result<Vec<Result<String, Error>>, Error> {
        // Poincaré constants depend only on the grid and partition.
        let est = EstimateContext::compute(&problem.grid, &problem.partition, problem.solver.linear())?;
        Ok(par::map(&points, Execution::Parallel, |p| sweep_row(*p, &problem, &est)))
    })?;

    let path = dir.join("sweep.csv");
    let mut text = String::from("lambda,k_scale,tw_scale,converged,iters,r_unique,r_contract,max_principle_ok,apriori_ok,error\n");
    let mut failed = 0;
    for (p, row) in points.iter().zip(&rows) {
        text.push_str(&format!("{:?},{:?},{:?},", p.lambda, p.k_scale, p.tw_scale));
        match row {
            Ok(r) => text.push_str(r),
            Err(e) => {
                failed += 1;
                text.push_str(&format!(",,,,,,{}", csv_cell(&e.to_string())));
            }
        }
        text.push('\n');
    }
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    if failed > 0 {
        eprintln!("{failed} of {} sweep rows failed", points.len());
        return Ok(EXIT_CHECK_FAILED);
    }
    Ok(EXIT_OK)
}

fn parse_constants(args: &SimilarityArgs, omega: f64) -> Result<PhysicalConstants, CliError> {
    let mut c = PhysicalConstants::unit();
    c.omega = omega;
    for kv in &args.constants {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("--constant expects NAME=VALUE, got {kv:?}")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("--constant {k}: not a number: {v:?}")))?;
        let slot = match k.trim() {
            "rho_inf" => &mut c.rho_inf,
            "beta" => &mut c.beta,
            "g" => &mut c.g,
            "k" => &mut c.k,
            "mu" => &mut c.mu,
            "lambda" => &mut c.lambda,
            "A" | "a" => &mut c.a,
            other => return Err(CliError::usage(format!("--constant: unknown name {other:?}"))),
        };
        *slot = v;
    }
    Ok(c)
}

fn similarity_problem(args: &SimilarityArgs) -> Result<SimilarityProblem, CliError> {
    let case = match (args.case, args.a, args.b) {
        (CaseArg::General, Some(a), Some(b)) => SimilarityCase::Generalized { a, b },
        (CaseArg::General, _, _) => return Err(CliError::usage("--case general needs both --a and --b")),
        (_, None, None) => match args.case {
            CaseArg::Temp => SimilarityCase::Temperature,
            _ => SimilarityCase::Flux,
        },
        _ => return Err(CliError::usage("--a and --b apply only to --case general")),
    };
    // The similarity reduction is singular at these exponents.
    match case {
        SimilarityCase::Temperature if args.m == -1.0 => {
            return Err(CliError::usage("--m -1 is excluded for the temperature case"))
        }
        SimilarityCase::Flux if args.m == -2.0 => return Err(CliError::usage("--m -2 is excluded for the flux case")),
        _ => {}
    }
    let gamma = match (args.gamma, args.gamma_from_omega) {
        (Some(g), None) => g,
        (None, Some(omega)) => {
            if matches!(case, SimilarityCase::Generalized { .. }) {
                return Err(CliError::usage("--gamma-from-omega needs --case temp or flux"));
            }
            gamma_value(case, &parse_constants(args, omega)?, args.m)?
        }
        _ => return Err(CliError::usage("give exactly one of --gamma and --gamma-from-omega")),
    };
    let mut problem = SimilarityProblem::new(case, args.m, gamma);
    if let Some(t) = args.tmax {
        problem = problem.with_t_max(t);
        problem.step = problem.step.min(1e-3 * t);
    }
    if let Some(tol) = args.tol {
        problem = problem.with_tolerance(tol);
    }
    problem.validate()?;
    Ok(problem)
}

fn write_profile(path: &Path, p: &SimilarityProfile) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    p.write_csv(std::io::BufWriter::new(file)).map_err(|e| CliError::io(path, e))
}

fn numbered(path: &Path, k: usize) -> PathBuf {
    let stem = path.file_stem().map_or_else(|| "profile".into(), |s| s.to_string_lossy().into_owned());
    let ext = path.extension().map_or_else(|| "csv".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}_{k}.{ext}"))
}

pub fn similarity(args: &SimilarityArgs) -> Result<i32, CliError> {
    let problem = similarity_problem(args)?;
    let mut cfg = ShootingConfig::default();
    if let Some(b) = &args.bracket {
        cfg.bracket = (b[0], b[1]);
    }
    let summary = |p: &SimilarityProfile| {
        println!(
            "{},{:?},{:?},{:?},{:?}",
            problem.case.name(),
            problem.m,
            problem.gamma,
            p.shot_parameter,
            p.residual
        )
    };
    let outcome = if args.all {
        shoot_all(&problem, &cfg).and_then(|all| {
            if all.is_empty() {
                Err(Error::NoSolutionFound {
                    lo: cfg.bracket.0,
                    hi: cfg.bracket.1,
                    scanned: Vec::new(),
                })
            } else {
                Ok(all)
            }
        })
    } else {
        shoot(&problem, &cfg).map(|p| vec![p])
    };
    match outcome {
        Ok(profiles) => {
            println!("case,m,gamma,shot_parameter,residual");
            for (k, p) in profiles.iter().enumerate() {
                let path = if args.all { numbered(&args.out, k) } else { args.out.clone() };
                write_profile(&path, p)?;
                summary(p);
            }
            Ok(EXIT_OK)
        }
        Err(Error::NoSolutionFound { lo, hi, scanned }) => {
            eprintln!("no decaying solution found in [{lo}, {hi}]");
            for (a, b, ma, mb) in &scanned {
                eprintln!("  bracket [{a:?}, {b:?}]: f'(t_max) = {ma:?}, {mb:?}");
            }
            Ok(EXIT_NOT_CONVERGED)
        }
        Err(e @ Error::InvalidParameter(_)) => Err(CliError::new(EXIT_USAGE, e.to_string())),
        Err(e) => Err(e.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbered_profiles_keep_the_extension() {
        assert_eq!(numbered(Path::new("out/p.csv"), 2), PathBuf::from("out/p_2.csv"));
        assert_eq!(numbered(Path::new("p"), 0), PathBuf::from("p_0.csv"));
    }

    #[test]
    fn workers_flag_wins() {
        assert_eq!(resolve_workers(Some(3), Some(5)).unwrap(), 3);
    }
}
