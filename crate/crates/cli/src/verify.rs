//! Invariant suite behind `fracsrc verify`.
//!
//! Every check reduces to a defect compared with a tolerance; the report is a
//! list of `{name, passed, defect, tolerance, seconds, error}` records.

use std::f64::consts::PI;
use std::time::Instant;

use fracsrc::elliptic::{
    assemble, eigensystem, weighted_inner, BoundarySubset, CoefficientField, DomainSpec, DEFAULT_MULT_TOL,
};
use fracsrc::forward::{l1_solve, relative_error, source_from_modes, SigmaForm, SourceSpec, SpectralModel};
use fracsrc::fractional::{TimeGrid, TimeSeries};
use fracsrc::inverse::{
    compute_gset, hopf_certificate, joint_factor_test, reconstruct_space_source, weight_errors, FactorTestOptions,
    Recovered, SpaceSourceOptions,
};
use fracsrc::laplace::{branch_jump, kernel_transform_quadrature, ModalCoefficients};
use fracsrc::mittag_leffler::{ml, MLParams};
use fracsrc::special::rgamma;
use fracsrc::Result;
use num_complex::Complex64;
use serde::Serialize;

use crate::config::{preset, ExperimentConfig, PRESETS};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub defect: f64,
    pub tolerance: f64,
    /// Wall time; left out of the JSON so reports are reproducible.
    #[serde(skip)]
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub failed: Vec<String>,
    pub checks: Vec<CheckResult>,
    #[serde(skip)]
    pub seconds: f64,
}

type Check = (&'static str, f64, fn(&ExperimentConfig) -> Result<f64>);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ml_exponential(_: &ExperimentConfig) -> Result<f64> {
    let p = MLParams::new(1.0, 1.0)?;
    let mut worst = 0.0f64;
    for i in 0..=20 {
        let x = -10.0 + i as f64;
        let v = ml(p, c(x, 0.0))?.re;
        worst = worst.max((v - x.exp()).abs() / x.exp());
    }
    Ok(worst)
}

fn ml_origin(_: &ExperimentConfig) -> Result<f64> {
    let mut worst = 0.0f64;
    for alpha in [0.3, 0.5, 0.8, 1.0] {
        for beta in [0.5, 1.0, 1.5, 2.0, 3.7] {
            let v = ml(MLParams::new(alpha, beta)?, c(0.0, 0.0))?.re;
            worst = worst.max((v - rgamma(beta)).abs());
        }
    }
    Ok(worst)
}

/// `E_{α,β}(z) = 1/Γ(β) + z E_{α,α+β}(z)`.
fn ml_recurrence(_: &ExperimentConfig) -> Result<f64> {
    let mut worst = 0.0f64;
    for alpha in [0.3, 0.5, 0.8] {
        for beta in [0.5, 1.0, 1.7] {
            for z in [c(0.3, 0.0), c(-0.7, 0.2), c(0.1, -0.9), c(-3.0, 1.0), c(2.0, 4.0)] {
                let lhs = ml(MLParams::new(alpha, beta)?, z)?;
                let rhs = rgamma(beta) + z * ml(MLParams::new(alpha, alpha + beta)?, z)?;
                worst = worst.max((lhs - rhs).norm() / lhs.norm().max(1.0));
            }
        }
    }
    Ok(worst)
}

/// `E_{1,2}(z) = (e^z - 1)/z`.
fn ml_exp_ratio(_: &ExperimentConfig) -> Result<f64> {
    let p = MLParams::new(1.0, 2.0)?;
    let mut worst = 0.0f64;
    for z in [c(0.5, 0.0), c(-0.8, 0.3), c(0.2, 0.9), c(-5.0, 0.0), c(3.0, -2.0)] {
        let exact = (z.exp() - 1.0) / z;
        worst = worst.max((ml(p, z)? - exact).norm() / exact.norm());
    }
    Ok(worst)
}

/// Quadrature transform of the relaxation kernel against `1/(p^α + λ)`.
fn laplace_kernel(_: &ExperimentConfig) -> Result<f64> {
    let mut worst = 0.0f64;
    for alpha in [0.3, 0.5, 0.8] {
        for lambda in [1.0, 10.0] {
            for p in [c(0.5, 0.0), c(2.0, 1.0), c(8.0, 0.0)] {
                let q = kernel_transform_quadrature(alpha, lambda, p)?;
                let exact = 1.0 / (p.powf(alpha) + lambda);
                worst = worst.max((q - exact).norm() / exact.norm());
            }
        }
    }
    Ok(worst)
}

/// Interval eigenvalues against the closed form `(4/h²) sin²(nh/2)`.
fn elliptic_eigenvalues(_: &ExperimentConfig) -> Result<f64> {
    let d = DomainSpec::interval(0.0, PI, 64)?;
    let op = assemble(&d, &CoefficientField::constant(d, 1.0, 0.0, 1.0))?;
    let eig = eigensystem(&op, 8, DEFAULT_MULT_TOL)?;
    let h = d.h(0);
    Ok(eig
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(j, l)| {
            let exact = 4.0 / (h * h) * ((j + 1) as f64 * h / 2.0).sin().powi(2);
            (l - exact).abs() / exact
        })
        .fold(0.0, f64::max))
}

fn elliptic_orthonormality(cfg: &ExperimentConfig) -> Result<f64> {
    let d = cfg.domain()?;
    let coeffs = cfg.coefficients(d)?;
    let op = assemble(&d, &coeffs)?;
    let eig = eigensystem(&op, cfg.solver.modes.min(op.interior().len()).min(12), DEFAULT_MULT_TOL)?;
    let mut worst = 0.0f64;
    for i in 0..eig.functions().len() {
        for j in 0..=i {
            let g = weighted_inner(eig.function(i), eig.function(j), &coeffs)?;
            worst = worst.max((g - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    Ok(worst)
}

/// Spectral and L1 solutions at `t = T` on a coarse line.
fn forward_cross_validation(cfg: &ExperimentConfig) -> Result<f64> {
    let d = DomainSpec::interval(0.0, PI, 64)?;
    let op = assemble(&d, &CoefficientField::constant(d, 1.0, 0.0, 1.0))?;
    let eig = eigensystem(&op, op.interior().len(), DEFAULT_MULT_TOL)?;
    let f = source_from_modes(&eig, &[1.0, 0.0, 0.5])?;
    let src = SourceSpec::new(f, SigmaForm::SmoothBump { start: 0.0, end: 0.6 }, 1.0, 0.4)?;
    let grid = TimeGrid::covering(1.0, 400)?;
    let spectral = SpectralModel::new(&eig, cfg.time.alpha, grid)?.solve(&src)?;
    let l1 = l1_solve(&op, cfg.time.alpha, &src, grid)?;
    relative_error(l1.final_snapshot(), spectral.final_snapshot(), op.coeffs())
}

/// Zero source gives zero flux, and the flux vanishes before `σ` switches on.
fn forward_causality(cfg: &ExperimentConfig) -> Result<f64> {
    let d = DomainSpec::interval(0.0, PI, 32)?;
    let op = assemble(&d, &CoefficientField::constant(d, 1.0, 0.0, 1.0))?;
    let eig = eigensystem(&op, 8, DEFAULT_MULT_TOL)?;
    let grid = TimeGrid::covering(2.0, 200)?;
    let model = SpectralModel::new(&eig, cfg.time.alpha, grid)?;
    let b = BoundarySubset::all(&d);
    let zero = SourceSpec::new(vec![0.0; d.n_nodes()], SigmaForm::Hat { start: 0.2, end: 0.6 }, 1.0, 0.4)?;
    let z = model.flux(&zero, &b)?.max_abs();
    let f = source_from_modes(&eig, &[1.0, -0.3])?;
    let src = SourceSpec::new(f, SigmaForm::Hat { start: 0.2, end: 0.6 }, 1.0, 0.4)?;
    let early = model.flux(&src, &b)?.max_abs_in_window(-1.0, 0.2);
    Ok(z + early)
}

/// Single mode `λ = c = σ̂ = R = 1`, `α = 1/2`: jump `-i`, both paths.
fn laplace_branch_jump(_: &ExperimentConfig) -> Result<f64> {
    let d = DomainSpec::interval(0.0, 1.0, 16)?;
    let m = ModalCoefficients::new(BoundarySubset::point(&d, 0)?, vec![1.0], vec![vec![1.0]])?;
    let j = branch_jump(&m, &|_| c(1.0, 0.0), 1.0, 0.5)?;
    Ok((j.closed_form[0] - c(0.0, -1.0)).norm().max(j.defect))
}

fn inverse_space_source(cfg: &ExperimentConfig) -> Result<f64> {
    let d = DomainSpec::interval(0.0, PI, 128)?;
    let op = assemble(&d, &CoefficientField::constant(d, 1.0, 0.0, 1.0))?;
    let eig = eigensystem(&op, 64, DEFAULT_MULT_TOL)?;
    let grid = TimeGrid::covering(10.0, 2560)?;
    let truth = [2.0, 0.0, -1.0, 0.0, 0.0];
    let f = source_from_modes(&eig, &truth)?;
    let src = SourceSpec::new(f, SigmaForm::Hat { start: 0.2, end: 0.6 }, 1.0, 0.4)?;
    let b = BoundarySubset::point(&d, 0)?;
    let flux = SpectralModel::new(&eig, cfg.time.alpha, grid)?.flux(&src, &b)?;
    let r = reconstruct_space_source(&flux, &src.sample_sigma(grid), &eig, cfg.time.alpha, &SpaceSourceOptions::default())?;
    Ok(weight_errors(&r.mode_weights, &truth)?.into_iter().fold(0.0, f64::max))
}

fn inverse_joint_factor(cfg: &ExperimentConfig) -> Result<f64> {
    let grid = TimeGrid::covering(2.0, 400)?;
    let s1 = TimeSeries::from_fn(grid, |t| SigmaForm::Hat { start: 0.2, end: 0.6 }.eval(t));
    let s2 = TimeSeries::new(grid, s1.values().iter().map(|v| 2.0 * v).collect())?;
    let r = joint_factor_test(&s1, &s2, cfg.time.alpha, 4.0, &FactorTestOptions::default())?;
    let Recovered::Constant(k) = r.recovered else {
        return Ok(f64::INFINITY);
    };
    Ok(r.diagnostics.values["defect"].max((k - 2.0).abs()))
}

/// `φ₁` is admissible everywhere with witness `k = 0`, and the two
/// characterizations agree.
fn inverse_gset(cfg: &ExperimentConfig) -> Result<f64> {
    let d = DomainSpec::interval(0.0, PI, 64)?;
    let op = assemble(&d, &CoefficientField::constant(d, 1.0, 0.0, 1.0))?;
    let eig = eigensystem(&op, 4, DEFAULT_MULT_TOL)?;
    let f = source_from_modes(&eig, &[1.0])?;
    let rep = compute_gset(&f, &op, cfg.time.alpha, 4, &BoundarySubset::all(&d), None)?;
    let bad = rep.nodes.iter().filter(|n| !(n.in_g && n.in_j && n.witness == Some(0))).count();
    Ok(bad as f64 + if rep.flags_agree { 0.0 } else { 1.0 })
}

/// Number of boundary nodes where the `-sin` certificate fails.
fn inverse_hopf(cfg: &ExperimentConfig) -> Result<f64> {
    let d = DomainSpec::interval(0.0, PI, 64)?;
    let op = assemble(&d, &CoefficientField::constant(d, 1.0, 0.0, 1.0))?;
    let g = d.sample(|[x, _]| -x.sin());
    let cert = hopf_certificate(&g, 0, 0, cfg.time.alpha, &op)?;
    Ok(cert.values.iter().filter(|v| !(**v > 0.0)).count() as f64)
}

/// `serialize(parse(text))` is a fixed point for every preset.
fn config_round_trip(_: &ExperimentConfig) -> Result<f64> {
    let mut bad = 0;
    for name in PRESETS {
        let text = preset(name)?.to_toml()?;
        let again = ExperimentConfig::parse(&text)?.to_toml()?;
        if again != text {
            bad += 1;
        }
    }
    Ok(bad as f64)
}

const CHECKS: [Check; 15] = [
    ("mittag_leffler.exponential", 1e-10, ml_exponential),
    ("mittag_leffler.origin", 1e-12, ml_origin),
    ("mittag_leffler.recurrence", 1e-10, ml_recurrence),
    ("mittag_leffler.exp_ratio", 1e-10, ml_exp_ratio),
    ("laplace_analysis.kernel_transform", 1e-6, laplace_kernel),
    ("elliptic_core.interval_eigenvalues", 1e-9, elliptic_eigenvalues),
    ("elliptic_core.orthonormality", 1e-10, elliptic_orthonormality),
    ("forward_solver.spectral_vs_l1", 1e-2, forward_cross_validation),
    ("forward_solver.causality", 0.0, forward_causality),
    ("laplace_analysis.branch_jump", 1e-8, laplace_branch_jump),
    ("inverse_source.space_source", 1e-2, inverse_space_source),
    ("inverse_source.joint_factor", 1e-8, inverse_joint_factor),
    ("inverse_source.gset", 0.0, inverse_gset),
    ("inverse_source.hopf", 0.0, inverse_hopf),
    ("cli.config_round_trip", 0.0, config_round_trip),
];

/// Names of the checks in execution order.
pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.0).collect()
}

pub fn run(cfg: &ExperimentConfig) -> VerifyReport {
    let start = Instant::now();
    let checks: Vec<CheckResult> = CHECKS
        .iter()
        .map(|(name, tol, f)| {
            let t = Instant::now();
            let out = f(cfg);
            let seconds = t.elapsed().as_secs_f64();
            let (defect, error) = match out {
                Ok(v) => (v, None),
                Err(e) => (f64::INFINITY, Some(e.to_string())),
            };
            CheckResult { name: name.to_string(), passed: defect <= *tol, defect, tolerance: *tol, seconds, error }
        })
        .collect();
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
    VerifyReport { passed: failed.is_empty(), failed, checks, seconds: start.elapsed().as_secs_f64() }
}
