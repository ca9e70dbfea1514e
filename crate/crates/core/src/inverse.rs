//! Source reconstruction from boundary flux.
//!
//! * [`reconstruct_space_source`]: the space part `f` from flux on `Γ` with
//!   `σ` known, by a known-pole fit of the Laplace-domain transfer function.
//! * [`reconstruct_time_source`]: the time part `σ` from the flux at one
//!   node with `f` known, by Tikhonov-regularized Volterra deconvolution.
//! * [`joint_factor_test`]: whether two time profiles are proportional.
//! * [`compute_gset`] and [`hopf_certificate`]: the boundary points at which a
//!   single flux trace determines `σ`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elliptic::{apply_inverse_power, conormal_trace, weighted_norm, BoundarySubset, DiscreteOperator, EigenSystem};
use crate::error::{check_len, Error, Result};
use crate::forward::{FluxTrace, SpectralModel};
use crate::fractional::{TimeGrid, TimeSeries};
use crate::laplace::{
    complex_least_squares, extrapolate_to_zero, laplace_transform, FitRegularization, ModalCoefficients, Support,
};
use crate::mittag_leffler::principal_pow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Problem {
    #[serde(rename = "IP1")]
    SpaceSource,
    #[serde(rename = "IP2")]
    JointFactor,
    #[serde(rename = "IP3")]
    TimeSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Recovered {
    Field(Vec<f64>),
    Series(TimeSeries),
    Constant(f64),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub condition: f64,
    pub residual: f64,
    pub samples: usize,
    #[serde(default)]
    pub values: BTreeMap<String, f64>,
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub problem: Problem,
    pub recovered: Recovered,
    /// Recovered `⟨ρ⁻¹f, φ_j⟩` per eigenfunction of the active modes (IP1).
    #[serde(default)]
    pub mode_weights: Vec<f64>,
    /// Per-mode standard errors (IP1), per-node residuals (IP3) or
    /// per-sample deviations (IP2).
    pub errors: Vec<f64>,
    /// Tikhonov parameter, when one was applied.
    pub regularization: Option<f64>,
    pub diagnostics: Diagnostics,
    /// Fitted `ĉ_n(x)` before the trace pairing is inverted (IP1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modal: Option<ModalCoefficients>,
}

impl ReconstructionResult {
    /// `{problem, recovered, diagnostics, ...}`, with a `ground_truth` block
    /// when one is supplied.
    pub fn to_json(&self, ground_truth: Option<serde_json::Value>) -> Result<serde_json::Value> {
        let mut v = serde_json::to_value(self)?;
        if let Some(gt) = ground_truth {
            v["ground_truth"] = gt;
        }
        Ok(v)
    }
}

/// Per-mode recovery error: relative where the true weight is nonzero,
/// relative to the largest true weight otherwise.
pub fn weight_errors(recovered: &[f64], truth: &[f64]) -> Result<Vec<f64>> {
    check_len(truth.len(), recovered.len())?;
    let scale = truth.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(recovered
        .iter()
        .zip(truth)
        .map(|(r, t)| {
            let d = (r - t).abs();
            if *t != 0.0 {
                d / t.abs()
            } else if scale > 0.0 {
                d / scale
            } else {
                d
            }
        })
        .collect())
}

/// Regularization settings shared by the reconstructions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Regularization {
    /// Fixed Tikhonov parameter.
    pub tikhonov: Option<f64>,
    /// Relative noise level of the data; enables the discrepancy principle.
    pub noise_level: Option<f64>,
    pub tau: f64,
}

impl Default for Regularization {
    fn default() -> Self {
        Self { tikhonov: None, noise_level: None, tau: 1.1 }
    }
}

/// Distance of `α(k+1)` to the nearest integer below which it counts as an
/// integer.
pub const INTEGER_TOL: f64 = 1e-9;

fn near_integer(x: f64) -> bool {
    (x - x.round()).abs() <= INTEGER_TOL
}

// ---------------------------------------------------------------- IP1

/// Laplace-domain model used to fit the flux transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransferBasis {
    /// `1/(λ_n + p^α)`: the continuous transfer function.
    Continuous,
    /// The transfer function of sampled data: flux produced by the spectral
    /// solver (`σ` piecewise linear on the grid) and transformed with the
    /// trapezoidal rule. Exact up to kernel evaluation error.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpaceSourceOptions {
    pub n_active: usize,
    /// Laplace abscissae `p`; a default set on three rays when absent.
    pub abscissae: Option<Vec<Complex64>>,
    /// Samples with `|σ̂(p)|` below this fraction of the largest are dropped.
    pub sigma_floor: f64,
    /// Samples whose tail bound exceeds this fraction of `|ŵ(p)|` are dropped.
    pub tail_tol: f64,
    pub basis: TransferBasis,
    pub reg: Regularization,
}

impl Default for SpaceSourceOptions {
    fn default() -> Self {
        Self {
            n_active: 5,
            abscissae: None,
            sigma_floor: 1e-8,
            tail_tol: 1e-10,
            basis: TransferBasis::Sampled,
            reg: Regularization::default(),
        }
    }
}

/// Rays `arg p ∈ {0, ±π/4}` with `|p|` log-spaced between the smallest value
/// whose window tail is negligible and `min((10 λ_{n_active})^{1/α}, 2/dt)`.
pub fn default_abscissae(alpha: f64, lambda_max: f64, grid: TimeGrid, per_ray: usize) -> Result<Vec<Complex64>> {
    let lo = 25.0 / (grid.t_max() * (PI / 4.0).cos());
    let hi = (10.0 * lambda_max).powf(1.0 / alpha).min(2.0 / grid.dt());
    if !(hi > 2.0 * lo) || per_ray < 2 {
        return Err(Error::DataInsufficient(format!(
            "no usable Laplace abscissae: |p| range [{lo:.3}, {hi:.3}]; lengthen the recorded window"
        )));
    }
    let mut out = Vec::with_capacity(3 * per_ray);
    for theta in [0.0, PI / 4.0, -PI / 4.0] {
        for k in 0..per_ray {
            let r = lo * (hi / lo).powf(k as f64 / (per_ray - 1) as f64);
            out.push(Complex64::from_polar(r, theta));
        }
    }
    Ok(out)
}

const ALIAS_TERMS: i64 = 4096;

fn cexpm1(x: Complex64) -> Complex64 {
    if x.norm() < 1e-3 {
        x * (1.0 + x * (0.5 + x * (1.0 / 6.0 + x / 24.0)))
    } else {
        x.exp() - 1.0
    }
}

/// Trapezoidal transform of the samples of `σ`, and the trapezoidal
/// transform of the flux generated by a unit coefficient on each `λ_n`:
/// `Σ_k σ̂_PL(p_k)/(λ_n + p_k^α)` over the aliases `p_k = p + 2πik/dt`.
fn sampled_transfer(p: Complex64, alpha: f64, lambdas: &[f64], sigma: &TimeSeries) -> Result<(Complex64, Vec<Complex64>)> {
    let grid = sigma.grid();
    let dt = grid.dt();
    let s = sigma.values();
    let d1: Complex64 = (1..s.len()).map(|i| dt * s[i] * (-p * grid.t(i)).exp()).sum();
    let s0 = s[0];
    let sigma_hat = d1 + 0.5 * dt * s0;
    let a = p * dt / 2.0;
    let sh2 = a.sinh().powi(2);
    let em1 = cexpm1(-p * dt);
    let mut out = vec![Complex64::new(0.0, 0.0); lambdas.len()];
    for k in -ALIAS_TERMS..=ALIAS_TERMS {
        let pk = p + Complex64::new(0.0, 2.0 * PI * k as f64 / dt);
        let ak = a + Complex64::new(0.0, PI * k as f64);
        let hat = if ak.norm() < 1e-8 { Complex64::new(1.0, 0.0) } else { sh2 / (ak * ak) };
        let mut num = d1 * hat;
        if s0 != 0.0 {
            num += s0 * (pk * dt + em1) / (pk * pk * dt);
        }
        let zk = principal_pow(pk, alpha)?;
        for (o, l) in out.iter_mut().zip(lambdas) {
            *o += num / (zk + l);
        }
    }
    // leading-order remainder of |k| > K, where 1/(λ + p_k^α) ≈ p_k^{-α}
    let kk = ALIAS_TERMS as f64 + 0.5;
    let r = dt / (2.0 * PI);
    let tail = d1 * (-sh2 / (PI * PI)) * 2.0 * (PI * alpha / 2.0).cos() * r.powf(alpha) * kk.powf(-1.0 - alpha) / (1.0 + alpha)
        + s0 * (-2.0 * (PI * alpha / 2.0).sin()) * r.powf(1.0 + alpha) * kk.powf(-alpha) / alpha;
    for o in out.iter_mut() {
        *o += tail;
    }
    Ok((sigma_hat, out))
}

struct TransferSamples {
    /// `ŵ(p_j)/σ̂(p_j)` per node.
    g: Vec<Vec<Complex64>>,
    basis: Vec<Vec<Complex64>>,
    /// Standard deviation of each `g_j` for unit relative flux noise.
    noise: Vec<f64>,
}

fn transfer_samples(
    flux: &FluxTrace,
    sigma: &TimeSeries,
    alpha: f64,
    lambdas: &[f64],
    ps: &[Complex64],
    opts: &SpaceSourceOptions,
) -> Result<TransferSamples> {
    let grid = flux.grid;
    let per_p: Vec<_> = ps
        .par_iter()
        .map(|&p| -> Result<_> {
            let w = laplace_transform(flux, p, Support::Decaying, None)?;
            let (sigma_hat, phi) = match opts.basis {
                TransferBasis::Sampled => sampled_transfer(p, alpha, lambdas, sigma)?,
                TransferBasis::Continuous => {
                    let s = laplace_transform(sigma, p, Support::Compact, None)?.values[0];
                    let z = principal_pow(p, alpha)?;
                    (s, lambdas.iter().map(|l| s / (z + l)).collect())
                }
            };
            // Var ŵ(p) under independent multiplicative noise of unit level
            let n = grid.n_steps();
            let var: f64 = (0..=n)
                .map(|j| {
                    let q = if j == 0 || j == n { 0.5 } else { 1.0 } * grid.dt() * (-p.re * grid.t(j)).exp();
                    let m2 = flux.values.iter().map(|r| r[j] * r[j]).sum::<f64>() / flux.values.len() as f64;
                    q * q * m2
                })
                .sum();
            Ok((p, w, sigma_hat, phi, var.sqrt()))
        })
        .collect::<Result<_>>()?;
    let smax = per_p.iter().fold(0.0f64, |m, s| m.max(s.2.norm()));
    if smax == 0.0 {
        return Err(Error::DataInsufficient("σ̂ vanishes at every abscissa (σ ≡ 0?)".into()));
    }
    let mut out = TransferSamples { g: vec![], basis: vec![], noise: vec![] };
    for (_, w, s, phi, sd) in per_p {
        let wmax = w.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        if s.norm() < opts.sigma_floor * smax || w.tail_bound > opts.tail_tol * wmax {
            continue;
        }
        out.g.push(w.values.iter().map(|v| v / s).collect());
        out.basis.push(phi.iter().map(|v| v / s).collect());
        out.noise.push(sd / s.norm());
    }
    Ok(out)
}

/// Space part `f` from flux on `Γ` with `σ` known. Pipeline: transform the
/// flux and `σ`, fit `ŵ/σ̂ ≈ Σ_n ĉ_n(x)/(λ_n + p^α)` with known `λ_n`, then
/// invert `ĉ_n(x) = Σ_k w_{n,k} ∂_{ν_a}φ_{n,k}(x)` over `Γ`.
pub fn reconstruct_space_source(
    flux: &FluxTrace,
    sigma: &TimeSeries,
    eig: &EigenSystem,
    alpha: f64,
    opts: &SpaceSourceOptions,
) -> Result<ReconstructionResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("fractional order {alpha} outside (0, 1)")));
    }
    if flux.grid != sigma.grid() {
        return Err(Error::invalid("flux and σ must share a time grid"));
    }
    let n_active = opts.n_active;
    let lambdas_all = eig.eigenvalues();
    if n_active == 0 || n_active > lambdas_all.len() {
        return Err(Error::invalid(format!("n_active = {n_active} outside 1..={}", lambdas_all.len())));
    }
    let lambdas = &lambdas_all[..n_active];
    let ps = match &opts.abscissae {
        Some(ps) => ps.clone(),
        None => default_abscissae(alpha, lambdas[n_active - 1], flux.grid, 16)?,
    };
    let samples = transfer_samples(flux, sigma, alpha, lambdas, &ps, opts)?;
    let m = samples.g.len();
    if m < 2 * n_active {
        return Err(Error::DataInsufficient(format!(
            "{m} usable Laplace samples for {n_active} active modes; at least {} needed",
            2 * n_active
        )));
    }
    let (row_scale, reg) = match (opts.reg.noise_level, opts.reg.tikhonov) {
        (Some(level), _) if level > 0.0 => {
            let scale: Vec<f64> = samples.noise.iter().map(|s| s * level).collect();
            let target = opts.reg.tau * ((m * flux.boundary.len()) as f64).sqrt();
            (Some(scale), FitRegularization::Discrepancy { target })
        }
        (_, Some(mu)) => (None, FitRegularization::Fixed(mu)),
        _ => (None, FitRegularization::None),
    };
    let fit = complex_least_squares(&samples.basis, &samples.g, row_scale.as_deref(), reg)?;
    let nb = flux.boundary.len();
    let chat: Vec<Vec<f64>> = (0..n_active).map(|n| (0..nb).map(|i| fit.coefficients[i][n]).collect()).collect();
    let chat_se: Vec<Vec<f64>> = (0..n_active).map(|n| (0..nb).map(|i| fit.std_errors[i][n]).collect()).collect();
    let modal = ModalCoefficients::new(flux.boundary.clone(), lambdas.to_vec(), chat)?;

    // pairing inversion per eigenvalue group
    let traces = eig.traces_on(&flux.boundary)?;
    let trace_scale = traces.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut weights = Vec::new();
    let mut errors = Vec::with_capacity(n_active);
    for (n, grp) in eig.groups()[..n_active].iter().enumerate() {
        let mn = grp.len();
        if nb < mn {
            return Err(Error::Unidentifiable(format!(
                "mode {} has multiplicity {mn} but Γ has only {nb} nodes",
                n + 1
            )));
        }
        let t = DMatrix::from_fn(nb, mn, |i, k| traces[grp.start + k][i]);
        let svd = t.clone().svd(true, true);
        let smin = svd.singular_values.min();
        if !(smin > 1e-8 * trace_scale) {
            return Err(Error::Unidentifiable(format!(
                "the conormal traces of mode {} vanish (or are dependent) on Γ",
                n + 1
            )));
        }
        let rhs = DVector::from_column_slice(&modal.values[n]);
        let w = svd.solve(&rhs, 0.0).map_err(|e| Error::numeric(e.to_string()))?;
        weights.extend(w.iter().copied());
        errors.push(chat_se[n].iter().map(|s| s * s).sum::<f64>().sqrt() / smin);
    }
    let rho = eig.coeffs().rho();
    let mut f = vec![0.0; rho.len()];
    for (j, w) in weights.iter().enumerate() {
        for ((o, phi), r) in f.iter_mut().zip(eig.function(j)).zip(rho) {
            *o += w * phi * r;
        }
    }
    let mut values = BTreeMap::new();
    values.insert("relative_residual".into(), fit.diagnostics.relative_residual);
    let regularization = (fit.diagnostics.tikhonov > 0.0).then_some(fit.diagnostics.tikhonov);
    Ok(ReconstructionResult {
        problem: Problem::SpaceSource,
        recovered: Recovered::Field(f),
        mode_weights: weights,
        errors,
        regularization,
        diagnostics: Diagnostics {
            condition: fit.diagnostics.normal_condition,
            residual: fit.diagnostics.residual_norm,
            samples: m,
            values,
            notes: vec![],
        },
        modal: Some(modal),
    })
}

// ---------------------------------------------------------------- IP3

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimeSourceOptions {
    /// Final time `T`; `σ` is zero beyond it.
    pub t_final: f64,
    /// Enforce `σ = 0` on `(T - δ, T)`.
    pub delta: Option<f64>,
    pub reg: Regularization,
    /// Default Tikhonov parameter as a fraction of `‖G‖²`.
    pub default_scale: f64,
}

impl Default for TimeSourceOptions {
    fn default() -> Self {
        Self { t_final: 1.0, delta: None, reg: Regularization::default(), default_scale: 1e-6 }
    }
}

/// Time part `σ` from the flux at one boundary node with `f` known. The
/// forward map is the product-quadrature discretization of the Volterra
/// equation `h = σ * g` with `g(t) = ∂_{ν_a}[S(t)ρ⁻¹f](x₀)`; it is inverted
/// with a first-difference Tikhonov penalty.
pub fn reconstruct_time_source(
    point_flux: &TimeSeries,
    x0: usize,
    f: &[f64],
    eig: &EigenSystem,
    alpha: f64,
    op: Option<&DiscreteOperator>,
    opts: &TimeSourceOptions,
) -> Result<ReconstructionResult> {
    let grid = point_flux.grid();
    let coeffs = eig.coeffs();
    let boundary = BoundarySubset::point(coeffs.domain(), x0)?;
    if !(opts.t_final > 0.0) {
        return Err(Error::invalid("final time must be positive"));
    }
    let model = SpectralModel::new(eig, alpha, grid)?;
    let (d, tail) = model.source_coefficients(f)?;
    if d.iter().all(|v| *v == 0.0) {
        return Err(Error::invalid("f vanishes on the retained modes"));
    }
    let traces = eig.traces_on(&boundary)?;
    let c: Vec<f64> = d.iter().zip(&traces).map(|(d, t)| d * t[0]).collect();
    let reference = d.iter().zip(&traces).map(|(d, t)| (d * t[0]).abs()).fold(0.0f64, f64::max);
    let (a, b) = model.table().combined(&c)?;
    let gnorm = a.iter().chain(&b).map(|v| v * v).sum::<f64>().sqrt();
    let gref = {
        let abs_c: Vec<f64> = c.iter().map(|v| v.abs()).collect();
        let (a, b) = model.table().combined(&abs_c)?;
        a.iter().chain(&b).map(|v| v * v).sum::<f64>().sqrt()
    };
    let d_max = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let t_max = traces.iter().fold(0.0f64, |m, t| m.max(t[0].abs()));
    if !(gnorm > 1e-8 * gref) || !(reference > 1e-10 * d_max * t_max) {
        return Err(Error::Unidentifiable(format!(
            "the flux kernel at node {x0} vanishes (‖g‖ = {gnorm:.3e}); x₀ is blind to f"
        )));
    }
    let t_end = opts.t_final - opts.delta.unwrap_or(0.0);
    if let Some(delta) = opts.delta {
        if !(delta > 0.0 && delta < opts.t_final) {
            return Err(Error::invalid(format!("δ = {delta} outside (0, T)")));
        }
    }
    // unknowns σ_0..σ_{nu-1}: grid nodes strictly before the support end
    let nu = (0..grid.len())
        .take_while(|&i| {
            let t = grid.t(i);
            if opts.delta.is_some() {
                t < t_end - 1e-12 * opts.t_final
            } else {
                t <= t_end + 1e-12 * opts.t_final
            }
        })
        .count();
    if nu < 2 {
        return Err(Error::DataInsufficient("fewer than two unknown σ samples".into()));
    }
    let n = grid.n_steps();
    let mut g = DMatrix::<f64>::zeros(n + 1, nu);
    for row in 1..=n {
        for i in 0..nu.min(row) {
            g[(row, i)] += a[row - 1 - i];
        }
        for i in 1..nu.min(row + 1) {
            g[(row, i)] += b[row - i];
        }
    }
    let h = DVector::from_column_slice(point_flux.values());
    let mut dmat = DMatrix::<f64>::zeros(nu - 1, nu);
    for i in 0..nu - 1 {
        dmat[(i, i)] = -1.0;
        dmat[(i, i + 1)] = 1.0;
    }
    let gtg = g.transpose() * &g;
    let dtd = dmat.transpose() * &dmat;
    let gth = g.transpose() * &h;
    let g2 = g.norm_squared();
    let solve = |mu: f64| -> Result<DVector<f64>> {
        let sys = &gtg + &dtd * mu;
        let chol = sys.cholesky().ok_or_else(|| Error::numeric("regularized normal matrix is not positive definite"))?;
        Ok(chol.solve(&gth))
    };
    let residual = |s: &DVector<f64>| (&g * s - &h).norm();
    let hnorm = h.norm();
    let mut notes = Vec::new();
    let mu = match (opts.reg.noise_level, opts.reg.tikhonov) {
        (Some(level), _) if level > 0.0 => {
            let target = opts.reg.tau * level * hnorm;
            let (mut lo, mut hi) = (-16.0f64, 2.0f64);
            let r_lo = residual(&solve(10f64.powf(lo) * g2)?);
            let r_hi = residual(&solve(10f64.powf(hi) * g2)?);
            if r_lo > target || r_hi < target {
                return Err(Error::Regularization(format!(
                    "discrepancy principle cannot bracket target {target:.3e}: residual {r_lo:.3e} at μ=1e{lo}‖G‖², {r_hi:.3e} at μ=1e{hi}‖G‖²"
                )));
            }
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                if residual(&solve(10f64.powf(mid) * g2)?) > target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            10f64.powf(lo) * g2
        }
        (_, Some(mu)) => mu,
        _ => opts.default_scale * g2,
    };
    if !(mu > 0.0) {
        return Err(Error::invalid(format!("Tikhonov parameter {mu} must be positive")));
    }
    let s = solve(mu)?;
    let r = &g * &s - &h;
    let mut sigma = vec![0.0; grid.len()];
    sigma[..nu].copy_from_slice(s.as_slice());
    let cond = {
        let e = (&gtg + &dtd * mu).symmetric_eigenvalues();
        e.max() / e.min()
    };
    if let Some(op) = op {
        let report = compute_gset(f, op, alpha, 4, &boundary, None)?;
        if !report.nodes[0].in_g {
            notes.push(format!("node {x0} is not in the admissible set of f; σ may not be determined"));
        }
    }
    let mut values = BTreeMap::new();
    values.insert("relative_residual".into(), if hnorm > 0.0 { r.norm() / hnorm } else { r.norm() });
    values.insert("spectral_tail".into(), tail);
    Ok(ReconstructionResult {
        problem: Problem::TimeSource,
        recovered: Recovered::Series(TimeSeries::new(grid, sigma)?),
        mode_weights: vec![],
        errors: r.iter().map(|v| v.abs()).collect(),
        regularization: Some(mu),
        diagnostics: Diagnostics { condition: cond, residual: r.norm(), samples: grid.len(), values, notes },
        modal: None,
    })
}

/// `‖a - b‖_{L²(0,T)} / ‖b‖_{L²(0,T)}` by the trapezoidal rule.
pub fn relative_l2(a: &TimeSeries, b: &TimeSeries) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::invalid("series live on different grids"));
    }
    let n = a.values().len();
    let w = |j: usize| if j == 0 || j + 1 == n { 0.5 } else { 1.0 };
    let num: f64 = (0..n).map(|j| w(j) * (a.values()[j] - b.values()[j]).powi(2)).sum();
    let den: f64 = (0..n).map(|j| w(j) * b.values()[j].powi(2)).sum();
    Ok(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
}

// ---------------------------------------------------------------- IP2

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FactorTestOptions {
    pub samples: usize,
    pub degree: usize,
    /// Defect at or below which the pair is declared proportional.
    pub tol: f64,
}

impl Default for FactorTestOptions {
    fn default() -> Self {
        Self { samples: 32, degree: 8, tol: 1e-6 }
    }
}

/// Closest rational `p/q` with `q ≤ max_q`: `(p, q, |α - p/q|)`.
pub fn rational_proximity(alpha: f64, max_q: u32) -> (i64, u32, f64) {
    (1..=max_q)
        .map(|q| {
            let p = (alpha * q as f64).round();
            (p as i64, q, (alpha - p / q as f64).abs())
        })
        .fold((0, 1, f64::INFINITY), |best, c| if c.2 < best.2 { c } else { best })
}

/// Samples `Ĉ(p) = σ̂₂(p)/σ̂₁(p)` on `|p| = r₁`, fits a polynomial of the
/// given degree, and reports `Ĉ(0)` with the constancy defect
/// `max |Ĉ(p_j) - Ĉ(0)| / |Ĉ(0)|`.
pub fn joint_factor_test(
    sigma1: &TimeSeries,
    sigma2: &TimeSeries,
    alpha: f64,
    radius: f64,
    opts: &FactorTestOptions,
) -> Result<ReconstructionResult> {
    if sigma1.grid() != sigma2.grid() {
        return Err(Error::invalid("σ₁ and σ₂ must share a time grid"));
    }
    if !(radius > 0.0) {
        return Err(Error::invalid(format!("radius {radius} must be positive")));
    }
    let m = opts.samples;
    if m <= 2 * opts.degree {
        return Err(Error::invalid("need more than 2·degree samples on the circle"));
    }
    let ps: Vec<Complex64> = (0..m)
        .map(|j| Complex64::from_polar(radius, 2.0 * PI * (j as f64 + 0.5) / m as f64))
        .collect();
    let pairs: Vec<(Complex64, Complex64)> = ps
        .iter()
        .map(|&p| {
            Ok((
                laplace_transform(sigma1, p, Support::Compact, None)?.values[0],
                laplace_transform(sigma2, p, Support::Compact, None)?.values[0],
            ))
        })
        .collect::<Result<_>>()?;
    let s1max = pairs.iter().fold(0.0f64, |m, p| m.max(p.0.norm()));
    if let Some(j) = pairs.iter().position(|p| !(p.0.norm() > 1e-12 * s1max) || s1max == 0.0) {
        return Err(Error::numeric(format!("σ̂₁ vanishes at p = {}; cannot divide", ps[j])));
    }
    let ratio: Vec<Complex64> = pairs.iter().map(|(a, b)| b / a).collect();
    // monomials are orthogonal on equispaced circle points
    let coef: Vec<Complex64> = (0..=opts.degree)
        .map(|k| {
            ratio
                .iter()
                .zip(&ps)
                .map(|(r, p)| r * (p / radius).powi(-(k as i32)))
                .sum::<Complex64>()
                / m as f64
        })
        .collect();
    let c0 = coef[0];
    let fit_residual = ratio
        .iter()
        .zip(&ps)
        .map(|(r, p)| {
            let u = p / radius;
            let v: Complex64 = coef.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * u + c);
            (r - v).norm()
        })
        .fold(0.0f64, f64::max);
    if c0.norm() == 0.0 {
        return Err(Error::numeric("Ĉ(0) vanishes"));
    }
    let deviations: Vec<f64> = ratio.iter().map(|r| (r - c0).norm() / c0.norm()).collect();
    let defect = deviations.iter().cloned().fold(0.0, f64::max);
    let (pp, qq, dist) = rational_proximity(alpha, 12);
    let mut values = BTreeMap::new();
    values.insert("defect".into(), defect);
    values.insert("imag_c0".into(), c0.im);
    values.insert("proportional".into(), if defect <= opts.tol { 1.0 } else { 0.0 });
    values.insert("rational_distance".into(), dist);
    let notes = vec![format!(
        "α is within {dist:.3e} of {pp}/{qq}; floating-point α is always rational, so this is a mechanism check"
    )];
    Ok(ReconstructionResult {
        problem: Problem::JointFactor,
        recovered: Recovered::Constant(c0.re),
        mode_weights: vec![],
        errors: deviations,
        regularization: None,
        diagnostics: Diagnostics { condition: 1.0, residual: fit_residual, samples: m, values, notes },
        modal: None,
    })
}

// ---------------------------------------------------------------- 𝒢(f), 𝒥(f)

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GSetNode {
    pub node: usize,
    pub coords: [f64; 2],
    pub in_g: bool,
    /// Smallest admissible `k`.
    pub witness: Option<usize>,
    /// Nonzero traces exist but only at `k` with `α(k+1) ∈ ℕ`.
    pub inconclusive: bool,
    /// `∂_{ν_a}A^{-k-2}ρ⁻¹f(x)` for `k = 0..=K_max`.
    pub traces: Vec<f64>,
    pub in_j: bool,
    /// `∂_{ν_a}(A + re^{iαπ})^{-1}(A + re^{-iαπ})^{-1}ρ⁻¹f(x)` per radius.
    pub probe: Vec<f64>,
    /// Probe extrapolated to `r = 0`; equals `traces[0]` in exact arithmetic.
    pub probe_limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GSetReport {
    pub alpha: f64,
    pub k_max: usize,
    pub zero_tol: f64,
    pub radii: Vec<f64>,
    pub nodes: Vec<GSetNode>,
    /// `max_x |probe_limit - traces[0]|`.
    pub agreement_defect: f64,
    pub flags_agree: bool,
    /// Fraction of nodes in `𝒢(f)`.
    pub coverage: f64,
}

/// Probe radii `r = 2^{-m}`, `m = 1..=8`.
pub fn probe_radii() -> Vec<f64> {
    (1..=8).map(|m| 0.5f64.powi(m)).collect()
}

/// Membership of each node of `boundary` in `𝒢(f)` (some `k ≤ K_max` with
/// nonvanishing `∂_{ν_a}A^{-k-2}ρ⁻¹f` and `α(k+1) ∉ ℕ`) and, independently,
/// in `𝒥(f)` through the resolvent probe. `zero_tol` defaults to
/// `1e-7‖f‖`.
pub fn compute_gset(
    f: &[f64],
    op: &DiscreteOperator,
    alpha: f64,
    k_max: usize,
    boundary: &BoundarySubset,
    zero_tol: Option<f64>,
) -> Result<GSetReport> {
    if k_max < 1 {
        return Err(Error::invalid("K_max must be at least 1"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("fractional order {alpha} outside (0, 1)")));
    }
    let coeffs = op.coeffs();
    check_len(op.n_nodes(), f.len())?;
    let zero_tol = match zero_tol {
        Some(t) if t > 0.0 => t,
        Some(t) => return Err(Error::invalid(format!("zero tolerance {t} must be positive"))),
        None => {
            let n = weighted_norm(f, coeffs)?;
            if n > 0.0 {
                1e-7 * n
            } else {
                f64::MIN_POSITIVE
            }
        }
    };
    let g: Vec<f64> = f.iter().zip(coeffs.rho()).map(|(f, r)| f / r).collect();
    let mut traces_k = Vec::with_capacity(k_max + 1);
    let mut u = apply_inverse_power(op, 2, &g)?;
    for k in 0..=k_max {
        if k > 0 {
            u = op.solve(&u)?;
        }
        traces_k.push(conormal_trace(&u, coeffs, boundary)?);
    }
    let radii = probe_radii();
    let c = (alpha * PI).cos();
    let k = op.stiffness();
    let mass = op.mass();
    let kmk = {
        let mut minv_k = k.clone();
        for (i, m) in mass.iter().enumerate() {
            minv_k.row_mut(i).scale_mut(1.0 / m);
        }
        k * minv_k
    };
    let mut rhs = op.restrict(&g)?;
    for (v, m) in rhs.iter_mut().zip(mass) {
        *v *= m;
    }
    let probes: Vec<Vec<f64>> = radii
        .par_iter()
        .map(|&r| -> Result<Vec<f64>> {
            let mut sys = &kmk + k * (2.0 * r * c);
            for (i, m) in mass.iter().enumerate() {
                sys[(i, i)] += r * r * m;
            }
            let chol = sys.cholesky().ok_or_else(|| Error::numeric("resolvent probe matrix is not positive definite"))?;
            let v = op.extend(&chol.solve(&rhs));
            conormal_trace(&v, coeffs, boundary)
        })
        .collect::<Result<_>>()?;
    let mut nodes = Vec::with_capacity(boundary.len());
    let mut defect = 0.0f64;
    for (i, &node) in boundary.nodes().iter().enumerate() {
        let traces: Vec<f64> = traces_k.iter().map(|t| t[i]).collect();
        let nonzero: Vec<usize> = (0..=k_max).filter(|&k| traces[k].abs() > zero_tol).collect();
        let witness = nonzero.iter().copied().find(|&k| !near_integer(alpha * (k + 1) as f64));
        let probe: Vec<f64> = probes.iter().map(|p| p[i]).collect();
        let probe_c: Vec<Complex64> = probe.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        let probe_limit = extrapolate_to_zero(&radii, &probe_c).re;
        defect = defect.max((probe_limit - traces[0]).abs());
        nodes.push(GSetNode {
            node,
            coords: coeffs.domain().coords(node),
            in_g: witness.is_some(),
            witness,
            inconclusive: witness.is_none() && !nonzero.is_empty(),
            traces,
            in_j: probe.iter().any(|v| v.abs() > zero_tol),
            probe,
            probe_limit,
        });
    }
    let flags_agree = nodes.iter().all(|n| n.in_g == n.in_j || n.inconclusive);
    let coverage = nodes.iter().filter(|n| n.in_g).count() as f64 / nodes.len() as f64;
    Ok(GSetReport { alpha, k_max, zero_tol, radii, nodes, agreement_defect: defect, flags_agree, coverage })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfCertificate {
    pub boundary: BoundarySubset,
    /// `∂_{ν_a}w` at every boundary node, `w = A^{-(2+k₂-k₁)}g`.
    pub values: Vec<f64>,
    /// Strictly one-signed everywhere, with the sign opposite to `g`.
    pub certified: bool,
}

/// Conormal derivative of `w = A^{-(2+k₂-k₁)}g` for one-signed `g` at every
/// boundary node.
pub fn hopf_certificate(g: &[f64], k1: usize, k2: usize, alpha: f64, op: &DiscreteOperator) -> Result<HopfCertificate> {
    check_len(op.n_nodes(), g.len())?;
    let nonneg = g.iter().all(|v| *v >= 0.0);
    let nonpos = g.iter().all(|v| *v <= 0.0);
    if !(nonneg || nonpos) {
        return Err(Error::invalid("g changes sign"));
    }
    if g.iter().all(|v| *v == 0.0) {
        return Err(Error::invalid("g vanishes identically"));
    }
    if k2 < k1 {
        return Err(Error::invalid(format!("k₂ = {k2} must be at least k₁ = {k1}")));
    }
    if near_integer(alpha * (k2 + 1) as f64) {
        return Err(Error::invalid(format!("α(k₂+1) = {} is an integer", alpha * (k2 + 1) as f64)));
    }
    let w = apply_inverse_power(op, 2 + k2 - k1, g)?;
    let boundary = BoundarySubset::all(op.domain());
    let values = conormal_trace(&w, op.coeffs(), &boundary)?;
    let expected = if nonpos { 1.0 } else { -1.0 };
    let certified = values.iter().all(|v| v * expected > 0.0);
    Ok(HopfCertificate { boundary, values, certified })
}
