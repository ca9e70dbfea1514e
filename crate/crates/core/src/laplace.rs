//! Laplace-domain tools: transforms of sampled traces, the modal transfer
//! function `ŵ(p) = σ̂(p) Σ_n c_n(x)/(λ_n + p^α)`, its jump across the
//! negative real axis, and known-pole residue fitting.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elliptic::{BoundarySubset, EigenSystem};
use crate::error::{check_len, Error, Result};
use crate::forward::FluxTrace;
use crate::fractional::{TimeGrid, TimeSeries};
use crate::mittag_leffler::{ml, principal_pow, MLParams};
use crate::special::gauss_legendre;

/// Anything sampled on a time grid, one or more rows.
pub trait Trace {
    fn grid(&self) -> TimeGrid;
    fn rows(&self) -> Vec<&[f64]>;
}

impl Trace for TimeSeries {
    fn grid(&self) -> TimeGrid {
        TimeSeries::grid(self)
    }

    fn rows(&self) -> Vec<&[f64]> {
        vec![self.values()]
    }
}

impl Trace for FluxTrace {
    fn grid(&self) -> TimeGrid {
        self.grid
    }

    fn rows(&self) -> Vec<&[f64]> {
        self.values.iter().map(|r| r.as_slice()).collect()
    }
}

/// What is known about a trace beyond its recorded window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Support {
    /// Identically zero after the window; any `p` is admissible.
    Compact,
    /// Bounded by its window maximum afterwards; needs `Re p > 0`.
    Decaying,
}

/// Largest `-Re p · T_max` accepted for compactly supported traces.
pub const MAX_GROWTH_EXPONENT: f64 = 30.0;

/// One Laplace abscissa with a value per trace row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplaceSample {
    pub p: Complex64,
    pub values: Vec<Complex64>,
    pub tail_bound: f64,
}

/// Trapezoidal `∫₀^{T_max} e^{-pt} w(t) dt` per row, with a bound on the
/// part beyond the window. With `tol = Some(ε)` a tail bound above `ε`
/// is an accuracy error.
pub fn laplace_transform<T: Trace + ?Sized>(
    trace: &T,
    p: Complex64,
    support: Support,
    tol: Option<f64>,
) -> Result<LaplaceSample> {
    if !(p.re.is_finite() && p.im.is_finite()) {
        return Err(Error::invalid("non-finite Laplace abscissa"));
    }
    let grid = trace.grid();
    let t_max = grid.t_max();
    match support {
        Support::Decaying if p.re <= 0.0 => {
            return Err(Error::invalid(format!(
                "Re p = {} must be positive for a trace that is not compactly supported",
                p.re
            )))
        }
        Support::Compact if -p.re * t_max > MAX_GROWTH_EXPONENT => {
            return Err(Error::invalid(format!(
                "-Re p * T_max = {} exceeds the cap {MAX_GROWTH_EXPONENT}",
                -p.re * t_max
            )))
        }
        _ => {}
    }
    let dt = grid.dt();
    let n = grid.n_steps();
    // e^{-p t_j} by recurrence is not accurate enough over long grids; use exp directly
    let weights: Vec<Complex64> = (0..=n)
        .map(|j| {
            let w = if j == 0 || j == n { 0.5 * dt } else { dt };
            w * (-p * grid.t(j)).exp()
        })
        .collect();
    let rows = trace.rows();
    let values: Vec<Complex64> = rows
        .iter()
        .map(|row| row.iter().zip(&weights).map(|(v, w)| w * *v).sum())
        .collect();
    let tail_bound = match support {
        Support::Compact => 0.0,
        Support::Decaying => {
            let m = rows.iter().flat_map(|r| r.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
            m * (-p.re * t_max).exp() / p.re
        }
    };
    if let Some(eps) = tol {
        if tail_bound > eps {
            return Err(Error::Accuracy {
                context: format!("Laplace transform at p = {p}: window too short"),
                achieved: tail_bound,
                requested: eps,
            });
        }
    }
    Ok(LaplaceSample { p, values, tail_bound })
}

/// `∫₀^∞ e^{-pt} t^{α-1}E_{α,α}(-λt^α) dt` by quadrature, for `Re p > 0`.
///
/// The substitution `t = u^{1/α}` turns the integrand into
/// `E_{α,α}(-λu) e^{-p u^{1/α}} / α`, bounded at the origin. Gauss-Legendre
/// panels are dyadic towards `u = 0` (where `u^{1/α}` is not smooth) and
/// subdivided where the exponential oscillates. The range ends where
/// `e^{-Re p·t} < e^{-40}`.
pub fn kernel_transform_quadrature(alpha: f64, lambda: f64, p: Complex64) -> Result<Complex64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("fractional order {alpha} outside (0, 1]")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("eigenvalue {lambda} must be non-negative")));
    }
    if !(p.re > 0.0 && p.im.is_finite()) {
        return Err(Error::invalid("kernel quadrature needs Re p > 0"));
    }
    let params = MLParams::new(alpha, alpha)?;
    let (x, w) = gauss_legendre(24);
    let inv = 1.0 / alpha;
    let u_end = (40.0 / p.re).powf(alpha);
    let integrand = |u: f64| -> Result<Complex64> {
        let e = ml(params, Complex64::new(-lambda * u, 0.0))?.re;
        Ok((-p * u.powf(inv)).exp() * e)
    };
    let mut total = Complex64::new(0.0, 0.0);
    let mut hi = u_end;
    for level in 0..60 {
        let lo = if level == 59 { 0.0 } else { 0.5 * hi };
        let phase = p.norm() * (hi.powf(inv) - lo.powf(inv));
        let pieces = 1 + (phase / 2.0).ceil() as usize;
        let width = (hi - lo) / pieces as f64;
        for k in 0..pieces {
            let mid = lo + (k as f64 + 0.5) * width;
            for (xi, wi) in x.iter().zip(&w) {
                total += integrand(mid + 0.5 * width * xi)? * (wi * 0.5 * width);
            }
        }
        hi = lo;
    }
    Ok(total / alpha)
}

/// Laplace samples as JSON: one object per abscissa with
/// `re_p`, `im_p`, `re_val[]`, `im_val[]`, `tail_bound`.
pub fn samples_to_json(samples: &[LaplaceSample]) -> serde_json::Value {
    serde_json::Value::Array(
        samples
            .iter()
            .map(|s| {
                serde_json::json!({
                    "re_p": s.p.re,
                    "im_p": s.p.im,
                    "re_val": s.values.iter().map(|v| v.re).collect::<Vec<_>>(),
                    "im_val": s.values.iter().map(|v| v.im).collect::<Vec<_>>(),
                    "tail_bound": s.tail_bound,
                })
            })
            .collect(),
    )
}

/// `c_n(x) = Σ_k ⟨ρ⁻¹f, φ_{n,k}⟩ ∂_{ν_a}φ_{n,k}(x)` per distinct eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalCoefficients {
    pub boundary: BoundarySubset,
    pub lambdas: Vec<f64>,
    /// `values[n][i]` at node `boundary.nodes()[i]`.
    pub values: Vec<Vec<f64>>,
}

impl ModalCoefficients {
    pub fn new(boundary: BoundarySubset, lambdas: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        check_len(lambdas.len(), values.len())?;
        for v in &values {
            check_len(boundary.len(), v.len())?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::numeric("non-finite modal coefficient"));
            }
        }
        if lambdas.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::invalid("eigenvalues must be positive"));
        }
        Ok(Self { boundary, lambdas, values })
    }

    /// `Σ_n c_n(x)/(λ_n + z)` at every node.
    pub fn resolvent_sum(&self, z: Complex64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.boundary.len()];
        for (l, c) in self.lambdas.iter().zip(&self.values) {
            let r = 1.0 / (z + l);
            for (o, ci) in out.iter_mut().zip(c) {
                *o += r * ci;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Ground-truth modal coefficients of `f` on `boundary`.
pub fn modal_transfer(eig: &EigenSystem, f: &[f64], boundary: &BoundarySubset) -> Result<ModalCoefficients> {
    let rho = eig.coeffs().rho();
    check_len(rho.len(), f.len())?;
    let g: Vec<f64> = f.iter().zip(rho).map(|(f, r)| f / r).collect();
    let d = eig.coefficients(&g)?;
    let traces = eig.traces_on(boundary)?;
    let values = eig
        .groups()
        .iter()
        .map(|grp| {
            (0..boundary.len())
                .map(|i| grp.clone().map(|j| d[j] * traces[j][i]).sum())
                .collect()
        })
        .collect();
    ModalCoefficients::new(boundary.clone(), eig.eigenvalues().to_vec(), values)
}

/// `ŵ(p) = σ̂(p) Σ_n c_n/(λ_n + p^α)` on the principal branch.
pub fn transfer_eval(modal: &ModalCoefficients, sigma_hat: Complex64, p: Complex64, alpha: f64) -> Result<LaplaceSample> {
    let z = principal_pow(p, alpha)?;
    let values = if sigma_hat == Complex64::new(0.0, 0.0) {
        vec![Complex64::new(0.0, 0.0); modal.boundary.len()]
    } else {
        modal.resolvent_sum(z).into_iter().map(|v| v * sigma_hat).collect()
    };
    Ok(LaplaceSample { p, values, tail_bound: 0.0 })
}

/// Polynomial extrapolation to `h = 0` of samples `(h_k, v_k)` (Neville).
pub fn extrapolate_to_zero(h: &[f64], v: &[Complex64]) -> Complex64 {
    let n = h.len();
    let mut t = v.to_vec();
    for m in 1..n {
        for i in 0..n - m {
            t[i] = (h[i + m] * t[i] - h[i] * t[i + 1]) / (h[i + m] - h[i]);
        }
    }
    t[0]
}

/// Jump `ŵ(Re^{iπ}) - ŵ(Re^{-iπ})` evaluated both ways.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchJump {
    /// Extrapolated one-sided limits of [`transfer_eval`].
    pub limit: Vec<Complex64>,
    /// `σ̂(-R) Σ c_n (-2iR^α sin απ)/((λ_n + R^α e^{iαπ})(λ_n + R^α e^{-iαπ}))`.
    pub closed_form: Vec<Complex64>,
    /// Largest relative disagreement.
    pub defect: f64,
}

pub const BRANCH_JUMP_TOL: f64 = 1e-8;

pub fn branch_jump(
    modal: &ModalCoefficients,
    sigma_hat_at: &dyn Fn(Complex64) -> Complex64,
    r: f64,
    alpha: f64,
) -> Result<BranchJump> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("radius R = {r} must be positive")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("fractional order {alpha} outside (0, 1)")));
    }
    let pi = std::f64::consts::PI;
    let ra = r.powf(alpha);
    let up = Complex64::from_polar(ra, alpha * pi);
    let down = up.conj();
    let factor = Complex64::new(0.0, -2.0 * ra * (alpha * pi).sin());
    let s_neg = sigma_hat_at(Complex64::new(-r, 0.0));
    let mut closed_form = vec![Complex64::new(0.0, 0.0); modal.boundary.len()];
    for (l, c) in modal.lambdas.iter().zip(&modal.values) {
        let k = s_neg * factor / ((up + l) * (down + l));
        for (o, ci) in closed_form.iter_mut().zip(c) {
            *o += k * ci;
        }
    }
    let hs: Vec<f64> = (0..8).map(|k| 0.05 * 0.5f64.powi(k)).collect();
    let side = |sign: f64| -> Result<Vec<Complex64>> {
        let evals = hs
            .iter()
            .map(|&h| {
                let p = Complex64::from_polar(r, sign * (pi - h));
                transfer_eval(modal, sigma_hat_at(p), p, alpha).map(|s| s.values)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((0..modal.boundary.len())
            .map(|i| extrapolate_to_zero(&hs, &evals.iter().map(|e| e[i]).collect::<Vec<_>>()))
            .collect())
    };
    let (upper, lower) = (side(1.0)?, side(-1.0)?);
    let limit: Vec<Complex64> = upper.iter().zip(&lower).map(|(a, b)| a - b).collect();
    let scale = closed_form.iter().chain(&limit).fold(0.0f64, |m, v| m.max(v.norm()));
    let defect = if scale == 0.0 {
        0.0
    } else {
        limit.iter().zip(&closed_form).fold(0.0f64, |m, (a, b)| m.max((a - b).norm())) / scale
    };
    if defect > BRANCH_JUMP_TOL {
        return Err(Error::Consistency(format!(
            "branch jump limit and closed form differ by {defect:.3e} (relative)"
        )));
    }
    Ok(BranchJump { limit, closed_form, defect })
}

/// Normal-equation condition number above which a fit is refused.
pub const MAX_NORMAL_CONDITION: f64 = 1e10;

/// How the Tikhonov parameter of a fit is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FitRegularization {
    None,
    Fixed(f64),
    /// Largest `μ` whose residual norm (after row scaling) stays at `target`.
    Discrepancy { target: f64 },
}

/// Diagnostics of a linear least-squares fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Condition number of the (column-scaled, regularized) normal system.
    pub normal_condition: f64,
    /// Largest relative residual over right-hand sides.
    pub relative_residual: f64,
    /// Residual norm over all right-hand sides, after row scaling.
    pub residual_norm: f64,
    pub tikhonov: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeastSquaresFit {
    /// `coefficients[i][n]` for right-hand side `i`.
    pub coefficients: Vec<Vec<f64>>,
    /// Residual-based standard errors, same layout.
    pub std_errors: Vec<Vec<f64>>,
    pub diagnostics: FitDiagnostics,
}

struct ScaledSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    scale: Vec<f64>,
    u: DMatrix<f64>,
    s: DVector<f64>,
    v_t: DMatrix<f64>,
}

impl ScaledSystem {
    fn solution(&self, mu: f64) -> DMatrix<f64> {
        let utb = self.u.transpose() * &self.b;
        let mut y = utb;
        for (i, s) in self.s.iter().enumerate() {
            let f = if *s > 0.0 { s / (s * s + mu) } else { 0.0 };
            y.row_mut(i).scale_mut(f);
        }
        self.v_t.transpose() * y
    }

    fn residual_norm(&self, x: &DMatrix<f64>) -> f64 {
        (&self.a * x - &self.b).norm()
    }

    fn condition(&self, mu: f64) -> f64 {
        let smax = self.s.max();
        let smin = self.s.min();
        let c = (smax * smax + mu) / (smin * smin + mu);
        if c.is_finite() {
            c
        } else {
            f64::INFINITY
        }
    }
}

/// Real coefficients `x` (one set per right-hand side) minimizing
/// `Σ_j |Σ_n B_{jn} x_n - g_j|²/w_j² + μ Σ_n |s_n x_n|²` for complex `B`, `g`,
/// where `w_j` are optional row scales and `s_n` the scaled column norms.
pub fn complex_least_squares(
    basis: &[Vec<Complex64>],
    rhs: &[Vec<Complex64>],
    row_scale: Option<&[f64]>,
    reg: FitRegularization,
) -> Result<LeastSquaresFit> {
    let rows = basis.len();
    check_len(rows, rhs.len())?;
    if rows == 0 {
        return Err(Error::DataInsufficient("no samples to fit".into()));
    }
    if let Some(w) = row_scale {
        check_len(rows, w.len())?;
        if w.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::invalid("row scales must be positive"));
        }
    }
    let cols = basis[0].len();
    let nrhs = rhs[0].len();
    let mut a = DMatrix::<f64>::zeros(2 * rows, cols);
    let mut b = DMatrix::<f64>::zeros(2 * rows, nrhs);
    for (j, (brow, grow)) in basis.iter().zip(rhs).enumerate() {
        check_len(cols, brow.len())?;
        check_len(nrhs, grow.len())?;
        let w = row_scale.map_or(1.0, |w| w[j]);
        for n in 0..cols {
            a[(2 * j, n)] = brow[n].re / w;
            a[(2 * j + 1, n)] = brow[n].im / w;
        }
        for i in 0..nrhs {
            b[(2 * j, i)] = grow[i].re / w;
            b[(2 * j + 1, i)] = grow[i].im / w;
        }
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::numeric("non-finite entry in least-squares system"));
    }
    let scale: Vec<f64> = (0..cols).map(|n| a.column(n).norm()).collect();
    if let Some(n) = scale.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::Conditioning {
            cond: f64::INFINITY,
            hint: format!("basis column {n} vanishes on every sample"),
        });
    }
    for (n, sc) in scale.iter().enumerate() {
        a.column_mut(n).scale_mut(1.0 / sc);
    }
    let svd = a.clone().svd(true, true);
    let sys = ScaledSystem {
        u: svd.u.ok_or_else(|| Error::numeric("SVD failed"))?,
        v_t: svd.v_t.ok_or_else(|| Error::numeric("SVD failed"))?,
        s: svd.singular_values,
        a,
        b,
        scale,
    };
    let mu = match reg {
        FitRegularization::None => 0.0,
        FitRegularization::Fixed(mu) if mu >= 0.0 && mu.is_finite() => mu,
        FitRegularization::Fixed(mu) => return Err(Error::invalid(format!("Tikhonov parameter {mu} must be non-negative"))),
        FitRegularization::Discrepancy { target } => discrepancy_parameter(&sys, target)?,
    };
    let normal_condition = sys.condition(mu);
    if !(normal_condition <= MAX_NORMAL_CONDITION) {
        return Err(Error::Conditioning {
            cond: normal_condition,
            hint: "use more or better-spread sample abscissae, fewer active modes, or Tikhonov regularization".into(),
        });
    }
    let x = sys.solution(mu);
    let resid = &sys.a * &x - &sys.b;
    let dof = (2 * rows).saturating_sub(cols).max(1) as f64;
    // diag((AᵀA + μ)^{-1} AᵀA (AᵀA + μ)^{-1}) in the scaled variables
    let var: Vec<f64> = (0..cols)
        .map(|n| {
            sys.s
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let f = s / (s * s + mu);
                    (sys.v_t[(i, n)] * f).powi(2)
                })
                .sum()
        })
        .collect();
    let mut relative_residual = 0.0f64;
    let mut coefficients = Vec::with_capacity(nrhs);
    let mut std_errors = Vec::with_capacity(nrhs);
    for i in 0..nrhs {
        let bn = sys.b.column(i).norm();
        let rn = resid.column(i).norm();
        relative_residual = relative_residual.max(if bn > 0.0 { rn / bn } else { rn });
        let s2 = rn * rn / dof;
        coefficients.push((0..cols).map(|n| x[(n, i)] / sys.scale[n]).collect());
        std_errors.push((0..cols).map(|n| (s2 * var[n]).sqrt() / sys.scale[n]).collect());
    }
    Ok(LeastSquaresFit {
        coefficients,
        std_errors,
        diagnostics: FitDiagnostics {
            normal_condition,
            relative_residual,
            residual_norm: resid.norm(),
            tikhonov: mu,
            samples: rows,
        },
    })
}

fn discrepancy_parameter(sys: &ScaledSystem, target: f64) -> Result<f64> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::invalid(format!("discrepancy target {target} must be positive")));
    }
    let res = |mu: f64| sys.residual_norm(&sys.solution(mu));
    let (mut lo, mut hi) = (-16.0f64, 4.0f64);
    let (r_lo, r_hi) = (res(10f64.powf(lo)), res(10f64.powf(hi)));
    if r_lo > target || r_hi < target {
        return Err(Error::Regularization(format!(
            "discrepancy principle cannot bracket target {target:.3e}: residual {r_lo:.3e} at mu=1e{lo} and {r_hi:.3e} at mu=1e{hi}"
        )));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if res(10f64.powf(mid)) > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(10f64.powf(lo))
}

/// Known-pole rational fit `G(z) ≈ Σ_{n<n_active} c_n/(λ_n + z)` per node.
///
/// `samples` holds `(z_j, G(z_j))` with one value per boundary node.
pub fn residue_extract(
    samples: &[(Complex64, Vec<Complex64>)],
    lambdas: &[f64],
    n_active: usize,
    boundary: &BoundarySubset,
    tikhonov: f64,
) -> Result<(ModalCoefficients, FitDiagnostics)> {
    if n_active == 0 || n_active > lambdas.len() {
        return Err(Error::invalid(format!("n_active = {n_active} outside 1..={}", lambdas.len())));
    }
    if samples.len() < 2 * n_active {
        return Err(Error::DataInsufficient(format!(
            "{} samples for {n_active} active modes; at least {} needed",
            samples.len(),
            2 * n_active
        )));
    }
    let lam = &lambdas[..n_active];
    for (z, _) in samples {
        if let Some(l) = lam.iter().find(|l| (z + **l).norm() < 1e-12 * **l) {
            return Err(Error::invalid(format!("sample z = {z} sits on the pole -{l}")));
        }
    }
    let basis: Vec<Vec<Complex64>> = samples
        .iter()
        .map(|(z, _)| lam.iter().map(|l| 1.0 / (z + l)).collect())
        .collect();
    let rhs: Vec<Vec<Complex64>> = samples.iter().map(|(_, g)| g.clone()).collect();
    let reg = if tikhonov > 0.0 { FitRegularization::Fixed(tikhonov) } else { FitRegularization::None };
    let fit = complex_least_squares(&basis, &rhs, None, reg)?;
    let values = (0..n_active).map(|n| fit.coefficients.iter().map(|col| col[n]).collect()).collect();
    Ok((ModalCoefficients::new(boundary.clone(), lam.to_vec(), values)?, fit.diagnostics))
}

/// `lim_{z→-λ} (z+λ) G(z)` along the ray `z = -λ + h e^{iθ}` by Richardson
/// extrapolation in `h`.
pub fn richardson_residue(g: &dyn Fn(Complex64) -> Complex64, lambda: f64, theta: f64, h0: f64) -> Complex64 {
    let hs: Vec<f64> = (0..10).map(|k| h0 * 0.5f64.powi(k)).collect();
    let dir = Complex64::from_polar(1.0, theta);
    let vals: Vec<Complex64> = hs
        .iter()
        .map(|&h| {
            let dz = dir * h;
            dz * g(Complex64::new(-lambda, 0.0) + dz)
        })
        .collect();
    extrapolate_to_zero(&hs, &vals)
}

/// `|mean of f over the circle - f(center)| / max |f|` with `n` equispaced
/// points; small for holomorphic `f`.
pub fn cauchy_mean_defect(f: &(dyn Fn(Complex64) -> Complex64 + Sync), center: Complex64, radius: f64, n: usize) -> f64 {
    let pts: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|k| f(center + Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / n as f64)))
        .collect();
    let mean = pts.iter().sum::<Complex64>() / n as f64;
    let c = f(center);
    let scale = pts.iter().fold(c.norm(), |m, v| m.max(v.norm()));
    if scale == 0.0 {
        0.0
    } else {
        (mean - c).norm() / scale
    }
}

/// `ŵ` of every node of `trace` at each abscissa, computed concurrently.
pub fn transform_many<T: Trace + Sync + ?Sized>(
    trace: &T,
    ps: &[Complex64],
    support: Support,
    tol: Option<f64>,
) -> Result<Vec<LaplaceSample>> {
    ps.par_iter().map(|&p| laplace_transform(trace, p, support, tol)).collect()
}
