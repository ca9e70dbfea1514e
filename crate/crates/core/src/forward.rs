//! Forward problem `ρ ∂_t^α v + 𝒜v = σ(t) f(x)`, `v(·,0) = 0`, Dirichlet
//! boundary, and its conormal boundary flux.
//!
//! Two independent solvers:
//!
//! * spectral: `v(t) = Σ_j d_j y_j(t) φ_j` with `d_j = ⟨ρ⁻¹f, φ_j⟩_ρ` and the
//!   modal Duhamel integral `y_j = σ * k_j`, `k_j(t) = t^{α-1}E_{α,α}(-λ_j t^α)`.
//!   The integral uses product quadrature exact for piecewise-linear `σ`:
//!   with `K₁ = ∫k`, `K₂ = ∫K₁` (both closed forms in `E_{α,α+1}`,
//!   `E_{α,α+2}`), the interval `[t_i, t_{i+1}]` contributes
//!   `A(m)σ_i + B(m)σ_{i+1}` at `t_n`, `m = n-1-i`, where
//!   `A(m) = K₁((m+1)dt) - ΔK₂/dt`, `B(m) = ΔK₂/dt - K₁(m dt)`.
//! * L1 time stepping of the semi-discrete system `M ∂_t^α u + K u = σ f`,
//!   implicit, with `(c M + K)` factored once.
//!
//! `σ` is extended by zero beyond the final time `T`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elliptic::{conormal_trace, weighted_norm, BoundarySubset, CoefficientField, DiscreteOperator, EigenSystem};
use crate::error::{check_len, Error, Result};
use crate::fractional::{l1_weights, TimeGrid, TimeSeries};
use crate::mittag_leffler::kernel_antiderivative;
use crate::special::gamma;

/// Time profile `σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SigmaForm {
    /// Identically zero.
    Zero,
    /// Triangle of unit height on `[start, end]`, peak at the midpoint.
    Hat { start: f64, end: f64 },
    /// `sin²(π(t-start)/(end-start))` on `[start, end]`.
    SmoothBump { start: f64, end: f64 },
    /// `first` on `[start, mid)`, `second` on `[mid, end)`.
    TwoLevel { start: f64, mid: f64, end: f64, first: f64, second: f64 },
    /// Constant `level` on `[0, end)`.
    Pulse { end: f64, level: f64 },
    /// Piecewise-linear interpolation of samples, zero past the last node.
    Sampled(TimeSeries),
}

impl SigmaForm {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            SigmaForm::Zero => 0.0,
            SigmaForm::Hat { start, end } => {
                if t <= *start || t >= *end {
                    0.0
                } else {
                    let mid = 0.5 * (start + end);
                    let half = 0.5 * (end - start);
                    1.0 - (t - mid).abs() / half
                }
            }
            SigmaForm::SmoothBump { start, end } => {
                if t <= *start || t >= *end {
                    0.0
                } else {
                    (std::f64::consts::PI * (t - start) / (end - start)).sin().powi(2)
                }
            }
            SigmaForm::TwoLevel { start, mid, end, first, second } => {
                if t < *start || t >= *end {
                    0.0
                } else if t < *mid {
                    *first
                } else {
                    *second
                }
            }
            SigmaForm::Pulse { end, level } => {
                if t >= 0.0 && t < *end {
                    *level
                } else {
                    0.0
                }
            }
            SigmaForm::Sampled(s) => {
                let g = s.grid();
                if t < 0.0 || t > g.t_max() {
                    return 0.0;
                }
                let x = t / g.dt();
                let i = (x.floor() as usize).min(g.n_steps() - 1);
                let w = x - i as f64;
                (1.0 - w) * s.values()[i] + w * s.values()[i + 1]
            }
        }
    }

    /// Right end of the support, if known in closed form.
    fn support_end(&self) -> Option<f64> {
        match self {
            SigmaForm::Zero => Some(0.0),
            SigmaForm::Hat { end, .. }
            | SigmaForm::SmoothBump { end, .. }
            | SigmaForm::TwoLevel { end, .. }
            | SigmaForm::Pulse { end, .. } => Some(*end),
            SigmaForm::Sampled(s) => {
                let g = s.grid();
                let last = s.values().iter().rposition(|v| *v != 0.0);
                Some(last.map_or(0.0, |j| g.t((j + 1).min(g.n_steps()))))
            }
        }
    }
}

/// Separated source `F(x,t) = σ(t) f(x)` with `σ = 0` on `(T-δ, T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub f: Vec<f64>,
    pub sigma: SigmaForm,
    pub t_final: f64,
    pub delta: f64,
}

impl SourceSpec {
    pub fn new(f: Vec<f64>, sigma: SigmaForm, t_final: f64, delta: f64) -> Result<Self> {
        let s = Self { f, sigma, t_final, delta };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::invalid(format!("final time T = {} must be positive", self.t_final)));
        }
        if !(self.delta > 0.0 && self.delta < self.t_final) {
            return Err(Error::invalid(format!("vanishing tail delta = {} outside (0, T)", self.delta)));
        }
        if self.f.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("space part f has non-finite values"));
        }
        let start = self.t_final - self.delta;
        let end = self.sigma.support_end().unwrap_or(self.t_final);
        if end > start + 1e-12 * self.t_final {
            // closed forms may still vanish there; check numerically
            let bad = (0..=1000)
                .map(|k| start + (self.t_final - start) * k as f64 / 1000.0)
                .find(|&t| t > start && self.sigma.eval(t).abs() > 1e-14);
            if let Some(t) = bad {
                return Err(Error::invalid(format!(
                    "sigma({t}) = {} does not vanish on (T - delta, T)",
                    self.sigma.eval(t)
                )));
            }
        }
        Ok(())
    }

    /// `σ` with the zero extension beyond `T`.
    pub fn sigma_at(&self, t: f64) -> f64 {
        if t >= self.t_final {
            0.0
        } else {
            self.sigma.eval(t)
        }
    }

    pub fn sample_sigma(&self, grid: TimeGrid) -> TimeSeries {
        TimeSeries::from_fn(grid, |t| self.sigma_at(t))
    }
}

/// Field snapshots `v(·, t_j)` at every node of the time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldTrajectory {
    pub grid: TimeGrid,
    pub snapshots: Vec<Vec<f64>>,
}

impl FieldTrajectory {
    pub fn final_snapshot(&self) -> &[f64] {
        self.snapshots.last().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

/// Conormal flux `w(x, t_j)` on a boundary subset; `values[i][j]` belongs to
/// node `boundary.nodes()[i]` at time `t_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxTrace {
    pub boundary: BoundarySubset,
    pub grid: TimeGrid,
    pub values: Vec<Vec<f64>>,
}

impl FluxTrace {
    pub fn new(boundary: BoundarySubset, grid: TimeGrid, values: Vec<Vec<f64>>) -> Result<Self> {
        check_len(boundary.len(), values.len())?;
        for row in &values {
            check_len(grid.len(), row.len())?;
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::numeric("flux trace has non-finite samples"));
            }
        }
        Ok(Self { boundary, grid, values })
    }

    pub fn node_series(&self, i: usize) -> TimeSeries {
        TimeSeries::new(self.grid, self.values[i].clone()).expect("flux rows match the grid")
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|w|` over nodes and grid times in the open window `(t0, t1)`.
    pub fn max_abs_in_window(&self, t0: f64, t1: f64) -> f64 {
        let g = self.grid;
        let mut m = 0.0f64;
        for row in &self.values {
            for (j, v) in row.iter().enumerate() {
                let t = g.t(j);
                if t > t0 && t < t1 {
                    m = m.max(v.abs());
                }
            }
        }
        m
    }
}

/// Product-quadrature weights `A_j(m)`, `B_j(m)` for each eigenvalue on a
/// fixed grid; reusable across sources.
#[derive(Debug, Clone)]
pub struct ModalKernelTable {
    alpha: f64,
    grid: TimeGrid,
    lambdas: Vec<f64>,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
}

impl ModalKernelTable {
    pub fn new(alpha: f64, lambdas: &[f64], grid: TimeGrid) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid(format!("fractional order {alpha} outside (0, 1]")));
        }
        let n = grid.n_steps();
        let dt = grid.dt();
        let rows: Vec<(Vec<f64>, Vec<f64>)> = lambdas
            .par_iter()
            .map(|&lambda| -> Result<(Vec<f64>, Vec<f64>)> {
                let mut k1 = Vec::with_capacity(n + 1);
                let mut k2 = Vec::with_capacity(n + 1);
                for m in 0..=n {
                    let t = m as f64 * dt;
                    k1.push(kernel_antiderivative(alpha, lambda, t, 1)?);
                    k2.push(kernel_antiderivative(alpha, lambda, t, 2)?);
                }
                let mut a = Vec::with_capacity(n);
                let mut b = Vec::with_capacity(n);
                for m in 0..n {
                    let dk2 = (k2[m + 1] - k2[m]) / dt;
                    a.push(k1[m + 1] - dk2);
                    b.push(dk2 - k1[m]);
                }
                Ok((a, b))
            })
            .collect::<Result<_>>()?;
        let (a, b) = rows.into_iter().unzip();
        Ok(Self { alpha, grid, lambdas: lambdas.to_vec(), a, b })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn weights(&self, mode: usize) -> (&[f64], &[f64]) {
        (&self.a[mode], &self.b[mode])
    }

    /// `Σ_j c_j A_j`, `Σ_j c_j B_j`: weights of the combined kernel `Σ c_j k_j`.
    pub fn combined(&self, c: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        check_len(self.lambdas.len(), c.len())?;
        let n = self.grid.n_steps();
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        for (j, &cj) in c.iter().enumerate() {
            if cj != 0.0 {
                for m in 0..n {
                    a[m] += cj * self.a[j][m];
                    b[m] += cj * self.b[j][m];
                }
            }
        }
        Ok((a, b))
    }

    /// Duhamel integral `(σ * k_j)(t_n)` for every grid node.
    pub fn convolve(&self, mode: usize, sigma: &[f64]) -> Result<Vec<f64>> {
        convolve_weights(&self.a[mode], &self.b[mode], sigma)
    }
}

/// `y_n = Σ_{i<n} A(n-1-i) σ_i + B(n-1-i) σ_{i+1}`, `y_0 = 0`.
pub fn convolve_weights(a: &[f64], b: &[f64], sigma: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    check_len(n + 1, sigma.len())?;
    let first = sigma.iter().position(|v| *v != 0.0);
    let mut y = vec![0.0; n + 1];
    let Some(first) = first else { return Ok(y) };
    for (step, out) in y.iter_mut().enumerate().skip(1) {
        let mut s = 0.0;
        // σ_i with i + 1 < first contribute nothing
        for i in first.saturating_sub(1)..step {
            let m = step - 1 - i;
            s += a[m] * sigma[i] + b[m] * sigma[i + 1];
        }
        *out = s;
    }
    Ok(y)
}

/// Relative spectral tail of `ρ⁻¹f` tolerated by default.
pub const DEFAULT_TAIL_TOL: f64 = 1e-3;

/// Modal data of one source: `d_j` and the amplitudes `y_j(t_n)`.
#[derive(Debug, Clone)]
pub struct ModalResponse {
    pub coefficients: Vec<f64>,
    pub amplitudes: Vec<Vec<f64>>,
    /// `‖ρ⁻¹f - Σ d_j φ_j‖_ρ / ‖ρ⁻¹f‖_ρ`.
    pub relative_tail: f64,
}

/// Spectral forward solver bound to an eigensystem, order and grid.
#[derive(Debug, Clone)]
pub struct SpectralModel<'a> {
    eig: &'a EigenSystem,
    table: ModalKernelTable,
    tail_tol: f64,
}

impl<'a> SpectralModel<'a> {
    pub fn new(eig: &'a EigenSystem, alpha: f64, grid: TimeGrid) -> Result<Self> {
        let table = ModalKernelTable::new(alpha, eig.raw_eigenvalues(), grid)?;
        Ok(Self { eig, table, tail_tol: DEFAULT_TAIL_TOL })
    }

    pub fn with_tail_tol(mut self, tol: f64) -> Self {
        self.tail_tol = tol;
        self
    }

    pub fn eig(&self) -> &EigenSystem {
        self.eig
    }

    pub fn table(&self) -> &ModalKernelTable {
        &self.table
    }

    pub fn grid(&self) -> TimeGrid {
        self.table.grid
    }

    /// `d_j = ⟨ρ⁻¹f, φ_j⟩_ρ` and the relative truncation tail.
    pub fn source_coefficients(&self, f: &[f64]) -> Result<(Vec<f64>, f64)> {
        let coeffs = self.eig.coeffs();
        check_len(coeffs.rho().len(), f.len())?;
        let g: Vec<f64> = f.iter().zip(coeffs.rho()).map(|(f, r)| f / r).collect();
        let d = self.eig.coefficients(&g)?;
        let norm = weighted_norm(&g, coeffs)?;
        if norm == 0.0 {
            return Ok((d, 0.0));
        }
        let captured = self.eig.synthesize(&d)?;
        let r: Vec<f64> = g.iter().zip(&captured).map(|(a, b)| a - b).collect();
        Ok((d, weighted_norm(&r, coeffs)? / norm))
    }

    pub fn modal(&self, src: &SourceSpec) -> Result<ModalResponse> {
        let (d, tail) = self.source_coefficients(&src.f)?;
        if tail > self.tail_tol {
            return Err(Error::Truncation { tail, partial: 1.0 });
        }
        let sigma = src.sample_sigma(self.grid());
        let amplitudes = d
            .par_iter()
            .enumerate()
            .map(|(j, &dj)| {
                if dj == 0.0 {
                    Ok(vec![0.0; self.grid().len()])
                } else {
                    self.table.convolve(j, sigma.values())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ModalResponse { coefficients: d, amplitudes, relative_tail: tail })
    }

    pub fn solve(&self, src: &SourceSpec) -> Result<FieldTrajectory> {
        let modal = self.modal(src)?;
        let n_nodes = self.eig.coeffs().rho().len();
        let snapshots = (0..self.grid().len())
            .map(|t| {
                let mut v = vec![0.0; n_nodes];
                for (j, dj) in modal.coefficients.iter().enumerate() {
                    let c = dj * modal.amplitudes[j][t];
                    if c != 0.0 {
                        for (o, p) in v.iter_mut().zip(self.eig.function(j)) {
                            *o += c * p;
                        }
                    }
                }
                v
            })
            .collect();
        Ok(FieldTrajectory { grid: self.grid(), snapshots })
    }

    /// Flux from the modal form `Σ_j d_j y_j(t) ∂_{ν_a}φ_j(x)`.
    pub fn flux(&self, src: &SourceSpec, boundary: &BoundarySubset) -> Result<FluxTrace> {
        let modal = self.modal(src)?;
        let traces = self.eig.traces_on(boundary)?;
        let n_t = self.grid().len();
        let values = (0..boundary.len())
            .map(|i| {
                let mut w = vec![0.0; n_t];
                // fixed mode order keeps the reduction deterministic
                for (j, dj) in modal.coefficients.iter().enumerate() {
                    let c = dj * traces[j][i];
                    if c != 0.0 {
                        for (o, y) in w.iter_mut().zip(&modal.amplitudes[j]) {
                            *o += c * y;
                        }
                    }
                }
                w
            })
            .collect();
        FluxTrace::new(boundary.clone(), self.grid(), values)
    }
}

/// Spectral Duhamel solution on `grid`.
pub fn spectral_solve(eig: &EigenSystem, alpha: f64, src: &SourceSpec, grid: TimeGrid) -> Result<FieldTrajectory> {
    SpectralModel::new(eig, alpha, grid)?.solve(src)
}

/// Implicit L1 time stepping; unconditionally stable.
pub fn l1_solve(op: &DiscreteOperator, alpha: f64, src: &SourceSpec, grid: TimeGrid) -> Result<FieldTrajectory> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("fractional order {alpha} outside (0, 1]")));
    }
    let fi = op.restrict(&src.f)?;
    let n_nodes = op.n_nodes();
    let steps = grid.n_steps();
    let mut snapshots = Vec::with_capacity(steps + 1);
    snapshots.push(vec![0.0; n_nodes]);
    let sigma = src.sample_sigma(grid);
    if fi.iter().all(|v| *v == 0.0) || sigma.values().iter().all(|v| *v == 0.0) {
        snapshots.resize(steps + 1, vec![0.0; n_nodes]);
        return Ok(FieldTrajectory { grid, snapshots });
    }
    let c = grid.dt().powf(-alpha) / gamma(2.0 - alpha);
    let b = l1_weights(alpha, steps);
    let m = op.mass();
    let mut system: DMatrix<f64> = op.stiffness().clone();
    for (i, mi) in m.iter().enumerate() {
        system[(i, i)] += c * mi;
    }
    let chol = system
        .cholesky()
        .ok_or_else(|| Error::numeric("L1 system matrix is not positive definite"))?;
    let dim = fi.len();
    let mut increments: Vec<DVector<f64>> = Vec::with_capacity(steps);
    let mut u = DVector::<f64>::zeros(dim);
    for n in 1..=steps {
        // history: Σ_{k=1}^{n-1} b_k (u^{n-k} - u^{n-k-1})
        let mut hist = DVector::<f64>::zeros(dim);
        for k in 1..n {
            hist.axpy(b[k], &increments[n - k - 1], 1.0);
        }
        let mut rhs = &fi * sigma.values()[n];
        for i in 0..dim {
            rhs[i] += c * m[i] * (u[i] - hist[i]);
        }
        let next = chol.solve(&rhs);
        increments.push(&next - &u);
        u = next;
        snapshots.push(op.extend(&u));
    }
    Ok(FieldTrajectory { grid, snapshots })
}

/// Conormal trace of every snapshot.
pub fn flux_trace(
    traj: &FieldTrajectory,
    coeffs: &CoefficientField,
    boundary: &BoundarySubset,
) -> Result<FluxTrace> {
    let per_time = traj
        .snapshots
        .iter()
        .map(|v| conormal_trace(v, coeffs, boundary))
        .collect::<Result<Vec<_>>>()?;
    let values = (0..boundary.len()).map(|i| per_time.iter().map(|row| row[i]).collect()).collect();
    FluxTrace::new(boundary.clone(), traj.grid, values)
}

/// `‖u‖_ρ` relative error between two grid vectors, against the second.
pub fn relative_error(u: &[f64], reference: &[f64], coeffs: &CoefficientField) -> Result<f64> {
    let d: Vec<f64> = u.iter().zip(reference).map(|(a, b)| a - b).collect();
    let den = weighted_norm(reference, coeffs)?;
    let num = weighted_norm(&d, coeffs)?;
    Ok(if den == 0.0 { num } else { num / den })
}

/// `ρ Σ_j w_j φ_j`, a source whose `ρ⁻¹f` lies in the retained span.
pub fn source_from_modes(eig: &EigenSystem, weights: &[f64]) -> Result<Vec<f64>> {
    let mut w = weights.to_vec();
    if w.len() > eig.n_modes() {
        return Err(Error::invalid("more mode weights than retained modes"));
    }
    w.resize(eig.n_modes(), 0.0);
    let g = eig.synthesize(&w)?;
    Ok(g.iter().zip(eig.coeffs().rho()).map(|(g, r)| g * r).collect())
}
