//! Dirichlet problems for `𝒜 = -div(a∇·) + q` with weight `ρ` on intervals
//! and rectangles.
//!
//! Grid vectors hold one value per node, boundary nodes included; fields in
//! the operator's domain vanish there. The discrete operator is
//! `A_h = M⁻¹K` with `K` the conservative finite-difference stiffness on the
//! interior nodes and `M = diag(ρ)`, so eigenpairs solve `K v = λ M v`.
//! Coefficients are sampled at nodes and `a` is harmonically averaged onto the
//! half nodes. In 2D the off-diagonal `a₁₂` enters through a symmetric central
//! cross stencil, admitted only when `|a₁₂| < min(a₁₁, a₂₂)` node by node.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

pub const MIN_RESOLUTION: usize = 16;

/// Interval `(lo[0], hi[0])` or rectangle `(lo[0], hi[0]) × (lo[1], hi[1])`
/// split into `n[d]` equal cells per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    dim: usize,
    lo: [f64; 2],
    hi: [f64; 2],
    n: [usize; 2],
}

impl DomainSpec {
    pub fn interval(a: f64, b: f64, cells: usize) -> Result<Self> {
        Self::checked(1, [a, 0.0], [b, 0.0], [cells, 0])
    }

    pub fn rectangle(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        Self::checked(2, [x.0, y.0], [x.1, y.1], [nx, ny])
    }

    fn checked(dim: usize, lo: [f64; 2], hi: [f64; 2], n: [usize; 2]) -> Result<Self> {
        for d in 0..dim {
            if !(lo[d].is_finite() && hi[d].is_finite() && hi[d] > lo[d]) {
                return Err(Error::invalid(format!("degenerate extent on axis {d}: ({}, {})", lo[d], hi[d])));
            }
            if n[d] < MIN_RESOLUTION {
                return Err(Error::invalid(format!(
                    "resolution {} on axis {d} below the minimum {MIN_RESOLUTION}",
                    n[d]
                )));
            }
        }
        Ok(Self { dim, lo, hi, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn h(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.n[axis] as f64
    }

    pub fn extent(&self, axis: usize) -> (f64, f64) {
        (self.lo[axis], self.hi[axis])
    }

    /// Cell volume `h` or `hx·hy`.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|d| self.h(d)).product()
    }

    pub fn n_nodes(&self) -> usize {
        (self.n[0] + 1) * (self.n[1] + 1)
    }

    /// Global index of node `(i, j)`; `x` runs fastest.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * (self.n[0] + 1) + i
    }

    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % (self.n[0] + 1), idx / (self.n[0] + 1))
    }

    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.ij(idx);
        [self.lo[0] + i as f64 * self.h(0), if self.dim == 2 { self.lo[1] + j as f64 * self.h(1) } else { 0.0 }]
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let (i, j) = self.ij(idx);
        let on_x = i == 0 || i == self.n[0];
        if self.dim == 1 {
            on_x
        } else {
            on_x || j == 0 || j == self.n[1]
        }
    }

    fn is_corner(&self, idx: usize) -> bool {
        let (i, j) = self.ij(idx);
        self.dim == 2 && (i == 0 || i == self.n[0]) && (j == 0 || j == self.n[1])
    }

    /// Boundary nodes carrying a well-defined outward normal, in ascending
    /// index order. Rectangle corners are excluded.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.n_nodes()).filter(|&k| self.is_boundary(k) && !self.is_corner(k)).collect()
    }

    /// Samples a closed-form function at every node.
    pub fn sample(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        (0..self.n_nodes()).map(|k| f(self.coords(k))).collect()
    }

    /// Trapezoidal quadrature weight of each node (without `ρ`).
    pub fn quadrature_weights(&self) -> Vec<f64> {
        (0..self.n_nodes())
            .map(|k| {
                let (i, j) = self.ij(k);
                let mut w = self.h(0) * if i == 0 || i == self.n[0] { 0.5 } else { 1.0 };
                if self.dim == 2 {
                    w *= self.h(1) * if j == 0 || j == self.n[1] { 0.5 } else { 1.0 };
                }
                w
            })
            .collect()
    }
}

/// Nodal samples of `a` (symmetric; `a12`, `a22` unused in 1D), `q` and `ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientField {
    domain: DomainSpec,
    a11: Vec<f64>,
    a12: Vec<f64>,
    a22: Vec<f64>,
    q: Vec<f64>,
    rho: Vec<f64>,
}

impl CoefficientField {
    pub fn new(
        domain: DomainSpec,
        a11: Vec<f64>,
        a12: Vec<f64>,
        a22: Vec<f64>,
        q: Vec<f64>,
        rho: Vec<f64>,
    ) -> Result<Self> {
        let n = domain.n_nodes();
        for v in [&a11, &a12, &a22, &q, &rho] {
            check_len(n, v.len())?;
        }
        Ok(Self { domain, a11, a12, a22, q, rho })
    }

    /// Isotropic `a = a(x)I`.
    pub fn isotropic(
        domain: DomainSpec,
        a: impl Fn([f64; 2]) -> f64,
        q: impl Fn([f64; 2]) -> f64,
        rho: impl Fn([f64; 2]) -> f64,
    ) -> Self {
        let a = domain.sample(a);
        Self {
            domain,
            a12: vec![0.0; a.len()],
            a22: a.clone(),
            a11: a,
            q: domain.sample(q),
            rho: domain.sample(rho),
        }
    }

    pub fn constant(domain: DomainSpec, a: f64, q: f64, rho: f64) -> Self {
        Self::isotropic(domain, |_| a, |_| q, |_| rho)
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn a11(&self) -> &[f64] {
        &self.a11
    }

    pub fn a12(&self) -> &[f64] {
        &self.a12
    }

    pub fn a22(&self) -> &[f64] {
        &self.a22
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// Checks ellipticity, `q ≥ 0` and `ρ > 0`; returns the ellipticity
    /// constant (minimum over nodes of the smallest eigenvalue of `a`).
    pub fn validate(&self) -> Result<f64> {
        let mut c = f64::INFINITY;
        for k in 0..self.domain.n_nodes() {
            let bad = |reason: String| Err(Error::Coefficient { node: k, reason });
            let vals = [self.a11[k], self.a12[k], self.a22[k], self.q[k], self.rho[k]];
            if vals.iter().any(|v| !v.is_finite()) {
                return bad("non-finite coefficient".into());
            }
            let min_eig = if self.domain.dim == 1 {
                self.a11[k]
            } else {
                let (p, r, s) = (self.a11[k], self.a12[k], self.a22[k]);
                0.5 * (p + s) - (0.25 * (p - s) * (p - s) + r * r).sqrt()
            };
            if min_eig <= 0.0 {
                return bad(format!("diffusion matrix not positive definite (min eigenvalue {min_eig:e})"));
            }
            if self.domain.dim == 2 && self.a12[k].abs() >= self.a11[k].min(self.a22[k]) {
                return bad(format!(
                    "off-diagonal a12 = {} not dominated by the diagonal ({}, {})",
                    self.a12[k], self.a11[k], self.a22[k]
                ));
            }
            if self.q[k] < 0.0 {
                return bad(format!("q = {} is negative", self.q[k]));
            }
            if self.rho[k] <= 0.0 {
                return bad(format!("rho = {} is not positive", self.rho[k]));
            }
            c = c.min(min_eig);
        }
        Ok(c)
    }
}

fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

/// Assembled `A_h = M⁻¹K` on the interior nodes, with `K` factored once.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    coeffs: CoefficientField,
    interior: Vec<usize>,
    slot: Vec<Option<usize>>,
    stiffness: DMatrix<f64>,
    mass: Vec<f64>,
    chol: Cholesky<f64, Dyn>,
    ellipticity: f64,
}

/// Builds the discrete operator after validating the coefficients.
pub fn assemble(domain: &DomainSpec, coeffs: &CoefficientField) -> Result<DiscreteOperator> {
    if coeffs.domain != *domain {
        return Err(Error::invalid("coefficient field sampled on a different grid"));
    }
    let ellipticity = coeffs.validate()?;
    let interior: Vec<usize> = (0..domain.n_nodes()).filter(|&k| !domain.is_boundary(k)).collect();
    let mut slot = vec![None; domain.n_nodes()];
    for (s, &k) in interior.iter().enumerate() {
        slot[k] = Some(s);
    }
    let m = interior.len();
    let mut kmat = DMatrix::<f64>::zeros(m, m);
    let mut add = |row: usize, col_node: usize, v: f64| {
        if let Some(c) = slot[col_node] {
            kmat[(row, c)] += v;
        }
    };
    let c = coeffs;
    for (r, &k) in interior.iter().enumerate() {
        let (i, j) = domain.ij(k);
        add(r, k, c.q[k]);
        // axis-aligned second differences with harmonic half-node averages
        let axes: &[(usize, &Vec<f64>)] = if domain.dim == 1 { &[(0, &c.a11)] } else { &[(0, &c.a11), (1, &c.a22)] };
        for &(axis, a) in axes {
            let h2 = domain.h(axis).powi(2);
            let (prev, next) = if axis == 0 {
                (domain.index(i - 1, j), domain.index(i + 1, j))
            } else {
                (domain.index(i, j - 1), domain.index(i, j + 1))
            };
            let am = harmonic(a[prev], a[k]) / h2;
            let ap = harmonic(a[next], a[k]) / h2;
            add(r, k, am + ap);
            add(r, prev, -am);
            add(r, next, -ap);
        }
        if domain.dim == 2 {
            // -∂x(a12 ∂y u) - ∂y(a12 ∂x u) by central differences
            let s = 0.25 / (domain.h(0) * domain.h(1));
            let at = |ii: usize, jj: usize| c.a12[domain.index(ii, jj)];
            let node = |ii: usize, jj: usize| domain.index(ii, jj);
            let (e, w, n, so) = (at(i + 1, j), at(i - 1, j), at(i, j + 1), at(i, j - 1));
            if e != 0.0 || w != 0.0 || n != 0.0 || so != 0.0 {
                add(r, node(i + 1, j + 1), -s * (e + n));
                add(r, node(i + 1, j - 1), s * (e + so));
                add(r, node(i - 1, j + 1), s * (w + n));
                add(r, node(i - 1, j - 1), -s * (w + so));
            }
        }
    }
    let mass: Vec<f64> = interior.iter().map(|&k| c.rho[k]).collect();
    let chol = kmat
        .clone()
        .cholesky()
        .ok_or_else(|| Error::numeric("stiffness matrix is not positive definite"))?;
    Ok(DiscreteOperator {
        coeffs: coeffs.clone(),
        interior,
        slot,
        stiffness: kmat,
        mass,
        chol,
        ellipticity,
    })
}

impl DiscreteOperator {
    pub fn domain(&self) -> &DomainSpec {
        &self.coeffs.domain
    }

    pub fn coeffs(&self) -> &CoefficientField {
        &self.coeffs
    }

    pub fn ellipticity(&self) -> f64 {
        self.ellipticity
    }

    /// Interior node indices, in the order used by [`Self::stiffness`].
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    /// Diagonal of `M`, i.e. `ρ` at the interior nodes.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn n_nodes(&self) -> usize {
        self.coeffs.domain.n_nodes()
    }

    /// Restriction of a grid vector to the interior unknowns.
    pub fn restrict(&self, g: &[f64]) -> Result<DVector<f64>> {
        check_len(self.n_nodes(), g.len())?;
        Ok(DVector::from_iterator(self.interior.len(), self.interior.iter().map(|&k| g[k])))
    }

    /// Grid vector with the given interior values and zero boundary values.
    pub fn extend(&self, v: &DVector<f64>) -> Vec<f64> {
        let mut out = vec![0.0; self.n_nodes()];
        for (s, &k) in self.interior.iter().enumerate() {
            out[k] = v[s];
        }
        out
    }

    /// `A_h u` on the interior; zero on the boundary. Boundary values of `u`
    /// are ignored (treated as the Dirichlet zero).
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let ui = self.restrict(u)?;
        let mut ku = &self.stiffness * ui;
        for (v, m) in ku.iter_mut().zip(&self.mass) {
            *v /= m;
        }
        Ok(self.extend(&ku))
    }

    /// Solves `A_h u = g` with homogeneous Dirichlet data.
    pub fn solve(&self, g: &[f64]) -> Result<Vec<f64>> {
        let mut rhs = self.restrict(g)?;
        for (v, m) in rhs.iter_mut().zip(&self.mass) {
            *v *= m;
        }
        let u = self.chol.solve(&rhs);
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("Dirichlet solve produced non-finite values"));
        }
        Ok(self.extend(&u))
    }

    /// Slot of a global node among the interior unknowns.
    pub fn slot(&self, node: usize) -> Option<usize> {
        self.slot.get(node).copied().flatten()
    }
}

/// `A_h^{-k} g`, computed by `k` successive Dirichlet solves.
pub fn apply_inverse_power(op: &DiscreteOperator, k: usize, g: &[f64]) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::invalid("inverse power k must be at least 1"));
    }
    let mut u = g.to_vec();
    for _ in 0..k {
        u = op.solve(&u)?;
    }
    Ok(u)
}

/// `∫ u v ρ dx` by the trapezoidal rule on the nodes.
pub fn weighted_inner(u: &[f64], v: &[f64], coeffs: &CoefficientField) -> Result<f64> {
    let n = coeffs.domain.n_nodes();
    check_len(n, u.len())?;
    check_len(n, v.len())?;
    let w = coeffs.domain.quadrature_weights();
    Ok((0..n).map(|k| u[k] * v[k] * coeffs.rho[k] * w[k]).sum())
}

pub fn weighted_norm(u: &[f64], coeffs: &CoefficientField) -> Result<f64> {
    Ok(weighted_inner(u, u, coeffs)?.sqrt())
}

/// Boundary nodes `Γ` (and possibly a distinguished point `x₀ ∈ Γ`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundarySubset {
    nodes: Vec<usize>,
}

impl BoundarySubset {
    pub fn new(domain: &DomainSpec, nodes: Vec<usize>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::invalid("boundary subset is empty"));
        }
        let valid = domain.boundary_nodes();
        if let Some(&bad) = nodes.iter().find(|k| valid.binary_search(k).is_err()) {
            return Err(Error::invalid(format!("node {bad} is not a boundary node with a defined normal")));
        }
        Ok(Self { nodes })
    }

    pub fn all(domain: &DomainSpec) -> Self {
        Self { nodes: domain.boundary_nodes() }
    }

    pub fn point(domain: &DomainSpec, node: usize) -> Result<Self> {
        Self::new(domain, vec![node])
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Conormal derivative `Σ a_ij ∂_j v ν_i` at the requested boundary nodes by
/// second-order one-sided differences. The field is assumed to vanish on
/// the boundary, so tangential derivatives drop out.
pub fn conormal_trace(field: &[f64], coeffs: &CoefficientField, boundary: &BoundarySubset) -> Result<Vec<f64>> {
    let d = &coeffs.domain;
    check_len(d.n_nodes(), field.len())?;
    if boundary.is_empty() {
        return Err(Error::invalid("boundary subset is empty"));
    }
    boundary
        .nodes
        .iter()
        .map(|&k| {
            let (i, j) = d.ij(k);
            // (axis, inward step sign, normal diffusion coefficient)
            let (axis, inward, a) = if i == 0 {
                (0, 1isize, coeffs.a11[k])
            } else if i == d.n[0] {
                (0, -1, coeffs.a11[k])
            } else if d.dim == 2 && j == 0 {
                (1, 1, coeffs.a22[k])
            } else if d.dim == 2 && j == d.n[1] {
                (1, -1, coeffs.a22[k])
            } else {
                return Err(Error::invalid(format!("node {k} is not on the boundary")));
            };
            let at = |s: isize| {
                let (ii, jj) = if axis == 0 {
                    ((i as isize + inward * s) as usize, j)
                } else {
                    (i, (j as isize + inward * s) as usize)
                };
                field[d.index(ii, jj)]
            };
            // derivative along the inward direction; outward normal is opposite
            let inward_deriv = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * d.h(axis));
            Ok(-a * inward_deriv)
        })
        .collect()
}

/// Lowest eigenpairs of `A_h`, `ρ`-orthonormal, grouped by multiplicity.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    coeffs: CoefficientField,
    raw_values: Vec<f64>,
    functions: Vec<Vec<f64>>,
    groups: Vec<std::ops::Range<usize>>,
    group_values: Vec<f64>,
    boundary: BoundarySubset,
    traces: Vec<Vec<f64>>,
}

/// Relative default for grouping nearly equal eigenvalues.
pub const DEFAULT_MULT_TOL: f64 = 1e-6;

/// Computes the `n_modes` lowest eigenpairs. Eigenvalues within
/// `mult_tol·λ` of the first member of a group are merged into one `λ_n`.
pub fn eigensystem(op: &DiscreteOperator, n_modes: usize, mult_tol: f64) -> Result<EigenSystem> {
    let m = op.interior.len();
    if n_modes == 0 || n_modes > m {
        return Err(Error::invalid(format!("n_modes = {n_modes} outside 1..={m}")));
    }
    let scale: Vec<f64> = op.mass.iter().map(|r| 1.0 / r.sqrt()).collect();
    let mut b = op.stiffness.clone();
    for r in 0..m {
        for c in 0..m {
            b[(r, c)] *= scale[r] * scale[c];
        }
    }
    let eig = SymmetricEigen::try_new(b, 1e-15, 0)
        .ok_or_else(|| Error::numeric("symmetric eigensolver did not converge"))?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let norm = op.domain().cell_volume().sqrt();
    let mut raw_values = Vec::with_capacity(n_modes);
    let mut functions = Vec::with_capacity(n_modes);
    for &col in order.iter().take(n_modes) {
        let lambda = eig.eigenvalues[col];
        if lambda <= 0.0 {
            return Err(Error::numeric(format!("non-positive eigenvalue {lambda:e}")));
        }
        let mut v = DVector::from_iterator(m, (0..m).map(|r| eig.eigenvectors[(r, col)] * scale[r] / norm));
        // deterministic sign: first clearly nonzero interior value is positive
        let vmax = v.amax();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-3 * vmax) {
            if *first < 0.0 {
                v.neg_mut();
            }
        }
        raw_values.push(lambda);
        functions.push(op.extend(&v));
    }
    let mut groups = Vec::new();
    let mut start = 0;
    for j in 1..=n_modes {
        if j == n_modes || raw_values[j] - raw_values[start] > mult_tol * raw_values[j] {
            groups.push(start..j);
            start = j;
        }
    }
    let group_values = groups
        .iter()
        .map(|g| raw_values[g.clone()].iter().sum::<f64>() / g.len() as f64)
        .collect();
    let boundary = BoundarySubset::all(op.domain());
    let traces = functions
        .iter()
        .map(|f| conormal_trace(f, &op.coeffs, &boundary))
        .collect::<Result<_>>()?;
    Ok(EigenSystem {
        coeffs: op.coeffs.clone(),
        raw_values,
        functions,
        groups,
        group_values,
        boundary,
        traces,
    })
}

impl EigenSystem {
    pub fn coeffs(&self) -> &CoefficientField {
        &self.coeffs
    }

    /// Number of retained eigenfunctions (counting multiplicity).
    pub fn n_modes(&self) -> usize {
        self.functions.len()
    }

    /// Distinct eigenvalues `λ_n`, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.group_values
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.len()).collect()
    }

    /// Eigenfunction indices belonging to each distinct eigenvalue.
    pub fn groups(&self) -> &[std::ops::Range<usize>] {
        &self.groups
    }

    /// Eigenvalue of each individual eigenfunction (before grouping).
    pub fn raw_eigenvalues(&self) -> &[f64] {
        &self.raw_values
    }

    pub fn function(&self, j: usize) -> &[f64] {
        &self.functions[j]
    }

    pub fn functions(&self) -> &[Vec<f64>] {
        &self.functions
    }

    /// All boundary nodes at which traces are stored.
    pub fn boundary(&self) -> &BoundarySubset {
        &self.boundary
    }

    /// Conormal traces of eigenfunction `j` on the full boundary.
    pub fn trace(&self, j: usize) -> &[f64] {
        &self.traces[j]
    }

    /// Conormal traces of every eigenfunction restricted to `subset`; one row
    /// per eigenfunction, one column per subset node.
    pub fn traces_on(&self, subset: &BoundarySubset) -> Result<Vec<Vec<f64>>> {
        let cols = subset
            .nodes
            .iter()
            .map(|k| {
                self.boundary
                    .nodes
                    .binary_search(k)
                    .map_err(|_| Error::invalid(format!("node {k} has no stored trace")))
            })
            .collect::<Result<Vec<usize>>>()?;
        Ok(self.traces.iter().map(|t| cols.iter().map(|&c| t[c]).collect()).collect())
    }

    /// `⟨g, φ_j⟩_ρ` for every retained eigenfunction.
    pub fn coefficients(&self, g: &[f64]) -> Result<Vec<f64>> {
        self.functions.iter().map(|f| weighted_inner(g, f, &self.coeffs)).collect()
    }

    /// `Σ_j c_j φ_j`.
    pub fn synthesize(&self, c: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n_modes(), c.len())?;
        let mut out = vec![0.0; self.coeffs.domain.n_nodes()];
        for (cj, f) in c.iter().zip(&self.functions) {
            if *cj != 0.0 {
                for (o, v) in out.iter_mut().zip(f) {
                    *o += cj * v;
                }
            }
        }
        Ok(out)
    }
}

/// Truncated spectral norm with an estimate of the discarded part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub tail: f64,
}

/// `‖g‖_{D(A^s)} = (Σ λ_j^{2s} ⟨g,φ_j⟩_ρ²)^{1/2}` over the retained modes.
///
/// The tail is estimated as `λ_max^s ‖r‖_ρ` with `r` the part of `g` not
/// captured by the retained modes; for `s = 0` this is exact (Parseval).
pub fn fractional_norm(g: &[f64], s: f64, eig: &EigenSystem) -> Result<NormEstimate> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::invalid(format!("Sobolev exponent s = {s} must be non-negative")));
    }
    let c = eig.coefficients(g)?;
    let value = c
        .iter()
        .zip(&eig.raw_values)
        .map(|(c, l)| (c * l.powf(s)).powi(2))
        .sum::<f64>()
        .sqrt();
    let captured = eig.synthesize(&c)?;
    let r: Vec<f64> = g.iter().zip(&captured).map(|(a, b)| a - b).collect();
    let lmax = eig.raw_values.last().copied().unwrap_or(1.0);
    let tail = lmax.powf(s) * weighted_norm(&r, &eig.coeffs)?;
    if tail > 0.1 * value {
        return Err(Error::Truncation { tail, partial: value });
    }
    Ok(NormEstimate { value, tail })
}
