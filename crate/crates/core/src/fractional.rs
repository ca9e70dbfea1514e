//! Riemann-Liouville integral and Caputo derivative on uniform time grids.
//!
//! * [`rl_integral`] is the product trapezoidal rule: `h` is replaced by its
//!   piecewise-linear interpolant and the weakly singular kernel
//!   `(t-τ)^{β-1}/Γ(β)` is integrated exactly against it.
//! * [`caputo_l1`] is the L1 scheme: `h` is piecewise linear, so `∂_t h` is
//!   piecewise constant and `I^{1-α}` of it is exact.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::special::gamma;

/// Uniform grid `t_j = j·dt`, `j = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    dt: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("time step dt = {dt} must be positive")));
        }
        if n_steps == 0 {
            return Err(Error::invalid("time grid needs at least one step"));
        }
        Ok(Self { dt, n_steps })
    }

    /// Grid with `n_steps` equal steps covering `[0, t_max]`.
    pub fn covering(t_max: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::invalid("time grid needs at least one step"));
        }
        Self::new(t_max / n_steps as f64, n_steps)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of nodes, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    pub fn t_max(&self) -> f64 {
        self.t(self.n_steps)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.t(j)).collect()
    }
}

/// Real samples on a [`TimeGrid`], one per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        check_len(grid.len(), values.len())?;
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at node {j}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().into_iter().map(f).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Product-trapezoid weights: `I^β h(t_n) ≈ dt^β/Γ(β+2) Σ_j a_{j,n} h_j` with
/// `a_{n,n} = 1`, interior weights depending on `n - j` only, and a special
/// first weight.
fn rl_first_weight(beta: f64, n: usize) -> f64 {
    let m = n as f64;
    (m - 1.0).powf(beta + 1.0) - (m - 1.0 - beta) * m.powf(beta)
}

/// Riemann-Liouville integral `I^β h` at every grid node.
pub fn rl_integral(beta: f64, h: &TimeSeries) -> Result<TimeSeries> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid(format!("integral order beta = {beta} outside (0, 1)")));
    }
    let grid = h.grid;
    let hv = &h.values;
    let scale = grid.dt.powf(beta) / gamma(beta + 2.0);
    // interior weights depend only on n - j
    let interior: Vec<f64> = (0..=grid.n_steps + 1)
        .map(|m| {
            if m == 0 {
                1.0
            } else {
                let m = m as f64;
                (m + 1.0).powf(beta + 1.0) - 2.0 * m.powf(beta + 1.0) + (m - 1.0).powf(beta + 1.0)
            }
        })
        .collect();
    let out: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|n| {
            if n == 0 {
                return 0.0;
            }
            let mut s = rl_first_weight(beta, n) * hv[0] + hv[n];
            for j in 1..n {
                s += interior[n - j] * hv[j];
            }
            scale * s
        })
        .collect();
    Ok(TimeSeries { grid, values: out })
}

/// L1 history weights `b_k = (k+1)^{1-α} - k^{1-α}`, `k = 0..n`.
pub fn l1_weights(alpha: f64, n: usize) -> Vec<f64> {
    let e = 1.0 - alpha;
    (0..n).map(|k| ((k + 1) as f64).powf(e) - (k as f64).powf(e)).collect()
}

/// Caputo derivative `∂_t^α h` at every grid node by the L1 scheme; the value
/// at `t = 0` is reported as 0.
pub fn caputo_l1(alpha: f64, h: &TimeSeries) -> Result<TimeSeries> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("derivative order alpha = {alpha} outside (0, 1)")));
    }
    if h.values.len() < 2 {
        return Err(Error::invalid("L1 scheme needs at least two samples"));
    }
    let grid = h.grid;
    let b = l1_weights(alpha, grid.n_steps);
    let diff: Vec<f64> = h.values.windows(2).map(|w| w[1] - w[0]).collect();
    let scale = grid.dt.powf(-alpha) / gamma(2.0 - alpha);
    let out: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|n| {
            let s: f64 = (0..n).map(|k| b[k] * diff[n - 1 - k]).sum();
            scale * s
        })
        .collect();
    Ok(TimeSeries { grid, values: out })
}
