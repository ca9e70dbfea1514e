//! Two-parameter Mittag-Leffler function and the fractional relaxation kernel.
//!
//! `E_{α,β}(z) = Σ_{n≥0} zⁿ / Γ(nα + β)` is evaluated by one of three routes:
//!
//! * `|z| ≤ 1`: the Taylor series, truncated with a certified remainder bound.
//!   Log-convexity of Γ makes the ratio of consecutive term magnitudes
//!   non-increasing, so once the ratio drops below one the tail is bounded by
//!   a geometric series.
//! * `|z| ≥ 8` inside the sector `|arg z| ≥ (1+α)π/2` (α < 1): the algebraic
//!   asymptotic expansion `-Σ_{k≥1} z^{-k}/Γ(β-αk)`, summed until the envelope
//!   of the next term falls below the double precision unit. No exponential
//!   contribution exists there because every pole `z^{1/α}e^{2πik/α}` lies off
//!   the principal sheet.
//! * everywhere else: numerical inversion of the Laplace transform
//!   `s^{α-β}/(s^α - z)` on an optimally parametrized parabolic contour,
//!   adding the residues of the poles that fall to the right of it
//!   (Garrappa, SIAM J. Numer. Anal. 53 (2015)).
//!
//! The regions were chosen against a multiprecision oracle table
//! (`tests/oracles/ml_oracle.py`).

use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::{gamma, ln_gamma, rgamma};

const SERIES_RADIUS: f64 = 1.0;
const ASYMPTOTIC_RADIUS: f64 = 8.0;
/// Relative accuracy promised for `|z| ≤ 100` away from zeros of `E`.
pub const DECLARED_ACCURACY: f64 = 1e-10;

/// Parameters `(α, β)` of `E_{α,β}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLParams {
    alpha: f64,
    beta: f64,
}

impl MLParams {
    /// `0 < α ≤ 1`, `β > 0`. The endpoint `α = 1` is admitted so that the
    /// classical exponential cases can serve as cross-checks.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha = {alpha} outside (0, 1]")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid(format!("beta = {beta} must be positive")));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Which evaluation route [`ml`] picked; exposed for diagnostics and tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Origin,
    Exponential,
    Series,
    Asymptotic,
    Contour,
}

static SERIES_FAULT: AtomicUsize = AtomicUsize::new(0);

/// Test hook: negate term `n` of the Taylor series in every later [`ml`]
/// call of this process (`0` restores correct evaluation).
///
/// Process-global. Only the `verify --inject-fault` path of the CLI sets it.
pub fn inject_series_fault(n: usize) {
    SERIES_FAULT.store(n, Ordering::Relaxed);
}

/// Evaluate `E_{α,β}(z)`.
pub fn ml(params: MLParams, z: Complex64) -> Result<Complex64> {
    ml_with_route(params, z).map(|(v, _)| v)
}

/// Real-argument convenience wrapper around [`ml`].
pub fn ml_real(params: MLParams, x: f64) -> Result<f64> {
    ml(params, Complex64::new(x, 0.0)).map(|v| v.re)
}

/// Evaluate `E_{α,β}(z)` and report the route taken.
pub fn ml_with_route(params: MLParams, z: Complex64) -> Result<(Complex64, Route)> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::invalid("Mittag-Leffler argument is not finite"));
    }
    let MLParams { alpha, beta } = params;
    let r = z.norm();
    let (value, route) = if r == 0.0 {
        (Complex64::new(rgamma(beta), 0.0), Route::Origin)
    } else if alpha == 1.0 && beta == 1.0 {
        (z.exp(), Route::Exponential)
    } else if r <= SERIES_RADIUS {
        (series(alpha, beta, z, SERIES_FAULT.load(Ordering::Relaxed))?, Route::Series)
    } else if let Some(v) = asymptotic(alpha, beta, z) {
        (v, Route::Asymptotic)
    } else {
        (contour(alpha, beta, z)?, Route::Contour)
    };
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(Error::Accuracy {
            context: format!("E_{{{alpha},{beta}}}({z}) overflows double precision"),
            achieved: f64::INFINITY,
            requested: DECLARED_ACCURACY,
        });
    }
    // Real arguments have real values; drop the round-off imaginary part.
    let value = if z.im == 0.0 {
        Complex64::new(value.re, 0.0)
    } else {
        value
    };
    Ok((value, route))
}

/// Taylor series with a certified geometric tail bound.
///
/// `flip_term` negates the term of that index; it exists only so the
/// verification suite can inject a known fault (`0` disables it, since the
/// constant term is never flipped).
pub(crate) fn series(alpha: f64, beta: f64, z: Complex64, flip_term: usize) -> Result<Complex64> {
    let r = z.norm();
    let lnr = r.ln();
    let phase = z / r;
    let mut sum = Complex64::new(rgamma(beta), 0.0);
    let mut unit = Complex64::new(1.0, 0.0);
    for n in 1..2000usize {
        unit *= phase;
        let x = n as f64 * alpha + beta;
        let lg = ln_gamma(x);
        let mag = (n as f64 * lnr - lg).exp();
        let sign = if gamma_sign(x) < 0.0 { -1.0 } else { 1.0 };
        let mut term = unit * (sign * mag);
        if flip_term != 0 && n == flip_term {
            term = -term;
        }
        sum += term;
        // ratio of the next term to this one, non-increasing in n
        let lg_next = ln_gamma(x + alpha);
        let q = (lnr + lg - lg_next).exp();
        if q < 1.0 {
            let next = mag * q;
            let tail = next / (1.0 - q);
            if tail <= 1e-17 * sum.norm().max(1e-300) {
                return Ok(sum);
            }
        }
    }
    Err(Error::Accuracy {
        context: "Mittag-Leffler series did not reach its tail bound".into(),
        achieved: f64::NAN,
        requested: DECLARED_ACCURACY,
    })
}

fn gamma_sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        // sign of Γ on (-k-1, -k) is (-1)^(k+1)
        let k = (-x).floor();
        if (k as i64) % 2 == 0 {
            -1.0
        } else {
            1.0
        }
    }
}

/// Algebraic asymptotic expansion; `None` when outside its safe region.
fn asymptotic(alpha: f64, beta: f64, z: Complex64) -> Option<Complex64> {
    if alpha >= 1.0 {
        return None;
    }
    let r = z.norm();
    if r < ASYMPTOTIC_RADIUS || z.arg().abs() < 0.5 * (1.0 + alpha) * PI {
        return None;
    }
    let inv = 1.0 / z;
    let mut pow = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut best_env = f64::INFINITY;
    for k in 1..400usize {
        pow *= inv;
        let x = beta - alpha * k as f64;
        // |1/Γ(x)| ≤ Γ(1-x)/π for x < 0
        let env = if x < 0.0 {
            (-(k as f64) * r.ln() + ln_gamma(1.0 - x)).exp() / PI
        } else {
            r.powi(-(k as i32)) * (rgamma(x).abs() + 1.0)
        };
        if env > best_env {
            return None;
        }
        best_env = env;
        sum -= pow * rgamma(x);
        if k > 1 && env <= 1e-17 * sum.norm() {
            return Some(sum);
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Laplace-transform inversion on a parabolic contour.

const LOG_EPS_MACHINE: f64 = -36.043_653_389_117_15; // ln(2^-52)

fn contour(alpha: f64, beta: f64, z: Complex64) -> Result<Complex64> {
    let mut log_epsilon = (1e-15f64).ln();
    let t = 1.0;
    let theta = z.arg();
    let kmin = (-alpha / 2.0 - theta / (2.0 * PI)).ceil() as i64;
    let kmax = (alpha / 2.0 - theta / (2.0 * PI)).floor() as i64;
    let radius = z.norm().powf(1.0 / alpha);
    let mut poles: Vec<(f64, Complex64)> = (kmin..=kmax)
        .map(|k| {
            let s = Complex64::from_polar(radius, (theta + 2.0 * PI * k as f64) / alpha);
            ((s.re + s.norm()) / 2.0, s)
        })
        .filter(|(phi, _)| *phi > 1e-15)
        .collect();
    poles.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut s_star = vec![Complex64::new(0.0, 0.0)];
    let mut phi = vec![0.0];
    for (ph, s) in &poles {
        s_star.push(*s);
        phi.push(*ph);
    }
    let j1 = s_star.len();
    let mut p = vec![1.0; j1];
    p[0] = (-2.0 * (alpha - beta + 1.0)).max(0.0);
    let mut q = vec![1.0; j1];
    q[j1 - 1] = f64::INFINITY;
    phi.push(f64::INFINITY);

    let threshold = (log_epsilon - LOG_EPS_MACHINE) / t;
    let admissible: Vec<usize> = (0..j1)
        .filter(|&j| phi[j] < threshold && phi[j] < phi[j + 1])
        .collect();
    if admissible.is_empty() {
        return Err(Error::Accuracy {
            context: format!("no admissible contour region for z = {z}"),
            achieved: f64::INFINITY,
            requested: DECLARED_ACCURACY,
        });
    }

    let mut best: (usize, f64, f64, f64);
    loop {
        best = (usize::MAX, 0.0, 0.0, f64::INFINITY);
        for &j in &admissible {
            let (mu, h, n) = if j < j1 - 1 {
                optimal_param_rb(t, phi[j], phi[j + 1], p[j], q[j], log_epsilon)
            } else {
                optimal_param_ru(t, phi[j], p[j], log_epsilon)
            };
            if n < best.3 {
                best = (j, mu, h, n);
            }
        }
        if best.3 > 200.0 {
            log_epsilon += 10f64.ln();
            if log_epsilon > DECLARED_ACCURACY.ln() {
                return Err(Error::Accuracy {
                    context: format!("contour inversion for z = {z} needs too many nodes"),
                    achieved: log_epsilon.exp(),
                    requested: DECLARED_ACCURACY,
                });
            }
        } else {
            break;
        }
    }
    let (region, mu, h, n) = best;
    let n = n as i64;

    let i = Complex64::new(0.0, 1.0);
    let mut integral = Complex64::new(0.0, 0.0);
    for k in -n..=n {
        let u = h * k as f64;
        let s = mu * (i * u + 1.0).powi(2);
        let ds = Complex64::new(-2.0 * mu * u, 2.0 * mu);
        let f = s.powf(alpha - beta) / (s.powf(alpha) - z) * ds;
        integral += (s * t).exp() * f;
    }
    integral *= h / (2.0 * PI * i);

    let mut residues = Complex64::new(0.0, 0.0);
    for s in &s_star[region + 1..] {
        residues += s.powf(1.0 - beta) * (s * t).exp() / alpha;
    }
    Ok(integral + residues)
}

/// Optimal parameters for a contour confined between two singularities.
fn optimal_param_rb(
    t: f64,
    phi_j: f64,
    phi_j1: f64,
    pj: f64,
    qj: f64,
    log_epsilon: f64,
) -> (f64, f64, f64) {
    let fac = 1.01;
    let f_max = (log_epsilon - LOG_EPS_MACHINE).exp();
    let sq_phi_j = phi_j.sqrt();
    let threshold = 2.0 * ((log_epsilon - LOG_EPS_MACHINE) / t).sqrt();
    let sq_phi_j1 = phi_j1.sqrt().min(threshold - sq_phi_j);

    let small = 1e-14;
    let mut f_bar = 1.0;
    let (sq_bar_j, sq_bar_j1) = if pj < small && qj < small {
        (sq_phi_j, sq_phi_j1)
    } else if pj < small {
        let f_min = if sq_phi_j > 0.0 {
            fac * (sq_phi_j / (sq_phi_j1 - sq_phi_j)).powf(qj)
        } else {
            fac
        };
        if f_min >= f_max {
            return (0.0, 0.0, f64::INFINITY);
        }
        f_bar = f_min + f_min / f_max * (f_max - f_min);
        let fq = f_bar.powf(-1.0 / qj);
        (sq_phi_j, (2.0 * sq_phi_j1 - fq * sq_phi_j) / (2.0 + fq))
    } else if qj < small {
        let f_min = fac * (sq_phi_j1 / (sq_phi_j1 - sq_phi_j)).powf(pj);
        if f_min >= f_max {
            return (0.0, 0.0, f64::INFINITY);
        }
        f_bar = f_min + f_min / f_max * (f_max - f_min);
        let fp = f_bar.powf(-1.0 / pj);
        ((2.0 * sq_phi_j + fp * sq_phi_j1) / (2.0 - fp), sq_phi_j1)
    } else {
        let mut f_min =
            fac * (sq_phi_j + sq_phi_j1) / (sq_phi_j1 - sq_phi_j).powf(pj.max(qj));
        if f_min >= f_max {
            return (0.0, 0.0, f64::INFINITY);
        }
        f_min = f_min.max(1.5);
        f_bar = f_min + f_min / f_max * (f_max - f_min);
        let fp = f_bar.powf(-1.0 / pj);
        let fq = f_bar.powf(-1.0 / qj);
        let w = -phi_j1 * t / log_epsilon;
        let den = 2.0 + w - (1.0 + w) * fp + fq;
        (
            ((2.0 + w + fq) * sq_phi_j + fp * sq_phi_j1) / den,
            (-(1.0 + w) * fq * sq_phi_j + (2.0 + w - (1.0 + w) * fp) * sq_phi_j1) / den,
        )
    };
    let log_epsilon = log_epsilon - f_bar.ln();
    let w = -sq_bar_j1 * sq_bar_j1 * t / log_epsilon;
    let mu = (((1.0 + w) * sq_bar_j + sq_bar_j1) / (2.0 + w)).powi(2);
    let h = -2.0 * PI / log_epsilon * (sq_bar_j1 - sq_bar_j) / ((1.0 + w) * sq_bar_j + sq_bar_j1);
    let n = ((1.0 - log_epsilon / t / mu).sqrt() / h).ceil();
    if !(n.is_finite() && h > 0.0 && mu > 0.0) {
        return (0.0, 0.0, f64::INFINITY);
    }
    (mu, h, n)
}

/// Optimal parameters for a contour to the right of the last singularity.
fn optimal_param_ru(t: f64, phi_j: f64, pj: f64, log_epsilon: f64) -> (f64, f64, f64) {
    let sq_phi_j = phi_j.sqrt();
    let mut phibar = if phi_j > 0.0 { phi_j * 1.01 } else { 0.01 };
    let mut sq_phibar = phibar.sqrt();
    let (f_min, f_max, f_tar) = (1.0, 10.0, 5.0f64);

    let mut n;
    let mut a;
    let mut sq_mu;
    let mut iterations = 0;
    loop {
        let phi_t = phibar * t;
        let log_eps_phi_t = log_epsilon / phi_t;
        n = (phi_t / PI * (1.0 - 3.0 * log_eps_phi_t / 2.0 + (1.0 - 2.0 * log_eps_phi_t).sqrt()))
            .ceil();
        a = PI * n / phi_t;
        sq_mu = sq_phibar * (4.0 - a).abs() / (7.0 - (1.0 + 12.0 * a).sqrt()).abs();
        let fbar = ((sq_phibar - sq_phi_j) / sq_mu).powf(-pj);
        let stop = pj < 1e-14 || (f_min < fbar && fbar < f_max);
        iterations += 1;
        if stop || iterations > 100 {
            break;
        }
        sq_phibar = f_tar.powf(-1.0 / pj) * sq_mu + sq_phi_j;
        phibar = sq_phibar * sq_phibar;
    }
    let mut mu = sq_mu * sq_mu;
    let mut h = (-3.0 * a - 2.0 + 2.0 * (1.0 + 12.0 * a).sqrt()) / (4.0 - a) / n;

    let threshold = (log_epsilon - LOG_EPS_MACHINE) / t;
    if mu > threshold {
        let qq = if pj.abs() < 1e-14 {
            0.0
        } else {
            f_tar.powf(-1.0 / pj) * mu.sqrt()
        };
        let phibar = (qq + phi_j.sqrt()).powi(2);
        if phibar < threshold {
            let w = (LOG_EPS_MACHINE / (LOG_EPS_MACHINE - log_epsilon)).sqrt();
            let u = (-phibar * t / LOG_EPS_MACHINE).sqrt();
            mu = threshold;
            n = (w * log_epsilon / 2.0 / PI / (u * w - 1.0)).ceil();
            h = (LOG_EPS_MACHINE / (LOG_EPS_MACHINE - log_epsilon)).sqrt() / n;
        } else {
            return (0.0, 0.0, f64::INFINITY);
        }
    }
    if !(n.is_finite() && n > 0.0 && h > 0.0) {
        return (0.0, 0.0, f64::INFINITY);
    }
    (mu, h, n)
}

// ---------------------------------------------------------------------------
// Relaxation kernel.

fn check_alpha_open(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("fractional order {alpha} outside (0, 1]")))
    }
}

/// `t^{α-1} E_{α,α}(-λ t^α)`, the impulse response of one spectral mode.
pub fn solution_kernel(alpha: f64, lambda: f64, t: f64) -> Result<f64> {
    check_alpha_open(alpha)?;
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!("eigenvalue {lambda} must be positive")));
    }
    if !(t > 0.0) {
        return Err(Error::invalid(format!(
            "kernel is singular at t = 0 (got t = {t})"
        )));
    }
    if alpha == 1.0 {
        return Ok((-lambda * t).exp());
    }
    let e = ml_real(MLParams::new(alpha, alpha)?, -lambda * t.powf(alpha))?;
    Ok(t.powf(alpha - 1.0) * e)
}

/// Repeated antiderivatives of the relaxation kernel:
/// `∫₀ᵗ …∫₀ K = t^{α+m-1} E_{α,α+m}(-λ t^α)` for `m = 1, 2`; zero at `t = 0`.
pub fn kernel_antiderivative(alpha: f64, lambda: f64, t: f64, order: u32) -> Result<f64> {
    check_alpha_open(alpha)?;
    if !(order == 1 || order == 2) {
        return Err(Error::invalid("antiderivative order must be 1 or 2"));
    }
    if t < 0.0 {
        return Err(Error::invalid("negative time"));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    if alpha == 1.0 {
        let k1 = -(-lambda * t).exp_m1() / lambda;
        return Ok(if order == 1 { k1 } else { (t - k1) / lambda });
    }
    let m = order as f64;
    let e = ml_real(MLParams::new(alpha, alpha + m)?, -lambda * t.powf(alpha))?;
    Ok(t.powf(alpha + m - 1.0) * e)
}

/// Principal branch `p^α = exp(α log p)`; rejects the closed negative axis.
pub fn principal_pow(p: Complex64, alpha: f64) -> Result<Complex64> {
    if !(p.re.is_finite() && p.im.is_finite()) {
        return Err(Error::invalid("non-finite Laplace abscissa"));
    }
    if p.im == 0.0 && p.re <= 0.0 {
        return Err(Error::Branch { re: p.re, im: p.im });
    }
    Ok((alpha * p.ln()).exp())
}

/// Laplace image of [`solution_kernel`]: `1 / (p^α + λ)`.
pub fn kernel_laplace(alpha: f64, lambda: f64, p: Complex64) -> Result<Complex64> {
    check_alpha_open(alpha)?;
    let pa = principal_pow(p, alpha)?;
    Ok(1.0 / (pa + lambda))
}

/// `1/Γ(β)`, the value at the origin, exposed for callers checking limits.
pub fn origin_value(beta: f64) -> f64 {
    1.0 / gamma(beta)
}
