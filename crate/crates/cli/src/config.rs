//! Experiment configuration, one TOML table per concern.
//!
//! ```toml
//! seed = 1
//!
//! [domain]
//! x = [0.0, 3.141592653589793]
//! cells = [128]
//!
//! [time]
//! alpha = 0.5
//! t_final = 1.0
//! delta = 0.4
//! t_max = 10.0
//!
//! [source.sigma]
//! kind = "hat"
//! start = 0.2
//! end = 0.6
//!
//! [source.space]
//! kind = "modes"
//! weights = [2.0, 0.0, -1.0]
//! ```
//!
//! Relative CSV paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use fracsrc::elliptic::{BoundarySubset, CoefficientField, DomainSpec, DEFAULT_MULT_TOL};
use fracsrc::forward::{SigmaForm, DEFAULT_TAIL_TOL};
use fracsrc::inverse::TransferBasis;
use fracsrc::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seed for synthetic measurement noise and random fixtures.
    #[serde(default)]
    pub seed: u64,
    pub domain: DomainConfig,
    #[serde(default)]
    pub coefficients: CoefficientConfig,
    pub time: TimeConfig,
    pub source: SourceConfig,
    #[serde(default)]
    pub measurement: MeasurementConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub reconstruction: ReconstructionConfig,
    #[serde(default)]
    pub gset: GSetConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Interval `x` (1D) or rectangle `x × y` (2D); `cells` has one entry per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub x: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<[f64; 2]>,
    pub cells: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoefficientConfig {
    Constant {
        a: f64,
        q: f64,
        rho: f64,
    },
    /// `a = 1 + 0.3 sin(πξ) + 0.2η`, `q = 0.5ξ`, `ρ = 1 + 0.25 cos(πξ)` in
    /// the unit coordinates `(ξ, η)` of the domain.
    Varying,
    /// Nodal grids, one row per `y` line (a single row in 1D). Missing `q`
    /// means zero, missing `rho` one, missing `a22` equal to `a11`, missing
    /// `a12` zero.
    Csv {
        a11: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a12: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a22: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rho: Option<PathBuf>,
    },
}

impl Default for CoefficientConfig {
    fn default() -> Self {
        CoefficientConfig::Constant { a: 1.0, q: 0.0, rho: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub alpha: f64,
    pub t_final: f64,
    /// `σ` vanishes on `(T - δ, T)`.
    pub delta: f64,
    /// Measurement window `(T - ε, T)`; defaults to `δ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// End of the simulated (and transformed) record.
    pub t_max: f64,
}

impl TimeConfig {
    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(self.delta)
    }
}

/// Spatial factor `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpaceForm {
    Zero,
    /// `Σ w_j φ_j` over the computed eigenfunctions, in ascending order.
    Modes { weights: Vec<f64> },
    /// `sign · cos²(π|x-c|/(2 width))` inside the ball of radius `width`.
    Bump { center: [f64; 2], width: f64, sign: f64 },
    /// `-sin(k₁ x) sin(k₂ y)` (the second factor only in 2D).
    NegSin { k: [f64; 2] },
    /// Nodal values, one row per `y` line.
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub sigma: SigmaForm,
    /// Second time profile for the joint factor test, multiplied by
    /// `sigma2_scale`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<SigmaForm>,
    #[serde(default = "one")]
    pub sigma2_scale: f64,
    pub space: SpaceForm,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    /// Boundary nodes forming `Γ`; all boundary nodes when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<usize>>,
    /// Single measurement node for the time-source problem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<usize>,
    /// Relative Gaussian noise multiplied into every flux sample.
    #[serde(default)]
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub modes: usize,
    /// Time steps covering `(0, T_max)`.
    pub steps: usize,
    pub tail_tol: f64,
    pub mult_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { modes: 32, steps: 1000, tail_tol: DEFAULT_TAIL_TOL, mult_tol: DEFAULT_MULT_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReconstructionConfig {
    pub n_active: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tikhonov: Option<f64>,
    /// Relative noise level handed to the discrepancy principle.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_level: Option<f64>,
    pub tau: f64,
    pub basis: TransferBasis,
    /// Radius of the sampling circle of the joint factor test.
    pub radius: f64,
    /// Flux CSV to reconstruct from; `<output>/flux.csv` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Compare against the configured source and report errors.
    pub test_mode: bool,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self {
            n_active: 5,
            tikhonov: None,
            noise_level: None,
            tau: 1.1,
            basis: TransferBasis::Sampled,
            radius: 4.0,
            data: None,
            test_mode: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GSetConfig {
    pub k_max: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hopf: Option<HopfConfig>,
}

impl Default for GSetConfig {
    fn default() -> Self {
        Self { k_max: 4, zero_tol: None, hopf: None }
    }
}

/// Sign certificate for `A^{-(2+k₂-k₁)} g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HopfConfig {
    pub g: SpaceForm,
    #[serde(default)]
    pub k1: usize,
    #[serde(default)]
    pub k2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

impl ExperimentConfig {
    /// Parse without touching the file system.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parse, resolve relative paths against the file's directory and
    /// validate.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let t = &self.time;
        if !(t.alpha > 0.0 && t.alpha < 1.0) {
            return bad(format!("alpha = {} outside (0, 1)", t.alpha));
        }
        if !(t.t_final > 0.0 && t.t_final.is_finite()) {
            return bad(format!("t_final = {} must be positive", t.t_final));
        }
        if !(t.delta > 0.0 && t.delta < t.t_final) {
            return bad(format!("delta = {} outside (0, T = {})", t.delta, t.t_final));
        }
        let eps = t.epsilon();
        if !(eps > 0.0 && eps < t.t_final) {
            return bad(format!("epsilon = {eps} outside (0, T = {})", t.t_final));
        }
        if !(t.t_max >= t.t_final && t.t_max.is_finite()) {
            return bad(format!("t_max = {} below T = {}", t.t_max, t.t_final));
        }
        let d = &self.domain;
        let dim = if d.y.is_some() { 2 } else { 1 };
        if d.cells.len() != dim {
            return bad(format!("{} cell counts for a {dim}-dimensional domain", d.cells.len()));
        }
        let s = &self.solver;
        if s.modes == 0 || s.steps == 0 {
            return bad("solver modes and steps must be positive".into());
        }
        if !(s.tail_tol > 0.0 && s.mult_tol > 0.0) {
            return bad("solver tolerances must be positive".into());
        }
        let r = &self.reconstruction;
        if r.n_active == 0 || r.n_active > s.modes {
            return bad(format!("n_active = {} outside 1..={}", r.n_active, s.modes));
        }
        if !(r.radius > 0.0 && r.tau >= 1.0) {
            return bad("reconstruction radius must be positive and tau at least 1".into());
        }
        if !(self.measurement.noise >= 0.0 && self.measurement.noise.is_finite()) {
            return bad(format!("noise = {} must be non-negative", self.measurement.noise));
        }
        if self.gset.k_max == 0 {
            return bad("gset k_max must be at least 1".into());
        }
        if let SpaceForm::Bump { width, .. } = &self.source.space {
            if !(*width > 0.0) {
                return bad("bump width must be positive".into());
            }
        }
        let domain = self.domain()?;
        let boundary: Vec<usize> = domain.boundary_nodes();
        for n in self.measurement.nodes.iter().flatten().chain(self.measurement.x0.iter()) {
            if !boundary.contains(n) {
                return bad(format!("measurement node {n} is not a boundary node"));
            }
        }
        for p in self.referenced_files() {
            let full = self.resolve(&p);
            if !full.is_file() {
                return bad(format!("referenced file {} does not exist", full.display()));
            }
        }
        Ok(())
    }

    fn referenced_files(&self) -> Vec<PathBuf> {
        let mut out = Vec::new();
        if let CoefficientConfig::Csv { a11, a12, a22, q, rho } = &self.coefficients {
            out.push(a11.clone());
            out.extend([a12, a22, q, rho].into_iter().flatten().cloned());
        }
        let spaces = std::iter::once(&self.source.space).chain(self.gset.hopf.as_ref().map(|h| &h.g));
        for s in spaces {
            if let SpaceForm::Csv { path } = s {
                out.push(path.clone());
            }
        }
        out
    }

    pub fn domain(&self) -> Result<DomainSpec> {
        let d = &self.domain;
        let r = match d.y {
            None => DomainSpec::interval(d.x[0], d.x[1], d.cells[0]),
            Some(y) => DomainSpec::rectangle((d.x[0], d.x[1]), (y[0], y[1]), d.cells[0], d.cells[1]),
        };
        r.map_err(|e| Error::Config(e.to_string()))
    }

    pub fn coefficients(&self, domain: DomainSpec) -> Result<CoefficientField> {
        let unit = |x: [f64; 2], axis: usize| {
            let (lo, hi) = domain.extent(axis);
            (x[axis] - lo) / (hi - lo)
        };
        match &self.coefficients {
            CoefficientConfig::Constant { a, q, rho } => Ok(CoefficientField::constant(domain, *a, *q, *rho)),
            CoefficientConfig::Varying => {
                let eta = |x: [f64; 2]| if domain.dim() == 2 { unit(x, 1) } else { 0.0 };
                Ok(CoefficientField::isotropic(
                    domain,
                    |x| 1.0 + 0.3 * (std::f64::consts::PI * unit(x, 0)).sin() + 0.2 * eta(x),
                    |x| 0.5 * unit(x, 0),
                    |x| 1.0 + 0.25 * (std::f64::consts::PI * unit(x, 0)).cos(),
                ))
            }
            CoefficientConfig::Csv { a11, a12, a22, q, rho } => {
                let n = domain.n_nodes();
                let load = |p: &Option<PathBuf>, default: f64| -> Result<Vec<f64>> {
                    match p {
                        Some(p) => crate::io::read_grid_csv(&self.resolve(p), &domain),
                        None => Ok(vec![default; n]),
                    }
                };
                let a11v = crate::io::read_grid_csv(&self.resolve(a11), &domain)?;
                let a22v = match a22 {
                    Some(_) => load(a22, 0.0)?,
                    None => a11v.clone(),
                };
                CoefficientField::new(domain, a11v, load(a12, 0.0)?, a22v, load(q, 0.0)?, load(rho, 1.0)?)
            }
        }
    }

    pub fn boundary(&self, domain: &DomainSpec) -> Result<BoundarySubset> {
        match &self.measurement.nodes {
            None => Ok(BoundarySubset::all(domain)),
            Some(nodes) => BoundarySubset::new(domain, nodes.clone()),
        }
    }

    /// Measurement node of the time-source problem: `x0`, else the first
    /// node of `Γ`.
    pub fn x0(&self, domain: &DomainSpec) -> Result<usize> {
        match self.measurement.x0 {
            Some(x) => Ok(x),
            None => self
                .boundary(domain)?
                .nodes()
                .first()
                .copied()
                .ok_or_else(|| Error::Config("no measurement node".into())),
        }
    }
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 8] = [
    "minimal-1d",
    "zero-source",
    "paper-1d-a05",
    "ip3-1d",
    "ip2-proportional",
    "gset-phi1",
    "hopf-neg-sin",
    "varying-2d",
];

/// Built-in configurations.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let pi = std::f64::consts::PI;
    let line = |cells: usize| DomainConfig { x: [0.0, pi], y: None, cells: vec![cells] };
    let hat = SigmaForm::Hat { start: 0.2, end: 0.6 };
    let base = |domain: DomainConfig, space: SpaceForm, t_max: f64, modes: usize, steps: usize| ExperimentConfig {
        seed: 1,
        domain,
        coefficients: CoefficientConfig::default(),
        time: TimeConfig { alpha: 0.5, t_final: 1.0, delta: 0.4, epsilon: None, t_max },
        source: SourceConfig { sigma: hat.clone(), sigma2: None, sigma2_scale: 1.0, space },
        measurement: MeasurementConfig::default(),
        solver: SolverConfig { modes, steps, ..Default::default() },
        reconstruction: ReconstructionConfig::default(),
        gset: GSetConfig::default(),
        output: OutputConfig { dir: PathBuf::from(format!("out/{name}")) },
        base_dir: PathBuf::new(),
    };
    let cfg = match name {
        "minimal-1d" => {
            let mut c = base(line(32), SpaceForm::Modes { weights: vec![1.0, 0.5] }, 2.0, 8, 200);
            c.reconstruction.n_active = 2;
            c
        }
        "zero-source" => base(line(32), SpaceForm::Zero, 2.0, 8, 200),
        "paper-1d-a05" => {
            let mut c = base(line(128), SpaceForm::Modes { weights: vec![2.0, 0.0, -1.0] }, 10.0, 64, 2560);
            c.measurement.nodes = Some(vec![0]);
            c
        }
        "ip3-1d" => {
            let mut c = base(line(128), SpaceForm::Modes { weights: vec![1.0, 0.5, 0.25] }, 1.0, 64, 500);
            c.measurement.x0 = Some(0);
            c
        }
        "ip2-proportional" => {
            let mut c = base(line(32), SpaceForm::Modes { weights: vec![1.0] }, 2.0, 8, 400);
            c.source.sigma2 = Some(SigmaForm::Hat { start: 0.2, end: 0.6 });
            c.source.sigma2_scale = 2.0;
            c
        }
        "gset-phi1" => base(line(64), SpaceForm::Modes { weights: vec![1.0] }, 2.0, 16, 200),
        "hopf-neg-sin" => {
            let mut c = base(line(64), SpaceForm::NegSin { k: [1.0, 1.0] }, 2.0, 16, 200);
            c.gset.hopf = Some(HopfConfig { g: SpaceForm::NegSin { k: [1.0, 1.0] }, k1: 0, k2: 0 });
            c
        }
        "varying-2d" => {
            let domain = DomainConfig { x: [0.0, pi], y: Some([0.0, 2.0]), cells: vec![20, 16] };
            let mut c = base(domain, SpaceForm::Bump { center: [1.5, 1.0], width: 0.8, sign: 1.0 }, 2.0, 40, 200);
            c.coefficients = CoefficientConfig::Varying;
            c
        }
        _ => return Err(Error::Config(format!("unknown preset {name:?}; known: {}", PRESETS.join(", ")))),
    };
    cfg.validate()?;
    Ok(cfg)
}
