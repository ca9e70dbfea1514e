//! Subcommand implementations. Each writes its artifacts into the output
//! directory and returns the main JSON document it wrote.

use std::path::{Path, PathBuf};

use fracsrc::elliptic::{
    assemble, eigensystem, CoefficientField, DiscreteOperator, DomainSpec, EigenSystem,
};
use fracsrc::forward::{source_from_modes, FluxTrace, SourceSpec, SpectralModel};
use fracsrc::fractional::{TimeGrid, TimeSeries};
use fracsrc::inverse::{
    compute_gset, hopf_certificate, joint_factor_test, reconstruct_space_source, reconstruct_time_source, relative_l2,
    weight_errors, FactorTestOptions, Recovered, Regularization, SpaceSourceOptions, TimeSourceOptions,
};
use fracsrc::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::json;

use crate::config::{ExperimentConfig, SpaceForm};
use crate::io;

/// Assumptions of the continuous theory that the discrete model cannot check.
pub const UNCHECKED_ASSUMPTIONS: [&str; 2] = [
    "diffusion matrix a is C¹ (only nodal samples are seen)",
    "domain boundary is C²; the discrete domain is a Lipschitz rectangle or interval",
];

/// Discretized problem shared by all subcommands.
pub struct Setup {
    pub domain: DomainSpec,
    pub op: DiscreteOperator,
    pub eig: EigenSystem,
    pub grid: TimeGrid,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let domain = cfg.domain()?;
        let coeffs = cfg.coefficients(domain)?;
        let op = assemble(&domain, &coeffs)?;
        let modes = cfg.solver.modes.min(op.interior().len());
        let eig = eigensystem(&op, modes, cfg.solver.mult_tol)?;
        let grid = TimeGrid::covering(cfg.time.t_max, cfg.solver.steps)?;
        Ok(Self { domain, op, eig, grid })
    }

    pub fn coeffs(&self) -> &CoefficientField {
        self.op.coeffs()
    }

    /// Nodal values of a spatial form.
    pub fn field(&self, cfg: &ExperimentConfig, form: &SpaceForm) -> Result<Vec<f64>> {
        let d = &self.domain;
        let two_d = d.dim() == 2;
        let mut v = match form {
            SpaceForm::Zero => vec![0.0; d.n_nodes()],
            SpaceForm::Modes { weights } => {
                if weights.len() > self.eig.n_modes() {
                    return Err(Error::Config(format!(
                        "{} mode weights for {} computed modes",
                        weights.len(),
                        self.eig.n_modes()
                    )));
                }
                source_from_modes(&self.eig, weights)?
            }
            SpaceForm::Bump { center, width, sign } => d.sample(|x| {
                let dy = if two_d { x[1] - center[1] } else { 0.0 };
                let r = ((x[0] - center[0]).powi(2) + dy * dy).sqrt();
                if r < *width {
                    sign * (std::f64::consts::FRAC_PI_2 * r / width).cos().powi(2)
                } else {
                    0.0
                }
            }),
            SpaceForm::NegSin { k } => d.sample(|x| {
                let s = (k[0] * x[0]).sin();
                -(if two_d { s * (k[1] * x[1]).sin() } else { s })
            }),
            SpaceForm::Csv { path } => io::read_grid_csv(&cfg.resolve(path), d)?,
        };
        // fields in the operator's domain vanish on the boundary
        for (k, x) in v.iter_mut().enumerate() {
            if d.is_boundary(k) {
                *x = 0.0;
            }
        }
        Ok(v)
    }

    pub fn source(&self, cfg: &ExperimentConfig) -> Result<SourceSpec> {
        let f = self.field(cfg, &cfg.source.space)?;
        SourceSpec::new(f, cfg.source.sigma.clone(), cfg.time.t_final, cfg.time.delta)
    }
}

fn out_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = cfg.resolve(&cfg.output.dir);
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Multiplies every sample by `1 + level·e`, `e` standard normal.
pub fn add_noise(flux: &mut FluxTrace, level: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for row in flux.values.iter_mut() {
        for v in row.iter_mut() {
            let e: f64 = rng.sample(StandardNormal);
            *v *= 1.0 + level * e;
        }
    }
}

/// Synthetic flux on `Γ`, noise included.
pub fn simulate_flux(cfg: &ExperimentConfig, setup: &Setup) -> Result<(FluxTrace, f64)> {
    let src = setup.source(cfg)?;
    let model = SpectralModel::new(&setup.eig, cfg.time.alpha, setup.grid)?.with_tail_tol(cfg.solver.tail_tol);
    let (_, tail) = model.source_coefficients(&src.f)?;
    let boundary = cfg.boundary(&setup.domain)?;
    let mut flux = model.flux(&src, &boundary)?;
    if cfg.measurement.noise > 0.0 {
        add_noise(&mut flux, cfg.measurement.noise, cfg.seed);
    }
    Ok((flux, tail))
}

fn config_json(cfg: &ExperimentConfig) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(cfg)?)
}

/// `flux.csv` and `metadata.json`.
pub fn simulate(cfg: &ExperimentConfig) -> Result<serde_json::Value> {
    let setup = Setup::new(cfg)?;
    let (flux, tail) = simulate_flux(cfg, &setup)?;
    let dir = out_dir(cfg)?;
    io::write_flux_csv(&dir.join("flux.csv"), &flux)?;
    let nodes: Vec<_> = flux
        .boundary
        .nodes()
        .iter()
        .map(|&n| {
            let x = setup.domain.coords(n);
            json!({"node": n, "x": x[0], "y": x[1]})
        })
        .collect();
    let meta = json!({
        "command": "simulate",
        "version": env!("CARGO_PKG_VERSION"),
        "config": config_json(cfg)?,
        "grid": {"dt": flux.grid.dt(), "n_steps": flux.grid.n_steps(), "t_max": flux.grid.t_max()},
        "boundary": nodes,
        "eigenvalues": setup.eig.eigenvalues(),
        "spectral_tail": tail,
        "max_abs_flux": flux.max_abs(),
        "window_max_abs_flux": flux.max_abs_in_window(cfg.time.t_final - cfg.time.epsilon(), cfg.time.t_final),
        "unchecked_assumptions": UNCHECKED_ASSUMPTIONS,
    });
    io::write_json(&dir.join("metadata.json"), &meta)?;
    Ok(meta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Ip1,
    Ip3,
    Ip2Test,
}

impl std::str::FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ip1" => Ok(ProblemKind::Ip1),
            "ip3" => Ok(ProblemKind::Ip3),
            "ip2-test" => Ok(ProblemKind::Ip2Test),
            _ => Err(Error::Config(format!("unknown problem {s:?}; expected ip1, ip3 or ip2-test"))),
        }
    }
}

fn load_flux(cfg: &ExperimentConfig, domain: &DomainSpec, dir: &Path) -> Result<FluxTrace> {
    let path = match &cfg.reconstruction.data {
        Some(p) => cfg.resolve(p),
        None => dir.join("flux.csv"),
    };
    if !path.is_file() {
        return Err(Error::Config(format!("flux data {} not found; run `simulate` first", path.display())));
    }
    io::read_flux_csv(&path, domain)
}

fn regularization(cfg: &ExperimentConfig) -> Regularization {
    let r = &cfg.reconstruction;
    Regularization { tikhonov: r.tikhonov, noise_level: r.noise_level, tau: r.tau }
}

/// `result.json` plus a problem-specific CSV.
pub fn reconstruct(cfg: &ExperimentConfig, problem: ProblemKind) -> Result<serde_json::Value> {
    let dir = out_dir(cfg)?;
    let alpha = cfg.time.alpha;
    let test = cfg.reconstruction.test_mode;
    let doc = match problem {
        ProblemKind::Ip1 => {
            let setup = Setup::new(cfg)?;
            let flux = load_flux(cfg, &setup.domain, &dir)?;
            let sigma = TimeSeries::from_fn(flux.grid, |t| cfg.source.sigma.eval(t));
            let opts = SpaceSourceOptions {
                n_active: cfg.reconstruction.n_active,
                basis: cfg.reconstruction.basis,
                reg: regularization(cfg),
                ..Default::default()
            };
            let r = reconstruct_space_source(&flux, &sigma, &setup.eig, alpha, &opts)?;
            let mut header = vec!["mode".to_string(), "recovered".into(), "std_error".into()];
            let mut cols = vec![(1..=r.mode_weights.len()).map(|n| n as f64).collect(), r.mode_weights.clone(), r.errors.clone()];
            let truth = match (&cfg.source.space, test) {
                (SpaceForm::Modes { weights }, true) => {
                    let mut w = weights.clone();
                    w.resize(r.mode_weights.len(), 0.0);
                    let errs = weight_errors(&r.mode_weights, &w)?;
                    header.extend(["true".to_string(), "error".into()]);
                    cols.extend([w.clone(), errs.clone()]);
                    Some(json!({"mode_weights": w, "errors": errs, "max_error": errs.iter().fold(0.0f64, |m, e| m.max(*e))}))
                }
                _ => None,
            };
            io::write_columns(&dir.join("ip1_weights.csv"), &header, &cols)?;
            if let Recovered::Field(f) = &r.recovered {
                io::write_grid_csv(&dir.join("ip1_field.csv"), &setup.domain, f)?;
            }
            r.to_json(truth)?
        }
        ProblemKind::Ip3 => {
            let setup = Setup::new(cfg)?;
            let flux = load_flux(cfg, &setup.domain, &dir)?;
            let x0 = cfg.x0(&setup.domain)?;
            let row = flux
                .boundary
                .nodes()
                .iter()
                .position(|n| *n == x0)
                .ok_or_else(|| Error::Config(format!("flux data has no column for node {x0}")))?;
            let f = setup.field(cfg, &cfg.source.space)?;
            let opts = TimeSourceOptions {
                t_final: cfg.time.t_final,
                delta: Some(cfg.time.delta),
                reg: regularization(cfg),
                ..Default::default()
            };
            let r = reconstruct_time_source(&flux.node_series(row), x0, &f, &setup.eig, alpha, Some(&setup.op), &opts)?;
            let Recovered::Series(s) = &r.recovered else {
                return Err(Error::Consistency("time-source reconstruction returned no series".into()));
            };
            let mut header = vec!["t".to_string(), "recovered".into()];
            let mut cols = vec![s.grid().nodes(), s.values().to_vec()];
            let truth = if test {
                let t = TimeSeries::from_fn(s.grid(), |t| cfg.source.sigma.eval(t));
                let err = relative_l2(s, &t)?;
                header.push("true".into());
                cols.push(t.values().to_vec());
                Some(json!({"relative_l2_error": err}))
            } else {
                None
            };
            io::write_columns(&dir.join("ip3_sigma.csv"), &header, &cols)?;
            r.to_json(truth)?
        }
        ProblemKind::Ip2Test => {
            let Some(sigma2) = &cfg.source.sigma2 else {
                return Err(Error::Config("ip2-test needs source.sigma2".into()));
            };
            let grid = TimeGrid::covering(cfg.time.t_max, cfg.solver.steps)?;
            let s1 = TimeSeries::from_fn(grid, |t| cfg.source.sigma.eval(t));
            let scale = cfg.source.sigma2_scale;
            let s2 = TimeSeries::from_fn(grid, |t| scale * sigma2.eval(t));
            let r = joint_factor_test(&s1, &s2, alpha, cfg.reconstruction.radius, &FactorTestOptions::default())?;
            r.to_json(None)?
        }
    };
    let mut doc = doc;
    doc["config"] = config_json(cfg)?;
    io::write_json(&dir.join("result.json"), &doc)?;
    Ok(doc)
}

/// `gset.json` and the per-node table `gset.csv`.
pub fn gset(cfg: &ExperimentConfig) -> Result<serde_json::Value> {
    let setup = Setup::new(cfg)?;
    let dir = out_dir(cfg)?;
    let f = setup.field(cfg, &cfg.source.space)?;
    let boundary = cfg.boundary(&setup.domain)?;
    let report = compute_gset(&f, &setup.op, cfg.time.alpha, cfg.gset.k_max, &boundary, cfg.gset.zero_tol)?;
    let hopf = match &cfg.gset.hopf {
        Some(h) => {
            let g = setup.field(cfg, &h.g)?;
            Some(hopf_certificate(&g, h.k1, h.k2, cfg.time.alpha, &setup.op)?)
        }
        None => None,
    };
    let path = dir.join("gset.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut header = vec!["node", "x", "y", "in_g", "witness", "in_j", "probe_limit", "agree"];
    if hopf.is_some() {
        header.push("hopf_flux");
    }
    let werr = |e: csv::Error| Error::Config(format!("{}: {e}", path.display()));
    w.write_record(&header).map_err(werr)?;
    for n in &report.nodes {
        let mut rec = vec![
            n.node.to_string(),
            io::fmt_f64(n.coords[0]),
            io::fmt_f64(n.coords[1]),
            n.in_g.to_string(),
            n.witness.map_or(String::new(), |k| k.to_string()),
            n.in_j.to_string(),
            io::fmt_f64(n.probe_limit),
            (n.in_g == n.in_j).to_string(),
        ];
        if let Some(h) = &hopf {
            let v = h.boundary.nodes().iter().position(|m| *m == n.node).map(|j| h.values[j]);
            rec.push(v.map_or(String::new(), io::fmt_f64));
        }
        w.write_record(&rec).map_err(werr)?;
    }
    w.flush()?;
    let mut doc = json!({"report": report, "config": config_json(cfg)?});
    if let Some(h) = hopf {
        doc["hopf"] = serde_json::to_value(h)?;
    }
    io::write_json(&dir.join("gset.json"), &doc)?;
    Ok(doc)
}
