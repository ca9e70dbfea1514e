use std::f64::consts::PI;

use fracsrc::elliptic::*;
use fracsrc::forward::*;
use fracsrc::fractional::{TimeGrid, TimeSeries};
use fracsrc::inverse::*;
use fracsrc::laplace::modal_transfer;
use fracsrc::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Line {
    d: DomainSpec,
    op: DiscreteOperator,
    eig: EigenSystem,
}

fn line(modes: usize) -> Line {
    let d = DomainSpec::interval(0.0, PI, 128).unwrap();
    let c = CoefficientField::constant(d, 1.0, 0.0, 1.0);
    let op = assemble(&d, &c).unwrap();
    let eig = eigensystem(&op, modes, DEFAULT_MULT_TOL).unwrap();
    Line { d, op, eig }
}

fn hat() -> SigmaForm {
    SigmaForm::Hat { start: 0.2, end: 0.6 }
}

fn add_noise(flux: &mut FluxTrace, level: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for row in flux.values.iter_mut() {
        for v in row.iter_mut() {
            let e: f64 = rng.sample(StandardNormal);
            *v *= 1.0 + level * e;
        }
    }
}

struct Ip1Data {
    flux: FluxTrace,
    sigma: TimeSeries,
    f: Vec<f64>,
}

fn ip1_data(l: &Line, weights: &[f64]) -> Ip1Data {
    let grid = TimeGrid::covering(10.0, 2560).unwrap();
    let f = source_from_modes(&l.eig, weights).unwrap();
    let src = SourceSpec::new(f.clone(), hat(), 1.0, 0.4).unwrap();
    let b = BoundarySubset::point(&l.d, 0).unwrap();
    let flux = SpectralModel::new(&l.eig, 0.5, grid).unwrap().flux(&src, &b).unwrap();
    Ip1Data { flux, sigma: src.sample_sigma(grid), f }
}

fn ip1_opts(n_active: usize) -> SpaceSourceOptions {
    SpaceSourceOptions { n_active, ..Default::default() }
}

#[test]
fn ip1_noiseless_recovers_weights_and_modal_coefficients() {
    let l = line(64);
    let data = ip1_data(&l, &[2.0, 0.0, -1.0]);
    let r = reconstruct_space_source(&data.flux, &data.sigma, &l.eig, 0.5, &ip1_opts(5)).unwrap();
    let errs = weight_errors(&r.mode_weights, &[2.0, 0.0, -1.0, 0.0, 0.0]).unwrap();
    assert!(errs.iter().all(|e| *e <= 1e-2), "{errs:?}");

    let truth = modal_transfer(&l.eig, &data.f, &data.flux.boundary).unwrap();
    let fitted = r.modal.as_ref().unwrap();
    let scale = truth.values[..5].iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for n in 0..5 {
        let e = (fitted.values[n][0] - truth.values[n][0]).abs() / scale;
        assert!(e <= 1e-6, "mode {}: {e:.3e}", n + 1);
    }
    let Recovered::Field(fhat) = &r.recovered else { panic!("expected a field") };
    let diff: Vec<f64> = fhat.iter().zip(&data.f).map(|(a, b)| a - b).collect();
    let rel = weighted_norm(&diff, l.eig.coeffs()).unwrap() / weighted_norm(&data.f, l.eig.coeffs()).unwrap();
    assert!(rel <= 1e-6, "{rel}");
    assert!(r.errors.iter().all(|e| e.is_finite()));
}

#[test]
fn ip1_zero_flux_gives_zero_source() {
    let l = line(16);
    let data = ip1_data(&l, &[1.0]);
    let zero = FluxTrace::new(data.flux.boundary.clone(), data.flux.grid, vec![vec![0.0; data.flux.grid.len()]]).unwrap();
    let r = reconstruct_space_source(&zero, &data.sigma, &l.eig, 0.5, &ip1_opts(4)).unwrap();
    assert!(r.mode_weights.iter().all(|w| *w == 0.0));
    let Recovered::Field(f) = &r.recovered else { panic!() };
    assert!(f.iter().all(|v| *v == 0.0));
    assert!(r.modal.unwrap().max_abs() == 0.0);
}

#[test]
fn ip1_with_one_percent_noise() {
    let l = line(64);
    let clean = ip1_data(&l, &[2.0, 0.0, -1.0]);
    for seed in [1, 2, 3] {
        let mut flux = clean.flux.clone();
        add_noise(&mut flux, 0.01, seed);
        let mut o = ip1_opts(3);
        o.reg.noise_level = Some(0.01);
        let r = reconstruct_space_source(&flux, &clean.sigma, &l.eig, 0.5, &o).unwrap();
        let errs = weight_errors(&r.mode_weights, &[2.0, 0.0, -1.0]).unwrap();
        assert!(errs.iter().all(|e| *e <= 5e-2), "seed {seed}: {errs:?}");
        assert!(r.regularization.unwrap() > 0.0);
    }
}

#[test]
fn ip1_is_scale_equivariant() {
    let l = line(32);
    let base = ip1_data(&l, &[1.0, -0.5, 0.25]);
    let scaled = ip1_data(&l, &[3.7, -0.5 * 3.7, 0.25 * 3.7]);
    let o = ip1_opts(4);
    let a = reconstruct_space_source(&base.flux, &base.sigma, &l.eig, 0.5, &o).unwrap();
    let b = reconstruct_space_source(&scaled.flux, &scaled.sigma, &l.eig, 0.5, &o).unwrap();
    for (wa, wb) in a.mode_weights.iter().zip(&b.mode_weights).take(3) {
        assert!((wb - 3.7 * wa).abs() <= 1e-8 * wb.abs(), "{wa} {wb}");
    }
}

#[test]
fn ip1_refuses_insufficient_or_unidentifiable_input() {
    let l = line(16);
    let data = ip1_data(&l, &[1.0]);
    let zero_sigma = TimeSeries::from_fn(data.sigma.grid(), |_| 0.0);
    assert!(matches!(
        reconstruct_space_source(&data.flux, &zero_sigma, &l.eig, 0.5, &ip1_opts(3)),
        Err(Error::DataInsufficient(_))
    ));

    // a degenerate pair cannot be separated from one boundary node
    let d = DomainSpec::rectangle((0.0, PI), (0.0, PI), 16, 16).unwrap();
    let c = CoefficientField::constant(d, 1.0, 0.0, 1.0);
    let eig = eigensystem(&assemble(&d, &c).unwrap(), 6, DEFAULT_MULT_TOL).unwrap();
    let b = BoundarySubset::point(&d, d.index(5, 0)).unwrap();
    let flux = FluxTrace::new(b, data.sigma.grid(), vec![vec![0.0; data.sigma.grid().len()]]).unwrap();
    assert!(matches!(
        reconstruct_space_source(&flux, &data.sigma, &eig, 0.5, &ip1_opts(2)),
        Err(Error::Unidentifiable(_))
    ));
}

struct Ip3Case {
    flux: TimeSeries,
    truth: TimeSeries,
    f: Vec<f64>,
}

fn ip3_case(l: &Line, form: SigmaForm, grid: TimeGrid) -> Ip3Case {
    let f = source_from_modes(&l.eig, &[1.0]).unwrap();
    let src = SourceSpec::new(f.clone(), form, 1.0, 0.4).unwrap();
    let b = BoundarySubset::point(&l.d, 0).unwrap();
    let flux = SpectralModel::new(&l.eig, 0.5, grid).unwrap().flux(&src, &b).unwrap();
    Ip3Case { flux: flux.node_series(0), truth: src.sample_sigma(grid), f }
}

fn recovered_series(r: &ReconstructionResult) -> &TimeSeries {
    match &r.recovered {
        Recovered::Series(s) => s,
        other => panic!("expected a series, got {other:?}"),
    }
}

fn noisy(s: &TimeSeries, level: f64, seed: u64) -> TimeSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = s
        .values()
        .iter()
        .map(|v| {
            let e: f64 = rng.sample(StandardNormal);
            v * (1.0 + level * e)
        })
        .collect();
    TimeSeries::new(s.grid(), v).unwrap()
}

#[test]
fn ip3_noiseless_hat() {
    let l = line(64);
    let case = ip3_case(&l, hat(), TimeGrid::covering(1.0, 256).unwrap());
    let r = reconstruct_time_source(&case.flux, 0, &case.f, &l.eig, 0.5, Some(&l.op), &TimeSourceOptions::default())
        .unwrap();
    let err = relative_l2(recovered_series(&r), &case.truth).unwrap();
    assert!(err <= 5e-2, "{err}");
    assert!(r.regularization.unwrap() > 0.0);
    assert!(r.diagnostics.notes.is_empty());
}

#[test]
fn ip3_zero_flux_gives_zero_profile() {
    let l = line(16);
    let grid = TimeGrid::covering(1.0, 128).unwrap();
    let f = source_from_modes(&l.eig, &[1.0]).unwrap();
    let zero = TimeSeries::from_fn(grid, |_| 0.0);
    let r = reconstruct_time_source(&zero, 0, &f, &l.eig, 0.5, None, &TimeSourceOptions::default()).unwrap();
    assert!(recovered_series(&r).values().iter().all(|v| *v == 0.0));
}

#[test]
fn ip3_noisy_profiles_with_discrepancy_principle() {
    let l = line(64);
    let grid = TimeGrid::covering(1.0, 256).unwrap();
    let two_level = SigmaForm::TwoLevel { start: 0.1, mid: 0.35, end: 0.6, first: 1.0, second: 0.4 };
    for form in [hat(), two_level] {
        let case = ip3_case(&l, form, grid);
        let opts = TimeSourceOptions {
            delta: Some(0.4),
            reg: Regularization { noise_level: Some(0.005), ..Default::default() },
            ..Default::default()
        };
        let r = reconstruct_time_source(&noisy(&case.flux, 0.005, 5), 0, &case.f, &l.eig, 0.5, None, &opts).unwrap();
        let s = recovered_series(&r);
        let err = relative_l2(s, &case.truth).unwrap();
        assert!(err <= 1e-1, "{err}");
        // vanishing tail enforced
        assert!(s.values().iter().zip(s.grid().nodes()).all(|(v, t)| t < 0.6 - 1e-12 || *v == 0.0));
    }
}

#[test]
fn ip3_commutes_with_time_shift() {
    let l = line(32);
    let grid = TimeGrid::covering(1.0, 250).unwrap();
    let a = ip3_case(&l, SigmaForm::Hat { start: 0.2, end: 0.5 }, grid);
    let b = ip3_case(&l, SigmaForm::Hat { start: 0.3, end: 0.6 }, grid);
    let opts = TimeSourceOptions::default();
    let ra = reconstruct_time_source(&a.flux, 0, &a.f, &l.eig, 0.5, None, &opts).unwrap();
    let rb = reconstruct_time_source(&b.flux, 0, &b.f, &l.eig, 0.5, None, &opts).unwrap();
    let (sa, sb) = (recovered_series(&ra).values(), recovered_series(&rb).values());
    let shift = 25;
    let diff: f64 = (0..=200).map(|i| (sb[i + shift] - sa[i]).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = sa.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(diff <= 1e-4 * norm, "{}", diff / norm);
}

#[test]
fn ip3_detects_blind_node() {
    // sin 2x sin y has zero normal derivative at the midpoint of the bottom edge
    let d = DomainSpec::rectangle((0.0, PI), (0.0, PI), 16, 16).unwrap();
    let c = CoefficientField::constant(d, 1.0, 0.0, 1.0);
    let eig = eigensystem(&assemble(&d, &c).unwrap(), 8, DEFAULT_MULT_TOL).unwrap();
    let f = d.sample(|[x, y]| (2.0 * x).sin() * y.sin());
    let h = TimeSeries::from_fn(TimeGrid::covering(1.0, 64).unwrap(), |_| 0.0);
    let err = reconstruct_time_source(&h, d.index(8, 0), &f, &eig, 0.5, None, &TimeSourceOptions::default());
    assert!(matches!(err, Err(Error::Unidentifiable(_))), "{err:?}");
    assert!(reconstruct_time_source(&h, d.index(4, 0), &f, &eig, 0.5, None, &TimeSourceOptions::default()).is_ok());
}

#[test]
fn ip3_discrepancy_failure_is_reported() {
    let l = line(16);
    let case = ip3_case(&l, hat(), TimeGrid::covering(1.0, 64).unwrap());
    let opts = TimeSourceOptions {
        reg: Regularization { noise_level: Some(10.0), ..Default::default() },
        ..Default::default()
    };
    let err = reconstruct_time_source(&case.flux, 0, &case.f, &l.eig, 0.5, None, &opts).unwrap_err();
    assert!(matches!(err, Error::Regularization(_)));
    assert_eq!(err.exit_code(), 4);
}

fn series(form: SigmaForm, grid: TimeGrid) -> TimeSeries {
    TimeSeries::from_fn(grid, |t| form.eval(t))
}

#[test]
fn factor_test_examples() {
    let grid = TimeGrid::covering(1.0, 512).unwrap();
    let s1 = series(hat(), grid);
    let s2 = TimeSeries::new(grid, s1.values().iter().map(|v| 2.0 * v).collect()).unwrap();
    let opts = FactorTestOptions::default();
    let r = joint_factor_test(&s1, &s2, 0.5, 4.0, &opts).unwrap();
    let Recovered::Constant(c) = r.recovered else { panic!() };
    assert!((c - 2.0).abs() <= 1e-8);
    assert!(r.diagnostics.values["defect"] <= 1e-8);

    let r = joint_factor_test(&s1, &s1, 0.5, 4.0, &opts).unwrap();
    let Recovered::Constant(c) = r.recovered else { panic!() };
    assert!((c - 1.0).abs() <= 1e-12);

    let other = series(SigmaForm::TwoLevel { start: 0.1, mid: 0.35, end: 0.6, first: 1.0, second: -0.5 }, grid);
    let r = joint_factor_test(&s1, &other, 0.5, 4.0, &opts).unwrap();
    assert!(r.diagnostics.values["defect"] > 0.1);
    assert_eq!(r.diagnostics.values["proportional"], 0.0);

    let zero = TimeSeries::from_fn(grid, |_| 0.0);
    assert!(joint_factor_test(&zero, &s1, 0.5, 4.0, &opts).is_err());
}

#[test]
fn rational_proximity_report() {
    assert_eq!(rational_proximity(0.5, 12), (1, 2, 0.0));
    let (p, q, d) = rational_proximity(1.0 / 7.0 + 1e-6, 12);
    assert_eq!((p, q), (1, 7));
    assert!((d - 1e-6).abs() < 1e-12);
    let (_, _, d) = rational_proximity(2f64.sqrt() - 1.0, 12);
    assert!(d > 1e-3);
}

#[test]
fn gset_of_first_eigenfunction() {
    let l = line(8);
    let f = source_from_modes(&l.eig, &[1.0]).unwrap();
    let b = BoundarySubset::all(&l.d);
    let rep = compute_gset(&f, &l.op, 0.5, 3, &b, None).unwrap();
    assert_eq!(rep.nodes.len(), 2);
    for n in &rep.nodes {
        assert!(n.in_g && n.in_j);
        assert_eq!(n.witness, Some(0));
    }
    assert!(rep.flags_agree);
    assert!(rep.agreement_defect <= rep.zero_tol, "{} > {}", rep.agreement_defect, rep.zero_tol);
    assert_eq!(rep.coverage, 1.0);
}

#[test]
fn gset_of_zero_source_is_empty() {
    let l = line(8);
    let b = BoundarySubset::all(&l.d);
    let rep = compute_gset(&vec![0.0; l.d.n_nodes()], &l.op, 0.5, 3, &b, None).unwrap();
    assert!(rep.nodes.iter().all(|n| !n.in_g && !n.in_j && n.witness.is_none()));
    assert_eq!(rep.coverage, 0.0);
}

#[test]
fn gset_witness_skips_integer_orders() {
    // sin 2x sin y has zero A^{-2} trace at the bottom-edge midpoint for
    // every k, so the node is outside both sets; elsewhere α = 1/2 makes
    // k = 1 inadmissible but k = 0 already witnesses
    let d = DomainSpec::rectangle((0.0, PI), (0.0, PI), 16, 16).unwrap();
    let c = CoefficientField::constant(d, 1.0, 0.0, 1.0);
    let op = assemble(&d, &c).unwrap();
    let f = d.sample(|[x, y]| (2.0 * x).sin() * y.sin());
    let b = BoundarySubset::all(&d);
    let rep = compute_gset(&f, &op, 0.5, 3, &b, None).unwrap();
    for n in &rep.nodes {
        if n.node == d.index(8, 0) {
            assert!(!n.in_g && !n.in_j);
        }
        if n.in_g {
            assert_ne!(n.witness, Some(1));
        }
    }
    assert!(rep.flags_agree);
}

#[test]
fn gset_and_jset_agree_for_random_sources() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let d = DomainSpec::rectangle((0.0, PI), (0.0, 2.0), 20, 16).unwrap();
    let c = CoefficientField::isotropic(d, |[x, y]| 1.0 + 0.3 * (x * y).sin(), |[x, _]| 0.5 * x, |[_, y]| 1.0 + 0.2 * y);
    let op = assemble(&d, &c).unwrap();
    let b = BoundarySubset::all(&d);
    for _ in 0..4 {
        let f: Vec<f64> = (0..d.n_nodes()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let alpha = rng.random_range(0.1..0.9);
        let rep = compute_gset(&f, &op, alpha, 3, &b, None).unwrap();
        assert!(rep.flags_agree);
        assert!(rep.nodes.iter().all(|n| n.in_g == n.in_j));
        assert!(rep.agreement_defect <= rep.zero_tol, "{} > {}", rep.agreement_defect, rep.zero_tol);
    }
}

#[test]
fn hopf_certificate_examples() {
    let l = line(4);
    let g = l.d.sample(|[x, _]| -x.sin());
    let cert = hopf_certificate(&g, 0, 1, 0.4, &l.op).unwrap();
    assert!(cert.certified);
    // w = -sin/λ₁³ and λ₁ ≈ 1
    for v in &cert.values {
        assert!((v - 1.0).abs() < 1e-3, "{v}");
    }

    let bump = l.d.sample(|[x, _]| if (x - 1.0).abs() < 0.5 { (1.0 - ((x - 1.0) / 0.5).powi(2)).powi(2) } else { 0.0 });
    let neg: Vec<f64> = bump.iter().map(|v| -v).collect();
    let cert = hopf_certificate(&neg, 1, 2, 0.4, &l.op).unwrap();
    assert!(cert.certified && cert.values.iter().all(|v| *v > 0.0));
    let cert = hopf_certificate(&bump, 1, 2, 0.4, &l.op).unwrap();
    assert!(cert.certified && cert.values.iter().all(|v| *v < 0.0));

    let wavy = l.d.sample(|[x, _]| (2.0 * x).sin());
    assert!(hopf_certificate(&wavy, 0, 1, 0.4, &l.op).is_err());
    assert!(hopf_certificate(&g, 0, 1, 0.5, &l.op).is_err());
    assert!(hopf_certificate(&g, 2, 1, 0.4, &l.op).is_err());
}

#[test]
fn hopf_certificate_in_two_dimensions() {
    let d = DomainSpec::rectangle((0.0, 1.0), (0.0, 1.0), 20, 20).unwrap();
    let c = CoefficientField::isotropic(d, |[x, _]| 1.0 + x, |_| 0.3, |_| 1.0);
    let op = assemble(&d, &c).unwrap();
    let g = d.sample(|[x, y]| {
        let r2 = (x - 0.3).powi(2) + (y - 0.6).powi(2);
        if r2 < 0.04 {
            -(1.0 - r2 / 0.04).powi(2)
        } else {
            0.0
        }
    });
    let cert = hopf_certificate(&g, 0, 0, 0.3, &op).unwrap();
    assert!(cert.certified);
    assert_eq!(cert.values.len(), d.boundary_nodes().len());
}

#[test]
fn results_serialize_with_problem_tag() {
    let grid = TimeGrid::covering(1.0, 64).unwrap();
    let s1 = series(hat(), grid);
    let r = joint_factor_test(&s1, &s1, 0.5, 2.0, &FactorTestOptions::default()).unwrap();
    let v = r.to_json(Some(serde_json::json!({"constant": 1.0}))).unwrap();
    assert_eq!(v["problem"], "IP2");
    assert_eq!(v["recovered"]["kind"], "constant");
    assert_eq!(v["ground_truth"]["constant"], 1.0);
    let back: ReconstructionResult = serde_json::from_value(v).unwrap();
    assert_eq!(back.problem, Problem::JointFactor);
}
