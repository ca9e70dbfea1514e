use std::f64::consts::PI;

use fracsrc::elliptic::*;
use fracsrc::forward::*;
use fracsrc::fractional::{TimeGrid, TimeSeries};
use fracsrc::laplace::*;
use fracsrc::mittag_leffler::kernel_antiderivative;
use fracsrc::Error;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn interval_eig(cells: usize, modes: usize) -> (DomainSpec, EigenSystem) {
    let d = DomainSpec::interval(0.0, PI, cells).unwrap();
    let co = CoefficientField::constant(d, 1.0, 0.0, 1.0);
    let op = assemble(&d, &co).unwrap();
    (d, eigensystem(&op, modes, DEFAULT_MULT_TOL).unwrap())
}

#[test]
fn transform_of_exponential() {
    let grid = TimeGrid::covering(20.0, 20_000).unwrap();
    let s = TimeSeries::from_fn(grid, |t| (-t).exp());
    let out = laplace_transform(&s, c(1.0, 0.0), Support::Decaying, Some(1e-7)).unwrap();
    assert!((out.values[0] - 0.5).norm() <= 1e-6, "{}", out.values[0]);
    assert!(out.tail_bound < 1e-8);

    let zero = TimeSeries::from_fn(grid, |_| 0.0);
    let out = laplace_transform(&zero, c(0.3, 2.0), Support::Decaying, None).unwrap();
    assert_eq!(out.values[0], c(0.0, 0.0));
    assert_eq!(out.tail_bound, 0.0);
}

#[test]
fn transform_of_relaxation_kernel() {
    // the kernel itself is singular at t = 0; its antiderivative K₁ is not,
    // and L[K₁](p) = L[kernel](p)/p
    let (alpha, p) = (0.5, 2.0);
    let grid = TimeGrid::covering(12.0, 120_000).unwrap();
    let k1 = TimeSeries::from_fn(grid, |t| kernel_antiderivative(alpha, 1.0, t, 1).unwrap());
    let out = laplace_transform(&k1, c(p, 0.0), Support::Decaying, Some(1e-9)).unwrap();
    let got = out.values[0] * p;
    let expected = 0.414_213_562_4;
    assert!((got - expected).norm() <= 1e-6, "{got}");
}

#[test]
fn tail_policy() {
    let grid = TimeGrid::covering(2.0, 200).unwrap();
    let s = TimeSeries::from_fn(grid, |t| 1.0 / (1.0 + t));
    let err = laplace_transform(&s, c(1.0, 0.0), Support::Decaying, Some(1e-6)).unwrap_err();
    assert!(matches!(err, Error::Accuracy { .. }));
    assert!(laplace_transform(&s, c(-1.0, 0.0), Support::Decaying, None).is_err());
    assert!(laplace_transform(&s, c(0.0, 1.0), Support::Decaying, None).is_err());

    // compact support admits the left half-plane up to the growth cap
    let bump = TimeSeries::from_fn(grid, |t| if t < 1.0 { (PI * t).sin().powi(2) } else { 0.0 });
    let neg = laplace_transform(&bump, c(-3.0, 0.0), Support::Compact, Some(0.0)).unwrap();
    assert_eq!(neg.tail_bound, 0.0);
    // ∫₀¹ e^{3t} sin²(πt) dt
    let exact = {
        let (a, w) = (3.0f64, 2.0 * PI);
        let e = a.exp() - 1.0;
        0.5 * (e / a - a * e / (a * a + w * w))
    };
    assert!((neg.values[0].re - exact).abs() < 1e-4 * exact, "{} vs {exact}", neg.values[0]);
    assert!(laplace_transform(&bump, c(-16.0, 0.0), Support::Compact, None).is_err());
}

#[test]
fn samples_serialize_as_flat_objects() {
    let s = LaplaceSample { p: c(1.0, -2.0), values: vec![c(0.5, 0.25), c(-1.0, 0.0)], tail_bound: 1e-9 };
    let j = samples_to_json(&[s]);
    let o = &j[0];
    assert_eq!(o["re_p"], 1.0);
    assert_eq!(o["im_p"], -2.0);
    assert_eq!(o["re_val"][1], -1.0);
    assert_eq!(o["im_val"][0], 0.25);
    assert_eq!(o["tail_bound"], 1e-9);
}

#[test]
fn modal_transfer_examples() {
    let (d, eig) = interval_eig(128, 6);
    let b = BoundarySubset::all(&d);
    let f = source_from_modes(&eig, &[1.0]).unwrap();
    let m = modal_transfer(&eig, &f, &b).unwrap();
    let tr = eig.traces_on(&b).unwrap();
    for (i, t) in tr[0].iter().enumerate() {
        assert!((m.values[0][i] - t).abs() < 1e-10);
        for n in 1..6 {
            assert!(m.values[n][i].abs() < 1e-10);
        }
    }
    let f = source_from_modes(&eig, &[2.0, 3.0]).unwrap();
    let m = modal_transfer(&eig, &f, &b).unwrap();
    for (i, (t0, t1)) in tr[0].iter().zip(&tr[1]).enumerate() {
        assert!((m.values[0][i] - 2.0 * t0).abs() < 1e-10);
        assert!((m.values[1][i] - 3.0 * t1).abs() < 1e-10);
    }
}

#[test]
fn modal_transfer_sums_degenerate_partners() {
    let d = DomainSpec::rectangle((0.0, PI), (0.0, PI), 24, 24).unwrap();
    let co = CoefficientField::constant(d, 1.0, 0.0, 1.0);
    let op = assemble(&d, &co).unwrap();
    let eig = eigensystem(&op, 6, DEFAULT_MULT_TOL).unwrap();
    let n = (0..eig.eigenvalues().len())
        .position(|k| eig.multiplicities()[k] == 2 && (eig.eigenvalues()[k] - 5.0).abs() < 0.2)
        .unwrap();
    let grp = eig.groups()[n].clone();
    let f: Vec<f64> = d.sample(|[x, y]| x * (PI - x) * y * y * (PI - y));
    let b = BoundarySubset::all(&d);
    let m = modal_transfer(&eig, &f, &b).unwrap();
    // oracle: inner products through weighted_inner, traces through conormal_trace
    let rho_inv_f: Vec<f64> = f.iter().zip(co.rho()).map(|(f, r)| f / r).collect();
    let mut expected = vec![0.0; b.len()];
    for j in grp {
        let phi = eig.function(j);
        let w = weighted_inner(&rho_inv_f, phi, &co).unwrap();
        let t = conormal_trace(phi, &co, &b).unwrap();
        for (e, t) in expected.iter_mut().zip(t) {
            *e += w * t;
        }
    }
    for (got, want) in m.values[n].iter().zip(&expected) {
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }
}

fn single_mode(lambda: f64, value: f64) -> ModalCoefficients {
    let d = DomainSpec::interval(0.0, 1.0, 16).unwrap();
    let b = BoundarySubset::point(&d, 0).unwrap();
    ModalCoefficients::new(b, vec![lambda], vec![vec![value]]).unwrap()
}

#[test]
fn transfer_eval_examples() {
    let m = single_mode(1.0, 1.0);
    let w = transfer_eval(&m, c(1.0, 0.0), c(1.0, 0.0), 0.5).unwrap();
    assert!((w.values[0] - 0.5).norm() < 1e-15);
    let w = transfer_eval(&m, c(0.0, 0.0), c(2.0, 1.0), 0.5).unwrap();
    assert_eq!(w.values[0], c(0.0, 0.0));
    assert!(matches!(transfer_eval(&m, c(1.0, 0.0), c(-1.0, 0.0), 0.5), Err(Error::Branch { .. })));
}

#[test]
fn branch_jump_single_mode() {
    let m = single_mode(1.0, 1.0);
    let j = branch_jump(&m, &|_| c(1.0, 0.0), 1.0, 0.5).unwrap();
    assert!((j.closed_form[0] - c(0.0, -1.0)).norm() < 1e-14);
    assert!((j.limit[0] - c(0.0, -1.0)).norm() < 1e-9);

    let zero = single_mode(1.0, 0.0);
    let j = branch_jump(&zero, &|_| c(1.0, 0.0), 2.0, 0.3).unwrap();
    assert_eq!(j.closed_form[0], c(0.0, 0.0));
    assert!(j.limit[0].norm() < 1e-14);

    for alpha in [0.1, 0.5, 0.9] {
        let j = branch_jump(&m, &|_| c(1.0, 0.0), 3.0, alpha).unwrap();
        assert!(j.closed_form[0].norm() > 0.0);
    }
}

#[test]
fn branch_jump_paths_agree_on_random_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let d = DomainSpec::interval(0.0, 1.0, 16).unwrap();
    let b = BoundarySubset::all(&d);
    let lambdas = vec![1.0, 4.0, 9.0, 16.0];
    let values: Vec<Vec<f64>> = (0..4).map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let m = ModalCoefficients::new(b, lambdas, values).unwrap();
    // transform of a compactly supported hat on [0.2, 0.6], entire in p
    let hat = |p: Complex64| {
        let e = |t: f64| (-p * t).exp();
        (e(0.2) - 2.0 * e(0.4) + e(0.6)) / (p * p * 0.2)
    };
    for r in [0.5, 1.0, 2.0, 4.0] {
        for alpha in [0.3, 0.5, 0.7] {
            let j = branch_jump(&m, &hat, r, alpha).unwrap();
            assert!(j.defect <= 1e-8, "R={r} α={alpha}: {}", j.defect);
        }
    }
}

fn real_abscissae(lo: f64, hi: f64, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| c((lo.ln() + (hi / lo).ln() * k as f64 / (n - 1) as f64).exp(), 0.0))
        .collect()
}

fn rational(z: Complex64) -> Complex64 {
    (1..=5).map(|n| n as f64 / ((n * n) as f64 + z)).sum()
}

fn boundary1() -> BoundarySubset {
    let d = DomainSpec::interval(0.0, 1.0, 16).unwrap();
    BoundarySubset::point(&d, 0).unwrap()
}

#[test]
fn residue_extract_single_pole() {
    let zs = real_abscissae(0.1, 10.0, 4);
    let samples: Vec<_> = zs.iter().map(|z| (*z, vec![2.5 / (3.0 + z)])).collect();
    let (m, _) = residue_extract(&samples, &[3.0], 1, &boundary1(), 0.0).unwrap();
    assert!((m.values[0][0] - 2.5).abs() < 1e-10);
}

#[test]
fn residue_extract_five_poles() {
    let lambdas: Vec<f64> = (1..=5).map(|n| (n * n) as f64).collect();
    let zs = real_abscissae(0.1, 250.0, 20);
    let samples: Vec<_> = zs.iter().map(|z| (*z, vec![rational(*z)])).collect();
    let (m, diag) = residue_extract(&samples, &lambdas, 5, &boundary1(), 0.0).unwrap();
    for n in 0..5 {
        assert!((m.values[n][0] - (n + 1) as f64).abs() < 1e-8, "n={n}: {} ({diag:?})", m.values[n][0]);
    }
    assert!(diag.normal_condition <= 1e10);
}

fn noisy_fit_error(zs: &[Complex64], seed: u64) -> f64 {
    let lambdas: Vec<f64> = (1..=5).map(|n| (n * n) as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let samples: Vec<_> = zs
            .iter()
            .map(|z| (*z, vec![rational(*z) * (1.0 + 1e-6 * rng.random_range(-1.0..1.0))]))
            .collect();
        let (m, _) = residue_extract(&samples, &lambdas, 5, &boundary1(), 0.0).unwrap();
        for n in 0..3 {
            worst = worst.max((m.values[n][0] - (n + 1) as f64).abs());
        }
    }
    worst
}

#[test]
fn residue_extract_with_noise() {
    // a contour around the poles keeps the fit well conditioned
    let circle: Vec<Complex64> = (0..20)
        .map(|k| c(-12.0, 0.0) + Complex64::from_polar(16.0, 2.0 * PI * (k as f64 + 0.5) / 20.0))
        .collect();
    let err = noisy_fit_error(&circle, 11);
    assert!(err <= 1e-4, "{err}");
    // positive real samples amplify the noise by about 3e3 but stay bounded
    let err = noisy_fit_error(&real_abscissae(0.1, 250.0, 20), 11);
    assert!(err <= 1e-2, "{err}");
}

#[test]
fn residue_extract_refuses_bad_inputs() {
    let lambdas = [1.0, 4.0, 9.0];
    let few: Vec<_> = real_abscissae(1.0, 2.0, 5).into_iter().map(|z| (z, vec![rational(z)])).collect();
    assert!(matches!(
        residue_extract(&few, &lambdas, 3, &boundary1(), 0.0),
        Err(Error::DataInsufficient(_))
    ));
    // clustered abscissae cannot separate nearby poles
    let lambdas = [1.0, 1.0001, 1.0002, 1.0003];
    let clustered: Vec<_> = real_abscissae(1.0, 1.01, 10).into_iter().map(|z| (z, vec![rational(z)])).collect();
    assert!(matches!(
        residue_extract(&clustered, &lambdas, 4, &boundary1(), 0.0),
        Err(Error::Conditioning { .. })
    ));
}

#[test]
fn residue_matches_limit() {
    let g1 = |z: Complex64| 1.7 / (2.0 + z);
    let zs = real_abscissae(0.2, 20.0, 6);
    let samples: Vec<_> = zs.iter().map(|z| (*z, vec![g1(*z)])).collect();
    let (m, _) = residue_extract(&samples, &[2.0], 1, &boundary1(), 0.0).unwrap();
    let lim = richardson_residue(&g1, 2.0, PI / 3.0, 0.1);
    assert!((lim - m.values[0][0]).norm() < 1e-8);

    // with other poles present the limit still isolates one residue
    let lambdas: Vec<f64> = (1..=5).map(|n| (n * n) as f64).collect();
    let samples: Vec<_> = real_abscissae(0.1, 250.0, 20).iter().map(|z| (*z, vec![rational(*z)])).collect();
    let (m, _) = residue_extract(&samples, &lambdas, 5, &boundary1(), 0.0).unwrap();
    for (n, &lambda) in lambdas.iter().enumerate() {
        let lim = richardson_residue(&rational, lambda, PI / 2.0, 0.2);
        assert!((lim - m.values[n][0]).norm() < 1e-8, "n={n}: {lim}");
    }
}

struct FluxCase {
    modal: ModalCoefficients,
    flux: FluxTrace,
    sigma: TimeSeries,
    alpha: f64,
}

fn flux_case(dt_inv: usize) -> FluxCase {
    let (d, eig) = interval_eig(64, 24);
    let alpha = 0.5;
    let t_max = 12.0;
    let grid = TimeGrid::covering(t_max, (t_max * dt_inv as f64) as usize).unwrap();
    let f = source_from_modes(&eig, &[2.0, 0.0, -1.0, 0.5]).unwrap();
    let src = SourceSpec::new(f.clone(), SigmaForm::Hat { start: 0.2, end: 0.6 }, 1.0, 0.4).unwrap();
    let b = BoundarySubset::all(&d);
    let model = SpectralModel::new(&eig, alpha, grid).unwrap();
    let flux = model.flux(&src, &b).unwrap();
    let sigma = src.sample_sigma(grid);
    FluxCase { modal: modal_transfer(&eig, &f, &b).unwrap(), flux, sigma, alpha }
}

/// Transform of the piecewise-linear interpolant of the sampled σ.
fn sigma_hat_pl(sigma: &TimeSeries, p: Complex64) -> Complex64 {
    let a = p * sigma.grid().dt() / 2.0;
    let s = (a.sinh() / a).powi(2);
    laplace_transform(sigma, p, Support::Compact, None).unwrap().values[0] * s
}

#[test]
fn simulated_flux_matches_transfer_function() {
    let fine = flux_case(256);
    let coarse = flux_case(128);
    let ps: Vec<Complex64> = [1.0, 2.0, 4.0, 1.5, 3.0, 6.0]
        .iter()
        .map(|&r| c(r, 0.0))
        .chain([c(1.0, 1.0), c(1.0, -1.0), c(2.0, 3.0), c(3.0, -2.0)])
        .collect();
    assert_eq!(ps.len(), 10);
    let got = transform_many(&fine.flux, &ps, Support::Decaying, None).unwrap();
    let rough = transform_many(&coarse.flux, &ps, Support::Decaying, None).unwrap();
    for ((g, r), p) in got.iter().zip(&rough).zip(&ps) {
        let want = transfer_eval(&fine.modal, sigma_hat_pl(&fine.sigma, *p), *p, fine.alpha).unwrap();
        let scale = want.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        for i in 0..g.values.len() {
            let quad = (g.values[i] - r.values[i]).norm();
            let tol = quad + g.tail_bound + 1e-9 * scale;
            let err = (g.values[i] - want.values[i]).norm();
            assert!(err <= tol, "p={p} node {i}: err {err:.3e} tol {tol:.3e}");
            assert!(err <= 1e-4 * scale, "p={p}: err {err:.3e} scale {scale:.3e}");
        }
    }
}

#[test]
fn transfer_function_is_holomorphic_in_right_half_plane() {
    let case = flux_case(64);
    let sigma = case.sigma.clone();
    let f = |p: Complex64| -> Complex64 {
        transfer_eval(&case.modal, sigma_hat_pl(&sigma, p), p, case.alpha).unwrap().values[1]
    };
    for (center, radius) in [(c(2.0, 0.0), 0.5), (c(1.0, 2.0), 0.8), (c(0.3, -0.5), 0.2)] {
        let defect = cauchy_mean_defect(&f, center, radius, 64);
        assert!(defect <= 1e-6, "center {center}: {defect}");
    }
}

#[test]
fn kernel_quadrature_matches_resolvent() {
    for alpha in [0.3, 0.5, 0.8, 1.0] {
        for lambda in [0.0, 1.0, 7.5] {
            for p in [c(0.4, 0.0), c(2.0, 0.0), c(1.0, 3.0), c(5.0, -1.0)] {
                let q = kernel_transform_quadrature(alpha, lambda, p).unwrap();
                let exact = 1.0 / (p.powf(alpha) + lambda);
                assert!((q - exact).norm() <= 1e-10 * exact.norm(), "α={alpha} λ={lambda} p={p}: {q} vs {exact}");
            }
        }
    }
    assert!(kernel_transform_quadrature(0.5, 1.0, c(-1.0, 0.0)).is_err());
}
