use std::f64::consts::PI;

use wcontract::linalg::sym_max_eigen;
use wcontract::pde::*;

#[test]
fn heat_default_matches_neumann_spectrum() {
    let r = heat_zero_flux_experiment(&HeatConfig::default(), 7).unwrap();
    let expected = -2.0 * 256.0 * (1.0 - (PI / 16.0).cos());
    // Independent dense oracle: second eigenvalue of the Neumann matrix.
    let d = Discretization::new(1, 16, wcontract::Boundary::Neumann).unwrap();
    let eig = d.dense_laplacian().symmetric_eigen();
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    println!("cert {} closed {} dense {} fit {:?} mass {}", r.lambda_certified, expected, ev[1], r.fit, r.mass_drift);
    assert!((r.lambda_certified - ev[1]).abs() <= 1e-8 * ev[1].abs());
    assert!((r.lambda_closed_form - expected).abs() <= 1e-10 * expected.abs());
    assert!(r.fit_relative_error < 0.02, "{}", r.fit_relative_error);
    assert!(r.mass_drift <= 1e-10);
    assert!(r.certificate.is_certified());
}

#[test]
fn heat_constant_state_stays_constant() {
    let r = heat_zero_flux_experiment(&HeatConfig { constant_initial: true, ..Default::default() }, 1).unwrap();
    assert!(r.q_initial < 1e-14 && r.q_final < 1e-14);
}

#[test]
fn allen_cahn_homogenizes_and_small_diffusion_does_not() {
    let good = reaction_diffusion_experiment(&ReactionConfig::default(), 3).unwrap();
    println!("ac: cert {:?} lam {} fit {:?} q {} -> {}", good.certificate.status, good.lambda_certified, good.fit, good.q_initial, good.q_final);
    assert!(good.predicted && good.homogenized);
    let slope = good.fit.unwrap().slope;
    assert!((slope - good.lambda_certified).abs() <= 0.1 * good.lambda_certified.abs());
    let bad = reaction_diffusion_experiment(&ReactionConfig { alphas: vec![0.05], t_end: 10.0, ..Default::default() }, 3).unwrap();
    println!("ac bad: cert {:?} q {} -> {}", bad.certificate.status, bad.q_initial, bad.q_final);
    assert!(!bad.predicted);
    assert!(bad.q_final > 0.1 * bad.q_initial);
}

#[test]
fn activator_inhibitor_forms_patterns() {
    let cfg = ReactionConfig {
        n: 32,
        alphas: vec![0.001, 0.05],
        reaction: ReactionSpec::ActivatorInhibitor { a: 2.0, b: 1.5 },
        t_end: 50.0,
        output_rate: 10.0,
        ..Default::default()
    };
    let r = reaction_diffusion_experiment(&cfg, 5).unwrap();
    println!("turing: cert {:?} cond2 {:?} q {} -> {}", r.certificate.status, r.condition_2.residual, r.q_initial, r.q_final);
    assert!(!r.predicted && !r.condition_2.passed && r.condition_1.passed);
    assert!(r.q_final > 0.1 * r.q_initial);
}

#[test]
fn poisson_unique_fixed_point() {
    let r = nonlinear_poisson_experiment(&PoissonConfig::default(), 11).unwrap();
    println!("poisson: lam {} df {} dist {} res {} times {:?}", r.lambda_omega, r.df_rate, r.max_pairwise_distance, r.residual, r.final_times);
    assert!(r.existence_certified);
    assert!(r.converged.iter().all(|c| *c));
    assert!(r.max_pairwise_distance <= 1e-8 && r.residual <= 1e-8);
    let lam = r.refinement.column("lambda_closed_form").unwrap();
    assert!(lam.windows(2).all(|w| w[1] > w[0] && w[1] < PI * PI));
    let d = Discretization::new(1, 32, wcontract::Boundary::Dirichlet).unwrap();
    let (top, _, _) = sym_max_eigen(&d.dense_laplacian()).unwrap();
    assert!((r.lambda_omega + top).abs() < 1e-9);
}

#[test]
fn poisson_zero_nonlinearity() {
    let r = nonlinear_poisson_experiment(&PoissonConfig { c: 0.0, source_amplitude: 0.0, ..Default::default() }, 2).unwrap();
    assert!(r.residual <= 1e-10);
    assert!(r.solution.column("u").unwrap().iter().all(|u| u.abs() < 1e-10));
}

#[test]
fn sobolev_rates() {
    let r = sobolev_rate_experiment(&SobolevRateConfig::default(), 4).unwrap();
    for row in &r.rows {
        println!("k={} heat {} transport {} burgers {}", row.k, row.heat.value, row.transport.value, row.burgers.value);
    }
    assert!(r.heat_monotone);
    assert!(r.transport_max_abs < 1e-8);
    assert!(r.rows.iter().all(|row| row.burgers.value.is_finite()));
    let reg = r.regularity.unwrap();
    assert!(reg.passed && reg.pair.unwrap().passed);
}

#[test]
fn burgers_vanishing_viscosity() {
    let cfg = VanishingConfig::default();
    let fam = RegularizedFamily::burgers(cfg.n, cfg.schedule.clone());
    let u0 = sine_initial(cfg.n, 1.0, 0.0);
    let t = std::time::Instant::now();
    let r = vanishing_osl_experiment(&fam, &u0, &cfg, 1).unwrap();
    println!("elapsed {:?}", t.elapsed());
    println!("rates {:?} sup {:?} trans {:?} cont {:?}", r.rates, r.sup_norms, r.translation_residuals, r.continuity);
    println!("diffs {:?} weak {:?} limit {:?} failing {:?}", r.differences, r.weak_residuals, r.limit_weak_residual, r.failing);
    assert!(r.cauchy_trend);
    assert!(r.failing.is_empty());
    assert!(r.limit_weak_residual.unwrap() <= 1e-2);
}
