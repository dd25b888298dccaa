use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use wcontract::geometry::*;
use wcontract::report::CertificateStatus;
use wcontract::sampler::StateSampler;
use wcontract::systems::*;
use wcontract::{LinearOp, Space, VectorField};

fn ring_ics(radii: &[f64]) -> Vec<DVector<f64>> {
    radii.iter().enumerate().map(|(k, r)| DVector::from_vec(vec![r * (1.0 + k as f64).cos(), r * (1.0 + k as f64).sin()])).collect()
}

#[test]
fn hopf_limit_cycle_certified() {
    let f = hopf(1.0);
    let sub = Submersion::unit_sphere(2);
    let sampler = StateSampler::annulus(0.8, 1.2, 5, 16);
    let cross = CrossCheckOptions::new(30.0, 0.01, ring_ics(&[0.5, 0.75, 1.5]));
    let r = certify_limit_cycle(&f, &sub, &Conjugacy::identity(2), 1.0, &Space::euclidean(2), &sampler, Some(&cross)).unwrap();
    println!("rate {} speed {} periods {:?} cc {:?}", r.report.rate.value, r.min_loop_speed, r.periods, r.report.cross_check);
    assert!(r.report.is_certified(), "{:?}", r.report.failing);
    assert!((r.report.rate.value + 0.92).abs() < 1e-9);
    assert!((r.min_loop_speed - 1.0).abs() < 1e-9);
    assert!(r.report.cross_check.as_ref().unwrap().passed);
    assert!(r.periods.iter().all(|p| (p - TAU).abs() < 0.01 * TAU));
}

#[test]
fn sheared_hopf_converges_to_ellipse() {
    let s = shear_matrix(0.8);
    let conj = Conjugacy::linear(s.clone()).unwrap();
    let f = conj.pullback_field(&hopf(2.0));
    let sub = Submersion::unit_sphere(2);
    let inv = s.try_inverse().unwrap();
    let ics: Vec<DVector<f64>> = ring_ics(&[0.5, 1.2, 1.5]).into_iter().map(|v| &inv * v).collect();
    let cross = CrossCheckOptions::new(30.0, 0.01, ics);
    let r = certify_limit_cycle(&f, &sub, &conj, 1.0, &Space::euclidean(2), &StateSampler::annulus(0.8, 1.2, 5, 16), Some(&cross)).unwrap();
    assert!(r.report.is_certified());
    assert!(r.periods.iter().all(|p| (p - PI).abs() < 0.01 * PI), "{:?}", r.periods);
}

#[test]
fn equilibrium_on_loop_blocks_certificate() {
    let r = certify_limit_cycle(&hopf_with_equilibrium(), &Submersion::unit_sphere(2), &Conjugacy::identity(2), 1.0, &Space::euclidean(2), &StateSampler::annulus(0.8, 1.2, 5, 16), None).unwrap();
    assert_eq!(r.report.status, CertificateStatus::Withheld);
    assert!(r.report.failing.contains(&"loop_non_accumulation".to_string()), "{:?}", r.report.failing);
}

fn locking_inputs(n: usize, seed: u64) -> (StateSampler, StateSampler, CrossCheckOptions) {
    let torus = StateSampler::uniform_box(&vec![-1.0; 2 * n], &vec![1.0; 2 * n], 24, 0.0, seed);
    let leader = StateSampler::annulus(0.8, 1.2, 5, 16);
    let ics = (0..3).map(|k| StateSampler::uniform_box(&vec![-1.2; 2 * n], &vec![1.2; 2 * n], 1, 0.0, seed + 10 + k).samples()[0].1.clone()).collect();
    (torus, leader, CrossCheckOptions::new(80.0, 0.01, ics))
}

#[test]
fn coupled_oscillators_phase_lock() {
    let angles = [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0];
    let shears = [shear_matrix(0.0), shear_matrix(0.5), DMatrix::from_row_slice(2, 2, &[1.2, 0.0, 0.3, 0.8])];
    let sys = coupled_hopf(&[1.0; 3], 1.0, &leader_adjacency(3), &angles, &shears).unwrap();
    let (torus, leader, cross) = locking_inputs(3, 3);
    let r = certify_phase_locking(&sys, &Submersion::unit_sphere(2), 1.0, &Space::euclidean(6), &leader, &torus, Some(&cross)).unwrap();
    println!("leader {:?} rate {} periods {:?} spread {} phase {} cc {:?}", r.leader, r.report.rate.value, r.periods, r.period_spread, r.phase_spread_change, r.report.cross_check);
    assert!(r.report.is_certified(), "{:?}", r.report.failing);
    assert_eq!(r.leader, Some(0));
    assert!(r.period_test_passed && r.phase_test_passed);
    assert!((r.common_period.unwrap() - TAU).abs() < 0.01 * TAU);
}

#[test]
fn uncoupled_control_fails() {
    let shears = [shear_matrix(0.0), shear_matrix(0.5), shear_matrix(-0.4)];
    let sys = coupled_hopf(&[1.0, 1.3, 0.7], 0.0, &leader_adjacency(3), &[0.0, 1.0, 2.0], &shears).unwrap();
    let (torus, leader, cross) = locking_inputs(3, 4);
    let r = certify_phase_locking(&sys, &Submersion::unit_sphere(2), 1.0, &Space::euclidean(6), &leader, &torus, Some(&cross)).unwrap();
    println!("rate {} periods {:?}", r.report.rate.value, r.periods);
    assert!(!r.report.is_certified());
    assert!(r.report.rate.value >= -1e-10);
    assert!(!r.period_test_passed);
}

#[test]
fn single_oscillator_reduces_to_limit_cycle() {
    let sys = coupled_hopf(&[1.0], 0.0, &DMatrix::zeros(1, 1), &[0.0], &[shear_matrix(0.3)]).unwrap();
    let (torus, leader, _) = locking_inputs(1, 5);
    let r = certify_phase_locking(&sys, &Submersion::unit_sphere(2), 1.0, &Space::euclidean(2), &leader, &torus, None).unwrap();
    let lc = r.leader_report.as_ref().unwrap();
    assert!(r.report.is_certified());
    assert_eq!(r.report.rate.value, lc.report.rate.value);
}

#[test]
fn hopf_manifold_and_rotation_field() {
    let sub = Submersion::unit_sphere(2);
    let r = certify_manifold_contraction(&hopf(1.0), &sub, &Space::euclidean(2), &StateSampler::annulus(0.8, 1.2, 5, 16), None).unwrap();
    assert!(r.is_certified());
    assert!(r.hypothesis("tangency").unwrap().residual <= 1e-10);
    let rot = certify_manifold_contraction(&skew_rotation(3), &Submersion::unit_sphere(3), &Space::euclidean(3), &StateSampler::uniform_box(&[-1.0; 3], &[1.0; 3], 20, 0.0, 1), None).unwrap();
    assert!(rot.hypothesis("tangency").unwrap().passed);
    assert!(!rot.is_certified());
    assert!(rot.rate.value.abs() < 1e-12);
}

#[test]
fn affine_manifold_agrees_with_subspace() {
    let n = 4;
    let a = DMatrix::from_fn(n, n, |i, j| if i == j { -2.0 } else if (i + 1) % n == j || (j + 1) % n == i { 1.0 } else { 0.0 }) - DMatrix::identity(n, n) * 0.1;
    let f = VectorField::linear(a);
    let proj = Projector::mean(n, 1);
    let s = StateSampler::uniform_box(&[-1.0; 4], &[1.0; 4], 6, 0.0, 8);
    let sub_r = certify_subspace_contraction(&f, &proj, &Space::euclidean(n), &s, None, None).unwrap();
    // φ(u) = B_Qᵀu with B_Q an orthonormal basis of im(Q): a surjective affine map.
    let bq = wcontract::linalg::row_space_basis(proj.q());
    let man = certify_manifold_contraction(&f, &Submersion::affine(bq.transpose(), DVector::zeros(bq.ncols())), &Space::euclidean(n), &s, None).unwrap();
    assert!((sub_r.rate.value - man.rate.value).abs() < 1e-10, "{} vs {}", sub_r.rate.value, man.rate.value);
}

#[test]
fn heat_shift_equivariance_and_invariant_limit() {
    let n = 12;
    let f = wcontract::pde::sobolev::periodic_heat(n, 0.1);
    let shifts: Vec<GroupElement> = (1..n).step_by(3).map(|s| GroupElement::Linear(LinearOp::from(DMatrix::from_fn(n, n, |i, j| if j == (i + s) % n { 1.0 } else { 0.0 })))).collect();
    let samp = StateSampler::uniform_box(&vec![-1.0; n], &vec![1.0; n], 5, 0.0, 2);
    let cert = certify_subspace_contraction(&f, &Projector::mean(n, 1), &Space::euclidean(n), &samp, None, None).unwrap();
    let r = check_equivariance(&f, &shifts, &samp, Some(&cert));
    assert!(r.passed && r.conclusion.is_some());
    assert!(r.checks.iter().all(|c| c.residual <= 1e-12));
}

#[test]
fn cubic_conjugacy_symmetry() {
    let k = cubic_conjugacy(3);
    let f = k.pullback_field(&VectorField::linear(-DMatrix::<f64>::identity(3, 3)));
    let samp = StateSampler::uniform_box(&[-1.5; 3], &[1.5; 3], 20, 0.0, 9);
    assert!(k.inverse_defect(&samp) < 1e-12);
    let r = check_equivariance(&f, &[GroupElement::Nonlinear(cubic_doubling(3))], &samp, None);
    assert!(r.passed, "{:?}", r.checks);
}

#[test]
fn forced_scalar_cauchy_ratio() {
    let f = forced_scalar();
    let samp = StateSampler::uniform_box(&[-2.0], &[2.0], 10, 0.0, 1).with_times(&[0.0, 0.3, 0.77]);
    assert!(check_temporal_symmetry(&f, 1.0, &samp).unwrap().passed);
    assert!(!check_temporal_symmetry(&f, 0.7, &samp).unwrap().passed);
    let c = cauchy_diagnostics(&f, &DVector::from_element(1, 2.0), 1.0, 8, 0.01, &Space::euclidean(1)).unwrap();
    assert!(c.geometric);
    assert!(c.ratios.iter().all(|r| (r - (-1.0f64).exp()).abs() < 1e-6), "{:?}", c.ratios);
}
