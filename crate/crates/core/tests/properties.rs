use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;
use wcontract::flows::{integrate, IntegrationOptions};
use wcontract::linalg::spectral_abscissa;
use wcontract::measures::{mu, weighted_rate};
use wcontract::pde::Discretization;
use wcontract::weights::mean_projector;
use wcontract::{Boundary, Grid, LinearOp, NormKind, Space, VectorField, WeightFamily};

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(1.5), Just(2.0), Just(3.0), Just(4.0), Just(f64::INFINITY)]
}

fn exact_exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(2.0), Just(f64::INFINITY)]
}

fn vec_of(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, n)
}

fn square(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    vec_of(n * n).prop_map(move |v| DMatrix::from_vec(n, n, v))
}

fn sobolev_space(n: usize, k: u32, p: f64) -> Space {
    let grid = Grid::new(vec![n], vec![1.0 / n as f64], Boundary::Periodic, 1).unwrap();
    Space::new(grid, NormKind::SobolevKp { k, p }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn sip_axioms_on_lp(p in exponent(), (u, v, w) in (1usize..7).prop_flat_map(|n| (vec_of(n), vec_of(n), vec_of(n))), a in 0.0..4.0f64) {
        let s = Space::lp(u.len(), p);
        let (nu, nv) = (s.norm(&u), s.norm(&v));
        let vw: Vec<f64> = v.iter().zip(&w).map(|(x, y)| x + y).collect();
        let au: Vec<f64> = u.iter().map(|x| a * x).collect();
        let av: Vec<f64> = v.iter().map(|x| a * x).collect();
        let tol = 1e-10 * (1.0 + nu * (nv + s.norm(&w)) * (1.0 + a));
        prop_assert!((s.sip(&u, &u) - nu * nu).abs() <= tol);
        prop_assert!(s.sip(&u, &v).abs() <= nu * nv + tol);
        prop_assert!(s.sip(&u, &vw) <= s.sip(&u, &v) + s.sip(&u, &w) + tol);
        prop_assert!((a * s.sip(&u, &v) - s.sip(&au, &v)).abs() <= tol);
        prop_assert!((a * s.sip(&u, &v) - s.sip(&u, &av)).abs() <= tol);
    }

    #[test]
    fn sip_axioms_on_sobolev(k in 0u32..3, p in exponent(), (u, v) in (4usize..10).prop_flat_map(|n| (vec_of(n), vec_of(n)))) {
        let s = sobolev_space(u.len(), k, p);
        let (nu, nv) = (s.norm(&u), s.norm(&v));
        let tol = 1e-9 * (1.0 + nu * nu + nu * nv);
        prop_assert!((s.sip(&u, &u) - nu * nu).abs() <= tol);
        prop_assert!(s.sip(&u, &v).abs() <= nu * nv + tol);
        let uv: Vec<f64> = u.iter().zip(&v).map(|(x, y)| x + y).collect();
        prop_assert!(s.norm(&uv) <= nu + nv + 1e-12 * (1.0 + nu + nv));
    }

    #[test]
    fn measure_invariants(p in exact_exponent(), (a, b) in (2usize..6).prop_flat_map(|n| (square(n), square(n))), c in 0.0..3.0f64, shift in -2.0..2.0f64) {
        let n = a.nrows();
        let s = Space::lp(n, p);
        let m = |x: &DMatrix<f64>| mu(&LinearOp::from(x.clone()), &s).unwrap().value;
        let tol = 1e-9 * (1.0 + a.amax() + b.amax());
        prop_assert!(m(&(&a + &b)) <= m(&a) + m(&b) + tol);
        prop_assert!((m(&(&a * c)) - c * m(&a)).abs() <= tol * (1.0 + c));
        prop_assert!((m(&(&a + DMatrix::identity(n, n) * shift)) - m(&a) - shift).abs() <= tol);
        prop_assert!(m(&a) >= spectral_abscissa(&a) - tol);
        prop_assert!(m(&a) >= -m(&(-&a)) - tol);
    }

    #[test]
    fn weighted_rate_ignores_weight_scale(p in exact_exponent(), a in square(3), d in prop::collection::vec(0.2..5.0f64, 3), c in 0.1..10.0f64) {
        let rate = |w: &[f64]| {
            let th = WeightFamily::diagonal(w, None).unwrap();
            weighted_rate(&LinearOp::from(a.clone()), &th, 0.0, &DVector::zeros(3), &Space::lp(3, p)).unwrap().value
        };
        let scaled: Vec<f64> = d.iter().map(|x| x * c).collect();
        prop_assert!((rate(&d) - rate(&scaled)).abs() <= 1e-9 * (1.0 + a.amax() * 25.0));
    }

    #[test]
    fn linear_flow_matches_matrix_exponential(a in square(3), u0 in vec_of(3)) {
        let u0 = DVector::from_vec(u0);
        let tr = integrate(&VectorField::linear(a.clone()), &u0, &IntegrationOptions::fixed(0.0, 1.0, 1e-3)).unwrap();
        let exact = a.exp() * &u0;
        prop_assert!((tr.final_state() - &exact).amax() <= 1e-8 * (1.0 + exact.amax()));
    }

    #[test]
    fn flow_respects_unweighted_growth_bound(p in exact_exponent(), a in square(3), u0 in vec_of(3), v0 in vec_of(3)) {
        let s = Space::lp(3, p);
        let lam = mu(&LinearOp::from(a.clone()), &s).unwrap().value;
        let f = VectorField::linear(a);
        let opts = IntegrationOptions::fixed(0.0, 1.0, 1e-3).every(0.1);
        let (x, y) = (integrate(&f, &DVector::from_vec(u0), &opts).unwrap(), integrate(&f, &DVector::from_vec(v0), &opts).unwrap());
        let d0 = s.norm((&x.states[0] - &y.states[0]).as_slice());
        for (t, (ux, uy)) in x.times.iter().zip(x.states.iter().zip(&y.states)) {
            prop_assert!(s.norm((ux - uy).as_slice()) <= (lam * t).exp() * d0 * (1.0 + 1e-8) + 1e-12);
        }
    }

    #[test]
    fn dirichlet_poincare_inequality(n in 3usize..24, phi in vec_of(24)) {
        let d = Discretization::new(1, n, Boundary::Dirichlet).unwrap();
        let l = d.dense_laplacian();
        let phi = DVector::from_column_slice(&phi[..n]);
        let lam_min = d.closed_form_gap();
        prop_assert!(phi.dot(&(&l * &phi)) <= -lam_min * phi.norm_squared() * (1.0 - 1e-10) + 1e-12);
    }
}

#[test]
fn neumann_kernel_and_gap() {
    for n in [4, 9, 16, 33] {
        let d = Discretization::new(1, n, Boundary::Neumann).unwrap();
        let l = d.dense_laplacian();
        assert!((&l * DVector::from_element(n, 1.0)).amax() <= 1e-12 * n as f64 * n as f64);
        let mut ev: Vec<f64> = SymmetricEigen::new(l).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!((-ev[1] - d.closed_form_gap()).abs() <= 1e-8 * d.closed_form_gap());
    }
}

#[test]
fn mean_projector_is_idempotent_and_kills_variation() {
    let p = mean_projector(5, 2);
    assert!((&p * &p - &p).amax() < 1e-14);
    let q = DMatrix::identity(10, 10) - &p;
    let const_per_component = DVector::from_fn(10, |i, _| if i < 5 { 3.0 } else { -1.0 });
    assert!((&q * const_per_component).amax() < 1e-14);
}
