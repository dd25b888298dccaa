//! Nonlinear Poisson problem Δu + f(u) = 0 on the unit cube with zero
//! Dirichlet data, solved as the equilibrium of the gradient flow.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{contract_err, Error, Result};
use crate::flows::{integrate, IntegrationOptions, VectorField};
use crate::grid::Boundary;
use crate::linalg::sym_max_eigen;
use crate::measures::{nonlinear_rate, Method};
use crate::report::{ContractionReport, Diagnostic, HypothesisCheck, Table};
use crate::sampler::StateSampler;
use crate::sip::NormKind;
use crate::weights::WeightFamily;

use super::{diffusive_dt, random_state, Discretization};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoissonConfig {
    pub dims: usize,
    pub n: usize,
    /// f(u) = c·sin(u) + s(x).
    pub c: f64,
    /// s(x) = amplitude·Π_d sin(πx_d).
    pub source_amplitude: f64,
    pub tol: f64,
    pub runs: usize,
    pub initial_amplitude: f64,
    pub cfl: f64,
    pub max_time: f64,
    pub samples: usize,
    /// Grid sizes of the 1D refinement table for λ(Ω).
    pub refinement: Vec<usize>,
}

impl Default for PoissonConfig {
    fn default() -> Self {
        Self {
            dims: 1,
            n: 32,
            c: 5.0,
            source_amplitude: 10.0,
            tol: 1e-10,
            runs: 3,
            initial_amplitude: 3.0,
            cfl: 0.5,
            max_time: 200.0,
            samples: 8,
            refinement: vec![8, 16, 32, 64, 128],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonReport {
    /// Holds the condition sup M[Df] < λ(Ω); the rate is that of the flow.
    pub certificate: ContractionReport,
    pub existence_certified: bool,
    pub note: Option<String>,
    /// |max eigenvalue of Δ_h|.
    pub lambda_omega: f64,
    pub lambda_closed_form: f64,
    pub df_rate: f64,
    pub converged: Vec<bool>,
    pub final_times: Vec<f64>,
    /// Largest max-norm distance between the computed fixed points.
    pub max_pairwise_distance: f64,
    /// ‖Δ_h u* + f(u*)‖_∞ of the first run.
    pub residual: f64,
    /// n, h, λ closed form, λ eigensolve, π² − λ.
    pub refinement: Table,
    /// x (first axis) and u*.
    pub solution: Table,
}

fn source(disc: &Discretization, amplitude: f64) -> DVector<f64> {
    DVector::from_iterator(disc.n_points(), disc.points().iter().map(|x| amplitude * x.iter().map(|xi| (PI * xi).sin()).product::<f64>()))
}

pub fn nonlinear_poisson_experiment(cfg: &PoissonConfig, seed: u64) -> Result<PoissonReport> {
    if cfg.n < 3 || cfg.runs == 0 || !(cfg.tol > 0.0) || !(cfg.cfl > 0.0) || !(cfg.max_time > 0.0) {
        return contract_err("poisson experiment needs n >= 3, runs >= 1, and positive tol, cfl and max_time");
    }
    let disc = Discretization::new(cfg.dims, cfg.n, Boundary::Dirichlet)?;
    let np = disc.n_points();
    let space = disc.space(1, NormKind::Lp { p: 2.0 })?;
    let lap_dense = disc.dense_laplacian();
    let (lam_max, _, eig_res) = sym_max_eigen(&lap_dense)?;
    let lambda_omega = -lam_max;
    let c = cfg.c;
    let s = source(&disc, cfg.source_amplitude);
    let lap = disc.laplacian.clone();
    let df_field = VectorField::new(np, "c sin u + s", {
        let s = s.clone();
        move |_, u| u.map(|x| c * x.sin()) + &s
    })
    .with_jacobian(move |_, u| DMatrix::from_diagonal(&u.map(|x| c * x.cos())));
    let (g1, g2, l2) = (df_field.clone(), df_field.clone(), lap_dense.clone());
    let flow = VectorField::new(np, "poisson gradient flow", move |t, u| lap.apply(u) + g1.eval(t, u)).with_jacobian(move |t, u| &l2 + g2.jacobian(t, u));

    let mut states = vec![DVector::zeros(np)];
    states.extend((0..cfg.samples).map(|k| random_state(np, PI, seed.wrapping_add(200 + k as u64))));
    let sampler = StateSampler::from_states(0.0, states, "zero state and random states in [-pi, pi]").with_seed(seed);
    let identity = WeightFamily::identity(np);
    let df_rate = nonlinear_rate(&df_field, &identity, &space, &sampler)?.value;
    let flow_rate = nonlinear_rate(&flow, &identity, &space, &sampler)?;
    let condition = HypothesisCheck::below("rate_condition", df_rate - lambda_omega, 0.0, sampler.len()).with_seed(Some(seed));
    let lambda = flow_rate.value;
    let mut certificate = ContractionReport::from_checks(flow_rate, vec![condition], &[], format!("a unique equilibrium exists and attracts every solution at rate {lambda}"));
    certificate.seed = Some(seed);
    certificate.diagnostics.push(Diagnostic::new("lambda_omega", lambda_omega, Method::Eigen));
    certificate.diagnostics.push(Diagnostic::new("eigen_residual", eig_res, Method::Eigen));
    let existence_certified = certificate.is_certified();

    let dt = diffusive_dt(disc.h, cfg.dims, 1.0, cfg.cfl);
    let chunk = 0.5;
    let dt = chunk / (chunk / dt).ceil();
    let residual_of = |u: &DVector<f64>| flow.eval(0.0, u).amax();
    let mut fixed = Vec::with_capacity(cfg.runs);
    let (mut converged, mut final_times) = (Vec::new(), Vec::new());
    for r in 0..cfg.runs {
        let mut u = random_state(np, cfg.initial_amplitude, seed.wrapping_add(r as u64));
        let mut t = 0.0;
        while residual_of(&u) > cfg.tol && t < cfg.max_time {
            let tr = integrate(&flow, &u, &IntegrationOptions::fixed(t, t + chunk, dt).every(chunk))?;
            u = tr.final_state().clone();
            t += chunk;
        }
        converged.push(residual_of(&u) <= cfg.tol);
        final_times.push(t);
        fixed.push(u);
    }
    let mut max_pairwise_distance: f64 = 0.0;
    for i in 0..fixed.len() {
        for j in i + 1..fixed.len() {
            max_pairwise_distance = max_pairwise_distance.max((&fixed[i] - &fixed[j]).amax());
        }
    }
    let residual = residual_of(&fixed[0]);
    if !residual.is_finite() {
        return Err(Error::Numerical("gradient flow produced a non-finite state".into()));
    }

    let mut refinement = Table::new(&["n", "h", "lambda_closed_form", "lambda_eigen", "pi_squared_gap"]);
    for &m in &cfg.refinement {
        let d = Discretization::new(1, m, Boundary::Dirichlet)?;
        let (l, _, _) = sym_max_eigen(&d.dense_laplacian())?;
        refinement.push(vec![m as f64, d.h, d.closed_form_gap(), -l, PI * PI - d.closed_form_gap()]);
    }
    let mut solution = Table::new(&["x", "u"]);
    for (x, v) in disc.points().iter().zip(fixed[0].iter()) {
        solution.push(vec![x[0], *v]);
    }
    Ok(PoissonReport {
        note: (!existence_certified).then(|| "existence not certified".to_string()),
        certificate,
        existence_certified,
        lambda_omega,
        lambda_closed_form: disc.closed_form_gap(),
        df_rate,
        converged,
        final_times,
        max_pairwise_distance,
        residual,
        refinement,
        solution,
    })
}
