//! Zero-flux heat equation u_t = αΔu: contraction to the constants.

use serde::{Deserialize, Serialize};

use crate::error::{contract_err, Result};
use crate::flows::{integrate, ExponentFit, IntegrationOptions, VectorField};
use crate::geometry::{certify_subspace_contraction, Projector};
use crate::grid::Boundary;
use crate::report::{ContractionReport, Table};
use crate::sampler::StateSampler;
use crate::sip::NormKind;

use super::{diffusive_dt, fit_window, random_state, Discretization};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatConfig {
    pub dims: usize,
    pub n: usize,
    pub alpha: f64,
    pub t_end: f64,
    /// Start of the decay-fit window.
    pub fit_start: f64,
    pub cfl: f64,
    /// Recorded states per unit time.
    pub output_rate: f64,
    /// Start from a constant state instead of a random one.
    pub constant_initial: bool,
}

impl Default for HeatConfig {
    fn default() -> Self {
        Self { dims: 1, n: 16, alpha: 1.0, t_end: 1.0, fit_start: 0.3, cfl: 0.5, output_rate: 200.0, constant_initial: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatReport {
    pub certificate: ContractionReport,
    /// α·M_Q[Δ_h] from the certifier.
    pub lambda_certified: f64,
    /// −α(2/h²)(1 − cos(π/n)).
    pub lambda_closed_form: f64,
    pub fit: Option<ExponentFit>,
    pub fit_relative_error: f64,
    pub q_initial: f64,
    pub q_final: f64,
    /// max_t |mean(u(t)) − mean(u(0))|.
    pub mass_drift: f64,
    pub dt: f64,
    pub h: f64,
    /// t, ‖Qu‖, mean(u).
    pub table: Table,
}

pub fn heat_zero_flux_experiment(cfg: &HeatConfig, seed: u64) -> Result<HeatReport> {
    if cfg.n < 4 || !(cfg.alpha > 0.0) || !(cfg.t_end > cfg.fit_start) || !(cfg.cfl > 0.0) || !(cfg.output_rate > 0.0) {
        return contract_err("heat experiment needs n >= 4, alpha > 0, t_end > fit_start, cfl > 0 and output_rate > 0");
    }
    let disc = Discretization::new(cfg.dims, cfg.n, Boundary::Neumann)?;
    let np = disc.n_points();
    let space = disc.space(1, NormKind::Lp { p: 2.0 })?;
    let lap = disc.diffusion(&[cfg.alpha]);
    let f = VectorField::sparse_linear(lap);
    let proj = Projector::mean(np, 1);
    let sampler = StateSampler::from_states(0.0, (0..3).map(|k| random_state(np, 1.0, seed.wrapping_add(k))).collect(), "random grid states").with_seed(seed);
    let certificate = certify_subspace_contraction(&f, &proj, &space, &sampler, None, None)?;
    let lambda_certified = certificate.rate.value;
    let lambda_closed_form = -cfg.alpha * disc.closed_form_gap();

    let u0 = if cfg.constant_initial { nalgebra::DVector::from_element(np, 0.7) } else { random_state(np, 1.0, seed) };
    let dt = diffusive_dt(disc.h, cfg.dims, cfg.alpha, cfg.cfl);
    let out_dt = 1.0 / cfg.output_rate;
    let dt = out_dt / (out_dt / dt).ceil();
    let tr = integrate(&f, &u0, &IntegrationOptions::fixed(0.0, cfg.t_end, dt).every(out_dt))?;
    let mut table = Table::new(&["t", "q_norm", "mean"]);
    let m0 = u0.mean();
    let mut q = Vec::with_capacity(tr.len());
    let mut mass_drift: f64 = 0.0;
    for (t, u) in tr.times.iter().zip(&tr.states) {
        let qn = space.norm((proj.q() * u).as_slice());
        mass_drift = mass_drift.max((u.mean() - m0).abs());
        q.push(qn);
        table.push(vec![*t, qn, u.mean()]);
    }
    let fit = fit_window(&tr.times, &q, cfg.fit_start, cfg.t_end, 1e-300);
    let fit_relative_error = fit.map_or(f64::INFINITY, |f| (f.slope - lambda_certified).abs() / lambda_certified.abs());
    Ok(HeatReport {
        lambda_certified,
        lambda_closed_form,
        fit,
        fit_relative_error,
        q_initial: q[0],
        q_final: *q.last().unwrap(),
        mass_drift,
        dt,
        h: disc.h,
        table,
        certificate,
    })
}
