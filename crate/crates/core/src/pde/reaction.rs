//! Reaction-diffusion u_t = DΔu + F(u) with a pointwise reaction F.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{contract_err, Result};
use crate::flows::{integrate, ExponentFit, IntegrationOptions, VectorField};
use crate::geometry::{certify_subspace_contraction, check_subspace_invariance, Projector};
use crate::grid::Boundary;
use crate::linalg::LinearOp;
use crate::measures::{nonlinear_rate, weighted_rate, RateEstimate};
use crate::report::{ContractionReport, HypothesisCheck, Table};
use crate::sampler::StateSampler;
use crate::sip::NormKind;

use super::{diffusive_dt, fit_window, random_state, Discretization};

type PointMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type PointJacobian = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// A spatially local reaction acting on the component vector at each point.
#[derive(Clone)]
pub struct Reaction {
    pub label: String,
    pub components: usize,
    f: PointMap,
    df: PointJacobian,
}

impl fmt::Debug for Reaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Reaction").field("label", &self.label).field("components", &self.components).finish()
    }
}

impl Reaction {
    pub fn new(
        label: impl Into<String>,
        components: usize,
        f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        df: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { label: label.into(), components, f: Arc::new(f), df: Arc::new(df) }
    }

    pub fn zero(components: usize) -> Self {
        Self::new("zero", components, move |u| vec![0.0; u.len()], move |u| DMatrix::zeros(u.len(), u.len()))
    }

    /// u − u³.
    pub fn allen_cahn() -> Self {
        Self::new("allen-cahn", 1, |u| vec![u[0] - u[0].powi(3)], |u| DMatrix::from_element(1, 1, 1.0 - 3.0 * u[0] * u[0]))
    }

    /// Activator u and inhibitor v: (u − v − u³, a·u − b·v).
    pub fn activator_inhibitor(a: f64, b: f64) -> Self {
        Self::new(
            format!("activator-inhibitor(a={a}, b={b})"),
            2,
            move |u| vec![u[0] - u[1] - u[0].powi(3), a * u[0] - b * u[1]],
            move |u| DMatrix::from_row_slice(2, 2, &[1.0 - 3.0 * u[0] * u[0], -1.0, a, -b]),
        )
    }

    pub fn from_spec(spec: &ReactionSpec) -> Self {
        match *spec {
            ReactionSpec::Zero { components } => Self::zero(components),
            ReactionSpec::AllenCahn => Self::allen_cahn(),
            ReactionSpec::ActivatorInhibitor { a, b } => Self::activator_inhibitor(a, b),
        }
    }

    fn gather(u: &DVector<f64>, np: usize, m: usize, k: usize) -> Vec<f64> {
        (0..m).map(|c| u[c * np + k]).collect()
    }

    /// The stacked field F on a grid of `np` points.
    pub fn field(&self, np: usize) -> VectorField {
        let m = self.components;
        let (f, df) = (self.f.clone(), self.df.clone());
        VectorField::new(np * m, self.label.clone(), move |_, u| {
            let mut out = DVector::zeros(u.len());
            for k in 0..np {
                for (c, v) in f(&Self::gather(u, np, m, k)).into_iter().enumerate() {
                    out[c * np + k] = v;
                }
            }
            out
        })
        .with_jacobian(move |_, u| {
            let mut j = DMatrix::zeros(u.len(), u.len());
            for k in 0..np {
                let d = df(&Self::gather(u, np, m, k));
                for a in 0..m {
                    for b in 0..m {
                        j[(a * np + k, b * np + k)] = d[(a, b)];
                    }
                }
            }
            j
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReactionSpec {
    Zero { components: usize },
    AllenCahn,
    ActivatorInhibitor { a: f64, b: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReactionConfig {
    pub dims: usize,
    pub n: usize,
    /// Diffusivity of each component.
    pub alphas: Vec<f64>,
    pub reaction: ReactionSpec,
    pub t_end: f64,
    pub fit_start: f64,
    pub cfl: f64,
    /// Amplitude of the random initial perturbation of the zero state.
    pub amplitude: f64,
    /// Subtract the per-component mean from the initial state.
    pub remove_mean: bool,
    /// Random states in [−box, box] used for the sampled rates, in addition to 0.
    pub samples: usize,
    pub sample_box: f64,
    pub output_rate: f64,
}

impl Default for ReactionConfig {
    fn default() -> Self {
        Self {
            dims: 1,
            n: 16,
            alphas: vec![0.5],
            reaction: ReactionSpec::AllenCahn,
            t_end: 2.0,
            fit_start: 0.3,
            cfl: 0.5,
            amplitude: 0.01,
            remove_mean: true,
            samples: 8,
            sample_box: 1.0,
            output_rate: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReactionReport {
    /// Subspace certificate of the full field, with condition (2) attached.
    pub certificate: ContractionReport,
    pub condition_1: HypothesisCheck,
    pub condition_2: HypothesisCheck,
    /// Sampled M_Q[DF].
    pub reaction_rate: RateEstimate,
    /// M_Q[Δ_h].
    pub laplacian_rate: f64,
    pub lambda_certified: f64,
    pub fit: Option<ExponentFit>,
    pub q_initial: f64,
    pub q_final: f64,
    /// Fitted ‖Qu‖ exponent is negative and ‖Qu(t_end)‖ < 0.1‖Qu(0)‖.
    pub homogenized: bool,
    pub predicted: bool,
    pub dt: f64,
    /// t, ‖Qu‖, and the mean of each component.
    pub table: Table,
}

pub fn reaction_diffusion_experiment(cfg: &ReactionConfig, seed: u64) -> Result<ReactionReport> {
    let reaction = Reaction::from_spec(&cfg.reaction);
    let m = reaction.components;
    if cfg.alphas.len() != m || cfg.alphas.iter().any(|a| !(*a >= 0.0)) {
        return contract_err(format!("need {m} nonnegative diffusivities, got {:?}", cfg.alphas));
    }
    if cfg.n < 4 || !(cfg.t_end > cfg.fit_start) || !(cfg.cfl > 0.0) || !(cfg.output_rate > 0.0) {
        return contract_err("reaction-diffusion needs n >= 4, t_end > fit_start, cfl > 0 and output_rate > 0");
    }
    let disc = Discretization::new(cfg.dims, cfg.n, Boundary::Neumann)?;
    let np = disc.n_points();
    let dim = np * m;
    let space = disc.space(m, NormKind::Lp { p: 2.0 })?;
    let proj = Projector::mean(np, m);
    let diff = disc.diffusion(&cfg.alphas);
    let reaction_field = reaction.field(np);
    let diff_dense = LinearOp::Sparse(diff.clone()).to_dense();
    let (r1, r2) = (reaction_field.clone(), reaction_field.clone());
    let d_op = LinearOp::Sparse(diff);
    let field = VectorField::new(dim, format!("reaction-diffusion with {}", reaction.label), move |t, u| d_op.apply(u) + r1.eval(t, u))
        .with_jacobian(move |t, u| &diff_dense + r2.jacobian(t, u));

    let mut states = vec![DVector::zeros(dim)];
    states.extend((0..cfg.samples).map(|k| random_state(dim, cfg.sample_box, seed.wrapping_add(100 + k as u64))));
    let sampler = StateSampler::from_states(0.0, states, "zero state and random box states").with_seed(seed);

    let condition_1 = check_subspace_invariance(&reaction_field, &proj, &sampler);
    let q_weight = proj.weight()?;
    let reaction_rate = nonlinear_rate(&reaction_field, &q_weight, &space, &sampler)?;
    let scalar_space = disc.space(1, NormKind::Lp { p: 2.0 })?;
    let laplacian_rate = weighted_rate(&disc.laplacian, &Projector::mean(np, 1).weight()?, 0.0, &DVector::zeros(np), &scalar_space)?.value;
    let min_alpha = cfg.alphas.iter().copied().fold(f64::INFINITY, f64::min);
    let margin = reaction_rate.value - min_alpha * laplacian_rate.abs();
    let condition_2 = HypothesisCheck::below("condition_2", margin, 0.0, reaction_rate.sample_count).with_seed(Some(seed));

    let mut certificate = certify_subspace_contraction(&field, &proj, &space, &sampler, None, None)?;
    certificate.hypotheses.push(condition_2.clone());
    if !condition_2.passed {
        certificate.failing.push(condition_2.name.clone());
        certificate.status = crate::report::CertificateStatus::Withheld;
        certificate.conclusion = None;
    }
    let lambda_certified = certificate.rate.value;

    let mut u0 = random_state(dim, cfg.amplitude, seed);
    if cfg.remove_mean {
        u0 = proj.q() * u0;
    }
    let alpha_max = cfg.alphas.iter().copied().fold(0.0, f64::max).max(1e-12);
    let out_dt = 1.0 / cfg.output_rate;
    let dt = diffusive_dt(disc.h, cfg.dims, alpha_max, cfg.cfl).min(0.05);
    let dt = out_dt / (out_dt / dt).ceil();
    let tr = integrate(&field, &u0, &IntegrationOptions::fixed(0.0, cfg.t_end, dt).every(out_dt))?;
    let mut header = vec!["t".to_string(), "q_norm".to_string()];
    header.extend((0..m).map(|c| format!("mean_{c}")));
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::new(&hdr);
    let mut q = Vec::with_capacity(tr.len());
    for (t, u) in tr.times.iter().zip(&tr.states) {
        let qn = space.norm((proj.q() * u).as_slice());
        q.push(qn);
        let mut row = vec![*t, qn];
        row.extend((0..m).map(|c| u.rows(c * np, np).mean()));
        table.push(row);
    }
    let fit = fit_window(&tr.times, &q, cfg.fit_start, cfg.t_end, 1e-300);
    let (q_initial, q_final) = (q[0], *q.last().unwrap());
    let homogenized = fit.is_some_and(|f| f.slope < 0.0) && q_final < 0.1 * q_initial;
    Ok(ReactionReport {
        predicted: certificate.is_certified(),
        certificate,
        condition_1,
        condition_2,
        reaction_rate,
        laplacian_rate,
        lambda_certified,
        fit,
        q_initial,
        q_final,
        homogenized,
        dt,
        table,
    })
}
