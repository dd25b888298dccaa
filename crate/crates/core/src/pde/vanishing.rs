//! Vanishing-regularization limits of periodic conservation laws.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract_err, Result};
use crate::flows::{integrate, IntegrationOptions, VectorField};
use crate::grid::{Boundary, Grid};
use crate::measures::{nonlinear_rate, Method};
use crate::report::{HypothesisCheck, Table};
use crate::sampler::StateSampler;
use crate::sip::{NormKind, Space};
use crate::weights::WeightFamily;

type FieldMaker = Arc<dyn Fn(f64) -> VectorField + Send + Sync>;
type Flux = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Viscous Burgers u_t + (u²/2)_x = εu_xx on the periodic unit interval with
/// n nodes: centered conservative differences for ε > 0, local Lax–Friedrichs
/// flux for ε = 0.
pub fn burgers(n: usize, eps: f64) -> VectorField {
    let h = 1.0 / n as f64;
    let (l, r) = (move |i: usize| (i + n - 1) % n, move |i: usize| (i + 1) % n);
    if eps == 0.0 {
        return VectorField::new(n, "inviscid burgers (lax-friedrichs)", move |_, u| {
            let flux = |a: f64, b: f64| 0.25 * (a * a + b * b) - 0.5 * a.abs().max(b.abs()) * (b - a);
            DVector::from_fn(n, |i, _| -(flux(u[i], u[r(i)]) - flux(u[l(i)], u[i])) / h)
        });
    }
    let (d, s) = (eps / (h * h), 0.25 / h);
    VectorField::new(n, format!("viscous burgers(eps={eps})"), move |_, u| {
        DVector::from_fn(n, |i, _| -s * (u[r(i)] * u[r(i)] - u[l(i)] * u[l(i)]) + d * (u[r(i)] - 2.0 * u[i] + u[l(i)]))
    })
    .with_jacobian(move |_, u| {
        let mut j = DMatrix::zeros(n, n);
        for i in 0..n {
            j[(i, i)] = -2.0 * d;
            j[(i, r(i))] += d - 2.0 * s * u[r(i)];
            j[(i, l(i))] += d + 2.0 * s * u[l(i)];
        }
        j
    })
}

/// u_t + u_x = εu_xx with centered differences.
pub fn advection_diffusion(n: usize, eps: f64) -> VectorField {
    let h = 1.0 / n as f64;
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let (l, r) = ((i + n - 1) % n, (i + 1) % n);
        a[(i, i)] -= 2.0 * eps / (h * h);
        a[(i, r)] += eps / (h * h) - 0.5 / h;
        a[(i, l)] += eps / (h * h) + 0.5 / h;
    }
    VectorField::linear(a)
}

/// f_ε for a decreasing schedule of ε, with the flux of the limiting
/// conservation law when one exists.
#[derive(Clone)]
pub struct RegularizedFamily {
    pub label: String,
    pub regularizer: String,
    pub n: usize,
    pub schedule: Vec<f64>,
    make: FieldMaker,
    flux: Option<Flux>,
}

impl fmt::Debug for RegularizedFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RegularizedFamily").field("label", &self.label).field("n", &self.n).field("schedule", &self.schedule).finish()
    }
}

impl RegularizedFamily {
    pub fn new(label: impl Into<String>, regularizer: impl Into<String>, n: usize, schedule: Vec<f64>, make: impl Fn(f64) -> VectorField + Send + Sync + 'static) -> Self {
        Self { label: label.into(), regularizer: regularizer.into(), n, schedule, make: Arc::new(make), flux: None }
    }

    pub fn with_flux(mut self, flux: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.flux = Some(Arc::new(flux));
        self
    }

    pub fn burgers(n: usize, schedule: Vec<f64>) -> Self {
        Self::new("burgers", "eps * u_xx", n, schedule, move |e| burgers(n, e)).with_flux(|u| 0.5 * u * u)
    }

    pub fn advection(n: usize, schedule: Vec<f64>) -> Self {
        Self::new("linear advection", "eps * u_xx", n, schedule, move |e| advection_diffusion(n, e)).with_flux(|u| u)
    }

    /// A family that ignores ε.
    pub fn frozen(n: usize, eps: f64, schedule: Vec<f64>) -> Self {
        Self::new(format!("burgers frozen at eps={eps}"), "none", n, schedule, move |_| burgers(n, eps)).with_flux(|u| 0.5 * u * u)
    }

    pub fn from_spec(spec: &FamilySpec, n: usize, schedule: Vec<f64>) -> Self {
        match *spec {
            FamilySpec::Burgers => Self::burgers(n, schedule),
            FamilySpec::Advection => Self::advection(n, schedule),
            FamilySpec::Frozen { eps } => Self::frozen(n, eps, schedule),
        }
    }

    pub fn field(&self, eps: f64) -> VectorField {
        (self.make)(eps)
    }

    /// max over probes of ‖f_ε(u) − f_0(u)‖_∞ for every ε of the schedule.
    pub fn limit_residuals(&self, probes: &[DVector<f64>]) -> Vec<f64> {
        let f0 = self.field(0.0);
        self.schedule
            .iter()
            .map(|&e| {
                let fe = self.field(e);
                probes.iter().map(|u| (fe.eval(0.0, u) - f0.eval(0.0, u)).amax()).fold(0.0, f64::max)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Burgers,
    Advection,
    Frozen { eps: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VanishingConfig {
    pub family: FamilySpec,
    pub n: usize,
    pub schedule: Vec<f64>,
    pub p: f64,
    pub t_end: f64,
    pub output_dt: f64,
    pub cfl: f64,
    /// u0(x) = offset + amplitude·sin(2πx).
    pub initial_amplitude: f64,
    pub initial_offset: f64,
    /// Uniform rate bound λ of hypothesis (1).
    pub lambda_bound: f64,
    /// Bound c of hypothesis (2); defaults to 2‖u0‖_p.
    pub c_bound: Option<f64>,
    pub rate_samples: usize,
    pub test_functions: usize,
    /// Horizon of the shifted-initial-condition spot check.
    pub shift_horizon: f64,
}

impl Default for VanishingConfig {
    fn default() -> Self {
        Self {
            family: FamilySpec::Burgers,
            n: 256,
            schedule: vec![0.1, 0.05, 0.025, 0.0125],
            p: 1.0,
            t_end: 0.5,
            output_dt: 0.0025,
            cfl: 0.4,
            initial_amplitude: 1.0,
            initial_offset: 0.0,
            lambda_bound: 1e-8,
            c_bound: None,
            rate_samples: 6,
            test_functions: 10,
            shift_horizon: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VanishingReport {
    pub family: String,
    pub epsilons: Vec<f64>,
    pub rates: Vec<f64>,
    pub rate_method: Method,
    pub sup_norms: Vec<f64>,
    pub c_bound: f64,
    pub translation_residuals: Vec<f64>,
    /// ‖u_ε(δ) − u0‖_p.
    pub continuity: Vec<f64>,
    pub delta: f64,
    pub hypotheses: Vec<HypothesisCheck>,
    pub failing: Vec<String>,
    /// ‖u_{ε_j} − u_{ε_{j+1}}‖ in L^p([0,T] × T).
    pub differences: Vec<f64>,
    /// Successive differences strictly decrease. Observational: the full
    /// sequence is tested, which is stronger than a convergent subsequence.
    pub cauchy_trend: bool,
    /// Relative weak-form residual of each u_ε.
    pub weak_residuals: Vec<f64>,
    /// Relative weak-form residual of the extrapolated limit.
    pub limit_weak_residual: Option<f64>,
    /// B(0, T) = b²/(λp)(e^{λpT} − 1) with b = 1 and λ the largest rate.
    pub bound_function: f64,
    /// ε, rate, sup norm, continuity, difference to the next level.
    pub table: Table,
    /// x, final u_ε for every ε, extrapolated limit.
    pub profiles: Table,
    /// Final extrapolated state.
    #[serde(skip)]
    pub limit_final: DVector<f64>,
}

/// B(s, t) = b²/(λp)(e^{λpt} − e^{λps}), continuous at λ = 0.
pub fn bound_function(b: f64, lambda: f64, p: f64, s: f64, t: f64) -> f64 {
    let lp = lambda * if p.is_infinite() { 1.0 } else { p };
    if lp.abs() < 1e-12 {
        return b * b * (t - s);
    }
    b * b / lp * ((lp * t).exp() - (lp * s).exp())
}

struct TestFunction {
    x0: f64,
    t0: f64,
    kappa: f64,
    sigma: f64,
}

impl TestFunction {
    /// (ψ, ψ_t, ψ_x) for ψ = exp(κ(cos 2π(x − x0) − 1)) · exp(−(t − t0)²/(2σ²)).
    fn eval(&self, t: f64, x: f64) -> (f64, f64, f64) {
        let a = TAU * (x - self.x0);
        let psi = (self.kappa * (a.cos() - 1.0)).exp() * (-(t - self.t0).powi(2) / (2.0 * self.sigma * self.sigma)).exp();
        (psi, -psi * (t - self.t0) / (self.sigma * self.sigma), -psi * self.kappa * TAU * a.sin())
    }
}

fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; times.len()];
    for k in 0..times.len().saturating_sub(1) {
        let d = 0.5 * (times[k + 1] - times[k]);
        w[k] += d;
        w[k + 1] += d;
    }
    w
}

/// max over test functions of |R(ψ)| / Σ|terms| with
/// R(ψ) = ∫∫ (uψ_t + F(u)ψ_x) + ∫u(0)ψ(0) − ∫u(T)ψ(T).
fn weak_residual(times: &[f64], states: &[DVector<f64>], flux: &dyn Fn(f64) -> f64, tests: &[TestFunction]) -> f64 {
    let n = states[0].len();
    let h = 1.0 / n as f64;
    let w = trapezoid_weights(times);
    let last = times.len() - 1;
    tests
        .iter()
        .map(|tf| {
            let (mut r, mut s) = (0.0, 0.0);
            for (k, (t, u)) in times.iter().zip(states).enumerate() {
                for i in 0..n {
                    let (psi, pt, px) = tf.eval(*t, i as f64 * h);
                    let (a, b) = (u[i] * pt, flux(u[i]) * px);
                    r += w[k] * h * (a + b);
                    s += w[k] * h * (a.abs() + b.abs());
                    if k == 0 {
                        r += h * u[i] * psi;
                        s += h * (u[i] * psi).abs();
                    }
                    if k == last {
                        r -= h * u[i] * psi;
                        s += h * (u[i] * psi).abs();
                    }
                }
            }
            if s == 0.0 {
                0.0
            } else {
                r.abs() / s
            }
        })
        .fold(0.0, f64::max)
}

fn step_for(cfg: &VanishingConfig, eps: f64, umax: f64, out_dt: f64) -> f64 {
    let h = 1.0 / cfg.n as f64;
    let mut dt = cfg.cfl * h / umax.max(1e-12);
    if eps > 0.0 {
        dt = dt.min(cfg.cfl * h * h / (2.0 * eps));
    }
    out_dt / (out_dt / dt).ceil()
}

fn lp_spacetime(times: &[f64], a: &[DVector<f64>], b: &[DVector<f64>], space: &Space) -> f64 {
    let p = space.p();
    let norms: Vec<f64> = a.iter().zip(b).map(|(x, y)| space.norm((x - y).as_slice())).collect();
    if p.is_infinite() {
        return norms.into_iter().fold(0.0, f64::max);
    }
    trapezoid_weights(times).iter().zip(&norms).map(|(w, v)| w * v.powf(p)).sum::<f64>().powf(1.0 / p)
}

pub fn vanishing_osl_experiment(family: &RegularizedFamily, u0: &DVector<f64>, cfg: &VanishingConfig, seed: u64) -> Result<VanishingReport> {
    let eps = &family.schedule;
    if eps.len() < 4 || eps.windows(2).any(|w| !(w[1] < w[0])) || eps.iter().any(|e| !(*e >= 0.0)) {
        return contract_err("the schedule needs at least 4 decreasing nonnegative levels");
    }
    if u0.len() != family.n || !(cfg.t_end > 0.0) || !(cfg.output_dt > 0.0) || !(cfg.p >= 1.0) {
        return contract_err("initial state, horizon, output step or exponent invalid");
    }
    let n = family.n;
    let grid = Grid::new(vec![n], vec![1.0 / n as f64], Boundary::Periodic, 1)?;
    let space = Space::new(grid, NormKind::Lp { p: cfg.p })?;
    let umax = u0.amax();
    let out_dt = cfg.t_end / (cfg.t_end / cfg.output_dt).round().max(1.0);
    let delta_dt = step_for(cfg, eps[0], umax, out_dt);
    let delta = 10.0 * delta_dt;
    let identity = WeightFamily::identity(n);
    let shift = (n / 8).max(1);
    let roll = |u: &DVector<f64>| DVector::from_fn(n, |i, _| u[(i + n - shift) % n]);
    let c_bound = cfg.c_bound.unwrap_or(2.0 * space.norm(u0.as_slice()));

    let mut rates = Vec::new();
    let mut method = Method::ClosedForm;
    let mut sup_norms = Vec::new();
    let mut translation_residuals = Vec::new();
    let mut continuity = Vec::new();
    let mut runs = Vec::new();
    for &e in eps {
        let f = family.field(e);
        let dt = step_for(cfg, e, umax, out_dt);
        let tr = integrate(&f, u0, &IntegrationOptions::fixed(0.0, cfg.t_end, dt).every(out_dt))?;
        let stride = (tr.len() / cfg.rate_samples.max(1)).max(1);
        let picks: Vec<DVector<f64>> = tr.states.iter().step_by(stride).cloned().collect();
        let r = nonlinear_rate(&f, &identity, &space, &StateSampler::from_states(0.0, picks, "states along the trajectory"))?;
        method = method.max(r.pointwise.unwrap_or(r.method));
        rates.push(r.value);
        sup_norms.push(tr.states.iter().map(|u| space.norm(u.as_slice())).fold(0.0, f64::max));
        let horizon = cfg.shift_horizon.min(cfg.t_end);
        let so = IntegrationOptions::fixed(0.0, horizon, dt);
        let a = integrate(&f, u0, &so)?;
        let b = integrate(&f, &roll(u0), &so)?;
        translation_residuals.push((roll(a.final_state()) - b.final_state()).amax());
        let c = integrate(&f, u0, &IntegrationOptions::fixed(0.0, delta, delta_dt))?;
        continuity.push(space.norm((c.final_state() - u0).as_slice()));
        runs.push(tr);
    }
    let lam_max = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cont_ref = *continuity.last().unwrap();
    let hypotheses = vec![
        HypothesisCheck::at_most("uniform_rate", lam_max, cfg.lambda_bound, eps.len() * cfg.rate_samples),
        HypothesisCheck::at_most("bounded_solution", sup_norms.iter().copied().fold(0.0, f64::max), c_bound, eps.len()),
        HypothesisCheck::at_most("translation_invariance", translation_residuals.iter().copied().fold(0.0, f64::max), 1e-10, eps.len()),
        HypothesisCheck::at_most("uniform_continuity", continuity.iter().copied().fold(0.0, f64::max), 2.0 * cont_ref, eps.len()),
    ];
    let failing = hypotheses.iter().filter(|h| !h.passed).map(|h| h.name.clone()).collect();

    let times = runs[0].times.clone();
    let differences: Vec<f64> = runs.windows(2).map(|w| lp_spacetime(&times, &w[0].states, &w[1].states, &space)).collect();
    let cauchy_trend = differences.windows(2).all(|w| w[1] < w[0]);

    let (m, l) = (runs.len() - 1, runs.len() - 2);
    let (el, em) = (eps[l], eps[m]);
    let wgt = em / (el - em);
    let limit: Vec<DVector<f64>> = runs[m].states.iter().zip(&runs[l].states).map(|(a, b)| a + (a - b) * wgt).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tests: Vec<TestFunction> = (0..cfg.test_functions)
        .map(|_| TestFunction {
            x0: rng.gen_range(0.0..1.0),
            t0: rng.gen_range(0.2..0.8) * cfg.t_end,
            kappa: rng.gen_range(1.0..4.0),
            sigma: rng.gen_range(0.1..0.2) * cfg.t_end,
        })
        .collect();
    let (weak_residuals, limit_weak_residual) = match &family.flux {
        Some(fl) => (runs.iter().map(|r| weak_residual(&times, &r.states, &**fl, &tests)).collect(), Some(weak_residual(&times, &limit, &**fl, &tests))),
        None => (Vec::new(), None),
    };

    let mut table = Table::new(&["eps", "rate", "sup_norm", "continuity", "difference_to_next"]);
    for k in 0..eps.len() {
        table.push(vec![eps[k], rates[k], sup_norms[k], continuity[k], differences.get(k).copied().unwrap_or(f64::NAN)]);
    }
    let mut header = vec!["x".to_string()];
    header.extend(eps.iter().map(|e| format!("u_eps_{e}")));
    header.push("limit".into());
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut profiles = Table::new(&hdr);
    let limit_final = limit.last().unwrap().clone();
    for i in 0..n {
        let mut row = vec![i as f64 / n as f64];
        row.extend(runs.iter().map(|r| r.final_state()[i]));
        row.push(limit_final[i]);
        profiles.push(row);
    }
    Ok(VanishingReport {
        family: family.label.clone(),
        epsilons: eps.clone(),
        rates,
        rate_method: method,
        sup_norms,
        c_bound,
        translation_residuals,
        continuity,
        delta,
        hypotheses,
        failing,
        differences,
        cauchy_trend,
        weak_residuals,
        limit_weak_residual,
        bound_function: bound_function(1.0, lam_max.max(0.0), cfg.p, 0.0, cfg.t_end),
        table,
        profiles,
        limit_final,
    })
}

/// u0(x) = offset + amplitude·sin(2πx) on n periodic nodes.
pub fn sine_initial(n: usize, amplitude: f64, offset: f64) -> DVector<f64> {
    DVector::from_fn(n, |i, _| offset + amplitude * (TAU * i as f64 / n as f64).sin())
}
