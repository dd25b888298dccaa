//! Vector fields, trajectory and variational integration, growth-bound
//! verification and maximum Lyapunov exponents.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::CsrMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{contract_err, dim_err, Error, Result};
use crate::linalg::{csr_mul, operator_norm, random_unit, LinearOp};
use crate::measures::{weighted_rate, Method};
use crate::report::Table;
use crate::sip::Space;
use crate::weights::WeightFamily;

pub type FieldFn = Arc<dyn Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;
pub type JvpFn = Arc<dyn Fn(f64, &DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type DiagnosticFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;

/// Right-hand side f(t, u) of du/dt = f(t, u).
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    tag: String,
    eval: FieldFn,
    jacobian: Option<JacobianFn>,
    jvp: Option<JvpFn>,
    diagnostics: Vec<(String, DiagnosticFn)>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("dim", &self.dim)
            .field("tag", &self.tag)
            .field("exact_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl VectorField {
    pub fn new(dim: usize, tag: impl Into<String>, eval: impl Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static) -> Self {
        Self { dim, tag: tag.into(), eval: Arc::new(eval), jacobian: None, jvp: None, diagnostics: Vec::new() }
    }

    pub fn with_jacobian(mut self, j: impl Fn(f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(j));
        self
    }

    /// Exact Jacobian-vector product, used by the variational equation.
    pub fn with_jvp(mut self, j: impl Fn(f64, &DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static) -> Self {
        self.jvp = Some(Arc::new(j));
        self
    }

    /// Declares a scalar diagnostic (mass, energy, …) recorded at output times.
    pub fn with_diagnostic(mut self, name: impl Into<String>, d: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static) -> Self {
        self.diagnostics.push((name.into(), Arc::new(d)));
        self
    }

    /// f(u) = Au.
    pub fn linear(a: DMatrix<f64>) -> Self {
        assert!(a.is_square(), "linear field needs a square matrix");
        let n = a.nrows();
        let (a1, a2, a3) = (a.clone(), a.clone(), a);
        Self::new(n, "linear", move |_, u| &a1 * u)
            .with_jacobian(move |_, _| a2.clone())
            .with_jvp(move |_, _, v| &a3 * v)
    }

    /// f(u) = Au for a sparse A.
    pub fn sparse_linear(a: CsrMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "linear field needs a square matrix");
        let n = a.nrows();
        let a = Arc::new(a);
        let (a1, a2, a3) = (a.clone(), a.clone(), a);
        Self::new(n, "sparse linear", move |_, u| csr_mul(&a1, u))
            .with_jacobian(move |_, _| LinearOp::Sparse((*a2).clone()).to_dense())
            .with_jvp(move |_, _, v| csr_mul(&a3, v))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn has_exact_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn diagnostic_names(&self) -> Vec<String> {
        self.diagnostics.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn eval(&self, t: f64, u: &DVector<f64>) -> DVector<f64> {
        (self.eval)(t, u)
    }

    /// Exact Jacobian when supplied, central differences otherwise.
    pub fn jacobian(&self, t: f64, u: &DVector<f64>) -> DMatrix<f64> {
        match &self.jacobian {
            Some(j) => j(t, u),
            None => self.fd_jacobian(t, u),
        }
    }

    /// Central-difference Jacobian with step sqrt(eps)·(1 + ‖u‖).
    pub fn fd_jacobian(&self, t: f64, u: &DVector<f64>) -> DMatrix<f64> {
        let h = f64::EPSILON.sqrt() * (1.0 + u.norm());
        let mut j = DMatrix::zeros(self.dim, u.len());
        let mut up = u.clone();
        for c in 0..u.len() {
            let orig = up[c];
            up[c] = orig + h;
            let fp = self.eval(t, &up);
            up[c] = orig - h;
            let fm = self.eval(t, &up);
            up[c] = orig;
            j.set_column(c, &((fp - fm) / (2.0 * h)));
        }
        j
    }

    /// Df_t(u)·v, exact when possible, else a directional central difference.
    pub fn jvp(&self, t: f64, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        if let Some(j) = &self.jvp {
            return j(t, u, v);
        }
        if let Some(j) = &self.jacobian {
            return j(t, u) * v;
        }
        let nv = v.norm();
        if nv == 0.0 {
            return DVector::zeros(self.dim);
        }
        let h = f64::EPSILON.sqrt() * (1.0 + u.norm()) / nv;
        (self.eval(t, &(u + v * h)) - self.eval(t, &(u - v * h))) / (2.0 * h)
    }

    fn diagnostics_at(&self, u: &DVector<f64>) -> Vec<f64> {
        self.diagnostics.iter().map(|(_, d)| d(u)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepControl {
    Fixed { dt: f64 },
    /// Step doubling with local error tolerance `tol` (mixed absolute/relative).
    Adaptive { tol: f64, dt0: f64, dt_min: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationOptions {
    pub t0: f64,
    pub t1: f64,
    pub step: StepControl,
    /// Spacing of recorded states; every step is recorded when absent.
    pub output_interval: Option<f64>,
}

impl IntegrationOptions {
    pub fn fixed(t0: f64, t1: f64, dt: f64) -> Self {
        Self { t0, t1, step: StepControl::Fixed { dt }, output_interval: None }
    }

    pub fn adaptive(t0: f64, t1: f64, tol: f64) -> Self {
        let span = (t1 - t0).abs().max(f64::MIN_POSITIVE);
        Self { t0, t1, step: StepControl::Adaptive { tol, dt0: span * 1e-3, dt_min: span * 1e-14 }, output_interval: None }
    }

    pub fn every(mut self, interval: f64) -> Self {
        self.output_interval = Some(interval);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.t1 > self.t0) || !self.t0.is_finite() || !self.t1.is_finite() {
            return contract_err(format!("time span [{}, {}] must be finite and increasing", self.t0, self.t1));
        }
        match self.step {
            StepControl::Fixed { dt } if !(dt > 0.0) => contract_err("dt must be positive"),
            StepControl::Adaptive { tol, dt0, .. } if !(tol > 0.0 && dt0 > 0.0) => contract_err("tolerance and initial step must be positive"),
            _ => match self.output_interval {
                Some(i) if !(i > 0.0) => contract_err("output interval must be positive"),
                _ => Ok(()),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub perturbations: Option<Vec<DVector<f64>>>,
    pub stats: StepStats,
    /// Declared diagnostics of the field, one series per name.
    pub diagnostics: Vec<(String, Vec<f64>)>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("trajectories hold at least the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectories hold at least the initial state")
    }

    /// Columns t, u_0 … u_{n−1}, the perturbation norm in `space` (if any) and
    /// the declared diagnostics.
    pub fn to_table(&self, space: Option<&Space>) -> Table {
        let n = self.states.first().map_or(0, |s| s.len());
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|i| format!("u_{i}")));
        if self.perturbations.is_some() {
            header.push("perturbation_norm".into());
        }
        header.extend(self.diagnostics.iter().map(|(name, _)| name.clone()));
        let rows = (0..self.len())
            .map(|k| {
                let mut row = vec![self.times[k]];
                row.extend(self.states[k].iter());
                if let Some(p) = &self.perturbations {
                    row.push(space.map_or_else(|| p[k].norm(), |s| s.norm(p[k].as_slice())));
                }
                row.extend(self.diagnostics.iter().map(|(_, d)| d[k]));
                row
            })
            .collect();
        Table { header, rows }
    }
}

pub(crate) fn rk4_step(rhs: &dyn Fn(f64, &DVector<f64>) -> DVector<f64>, t: f64, y: &DVector<f64>, h: f64) -> DVector<f64> {
    let k1 = rhs(t, y);
    let k2 = rhs(t + 0.5 * h, &(y + &k1 * (0.5 * h)));
    let k3 = rhs(t + 0.5 * h, &(y + &k2 * (0.5 * h)));
    let k4 = rhs(t + h, &(y + &k3 * h));
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

struct Raw {
    times: Vec<f64>,
    ys: Vec<DVector<f64>>,
    stats: StepStats,
}

fn run(rhs: &dyn Fn(f64, &DVector<f64>) -> DVector<f64>, y0: &DVector<f64>, opts: &IntegrationOptions, state_len: usize) -> Result<Raw> {
    opts.validate()?;
    let diverged = |t: f64, y: &DVector<f64>| Error::Divergence { t, last_state: y.rows(0, state_len).into_owned() };
    if !y0.iter().all(|v| v.is_finite()) {
        return Err(diverged(opts.t0, y0));
    }
    let mut times = vec![opts.t0];
    let mut ys = vec![y0.clone()];
    let mut stats = StepStats::default();
    let span = opts.t1 - opts.t0;
    match opts.step {
        StepControl::Fixed { dt } => {
            let n = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
            let h = span / n as f64;
            let every = opts.output_interval.map_or(1, |i| ((i / h).round() as usize).max(1));
            let mut y = y0.clone();
            for k in 0..n {
                let t = opts.t0 + k as f64 * h;
                let next = rk4_step(rhs, t, &y, h);
                stats.accepted += 1;
                if !next.iter().all(|v| v.is_finite()) {
                    return Err(diverged(t, &y));
                }
                y = next;
                if (k + 1) % every == 0 || k + 1 == n {
                    times.push(if k + 1 == n { opts.t1 } else { opts.t0 + (k + 1) as f64 * h });
                    ys.push(y.clone());
                }
            }
        }
        StepControl::Adaptive { tol, dt0, dt_min } => {
            let mut t = opts.t0;
            let mut y = y0.clone();
            let mut h = dt0.min(span);
            let mut next_mark = opts.output_interval.map(|i| opts.t0 + i);
            while t < opts.t1 {
                let target = next_mark.map_or(opts.t1, |m| m.min(opts.t1));
                let hit = t + h >= target - 1e-12 * span;
                let step = if hit { target - t } else { h };
                if step < dt_min {
                    return Err(Error::Stiffness { t, dt: step });
                }
                let big = rk4_step(rhs, t, &y, step);
                let half = rk4_step(rhs, t, &y, 0.5 * step);
                let fine = rk4_step(rhs, t + 0.5 * step, &half, 0.5 * step);
                let err = (&fine - &big).amax() / 15.0;
                let scale = tol * (1.0 + fine.amax());
                if !fine.iter().all(|v| v.is_finite()) {
                    if step <= dt_min * 2.0 {
                        return Err(diverged(t, &y));
                    }
                    stats.rejected += 1;
                    h = step * 0.2;
                    continue;
                }
                let factor = if err == 0.0 { 2.0 } else { (0.9 * (scale / err).powf(0.2)).clamp(0.2, 2.0) };
                if err <= scale {
                    stats.accepted += 1;
                    t = if hit { target } else { t + step };
                    y = fine;
                    let at_mark = hit && next_mark.is_some();
                    if opts.output_interval.is_none() || at_mark || t >= opts.t1 {
                        if t > *times.last().unwrap() {
                            times.push(t);
                            ys.push(y.clone());
                        }
                    }
                    if at_mark {
                        next_mark = next_mark.map(|m| m + opts.output_interval.unwrap());
                    }
                    h = if hit { h.max(step * factor) } else { step * factor };
                } else {
                    stats.rejected += 1;
                    h = step * factor;
                }
            }
        }
    }
    Ok(Raw { times, ys, stats })
}

fn check_len(f: &VectorField, u: &DVector<f64>, what: &str) -> Result<()> {
    if u.len() != f.dim() {
        return dim_err(format!("{what} has length {}, field has dimension {}", u.len(), f.dim()));
    }
    Ok(())
}

pub fn integrate(f: &VectorField, u0: &DVector<f64>, opts: &IntegrationOptions) -> Result<Trajectory> {
    check_len(f, u0, "initial state")?;
    let rhs = |t: f64, y: &DVector<f64>| f.eval(t, y);
    let raw = run(&rhs, u0, opts, u0.len())?;
    let diagnostics = f
        .diagnostic_names()
        .into_iter()
        .enumerate()
        .map(|(i, name)| (name, raw.ys.iter().map(|y| f.diagnostics_at(y)[i]).collect()))
        .collect();
    Ok(Trajectory { times: raw.times, states: raw.ys, perturbations: None, stats: raw.stats, diagnostics })
}

/// Co-integrates du/dt = f(t,u) and dδu/dt = Df_t(u)δu.
pub fn integrate_variational(f: &VectorField, u0: &DVector<f64>, du0: &DVector<f64>, opts: &IntegrationOptions) -> Result<Trajectory> {
    check_len(f, u0, "initial state")?;
    check_len(f, du0, "initial perturbation")?;
    let n = u0.len();
    let rhs = |t: f64, y: &DVector<f64>| {
        let u = y.rows(0, n).into_owned();
        let d = y.rows(n, n).into_owned();
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&f.eval(t, &u));
        out.rows_mut(n, n).copy_from(&f.jvp(t, &u, &d));
        out
    };
    let mut y0 = DVector::zeros(2 * n);
    y0.rows_mut(0, n).copy_from(u0);
    y0.rows_mut(n, n).copy_from(du0);
    let raw = run(&rhs, &y0, opts, n)?;
    let states: Vec<DVector<f64>> = raw.ys.iter().map(|y| y.rows(0, n).into_owned()).collect();
    let perturbations = raw.ys.iter().map(|y| y.rows(n, n).into_owned()).collect();
    let diagnostics = f
        .diagnostic_names()
        .into_iter()
        .enumerate()
        .map(|(i, name)| (name, states.iter().map(|y| f.diagnostics_at(y)[i]).collect()))
        .collect();
    Ok(Trajectory { times: raw.times, states, perturbations: Some(perturbations), stats: raw.stats, diagnostics })
}

/// Cumulative trapezoid integral of `values` over `times`.
pub fn cumulative_trapezoid(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    for k in 0..times.len() {
        if k > 0 {
            acc += 0.5 * (values[k] + values[k - 1]) * (times[k] - times[k - 1]);
        }
        out.push(acc);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthBoundOptions {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    /// Allowed excess of the ratio over 1.
    pub tol: f64,
    /// Initial state of a second full trajectory for the pair bound.
    pub pair: Option<DVector<f64>>,
}

impl GrowthBoundOptions {
    pub fn new(t0: f64, t1: f64, dt: f64) -> Self {
        Self { t0, t1, dt, tol: 1e-4, pair: None }
    }

    pub fn with_pair(mut self, u0b: DVector<f64>) -> Self {
        self.pair = Some(u0b);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairBoundReport {
    /// ‖u₁(t) − u₂(t)‖ in the rate's norm.
    pub distances: Vec<f64>,
    /// Uniform rate: the largest λ seen along both trajectories.
    pub lambda_sup: f64,
    /// Measured B₁B₂ = max‖Θ‖ · max‖Θ⁻¹‖.
    pub kappa: f64,
    pub b_squared: f64,
    /// distance / (κ e^{λt} · initial distance).
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthBoundReport {
    pub times: Vec<f64>,
    /// λ(t) evaluated at the trajectory state.
    pub lambda: Vec<f64>,
    pub lambda_integral: Vec<f64>,
    pub weighted_norms: Vec<f64>,
    pub unweighted_norms: Vec<f64>,
    /// ‖δu(t)‖_Θ / (exp(∫λ) ‖δu(0)‖_Θ).
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub tol: f64,
    pub passed: bool,
    /// Set when some λ(t) came from sampling rather than an exact rate.
    pub advisory: bool,
    pub lambda_method: Method,
    pub pair: Option<PairBoundReport>,
}

impl GrowthBoundReport {
    pub fn to_table(&self) -> Table {
        let mut header: Vec<String> = ["t", "lambda", "lambda_integral", "weighted_norm", "unweighted_norm", "ratio"].iter().map(|s| s.to_string()).collect();
        if self.pair.is_some() {
            header.push("pair_distance".into());
            header.push("pair_ratio".into());
        }
        let rows = (0..self.times.len())
            .map(|k| {
                let mut r = vec![self.times[k], self.lambda[k], self.lambda_integral[k], self.weighted_norms[k], self.unweighted_norms[k], self.ratios[k]];
                if let Some(p) = &self.pair {
                    r.push(p.distances[k]);
                    r.push(p.ratios[k]);
                }
                r
            })
            .collect();
        Table { header, rows }
    }
}

/// Checks ‖δu(t)‖_Θ ≤ exp(∫₀ᵗ λ) ‖δu(0)‖_Θ along a trajectory, with λ(s) the
/// weighted rate at u(s), and optionally the pair bound
/// ‖u₁(t) − u₂(t)‖ ≤ B₁B₂ e^{λt} ‖u₁(0) − u₂(0)‖.
pub fn verify_growth_bound(
    f: &VectorField,
    theta: &WeightFamily,
    space: &Space,
    u0: &DVector<f64>,
    du0: &DVector<f64>,
    opts: &GrowthBoundOptions,
) -> Result<GrowthBoundReport> {
    let iopts = IntegrationOptions::fixed(opts.t0, opts.t1, opts.dt);
    let traj = integrate_variational(f, u0, du0, &iopts)?;
    let pert = traj.perturbations.as_ref().expect("variational trajectory");
    let mut lambda = Vec::with_capacity(traj.len());
    let mut worst = Method::ClosedForm;
    for (t, u) in traj.times.iter().zip(&traj.states) {
        let r = weighted_rate(&LinearOp::Dense(f.jacobian(*t, u)), theta, *t, u, space)?;
        worst = worst.max(r.method);
        lambda.push(r.value);
    }
    let integral = cumulative_trapezoid(&traj.times, &lambda);
    let weighted_norms: Vec<f64> = traj.times.iter().zip(&traj.states).zip(pert).map(|((t, u), d)| theta.weighted_norm(*t, u, d, space)).collect();
    let unweighted_norms: Vec<f64> = pert.iter().map(|d| space.norm(d.as_slice())).collect();
    let w0 = weighted_norms[0];
    if w0 == 0.0 {
        return Err(Error::DegenerateWeight("initial perturbation has zero weighted norm".into()));
    }
    let ratios: Vec<f64> = weighted_norms.iter().zip(&integral).map(|(w, i)| w / (i.exp() * w0)).collect();
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);

    let pair = match &opts.pair {
        Some(u0b) if theta.has_inverse() => {
            let tb = integrate(f, u0b, &iopts)?;
            let mut lam_sup = lambda.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for (t, u) in tb.times.iter().zip(&tb.states) {
                let r = weighted_rate(&LinearOp::Dense(f.jacobian(*t, u)), theta, *t, u, space)?;
                worst = worst.max(r.method);
                lam_sup = lam_sup.max(r.value);
            }
            let w = theta.codomain_for(space);
            let (mut b1, mut b2) = (0.0f64, 0.0f64);
            for (t, u) in traj.times.iter().zip(&traj.states).chain(tb.times.iter().zip(&tb.states)) {
                b1 = b1.max(operator_norm(&theta.matrix(*t, u), space, &w, 1)?.0);
                b2 = b2.max(operator_norm(&theta.inverse_matrix(*t, u).expect("checked"), &w, space, 2)?.0);
                if !theta.is_time_varying() && matches!(theta.kind(), crate::weights::WeightKind::Diagonal { .. } | crate::weights::WeightKind::ConstantMatrix | crate::weights::WeightKind::Identity) {
                    break;
                }
            }
            let kappa = b1 * b2;
            let distances: Vec<f64> = traj.states.iter().zip(&tb.states).map(|(a, b)| space.norm((a - b).as_slice())).collect();
            let d0 = distances[0];
            let ratios: Vec<f64> = if d0 == 0.0 {
                vec![0.0; distances.len()]
            } else {
                distances.iter().zip(&traj.times).map(|(d, t)| d / (kappa * (lam_sup * (t - opts.t0)).exp() * d0)).collect()
            };
            let max_pair = ratios.iter().cloned().fold(0.0, f64::max);
            let b = theta.bound_b();
            Some(PairBoundReport {
                distances,
                lambda_sup: lam_sup,
                kappa,
                b_squared: b * b,
                ratios,
                max_ratio: max_pair,
                passed: max_pair <= 1.0 + opts.tol,
            })
        }
        _ => None,
    };
    Ok(GrowthBoundReport {
        times: traj.times,
        lambda,
        lambda_integral: integral,
        weighted_norms,
        unweighted_norms,
        ratios,
        max_ratio,
        tol: opts.tol,
        passed: max_ratio <= 1.0 + opts.tol,
        advisory: !worst.is_exact(),
        lambda_method: worst,
        pair,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleOptions {
    pub t_end: f64,
    pub dt: f64,
    pub renorm_interval: f64,
    pub seed: u64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { t_end: 200.0, dt: 0.01, renorm_interval: 1.0, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MleEstimate {
    pub value: f64,
    /// (t, running average of the log growth) after each renormalization.
    pub history: Vec<(f64, f64)>,
    /// Running averages at 3/4 of the horizon and at the end agree to 0.01.
    pub converged: bool,
    pub renormalizations: usize,
}

/// Benettin estimate of the maximum Lyapunov exponent (Euclidean norm; the
/// exponent does not depend on the choice of equivalent norm).
pub fn mle_estimate(f: &VectorField, u0: &DVector<f64>, opts: &MleOptions) -> Result<MleEstimate> {
    check_len(f, u0, "initial state")?;
    if !(opts.t_end > 0.0 && opts.dt > 0.0 && opts.renorm_interval >= opts.dt) {
        return contract_err("MLE needs t_end > 0, dt > 0 and renorm_interval >= dt");
    }
    let n = u0.len();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let steps_per = ((opts.renorm_interval / opts.dt).round() as usize).max(1);
    let h = opts.renorm_interval / steps_per as f64;
    let blocks = ((opts.t_end / opts.renorm_interval).round() as usize).max(1);
    let rhs = |t: f64, y: &DVector<f64>| {
        let u = y.rows(0, n).into_owned();
        let d = y.rows(n, n).into_owned();
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&f.eval(t, &u));
        out.rows_mut(n, n).copy_from(&f.jvp(t, &u, &d));
        out
    };
    let mut y = DVector::zeros(2 * n);
    y.rows_mut(0, n).copy_from(u0);
    y.rows_mut(n, n).copy_from(&random_unit(&mut rng, n));
    let mut t = 0.0;
    let mut sum = 0.0;
    let mut history = Vec::with_capacity(blocks);
    for _ in 0..blocks {
        for _ in 0..steps_per {
            let next = rk4_step(&rhs, t, &y, h);
            if !next.iter().all(|v| v.is_finite()) {
                return Err(Error::Divergence { t, last_state: y.rows(0, n).into_owned() });
            }
            y = next;
            t += h;
        }
        let g = y.rows(n, n).norm();
        if !(g > 0.0) {
            return Err(Error::Numerical("perturbation collapsed to zero".into()));
        }
        sum += g.ln();
        let scaled = y.rows(n, n) / g;
        y.rows_mut(n, n).copy_from(&scaled);
        history.push((t, sum / t));
    }
    let value = history.last().unwrap().1;
    let q = history[(history.len() * 3 / 4).min(history.len() - 1)].1;
    Ok(MleEstimate { value, converged: (value - q).abs() <= 0.01, renormalizations: blocks, history })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Least-squares slope of ln v(t) over samples with v > floor.
pub fn fit_exponent(times: &[f64], values: &[f64], floor: f64) -> Option<ExponentFit> {
    let pts: Vec<(f64, f64)> = times.iter().zip(values).filter(|(_, v)| **v > floor && v.is_finite()).map(|(t, v)| (*t, v.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(ExponentFit { slope, intercept: my - slope * mt, points: pts.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticCheck {
    pub t_b: f64,
    pub first_below_one: Option<f64>,
    /// Every ratio at t ≥ t_b is below 1 (false when t_b exceeds the horizon).
    pub below_after_tb: bool,
    /// Fitted log-slope over the last quarter of the horizon is nonpositive.
    pub tail_monotone: bool,
    pub passed: bool,
}

/// Finite-horizon test of asymptotic contraction on trajectory-pair ratios
/// ‖u₁(t) − u₂(t)‖ / ‖u₁(0) − u₂(0)‖. The result is empirical.
pub fn check_asymptotic_contraction(times: &[f64], ratios: &[f64], t_b: f64) -> AsymptoticCheck {
    let first_below_one = times.iter().zip(ratios).find(|(_, r)| **r < 1.0).map(|(t, _)| *t);
    let horizon = times.last().copied().unwrap_or(0.0);
    let after: Vec<f64> = times.iter().zip(ratios).filter(|(t, _)| **t >= t_b).map(|(_, r)| *r).collect();
    let below_after_tb = t_b <= horizon && !after.is_empty() && after.iter().all(|r| *r < 1.0);
    let t_tail = times.first().copied().unwrap_or(0.0) + 0.75 * (horizon - times.first().copied().unwrap_or(0.0));
    let (tt, rr): (Vec<f64>, Vec<f64>) = times.iter().zip(ratios).filter(|(t, _)| **t >= t_tail).map(|(t, r)| (*t, *r)).unzip();
    let tail_monotone = fit_exponent(&tt, &rr, 0.0).map_or(true, |f| f.slope <= 1e-12);
    AsymptoticCheck { t_b, first_below_one, below_after_tb, tail_monotone, passed: below_after_tb && tail_monotone }
}
