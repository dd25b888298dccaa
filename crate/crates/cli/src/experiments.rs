//! Experiment runners: config section in, claims and tables out.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::{json, Value};
use wcontract::flows::{integrate, mle_estimate, verify_growth_bound, GrowthBoundOptions, IntegrationOptions, MleOptions};
use wcontract::geometry::{
    cauchy_diagnostics, certify_limit_cycle, certify_manifold_contraction, certify_phase_locking, certify_subspace_contraction, check_equivariance,
    check_temporal_symmetry, Conjugacy, CrossCheckOptions, GroupElement, Projector, Submersion,
};
use wcontract::linalg::spectral_abscissa;
use wcontract::measures::{default_mu_h_list, generalized_jacobian, mu, mu_fd_oracle, weighted_rate};
use wcontract::pde::{
    heat_zero_flux_experiment, nonlinear_poisson_experiment, reaction_diffusion_experiment, sine_initial, sobolev_rate_experiment, vanishing_osl_experiment,
    Discretization, RegularizedFamily,
};
use wcontract::report::{CertificateStatus, Table};
use wcontract::systems::{coupled_hopf, cubic_conjugacy, cubic_doubling, forced_scalar, hopf, hopf_with_equilibrium, leader_adjacency, shear_matrix, skew_rotation};
use wcontract::weights::{make_weight, matrix_from_rows, optimize_diagonal_weight, AsymptoticRateResult, WeightParams};
use wcontract::{ContractionReport, LinearOp, Method, Result, Space, StateSampler, VectorField, WeightFamily};

use crate::config::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Certified,
    Withheld,
    /// Computation without a certificate to grant or withhold.
    Completed,
}

impl Status {
    fn from_report(r: &ContractionReport) -> Self {
        match r.status {
            CertificateStatus::Certified => Status::Certified,
            CertificateStatus::Withheld | CertificateStatus::RateOnly => Status::Withheld,
        }
    }

    fn certified_if(ok: bool) -> Self {
        if ok {
            Status::Certified
        } else {
            Status::Withheld
        }
    }
}

/// A numeric claim with the method that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Claim {
    pub name: String,
    pub value: f64,
    pub method: Method,
}

fn claim(name: impl Into<String>, value: f64, method: Method) -> Claim {
    Claim { name: name.into(), value, method }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub claims: Vec<Claim>,
    pub details: Value,
    /// (file stem, table) pairs written as CSV.
    pub tables: Vec<(String, Table)>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let seed = cfg.seed;
    match cfg.experiment {
        ExperimentKind::Measure => measure(cfg.measure.as_ref().expect("validated"), seed),
        ExperimentKind::WeightedRate => weighted(cfg.weighted_rate.as_ref().expect("validated")),
        ExperimentKind::OptimizeWeight => optimize(cfg.optimize_weight.as_ref().expect("validated")),
        ExperimentKind::GrowthBound => growth(cfg.growth_bound.as_ref().expect("validated")),
        ExperimentKind::Mle => mle(cfg.mle.as_ref().expect("validated"), seed),
        ExperimentKind::Subspace => subspace(&cfg.subspace.clone().unwrap_or_default(), seed),
        ExperimentKind::Manifold => manifold(&cfg.manifold.clone().unwrap_or_default(), seed),
        ExperimentKind::Symmetry => symmetry(&cfg.symmetry.clone().unwrap_or_default(), seed),
        ExperimentKind::LimitCycle => limit_cycle(&cfg.limit_cycle.clone().unwrap_or_default()),
        ExperimentKind::PhaseLocking => phase_locking(&cfg.phase_locking.clone().unwrap_or_default(), seed),
        ExperimentKind::Heat => heat(cfg, seed),
        ExperimentKind::ReactionDiffusion => reaction(cfg, seed),
        ExperimentKind::Poisson => poisson(cfg, seed),
        ExperimentKind::SobolevRate => sobolev(cfg, seed),
        ExperimentKind::VanishingOsl => vanishing(cfg, seed),
    }
}

fn p_label(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

fn weight_or_identity(w: &Option<WeightParams>, n: usize) -> Result<WeightFamily> {
    match w {
        Some(w) => make_weight(w),
        None => Ok(WeightFamily::identity(n)),
    }
}

fn linear_optimum(a: &DMatrix<f64>, b: f64, p: f64) -> Result<AsymptoticRateResult> {
    let n = a.nrows();
    optimize_diagonal_weight(&VectorField::linear(a.clone()), &Space::lp(n, p), b, &StateSampler::single(0.0, DVector::zeros(n)))
}

fn report_claims(prefix: &str, r: &ContractionReport) -> Vec<Claim> {
    let mut out = vec![claim(format!("{prefix}rate"), r.rate.value, r.rate.method)];
    out.extend(r.diagnostics.iter().map(|d| claim(format!("{prefix}{}", d.name), d.value, d.method)));
    if let Some(cc) = &r.cross_check {
        out.extend(cc.exponents.iter().enumerate().map(|(i, e)| claim(format!("{prefix}fitted_exponent_{i}"), *e, Method::Fitted)));
    }
    out
}

fn measure(s: &MeasureSection, seed: u64) -> Result<Outcome> {
    let a = matrix_from_rows(&s.matrix)?;
    let n = a.nrows();
    let op = LinearOp::from(a.clone());
    let alpha = spectral_abscissa(&a);
    let mut claims = vec![claim("spectral_abscissa", alpha, Method::Eigen)];
    let mut table = Table::new(&["p", "mu", "oracle", "spectral_abscissa"]);
    let mut rows = Vec::new();
    for &p in &s.p {
        let space = Space::lp(n, p);
        let r = mu(&op, &space)?;
        claims.push(claim(format!("mu_{}", p_label(p)), r.value, r.method));
        let oracle = if s.oracle { Some(mu_fd_oracle(&a, &space, &default_mu_h_list(&a))?) } else { None };
        if let Some(o) = &oracle {
            claims.push(claim(format!("oracle_{}", p_label(p)), o.value, Method::Fitted));
        }
        table.push(vec![p, r.value, oracle.as_ref().map_or(f64::NAN, |o| o.value), alpha]);
        rows.push(json!({ "p": p_label(p), "rate": to_value(&r), "oracle": to_value(&oracle), "dominates_spectrum": r.value >= alpha - 1e-10 }));
    }
    Ok(Outcome { status: Status::Completed, claims, details: json!({ "dim": n, "seed": seed, "measures": rows }), tables: vec![("measures".into(), table)] })
}

fn weighted(s: &WeightedRateSection) -> Result<Outcome> {
    let a = matrix_from_rows(&s.matrix)?;
    let n = a.nrows();
    let theta = weight_or_identity(&s.weight, n)?;
    let space = Space::lp(n, s.p);
    let u = DVector::zeros(n);
    let op = LinearOp::from(a.clone());
    let r = weighted_rate(&op, &theta, 0.0, &u, &space)?;
    let plain = mu(&op, &space)?;
    let mut claims = vec![claim("weighted_rate", r.value, r.method), claim("unweighted_mu", plain.value, plain.method)];
    let mut gj_rate = None;
    if theta.has_inverse() {
        let gj = generalized_jacobian(&a, &theta.matrix(0.0, &u), None)?;
        let g = mu(&LinearOp::from(gj.clone()), &theta.codomain_for(&space))?;
        claims.push(claim("mu_generalized_jacobian", g.value, g.method));
        gj_rate = Some((gj, g));
    }
    let mut table = Table::new(&["p", "weighted_rate", "unweighted_mu"]);
    table.push(vec![s.p, r.value, plain.value]);
    let details = json!({
        "weight": to_value(theta.kind()),
        "rate": to_value(&r),
        "unweighted": to_value(&plain),
        "generalized_jacobian": gj_rate.as_ref().map(|(m, g)| json!({ "rows": m.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(), "mu": to_value(g) })),
    });
    Ok(Outcome { status: Status::certified_if(r.value < 0.0), claims, details, tables: vec![("rates".into(), table)] })
}

fn optimize(s: &OptimizeWeightSection) -> Result<Outcome> {
    let a = matrix_from_rows(&s.matrix)?;
    let res = linear_optimum(&a, s.b, s.p)?;
    let plain = mu(&LinearOp::from(a.clone()), &Space::lp(a.nrows(), s.p))?;
    let claims = vec![
        claim("lambda_b", res.lambda_b, res.method),
        claim("transient_bound", res.transient_bound, Method::ClosedForm),
        claim("unweighted_mu", plain.value, plain.method),
    ];
    let mut table = Table::new(&["sweep", "best_rate"]);
    for (i, v) in res.history.iter().enumerate() {
        table.push(vec![i as f64, *v]);
    }
    let details = json!({
        "scope": AsymptoticRateResult::SCOPE,
        "b": res.b,
        "diagonal": res.diagonal,
        "iterations": res.iterations,
        "asymptotically_contracting": res.lambda_b < 0.0,
    });
    Ok(Outcome { status: Status::certified_if(res.lambda_b < 0.0), claims, details, tables: vec![("sweeps".into(), table)] })
}

fn growth(s: &GrowthBoundSection) -> Result<Outcome> {
    let a = matrix_from_rows(&s.matrix)?;
    let n = a.nrows();
    let theta = weight_or_identity(&s.weight, n)?;
    let mut opts = GrowthBoundOptions::new(0.0, s.t_end, s.dt);
    if let Some(pair) = &s.pair {
        opts = opts.with_pair(DVector::from_column_slice(pair));
    }
    let rep = verify_growth_bound(&VectorField::linear(a), &theta, &Space::lp(n, s.p), &DVector::from_column_slice(&s.u0), &DVector::from_column_slice(&s.du0), &opts)?;
    let mut claims = vec![
        claim("max_lambda", rep.lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max), rep.lambda_method),
        claim("max_weighted_ratio", rep.max_ratio, Method::Sampled),
    ];
    if let Some(pair) = &rep.pair {
        claims.push(claim("pair_max_ratio", pair.max_ratio, Method::Sampled));
        claims.push(claim("kappa", pair.kappa, Method::Sampled));
    }
    let ok = rep.passed && rep.pair.as_ref().map_or(true, |p| p.passed);
    let details = json!({ "passed": rep.passed, "tol": rep.tol, "advisory": rep.advisory, "pair": rep.pair.as_ref().map(|p| json!({ "passed": p.passed, "lambda_sup": p.lambda_sup, "kappa": p.kappa, "b_squared": p.b_squared, "max_ratio": p.max_ratio })) });
    Ok(Outcome { status: Status::certified_if(ok), claims, details, tables: vec![("growth".into(), rep.to_table())] })
}

fn mle(s: &MleSection, seed: u64) -> Result<Outcome> {
    let a = matrix_from_rows(&s.matrix)?;
    let n = a.nrows();
    let u0 = s.u0.as_ref().map_or_else(|| DVector::from_element(n, 1.0), |u| DVector::from_column_slice(u));
    let est = mle_estimate(&VectorField::linear(a.clone()), &u0, &MleOptions { t_end: s.t_end, dt: s.dt, renorm_interval: s.renorm_interval, seed })?;
    let m = mu(&LinearOp::from(a.clone()), &Space::lp(n, s.p))?;
    let opt = linear_optimum(&a, s.b, s.p)?;
    let b2 = s.b * s.b * opt.lambda_b;
    let checks = json!([
        { "name": "mle_below_mu", "residual": est.value, "threshold": m.value + 0.05, "passed": est.value <= m.value + 0.05 },
        { "name": "mle_below_lambda_b", "residual": est.value, "threshold": opt.lambda_b + 0.05, "passed": est.value <= opt.lambda_b + 0.05, "advisory": true },
        { "name": "mle_below_b2_lambda_b", "residual": est.value, "threshold": b2 + 0.05, "passed": est.value <= b2 + 0.05, "advisory": true },
    ]);
    let ok = est.value <= m.value + 0.05;
    let claims = vec![
        claim("mle", est.value, Method::Fitted),
        claim("mu", m.value, m.method),
        claim("lambda_b", opt.lambda_b, opt.method),
        claim("b2_lambda_b", b2, opt.method),
        claim("spectral_abscissa", spectral_abscissa(&a), Method::Eigen),
    ];
    let mut table = Table::new(&["t", "mle"]);
    for (t, v) in &est.history {
        table.push(vec![*t, *v]);
    }
    let details = json!({ "converged": est.converged, "renormalizations": est.renormalizations, "checks": checks, "lambda_b_scope": AsymptoticRateResult::SCOPE });
    Ok(Outcome { status: Status::certified_if(ok), claims, details, tables: vec![("mle".into(), table)] })
}

fn box_sampler(dim: usize, half: f64, count: usize, seed: u64) -> StateSampler {
    StateSampler::uniform_box(&vec![-half; dim], &vec![half; dim], count, 0.0, seed)
}

fn sampler_states(s: &StateSampler) -> Vec<DVector<f64>> {
    s.samples().iter().map(|(_, u)| u.clone()).collect()
}

/// t and q(u(t)) along one trajectory, with about 200 rows.
fn quantity_table(f: &VectorField, u0: &DVector<f64>, t_end: f64, dt: f64, name: &str, q: impl Fn(&DVector<f64>) -> f64) -> Result<Table> {
    let tr = integrate(f, u0, &IntegrationOptions::fixed(0.0, t_end, dt).every((t_end / 200.0).max(dt)))?;
    let mut table = Table::new(&["t", name]);
    for (t, u) in tr.times.iter().zip(&tr.states) {
        table.push(vec![*t, q(u)]);
    }
    Ok(table)
}

fn subspace(s: &SubspaceSection, seed: u64) -> Result<Outcome> {
    let (f, n, gap) = match &s.matrix {
        Some(rows) => {
            let a = matrix_from_rows(rows)?;
            let n = a.nrows();
            (VectorField::linear(a), n, None)
        }
        None => {
            let d = Discretization::new(1, s.n, s.boundary)?;
            let gap = (s.boundary == wcontract::Boundary::Neumann).then(|| -s.alpha * d.closed_form_gap());
            (VectorField::sparse_linear(d.diffusion(&[s.alpha])), d.n_points(), gap)
        }
    };
    let proj = match &s.projector {
        Some(rows) => Projector::new(matrix_from_rows(rows)?)?,
        None => Projector::mean(n, 1),
    };
    let sampler = box_sampler(n, 1.0, s.samples, seed);
    let ics = sampler_states(&box_sampler(n, 1.0, s.initial_conditions, seed.wrapping_add(1)));
    let cross = CrossCheckOptions::new(s.t_end, s.dt, ics.clone());
    let r = certify_subspace_contraction(&f, &proj, &Space::lp(n, s.p), &sampler, None, Some(&cross))?;
    let mut claims = report_claims("", &r);
    if let Some(g) = gap {
        claims.push(claim("closed_form_rate", g, Method::ClosedForm));
    }
    let q = proj.q().clone();
    let p = s.p;
    let table = quantity_table(&f, &ics[0], s.t_end, s.dt, "q_norm", |u| Space::lp(n, p).norm((&q * u).as_slice()))?;
    Ok(Outcome { status: Status::from_report(&r), claims, details: json!({ "certificate": to_value(&r) }), tables: vec![("decay".into(), table)] })
}

fn ring(radii: &[f64]) -> Vec<DVector<f64>> {
    radii.iter().enumerate().map(|(k, r)| DVector::from_vec(vec![r * (1.0 + k as f64).cos(), r * (1.0 + k as f64).sin()])).collect()
}

fn manifold(s: &ManifoldSection, seed: u64) -> Result<Outcome> {
    let (f, sub, sampler, ics) = match s.system {
        ManifoldSystem::Hopf => (hopf(s.omega), Submersion::unit_sphere(2), StateSampler::annulus(s.r_min, s.r_max, s.radial_samples, s.angular_samples), ring(&s.initial_radii)),
        ManifoldSystem::Rotation => {
            let ics = s.initial_radii.iter().map(|r| DVector::from_fn(s.dim, |i, _| if i == 0 { *r } else { 0.0 })).collect();
            (skew_rotation(s.dim), Submersion::unit_sphere(s.dim), box_sampler(s.dim, s.r_max, s.radial_samples * s.angular_samples, seed), ics)
        }
    };
    let dim = f.dim();
    let cross = CrossCheckOptions::new(s.t_end, s.dt, ics.clone());
    let r = certify_manifold_contraction(&f, &sub, &Space::euclidean(dim), &sampler, Some(&cross))?;
    let claims = report_claims("", &r);
    let table = quantity_table(&f, &ics[0], s.t_end, s.dt, "manifold_distance", |u| sub.eval(u).norm())?;
    Ok(Outcome { status: Status::from_report(&r), claims, details: json!({ "submanifold": sub.label(), "certificate": to_value(&r) }), tables: vec![("distance".into(), table)] })
}

fn shift_matrix(n: usize, s: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if j == (i + s) % n { 1.0 } else { 0.0 })
}

fn checks_table(checks: &[wcontract::HypothesisCheck]) -> Table {
    let mut table = Table::new(&["element", "residual", "threshold"]);
    for (i, c) in checks.iter().enumerate() {
        table.push(vec![i as f64, c.residual, c.threshold]);
    }
    table
}

fn symmetry(s: &SymmetrySection, seed: u64) -> Result<Outcome> {
    match s.case {
        SymmetryCase::HeatShift => {
            let n = s.n;
            let f = wcontract::pde::sobolev::periodic_heat(n, s.alpha);
            let shifts: Vec<GroupElement> = (1..n).map(|k| GroupElement::Linear(LinearOp::from(shift_matrix(n, k)))).collect();
            let sampler = box_sampler(n, 1.0, s.samples, seed);
            let cert = certify_subspace_contraction(&f, &Projector::mean(n, 1), &Space::euclidean(n), &sampler, None, None)?;
            let eq = check_equivariance(&f, &shifts, &sampler, Some(&cert));
            let max_res = eq.checks.iter().map(|c| c.residual).fold(0.0, f64::max);
            let mut claims = report_claims("", &cert);
            claims.push(claim("max_equivariance_residual", max_res, Method::Sampled));
            let status = Status::certified_if(eq.passed && cert.is_certified());
            Ok(Outcome { status, claims, details: json!({ "equivariance": to_value(&eq), "certificate": to_value(&cert) }), tables: vec![("equivariance".into(), checks_table(&eq.checks))] })
        }
        SymmetryCase::Cubic => {
            let n = s.n;
            let k = cubic_conjugacy(n);
            let f = k.pullback_field(&VectorField::linear(-DMatrix::<f64>::identity(n, n)));
            let sampler = box_sampler(n, 1.5, s.samples, seed);
            let eq = check_equivariance(&f, &[GroupElement::Nonlinear(cubic_doubling(n))], &sampler, None);
            let claims = vec![
                claim("conjugacy_inverse_defect", k.inverse_defect(&sampler), Method::Sampled),
                claim("max_equivariance_residual", eq.checks.iter().map(|c| c.residual).fold(0.0, f64::max), Method::Sampled),
            ];
            Ok(Outcome { status: Status::certified_if(eq.passed), claims, details: json!({ "equivariance": to_value(&eq) }), tables: vec![("equivariance".into(), checks_table(&eq.checks))] })
        }
        SymmetryCase::Forced => {
            let f = forced_scalar();
            let sampler = box_sampler(1, 2.0, s.samples, seed).with_times(&[0.0, 0.3 * s.tau, 0.77 * s.tau]);
            let temporal = check_temporal_symmetry(&f, s.tau, &sampler)?;
            let c = cauchy_diagnostics(&f, &DVector::from_element(1, s.u0), s.tau, s.periods, s.dt, &Space::euclidean(1))?;
            let mut table = Table::new(&["k", "difference", "ratio"]);
            for (i, d) in c.differences.iter().enumerate() {
                table.push(vec![i as f64, *d, if i == 0 { f64::NAN } else { c.ratios[i - 1] }]);
            }
            let claims = vec![claim("temporal_symmetry_residual", temporal.residual, Method::Sampled), claim("max_cauchy_ratio", c.max_ratio, Method::Fitted)];
            let status = Status::certified_if(temporal.passed && c.geometric);
            Ok(Outcome { status, claims, details: json!({ "temporal_symmetry": to_value(&temporal), "cauchy": to_value(&c) }), tables: vec![("cauchy".into(), table)] })
        }
    }
}

fn limit_cycle(s: &LimitCycleSection) -> Result<Outcome> {
    let conj = if s.shear == 0.0 { Conjugacy::identity(2) } else { Conjugacy::linear(shear_matrix(s.shear))? };
    let g = if s.equilibrium { hopf_with_equilibrium() } else { hopf(s.omega) };
    let f = if s.shear == 0.0 { g } else { conj.pullback_field(&g) };
    let sub = Submersion::unit_sphere(2);
    let ics: Vec<DVector<f64>> = ring(&s.initial_radii).iter().map(|v| conj.h_inv(v)).collect();
    let cross = CrossCheckOptions::new(s.t_end, s.dt, ics.clone());
    let sampler = StateSampler::annulus(s.r_min, s.r_max, s.radial_samples, s.angular_samples);
    let r = certify_limit_cycle(&f, &sub, &conj, 1.0, &Space::euclidean(2), &sampler, Some(&cross))?;
    let mut claims = report_claims("", &r.report);
    claims.push(claim("expected_period", TAU / s.omega.abs(), Method::ClosedForm));
    claims.extend(r.periods.iter().enumerate().map(|(i, p)| claim(format!("period_{i}"), *p, Method::Fitted)));
    let table = quantity_table(&f, &ics[0], s.t_end, s.dt, "loop_distance", |u| sub.eval(&conj.h(u)).norm())?;
    Ok(Outcome { status: Status::from_report(&r.report), claims, details: to_value(&r), tables: vec![("loop_distance".into(), table)] })
}

fn phase_locking(s: &PhaseLockingSection, seed: u64) -> Result<Outcome> {
    let n = s.omegas.len();
    let angles = s.angles.clone().unwrap_or_else(|| (0..n).map(|i| TAU * i as f64 / n as f64).collect());
    let shears: Vec<DMatrix<f64>> = s.shears.iter().map(|x| shear_matrix(*x)).collect();
    let sys = coupled_hopf(&s.omegas, s.coupling, &leader_adjacency(n), &angles, &shears)?;
    let torus = box_sampler(2 * n, 1.0, s.torus_samples, seed);
    let leader = StateSampler::annulus(0.8, 1.2, 5, 16);
    let ics = sampler_states(&box_sampler(2 * n, 1.2, s.initial_conditions, seed.wrapping_add(1)));
    let cross = CrossCheckOptions::new(s.t_end, s.dt, ics);
    let r = certify_phase_locking(&sys, &Submersion::unit_sphere(2), 1.0, &Space::euclidean(2 * n), &leader, &torus, Some(&cross))?;
    let mut claims = report_claims("", &r.report);
    if let Some(p) = r.common_period {
        claims.push(claim("common_period", p, Method::Fitted));
    }
    claims.push(claim("period_spread", r.period_spread, Method::Fitted));
    claims.push(claim("phase_spread_change", r.phase_spread_change, Method::Fitted));
    let details = json!({
        "leader": r.leader,
        "periods": r.periods,
        "period_test_passed": r.period_test_passed,
        "phase_test_passed": r.phase_test_passed,
        "certificate": to_value(&r.report),
        "leader_certificate": r.leader_report.as_ref().map(|l| to_value(&l.report)),
    });
    Ok(Outcome { status: Status::from_report(&r.report), claims, details, tables: vec![("phases".into(), r.phases.clone())] })
}

fn heat(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let r = heat_zero_flux_experiment(&cfg.heat.clone().unwrap_or_default(), seed)?;
    let mut claims = vec![
        claim("lambda_certified", r.lambda_certified, r.certificate.rate.method),
        claim("lambda_closed_form", r.lambda_closed_form, Method::ClosedForm),
        claim("mass_drift", r.mass_drift, Method::Sampled),
    ];
    if let Some(fit) = &r.fit {
        claims.push(claim("fitted_exponent", fit.slope, Method::Fitted));
        claims.push(claim("fit_relative_error", r.fit_relative_error, Method::Fitted));
    }
    Ok(Outcome { status: Status::from_report(&r.certificate), claims, details: to_value(&r), tables: vec![("decay".into(), r.table.clone())] })
}

fn reaction(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let r = reaction_diffusion_experiment(&cfg.reaction_diffusion.clone().unwrap_or_default(), seed)?;
    let mut claims = vec![
        claim("lambda_certified", r.lambda_certified, r.certificate.rate.method),
        claim("reaction_rate", r.reaction_rate.value, r.reaction_rate.method),
        claim("laplacian_rate", r.laplacian_rate, Method::Eigen),
        claim("q_final_over_initial", r.q_final / r.q_initial, Method::Fitted),
    ];
    if let Some(fit) = &r.fit {
        claims.push(claim("fitted_exponent", fit.slope, Method::Fitted));
    }
    Ok(Outcome { status: Status::from_report(&r.certificate), claims, details: to_value(&r), tables: vec![("homogenization".into(), r.table.clone())] })
}

fn poisson(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let r = nonlinear_poisson_experiment(&cfg.poisson.clone().unwrap_or_default(), seed)?;
    let claims = vec![
        claim("lambda_omega", r.lambda_omega, Method::Eigen),
        claim("lambda_closed_form", r.lambda_closed_form, Method::ClosedForm),
        claim("certified_rate", r.certificate.rate.value, r.certificate.rate.method),
        claim("df_rate", r.df_rate, Method::Sampled),
        claim("max_pairwise_distance", r.max_pairwise_distance, Method::Sampled),
        claim("residual", r.residual, Method::Sampled),
    ];
    let status = Status::certified_if(r.certificate.is_certified() && r.existence_certified);
    Ok(Outcome { status, claims, details: to_value(&r), tables: vec![("refinement".into(), r.refinement.clone()), ("solution".into(), r.solution.clone())] })
}

fn sobolev(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let r = sobolev_rate_experiment(&cfg.sobolev_rate.clone().unwrap_or_default(), seed)?;
    let mut claims = Vec::new();
    for row in &r.rows {
        claims.push(claim(format!("heat_k{}", row.k), row.heat.value, row.heat.method));
        claims.push(claim(format!("transport_k{}", row.k), row.transport.value, row.transport.method));
        claims.push(claim(format!("burgers_k{}", row.k), row.burgers.value, row.burgers.method));
    }
    Ok(Outcome { status: Status::Completed, claims, details: to_value(&r), tables: vec![("rates".into(), r.table.clone())] })
}

fn vanishing(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let c = cfg.vanishing_osl.clone().unwrap_or_default();
    let family = RegularizedFamily::from_spec(&c.family, c.n, c.schedule.clone());
    let u0 = sine_initial(c.n, c.initial_amplitude, c.initial_offset);
    let r = vanishing_osl_experiment(&family, &u0, &c, seed)?;
    let mut claims: Vec<Claim> = r.epsilons.iter().zip(&r.rates).map(|(e, v)| claim(format!("rate_eps_{e}"), *v, r.rate_method)).collect();
    claims.extend(r.differences.iter().enumerate().map(|(i, d)| claim(format!("difference_{i}"), *d, Method::Fitted)));
    if let Some(w) = r.limit_weak_residual {
        claims.push(claim("limit_weak_residual", w, Method::Fitted));
    }
    claims.push(claim("bound_function", r.bound_function, Method::ClosedForm));
    let status = Status::certified_if(r.failing.is_empty());
    Ok(Outcome { status, claims, details: to_value(&r), tables: vec![("levels".into(), r.table.clone()), ("profiles".into(), r.profiles.clone())] })
}
