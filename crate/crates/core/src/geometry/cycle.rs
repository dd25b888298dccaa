//! Limit cycles and phase-locking of heterogeneous oscillators.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{dim_err, Result};
use crate::flows::{fit_exponent, integrate, IntegrationOptions, VectorField};
use crate::measures::nonlinear_rate;
use crate::report::{ContractionReport, CrossCheck, Diagnostic, HypothesisCheck, Table};
use crate::sampler::StateSampler;
use crate::sip::Space;

use super::{manifold::manifold_samples, manifold::tangency_residual, Conjugacy, CrossCheckOptions, Projector, Submersion};

/// Times at which `values` crosses zero upward, by linear interpolation.
pub fn upward_crossings(times: &[f64], values: &[f64]) -> Vec<f64> {
    times
        .windows(2)
        .zip(values.windows(2))
        .filter(|(_, v)| v[0] < 0.0 && v[1] >= 0.0)
        .map(|(t, v)| t[0] + (t[1] - t[0]) * (-v[0]) / (v[1] - v[0]))
        .collect()
}

/// Mean spacing of the upward zero crossings in the second half of the record.
pub fn crossing_period(times: &[f64], values: &[f64]) -> Option<f64> {
    let t_mid = times.first()? + 0.5 * (times.last()? - times.first()?);
    let c: Vec<f64> = upward_crossings(times, values).into_iter().filter(|&t| t >= t_mid).collect();
    (c.len() >= 2).then(|| (c[c.len() - 1] - c[0]) / (c.len() - 1) as f64)
}

/// Wraps an angle to (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitCycleReport {
    pub report: ContractionReport,
    pub loop_samples: usize,
    pub min_loop_speed: f64,
    pub mean_loop_speed: f64,
    /// Period of h(u(t))₀ on each simulated trajectory.
    pub periods: Vec<f64>,
}

/// Certifies convergence of u(t) to a limit cycle on h⁻¹(φ⁻¹(0)).
///
/// The four hypotheses are checked on the conjugate field g = Dh f ∘ h⁻¹.
/// `sampler` yields ambient states in conjugate coordinates; loop samples are
/// their projections onto φ⁻¹(0). Cross-check initial conditions are in the
/// original coordinates.
pub fn certify_limit_cycle(
    f: &VectorField,
    sub: &Submersion,
    conj: &Conjugacy,
    tau: f64,
    space: &Space,
    sampler: &StateSampler,
    cross: Option<&CrossCheckOptions>,
) -> Result<LimitCycleReport> {
    if sub.dim() != f.dim() || conj.dim() != f.dim() || sub.codim() != 1 {
        return dim_err("limit cycle needs a scalar submersion and conjugacy on the state dimension");
    }
    let g = conj.conjugate_field(f);
    let on_loop = manifold_samples(sub, sampler);
    let seed = sampler.seed();
    let invariance = HypothesisCheck::at_most("loop_invariance", tangency_residual(&g, sub, &on_loop), 1e-8, on_loop.len()).with_seed(seed);
    let rate = nonlinear_rate(&g, &sub.weight(space), space, sampler)?;
    let lambda = rate.value;
    let contraction = HypothesisCheck::below("loop_contraction", lambda, 0.0, rate.sample_count).with_seed(seed);
    let mut sym_residual = 0.0_f64;
    let mut speeds = Vec::with_capacity(on_loop.len());
    for (t, w) in on_loop.samples() {
        let a = g.eval(*t, w);
        sym_residual = sym_residual.max((&a - g.eval(t + tau, w)).norm() / (1.0 + a.norm()));
        speeds.push(a.norm());
    }
    if on_loop.is_empty() {
        sym_residual = f64::INFINITY;
    }
    let symmetry = HypothesisCheck::at_most("loop_symmetry", sym_residual, 1e-8, on_loop.len()).with_seed(seed);
    let min_speed = speeds.iter().copied().fold(f64::INFINITY, f64::min);
    let mean_speed = if speeds.is_empty() { 0.0 } else { speeds.iter().sum::<f64>() / speeds.len() as f64 };
    let non_acc = HypothesisCheck::above("loop_non_accumulation", if speeds.is_empty() { 0.0 } else { min_speed }, 1e-6 * mean_speed, on_loop.len());
    let mut report = ContractionReport::from_checks(
        rate,
        vec![invariance, contraction, symmetry, non_acc],
        &[],
        format!("u(t) converges to a limit cycle on the preimage of the loop with rate {lambda}"),
    );
    report.seed = seed;
    report.diagnostics.push(Diagnostic::new("min_loop_speed", min_speed, crate::measures::Method::Sampled));
    let mut periods = Vec::new();
    if report.is_certified() {
        if let Some(opts) = cross {
            let mut exps = Vec::new();
            for ic in &opts.initial_conditions {
                let tr = integrate(f, ic, &IntegrationOptions::fixed(0.0, opts.t_end, opts.dt))?;
                let vs: Vec<DVector<f64>> = tr.states.iter().map(|u| conj.h(u)).collect();
                let q: Vec<f64> = vs.iter().map(|v| sub.eval(v)[0].abs()).collect();
                let floor = (q[0] * opts.relative_floor).max(1e-300);
                if let Some(fit) = fit_exponent(&tr.times, &q, floor) {
                    exps.push(fit.slope);
                }
                let x: Vec<f64> = vs.iter().map(|v| v[0]).collect();
                if let Some(p) = crossing_period(&tr.times, &x) {
                    periods.push(p);
                }
            }
            report.cross_check = Some(CrossCheck::new("loop distance |phi(h(u))|", exps, lambda));
        }
    }
    Ok(LimitCycleReport { report, loop_samples: on_loop.len(), min_loop_speed: min_speed, mean_loop_speed: mean_speed, periods })
}

/// n coupled planar oscillators: a stacked field in original coordinates,
/// one conjugacy per block and the phase offsets θ_i defining W.
#[derive(Debug, Clone)]
pub struct PhaseLockingSystem {
    pub field: VectorField,
    pub conjs: Vec<Conjugacy>,
    pub angles: Vec<f64>,
}

impl PhaseLockingSystem {
    pub fn n(&self) -> usize {
        self.conjs.len()
    }

    /// The blockwise conjugacy H(u) = (h_1(u_1), …, h_n(u_n)).
    pub fn stacked_conjugacy(&self) -> Conjugacy {
        let n = self.n();
        let dim = 2 * n;
        if self.conjs.iter().all(|c| c.linear.is_some()) {
            let mut s = DMatrix::zeros(dim, dim);
            for (i, c) in self.conjs.iter().enumerate() {
                s.view_mut((2 * i, 2 * i), (2, 2)).copy_from(&c.linear.as_ref().unwrap().0);
            }
            return Conjugacy::linear(s).expect("blockwise invertible");
        }
        let (c1, c2, c3) = (self.conjs.clone(), self.conjs.clone(), self.conjs.clone());
        let blockwise = move |cs: &[Conjugacy], u: &DVector<f64>, inv: bool| {
            let mut out = DVector::zeros(u.len());
            for (i, c) in cs.iter().enumerate() {
                let b = u.rows(2 * i, 2).into_owned();
                out.rows_mut(2 * i, 2).copy_from(&if inv { c.h_inv(&b) } else { c.h(&b) });
            }
            out
        };
        Conjugacy::new(dim, move |u| blockwise(&c1, u, false), move |v| blockwise(&c2, v, true)).with_jacobian(move |u| {
            let mut d = DMatrix::zeros(u.len(), u.len());
            for (i, c) in c3.iter().enumerate() {
                d.view_mut((2 * i, 2 * i), (2, 2)).copy_from(&c.dh(&u.rows(2 * i, 2).into_owned()));
            }
            d
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseLockingReport {
    pub report: ContractionReport,
    pub leader: Option<usize>,
    pub leader_report: Option<LimitCycleReport>,
    /// Period of each subsystem on the first simulated trajectory.
    pub periods: Vec<Option<f64>>,
    pub common_period: Option<f64>,
    /// max_i |T_i − T̄| / T̄.
    pub period_spread: f64,
    pub period_test_passed: bool,
    /// Largest change of a phase difference over the final quarter horizon.
    pub phase_spread_change: f64,
    pub phase_test_passed: bool,
    /// t and wrapped phase differences ψ_i − ψ_0 along the first trajectory.
    pub phases: Table,
}

/// Certifies phase-locking: a limit-cycle leader (a block with no incoming
/// coupling in conjugate coordinates) and a negative (I − P)-weighted rate of
/// the stacked conjugate field, with P the projection onto W.
///
/// `leader_sampler` yields planar ambient states for the leader certificate,
/// `torus_sampler` stacked states whose blocks are projected onto the loop.
/// With `cross` the coupled system is simulated regardless of the certificate
/// and the common-period and phase-spread tests are reported.
pub fn certify_phase_locking(
    sys: &PhaseLockingSystem,
    sub: &Submersion,
    tau: f64,
    space: &Space,
    leader_sampler: &StateSampler,
    torus_sampler: &StateSampler,
    cross: Option<&CrossCheckOptions>,
) -> Result<PhaseLockingReport> {
    let n = sys.n();
    if n == 0 || sys.field.dim() != 2 * n || sys.angles.len() != n || sub.dim() != 2 {
        return dim_err("phase locking needs n planar blocks, n angles and a planar loop");
    }
    let h = sys.stacked_conjugacy();
    let g = h.conjugate_field(&sys.field);
    let torus = torus_sampler.map_states(|v| {
        let mut w = v.clone();
        for i in 0..n {
            let b = sub.project(&v.rows(2 * i, 2).into_owned(), 1e-12, 60)?;
            w.rows_mut(2 * i, 2).copy_from(&b);
        }
        Some(w)
    });
    let leader = find_leader(&g, n, &torus);
    let leader_report = match leader {
        Some(i) => {
            let v_ref = torus.samples().first().map(|s| s.1.clone()).unwrap_or_else(|| DVector::zeros(2 * n));
            let gi = block_field(&g, i, v_ref);
            Some(certify_limit_cycle(&gi, sub, &Conjugacy::identity(2), tau, &space.plain_lp(2), leader_sampler, None)?)
        }
        None => None,
    };
    let leader_ok = leader_report.as_ref().is_some_and(|r| r.report.is_certified());
    let leader_check = HypothesisCheck::at_most("limit_cycle_leader", if leader_ok { 0.0 } else { 1.0 }, 0.0, leader_sampler.len());
    let report = if n == 1 {
        let mut r = leader_report.as_ref().map(|l| l.report.clone()).expect("a single uncoupled block is its own leader");
        r.hypotheses.insert(0, leader_check);
        r
    } else {
        let proj = Projector::rotation_shift(&sys.angles)?;
        let rate = nonlinear_rate(&g, &proj.weight()?, space, &torus)?;
        let lambda = rate.value;
        let followers = HypothesisCheck::below("phase_locked_followers", lambda, -1e-10, rate.sample_count).with_seed(torus.seed());
        let mut r = ContractionReport::from_checks(rate, vec![leader_check, followers], &[], format!("subsystems phase-lock onto W with rate {lambda}"));
        r.seed = torus.seed();
        r
    };
    let mut out = PhaseLockingReport {
        report,
        leader,
        leader_report,
        periods: Vec::new(),
        common_period: None,
        period_spread: f64::INFINITY,
        period_test_passed: false,
        phase_spread_change: f64::INFINITY,
        phase_test_passed: false,
        phases: Table::new(&[]),
    };
    if let Some(opts) = cross {
        simulate_locking(sys, &h, n, opts, &mut out)?;
    }
    Ok(out)
}

/// A block with ∂g_i/∂v_j = 0 for every j ≠ i at every torus sample.
fn find_leader(g: &VectorField, n: usize, torus: &StateSampler) -> Option<usize> {
    if n == 1 {
        return Some(0);
    }
    let jacs: Vec<DMatrix<f64>> = torus.samples().iter().map(|(t, v)| g.jacobian(*t, v)).collect();
    (0..n).find(|&i| {
        !jacs.is_empty()
            && jacs.iter().all(|j| {
                let scale = 1.0 + j.amax();
                (0..n).filter(|&k| k != i).all(|k| j.view((2 * i, 2 * k), (2, 2)).amax() <= 1e-9 * scale)
            })
    })
}

/// v_i ↦ g_i(t, v) with the other blocks frozen at `v_ref`.
fn block_field(g: &VectorField, i: usize, v_ref: DVector<f64>) -> VectorField {
    let (g1, g2, r1, r2) = (g.clone(), g.clone(), v_ref.clone(), v_ref);
    let embed = move |r: &DVector<f64>, w: &DVector<f64>| {
        let mut v = r.clone();
        v.rows_mut(2 * i, 2).copy_from(w);
        v
    };
    let e2 = embed.clone();
    VectorField::new(2, format!("leader block {i}"), move |t, w| g1.eval(t, &embed(&r1, w)).rows(2 * i, 2).into_owned())
        .with_jacobian(move |t, w| g2.jacobian(t, &e2(&r2, w)).view((2 * i, 2 * i), (2, 2)).into_owned())
}

fn simulate_locking(sys: &PhaseLockingSystem, h: &Conjugacy, n: usize, opts: &CrossCheckOptions, out: &mut PhaseLockingReport) -> Result<()> {
    let proj = Projector::rotation_shift(&sys.angles)?;
    let mut exps = Vec::new();
    for (k, ic) in opts.initial_conditions.iter().enumerate() {
        let tr = integrate(&sys.field, ic, &IntegrationOptions::fixed(0.0, opts.t_end, opts.dt))?;
        let vs: Vec<DVector<f64>> = tr.states.iter().map(|u| h.h(u)).collect();
        let q: Vec<f64> = vs.iter().map(|v| (proj.q() * v).norm()).collect();
        if let Some(fit) = fit_exponent(&tr.times, &q, (q[0] * opts.relative_floor).max(1e-300)) {
            exps.push(fit.slope);
        }
        if k > 0 {
            continue;
        }
        out.periods = (0..n)
            .map(|i| {
                let x: Vec<f64> = vs.iter().map(|v| v[2 * i]).collect();
                crossing_period(&tr.times, &x)
            })
            .collect();
        if out.periods.iter().all(Option::is_some) {
            let ps: Vec<f64> = out.periods.iter().flatten().copied().collect();
            let mean = ps.iter().sum::<f64>() / n as f64;
            out.common_period = Some(mean);
            out.period_spread = ps.iter().map(|p| (p - mean).abs() / mean).fold(0.0, f64::max);
            out.period_test_passed = out.period_spread <= 0.01;
        }
        let mut header = vec!["t".to_string()];
        header.extend((1..n).map(|i| format!("phase_diff_{i}")));
        let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut table = Table::new(&hdr);
        // Unwrapped differences so that linear drift is measured in full.
        let mut unwrapped: Vec<Vec<f64>> = vec![Vec::with_capacity(vs.len()); n];
        for (t, v) in tr.times.iter().zip(&vs) {
            let psi0 = v[1].atan2(v[0]);
            let mut row = vec![*t];
            for i in 1..n {
                let d = wrap_angle(v[2 * i + 1].atan2(v[2 * i]) - psi0);
                let u = match unwrapped[i].last() {
                    Some(&prev) => prev + wrap_angle(d - prev),
                    None => d,
                };
                unwrapped[i].push(u);
                row.push(d);
            }
            table.push(row);
        }
        out.phases = table;
        let start = tr.times.iter().position(|&t| t >= 0.75 * opts.t_end).unwrap_or(0);
        out.phase_spread_change = (1..n)
            .map(|i| unwrapped[i][start..].iter().map(|x| (x - unwrapped[i][start]).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        out.phase_test_passed = out.phase_spread_change < 1e-3;
    }
    out.report.cross_check = Some(CrossCheck::new("||Qv||", exps, out.report.rate.value));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossings_of_sine() {
        let t: Vec<f64> = (0..=4000).map(|k| k as f64 * 0.01).collect();
        let x: Vec<f64> = t.iter().map(|t| (2.0 * t).sin()).collect();
        assert!((crossing_period(&t, &x).unwrap() - PI).abs() < 1e-4);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
    }
}
