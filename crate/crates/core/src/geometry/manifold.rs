//! Contraction to an invariant submanifold φ⁻¹(0).

use nalgebra::DVector;

use crate::error::Result;
use crate::flows::VectorField;
use crate::measures::{nonlinear_rate, Method};
use crate::report::{ContractionReport, CrossCheck, Diagnostic, HypothesisCheck};
use crate::sampler::StateSampler;
use crate::sip::Space;

use super::{fitted_decay, CrossCheckOptions, Submersion};

/// Points of φ⁻¹(0) obtained by projecting the ambient samples.
pub fn manifold_samples(sub: &Submersion, sampler: &StateSampler) -> StateSampler {
    sampler.map_states(|u| sub.project(u, 1e-10, 60))
}

/// Largest ‖Dφ(w) f(t, w)‖ / (1 + ‖f(t, w)‖) over points w of the manifold.
pub fn tangency_residual(f: &VectorField, sub: &Submersion, on_manifold: &StateSampler) -> f64 {
    if on_manifold.is_empty() {
        return f64::INFINITY;
    }
    on_manifold
        .samples()
        .iter()
        .map(|(t, w)| {
            let fw = f.eval(*t, w);
            (sub.jacobian(w) * &fw).norm() / (1.0 + fw.norm())
        })
        .fold(0.0, f64::max)
}

/// Largest ⟨φ, Dφ f⟩ / ‖φ‖² over ambient samples off the manifold: the decay
/// rate of φ itself along the flow.
pub fn normal_decay_rate(f: &VectorField, sub: &Submersion, sampler: &StateSampler) -> f64 {
    sampler
        .samples()
        .iter()
        .filter_map(|(t, u)| {
            let phi = sub.eval(u);
            let n2 = phi.norm_squared();
            (n2 > 1e-24).then(|| phi.dot(&(sub.jacobian(u) * f.eval(*t, u))) / n2)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Certifies ‖φ(u(t))‖ ≤ e^{λt}‖φ(u(0))‖ from tangency of f to φ⁻¹(0),
/// surjectivity of Dφ and a negative sampled Dφ-weighted rate.
pub fn certify_manifold_contraction(
    f: &VectorField,
    sub: &Submersion,
    space: &Space,
    sampler: &StateSampler,
    cross: Option<&CrossCheckOptions>,
) -> Result<ContractionReport> {
    let on_m = manifold_samples(sub, sampler);
    let tangency = HypothesisCheck::at_most("tangency", tangency_residual(f, sub, &on_m), 1e-8, on_m.len()).with_seed(sampler.seed());
    let min_sv = sampler
        .samples()
        .iter()
        .chain(on_m.samples())
        .map(|(_, u)| sub.min_singular_value(u))
        .fold(f64::INFINITY, f64::min);
    let surjective = HypothesisCheck::above("surjectivity", min_sv, 1e-8, sampler.len() + on_m.len());
    let rate = nonlinear_rate(f, &sub.weight(space), space, sampler)?;
    let lambda = rate.value;
    let rate_check = HypothesisCheck::below("normal_contraction", lambda, 0.0, rate.sample_count).with_seed(sampler.seed());
    let mut report = ContractionReport::from_checks(rate, vec![tangency, surjective, rate_check], &[], format!("||phi(u(t))|| <= exp({lambda} t) ||phi(u(0))||"));
    report.seed = sampler.seed();
    report.diagnostics.push(Diagnostic::new("manifold_coverage", on_m.len() as f64 / sampler.len().max(1) as f64, Method::Sampled));
    report.diagnostics.push(Diagnostic::new("normal_decay_rate", normal_decay_rate(f, sub, sampler), Method::Sampled));
    if report.is_certified() {
        if let Some(opts) = cross {
            let (s, w) = (sub.clone(), space.plain_lp(sub.codim()));
            let quantity = move |u: &DVector<f64>| w.norm(s.eval(u).as_slice());
            report.cross_check = Some(CrossCheck::new("||phi(u)||", fitted_decay(f, &quantity, opts)?, lambda));
        }
    }
    Ok(report)
}
