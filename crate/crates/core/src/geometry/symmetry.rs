//! Spatial and temporal symmetry checks.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{contract_err, Result};
use crate::flows::{integrate, IntegrationOptions, VectorField};
use crate::linalg::LinearOp;
use crate::report::{ContractionReport, HypothesisCheck};
use crate::sampler::StateSampler;
use crate::sip::Space;

use super::Conjugacy;

/// A symmetry acting on states: either a linear operator T or a
/// diffeomorphism h.
#[derive(Debug, Clone)]
pub enum GroupElement {
    Linear(LinearOp),
    Nonlinear(Conjugacy),
}

impl GroupElement {
    pub fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        match self {
            Self::Linear(t) => t.apply(u),
            Self::Nonlinear(h) => h.h(u),
        }
    }

    /// ‖f(t, gu) − Dg(u) f(t, u)‖ / (1 + ‖Dg(u) f(t, u)‖).
    pub fn residual(&self, f: &VectorField, t: f64, u: &DVector<f64>) -> f64 {
        let fu = f.eval(t, u);
        let pushed = match self {
            Self::Linear(op) => op.apply(&fu),
            Self::Nonlinear(h) => h.dh(u) * fu,
        };
        (f.eval(t, &self.apply(u)) - &pushed).norm() / (1.0 + pushed.norm())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivarianceReport {
    /// One check per group element, named `equivariance[i]`.
    pub checks: Vec<HypothesisCheck>,
    pub passed: bool,
    /// Present when every element passes and a certified contraction report
    /// was supplied.
    pub conclusion: Option<String>,
}

/// Checks f(t, gu) = Dg(u) f(t, u) on the samples for every group element.
pub fn check_equivariance(f: &VectorField, group: &[GroupElement], sampler: &StateSampler, contraction: Option<&ContractionReport>) -> EquivarianceReport {
    let checks: Vec<HypothesisCheck> = group
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let r = sampler.samples().iter().map(|(t, u)| g.residual(f, *t, u)).fold(0.0, f64::max);
            HypothesisCheck::at_most(format!("equivariance[{i}]"), r, 1e-8, sampler.len()).with_seed(sampler.seed())
        })
        .collect();
    let passed = checks.iter().all(|c| c.passed);
    let conclusion = (passed && contraction.is_some_and(|c| c.is_certified())).then(|| "limiting solution is invariant under every tested group element".to_string());
    EquivarianceReport { checks, passed, conclusion }
}

/// Largest ‖f(t, u) − f(t + τ, u)‖ / (1 + ‖f(t, u)‖) over the samples.
pub fn check_temporal_symmetry(f: &VectorField, tau: f64, sampler: &StateSampler) -> Result<HypothesisCheck> {
    if !(tau > 0.0) {
        return contract_err("tau must be positive");
    }
    let r = sampler
        .samples()
        .iter()
        .map(|(t, u)| {
            let a = f.eval(*t, u);
            (&a - f.eval(t + tau, u)).norm() / (1.0 + a.norm())
        })
        .fold(0.0, f64::max);
    Ok(HypothesisCheck::at_most("temporal_symmetry", r, 1e-8, sampler.len()).with_seed(sampler.seed()))
}

/// Successive period differences d_m = ‖u((m+1)τ) − u(mτ)‖ and their ratios.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CauchyReport {
    pub tau: f64,
    pub differences: Vec<f64>,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// Every ratio is below one.
    pub geometric: bool,
}

/// Simulates `periods` periods from `u0` with a step dividing τ and reports the
/// Cauchy-sequence diagnostics in the norm of `space`.
pub fn cauchy_diagnostics(f: &VectorField, u0: &DVector<f64>, tau: f64, periods: usize, dt: f64, space: &Space) -> Result<CauchyReport> {
    if !(tau > 0.0) || periods < 2 || !(dt > 0.0) {
        return contract_err("need tau > 0, dt > 0 and at least two periods");
    }
    let steps = (tau / dt).ceil().max(1.0);
    let opts = IntegrationOptions::fixed(0.0, tau * periods as f64, tau / steps).every(tau);
    let tr = integrate(f, u0, &opts)?;
    let differences: Vec<f64> = tr.states.windows(2).map(|w| space.norm((&w[1] - &w[0]).as_slice())).collect();
    let ratios: Vec<f64> = differences.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect();
    let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(CauchyReport { tau, differences, geometric: !ratios.is_empty() && max_ratio < 1.0, ratios, max_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn sign_flip_breaks_square() {
        let f = VectorField::new(3, "square", |_, u| u.map(|x| x * x));
        let s = StateSampler::uniform_box(&[-1.0; 3], &[1.0; 3], 10, 0.0, 4);
        let r = check_equivariance(&f, &[GroupElement::Linear(LinearOp::from(-DMatrix::<f64>::identity(3, 3)))], &s, None);
        assert!(!r.passed);
        let odd = VectorField::new(3, "cube", |_, u| u.map(|x| x * x * x));
        assert!(check_equivariance(&odd, &[GroupElement::Linear(LinearOp::from(-DMatrix::<f64>::identity(3, 3)))], &s, None).passed);
    }

    #[test]
    fn autonomous_is_periodic_for_any_tau() {
        let f = VectorField::linear(DMatrix::from_element(1, 1, -1.0));
        let s = StateSampler::uniform_box(&[-1.0], &[1.0], 5, 0.3, 1);
        for tau in [0.1, 0.7, 3.0] {
            let c = check_temporal_symmetry(&f, tau, &s).unwrap();
            assert_eq!(c.residual, 0.0);
        }
        assert!(check_temporal_symmetry(&f, 0.0, &s).is_err());
    }
}
