//! Contraction to an invariant subspace im(P).

use nalgebra::DVector;

use crate::error::Result;
use crate::flows::VectorField;
use crate::measures::nonlinear_rate;
use crate::report::{ContractionReport, CrossCheck, HypothesisCheck};
use crate::sampler::StateSampler;
use crate::sip::Space;
use crate::weights::{transient_bound, WeightFamily};

use super::{fitted_decay, CrossCheckOptions, Projector};

/// Largest ‖Q f(t, Pv)‖ / (1 + ‖f(t, Pv)‖) over the samples; passes at 1e-8.
pub fn check_subspace_invariance(f: &VectorField, proj: &Projector, sampler: &StateSampler) -> HypothesisCheck {
    let residual = sampler
        .samples()
        .iter()
        .map(|(t, v)| {
            let fv = f.eval(*t, &(proj.p() * v));
            (proj.q() * &fv).norm() / (1.0 + fv.norm())
        })
        .fold(0.0, f64::max);
    HypothesisCheck::at_most("invariance", residual, 1e-8, sampler.len()).with_seed(sampler.seed())
}

/// QΘ(t,u) for an inner weight Θ.
fn outer_q(proj: &Projector, inner: &WeightFamily) -> WeightFamily {
    let q = proj.q().clone();
    let (q2, th, th2) = (q.clone(), inner.clone(), inner.clone());
    let w = WeightFamily::custom("Q-weighted inner weight", inner.dim_in(), proj.dim(), inner.bound_b(), inner.is_time_varying(), move |t, u| &q * th.matrix(t, u));
    if inner.is_time_varying() {
        w.with_dtheta_dt(move |t, u| &q2 * th2.dtheta_dt(t, u).unwrap_or_else(|| nalgebra::DMatrix::zeros(q2.nrows(), q2.ncols())))
    } else {
        w
    }
}

/// Certifies ‖Qu(t)‖ ≤ e^{λt}‖Qu(0)‖ from invariance of im(P) and a negative
/// sampled Q-weighted rate. With an inner weight Θ the rate is that of QΘ and
/// the conclusion holds after the transient t_b.
pub fn certify_subspace_contraction(
    f: &VectorField,
    proj: &Projector,
    space: &Space,
    sampler: &StateSampler,
    inner: Option<&WeightFamily>,
    cross: Option<&CrossCheckOptions>,
) -> Result<ContractionReport> {
    let invariance = check_subspace_invariance(f, proj, sampler);
    let q_weight = proj.weight()?;
    let weight = match inner {
        Some(th) => outer_q(proj, th),
        None => q_weight,
    };
    let rate = nonlinear_rate(f, &weight, space, sampler)?;
    let rate_check = HypothesisCheck::below("subspace_contraction", rate.value, 0.0, rate.sample_count).with_seed(sampler.seed());
    let lambda = rate.value;
    let conclusion = match inner {
        Some(_) => format!("u(t) is asymptotically contracting to im(P) with rate {lambda}"),
        None => format!("||Qu(t)|| <= exp({lambda} t) ||Qu(0)||"),
    };
    let mut report = ContractionReport::from_checks(rate, vec![invariance, rate_check], &["invariance"], conclusion);
    report.seed = sampler.seed();
    if let Some(th) = inner {
        report.transient_bound = Some(transient_bound(lambda, th.bound_b()));
    }
    if report.is_certified() {
        if let Some(opts) = cross {
            let q = proj.q().clone();
            let sp = space.clone();
            let quantity = move |u: &DVector<f64>| sp.norm((&q * u).as_slice());
            report.cross_check = Some(CrossCheck::new("||Qu||", fitted_decay(f, &quantity, opts)?, lambda));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::CertificateStatus;
    use nalgebra::DMatrix;

    #[test]
    fn identity_dynamics_not_certified() {
        let n = 4;
        let f = VectorField::linear(DMatrix::identity(n, n));
        let p = Projector::mean(n, 1);
        let s = StateSampler::uniform_box(&[-1.0; 4], &[1.0; 4], 5, 0.0, 1);
        let r = certify_subspace_contraction(&f, &p, &Space::euclidean(n), &s, None, None).unwrap();
        assert!(r.hypothesis("invariance").unwrap().passed);
        assert!((r.rate.value - 1.0).abs() < 1e-12);
        assert_eq!(r.status, CertificateStatus::Withheld);
    }

    #[test]
    fn broken_invariance_detected() {
        let n = 3;
        let c = DVector::from_vec(vec![1.0, 0.0, -1.0]);
        let f = VectorField::new(n, "shifted", move |_, u| u + &c).with_jacobian(|_, _| DMatrix::identity(3, 3));
        let s = StateSampler::uniform_box(&[-1.0; 3], &[1.0; 3], 5, 0.0, 2);
        assert!(!check_subspace_invariance(&f, &Projector::mean(n, 1), &s).passed);
        let g = VectorField::linear(DMatrix::identity(n, n));
        let p = Projector::new(DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])).unwrap();
        assert!(check_subspace_invariance(&g, &p, &s).passed);
    }
}
