//! Experiment listing.

use crate::config::ExperimentKind;

pub struct Entry {
    pub kind: ExperimentKind,
    pub description: &'static str,
    /// Result or example the experiment exercises.
    pub anchor: &'static str,
    /// Keys that have no default.
    pub required: &'static [&'static str],
}

pub fn entries() -> Vec<Entry> {
    use ExperimentKind::*;
    let e = |kind, description, anchor, required| Entry { kind, description, anchor, required };
    vec![
        e(Measure, "matrix measures mu_p with finite-difference oracle and spectral abscissa", "Weighted contraction rate (matrix measure)", &["measure.matrix"]),
        e(WeightedRate, "weighted contraction rate of a constant matrix under a weight", "Contraction in an invertibly weighted space", &["weighted_rate.matrix"]),
        e(OptimizeWeight, "diagonal search for the asymptotic rate lambda_b with condition bound b", "Asymptotic contraction rate (radius-b family of weights)", &["optimize_weight.matrix"]),
        e(GrowthBound, "perturbation growth against the integrated weighted rate", "Growth of perturbations in weighted spaces", &["growth_bound.matrix", "growth_bound.u0", "growth_bound.du0"]),
        e(Mle, "Benettin maximum Lyapunov exponent against mu_p and lambda_b", "Asymptotically contracting dynamics (Lyapunov exponent bound)", &["mle.matrix"]),
        e(Subspace, "contraction transverse to an invariant subspace", "Contraction to an invariant subspace", &[]),
        e(Manifold, "contraction to an invariant submanifold", "Contraction to an invariant Hilbert submanifold", &[]),
        e(Symmetry, "equivariance, invariant limits and periodic Cauchy ratios", "Spatial and temporal symmetries (periodic heat equation)", &[]),
        e(LimitCycle, "Hopf oscillator limit cycle certificate with decay and period checks", "Contraction to a limit cycle", &[]),
        e(PhaseLocking, "coupled heterogeneous oscillators with a leader", "Phase-locking in heterogeneous limit cycles", &[]),
        e(Heat, "heat equation with zero-flux boundary: certified and fitted mean-free decay", "Heat equation with zero-flux boundaries", &[]),
        e(ReactionDiffusion, "homogenization of reaction-diffusion systems", "Suppressing pattern formation in reaction-diffusion systems", &[]),
        e(Poisson, "nonlinear Poisson fixed point via a contracting gradient flow", "Existence and uniqueness for a nonlinear Poisson equation", &[]),
        e(SobolevRate, "discrete Sobolev W^{k,p} rates of heat, transport and Burgers", "Regularity (weighted Sobolev rates)", &[]),
        e(VanishingOsl, "vanishing one-sided Lipschitz family and its weak limit", "Approximation family with uniform Lp contraction rate has a convergent subsequence", &[]),
    ]
}

pub fn list_text() -> String {
    let mut out = String::new();
    for entry in entries() {
        let required = if entry.required.is_empty() { "experiment".to_string() } else { format!("experiment, {}", entry.required.join(", ")) };
        out.push_str(&format!("{}\n  {}\n  anchor: {}\n  required: {}\n", entry.kind.name(), entry.description, entry.anchor, required));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covers_every_kind_in_order() {
        let kinds: Vec<_> = entries().iter().map(|e| e.kind).collect();
        assert_eq!(kinds, ExperimentKind::ALL.to_vec());
    }
}
