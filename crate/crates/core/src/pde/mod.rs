//! Semi-discretized PDE experiments: zero-flux heat, reaction-diffusion
//! homogenization, a nonlinear Poisson fixed point, Sobolev rates and
//! vanishing-viscosity limits.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::flows::{fit_exponent, ExponentFit};

pub mod discretization;
pub mod heat;
pub mod poisson;
pub mod reaction;
pub mod sobolev;
pub mod vanishing;

pub use discretization::Discretization;
pub use heat::{heat_zero_flux_experiment, HeatConfig, HeatReport};
pub use poisson::{nonlinear_poisson_experiment, PoissonConfig, PoissonReport};
pub use reaction::{reaction_diffusion_experiment, Reaction, ReactionConfig, ReactionReport, ReactionSpec};
pub use sobolev::{sobolev_rate, sobolev_rate_experiment, SobolevRateConfig, SobolevRateReport};
pub use vanishing::{sine_initial, vanishing_osl_experiment, FamilySpec, RegularizedFamily, VanishingConfig, VanishingReport};

/// Uniform random state in [−amplitude, amplitude]^n.
pub fn random_state(n: usize, amplitude: f64, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DVector::from_fn(n, |_, _| amplitude * rng.gen_range(-1.0..1.0))
}

/// Exponential fit of `values` restricted to t ∈ [t_lo, t_hi].
pub fn fit_window(times: &[f64], values: &[f64], t_lo: f64, t_hi: f64, floor: f64) -> Option<ExponentFit> {
    let (t, v): (Vec<f64>, Vec<f64>) = times.iter().zip(values).filter(|(t, _)| **t >= t_lo - 1e-12 && **t <= t_hi + 1e-12).map(|(t, v)| (*t, *v)).unzip();
    fit_exponent(&t, &v, floor)
}

/// Largest stable step of the explicit scheme for diffusivity α on a d-dimensional
/// grid of spacing h, scaled by `cfl`.
pub fn diffusive_dt(h: f64, dims: usize, alpha: f64, cfl: f64) -> f64 {
    cfl * h * h / (2.0 * dims as f64 * alpha)
}
