//! Deterministic samplers of (t, u) pairs for sampled suprema.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Default)]
pub struct StateSampler {
    samples: Vec<(f64, DVector<f64>)>,
    seed: Option<u64>,
    description: String,
}

impl StateSampler {
    pub fn new(samples: Vec<(f64, DVector<f64>)>, description: impl Into<String>) -> Self {
        Self { samples, seed: None, description: description.into() }
    }

    pub fn single(t: f64, u: DVector<f64>) -> Self {
        Self::new(vec![(t, u)], "single state")
    }

    pub fn from_states(t: f64, states: Vec<DVector<f64>>, description: impl Into<String>) -> Self {
        Self::new(states.into_iter().map(|u| (t, u)).collect(), description)
    }

    /// `count` states uniform in the box [lo, hi] at time `t`.
    pub fn uniform_box(lo: &[f64], hi: &[f64], count: usize, t: f64, seed: u64) -> Self {
        assert_eq!(lo.len(), hi.len(), "box corners differ in dimension");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..count)
            .map(|_| (t, DVector::from_fn(lo.len(), |i, _| if hi[i] > lo[i] { rng.gen_range(lo[i]..hi[i]) } else { lo[i] })))
            .collect();
        Self { samples, seed: Some(seed), description: format!("{count} uniform states in a box") }
    }

    /// Planar states on a polar grid r ∈ [r_min, r_max] × θ ∈ [0, 2π).
    pub fn annulus(r_min: f64, r_max: f64, n_r: usize, n_theta: usize) -> Self {
        let mut samples = Vec::with_capacity(n_r * n_theta);
        for i in 0..n_r {
            let r = if n_r == 1 { r_min } else { r_min + (r_max - r_min) * i as f64 / (n_r - 1) as f64 };
            for j in 0..n_theta {
                let th = std::f64::consts::TAU * j as f64 / n_theta as f64;
                samples.push((0.0, DVector::from_vec(vec![r * th.cos(), r * th.sin()])));
            }
        }
        Self::new(samples, format!("annulus r in [{r_min}, {r_max}], {n_r}x{n_theta} polar grid"))
    }

    /// Every state paired with every time in `times`.
    pub fn with_times(&self, times: &[f64]) -> Self {
        let samples = times.iter().flat_map(|&t| self.samples.iter().map(move |(_, u)| (t, u.clone()))).collect();
        Self { samples, seed: self.seed, description: format!("{} at {} times", self.description, times.len()) }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn extend(&mut self, other: &StateSampler) {
        self.samples.extend(other.samples.iter().cloned());
    }

    pub fn map_states(&self, f: impl Fn(&DVector<f64>) -> Option<DVector<f64>>) -> Self {
        let samples = self.samples.iter().filter_map(|(t, u)| f(u).map(|v| (*t, v))).collect();
        Self { samples, seed: self.seed, description: self.description.clone() }
    }

    pub fn samples(&self) -> &[(f64, DVector<f64>)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_sampler_is_reproducible() {
        let a = StateSampler::uniform_box(&[-1.0, 0.0], &[1.0, 2.0], 10, 0.0, 7);
        let b = StateSampler::uniform_box(&[-1.0, 0.0], &[1.0, 2.0], 10, 0.0, 7);
        assert_eq!(a.samples(), b.samples());
        assert!(a.samples().iter().all(|(_, u)| u[0] >= -1.0 && u[0] < 1.0 && u[1] >= 0.0 && u[1] < 2.0));
    }

    #[test]
    fn annulus_radii() {
        let s = StateSampler::annulus(0.5, 1.5, 3, 8);
        assert_eq!(s.len(), 24);
        let r: Vec<f64> = s.samples().iter().map(|(_, u)| u.norm()).collect();
        assert!((r[0] - 0.5).abs() < 1e-12 && (r[23] - 1.5).abs() < 1e-12);
    }
}
