//! Weighted rates in discrete Sobolev norms W^{k,p}.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{contract_err, Result};
use crate::flows::{verify_growth_bound, GrowthBoundOptions, GrowthBoundReport, VectorField};
use crate::grid::{Boundary, Grid};
use crate::measures::{nonlinear_rate, RateEstimate};
use crate::report::Table;
use crate::sampler::StateSampler;
use crate::sip::{NormKind, Space};
use crate::weights::WeightFamily;

use super::random_state;
use super::vanishing::{burgers, sine_initial};

/// `sup M^{k,p}_Θ[Df]` over the samples, on `grid`.
pub fn sobolev_rate(f: &VectorField, k: u32, p: f64, theta: Option<&WeightFamily>, grid: &Grid, sampler: &StateSampler) -> Result<RateEstimate> {
    if k > 2 {
        return contract_err(format!("Sobolev order k = {k} exceeds 2"));
    }
    let space = Space::new(grid.clone(), NormKind::SobolevKp { k, p })?;
    let identity;
    let theta = match theta {
        Some(t) => t,
        None => {
            identity = WeightFamily::identity(space.dim());
            &identity
        }
    };
    nonlinear_rate(f, theta, &space, sampler)
}

/// Periodic 3-point heat operator αΔ_h.
pub fn periodic_heat(n: usize, alpha: f64) -> VectorField {
    let h = 1.0 / n as f64;
    VectorField::linear(DMatrix::from_fn(n, n, |i, j| {
        let s = alpha / (h * h);
        if i == j {
            -2.0 * s
        } else if (i + 1) % n == j || (j + 1) % n == i {
            s
        } else {
            0.0
        }
    }))
}

/// Periodic transport u_t = −u_x with centered differences.
pub fn periodic_transport(n: usize) -> VectorField {
    let h = 1.0 / n as f64;
    VectorField::linear(DMatrix::from_fn(n, n, |i, j| {
        if (i + 1) % n == j {
            -0.5 / h
        } else if (j + 1) % n == i {
            0.5 / h
        } else {
            0.0
        }
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SobolevRateConfig {
    pub n: usize,
    pub alpha: f64,
    /// Viscosity of the Burgers rate row.
    pub eps: f64,
    pub p: f64,
    pub orders: Vec<u32>,
    pub samples: usize,
    /// Amplitude of the bounded Burgers sample states.
    pub amplitude: f64,
    /// Horizon and step of the regularity check on a heat trajectory pair.
    pub t_end: f64,
    pub dt: f64,
}

impl Default for SobolevRateConfig {
    fn default() -> Self {
        Self { n: 32, alpha: 1.0, eps: 0.05, p: 2.0, orders: vec![0, 1, 2], samples: 4, amplitude: 1.0, t_end: 0.1, dt: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SobolevRateRow {
    pub k: u32,
    pub heat: RateEstimate,
    pub transport: RateEstimate,
    pub burgers: RateEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SobolevRateReport {
    pub rows: Vec<SobolevRateRow>,
    /// Heat rates are nonincreasing in k.
    pub heat_monotone: bool,
    /// max_k |transport rate|.
    pub transport_max_abs: f64,
    /// ‖φ − φ*‖_{k,p} ≤ b²e^{λt}‖φ(0) − φ*(0)‖_{k,p} on a heat pair at the
    /// highest order, with Θ = I.
    pub regularity: Option<GrowthBoundReport>,
    /// k, heat, transport, burgers.
    pub table: Table,
}

pub fn sobolev_rate_experiment(cfg: &SobolevRateConfig, seed: u64) -> Result<SobolevRateReport> {
    if cfg.n < 4 || cfg.orders.is_empty() {
        return contract_err("sobolev experiment needs n >= 4 and at least one order");
    }
    let n = cfg.n;
    let grid = Grid::new(vec![n], vec![1.0 / n as f64], Boundary::Periodic, 1)?;
    let heat = periodic_heat(n, cfg.alpha);
    let transport = periodic_transport(n);
    let bg = burgers(n, cfg.eps);
    let lin = StateSampler::single(0.0, DVector::zeros(n));
    let mut states = vec![sine_initial(n, cfg.amplitude, 0.0)];
    states.extend((0..cfg.samples).map(|k| random_state(n, cfg.amplitude, seed.wrapping_add(k as u64))));
    let bsamp = StateSampler::from_states(0.0, states, "sine and random bounded states").with_seed(seed);
    let mut rows = Vec::new();
    let mut table = Table::new(&["k", "heat", "transport", "burgers"]);
    for &k in &cfg.orders {
        let row = SobolevRateRow {
            k,
            heat: sobolev_rate(&heat, k, cfg.p, None, &grid, &lin)?,
            transport: sobolev_rate(&transport, k, cfg.p, None, &grid, &lin)?,
            burgers: sobolev_rate(&bg, k, cfg.p, None, &grid, &bsamp)?,
        };
        table.push(vec![k as f64, row.heat.value, row.transport.value, row.burgers.value]);
        rows.push(row);
    }
    let mut sorted: Vec<&SobolevRateRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.k);
    // Round-off in the Sobolev Gram scales with ‖αΔ_h‖ = 4αn².
    let scale = 4.0 * cfg.alpha * (n * n) as f64;
    let heat_monotone = sorted.windows(2).all(|w| w[1].heat.value <= w[0].heat.value + 1e-9 * scale);
    let transport_max_abs = rows.iter().map(|r| r.transport.value.abs()).fold(0.0, f64::max);
    let k_max = *cfg.orders.iter().max().unwrap();
    let regularity = if cfg.t_end > 0.0 {
        let space = Space::new(grid, NormKind::SobolevKp { k: k_max, p: cfg.p })?;
        let u0 = sine_initial(n, 1.0, 0.0);
        let u1 = &u0 + random_state(n, 0.1, seed.wrapping_add(99));
        let opts = GrowthBoundOptions::new(0.0, cfg.t_end, cfg.dt).with_pair(u1.clone());
        Some(verify_growth_bound(&heat, &WeightFamily::identity(n), &space, &u0, &(u1 - &u0), &opts)?)
    } else {
        None
    };
    Ok(SobolevRateReport { rows, heat_monotone, transport_max_abs, regularity, table })
}
