//! Right-Gateaux semi-inner products on ℓ^p and discrete Sobolev spaces.
//!
//! For a norm ‖·‖ the semi-inner product is `[u, v] = ‖u‖ · d⁺/dh ‖u + hv‖` at
//! h = 0. On ℓ^p it has the closed forms implemented in [`sip`]. The discrete
//! Sobolev norm is `‖u‖_{k,p} = (Σ_{|α|≤k} ‖D^α u‖_p²)^{1/2}`, so that
//! `[u, v]_{k,p} = Σ_α [D^α u, D^α v]_p` and `[u, u] = ‖u‖²`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{contract_err, dim_err, Result};
use crate::grid::{multi_indices, partial, Entry, Grid, GridFunction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NormKind {
    Lp { p: f64 },
    SobolevKp { k: u32, p: f64 },
}

impl NormKind {
    pub fn p(&self) -> f64 {
        match *self {
            NormKind::Lp { p } | NormKind::SobolevKp { p, .. } => p,
        }
    }

    pub fn k(&self) -> u32 {
        match *self {
            NormKind::Lp { .. } => 0,
            NormKind::SobolevKp { k, .. } => k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub kind: NormKind,
    /// Spacing per axis; the quadrature weight of a cell is their product.
    pub spacing: Vec<f64>,
}

impl NormSpec {
    /// ℓ^p norm on a unit-spacing 1D grid.
    pub fn lp(p: f64) -> Self {
        Self { kind: NormKind::Lp { p }, spacing: vec![1.0] }
    }

    pub fn on_grid(kind: NormKind, grid: &Grid) -> Self {
        Self { kind, spacing: grid.spacing.clone() }
    }

    pub fn p(&self) -> f64 {
        self.kind.p()
    }

    pub fn k(&self) -> u32 {
        self.kind.k()
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        if !(p >= 1.0) {
            return contract_err(format!("norm exponent p = {p} must lie in [1, inf]"));
        }
        if self.spacing.is_empty() || self.spacing.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return contract_err("norm spacing must be nonempty, positive and finite");
        }
        Ok(())
    }

    pub fn quadrature_weight(&self) -> f64 {
        self.spacing.iter().product()
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        self.validate()?;
        if self.spacing.len() != grid.ndim() {
            return dim_err(format!("norm has {} axes, grid has {}", self.spacing.len(), grid.ndim()));
        }
        for (a, b) in self.spacing.iter().zip(&grid.spacing) {
            if (a - b).abs() > 1e-12 * a.max(*b) {
                return dim_err(format!("norm spacing {a} differs from grid spacing {b}"));
            }
        }
        Ok(())
    }

    /// Derivative multi-indices entering the norm, lowest order first.
    pub fn terms(&self, ndim: usize) -> Vec<Vec<usize>> {
        (0..=self.k() as usize).flat_map(|j| multi_indices(ndim, j)).collect()
    }
}

/// ℓ^p norm of `x` with uniform quadrature weight `w`.
pub fn lp_norm<T: Entry>(x: &[T], w: f64, p: f64) -> f64 {
    if p.is_infinite() {
        return x.iter().map(|v| v.modulus()).fold(0.0, f64::max);
    }
    if p == 1.0 {
        return w * x.iter().map(|v| v.modulus()).sum::<f64>();
    }
    if p == 2.0 {
        return (w * x.iter().map(|v| v.modulus().powi(2)).sum::<f64>()).sqrt();
    }
    let m = x.iter().map(|v| v.modulus()).fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    m * (w * x.iter().map(|v| (v.modulus() / m).powf(p)).sum::<f64>()).powf(1.0 / p)
}

/// ℓ^p semi-inner product of `x` and `y` with uniform quadrature weight `w`.
pub fn lp_sip<T: Entry>(x: &[T], y: &[T], w: f64, p: f64) -> f64 {
    let n = lp_norm(x, w, p);
    if n == 0.0 {
        return 0.0;
    }
    if p == 2.0 {
        return w * x.iter().zip(y).map(|(a, b)| a.re_inner(*b)).sum::<f64>();
    }
    if p.is_infinite() {
        let best = x
            .iter()
            .zip(y)
            .filter(|(a, _)| a.modulus() == n)
            .map(|(a, b)| a.re_inner(*b) / n)
            .fold(f64::NEG_INFINITY, f64::max);
        return n * best;
    }
    if p == 1.0 {
        let s: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| {
                let m = a.modulus();
                if m == 0.0 {
                    b.modulus()
                } else {
                    a.re_inner(*b) / m
                }
            })
            .sum();
        return n * w * s;
    }
    let s: f64 = x
        .iter()
        .zip(y)
        .filter(|(a, _)| a.modulus() > 0.0)
        .map(|(a, b)| {
            let m = a.modulus();
            (m / n).powf(p - 1.0) * a.re_inner(*b) / m
        })
        .sum();
    n * w * s
}

fn derivatives<T: Entry>(u: &GridFunction<T>, spec: &NormSpec) -> Vec<Vec<T>> {
    spec.terms(u.grid.ndim())
        .iter()
        .map(|alpha| {
            if alpha.iter().all(|&a| a == 0) {
                u.values.clone()
            } else {
                partial(&u.grid, alpha, &u.values)
            }
        })
        .collect()
}

fn check_nonempty<T: Entry>(u: &GridFunction<T>) -> Result<()> {
    if u.is_empty() {
        return dim_err("empty grid function");
    }
    Ok(())
}

pub fn norm<T: Entry>(u: &GridFunction<T>, spec: &NormSpec) -> Result<f64> {
    check_nonempty(u)?;
    spec.check_grid(&u.grid)?;
    let w = spec.quadrature_weight();
    let p = spec.p();
    if spec.k() == 0 {
        return Ok(lp_norm(&u.values, w, p));
    }
    let s: f64 = derivatives(u, spec).iter().map(|d| lp_norm(d, w, p).powi(2)).sum();
    Ok(s.sqrt())
}

pub fn sip<T: Entry>(u: &GridFunction<T>, v: &GridFunction<T>, spec: &NormSpec) -> Result<f64> {
    check_nonempty(u)?;
    if u.grid != v.grid {
        return dim_err("semi-inner product arguments live on different grids");
    }
    spec.check_grid(&u.grid)?;
    let w = spec.quadrature_weight();
    let p = spec.p();
    if spec.k() == 0 {
        return Ok(lp_sip(&u.values, &v.values, w, p));
    }
    let du = derivatives(u, spec);
    let dv = derivatives(v, spec);
    Ok(du.iter().zip(&dv).map(|(a, b)| lp_sip(a, b, w, p)).sum())
}

/// Result of the difference-quotient oracle.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FdOracle {
    /// Linear extrapolation to h = 0 from the two smallest steps (the quotient
    /// itself when only one step is given).
    pub value: f64,
    /// The one-sided quotient at the smallest step.
    pub last_quotient: f64,
    /// (h, quotient) pairs in the order given.
    pub quotients: Vec<(f64, f64)>,
    pub converged: bool,
}

/// Default step list for [`sip_fd_oracle`], scaled to the sizes of u and v.
pub fn default_h_list(u_norm: f64, v_norm: f64) -> Vec<f64> {
    let s = if v_norm > 0.0 && u_norm > 0.0 { u_norm / v_norm } else { 1.0 };
    (0..6).map(|k| s * 1e-3 * 0.5f64.powi(k)).collect()
}

/// One-sided difference quotients ‖u‖(‖u+hv‖ − ‖u‖)/h over `h_list`.
pub fn sip_fd_oracle<T: Entry>(u: &GridFunction<T>, v: &GridFunction<T>, spec: &NormSpec, h_list: &[f64]) -> Result<FdOracle> {
    if h_list.is_empty() || h_list.iter().any(|&h| !(h > 0.0)) || h_list.windows(2).any(|w| w[1] >= w[0]) {
        return contract_err("h_list must be nonempty, positive and strictly decreasing");
    }
    if u.grid != v.grid {
        return dim_err("oracle arguments live on different grids");
    }
    let nu = norm(u, spec)?;
    let mut quotients = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let shifted: Vec<T> = u.values.iter().zip(&v.values).map(|(a, b)| *a + *b * h).collect();
        let ns = norm(&GridFunction { grid: u.grid.clone(), values: shifted }, spec)?;
        quotients.push((h, nu * (ns - nu) / h));
    }
    let extrapolate = |a: (f64, f64), b: (f64, f64)| (a.0 * b.1 - b.0 * a.1) / (a.0 - b.0);
    let m = quotients.len();
    let last_quotient = quotients[m - 1].1;
    let (value, converged) = match m {
        1 => (last_quotient, false),
        2 => {
            let d = extrapolate(quotients[0], quotients[1]);
            (d, (quotients[1].1 - quotients[0].1).abs() <= 1e-6 * last_quotient.abs().max(1.0))
        }
        _ => {
            let d1 = extrapolate(quotients[m - 3], quotients[m - 2]);
            let d2 = extrapolate(quotients[m - 2], quotients[m - 1]);
            (d2, (d2 - d1).abs() <= 1e-6 * d2.abs().max(1.0))
        }
    };
    Ok(FdOracle { value, last_quotient, quotients, converged })
}

/// A real finite-dimensional normed space: a grid together with a norm.
///
/// This is the setting in which operators act; vectors are flat slices in the
/// grid's value layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Space {
    grid: Grid,
    spec: NormSpec,
}

impl Space {
    pub fn new(grid: Grid, kind: NormKind) -> Result<Self> {
        let spec = NormSpec::on_grid(kind, &grid);
        spec.validate()?;
        Ok(Self { grid, spec })
    }

    /// ℓ^p on R^n with unit weights.
    pub fn lp(n: usize, p: f64) -> Self {
        Self { grid: Grid::points(n), spec: NormSpec::lp(p) }
    }

    pub fn euclidean(n: usize) -> Self {
        Self::lp(n, 2.0)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn spec(&self) -> &NormSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn p(&self) -> f64 {
        self.spec.p()
    }

    pub fn k(&self) -> u32 {
        self.spec.k()
    }

    /// ℓ^p companion of this space on R^m with unit weights, used as the
    /// default codomain of weights that do not declare one.
    pub fn plain_lp(&self, m: usize) -> Space {
        Space::lp(m, self.p())
    }

    fn wrap(&self, x: &[f64]) -> GridFunction {
        assert_eq!(x.len(), self.dim(), "vector length does not match space dimension");
        GridFunction { grid: self.grid.clone(), values: x.to_vec() }
    }

    /// Norm of a flat vector. Panics on a length mismatch.
    pub fn norm(&self, x: &[f64]) -> f64 {
        if self.k() == 0 {
            return lp_norm(x, self.spec.quadrature_weight(), self.p());
        }
        norm(&self.wrap(x), &self.spec).expect("space invariants hold")
    }

    /// Semi-inner product of flat vectors. Panics on a length mismatch.
    pub fn sip(&self, x: &[f64], y: &[f64]) -> f64 {
        if self.k() == 0 {
            assert_eq!(x.len(), y.len());
            return lp_sip(x, y, self.spec.quadrature_weight(), self.p());
        }
        sip(&self.wrap(x), &self.wrap(y), &self.spec).expect("space invariants hold")
    }

    /// Matrices of the derivative terms D^α, identity first.
    pub fn derivative_matrices(&self) -> Vec<DMatrix<f64>> {
        let n = self.dim();
        self.spec
            .terms(self.grid.ndim())
            .iter()
            .map(|alpha| {
                if alpha.iter().all(|&a| a == 0) {
                    return DMatrix::identity(n, n);
                }
                let mut m = DMatrix::zeros(n, n);
                let mut e = vec![0.0; n];
                for j in 0..n {
                    e[j] = 1.0;
                    let col = partial(&self.grid, alpha, &e);
                    e[j] = 0.0;
                    for (i, v) in col.into_iter().enumerate() {
                        m[(i, j)] = v;
                    }
                }
                m
            })
            .collect()
    }

    /// Gram matrix G with ‖x‖² = xᵀGx. Only meaningful for p = 2.
    pub fn gram(&self) -> DMatrix<f64> {
        let w = self.spec.quadrature_weight();
        if self.k() == 0 {
            return DMatrix::identity(self.dim(), self.dim()) * w;
        }
        let mut g = DMatrix::zeros(self.dim(), self.dim());
        for d in self.derivative_matrices() {
            g += d.transpose() * &d;
        }
        g * w
    }

    /// True when the norm comes from an inner product.
    pub fn is_hilbert(&self) -> bool {
        self.p() == 2.0
    }
}
