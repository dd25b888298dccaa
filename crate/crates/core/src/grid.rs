//! Grids and grid functions.
//!
//! Values are stored component-major: all grid points of component 0, then
//! component 1, and so on. Within a component the last axis varies fastest.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{contract_err, dim_err, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    #[serde(alias = "dirichlet_zero")]
    Dirichlet,
    #[serde(alias = "neumann_zero_flux")]
    Neumann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Points per axis.
    pub shape: Vec<usize>,
    /// Spacing per axis, in units of the spatial domain.
    pub spacing: Vec<f64>,
    pub boundary: Boundary,
    /// Number of field components stored at every point.
    pub components: usize,
}

impl Grid {
    pub fn new(shape: Vec<usize>, spacing: Vec<f64>, boundary: Boundary, components: usize) -> Result<Self> {
        if shape.is_empty() || shape.len() > 3 {
            return dim_err(format!("grid must have 1 to 3 axes, got {}", shape.len()));
        }
        if shape.len() != spacing.len() {
            return dim_err(format!("{} axes but {} spacings", shape.len(), spacing.len()));
        }
        if shape.iter().any(|&n| n == 0) || components == 0 {
            return dim_err("grid sizes and component count must be positive");
        }
        if spacing.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return contract_err("grid spacing must be positive and finite");
        }
        Ok(Self { shape, spacing, boundary, components })
    }

    /// A plain vector of `n` entries with unit spacing.
    pub fn points(n: usize) -> Self {
        Self { shape: vec![n.max(1)], spacing: vec![1.0], boundary: Boundary::Dirichlet, components: 1 }
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn n_points(&self) -> usize {
        self.shape.iter().product()
    }

    /// Total number of stored values.
    pub fn len(&self) -> usize {
        self.n_points() * self.components
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight of a single cell, the product of the spacings.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Strides of the point index, last axis fastest.
    pub fn strides(&self) -> Vec<usize> {
        let d = self.ndim();
        let mut s = vec![1; d];
        for a in (0..d.saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.shape[a + 1];
        }
        s
    }
}

/// Scalar type of grid function entries.
pub trait Entry:
    Copy + Send + Sync + Default + std::fmt::Debug + PartialEq + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + 'static
{
    fn modulus(self) -> f64;
    /// Re(conj(self) · other).
    fn re_inner(self, other: Self) -> f64;
}

impl Entry for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn re_inner(self, other: Self) -> f64 {
        self * other
    }
}

impl Entry for Complex64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn re_inner(self, other: Self) -> f64 {
        self.re * other.re + self.im * other.im
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T: Entry = f64> {
    pub grid: Grid,
    pub values: Vec<T>,
}

impl<T: Entry> GridFunction<T> {
    pub fn new(grid: Grid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return dim_err(format!("grid holds {} values, got {}", grid.len(), values.len()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let values = vec![T::default(); grid.len()];
        Self { grid, values }
    }

    /// A plain vector on a unit-spacing grid.
    pub fn from_vec(values: Vec<T>) -> Self {
        Self { grid: Grid::points(values.len()), values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Multi-indices α with |α| = order in `d` dimensions, in lexicographic order.
pub fn multi_indices(d: usize, order: usize) -> Vec<Vec<usize>> {
    fn rec(d: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() + 1 == d {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for a in (0..=left).rev() {
            cur.push(a);
            rec(d, left - a, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, order, &mut Vec::new(), &mut out);
    out
}

/// Applies the finite-difference partial derivative D^α to every component.
///
/// Order m along an axis is D2 applied ⌊m/2⌋ times followed by D1 if m is odd.
/// Stencils are centered in the interior and one-sided of second order at
/// non-periodic boundaries.
pub fn partial<T: Entry>(grid: &Grid, alpha: &[usize], values: &[T]) -> Vec<T> {
    let mut out = values.to_vec();
    for (axis, &m) in alpha.iter().enumerate() {
        for _ in 0..m / 2 {
            out = along_axis(grid, axis, &out, 2);
        }
        if m % 2 == 1 {
            out = along_axis(grid, axis, &out, 1);
        }
    }
    out
}

fn along_axis<T: Entry>(grid: &Grid, axis: usize, values: &[T], order: usize) -> Vec<T> {
    let n = grid.shape[axis];
    let h = grid.spacing[axis];
    let stride = grid.strides()[axis];
    let npts = grid.n_points();
    let mut out = vec![T::default(); values.len()];
    let mut line_in = vec![T::default(); n];
    let mut line_out = vec![T::default(); n];
    for c in 0..grid.components {
        let base = c * npts;
        for start in 0..npts {
            if (start / stride) % n != 0 {
                continue;
            }
            for i in 0..n {
                line_in[i] = values[base + start + i * stride];
            }
            if order == 1 {
                d1_line(&line_in, &mut line_out, h, grid.boundary == Boundary::Periodic);
            } else {
                d2_line(&line_in, &mut line_out, h, grid.boundary == Boundary::Periodic);
            }
            for i in 0..n {
                out[base + start + i * stride] = line_out[i];
            }
        }
    }
    out
}

fn d1_line<T: Entry>(u: &[T], out: &mut [T], h: f64, periodic: bool) {
    let n = u.len();
    let c = 0.5 / h;
    if periodic {
        for i in 0..n {
            out[i] = (u[(i + 1) % n] - u[(i + n - 1) % n]) * c;
        }
        return;
    }
    match n {
        1 => out[0] = T::default(),
        2 => {
            out[0] = (u[1] - u[0]) * (1.0 / h);
            out[1] = out[0];
        }
        _ => {
            out[0] = (u[1] * 4.0 - u[0] * 3.0 - u[2]) * c;
            out[n - 1] = (u[n - 1] * 3.0 - u[n - 2] * 4.0 + u[n - 3]) * c;
            for i in 1..n - 1 {
                out[i] = (u[i + 1] - u[i - 1]) * c;
            }
        }
    }
}

fn d2_line<T: Entry>(u: &[T], out: &mut [T], h: f64, periodic: bool) {
    let n = u.len();
    let c = 1.0 / (h * h);
    if periodic {
        for i in 0..n {
            out[i] = (u[(i + 1) % n] + u[(i + n - 1) % n] - u[i] * 2.0) * c;
        }
        return;
    }
    match n {
        1 | 2 => out.iter_mut().for_each(|o| *o = T::default()),
        3 => {
            let v = (u[0] + u[2] - u[1] * 2.0) * c;
            out.iter_mut().for_each(|o| *o = v);
        }
        _ => {
            out[0] = (u[0] * 2.0 - u[1] * 5.0 + u[2] * 4.0 - u[3]) * c;
            out[n - 1] = (u[n - 1] * 2.0 - u[n - 2] * 5.0 + u[n - 3] * 4.0 - u[n - 4]) * c;
            for i in 1..n - 1 {
                out[i] = (u[i + 1] + u[i - 1] - u[i] * 2.0) * c;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_mismatch_is_dimension_error() {
        let g = Grid::new(vec![4], vec![0.25], Boundary::Periodic, 1).unwrap();
        assert!(GridFunction::new(g, vec![0.0; 3]).is_err());
    }

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(1, 3), vec![vec![3]]);
        assert_eq!(multi_indices(2, 2), vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(multi_indices(3, 1).len(), 3);
    }

    #[test]
    fn stencils_exact_on_quadratics() {
        let n = 7;
        let h = 0.1;
        let g = Grid::new(vec![n], vec![h], Boundary::Neumann, 1).unwrap();
        let u: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(2)).collect();
        let du = partial(&g, &[1], &u);
        let ddu = partial(&g, &[2], &u);
        for i in 0..n {
            assert!((du[i] - 2.0 * i as f64 * h).abs() < 1e-10);
            assert!((ddu[i] - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn periodic_derivative_of_sine() {
        let n = 64;
        let h = 1.0 / n as f64;
        let g = Grid::new(vec![n], vec![h], Boundary::Periodic, 1).unwrap();
        let k = 2.0 * std::f64::consts::PI;
        let u: Vec<f64> = (0..n).map(|i| (k * i as f64 * h).sin()).collect();
        let du = partial(&g, &[1], &u);
        let sym = (k * h).sin() / h;
        for i in 0..n {
            assert!((du[i] - sym * (k * i as f64 * h).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_partial_two_components() {
        let (nx, ny) = (5, 6);
        let (hx, hy) = (0.5, 0.25);
        let g = Grid::new(vec![nx, ny], vec![hx, hy], Boundary::Dirichlet, 2).unwrap();
        let mut u = vec![0.0; g.len()];
        for c in 0..2 {
            for i in 0..nx {
                for j in 0..ny {
                    u[c * nx * ny + i * ny + j] = (c as f64 + 1.0) * (i as f64 * hx) * (j as f64 * hy);
                }
            }
        }
        let dxy = partial(&g, &[1, 1], &u);
        for c in 0..2 {
            for p in 0..nx * ny {
                assert!((dxy[c * nx * ny + p] - (c as f64 + 1.0)).abs() < 1e-10);
            }
        }
    }
}
