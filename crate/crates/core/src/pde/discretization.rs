//! Finite-difference Laplacian and gradients on uniform 1D and 2D grids.

use nalgebra::DMatrix;
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::error::{contract_err, dim_err, Result};
use crate::grid::{Boundary, Grid};
use crate::linalg::LinearOp;
use crate::sip::{NormKind, Space};

/// Grid layout: Neumann uses cell centers x_i = (i + ½)h with h = 1/n,
/// Dirichlet interior nodes x_i = (i + 1)h with h = 1/(n + 1), periodic nodes
/// x_i = ih with h = 1/n.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub dims: usize,
    pub n: usize,
    pub h: f64,
    pub boundary: Boundary,
    pub grid: Grid,
    pub laplacian: LinearOp,
    pub gradients: Vec<LinearOp>,
}

impl Discretization {
    pub fn new(dims: usize, n: usize, boundary: Boundary) -> Result<Self> {
        if !(1..=2).contains(&dims) {
            return dim_err(format!("dims must be 1 or 2, got {dims}"));
        }
        if n < 3 {
            return contract_err(format!("need at least 3 points per axis, got {n}"));
        }
        let h = match boundary {
            Boundary::Dirichlet => 1.0 / (n + 1) as f64,
            _ => 1.0 / n as f64,
        };
        let grid = Grid::new(vec![n; dims], vec![h; dims], boundary, 1)?;
        let lap = assemble(dims, n, |i| stencil_d2(i, n, h, boundary));
        let gradients = (0..dims).map(|axis| LinearOp::Sparse(assemble_axis(dims, n, axis, |i| stencil_d1(i, n, h, boundary)))).collect();
        Ok(Self { dims, n, h, boundary, grid, laplacian: LinearOp::Sparse(lap), gradients })
    }

    pub fn n_points(&self) -> usize {
        self.grid.n_points()
    }

    pub fn laplacian_csr(&self) -> &CsrMatrix<f64> {
        match &self.laplacian {
            LinearOp::Sparse(m) => m,
            _ => unreachable!("the Laplacian is assembled sparse"),
        }
    }

    /// Coordinate of index i along an axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        match self.boundary {
            Boundary::Neumann => (i as f64 + 0.5) * self.h,
            Boundary::Dirichlet => (i + 1) as f64 * self.h,
            Boundary::Periodic => i as f64 * self.h,
        }
    }

    /// Coordinates of every grid point in storage order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.n_points())
            .map(|k| match self.dims {
                1 => vec![self.coordinate(k)],
                _ => vec![self.coordinate(k / self.n), self.coordinate(k % self.n)],
            })
            .collect()
    }

    /// The grid carrying `components` fields.
    pub fn grid_with(&self, components: usize) -> Result<Grid> {
        Grid::new(self.grid.shape.clone(), self.grid.spacing.clone(), self.boundary, components)
    }

    pub fn space(&self, components: usize, kind: NormKind) -> Result<Space> {
        Space::new(self.grid_with(components)?, kind)
    }

    /// Block-diagonal diag(α_1 Δ, …, α_m Δ) in component-major layout.
    pub fn diffusion(&self, alphas: &[f64]) -> CsrMatrix<f64> {
        let np = self.n_points();
        let lap = self.laplacian_csr();
        let mut coo = CooMatrix::new(np * alphas.len(), np * alphas.len());
        for (c, &a) in alphas.iter().enumerate() {
            for (i, j, v) in lap.triplet_iter() {
                coo.push(c * np + i, c * np + j, a * v);
            }
        }
        CsrMatrix::from(&coo)
    }

    /// Magnitude of the eigenvalue of Δ_h governing decay: the spectral gap for
    /// Neumann and periodic grids, the discrete Poincaré constant λ(Ω) for
    /// Dirichlet grids.
    pub fn closed_form_gap(&self) -> f64 {
        let s = 2.0 / (self.h * self.h);
        match self.boundary {
            Boundary::Neumann => s * (1.0 - (std::f64::consts::PI / self.n as f64).cos()),
            Boundary::Periodic => s * (1.0 - (std::f64::consts::TAU / self.n as f64).cos()),
            Boundary::Dirichlet => self.dims as f64 * s * (1.0 - (std::f64::consts::PI * self.h).cos()),
        }
    }

    pub fn dense_laplacian(&self) -> DMatrix<f64> {
        self.laplacian.to_dense()
    }
}

/// Second-difference stencil of row i as (column, weight) pairs.
fn stencil_d2(i: usize, n: usize, h: f64, b: Boundary) -> Vec<(usize, f64)> {
    let s = 1.0 / (h * h);
    let mut out = vec![(i, -2.0 * s)];
    for (nb, inside) in [(i.wrapping_sub(1), i > 0), (i + 1, i + 1 < n)] {
        if inside {
            out.push((nb, s));
            continue;
        }
        match b {
            Boundary::Periodic => out.push((if i == 0 { n - 1 } else { 0 }, s)),
            // Ghost value equals the boundary cell: zero flux.
            Boundary::Neumann => out[0].1 += s,
            Boundary::Dirichlet => {}
        }
    }
    out
}

/// Centered first-difference stencil with the same ghost rules.
fn stencil_d1(i: usize, n: usize, h: f64, b: Boundary) -> Vec<(usize, f64)> {
    let s = 0.5 / h;
    let mut out = Vec::with_capacity(3);
    for (nb, inside, w) in [(i.wrapping_sub(1), i > 0, -s), (i + 1, i + 1 < n, s)] {
        if inside {
            out.push((nb, w));
            continue;
        }
        match b {
            Boundary::Periodic => out.push((if i == 0 { n - 1 } else { 0 }, w)),
            Boundary::Neumann => out.push((i, w)),
            Boundary::Dirichlet => {}
        }
    }
    out
}

fn assemble(dims: usize, n: usize, stencil: impl Fn(usize) -> Vec<(usize, f64)>) -> CsrMatrix<f64> {
    let total = n.pow(dims as u32);
    let mut coo = CooMatrix::new(total, total);
    for axis in 0..dims {
        push_axis(&mut coo, dims, n, axis, &stencil);
    }
    CsrMatrix::from(&coo)
}

fn assemble_axis(dims: usize, n: usize, axis: usize, stencil: impl Fn(usize) -> Vec<(usize, f64)>) -> CsrMatrix<f64> {
    let total = n.pow(dims as u32);
    let mut coo = CooMatrix::new(total, total);
    push_axis(&mut coo, dims, n, axis, &stencil);
    CsrMatrix::from(&coo)
}

fn push_axis(coo: &mut CooMatrix<f64>, dims: usize, n: usize, axis: usize, stencil: &dyn Fn(usize) -> Vec<(usize, f64)>) {
    let stride = n.pow((dims - 1 - axis) as u32);
    let total = n.pow(dims as u32);
    for k in 0..total {
        let i = (k / stride) % n;
        let base = k - i * stride;
        for (j, w) in stencil(i) {
            coo.push(k, base + j * stride, w);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn neumann_rows_sum_to_zero() {
        for dims in [1, 2] {
            let d = Discretization::new(dims, 8, Boundary::Neumann).unwrap();
            let one = DVector::from_element(d.n_points(), 1.0);
            assert!(d.laplacian.apply(&one).amax() < 1e-12);
        }
    }

    #[test]
    fn coordinates_follow_layout() {
        let d = Discretization::new(2, 4, Boundary::Periodic).unwrap();
        assert_eq!(d.points()[5], vec![0.25, 0.25]);
        assert_eq!(d.points()[3], vec![0.0, 0.75]);
        let dd = Discretization::new(1, 3, Boundary::Dirichlet).unwrap();
        assert_eq!(dd.coordinate(0), 0.25);
    }

    #[test]
    fn gradient_of_linear_profile() {
        let d = Discretization::new(1, 10, Boundary::Dirichlet).unwrap();
        let u = DVector::from_fn(10, |i, _| d.coordinate(i));
        let g = d.gradients[0].apply(&u);
        for i in 1..9 {
            assert!((g[i] - 1.0).abs() < 1e-12);
        }
    }
}
