//! Example vector fields and conjugacies used by the experiments and tests.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use crate::error::{dim_err, Result};
use crate::flows::VectorField;
use crate::geometry::{rotation, Conjugacy, PhaseLockingSystem};

fn j2() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
}

/// Hopf normal form u̇ = (1 − |u|²)u + ωJu, i.e. ṙ = r(1 − r²), θ̇ = ω.
pub fn hopf(omega: f64) -> VectorField {
    VectorField::new(2, format!("hopf(omega={omega})"), move |_, u| u * (1.0 - u.norm_squared()) + j2() * u * omega)
        .with_jacobian(move |_, u| hopf_jacobian(u, omega))
}

fn hopf_jacobian(u: &DVector<f64>, omega: f64) -> DMatrix<f64> {
    DMatrix::identity(2, 2) * (1.0 - u.norm_squared()) - u * u.transpose() * 2.0 + j2() * omega
}

/// (1 − |v|²)v + (1 − x)Jv: the rotation stalls at (1, 0) on the unit circle.
pub fn hopf_with_equilibrium() -> VectorField {
    VectorField::new(2, "hopf with equilibrium at (1,0)", |_, v| v * (1.0 - v.norm_squared()) + j2() * v * (1.0 - v[0])).with_jacobian(|_, v| {
        let mut d = DMatrix::identity(2, 2) * (1.0 - v.norm_squared()) - v * v.transpose() * 2.0 + j2() * (1.0 - v[0]);
        let jv = j2() * v;
        d.column_mut(0).axpy(-1.0, &jv, 1.0);
        d
    })
}

/// u̇ = Ωu with Ω skew-symmetric (Ω_ij = (i − j)/n above the diagonal).
pub fn skew_rotation(n: usize) -> VectorField {
    let mut o = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let w = (1.0 + (j - i) as f64) / n as f64;
            o[(i, j)] = w;
            o[(j, i)] = -w;
        }
    }
    VectorField::linear(o)
}

/// [[1, s], [0, 1]].
pub fn shear_matrix(s: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, s, 0.0, 1.0])
}

/// Real root of x³ + x = y (Cardano, then two Newton steps).
pub fn cubic_inverse(y: f64) -> f64 {
    let d = (0.25 * y * y + 1.0 / 27.0).sqrt();
    let mut x = (0.5 * y + d).cbrt() + (0.5 * y - d).cbrt();
    for _ in 0..2 {
        x -= (x * x * x + x - y) / (3.0 * x * x + 1.0);
    }
    x
}

/// k(u) = u + u³ componentwise.
pub fn cubic_conjugacy(n: usize) -> Conjugacy {
    Conjugacy::new(n, |u| u.map(|x| x + x * x * x), |v| v.map(cubic_inverse))
        .with_jacobian(|u| DMatrix::from_diagonal(&u.map(|x| 1.0 + 3.0 * x * x)))
}

/// h = k⁻¹ ∘ (2·) ∘ k for the cubic k: a symmetry of any pullback of a linear field.
pub fn cubic_doubling(n: usize) -> Conjugacy {
    let h = |u: &DVector<f64>| u.map(|x| cubic_inverse(2.0 * (x + x * x * x)));
    Conjugacy::new(n, h, |v| v.map(|x| cubic_inverse(0.5 * (x + x * x * x)))).with_jacobian(move |u| {
        let hu = h(u);
        DMatrix::from_diagonal(&u.zip_map(&hu, |x, y| 2.0 * (1.0 + 3.0 * x * x) / (1.0 + 3.0 * y * y)))
    })
}

/// f(u) = u² componentwise.
pub fn square_field(n: usize) -> VectorField {
    VectorField::new(n, "square", |_, u| u.map(|x| x * x)).with_jacobian(|_, u| DMatrix::from_diagonal(&u.map(|x| 2.0 * x)))
}

/// f(t, u) = −u + sin(2πt).
pub fn forced_scalar() -> VectorField {
    VectorField::new(1, "forced scalar", |t, u| u.map(|x| -x + (TAU * t).sin())).with_jacobian(|_, _| DMatrix::from_element(1, 1, -1.0))
}

/// Oscillator 0 receives no input; every other oscillator listens to all others.
pub fn leader_adjacency(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i > 0 && i != j { 1.0 } else { 0.0 })
}

/// Hopf oscillators coupled in conjugate coordinates,
/// v̇_i = g_{ω_i}(v_i) + k Σ_j a_ij (R(θ_i − θ_j)v_j − v_i),
/// observed through linear conjugacies u_i = S_i⁻¹ v_i.
pub fn coupled_hopf(omegas: &[f64], coupling: f64, adjacency: &DMatrix<f64>, angles: &[f64], conjugacies: &[DMatrix<f64>]) -> Result<PhaseLockingSystem> {
    let n = omegas.len();
    if adjacency.shape() != (n, n) || angles.len() != n || conjugacies.len() != n || conjugacies.iter().any(|s| s.shape() != (2, 2)) {
        return dim_err("coupled oscillators need n frequencies, an n x n adjacency, n angles and n 2x2 conjugacies");
    }
    let mut c = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        let deg: f64 = adjacency.row(i).sum();
        for j in 0..n {
            if i != j && adjacency[(i, j)] != 0.0 {
                c.view_mut((2 * i, 2 * j), (2, 2)).copy_from(&(rotation(angles[i] - angles[j]) * (coupling * adjacency[(i, j)])));
            }
        }
        c.view_mut((2 * i, 2 * i), (2, 2)).copy_from(&(DMatrix::identity(2, 2) * (-coupling * deg)));
    }
    let (om1, om2, c1, c2) = (omegas.to_vec(), omegas.to_vec(), c.clone(), c);
    let g = VectorField::new(2 * n, format!("{n} coupled hopf oscillators"), move |_, v| {
        let mut out = &c1 * v;
        for (i, w) in om1.iter().enumerate() {
            let b = v.rows(2 * i, 2).into_owned();
            out.rows_mut(2 * i, 2).axpy(1.0, &(&b * (1.0 - b.norm_squared()) + j2() * &b * *w), 1.0);
        }
        out
    })
    .with_jacobian(move |_, v| {
        let mut d = c2.clone();
        for (i, w) in om2.iter().enumerate() {
            let blk = hopf_jacobian(&v.rows(2 * i, 2).into_owned(), *w);
            let mut view = d.view_mut((2 * i, 2 * i), (2, 2));
            view += blk;
        }
        d
    });
    let conjs = conjugacies.iter().map(|s| Conjugacy::linear(s.clone())).collect::<Result<Vec<_>>>()?;
    let mut s = DMatrix::zeros(2 * n, 2 * n);
    for (i, si) in conjugacies.iter().enumerate() {
        s.view_mut((2 * i, 2 * i), (2, 2)).copy_from(si);
    }
    let field = Conjugacy::linear(s)?.pullback_field(&g);
    Ok(PhaseLockingSystem { field, conjs, angles: angles.to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_inverse_round_trip() {
        for y in [-30.0, -1.0, -1e-3, 0.0, 0.5, 2.0, 1e3] {
            let x = cubic_inverse(y);
            assert!((x * x * x + x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn exact_jacobians_match_fd() {
        let u = DVector::from_vec(vec![0.4, -0.9]);
        for f in [hopf(1.3), hopf_with_equilibrium()] {
            assert!((f.jacobian(0.0, &u) - f.fd_jacobian(0.0, &u)).amax() < 1e-7);
        }
        let sys = coupled_hopf(&[1.0; 3], 0.7, &leader_adjacency(3), &[0.0, 1.0, 2.0], &[shear_matrix(0.0), shear_matrix(0.4), shear_matrix(-0.3)]).unwrap();
        let v = DVector::from_vec(vec![0.3, 1.1, -0.4, 0.2, 0.9, -0.8]);
        assert!((sys.field.jacobian(0.0, &v) - sys.field.fd_jacobian(0.0, &v)).amax() < 1e-6);
    }
}
