//! Matrix measures (logarithmic norms) and weighted contraction rates.
//!
//! The weighted rate of A under a weight Θ with codomain W is
//! `sup_v [Θv, (Θ̇ + ΘA)v]_W / ‖Θv‖_W²` over v with Θv ≠ 0.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract_err, dim_err, Error, Result};
use crate::flows::VectorField;
use crate::linalg::{
    csr_mul, csr_mul_transpose, generalized_sym_max, lanczos_max, row_space_basis, sym_max_eigen, symmetrize, LinearOp, SphereAscent,
    DENSE_EIGEN_LIMIT,
};
use crate::sampler::StateSampler;
use crate::sip::{FdOracle, Space};
use crate::weights::{WeightFamily, WeightKind};

/// How a numeric claim was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Eigen,
    /// Maximum over finitely many evaluations; a lower bound on the true sup.
    Sampled,
    /// Regression fit of simulated data.
    Fitted,
}

impl Method {
    pub fn is_exact(self) -> bool {
        matches!(self, Method::ClosedForm | Method::Eigen)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Eigen => "eigen",
            Method::Sampled => "sampled",
            Method::Fitted => "fitted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    /// Rate in units of 1/time.
    pub value: f64,
    pub method: Method,
    pub sample_count: usize,
    /// Eigen-residual for eigen rates, zero for closed forms and samples.
    pub residual: f64,
    /// Index of the maximizing sample for rates taken over a sampler.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argmax: Option<usize>,
    /// Least exact method among the per-sample evaluations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pointwise: Option<Method>,
}

impl RateEstimate {
    pub fn exact(value: f64, method: Method, residual: f64) -> Self {
        Self { value, method, sample_count: 1, residual, argmax: None, pointwise: None }
    }

    fn sampled(value: f64, sample_count: usize) -> Self {
        Self { value, method: Method::Sampled, sample_count, residual: 0.0, argmax: None, pointwise: None }
    }

    /// True when every evaluation behind the value was exact, so the value is
    /// the exact rate at each evaluated state.
    pub fn pointwise_exact(&self) -> bool {
        self.pointwise.unwrap_or(self.method).is_exact()
    }
}

fn check_square(a: &LinearOp, space: &Space) -> Result<()> {
    if !a.is_square() {
        return dim_err(format!("matrix measure of a non-square {}x{} operator", a.dim_out(), a.dim_in()));
    }
    if a.dim_in() != space.dim() {
        return dim_err(format!("operator dimension {} differs from space dimension {}", a.dim_in(), space.dim()));
    }
    Ok(())
}

fn for_each_entry(a: &LinearOp, mut f: impl FnMut(usize, usize, f64)) {
    match a {
        LinearOp::Sparse(m) => m.triplet_iter().for_each(|(i, j, v)| f(i, j, *v)),
        LinearOp::Dense(m) => {
            for j in 0..m.ncols() {
                for i in 0..m.nrows() {
                    f(i, j, m[(i, j)])
                }
            }
        }
        other => {
            let m = other.to_dense();
            for j in 0..m.ncols() {
                for i in 0..m.nrows() {
                    f(i, j, m[(i, j)])
                }
            }
        }
    }
}

/// μ₁: max over columns j of a_jj + Σ_{i≠j} |a_ij|.
pub fn mu1(a: &LinearOp) -> f64 {
    let mut col = vec![0.0; a.dim_in()];
    for_each_entry(a, |i, j, v| col[j] += if i == j { v } else { v.abs() });
    col.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// μ_∞: max over rows i of a_ii + Σ_{j≠i} |a_ij|.
pub fn mu_inf(a: &LinearOp) -> f64 {
    let mut row = vec![0.0; a.dim_out()];
    for_each_entry(a, |i, j, v| row[i] += if i == j { v } else { v.abs() });
    row.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// μ₂: largest eigenvalue of (A + Aᵀ)/2, with the eigen-residual.
pub fn mu2(a: &LinearOp) -> Result<(f64, f64)> {
    let n = a.dim_in();
    if n > DENSE_EIGEN_LIMIT {
        let apply: Box<dyn Fn(&DVector<f64>) -> DVector<f64>> = match a {
            LinearOp::Sparse(m) => {
                let m = m.clone();
                Box::new(move |v| (csr_mul(&m, v) + csr_mul_transpose(&m, v)) * 0.5)
            }
            _ => {
                let d = a.to_dense();
                Box::new(move |v| (&d * v + d.tr_mul(v)) * 0.5)
            }
        };
        let (lam, _, res) = lanczos_max(&*apply, n, 400, 1e-10, 17)?;
        return Ok((lam, res));
    }
    let (lam, _, res) = sym_max_eigen(&symmetrize(&a.to_dense()))?;
    Ok((lam, res))
}

/// The matrix measure of A induced by the norm of `space`.
pub fn mu(a: &LinearOp, space: &Space) -> Result<RateEstimate> {
    check_square(a, space)?;
    let p = space.p();
    if space.k() == 0 {
        // Uniform quadrature weights are a scalar multiple of the identity and
        // cancel in W^{1/p} A W^{-1/p}.
        if p == 1.0 {
            return Ok(RateEstimate::exact(mu1(a), Method::ClosedForm, 0.0));
        }
        if p.is_infinite() {
            return Ok(RateEstimate::exact(mu_inf(a), Method::ClosedForm, 0.0));
        }
        if p == 2.0 {
            let (lam, res) = mu2(a)?;
            return Ok(RateEstimate::exact(lam, Method::Eigen, res));
        }
    }
    let n = a.dim_in();
    restricted_rate(&DMatrix::identity(n, n), &a.to_dense(), space)
}

/// `sup_y [Ky, Ly]_W / ‖Ky‖_W²` for K of full column rank.
fn pair_rate(k: &DMatrix<f64>, l: &DMatrix<f64>, w: &Space) -> Result<RateEstimate> {
    let (m, r) = (k.nrows(), k.ncols());
    if m != w.dim() || l.nrows() != m || l.ncols() != r {
        return dim_err("weighted rate operands do not match the codomain");
    }
    if r == m {
        let lu = k.transpose().lu();
        if let Some(jt) = lu.solve(&l.transpose()) {
            if jt.iter().all(|v| v.is_finite()) {
                return mu(&LinearOp::Dense(jt.transpose()), w);
            }
        }
    }
    restricted_rate(k, l, w)
}

/// The pair rate without the square shortcut.
fn restricted_rate(k: &DMatrix<f64>, l: &DMatrix<f64>, w: &Space) -> Result<RateEstimate> {
    if w.is_hilbert() {
        let g = w.gram();
        let s = symmetrize(&(k.transpose() * &g * l));
        let d = symmetrize(&(k.transpose() * &g * k));
        let (lam, _, res) = generalized_sym_max(&s, &d)?;
        return Ok(RateEstimate::exact(lam, Method::Eigen, res));
    }
    Ok(sampled_pair_rate(k, l, w))
}

fn sampled_pair_rate(k: &DMatrix<f64>, l: &DMatrix<f64>, w: &Space) -> RateEstimate {
    let r = k.ncols();
    let p = w.p();
    let smooth_lp = w.k() == 0 && p > 1.0 && p.is_finite();
    let objective = |y: &DVector<f64>| -> (f64, Option<DVector<f64>>) {
        let x = k * y;
        let z = l * y;
        if smooth_lp {
            let mut f = 0.0;
            let mut nrm = 0.0;
            let mut a = DVector::zeros(x.len());
            let mut b = DVector::zeros(x.len());
            for i in 0..x.len() {
                let ax = x[i].abs();
                if ax == 0.0 {
                    continue;
                }
                let pw = ax.powf(p - 2.0);
                f += pw * x[i] * z[i];
                nrm += pw * ax * ax;
                a[i] = (p - 1.0) * pw * z[i];
                b[i] = pw * x[i];
            }
            if nrm == 0.0 {
                return (f64::NEG_INFINITY, None);
            }
            let rv = f / nrm;
            let grad = (k.tr_mul(&(a - &b * (p * rv))) + l.tr_mul(&b)) / nrm;
            return (rv, Some(grad));
        }
        let nx = w.norm(x.as_slice());
        if nx == 0.0 {
            return (f64::NEG_INFINITY, None);
        }
        (w.sip(x.as_slice(), z.as_slice()) / (nx * nx), None)
    };
    let mut seeds: Vec<DVector<f64>> = (0..r).map(|j| DVector::from_fn(r, |i, _| if i == j { 1.0 } else { 0.0 })).collect();
    if let Ok((_, v, _)) = generalized_sym_max(&symmetrize(&(k.transpose() * l)), &symmetrize(&(k.transpose() * k))) {
        seeds.push(v);
    }
    let res = SphereAscent::default().maximize(r, &objective, &seeds);
    RateEstimate::sampled(res.value, res.evaluations)
}

/// Default steps for [`mu_fd_oracle`].
pub fn default_mu_h_list(a: &DMatrix<f64>) -> Vec<f64> {
    let s = 1.0 + a.iter().map(|v| v.abs()).fold(0.0, f64::max);
    (0..5).map(|k| 1e-3 / s * 0.5f64.powi(k)).collect()
}

/// Definition-level oracle for μ: quotients (‖I + hA‖ − 1)/h with the
/// operator norm computed by direct maximization, extrapolated to h = 0.
pub fn mu_fd_oracle(a: &DMatrix<f64>, space: &Space, h_list: &[f64]) -> Result<FdOracle> {
    let n = a.nrows();
    if n != a.ncols() || n != space.dim() {
        return dim_err("oracle needs a square matrix matching the space");
    }
    if n > 6 {
        return contract_err(format!("brute-force oracle limited to dim <= 6, got {n}"));
    }
    if space.k() != 0 {
        return contract_err("brute-force oracle supports plain l^p norms only");
    }
    if h_list.is_empty() || h_list.iter().any(|&h| !(h > 0.0)) || h_list.windows(2).any(|w| w[1] >= w[0]) {
        return contract_err("h_list must be nonempty, positive and strictly decreasing");
    }
    let p = space.p();
    let opnorm = |m: &DMatrix<f64>| -> f64 {
        if p == 1.0 {
            (0..n).map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
        } else if p.is_infinite() {
            let mut best: f64 = 0.0;
            for mask in 0..(1u32 << n) {
                let s = DVector::from_fn(n, |i, _| if mask >> i & 1 == 1 { 1.0 } else { -1.0 });
                best = best.max((m * s).amax());
            }
            best
        } else if p == 2.0 {
            m.singular_values().max()
        } else {
            let ratio = |x: &DVector<f64>| (crate::sip::lp_norm((m * x).as_slice(), 1.0, p) / crate::sip::lp_norm(x.as_slice(), 1.0, p), None);
            SphereAscent { restarts: 16, max_iter: 400, seed: 99 }.maximize(n, &ratio, &[]).value
        }
    };
    let id = DMatrix::<f64>::identity(n, n);
    let quotients: Vec<(f64, f64)> = h_list.iter().map(|&h| (h, (opnorm(&(&id + a * h)) - 1.0) / h)).collect();
    let extrapolate = |x: (f64, f64), y: (f64, f64)| (x.0 * y.1 - y.0 * x.1) / (x.0 - y.0);
    let m = quotients.len();
    let last_quotient = quotients[m - 1].1;
    let scale = 1.0 + a.norm().powi(2);
    let (value, converged) = match m {
        1 => (last_quotient, false),
        2 => (extrapolate(quotients[0], quotients[1]), (quotients[1].1 - quotients[0].1).abs() <= 1e-3 * scale),
        _ => {
            let d1 = extrapolate(quotients[m - 3], quotients[m - 2]);
            let d2 = extrapolate(quotients[m - 2], quotients[m - 1]);
            (d2, (d2 - d1).abs() <= 1e-6 * scale)
        }
    };
    Ok(FdOracle { value, last_quotient, quotients, converged })
}

/// Weighted rate `M_{Θ(t,u)}[A]` on `space`.
///
/// Invertible weights use the generalized Jacobian (Θ̇ + ΘA)Θ⁻¹. A weight that
/// is onto its codomain uses `(Θ̇ + ΘA)B(ΘB)⁻¹` with B an orthonormal basis of
/// ker(Θ)^⊥. Otherwise the sup is restricted to ker(Θ)^⊥: an exact generalized
/// eigenproblem for Hilbert codomains, projected gradient ascent else.
pub fn weighted_rate(a: &LinearOp, theta: &WeightFamily, t: f64, u: &DVector<f64>, space: &Space) -> Result<RateEstimate> {
    check_square(a, space)?;
    if theta.dim_in() != space.dim() {
        return dim_err(format!("weight acts on dimension {}, space has {}", theta.dim_in(), space.dim()));
    }
    if matches!(theta.kind(), WeightKind::Identity) && theta.codomain().is_none() {
        return mu(a, space);
    }
    let w = theta.codomain_for(space);
    let th = theta.matrix(t, u);
    let l_full = match theta.dtheta_dt(t, u) {
        Some(d) => d + &th * a.to_dense(),
        None if theta.is_time_varying() => {
            return contract_err("time-varying weight without a time derivative");
        }
        None => &th * a.to_dense(),
    };
    if let Some(inv) = theta.inverse_matrix(t, u) {
        return mu(&LinearOp::Dense(l_full * inv), &w);
    }
    if th.iter().all(|v| *v == 0.0) {
        return Err(Error::DegenerateWeight("weight is identically zero".into()));
    }
    let b = row_space_basis(&th);
    if b.ncols() == 0 {
        return Err(Error::DegenerateWeight("weight has zero rank".into()));
    }
    pair_rate(&(&th * &b), &(l_full * &b), &w)
}

/// Sampled `sup_{t,u} M_{Θ(t,u)}[Df_t(u)]`, evaluated concurrently over the
/// samples and reduced by maximum (ties go to the lowest index).
pub fn nonlinear_rate(f: &VectorField, theta: &WeightFamily, space: &Space, sampler: &StateSampler) -> Result<RateEstimate> {
    if sampler.is_empty() {
        return contract_err("state sampler is empty");
    }
    let rates: Vec<Result<RateEstimate>> = sampler
        .samples()
        .par_iter()
        .map(|(t, u)| weighted_rate(&LinearOp::Dense(f.jacobian(*t, u)), theta, *t, u, space))
        .collect();
    let mut best: Option<(usize, RateEstimate)> = None;
    let mut worst_method = Method::ClosedForm;
    let mut residual: f64 = 0.0;
    for (i, r) in rates.into_iter().enumerate() {
        let r = r?;
        worst_method = worst_method.max(r.method);
        residual = residual.max(r.residual);
        if best.as_ref().map_or(true, |(_, b)| r.value > b.value) {
            best = Some((i, r));
        }
    }
    let (idx, b) = best.expect("sampler is nonempty");
    Ok(RateEstimate {
        value: b.value,
        method: Method::Sampled,
        sample_count: sampler.len(),
        residual,
        argmax: Some(idx),
        pointwise: Some(worst_method),
    })
}

/// Generalized Jacobian (Θ̇ + ΘA)Θ⁻¹ of an invertible weight.
pub fn generalized_jacobian(a: &DMatrix<f64>, theta: &DMatrix<f64>, theta_dot: Option<&DMatrix<f64>>) -> Result<DMatrix<f64>> {
    let inv = theta
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateWeight("weight is not invertible".into()))?;
    let l = match theta_dot {
        Some(d) => d + theta * a,
        None => theta * a,
    };
    Ok(l * inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dm(r: usize, c: usize, v: &[f64]) -> LinearOp {
        LinearOp::Dense(DMatrix::from_row_slice(r, c, v))
    }

    #[test]
    fn examples() {
        let d = dm(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
        assert_relative_eq!(mu(&d, &Space::lp(2, 2.0)).unwrap().value, -1.0, epsilon = 1e-14);
        let a = dm(2, 2, &[-2.0, 1.0, 0.0, -3.0]);
        assert_eq!(mu(&a, &Space::lp(2, 1.0)).unwrap().value, -2.0);
        assert_eq!(mu(&a, &Space::lp(2, f64::INFINITY)).unwrap().value, -1.0);
    }

    #[test]
    fn non_square_rejected() {
        assert!(matches!(mu(&dm(1, 2, &[1.0, 2.0]), &Space::lp(2, 2.0)), Err(Error::Dimension(_))));
    }

    #[test]
    fn oracle_examples() {
        let d = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
        let o = mu_fd_oracle(&d, &Space::lp(2, 2.0), &default_mu_h_list(&d)).unwrap();
        assert!((o.value + 1.0).abs() < 1e-4);
        let z = DMatrix::zeros(3, 3);
        assert_eq!(mu_fd_oracle(&z, &Space::lp(3, 1.0), &[1e-3, 5e-4]).unwrap().value, 0.0);
        assert!(mu_fd_oracle(&DMatrix::zeros(7, 7), &Space::lp(7, 2.0), &[1e-3]).is_err());
    }

    #[test]
    fn sampled_mu_lies_between_neighbours() {
        let a = dm(2, 2, &[-1.0, 3.0, 0.5, -2.0]);
        let m3 = mu(&a, &Space::lp(2, 3.0)).unwrap();
        assert_eq!(m3.method, Method::Sampled);
        let o = mu_fd_oracle(&a.to_dense(), &Space::lp(2, 3.0), &[1e-3, 5e-4, 2.5e-4]).unwrap();
        assert!((m3.value - o.value).abs() < 1e-4, "{} vs {}", m3.value, o.value);
    }

    #[test]
    fn sobolev_rate_of_symmetric_matrix_is_spectral_for_commuting_gram() {
        use crate::grid::{Boundary, Grid};
        use crate::sip::NormKind;
        let n = 12;
        let h = 1.0 / n as f64;
        let g = Grid::new(vec![n], vec![h], Boundary::Periodic, 1).unwrap();
        let s1 = Space::new(g, NormKind::SobolevKp { k: 1, p: 2.0 }).unwrap();
        // Periodic Laplacian commutes with the periodic difference operators.
        let lap = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                -2.0 / (h * h)
            } else if (i + 1) % n == j || (j + 1) % n == i {
                1.0 / (h * h)
            } else {
                0.0
            }
        });
        let r = mu(&LinearOp::Dense(lap), &s1).unwrap();
        assert_eq!(r.method, Method::Eigen);
        assert!(r.value.abs() < 1e-8);
    }
}
