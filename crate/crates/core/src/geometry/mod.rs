//! Certifiers for contraction to invariant subspaces, submanifolds, symmetric
//! solutions, limit cycles and phase-locked oscillators.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{contract_err, dim_err, Error, Result};
use crate::flows::{fit_exponent, integrate, IntegrationOptions, VectorField};
use crate::linalg::{pseudo_inverse, LinearOp};
use crate::sampler::StateSampler;
use crate::sip::Space;
use crate::weights::{WeightFamily, WeightKind};

pub mod cycle;
pub mod manifold;
pub mod subspace;
pub mod symmetry;

pub use cycle::{certify_limit_cycle, certify_phase_locking, LimitCycleReport, PhaseLockingReport, PhaseLockingSystem};
pub use manifold::certify_manifold_contraction;
pub use subspace::{certify_subspace_contraction, check_subspace_invariance};
pub use symmetry::{cauchy_diagnostics, check_equivariance, check_temporal_symmetry, CauchyReport, EquivarianceReport, GroupElement};

/// A bounded linear projection P with cached complement Q = I − P.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    p: DMatrix<f64>,
    q: DMatrix<f64>,
}

impl Projector {
    pub fn new(p: DMatrix<f64>) -> Result<Self> {
        let n = p.nrows();
        if n == 0 || p.ncols() != n {
            return dim_err("projector must be square and nonempty");
        }
        let defect = (&p * &p - &p).amax();
        if defect > 1e-10 * p.amax().max(1.0) {
            return contract_err(format!("P^2 != P (defect {defect:e})"));
        }
        let q = DMatrix::identity(n, n) - &p;
        Ok(Self { p, q })
    }

    /// Per-component mean over `points` grid points.
    pub fn mean(points: usize, components: usize) -> Self {
        Self::new(crate::weights::mean_projector(points, components)).expect("mean projector is idempotent")
    }

    /// Orthogonal projector onto the column span of `m` (full column rank).
    pub fn onto_columns(m: &DMatrix<f64>) -> Result<Self> {
        let gram = m.transpose() * m;
        let inv = gram.try_inverse().ok_or_else(|| Error::DegenerateWeight("columns are linearly dependent".into()))?;
        Self::new(m * inv * m.transpose())
    }

    /// Projector onto W = {(R(θ₁)v, …, R(θₙ)v)} for planar rotations acting on
    /// consecutive 2-blocks.
    pub fn rotation_shift(angles: &[f64]) -> Result<Self> {
        if angles.is_empty() {
            return dim_err("rotation-shift subspace needs at least one block");
        }
        let n = angles.len();
        let mut m = DMatrix::zeros(2 * n, 2);
        for (i, &th) in angles.iter().enumerate() {
            m.view_mut((2 * i, 0), (2, 2)).copy_from(&rotation(th));
        }
        Self::onto_columns(&m)
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn p_op(&self) -> LinearOp {
        LinearOp::Dense(self.p.clone())
    }

    pub fn q_op(&self) -> LinearOp {
        LinearOp::Dense(self.q.clone())
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    /// Largest entry of P² − P, Q² − Q, PQ and P + Q − I.
    pub fn algebra_defect(&self) -> f64 {
        let n = self.dim();
        let id = DMatrix::<f64>::identity(n, n);
        [
            (&self.p * &self.p - &self.p).amax(),
            (&self.q * &self.q - &self.q).amax(),
            (&self.p * &self.q).amax(),
            (&self.p + &self.q - id).amax(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// The weight Q = I − P.
    pub fn weight(&self) -> Result<WeightFamily> {
        if self.q.amax() == 0.0 {
            return Err(Error::DegenerateWeight("Q = I - P vanishes".into()));
        }
        WeightFamily::projection_complement(&self.p)
    }
}

/// Planar rotation by `theta`.
pub fn rotation(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

pub type MapFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type MapJacobianFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

fn fd_map_jacobian(f: &dyn Fn(&DVector<f64>) -> DVector<f64>, u: &DVector<f64>, m: usize) -> DMatrix<f64> {
    let h = f64::EPSILON.sqrt() * (1.0 + u.norm());
    let mut j = DMatrix::zeros(m, u.len());
    let mut up = u.clone();
    for c in 0..u.len() {
        let orig = up[c];
        up[c] = orig + h;
        let fp = f(&up);
        up[c] = orig - h;
        let fm = f(&up);
        up[c] = orig;
        j.set_column(c, &((fp - fm) / (2.0 * h)));
    }
    j
}

/// A smooth map φ: R^n → R^m whose zero set is the manifold of interest.
#[derive(Clone)]
pub struct Submersion {
    dim: usize,
    codim: usize,
    label: String,
    phi: MapFn,
    dphi: Option<MapJacobianFn>,
}

impl fmt::Debug for Submersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Submersion").field("label", &self.label).field("dim", &self.dim).field("codim", &self.codim).finish()
    }
}

impl Submersion {
    pub fn new(dim: usize, codim: usize, label: impl Into<String>, phi: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static) -> Self {
        Self { dim, codim, label: label.into(), phi: Arc::new(phi), dphi: None }
    }

    pub fn with_jacobian(mut self, d: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.dphi = Some(Arc::new(d));
        self
    }

    /// φ(u) = Mu − c.
    pub fn affine(m: DMatrix<f64>, c: DVector<f64>) -> Self {
        let (r, n) = m.shape();
        let m2 = m.clone();
        Self::new(n, r, "affine", move |u| &m * u - &c).with_jacobian(move |_| m2.clone())
    }

    /// φ(u) = ‖u‖² − 1 on R^n.
    pub fn unit_sphere(n: usize) -> Self {
        Self::new(n, 1, "unit sphere", |u| DVector::from_element(1, u.norm_squared() - 1.0)).with_jacobian(|u| DMatrix::from_row_slice(1, u.len(), u.as_slice()) * 2.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn codim(&self) -> usize {
        self.codim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, u: &DVector<f64>) -> DVector<f64> {
        (self.phi)(u)
    }

    pub fn jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        match &self.dphi {
            Some(d) => d(u),
            None => fd_map_jacobian(&*self.phi, u, self.codim),
        }
    }

    pub fn min_singular_value(&self, u: &DVector<f64>) -> f64 {
        let j = self.jacobian(u);
        let sv = j.singular_values();
        if j.nrows() > j.ncols() {
            return 0.0;
        }
        sv.min()
    }

    /// Damped Newton projection onto φ⁻¹(0) with the pseudo-inverse of Dφ.
    pub fn project(&self, u0: &DVector<f64>, tol: f64, max_iter: usize) -> Option<DVector<f64>> {
        let mut u = u0.clone();
        let mut r = self.eval(&u).norm();
        for _ in 0..max_iter {
            if r <= tol {
                return Some(u);
            }
            let step = pseudo_inverse(&self.jacobian(&u)).ok()? * self.eval(&u);
            let mut s = 1.0;
            loop {
                let cand = &u - &step * s;
                let rc = self.eval(&cand).norm();
                if rc < r {
                    u = cand;
                    r = rc;
                    break;
                }
                s *= 0.5;
                if s < 1e-8 {
                    return None;
                }
            }
        }
        (r <= tol).then_some(u)
    }

    /// The weight Θ(u) = Dφ(u), with codomain ℓ^p(R^m) of the space's exponent.
    pub fn weight(&self, space: &Space) -> WeightFamily {
        let me = self.clone();
        WeightFamily::state_dependent(WeightKind::JacobianOfMap { label: self.label.clone() }, self.dim, self.codim, f64::INFINITY, move |u| me.jacobian(u))
            .with_codomain(space.plain_lp(self.codim))
    }
}

/// A diffeomorphism v = h(u) with inverse and derivative.
#[derive(Clone)]
pub struct Conjugacy {
    dim: usize,
    h: MapFn,
    h_inv: MapFn,
    dh: Option<MapJacobianFn>,
    linear: Option<(DMatrix<f64>, DMatrix<f64>)>,
}

impl fmt::Debug for Conjugacy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Conjugacy").field("dim", &self.dim).field("linear", &self.linear.is_some()).finish()
    }
}

impl Conjugacy {
    pub fn new(
        dim: usize,
        h: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        h_inv: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { dim, h: Arc::new(h), h_inv: Arc::new(h_inv), dh: None, linear: None }
    }

    pub fn with_jacobian(mut self, d: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.dh = Some(Arc::new(d));
        self
    }

    pub fn identity(n: usize) -> Self {
        Self::linear(DMatrix::identity(n, n)).expect("identity is invertible")
    }

    /// h(u) = Su for invertible S.
    pub fn linear(s: DMatrix<f64>) -> Result<Self> {
        let inv = s.clone().try_inverse().ok_or_else(|| Error::Contract("linear conjugacy must be invertible".into()))?;
        let (s1, s2, i1) = (s.clone(), s.clone(), inv.clone());
        let mut c = Self::new(s.nrows(), move |u| &s1 * u, move |v| &i1 * v).with_jacobian(move |_| s2.clone());
        c.linear = Some((s, inv));
        Ok(c)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self, u: &DVector<f64>) -> DVector<f64> {
        (self.h)(u)
    }

    pub fn h_inv(&self, v: &DVector<f64>) -> DVector<f64> {
        (self.h_inv)(v)
    }

    pub fn dh(&self, u: &DVector<f64>) -> DMatrix<f64> {
        match &self.dh {
            Some(d) => d(u),
            None => fd_map_jacobian(&*self.h, u, self.dim),
        }
    }

    /// Largest ‖h⁻¹(h(u)) − u‖ / (1 + ‖u‖) over the sampled states.
    pub fn inverse_defect(&self, sampler: &StateSampler) -> f64 {
        sampler.samples().iter().map(|(_, u)| (self.h_inv(&self.h(u)) - u).norm() / (1.0 + u.norm())).fold(0.0, f64::max)
    }

    /// g(t, v) = Dh(h⁻¹(v)) f(t, h⁻¹(v)).
    pub fn conjugate_field(&self, f: &VectorField) -> VectorField {
        let me = self.clone();
        let f2 = f.clone();
        let g = VectorField::new(f.dim(), format!("conjugate of {}", f.tag()), move |t, v| {
            let u = me.h_inv(v);
            me.dh(&u) * f2.eval(t, &u)
        });
        match &self.linear {
            Some((s, inv)) if f.has_exact_jacobian() => {
                let (s, inv, f3) = (s.clone(), inv.clone(), f.clone());
                g.with_jacobian(move |t, v| &s * f3.jacobian(t, &(&inv * v)) * &inv)
            }
            _ => g,
        }
    }

    /// f(t, u) = Dh(u)⁻¹ g(t, h(u)), the field whose conjugate is g.
    pub fn pullback_field(&self, g: &VectorField) -> VectorField {
        let me = self.clone();
        let g2 = g.clone();
        let f = VectorField::new(g.dim(), format!("pullback of {}", g.tag()), move |t, u| {
            let rhs = g2.eval(t, &me.h(u));
            me.dh(u).lu().solve(&rhs).unwrap_or_else(|| DVector::from_element(rhs.len(), f64::NAN))
        });
        match &self.linear {
            Some((s, inv)) if g.has_exact_jacobian() => {
                let (s, inv, g3) = (s.clone(), inv.clone(), g.clone());
                f.with_jacobian(move |t, u| &inv * g3.jacobian(t, &(&s * u)) * &s)
            }
            _ => f,
        }
    }
}

/// Initial conditions and horizon for simulation cross-checks.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheckOptions {
    pub t_end: f64,
    pub dt: f64,
    pub initial_conditions: Vec<DVector<f64>>,
    /// Samples below `floor` times the initial value are excluded from fits.
    pub relative_floor: f64,
}

impl CrossCheckOptions {
    pub fn new(t_end: f64, dt: f64, initial_conditions: Vec<DVector<f64>>) -> Self {
        Self { t_end, dt, initial_conditions, relative_floor: 1e-6 }
    }
}

/// Simulates `f` from every initial condition and fits the exponential decay
/// rate of `quantity` along each trajectory.
pub fn fitted_decay(f: &VectorField, quantity: &dyn Fn(&DVector<f64>) -> f64, opts: &CrossCheckOptions) -> Result<Vec<f64>> {
    let iopts = IntegrationOptions::fixed(0.0, opts.t_end, opts.dt);
    let mut out = Vec::with_capacity(opts.initial_conditions.len());
    for ic in &opts.initial_conditions {
        let tr = integrate(f, ic, &iopts)?;
        let q: Vec<f64> = tr.states.iter().map(quantity).collect();
        let floor = (q[0] * opts.relative_floor).max(1e-300);
        let fit = fit_exponent(&tr.times, &q, floor).ok_or_else(|| Error::Numerical("too few samples above the floor for a decay fit".into()))?;
        out.push(fit.slope);
    }
    Ok(out)
}
