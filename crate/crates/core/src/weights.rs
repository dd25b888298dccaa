//! Weight families Θ(t,u), radius-b checks and the diagonal asymptotic-rate
//! optimizer.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract_err, dim_err, Error, Result};
use crate::flows::VectorField;
use crate::linalg::{operator_norm, random_unit, LinearOp};
use crate::measures::{mu, Method};
use crate::sampler::StateSampler;
use crate::sip::Space;

pub type MatrixFn = Arc<dyn Fn(f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKind {
    Identity,
    ConstantMatrix,
    Diagonal { entries: Vec<f64> },
    ProjectionComplement,
    JacobianOfMap { label: String },
    Custom { label: String },
}

/// Serializable weight parameters accepted by [`make_weight`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightParams {
    Identity { dim: usize },
    Diagonal { entries: Vec<f64>, b: Option<f64> },
    ConstantMatrix { rows: Vec<Vec<f64>>, b: Option<f64> },
    /// Q = I − P for a user-supplied projector P given by rows.
    ProjectionComplement { projector: Vec<Vec<f64>> },
    /// Q = I − P with P the per-component mean over `points` grid points.
    MeanComplement { points: usize, components: usize },
}

#[derive(Clone)]
pub struct WeightFamily {
    kind: WeightKind,
    dim_in: usize,
    dim_out: usize,
    theta: MatrixFn,
    inverse: Option<MatrixFn>,
    dtheta_dt: Option<MatrixFn>,
    time_varying: bool,
    bound_b: f64,
    codomain: Option<Space>,
}

impl fmt::Debug for WeightFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightFamily")
            .field("kind", &self.kind)
            .field("dim_in", &self.dim_in)
            .field("dim_out", &self.dim_out)
            .field("has_inverse", &self.inverse.is_some())
            .field("time_varying", &self.time_varying)
            .field("bound_b", &self.bound_b)
            .finish()
    }
}

fn constant(m: DMatrix<f64>) -> MatrixFn {
    Arc::new(move |_, _| m.clone())
}

impl WeightFamily {
    pub fn identity(n: usize) -> Self {
        Self {
            kind: WeightKind::Identity,
            dim_in: n,
            dim_out: n,
            theta: constant(DMatrix::identity(n, n)),
            inverse: Some(constant(DMatrix::identity(n, n))),
            dtheta_dt: None,
            time_varying: false,
            bound_b: 1.0,
            codomain: None,
        }
    }

    /// Constant diagonal weight. `b` defaults to max(max dᵢ, 1/min dᵢ).
    pub fn diagonal(entries: &[f64], b: Option<f64>) -> Result<Self> {
        if entries.is_empty() {
            return dim_err("diagonal weight needs at least one entry");
        }
        if entries.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return contract_err("diagonal weight entries must be positive and finite");
        }
        let hi = entries.iter().cloned().fold(0.0, f64::max);
        let lo = entries.iter().cloned().fold(f64::INFINITY, f64::min);
        let needed = hi.max(1.0 / lo);
        let bound_b = check_declared_b(needed, b)?;
        let d = DVector::from_column_slice(entries);
        let n = entries.len();
        Ok(Self {
            kind: WeightKind::Diagonal { entries: entries.to_vec() },
            dim_in: n,
            dim_out: n,
            theta: constant(DMatrix::from_diagonal(&d)),
            inverse: Some(constant(DMatrix::from_diagonal(&d.map(|x| 1.0 / x)))),
            dtheta_dt: None,
            time_varying: false,
            bound_b,
            codomain: None,
        })
    }

    /// Constant matrix weight. The inverse is stored when it exists; `b`
    /// defaults to max(‖Θ‖₂, ‖Θ⁻¹‖₂).
    pub fn constant_matrix(m: DMatrix<f64>, b: Option<f64>) -> Result<Self> {
        if m.is_empty() || m.iter().any(|v| !v.is_finite()) {
            return contract_err("constant weight must be nonempty and finite");
        }
        let (r, c) = m.shape();
        let sv = m.singular_values();
        let smax = sv.max();
        let smin = sv.min();
        let invertible = r == c && smin > 1e-12 * smax;
        let needed = if invertible { smax.max(1.0 / smin) } else { smax };
        let bound_b = check_declared_b(needed, b)?;
        let inverse = if invertible { m.clone().try_inverse().map(constant) } else { None };
        Ok(Self {
            kind: WeightKind::ConstantMatrix,
            dim_in: c,
            dim_out: r,
            theta: constant(m),
            inverse,
            dtheta_dt: None,
            time_varying: false,
            bound_b,
            codomain: None,
        })
    }

    /// Q = I − P for a projector P (P² = P to 1e-10).
    pub fn projection_complement(p: &DMatrix<f64>) -> Result<Self> {
        let n = p.nrows();
        if n == 0 || p.ncols() != n {
            return dim_err("projector must be square and nonempty");
        }
        let defect = (p * p - p).amax();
        if defect > 1e-10 * p.amax().max(1.0) {
            return contract_err(format!("P^2 != P (defect {defect:e})"));
        }
        let q = DMatrix::identity(n, n) - p;
        let bound_b = q.singular_values().max().max(1.0);
        Ok(Self {
            kind: WeightKind::ProjectionComplement,
            dim_in: n,
            dim_out: n,
            theta: constant(q),
            inverse: None,
            dtheta_dt: None,
            time_varying: false,
            bound_b,
            codomain: None,
        })
    }

    /// A state-dependent, time-invariant weight such as Θ(u) = Dφ(u).
    pub fn state_dependent(
        kind: WeightKind,
        dim_in: usize,
        dim_out: usize,
        bound_b: f64,
        theta: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            kind,
            dim_in,
            dim_out,
            theta: Arc::new(move |_, u| theta(u)),
            inverse: None,
            dtheta_dt: None,
            time_varying: false,
            bound_b,
            codomain: None,
        }
    }

    /// A general family. Time-varying families must also be given
    /// [`with_dtheta_dt`](Self::with_dtheta_dt).
    pub fn custom(
        label: impl Into<String>,
        dim_in: usize,
        dim_out: usize,
        bound_b: f64,
        time_varying: bool,
        theta: impl Fn(f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            kind: WeightKind::Custom { label: label.into() },
            dim_in,
            dim_out,
            theta: Arc::new(theta),
            inverse: None,
            dtheta_dt: None,
            time_varying,
            bound_b,
            codomain: None,
        }
    }

    pub fn with_inverse(mut self, inverse: impl Fn(f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.inverse = Some(Arc::new(inverse));
        self
    }

    pub fn with_dtheta_dt(mut self, d: impl Fn(f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.dtheta_dt = Some(Arc::new(d));
        self
    }

    /// Declares the codomain W; by default W is the source space itself when
    /// the dimensions agree and ℓ^p of the same exponent otherwise.
    pub fn with_codomain(mut self, w: Space) -> Self {
        self.codomain = Some(w);
        self
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn bound_b(&self) -> f64 {
        self.bound_b
    }

    pub fn is_time_varying(&self) -> bool {
        self.time_varying
    }

    pub fn has_inverse(&self) -> bool {
        self.inverse.is_some()
    }

    pub fn codomain(&self) -> Option<&Space> {
        self.codomain.as_ref()
    }

    pub fn codomain_for(&self, v: &Space) -> Space {
        match &self.codomain {
            Some(w) => w.clone(),
            None if self.dim_out == v.dim() => v.clone(),
            None => v.plain_lp(self.dim_out),
        }
    }

    pub fn matrix(&self, t: f64, u: &DVector<f64>) -> DMatrix<f64> {
        (self.theta)(t, u)
    }

    pub fn apply(&self, t: f64, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.matrix(t, u) * v
    }

    pub fn operator(&self, t: f64, u: &DVector<f64>) -> LinearOp {
        LinearOp::Dense(self.matrix(t, u))
    }

    pub fn inverse_matrix(&self, t: f64, u: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.inverse.as_ref().map(|f| f(t, u))
    }

    pub fn inverse_apply(&self, t: f64, u: &DVector<f64>, w: &DVector<f64>) -> Option<DVector<f64>> {
        self.inverse_matrix(t, u).map(|m| m * w)
    }

    /// ∂Θ/∂t; `None` for time-invariant families means zero.
    pub fn dtheta_dt(&self, t: f64, u: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.dtheta_dt.as_ref().map(|f| f(t, u))
    }

    /// ‖Θ(t,u)v‖_W.
    pub fn weighted_norm(&self, t: f64, u: &DVector<f64>, v: &DVector<f64>, space: &Space) -> f64 {
        self.codomain_for(space).norm(self.apply(t, u, v).as_slice())
    }
}

fn check_declared_b(needed: f64, b: Option<f64>) -> Result<f64> {
    match b {
        None => Ok(needed),
        Some(b) if !(b >= 1.0 && b.is_finite()) => contract_err(format!("bound b = {b} must be finite and at least 1")),
        Some(b) if needed > b * (1.0 + 1e-12) => contract_err(format!("weight needs b >= {needed}, declared b = {b}")),
        Some(b) => Ok(b),
    }
}

/// Per-component mean projector on `points` points with `components` fields.
pub fn mean_projector(points: usize, components: usize) -> DMatrix<f64> {
    let n = points * components;
    DMatrix::from_fn(n, n, |i, j| if i / points == j / points { 1.0 / points as f64 } else { 0.0 })
}

pub fn make_weight(params: &WeightParams) -> Result<WeightFamily> {
    match params {
        WeightParams::Identity { dim } => {
            if *dim == 0 {
                return dim_err("identity weight needs dim >= 1");
            }
            Ok(WeightFamily::identity(*dim))
        }
        WeightParams::Diagonal { entries, b } => WeightFamily::diagonal(entries, *b),
        WeightParams::ConstantMatrix { rows, b } => WeightFamily::constant_matrix(matrix_from_rows(rows)?, *b),
        WeightParams::ProjectionComplement { projector } => WeightFamily::projection_complement(&matrix_from_rows(projector)?),
        WeightParams::MeanComplement { points, components } => {
            if *points == 0 || *components == 0 {
                return dim_err("mean projector needs positive sizes");
            }
            WeightFamily::projection_complement(&mean_projector(*points, *components))
        }
    }
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return dim_err("matrix rows must be nonempty and of equal length");
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusReport {
    pub max_norm: f64,
    pub max_inverse_norm: f64,
    pub max_observed: f64,
    pub b: f64,
    pub passed: bool,
    pub samples: usize,
    pub method: Method,
}

/// Probes ‖Θ(t,u)‖ and ‖Θ(t,u)⁻¹‖ at the sampled states against `b`.
pub fn check_radius_b(theta: &WeightFamily, b: f64, sampler: &StateSampler, space: &Space) -> Result<RadiusReport> {
    if !theta.has_inverse() {
        return contract_err("radius-b check needs an inverse");
    }
    if sampler.is_empty() {
        return contract_err("state sampler is empty");
    }
    let w = theta.codomain_for(space);
    let mut max_norm: f64 = 0.0;
    let mut max_inv: f64 = 0.0;
    let mut method = Method::ClosedForm;
    for (i, (t, u)) in sampler.samples().iter().enumerate() {
        let (n1, m1) = operator_norm(&theta.matrix(*t, u), space, &w, i as u64)?;
        let (n2, m2) = operator_norm(&theta.inverse_matrix(*t, u).expect("checked above"), &w, space, i as u64)?;
        max_norm = max_norm.max(n1);
        max_inv = max_inv.max(n2);
        method = method.max(m1).max(m2);
    }
    let max_observed = max_norm.max(max_inv);
    Ok(RadiusReport {
        max_norm,
        max_inverse_norm: max_inv,
        max_observed,
        b,
        passed: max_observed <= b * (1.0 + 1e-12),
        samples: sampler.len(),
        method,
    })
}

/// Largest relative defect ‖Θ⁻¹Θv − v‖/‖v‖ over random probes.
pub fn inverse_defect(theta: &WeightFamily, sampler: &StateSampler, probes: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for (t, u) in sampler.samples() {
        let inv = theta.inverse_matrix(*t, u).ok_or_else(|| Error::Contract("weight has no inverse".into()))?;
        let th = theta.matrix(*t, u);
        for _ in 0..probes {
            let v = random_unit(&mut rng, theta.dim_in());
            worst = worst.max((&inv * (&th * &v) - &v).norm());
        }
    }
    Ok(worst)
}

/// Transient length t_b = −2 ln(b)/λ_b for λ_b < 0, +∞ otherwise.
pub fn transient_bound(lambda_b: f64, b: f64) -> f64 {
    if lambda_b < 0.0 {
        -2.0 * b.ln() / lambda_b
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone)]
pub struct AsymptoticRateResult {
    /// Best rate found in the diagonal family: an upper bound on λ_b.
    pub lambda_b: f64,
    pub best_weight: WeightFamily,
    pub diagonal: Vec<f64>,
    pub b: f64,
    pub transient_bound: f64,
    pub iterations: usize,
    /// Best rate after each sweep.
    pub history: Vec<f64>,
    pub method: Method,
}

impl AsymptoticRateResult {
    pub const SCOPE: &'static str = "diagonal upper bound on lambda_b";
}

/// Coordinate descent over constant diagonal weights with entries in [1/b, b].
///
/// Each sweep tries multiplying every entry by 2^{±s}; s starts at 1 and halves
/// after a sweep without improvement. Stops when s < 1e-3 or after 200 sweeps.
pub fn optimize_diagonal_weight(f: &VectorField, space: &Space, b: f64, sampler: &StateSampler) -> Result<AsymptoticRateResult> {
    if sampler.is_empty() {
        return contract_err("state sampler is empty");
    }
    if !(b > 1.0 && b.is_finite()) {
        return contract_err(format!("radius b = {b} must exceed 1"));
    }
    let n = space.dim();
    if f.dim() != n {
        return dim_err("vector field dimension differs from the space");
    }
    let jacobians: Vec<DMatrix<f64>> = sampler.samples().par_iter().map(|(t, u)| f.jacobian(*t, u)).collect();
    let lnb = b.ln();
    let rate = |logd: &[f64]| -> Result<(f64, Method)> {
        let d: Vec<f64> = logd.iter().map(|x| x.exp()).collect();
        let evals: Vec<Result<(f64, Method)>> = jacobians
            .par_iter()
            .map(|j| {
                let g = DMatrix::from_fn(n, n, |r, c| d[r] * j[(r, c)] / d[c]);
                mu(&LinearOp::Dense(g), space).map(|e| (e.value, e.method))
            })
            .collect();
        let mut best = (f64::NEG_INFINITY, Method::ClosedForm);
        for e in evals {
            let (v, m) = e?;
            best = (best.0.max(v), best.1.max(m));
        }
        Ok(best)
    };
    let mut logd = vec![0.0; n];
    let (mut best, mut method) = rate(&logd)?;
    let mut s = 1.0f64;
    let mut iterations = 0;
    let mut history = vec![best];
    while s >= 1e-3 && iterations < 200 {
        let mut improved = false;
        for i in 0..n {
            for dir in [1.0, -1.0] {
                let mut cand = logd.clone();
                cand[i] = (cand[i] + dir * s * std::f64::consts::LN_2).clamp(-lnb, lnb);
                if cand[i] == logd[i] {
                    continue;
                }
                let (r, m) = rate(&cand)?;
                if r < best - 1e-13 * best.abs().max(1.0) {
                    best = r;
                    method = m;
                    logd = cand;
                    improved = true;
                    break;
                }
            }
        }
        iterations += 1;
        history.push(best);
        if !improved {
            s *= 0.5;
        }
    }
    let diagonal: Vec<f64> = logd.iter().map(|x| x.exp()).collect();
    let best_weight = WeightFamily::diagonal(&diagonal, Some(b * (1.0 + 1e-9)))?;
    Ok(AsymptoticRateResult {
        lambda_b: best,
        best_weight,
        diagonal,
        b,
        transient_bound: transient_bound(best, b),
        iterations,
        history,
        method: if sampler.len() > 1 { Method::Sampled } else { method },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_examples() {
        let id = make_weight(&WeightParams::Identity { dim: 3 }).unwrap();
        let v = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        assert_eq!(id.apply(0.0, &v, &v), v);
        assert_eq!(id.bound_b(), 1.0);

        let d = WeightFamily::diagonal(&[1.0, 0.01], Some(100.0)).unwrap();
        let m = d.matrix(0.0, &v);
        let cond = m.singular_values().max() / m.singular_values().min();
        assert!(cond <= 100.0f64.powi(2));

        let q = make_weight(&WeightParams::MeanComplement { points: 8, components: 1 }).unwrap();
        let ones = DVector::from_element(8, 1.0);
        assert!(q.apply(0.0, &ones, &ones).amax() < 1e-15);
    }

    #[test]
    fn constructor_errors() {
        assert!(matches!(WeightFamily::diagonal(&[1.0, 0.0], None), Err(Error::Contract(_))));
        assert!(matches!(WeightFamily::diagonal(&[3.0, 1.0], Some(2.0)), Err(Error::Contract(_))));
        let not_proj = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.5]);
        assert!(WeightFamily::projection_complement(&not_proj).is_err());
    }

    #[test]
    fn radius_examples() {
        let s = StateSampler::single(0.0, DVector::zeros(2));
        let sp = Space::euclidean(2);
        let r = check_radius_b(&WeightFamily::identity(2), 1.0, &s, &sp).unwrap();
        assert!(r.passed && r.max_observed == 1.0);
        let r = check_radius_b(&WeightFamily::diagonal(&[2.0, 0.5], None).unwrap(), 2.0, &s, &sp).unwrap();
        assert!(r.passed && (r.max_observed - 2.0).abs() < 1e-12);
        let r = check_radius_b(&WeightFamily::diagonal(&[3.0, 1.0], None).unwrap(), 2.0, &s, &sp).unwrap();
        assert!(!r.passed);
        let q = WeightFamily::projection_complement(&mean_projector(2, 1)).unwrap();
        assert!(matches!(check_radius_b(&q, 2.0, &s, &sp), Err(Error::Contract(_))));
    }

    #[test]
    fn transient_bound_values() {
        assert!((transient_bound(-1.0, std::f64::consts::E) - 2.0).abs() < 1e-15);
        assert!(transient_bound(0.0, 10.0).is_infinite());
    }
}
