//! Linear operators and the dense/iterative linear algebra behind the rates.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use nalgebra_sparse::CsrMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{dim_err, Error, Result};
use crate::sip::Space;

/// Largest dimension handled by the dense symmetric eigensolver.
pub const DENSE_EIGEN_LIMIT: usize = 2048;

pub type ApplyFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

#[derive(Clone)]
pub enum LinearOp {
    Dense(DMatrix<f64>),
    Sparse(CsrMatrix<f64>),
    MatrixFree { apply: ApplyFn, dim_in: usize, dim_out: usize },
}

impl fmt::Debug for LinearOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinearOp::Dense(m) => write!(f, "Dense({}x{})", m.nrows(), m.ncols()),
            LinearOp::Sparse(m) => write!(f, "Sparse({}x{}, nnz={})", m.nrows(), m.ncols(), m.nnz()),
            LinearOp::MatrixFree { dim_in, dim_out, .. } => write!(f, "MatrixFree({dim_out}x{dim_in})"),
        }
    }
}

impl From<DMatrix<f64>> for LinearOp {
    fn from(m: DMatrix<f64>) -> Self {
        LinearOp::Dense(m)
    }
}

impl From<CsrMatrix<f64>> for LinearOp {
    fn from(m: CsrMatrix<f64>) -> Self {
        LinearOp::Sparse(m)
    }
}

impl LinearOp {
    pub fn matrix_free(dim_in: usize, dim_out: usize, apply: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static) -> Self {
        LinearOp::MatrixFree { apply: Arc::new(apply), dim_in, dim_out }
    }

    pub fn identity(n: usize) -> Self {
        LinearOp::Dense(DMatrix::identity(n, n))
    }

    pub fn dim_in(&self) -> usize {
        match self {
            LinearOp::Dense(m) => m.ncols(),
            LinearOp::Sparse(m) => m.ncols(),
            LinearOp::MatrixFree { dim_in, .. } => *dim_in,
        }
    }

    pub fn dim_out(&self) -> usize {
        match self {
            LinearOp::Dense(m) => m.nrows(),
            LinearOp::Sparse(m) => m.nrows(),
            LinearOp::MatrixFree { dim_out, .. } => *dim_out,
        }
    }

    pub fn is_square(&self) -> bool {
        self.dim_in() == self.dim_out()
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        assert_eq!(v.len(), self.dim_in(), "operator applied to a vector of the wrong length");
        match self {
            LinearOp::Dense(m) => m * v,
            LinearOp::Sparse(m) => csr_mul(m, v),
            LinearOp::MatrixFree { apply, .. } => apply(v),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            LinearOp::Dense(m) => m.clone(),
            LinearOp::Sparse(m) => {
                let mut d = DMatrix::zeros(m.nrows(), m.ncols());
                for (i, j, v) in m.triplet_iter() {
                    d[(i, j)] += *v;
                }
                d
            }
            LinearOp::MatrixFree { apply, dim_in, dim_out } => {
                let mut d = DMatrix::zeros(*dim_out, *dim_in);
                let mut e = DVector::zeros(*dim_in);
                for j in 0..*dim_in {
                    e[j] = 1.0;
                    d.set_column(j, &apply(&e));
                    e[j] = 0.0;
                }
                d
            }
        }
    }

    /// Largest relative linearity defect ‖A(αu+βv) − αAu − βAv‖ / scale over
    /// random probes.
    pub fn linearity_defect(&self, probes: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.dim_in();
        let mut worst: f64 = 0.0;
        for _ in 0..probes {
            let u = random_vector(&mut rng, n);
            let v = random_vector(&mut rng, n);
            let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let au = self.apply(&u);
            let av = self.apply(&v);
            let lhs = self.apply(&(&u * a + &v * b));
            let rhs = &au * a + &av * b;
            let scale = au.norm() * a.abs() + av.norm() * b.abs() + f64::MIN_POSITIVE;
            worst = worst.max((lhs - rhs).norm() / scale);
        }
        worst
    }
}

pub(crate) fn csr_mul(m: &CsrMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(m.nrows());
    for (i, row) in m.row_iter().enumerate() {
        out[i] = row.col_indices().iter().zip(row.values()).map(|(&j, a)| a * v[j]).sum();
    }
    out
}

pub(crate) fn csr_mul_transpose(m: &CsrMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(m.ncols());
    for (i, row) in m.row_iter().enumerate() {
        for (&j, a) in row.col_indices().iter().zip(row.values()) {
            out[j] += a * v[i];
        }
    }
    out
}

pub fn random_vector(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

/// Unit vector (Euclidean) with standard normal direction.
pub fn random_unit(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| {
            let (a, b): (f64, f64) = (rng.gen_range(f64::EPSILON..1.0), rng.gen_range(0.0..1.0));
            (-2.0 * a.ln()).sqrt() * (std::f64::consts::TAU * b).cos()
        });
        let nv = v.norm();
        if nv > 1e-12 {
            return v / nv;
        }
    }
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Top eigenpair of a symmetric matrix: (λ_max, eigenvector, residual ‖Sv − λv‖).
pub fn sym_max_eigen(s: &DMatrix<f64>) -> Result<(f64, DVector<f64>, f64)> {
    let n = s.nrows();
    if n == 0 || n != s.ncols() {
        return dim_err("symmetric eigenproblem needs a nonempty square matrix");
    }
    if !s.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("non-finite entries in symmetric eigenproblem".into()));
    }
    if n > DENSE_EIGEN_LIMIT {
        let op = LinearOp::Dense(s.clone());
        return lanczos_max(&|v| op.apply(v), n, 300, 1e-10, 0);
    }
    let eig = SymmetricEigen::try_new(s.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical(format!("symmetric eigensolver did not converge (n = {n})")))?;
    let (idx, lam) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &l)| if l > acc.1 { (i, l) } else { acc });
    let v = eig.eigenvectors.column(idx).into_owned();
    let residual = (s * &v - &v * lam).norm();
    Ok((lam, v, residual))
}

/// Largest λ with S x = λ G x, for symmetric S and symmetric positive definite G.
pub fn generalized_sym_max(s: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<(f64, DVector<f64>, f64)> {
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("Gram matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv_s = l
        .solve_lower_triangular(s)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let m = l
        .solve_lower_triangular(&linv_s.transpose())
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let (lam, y, _) = sym_max_eigen(&symmetrize(&m))?;
    let x = l
        .transpose()
        .solve_upper_triangular(&y)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let residual = (s * &x - g * &x * lam).norm() / (g * &x).norm().max(f64::MIN_POSITIVE);
    Ok((lam, x, residual))
}

/// Lanczos iteration with full reorthogonalization for the largest eigenvalue
/// of a symmetric operator given by `apply`.
pub fn lanczos_max(
    apply: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    n: usize,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> Result<(f64, DVector<f64>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = max_iter.min(n).max(1);
    let mut basis: Vec<DVector<f64>> = vec![random_unit(&mut rng, n)];
    let mut alpha = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    let mut best = (f64::NEG_INFINITY, basis[0].clone(), f64::INFINITY);
    for j in 0..m {
        let mut w = apply(&basis[j]);
        let a = w.dot(&basis[j]);
        alpha.push(a);
        for q in &basis {
            let c = w.dot(q);
            w.axpy(-c, q, 1.0);
        }
        for q in &basis {
            let c = w.dot(q);
            w.axpy(-c, q, 1.0);
        }
        let b = w.norm();
        let k = alpha.len();
        let mut t = DMatrix::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let (idx, lam) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &l)| if l > acc.1 { (i, l) } else { acc });
        let s = eig.eigenvectors.column(idx);
        let residual = (b * s[k - 1]).abs();
        if residual <= tol * lam.abs().max(1.0) || b < 1e-14 || j + 1 == m {
            let mut x = DVector::zeros(n);
            for (i, q) in basis.iter().enumerate() {
                x.axpy(s[i], q, 1.0);
            }
            let res = (apply(&x) - &x * lam).norm();
            best = (lam, x, res);
            break;
        }
        beta.push(b);
        basis.push(w / b);
    }
    Ok(best)
}

/// Spectral abscissa max Re λ(A).
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Orthonormal basis (columns) of ker(M)^⊥ = row space of M, and its rank.
pub fn row_space_basis(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = smax * 1e-10 * (m.nrows().max(m.ncols()) as f64);
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > tol).collect();
    let mut b = DMatrix::zeros(m.ncols(), keep.len());
    for (c, &i) in keep.iter().enumerate() {
        b.set_column(c, &v_t.row(i).transpose());
    }
    b
}

/// Moore–Penrose pseudo-inverse.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone()
        .pseudo_inverse(1e-12 * m.norm().max(1.0))
        .map_err(|e| Error::Numerical(e.to_string()))
}

/// Multi-start projected gradient ascent of a degree-0 homogeneous objective
/// over the Euclidean unit sphere.
pub struct SphereAscent {
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SphereAscent {
    fn default() -> Self {
        Self { restarts: 32, max_iter: 300, seed: 0x5eed }
    }
}

/// Outcome of a sphere ascent: best value, maximizer and number of objective
/// evaluations.
#[derive(Debug, Clone)]
pub struct AscentResult {
    pub value: f64,
    pub argmax: DVector<f64>,
    pub evaluations: usize,
}

impl SphereAscent {
    /// `objective` returns the value and optionally its gradient; a missing
    /// gradient is replaced by central differences. `seeds` are extra starting
    /// points evaluated before the random restarts.
    pub fn maximize(
        &self,
        n: usize,
        objective: &dyn Fn(&DVector<f64>) -> (f64, Option<DVector<f64>>),
        seeds: &[DVector<f64>],
    ) -> AscentResult {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut evaluations = 0usize;
        let mut best = AscentResult { value: f64::NEG_INFINITY, argmax: DVector::zeros(n), evaluations: 0 };
        let eval = |v: &DVector<f64>, evaluations: &mut usize| {
            *evaluations += 1;
            objective(v)
        };
        let mut starts: Vec<DVector<f64>> = seeds.iter().filter(|s| s.norm() > 0.0).map(|s| s.normalize()).collect();
        for _ in 0..self.restarts {
            starts.push(random_unit(&mut rng, n));
        }
        for start in starts {
            let mut v = start;
            let (mut f, mut g) = eval(&v, &mut evaluations);
            if !f.is_finite() {
                continue;
            }
            let mut step = 0.5;
            for _ in 0..self.max_iter {
                let grad = match g.take() {
                    Some(g) => g,
                    None => {
                        let mut gr = DVector::zeros(n);
                        let h = 1e-6;
                        for i in 0..n {
                            let mut vp = v.clone();
                            vp[i] += h;
                            let mut vm = v.clone();
                            vm[i] -= h;
                            gr[i] = (eval(&vp, &mut evaluations).0 - eval(&vm, &mut evaluations).0) / (2.0 * h);
                        }
                        gr
                    }
                };
                let tangent = &grad - &v * grad.dot(&v);
                let tn = tangent.norm();
                if tn < 1e-13 || !tn.is_finite() {
                    break;
                }
                let dir = tangent / tn;
                let mut improved = false;
                while step > 1e-12 {
                    let cand = (&v + &dir * step).normalize();
                    let (fc, gc) = eval(&cand, &mut evaluations);
                    if fc > f {
                        let gain = fc - f;
                        v = cand;
                        f = fc;
                        g = gc;
                        improved = true;
                        step = (step * 2.0).min(1.0);
                        if gain < 1e-15 * f.abs().max(1.0) {
                            improved = false;
                        }
                        break;
                    }
                    step *= 0.5;
                }
                if !improved {
                    break;
                }
            }
            if f > best.value {
                best.value = f;
                best.argmax = v;
            }
        }
        best.evaluations = evaluations;
        best
    }
}

/// Operator norm of `m` from space `from` to space `to`, with the method used.
///
/// Exact for ℓ¹, ℓ² and ℓ^∞ with uniform weights and for p = 2 Sobolev spaces;
/// otherwise the best of 64 random probes refined by sphere ascent.
pub fn operator_norm(m: &DMatrix<f64>, from: &Space, to: &Space, seed: u64) -> Result<(f64, crate::measures::Method)> {
    use crate::measures::Method;
    if m.ncols() != from.dim() || m.nrows() != to.dim() {
        return dim_err(format!("{}x{} operator between spaces of dims {} and {}", m.nrows(), m.ncols(), from.dim(), to.dim()));
    }
    let p = from.p();
    if from.k() == 0 && to.k() == 0 && to.p() == p {
        let scale = (to.spec().quadrature_weight() / from.spec().quadrature_weight()).powf(if p.is_infinite() { 0.0 } else { 1.0 / p });
        if p == 1.0 {
            let v = (0..m.ncols()).map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
            return Ok((v * scale, Method::ClosedForm));
        }
        if p.is_infinite() {
            let v = (0..m.nrows()).map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
            return Ok((v * scale, Method::ClosedForm));
        }
        if p == 2.0 {
            let s = m.singular_values().iter().cloned().fold(0.0, f64::max);
            return Ok((s * scale, Method::Eigen));
        }
    }
    if from.is_hilbert() && to.is_hilbert() {
        let gv = from.gram();
        let gw = to.gram();
        let s = m.transpose() * gw * m;
        let (lam, _, _) = generalized_sym_max(&symmetrize(&s), &gv)?;
        return Ok((lam.max(0.0).sqrt(), Method::Eigen));
    }
    let ratio = |x: &DVector<f64>| {
        let nx = from.norm(x.as_slice());
        if nx == 0.0 {
            return (f64::NEG_INFINITY, None);
        }
        (to.norm((m * x).as_slice()) / nx, None)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probes: Vec<DVector<f64>> = (0..64).map(|_| random_unit(&mut rng, m.ncols())).collect();
    let best_probe = probes
        .iter()
        .max_by(|a, b| ratio(a).0.total_cmp(&ratio(b).0))
        .cloned()
        .unwrap_or_else(|| DVector::zeros(m.ncols()));
    let ascent = SphereAscent { restarts: 0, max_iter: 200, seed };
    let r = ascent.maximize(m.ncols(), &ratio, &[best_probe]);
    Ok((r.value.max(0.0), Method::Sampled))
}
