//! Riemannian computations on an n-dimensional coordinate chart.
//!
//! Everything here works on raw coordinate-basis component arrays: metrics
//! are symmetric matrices, covectors are plain vectors, and indices are
//! raised/lowered explicitly through [`sharp`]/[`flat`]. Field types carry
//! their evaluation closure plus optional analytic derivative callbacks;
//! absent callbacks fall back to 4th-order central differences with step
//! `fd_step * max(1, |q_k|)`.

use std::sync::Arc;

use nalgebra::Cholesky;

use crate::diff;
use crate::error::{Error, Result};
use crate::{Matrix, Vector};

type VecFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
type MatFn = Arc<dyn Fn(&Vector) -> Matrix + Send + Sync>;
type MatPartialsFn = Arc<dyn Fn(&Vector) -> Vec<Matrix> + Send + Sync>;
type ScalarFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
type BundlePartialsFn = Arc<dyn Fn(&Vector, &Vector) -> (Matrix, Matrix) + Send + Sync>;
type BundleEvalFn = Arc<dyn Fn(&Vector, &Vector) -> Vector + Send + Sync>;

fn check_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            got,
        })
    }
}

/// Kinetic-energy metric `G(q)` on the chart (units kg / kg m^2).
#[derive(Clone)]
pub struct MetricField {
    dim: usize,
    value_at: MatFn,
    partials_at: Option<MatPartialsFn>,
    fd_step: f64,
}

impl MetricField {
    pub fn new(dim: usize, value_at: impl Fn(&Vector) -> Matrix + Send + Sync + 'static) -> Self {
        MetricField {
            dim,
            value_at: Arc::new(value_at),
            partials_at: None,
            fd_step: diff::DEFAULT_FD_STEP,
        }
    }

    /// Attach analytic partials `dG/dq^k` (one matrix per coordinate).
    pub fn with_partials(
        mut self,
        partials: impl Fn(&Vector) -> Vec<Matrix> + Send + Sync + 'static,
    ) -> Self {
        self.partials_at = Some(Arc::new(partials));
        self
    }

    pub fn with_fd_step(mut self, step: f64) -> Self {
        self.fd_step = step;
        self
    }

    /// Drop the analytic partials, forcing the finite-difference path.
    pub fn without_partials(mut self) -> Self {
        self.partials_at = None;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    pub fn has_partials(&self) -> bool {
        self.partials_at.is_some()
    }

    /// Metric matrix at `q`. Validation builds assert symmetry and positive
    /// definiteness on every query; release builds leave the hot loop alone.
    pub fn value(&self, q: &Vector) -> Matrix {
        let g = (self.value_at)(q);
        #[cfg(debug_assertions)]
        {
            let asym = (&g - g.transpose()).amax();
            debug_assert!(
                asym <= 1e-12 * g.amax().max(1.0),
                "metric asymmetric by {asym:.3e}"
            );
            debug_assert!(
                g.clone().cholesky().is_some(),
                "metric not positive definite"
            );
        }
        g
    }

    /// Cholesky factorization of `G(q)`, the entry point for every solve
    /// against the metric.
    pub fn factor(&self, q: &Vector) -> Result<Cholesky<f64, nalgebra::Dyn>> {
        (self.value_at)(q).cholesky().ok_or(Error::SingularMetric)
    }

    /// `dG/dq^k` for all k, analytic when provided.
    pub fn partials(&self, q: &Vector) -> Vec<Matrix> {
        match &self.partials_at {
            Some(f) => f(q),
            None => diff::partials_matrix(|p| (self.value_at)(p), q, self.fd_step),
        }
    }
}

/// Raise an index: `omega^sharp = G^{-1} omega`.
pub fn sharp(metric: &MetricField, q: &Vector, omega: &Vector) -> Result<Vector> {
    check_dim("sharp", metric.dim(), omega.len())?;
    Ok(metric.factor(q)?.solve(omega))
}

/// Lower an index: `X^flat = G X`.
pub fn flat(metric: &MetricField, q: &Vector, x: &Vector) -> Result<Vector> {
    check_dim("flat", metric.dim(), x.len())?;
    Ok(metric.value(q) * x)
}

/// Levi-Civita connection coefficients at a configuration.
///
/// `coeff(i, j, k)` is the coefficient with upper index `i` and lower
/// indices `(j, k)`; torsion-freeness makes it symmetric in `(j, k)`.
#[derive(Clone, Debug)]
pub struct ChristoffelData {
    dim: usize,
    coeffs: Vec<f64>,
}

impl ChristoffelData {
    pub fn zeros(dim: usize) -> Self {
        ChristoffelData {
            dim,
            coeffs: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn coeff(&self, i: usize, j: usize, k: usize) -> f64 {
        self.coeffs[(i * self.dim + j) * self.dim + k]
    }

    #[inline]
    fn coeff_mut(&mut self, i: usize, j: usize, k: usize) -> &mut f64 {
        &mut self.coeffs[(i * self.dim + j) * self.dim + k]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    /// Contraction matrix `[Gamma(q, X)]^i_k = Gamma^i_{k j} X^j`, so that
    /// `gamma_matrix(X) * Y` is the bilinear map `Gamma(q, X) Y`.
    pub fn gamma_matrix(&self, x: &Vector) -> Result<Matrix> {
        check_dim("gamma_matrix", self.dim, x.len())?;
        let n = self.dim;
        Ok(Matrix::from_fn(n, n, |i, k| {
            (0..n).map(|j| self.coeff(i, k, j) * x[j]).sum()
        }))
    }
}

/// Christoffel symbols of the Levi-Civita connection,
/// `Gamma^i_{jk} = 1/2 G^{il} (d_k G_{jl} + d_j G_{kl} - d_l G_{jk})`.
pub fn christoffel(metric: &MetricField, q: &Vector) -> Result<ChristoffelData> {
    let n = metric.dim();
    check_dim("christoffel", n, q.len())?;
    let factor = metric.factor(q)?;
    let dg = metric.partials(q);
    let mut out = ChristoffelData::zeros(n);
    for j in 0..n {
        for k in 0..=j {
            let rhs = Vector::from_fn(n, |l, _| {
                0.5 * (dg[k][(j, l)] + dg[j][(k, l)] - dg[l][(j, k)])
            });
            let col = factor.solve(&rhs);
            for i in 0..n {
                *out.coeff_mut(i, j, k) = col[i];
                *out.coeff_mut(i, k, j) = col[i];
            }
        }
    }
    Ok(out)
}

/// A vector field `Y(q)` with optional analytic Jacobian (`J^i_k = dY^i/dq^k`).
#[derive(Clone)]
pub struct VectorField {
    eval: VecFn,
    jacobian_at: Option<MatFn>,
    fd_step: f64,
}

impl VectorField {
    pub fn new(eval: impl Fn(&Vector) -> Vector + Send + Sync + 'static) -> Self {
        VectorField {
            eval: Arc::new(eval),
            jacobian_at: None,
            fd_step: diff::DEFAULT_FD_STEP,
        }
    }

    pub fn with_jacobian(
        mut self,
        jac: impl Fn(&Vector) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        self.jacobian_at = Some(Arc::new(jac));
        self
    }

    pub fn value(&self, q: &Vector) -> Vector {
        (self.eval)(q)
    }

    fn jacobian_times(&self, q: &Vector, x: &Vector) -> Vector {
        match &self.jacobian_at {
            Some(j) => j(q) * x,
            None => diff::directional_vector(|p| (self.eval)(p), q, x, self.fd_step),
        }
    }
}

/// Covariant derivative of a vector field along a tangent vector:
/// `nabla_X Y = [dY/dq] X + Gamma(q, X) Y`.
pub fn cov_deriv_vector(
    y: &VectorField,
    x: &Vector,
    q: &Vector,
    gamma: &ChristoffelData,
) -> Result<Vector> {
    check_dim("cov_deriv_vector", gamma.dim(), x.len())?;
    let mut out = y.jacobian_times(q, x);
    if !gamma.is_zero() {
        out += gamma.gamma_matrix(x)? * y.value(q);
    }
    Ok(out)
}

/// A (1,1)-tensor field, such as a projection map, with optional analytic
/// partials `dA/dq^k`.
#[derive(Clone)]
pub struct TensorField11 {
    value_at: MatFn,
    partials_at: Option<MatPartialsFn>,
    fd_step: f64,
}

impl TensorField11 {
    pub fn new(value_at: impl Fn(&Vector) -> Matrix + Send + Sync + 'static) -> Self {
        TensorField11 {
            value_at: Arc::new(value_at),
            partials_at: None,
            fd_step: diff::DEFAULT_FD_STEP,
        }
    }

    pub fn with_partials(
        mut self,
        partials: impl Fn(&Vector) -> Vec<Matrix> + Send + Sync + 'static,
    ) -> Self {
        self.partials_at = Some(Arc::new(partials));
        self
    }

    pub fn value(&self, q: &Vector) -> Matrix {
        (self.value_at)(q)
    }

    pub fn partials(&self, q: &Vector) -> Vec<Matrix> {
        match &self.partials_at {
            Some(f) => f(q),
            None => diff::partials_matrix(|p| (self.value_at)(p), q, self.fd_step),
        }
    }
}

/// Covariant derivative of a (1,1)-tensor along `X`:
/// `[nabla_X A] = sum_k [dA/dq^k] X^k + [Gamma(q,X)][A] - [A][Gamma(q,X)]`.
pub fn cov_deriv_tensor(
    a: &TensorField11,
    x: &Vector,
    q: &Vector,
    gamma: &ChristoffelData,
) -> Result<Matrix> {
    check_dim("cov_deriv_tensor", gamma.dim(), x.len())?;
    let parts = a.partials(q);
    let n = gamma.dim();
    let mut out = Matrix::zeros(n, n);
    for k in 0..n {
        if x[k] != 0.0 {
            out += &parts[k] * x[k];
        }
    }
    if !gamma.is_zero() {
        let gm = gamma.gamma_matrix(x)?;
        let av = a.value(q);
        out += &gm * &av - &av * &gm;
    }
    Ok(out)
}

/// A (not necessarily linear) tangent-bundle map `h(q, w)`, fiber-preserving
/// by construction. `analytic_partials`, when present, returns the pair
/// `(dh/dq, dh/dw)` of Jacobians at `(q, w)`.
#[derive(Clone)]
pub struct BundleMap {
    eval: BundleEvalFn,
    analytic_partials: Option<BundlePartialsFn>,
    fd_step: f64,
}

impl BundleMap {
    pub fn new(eval: impl Fn(&Vector, &Vector) -> Vector + Send + Sync + 'static) -> Self {
        BundleMap {
            eval: Arc::new(eval),
            analytic_partials: None,
            fd_step: diff::DEFAULT_FD_STEP,
        }
    }

    pub fn with_partials(
        mut self,
        partials: impl Fn(&Vector, &Vector) -> (Matrix, Matrix) + Send + Sync + 'static,
    ) -> Self {
        self.analytic_partials = Some(Arc::new(partials));
        self
    }

    pub fn with_fd_step(mut self, step: f64) -> Self {
        self.fd_step = step;
        self
    }

    pub fn value(&self, q: &Vector, w: &Vector) -> Vector {
        (self.eval)(q, w)
    }

    fn dq_times(&self, q: &Vector, w: &Vector, x: &Vector) -> Vector {
        match &self.analytic_partials {
            Some(f) => f(q, w).0 * x,
            None => diff::directional_vector(|p| (self.eval)(p, w), q, x, self.fd_step),
        }
    }
}

/// Vertical Jacobian `D^V h = [dh^m/dw^l]` of a bundle map at `(q, w)`.
pub fn vertical_jacobian(h: &BundleMap, q: &Vector, w: &Vector) -> Matrix {
    if let Some(f) = &h.analytic_partials {
        return f(q, w).1;
    }
    let parts = diff::partials_vector(|wp| (h.eval)(q, wp), w, h.fd_step);
    let rows = parts.first().map_or(0, Vector::len);
    Matrix::from_fn(rows, w.len(), |i, l| parts[l][i])
}

/// Horizontal covariant derivative of a bundle map along `X`:
/// `nabla^H_X h = [dh/dq] X + Gamma(q,X) h - [D^V h] Gamma(q,X) w`.
pub fn horizontal_cov_deriv(
    h: &BundleMap,
    x: &Vector,
    q: &Vector,
    w: &Vector,
    gamma: &ChristoffelData,
) -> Result<Vector> {
    check_dim("horizontal_cov_deriv", gamma.dim(), x.len())?;
    let mut out = h.dq_times(q, w, x);
    if !gamma.is_zero() {
        let gm = gamma.gamma_matrix(x)?;
        out += &gm * h.value(q, w) - vertical_jacobian(h, q, w) * (gm * w);
    }
    Ok(out)
}

/// Potential energy `V(q)` (J) with optional analytic differential.
#[derive(Clone)]
pub struct PotentialField {
    value_at: ScalarFn,
    gradient_at: Option<VecFn>,
    fd_step: f64,
}

impl PotentialField {
    pub fn new(value_at: impl Fn(&Vector) -> f64 + Send + Sync + 'static) -> Self {
        PotentialField {
            value_at: Arc::new(value_at),
            gradient_at: None,
            fd_step: diff::DEFAULT_FD_STEP,
        }
    }

    /// Identically-zero potential (analytic gradient included).
    pub fn zero(dim: usize) -> Self {
        PotentialField::new(|_q| 0.0).with_gradient(move |_q| Vector::zeros(dim))
    }

    pub fn with_gradient(
        mut self,
        gradient: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
    ) -> Self {
        self.gradient_at = Some(Arc::new(gradient));
        self
    }

    pub fn value(&self, q: &Vector) -> f64 {
        (self.value_at)(q)
    }

    /// Differential `dV` as a covector.
    pub fn differential(&self, q: &Vector) -> Vector {
        match &self.gradient_at {
            Some(f) => f(q),
            None => diff::gradient(|p| (self.value_at)(p), q, self.fd_step),
        }
    }

    /// `(dV)^sharp`, the gradient vector field under the metric.
    pub fn grad_sharp(&self, metric: &MetricField, q: &Vector) -> Result<Vector> {
        sharp(metric, q, &self.differential(q))
    }
}
