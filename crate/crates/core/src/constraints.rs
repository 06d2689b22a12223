//! Constraint distributions, G-orthogonal projections, Rayleigh friction.
//!
//! A set of m independent one-forms `A(q)` (rows) defines the admissible
//! distribution `D = ker A`. Its G-orthogonal complement is spanned by the
//! raised rows `W = G^{-1} A^T`, and the unique G-orthogonal projection
//! with image `D_perp` and kernel `D` is `P_perp = W (A W)^{-1} A`.
//! The viscous contact force is the raised fibre derivative of the Rayleigh
//! dissipation form, `FR_sharp = G^{-1} A^T mu A`; its kernel is exactly `D`,
//! so friction does no work on admissible velocities. The partial inverse
//! `Q` of `FR_sharp` on `D_perp` (block inversion in the `[S | W]` frame)
//! satisfies `Q FR_sharp = P_perp` and drives every slip-velocity formula.

use std::sync::Arc;

use crate::diff;
use crate::error::{Error, Result};
use crate::geometry::MetricField;
use crate::systems::SystemDef;
use crate::{Matrix, Vector};

/// Condition-number guard applied to every frame solve.
pub const COND_LIMIT: f64 = 1e12;
/// Allowed relative leakage of the friction operator outside its
/// `D_perp x D_perp` block in the `[S | W]` frame.
const OFF_BLOCK_TOL: f64 = 1e-8;

type MatFn = Arc<dyn Fn(&Vector) -> Matrix + Send + Sync>;
type MatPartialsFn = Arc<dyn Fn(&Vector) -> Vec<Matrix> + Send + Sync>;

/// One-norm condition estimate from a matrix and its inverse.
fn cond1(m: &Matrix, minv: &Matrix) -> f64 {
    norm1(m) * norm1(minv)
}

fn norm1(m: &Matrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Linear velocity constraints `A(q) v = 0` (m rows of one-form coefficients).
#[derive(Clone)]
pub struct ConstraintSet {
    m: usize,
    dim: usize,
    a_at: MatFn,
    a_partials_at: Option<MatPartialsFn>,
    d_frame_at: Option<MatFn>,
    fd_step: f64,
}

impl ConstraintSet {
    pub fn new(
        dim: usize,
        m: usize,
        a_at: impl Fn(&Vector) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        ConstraintSet {
            m,
            dim,
            a_at: Arc::new(a_at),
            a_partials_at: None,
            d_frame_at: None,
            fd_step: diff::DEFAULT_FD_STEP,
        }
    }

    /// Attach analytic partials `dA/dq^k`.
    pub fn with_a_partials(
        mut self,
        partials: impl Fn(&Vector) -> Vec<Matrix> + Send + Sync + 'static,
    ) -> Self {
        self.a_partials_at = Some(Arc::new(partials));
        self
    }

    /// Attach a user-supplied smooth frame spanning `D` (n x (n-m) columns).
    /// Preferred over factorization-based null spaces, which are not
    /// continuous in `q`.
    pub fn with_d_frame(
        mut self,
        frame: impl Fn(&Vector) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        self.d_frame_at = Some(Arc::new(frame));
        self
    }

    pub fn without_partials(mut self) -> Self {
        self.a_partials_at = None;
        self
    }

    pub fn count(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_partials(&self) -> bool {
        self.a_partials_at.is_some()
    }

    pub fn has_user_frame(&self) -> bool {
        self.d_frame_at.is_some()
    }

    pub fn a_matrix(&self, q: &Vector) -> Matrix {
        (self.a_at)(q)
    }

    pub fn a_partials(&self, q: &Vector) -> Vec<Matrix> {
        match &self.a_partials_at {
            Some(f) => f(q),
            None => diff::partials_matrix(|p| (self.a_at)(p), q, self.fd_step),
        }
    }
}

/// Friction coefficients `mu(q)` (m x m, SPD, kg/s) and the time-scale
/// ratio `epsilon`; dynamics applies the rescaled force `-(1/eps) FR_sharp v`.
#[derive(Clone)]
pub struct FrictionSpec {
    mu_at: MatFn,
    epsilon: f64,
}

impl FrictionSpec {
    pub fn new(
        epsilon: f64,
        mu_at: impl Fn(&Vector) -> Matrix + Send + Sync + 'static,
    ) -> Result<Self> {
        if epsilon.is_nan() || epsilon <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(FrictionSpec {
            mu_at: Arc::new(mu_at),
            epsilon,
        })
    }

    /// Constant isotropic coefficients `mu * I_m`.
    pub fn isotropic(epsilon: f64, mu: f64, m: usize) -> Result<Self> {
        if mu.is_nan() || mu <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "mu must be positive, got {mu}"
            )));
        }
        FrictionSpec::new(epsilon, move |_q| Matrix::identity(m, m) * mu)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        if epsilon.is_nan() || epsilon <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(FrictionSpec {
            mu_at: self.mu_at.clone(),
            epsilon,
        })
    }

    pub fn mu(&self, q: &Vector) -> Matrix {
        let mu = (self.mu_at)(q);
        debug_assert!(
            (&mu - mu.transpose()).amax() <= 1e-12 * mu.amax().max(1.0),
            "friction coefficients must be symmetric"
        );
        debug_assert!(
            mu.is_empty() || mu.clone().cholesky().is_some(),
            "friction coefficients must be positive definite"
        );
        mu
    }
}

/// Per-configuration snapshot of the projection algebra.
#[derive(Clone, Debug)]
pub struct ProjectionPair {
    /// Projection onto `D` along `D_perp`.
    pub p: Matrix,
    /// Projection onto `D_perp` along `D`.
    pub p_perp: Matrix,
    /// Columns spanning `D` (user frame when supplied).
    pub d_frame: Matrix,
    /// Columns `W = G^{-1} A^T` spanning `D_perp`.
    pub dperp_frame: Matrix,
    /// Partial inverse of the friction operator: `q_map * fr_sharp = p_perp`.
    pub q_map: Matrix,
    /// Raised friction operator `G^{-1} A^T mu A`.
    pub fr_sharp: Matrix,
}

/// Columns `G^{-1} A^T` spanning the G-orthogonal complement `D_perp`.
pub fn complement_frame(metric: &MetricField, cs: &ConstraintSet, q: &Vector) -> Result<Matrix> {
    let n = metric.dim();
    let m = cs.count();
    if m == 0 {
        return Ok(Matrix::zeros(n, 0));
    }
    let a = cs.a_matrix(q);
    let factor = metric.factor(q)?;
    let w = factor.solve(&a.transpose());
    // full rank of A <=> A G^{-1} A^T is SPD
    if (&a * &w).cholesky().is_none() {
        return Err(Error::RankDeficientConstraints);
    }
    Ok(w)
}

/// Columns spanning `D = ker A`. Returns the user frame when supplied,
/// otherwise an orthonormal null-space basis with deterministic sign fixing
/// (largest-magnitude entry of each column made positive).
pub fn distribution_frame(cs: &ConstraintSet, q: &Vector) -> Result<Matrix> {
    let n = cs.dim();
    let m = cs.count();
    if m == 0 {
        return Ok(Matrix::identity(n, n));
    }
    if let Some(f) = &cs.d_frame_at {
        let s = f(q);
        debug_assert!(
            (cs.a_matrix(q) * &s).amax() <= 1e-10 * s.amax().max(1.0),
            "user frame does not annihilate the constraints"
        );
        return Ok(s);
    }
    let a = cs.a_matrix(q);
    // kernel of A = eigenvectors of A^T A with (near-)zero eigenvalue
    let gram = a.transpose() * &a;
    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let a_scale = a.amax().max(1.0);
    let mut frame = Matrix::zeros(n, n - m);
    for (col, &idx) in order.iter().take(n - m).enumerate() {
        let mut v = eig.eigenvectors.column(idx).clone_owned();
        if (&a * &v).amax() > 1e-8 * a_scale {
            return Err(Error::RankDeficientConstraints);
        }
        let lead = v.iter().enumerate().fold((0usize, 0.0f64), |acc, (i, x)| {
            if x.abs() > acc.1 {
                (i, x.abs())
            } else {
                acc
            }
        });
        if v[lead.0] < 0.0 {
            v = -v;
        }
        frame.set_column(col, &v);
    }
    Ok(frame)
}

/// Raised friction operator `FR_sharp = G^{-1} A^T mu A` without the rest of
/// the projection algebra (the full-model hot path).
pub fn friction_sharp(
    metric: &MetricField,
    cs: &ConstraintSet,
    fs: &FrictionSpec,
    q: &Vector,
) -> Result<Matrix> {
    let n = metric.dim();
    if cs.count() == 0 {
        return Ok(Matrix::zeros(n, n));
    }
    let a = cs.a_matrix(q);
    let w = metric.factor(q)?.solve(&a.transpose());
    Ok(w * fs.mu(q) * a)
}

/// Build the complete projection pair at a configuration.
pub fn projections(
    metric: &MetricField,
    cs: &ConstraintSet,
    fs: &FrictionSpec,
    q: &Vector,
) -> Result<ProjectionPair> {
    let n = metric.dim();
    let m = cs.count();
    if m == 0 {
        return Ok(ProjectionPair {
            p: Matrix::identity(n, n),
            p_perp: Matrix::zeros(n, n),
            d_frame: Matrix::identity(n, n),
            dperp_frame: Matrix::zeros(n, 0),
            q_map: Matrix::zeros(n, n),
            fr_sharp: Matrix::zeros(n, n),
        });
    }

    let a = cs.a_matrix(q);
    let factor = metric.factor(q)?;
    let w = factor.solve(&a.transpose());
    let k = &a * &w;
    let k_chol = k
        .clone()
        .cholesky()
        .ok_or(Error::RankDeficientConstraints)?;
    let k_inv = k_chol.inverse();
    let cond_k = cond1(&k, &k_inv);
    if cond_k > COND_LIMIT {
        return Err(Error::IllConditionedFrame { cond: cond_k });
    }

    let p_perp = &w * (&k_inv * &a);
    let p = Matrix::identity(n, n) - &p_perp;
    let fr_sharp = &w * fs.mu(q) * &a;

    let s = distribution_frame(cs, q)?;
    let mut phi = Matrix::zeros(n, n);
    for j in 0..n - m {
        phi.set_column(j, &s.column(j));
    }
    for j in 0..m {
        phi.set_column(n - m + j, &w.column(j));
    }
    let phi_lu = phi.clone().lu();
    let phi_inv = phi_lu
        .try_inverse()
        .ok_or(Error::RankDeficientConstraints)?;
    let cond_phi = cond1(&phi, &phi_inv);
    if cond_phi > COND_LIMIT {
        return Err(Error::IllConditionedFrame { cond: cond_phi });
    }

    // friction operator in the [S | W] frame: the D rows/columns must vanish
    let fr_frame = &phi_inv * &fr_sharp * &phi;
    let scale = fr_frame.amax().max(1.0);
    let mut leak = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i < n - m || j < n - m {
                leak = leak.max(fr_frame[(i, j)].abs());
            }
        }
    }
    if leak > OFF_BLOCK_TOL * scale {
        return Err(Error::QMapConstruction {
            defect: leak / scale,
        });
    }

    let fr_block = fr_frame.view((n - m, n - m), (m, m)).clone_owned();
    let block_inv = fr_block
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::RankDeficientConstraints)?;
    let cond_block = cond1(&fr_block, &block_inv);
    if cond_block > COND_LIMIT {
        return Err(Error::IllConditionedFrame { cond: cond_block });
    }
    let mut q_frame = Matrix::zeros(n, n);
    q_frame
        .view_mut((n - m, n - m), (m, m))
        .copy_from(&block_inv);
    let q_map = &phi * q_frame * &phi_inv;

    Ok(ProjectionPair {
        p,
        p_perp,
        d_frame: s,
        dperp_frame: w,
        q_map,
        fr_sharp,
    })
}

/// Apply the partial inverse of the friction operator. The result lies in
/// the span of `dperp_frame`, and `q_map_apply(pp, fr_sharp v) = p_perp v`.
pub fn q_map_apply(pp: &ProjectionPair, u: &Vector) -> Vector {
    &pp.q_map * u
}

/// `P_perp(q)` alone (used by finite-difference paths).
pub fn p_perp_at(metric: &MetricField, cs: &ConstraintSet, q: &Vector) -> Result<Matrix> {
    let n = metric.dim();
    if cs.count() == 0 {
        return Ok(Matrix::zeros(n, n));
    }
    let a = cs.a_matrix(q);
    let w = metric.factor(q)?.solve(&a.transpose());
    let k_chol = (&a * &w)
        .cholesky()
        .ok_or(Error::RankDeficientConstraints)?;
    Ok(&w * k_chol.solve(&a))
}

/// Coordinate partials `dP_perp/dq^k`. Uses the product rule through
/// `W (A W)^{-1} A` when both the metric and the constraints carry analytic
/// partials; falls back to finite differences of the projection field.
pub fn p_perp_partials(
    metric: &MetricField,
    cs: &ConstraintSet,
    q: &Vector,
) -> Result<Vec<Matrix>> {
    let n = metric.dim();
    if cs.count() == 0 {
        return Ok(vec![Matrix::zeros(n, n); n]);
    }
    if !(metric.has_partials() && cs.has_partials()) {
        let err = std::cell::RefCell::new(None);
        let field = |p: &Vector| match p_perp_at(metric, cs, p) {
            Ok(m) => m,
            Err(e) => {
                *err.borrow_mut() = Some(e);
                Matrix::zeros(n, n)
            }
        };
        let parts = diff::partials_matrix(field, q, metric.fd_step());
        return match err.into_inner() {
            Some(e) => Err(e),
            None => Ok(parts),
        };
    }

    let a = cs.a_matrix(q);
    let da = cs.a_partials(q);
    let dg = metric.partials(q);
    let factor = metric.factor(q)?;
    let w = factor.solve(&a.transpose());
    let k_chol = (&a * &w)
        .cholesky()
        .ok_or(Error::RankDeficientConstraints)?;
    let m_sol = k_chol.solve(&a); // (A W)^{-1} A

    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        // dW = -G^{-1} dG W + G^{-1} dA^T
        let dw = factor.solve(&(da[k].transpose() - &dg[k] * &w));
        // dK = dA W + A dW
        let dk = &da[k] * &w + &a * &dw;
        // d[(AW)^{-1} A] = (AW)^{-1} (dA - dK (AW)^{-1} A)
        let dm = k_chol.solve(&(&da[k] - &dk * &m_sol));
        out.push(&dw * &m_sol + &w * dm);
    }
    Ok(out)
}

/// Ideal nonholonomic reaction force (Lagrange multiplier),
/// `lambda = -(nabla_v P_perp)(v) + P_perp (dV)^sharp`, evaluated as written
/// for any ambient `v`; lies in `D_perp` whenever `v` is admissible.
pub fn lagrange_multiplier(system: &SystemDef, q: &Vector, v: &Vector) -> Result<Vector> {
    let snap = system.snapshot(q)?;
    Ok(-(snap.nabla_p_perp(v)? * v) + &snap.pair.p_perp * snap.dv_sharp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{disk_system, DiskParams};
    use proptest::prelude::*;

    fn disk() -> SystemDef {
        disk_system(DiskParams {
            mass: 1.0,
            inertia_plane: 1.0,
            inertia_roll: 0.5,
            radius: 1.0,
            mu: 1.0,
            epsilon: 0.1,
        })
        .unwrap()
    }

    fn disk_pair(theta: f64) -> ProjectionPair {
        let sys = disk();
        let q = Vector::from_vec(vec![theta, 0.0, 0.0, 0.0]);
        projections(&sys.metric, &sys.constraints, &sys.friction, &q).unwrap()
    }

    #[test]
    fn complement_frame_disk() {
        let sys = disk();
        let q = Vector::zeros(4);
        let w = complement_frame(&sys.metric, &sys.constraints, &q).unwrap();
        let expect = Matrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, -2.0, 0.0]);
        assert!((w - expect).amax() < 1e-12);
    }

    #[test]
    fn complement_frame_trivial_cases() {
        let metric = MetricField::new(2, |_| Matrix::identity(2, 2));
        let none = ConstraintSet::new(2, 0, |_| Matrix::zeros(0, 2));
        assert_eq!(
            complement_frame(&metric, &none, &Vector::zeros(2))
                .unwrap()
                .ncols(),
            0
        );

        let one = ConstraintSet::new(2, 1, |_| Matrix::from_row_slice(1, 2, &[1.0, 0.0]));
        let w = complement_frame(&metric, &one, &Vector::zeros(2)).unwrap();
        assert!((w - Matrix::from_row_slice(2, 1, &[1.0, 0.0])).amax() < 1e-14);
    }

    #[test]
    fn distribution_frame_variants() {
        // user frame passthrough for the disk
        let sys = disk();
        let th: f64 = 0.8;
        let q = Vector::from_vec(vec![th, 0.0, 0.0, 0.0]);
        let s = distribution_frame(&sys.constraints, &q).unwrap();
        let expect =
            Matrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, th.cos(), 0.0, th.sin(), 0.0, 1.0]);
        assert!((&s - expect).amax() < 1e-14);

        // no constraints: identity basis
        let none = ConstraintSet::new(3, 0, |_| Matrix::zeros(0, 3));
        assert_eq!(
            distribution_frame(&none, &Vector::zeros(3)).unwrap(),
            Matrix::identity(3, 3)
        );

        // null-space basis with sign fixing
        let one = ConstraintSet::new(2, 1, |_| Matrix::from_row_slice(1, 2, &[1.0, 0.0]));
        let s = distribution_frame(&one, &Vector::zeros(2)).unwrap();
        assert!((s - Matrix::from_row_slice(2, 1, &[0.0, 1.0])).amax() < 1e-12);
    }

    #[test]
    fn projections_match_disk_closed_forms_at_zero() {
        let pp = disk_pair(0.0);
        let p_expect = Matrix::from_row_slice(
            4,
            4,
            &[
                1.0,
                0.0,
                0.0,
                0.0, //
                0.0,
                2.0 / 3.0,
                0.0,
                1.0 / 3.0, //
                0.0,
                0.0,
                0.0,
                0.0, //
                0.0,
                2.0 / 3.0,
                0.0,
                1.0 / 3.0,
            ],
        );
        let pperp_expect = Matrix::from_row_slice(
            4,
            4,
            &[
                0.0,
                0.0,
                0.0,
                0.0, //
                0.0,
                1.0 / 3.0,
                0.0,
                -1.0 / 3.0, //
                0.0,
                0.0,
                1.0,
                0.0, //
                0.0,
                -2.0 / 3.0,
                0.0,
                2.0 / 3.0,
            ],
        );
        let fr_expect = Matrix::from_row_slice(
            4,
            4,
            &[
                0.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, -1.0, //
                0.0, 0.0, 1.0, 0.0, //
                0.0, -2.0, 0.0, 2.0,
            ],
        );
        assert!((&pp.p - p_expect).amax() < 1e-12);
        assert!((&pp.p_perp - pperp_expect).amax() < 1e-12);
        assert!((&pp.fr_sharp - fr_expect).amax() < 1e-12);
    }

    #[test]
    fn projections_without_constraints() {
        let metric = MetricField::new(3, |_| Matrix::identity(3, 3));
        let cs = ConstraintSet::new(3, 0, |_| Matrix::zeros(0, 3));
        let fs = FrictionSpec::isotropic(0.1, 1.0, 0).unwrap();
        let pp = projections(&metric, &cs, &fs, &Vector::zeros(3)).unwrap();
        assert_eq!(pp.p, Matrix::identity(3, 3));
        assert_eq!(pp.p_perp.amax(), 0.0);
        assert_eq!(pp.fr_sharp.amax(), 0.0);
        assert_eq!(pp.q_map.amax(), 0.0);
    }

    #[test]
    fn q_map_inverts_friction_on_complement() {
        let pp = disk_pair(0.0);
        // eigenvector of FR_sharp on D_perp with eigenvalue mu/m = 1
        let u = Vector::from_vec(vec![0.0, 0.0, 1.0, 0.0]);
        assert!((q_map_apply(&pp, &u) - &u).amax() < 1e-12);
        // eigenvector with eigenvalue mu (1/m + R^2/J) = 3
        let u = Vector::from_vec(vec![0.0, 1.0, 0.0, -2.0]);
        let expect = Vector::from_vec(vec![0.0, 1.0 / 3.0, 0.0, -2.0 / 3.0]);
        assert!((q_map_apply(&pp, &u) - expect).amax() < 1e-12);
        // anything in D is annihilated
        let u = Vector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        assert!(q_map_apply(&pp, &u).amax() < 1e-12);
    }

    #[test]
    fn rank_deficient_constraints_detected() {
        let metric = MetricField::new(3, |_| Matrix::identity(3, 3));
        let cs = ConstraintSet::new(3, 2, |_| {
            Matrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0])
        });
        let fs = FrictionSpec::isotropic(0.1, 1.0, 2).unwrap();
        let err = projections(&metric, &cs, &fs, &Vector::zeros(3)).unwrap_err();
        assert!(matches!(err, Error::RankDeficientConstraints));
    }

    #[test]
    fn lagrange_multiplier_disk() {
        let sys = disk();
        let q = Vector::zeros(4);
        // admissible velocity with unit components
        let v = Vector::from_vec(vec![1.0, 1.0, 0.0, 1.0]);
        let lambda = lagrange_multiplier(&sys, &q, &v).unwrap();
        assert!((lambda - Vector::from_vec(vec![0.0, 0.0, 1.0, 0.0])).amax() < 1e-8);

        assert!(
            lagrange_multiplier(&sys, &q, &Vector::zeros(4))
                .unwrap()
                .amax()
                < 1e-12
        );

        // straight rolling: every term carries v_theta
        let v = Vector::from_vec(vec![0.0, 1.0, 0.0, 1.0]);
        assert!(lagrange_multiplier(&sys, &q, &v).unwrap().amax() < 1e-8);
    }

    #[test]
    fn p_perp_partials_analytic_matches_fd() {
        let sys = disk();
        let q = Vector::from_vec(vec![1.1, 0.2, -0.4, 2.0]);
        let analytic = p_perp_partials(&sys.metric, &sys.constraints, &q).unwrap();
        let stripped = sys.without_analytic_partials();
        let fd = p_perp_partials(&stripped.metric, &stripped.constraints, &q).unwrap();
        for k in 0..4 {
            assert!((&analytic[k] - &fd[k]).amax() < 1e-8);
        }
    }

    #[test]
    fn frame_independence_of_projections() {
        // P_perp and Q must agree between the user disk frame and the
        // factorization null-space frame
        let sys = disk();
        let user = &sys.constraints;
        let auto = ConstraintSet::new(4, 2, {
            let a = user.a_at.clone();
            move |q: &Vector| a(q)
        });
        for th in [0.0, 0.9, 2.4, 4.4] {
            let q = Vector::from_vec(vec![th, 0.0, 0.0, 0.0]);
            let pp_user = projections(&sys.metric, user, &sys.friction, &q).unwrap();
            let pp_auto = projections(&sys.metric, &auto, &sys.friction, &q).unwrap();
            assert!((&pp_user.p_perp - &pp_auto.p_perp).amax() < 1e-10);
            assert!((&pp_user.q_map - &pp_auto.q_map).amax() < 1e-10);
        }
    }

    proptest! {
        // projection algebra on random disk configurations
        #[test]
        fn projection_algebra(th in 0.0f64..std::f64::consts::TAU) {
            let pp = disk_pair(th);
            let sys = disk();
            let q = Vector::from_vec(vec![th, 0.0, 0.0, 0.0]);
            let g = sys.metric.value(&q);
            let a = sys.constraints.a_matrix(&q);
            let id = Matrix::identity(4, 4);
            prop_assert!((&pp.p * &pp.p - &pp.p).amax() < 1e-10);
            prop_assert!((&pp.p_perp * &pp.p_perp - &pp.p_perp).amax() < 1e-10);
            prop_assert!((&pp.p * &pp.p_perp).amax() < 1e-10);
            prop_assert!((&pp.p + &pp.p_perp - id).amax() < 1e-10);
            prop_assert!((pp.p.transpose() * &g - &g * &pp.p).amax() < 1e-10);
            prop_assert!((&a * &pp.p).amax() < 1e-10);
            prop_assert!((&pp.fr_sharp * &pp.p).amax() < 1e-10);
            prop_assert!((&pp.q_map * &pp.fr_sharp - &pp.p_perp).amax() < 1e-10);
            prop_assert!((&pp.q_map * &pp.d_frame).amax() < 1e-10);
            prop_assert!((&a * &pp.d_frame).amax() < 1e-10);
        }

        // dissipativity: v^T G FR v >= 0, zero exactly on D
        #[test]
        fn friction_dissipative(th in 0.0f64..std::f64::consts::TAU,
                                a in -2.0f64..2.0, b in -2.0f64..2.0,
                                c in -2.0f64..2.0, d in -2.0f64..2.0) {
            let sys = disk();
            let q = Vector::from_vec(vec![th, 0.0, 0.0, 0.0]);
            let pp = disk_pair(th);
            let g = sys.metric.value(&q);
            let v = Vector::from_vec(vec![a, b, c, d]);
            let quad = (&g * &pp.fr_sharp * &v).dot(&v);
            prop_assert!(quad >= -1e-10);
            let slip = (&pp.p_perp * &v).amax();
            if slip < 1e-12 {
                prop_assert!(quad.abs() < 1e-10);
            }
            if quad.abs() < 1e-14 {
                prop_assert!(slip < 1e-6);
            }
        }
    }

    #[test]
    fn friction_scale_equivariance() {
        let sys = disk();
        let q = Vector::from_vec(vec![0.7, 0.0, 0.0, 0.0]);
        let fs2 = FrictionSpec::isotropic(sys.friction.epsilon(), 2.0, 2).unwrap();
        let pp1 = projections(&sys.metric, &sys.constraints, &sys.friction, &q).unwrap();
        let pp2 = projections(&sys.metric, &sys.constraints, &fs2, &q).unwrap();
        assert!((&pp2.fr_sharp - &pp1.fr_sharp * 2.0).amax() < 1e-12);
        assert!((&pp2.q_map - &pp1.q_map * 0.5).amax() < 1e-12);
        assert!((&pp2.q_map * &pp2.fr_sharp - &pp1.p_perp).amax() < 1e-10);
    }
}
