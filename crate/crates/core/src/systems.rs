//! Built-in system definitions and the config-driven loader.
//!
//! The vertical rolling disk is the reference system: a disk of mass `m`,
//! planar inertia `I`, rolling-axis inertia `J` and radius `R` rolling
//! upright on the plane, coordinates `q = (theta, x, y, phi)` (heading,
//! contact point, rolling angle). Rolling without slipping pins the
//! contact-point velocity to the rim, giving two constraint one-forms
//! `dx - R cos(theta) dphi` and `dy - R sin(theta) dphi`. Every projection,
//! friction and slip quantity has a closed form for this system; those
//! forms live on [`DiskParams`] and serve as the oracle for the generic
//! pipeline.

use crate::constraints::{self, ConstraintSet, FrictionSpec, ProjectionPair};
use crate::error::{Error, Result};
use crate::geometry::{self, ChristoffelData, MetricField, PotentialField};
use crate::{Matrix, Vector};

/// Parameters of the vertical rolling disk (SI units).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskParams {
    /// Mass `m` (kg).
    pub mass: f64,
    /// Moment of inertia normal to the plane `I` (kg m^2).
    pub inertia_plane: f64,
    /// Moment of inertia about the rolling axis `J` (kg m^2).
    pub inertia_roll: f64,
    /// Radius `R` (m).
    pub radius: f64,
    /// Friction coefficient `mu` (kg/s).
    pub mu: f64,
    /// Time-scale ratio `epsilon`.
    pub epsilon: f64,
}

impl DiskParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("m", self.mass),
            ("I", self.inertia_plane),
            ("J", self.inertia_roll),
            ("R", self.radius),
            ("mu", self.mu),
            ("epsilon", self.epsilon),
        ];
        for (name, value) in fields {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "disk parameter {name} must be strictly positive, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// Inertia ratio `m R^2 / (J + m R^2)`, always in (0, 1).
    pub fn inertia_ratio(&self) -> f64 {
        let mr2 = self.mass * self.radius * self.radius;
        mr2 / (self.inertia_roll + mr2)
    }

    /// Derived constant `m R^2 + 2 J`.
    pub fn gamma_const(&self) -> f64 {
        self.mass * self.radius * self.radius + 2.0 * self.inertia_roll
    }

    pub fn metric_matrix(&self) -> Matrix {
        Matrix::from_diagonal(&Vector::from_vec(vec![
            self.inertia_plane,
            self.mass,
            self.mass,
            self.inertia_roll,
        ]))
    }

    pub fn a_matrix(&self, theta: f64) -> Matrix {
        let r = self.radius;
        Matrix::from_row_slice(
            2,
            4,
            &[
                0.0,
                1.0,
                0.0,
                -r * theta.cos(), //
                0.0,
                0.0,
                1.0,
                -r * theta.sin(),
            ],
        )
    }

    pub fn d_frame(&self, theta: f64) -> Matrix {
        let r = self.radius;
        Matrix::from_row_slice(
            4,
            2,
            &[
                1.0,
                0.0, //
                0.0,
                r * theta.cos(),
                0.0,
                r * theta.sin(),
                0.0,
                1.0,
            ],
        )
    }

    /// Closed-form projection onto the rolling distribution.
    pub fn p_matrix(&self, theta: f64) -> Matrix {
        let (s, c) = theta.sin_cos();
        let (m, j, r) = (self.mass, self.inertia_roll, self.radius);
        let ratio = self.inertia_ratio();
        ratio
            * Matrix::from_row_slice(
                4,
                4,
                &[
                    1.0 / ratio,
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                    c * c,
                    s * c,
                    j / (m * r) * c,
                    0.0,
                    s * c,
                    s * s,
                    j / (m * r) * s,
                    0.0,
                    c / r,
                    s / r,
                    j / (m * r * r),
                ],
            )
    }

    /// Closed-form projection onto the slip directions.
    pub fn p_perp_matrix(&self, theta: f64) -> Matrix {
        let (s, c) = theta.sin_cos();
        let (m, j, r) = (self.mass, self.inertia_roll, self.radius);
        let ratio = self.inertia_ratio();
        ratio
            * Matrix::from_row_slice(
                4,
                4,
                &[
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                    (j + m * r * r * s * s) / (m * r * r),
                    -s * c,
                    -j / (m * r) * c,
                    0.0,
                    -s * c,
                    (j + m * r * r * c * c) / (m * r * r),
                    -j / (m * r) * s,
                    0.0,
                    -c / r,
                    -s / r,
                    1.0,
                ],
            )
    }

    /// Closed-form raised friction operator.
    pub fn fr_sharp_matrix(&self, theta: f64) -> Matrix {
        let (s, c) = theta.sin_cos();
        let (m, j, r, mu) = (self.mass, self.inertia_roll, self.radius, self.mu);
        Matrix::from_row_slice(
            4,
            4,
            &[
                0.0,
                0.0,
                0.0,
                0.0,
                0.0,
                mu / m,
                0.0,
                -mu * r / m * c,
                0.0,
                0.0,
                mu / m,
                -mu * r / m * s,
                0.0,
                -mu * r / j * c,
                -mu * r / j * s,
                mu * r * r / j,
            ],
        )
    }

    /// Admissible velocity with heading rate `v_theta` and rolling rate `v_phi`.
    pub fn v_d(&self, theta: f64, v_theta: f64, v_phi: f64) -> Vector {
        let (s, c) = theta.sin_cos();
        Vector::from_vec(vec![
            v_theta,
            self.radius * c * v_phi,
            self.radius * s * v_phi,
            v_phi,
        ])
    }

    /// First-order slip velocity, `(m R / mu) v_theta v_phi (0, sin, -cos, 0)`.
    pub fn h1(&self, theta: f64, v_theta: f64, v_phi: f64) -> Vector {
        let (s, c) = theta.sin_cos();
        let k = self.mass * self.radius / self.mu * v_theta * v_phi;
        Vector::from_vec(vec![0.0, k * s, -k * c, 0.0])
    }

    /// Second-order slip velocity. The slip lags the rotating first-order
    /// equilibrium, so the prefactor is negative:
    /// `-(m^2 R J^2) / (mu^2 (J + m R^2)^2) v_theta^2 v_phi (0, cos, sin, -mR/J)`.
    pub fn h2(&self, theta: f64, v_theta: f64, v_phi: f64) -> Vector {
        let (s, c) = theta.sin_cos();
        let (m, j, r, mu) = (self.mass, self.inertia_roll, self.radius, self.mu);
        let denom = j + m * r * r;
        let k = -(m * m * r * j * j) / (mu * mu * denom * denom) * v_theta * v_theta * v_phi;
        Vector::from_vec(vec![0.0, k * c, k * s, -k * m * r / j])
    }

    /// Ideal rolling acceleration `(0, -R sin v_t v_p, R cos v_t v_p, 0)`.
    pub fn zeroth_accel(&self, theta: f64, v_theta: f64, v_phi: f64) -> Vector {
        let (s, c) = theta.sin_cos();
        let k = self.radius * v_theta * v_phi;
        Vector::from_vec(vec![0.0, -k * s, k * c, 0.0])
    }

    /// Acceleration of the first-order slip-corrected model. The order-eps
    /// term is the friction force of the second-order slip, matching the
    /// sign of [`DiskParams::h2`].
    pub fn first_accel(&self, theta: f64, v_theta: f64, v_phi: f64, epsilon: f64) -> Vector {
        let (syn, c) = theta.sin_cos();
        let (m, j, r, mu) = (self.mass, self.inertia_roll, self.radius, self.mu);
        let k = m * r * j / (mu * (j + m * r * r)) * v_theta * v_theta * v_phi;
        self.zeroth_accel(theta, v_theta, v_phi)
            + epsilon * Vector::from_vec(vec![0.0, k * c, k * syn, -k * m * r / j])
    }

    /// Configuration velocity of the first-order model, `v_D + eps h1`.
    pub fn first_dq(&self, theta: f64, v_theta: f64, v_phi: f64, epsilon: f64) -> Vector {
        self.v_d(theta, v_theta, v_phi) + epsilon * self.h1(theta, v_theta, v_phi)
    }
}

/// Closed-form reference attached to a built-in system.
#[derive(Clone, Copy, Debug)]
pub enum Oracle {
    VerticalDisk(DiskParams),
}

/// A complete mechanical system: metric, potential, constraints, friction.
#[derive(Clone)]
pub struct SystemDef {
    pub name: String,
    pub dim: usize,
    pub metric: MetricField,
    pub potential: PotentialField,
    pub constraints: ConstraintSet,
    pub friction: FrictionSpec,
    pub oracle: Option<Oracle>,
}

impl SystemDef {
    pub fn epsilon(&self) -> f64 {
        self.friction.epsilon()
    }

    /// Same system with a different time-scale ratio.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<SystemDef> {
        let mut out = self.clone();
        out.friction = self.friction.with_epsilon(epsilon)?;
        if let Some(Oracle::VerticalDisk(mut p)) = out.oracle {
            p.epsilon = epsilon;
            out.oracle = Some(Oracle::VerticalDisk(p));
        }
        Ok(out)
    }

    /// Same system with all analytic derivative callbacks removed, forcing
    /// every derivative through the finite-difference path.
    pub fn without_analytic_partials(&self) -> SystemDef {
        let mut out = self.clone();
        out.metric = self.metric.clone().without_partials();
        out.constraints = self.constraints.clone().without_partials();
        out
    }

    /// Geometric snapshot at a configuration: connection coefficients,
    /// projection pair, projection partials and the raised potential
    /// differential, everything the slip and dynamics formulas consume.
    pub fn snapshot(&self, q: &Vector) -> Result<GeoSnapshot> {
        let gamma = geometry::christoffel(&self.metric, q)?;
        let pair = constraints::projections(&self.metric, &self.constraints, &self.friction, q)?;
        let dp_perp = constraints::p_perp_partials(&self.metric, &self.constraints, q)?;
        let dv_sharp = self.potential.grad_sharp(&self.metric, q)?;
        Ok(GeoSnapshot {
            q: q.clone(),
            gamma,
            pair,
            dp_perp,
            dv_sharp,
        })
    }
}

/// Frozen geometric data at one configuration.
#[derive(Clone)]
pub struct GeoSnapshot {
    pub q: Vector,
    pub gamma: ChristoffelData,
    pub pair: ProjectionPair,
    /// Coordinate partials `dP_perp/dq^k`.
    pub dp_perp: Vec<Matrix>,
    /// `(dV)^sharp` at `q`.
    pub dv_sharp: Vector,
}

impl GeoSnapshot {
    /// Covariant derivative of the slip projection along `x`:
    /// `[nabla_x P_perp] = sum_k dP_perp/dq^k x^k + Gamma(x) P_perp - P_perp Gamma(x)`.
    pub fn nabla_p_perp(&self, x: &Vector) -> Result<Matrix> {
        let n = self.q.len();
        let mut out = Matrix::zeros(n, n);
        for k in 0..n {
            if x[k] != 0.0 {
                out += &self.dp_perp[k] * x[k];
            }
        }
        if !self.gamma.is_zero() {
            let gm = self.gamma.gamma_matrix(x)?;
            out += &gm * &self.pair.p_perp - &self.pair.p_perp * &gm;
        }
        Ok(out)
    }

    /// `[nabla_x P] = -[nabla_x P_perp]` since the pair sums to the identity.
    pub fn nabla_p(&self, x: &Vector) -> Result<Matrix> {
        Ok(-self.nabla_p_perp(x)?)
    }
}

/// Build the vertical rolling disk with analytic partials and the
/// closed-form oracle attached.
pub fn disk_system(params: DiskParams) -> Result<SystemDef> {
    params.validate()?;
    let p = params;

    let metric = MetricField::new(4, move |_q| p.metric_matrix())
        .with_partials(|_q| vec![Matrix::zeros(4, 4); 4]);

    let constraints = ConstraintSet::new(4, 2, move |q: &Vector| p.a_matrix(q[0]))
        .with_a_partials(move |q: &Vector| {
            let (s, c) = q[0].sin_cos();
            let r = p.radius;
            let mut dth = Matrix::zeros(2, 4);
            dth[(0, 3)] = r * s;
            dth[(1, 3)] = -r * c;
            vec![
                dth,
                Matrix::zeros(2, 4),
                Matrix::zeros(2, 4),
                Matrix::zeros(2, 4),
            ]
        })
        .with_d_frame(move |q: &Vector| p.d_frame(q[0]));

    let friction = FrictionSpec::isotropic(p.epsilon, p.mu, 2)?;

    Ok(SystemDef {
        name: "vertical-disk".to_string(),
        dim: 4,
        metric,
        potential: PotentialField::zero(4),
        constraints,
        friction,
        oracle: Some(Oracle::VerticalDisk(p)),
    })
}

/// Build a system from a parsed config tree. Only `system.kind =
/// "vertical-disk"` is recognized; the friction time scale comes from
/// `sim.epsilon`.
pub fn load_system(root: &toml::Table) -> Result<SystemDef> {
    use crate::config::tree;
    let kind = tree::get_str(root, "system.kind")?;
    match kind.as_str() {
        "vertical-disk" => {
            let params = DiskParams {
                mass: tree::get_f64(root, "system.params.m")?,
                inertia_plane: tree::get_f64(root, "system.params.I")?,
                inertia_roll: tree::get_f64(root, "system.params.J")?,
                radius: tree::get_f64(root, "system.params.R")?,
                mu: tree::get_f64(root, "system.params.mu")?,
                epsilon: tree::get_f64(root, "sim.epsilon")?,
            };
            disk_system(params)
        }
        other => Err(Error::schema(
            "system.kind",
            format!("unknown system kind `{other}`"),
        )),
    }
}

/// [`load_system`] from raw TOML text.
pub fn load_system_str(text: &str) -> Result<SystemDef> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::schema("<root>", e.to_string()))?;
    load_system(&table)
}
