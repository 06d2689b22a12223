//! Model right-hand sides, fixed-step integration and energy diagnostics.
//!
//! Three models of the same mechanical system:
//!
//! - `full`: the stiff dynamics with the viscous force `-(1/eps) FR_sharp v`;
//! - `zeroth`: the ideal constrained dynamics (reaction forces from the
//!   projection derivative), which conserve energy when `V = 0` and keep
//!   `A(q) v = 0` invariant;
//! - `first`: the slip-corrected model whose configuration flows along
//!   `v_D + eps h1` and whose acceleration carries the order-eps reaction
//!   terms. Its state velocity is projected onto `D` inside the right-hand
//!   side; initialize on the order-2 manifold model so the carried slip
//!   component stays consistent.
//!
//! Integration is classical explicit RK4 with a fixed step and an optional
//! shorter final step so trajectories land exactly on `t_final`. The full
//! model enforces the stiffness guard `dt <= eps / 20`.

use std::str::FromStr;

use crate::constraints;
use crate::error::{Error, Result};
use crate::geometry;
use crate::slow_manifold;
use crate::systems::SystemDef;
use crate::Vector;

/// Which right-hand side to integrate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    Full,
    Zeroth,
    First,
}

impl Model {
    pub fn as_str(&self) -> &'static str {
        match self {
            Model::Full => "full",
            Model::Zeroth => "zeroth",
            Model::First => "first",
        }
    }
}

impl FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Model::Full),
            "zeroth" => Ok(Model::Zeroth),
            "first" => Ok(Model::First),
            other => Err(Error::InvalidParams(format!(
                "unknown model `{other}` (expected full | zeroth | first)"
            ))),
        }
    }
}

/// Instantaneous state of an integration.
#[derive(Clone, Debug)]
pub struct State {
    pub t: f64,
    pub q: Vector,
    pub v: Vector,
}

impl State {
    pub fn new(t: f64, q: Vector, v: Vector) -> Self {
        State { t, q, v }
    }

    fn is_finite(&self) -> bool {
        self.q.iter().all(|x| x.is_finite()) && self.v.iter().all(|x| x.is_finite())
    }
}

/// Integration plan: model, step, horizon and recording cadence.
#[derive(Clone, Copy, Debug)]
pub struct SimPlan {
    pub model: Model,
    pub dt: f64,
    pub t_final: f64,
    pub epsilon: f64,
    pub record_every: usize,
    /// Duration discarded before error metrics (s).
    pub transient_skip: f64,
}

impl SimPlan {
    pub fn validate(&self) -> Result<()> {
        if self.dt.is_nan() || self.dt <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.t_final < 0.0 {
            return Err(Error::InvalidParams(format!(
                "t_final must be non-negative, got {}",
                self.t_final
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParams(
                "record_every must be at least 1".into(),
            ));
        }
        if self.model == Model::Full {
            let max = self.epsilon / 20.0;
            if self.dt > max * (1.0 + 1e-12) {
                return Err(Error::StepTooLargeForStiffness { dt: self.dt, max });
            }
        }
        Ok(())
    }
}

/// Full singularly perturbed dynamics:
/// `dv/dt = -Gamma(q, v) v - (dV)^sharp - (1/eps) FR_sharp v`, `dq/dt = v`.
pub fn full_rhs(system: &SystemDef, state: &State) -> Result<(Vector, Vector)> {
    let q = &state.q;
    let v = &state.v;
    let gamma = geometry::christoffel(&system.metric, q)?;
    let fr = constraints::friction_sharp(&system.metric, &system.constraints, &system.friction, q)?;
    let mut dv = -(fr * v) / system.epsilon();
    dv -= system.potential.grad_sharp(&system.metric, q)?;
    if !gamma.is_zero() {
        dv -= gamma.gamma_matrix(v)? * v;
    }
    Ok((v.clone(), dv))
}

/// Ideal constrained dynamics:
/// `dv/dt = -Gamma(q, v_D) v_D - (nabla_{v_D} P_perp)(v_D) - P (dV)^sharp`,
/// `dq/dt = v_D` with `v_D = P v`.
pub fn zeroth_rhs(system: &SystemDef, state: &State) -> Result<(Vector, Vector)> {
    let snap = system.snapshot(&state.q)?;
    let vd = &snap.pair.p * &state.v;
    let mut dv = -(snap.nabla_p_perp(&vd)? * &vd) - &snap.pair.p * &snap.dv_sharp;
    if !snap.gamma.is_zero() {
        dv -= snap.gamma.gamma_matrix(&vd)? * &vd;
    }
    Ok((vd, dv))
}

/// First-order slip-corrected dynamics. Reduces to [`zeroth_rhs`] as
/// `eps -> 0`.
pub fn first_rhs(system: &SystemDef, state: &State) -> Result<(Vector, Vector)> {
    let eps = system.epsilon();
    let snap = system.snapshot(&state.q)?;
    let vd = &snap.pair.p * &state.v;
    let h1 = slow_manifold::h1_from(&snap, &vd)?;
    let dv_h1 = slow_manifold::h1_vertical_jacobian(&snap, &vd)?;

    let nab_vd = snap.nabla_p_perp(&vd)?;
    let nab_h1 = snap.nabla_p_perp(&h1)?;
    let p_dv_sharp = &snap.pair.p * &snap.dv_sharp;

    // order zero: ideal reaction forces
    let mut dv = -(&nab_vd * &vd) - &p_dv_sharp;

    // order eps: transported slip and its reaction
    let horiz = slow_manifold::h1_horizontal(system, &snap, &vd, &dv_h1)?;
    dv += eps * &horiz;
    dv -= eps * (&nab_vd * &h1 + &nab_h1 * &vd);
    dv += eps * (&dv_h1 * (-(&nab_vd * &vd) - &p_dv_sharp));

    if !snap.gamma.is_zero() {
        let g_vd = snap.gamma.gamma_matrix(&vd)?;
        let g_h1 = snap.gamma.gamma_matrix(&h1)?;
        dv -= &g_vd * &vd;
        dv -= eps * (&g_vd * &h1 + &g_h1 * &vd);
    }

    let dq = &vd + eps * &h1;
    Ok((dq, dv))
}

/// Dispatch a model to its right-hand side.
pub fn model_rhs<'a>(
    system: &'a SystemDef,
    model: Model,
) -> impl Fn(&State) -> Result<(Vector, Vector)> + 'a {
    move |state| match model {
        Model::Full => full_rhs(system, state),
        Model::Zeroth => zeroth_rhs(system, state),
        Model::First => first_rhs(system, state),
    }
}

fn rk4_step<F>(rhs: &F, state: &State, dt: f64) -> Result<State>
where
    F: Fn(&State) -> Result<(Vector, Vector)> + ?Sized,
{
    let half = 0.5 * dt;
    let (k1q, k1v) = rhs(state)?;
    let s2 = State::new(
        state.t + half,
        &state.q + &k1q * half,
        &state.v + &k1v * half,
    );
    let (k2q, k2v) = rhs(&s2)?;
    let s3 = State::new(
        state.t + half,
        &state.q + &k2q * half,
        &state.v + &k2v * half,
    );
    let (k3q, k3v) = rhs(&s3)?;
    let s4 = State::new(state.t + dt, &state.q + &k3q * dt, &state.v + &k3v * dt);
    let (k4q, k4v) = rhs(&s4)?;
    let sixth = dt / 6.0;
    Ok(State::new(
        state.t + dt,
        &state.q + (k1q + &k2q * 2.0 + &k3q * 2.0 + k4q) * sixth,
        &state.v + (k1v + &k2v * 2.0 + &k3v * 2.0 + k4v) * sixth,
    ))
}

/// Integrate with fixed-step RK4, recording every `record_every` steps and
/// always recording the initial and final states. A shorter final step is
/// taken when `t_final` is not a whole number of steps.
pub fn integrate<F>(rhs: &F, state0: &State, plan: &SimPlan) -> Result<Vec<State>>
where
    F: Fn(&State) -> Result<(Vector, Vector)> + ?Sized,
{
    plan.validate()?;
    let t0 = state0.t;
    let mut out = vec![state0.clone()];
    if !state0.is_finite() {
        return Err(Error::NonFiniteState { t: t0 });
    }
    if plan.t_final == 0.0 {
        return Ok(out);
    }

    let exact = plan.t_final / plan.dt;
    let n_whole = exact.floor() as usize;
    let remainder = plan.t_final - n_whole as f64 * plan.dt;

    let mut current = state0.clone();
    let mut recorded_final = false;
    for k in 1..=n_whole {
        current = rk4_step(rhs, &current, plan.dt)?;
        current.t = t0 + k as f64 * plan.dt;
        if !current.is_finite() {
            return Err(Error::NonFiniteState { t: current.t });
        }
        if k % plan.record_every == 0 {
            out.push(current.clone());
            recorded_final = k == n_whole;
        }
    }
    if remainder > 1e-12 * plan.t_final.max(1.0) {
        current = rk4_step(rhs, &current, remainder)?;
        current.t = t0 + plan.t_final;
        if !current.is_finite() {
            return Err(Error::NonFiniteState { t: current.t });
        }
        out.push(current);
    } else if !recorded_final && n_whole > 0 {
        out.push(current);
    }
    Ok(out)
}

/// Kinetic energy `1/2 v^T G(q) v` (J).
pub fn kinetic_energy(system: &SystemDef, q: &Vector, v: &Vector) -> f64 {
    0.5 * (system.metric.value(q) * v).dot(v)
}

/// Instantaneous energy loss to friction, `-(1/eps) v^T G FR_sharp v`.
/// Non-positive everywhere, zero exactly on admissible velocities.
pub fn dissipation_rate(system: &SystemDef, q: &Vector, v: &Vector) -> Result<f64> {
    let fr = constraints::friction_sharp(&system.metric, &system.constraints, &system.friction, q)?;
    let g = system.metric.value(q);
    Ok(-(g * fr * v).dot(v) / system.epsilon())
}

/// G-norm of the slip component, `|P_perp v|_G`.
pub fn slip_norm(system: &SystemDef, q: &Vector, v: &Vector) -> Result<f64> {
    let p_perp = constraints::p_perp_at(&system.metric, &system.constraints, q)?;
    let slip = p_perp * v;
    Ok((system.metric.value(q) * &slip).dot(&slip).max(0.0).sqrt())
}
