//! Slip-velocity sections of the slow manifold and their residuals.
//!
//! With strong viscous friction the admissible distribution `D` perturbs
//! into an attractive invariant manifold parametrized as the graph of a
//! section `h_eps : D -> D_perp`, `v = v_D + h_eps(q, v_D)`. Expanding
//! `h_eps = eps h1 + eps^2 h2 + ...` and matching orders in the covariant
//! invariance condition yields the recursive formulas implemented here:
//!
//! - `h1 = Q [ (nabla_{v_D} P_perp)(v_D) - P_perp (dV)^sharp ]`
//! - `h2 = Q [ (nabla_{h1} P_perp)(v_D) + (nabla_{v_D} P_perp)(h1) ]
//!        - Q D^V h1 [ (nabla_{v_D} P)(v_D) - P (dV)^sharp ]
//!        - Q [ nabla^H_{v_D} h1 (v_D) ]`
//!
//! Inputs are always projected onto `D` first, so slip maps are total on
//! the ambient velocity space. [`generating_residual`] evaluates the full
//! right-hand side of the recursion (all cross terms included) minus the
//! candidate section, which is the exact defect of a candidate manifold;
//! for the order-k truncation it decays like `eps^(k+1)`.

use crate::error::{Error, Result};
use crate::geometry::{self, BundleMap};
use crate::systems::{GeoSnapshot, SystemDef};
use crate::{Matrix, Vector};

/// Step for configuration derivatives of slip maps. These are nested
/// derivatives (the integrand itself may carry finite-difference noise), so
/// the step sits near the noise^(1/5) optimum rather than at the field
/// default; slip maps are low-degree polynomials in the velocity and smooth
/// in `q`, so the larger truncation term stays far below every tolerance.
const SLIP_FD_STEP: f64 = 1e-3;

/// First-order slip at `(q, v)`; `v` may be any ambient velocity and is
/// projected internally. Scales quadratically in `v` when `V = 0`.
pub fn h1(system: &SystemDef, q: &Vector, v: &Vector) -> Result<Vector> {
    let snap = system.snapshot(q)?;
    h1_from(&snap, v)
}

/// [`h1`] evaluated against a prebuilt snapshot.
pub fn h1_from(snap: &GeoSnapshot, v: &Vector) -> Result<Vector> {
    let vd = &snap.pair.p * v;
    let bracket = snap.nabla_p_perp(&vd)? * &vd - &snap.pair.p_perp * &snap.dv_sharp;
    Ok(&snap.pair.q_map * bracket)
}

/// Exact velocity Jacobian of the first-order slip map `w -> h1(q, P w)`,
/// obtained from bilinearity of the covariant term (the potential term is
/// constant in `w`).
pub fn h1_vertical_jacobian(snap: &GeoSnapshot, v: &Vector) -> Result<Matrix> {
    let n = snap.q.len();
    let vd = &snap.pair.p * v;
    let nab_vd = snap.nabla_p_perp(&vd)?;
    let mut out = Matrix::zeros(n, n);
    for j in 0..n {
        let pej = snap.pair.p.column(j).clone_owned();
        let col = &snap.pair.q_map * (snap.nabla_p_perp(&pej)? * &vd + &nab_vd * pej);
        out.set_column(j, &col);
    }
    Ok(out)
}

/// Second-order slip at `(q, v)`.
pub fn h2(system: &SystemDef, q: &Vector, v: &Vector) -> Result<Vector> {
    let snap = system.snapshot(q)?;
    let vd = &snap.pair.p * v;
    let h1v = h1_from(&snap, &vd)?;

    let nab_vd = snap.nabla_p_perp(&vd)?;
    let nab_h1 = snap.nabla_p_perp(&h1v)?;
    let coupling = &snap.pair.q_map * (&nab_h1 * &vd + &nab_vd * &h1v);

    // D^V h1 applied to the ideal reaction direction
    let dv_h1 = h1_vertical_jacobian(&snap, &vd)?;
    let ideal = -(&nab_vd * &vd) - &snap.pair.p * &snap.dv_sharp;
    let vertical = &snap.pair.q_map * (&dv_h1 * ideal);

    // horizontal covariant derivative of the slip section along v_D
    let horiz = h1_horizontal(system, &snap, &vd, &dv_h1)?;
    let transport = &snap.pair.q_map * horiz;

    Ok(coupling - vertical - transport)
}

/// `nabla^H_{v_D} h1 (v_D)` with the configuration derivative taken by a
/// directional finite-difference over the snapshot-exact evaluator.
pub(crate) fn h1_horizontal(
    system: &SystemDef,
    snap: &GeoSnapshot,
    vd: &Vector,
    dv_h1: &Matrix,
) -> Result<Vector> {
    let map = h1_bundle_map(system);
    let mut out = map.dq_along(&snap.q, vd, vd)?;
    if !snap.gamma.is_zero() {
        let gm = snap.gamma.gamma_matrix(vd)?;
        let h1v = h1_from(snap, vd)?;
        out += &gm * h1v - dv_h1 * (gm * vd);
    }
    Ok(out)
}

/// The first-order slip as a [`BundleMap`] (finite-difference derivatives).
pub fn h1_bundle_map(system: &SystemDef) -> SlipMap {
    SlipMap {
        system: system.clone(),
        order: 1,
        scaled: false,
    }
}

/// Truncated slip `h_eps` as an ambient bundle map.
///
/// `eval` returns `0`, `eps h1`, or `eps h1 + eps^2 h2` depending on the
/// order; unsupported orders are rejected at construction.
pub struct SlipSection {
    map: SlipMap,
}

impl SlipSection {
    pub fn new(system: &SystemDef, order: usize) -> Result<Self> {
        if order > 2 {
            return Err(Error::UnsupportedOrder { order });
        }
        Ok(SlipSection {
            map: SlipMap {
                system: system.clone(),
                order,
                scaled: true,
            },
        })
    }

    pub fn order(&self) -> usize {
        self.map.order
    }

    pub fn eval(&self, q: &Vector, v: &Vector) -> Result<Vector> {
        self.map.eval(q, v)
    }

    /// View as a geometry bundle map for derivative machinery.
    pub fn bundle_map(&self) -> BundleMap {
        self.map.bundle_map()
    }
}

/// Internal evaluator shared by [`SlipSection`] and the residual routines.
#[derive(Clone)]
pub struct SlipMap {
    system: SystemDef,
    order: usize,
    /// scaled: multiply orders by powers of eps (truncated section);
    /// unscaled: raw h1.
    scaled: bool,
}

impl SlipMap {
    pub fn eval(&self, q: &Vector, v: &Vector) -> Result<Vector> {
        if !self.scaled {
            return h1(&self.system, q, v);
        }
        let eps = self.system.epsilon();
        match self.order {
            0 => Ok(Vector::zeros(v.len())),
            1 => Ok(eps * h1(&self.system, q, v)?),
            2 => Ok(eps * h1(&self.system, q, v)? + eps * eps * h2(&self.system, q, v)?),
            order => Err(Error::UnsupportedOrder { order }),
        }
    }

    /// Directional configuration derivative `[d(eval)/dq] x` at fixed `w`.
    fn dq_along(&self, q: &Vector, w: &Vector, x: &Vector) -> Result<Vector> {
        let err = std::cell::RefCell::new(None);
        let out = crate::diff::directional_vector(
            |p| match self.eval(p, w) {
                Ok(v) => v,
                Err(e) => {
                    *err.borrow_mut() = Some(e);
                    Vector::zeros(q.len())
                }
            },
            q,
            x,
            SLIP_FD_STEP,
        );
        match err.into_inner() {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    pub fn bundle_map(&self) -> BundleMap {
        let map = self.clone();
        BundleMap::new(move |q, w| map.eval(q, w).expect("slip eval")).with_fd_step(SLIP_FD_STEP)
    }
}

/// Truncated slip `slip = sum_{k<=order} eps^k h_k` (order 0, 1 or 2).
pub fn slip(system: &SystemDef, q: &Vector, v: &Vector, order: usize) -> Result<Vector> {
    let eps = system.epsilon();
    match order {
        0 => Ok(Vector::zeros(v.len())),
        1 => Ok(eps * h1(system, q, v)?),
        2 => Ok(eps * h1(system, q, v)? + eps * eps * h2(system, q, v)?),
        _ => Err(Error::UnsupportedOrder { order }),
    }
}

/// Defect of a candidate slip section in the generating recursion: the full
/// right-hand side (every covariant, vertical and horizontal term, including
/// the self-coupling of the candidate) minus the candidate itself.
pub fn generating_residual(
    system: &SystemDef,
    q: &Vector,
    v: &Vector,
    hcand: &BundleMap,
) -> Result<Vector> {
    let snap = system.snapshot(q)?;
    let eps = system.epsilon();
    let vd = &snap.pair.p * v;

    let h = hcand.value(q, &vd);
    let dvh = geometry::vertical_jacobian(hcand, q, &vd);
    let horiz_v = geometry::horizontal_cov_deriv(hcand, &vd, q, &vd, &snap.gamma)?;
    let horiz_h = geometry::horizontal_cov_deriv(hcand, &h, q, &vd, &snap.gamma)?;

    let nab_vd = snap.nabla_p_perp(&vd)?;
    let nab_h = snap.nabla_p_perp(&h)?;

    // leading reaction term
    let lead = &nab_vd * &vd - &snap.pair.p_perp * &snap.dv_sharp;
    // couplings of the candidate through the projection derivative
    let couple = &nab_vd * &h + &nab_h * &vd + &nab_h * &h;
    // vertical transport of the ideal and coupled reaction directions
    let ideal = -(&nab_vd * &vd) - &snap.pair.p * &snap.dv_sharp;
    let ideal_couple = -(&nab_h * &vd) - &nab_vd * &h - &nab_h * &h;
    let q_map = &snap.pair.q_map;

    let rhs = eps
        * (q_map * (lead + couple)
            - q_map * (&dvh * (ideal + ideal_couple))
            - q_map * (horiz_v + horiz_h));
    Ok(rhs - h)
}

/// Deviation of an ambient velocity from the order-truncated manifold model:
/// `P_perp(v) - slip(q, P v, order)`. Zero exactly on the model graph.
pub fn invariance_residual(
    system: &SystemDef,
    q: &Vector,
    v: &Vector,
    order: usize,
) -> Result<Vector> {
    let snap = system.snapshot(q)?;
    let vd = &snap.pair.p * v;
    let eps = system.epsilon();
    let s = match order {
        0 => Vector::zeros(v.len()),
        1 => eps * h1_from(&snap, &vd)?,
        2 => eps * h1_from(&snap, &vd)? + eps * eps * h2(system, q, &vd)?,
        _ => return Err(Error::UnsupportedOrder { order }),
    };
    Ok(&snap.pair.p_perp * v - s)
}
