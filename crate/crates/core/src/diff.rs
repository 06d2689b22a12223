//! Fourth-order central finite differences for fields on the chart.
//!
//! All derivatives of user-supplied fields default to the stencil
//! `(f(x-2h) - 8 f(x-h) + 8 f(x+h) - f(x+2h)) / (12 h)` with a per-coordinate
//! step `h_k = step * max(1, |q_k|)`. Analytic callbacks on the field types
//! override these routines entirely.

use crate::{Matrix, Vector};

/// Default relative step for field derivatives.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

fn step_for(step: f64, coord: f64) -> f64 {
    step * coord.abs().max(1.0)
}

/// Partial derivatives of a vector-valued field, one vector per coordinate.
pub fn partials_vector<F: Fn(&Vector) -> Vector>(f: F, q: &Vector, step: f64) -> Vec<Vector> {
    let n = q.len();
    (0..n)
        .map(|k| {
            let h = step_for(step, q[k]);
            let mut qp = q.clone();
            let eval = |s: f64, qp: &mut Vector| {
                qp[k] = q[k] + s;
                f(qp)
            };
            (eval(-2.0 * h, &mut qp) - eval(-h, &mut qp) * 8.0 + eval(h, &mut qp) * 8.0
                - eval(2.0 * h, &mut qp))
                / (12.0 * h)
        })
        .collect()
}

/// Partial derivatives of a matrix-valued field, one matrix per coordinate.
pub fn partials_matrix<F: Fn(&Vector) -> Matrix>(f: F, q: &Vector, step: f64) -> Vec<Matrix> {
    let n = q.len();
    (0..n)
        .map(|k| {
            let h = step_for(step, q[k]);
            let mut qp = q.clone();
            let eval = |s: f64, qp: &mut Vector| {
                qp[k] = q[k] + s;
                f(qp)
            };
            (eval(-2.0 * h, &mut qp) - eval(-h, &mut qp) * 8.0 + eval(h, &mut qp) * 8.0
                - eval(2.0 * h, &mut qp))
                / (12.0 * h)
        })
        .collect()
}

/// Gradient of a scalar field.
pub fn gradient<F: Fn(&Vector) -> f64>(f: F, q: &Vector, step: f64) -> Vector {
    let n = q.len();
    Vector::from_iterator(
        n,
        (0..n).map(|k| {
            let h = step_for(step, q[k]);
            let mut qp = q.clone();
            let mut eval = |s: f64| {
                qp[k] = q[k] + s;
                f(&qp)
            };
            (eval(-2.0 * h) - 8.0 * eval(-h) + 8.0 * eval(h) - eval(2.0 * h)) / (12.0 * h)
        }),
    )
}

/// Directional derivative `[df/dq] dir` of a vector-valued field, taken
/// along the ray `q + s * dir`. Avoids forming the full Jacobian.
pub fn directional_vector<F: Fn(&Vector) -> Vector>(
    f: F,
    q: &Vector,
    dir: &Vector,
    step: f64,
) -> Vector {
    let scale = dir.amax();
    if scale == 0.0 {
        return Vector::zeros(f(q).len());
    }
    let h = step * q.amax().max(1.0) / scale.max(1.0);
    let eval = |s: f64| f(&(q + dir * s));
    (eval(-2.0 * h) - eval(-h) * 8.0 + eval(h) * 8.0 - eval(2.0 * h)) / (12.0 * h)
}
