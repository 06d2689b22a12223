//! Invariant suites behind `nonholo validate`.
//!
//! Each check measures a defect (max absolute violation, or a slope
//! distance for order checks) against a pinned tolerance. The fault hook
//! exists so tests can prove the suite actually bites.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::constraints::{self, FrictionSpec};
use crate::dynamics::{self, Model, SimPlan, State};
use crate::error::Result;
use crate::geometry;
use crate::slow_manifold::{self, SlipSection};
use crate::systems::{Oracle, SystemDef};
use crate::{Matrix, Vector};

/// Outcome of one invariant check.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub defect: f64,
    pub tol: f64,
    pub pass: bool,
}

impl CheckResult {
    fn new(name: &'static str, defect: f64, tol: f64) -> Self {
        CheckResult {
            name,
            defect,
            tol,
            pass: defect <= tol,
        }
    }
}

/// Deliberate corruption for exercising the suite itself.
#[derive(Clone, Copy, Debug)]
pub enum Fault {
    /// Flip the sign of `P` before the projection-algebra checks.
    FlipProjectionSign,
}

/// Draw sample configurations; heading-like coordinates get a full turn,
/// translations a unit box.
pub fn sample_configs(system: &SystemDef, rng: &mut impl Rng, count: usize) -> Vec<Vector> {
    let n = system.dim;
    (0..count)
        .map(|_| match system.oracle {
            Some(Oracle::VerticalDisk(_)) => Vector::from_vec(vec![
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(0.0..std::f64::consts::TAU),
            ]),
            None => Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)),
        })
        .collect()
}

fn sample_velocity(n: usize, rng: &mut impl Rng) -> Vector {
    Vector::from_fn(n, |_, _| rng.random_range(-2.0..2.0))
}

/// Max-entry defect of the projection algebra over sample configurations.
/// Returns the worst violation across all eight identities.
pub fn projection_algebra_defects(
    system: &SystemDef,
    configs: &[Vector],
    fault: Option<Fault>,
) -> Result<ProjectionDefects> {
    let mut d = ProjectionDefects::default();
    for q in configs {
        let mut pp =
            constraints::projections(&system.metric, &system.constraints, &system.friction, q)?;
        if let Some(Fault::FlipProjectionSign) = fault {
            pp.p = -pp.p;
        }
        let g = system.metric.value(q);
        let a = system.constraints.a_matrix(q);
        let id = Matrix::identity(system.dim, system.dim);
        d.idempotence = d
            .idempotence
            .max((&pp.p * &pp.p - &pp.p).amax())
            .max((&pp.p_perp * &pp.p_perp - &pp.p_perp).amax());
        d.complementarity = d
            .complementarity
            .max((&pp.p * &pp.p_perp).amax())
            .max((&pp.p + &pp.p_perp - id).amax());
        d.self_adjointness = d
            .self_adjointness
            .max((pp.p.transpose() * &g - &g * &pp.p).amax());
        d.annihilation = d.annihilation.max((&a * &pp.p).amax());
        d.friction_kernel = d.friction_kernel.max((&pp.fr_sharp * &pp.p).amax());
        d.q_map_identity = d
            .q_map_identity
            .max((&pp.q_map * &pp.fr_sharp - &pp.p_perp).amax());
    }
    Ok(d)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ProjectionDefects {
    pub idempotence: f64,
    pub complementarity: f64,
    pub self_adjointness: f64,
    pub annihilation: f64,
    pub friction_kernel: f64,
    pub q_map_identity: f64,
}

/// Classical (time-derivative) expression for the viscous reaction force at
/// a state on the graph of the slip map. Independent code path: plain
/// second-order differences, no connection machinery.
pub fn friction_force_classical(
    system: &SystemDef,
    slip: &SlipSection,
    q: &Vector,
    v: &Vector,
) -> Result<Vector> {
    let n = system.dim;
    let h = 1e-6;
    let p_perp_of = |p: &Vector| constraints::p_perp_at(&system.metric, &system.constraints, p);
    let p_perp = p_perp_of(q)?;
    let p = Matrix::identity(n, n) - &p_perp;
    let pv = &p * v;

    let gamma = geometry::christoffel(&system.metric, q)?;
    let gv = gamma.gamma_matrix(v)?;
    let dv_sharp = system.potential.grad_sharp(&system.metric, q)?;

    let mut force = &p_perp * (&gv * v) + &p_perp * &dv_sharp;

    // vertical Jacobian of the slip map by plain central differences
    let mut dvh = Matrix::zeros(n, n);
    for l in 0..n {
        let mut wp = pv.clone();
        let hl = h * pv[l].abs().max(1.0);
        wp[l] = pv[l] + hl;
        let plus = slip.eval(q, &wp)?;
        wp[l] = pv[l] - hl;
        let minus = slip.eval(q, &wp)?;
        dvh.set_column(l, &((plus - minus) / (2.0 * hl)));
    }

    // -(sum_k dP_perp/dq^k v^k) v + D^V h (sum_k dP/dq^k v^k) v,
    // with dP/dq^k = -dP_perp/dq^k
    for k in 0..n {
        let mut qp = q.clone();
        let hk = h * q[k].abs().max(1.0);
        qp[k] = q[k] + hk;
        let plus = p_perp_of(&qp)?;
        qp[k] = q[k] - hk;
        let minus = p_perp_of(&qp)?;
        let d_pperp = (plus - minus) / (2.0 * hk);
        let rate = (&d_pperp * v) * v[k];
        force -= &rate;
        force -= &dvh * rate;
    }

    // D^V h [ -P Gamma(v) v - P dV^sharp ]
    force += &dvh * (-(&p * (&gv * v)) - &p * &dv_sharp);

    // [dh/dq (q, P v)] v
    let mut config_rate = Vector::zeros(n);
    for k in 0..n {
        let mut qp = q.clone();
        let hk = h * q[k].abs().max(1.0);
        qp[k] = q[k] + hk;
        let plus = slip.eval(&qp, &pv)?;
        qp[k] = q[k] - hk;
        let minus = slip.eval(&qp, &pv)?;
        config_rate += ((plus - minus) / (2.0 * hk)) * v[k];
    }
    force += config_rate;

    Ok(force)
}

/// Covariant expression for the same reaction force, built from the
/// connection machinery:
/// `-(nabla_v P_perp)(v) + P_perp dV^sharp
///  + D^V h [ (nabla_v P)(v) - P dV^sharp ] + nabla^H_v h (P v)`.
pub fn friction_force_covariant(
    system: &SystemDef,
    slip: &SlipSection,
    q: &Vector,
    v: &Vector,
) -> Result<Vector> {
    let snap = system.snapshot(q)?;
    let pv = &snap.pair.p * v;
    let map = slip.bundle_map();

    let nab = snap.nabla_p_perp(v)?;
    let dvh = geometry::vertical_jacobian(&map, q, &pv);
    let horiz = geometry::horizontal_cov_deriv(&map, v, q, &pv, &snap.gamma)?;

    let mut force = -(&nab * v) + &snap.pair.p_perp * &snap.dv_sharp;
    force += &dvh * (-(&nab * v) - &snap.pair.p * &snap.dv_sharp);
    force += horiz;
    Ok(force)
}

/// Run every invariant suite on a system. `samples` controls the random
/// sampling density (the command line uses 100).
pub fn run_all(
    system: &SystemDef,
    seed: u64,
    samples: usize,
    fault: Option<Fault>,
) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let n = system.dim;

    // --- projection algebra ---------------------------------------------
    let configs = sample_configs(system, &mut rng, samples);
    let d = projection_algebra_defects(system, &configs, fault)?;
    out.push(CheckResult::new(
        "projection idempotence",
        d.idempotence,
        1e-10,
    ));
    out.push(CheckResult::new(
        "projection complementarity",
        d.complementarity,
        1e-10,
    ));
    out.push(CheckResult::new(
        "projection G-self-adjointness",
        d.self_adjointness,
        1e-10,
    ));
    out.push(CheckResult::new(
        "constraint annihilation",
        d.annihilation,
        1e-10,
    ));
    out.push(CheckResult::new(
        "friction kernel",
        d.friction_kernel,
        1e-10,
    ));
    out.push(CheckResult::new("q-map identity", d.q_map_identity, 1e-10));

    // --- friction dissipativity and scaling ------------------------------
    let mut dissip = 0.0f64;
    for q in configs.iter().take(25) {
        let pp =
            constraints::projections(&system.metric, &system.constraints, &system.friction, q)?;
        let g = system.metric.value(q);
        for _ in 0..4 {
            let v = sample_velocity(n, &mut rng);
            let quad = (&g * &pp.fr_sharp * &v).dot(&v);
            dissip = dissip.max(-quad);
            if (&pp.p_perp * &v).amax() < 1e-13 {
                dissip = dissip.max(quad.abs());
            }
        }
    }
    out.push(CheckResult::new("friction dissipativity", dissip, 1e-10));

    let mut equiv = 0.0f64;
    {
        let doubled = FrictionSpec::new(system.epsilon(), {
            let base = system.friction.clone();
            move |q: &Vector| base.mu(q) * 2.0
        })?;
        for q in configs.iter().take(10) {
            let pp1 =
                constraints::projections(&system.metric, &system.constraints, &system.friction, q)?;
            let pp2 = constraints::projections(&system.metric, &system.constraints, &doubled, q)?;
            equiv = equiv
                .max((&pp2.fr_sharp - &pp1.fr_sharp * 2.0).amax())
                .max((&pp2.q_map - &pp1.q_map * 0.5).amax())
                .max((&pp2.q_map * &pp2.fr_sharp - &pp1.p_perp).amax());
        }
    }
    out.push(CheckResult::new(
        "friction scale equivariance",
        equiv,
        1e-10,
    ));

    // --- frame independence ----------------------------------------------
    let mut frame_dev = 0.0f64;
    if system.constraints.has_user_frame() {
        let auto = crate::constraints::ConstraintSet::new(n, system.constraints.count(), {
            let inner = system.constraints.clone();
            move |q: &Vector| inner.a_matrix(q)
        });
        for q in configs.iter().take(20) {
            let pp_user =
                constraints::projections(&system.metric, &system.constraints, &system.friction, q)?;
            let pp_auto = constraints::projections(&system.metric, &auto, &system.friction, q)?;
            frame_dev = frame_dev
                .max((&pp_user.p_perp - &pp_auto.p_perp).amax())
                .max((&pp_user.q_map - &pp_auto.q_map).amax());
        }
    }
    out.push(CheckResult::new("frame independence", frame_dev, 1e-10));

    // --- connection coefficients ------------------------------------------
    let mut sym = 0.0f64;
    let mut compat = 0.0f64;
    for q in configs.iter().take(20) {
        let gamma = geometry::christoffel(&system.metric, q)?;
        let g = system.metric.value(q);
        let dg = system.metric.partials(q);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    sym = sym.max((gamma.coeff(i, j, k) - gamma.coeff(i, k, j)).abs());
                }
            }
        }
        for (k, dgk) in dg.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    let mut rhs = 0.0;
                    for l in 0..n {
                        rhs += g[(l, j)] * gamma.coeff(l, k, i) + g[(i, l)] * gamma.coeff(l, k, j);
                    }
                    compat = compat.max((dgk[(i, j)] - rhs).abs());
                }
            }
        }
    }
    out.push(CheckResult::new("christoffel symmetry", sym, 1e-10));
    let compat_tol = if system.metric.has_partials() {
        1e-10
    } else {
        1e-6
    };
    out.push(CheckResult::new(
        "christoffel metric compatibility",
        compat,
        compat_tol,
    ));

    // --- oracle equivalence ------------------------------------------------
    if let Some(Oracle::VerticalDisk(p)) = system.oracle {
        let mut proj_dev = 0.0f64;
        let mut slip_dev = 0.0f64;
        let mut range_dev = 0.0f64;
        let mut homog_dev = 0.0f64;
        for _ in 0..samples {
            let th = rng.random_range(0.0..std::f64::consts::TAU);
            let vt = rng.random_range(-2.0..2.0);
            let vp = rng.random_range(-2.0..2.0);
            let q = Vector::from_vec(vec![th, 0.0, 0.0, 0.0]);
            let pp = constraints::projections(
                &system.metric,
                &system.constraints,
                &system.friction,
                &q,
            )?;
            proj_dev = proj_dev
                .max((&pp.p - p.p_matrix(th)).amax())
                .max((&pp.p_perp - p.p_perp_matrix(th)).amax())
                .max((&pp.fr_sharp - p.fr_sharp_matrix(th)).amax());

            let v = p.v_d(th, vt, vp);
            let h1 = slow_manifold::h1(system, &q, &v)?;
            let h2 = slow_manifold::h2(system, &q, &v)?;
            slip_dev = slip_dev
                .max((&h1 - p.h1(th, vt, vp)).amax())
                .max((&h2 - p.h2(th, vt, vp)).amax());
            range_dev = range_dev
                .max((&pp.p * &h1).amax())
                .max((&pp.p * &h2).amax());

            let s = 2.0;
            let vs = &v * s;
            homog_dev = homog_dev
                .max((slow_manifold::h1(system, &q, &vs)? - &h1 * s * s).amax())
                .max((slow_manifold::h2(system, &q, &vs)? - &h2 * s * s * s).amax());
        }
        out.push(CheckResult::new("oracle projection match", proj_dev, 1e-10));
        let analytic = system.metric.has_partials() && system.constraints.has_partials();
        let slip_tol = if analytic { 1e-8 } else { 1e-5 };
        out.push(CheckResult::new("oracle slip match", slip_dev, slip_tol));
        out.push(CheckResult::new("slip range", range_dev, 1e-9));
        out.push(CheckResult::new("slip homogeneity", homog_dev, 1e-7));
    }

    // --- force equivalence ---------------------------------------------------
    let slip2 = SlipSection::new(system, 2)?;
    let mut force_dev = 0.0f64;
    for q in configs.iter().take(samples.min(configs.len())) {
        let vd_raw = sample_velocity(n, &mut rng);
        let snap = system.snapshot(q)?;
        let vd = &snap.pair.p * vd_raw;
        let v = &vd + slip2.eval(q, &vd)?;
        let fa = friction_force_classical(system, &slip2, q, &v)?;
        let fb = friction_force_covariant(system, &slip2, q, &v)?;
        let scale = fa.amax().max(fb.amax()).max(1e-6);
        force_dev = force_dev.max((fa - fb).amax() / scale);
    }
    out.push(CheckResult::new("force equivalence", force_dev, 1e-8));

    // --- generating-equation residual order -----------------------------------
    {
        let states: Vec<(f64, f64, f64)> = (0..6)
            .map(|_| {
                (
                    rng.random_range(0.0..std::f64::consts::TAU),
                    rng.random_range(0.5..1.5),
                    rng.random_range(0.5..1.5),
                )
            })
            .collect();
        let epsilons = [0.04, 0.02, 0.01];
        let mut sup = Vec::new();
        for &eps in &epsilons {
            let sys_eps = system.with_epsilon(eps)?;
            let section = SlipSection::new(&sys_eps, 2)?;
            let map = section.bundle_map();
            let mut worst = 0.0f64;
            for &(th, vt, vp) in &states {
                let q = Vector::from_vec(vec![th, 0.0, 0.0, 0.0]);
                let frame = constraints::distribution_frame(&sys_eps.constraints, &q)?;
                let vd = frame * Vector::from_vec(vec![vt, vp]);
                let r = slow_manifold::generating_residual(&sys_eps, &q, &vd, &map)?;
                worst = worst.max(r.amax());
            }
            sup.push(worst);
        }
        let slope = crate::cli::fit_loglog(&epsilons, &sup).0;
        out.push(CheckResult::new(
            "generating residual order",
            (slope - 3.0).abs(),
            0.3,
        ));
    }

    // --- dynamics invariants ---------------------------------------------------
    run_dynamics_checks(system, &mut out)?;

    Ok(out)
}

fn run_dynamics_checks(system: &SystemDef, out: &mut Vec<CheckResult>) -> Result<()> {
    let q0 = Vector::zeros(system.dim);
    let frame = constraints::distribution_frame(&system.constraints, &q0)?;
    let ones = Vector::from_element(frame.ncols(), 1.0);
    let vd0 = &frame * ones;

    // zeroth model: energy conservation and constraint tangency over T = 10
    {
        let plan = SimPlan {
            model: Model::Zeroth,
            dt: 1e-3,
            t_final: 10.0,
            epsilon: system.epsilon(),
            record_every: 10,
            transient_skip: 0.0,
        };
        let rhs = dynamics::model_rhs(system, Model::Zeroth);
        let traj = dynamics::integrate(&rhs, &State::new(0.0, q0.clone(), vd0.clone()), &plan)?;
        let ke0 = dynamics::kinetic_energy(system, &traj[0].q, &traj[0].v);
        let mut drift = 0.0f64;
        let mut tangency = 0.0f64;
        let mut rate_dev = 0.0f64;
        for s in &traj {
            drift = drift.max((dynamics::kinetic_energy(system, &s.q, &s.v) - ke0).abs());
            tangency = tangency.max((system.constraints.a_matrix(&s.q) * &s.v).amax());
            if system.dim == 4 {
                rate_dev = rate_dev
                    .max((s.v[0] - traj[0].v[0]).abs())
                    .max((s.v[3] - traj[0].v[3]).abs());
            }
        }
        out.push(CheckResult::new("zeroth energy conservation", drift, 1e-8));
        out.push(CheckResult::new(
            "zeroth constraint tangency",
            tangency,
            1e-7,
        ));
        out.push(CheckResult::new("zeroth rate invariance", rate_dev, 1e-10));
    }

    // full model: monotone energy and attractivity from pure slip
    {
        let eps = system.epsilon();
        let plan = SimPlan {
            model: Model::Full,
            dt: eps / 50.0,
            t_final: 20.0 * eps,
            epsilon: eps,
            record_every: 1,
            transient_skip: 0.0,
        };
        let snap = system.snapshot(&q0)?;
        let raw = Vector::from_fn(system.dim, |i, _| 0.3 + 0.2 * i as f64);
        let v0 = &snap.pair.p_perp * raw;
        let rhs = dynamics::model_rhs(system, Model::Full);
        let traj = dynamics::integrate(&rhs, &State::new(0.0, q0.clone(), v0), &plan)?;
        let mut monotone = 0.0f64;
        let mut prev = f64::INFINITY;
        for s in &traj {
            let ke = dynamics::kinetic_energy(system, &s.q, &s.v);
            monotone = monotone.max(ke - prev);
            prev = ke;
        }
        let last = traj.last().unwrap();
        let p_perp_end = constraints::p_perp_at(&system.metric, &system.constraints, &last.q)?;
        let slip_end = (p_perp_end * &last.v).norm();
        out.push(CheckResult::new(
            "full energy monotonicity",
            monotone.max(0.0),
            1e-9,
        ));
        out.push(CheckResult::new("full attractivity", slip_end, 1e-6));
    }

    // full model started on the order-2 manifold: slip tracks eps h1 at O(eps^2)
    {
        let epsilons = [0.02, 0.01, 0.005];
        let mut sup = Vec::new();
        for &eps in &epsilons {
            let sys_eps = system.with_epsilon(eps)?;
            let v0 = &vd0 + slow_manifold::slip(&sys_eps, &q0, &vd0, 2)?;
            let plan = SimPlan {
                model: Model::Full,
                dt: eps / 50.0,
                t_final: 1.0,
                epsilon: eps,
                record_every: 10,
                transient_skip: 10.0 * eps,
            };
            let rhs = dynamics::model_rhs(&sys_eps, Model::Full);
            let traj = dynamics::integrate(&rhs, &State::new(0.0, q0.clone(), v0), &plan)?;
            let mut worst = 0.0f64;
            for s in &traj {
                if s.t < plan.transient_skip {
                    continue;
                }
                let r = slow_manifold::invariance_residual(&sys_eps, &s.q, &s.v, 1)?;
                worst = worst.max(r.amax());
            }
            sup.push(worst);
        }
        let slope = crate::cli::fit_loglog(&epsilons, &sup).0;
        out.push(CheckResult::new(
            "slip magnitude order",
            (slope - 2.0).abs(),
            0.3,
        ));
    }

    // heading invariance across all three models (disk coordinate 0)
    if system.dim == 4 {
        let eps = system.epsilon();
        let mut dev = 0.0f64;
        for model in [Model::Full, Model::Zeroth, Model::First] {
            let dt = match model {
                Model::Full => eps / 50.0,
                _ => 1e-3,
            };
            let plan = SimPlan {
                model,
                dt,
                t_final: 1.0,
                epsilon: eps,
                record_every: 20,
                transient_skip: 0.0,
            };
            let v0 = &vd0 + slow_manifold::slip(system, &q0, &vd0, 2)?;
            let rhs = dynamics::model_rhs(system, model);
            let traj = dynamics::integrate(&rhs, &State::new(0.0, q0.clone(), v0), &plan)?;
            for s in &traj {
                dev = dev.max((s.v[0] - traj[0].v[0]).abs());
            }
        }
        out.push(CheckResult::new("heading invariance", dev, 1e-10));
    }

    Ok(())
}
