//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured quantity. Run with `cargo test --test acceptance`
//! (or `-- --nocapture` to see every line).

use std::path::PathBuf;
use std::process::Command;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nonholo::cli;
use nonholo::constraints;
use nonholo::dynamics::{self, Model, SimPlan, State};
use nonholo::slow_manifold::{self, SlipSection};
use nonholo::systems::{disk_system, DiskParams, SystemDef};
use nonholo::validation;
use nonholo::Vector;

fn params(epsilon: f64) -> DiskParams {
    DiskParams {
        mass: 1.0,
        inertia_plane: 1.0,
        inertia_roll: 0.5,
        radius: 1.0,
        mu: 1.0,
        epsilon,
    }
}

fn disk(epsilon: f64) -> SystemDef {
    disk_system(params(epsilon)).unwrap()
}

fn random_configs(rng: &mut impl Rng, count: usize) -> Vec<Vector> {
    (0..count)
        .map(|_| {
            Vector::from_vec(vec![
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(0.0..std::f64::consts::TAU),
            ])
        })
        .collect()
}

#[test]
fn criterion_01_projection_algebra() {
    let sys = disk(0.01);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let configs = random_configs(&mut rng, 200);
    let d = validation::projection_algebra_defects(&sys, &configs, None).unwrap();
    let worst = d
        .idempotence
        .max(d.complementarity)
        .max(d.self_adjointness)
        .max(d.annihilation)
        .max(d.friction_kernel);
    assert!(worst <= 1e-10, "projection algebra defect {worst:.3e}");
    println!("criterion 01 PASS projection algebra defect {worst:.3e} <= 1e-10 (200 configs)");
}

#[test]
fn criterion_02_partial_inverse_identity() {
    let sys = disk(0.01);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let configs = random_configs(&mut rng, 200);
    let d = validation::projection_algebra_defects(&sys, &configs, None).unwrap();
    assert!(
        d.q_map_identity <= 1e-10,
        "Q FR - P_perp = {:.3e}",
        d.q_map_identity
    );
    println!(
        "criterion 02 PASS Q*FR_sharp - P_perp defect {:.3e} <= 1e-10 (200 configs)",
        d.q_map_identity
    );
}

#[test]
fn criterion_03_oracle_equivalence() {
    let p = params(0.01);
    let analytic = disk_system(p).unwrap();
    let fd = analytic.without_analytic_partials();
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let mut proj_dev = 0.0f64;
    let mut slip_dev_analytic = 0.0f64;
    let mut slip_dev_fd = 0.0f64;
    for _ in 0..100 {
        let th = rng.random_range(0.0..std::f64::consts::TAU);
        let vt = rng.random_range(-2.0..2.0);
        let vp = rng.random_range(-2.0..2.0);
        let q = Vector::from_vec(vec![th, 0.0, 0.0, 0.0]);
        let pp = constraints::projections(
            &analytic.metric,
            &analytic.constraints,
            &analytic.friction,
            &q,
        )
        .unwrap();
        proj_dev = proj_dev
            .max((&pp.p - p.p_matrix(th)).amax())
            .max((&pp.p_perp - p.p_perp_matrix(th)).amax())
            .max((&pp.fr_sharp - p.fr_sharp_matrix(th)).amax());

        let v = p.v_d(th, vt, vp);
        slip_dev_analytic = slip_dev_analytic
            .max((slow_manifold::h1(&analytic, &q, &v).unwrap() - p.h1(th, vt, vp)).amax())
            .max((slow_manifold::h2(&analytic, &q, &v).unwrap() - p.h2(th, vt, vp)).amax());
        slip_dev_fd = slip_dev_fd
            .max((slow_manifold::h1(&fd, &q, &v).unwrap() - p.h1(th, vt, vp)).amax())
            .max((slow_manifold::h2(&fd, &q, &v).unwrap() - p.h2(th, vt, vp)).amax());
    }
    assert!(
        proj_dev <= 1e-10,
        "projection oracle deviation {proj_dev:.3e}"
    );
    assert!(
        slip_dev_analytic <= 1e-8,
        "analytic slip deviation {slip_dev_analytic:.3e}"
    );
    assert!(
        slip_dev_fd <= 1e-5,
        "finite-difference slip deviation {slip_dev_fd:.3e}"
    );
    println!(
        "criterion 03 PASS oracle equivalence: projections {proj_dev:.3e} <= 1e-10, \
         slip (analytic) {slip_dev_analytic:.3e} <= 1e-8, slip (fd) {slip_dev_fd:.3e} <= 1e-5"
    );
}

#[test]
fn criterion_04_zeroth_order_is_ideal_rolling() {
    let sys = disk(0.01);
    let p = params(0.01);
    let plan = SimPlan {
        model: Model::Zeroth,
        dt: 1e-3,
        t_final: std::f64::consts::PI,
        epsilon: 0.01,
        record_every: 10,
        transient_skip: 0.0,
    };
    let s0 = State::new(0.0, Vector::zeros(4), p.v_d(0.0, 1.0, 1.0));
    let rhs = dynamics::model_rhs(&sys, Model::Zeroth);
    let traj = dynamics::integrate(&rhs, &s0, &plan).unwrap();

    let ke0 = dynamics::kinetic_energy(&sys, &traj[0].q, &traj[0].v);
    let mut circle_dev = 0.0f64;
    let mut ke_dev = 0.0f64;
    let mut tangency = 0.0f64;
    for s in &traj {
        circle_dev = circle_dev
            .max((s.q[1] - s.t.sin()).abs())
            .max((s.q[2] - (1.0 - s.t.cos())).abs());
        ke_dev = ke_dev.max((dynamics::kinetic_energy(&sys, &s.q, &s.v) - ke0).abs());
        tangency = tangency.max((sys.constraints.a_matrix(&s.q) * &s.v).amax());
    }
    assert!(circle_dev <= 1e-6, "circle deviation {circle_dev:.3e}");
    assert!(ke_dev <= 1e-8, "energy drift {ke_dev:.3e}");
    assert!(tangency <= 1e-7, "constraint drift {tangency:.3e}");
    println!(
        "criterion 04 PASS ideal rolling: circle {circle_dev:.3e} <= 1e-6, \
         energy {ke_dev:.3e} <= 1e-8, constraint {tangency:.3e} <= 1e-7"
    );
}

#[test]
fn criterion_05_force_equivalence() {
    let sys = disk(0.01);
    let slip2 = SlipSection::new(&sys, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let q = Vector::from_vec(vec![
            rng.random_range(0.0..std::f64::consts::TAU),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(0.0..std::f64::consts::TAU),
        ]);
        let raw = Vector::from_fn(4, |_, _| rng.random_range(-2.0..2.0));
        let snap = sys.snapshot(&q).unwrap();
        let vd = &snap.pair.p * raw;
        let v = &vd + slip2.eval(&q, &vd).unwrap();
        let fa = validation::friction_force_classical(&sys, &slip2, &q, &v).unwrap();
        let fb = validation::friction_force_covariant(&sys, &slip2, &q, &v).unwrap();
        let scale = fa.amax().max(fb.amax()).max(1e-6);
        worst = worst.max((fa - fb).amax() / scale);
    }
    assert!(worst <= 1e-8, "force route disagreement {worst:.3e}");
    println!("criterion 05 PASS force equivalence {worst:.3e} <= 1e-8 (100 states)");
}

#[test]
fn criterion_06_generating_residual_order() {
    let states = [
        (0.0, 1.0, 1.0),
        (0.9, 1.2, 0.8),
        (1.7, -0.7, 1.1),
        (2.9, 0.6, -1.3),
        (4.2, 1.1, 1.0),
        (5.5, -1.0, -0.9),
    ];
    let epsilons = [0.04, 0.02, 0.01];
    let mut sup = Vec::new();
    for &eps in &epsilons {
        let sys = disk(eps);
        let p = params(eps);
        let section = SlipSection::new(&sys, 2).unwrap();
        let map = section.bundle_map();
        let mut worst = 0.0f64;
        for &(th, vt, vp) in &states {
            let q = Vector::from_vec(vec![th, 0.0, 0.0, 0.0]);
            let vd = p.v_d(th, vt, vp);
            let r = slow_manifold::generating_residual(&sys, &q, &vd, &map).unwrap();
            worst = worst.max(r.amax());
        }
        sup.push(worst);
    }
    let (slope, _, _) = cli::fit_loglog(&epsilons, &sup);
    assert!(
        (slope - 3.0).abs() <= 0.3,
        "residual slope {slope:.3} (residuals {sup:?})"
    );
    println!("criterion 06 PASS generating residual slope {slope:.3} within 3.0 +/- 0.3");
}

fn convergence_config(dir: &std::path::Path) -> PathBuf {
    let text = r#"
[system]
kind = "vertical-disk"

[system.params]
m = 1.0
I = 1.0
J = 0.5
R = 1.0
mu = 1.0

[sim]
epsilon = 0.02
dt = 0.0004
t_final = 1.0
model = "full"
record_every = 5

[sweep]
epsilons = [0.02, 0.01, 0.005, 0.0025]
orders = [0, 1]

[initial]
theta = 0.0
v_theta = 1.0
v_phi = 1.0
slip_order = 2
"#;
    let path = dir.join("convergence.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn parse_convergence_csv(text: &str) -> Vec<(f64, usize, f64)> {
    text.lines()
        .skip(1)
        .map(|line| {
            let cols: Vec<&str> = line.split(',').collect();
            (
                cols[0].parse().unwrap(),
                cols[1].parse().unwrap(),
                cols[2].parse().unwrap(),
            )
        })
        .collect()
}

#[test]
fn criterion_07_trajectory_convergence_orders() {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let config = convergence_config(&dir);
    let out = dir.join("convergence.csv");
    let report = cli::cmd_convergence(&config, &out, 2).unwrap();
    assert!(report.passed);

    let rows = parse_convergence_csv(&std::fs::read_to_string(&out).unwrap());
    let mut eps_grid = Vec::new();
    let mut e0 = Vec::new();
    let mut e1 = Vec::new();
    for (eps, order, err) in rows {
        if order == 0 {
            eps_grid.push(eps);
            e0.push(err);
        } else {
            e1.push(err);
        }
    }
    let (s0, _, _) = cli::fit_loglog(&eps_grid, &e0);
    let (s1, _, _) = cli::fit_loglog(&eps_grid, &e1);
    assert!(
        (s0 - 1.0).abs() <= 0.2,
        "zeroth slope {s0:.3} (errors {e0:?})"
    );
    assert!(
        (s1 - 2.0).abs() <= 0.3,
        "first slope {s1:.3} (errors {e1:?})"
    );
    println!(
        "criterion 07 PASS trajectory convergence: zeroth slope {s0:.3} within 1.0 +/- 0.2, \
         first slope {s1:.3} within 2.0 +/- 0.3"
    );
}

#[test]
fn criterion_08_dissipation_and_attractivity() {
    let eps = 0.01;
    let sys = disk(eps);
    let p = params(eps);

    // monotone energy on a manifold-started run
    let vd0 = p.v_d(0.0, 1.0, 1.0);
    let q0 = Vector::zeros(4);
    let v0 = &vd0 + slow_manifold::slip(&sys, &q0, &vd0, 2).unwrap();
    let plan = SimPlan {
        model: Model::Full,
        dt: eps / 50.0,
        t_final: 1.0,
        epsilon: eps,
        record_every: 5,
        transient_skip: 0.0,
    };
    let rhs = dynamics::model_rhs(&sys, Model::Full);
    let traj = dynamics::integrate(&rhs, &State::new(0.0, q0.clone(), v0), &plan).unwrap();
    let mut growth = 0.0f64;
    let mut prev = f64::INFINITY;
    for s in &traj {
        let ke = dynamics::kinetic_energy(&sys, &s.q, &s.v);
        growth = growth.max(ke - prev);
        prev = ke;
    }
    assert!(growth <= 1e-9, "energy grew by {growth:.3e}");

    // attractivity from pure slip
    let snap = sys.snapshot(&q0).unwrap();
    let slip0 = &snap.pair.p_perp * Vector::from_vec(vec![0.0, 0.8, -0.5, 0.4]);
    let plan = SimPlan {
        model: Model::Full,
        dt: eps / 50.0,
        t_final: 20.0 * eps,
        epsilon: eps,
        record_every: 1,
        transient_skip: 0.0,
    };
    let traj = dynamics::integrate(&rhs, &State::new(0.0, q0.clone(), slip0), &plan).unwrap();
    let mut growth2 = 0.0f64;
    let mut prev = f64::INFINITY;
    for s in &traj {
        let ke = dynamics::kinetic_energy(&sys, &s.q, &s.v);
        growth2 = growth2.max(ke - prev);
        prev = ke;
    }
    let last = traj.last().unwrap();
    let p_perp = constraints::p_perp_at(&sys.metric, &sys.constraints, &last.q).unwrap();
    let residual_slip = (p_perp * &last.v).norm();
    assert!(growth2 <= 1e-9, "energy grew by {growth2:.3e}");
    assert!(
        residual_slip < 1e-6,
        "slip {residual_slip:.3e} after 20 eps"
    );
    println!(
        "criterion 08 PASS dissipation (max energy growth {:.1e}) and attractivity \
         (slip {residual_slip:.3e} < 1e-6 at t = 20 eps)",
        growth.max(growth2)
    );
}

#[test]
fn criterion_09_heading_rate_conserved() {
    let eps = 0.01;
    let sys = disk(eps);
    let p = params(eps);
    let q0 = Vector::zeros(4);
    let vd0 = p.v_d(0.0, 1.0, 1.0);
    let v0 = &vd0 + slow_manifold::slip(&sys, &q0, &vd0, 2).unwrap();
    let mut worst = 0.0f64;
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
            record_every: 10,
            transient_skip: 0.0,
        };
        let rhs = dynamics::model_rhs(&sys, model);
        let traj =
            dynamics::integrate(&rhs, &State::new(0.0, q0.clone(), v0.clone()), &plan).unwrap();
        for s in &traj {
            worst = worst.max((s.v[0] - v0[0]).abs());
        }
    }
    assert!(worst <= 1e-10, "heading rate drifted by {worst:.3e}");
    println!("criterion 09 PASS heading rate constant to {worst:.3e} <= 1e-10 in all models");
}

#[test]
fn criterion_10_deterministic_sweeps() {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let config = convergence_config(&dir);
    let bin = env!("CARGO_BIN_EXE_nonholo");

    let mut outputs = Vec::new();
    for jobs in ["1", "4"] {
        let out = dir.join(format!("det_{jobs}.csv"));
        let status = Command::new(bin)
            .args([
                "convergence",
                "--config",
                config.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--jobs",
                jobs,
            ])
            .output()
            .expect("binary runs");
        assert!(
            status.status.success(),
            "convergence failed: {}",
            String::from_utf8_lossy(&status.stderr)
        );
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(
        outputs[0], outputs[1],
        "CSV bytes differ between job counts"
    );
    println!(
        "criterion 10 PASS identical convergence CSV ({} bytes) with --jobs 1 and --jobs 4",
        outputs[0].len()
    );
}
