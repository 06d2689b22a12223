//! Batch command implementations behind the `nonholo` binary.
//!
//! Every number a command prints is produced by the library operations;
//! the CLI adds only norms, slope fits and CSV plumbing. CSV output uses
//! `.` decimals and 17 significant digits, and files are written via a
//! temp-file rename so concurrent sweep workers never expose partial rows.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use crate::config::AppConfig;
use crate::dynamics::{self, Model, SimPlan, State};
use crate::error::{Error, Result};
use crate::slow_manifold;
use crate::systems::SystemDef;
use crate::validation;
use crate::Vector;

/// Outcome of one CLI command.
pub struct RunReport {
    pub command: String,
    pub config_digest: String,
    pub outputs: Vec<PathBuf>,
    pub lines: Vec<String>,
    pub passed: bool,
}

impl RunReport {
    fn new(command: &str, digest: String) -> Self {
        RunReport {
            command: command.to_string(),
            config_digest: digest,
            outputs: Vec::new(),
            lines: Vec::new(),
            passed: true,
        }
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "command: {}", self.command)?;
        writeln!(f, "config-digest: {}", self.config_digest)?;
        for line in &self.lines {
            writeln!(f, "{line}")?;
        }
        for path in &self.outputs {
            writeln!(f, "output: {}", path.display())?;
        }
        writeln!(f, "status: {}", if self.passed { "ok" } else { "failed" })
    }
}

/// 17-significant-digit float formatting, locale-free.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Least-squares line through `(ln x, ln y)`: returns (slope, intercept,
/// rms residual).
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.max(1e-300).ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.max(1e-300).ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in lx.iter().zip(&ly) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss = 0.0;
    for (x, y) in lx.iter().zip(&ly) {
        let r = y - (intercept + slope * x);
        ss += r * r;
    }
    (slope, intercept, (ss / n).sqrt())
}

/// Sup-norm configuration error between two trajectories sampled at the
/// same times, ignoring samples before `skip`.
pub fn sup_config_error(a: &[State], b: &[State], skip: f64) -> f64 {
    let mut err = 0.0f64;
    for (sa, sb) in a.iter().zip(b.iter()) {
        debug_assert!((sa.t - sb.t).abs() < 1e-9, "mismatched sample times");
        if sa.t < skip {
            continue;
        }
        err = err.max((&sa.q - &sb.q).amax());
    }
    err
}

fn digest_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let hash = Sha256::digest(&bytes);
    Ok(hash.iter().map(|b| format!("{b:02x}")).collect())
}

/// Write a file atomically (temp file + rename in the target directory).
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Run independent tasks on up to `jobs` workers, preserving input order in
/// the results. Results are deterministic regardless of worker count.
fn run_jobs<T, R, F>(jobs: usize, tasks: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync,
{
    let workers = jobs.max(1).min(tasks.len().max(1));
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<R>>>> =
        Mutex::new((0..tasks.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                if idx >= tasks.len() {
                    break;
                }
                let out = f(&tasks[idx]);
                results.lock().expect("worker panicked").as_mut_slice()[idx] = Some(out);
            });
        }
    });
    results
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|r| r.expect("task not executed"))
        .collect()
}

fn simulate_csv(system: &SystemDef, traj: &[State]) -> Result<String> {
    let mut out = String::from("t,theta,x,y,phi,v_theta,v_x,v_y,v_phi,ke,slip_norm\n");
    for s in traj {
        let ke = dynamics::kinetic_energy(system, &s.q, &s.v);
        let slip = dynamics::slip_norm(system, &s.q, &s.v)?;
        let mut fields = Vec::with_capacity(11);
        fields.push(fmt_float(s.t));
        fields.extend(s.q.iter().map(|x| fmt_float(*x)));
        fields.extend(s.v.iter().map(|x| fmt_float(*x)));
        fields.push(fmt_float(ke));
        fields.push(fmt_float(slip));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// `simulate`: integrate the configured model and write the trajectory CSV.
pub fn cmd_simulate(config_path: &Path, out_path: &Path) -> Result<RunReport> {
    let cfg = AppConfig::load(config_path)?;
    let mut report = RunReport::new("simulate", digest_file(config_path)?);
    let system = &cfg.system;
    let state0 = cfg.initial_state(system)?;
    let rhs = dynamics::model_rhs(system, cfg.plan.model);
    let traj = dynamics::integrate(&rhs, &state0, &cfg.plan)?;
    write_atomic(out_path, &simulate_csv(system, &traj)?)?;
    let last = traj.last().expect("non-empty trajectory");
    report.lines.push(format!(
        "model: {} rows: {} t_final: {}",
        cfg.plan.model.as_str(),
        traj.len(),
        fmt_float(last.t)
    ));
    report.lines.push(format!(
        "final-configuration: {}",
        last.q
            .iter()
            .map(|x| fmt_float(*x))
            .collect::<Vec<_>>()
            .join(",")
    ));
    report.outputs.push(out_path.to_path_buf());
    Ok(report)
}

/// State overrides for `slip` (flags win over the config initial block).
#[derive(Clone, Copy, Debug, Default)]
pub struct SlipOverrides {
    pub theta: Option<f64>,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub phi: Option<f64>,
    pub v_theta: Option<f64>,
    pub v_phi: Option<f64>,
}

/// `slip`: evaluate the slip approximations at one state and print a CSV row.
pub fn cmd_slip(
    config_path: &Path,
    out_path: Option<&Path>,
    over: SlipOverrides,
) -> Result<RunReport> {
    let cfg = AppConfig::load(config_path)?;
    let mut report = RunReport::new("slip", digest_file(config_path)?);
    let system = &cfg.system;
    let init = &cfg.initial;
    let q = Vector::from_vec(vec![
        over.theta.unwrap_or(init.theta),
        over.x.unwrap_or(init.x),
        over.y.unwrap_or(init.y),
        over.phi.unwrap_or(init.phi),
    ]);
    let frame = crate::constraints::distribution_frame(&system.constraints, &q)?;
    let vd = frame
        * Vector::from_vec(vec![
            over.v_theta.unwrap_or(init.v_theta),
            over.v_phi.unwrap_or(init.v_phi),
        ]);

    let h1 = slow_manifold::h1(system, &q, &vd)?;
    let h2 = slow_manifold::h2(system, &q, &vd)?;
    let slip = slow_manifold::slip(system, &q, &vd, 2)?;

    let mut csv = String::new();
    let coords = ["theta", "x", "y", "phi"];
    let header: Vec<String> = ["h1", "h2", "slip"]
        .iter()
        .flat_map(|p| coords.iter().map(move |c| format!("{p}_{c}")))
        .collect();
    csv.push_str(&header.join(","));
    csv.push('\n');
    let row: Vec<String> = h1
        .iter()
        .chain(h2.iter())
        .chain(slip.iter())
        .map(|x| fmt_float(*x))
        .collect();
    csv.push_str(&row.join(","));
    csv.push('\n');

    match out_path {
        Some(p) => {
            write_atomic(p, &csv)?;
            report.outputs.push(p.to_path_buf());
        }
        None => print!("{csv}"),
    }
    report
        .lines
        .push(format!("epsilon: {}", fmt_float(system.epsilon())));
    Ok(report)
}

/// `convergence`: sweep epsilon, integrate full/zeroth/first, report
/// sup-norm configuration errors and fitted orders.
///
/// Per-epsilon protocol: `dt = eps / 50`, `transient_skip = 10 eps`,
/// horizon and recording cadence from `[sim]`. All models start from the
/// configured initial state (velocity lifted per `initial.slip_order`).
pub fn cmd_convergence(config_path: &Path, out_path: &Path, jobs: usize) -> Result<RunReport> {
    let cfg = AppConfig::load(config_path)?;
    let mut report = RunReport::new("convergence", digest_file(config_path)?);
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::schema("sweep", "convergence requires a [sweep] block"))?;
    if sweep.epsilons.len() < 3 {
        return Err(Error::schema(
            "sweep.epsilons",
            "need at least 3 epsilon values for a slope fit",
        ));
    }
    for &order in &sweep.orders {
        if order > 1 {
            return Err(Error::schema(
                "sweep.orders",
                "trajectory comparison orders are 0 (zeroth) or 1 (first)",
            ));
        }
    }

    // prebuild systems, plans and initial states per epsilon
    let mut setups = Vec::new();
    for &eps in &sweep.epsilons {
        let system = cfg.system.with_epsilon(eps)?;
        let state0 = cfg.initial_state(&system)?;
        let mut models = vec![Model::Full];
        for &order in &sweep.orders {
            models.push(if order == 0 {
                Model::Zeroth
            } else {
                Model::First
            });
        }
        setups.push((eps, system, state0, models));
    }

    let mut tasks: Vec<(usize, Model)> = Vec::new();
    for (i, setup) in setups.iter().enumerate() {
        for &model in &setup.3 {
            tasks.push((i, model));
        }
    }

    let trajectories = run_jobs(jobs, &tasks, |&(i, model)| {
        let (eps, ref system, ref state0, _) = setups[i];
        let plan = SimPlan {
            model,
            dt: eps / 50.0,
            t_final: cfg.plan.t_final,
            epsilon: eps,
            record_every: cfg.plan.record_every,
            transient_skip: 10.0 * eps,
        };
        let rhs = dynamics::model_rhs(system, model);
        dynamics::integrate(&rhs, state0, &plan)
    })?;

    // index trajectories by (epsilon, model)
    let lookup = |i: usize, model: Model| -> &Vec<State> {
        let pos = tasks
            .iter()
            .position(|&(j, m)| j == i && m == model)
            .expect("task exists");
        &trajectories[pos]
    };

    let mut csv = String::from("epsilon,order,error\n");
    let mut errors_by_order: Vec<(usize, Vec<f64>)> =
        sweep.orders.iter().map(|&o| (o, Vec::new())).collect();
    for (i, &(eps, ..)) in setups.iter().enumerate() {
        let full = lookup(i, Model::Full);
        for &order in &sweep.orders {
            let model = if order == 0 {
                Model::Zeroth
            } else {
                Model::First
            };
            let reduced = lookup(i, model);
            let err = sup_config_error(full, reduced, 10.0 * eps);
            csv.push_str(&format!(
                "{},{},{}\n",
                fmt_float(eps),
                order,
                fmt_float(err)
            ));
            errors_by_order
                .iter_mut()
                .find(|(o, _)| *o == order)
                .expect("order present")
                .1
                .push(err);
        }
    }
    write_atomic(out_path, &csv)?;
    report.outputs.push(out_path.to_path_buf());

    let grid = sweep
        .epsilons
        .iter()
        .map(|e| fmt_float(*e))
        .collect::<Vec<_>>()
        .join(",");
    report.lines.push(format!("epsilon-grid: {grid}"));
    for (order, errs) in &errors_by_order {
        let (slope, _, resid) = fit_loglog(&sweep.epsilons, errs);
        report.lines.push(format!(
            "order {order}: slope {slope:.4} (rms residual {resid:.3e})"
        ));
    }
    Ok(report)
}

/// `validate`: run every invariant suite and report measured defects.
pub fn cmd_validate(config_path: &Path, seed: u64) -> Result<RunReport> {
    let cfg = AppConfig::load(config_path)?;
    let mut report = RunReport::new("validate", digest_file(config_path)?);
    let results = validation::run_all(&cfg.system, seed, 100, None)?;
    let mut first_fail: Option<&str> = None;
    for r in &results {
        report.lines.push(format!(
            "{} {:<32} defect {:.3e} (tol {:.1e})",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.defect,
            r.tol
        ));
        if !r.pass && first_fail.is_none() {
            first_fail = Some(r.name);
        }
    }
    if let Some(name) = first_fail {
        report
            .lines
            .push(format!("first failing invariant: {name}"));
        report.passed = false;
    }
    Ok(report)
}
