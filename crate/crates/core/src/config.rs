//! TOML run configuration.
//!
//! ```toml
//! [system]
//! kind = "vertical-disk"
//!
//! [system.params]
//! m = 1.0
//! I = 1.0
//! J = 0.5
//! R = 1.0
//! mu = 1.0
//!
//! [sim]
//! epsilon = 0.01
//! dt = 0.0002
//! t_final = 1.0
//! model = "full"          # full | zeroth | first
//! record_every = 10       # optional, default 1
//! transient_skip = 0.0    # optional, default 0
//!
//! [sweep]                 # optional; used by `convergence`
//! epsilons = [0.02, 0.01, 0.005, 0.0025]
//! orders = [0, 1]         # optional, default [0, 1]
//!
//! [initial]
//! theta = 0.0
//! x = 0.0                 # optional, default 0
//! y = 0.0                 # optional, default 0
//! phi = 0.0               # optional, default 0
//! v_theta = 1.0
//! v_phi = 1.0
//! slip_order = 2          # optional, default 0; initial velocity is
//!                         # v_D + (order-truncated slip)
//! ```
//!
//! All schema violations report the dotted path of the offending key.

use std::path::Path;

use crate::dynamics::{Model, SimPlan, State};
use crate::error::{Error, Result};
use crate::slow_manifold;
use crate::systems::{self, SystemDef};
use crate::Vector;

/// Helpers for walking a parsed TOML tree with dotted-path error reporting.
pub mod tree {
    use crate::error::{Error, Result};

    fn lookup<'a>(root: &'a toml::Table, path: &str) -> Result<&'a toml::Value> {
        let mut node: Option<&toml::Value> = None;
        let mut walked = String::new();
        for part in path.split('.') {
            let table = match node {
                None => root,
                Some(v) => v
                    .as_table()
                    .ok_or_else(|| Error::schema(walked.clone(), "expected a table"))?,
            };
            if !walked.is_empty() {
                walked.push('.');
            }
            walked.push_str(part);
            node = Some(
                table
                    .get(part)
                    .ok_or_else(|| Error::schema(walked.clone(), "missing required key"))?,
            );
        }
        Ok(node.expect("non-empty path"))
    }

    pub fn has(root: &toml::Table, path: &str) -> bool {
        lookup(root, path).is_ok()
    }

    pub fn get_f64(root: &toml::Table, path: &str) -> Result<f64> {
        match lookup(root, path)? {
            toml::Value::Float(x) => Ok(*x),
            toml::Value::Integer(x) => Ok(*x as f64),
            _ => Err(Error::schema(path, "expected a number")),
        }
    }

    pub fn get_f64_or(root: &toml::Table, path: &str, default: f64) -> Result<f64> {
        if has(root, path) {
            get_f64(root, path)
        } else {
            Ok(default)
        }
    }

    pub fn get_usize(root: &toml::Table, path: &str) -> Result<usize> {
        match lookup(root, path)? {
            toml::Value::Integer(x) if *x >= 0 => Ok(*x as usize),
            _ => Err(Error::schema(path, "expected a non-negative integer")),
        }
    }

    pub fn get_usize_or(root: &toml::Table, path: &str, default: usize) -> Result<usize> {
        if has(root, path) {
            get_usize(root, path)
        } else {
            Ok(default)
        }
    }

    pub fn get_str(root: &toml::Table, path: &str) -> Result<String> {
        match lookup(root, path)? {
            toml::Value::String(s) => Ok(s.clone()),
            _ => Err(Error::schema(path, "expected a string")),
        }
    }

    pub fn get_f64_list(root: &toml::Table, path: &str) -> Result<Vec<f64>> {
        match lookup(root, path)? {
            toml::Value::Array(items) => items
                .iter()
                .map(|v| match v {
                    toml::Value::Float(x) => Ok(*x),
                    toml::Value::Integer(x) => Ok(*x as f64),
                    _ => Err(Error::schema(path, "expected a list of numbers")),
                })
                .collect(),
            _ => Err(Error::schema(path, "expected a list of numbers")),
        }
    }

    pub fn get_usize_list_or(
        root: &toml::Table,
        path: &str,
        default: &[usize],
    ) -> Result<Vec<usize>> {
        if !has(root, path) {
            return Ok(default.to_vec());
        }
        match lookup(root, path)? {
            toml::Value::Array(items) => items
                .iter()
                .map(|v| match v {
                    toml::Value::Integer(x) if *x >= 0 => Ok(*x as usize),
                    _ => Err(Error::schema(
                        path,
                        "expected a list of non-negative integers",
                    )),
                })
                .collect(),
            _ => Err(Error::schema(
                path,
                "expected a list of non-negative integers",
            )),
        }
    }
}

/// Initial-state block of the config.
#[derive(Clone, Copy, Debug)]
pub struct InitialSpec {
    pub theta: f64,
    pub x: f64,
    pub y: f64,
    pub phi: f64,
    pub v_theta: f64,
    pub v_phi: f64,
    pub slip_order: usize,
}

/// Epsilon-sweep block for convergence studies.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub epsilons: Vec<f64>,
    pub orders: Vec<usize>,
}

/// Fully parsed run configuration.
pub struct AppConfig {
    pub raw: toml::Table,
    pub system: SystemDef,
    pub plan: SimPlan,
    pub sweep: Option<SweepSpec>,
    pub initial: InitialSpec,
}

impl AppConfig {
    pub fn parse_str(text: &str) -> Result<AppConfig> {
        let raw: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::schema("<root>", e.to_string()))?;
        let system = systems::load_system(&raw)?;

        let model: Model = tree::get_str(&raw, "sim.model")?.parse()?;
        let plan = SimPlan {
            model,
            dt: tree::get_f64(&raw, "sim.dt")?,
            t_final: tree::get_f64(&raw, "sim.t_final")?,
            epsilon: tree::get_f64(&raw, "sim.epsilon")?,
            record_every: tree::get_usize_or(&raw, "sim.record_every", 1)?,
            transient_skip: tree::get_f64_or(&raw, "sim.transient_skip", 0.0)?,
        };

        let sweep = if tree::has(&raw, "sweep") {
            Some(SweepSpec {
                epsilons: tree::get_f64_list(&raw, "sweep.epsilons")?,
                orders: tree::get_usize_list_or(&raw, "sweep.orders", &[0, 1])?,
            })
        } else {
            None
        };

        let initial = InitialSpec {
            theta: tree::get_f64(&raw, "initial.theta")?,
            x: tree::get_f64_or(&raw, "initial.x", 0.0)?,
            y: tree::get_f64_or(&raw, "initial.y", 0.0)?,
            phi: tree::get_f64_or(&raw, "initial.phi", 0.0)?,
            v_theta: tree::get_f64(&raw, "initial.v_theta")?,
            v_phi: tree::get_f64(&raw, "initial.v_phi")?,
            slip_order: tree::get_usize_or(&raw, "initial.slip_order", 0)?,
        };
        if initial.slip_order > 2 {
            return Err(Error::schema(
                "initial.slip_order",
                "slip order must be 0, 1 or 2",
            ));
        }

        Ok(AppConfig {
            raw,
            system,
            plan,
            sweep,
            initial,
        })
    }

    pub fn load(path: &Path) -> Result<AppConfig> {
        let text = std::fs::read_to_string(path)?;
        AppConfig::parse_str(&text)
    }

    /// Initial state: configuration from the block, velocity assembled in
    /// the distribution frame and lifted onto the slip manifold model of
    /// the requested order.
    pub fn initial_state(&self, system: &SystemDef) -> Result<State> {
        let init = &self.initial;
        let q = Vector::from_vec(vec![init.theta, init.x, init.y, init.phi]);
        let frame = crate::constraints::distribution_frame(&system.constraints, &q)?;
        let coeffs = Vector::from_vec(vec![init.v_theta, init.v_phi]);
        if frame.ncols() != coeffs.len() {
            return Err(Error::DimensionMismatch {
                context: "initial velocity frame",
                expected: frame.ncols(),
                got: coeffs.len(),
            });
        }
        let vd = frame * coeffs;
        let v = &vd + slow_manifold::slip(system, &q, &vd, init.slip_order)?;
        Ok(State::new(0.0, q, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
        [system]
        kind = "vertical-disk"
        [system.params]
        m = 1.0
        I = 1.0
        J = 0.5
        R = 1.0
        mu = 1.0
        [sim]
        epsilon = 0.1
        dt = 0.001
        t_final = 1.0
        model = "zeroth"
        [initial]
        theta = 0.0
        v_theta = 1.0
        v_phi = 1.0
        slip_order = 1
    "#;

    #[test]
    fn parses_and_builds_initial_state() {
        let cfg = AppConfig::parse_str(GOOD).unwrap();
        assert_eq!(cfg.plan.model, Model::Zeroth);
        assert_eq!(cfg.plan.record_every, 1);
        let state = cfg.initial_state(&cfg.system).unwrap();
        // v_D + eps h1 at theta = 0 with unit rates
        let expect = Vector::from_vec(vec![1.0, 1.0, -0.1, 1.0]);
        assert!((state.v - expect).amax() < 1e-10);
    }

    #[test]
    fn missing_keys_report_paths() {
        let bad = GOOD.replace("model = \"zeroth\"", "");
        let err = AppConfig::parse_str(&bad).err().expect("schema error");
        match err {
            Error::Schema { path, .. } => assert_eq!(path, "sim.model"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn wrong_types_report_paths() {
        let bad = GOOD.replace("theta = 0.0", "theta = \"zero\"");
        let err = AppConfig::parse_str(&bad).err().expect("schema error");
        match err {
            Error::Schema { path, .. } => assert_eq!(path, "initial.theta"),
            other => panic!("unexpected error {other}"),
        }
    }
}
