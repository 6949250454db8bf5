//! Experiment description and its key/value text format.
//!
//! A scenario file is a sequence of `[section]` headers followed by
//! `key = value` lines; `#` starts a comment. Every key is optional and
//! falls back to [`ScenarioConfig::tracking_default`]. Values:
//!
//! * scalars: a decimal number, optionally a product/quotient of numbers and
//!   `sqrt(..)` factors, e.g. `2500*sqrt(2)/36`
//! * vectors: scalars separated by commas or whitespace
//! * matrices: rows separated by `;`, or `diag(a, b, ...)`
//!
//! Sections and keys:
//!
//! ```text
//! [scenario]  scan_time, steps, runs, master_seed, noise, truth_process_noise
//! [system]    transition (matrix or `constant_velocity`), process_noise
//! [sensor]    measurement, noise           -- template for every node
//! [sensor N]  measurement, noise           -- override for node N
//! [truth]     initial_state, turns (`step:degrees, ...`)
//! [estimate]  mean, covariance | info
//! [network]   nodes, radius, region (`W x H`), seed
//! [dwlse]     rho, admm_iters, ac_iters, epsilon (`c / dmax` or a number), dual_indexing
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use crate::consensus::DualIndexing;
use crate::dwlse::DwlseConfig;
use crate::error::{Error, Result};
use crate::linalg::{diag, Matrix, Vector};
use crate::models::{validate_models, SensorModel, StateEstimate, SystemModel};
use crate::network::{NetworkTopology, Region};
use crate::sim::noise::NoiseKind;

/// Instantaneous heading change of the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Turn {
    pub step: usize,
    /// Counter-clockwise, degrees.
    pub degrees: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig {
    pub nodes: usize,
    pub radius: f64,
    pub region: Region,
    pub seed: u64,
}

/// Average-consensus rate, absolute or relative to the maximum degree of the
/// generated topology.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonRule {
    Absolute(f64),
    OverMaxDegree(f64),
}

impl EpsilonRule {
    pub fn resolve(&self, max_degree: usize) -> f64 {
        match *self {
            EpsilonRule::Absolute(e) => e,
            EpsilonRule::OverMaxDegree(c) => c / max_degree.max(1) as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwlseSettings {
    pub rho: f64,
    pub admm_iters: usize,
    pub ac_iters: usize,
    pub epsilon: EpsilonRule,
    pub dual_indexing: DualIndexing,
}

impl DwlseSettings {
    pub fn resolve(&self, topo: &NetworkTopology) -> Result<DwlseConfig> {
        let mut cfg = DwlseConfig::new(
            self.rho,
            self.admm_iters,
            self.ac_iters,
            self.epsilon.resolve(topo.max_degree()),
        )?;
        cfg.dual_indexing = self.dual_indexing;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scan_time: f64,
    pub steps: usize,
    pub system: SystemModel,
    pub sensor: SensorModel,
    pub sensor_overrides: BTreeMap<usize, SensorModel>,
    pub initial_true_state: Vector,
    pub initial_estimate: StateEstimate,
    pub turns: Vec<Turn>,
    pub network: NetworkConfig,
    pub dwlse: DwlseSettings,
    pub runs: usize,
    pub master_seed: u64,
    pub noise: NoiseKind,
    /// Sample `w_k ~ (0, Q)` in the ground truth between turns.
    pub truth_process_noise: bool,
}

/// `F` for a planar constant-velocity state `[px, py, vx, vy]`.
pub fn constant_velocity_transition(scan_time: f64) -> Matrix {
    let mut f = Matrix::identity(4, 4);
    f[(0, 2)] = scan_time;
    f[(1, 3)] = scan_time;
    f
}

/// Observation of the two position components of `[px, py, vx, vy]`.
pub fn position_measurement() -> Matrix {
    let mut h = Matrix::zeros(2, 4);
    h[(0, 0)] = 1.0;
    h[(1, 1)] = 1.0;
    h
}

impl ScenarioConfig {
    /// The 20-node tracking experiment with its default tracker parameters.
    pub fn tracking_default() -> Self {
        let scan_time = 1.0;
        let v = 2500.0 * 2.0_f64.sqrt() / 36.0;
        let system = SystemModel::new(
            constant_velocity_transition(scan_time),
            diag(&[50.0, 50.0, 10.0, 10.0]),
        )
        .expect("static model");
        let sensor = SensorModel::new(position_measurement(), diag(&[200.0, 8.0])).expect("static model");
        let initial_estimate = StateEstimate::from_covariance(
            Vector::from_vec(vec![20.0, 20.0, 90.0, -80.0]),
            &diag(&[900.0, 900.0, 16.0, 16.0]),
        )
        .expect("static model");
        Self {
            scan_time,
            steps: 100,
            system,
            sensor,
            sensor_overrides: BTreeMap::new(),
            initial_true_state: Vector::from_vec(vec![0.0, 0.0, v, v]),
            initial_estimate,
            turns: vec![
                Turn {
                    step: 25,
                    degrees: 45.0,
                },
                Turn {
                    step: 50,
                    degrees: 90.0,
                },
                Turn {
                    step: 75,
                    degrees: 90.0,
                },
            ],
            network: NetworkConfig {
                nodes: 20,
                radius: 2000.0,
                region: Region {
                    width: 10_000.0,
                    height: 8_000.0,
                },
                seed: 1,
            },
            dwlse: DwlseSettings {
                rho: 0.002,
                admm_iters: 20,
                ac_iters: 10,
                epsilon: EpsilonRule::OverMaxDegree(0.65),
                dual_indexing: DualIndexing::Previous,
            },
            runs: 100,
            master_seed: 1,
            noise: NoiseKind::Gaussian,
            truth_process_noise: true,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.system.state_dim()
    }

    /// Sensor of node `s`: its override if any, the template otherwise.
    pub fn sensor_for(&self, s: usize) -> &SensorModel {
        self.sensor_overrides.get(&s).unwrap_or(&self.sensor)
    }

    pub fn sensors(&self) -> Vec<SensorModel> {
        (0..self.network.nodes).map(|s| self.sensor_for(s).clone()).collect()
    }

    pub fn topology(&self) -> Result<NetworkTopology> {
        let n = &self.network;
        NetworkTopology::generate_geometric(n.nodes, n.radius, n.region, n.seed)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.steps == 0 {
            return bad("scenario needs at least one step".into());
        }
        if self.runs == 0 {
            return bad("scenario needs at least one Monte Carlo run".into());
        }
        if !(self.scan_time > 0.0) {
            return bad(format!("scan time must be positive, got {}", self.scan_time));
        }
        if self.network.nodes == 0 {
            return bad("network needs at least one node".into());
        }
        if let Some(&s) = self.sensor_overrides.keys().find(|&&s| s >= self.network.nodes) {
            return Err(Error::NodeOutOfRange {
                node: s,
                count: self.network.nodes,
            });
        }
        let m = self.state_dim();
        if m != 4 {
            return Err(Error::dims("tracking state [px, py, vx, vy]", 4, m));
        }
        if self.initial_true_state.len() != m {
            return Err(Error::dims("initial true state", m, self.initial_true_state.len()));
        }
        if self.initial_estimate.dim() != m {
            return Err(Error::dims("initial estimate", m, self.initial_estimate.dim()));
        }
        for w in self.turns.windows(2) {
            if w[1].step <= w[0].step {
                return bad("turn steps must be strictly increasing".into());
            }
        }
        if let Some(t) = self.turns.iter().find(|t| t.step >= self.steps) {
            return bad(format!("turn at step {} is not before step count {}", t.step, self.steps));
        }
        validate_models(self.system.clone(), self.sensors())?;
        let d = &self.dwlse;
        let eps = match d.epsilon {
            EpsilonRule::Absolute(e) | EpsilonRule::OverMaxDegree(e) => e,
        };
        DwlseConfig::new(d.rho, d.admm_iters, d.ac_iters, eps)?;
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Parses scenario text on top of the default scenario.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::tracking_default();
        let mut section = String::new();
        let mut transition: Option<Matrix> = None;
        let mut process_noise: Option<Matrix> = None;
        let mut sensor_parts: BTreeMap<Option<usize>, (Option<Matrix>, Option<Matrix>)> = BTreeMap::new();
        let mut est_mean: Option<Vector> = None;
        let mut est_cov: Option<(bool, Matrix, usize)> = None;
        let mut scan_time_set = false;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |message: String| Error::Scenario {
                line: line_no,
                message,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err("unterminated section header".into()))?;
                section = name.split_whitespace().collect::<Vec<_>>().join(" ");
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            let value = value.trim();
            let scalar = || parse_scalar(value).map_err(&err);
            let count = || {
                value
                    .parse::<usize>()
                    .map_err(|e| err(format!("`{value}`: {e}")))
            };
            let seed = || {
                value
                    .parse::<u64>()
                    .map_err(|e| err(format!("`{value}`: {e}")))
            };
            let flag = || match value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "on" | "1" => Ok(true),
                "false" | "no" | "off" | "0" => Ok(false),
                _ => Err(err(format!("expected a boolean, got `{value}`"))),
            };

            match (section.as_str(), key) {
                ("scenario", "scan_time") => {
                    cfg.scan_time = scalar()?;
                    scan_time_set = true;
                }
                ("scenario", "steps") => cfg.steps = count()?,
                ("scenario", "runs") => cfg.runs = count()?,
                ("scenario", "master_seed") => cfg.master_seed = seed()?,
                ("scenario", "noise") => {
                    cfg.noise = NoiseKind::parse(value)
                        .ok_or_else(|| err(format!("unknown noise kind `{value}`")))?
                }
                ("scenario", "truth_process_noise") => cfg.truth_process_noise = flag()?,
                ("system", "transition") => {
                    transition = if value.eq_ignore_ascii_case("constant_velocity") {
                        None
                    } else {
                        Some(parse_matrix(value).map_err(&err)?)
                    }
                }
                ("system", "process_noise") => process_noise = Some(parse_matrix(value).map_err(&err)?),
                (s, k) if s == "sensor" || s.starts_with("sensor ") => {
                    let node = match s.strip_prefix("sensor ") {
                        Some(id) => Some(
                            id.trim()
                                .parse::<usize>()
                                .map_err(|e| err(format!("sensor section `{s}`: {e}")))?,
                        ),
                        None => None,
                    };
                    let entry = sensor_parts.entry(node).or_default();
                    match k {
                        "measurement" => entry.0 = Some(parse_matrix(value).map_err(&err)?),
                        "noise" => entry.1 = Some(parse_matrix(value).map_err(&err)?),
                        _ => return Err(err(format!("unknown key `{k}` in [{s}]"))),
                    }
                }
                ("truth", "initial_state") => cfg.initial_true_state = parse_vector(value).map_err(&err)?,
                ("truth", "turns") => cfg.turns = parse_turns(value).map_err(&err)?,
                ("estimate", "mean") => est_mean = Some(parse_vector(value).map_err(&err)?),
                ("estimate", "covariance") => est_cov = Some((false, parse_matrix(value).map_err(&err)?, line_no)),
                ("estimate", "info") => est_cov = Some((true, parse_matrix(value).map_err(&err)?, line_no)),
                ("network", "nodes") => cfg.network.nodes = count()?,
                ("network", "radius") => cfg.network.radius = scalar()?,
                ("network", "region") => {
                    let (w, h) = value
                        .split_once(['x', 'X', '*'])
                        .ok_or_else(|| err(format!("expected `W x H`, got `{value}`")))?;
                    cfg.network.region = Region {
                        width: parse_scalar(w).map_err(&err)?,
                        height: parse_scalar(h).map_err(&err)?,
                    };
                }
                ("network", "seed") => cfg.network.seed = seed()?,
                ("dwlse", "rho") => cfg.dwlse.rho = scalar()?,
                ("dwlse", "admm_iters") => cfg.dwlse.admm_iters = count()?,
                ("dwlse", "ac_iters") => cfg.dwlse.ac_iters = count()?,
                ("dwlse", "epsilon") => cfg.dwlse.epsilon = parse_epsilon(value).map_err(&err)?,
                ("dwlse", "dual_indexing") => {
                    cfg.dwlse.dual_indexing = match value.to_ascii_lowercase().as_str() {
                        "previous" => DualIndexing::Previous,
                        "current" => DualIndexing::Current,
                        _ => return Err(err(format!("unknown dual indexing `{value}`"))),
                    }
                }
                (s, k) => return Err(err(format!("unknown key `{k}` in [{s}]"))),
            }
        }

        if transition.is_some() || process_noise.is_some() || scan_time_set {
            let f = transition.unwrap_or_else(|| constant_velocity_transition(cfg.scan_time));
            let q = process_noise.unwrap_or_else(|| cfg.system.process_noise().clone());
            cfg.system = SystemModel::new(f, q)?;
        }
        for (node, (h, r)) in sensor_parts {
            let base = match node {
                Some(s) => cfg.sensor_for(s).clone(),
                None => cfg.sensor.clone(),
            };
            let sensor = SensorModel::new(
                h.unwrap_or_else(|| base.measurement().clone()),
                r.unwrap_or_else(|| base.noise().clone()),
            )?;
            match node {
                Some(s) => {
                    cfg.sensor_overrides.insert(s, sensor);
                }
                None => cfg.sensor = sensor,
            }
        }
        if est_mean.is_some() || est_cov.is_some() {
            let mean = est_mean.unwrap_or_else(|| cfg.initial_estimate.mean().clone());
            cfg.initial_estimate = match est_cov {
                Some((is_info, m, line)) => {
                    let wrap = |e: Error| Error::Scenario {
                        line,
                        message: e.to_string(),
                    };
                    if is_info {
                        StateEstimate::new(mean, m).map_err(wrap)?
                    } else {
                        StateEstimate::from_covariance(mean, &m).map_err(wrap)?
                    }
                }
                None => StateEstimate::new(mean, cfg.initial_estimate.info().clone())?,
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `a`, `a*b/c`, with `sqrt(x)` allowed as a factor.
pub fn parse_scalar(text: &str) -> std::result::Result<f64, String> {
    let text = text.trim();
    if text.is_empty() {
        return Err("empty number".into());
    }
    let mut value = 1.0;
    let mut op = '*';
    let mut rest = text;
    loop {
        let end = rest.find(['*', '/']).unwrap_or(rest.len());
        let (factor, tail) = rest.split_at(end);
        let f = parse_factor(factor.trim())?;
        if op == '*' {
            value *= f;
        } else {
            value /= f;
        }
        if tail.is_empty() {
            break;
        }
        op = tail.chars().next().unwrap_or('*');
        rest = &tail[1..];
    }
    if !value.is_finite() {
        return Err(format!("`{text}` is not finite"));
    }
    Ok(value)
}

fn parse_factor(text: &str) -> std::result::Result<f64, String> {
    if let Some(inner) = text.strip_prefix("sqrt(").and_then(|t| t.strip_suffix(')')) {
        let v = parse_factor(inner.trim())?;
        if v < 0.0 {
            return Err(format!("sqrt of negative number `{inner}`"));
        }
        return Ok(v.sqrt());
    }
    text.parse::<f64>().map_err(|e| format!("`{text}`: {e}"))
}

pub fn parse_vector(text: &str) -> std::result::Result<Vector, String> {
    let items: Vec<&str> = if text.contains(',') {
        text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
    } else {
        text.split_whitespace().collect()
    };
    if items.is_empty() {
        return Err("empty vector".into());
    }
    let values = items.into_iter().map(parse_scalar).collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(Vector::from_vec(values))
}

pub fn parse_matrix(text: &str) -> std::result::Result<Matrix, String> {
    let text = text.trim();
    if let Some(inner) = text.strip_prefix("diag(").and_then(|t| t.strip_suffix(')')) {
        let d = parse_vector(inner)?;
        return Ok(Matrix::from_diagonal(&d));
    }
    let rows = text
        .split(';')
        .map(|r| parse_vector(r.trim()))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(format!("ragged matrix `{text}`"));
    }
    Ok(Matrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn parse_turns(text: &str) -> std::result::Result<Vec<Turn>, String> {
    if text.trim().is_empty() || text.trim() == "none" {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|item| {
            let (step, deg) = item
                .split_once(':')
                .ok_or_else(|| format!("expected `step:degrees`, got `{}`", item.trim()))?;
            Ok(Turn {
                step: step
                    .trim()
                    .parse()
                    .map_err(|e| format!("turn step `{}`: {e}", step.trim()))?,
                degrees: parse_scalar(deg)?,
            })
        })
        .collect()
}

fn parse_epsilon(text: &str) -> std::result::Result<EpsilonRule, String> {
    let lower = text.to_ascii_lowercase();
    if let Some(num) = lower.strip_suffix("dmax") {
        let num = num.trim_end();
        let num = num
            .strip_suffix('/')
            .ok_or_else(|| format!("expected `c / dmax`, got `{text}`"))?;
        return Ok(EpsilonRule::OverMaxDegree(parse_scalar(num)?));
    }
    Ok(EpsilonRule::Absolute(parse_scalar(text)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_expressions() {
        assert_eq!(parse_scalar("1.5").unwrap(), 1.5);
        assert_eq!(parse_scalar("2500*sqrt(2)/36").unwrap(), 2500.0 * 2.0_f64.sqrt() / 36.0);
        assert_eq!(parse_scalar("-80").unwrap(), -80.0);
        assert!(parse_scalar("abc").is_err());
        assert!(parse_scalar("sqrt(-1)").is_err());
    }

    #[test]
    fn matrices_and_vectors() {
        assert_eq!(parse_matrix("diag(1, 2)").unwrap(), diag(&[1.0, 2.0]));
        let m = parse_matrix("1 0 0 0; 0 1 0 0").unwrap();
        assert_eq!(m, position_measurement());
        assert!(parse_matrix("1 2; 3").is_err());
        assert_eq!(parse_vector("1, 2,3").unwrap().as_slice(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn epsilon_rules() {
        assert_eq!(parse_epsilon("0.65 / dmax").unwrap(), EpsilonRule::OverMaxDegree(0.65));
        assert_eq!(parse_epsilon("0.65/Dmax").unwrap(), EpsilonRule::OverMaxDegree(0.65));
        assert_eq!(parse_epsilon("0.1").unwrap(), EpsilonRule::Absolute(0.1));
        assert_eq!(EpsilonRule::OverMaxDegree(0.65).resolve(5), 0.13);
    }

    #[test]
    fn empty_text_is_default() {
        assert_eq!(ScenarioConfig::parse("").unwrap(), ScenarioConfig::tracking_default());
    }

    #[test]
    fn overrides_apply() {
        let text = "\
[scenario]
steps = 10
runs = 3
noise = uniform
[truth]
turns = 4:90
[network]
nodes = 4
region = 3000 x 3000
[sensor 2]
noise = diag(50, 50)
[dwlse]
epsilon = 0.2
admm_iters = 5
";
        let cfg = ScenarioConfig::parse(text).unwrap();
        assert_eq!(cfg.steps, 10);
        assert_eq!(cfg.runs, 3);
        assert_eq!(cfg.turns, vec![Turn { step: 4, degrees: 90.0 }]);
        assert_eq!(cfg.noise, NoiseKind::Uniform);
        assert_eq!(cfg.network.nodes, 4);
        assert_eq!(cfg.sensor_for(2).noise(), &diag(&[50.0, 50.0]));
        assert_eq!(cfg.sensor_for(1).noise(), &diag(&[200.0, 8.0]));
        assert_eq!(cfg.dwlse.epsilon, EpsilonRule::Absolute(0.2));
        assert_eq!(cfg.dwlse.admm_iters, 5);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = ScenarioConfig::parse("[scenario]\nsteps = 10\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, Error::Scenario { line: 3, .. }), "{err}");
        let err = ScenarioConfig::parse("[truth]\nturns = 5:90, 3:45\n").unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
        let err = ScenarioConfig::parse("[estimate]\ncovariance = diag(1, -1, 1, 1)\n").unwrap_err();
        assert!(matches!(err, Error::Scenario { line: 2, .. }));
        let err = ScenarioConfig::parse("[scenario]\nsteps = 10\n[truth]\nturns = 10:90\n").unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }
}
