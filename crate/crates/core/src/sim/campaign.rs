//! Monte Carlo execution of the centralized and distributed estimators.

use rayon::prelude::*;

use crate::cif;
use crate::dwlse::{dwlse_init, dwlse_step, DwlseConfig, DwlseNode};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::models::{SensorModel, StateEstimate};
use crate::network::NetworkTopology;
use crate::sim::scenario::ScenarioConfig;
use crate::sim::truth::{generate_measurements, generate_truth};

/// Random stream identifiers mixed into per-run seeds.
pub const TRUTH_STREAM: u64 = 1;
pub const MEASUREMENT_STREAM: u64 = 2;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable seed for `(master, run, stream)`; adding runs never changes the
/// seeds of earlier ones.
pub fn derive_seed(master: u64, run: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ run) ^ stream)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Estimator {
    Cif,
    Dwlse,
}

impl Estimator {
    pub fn label(&self) -> &'static str {
        match self {
            Estimator::Cif => "cif",
            Estimator::Dwlse => "dwlse",
        }
    }
}

/// Error metrics per step, averaged over Monte Carlo runs.
///
/// `mse[k][s]` is the run-average of `|x̂_{k|k,s} - x_k|` (an error norm,
/// not squared); `acee[k]` the run-average of
/// `Σ_{s,j} |x̂_{k|k,s} - x̂_{k|k,j}| / (J (J - 1))`. Step `k = 1..=K` is
/// stored at index `k - 1`. The centralized filter reports one column.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub mse: Vec<Vec<f64>>,
    pub acee: Vec<f64>,
    pub runs: usize,
    pub averaged_over_runs: bool,
}

impl MetricSeries {
    fn zeros(steps: usize, nodes: usize) -> Self {
        Self {
            mse: vec![vec![0.0; nodes]; steps],
            acee: vec![0.0; steps],
            runs: 0,
            averaged_over_runs: false,
        }
    }

    fn accumulate(&mut self, run: &RunMetrics) {
        for (acc, row) in self.mse.iter_mut().zip(&run.errors) {
            for (a, e) in acc.iter_mut().zip(row) {
                *a += e;
            }
        }
        for (a, e) in self.acee.iter_mut().zip(&run.acee) {
            *a += e;
        }
        self.runs += 1;
    }

    fn finish(mut self) -> Self {
        let m = self.runs as f64;
        for row in &mut self.mse {
            for v in row.iter_mut() {
                *v /= m;
            }
        }
        for v in &mut self.acee {
            *v /= m;
        }
        self.averaged_over_runs = true;
        self
    }

    pub fn steps(&self) -> usize {
        self.acee.len()
    }

    pub fn nodes(&self) -> usize {
        self.mse.first().map_or(0, Vec::len)
    }

    /// Time average of the MSE series of `node`.
    pub fn time_averaged_mse(&self, node: usize) -> f64 {
        self.mse.iter().map(|row| row[node]).sum::<f64>() / self.steps() as f64
    }

    pub fn time_averaged_acee(&self) -> f64 {
        self.acee.iter().sum::<f64>() / self.steps() as f64
    }
}

/// Per-run error norms and ACEE, before averaging.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub errors: Vec<Vec<f64>>,
    pub acee: Vec<f64>,
}

impl RunMetrics {
    /// Metrics of one run from per-step node means and the truth `x_1..x_K`.
    pub fn from_estimates(estimates: &[Vec<&Vector>], truth: &[Vector]) -> Self {
        let errors = estimates
            .iter()
            .zip(truth)
            .map(|(row, x)| row.iter().map(|e| (*e - x).norm()).collect())
            .collect();
        let acee = estimates.iter().map(|row| acee(row)).collect();
        Self { errors, acee }
    }
}

/// `Σ_s Σ_j |x_s - x_j| / (J (J - 1))`, zero for a single node.
pub fn acee(estimates: &[&Vector]) -> f64 {
    let j = estimates.len();
    if j < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for a in estimates {
        for b in estimates {
            sum += (*a - *b).norm();
        }
    }
    sum / (j * (j - 1)) as f64
}

/// Scenario with its topology generated and models resolved.
#[derive(Debug, Clone)]
pub struct PreparedScenario {
    pub config: ScenarioConfig,
    pub topology: NetworkTopology,
    pub sensors: Vec<SensorModel>,
    pub dwlse: DwlseConfig,
}

impl PreparedScenario {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let topology = config.topology()?;
        let dwlse = config.dwlse.resolve(&topology)?;
        let sensors = config.sensors();
        Ok(Self {
            config,
            topology,
            sensors,
            dwlse,
        })
    }

    pub fn with_admm_iters(&self, admm_iters: usize) -> Result<Self> {
        let mut out = self.clone();
        out.config.dwlse.admm_iters = admm_iters;
        out.dwlse.admm_iters = admm_iters;
        out.dwlse.validate()?;
        Ok(out)
    }

    /// Truth and measurements of Monte Carlo run `run`; both estimators
    /// consume exactly this data.
    pub fn simulate_run(&self, run: usize) -> Result<RunData> {
        let cfg = &self.config;
        let truth = generate_truth(cfg, derive_seed(cfg.master_seed, run as u64, TRUTH_STREAM));
        let measurements = generate_measurements(
            &truth,
            &self.sensors,
            cfg.noise,
            derive_seed(cfg.master_seed, run as u64, MEASUREMENT_STREAM),
        )?;
        Ok(RunData {
            run,
            truth,
            measurements,
        })
    }

    /// Centralized filter over one run: posteriors for `k = 1..=K`.
    pub fn run_cif(&self, data: &RunData) -> Result<Vec<StateEstimate>> {
        let sys = &self.config.system;
        let annotate = |step: usize| {
            move |e: Error| Error::Campaign {
                run: data.run,
                step,
                node: None,
                source: Box::new(e),
            }
        };
        let mut prior = cif::time_update(&self.config.initial_estimate, sys).map_err(annotate(0))?;
        let mut out = Vec::with_capacity(self.config.steps);
        for k in 1..=self.config.steps {
            let post = cif::measurement_update(&prior, &self.sensors, &data.measurements[k])
                .map_err(annotate(k))?;
            prior = cif::time_update(&post, sys).map_err(annotate(k))?;
            out.push(post);
        }
        Ok(out)
    }

    /// Distributed estimator over one run: node states after each scan
    /// `k = 1..=K`.
    pub fn run_dwlse(&self, data: &RunData) -> Result<Vec<Vec<DwlseNode>>> {
        let cfg = &self.config;
        let annotate = |step: usize| {
            move |e: Error| Error::Campaign {
                run: data.run,
                step,
                node: e.node(),
                source: Box::new(e),
            }
        };
        let mut nodes = dwlse_init(
            cfg.network.nodes,
            cfg.initial_estimate.mean(),
            cfg.initial_estimate.info(),
            &cfg.system,
        )
        .map_err(annotate(0))?;
        let mut out = Vec::with_capacity(cfg.steps);
        for k in 1..=cfg.steps {
            let report = dwlse_step(
                &nodes,
                &self.topology,
                &self.sensors,
                &data.measurements[k],
                &cfg.system,
                &self.dwlse,
            )
            .map_err(annotate(k))?;
            nodes = report.nodes;
            out.push(nodes.clone());
        }
        Ok(out)
    }

    pub fn cif_metrics(&self, data: &RunData) -> Result<RunMetrics> {
        let posts = self.run_cif(data)?;
        let est: Vec<Vec<&Vector>> = posts.iter().map(|p| vec![p.mean()]).collect();
        Ok(RunMetrics::from_estimates(&est, &data.truth[1..]))
    }

    pub fn dwlse_metrics(&self, data: &RunData) -> Result<RunMetrics> {
        let steps = self.run_dwlse(data)?;
        let est: Vec<Vec<&Vector>> = steps
            .iter()
            .map(|nodes| nodes.iter().map(|n| n.estimate.mean()).collect())
            .collect();
        Ok(RunMetrics::from_estimates(&est, &data.truth[1..]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunData {
    pub run: usize,
    /// `x_0 .. x_K`
    pub truth: Vec<Vector>,
    /// `[k][s]` for `k = 0..=K`
    pub measurements: Vec<Vec<Vector>>,
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub cif: MetricSeries,
    pub dwlse: MetricSeries,
    pub max_degree: usize,
    pub epsilon: f64,
}

/// Runs every Monte Carlo run of the scenario for both estimators. Runs are
/// executed in parallel and reduced in run order, so the result does not
/// depend on scheduling.
pub fn run_campaign(cfg: &ScenarioConfig) -> Result<CampaignResult> {
    let prepared = PreparedScenario::new(cfg.clone())?;
    campaign(&prepared)
}

pub fn campaign(prepared: &PreparedScenario) -> Result<CampaignResult> {
    let cfg = &prepared.config;
    let per_run: Vec<(RunMetrics, RunMetrics)> = (0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            let data = prepared.simulate_run(run)?;
            Ok((prepared.cif_metrics(&data)?, prepared.dwlse_metrics(&data)?))
        })
        .collect::<Result<_>>()?;

    let mut cif = MetricSeries::zeros(cfg.steps, 1);
    let mut dwlse = MetricSeries::zeros(cfg.steps, cfg.network.nodes);
    for (c, d) in &per_run {
        cif.accumulate(c);
        dwlse.accumulate(d);
    }
    Ok(CampaignResult {
        cif: cif.finish(),
        dwlse: dwlse.finish(),
        max_degree: prepared.topology.max_degree(),
        epsilon: prepared.dwlse.epsilon,
    })
}

/// One row of an iteration sweep: time-averaged MSE of the first node and
/// time-averaged ACEE.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub admm_iters: usize,
    pub estimator: Estimator,
    pub avg_mse: f64,
    pub avg_acee: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub cif: MetricSeries,
    /// DWLSE series per entry of the iteration list, same order.
    pub dwlse: Vec<(usize, MetricSeries)>,
}

impl SweepResult {
    pub fn row(&self, admm_iters: usize, estimator: Estimator) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.admm_iters == admm_iters && r.estimator == estimator)
    }
}

/// Campaign per ADMM iteration count. Each run's data is simulated once and
/// shared by the centralized filter and every iteration count.
pub fn sweep_iterations(cfg: &ScenarioConfig, admm_iters: &[usize]) -> Result<SweepResult> {
    if admm_iters.is_empty() {
        return Err(Error::InvalidParameter("iteration list is empty".into()));
    }
    let base = PreparedScenario::new(cfg.clone())?;
    let variants = admm_iters
        .iter()
        .map(|&l| base.with_admm_iters(l))
        .collect::<Result<Vec<_>>>()?;

    let per_run: Vec<(RunMetrics, Vec<RunMetrics>)> = (0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            let data = base.simulate_run(run)?;
            let c = base.cif_metrics(&data)?;
            let d = variants
                .iter()
                .map(|v| v.dwlse_metrics(&data))
                .collect::<Result<Vec<_>>>()?;
            Ok((c, d))
        })
        .collect::<Result<_>>()?;

    let mut cif = MetricSeries::zeros(cfg.steps, 1);
    let mut dwlse = vec![MetricSeries::zeros(cfg.steps, cfg.network.nodes); admm_iters.len()];
    for (c, ds) in &per_run {
        cif.accumulate(c);
        for (acc, d) in dwlse.iter_mut().zip(ds) {
            acc.accumulate(d);
        }
    }
    let cif = cif.finish();
    let dwlse: Vec<_> = admm_iters
        .iter()
        .copied()
        .zip(dwlse.into_iter().map(MetricSeries::finish))
        .collect();

    let mut rows = Vec::with_capacity(2 * admm_iters.len());
    for (l, series) in &dwlse {
        rows.push(SweepRow {
            admm_iters: *l,
            estimator: Estimator::Dwlse,
            avg_mse: series.time_averaged_mse(0),
            avg_acee: series.time_averaged_acee(),
        });
        rows.push(SweepRow {
            admm_iters: *l,
            estimator: Estimator::Cif,
            avg_mse: cif.time_averaged_mse(0),
            avg_acee: cif.time_averaged_acee(),
        });
    }
    Ok(SweepResult { rows, cif, dwlse })
}
