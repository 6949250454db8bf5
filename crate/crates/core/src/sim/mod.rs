//! Tracking scenario simulation and Monte Carlo evaluation.

pub mod campaign;
pub mod noise;
pub mod output;
pub mod scenario;
pub mod truth;

pub use campaign::{
    acee, derive_seed, run_campaign, sweep_iterations, CampaignResult, Estimator, MetricSeries,
    PreparedScenario, RunData, RunMetrics, SweepResult, SweepRow,
};
pub use noise::{NoiseKind, NoiseSampler};
pub use scenario::{DwlseSettings, EpsilonRule, NetworkConfig, ScenarioConfig, Turn};
pub use truth::{generate_measurements, generate_truth};
