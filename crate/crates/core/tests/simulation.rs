mod common;

use dwlse::sim::{acee, run_campaign, NoiseKind, NoiseSampler, PreparedScenario, ScenarioConfig};
use dwlse::{Matrix, Vector};
use proptest::prelude::*;

const DRAWS: usize = 100_000;

fn sample_covariance(kind: NoiseKind, cov: &Matrix) -> Matrix {
    let sampler = NoiseSampler::new(cov, kind);
    let mut r = common::rng(3);
    let mut acc = Matrix::zeros(cov.nrows(), cov.ncols());
    for _ in 0..DRAWS {
        let w = sampler.sample(&mut r);
        acc += &w * w.transpose();
    }
    acc / DRAWS as f64
}

#[test]
fn noise_has_the_requested_covariance() {
    let cov = Matrix::from_row_slice(2, 2, &[200.0, 20.0, 20.0, 8.0]);
    for kind in [NoiseKind::Gaussian, NoiseKind::Uniform] {
        let est = sample_covariance(kind, &cov);
        for i in 0..2 {
            let rel = (est[(i, i)] - cov[(i, i)]).abs() / cov[(i, i)];
            assert!(rel < 0.05, "{kind:?} variance {i}: {rel}");
        }
        let corr = est[(0, 1)] / (est[(0, 0)] * est[(1, 1)]).sqrt();
        let want = 20.0 / (200.0_f64 * 8.0).sqrt();
        assert!((corr - want).abs() < 0.05, "{kind:?} correlation {corr}");
    }
    assert_eq!(sample_covariance(NoiseKind::Off, &cov), Matrix::zeros(2, 2));
}

#[test]
fn measurement_noise_is_independent_across_nodes() {
    let mut cfg = ScenarioConfig::tracking_default();
    cfg.truth_process_noise = false;
    cfg.steps = 99;
    cfg.turns.clear();
    cfg.network.nodes = 2;
    cfg.network.radius = 20_000.0;
    let prepared = PreparedScenario::new(cfg).unwrap();
    let (mut sxy, mut sxx, mut syy, mut n) = (0.0, 0.0, 0.0, 0.0);
    for run in 0..1000 {
        let data = prepared.simulate_run(run).unwrap();
        for (k, row) in data.measurements.iter().enumerate() {
            let truth = &data.truth[k];
            let a = row[0][0] - truth[0];
            let b = row[1][0] - truth[0];
            sxy += a * b;
            sxx += a * a;
            syy += b * b;
            n += 1.0;
        }
    }
    // sample correlation of independent draws has standard deviation 1/sqrt(n)
    let corr = sxy / (sxx * syy).sqrt();
    assert!(corr.abs() < 3.0 / f64::sqrt(n), "{corr}");
    let var = sxx / n;
    assert!((var - 200.0).abs() / 200.0 < 0.05, "{var}");
}

fn small_scenario() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::tracking_default();
    cfg.runs = 4;
    cfg.steps = 30;
    cfg.turns.truncate(1);
    cfg
}

#[test]
fn campaigns_are_reproducible() {
    let a = run_campaign(&small_scenario()).unwrap();
    let b = run_campaign(&small_scenario()).unwrap();
    assert_eq!(a.cif, b.cif);
    assert_eq!(a.dwlse, b.dwlse);
    let mut other = small_scenario();
    other.master_seed = 2;
    assert_ne!(run_campaign(&other).unwrap().dwlse, a.dwlse);
}

#[test]
fn campaign_shapes() {
    let res = run_campaign(&small_scenario()).unwrap();
    assert_eq!(res.cif.steps(), 30);
    assert_eq!(res.cif.nodes(), 1);
    assert_eq!(res.dwlse.nodes(), 20);
    assert!(res.cif.acee.iter().all(|&v| v == 0.0));
    assert!(res.dwlse.averaged_over_runs && res.dwlse.runs == 4);
}

#[test]
fn scenario_file_matches_the_builtin_default() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/tracking.scn");
    assert_eq!(ScenarioConfig::from_file(path).unwrap(), ScenarioConfig::tracking_default());
}

#[test]
fn indefinite_sensor_noise_is_rejected() {
    let err = ScenarioConfig::parse("[sensor 3]\nnoise = 1 2; 2 1\n").unwrap_err();
    assert!(err.to_string().contains("R not positive definite"), "{err}");
}

proptest! {
    #[test]
    fn acee_ignores_node_labels(
        points in prop::collection::vec(prop::collection::vec(-100.0..100.0f64, 4), 2..8),
        swap in any::<(prop::sample::Index, prop::sample::Index)>(),
    ) {
        let xs: Vec<Vector> = points.into_iter().map(Vector::from_vec).collect();
        let refs: Vec<&Vector> = xs.iter().collect();
        let mut swapped = refs.clone();
        swapped.swap(swap.0.index(xs.len()), swap.1.index(xs.len()));
        let a = acee(&refs);
        let b = acee(&swapped);
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        prop_assert!(a >= 0.0);
    }
}
