use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::models::SensorModel;
use crate::sim::noise::{NoiseKind, NoiseSampler};
use crate::sim::scenario::ScenarioConfig;

/// Ground-truth states `x_0 .. x_K`.
///
/// Between turns the state follows `x_{k+1} = F x_k + w_k` (with `w_k`
/// sampled only when `truth_process_noise` is set). A turn at step `k`
/// rotates the velocity of `x_k` counter-clockwise by the configured angle,
/// keeping its magnitude.
pub fn generate_truth(cfg: &ScenarioConfig, seed: u64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kind = if cfg.truth_process_noise {
        cfg.noise
    } else {
        NoiseKind::Off
    };
    let sampler = NoiseSampler::new(cfg.system.process_noise(), kind);
    let f = cfg.system.transition();
    let mut turns = cfg.turns.iter().peekable();

    let mut x = cfg.initial_true_state.clone();
    let mut out = Vec::with_capacity(cfg.steps + 1);
    for k in 0..=cfg.steps {
        if k > 0 {
            x = f * &x + sampler.sample(&mut rng);
        }
        while let Some(t) = turns.next_if(|t| t.step == k) {
            rotate_velocity(&mut x, t.degrees);
        }
        out.push(x.clone());
    }
    out
}

fn rotate_velocity(x: &mut Vector, degrees: f64) {
    let (sin, cos) = degrees.to_radians().sin_cos();
    let (vx, vy) = (x[2], x[3]);
    x[2] = cos * vx - sin * vy;
    x[3] = sin * vx + cos * vy;
}

/// `y_{k,s} = H_s x_k + v_{k,s}` for every step of `truth` (including
/// `k = 0`) and every sensor, indexed `[k][s]`. Noise is independent across
/// nodes and steps.
pub fn generate_measurements(
    truth: &[Vector],
    sensors: &[SensorModel],
    noise: NoiseKind,
    seed: u64,
) -> Result<Vec<Vec<Vector>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samplers: Vec<_> = sensors
        .iter()
        .map(|s| NoiseSampler::new(s.noise(), noise))
        .collect();
    let mut out = Vec::with_capacity(truth.len());
    for x in truth {
        let mut row = Vec::with_capacity(sensors.len());
        for (s, (sensor, sampler)) in sensors.iter().zip(&samplers).enumerate() {
            if sensor.state_dim() != x.len() {
                return Err(Error::dims(format!("H of sensor {s}"), x.len(), sensor.state_dim()));
            }
            row.push(sensor.measurement() * x + sampler.sample(&mut rng));
        }
        out.push(row);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, Matrix};
    use crate::sim::scenario::Turn;

    fn straight_line(turns: Vec<Turn>) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::tracking_default();
        cfg.steps = 3;
        cfg.truth_process_noise = false;
        cfg.initial_true_state = Vector::from_vec(vec![0.0, 0.0, 1.0, 0.0]);
        cfg.turns = turns;
        cfg
    }

    #[test]
    fn constant_velocity_without_noise() {
        let truth = generate_truth(&straight_line(vec![]), 0);
        let pos: Vec<_> = truth.iter().map(|x| (x[0], x[1])).collect();
        assert_eq!(pos, vec![(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]);
    }

    #[test]
    fn right_angle_turn() {
        let truth = generate_truth(
            &straight_line(vec![Turn {
                step: 1,
                degrees: 90.0,
            }]),
            0,
        );
        assert_eq!((truth[0][2], truth[0][3]), (1.0, 0.0));
        for x in &truth[1..] {
            assert!(x[2].abs() < 1e-15 && (x[3] - 1.0).abs() < 1e-15);
        }
        assert!((truth[3][0] - 1.0).abs() < 1e-15 && (truth[3][1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn reference_speed_is_preserved_through_turns() {
        let mut cfg = ScenarioConfig::tracking_default();
        cfg.truth_process_noise = false;
        let truth = generate_truth(&cfg, 0);
        for x in &truth {
            let speed = (x[2] * x[2] + x[3] * x[3]).sqrt();
            assert!((speed - 5000.0 / 36.0).abs() < 1e-9);
        }
        // 45 + 90 + 90 degrees of left turns from a north-east heading
        let last = truth.last().unwrap();
        let heading = last[3].atan2(last[2]).to_degrees();
        assert!((heading - (-90.0)).abs() < 1e-9, "{heading}");
    }

    #[test]
    fn noiseless_measurements_are_exact() {
        let truth = generate_truth(&straight_line(vec![]), 0);
        let h = Matrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let sensors = vec![SensorModel::new(h.clone(), diag(&[200.0, 8.0])).unwrap(); 3];
        let ys = generate_measurements(&truth, &sensors, NoiseKind::Off, 9).unwrap();
        assert_eq!(ys.len(), 4);
        for (k, row) in ys.iter().enumerate() {
            for y in row {
                assert_eq!(y, &(&h * &truth[k]));
            }
        }
    }

    #[test]
    fn seeds_drive_the_draws() {
        let cfg = ScenarioConfig::tracking_default();
        assert_eq!(generate_truth(&cfg, 5), generate_truth(&cfg, 5));
        assert_ne!(generate_truth(&cfg, 5), generate_truth(&cfg, 6));
    }
}
