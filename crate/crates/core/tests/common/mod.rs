#![allow(dead_code)]

use dwlse::consensus::AdmmProblemTerms;
use dwlse::{Matrix, NetworkTopology, SensorModel, StateEstimate, Vector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn uniform_vector(rng: &mut impl Rng, len: usize, scale: f64) -> Vector {
    Vector::from_fn(len, |_, _| scale * rng.random_range(-1.0..1.0))
}

/// `B Bᵀ + floor I`: well conditioned for a modest floor.
pub fn spd(rng: &mut impl Rng, dim: usize, floor: f64) -> Matrix {
    let b = uniform_matrix(rng, dim, dim);
    let a = &b * b.transpose() + Matrix::identity(dim, dim) * floor;
    (&a + a.transpose()) * 0.5
}

pub fn sensor(rng: &mut impl Rng, state_dim: usize, meas_dim: usize) -> SensorModel {
    SensorModel::new(uniform_matrix(rng, meas_dim, state_dim), spd(rng, meas_dim, 0.5)).unwrap()
}

pub fn prior(rng: &mut impl Rng, dim: usize) -> StateEstimate {
    StateEstimate::new(uniform_vector(rng, dim, 5.0), spd(rng, dim, 0.5)).unwrap()
}

/// Random spanning tree plus a few extra edges.
pub fn connected_graph(rng: &mut impl Rng, nodes: usize) -> NetworkTopology {
    let mut edges = Vec::new();
    for s in 1..nodes {
        edges.push((rng.random_range(0..s), s));
    }
    for _ in 0..nodes / 2 {
        let a = rng.random_range(0..nodes);
        let b = rng.random_range(0..nodes);
        if a != b {
            edges.push((a, b));
        }
    }
    NetworkTopology::from_edges(nodes, &edges).unwrap()
}

/// A distributed estimation problem: a shared prior, one sensor per node
/// and a connected graph.
pub struct Instance {
    pub prior: StateEstimate,
    pub sensors: Vec<SensorModel>,
    pub measurements: Vec<Vector>,
    pub topology: NetworkTopology,
}

impl Instance {
    pub fn random(rng: &mut impl Rng, max_nodes: usize, max_dim: usize) -> Self {
        let j = rng.random_range(1..=max_nodes);
        let m = rng.random_range(1..=max_dim);
        let prior = prior(rng, m);
        let sensors: Vec<_> = (0..j)
            .map(|_| {
                let n = rng.random_range(1..=m);
                sensor(rng, m, n)
            })
            .collect();
        let measurements = sensors
            .iter()
            .map(|s| uniform_vector(rng, s.measurement_dim(), 5.0))
            .collect();
        Self {
            prior,
            sensors,
            measurements,
            topology: connected_graph(rng, j),
        }
    }

    pub fn nodes(&self) -> usize {
        self.sensors.len()
    }

    pub fn terms(&self, rho: f64) -> AdmmProblemTerms {
        let priors = vec![self.prior.clone(); self.nodes()];
        AdmmProblemTerms::from_measurements(&priors, &self.sensors, &self.measurements, rho).unwrap()
    }

    pub fn initial_x(&self) -> Vec<Vector> {
        vec![self.prior.mean().clone(); self.nodes()]
    }
}

pub fn relative_error(a: &Vector, b: &Vector) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

pub fn relative_matrix_error(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}
