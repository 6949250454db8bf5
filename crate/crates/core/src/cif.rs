//! Centralized information filter and its weighted-least-squares twin.
//!
//! The centralized filter is the benchmark for the distributed estimator
//! and, through [`wls_solve`], the oracle that the ADMM iteration is
//! expected to reach.

use crate::error::{Error, Result};
use crate::linalg::{check_square, cholesky, spd_inverse, symmetrize, Matrix, Vector};
use crate::models::{SensorModel, StackedWlsProblem, StateEstimate, SystemModel};

/// Accumulated `Σ H^T R^-1 H` and `Σ H^T R^-1 y` over a set of sensors.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationSum {
    pub matrix: Matrix,
    pub vector: Vector,
}

impl InformationSum {
    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: Matrix::zeros(dim, dim),
            vector: Vector::zeros(dim),
        }
    }

    pub fn from_measurements(
        dim: usize,
        sensors: &[SensorModel],
        measurements: &[Vector],
    ) -> Result<Self> {
        if sensors.len() != measurements.len() {
            return Err(Error::dims(
                "measurements per sensor",
                sensors.len(),
                measurements.len(),
            ));
        }
        let mut sum = Self::zeros(dim);
        for (s, (sensor, y)) in sensors.iter().zip(measurements).enumerate() {
            if sensor.state_dim() != dim {
                return Err(Error::dims(format!("H of sensor {s}"), dim, sensor.state_dim()));
            }
            let (a, b) = sensor.information_terms(y)?;
            sum.matrix += a;
            sum.vector += b;
        }
        Ok(sum)
    }
}

/// Measurement update from per-sensor terms:
/// `Ω' = Ω + Σ H^T R^-1 H`, `x' = Ω'^-1 (Ω x + Σ H^T R^-1 y)`.
pub fn measurement_update(
    prior: &StateEstimate,
    sensors: &[SensorModel],
    measurements: &[Vector],
) -> Result<StateEstimate> {
    let sum = InformationSum::from_measurements(prior.dim(), sensors, measurements)?;
    update_with_information(prior, &sum)
}

/// Measurement update from a stacked `H`, block-diagonal `R`, and stacked `y`.
/// An empty `H` (zero rows) leaves the prior unchanged.
pub fn measurement_update_stacked(
    prior: &StateEstimate,
    h: &Matrix,
    r: &Matrix,
    y: &Vector,
) -> Result<StateEstimate> {
    let m = prior.dim();
    if h.nrows() == 0 {
        return update_with_information(prior, &InformationSum::zeros(m));
    }
    if h.ncols() != m {
        return Err(Error::dims("stacked H columns", m, h.ncols()));
    }
    if y.len() != h.nrows() {
        return Err(Error::dims("stacked measurement", h.nrows(), y.len()));
    }
    let sensor = SensorModel::new(h.clone(), r.clone())?;
    let (matrix, vector) = sensor.information_terms(y)?;
    update_with_information(prior, &InformationSum { matrix, vector })
}

pub fn update_with_information(prior: &StateEstimate, sum: &InformationSum) -> Result<StateEstimate> {
    check_square(&sum.matrix, prior.dim(), "information sum")?;
    let info = symmetrize(&(prior.info() + &sum.matrix));
    let rhs = prior.info() * prior.mean() + &sum.vector;
    let chol = cholesky(&info)
        .ok_or_else(|| Error::Singular("updated information matrix".into()))?;
    let mean = chol.solve(&rhs);
    Ok(StateEstimate::from_parts(mean, info))
}

/// Time update: `x' = F x`, `Ω' = (F Ω^-1 F^T + Q)^-1`.
pub fn time_update(post: &StateEstimate, system: &SystemModel) -> Result<StateEstimate> {
    if system.state_dim() != post.dim() {
        return Err(Error::dims("system model", post.dim(), system.state_dim()));
    }
    let f = system.transition();
    let cov = spd_inverse(post.info(), "posterior information matrix")?;
    let predicted_cov = symmetrize(&(f * cov * f.transpose() + system.process_noise()));
    let info = spd_inverse(&predicted_cov, "predicted covariance F P F^T + Q")?;
    Ok(StateEstimate::from_parts(f * post.mean(), info))
}

/// Closed-form minimizer of the stacked WLS cost,
/// `x = (H^T W H)^-1 H^T W Y`, with information `H^T W H`.
pub fn wls_solve(problem: &StackedWlsProblem) -> Result<StateEstimate> {
    let ht_w = problem.design().transpose() * problem.weight();
    let normal = symmetrize(&(&ht_w * problem.design()));
    let rhs = &ht_w * problem.obs();
    let chol = cholesky(&normal).ok_or_else(|| Error::Singular("WLS normal matrix".into()))?;
    let mean = chol.solve(&rhs);
    Ok(StateEstimate::from_parts(mean, normal))
}
