//! Linear-Gaussian system and measurement models, the carried estimate
//! pair, and the stacked weighted-least-squares form of one measurement
//! update.

use crate::error::{Error, Result};
use crate::linalg::{
    block_diag, check_spd, check_square, is_positive_semidefinite, is_symmetric, spd_inverse,
    symmetrize, Matrix, Vector,
};

/// State vector `x_k`; its length is the model dimension `m`.
pub type StateVector = Vector;

/// Shared dynamics `x_{k+1} = F x_k + w_k`, `Cov(w_k) = Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    transition: Matrix,
    process_noise: Matrix,
}

impl SystemModel {
    /// Shape-checked constructor; covariance properties are checked by
    /// [`validate_models`].
    pub fn new(transition: Matrix, process_noise: Matrix) -> Result<Self> {
        let m = transition.nrows();
        check_square(&transition, m, "state transition F")?;
        check_square(&process_noise, m, "process noise Q")?;
        Ok(Self {
            transition,
            process_noise,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.transition.nrows()
    }

    pub fn transition(&self) -> &Matrix {
        &self.transition
    }

    pub fn process_noise(&self) -> &Matrix {
        &self.process_noise
    }
}

/// Per-node measurement pair `y = H x + v`, `Cov(v) = R`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorModel {
    measurement: Matrix,
    noise: Matrix,
}

impl SensorModel {
    pub fn new(measurement: Matrix, noise: Matrix) -> Result<Self> {
        check_square(&noise, measurement.nrows(), "measurement noise R")?;
        Ok(Self { measurement, noise })
    }

    pub fn measurement_dim(&self) -> usize {
        self.measurement.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.measurement.ncols()
    }

    pub fn measurement(&self) -> &Matrix {
        &self.measurement
    }

    pub fn noise(&self) -> &Matrix {
        &self.noise
    }

    pub fn noise_information(&self) -> Result<Matrix> {
        spd_inverse(&self.noise, "measurement noise R")
    }

    /// `H^T R^-1 H`, exactly symmetric.
    pub fn information_matrix(&self) -> Result<Matrix> {
        let ht_rinv = self.measurement.transpose() * self.noise_information()?;
        Ok(symmetrize(&(&ht_rinv * &self.measurement)))
    }

    /// `(H^T R^-1 H, H^T R^-1 y)` for one measurement.
    pub fn information_terms(&self, y: &Vector) -> Result<(Matrix, Vector)> {
        if y.len() != self.measurement_dim() {
            return Err(Error::dims(
                "measurement vector",
                self.measurement_dim(),
                y.len(),
            ));
        }
        let ht_rinv = self.measurement.transpose() * self.noise_information()?;
        let a = symmetrize(&(&ht_rinv * &self.measurement));
        let b = &ht_rinv * y;
        Ok((a, b))
    }
}

/// Mean and information matrix `(x̂, Ω = P^-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEstimate {
    mean: StateVector,
    info: Matrix,
}

impl StateEstimate {
    /// Checked constructor: `info` must be `m x m` symmetric positive definite.
    pub fn new(mean: StateVector, info: Matrix) -> Result<Self> {
        check_square(&info, mean.len(), "information matrix")?;
        check_spd(&info, "information matrix")?;
        Ok(Self { mean, info })
    }

    /// Builds the estimate from a covariance `P`, storing `P^-1`.
    pub fn from_covariance(mean: StateVector, covariance: &Matrix) -> Result<Self> {
        check_square(covariance, mean.len(), "covariance")?;
        check_spd(covariance, "covariance")?;
        Self::new(mean, spd_inverse(covariance, "covariance")?)
    }

    pub(crate) fn from_parts(mean: StateVector, info: Matrix) -> Self {
        debug_assert_eq!(info.nrows(), mean.len());
        Self { mean, info }
    }

    pub fn mean(&self) -> &StateVector {
        &self.mean
    }

    pub fn info(&self) -> &Matrix {
        &self.info
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn covariance(&self) -> Result<Matrix> {
        spd_inverse(&self.info, "information matrix")
    }

    pub fn into_parts(self) -> (StateVector, Matrix) {
        (self.mean, self.info)
    }
}

/// A system model plus the sensors observing it, all invariants checked.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub system: SystemModel,
    pub sensors: Vec<SensorModel>,
}

impl ModelBundle {
    pub fn state_dim(&self) -> usize {
        self.system.state_dim()
    }
}

/// Checks every structural assumption of the linear-Gaussian model: at least
/// one sensor, consistent dimensions, `Q` symmetric PSD and each `R`
/// symmetric PD. Returns the inputs unchanged.
pub fn validate_models(system: SystemModel, sensors: Vec<SensorModel>) -> Result<ModelBundle> {
    if sensors.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one sensor is required".into(),
        ));
    }
    let m = system.state_dim();
    check_square(&system.transition, m, "state transition F")?;
    check_square(&system.process_noise, m, "process noise Q")?;
    if !is_symmetric(&system.process_noise) {
        return Err(Error::NotSymmetric("Q".into()));
    }
    if !is_positive_semidefinite(&system.process_noise) {
        return Err(Error::NotPositiveSemidefinite("Q".into()));
    }
    for (s, sensor) in sensors.iter().enumerate() {
        if sensor.state_dim() != m {
            return Err(Error::dims(
                format!("H of sensor {s} (columns)"),
                m,
                sensor.state_dim(),
            ));
        }
        check_square(&sensor.noise, sensor.measurement_dim(), "measurement noise R")?;
        check_spd(&sensor.noise, "R").map_err(|e| Error::Sensor {
            sensor: s,
            source: Box::new(e),
        })?;
    }
    Ok(ModelBundle { system, sensors })
}

/// Stacked WLS problem `Y = H x + beta`, `Cov(beta) = C`, with the weight
/// `C^-1 = blkdiag(Ω_prior, R_1^-1, ..., R_J^-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedWlsProblem {
    obs: Vector,
    design: Matrix,
    weight: Matrix,
}

impl StackedWlsProblem {
    /// Builds a problem from raw blocks, checking that they agree.
    pub fn new(obs: Vector, design: Matrix, weight: Matrix) -> Result<Self> {
        if design.nrows() != obs.len() {
            return Err(Error::dims("design rows", obs.len(), design.nrows()));
        }
        check_square(&weight, obs.len(), "weight")?;
        check_spd(&weight, "weight")?;
        Ok(Self {
            obs,
            design,
            weight,
        })
    }

    pub fn obs(&self) -> &Vector {
        &self.obs
    }

    pub fn design(&self) -> &Matrix {
        &self.design
    }

    pub fn weight(&self) -> &Matrix {
        &self.weight
    }

    pub fn state_dim(&self) -> usize {
        self.design.ncols()
    }

    /// Covariance `C` of the stacked noise `beta` (zero mean).
    pub fn noise_covariance(&self) -> Result<Matrix> {
        spd_inverse(&self.weight, "weight")
    }

    /// `(Y - H x)^T C^-1 (Y - H x)`.
    pub fn cost(&self, x: &Vector) -> f64 {
        let r = &self.obs - &self.design * x;
        (r.transpose() * &self.weight * &r)[(0, 0)]
    }
}

/// Stacks the prior and one measurement per sensor into WLS form.
pub fn stack_wls(
    prior: &StateEstimate,
    sensors: &[SensorModel],
    measurements: &[Vector],
) -> Result<StackedWlsProblem> {
    if sensors.len() != measurements.len() {
        return Err(Error::dims(
            "measurements per sensor",
            sensors.len(),
            measurements.len(),
        ));
    }
    let m = prior.dim();
    let mut rows = m;
    for (s, (sensor, y)) in sensors.iter().zip(measurements).enumerate() {
        if sensor.state_dim() != m {
            return Err(Error::dims(format!("H of sensor {s}"), m, sensor.state_dim()));
        }
        if y.len() != sensor.measurement_dim() {
            return Err(Error::dims(
                format!("measurement of sensor {s}"),
                sensor.measurement_dim(),
                y.len(),
            ));
        }
        rows += y.len();
    }

    let mut obs = Vector::zeros(rows);
    let mut design = Matrix::zeros(rows, m);
    obs.rows_mut(0, m).copy_from(prior.mean());
    design.view_mut((0, 0), (m, m)).fill_with_identity();
    let mut weights = vec![prior.info().clone()];
    let mut r = m;
    for (sensor, y) in sensors.iter().zip(measurements) {
        let n = y.len();
        obs.rows_mut(r, n).copy_from(y);
        design.view_mut((r, 0), (n, m)).copy_from(sensor.measurement());
        weights.push(sensor.noise_information()?);
        r += n;
    }
    let weight = block_diag(&weights.iter().collect::<Vec<_>>());
    Ok(StackedWlsProblem {
        obs,
        design,
        weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, matrix_from_rows};

    fn scalar(v: f64) -> Matrix {
        Matrix::from_element(1, 1, v)
    }

    fn tracking_system() -> SystemModel {
        let f = matrix_from_rows(&[
            &[1.0, 0.0, 1.0, 0.0],
            &[0.0, 1.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
        ]);
        SystemModel::new(f, diag(&[50.0, 50.0, 10.0, 10.0])).unwrap()
    }

    fn position_sensor() -> SensorModel {
        let h = matrix_from_rows(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]]);
        SensorModel::new(h, diag(&[200.0, 8.0])).unwrap()
    }

    #[test]
    fn identity_models_accepted() {
        let sys = SystemModel::new(Matrix::identity(2, 2), Matrix::identity(2, 2)).unwrap();
        let sensor = SensorModel::new(matrix_from_rows(&[&[1.0, 0.0]]), scalar(1.0)).unwrap();
        let bundle = validate_models(sys.clone(), vec![sensor.clone()]).unwrap();
        assert_eq!(bundle.system, sys);
        assert_eq!(bundle.sensors, vec![sensor]);
    }

    #[test]
    fn indefinite_r_rejected() {
        let sys = SystemModel::new(Matrix::identity(2, 2), Matrix::identity(2, 2)).unwrap();
        let sensor = SensorModel::new(
            Matrix::identity(2, 2),
            matrix_from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]),
        )
        .unwrap();
        let err = validate_models(sys, vec![sensor]).unwrap_err();
        assert!(
            err.to_string().starts_with("R not positive definite"),
            "{err}"
        );
    }

    #[test]
    fn asymmetric_q_and_missing_sensors_rejected() {
        let q = matrix_from_rows(&[&[1.0, 0.5], &[0.0, 1.0]]);
        let sys = SystemModel::new(Matrix::identity(2, 2), q).unwrap();
        let sensor = SensorModel::new(matrix_from_rows(&[&[1.0, 0.0]]), scalar(1.0)).unwrap();
        assert!(matches!(
            validate_models(sys, vec![sensor]),
            Err(Error::NotSymmetric(_))
        ));
        let sys = SystemModel::new(Matrix::identity(2, 2), Matrix::identity(2, 2)).unwrap();
        assert!(validate_models(sys, vec![]).is_err());
    }

    #[test]
    fn sensor_column_mismatch_rejected() {
        let sys = SystemModel::new(Matrix::identity(2, 2), Matrix::identity(2, 2)).unwrap();
        let sensor = SensorModel::new(matrix_from_rows(&[&[1.0, 0.0, 0.0]]), scalar(1.0)).unwrap();
        assert!(matches!(
            validate_models(sys, vec![sensor]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(SystemModel::new(Matrix::identity(2, 2), Matrix::identity(3, 3)).is_err());
        assert!(SensorModel::new(Matrix::identity(2, 2), scalar(1.0)).is_err());
    }

    #[test]
    fn tracking_models_accepted_and_idempotent() {
        let bundle = validate_models(tracking_system(), vec![position_sensor(); 20]).unwrap();
        let again = validate_models(bundle.system.clone(), bundle.sensors.clone()).unwrap();
        assert_eq!(bundle, again);
    }

    #[test]
    fn stack_scalar_problem() {
        let prior = StateEstimate::new(Vector::from_element(1, 0.0), scalar(1.0)).unwrap();
        let sensor = SensorModel::new(scalar(1.0), scalar(1.0)).unwrap();
        let p = stack_wls(&prior, &[sensor], &[Vector::from_element(1, 2.0)]).unwrap();
        assert_eq!(p.obs().as_slice(), &[0.0, 2.0]);
        assert_eq!(p.design().as_slice(), &[1.0, 1.0]);
        assert_eq!(p.weight(), &diag(&[1.0, 1.0]));
    }

    #[test]
    fn stack_two_scalar_sensors_on_planar_state() {
        let prior = StateEstimate::new(Vector::zeros(2), Matrix::identity(2, 2)).unwrap();
        let s1 = SensorModel::new(matrix_from_rows(&[&[1.0, 0.0]]), scalar(2.0)).unwrap();
        let s2 = SensorModel::new(matrix_from_rows(&[&[0.0, 1.0]]), scalar(4.0)).unwrap();
        let ys = [Vector::from_element(1, 1.0), Vector::from_element(1, 3.0)];
        let p = stack_wls(&prior, &[s1, s2], &ys).unwrap();
        assert_eq!(p.design().shape(), (4, 2));
        assert!((p.weight() - diag(&[1.0, 1.0, 0.5, 0.25])).abs().max() < 1e-15);
        let c = p.noise_covariance().unwrap();
        assert!((c - diag(&[1.0, 1.0, 2.0, 4.0])).abs().max() < 1e-14);
    }

    #[test]
    fn stack_tracking_shape() {
        let prior = StateEstimate::from_covariance(
            Vector::from_vec(vec![20.0, 20.0, 90.0, -80.0]),
            &diag(&[900.0, 900.0, 16.0, 16.0]),
        )
        .unwrap();
        let sensors = vec![position_sensor(); 20];
        let ys = vec![Vector::zeros(2); 20];
        let p = stack_wls(&prior, &sensors, &ys).unwrap();
        // m + J * n = 4 + 20 * 2
        assert_eq!(p.obs().len(), 44);
        assert_eq!(p.design().shape(), (44, 4));
        assert_eq!(p.weight().shape(), (44, 44));
    }

    #[test]
    fn stack_rejects_wrong_measurement_length() {
        let prior = StateEstimate::new(Vector::zeros(2), Matrix::identity(2, 2)).unwrap();
        let s1 = SensorModel::new(matrix_from_rows(&[&[1.0, 0.0]]), scalar(2.0)).unwrap();
        assert!(stack_wls(&prior, std::slice::from_ref(&s1), &[Vector::zeros(2)]).is_err());
        assert!(stack_wls(&prior, &[s1], &[]).is_err());
    }

    #[test]
    fn estimate_rejects_non_pd_info() {
        assert!(StateEstimate::new(Vector::zeros(2), Matrix::zeros(2, 2)).is_err());
        assert!(StateEstimate::new(Vector::zeros(3), Matrix::identity(2, 2)).is_err());
    }
}
