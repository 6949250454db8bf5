use nalgebra::SymmetricEigen;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{symmetrize, Matrix, Vector};

/// Noise generator used by the simulator. Only the first two moments are
/// prescribed by the model, so any zero-mean distribution with the right
/// covariance is admissible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseKind {
    #[default]
    Gaussian,
    /// Independent uniforms on `[-√3, √3]` pushed through the covariance
    /// square root.
    Uniform,
    /// No noise at all.
    Off,
}

impl NoiseKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Some(Self::Gaussian),
            "uniform" => Some(Self::Uniform),
            "off" | "none" | "zero" => Some(Self::Off),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Uniform => "uniform",
            Self::Off => "off",
        }
    }
}

/// Draws `L u` with `L L^T = C` and `u` zero mean, identity covariance.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    factor: Matrix,
    kind: NoiseKind,
}

impl NoiseSampler {
    /// `covariance` must be symmetric positive semidefinite; the square root
    /// comes from its eigendecomposition so singular covariances work.
    pub fn new(covariance: &Matrix, kind: NoiseKind) -> Self {
        let eig = SymmetricEigen::new(symmetrize(covariance));
        let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        let factor = &eig.eigenvectors * Matrix::from_diagonal(&roots);
        Self { factor, kind }
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        let n = self.dim();
        let unit = match self.kind {
            NoiseKind::Off => return Vector::zeros(n),
            NoiseKind::Gaussian => Vector::from_fn(n, |_, _| rng.sample(StandardNormal)),
            NoiseKind::Uniform => {
                let half = 3.0_f64.sqrt();
                Vector::from_fn(n, |_, _| rng.random_range(-half..half))
            }
        };
        &self.factor * unit
    }
}
