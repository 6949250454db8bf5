//! Per-timestep distributed weighted-least-squares estimator.
//!
//! Each node keeps its own filtered estimate and one-step prediction. A
//! measurement step runs ADMM consensus on the node-local WLS costs for the
//! mean, average consensus on `H_s^T R_s^-1 H_s` for the information matrix,
//! and finally the per-node prediction for the next scan.

use crate::cif;
use crate::consensus::{ac_run, admm_run, AdmmOptions, AdmmProblemTerms, DualIndexing};
use crate::error::{Error, Result};
use crate::linalg::{check_spd, cholesky, symmetrize, Matrix, Vector};
use crate::models::{SensorModel, StateEstimate, SystemModel};
use crate::network::NetworkTopology;

#[derive(Debug, Clone, PartialEq)]
pub struct DwlseNode {
    pub id: usize,
    /// `(x̂_{k|k,s}, Ω_{k|k,s})`
    pub estimate: StateEstimate,
    /// `(x̂_{k+1|k,s}, Ω_{k+1|k,s})`
    pub prediction: StateEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwlseConfig {
    /// ADMM penalty.
    pub rho: f64,
    /// ADMM iterations per scan (`L`).
    pub admm_iters: usize,
    /// Average-consensus iterations per scan (`T`).
    pub ac_iters: usize,
    /// Average-consensus rate, in `(0, 1/D_max)`.
    pub epsilon: f64,
    pub dual_indexing: DualIndexing,
}

impl DwlseConfig {
    pub fn new(rho: f64, admm_iters: usize, ac_iters: usize, epsilon: f64) -> Result<Self> {
        let cfg = Self {
            rho,
            admm_iters,
            ac_iters,
            epsilon,
            dual_indexing: DualIndexing::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("rho must be positive, got {}", self.rho)));
        }
        if self.admm_iters == 0 {
            return Err(Error::InvalidParameter("ADMM iteration count must be at least 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Every node starts from the same `(x̂_0, Ω_0)` and immediately predicts
/// one scan ahead.
pub fn dwlse_init(
    node_count: usize,
    initial_mean: &Vector,
    initial_info: &Matrix,
    system: &SystemModel,
) -> Result<Vec<DwlseNode>> {
    if node_count == 0 {
        return Err(Error::InvalidParameter("at least one node is required".into()));
    }
    let estimate = StateEstimate::new(initial_mean.clone(), initial_info.clone())?;
    let prediction = cif::time_update(&estimate, system)?;
    Ok((0..node_count)
        .map(|id| DwlseNode {
            id,
            estimate: estimate.clone(),
            prediction: prediction.clone(),
        })
        .collect())
}

/// Prediction from the node's current estimate; same formula as the
/// centralized time update.
pub fn dwlse_predict(node: &DwlseNode, system: &SystemModel) -> Result<DwlseNode> {
    Ok(DwlseNode {
        id: node.id,
        estimate: node.estimate.clone(),
        prediction: cif::time_update(&node.estimate, system)?,
    })
}

#[derive(Debug, Clone)]
pub struct StepReport {
    pub nodes: Vec<DwlseNode>,
    /// `max_s |Ω_{k|k,s} - (Σ_j A_j + Ω_{k|k-1,s})|_F`: distance of the
    /// consensus-fused information from the exact network sum.
    pub fusion_residual: f64,
}

/// One scan of the distributed estimator for all nodes.
pub fn dwlse_step(
    nodes: &[DwlseNode],
    topo: &NetworkTopology,
    sensors: &[SensorModel],
    measurements: &[Vector],
    system: &SystemModel,
    cfg: &DwlseConfig,
) -> Result<StepReport> {
    cfg.validate()?;
    let j = nodes.len();
    if topo.node_count() != j {
        return Err(Error::dims("nodes in topology", j, topo.node_count()));
    }

    let priors: Vec<StateEstimate> = nodes.iter().map(|n| n.prediction.clone()).collect();
    let terms = AdmmProblemTerms::from_measurements(&priors, sensors, measurements, cfg.rho)?;

    let initial_x: Vec<Vector> = priors.iter().map(|p| p.mean().clone()).collect();
    let options = AdmmOptions {
        dual_indexing: cfg.dual_indexing,
        ..Default::default()
    };
    let admm = admm_run(&terms, topo, &initial_x, cfg.admm_iters, &options)?;

    let local_info: Vec<Matrix> = terms.nodes().iter().map(|n| n.info.clone()).collect();
    let fused = ac_run(topo, &local_info, cfg.epsilon, cfg.ac_iters)?;
    let exact_sum = local_info.iter().fold(Matrix::zeros(local_info[0].nrows(), local_info[0].ncols()), |acc, a| acc + a);

    let mut out = Vec::with_capacity(j);
    let mut fusion_residual = 0.0_f64;
    for (s, ((node, state), avg)) in nodes.iter().zip(admm.states).zip(fused).enumerate() {
        let prior_info = node.prediction.info();
        let info = symmetrize(&(avg * j as f64 + prior_info));
        if cholesky(&info).is_none() {
            return Err(Error::NotPositiveDefinite(format!(
                "fused information matrix of node {s}"
            )));
        }
        fusion_residual = fusion_residual.max((&info - (&exact_sum + prior_info)).norm());
        let estimate = StateEstimate::from_parts(state.x, info);
        let prediction = cif::time_update(&estimate, system)?;
        out.push(DwlseNode {
            id: node.id,
            estimate,
            prediction,
        });
    }
    Ok(StepReport {
        nodes: out,
        fusion_residual,
    })
}

/// Checks that every node's filtered information matrix is symmetric
/// positive definite.
pub fn check_information_health(nodes: &[DwlseNode]) -> Result<()> {
    for n in nodes {
        check_spd(n.estimate.info(), &format!("information matrix of node {}", n.id))?;
        check_spd(n.prediction.info(), &format!("predicted information matrix of node {}", n.id))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, matrix_from_rows};

    fn cv_system() -> SystemModel {
        let f = matrix_from_rows(&[
            &[1.0, 0.0, 1.0, 0.0],
            &[0.0, 1.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
        ]);
        SystemModel::new(f, diag(&[50.0, 50.0, 10.0, 10.0])).unwrap()
    }

    fn tracking_initial() -> (Vector, Matrix) {
        let x0 = Vector::from_vec(vec![20.0, 20.0, 90.0, -80.0]);
        let omega0 = diag(&[1.0 / 900.0, 1.0 / 900.0, 1.0 / 16.0, 1.0 / 16.0]);
        (x0, omega0)
    }

    #[test]
    fn init_gives_identical_nodes() {
        let (x0, omega0) = tracking_initial();
        let nodes = dwlse_init(20, &x0, &omega0, &cv_system()).unwrap();
        assert_eq!(nodes.len(), 20);
        for n in &nodes {
            assert_eq!(n.estimate, nodes[0].estimate);
            assert_eq!(n.prediction, nodes[0].prediction);
        }
        assert_eq!(nodes[0].estimate.mean(), &x0);
        // velocity carried into position by one scan
        assert_eq!(nodes[0].prediction.mean().as_slice(), &[110.0, -60.0, 90.0, -80.0]);
    }

    #[test]
    fn single_node_init_matches_cif() {
        let (x0, omega0) = tracking_initial();
        let nodes = dwlse_init(1, &x0, &omega0, &cv_system()).unwrap();
        let est = StateEstimate::new(x0, omega0).unwrap();
        assert_eq!(nodes[0].prediction, cif::time_update(&est, &cv_system()).unwrap());
    }

    #[test]
    fn init_rejects_bad_information() {
        let x0 = Vector::zeros(4);
        assert!(dwlse_init(3, &x0, &Matrix::zeros(4, 4), &cv_system()).is_err());
        assert!(dwlse_init(0, &x0, &Matrix::identity(4, 4), &cv_system()).is_err());
    }

    #[test]
    fn predict_matches_time_update() {
        let (x0, omega0) = tracking_initial();
        let nodes = dwlse_init(2, &x0, &omega0, &cv_system()).unwrap();
        let p = dwlse_predict(&nodes[1], &cv_system()).unwrap();
        assert_eq!(p.prediction, cif::time_update(&nodes[1].estimate, &cv_system()).unwrap());
        let still = SystemModel::new(Matrix::identity(4, 4), Matrix::zeros(4, 4)).unwrap();
        let q = dwlse_predict(&nodes[0], &still).unwrap();
        assert_eq!(q.prediction.mean(), q.estimate.mean());
        assert!((q.prediction.info() - q.estimate.info()).abs().max() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(DwlseConfig::new(0.002, 20, 10, 0.1).is_ok());
        assert!(DwlseConfig::new(0.0, 20, 10, 0.1).is_err());
        assert!(DwlseConfig::new(0.002, 0, 10, 0.1).is_err());
        assert!(DwlseConfig::new(0.002, 1, 0, -0.1).is_err());
    }

    #[test]
    fn epsilon_above_inverse_degree_fails_step() {
        let (x0, omega0) = tracking_initial();
        let topo = NetworkTopology::star(3).unwrap();
        let nodes = dwlse_init(4, &x0, &omega0, &cv_system()).unwrap();
        let h = matrix_from_rows(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]]);
        let sensors = vec![SensorModel::new(h, diag(&[200.0, 8.0])).unwrap(); 4];
        let ys = vec![Vector::zeros(2); 4];
        let cfg = DwlseConfig::new(0.002, 2, 2, 0.5).unwrap();
        assert!(dwlse_step(&nodes, &topo, &sensors, &ys, &cv_system(), &cfg).is_err());
    }
}
