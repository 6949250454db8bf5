//! Synchronous consensus iterations over a [`NetworkTopology`].
//!
//! Two engines live here:
//!
//! * the ADMM iteration that drives every node's local estimate to the
//!   centralized weighted-least-squares solution. The per-edge auxiliary
//!   variables and pairwise multipliers are eliminated analytically, so each
//!   node carries only its local iterate `x_s` and the aggregate multiplier
//!   `λ_s` (the sum of its edge multipliers). One iteration is
//!
//!   ```text
//!   λ_s ← λ_s + (ρ/2) Σ_{j∈N(s)} (x_s - x_j)
//!   x_s ← [2ρ|N(s)| I + A_s + Ω_s/J]^-1 [b_s + Ω_s x̂_s/J - 2λ_s + ρ Σ_{j∈N(s)} (x_s + x_j)]
//!   ```
//!
//!   with `A_s = H_s^T R_s^-1 H_s`, `b_s = H_s^T R_s^-1 y_s` and the node's
//!   prior `(x̂_s, Ω_s)`. Both updates read only the previous snapshot
//!   (see [`DualIndexing`]).
//!
//! * the average-consensus diffusion `S_s ← S_s + ε Σ_{j∈N(s)} (S_j - S_s)`
//!   used to fuse information matrices.
//!
//! Every step is a barrier: all nodes read snapshot `l-1` and write
//! snapshot `l`, so results do not depend on node evaluation order.

use std::io::Write;

use nalgebra::{Cholesky, Dyn};

use crate::error::{Error, Result};
use crate::linalg::{check_spd, check_square, cholesky, is_positive_semidefinite, is_symmetric, Matrix, Vector};
use crate::models::{SensorModel, StateEstimate};
use crate::network::NetworkTopology;

/// Iterates whose norm exceeds this abort the ADMM run.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// Per-node ADMM iterate: local estimate and aggregate multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmNodeState {
    pub x: Vector,
    pub lambda: Vector,
}

impl AdmmNodeState {
    /// Start state with a zero multiplier.
    pub fn initial(x: Vector) -> Self {
        let lambda = Vector::zeros(x.len());
        Self { x, lambda }
    }
}

/// Local cost data of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTerms {
    /// `H_s^T R_s^-1 H_s`
    pub info: Matrix,
    /// `H_s^T R_s^-1 y_s`
    pub vector: Vector,
    pub prior_info: Matrix,
    pub prior_mean: Vector,
}

impl NodeTerms {
    pub fn new(sensor: &SensorModel, measurement: &Vector, prior: &StateEstimate) -> Result<Self> {
        let (info, vector) = sensor.information_terms(measurement)?;
        Ok(Self {
            info,
            vector,
            prior_info: prior.info().clone(),
            prior_mean: prior.mean().clone(),
        })
    }
}

/// Everything the ADMM iteration needs for one measurement step.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmProblemTerms {
    nodes: Vec<NodeTerms>,
    rho: f64,
}

impl AdmmProblemTerms {
    pub fn new(nodes: Vec<NodeTerms>, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ADMM penalty rho must be positive, got {rho}"
            )));
        }
        let Some(first) = nodes.first() else {
            return Err(Error::InvalidParameter("ADMM needs at least one node".into()));
        };
        let m = first.prior_mean.len();
        for (s, n) in nodes.iter().enumerate() {
            check_square(&n.info, m, &format!("A_s of node {s}"))?;
            check_square(&n.prior_info, m, &format!("prior information of node {s}"))?;
            if n.vector.len() != m || n.prior_mean.len() != m {
                return Err(Error::dims(format!("terms of node {s}"), m, n.vector.len()));
            }
            if !is_symmetric(&n.info) || !is_positive_semidefinite(&n.info) {
                return Err(Error::NotPositiveSemidefinite(format!("A_s of node {s}")));
            }
            check_spd(&n.prior_info, &format!("prior information of node {s}"))?;
        }
        Ok(Self { nodes, rho })
    }

    /// Terms from per-node priors, sensors and measurements.
    pub fn from_measurements(
        priors: &[StateEstimate],
        sensors: &[SensorModel],
        measurements: &[Vector],
        rho: f64,
    ) -> Result<Self> {
        if priors.len() != sensors.len() || sensors.len() != measurements.len() {
            return Err(Error::dims(
                "priors / sensors / measurements per node",
                priors.len(),
                format!("{} / {}", sensors.len(), measurements.len()),
            ));
        }
        let nodes = priors
            .iter()
            .zip(sensors)
            .zip(measurements)
            .map(|((p, s), y)| NodeTerms::new(s, y, p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(nodes, rho)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn with_rho(mut self, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ADMM penalty rho must be positive, got {rho}"
            )));
        }
        self.rho = rho;
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn state_dim(&self) -> usize {
        self.nodes[0].prior_mean.len()
    }

    pub fn nodes(&self) -> &[NodeTerms] {
        &self.nodes
    }

    /// Minimizer of `Σ_s f_s(x)` over a common `x`:
    /// `(Σ A_s + Σ Ω_s/J)^-1 (Σ b_s + Σ Ω_s x̂_s / J)`.
    pub fn centralized_solution(&self) -> Result<Vector> {
        let m = self.state_dim();
        let j = self.node_count() as f64;
        let mut normal = Matrix::zeros(m, m);
        let mut rhs = Vector::zeros(m);
        for n in &self.nodes {
            normal += &n.info + &n.prior_info / j;
            rhs += &n.vector + (&n.prior_info * &n.prior_mean) / j;
        }
        crate::linalg::spd_solve(&normal, &rhs, "centralized normal matrix")
    }

    /// `ρ = tr(mean A_s) / (2 D_max)`; the default penalty for randomized
    /// desk-scale instances.
    pub fn suggested_rho(&self, topo: &NetworkTopology) -> f64 {
        let j = self.node_count() as f64;
        let mean_trace: f64 = self.nodes.iter().map(|n| n.info.trace()).sum::<f64>() / j;
        mean_trace / (2.0 * topo.max_degree().max(1) as f64)
    }

    fn check_against(&self, topo: &NetworkTopology) -> Result<()> {
        if topo.node_count() != self.node_count() {
            return Err(Error::dims("nodes in topology", self.node_count(), topo.node_count()));
        }
        Ok(())
    }
}

/// Which `x` snapshot feeds the multiplier update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DualIndexing {
    /// `λ^l` from `x^{l-1}` and `x^l` from `λ^{l-1}`; a pure synchronous map
    /// of snapshot `l-1`.
    #[default]
    Previous,
    /// `x^l` from `λ^{l-1}` first, then `λ^l` from the fresh `x^l`.
    Current,
}

#[derive(Debug, Clone, Default)]
pub struct AdmmOptions {
    /// Keep every snapshot `l = 0..=L`.
    pub record_history: bool,
    pub dual_indexing: DualIndexing,
    /// Centralized solution; enables trace rows.
    pub reference: Option<Vector>,
}

/// One diagnostic row: iteration, node, distance to the reference, and the
/// node's local disagreement `Σ_{j∈N(s)} |x_s - x_j|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub node: usize,
    pub error: f64,
    pub disagreement: f64,
}

#[derive(Debug, Clone)]
pub struct AdmmOutcome {
    pub states: Vec<AdmmNodeState>,
    pub history: Option<Vec<Vec<AdmmNodeState>>>,
    pub trace: Vec<TraceRow>,
}

impl AdmmOutcome {
    pub fn estimates(&self) -> Vec<Vector> {
        self.states.iter().map(|s| s.x.clone()).collect()
    }
}

/// Per-node factorized normal matrices and constant right-hand sides.
struct LocalSolver {
    factors: Vec<Cholesky<f64, Dyn>>,
    constants: Vec<Vector>,
    rho: f64,
}

impl LocalSolver {
    fn new(terms: &AdmmProblemTerms, topo: &NetworkTopology) -> Result<Self> {
        terms.check_against(topo)?;
        let j = terms.node_count() as f64;
        let rho = terms.rho;
        let mut factors = Vec::with_capacity(terms.node_count());
        let mut constants = Vec::with_capacity(terms.node_count());
        for (s, n) in terms.nodes.iter().enumerate() {
            let weighted_prior = &n.prior_info / j;
            let mut normal = n.info.clone() + &weighted_prior;
            let penalty = 2.0 * rho * topo.neighbors_of(s).len() as f64;
            for i in 0..normal.nrows() {
                normal[(i, i)] += penalty;
            }
            let chol = cholesky(&normal)
                .ok_or_else(|| Error::Singular(format!("ADMM local normal matrix of node {s}")))?;
            factors.push(chol);
            constants.push(&n.vector + &weighted_prior * &n.prior_mean);
        }
        Ok(Self {
            factors,
            constants,
            rho,
        })
    }

    fn solve_x(&self, topo: &NetworkTopology, xs: &[&Vector], lambdas: &[&Vector]) -> Vec<Vector> {
        (0..xs.len())
            .map(|s| {
                let mut rhs = self.constants[s].clone();
                rhs.axpy(-2.0, lambdas[s], 1.0);
                for &j in topo.neighbors_of(s) {
                    rhs.axpy(self.rho, xs[s], 1.0);
                    rhs.axpy(self.rho, xs[j], 1.0);
                }
                self.factors[s].solve(&rhs)
            })
            .collect()
    }
}

fn lambda_update(topo: &NetworkTopology, xs: &[&Vector], lambdas: &[&Vector], rho: f64) -> Vec<Vector> {
    (0..xs.len())
        .map(|s| {
            let mut diff = Vector::zeros(xs[s].len());
            for &j in topo.neighbors_of(s) {
                diff += xs[s] - xs[j];
            }
            let mut out = lambdas[s].clone();
            out.axpy(0.5 * rho, &diff, 1.0);
            out
        })
        .collect()
}

fn check_states(terms: &AdmmProblemTerms, states: &[AdmmNodeState]) -> Result<()> {
    if states.len() != terms.node_count() {
        return Err(Error::dims("ADMM node states", terms.node_count(), states.len()));
    }
    let m = terms.state_dim();
    for (s, st) in states.iter().enumerate() {
        if st.x.len() != m || st.lambda.len() != m {
            return Err(Error::dims(format!("ADMM state of node {s}"), m, st.x.len()));
        }
    }
    Ok(())
}

/// New local iterates `x^l` for every node from the `l-1` snapshot.
pub fn admm_x_update(
    terms: &AdmmProblemTerms,
    topo: &NetworkTopology,
    states: &[AdmmNodeState],
) -> Result<Vec<Vector>> {
    check_states(terms, states)?;
    let solver = LocalSolver::new(terms, topo)?;
    let xs: Vec<_> = states.iter().map(|s| &s.x).collect();
    let ls: Vec<_> = states.iter().map(|s| &s.lambda).collect();
    Ok(solver.solve_x(topo, &xs, &ls))
}

/// New aggregate multipliers `λ^l` for every node from the `l-1` snapshot.
pub fn admm_lambda_update(
    topo: &NetworkTopology,
    states: &[AdmmNodeState],
    rho: f64,
) -> Result<Vec<Vector>> {
    if states.len() != topo.node_count() {
        return Err(Error::dims("ADMM node states", topo.node_count(), states.len()));
    }
    let xs: Vec<_> = states.iter().map(|s| &s.x).collect();
    let ls: Vec<_> = states.iter().map(|s| &s.lambda).collect();
    Ok(lambda_update(topo, &xs, &ls, rho))
}

/// Runs `iterations` ADMM iterations from `initial_x` with zero multipliers.
pub fn admm_run(
    terms: &AdmmProblemTerms,
    topo: &NetworkTopology,
    initial_x: &[Vector],
    iterations: usize,
    options: &AdmmOptions,
) -> Result<AdmmOutcome> {
    let states: Vec<_> = initial_x.iter().cloned().map(AdmmNodeState::initial).collect();
    admm_run_from(terms, topo, states, iterations, options)
}

/// Runs `iterations` ADMM iterations from arbitrary states.
pub fn admm_run_from(
    terms: &AdmmProblemTerms,
    topo: &NetworkTopology,
    mut states: Vec<AdmmNodeState>,
    iterations: usize,
    options: &AdmmOptions,
) -> Result<AdmmOutcome> {
    check_states(terms, &states)?;
    let solver = LocalSolver::new(terms, topo)?;
    if let Some(r) = &options.reference {
        if r.len() != terms.state_dim() {
            return Err(Error::dims("ADMM trace reference", terms.state_dim(), r.len()));
        }
    }

    let mut history = options.record_history.then(|| vec![states.clone()]);
    let mut trace = Vec::new();
    if let Some(r) = &options.reference {
        push_trace(&mut trace, 0, topo, &states, r);
    }

    for l in 1..=iterations {
        let xs: Vec<_> = states.iter().map(|s| &s.x).collect();
        let ls: Vec<_> = states.iter().map(|s| &s.lambda).collect();
        let next: Vec<AdmmNodeState> = match options.dual_indexing {
            DualIndexing::Previous => {
                let lambdas = lambda_update(topo, &xs, &ls, solver.rho);
                let new_x = solver.solve_x(topo, &xs, &ls);
                new_x
                    .into_iter()
                    .zip(lambdas)
                    .map(|(x, lambda)| AdmmNodeState { x, lambda })
                    .collect()
            }
            DualIndexing::Current => {
                let new_x = solver.solve_x(topo, &xs, &ls);
                let fresh: Vec<_> = new_x.iter().collect();
                let lambdas = lambda_update(topo, &fresh, &ls, solver.rho);
                new_x
                    .into_iter()
                    .zip(lambdas)
                    .map(|(x, lambda)| AdmmNodeState { x, lambda })
                    .collect()
            }
        };
        for (s, st) in next.iter().enumerate() {
            let norm = st.x.norm();
            if !norm.is_finite() || norm > DIVERGENCE_THRESHOLD {
                return Err(Error::Divergence {
                    rho: solver.rho,
                    iteration: l,
                    node: s,
                });
            }
        }
        states = next;
        if let Some(h) = history.as_mut() {
            h.push(states.clone());
        }
        if let Some(r) = &options.reference {
            push_trace(&mut trace, l, topo, &states, r);
        }
    }

    Ok(AdmmOutcome {
        states,
        history,
        trace,
    })
}

fn push_trace(
    trace: &mut Vec<TraceRow>,
    iteration: usize,
    topo: &NetworkTopology,
    states: &[AdmmNodeState],
    reference: &Vector,
) {
    for (s, st) in states.iter().enumerate() {
        let disagreement = topo
            .neighbors_of(s)
            .iter()
            .map(|&j| (&st.x - &states[j].x).norm())
            .sum();
        trace.push(TraceRow {
            iteration,
            node: s,
            error: (&st.x - reference).norm(),
            disagreement,
        });
    }
}

/// Writes trace rows as CSV with header `l,s,error,disagreement`.
pub fn write_trace_csv<W: Write>(mut out: W, rows: &[TraceRow]) -> std::io::Result<()> {
    writeln!(out, "l,s,error,disagreement")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.iteration, r.node, r.error, r.disagreement)?;
    }
    Ok(())
}

/// `Σ_s Σ_{j∈N(s)} |x_s - x_j|`, each edge counted in both directions.
pub fn disagreement(topo: &NetworkTopology, xs: &[Vector]) -> f64 {
    (0..xs.len())
        .map(|s| {
            topo.neighbors_of(s)
                .iter()
                .map(|&j| (&xs[s] - &xs[j]).norm())
                .sum::<f64>()
        })
        .sum()
}

/// Auxiliary edge variable `z_{s,j} = (x_s + x_j) / 2` at a snapshot.
pub fn edge_midpoint(states: &[AdmmNodeState], s: usize, j: usize) -> Vector {
    (&states[s].x + &states[j].x) * 0.5
}

fn check_epsilon(topo: &NetworkTopology, epsilon: f64) -> Result<()> {
    let dmax = topo.max_degree();
    let ok = epsilon > 0.0 && (dmax == 0 || epsilon < 1.0 / dmax as f64);
    if !ok {
        return Err(Error::InvalidParameter(format!(
            "average-consensus rate epsilon = {epsilon} must lie in (0, 1/D_max) with D_max = {dmax}"
        )));
    }
    Ok(())
}

/// One average-consensus step `S_s + ε Σ_{j∈N(s)} (S_j - S_s)` for all nodes.
pub fn ac_step(topo: &NetworkTopology, values: &[Matrix], epsilon: f64) -> Result<Vec<Matrix>> {
    check_epsilon(topo, epsilon)?;
    check_ac_values(topo, values)?;
    Ok(diffuse(topo, values, epsilon))
}

/// `steps` applications of [`ac_step`].
pub fn ac_run(topo: &NetworkTopology, initial: &[Matrix], epsilon: f64, steps: usize) -> Result<Vec<Matrix>> {
    check_epsilon(topo, epsilon)?;
    check_ac_values(topo, initial)?;
    let mut values = initial.to_vec();
    for _ in 0..steps {
        values = diffuse(topo, &values, epsilon);
    }
    Ok(values)
}

fn check_ac_values(topo: &NetworkTopology, values: &[Matrix]) -> Result<()> {
    if values.len() != topo.node_count() {
        return Err(Error::dims("average-consensus values", topo.node_count(), values.len()));
    }
    if let Some(first) = values.first() {
        if let Some((s, v)) = values.iter().enumerate().find(|(_, v)| v.shape() != first.shape()) {
            return Err(Error::dims(
                format!("average-consensus value of node {s}"),
                format!("{:?}", first.shape()),
                format!("{:?}", v.shape()),
            ));
        }
    }
    Ok(())
}

fn diffuse(topo: &NetworkTopology, values: &[Matrix], epsilon: f64) -> Vec<Matrix> {
    (0..values.len())
        .map(|s| {
            let mut out = values[s].clone();
            for &j in topo.neighbors_of(s) {
                out += (&values[j] - &values[s]) * epsilon;
            }
            out
        })
        .collect()
}
