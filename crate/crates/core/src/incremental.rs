//! The incremental ring engine.
//!
//! Within cycle `i` the estimate starts at `w_{i-1}`, visits nodes `0..N` in
//! ascending order, and each node applies
//!
//! ```text
//! psi_k = psi_{k-1} + mu_k * u_{k,i}^T * (d_k(i) - u_{k,i} psi_{k-1})
//! ```
//!
//! The estimate left by the last node is `w_i`. This is steepest descent on
//! the instantaneous cost `|d - u psi|^2`, so the correction is *added*. A
//! literal transcription that subtracts it diverges.
//!
//! The same engine runs the plain algorithm (uniform profile) and the
//! reliability-weighted phase (per-node profile).

use std::ops::Range;

use crate::datagen::{CycleSamples, ModelParams, SampleStream};
use crate::metrics::{msd, MsdCurve, MsdMode};
use crate::{dot, Error, Result};

/// Per-node step sizes `mu_k`, indexed by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSizeProfile {
    mu: Vec<f64>,
}

impl StepSizeProfile {
    /// Same step size at every node.
    pub fn uniform(n_nodes: usize, mu: f64) -> Result<Self> {
        Self::new(vec![mu; n_nodes], mu)
    }

    /// Fails unless every entry lies in `[0, mu_max]`.
    pub fn new(mu: Vec<f64>, mu_max: f64) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::config("n_nodes", "step-size profile is empty"));
        }
        if !(mu_max.is_finite() && mu_max >= 0.0) {
            return Err(Error::config("mu_max", format!("invalid value {mu_max}")));
        }
        if let Some((k, m)) = mu
            .iter()
            .enumerate()
            .find(|(_, m)| !(**m >= 0.0 && **m <= mu_max))
        {
            return Err(Error::config(
                "mu",
                format!("step size {m} of node {k} outside [0, {mu_max}]"),
            ));
        }
        Ok(StepSizeProfile { mu })
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.mu
    }
}

/// One LMS correction at a single node, in place.
///
/// # Panics
/// If `psi` and `u` differ in length.
#[inline]
pub fn lms_node_update_in_place(psi: &mut [f64], u: &[f64], d: f64, mu_k: f64) {
    assert_eq!(psi.len(), u.len(), "estimate and regressor lengths differ");
    let gain = mu_k * (d - dot(u, psi));
    for (p, x) in psi.iter_mut().zip(u) {
        *p += gain * x;
    }
}

/// Returns `psi_in + mu_k * u^T * (d - u psi_in)`.
///
/// # Panics
/// If `psi_in` and `u` differ in length.
pub fn lms_node_update(psi_in: &[f64], u: &[f64], d: f64, mu_k: f64) -> Vec<f64> {
    let mut psi = psi_in.to_vec();
    lms_node_update_in_place(&mut psi, u, d, mu_k);
    psi
}

fn sweep<F: FnMut(usize, &[f64])>(
    psi: &mut [f64],
    samples: CycleSamples<'_>,
    profile: &StepSizeProfile,
    mut before_update: F,
) {
    for (k, &mu_k) in profile.as_slice().iter().enumerate() {
        let (u, d) = samples.get(k);
        before_update(k, psi);
        lms_node_update_in_place(psi, u, d, mu_k);
    }
}

fn check_cycle(dim: usize, samples: &CycleSamples<'_>, profile: &StepSizeProfile) -> Result<()> {
    if samples.len() != profile.len() {
        return Err(Error::Contract(format!(
            "cycle carries {} samples for a ring of {} nodes",
            samples.len(),
            profile.len()
        )));
    }
    if samples.dim() != dim {
        return Err(Error::Contract(format!(
            "regressor length {} does not match estimate length {dim}",
            samples.dim()
        )));
    }
    Ok(())
}

/// One full pass around the ring, seeded with `w_prev`. Returns `w_i`.
pub fn run_cycle(
    w_prev: &[f64],
    samples: CycleSamples<'_>,
    profile: &StepSizeProfile,
) -> Result<Vec<f64>> {
    check_cycle(w_prev.len(), &samples, profile)?;
    let mut psi = w_prev.to_vec();
    sweep(&mut psi, samples, profile, |_, _| {});
    Ok(psi)
}

/// Cycle-by-cycle record of a run.
///
/// For every cycle it keeps the cycle-final estimate `w_i` and, for every
/// node, the squared deviation `||w_o - psi_{k-1}||^2` of the estimate the
/// node received before updating it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    n_nodes: usize,
    dim: usize,
    estimates: Vec<f64>,
    node_deviations: Vec<f64>,
}

impl Trajectory {
    fn with_capacity(n_nodes: usize, dim: usize, cycles: usize) -> Self {
        Trajectory {
            n_nodes,
            dim,
            estimates: Vec::with_capacity(cycles * dim),
            node_deviations: Vec::with_capacity(cycles * n_nodes),
        }
    }

    pub fn len(&self) -> usize {
        self.estimates.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Network estimate `w_i` after cycle `i` (0-based within this record).
    pub fn estimate(&self, cycle: usize) -> &[f64] {
        &self.estimates[cycle * self.dim..(cycle + 1) * self.dim]
    }

    pub fn final_estimate(&self) -> Option<&[f64]> {
        (!self.is_empty()).then(|| self.estimate(self.len() - 1))
    }

    /// Squared deviation of the estimate node `node` received in `cycle`.
    pub fn node_deviation(&self, cycle: usize, node: usize) -> f64 {
        self.node_deviations[cycle * self.n_nodes + node]
    }

    /// Appends the cycles of `other`.
    pub fn extend(&mut self, other: &Trajectory) -> Result<()> {
        if other.n_nodes != self.n_nodes || other.dim != self.dim {
            return Err(Error::Contract(
                "cannot join trajectories of different shapes".into(),
            ));
        }
        self.estimates.extend_from_slice(&other.estimates);
        self.node_deviations
            .extend_from_slice(&other.node_deviations);
        Ok(())
    }

    /// Per-cycle MSD. Node-averaged mode sums the node deviations in node
    /// order and divides by `N`.
    pub fn msd_curve(&self, mode: MsdMode) -> Result<MsdCurve> {
        let values = match mode {
            MsdMode::NodeAveraged => self
                .node_deviations
                .chunks_exact(self.n_nodes)
                .map(|row| row.iter().sum::<f64>() / self.n_nodes as f64)
                .collect(),
            MsdMode::SingleNode(node) => {
                if node >= self.n_nodes {
                    return Err(Error::config(
                        "msd_node",
                        format!("node {node} does not exist in a ring of {}", self.n_nodes),
                    ));
                }
                (0..self.len())
                    .map(|i| self.node_deviation(i, node))
                    .collect()
            }
        };
        MsdCurve::new(values)
    }
}

/// Runs the ring over `cycles` of `stream`, starting from `start`, recording
/// the trajectory against `params.w_o()`.
pub fn run_engine(
    params: &ModelParams,
    stream: &SampleStream,
    start: &[f64],
    profile: &StepSizeProfile,
    cycles: Range<usize>,
) -> Result<Trajectory> {
    let n = params.n_nodes();
    let m = params.dim();
    if stream.n_nodes() != n || stream.dim() != m {
        return Err(Error::Contract(format!(
            "stream shape (N={}, M={}) does not match model (N={n}, M={m})",
            stream.n_nodes(),
            stream.dim()
        )));
    }
    if start.len() != m {
        return Err(Error::Contract(format!(
            "start estimate has length {}, expected {m}",
            start.len()
        )));
    }
    if profile.len() != n {
        return Err(Error::Contract(format!(
            "profile has {} entries for {n} nodes",
            profile.len()
        )));
    }
    if cycles.end > stream.n_cycles() {
        return Err(Error::config(
            "n_cycles",
            format!(
                "stream holds {} cycles but cycle {} was requested",
                stream.n_cycles(),
                cycles.end
            ),
        ));
    }
    let w_o = params.w_o();
    let mut traj = Trajectory::with_capacity(n, m, cycles.len());
    let mut psi = start.to_vec();
    for i in cycles {
        sweep(&mut psi, stream.cycle(i), profile, |_, before| {
            traj.node_deviations.push(msd(before, w_o));
        });
        traj.estimates.extend_from_slice(&psi);
    }
    Ok(traj)
}

/// Plain IDLMS from `w_{-1} = 0` with a single step size `mu` at every node.
pub fn run_idlms(
    params: &ModelParams,
    stream: &SampleStream,
    mu: f64,
    n_cycles: usize,
) -> Result<Trajectory> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::config(
            "mu_max",
            format!("must be positive, got {mu}"),
        ));
    }
    if n_cycles == 0 {
        return Err(Error::config("n_cycles", "must be at least 1"));
    }
    let profile = StepSizeProfile::uniform(params.n_nodes(), mu)?;
    run_engine(
        params,
        stream,
        &vec![0.0; params.dim()],
        &profile,
        0..n_cycles,
    )
}
