//! Reliability-aware IDLMS.
//!
//! Phase 1 runs plain IDLMS at `mu_max` for `ls` cycles while every node
//! keeps its raw `(u, d)` pairs. Once the ring holds `psi_ref` (the estimate
//! after the last node of cycle `ls`), each node computes residuals
//! `n_k(i) = d_k(i) - u_{k,i} psi_ref` over its buffer, estimates its noise
//! variance from them, and fixes its step size at
//! `mu_k = mu_max * exp(-a * sigma_k)`. Phase 2 continues the ring from
//! `psi_ref` with these per-node step sizes on fresh samples.

use crate::datagen::{ModelParams, SampleStream};
use crate::incremental::{run_engine, run_idlms, StepSizeProfile, Trajectory};
use crate::{dot, Error, Result};

/// How the residual spread is turned into a variance estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceNormalization {
    /// Sample variance, `(1/Ls) * sum (n - g)^2`.
    #[default]
    Normalized,
    /// Plain sum of squared deviations, `sum (n - g)^2`. Grows with `Ls`
    /// and drives every step size towards zero for long warm-ups.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReliabilityConfig {
    pub ls: usize,
    pub a: f64,
    pub mu_max: f64,
    pub normalization: VarianceNormalization,
}

impl ReliabilityConfig {
    pub fn new(ls: usize, a: f64, mu_max: f64) -> Result<Self> {
        let cfg = ReliabilityConfig {
            ls,
            a,
            mu_max,
            normalization: VarianceNormalization::Normalized,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_normalization(mut self, normalization: VarianceNormalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.ls == 0 {
            return Err(Error::config("ls", "must be at least 1"));
        }
        if !(self.a.is_finite() && self.a >= 0.0) {
            return Err(Error::config(
                "a",
                format!("must be non-negative, got {}", self.a),
            ));
        }
        if !(self.mu_max.is_finite() && self.mu_max > 0.0) {
            return Err(Error::config(
                "mu_max",
                format!("must be positive, got {}", self.mu_max),
            ));
        }
        Ok(())
    }
}

/// Samples one node kept during phase 1.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeBuffer {
    dim: usize,
    regressors: Vec<f64>,
    measurements: Vec<f64>,
}

impl NodeBuffer {
    pub fn new(dim: usize) -> Self {
        NodeBuffer {
            dim,
            regressors: Vec::new(),
            measurements: Vec::new(),
        }
    }

    pub fn push(&mut self, u: &[f64], d: f64) {
        assert_eq!(
            u.len(),
            self.dim,
            "regressor length differs from buffer dim"
        );
        self.regressors.extend_from_slice(u);
        self.measurements.push(d);
    }

    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.regressors
            .chunks_exact(self.dim)
            .zip(self.measurements.iter().copied())
    }
}

#[derive(Debug, Clone)]
pub struct Phase1Output {
    /// Estimate held after the last node of cycle `ls`.
    pub psi_ref: Vec<f64>,
    /// One buffer per node, `ls` samples each.
    pub buffers: Vec<NodeBuffer>,
    /// Phase-1 trajectory (cycles `0..ls`).
    pub trajectory: Trajectory,
}

/// Runs `ls` cycles of IDLMS at `mu_max` and buffers every node's samples.
pub fn run_phase1(
    params: &ModelParams,
    stream: &SampleStream,
    cfg: &ReliabilityConfig,
) -> Result<Phase1Output> {
    cfg.validate()?;
    if stream.n_cycles() < cfg.ls {
        return Err(Error::config(
            "ls",
            format!(
                "phase 1 needs {} cycles but the stream holds {}",
                cfg.ls,
                stream.n_cycles()
            ),
        ));
    }
    let trajectory = run_idlms(params, stream, cfg.mu_max, cfg.ls)?;
    let psi_ref = trajectory
        .final_estimate()
        .expect("phase 1 ran at least one cycle")
        .to_vec();
    let buffers = (0..params.n_nodes())
        .map(|k| {
            let mut buf = NodeBuffer::new(params.dim());
            for i in 0..cfg.ls {
                buf.push(stream.regressor(i, k), stream.measurement(i, k));
            }
            buf
        })
        .collect();
    Ok(Phase1Output {
        psi_ref,
        buffers,
        trajectory,
    })
}

/// `n(i) = d(i) - u_i psi_ref` for each buffered sample.
pub fn compute_residuals(buffer: &NodeBuffer, psi_ref: &[f64]) -> Result<Vec<f64>> {
    if buffer.is_empty() {
        return Err(Error::Contract("residuals of an empty buffer".into()));
    }
    if buffer.dim() != psi_ref.len() {
        return Err(Error::Contract(format!(
            "buffer dim {} does not match estimate length {}",
            buffer.dim(),
            psi_ref.len()
        )));
    }
    Ok(buffer.iter().map(|(u, d)| d - dot(u, psi_ref)).collect())
}

/// Residual mean and spread for one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseEstimate {
    pub residuals: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
}

impl NoiseEstimate {
    pub fn from_residuals(
        residuals: Vec<f64>,
        normalization: VarianceNormalization,
    ) -> Result<Self> {
        let (mean, variance) = estimate_noise_stats_with(&residuals, normalization)?;
        Ok(NoiseEstimate {
            residuals,
            mean,
            variance,
        })
    }
}

/// Mean `g` and normalized spread `(1/Ls) * sum (n - g)^2` of the residuals.
pub fn estimate_noise_stats(residuals: &[f64]) -> Result<(f64, f64)> {
    estimate_noise_stats_with(residuals, VarianceNormalization::Normalized)
}

pub fn estimate_noise_stats_with(
    residuals: &[f64],
    normalization: VarianceNormalization,
) -> Result<(f64, f64)> {
    if residuals.is_empty() {
        return Err(Error::Contract("noise statistics of no residuals".into()));
    }
    let ls = residuals.len() as f64;
    let mean = residuals.iter().sum::<f64>() / ls;
    let spread: f64 = residuals.iter().map(|n| (n - mean) * (n - mean)).sum();
    let variance = match normalization {
        VarianceNormalization::Normalized => spread / ls,
        VarianceNormalization::Literal => spread,
    };
    Ok((mean, variance))
}

/// `mu_max * exp(-a * sigma)`.
pub fn map_step_size(sigma: f64, cfg: &ReliabilityConfig) -> f64 {
    debug_assert!(sigma >= 0.0);
    cfg.mu_max * (-cfg.a * sigma).exp()
}

/// Continues the ring from `psi_start` over `cycles` with per-node steps.
pub fn run_phase2(
    params: &ModelParams,
    stream: &SampleStream,
    psi_start: &[f64],
    profile: &StepSizeProfile,
    cycles: std::ops::Range<usize>,
) -> Result<Trajectory> {
    run_engine(params, stream, psi_start, profile, cycles)
}

/// What one node ended up with after phase 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeDiagnostics {
    pub node_id: usize,
    pub sigma2_true: f64,
    pub sigma2_est: f64,
    pub mu: f64,
}

#[derive(Debug, Clone)]
pub struct ProposedRun {
    /// All `n_cycles` cycles; phase 2 starts at index `ls`.
    pub trajectory: Trajectory,
    pub diagnostics: Vec<NodeDiagnostics>,
    pub profile: StepSizeProfile,
}

/// Per-node variance estimates and step sizes from a finished phase 1.
pub fn assign_step_sizes(
    params: &ModelParams,
    phase1: &Phase1Output,
    cfg: &ReliabilityConfig,
) -> Result<(StepSizeProfile, Vec<NodeDiagnostics>)> {
    let mut mus = Vec::with_capacity(params.n_nodes());
    let mut diagnostics = Vec::with_capacity(params.n_nodes());
    for (k, buffer) in phase1.buffers.iter().enumerate() {
        let residuals = compute_residuals(buffer, &phase1.psi_ref)?;
        let (_, sigma) = estimate_noise_stats_with(&residuals, cfg.normalization)?;
        let mu = map_step_size(sigma, cfg);
        mus.push(mu);
        diagnostics.push(NodeDiagnostics {
            node_id: k,
            sigma2_true: params.node_variances()[k],
            sigma2_est: sigma,
            mu,
        });
    }
    Ok((StepSizeProfile::new(mus, cfg.mu_max)?, diagnostics))
}

/// Both phases end to end over `n_cycles` cycles of `stream`.
pub fn run_proposed(
    params: &ModelParams,
    stream: &SampleStream,
    cfg: &ReliabilityConfig,
    n_cycles: usize,
) -> Result<ProposedRun> {
    cfg.validate()?;
    if n_cycles <= cfg.ls {
        return Err(Error::config(
            "ls/n_cycles",
            format!("n_cycles ({n_cycles}) must exceed ls ({})", cfg.ls),
        ));
    }
    let phase1 = run_phase1(params, stream, cfg)?;
    let (profile, diagnostics) = assign_step_sizes(params, &phase1, cfg)?;
    let phase2 = run_phase2(params, stream, &phase1.psi_ref, &profile, cfg.ls..n_cycles)?;
    let mut trajectory = phase1.trajectory;
    trajectory.extend(&phase2)?;
    Ok(ProposedRun {
        trajectory,
        diagnostics,
        profile,
    })
}
