//! Paired Monte-Carlo runs and parameter sweeps.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, SweepAxis};
use crate::datagen::{assign_node_variances, default_w_o, generate_stream, ModelParams};
use crate::incremental::run_idlms;
use crate::metrics::{average_curves, convergence_time_with_tail, steady_state_msd, MsdCurve};
use crate::reliability::{run_proposed, NodeDiagnostics};
use crate::{Error, Result};

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of run `run_index`: `mix(mix(master_seed) ^ run_index)`, where `mix`
/// is the SplitMix64 step. Each run owns a `ChaCha8Rng` seeded with it.
pub fn derive_run_seed(master_seed: u64, run_index: usize) -> u64 {
    mix(mix(master_seed) ^ run_index as u64)
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub index: usize,
    pub seed: u64,
    /// Checksum of the one stream both algorithms consumed.
    pub stream_checksum: String,
    pub idlms: MsdCurve,
    pub proposed: MsdCurve,
    pub diagnostics: Vec<NodeDiagnostics>,
}

/// One paired run: a single variance assignment and a single stream, fed to
/// both plain IDLMS and the reliability-weighted variant.
///
/// The run's random source draws the node variances first, then the stream.
pub fn run_experiment(cfg: &ExperimentConfig, run_index: usize) -> Result<RunOutcome> {
    let seed = derive_run_seed(cfg.master_seed, run_index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let variances =
        assign_node_variances(cfg.n_nodes, cfg.variance_low, cfg.variance_high, &mut rng)?;
    let params = ModelParams::with_identity_covariance(default_w_o(cfg.dim), variances)?;
    let stream = generate_stream(&params, cfg.n_cycles, &mut rng)?;

    let idlms = run_idlms(&params, &stream, cfg.mu_max, cfg.n_cycles)?;
    let proposed = run_proposed(&params, &stream, &cfg.reliability(), cfg.n_cycles)?;

    Ok(RunOutcome {
        index: run_index,
        seed,
        stream_checksum: stream.checksum(),
        idlms: idlms.msd_curve(cfg.msd_mode)?,
        proposed: proposed.trajectory.msd_curve(cfg.msd_mode)?,
        diagnostics: proposed.diagnostics,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub index: usize,
    pub seed: u64,
    pub stream_checksum: String,
}

/// Steady-state level and convergence time of one averaged curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSummary {
    pub steady_state: f64,
    pub convergence_cycles: Option<usize>,
}

impl CurveSummary {
    pub fn of(curve: &MsdCurve, cfg: &ExperimentConfig) -> Result<Self> {
        Ok(CurveSummary {
            steady_state: steady_state_msd(curve, cfg.tail_fraction)?,
            convergence_cycles: convergence_time_with_tail(
                curve,
                cfg.threshold_factor,
                cfg.tail_fraction,
            )?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub config: ExperimentConfig,
    pub idlms: MsdCurve,
    pub proposed: MsdCurve,
    /// Node diagnostics of run 0.
    pub nodes: Vec<NodeDiagnostics>,
    pub runs: Vec<RunRecord>,
    pub idlms_summary: CurveSummary,
    pub proposed_summary: CurveSummary,
    pub elapsed: Duration,
}

/// `n_runs` paired runs, averaged per algorithm in run-index order.
///
/// Runs execute on the rayon pool; results are collected by index before
/// aggregation, so the output does not depend on scheduling.
pub fn run_monte_carlo(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    let started = Instant::now();
    let outcomes: Vec<Result<RunOutcome>> = (0..cfg.n_runs)
        .into_par_iter()
        .map(|index| run_experiment(cfg, index))
        .collect();

    let mut idlms_curves = Vec::with_capacity(cfg.n_runs);
    let mut proposed_curves = Vec::with_capacity(cfg.n_runs);
    let mut runs = Vec::with_capacity(cfg.n_runs);
    let mut nodes = Vec::new();
    for (index, outcome) in outcomes.into_iter().enumerate() {
        let outcome = outcome.map_err(|e| Error::Run {
            index,
            source: Box::new(e),
        })?;
        if index == 0 {
            nodes = outcome.diagnostics;
        }
        runs.push(RunRecord {
            index,
            seed: outcome.seed,
            stream_checksum: outcome.stream_checksum,
        });
        idlms_curves.push(outcome.idlms);
        proposed_curves.push(outcome.proposed);
    }
    let idlms = average_curves(&idlms_curves)?;
    let proposed = average_curves(&proposed_curves)?;
    Ok(RunArtifacts {
        config: cfg.clone(),
        idlms_summary: CurveSummary::of(&idlms, cfg)?,
        proposed_summary: CurveSummary::of(&proposed, cfg)?,
        idlms,
        proposed,
        nodes,
        runs,
        elapsed: started.elapsed(),
    })
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub artifacts: RunArtifacts,
}

/// Ordinal checks over a sweep, evaluated in ascending sweep-value order
/// on the proposed algorithm's averaged curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepChecks {
    pub steady_state_nonincreasing: bool,
    pub convergence_nondecreasing: bool,
}

#[derive(Debug, Clone)]
pub struct SweepArtifacts {
    pub config: ExperimentConfig,
    pub axis: SweepAxis,
    /// Sorted by ascending sweep value.
    pub points: Vec<SweepPoint>,
    pub checks: SweepChecks,
}

/// One Monte-Carlo batch per sweep value, all sharing the master seed.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepArtifacts> {
    cfg.validate()?;
    let axis = cfg
        .sweep_axis
        .ok_or_else(|| Error::config("sweep_axis", "a sweep needs an axis"))?;
    let mut values = cfg.sweep_values.clone();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let points = values
        .iter()
        .map(|&value| {
            let point_cfg = cfg.at_sweep_value(value)?;
            Ok(SweepPoint {
                value,
                artifacts: run_monte_carlo(&point_cfg)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let checks = SweepChecks {
        steady_state_nonincreasing: points.windows(2).all(|w| {
            w[1].artifacts.proposed_summary.steady_state
                <= w[0].artifacts.proposed_summary.steady_state
        }),
        convergence_nondecreasing: points.windows(2).all(|w| {
            match (
                w[0].artifacts.proposed_summary.convergence_cycles,
                w[1].artifacts.proposed_summary.convergence_cycles,
            ) {
                (Some(a), Some(b)) => b >= a,
                (_, None) => true,
                (None, Some(_)) => false,
            }
        }),
    };
    Ok(SweepArtifacts {
        config: cfg.clone(),
        axis,
        points,
        checks,
    })
}
