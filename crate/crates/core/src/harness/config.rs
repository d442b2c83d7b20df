//! Experiment configuration: `key = value` text, presets, CLI overrides.
//!
//! Every key maps one-to-one onto an [`ExperimentConfig`] field. Blank lines
//! and lines starting with `#` are ignored, so a run manifest (which starts
//! with the config echo and keeps everything else in comments) is itself a
//! valid config file.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::metrics::{MsdMode, DEFAULT_TAIL_FRACTION, DEFAULT_THRESHOLD_FACTOR};
use crate::reliability::{ReliabilityConfig, VarianceNormalization};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Ls,
    A,
    NNodes,
}

impl SweepAxis {
    pub fn key(self) -> &'static str {
        match self {
            SweepAxis::Ls => "ls",
            SweepAxis::A => "a",
            SweepAxis::NNodes => "n_nodes",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "ls" => Some(SweepAxis::Ls),
            "a" => Some(SweepAxis::A),
            "n_nodes" | "n" => Some(SweepAxis::NNodes),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_nodes: usize,
    pub dim: usize,
    pub mu_max: f64,
    pub a: f64,
    pub ls: usize,
    pub variance_low: f64,
    pub variance_high: f64,
    pub n_cycles: usize,
    pub n_runs: usize,
    pub master_seed: u64,
    pub msd_mode: MsdMode,
    pub variance_normalization: VarianceNormalization,
    pub tail_fraction: f64,
    pub threshold_factor: f64,
    pub sweep_axis: Option<SweepAxis>,
    pub sweep_values: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_nodes: 30,
            dim: 4,
            mu_max: 0.01,
            a: 10.0,
            ls: 20,
            variance_low: 1e-3,
            variance_high: 1e-1,
            n_cycles: 2000,
            n_runs: 100,
            master_seed: 1,
            msd_mode: MsdMode::NodeAveraged,
            variance_normalization: VarianceNormalization::Normalized,
            tail_fraction: DEFAULT_TAIL_FRACTION,
            threshold_factor: DEFAULT_THRESHOLD_FACTOR,
            sweep_axis: None,
            sweep_values: Vec::new(),
        }
    }
}

pub const PRESETS: [&str; 5] = ["fig2", "fig3", "fig4", "fig5", "fig6"];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("expected {what}, got `{value}`")))
}

impl ExperimentConfig {
    /// Named parameter sets for the standard comparisons.
    ///
    /// `fig2`/`fig3` are the default paired comparison; `fig4` sweeps `ls`,
    /// `fig5` sweeps `a`, `fig6` sweeps the node count.
    pub fn preset(name: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        match name {
            "fig2" | "fig3" => {}
            "fig4" => {
                cfg.sweep_axis = Some(SweepAxis::Ls);
                cfg.sweep_values = vec![5.0, 10.0, 20.0, 50.0];
            }
            "fig5" => {
                cfg.sweep_axis = Some(SweepAxis::A);
                cfg.sweep_values = vec![0.0, 5.0, 10.0, 20.0];
            }
            "fig6" => {
                cfg.sweep_axis = Some(SweepAxis::NNodes);
                cfg.sweep_values = vec![10.0, 20.0, 30.0, 40.0];
            }
            other => {
                return Err(Error::config(
                    "preset",
                    format!(
                        "unknown preset `{other}`, expected one of {}",
                        PRESETS.join(", ")
                    ),
                ))
            }
        }
        Ok(cfg)
    }

    /// Assigns one key from its text form. Does not run cross-field checks.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "n_nodes" => self.n_nodes = parse_num(key, value, "a positive integer")?,
            "dim" => self.dim = parse_num(key, value, "a positive integer")?,
            "mu_max" => self.mu_max = parse_num(key, value, "a real number")?,
            "a" => self.a = parse_num(key, value, "a real number")?,
            "ls" => self.ls = parse_num(key, value, "a positive integer")?,
            "variance_low" => self.variance_low = parse_num(key, value, "a real number")?,
            "variance_high" => self.variance_high = parse_num(key, value, "a real number")?,
            "n_cycles" => self.n_cycles = parse_num(key, value, "a positive integer")?,
            "n_runs" => self.n_runs = parse_num(key, value, "a positive integer")?,
            "master_seed" => {
                self.master_seed = parse_num(key, value, "an unsigned 64-bit integer")?
            }
            "msd_mode" => {
                self.msd_mode = match value {
                    "node-averaged" => MsdMode::NodeAveraged,
                    "single-node" => match self.msd_mode {
                        MsdMode::SingleNode(k) => MsdMode::SingleNode(k),
                        MsdMode::NodeAveraged => MsdMode::SingleNode(0),
                    },
                    _ => {
                        return Err(Error::config(
                            key,
                            format!("expected `node-averaged` or `single-node`, got `{value}`"),
                        ))
                    }
                }
            }
            "msd_node" => {
                let node = parse_num(key, value, "a node index")?;
                self.msd_mode = MsdMode::SingleNode(node);
            }
            "variance_normalization" => {
                self.variance_normalization = match value {
                    "normalized" => VarianceNormalization::Normalized,
                    "literal" => VarianceNormalization::Literal,
                    _ => {
                        return Err(Error::config(
                            key,
                            format!("expected `normalized` or `literal`, got `{value}`"),
                        ))
                    }
                }
            }
            "tail_fraction" => self.tail_fraction = parse_num(key, value, "a real number")?,
            "threshold_factor" => self.threshold_factor = parse_num(key, value, "a real number")?,
            "sweep_axis" => {
                self.sweep_axis = match value {
                    "" | "none" => None,
                    other => Some(SweepAxis::parse(other).ok_or_else(|| {
                        Error::config(
                            key,
                            format!("expected `ls`, `a` or `n_nodes`, got `{other}`"),
                        )
                    })?),
                }
            }
            "sweep_values" => {
                self.sweep_values = if value.is_empty() {
                    Vec::new()
                } else {
                    value
                        .split(',')
                        .map(|v| parse_num(key, v.trim(), "a comma-separated list of numbers"))
                        .collect::<Result<_>>()?
                }
            }
            other => return Err(Error::config(other, "unknown key")),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(
                    format!("line {}", lineno + 1),
                    format!("expected `key = value`, got `{line}`"),
                )
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive_int = |key: &str, v: usize| {
            if v == 0 {
                Err(Error::config(key, "must be at least 1"))
            } else {
                Ok(())
            }
        };
        positive_int("n_nodes", self.n_nodes)?;
        positive_int("dim", self.dim)?;
        positive_int("ls", self.ls)?;
        positive_int("n_cycles", self.n_cycles)?;
        positive_int("n_runs", self.n_runs)?;
        if !(self.mu_max.is_finite() && self.mu_max > 0.0) {
            return Err(Error::config(
                "mu_max",
                format!("must be positive, got {}", self.mu_max),
            ));
        }
        if !(self.a.is_finite() && self.a >= 0.0) {
            return Err(Error::config(
                "a",
                format!("must be non-negative, got {}", self.a),
            ));
        }
        if !(self.variance_low.is_finite() && self.variance_low > 0.0) {
            return Err(Error::config(
                "variance_low",
                format!("must be positive, got {}", self.variance_low),
            ));
        }
        if !(self.variance_high.is_finite() && self.variance_high >= self.variance_low) {
            return Err(Error::config(
                "variance_low/variance_high",
                format!(
                    "need variance_low <= variance_high, got [{}, {}]",
                    self.variance_low, self.variance_high
                ),
            ));
        }
        if self.ls >= self.n_cycles {
            return Err(Error::config(
                "ls/n_cycles",
                format!("n_cycles ({}) must exceed ls ({})", self.n_cycles, self.ls),
            ));
        }
        if let MsdMode::SingleNode(k) = self.msd_mode {
            if k >= self.n_nodes {
                return Err(Error::config(
                    "msd_node",
                    format!("node {k} does not exist in a ring of {}", self.n_nodes),
                ));
            }
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(Error::config(
                "tail_fraction",
                format!("must lie in (0, 1], got {}", self.tail_fraction),
            ));
        }
        if !(self.threshold_factor.is_finite() && self.threshold_factor > 1.0) {
            return Err(Error::config(
                "threshold_factor",
                format!("must exceed 1, got {}", self.threshold_factor),
            ));
        }
        match self.sweep_axis {
            None if !self.sweep_values.is_empty() => {
                return Err(Error::config(
                    "sweep_axis",
                    "sweep_values given without an axis",
                ))
            }
            None => {}
            Some(_) if self.sweep_values.is_empty() => {
                return Err(Error::config(
                    "sweep_values",
                    "sweep axis set but no values given",
                ))
            }
            Some(_) => {
                for &v in &self.sweep_values {
                    self.at_sweep_value(v)?;
                }
            }
        }
        Ok(())
    }

    /// A copy with the sweep axis pinned to `value` and the sweep cleared.
    pub fn at_sweep_value(&self, value: f64) -> Result<Self> {
        let axis = self
            .sweep_axis
            .ok_or_else(|| Error::config("sweep_axis", "no sweep axis configured"))?;
        let mut point = self.clone();
        point.sweep_axis = None;
        point.sweep_values.clear();
        let as_count = |v: f64| -> Result<usize> {
            if v.fract() == 0.0 && v >= 1.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(Error::config(
                    "sweep_values",
                    format!("{} sweep needs positive integers, got {v}", axis.key()),
                ))
            }
        };
        match axis {
            SweepAxis::Ls => point.ls = as_count(value)?,
            SweepAxis::NNodes => point.n_nodes = as_count(value)?,
            SweepAxis::A => point.a = value,
        }
        point.validate()?;
        Ok(point)
    }

    pub fn reliability(&self) -> ReliabilityConfig {
        ReliabilityConfig {
            ls: self.ls,
            a: self.a,
            mu_max: self.mu_max,
            normalization: self.variance_normalization,
        }
    }

    /// `key = value` lines that [`ExperimentConfig::apply_text`] reads back
    /// into an identical config.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        line("n_nodes", self.n_nodes.to_string());
        line("dim", self.dim.to_string());
        line("mu_max", self.mu_max.to_string());
        line("a", self.a.to_string());
        line("ls", self.ls.to_string());
        line("variance_low", self.variance_low.to_string());
        line("variance_high", self.variance_high.to_string());
        line("n_cycles", self.n_cycles.to_string());
        line("n_runs", self.n_runs.to_string());
        line("master_seed", self.master_seed.to_string());
        match self.msd_mode {
            MsdMode::NodeAveraged => line("msd_mode", "node-averaged".into()),
            MsdMode::SingleNode(k) => {
                line("msd_mode", "single-node".into());
                line("msd_node", k.to_string());
            }
        }
        line(
            "variance_normalization",
            match self.variance_normalization {
                VarianceNormalization::Normalized => "normalized",
                VarianceNormalization::Literal => "literal",
            }
            .into(),
        );
        line("tail_fraction", self.tail_fraction.to_string());
        line("threshold_factor", self.threshold_factor.to_string());
        line(
            "sweep_axis",
            self.sweep_axis.map_or("none", SweepAxis::key).into(),
        );
        line(
            "sweep_values",
            self.sweep_values
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        out
    }
}

/// Builds a validated config: `base`, then the file (if any), then the
/// `(key, value)` overrides in order.
pub fn parse_config_with_base(
    base: ExperimentConfig,
    file: Option<&Path>,
    overrides: &[(String, String)],
) -> Result<ExperimentConfig> {
    let mut cfg = base;
    if let Some(path) = file {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        cfg.apply_text(&text)?;
    }
    for (key, value) in overrides {
        cfg.set(key, value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// [`parse_config_with_base`] over the defaults.
pub fn parse_config(
    file: Option<&Path>,
    overrides: &[(String, String)],
) -> Result<ExperimentConfig> {
    parse_config_with_base(ExperimentConfig::default(), file, overrides)
}
