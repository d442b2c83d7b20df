//! Mean-square deviation and learning-curve summaries.
//!
//! Curves live on the linear scale. Averaging across runs happens there too;
//! decibels are only produced for display and export.

use crate::{Error, Result};

pub const DEFAULT_TAIL_FRACTION: f64 = 0.1;
pub const DEFAULT_THRESHOLD_FACTOR: f64 = 2.0;

/// Which estimate a per-cycle MSD value is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MsdMode {
    /// Mean over all nodes of the deviation of the estimate each node
    /// received within the cycle.
    #[default]
    NodeAveraged,
    /// Deviation of the estimate received by one designated node.
    SingleNode(usize),
}

/// `||w_o - psi||^2`.
///
/// # Panics
/// If the lengths differ.
pub fn msd(psi: &[f64], w_o: &[f64]) -> f64 {
    assert_eq!(
        psi.len(),
        w_o.len(),
        "msd of vectors with different lengths"
    );
    let mut acc = 0.0;
    for (p, w) in psi.iter().zip(w_o) {
        let e = w - p;
        acc += e * e;
    }
    acc
}

/// MSD learning curve, one value per cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct MsdCurve {
    values: Vec<f64>,
}

impl MsdCurve {
    /// Fails on negative or non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::Contract(format!(
                "MSD value {v} at cycle {i} is not a finite non-negative number"
            )));
        }
        Ok(MsdCurve { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }

    pub fn to_db(&self) -> Vec<f64> {
        self.values.iter().map(|v| to_db(*v)).collect()
    }
}

pub fn to_db(value: f64) -> f64 {
    10.0 * value.log10()
}

/// Pointwise mean, accumulated in input order.
pub fn average_curves(curves: &[MsdCurve]) -> Result<MsdCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::Contract("no curves to average".into()))?;
    let len = first.len();
    if let Some((r, c)) = curves.iter().enumerate().find(|(_, c)| c.len() != len) {
        return Err(Error::Contract(format!(
            "curve {r} has {} points, expected {len}",
            c.len()
        )));
    }
    let mut sum = vec![0.0; len];
    for curve in curves {
        for (s, v) in sum.iter_mut().zip(&curve.values) {
            *s += v;
        }
    }
    let count = curves.len() as f64;
    Ok(MsdCurve {
        values: sum.into_iter().map(|s| s / count).collect(),
    })
}

/// Mean of the last `ceil(tail_fraction * len)` entries.
pub fn steady_state_msd(curve: &MsdCurve, tail_fraction: f64) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::Contract("steady state of an empty curve".into()));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::config(
            "tail_fraction",
            format!("must lie in (0, 1], got {tail_fraction}"),
        ));
    }
    let len = curve.len();
    let tail = ((tail_fraction * len as f64).ceil() as usize).clamp(1, len);
    let slice = &curve.values[len - tail..];
    Ok(slice.iter().sum::<f64>() / tail as f64)
}

/// First cycle from which the curve stays at or below
/// `threshold_factor * steady_state_msd(curve, 0.1)`. `None` if it never
/// settles.
pub fn convergence_time(curve: &MsdCurve, threshold_factor: f64) -> Result<Option<usize>> {
    convergence_time_with_tail(curve, threshold_factor, DEFAULT_TAIL_FRACTION)
}

/// [`convergence_time`] with an explicit steady-state tail.
pub fn convergence_time_with_tail(
    curve: &MsdCurve,
    threshold_factor: f64,
    tail_fraction: f64,
) -> Result<Option<usize>> {
    if !(threshold_factor > 1.0 && threshold_factor.is_finite()) {
        return Err(Error::config(
            "threshold_factor",
            format!("must be greater than 1, got {threshold_factor}"),
        ));
    }
    let threshold = threshold_factor * steady_state_msd(curve, tail_fraction)?;
    // Walk back from the end until the first violation.
    let settled_from = curve
        .values
        .iter()
        .rposition(|v| *v > threshold)
        .map_or(0, |i| i + 1);
    Ok((settled_from < curve.len()).then_some(settled_from))
}

/// Spearman rank correlation. Ties get their average rank.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Contract(format!(
            "rank correlation needs two equal-length samples of at least 2, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let ra = ranks(a);
    let rb = ranks(b);
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    Ok(cov / (va * vb).sqrt())
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut out = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        let rank = (start + end - 1) as f64 / 2.0 + 1.0;
        for &i in &order[start..end] {
            out[i] = rank;
        }
        start = end;
    }
    out
}
