//! CSV and manifest output.
//!
//! Floats are written with `{:e}`, which prints the shortest representation
//! that parses back to the same `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::experiment::{CurveSummary, RunArtifacts, SweepArtifacts};
use crate::metrics::{to_db, MsdCurve};
use crate::reliability::NodeDiagnostics;
use crate::{Error, Result};

pub const MSD_CURVES_FILE: &str = "msd_curves.csv";
pub const NODES_FILE: &str = "nodes.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const SUMMARY_FILE: &str = "summary.csv";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn render_msd_csv(idlms: &MsdCurve, proposed: &MsdCurve) -> String {
    let mut out = String::from("cycle,algorithm,msd_linear,msd_db\n");
    for (name, curve) in [("idlms", idlms), ("proposed", proposed)] {
        for (i, v) in curve.values().iter().enumerate() {
            let _ = writeln!(out, "{i},{name},{v:e},{:e}", to_db(*v));
        }
    }
    out
}

pub fn render_nodes_csv(nodes: &[NodeDiagnostics]) -> String {
    let mut out = String::from("node_id,sigma2_true,sigma2_est,mu_k\n");
    for n in nodes {
        let _ = writeln!(
            out,
            "{},{:e},{:e},{:e}",
            n.node_id, n.sigma2_true, n.sigma2_est, n.mu
        );
    }
    out
}

fn fmt_cycles(c: Option<usize>) -> String {
    c.map_or_else(|| "not_reached".to_string(), |c| c.to_string())
}

fn summary_lines(out: &mut String, name: &str, s: &CurveSummary) {
    let _ = writeln!(
        out,
        "# {name}: steady_state_msd = {:e} ({:.3} dB), convergence_cycles = {}",
        s.steady_state,
        to_db(s.steady_state),
        fmt_cycles(s.convergence_cycles)
    );
}

/// Config echo followed by `#` comment lines, so the file loads as a config.
pub fn render_manifest(art: &RunArtifacts, msd_sha: &str, nodes_sha: &str) -> String {
    let mut out = String::from("# idlms run manifest\n");
    out.push_str(&art.config.to_config_text());
    out.push_str("#\n# summary\n");
    summary_lines(&mut out, "idlms", &art.idlms_summary);
    summary_lines(&mut out, "proposed", &art.proposed_summary);
    out.push_str("#\n# runs (index, seed, sha256 of the shared sample stream)\n");
    for r in &art.runs {
        let _ = writeln!(
            out,
            "# run {} seed {} stream {}",
            r.index, r.seed, r.stream_checksum
        );
    }
    out.push_str("#\n# artifacts\n");
    let _ = writeln!(out, "# sha256 {MSD_CURVES_FILE} {msd_sha}");
    let _ = writeln!(out, "# sha256 {NODES_FILE} {nodes_sha}");
    let _ = writeln!(out, "# wall_clock_seconds {:.3}", art.elapsed.as_secs_f64());
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExportedRun {
    pub msd_curves: PathBuf,
    pub nodes: PathBuf,
    pub manifest: PathBuf,
    pub msd_sha256: String,
    pub nodes_sha256: String,
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `msd_curves.csv`, `nodes.csv` and `manifest.txt` into `out_dir`,
/// creating it if needed.
pub fn export_artifacts(art: &RunArtifacts, out_dir: &Path) -> Result<ExportedRun> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let msd = render_msd_csv(&art.idlms, &art.proposed);
    let nodes = render_nodes_csv(&art.nodes);
    let msd_sha256 = sha256_hex(msd.as_bytes());
    let nodes_sha256 = sha256_hex(nodes.as_bytes());
    let manifest = render_manifest(art, &msd_sha256, &nodes_sha256);
    Ok(ExportedRun {
        msd_curves: write(out_dir.join(MSD_CURVES_FILE), &msd)?,
        nodes: write(out_dir.join(NODES_FILE), &nodes)?,
        manifest: write(out_dir.join(MANIFEST_FILE), &manifest)?,
        msd_sha256,
        nodes_sha256,
    })
}

pub fn point_dir_name(sweep: &SweepArtifacts, value: f64) -> String {
    format!("{}_{}", sweep.axis.key(), value)
}

pub fn render_summary_csv(sweep: &SweepArtifacts) -> String {
    let mut out = format!(
        "{},steady_state_idlms,steady_state_proposed,steady_state_idlms_db,steady_state_proposed_db,\
convergence_cycles_idlms,convergence_cycles_proposed,convergence_updates_idlms,convergence_updates_proposed\n",
        sweep.axis.key()
    );
    for p in &sweep.points {
        let (i, q) = (&p.artifacts.idlms_summary, &p.artifacts.proposed_summary);
        let n = p.artifacts.config.n_nodes;
        let updates = |c: Option<usize>| fmt_cycles(c.map(|c| c * n));
        let _ = writeln!(
            out,
            "{},{:e},{:e},{:e},{:e},{},{},{},{}",
            p.value,
            i.steady_state,
            q.steady_state,
            to_db(i.steady_state),
            to_db(q.steady_state),
            fmt_cycles(i.convergence_cycles),
            fmt_cycles(q.convergence_cycles),
            updates(i.convergence_cycles),
            updates(q.convergence_cycles),
        );
    }
    out
}

#[derive(Debug, Clone)]
pub struct ExportedSweep {
    pub summary: PathBuf,
    pub manifest: PathBuf,
    pub points: Vec<ExportedRun>,
}

/// One sub-directory per sweep value plus `summary.csv` and a top-level
/// `manifest.txt` carrying the ordinal checks.
pub fn export_sweep(sweep: &SweepArtifacts, out_dir: &Path) -> Result<ExportedSweep> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let points = sweep
        .points
        .iter()
        .map(|p| export_artifacts(&p.artifacts, &out_dir.join(point_dir_name(sweep, p.value))))
        .collect::<Result<Vec<_>>>()?;
    let summary_text = render_summary_csv(sweep);
    let mut manifest = String::from("# idlms sweep manifest\n");
    manifest.push_str(&sweep.config.to_config_text());
    manifest.push_str("#\n# ordinal checks on the proposed algorithm, ascending sweep value\n");
    let _ = writeln!(
        manifest,
        "# check steady_state_nonincreasing {}",
        sweep.checks.steady_state_nonincreasing
    );
    let _ = writeln!(
        manifest,
        "# check convergence_nondecreasing {}",
        sweep.checks.convergence_nondecreasing
    );
    manifest.push_str("#\n# artifacts\n");
    let _ = writeln!(
        manifest,
        "# sha256 {SUMMARY_FILE} {}",
        sha256_hex(summary_text.as_bytes())
    );
    for (p, files) in sweep.points.iter().zip(&points) {
        let dir = point_dir_name(sweep, p.value);
        let _ = writeln!(
            manifest,
            "# sha256 {dir}/{MSD_CURVES_FILE} {}",
            files.msd_sha256
        );
        let _ = writeln!(
            manifest,
            "# sha256 {dir}/{NODES_FILE} {}",
            files.nodes_sha256
        );
    }
    Ok(ExportedSweep {
        summary: write(out_dir.join(SUMMARY_FILE), &summary_text)?,
        manifest: write(out_dir.join(MANIFEST_FILE), &manifest)?,
        points,
    })
}
