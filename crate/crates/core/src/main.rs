use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use idlms::harness::{
    export_artifacts, export_sweep, parse_config_with_base, run_monte_carlo, run_sweep,
    ExperimentConfig, RunArtifacts, PRESETS,
};
use idlms::metrics::to_db;
use idlms::Result;

/// Incremental distributed LMS with reliability-weighted step sizes.
#[derive(Parser)]
#[command(name = "idlms", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Paired Monte-Carlo comparison for one configuration (or its sweep, if
    /// the configuration defines one).
    Run(Common),
    /// Monte-Carlo comparison for each value of `--sweep-axis`.
    Sweep(Common),
    /// Run a named preset: fig2, fig3, fig4, fig5, fig6.
    Preset {
        name: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file. Flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    keys: KeyFlags,
}

/// One flag per configuration key, kept as text and parsed by the config
/// layer so errors always name the key.
#[derive(Args)]
struct KeyFlags {
    #[arg(long)]
    n_nodes: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    mu_max: Option<String>,
    #[arg(long)]
    a: Option<String>,
    #[arg(long)]
    ls: Option<String>,
    #[arg(long)]
    variance_low: Option<String>,
    #[arg(long)]
    variance_high: Option<String>,
    #[arg(long, visible_alias = "cycles")]
    n_cycles: Option<String>,
    #[arg(long, visible_alias = "runs")]
    n_runs: Option<String>,
    #[arg(long, visible_alias = "seed")]
    master_seed: Option<String>,
    /// node-averaged | single-node
    #[arg(long)]
    msd_mode: Option<String>,
    #[arg(long)]
    msd_node: Option<String>,
    /// normalized | literal
    #[arg(long)]
    variance_normalization: Option<String>,
    #[arg(long)]
    tail_fraction: Option<String>,
    #[arg(long)]
    threshold_factor: Option<String>,
    /// ls | a | n_nodes
    #[arg(long)]
    sweep_axis: Option<String>,
    /// Comma-separated values, e.g. 5,20,50
    #[arg(long)]
    sweep_values: Option<String>,
}

impl KeyFlags {
    fn overrides(&self) -> Vec<(String, String)> {
        let pairs = [
            ("n_nodes", &self.n_nodes),
            ("dim", &self.dim),
            ("mu_max", &self.mu_max),
            ("a", &self.a),
            ("ls", &self.ls),
            ("variance_low", &self.variance_low),
            ("variance_high", &self.variance_high),
            ("n_cycles", &self.n_cycles),
            ("n_runs", &self.n_runs),
            ("master_seed", &self.master_seed),
            ("msd_mode", &self.msd_mode),
            ("msd_node", &self.msd_node),
            ("variance_normalization", &self.variance_normalization),
            ("tail_fraction", &self.tail_fraction),
            ("threshold_factor", &self.threshold_factor),
            ("sweep_axis", &self.sweep_axis),
            ("sweep_values", &self.sweep_values),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect()
    }
}

fn report(art: &RunArtifacts) {
    for (name, s) in [
        ("idlms", &art.idlms_summary),
        ("proposed", &art.proposed_summary),
    ] {
        println!(
            "{name:>9}: steady-state MSD {:.3} dB, converged after {}",
            to_db(s.steady_state),
            s.convergence_cycles
                .map_or("never".to_string(), |c| format!("{c} cycles"))
        );
    }
}

fn execute(base: ExperimentConfig, common: &Common, force_sweep: bool) -> Result<()> {
    let cfg = parse_config_with_base(base, common.config.as_deref(), &common.keys.overrides())?;
    if force_sweep && cfg.sweep_axis.is_none() {
        return Err(idlms::Error::Config {
            key: "sweep_axis".into(),
            reason: "the sweep command needs --sweep-axis and --sweep-values".into(),
        });
    }
    if cfg.sweep_axis.is_some() {
        let sweep = run_sweep(&cfg)?;
        let files = export_sweep(&sweep, &common.out)?;
        for p in &sweep.points {
            println!("{} = {}", sweep.axis.key(), p.value);
            report(&p.artifacts);
        }
        println!(
            "steady state non-increasing: {}, convergence non-decreasing: {}",
            sweep.checks.steady_state_nonincreasing, sweep.checks.convergence_nondecreasing
        );
        println!("wrote {}", files.summary.display());
    } else {
        let art = run_monte_carlo(&cfg)?;
        let files = export_artifacts(&art, &common.out)?;
        report(&art);
        println!("wrote {}", files.manifest.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(common) => execute(ExperimentConfig::default(), common, false),
        Command::Sweep(common) => execute(ExperimentConfig::default(), common, true),
        Command::Preset { name, common } => {
            ExperimentConfig::preset(name).and_then(|base| execute(base, common, false))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, idlms::Error::Config { ref key, .. } if key == "preset") {
                eprintln!("available presets: {}", PRESETS.join(", "));
            }
            ExitCode::FAILURE
        }
    }
}
