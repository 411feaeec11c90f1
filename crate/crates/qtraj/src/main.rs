use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qtraj::commands::{self, Report};
use qtraj::config::{InitialState, ModelSource, RunConfig};
use qtraj::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "qtraj", version, about = "Quantum-jump trajectories, photon statistics and light/dark periods")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON run config (or a manifest.json from an earlier run).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// JSON model file.
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Override one model parameter, e.g. --param v=20.
    #[arg(long = "param", value_name = "KEY=VALUE", global = true)]
    params: Vec<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    t_final: Option<f64>,
    #[arg(long, global = true)]
    n_traj: Option<usize>,
    /// molmer | norm_threshold
    #[arg(long, global = true)]
    solver: Option<String>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true)]
    rtol: Option<f64>,
    #[arg(long, global = true)]
    atol: Option<f64>,
    #[arg(long, global = true)]
    max_step: Option<f64>,
    /// Worker threads (0 = all CPUs).
    #[arg(long, env = "QTRAJ_THREADS", global = true)]
    threads: Option<usize>,
    /// Number of sample times.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Initial state as a basis label, e.g. "g" or "00".
    #[arg(long, global = true)]
    initial: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Individual trajectories with their ensemble average.
    Simulate,
    /// Trajectory ensemble average against the master equation.
    Ensemble,
    /// Steady-state populations against total detuning.
    Steadyscan {
        #[arg(long, allow_hyphen_values = true)]
        delta_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        delta_max: Option<f64>,
        #[arg(long)]
        delta_step: Option<f64>,
        /// eigen | product
        #[arg(long)]
        basis: Option<String>,
    },
    /// Intensity correlation g2(tau) from a photon stream.
    G2 {
        #[arg(long)]
        dtd: Option<f64>,
        #[arg(long)]
        tau_max: Option<f64>,
        /// Photon stream file; simulated from the model when absent.
        #[arg(long)]
        stream: Option<PathBuf>,
    },
    /// Light and dark period statistics.
    Darkstats {
        #[arg(long)]
        t_apex_factor: Option<f64>,
        /// Also simulate a photon stream and classify it.
        #[arg(long)]
        simulate: bool,
    },
    /// Period statistics over a (V, delta) grid.
    Heatmap {
        #[arg(long)]
        v_min: Option<f64>,
        #[arg(long)]
        v_max: Option<f64>,
        #[arg(long)]
        n_v: Option<usize>,
        #[arg(long)]
        delta_min: Option<f64>,
        #[arg(long)]
        delta_max: Option<f64>,
        #[arg(long)]
        n_delta: Option<usize>,
        /// Evenly spaced instead of logarithmic axes.
        #[arg(long)]
        linear: bool,
    },
}

fn merge(c: Common, cmd: &Command) -> CliResult<RunConfig> {
    let mut cfg = commands::base_config(c.config.as_deref())?;
    if let Some(m) = c.model {
        cfg.model = Some(ModelSource::Path(m));
    }
    if !c.params.is_empty() {
        let mut mf = cfg.model_file()?;
        for kv in &c.params {
            let (k, v) = kv.split_once('=').ok_or_else(|| CliError::config(format!("--param expects KEY=VALUE, got '{kv}'")))?;
            mf.set(k.trim(), v.trim())?;
        }
        cfg.model = Some(ModelSource::Inline(mf));
    }
    macro_rules! over {
        ($($dst:expr => $src:expr),* $(,)?) => { $(if let Some(v) = $src { $dst = Some(v); })* };
    }
    over!(
        cfg.output => c.out, cfg.seed => c.seed, cfg.t_final => c.t_final, cfg.n_traj => c.n_traj,
        cfg.solver.kind => c.solver, cfg.solver.dt => c.dt, cfg.solver.rtol => c.rtol,
        cfg.solver.atol => c.atol, cfg.solver.max_step => c.max_step, cfg.threads => c.threads,
        cfg.samples => c.samples, cfg.initial_state => c.initial.map(InitialState::Label),
    );
    match cmd {
        Command::Simulate | Command::Ensemble => {}
        Command::Steadyscan { delta_min, delta_max, delta_step, basis } => {
            over!(cfg.scan.delta_min => *delta_min, cfg.scan.delta_max => *delta_max,
                cfg.scan.delta_step => *delta_step, cfg.scan.basis => basis.clone());
        }
        Command::G2 { dtd, tau_max, stream } => {
            over!(cfg.g2.dtd => *dtd, cfg.g2.tau_max => *tau_max, cfg.g2.stream => stream.clone());
        }
        Command::Darkstats { t_apex_factor, simulate } => {
            over!(cfg.darkstats.t_apex_factor => *t_apex_factor);
            if *simulate {
                cfg.darkstats.simulate = Some(true);
            }
        }
        Command::Heatmap { v_min, v_max, n_v, delta_min, delta_max, n_delta, linear } => {
            over!(cfg.heatmap.v_min => *v_min, cfg.heatmap.v_max => *v_max, cfg.heatmap.n_v => *n_v,
                cfg.heatmap.delta_min => *delta_min, cfg.heatmap.delta_max => *delta_max,
                cfg.heatmap.n_delta => *n_delta);
            if *linear {
                cfg.heatmap.log_axes = Some(false);
            }
        }
    }
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<Report> {
    let cfg = merge(cli.common, &cli.command)?;
    match cli.command {
        Command::Simulate => commands::simulate(&cfg),
        Command::Ensemble => commands::ensemble(&cfg),
        Command::Steadyscan { .. } => commands::steadyscan(&cfg),
        Command::G2 { .. } => commands::g2(&cfg),
        Command::Darkstats { .. } => commands::darkstats(&cfg),
        Command::Heatmap { .. } => commands::heatmap(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            for w in &report.manifest.warnings {
                eprintln!("warning: {w}");
            }
            for f in &report.manifest.failures {
                eprintln!("failed: {f}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
