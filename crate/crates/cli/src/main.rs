mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "hypercircle",
    about = "Guaranteed local/global energy-error bounds for 2D Poisson FEM (weighted hypercircle method)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// ‖∇α‖ convention (overrides the config's `grad_norm`).
    #[arg(long = "grad-norm-convention", value_name = "euclidean|axis")]
    grad_norm_convention: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single case (one n, one eps) and write report.txt + table.csv.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// One run per n at fixed eps; writes table.csv.
    SweepMesh {
        #[command(flatten)]
        common: Common,
        /// Append n = 64 and 128 to the configured n list.
        #[arg(long)]
        extended: bool,
    },
    /// One run per eps at fixed n; writes table.csv and band.dat.
    SweepBand {
        #[command(flatten)]
        common: Common,
    },
    /// Write the triangulation as plain text (mesh.txt).
    DumpMesh {
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common) -> Result<config::RunConfig> {
    let text = std::fs::read_to_string(&common.config)
        .with_context(|| format!("reading config {}", common.config.display()))?;
    let mut cfg = config::parse(&text)?;
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(conv) = &common.grad_norm_convention {
        cfg.grad_norm = config::parse_convention(conv)?;
    }
    Ok(cfg)
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run { common } => {
            let cfg = load_config(common)?;
            let r = pipeline::run_case(&cfg)?;
            println!(
                "n={} eps={} local_bound={} global_bound={}",
                r.n.unwrap_or_default(),
                pipeline::fmt_sig(r.eps),
                pipeline::fmt_sig(r.local_bound),
                pipeline::fmt_sig(r.global_bound)
            );
        }
        Command::SweepMesh { common, extended } => {
            let mut cfg = load_config(common)?;
            if *extended {
                for n in [64, 128] {
                    if !cfg.n_list.contains(&n) {
                        cfg.n_list.push(n);
                    }
                }
                cfg.n_list.sort_unstable();
            }
            let rows = pipeline::sweep_mesh(&cfg)?;
            println!("sweep-mesh: {} rows -> {}", rows.len(), cfg.out.join("table.csv").display());
        }
        Command::SweepBand { common } => {
            let cfg = load_config(common)?;
            let rows = pipeline::sweep_band(&cfg)?;
            println!("sweep-band: {} rows -> {}", rows.len(), cfg.out.join("band.dat").display());
        }
        Command::DumpMesh { common } => {
            let cfg = load_config(common)?;
            pipeline::dump_mesh(&cfg)?;
            println!("mesh -> {}", cfg.out.join("mesh.txt").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
