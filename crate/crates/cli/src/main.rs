//! `randshear` command-line driver.
//!
//! Parameters come from an optional JSON document (`--config`) and are
//! overridden by flags. The output directory is taken from `--out-dir`, then
//! `RANDSHEAR_OUT_DIR`, then the document, then `randshear-out`.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{Bc, Method, NoiseKind, PdfMode, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "randshear",
    version,
    about = "Shear dispersion under randomly switching flows"
)]
struct Cli {
    /// JSON run configuration; flags take precedence over its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "RANDSHEAR_OUT_DIR")]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct FlowArgs {
    /// linear, linear:<slope>:<intercept>, cosine:<n> or file:<path>
    #[arg(long)]
    flow: Option<String>,
    #[arg(long, value_enum)]
    noise: Option<NoiseKind>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    pe: Option<f64>,
    #[arg(long, value_enum)]
    bc: Option<Bc>,
    /// Grid intervals across the channel.
    #[arg(long)]
    grid: Option<usize>,
}

impl FlowArgs {
    fn into_config(self) -> RunConfig {
        RunConfig {
            flow: self.flow,
            noise: self.noise,
            gamma: self.gamma,
            pe: self.pe,
            bc: self.bc,
            grid: self.grid,
            ..Default::default()
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Effective diffusivity and eigenvalue derivatives for one flow.
    KappaEff {
        #[command(flatten)]
        flow: FlowArgs,
        #[arg(long, value_enum)]
        method: Option<Method>,
        #[arg(long)]
        hermite_order: Option<usize>,
    },
    /// Forward particle simulation.
    Simulate {
        #[command(flatten)]
        flow: FlowArgs,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        particles: Option<usize>,
        #[arg(long)]
        realizations: Option<usize>,
        #[arg(long)]
        record_every: Option<usize>,
        /// Gaussian initial data of this variance instead of a delta line.
        #[arg(long)]
        init_variance: Option<f64>,
    },
    /// Aris moments along OU realizations.
    Aris {
        #[command(flatten)]
        flow: FlowArgs,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long)]
        realizations: Option<usize>,
        #[arg(long)]
        record_every: Option<usize>,
    },
    /// Tabulated densities with analytic overlays.
    Pdf {
        #[command(flatten)]
        flow: FlowArgs,
        #[arg(long, value_enum)]
        mode: Option<PdfMode>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        realizations: Option<usize>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        init_variance: Option<f64>,
    },
    /// Damping-rate estimates from simulated OU paths.
    EstimateGamma {
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        paths: Option<usize>,
        /// Cosine mode used by the estimator.
        #[arg(long)]
        mode_index: Option<usize>,
    },
    /// Runs the acceptance criteria.
    Validate {
        /// Smaller ensembles; a smoke test, not the acceptance gate.
        #[arg(long)]
        quick: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::KappaEff { .. } => "kappa-eff",
            Command::Simulate { .. } => "simulate",
            Command::Aris { .. } => "aris",
            Command::Pdf { .. } => "pdf",
            Command::EstimateGamma { .. } => "estimate-gamma",
            Command::Validate { .. } => "validate",
        }
    }

    fn flags(self) -> RunConfig {
        match self {
            Command::KappaEff {
                flow,
                method,
                hermite_order,
            } => RunConfig {
                method,
                hermite_order,
                ..flow.into_config()
            },
            Command::Simulate {
                flow,
                t_end,
                dt,
                particles,
                realizations,
                record_every,
                init_variance,
            } => RunConfig {
                t_end,
                dt,
                particles,
                realizations,
                record_every,
                init_variance,
                ..flow.into_config()
            },
            Command::Aris {
                flow,
                t_end,
                dt,
                n_max,
                realizations,
                record_every,
            } => RunConfig {
                t_end,
                dt,
                n_max,
                realizations,
                record_every,
                ..flow.into_config()
            },
            Command::Pdf {
                flow,
                mode,
                beta,
                bins,
                samples,
                realizations,
                t_end,
                dt,
                init_variance,
            } => RunConfig {
                pdf_mode: mode,
                beta,
                bins,
                samples,
                realizations,
                t_end,
                dt,
                init_variance,
                ..flow.into_config()
            },
            Command::EstimateGamma {
                gamma,
                t_end,
                dt,
                paths,
                mode_index,
            } => RunConfig {
                gamma,
                t_end,
                dt,
                paths,
                mode_index,
                ..Default::default()
            },
            Command::Validate { .. } => RunConfig::default(),
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let name = cli.command.name();
    let quick = matches!(cli.command, Command::Validate { quick: true });
    let doc = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    doc.check_command(name)?;
    let mut cfg = doc.overlay(cli.command.flags());
    cfg.command = Some(name.into());
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.out_dir.is_some() {
        cfg.out_dir = cli.out_dir;
    }
    cfg.validate()?;

    let result = match name {
        "kappa-eff" => commands::kappa_eff(&cfg)?,
        "simulate" => commands::simulate(&cfg)?,
        "aris" => commands::aris(&cfg)?,
        "pdf" => commands::pdf(&cfg)?,
        "estimate-gamma" => commands::estimate_gamma_cmd(&cfg)?,
        _ => commands::validate(quick)?,
    };
    let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("randshear-out"));
    let files: Vec<String> = result.outputs.names().map(String::from).collect();
    output::write_all(&dir, name, &cfg, result.outputs)?;
    println!("{}", serde_json::to_string_pretty(&result.summary)?);
    eprintln!("wrote {} and manifest.json to {}", files.join(", "), dir.display());
    Ok(!result.failed)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
