//! `sbfem` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 acceptance (tolerance) failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Context2;
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "sbfem",
    about = "Octree scaled-boundary solver with transfinite transition elements",
    version
)]
struct Cli {
    /// Path to the JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (default: `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for the per-subdomain stage (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Chatty progress output.
    #[arg(long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the octree + surface mesh and report pattern statistics.
    Mesh,
    /// Static displacement solve with Dirichlet regions and body load.
    Static,
    /// Vibration modes of the meshed model.
    Modal,
    /// Patch-test convergence suite with pass/fail gates.
    Patchtest,
    /// Model summary without solving; optionally dump shape functions.
    Info {
        /// Dump transfinite shape values of `PATTERN,ORDER` as CSV.
        #[arg(long, value_parser = parse_shape_dump)]
        shape_dump: Option<(u8, usize)>,
    },
}

fn parse_shape_dump(s: &str) -> Result<(u8, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected PATTERN,ORDER".to_string());
    }
    let pattern = parts[0]
        .trim()
        .parse()
        .map_err(|e| format!("pattern: {e}"))?;
    let order = parts[1].trim().parse().map_err(|e| format!("order: {e}"))?;
    Ok((pattern, order))
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_ACCEPTANCE: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }

    // Output directory: --out beats the config's `output`, which beats `out`.
    let config_out = cli
        .config
        .as_ref()
        .and_then(|p| RunConfig::load(p).ok())
        .and_then(|c| c.output);
    let ctx = Context2 {
        out_dir: cli
            .out
            .clone()
            .or(config_out)
            .unwrap_or_else(|| PathBuf::from("out")),
        verbose: cli.verbose,
    };

    let load_config = || -> Result<RunConfig, ExitCode> {
        let path = cli.config.as_ref().ok_or_else(|| {
            eprintln!("error: --config PATH is required for this command");
            ExitCode::from(EXIT_CONFIG)
        })?;
        RunConfig::load(path).map_err(|e| {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        })
    };

    let run = || -> Result<ExitCode, ExitCode> {
        match &cli.command {
            Command::Mesh => {
                let config = load_config()?;
                commands::cmd_mesh(&config, &ctx).map_err(runtime_exit)?;
                Ok(ExitCode::SUCCESS)
            }
            Command::Static => {
                let config = load_config()?;
                if let config::AnalysisSpec::Static { dirichlet, .. } = &config.analysis {
                    // BC validation is a config concern, before any assembly.
                    if dirichlet.is_empty() {
                        eprintln!("error: static analysis without Dirichlet regions");
                        return Err(ExitCode::from(EXIT_CONFIG));
                    }
                } else {
                    eprintln!("error: analysis.type must be `static`");
                    return Err(ExitCode::from(EXIT_CONFIG));
                }
                commands::cmd_static(&config, &ctx).map_err(runtime_exit)?;
                Ok(ExitCode::SUCCESS)
            }
            Command::Modal => {
                let config = load_config()?;
                commands::cmd_modal(&config, &ctx).map_err(runtime_exit)?;
                Ok(ExitCode::SUCCESS)
            }
            Command::Patchtest => {
                let config = load_config()?;
                let pass = commands::cmd_patchtest(&config, &ctx).map_err(runtime_exit)?;
                if pass {
                    Ok(ExitCode::SUCCESS)
                } else {
                    Ok(ExitCode::from(EXIT_ACCEPTANCE))
                }
            }
            Command::Info { shape_dump } => {
                if shape_dump.is_some() {
                    commands::cmd_info(&RunConfig::load_unchecked_placeholder(), &ctx, *shape_dump)
                        .map_err(runtime_exit)?;
                    return Ok(ExitCode::SUCCESS);
                }
                let config = load_config()?;
                commands::cmd_info(&config, &ctx, None).map_err(runtime_exit)?;
                Ok(ExitCode::SUCCESS)
            }
        }
    };

    match run() {
        Ok(code) => code,
        Err(code) => code,
    }
}

fn runtime_exit(e: anyhow::Error) -> ExitCode {
    eprintln!("error: {e:#}");
    ExitCode::from(EXIT_NUMERICAL)
}

impl RunConfig {
    /// The shape dump needs no model; a placeholder keeps the call uniform.
    fn load_unchecked_placeholder() -> Self {
        serde_json::from_str(
            r#"{
                "model": {"type": "cube_corner_refined", "width": 2.0, "h": 1.0},
                "orders": {"uniform": 1},
                "analysis": {"type": "mesh"}
            }"#,
        )
        .expect("static placeholder")
    }
}
