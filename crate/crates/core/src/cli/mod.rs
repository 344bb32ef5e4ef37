//! Command-line front end: `rsde simulate | skorokhod | converge | remark4`.

pub mod commands;
pub mod config;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{cmd_converge, cmd_remark4, cmd_simulate, cmd_skorokhod, CommandError, EXIT_CONFIG, EXIT_RUNTIME};
pub use config::{ExperimentConfig, SkorokhodConfig};

use crate::error::Error;

#[derive(Debug, Parser)]
#[command(name = "rsde", version, about = "Reflected Marcus SDE simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` of the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Print the resolved config, defaults included, and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One scheme run per path.
    Simulate,
    /// Skorokhod map of a driver CSV; the config needs only a [domain] table.
    Skorokhod {
        #[arg(long)]
        input: PathBuf,
    },
    /// Monte Carlo convergence study over the mesh ladder.
    Converge,
    /// Tangential jump on the unit disk.
    Remark4,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CommandError> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CommandError::config(&Error::Io(e)))?;
            ExperimentConfig::from_toml(&text).map_err(|e| CommandError::config(&e))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn jobs(cli: &Cli) -> usize {
    cli.jobs.filter(|j| *j > 0).unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CommandError> {
    let print = |w: &mut dyn Write, s: &str| {
        writeln!(w, "{s}").map_err(|e| CommandError::config(&Error::Io(e)))
    };
    if cli.print_config {
        let cfg = load_config(cli)?;
        return print(stdout, cfg.to_toml().trim_end());
    }
    match &cli.command {
        Command::Simulate => {
            let cfg = load_config(cli)?;
            let out = cli.out.clone().unwrap_or_else(|| commands::default_out(Some(&cfg)));
            let s = cmd_simulate(&cfg, &out, jobs(cli))?;
            print(stdout, &format!("simulate: {} paths at mesh {} -> {}", s.runs.len(), s.mesh, out.display()))
        }
        Command::Skorokhod { input } => {
            let Some(path) = &cli.config else {
                return Err(CommandError::config(&Error::InvalidParameter("skorokhod needs --config with a [domain] table".into())));
            };
            let text = std::fs::read_to_string(path).map_err(|e| CommandError::config(&Error::Io(e)))?;
            let out = cli.out.clone().unwrap_or_else(|| commands::default_out(None));
            let s = cmd_skorokhod(input, &text, &out)?;
            print(
                stdout,
                &format!("skorokhod: {} pushes, |k| = {}, variation bounds hold: {}", s.pushes, s.k_total, s.lemma1.all_hold()),
            )
        }
        Command::Converge => {
            let cfg = load_config(cli)?;
            let out = cli.out.clone().unwrap_or_else(|| commands::default_out(Some(&cfg)));
            let s = cmd_converge(&cfg, &out, jobs(cli))?;
            let mut buf = Vec::new();
            s.table.write_csv(&mut buf).map_err(|e| CommandError::classify(&e, None))?;
            print(stdout, String::from_utf8_lossy(&buf).trim_end())
        }
        Command::Remark4 => {
            let out = cli.out.clone().unwrap_or_else(|| commands::default_out(None));
            let s = cmd_remark4(&out)?;
            print(stdout, &commands::render_remark4(&s))
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Failures are reported as one JSON line on `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = if e.use_stderr() { write!(stderr, "{e}") } else { write!(stdout, "{e}") };
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.to_json());
            e.code
        }
    }
}
