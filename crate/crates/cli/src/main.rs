mod config;
mod error;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_config, Command, RunConfig};
use error::CliError;
use shape_core::experiments::{FigureId, Protocol, Resolution};

#[derive(Parser)]
#[command(name = "shape", version, about = "Counterdiabatic pulse shaping: simulate, scan, synthesize, reproduce figures")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Propagate the selected protocols and write population traces.
    Simulate(Common),
    /// Sweep a Rabi-frequency error or detuning and write final fidelities.
    Scan(Common),
    /// Tabulate the auxiliary field for the configured scheme.
    Synthesize(Common),
    /// Regenerate one of the built-in figure datasets.
    Figure {
        /// fig1, fig2a, fig2b, fig4, fig5a or fig5b
        id: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's `output`).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Fixed number of integration steps instead of the phase budget.
    #[arg(long)]
    steps: Option<usize>,
    /// Comma-separated protocol list.
    #[arg(long, value_delimiter = ',')]
    protocols: Vec<String>,
    #[arg(long)]
    figure: Option<String>,
}

fn load(common: &Common, command: Command) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            parse_config(&text)?
        }
        None if command == Command::Figure => RunConfig::default(),
        None => return Err(CliError::Usage(format!("`{}` needs --config <file>", command.name()))),
    };
    if let Some(c) = cfg.command {
        if c != command {
            return Err(CliError::Usage(format!(
                "config declares command `{}` but `{}` was invoked",
                c.name(),
                command.name()
            )));
        }
    }
    if let Some(n) = common.steps {
        if n == 0 {
            return Err(CliError::Usage("--steps must be positive".into()));
        }
        cfg.resolution = Resolution::Steps(n);
    }
    if !common.protocols.is_empty() {
        cfg.protocols = common
            .protocols
            .iter()
            .map(|p| p.trim().parse::<Protocol>())
            .collect::<Result<_, _>>()?;
    }
    if let Some(id) = &common.figure {
        cfg.figure = Some(id.parse::<FigureId>()?);
    }
    Ok(cfg)
}

fn go(cli: Cli) -> Result<(), CliError> {
    let (command, common, positional) = match cli.command {
        Sub::Simulate(c) => (Command::Simulate, c, None),
        Sub::Scan(c) => (Command::Scan, c, None),
        Sub::Synthesize(c) => (Command::Synthesize, c, None),
        Sub::Figure { id, common } => (Command::Figure, common, id),
    };
    let mut cfg = load(&common, command)?;
    if let Some(id) = positional {
        cfg.figure = Some(id.parse::<FigureId>()?);
    }
    let dir = common.out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let out = run::execute(&cfg, command)?;
    for path in run::write_outputs(&dir, &out)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match go(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("shape: error: {e}");
            ExitCode::FAILURE
        }
    }
}
