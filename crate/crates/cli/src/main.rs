use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use erdmd_cli::{commands, CliError, ExperimentConfig, Format};

#[derive(Parser)]
#[command(
    name = "erdmd",
    version,
    about = "Entropic-regression lagged DMD experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the system data and write the series files.
    Simulate(Common),
    /// Select lags and fit the model (and the all-lags baseline).
    Fit(Common),
    /// Closed-loop reconstruction and forecast errors.
    Reconstruct(Common),
    /// Companion spectrum and reduced approximations.
    Spectrum(Common),
    /// Collect a run directory into summary.json.
    Report {
        /// Run directory.
        #[arg(long)]
        out: PathBuf,
        /// Also write SVG quick-look plots.
        #[arg(long)]
        svg: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Config file or preset name.
    #[arg(long)]
    config: String,
    /// Run directory; defaults to runs/<config name>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the selection seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Also fit the all-lags baseline.
    #[arg(long)]
    baseline: bool,
    /// Format of series, error and eigenvalue files.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl Common {
    fn resolve(&self) -> Result<(ExperimentConfig, PathBuf), CliError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.erdmd.seed = seed;
        }
        if self.baseline {
            cfg.baseline = true;
        }
        if let Some(f) = self.format {
            cfg.format = match f {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            };
        }
        let out = self
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from("runs").join(&cfg.name));
        Ok((cfg, out))
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate(c) => {
            let (cfg, out) = c.resolve()?;
            commands::simulate(&cfg, &out)?;
        }
        Command::Fit(c) => {
            let (cfg, out) = c.resolve()?;
            let r = commands::fit(&cfg, &out)?;
            println!("lags {:?}", r.lags);
        }
        Command::Reconstruct(c) => {
            let (cfg, out) = c.resolve()?;
            commands::reconstruct(&cfg, &out)?;
        }
        Command::Spectrum(c) => {
            let (cfg, out) = c.resolve()?;
            commands::spectrum(&cfg, &out)?;
        }
        Command::Report { out, svg } => {
            let s = commands::report(&out, svg)?;
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
        }
    }
    Ok(())
}

fn error_json(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": { "kind": kind, "message": message } }).to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ERDMD_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", error_json("usage", e.to_string().trim()));
            return ExitCode::from(2);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(e.kind(), &e.to_string()));
            ExitCode::FAILURE
        }
    }
}
