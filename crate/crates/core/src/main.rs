use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use avgsearch::commands::{self, AnalyzeOptions, CommandError, DecayOptions, GenOptions};
use avgsearch::config::{ExperimentConfig, KernelSpec, OutputFormat};

#[derive(Parser, Debug)]
#[command(
    name = "avgsearch",
    version,
    about = "Averaging search point sets on the torus and their worst-case error"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a point set with the configured algorithm.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        m: usize,
        /// Output file (default: <out>/<variant>-d<d>-m<m>.points).
        #[arg(long)]
        points: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute the error report of a point file and certify the bound chain.
    Analyze {
        #[arg(long)]
        points: PathBuf,
        /// File with a [kernel] section.
        #[arg(long, required_unless_present = "config")]
        kernel: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep m and tabulate errors for every configured series.
    Decay {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the built-in invariant checks.
    Verify {
        /// Check this kernel instead of the built-in ones.
        #[arg(long)]
        kernel: Option<PathBuf>,
    },
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, CommandError> {
    let mut cfg = ExperimentConfig::from_file(path)?;
    if let Some(seed) = seed {
        cfg.search.seed = seed;
    }
    Ok(cfg)
}

fn load_kernel(path: &Path) -> Result<KernelSpec, CommandError> {
    ExperimentConfig::from_file(path)?
        .kernel
        .ok_or_else(|| CommandError::Usage(format!("{}: no [kernel] section", path.display())))
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CommandError> {
    match cli.command {
        Command::Gen {
            config,
            m,
            points,
            out: out_dir,
            seed,
        } => {
            let opts = GenOptions {
                config: load_config(&config, seed)?,
                m,
                points,
                out_dir,
            };
            commands::cmd_gen(&opts, out).map(|_| ())
        }
        Command::Analyze {
            points,
            kernel,
            config,
            grid,
            format,
            out: out_dir,
        } => {
            let kernel = match (kernel, config) {
                (Some(k), _) => load_kernel(&k)?,
                (None, Some(c)) => load_kernel(&c)?,
                (None, None) => unreachable!("clap requires one of --kernel/--config"),
            };
            let opts = AnalyzeOptions {
                kernel,
                points,
                grid,
                format: format.into(),
                out_dir,
            };
            commands::cmd_analyze(&opts, out).map(|_| ())
        }
        Command::Decay {
            config,
            out: out_dir,
            format,
            grid,
            seed,
        } => {
            let mut cfg = load_config(&config, seed)?;
            if grid.is_some() {
                cfg.grid = grid;
            }
            let opts = DecayOptions {
                config: cfg,
                out_dir,
                formats: format.map(|f| vec![f.into()]),
            };
            commands::cmd_decay(&opts, out).map(|_| ())
        }
        Command::Verify { kernel } => {
            let spec = kernel.as_deref().map(load_kernel).transpose()?;
            commands::cmd_verify(spec.as_ref(), out).map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
