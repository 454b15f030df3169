use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qframe_cli::ldpc::LdpcOverrides;
use qframe_cli::{keyrate, ldpc, simulate, CliError, Common, Format};

const EXIT_CODES: &str = "\
Exit status:
  0  success
  1  output could not be written
  2  invalid configuration or arguments
  3  unreadable or inconsistent input data
  4  LDPC decoding did not converge";

/// QKD link simulation with quantum frames, decoy-state key rates and LDPC
/// reconciliation.
#[derive(Debug, Parser)]
#[command(name = "qframe", version, after_help = EXIT_CODES)]
struct Cli {
    /// TOML run configuration; defaults describe the calibrated link.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Format of tabular logs (counts are always CSV, the frame log always JSON lines).
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a link session: frame log, Stokes log, QBER timeline, counts, sequence table.
    Simulate {
        /// Session length in seconds, overriding `simulation.duration_s`.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Secret-key-rate curves A, B and (from measured counts) C, plus the optimal mu.
    Keyrate {
        /// Detector count CSV written by `simulate`.
        #[arg(long)]
        counts: Option<PathBuf>,
    },
    /// LDPC code design, performance sweeps and decoding.
    #[command(subcommand)]
    Ldpc(LdpcCommand),
}

#[derive(Debug, Args)]
struct LdpcArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    row_weight: Option<usize>,
    #[arg(long)]
    target_qber: Option<f64>,
    /// float, fixed12, fixed16 or fixed24.
    #[arg(long)]
    arithmetic: Option<String>,
    #[arg(long)]
    max_iter: Option<u32>,
}

impl LdpcArgs {
    fn overrides(&self) -> LdpcOverrides {
        LdpcOverrides {
            n: self.n,
            m: self.m,
            row_weight: self.row_weight,
            target_qber: self.target_qber,
            arithmetic: self.arithmetic.clone(),
            max_iter: self.max_iter,
            ..Default::default()
        }
    }
}

#[derive(Debug, Subcommand)]
enum LdpcCommand {
    /// Design a parity-check matrix and write it as alist.
    Design {
        #[command(flatten)]
        args: LdpcArgs,
    },
    /// Decode random blocks over a QBER grid and write the sweep table.
    Sim {
        #[command(flatten)]
        args: LdpcArgs,
        /// alist matrix; designed from the config when absent.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        trials: Option<u64>,
        /// Comma-separated QBER values.
        #[arg(long, value_delimiter = ',')]
        qber: Option<Vec<f64>>,
    },
    /// Compute the syndrome of a key file.
    Syndrome {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        key: PathBuf,
        /// File name inside the output directory.
        #[arg(long, default_value = "syndrome.txt")]
        name: String,
    },
    /// Correct a received key against a syndrome.
    Decode {
        #[command(flatten)]
        args: LdpcArgs,
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        received: PathBuf,
        #[arg(long)]
        syndrome: PathBuf,
        #[arg(long)]
        qber: f64,
    },
}

fn print_json<T: serde::Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("summary serializes"));
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = Common { config: cli.config, seed: cli.seed, out: cli.out, format: cli.format };
    match cli.command {
        Command::Simulate { duration } => print_json(&simulate::run(&common, duration)?),
        Command::Keyrate { counts } => print_json(&keyrate::run(&common, counts.as_deref())?),
        Command::Ldpc(LdpcCommand::Design { args }) => print_json(&ldpc::run_design(&common, &args.overrides())?),
        Command::Ldpc(LdpcCommand::Sim { args, matrix, trials, qber }) => {
            let o = LdpcOverrides { trials, qber_grid: qber, ..args.overrides() };
            print_json(&ldpc::run_sim(&common, &o, matrix.as_deref())?)
        }
        Command::Ldpc(LdpcCommand::Syndrome { matrix, key, name }) => {
            println!("{}", ldpc::bits_to_string(&ldpc::run_syndrome(&common, &matrix, &key, &name)?))
        }
        Command::Ldpc(LdpcCommand::Decode { args, matrix, received, syndrome, qber }) => {
            print_json(&ldpc::run_decode(&common, &args.overrides(), &matrix, &received, &syndrome, qber)?)
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qframe: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
