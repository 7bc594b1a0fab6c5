mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gscreen_core::{NoiseFamily, NullTailMethod, TailMode};

#[derive(Parser, Debug)]
#[command(version, about = "Periodicity screening for expression time series")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct GlobalArgs {
    /// Master seed for every random stream
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Worker threads (defaults to all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the report here instead of stdout
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the g-test on every row of a matrix and select genes by BH
    Screen(ScreenArgs),

    /// Replicated screening simulation: Tot, Pos, EFDR and Z per FDR level
    Simulate(SimulateArgs),

    /// Numerical checks of the null distributions
    #[command(subcommand)]
    Verify(VerifyCommand),
}

#[derive(Args, Debug)]
struct ScreenArgs {
    /// Matrix file: gene id, then one column per time point
    input: PathBuf,

    /// First row is a header
    #[arg(long, conflicts_with = "no_header")]
    header: bool,

    /// First row is data
    #[arg(long)]
    no_header: bool,

    /// Field delimiter: comma, tab, or a single character
    #[arg(long)]
    delimiter: Option<String>,

    /// FDR level
    #[arg(long, default_value_t = 0.05)]
    theta: f64,

    #[arg(long, value_parser = parse_method, default_value = "fisher-exact")]
    method: NullTailMethod,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Noise families (normal, t5, exp1, chisq2, or all)
    #[arg(long, value_delimiter = ',', default_value = "normal")]
    dist: Vec<String>,

    /// Series lengths
    #[arg(long, value_delimiter = ',', default_value = "50")]
    n: Vec<usize>,

    /// FDR levels
    #[arg(long, value_delimiter = ',', default_values_t = [0.15, 0.05])]
    theta: Vec<f64>,

    #[arg(long, default_value_t = 100)]
    replicates: usize,

    /// Amplitude of the periodic genes (0 gives a null-only cohort)
    #[arg(long, default_value_t = 1.0)]
    beta: f64,

    #[arg(long, default_value_t = 2000)]
    genes: usize,

    #[arg(long, default_value_t = 100)]
    periodic: usize,

    /// Angular frequency of the periodic genes [default: 2π/10]
    #[arg(long)]
    omega: Option<f64>,

    /// Rank cut-off for the Z column
    #[arg(long, default_value_t = 100)]
    top: usize,

    #[arg(long, value_parser = parse_method, default_value = "fisher-exact")]
    method: NullTailMethod,

    /// Also write the first replicate's matrix (first dist and n) as CSV
    #[arg(long)]
    export_cohort: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum VerifyCommand {
    /// Gaussian null: empirical studentized tail against Fisher's exact law
    NullOracle(NullOracleArgs),

    /// Empirical tail ratio against the Gumbel limit
    MdRatio(MdRatioArgs),

    /// Exact-to-Gumbel tail ratio, no simulation
    Lemma31(Lemma31Args),

    /// Fisher p-values of null genes against a calibrated true null
    PvalueAccuracy(PvalueAccuracyArgs),
}

#[derive(Args, Debug, Clone)]
struct GridArgs {
    #[arg(long, allow_hyphen_values = true)]
    ymin: Option<f64>,

    #[arg(long, allow_hyphen_values = true)]
    ymax: Option<f64>,

    #[arg(long)]
    points: Option<usize>,

    /// Explicit grid, overriding ymin/ymax/points
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    ys: Vec<f64>,
}

#[derive(Args, Debug)]
struct NullOracleArgs {
    #[arg(long, default_value_t = 21)]
    n: usize,

    #[arg(long, default_value_t = 200_000)]
    replicates: usize,

    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args, Debug)]
struct MdRatioArgs {
    #[arg(long, default_value = "exp1", value_parser = parse_noise)]
    dist: NoiseFamily,

    #[arg(long, default_value_t = 512)]
    n: usize,

    #[arg(long, default_value = "studentized", value_parser = parse_mode)]
    mode: TailMode,

    #[arg(long, default_value_t = 100_000)]
    replicates: usize,

    #[command(flatten)]
    grid: GridArgs,

    /// Lower end of the accepted ratio bracket
    #[arg(long, default_value_t = 0.75)]
    lower: f64,

    /// Upper end of the accepted ratio bracket
    #[arg(long, default_value_t = 1.25)]
    upper: f64,
}

#[derive(Args, Debug)]
struct Lemma31Args {
    #[arg(long, default_value_t = 4001)]
    n: usize,

    #[command(flatten)]
    grid: GridArgs,

    /// Largest accepted |ratio - 1|
    #[arg(long, default_value_t = 0.05)]
    tol: f64,
}

#[derive(Args, Debug)]
struct PvalueAccuracyArgs {
    #[arg(long, default_value = "exp1", value_parser = parse_noise)]
    dist: NoiseFamily,

    #[arg(long, default_value_t = 50)]
    n: usize,

    #[arg(long, default_value_t = 100)]
    genes: usize,

    #[arg(long, default_value_t = 0.05)]
    theta: f64,

    /// Independent batches of `genes` null genes
    #[arg(long, default_value_t = 20)]
    replicates: usize,

    /// Null draws in the calibration table
    #[arg(long, default_value_t = 1_000_000)]
    calibration: usize,

    #[arg(long, default_value_t = 10_000)]
    grid_points: usize,

    /// Fail if the mean per-batch worst error exceeds this. Gaussian noise
    /// is always gated on three calibration standard errors.
    #[arg(long)]
    max_error: Option<f64>,
}

fn parse_method(s: &str) -> Result<NullTailMethod, String> {
    s.parse().map_err(|e: gscreen_core::Error| e.to_string())
}

fn parse_noise(s: &str) -> Result<NoiseFamily, String> {
    s.parse().map_err(|e: gscreen_core::Error| e.to_string())
}

fn parse_mode(s: &str) -> Result<TailMode, String> {
    s.parse().map_err(|e: gscreen_core::Error| e.to_string())
}

/// Outcome of a command that ran to completion.
pub enum Verdict {
    Ok,
    Failed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(t) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: cannot start {t} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Screen(a) => commands::screen(&cli.global, a),
        Command::Simulate(a) => commands::simulate(&cli.global, a),
        Command::Verify(v) => match v {
            VerifyCommand::NullOracle(a) => commands::null_oracle(&cli.global, a),
            VerifyCommand::MdRatio(a) => commands::md_ratio(&cli.global, a),
            VerifyCommand::Lemma31(a) => commands::lemma31(&cli.global, a),
            VerifyCommand::PvalueAccuracy(a) => commands::pvalue_accuracy(&cli.global, a),
        },
    };
    match result {
        Ok(Verdict::Ok) => ExitCode::SUCCESS,
        Ok(Verdict::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
