use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use robustcode::bench::{run_experiment, write_outputs, ExperimentConfig, SigmaRule};
use robustcode::calibration::{calibrate_unit, CalibrationMethod, CalibrationOptions};
use robustcode::decoders::{decode, DecoderConfig, DecoderKind};
use robustcode::io::{load_matrix, load_vector, save_matrix, save_vector};
use robustcode::matrixgen::{gen_gaussian_orthonormal, gen_partial_fourier};
use robustcode::model::{encode, MatrixKind, ReceivedWord, Signal};
use robustcode::rip::{compute_report, SearchMode, DEFAULT_SUBSET_BUDGET};
use robustcode::Result;

#[derive(Parser)]
#[command(
    name = "robustcode",
    version,
    about = "Decode real-valued block codes through sparse gross errors and dense noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte-Carlo decoding benchmark.
    Bench(BenchArgs),
    /// Generate a coding matrix container.
    Matrix(MatrixArgs),
    /// Encode a block: codeword = A x.
    Encode(EncodeArgs),
    /// Decode a received word.
    Decode(DecodeArgs),
    /// Restricted isometry report for Aᵀ or Qᵀ of a stored matrix.
    Rip(RipArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Gaussian,
    Fourier,
}

impl From<KindArg> for MatrixKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Gaussian => MatrixKind::GaussianOrthonormal,
            KindArg::Fourier => MatrixKind::PartialFourier,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DecoderArg {
    Socp,
    Lp,
}

impl From<DecoderArg> for DecoderKind {
    fn from(d: DecoderArg) -> Self {
        match d {
            DecoderArg::Socp => DecoderKind::Socp,
            DecoderArg::Lp => DecoderKind::Lp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    MonteCarlo,
    Analytic,
}

impl From<MethodArg> for CalibrationMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::MonteCarlo => CalibrationMethod::MonteCarlo,
            MethodArg::Analytic => CalibrationMethod::Analytic,
        }
    }
}

#[derive(Args)]
struct CalibrationArgs {
    /// Probability that the planted error is feasible.
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    #[arg(long, value_enum, default_value = "monte-carlo")]
    calibration: MethodArg,
    #[arg(long, default_value_t = 10_000)]
    mc_samples: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 512)]
    m: usize,
    #[arg(long, default_value_t = 256)]
    n: usize,
    /// Fraction of corrupted codeword entries.
    #[arg(long, default_value_t = 0.10)]
    rho: f64,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, value_enum, default_value = "gaussian")]
    matrix: KindArg,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "socp,lp")]
    decoders: Vec<DecoderArg>,
    /// Refit the detected gross errors by least squares (default).
    #[arg(long, overrides_with = "no_reproject")]
    reproject: bool,
    #[arg(long)]
    no_reproject: bool,
    /// Fixed noise level instead of median(|Ax|)/16.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    calibration: CalibrationArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MatrixArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "gaussian")]
    kind: KindArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Block x, one value per line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Received word y, one value per line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "lp")]
    decoder: DecoderArg,
    /// Standard deviation of the small errors; thresholds are calibrated to it.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Explicit ℓ2 radius for the SOCP decoder (overrides calibration).
    #[arg(long)]
    eps: Option<f64>,
    /// Explicit scalar λ for the LP decoder (overrides calibration).
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    reproject: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    calibration: CalibrationArgs,
    /// Also write the gross-error estimate.
    #[arg(long)]
    errors_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OperatorArg {
    At,
    Qt,
}

#[derive(Args)]
struct RipArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    kmax: usize,
    #[arg(long, value_enum, default_value = "at")]
    operator: OperatorArg,
    /// Pre-factor; defaults to √(m/rows) of the chosen operator.
    #[arg(long)]
    scale: Option<f64>,
    /// Sample this many subsets per size instead of enumerating.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SUBSET_BUDGET as u64)]
    budget: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn bench(args: BenchArgs) -> Result<()> {
    let mut config = ExperimentConfig::new(args.m, args.n, args.rho, args.trials);
    config.matrix_kind = args.matrix.into();
    config.decoders = args.decoders.into_iter().map(Into::into).collect();
    config.decoders.dedup();
    config.reproject = args.reproject || !args.no_reproject;
    config.base_seed = args.seed;
    config.confidence = args.calibration.confidence;
    config.calibration_method = args.calibration.calibration.into();
    config.mc_samples = args.calibration.mc_samples;
    if let Some(s) = args.sigma {
        config.sigma_rule = SigmaRule::Fixed(s);
    }
    let (records, summary) = run_experiment(&config)?;
    write_outputs(&args.out, &config, &records, &summary)?;
    for d in &summary.decoders {
        println!(
            "{:<4}  median rho_ideal {:.3}  mean {:.3}  median rho_oracle {:.3}  mean {:.3}  ({} of {} trials)",
            d.decoder.name(),
            d.median_rho_ideal,
            d.mean_rho_ideal,
            d.median_rho_oracle,
            d.mean_rho_oracle,
            d.trials_used,
            summary.trials
        );
    }
    Ok(())
}

fn matrix(args: MatrixArgs) -> Result<()> {
    let cm = match args.kind {
        KindArg::Gaussian => gen_gaussian_orthonormal(args.m, args.n, args.seed)?,
        KindArg::Fourier => gen_partial_fourier(args.m, args.n, args.seed)?,
    };
    save_matrix(&args.out, &cm)
}

fn encode_cmd(args: EncodeArgs) -> Result<()> {
    let cm = load_matrix(&args.matrix)?;
    let x = Signal::new(load_vector(&args.input)?)?;
    save_vector(&args.output, &encode(&cm, &x)?)
}

fn decode_cmd(args: DecodeArgs) -> Result<()> {
    let cm = load_matrix(&args.matrix)?;
    let y = ReceivedWord::new(load_vector(&args.input)?)?;
    let options = CalibrationOptions {
        confidence: args.calibration.confidence,
        method: args.calibration.calibration.into(),
        mc_samples: args.calibration.mc_samples,
        seed: args.seed,
    };
    let mut config = match args.decoder {
        DecoderArg::Socp => {
            let eps = match args.eps {
                Some(e) => e,
                None => calibrate_unit(&cm, &options)?.eps(args.sigma),
            };
            DecoderConfig::socp(eps)
        }
        DecoderArg::Lp => {
            let unit = calibrate_unit(&cm, &options)?;
            let lambdas = match args.lambda {
                Some(l) => &unit.s_unit * (l * args.sigma),
                None => unit.report(args.sigma)?.lambdas,
            };
            DecoderConfig::lp(lambdas)
        }
    };
    if args.reproject {
        config = config.with_reprojection(args.sigma);
    }
    let res = decode(&cm, &y, &config)?;
    if !res.diagnostics.converged {
        eprintln!(
            "warning: solver did not certify convergence after {} iterations",
            res.diagnostics.iterations
        );
    }
    save_vector(&args.output, &res.x_hat)?;
    if let Some(path) = args.errors_out {
        save_vector(&path, &res.e_hat)?;
    }
    Ok(())
}

fn rip(args: RipArgs) -> Result<()> {
    let cm = load_matrix(&args.matrix)?;
    let phi = match args.operator {
        OperatorArg::At => cm.a().transpose(),
        OperatorArg::Qt => cm.q().transpose(),
    };
    let scale = args
        .scale
        .unwrap_or_else(|| (cm.m() as f64 / phi.nrows() as f64).sqrt());
    let mode = match args.samples {
        Some(samples) => SearchMode::Sampled {
            samples,
            seed: args.seed,
        },
        None => SearchMode::Exact {
            budget: args.budget as u128,
        },
    };
    let report = compute_report(&phi, args.kmax, scale, mode)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bench(a) => bench(a),
        Command::Matrix(a) => matrix(a),
        Command::Encode(a) => encode_cmd(a),
        Command::Decode(a) => decode_cmd(a),
        Command::Rip(a) => rip(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
