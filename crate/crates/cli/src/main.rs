use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use deepfir::engine::{build_processor, run_processor, TraceOptions};
use deepfir::latency::{
    end_to_end_latency, estimate_mips, measure_realtime, reference_cost, reproduce_reference_table,
    DEFAULT_HARDWARE_MS, REFERENCE_GROUP_DELAY_MS,
};
use deepfir::minphase::DelayWeighting;
use deepfir::model::{HeadKind, ModelDims};
use deepfir::report::{
    evaluate, sha256_hex, to_json, Alignment, GroupDelaySummary, RunReport, ENGINE_VERSION,
    SCHEMA_VERSION,
};
use deepfir::wav::{read_wav, write_wav, WavAudio};
use deepfir::error::with_path;
use deepfir::{Error, Mode, ModelWeights, Result, StreamConfig};

#[derive(Parser)]
#[command(name = "deepfir", version, about = "Low-latency speech enhancement with predicted FIR filters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enhance a 16 kHz mono PCM16 WAV file.
    Process(ProcessArgs),
    /// Score an estimate against a reference.
    Eval(EvalArgs),
    /// Latency and compute arithmetic for a configuration.
    Latency(LatencyArgs),
    /// Time the streaming engine on synthetic input.
    Bench(BenchArgs),
    /// Print the header of a weights file.
    InspectWeights(InspectArgs),
    /// Write a deterministic weights file for testing.
    MakeWeights(MakeWeightsArgs),
}

#[derive(Args, Clone)]
struct StreamArgs {
    #[arg(long, default_value = "deepfir", value_parser = parse_mode)]
    mode: Mode,
    /// Synthesis window in ms; must be a whole number of samples.
    #[arg(long, default_value_t = 1.0)]
    synthesis_ms: f64,
    #[arg(long, default_value_t = deepfir::filter::DEFAULT_TAPS)]
    taps: usize,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    min_phase: bool,
}

impl StreamArgs {
    fn config(&self) -> Result<StreamConfig> {
        StreamConfig::from_ms(self.mode, self.synthesis_ms, self.taps, self.min_phase)
    }
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args)]
struct ProcessArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    weights: PathBuf,
    #[command(flatten)]
    stream: StreamArgs,
    /// Write a JSON run report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Clean reference for scoring the output.
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    /// Unprocessed mixture for SI-SDR improvement; defaults to the input.
    #[arg(long, requires = "reference")]
    mix: Option<PathBuf>,
    /// Record per-hop wall time in the report.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    est: PathBuf,
    #[arg(long)]
    mix: Option<PathBuf>,
    /// Samples by which the estimate trails the reference.
    #[arg(long, default_value_t = 0, allow_negative_numbers = true, conflicts_with = "best_lag")]
    lag: isize,
    /// Search the lag within ±128 samples instead.
    #[arg(long)]
    best_lag: bool,
}

#[derive(Args)]
struct LatencyArgs {
    #[arg(long, default_value = "deepfir", value_parser = parse_mode)]
    mode: Mode,
    #[arg(long, default_value_t = 1.0)]
    synthesis_ms: f64,
    #[arg(long, default_value_t = REFERENCE_GROUP_DELAY_MS)]
    group_delay_ms: f64,
    #[arg(long, default_value_t = DEFAULT_HARDWARE_MS)]
    hardware_ms: f64,
    /// Print the reference latency and compute table recomputed from the formulas.
    #[arg(long)]
    table1: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    weights: PathBuf,
    #[arg(long, default_value_t = 10.0)]
    seconds: f64,
    #[command(flatten)]
    stream: StreamArgs,
}

#[derive(Args)]
struct InspectArgs {
    weights: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Head {
    Taps,
    Mask,
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    /// Output pinned to a unit impulse (taps) or an all-pass mask.
    Identity,
    /// Output pinned to a unit impulse delayed by `--delay` samples.
    Delay,
    /// Uniform random weights in ±scale.
    Random,
    Zeros,
}

#[derive(Args)]
struct MakeWeightsArgs {
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value_t = Head::Taps)]
    head: Head,
    #[arg(long, value_enum, default_value_t = Init::Identity)]
    init: Init,
    #[arg(long, default_value_t = 0)]
    delay: usize,
    #[arg(long, default_value_t = deepfir::filter::DEFAULT_TAPS)]
    taps: usize,
    #[arg(long, default_value_t = deepfir::model::DEFAULT_HIDDEN)]
    hidden: usize,
    #[arg(long, default_value_t = deepfir::model::DEFAULT_FC)]
    fc: usize,
    #[arg(long, default_value_t = 0.05)]
    scale: f32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn load_weights(path: &Path) -> Result<(Arc<ModelWeights>, String)> {
    let bytes = std::fs::read(path).map_err(|e| with_path(e, path))?;
    let weights = ModelWeights::load(&bytes)?;
    Ok((Arc::new(weights), sha256_hex(&bytes)))
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", to_json(value));
}

fn process(args: ProcessArgs) -> Result<()> {
    let config = args.stream.config()?;
    let (weights, digest) = load_weights(&args.weights)?;
    let input = read_wav(&args.input)?;
    let trace = TraceOptions {
        group_delay: config.mode == Mode::DeepFir,
        timing: args.timing,
    };
    let processor = build_processor(&config, weights, trace)?;
    let (output, trace) = run_processor(processor, &input.samples)?;
    write_wav(&args.output, &WavAudio::new(output.clone()))?;

    let Some(report_path) = args.report else {
        return Ok(());
    };
    let metrics = match &args.reference {
        Some(r) => {
            let reference = read_wav(r)?.samples;
            let mix = match &args.mix {
                Some(m) => read_wav(m)?.samples,
                None => input.samples.clone(),
            };
            Some(evaluate(&reference, &output, Some(&mix), Alignment::for_config(&config))?)
        }
        None => None,
    };
    let mean_gd = trace.mean_group_delay_ms();
    let timing = if args.timing {
        let hop_us = config.hop as f64 / config.sample_rate as f64 * 1e6;
        Some(deepfir::latency::TimingReport::from_timings(&trace.timings, hop_us)?)
    } else {
        None
    };
    let report = RunReport {
        schema: SCHEMA_VERSION,
        engine_version: ENGINE_VERSION,
        weights_sha256: digest,
        config,
        hops: trace.hops,
        group_delay: GroupDelaySummary {
            mean_ms: mean_gd,
            weighting: DelayWeighting::default(),
            hops_measured: trace.group_delay_ms.len(),
        },
        latency: end_to_end_latency(&config, mean_gd.unwrap_or(0.0), DEFAULT_HARDWARE_MS)?,
        metrics,
        timing,
    };
    std::fs::write(report_path, to_json(&report) + "\n")?;
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let reference = read_wav(&args.reference)?.samples;
    let estimate = read_wav(&args.est)?.samples;
    let mix = args.mix.as_ref().map(read_wav).transpose()?.map(|m| m.samples);
    let alignment = if args.best_lag {
        Alignment::BestLag
    } else {
        Alignment::Fixed { lag: args.lag }
    };
    print_json(&evaluate(&reference, &estimate, mix.as_deref(), alignment)?);
    Ok(())
}

fn latency(args: LatencyArgs) -> Result<()> {
    if args.table1 {
        println!(
            "{:<8} {:>8} {:>10} {:>10} {:>10} {:>10} {:>8} {:>8}  status",
            "mode", "synth", "alg", "alg*", "e2e", "e2e*", "mips", "mips*"
        );
        for row in reproduce_reference_table()? {
            let status = if row.flagged {
                "FLAGGED: reported end-to-end disagrees with the formula"
            } else if !row.mips_within_15_percent {
                "latency ok, MIPS outside 15%"
            } else {
                "ok"
            };
            println!(
                "{:<8} {:>8} {:>10.4} {:>10} {:>10.4} {:>10} {:>8.0} {:>8}  {status}",
                row.mode.to_string(),
                row.synthesis_ms,
                row.computed.algorithmic_ms,
                row.reported_algorithmic_ms,
                row.computed.end_to_end_ms,
                row.reported_end_to_end_ms,
                row.predicted_mips,
                row.reported_mips,
            );
        }
        println!("(* = reported value)");
        return Ok(());
    }
    let config = StreamConfig::from_ms(args.mode, args.synthesis_ms, deepfir::filter::DEFAULT_TAPS, true)?;
    let report = end_to_end_latency(&config, args.group_delay_ms, args.hardware_ms)?;
    let mips = estimate_mips(&reference_cost(args.mode)?, &config)?;
    print_json(&serde_json::json!({
        "mode": config.mode,
        "latency": report,
        "mips_estimate": mips,
    }));
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let config = args.stream.config()?;
    let (weights, _) = load_weights(&args.weights)?;
    print_json(&measure_realtime(&config, weights, args.seconds)?);
    Ok(())
}

fn inspect(args: InspectArgs) -> Result<()> {
    let (weights, digest) = load_weights(&args.weights)?;
    let d = weights.dims();
    let head = match d.head {
        HeadKind::SigmoidTaps => "sigmoid-taps",
        HeadKind::SigmoidMask => "sigmoid-mask",
    };
    println!("format: DFW1");
    println!("head: {head}");
    println!("feature_dim: {}", d.feature_dim);
    println!("hidden: {}", d.hidden);
    println!("lstm_layers: {}", deepfir::model::NUM_LAYERS);
    println!("fc_dim: {}", d.fc_dim);
    println!("out_dim: {}", d.out_dim);
    println!("parameters: {}", weights.parameter_count());
    println!("sha256: {digest}");
    Ok(())
}

fn make_weights(args: MakeWeightsArgs) -> Result<()> {
    let base = match args.head {
        Head::Taps => ModelDims::taps(),
        Head::Mask => ModelDims::mask(),
    };
    let dims = ModelDims {
        hidden: args.hidden,
        fc_dim: args.fc,
        out_dim: match args.head {
            Head::Taps => args.taps,
            Head::Mask => base.out_dim,
        },
        ..base
    };
    let weights = match (args.init, args.head) {
        (Init::Identity, Head::Taps) => ModelWeights::pinned_delay(dims, 0)?,
        (Init::Identity, Head::Mask) => ModelWeights::pinned_mask(dims, |_| true)?,
        (Init::Delay, _) => ModelWeights::pinned_delay(dims, args.delay)?,
        (Init::Random, _) => ModelWeights::random(dims, args.scale, args.seed)?,
        (Init::Zeros, _) => ModelWeights::zeros(dims)?,
    };
    std::fs::write(&args.output, weights.to_bytes())?;
    Ok(())
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors and 0 for --help
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Process(a) => process(a),
        Command::Eval(a) => eval(a),
        Command::Latency(a) => latency(a),
        Command::Bench(a) => bench(a),
        Command::InspectWeights(a) => inspect(a),
        Command::MakeWeights(a) => make_weights(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {}", e.kind(), e.message());
            ExitCode::from(1)
        }
    }
}
