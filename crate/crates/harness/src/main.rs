use clap::{Args, Parser, Subcommand, ValueEnum};
use retroplan_harness::config::parse_seeds;
use retroplan_harness::{
    analyze, run_experiment, write_experiment, ExperimentConfig, ExperimentKind, HarnessError,
    Scale, SettingSummary,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "retroplan",
    version,
    about = "Forward and backward Dyna planning experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Value prediction on channeling and broadcasting chains.
    PredictChain(RunArgs),
    /// Control on the maze with the model-free baseline and both Dyna agents.
    ControlMaze(RunArgs),
    /// Prediction AUC across fan-in/fan-out ratios.
    SweepFan(RunArgs),
    /// Reference-frame ablation in full learning and pure planning.
    AblateFrames(RunArgs),
    /// Control under reward and transition noise.
    AblateNoise(RunArgs),
    /// Rebuild summaries and plots from the curves in a results directory.
    Analyze {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Desk,
    Full,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration; built-in defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed count `n` (seeds 0..n) or a comma-separated list.
    #[arg(long)]
    seeds: Option<String>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    parallel: usize,
    #[arg(long, value_enum, default_value = "desk")]
    scale: ScaleArg,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long)]
    print_config: bool,
}

fn print_summaries(summaries: &[SettingSummary]) {
    for s in summaries {
        println!("{}", s.label);
        for r in &s.rows {
            println!(
                "  {:<28} auc {:>12.3}  normalized {:>7.3}  final {:.3} ± {:.3}",
                r.variant, r.auc, r.auc_normalized, r.final_mean, r.final_stderr
            );
        }
    }
}

fn run(kind: ExperimentKind, args: RunArgs) -> retroplan_harness::Result<()> {
    let scale = match args.scale {
        ScaleArg::Desk => Scale::Desk,
        ScaleArg::Full => Scale::Full,
    };
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default_for(kind, scale),
    };
    if config.kind != kind {
        return Err(HarnessError::Config(format!(
            "configuration is for {:?}, not {kind:?}",
            config.kind
        )));
    }
    if let Some(seeds) = &args.seeds {
        config.seeds = parse_seeds(seeds)?;
    }
    if let Some(out) = args.out {
        config.output_dir = Some(out);
    }
    if args.print_config {
        config.validate()?;
        println!("{}", config.to_json());
        return Ok(());
    }
    let out = config
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("results").join(format!("{kind:?}")));
    let result = run_experiment(&config, args.parallel)?;
    let summaries = write_experiment(&result, &out)?;
    print_summaries(&summaries);
    println!("wrote {} in {:.1}s", out.display(), result.wall_time);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::PredictChain(a) => run(ExperimentKind::PredictChain, a),
        Command::ControlMaze(a) => run(ExperimentKind::ControlMaze, a),
        Command::SweepFan(a) => run(ExperimentKind::SweepFanRatio, a),
        Command::AblateFrames(a) => run(ExperimentKind::ReferenceFrameAblation, a),
        Command::AblateNoise(a) => run(ExperimentKind::StochasticityAblation, a),
        Command::Analyze { out } => analyze(&out).map(|s| print_summaries(&s)),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
