use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use tsb_core::harness::{emit_results, with_threads, OutputFormat, Study, SystemConfig};

#[derive(Parser, Debug)]
#[command(name = "tsb", version, about = "Two-stage beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    study: StudyCmd,

    /// JSON configuration; study defaults are used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum StudyCmd {
    /// Exact projections against deterministic equivalents.
    Accuracy,
    /// TSB rate and beam count over the threshold.
    DeltaSweep,
    /// Delta sweep over several user counts.
    LoadSweep,
    /// Beams per user against angular position.
    AngleProfile,
}

impl From<StudyCmd> for Study {
    fn from(c: StudyCmd) -> Study {
        match c {
            StudyCmd::Accuracy => Study::Accuracy,
            StudyCmd::DeltaSweep => Study::DeltaSweep,
            StudyCmd::LoadSweep => Study::LoadSweep,
            StudyCmd::AngleProfile => Study::AngleProfile,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Format {
    Csv,
    Json,
}

fn run(cli: Cli) -> tsb_core::Result<()> {
    let study: Study = cli.study.into();
    let mut config = match &cli.config {
        Some(path) => SystemConfig::from_json_file(path)?,
        None => study.default_config(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;
    let threads = cli.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    log::info!("running {} with {threads} threads", study.name());
    let result = with_threads(threads, || study.run(&config))??;
    let format = match cli.format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    let stem = format!("{}-{}", study.name(), config.seed);
    for path in emit_results(&result, &cli.out, &stem, format)? {
        println!("{}", path.display());
    }
    for t in &result.timings {
        log::info!("{:>12}: {:.3}s", t.stage, t.seconds);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
