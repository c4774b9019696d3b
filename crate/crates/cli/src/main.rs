use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vidret_cli::{
    cmd_aggregate, cmd_analyze, cmd_evaluate, exit_code, ReportFormat, RunConfig, Task,
};
use vidret_core::aggregation::{AggregationMethod, KMeansParams, DEFAULT_FRAME_INDEX};
use vidret_core::{AggregationConfig, StdConvention};

#[derive(Parser)]
#[command(
    name = "vidret",
    version,
    about = "Zero-shot video retrieval evaluation over precomputed embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Aggregate a frame archive into <out>/videos.frem.
    Aggregate {
        #[command(flatten)]
        agg: AggArgs,
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank, score and dump per-query ranks.
    Evaluate {
        #[arg(long, value_enum, default_value = "tvr")]
        task: TaskArg,
        #[command(flatten)]
        agg: AggArgs,
        /// Frame archive (aggregated on the fly) or video archive.
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        texts: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        split: Option<String>,
        /// One video id per line; overrides the split tag filter.
        #[arg(long = "split-ids")]
        split_ids: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        report: ReportArg,
        #[arg(long, value_enum, default_value = "population")]
        std: StdArg,
    },
    /// Length-versus-rank table and worst-ranked queries from a rank dump.
    Analyze {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to <out>/ranks.csv.
        #[arg(long)]
        ranks: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        top: usize,
    },
}

#[derive(Args)]
struct AggArgs {
    #[arg(long, value_enum, default_value = "mean")]
    agg: AggArg,
    #[arg(long = "frame-index", default_value_t = DEFAULT_FRAME_INDEX)]
    frame_index: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long = "normalize-frames", value_enum, default_value = "on")]
    normalize_frames: OnOff,
    #[arg(long = "max-iterations", default_value_t = vidret_core::aggregation::DEFAULT_MAX_ITERATIONS)]
    max_iterations: usize,
    #[arg(long, default_value_t = vidret_core::aggregation::DEFAULT_CONVERGENCE_TOL)]
    tol: f64,
}

impl AggArgs {
    fn config(&self) -> AggregationConfig {
        let method = match self.agg {
            AggArg::Single => AggregationMethod::SingleFrame {
                frame_index: self.frame_index,
            },
            AggArg::Mean => AggregationMethod::Mean,
            AggArg::Kmeans => AggregationMethod::KMeans(KMeansParams {
                k: self.k,
                max_iterations: self.max_iterations,
                convergence_tol: self.tol,
            }),
        };
        AggregationConfig {
            method,
            normalize_frames_first: self.normalize_frames == OnOff::On,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AggArg {
    Single,
    Mean,
    Kmeans,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Tvr,
    Vtr,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportArg {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum StdArg {
    Population,
    Sample,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Aggregate { agg, frames, out } => {
            let mut cfg = RunConfig::new(out);
            cfg.aggregation = agg.config();
            cfg.frames = Some(frames);
            cmd_aggregate(&cfg).map(|path| println!("{}", path.display()))
        }
        Command::Evaluate {
            task,
            agg,
            frames,
            texts,
            manifest,
            split,
            split_ids,
            out,
            report,
            std,
        } => {
            let mut cfg = RunConfig::new(out);
            cfg.task = match task {
                TaskArg::Tvr => Task::Tvr,
                TaskArg::Vtr => Task::Vtr,
            };
            cfg.aggregation = agg.config();
            cfg.frames = Some(frames);
            cfg.texts = Some(texts);
            cfg.manifest = Some(manifest);
            cfg.split = split;
            cfg.split_ids = split_ids;
            cfg.report = match report {
                ReportArg::Text => ReportFormat::Text,
                ReportArg::Json => ReportFormat::Json,
            };
            cfg.eval.std = match std {
                StdArg::Population => StdConvention::Population,
                StdArg::Sample => StdConvention::Sample,
            };
            cmd_evaluate(&cfg).map(|eval| print!("{}", eval.report.to_text()))
        }
        Command::Analyze {
            manifest,
            out,
            ranks,
            top,
        } => {
            let mut cfg = RunConfig::new(out);
            cfg.manifest = Some(manifest);
            cfg.ranks = ranks;
            cfg.top = top;
            cmd_analyze(&cfg).map(|o| {
                println!("median_rank={:.1}", o.median_rank);
                println!("{}", o.length_rank_csv.display());
            })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
