//! File-level entry points behind the `vidret` subcommands.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use vidret_core::analysis::{format_worst_pairs, length_rank_table, worst_pairs};
use vidret_core::dataset::{
    load_manifest, read_archive, read_id_list, select_ids, select_split, write_archive,
    write_sidecar, ArchiveRole, CorpusManifest, FrameGap,
};
use vidret_core::{AggregationConfig, Error, EvalOptions, MetricReport, RankVector, Result};

use crate::pipeline::{aggregate_archive, evaluate_corpus, Evaluation, Task, VideoSet};

pub const VIDEO_ARCHIVE: &str = "videos.frem";
pub const RANKS_CSV: &str = "ranks.csv";
pub const LENGTH_RANK_CSV: &str = "length_rank.csv";
pub const LENGTH_RANK_SUMMARY: &str = "length_rank_summary.txt";
pub const WORST_PAIRS: &str = "worst_pairs.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
}

impl ReportFormat {
    pub fn file_name(self) -> &'static str {
        match self {
            ReportFormat::Text => "report.txt",
            ReportFormat::Json => "report.json",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub task: Task,
    pub aggregation: AggregationConfig,
    /// Frame archive (aggregated on the fly) or an already aggregated video
    /// archive.
    pub frames: Option<PathBuf>,
    pub texts: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub split: Option<String>,
    pub split_ids: Option<PathBuf>,
    pub out: PathBuf,
    pub report: ReportFormat,
    pub eval: EvalOptions,
    /// Rank dump read by `analyze`; defaults to `<out>/ranks.csv`.
    pub ranks: Option<PathBuf>,
    pub top: usize,
}

impl RunConfig {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self {
            task: Task::Tvr,
            aggregation: AggregationConfig::default(),
            frames: None,
            texts: None,
            manifest: None,
            split: None,
            split_ids: None,
            out: out.into(),
            report: ReportFormat::Text,
            eval: EvalOptions::default(),
            ranks: None,
            top: 20,
        }
    }
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::InvalidConfig(format!("{flag} is required")))
}

fn warn_gaps(gaps: &[FrameGap]) {
    for gap in gaps {
        eprintln!(
            "warning: video {} is missing {} frame(s) between its first and last index",
            gap.video_id,
            gap.missing.len()
        );
    }
}

/// Writes `<out>/videos.frem` and returns its path.
pub fn cmd_aggregate(cfg: &RunConfig) -> Result<PathBuf> {
    let frames = read_archive(required(&cfg.frames, "--frames")?)?;
    let (videos, gaps) = aggregate_archive(&frames, &cfg.aggregation)?;
    warn_gaps(&gaps);
    fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join(VIDEO_ARCHIVE);
    write_archive(&videos, &path)?;
    write_sidecar(
        &path,
        &serde_json::json!({ "aggregation": cfg.aggregation, "source_rows": frames.len() }),
    )?;
    Ok(path)
}

/// Full manifest plus the evaluated subset. An id list takes precedence
/// over a split tag; with neither, the whole manifest is used.
pub fn load_selection(cfg: &RunConfig) -> Result<(CorpusManifest, CorpusManifest)> {
    let full = load_manifest(required(&cfg.manifest, "--manifest")?)?;
    let selected = match (&cfg.split_ids, &cfg.split) {
        (Some(path), split) => {
            let label = split.clone().unwrap_or_else(|| path.display().to_string());
            select_ids(&full, &read_id_list(path)?, &label)?
        }
        (None, Some(split)) => select_split(&full, split)?,
        (None, None) => full.clone(),
    };
    Ok((full, selected))
}

fn load_videos(path: &Path, aggregation: &AggregationConfig) -> Result<VideoSet> {
    let archive = read_archive(path)?;
    match archive.role() {
        ArchiveRole::Frame => {
            let (videos, gaps) = aggregate_archive(&archive, aggregation)?;
            warn_gaps(&gaps);
            VideoSet::from_archive(&videos)
        }
        ArchiveRole::Video => VideoSet::from_archive(&archive),
        ArchiveRole::Text => Err(Error::Format(format!(
            "{} holds text embeddings, expected frames or videos",
            path.display()
        ))),
    }
}

#[derive(Serialize)]
struct JsonReport<'a> {
    task: Task,
    split: &'a str,
    galleries: usize,
    min_rank_over_captions: bool,
    #[serde(flatten)]
    metrics: &'a MetricReport,
}

pub fn render_report(eval: &Evaluation, split: &str, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => {
            let task = match eval.task {
                Task::Tvr => "tvr",
                Task::Vtr => "vtr",
            };
            format!(
                "task={task}\nsplit={split}\ngalleries={}\nmin_rank_over_captions={}\n{}",
                eval.galleries,
                eval.collapsed,
                eval.report.to_text()
            )
        }
        ReportFormat::Json => {
            let doc = JsonReport {
                task: eval.task,
                split,
                galleries: eval.galleries,
                min_rank_over_captions: eval.collapsed,
                metrics: &eval.report,
            };
            let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
            s.push('\n');
            s
        }
    }
}

pub fn write_ranks_csv(ranks: &RankVector, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["query_id", "target_id", "rank"])
        .map_err(csv_error)?;
    for (id, target, rank) in ranks.iter() {
        w.write_record([id, target, &rank.to_string()])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ranks_csv(path: &Path) -> Result<RankVector> {
    let file = File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("rank dump {}: {e}", path.display()),
        ))
    })?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    let headers = r.headers().map_err(csv_error)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["query_id", "target_id", "rank"] {
        return Err(Error::Format(format!(
            "{}: unexpected header {headers:?}",
            path.display()
        )));
    }
    let (mut ids, mut targets, mut ranks) = (vec![], vec![], vec![]);
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let rank = rec[2].parse::<usize>().map_err(|e| Error::Parse {
            line: i + 2,
            message: format!("bad rank {:?}: {e}", &rec[2]),
        })?;
        ids.push(rec[0].to_owned());
        targets.push(rec[1].to_owned());
        ranks.push(rank);
    }
    let gallery = ranks.iter().copied().max().unwrap_or(1);
    RankVector::new(ids, targets, ranks, gallery)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("csv: {other:?}")),
    }
}

/// Writes the report and `<out>/ranks.csv`.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<Evaluation> {
    let (full, selected) = load_selection(cfg)?;
    let videos = load_videos(required(&cfg.frames, "--frames")?, &cfg.aggregation)?;
    let texts = read_archive(required(&cfg.texts, "--texts")?)?;
    let eval = evaluate_corpus(&full, &selected, &videos, &texts, cfg.task, &cfg.eval)?;

    fs::create_dir_all(&cfg.out)?;
    let split = cfg.split.as_deref().unwrap_or("all");
    fs::write(
        cfg.out.join(cfg.report.file_name()),
        render_report(&eval, split, cfg.report),
    )?;
    write_ranks_csv(&eval.ranks, &cfg.out.join(RANKS_CSV))?;
    Ok(eval)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOutputs {
    pub length_rank_csv: PathBuf,
    pub summary: PathBuf,
    pub worst_pairs: PathBuf,
    pub median_rank: f64,
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<AnalysisOutputs> {
    let manifest = load_manifest(required(&cfg.manifest, "--manifest")?)?;
    let ranks_path = cfg.ranks.clone().unwrap_or_else(|| cfg.out.join(RANKS_CSV));
    let ranks = read_ranks_csv(&ranks_path)?;
    let study = length_rank_table(&ranks, &manifest)?;
    let pairs = worst_pairs(&ranks, &manifest, cfg.top)?;

    fs::create_dir_all(&cfg.out)?;
    let out = AnalysisOutputs {
        length_rank_csv: cfg.out.join(LENGTH_RANK_CSV),
        summary: cfg.out.join(LENGTH_RANK_SUMMARY),
        worst_pairs: cfg.out.join(WORST_PAIRS),
        median_rank: study.median_rank,
    };
    let mut w = BufWriter::new(File::create(&out.length_rank_csv)?);
    study.write_csv(&mut w)?;
    w.flush()?;
    fs::write(&out.summary, study.summary_text())?;
    fs::write(&out.worst_pairs, format_worst_pairs(&pairs))?;
    Ok(out)
}
