//! `xum-eval` subcommands.
//!
//! Exit codes: 0 success, 1 I/O or format error, 2 semantic error
//! (empty summary, undefined score, invalid argument).

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::dataset::{
    corpus_stats, load_manifest, load_similarity_matrix, redundancy_filter, split_counts, CorpusStats,
    SplitCounts, DEFAULT_REDUNDANCY_THRESHOLD, REFERENCE_SPLITS,
};
use crate::embeddings::load_embedding_file;
use crate::error::{Error, Result};
use crate::importance::{importance_vector, read_logit_records, ImportanceVector};
use crate::report::{evaluate, load_predictions, parse_metric_list, round6, EvalOptions};
use crate::summary_parser::{parse_summary, validate_against_timeline, TaskKind};
use crate::temporal_codec::{build_interleaved_sequence, TimelineMap, DEFAULT_TARGET_FRAMES, DEFAULT_TOKEN_WIDTH};

pub const PROVIDER_ENV: &str = "XUM_EVAL_PROVIDER_URL";

#[derive(Debug, Parser)]
#[command(name = "xum-eval", version, about = "Video/text summarization parsing, scoring and evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,

    /// Digits per temporal token.
    #[arg(long, global = true, default_value_t = DEFAULT_TOKEN_WIDTH)]
    pub token_width: usize,

    /// Length of the normalized timeline.
    #[arg(long, global = true, default_value_t = DEFAULT_TARGET_FRAMES)]
    pub target_frames: usize,

    /// Render F-type scores as percentages in tables.
    #[arg(long, global = true)]
    pub percent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate predictions against a manifest.
    Eval(EvalArgs),
    /// Parse a generated summary into frame indices and text.
    Parse(ParseArgs),
    /// Per-frame importance scores from digit logits.
    Scores(ScoresArgs),
    /// Greedy redundancy filter over caption similarities.
    Filter(FilterArgs),
    /// Corpus statistics of a manifest.
    Stats(StatsArgs),
    /// Interleaved temporal-token / visual-slot sequence for a video.
    Encode(EncodeArgs),
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub predictions: PathBuf,
    /// Comma-separated subset of: f1, spearman, kendall, f_clip, cross_f_clip,
    /// vt_clip_score, bleu4, rouge_l, cider.
    #[arg(long, default_value = "")]
    pub metrics: String,
    #[arg(long, env = PROVIDER_ENV)]
    pub provider_url: Option<String>,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    /// Input file; stdin when omitted or `-`.
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "BOTH")]
    pub task: TaskKind,
    /// Drop out-of-range indices and sort the rest.
    #[arg(long)]
    pub canonical: bool,
}

#[derive(Debug, Args)]
pub struct ScoresArgs {
    /// JSON-lines logit records.
    #[arg(long)]
    pub logits: PathBuf,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// `XSIM` similarity matrix.
    #[arg(long, conflicts_with = "embeddings", required_unless_present = "embeddings")]
    pub sim: Option<PathBuf>,
    /// `XEMB` caption embeddings (cosine similarity).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_REDUNDANCY_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Warn when split shares deviate from 25000/1000/4000 by more than one point.
    #[arg(long)]
    pub expect_splits: bool,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub frame_count: usize,
    #[arg(long, default_value_t = 1.0)]
    pub fps: f64,
}

#[derive(Serialize)]
struct FilterOutput {
    kept: Vec<usize>,
    threshold: f64,
    input_count: usize,
    source: String,
}

#[derive(Serialize)]
struct StatsOutput {
    #[serde(flatten)]
    stats: CorpusStats,
    splits: SplitCounts,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

fn emit_json<T: Serialize>(cli: &Cli, value: &T, stdout: &mut dyn Write) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit_text(cli.out.as_deref(), &text, stdout)
}

fn emit_text(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn read_input(input: Option<&Path>, stdin: &mut dyn Read) -> Result<String> {
    match input {
        Some(p) if p != Path::new("-") => std::fs::read_to_string(p).map_err(|e| Error::io(p, e)),
        _ => {
            let mut s = String::new();
            stdin.read_to_string(&mut s).map_err(|e| Error::io("<stdin>", e))?;
            Ok(s)
        }
    }
}

pub fn execute(cli: &Cli, stdin: &mut dyn Read, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Eval(args) => {
            let records = load_manifest(&args.manifest, cli.target_frames)?;
            let predictions = load_predictions(&args.predictions)?;
            let opts = EvalOptions {
                token_width: cli.token_width,
                target_frames: cli.target_frames,
                metrics: parse_metric_list(&args.metrics)?,
                provider_url: args.provider_url.clone().filter(|u| !u.is_empty()),
                percent: cli.percent,
                ..EvalOptions::default()
            };
            let report = evaluate(&records, &predictions, &opts)?;
            match cli.format {
                OutputFormat::Json => emit_text(cli.out.as_deref(), &report.to_json()?, stdout),
                OutputFormat::Table => {
                    if let Some(path) = &cli.out {
                        emit_text(Some(path), &report.to_json()?, stdout)?;
                    }
                    emit_text(None, &report.to_table(cli.percent), stdout)
                }
            }
        }
        Command::Parse(args) => {
            let raw = read_input(args.input.as_deref(), stdin)?;
            let mut parsed = parse_summary(raw.trim_end_matches(['\n', '\r']), args.task, cli.token_width)?;
            if args.canonical && !(args.task == TaskKind::Text && parsed.is_empty()) {
                let map = TimelineMap::identity(cli.target_frames)?;
                parsed = validate_against_timeline(&parsed, &map)?;
            }
            emit_json(cli, &parsed, stdout)
        }
        Command::Scores(args) => {
            let records = read_logit_records(&args.logits)?;
            let iv = importance_vector(&records, cli.target_frames)?;
            let rounded = ImportanceVector {
                scores: iv.scores.iter().map(|&s| round6(s)).collect(),
                mean_score: round6(iv.mean_score),
            };
            emit_json(cli, &rounded, stdout)
        }
        Command::Filter(args) => {
            let (kept, count, source) = match (&args.sim, &args.embeddings) {
                (Some(p), _) => {
                    let m = load_similarity_matrix(p)?;
                    let n = crate::dataset::SimilaritySource::len(&m);
                    (redundancy_filter(&m, args.threshold)?, n, format!("similarity matrix {}", p.display()))
                }
                (None, Some(p)) => {
                    let set = load_embedding_file(p)?;
                    (redundancy_filter(&set, args.threshold)?, set.len(), format!("embedding cosine {}", p.display()))
                }
                (None, None) => return Err(Error::Argument("one of --sim or --embeddings is required".into())),
            };
            emit_json(
                cli,
                &FilterOutput {
                    kept,
                    threshold: args.threshold,
                    input_count: count,
                    source,
                },
                stdout,
            )
        }
        Command::Stats(args) => {
            let records = load_manifest(&args.manifest, cli.target_frames)?;
            let stats = corpus_stats(&records, cli.token_width)?;
            let splits = split_counts(&records);
            let warnings = if args.expect_splits {
                splits.proportion_warnings(&REFERENCE_SPLITS)
            } else {
                Vec::new()
            };
            for w in &warnings {
                log::warn!("{w}");
            }
            let stats = CorpusStats {
                mean_duration_s: round6(stats.mean_duration_s),
                mean_text_tokens: round6(stats.mean_text_tokens),
                mean_video_summary_frames: round6(stats.mean_video_summary_frames),
                mean_compression_ratio: round6(stats.mean_compression_ratio),
                ..stats
            };
            emit_json(cli, &StatsOutput { stats, splits, warnings }, stdout)
        }
        Command::Encode(args) => {
            let map = TimelineMap::new(args.frame_count, cli.target_frames, args.fps)?;
            emit_json(cli, &build_interleaved_sequence(&map, cli.token_width)?, stdout)
        }
    }
}

/// Runs the parsed command and returns the process exit code.
pub fn run(cli: &Cli, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match execute(cli, stdin, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
