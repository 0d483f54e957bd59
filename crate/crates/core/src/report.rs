//! Corpus evaluation: predictions against a manifest, producing an [`EvalReport`].
//!
//! Per-video problems (unparsable output, unreadable embedding files) are
//! recorded on that video and the run continues. Corpus means only include
//! videos that produced the metric.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::VideoRecord;
use crate::embeddings::{load_embedding_file, EmbeddingSet, PayloadKind, RemoteProvider};
use crate::error::{Error, LineError, Result};
use crate::importance::{importance_vector, read_logit_records};
use crate::metrics::{
    bleu4, cider, cross_f_clip, f1_frame_overlap, f_clip, kendall_tau, rouge_l, spearman_rho,
    stable_mean, tokenize, vt_clip_score, ClipScore, TextMetricConfig, TextScore, V2VScore,
};
use crate::summary_parser::{parse_summary, validate_against_timeline, TaskKind};
use crate::temporal_codec::{TimelineMap, DEFAULT_TARGET_FRAMES, DEFAULT_TOKEN_WIDTH};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    F1,
    Spearman,
    Kendall,
    FClip,
    CrossFClip,
    VtClipScore,
    Bleu4,
    RougeL,
    Cider,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Metric::F1,
        Metric::Spearman,
        Metric::Kendall,
        Metric::FClip,
        Metric::CrossFClip,
        Metric::VtClipScore,
        Metric::Bleu4,
        Metric::RougeL,
        Metric::Cider,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::F1 => "f1",
            Metric::Spearman => "spearman",
            Metric::Kendall => "kendall",
            Metric::FClip => "f_clip",
            Metric::CrossFClip => "cross_f_clip",
            Metric::VtClipScore => "vt_clip_score",
            Metric::Bleu4 => "bleu4",
            Metric::RougeL => "rouge_l",
            Metric::Cider => "cider",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| {
                let known: Vec<_> = Metric::ALL.iter().map(|m| m.name()).collect();
                Error::Argument(format!("unknown metric {s:?}; known: {}", known.join(", ")))
            })
    }
}

/// Comma-separated metric names; empty means all.
pub fn parse_metric_list(list: &str) -> Result<BTreeSet<Metric>> {
    let parsed = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(Metric::from_str)
        .collect::<Result<BTreeSet<_>>>()?;
    Ok(if parsed.is_empty() { Metric::ALL.into_iter().collect() } else { parsed })
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub token_width: usize,
    pub target_frames: usize,
    pub metrics: BTreeSet<Metric>,
    pub text: TextMetricConfig,
    pub provider_url: Option<String>,
    pub percent: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            token_width: DEFAULT_TOKEN_WIDTH,
            target_frames: DEFAULT_TARGET_FRAMES,
            metrics: Metric::ALL.into_iter().collect(),
            text: TextMetricConfig::default(),
            provider_url: None,
            percent: false,
        }
    }
}

/// One line of the predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prediction {
    pub video_id: String,
    /// Raw model output.
    pub output: String,
    #[serde(default = "default_task")]
    pub task: TaskKind,
    /// Digit logits of the decoded temporal tokens (JSON lines).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logits: Option<PathBuf>,
    /// Sentence embeddings of the predicted text summary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_emb: Option<PathBuf>,
}

fn default_task() -> TaskKind {
    TaskKind::Both
}

/// Reads predictions; relative paths resolve against the file's directory.
pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<Prediction>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut out = Vec::new();
    let mut errors = Vec::new();
    let mut seen = HashMap::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Prediction>(&line) {
            Ok(mut p) => {
                if let Some(first) = seen.insert(p.video_id.clone(), n + 1) {
                    errors.push(LineError {
                        line: n + 1,
                        message: format!("duplicate prediction for {:?} (first on line {first})", p.video_id),
                    });
                    continue;
                }
                for f in [&mut p.logits, &mut p.text_emb].into_iter().flatten() {
                    if f.is_relative() {
                        *f = base.join(&*f);
                    }
                }
                out.push(p);
            }
            Err(e) => errors.push(LineError {
                line: n + 1,
                message: e.to_string(),
            }),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(Error::Load {
            path: path.to_path_buf(),
            errors,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoResult {
    pub task: TaskKind,
    pub predicted_frames: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v2v: Option<V2VScore>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imp_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip: Option<ClipScore>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_f_clip: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vt_clip_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<TextScore>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanEntry {
    pub mean: f64,
    /// Videos that contributed.
    pub count: usize,
    /// Evaluated videos without this metric.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub token_width: usize,
    pub target_frames: usize,
    pub metrics: Vec<String>,
    pub rouge_l_beta: f64,
    pub bleu_smoothing: String,
    pub cider_max_n: usize,
    pub cider_sigma: f64,
    pub cider_scale: f64,
    pub tokenizer: String,
    pub similarity_clamp: String,
    pub zero_division: String,
    pub kendall_variant: String,
    pub spearman_ties: String,
    pub frame_overlap: String,
    pub score_scale: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingProvenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tool_version: String,
    pub config_echo: ConfigEcho,
    pub provenance: BTreeMap<String, EmbeddingProvenance>,
    pub per_video: BTreeMap<String, VideoResult>,
    pub corpus_means: BTreeMap<String, MeanEntry>,
    pub missing: Vec<String>,
    pub unmatched_predictions: Vec<String>,
}

/// Rounds to the 6 decimals reports carry.
pub fn round6(x: f64) -> f64 {
    let r = (x * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn config_echo(opts: &EvalOptions) -> ConfigEcho {
    ConfigEcho {
        token_width: opts.token_width,
        target_frames: opts.target_frames,
        metrics: opts.metrics.iter().map(|m| m.name().to_string()).collect(),
        rouge_l_beta: opts.text.rouge_beta,
        bleu_smoothing: opts.text.bleu_smoothing.clone(),
        cider_max_n: opts.text.cider.max_n,
        cider_sigma: opts.text.cider.sigma,
        cider_scale: opts.text.cider.scale,
        tokenizer: opts.text.tokenizer.clone(),
        similarity_clamp: "max(cos, 0) on unit-normalized embeddings".into(),
        zero_division: "F = 0 when P + R = 0".into(),
        kendall_variant: "tau-b".into(),
        spearman_ties: "average ranks".into(),
        frame_overlap: "frame-set overlap on the normalized timeline".into(),
        score_scale: if opts.percent { "percent (display only)" } else { "0-1" }.into(),
    }
}

/// Splits prose into sentences on `.`, `!` or `?` followed by whitespace or the end.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        current.push(c);
        if matches!(c, '.' | '!' | '?') && chars.peek().is_none_or(|n| n.is_whitespace()) {
            let s = current.trim();
            if !s.is_empty() {
                out.push(s.to_string());
            }
            current.clear();
        }
    }
    let s = current.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
    out
}

/// Embeddings of the given normalized frames. Labelled sets are matched by
/// label (`12`, `f12` or `[f12]`), unlabelled sets by row.
pub fn select_frames(set: &EmbeddingSet, frames: &[usize]) -> Result<EmbeddingSet> {
    match set.labels() {
        Some(labels) => {
            let by_frame: HashMap<usize, usize> = labels
                .iter()
                .enumerate()
                .filter_map(|(row, l)| {
                    let digits = l.trim().trim_start_matches("[f").trim_start_matches('f').trim_end_matches(']');
                    digits.parse::<usize>().ok().map(|f| (f, row))
                })
                .collect();
            let rows = frames
                .iter()
                .map(|f| {
                    by_frame
                        .get(f)
                        .copied()
                        .ok_or_else(|| Error::Range(format!("no embedding labelled with frame {f}")))
                })
                .collect::<Result<Vec<_>>>()?;
            set.select_rows(&rows)
        }
        None => set.select_rows(frames),
    }
}

struct Sources<'a> {
    provider: Option<&'a RemoteProvider>,
}

impl Sources<'_> {
    fn frames(&self, record: &VideoRecord, target: usize) -> Result<Option<(EmbeddingSet, String)>> {
        if let Some(p) = &record.frame_emb {
            return Ok(Some((load_embedding_file(p)?, format!("file:{}", p.display()))));
        }
        match self.provider {
            Some(provider) => {
                let refs: Vec<String> = (0..target).map(|k| format!("{}#{k}", record.video_id)).collect();
                let set = provider.fetch(&refs, PayloadKind::Frame)?;
                Ok(Some((set, format!("provider:{}", provider.url()))))
            }
            None => Ok(None),
        }
    }

    fn text(&self, file: Option<&PathBuf>, text: &str) -> Result<Option<(EmbeddingSet, String)>> {
        if let Some(p) = file {
            return Ok(Some((load_embedding_file(p)?, format!("file:{}", p.display()))));
        }
        match self.provider {
            Some(provider) => {
                let sentences = split_sentences(text);
                if sentences.is_empty() {
                    return Ok(None);
                }
                let set = provider.fetch(&sentences, PayloadKind::Text)?;
                Ok(Some((set, format!("provider:{}", provider.url()))))
            }
            None => Ok(None),
        }
    }
}

struct TextPair {
    video_id: String,
    pred: Vec<String>,
    reference: Vec<String>,
}

fn evaluate_video(
    record: &VideoRecord,
    pred: &Prediction,
    opts: &EvalOptions,
    sources: &Sources<'_>,
    provenance: &mut EmbeddingProvenance,
    text_pairs: &mut Vec<TextPair>,
) -> VideoResult {
    let wants = |m: Metric| opts.metrics.contains(&m);
    let mut result = VideoResult {
        task: pred.task,
        predicted_frames: Vec::new(),
        v2v: None,
        imp_score: None,
        clip: None,
        cross_f_clip: None,
        vt_clip_score: None,
        text: None,
        errors: Vec::new(),
    };
    let timeline = match TimelineMap::new(record.frame_count, opts.target_frames, record.fps) {
        Ok(t) => t,
        Err(e) => {
            result.errors.push(format!("timeline: {e}"));
            return result;
        }
    };

    let parsed = match parse_summary(&pred.output, pred.task, opts.token_width) {
        Ok(p) => p,
        Err(e) => {
            result.errors.push(format!("parse: {e}"));
            return result;
        }
    };
    let has_video = pred.task != TaskKind::Text;
    let has_text = pred.task != TaskKind::Video;
    if has_video {
        match validate_against_timeline(&parsed, &timeline) {
            Ok(valid) => result.predicted_frames = valid.frame_indices,
            Err(e) => result.errors.push(format!("video summary: {e}")),
        }
    }
    let frames = &result.predicted_frames;

    if has_video && wants(Metric::F1) && !frames.is_empty() {
        match f1_frame_overlap(frames, &record.gt_video_summary) {
            Ok(o) => result.v2v = Some(o.into()),
            Err(e) => result.errors.push(format!("f1: {e}")),
        }
    }

    if has_video && (wants(Metric::Spearman) || wants(Metric::Kendall)) {
        if let Some(path) = &pred.logits {
            let scored = read_logit_records(path).and_then(|recs| importance_vector(&recs, opts.target_frames));
            match scored {
                Ok(iv) => {
                    result.imp_score = Some(iv.mean_score);
                    if let (Some(gt), Some(v2v)) = (&record.gt_frame_scores, result.v2v.as_mut()) {
                        if wants(Metric::Spearman) {
                            match spearman_rho(&iv.scores, gt) {
                                Ok(r) => v2v.spearman = Some(r),
                                Err(e) => result.errors.push(format!("spearman: {e}")),
                            }
                        }
                        if wants(Metric::Kendall) {
                            match kendall_tau(&iv.scores, gt) {
                                Ok(t) => v2v.kendall = Some(t),
                                Err(e) => result.errors.push(format!("kendall: {e}")),
                            }
                        }
                    }
                }
                Err(e) => result.errors.push(format!("importance: {e}")),
            }
        }
    }

    let clip_wanted = wants(Metric::FClip) || wants(Metric::CrossFClip) || wants(Metric::VtClipScore);
    let frame_set = if clip_wanted {
        match sources.frames(record, opts.target_frames) {
            Ok(Some((set, src))) => {
                provenance.frames = Some(src);
                Some(set)
            }
            Ok(None) => None,
            Err(e) => {
                result.errors.push(format!("frame embeddings: {e}"));
                None
            }
        }
    } else {
        None
    };
    let select = |set: &EmbeddingSet, idx: &[usize], what: &str, errors: &mut Vec<String>| {
        select_frames(set, idx)
            .map_err(|e| errors.push(format!("{what}: {e}")))
            .ok()
    };
    let (gt_frames, pred_frames) = match &frame_set {
        Some(set) => {
            let gt = select(set, &record.gt_video_summary, "reference frames", &mut result.errors);
            let pr = if frames.is_empty() {
                None
            } else {
                select(set, frames, "predicted frames", &mut result.errors)
            };
            (gt, pr)
        }
        None => (None, None),
    };

    if wants(Metric::FClip) {
        if let (Some(v), Some(v_hat)) = (&gt_frames, &pred_frames) {
            match f_clip(v, v_hat) {
                Ok(s) => result.clip = Some(s),
                Err(e) => result.errors.push(format!("f_clip: {e}")),
            }
        }
    }

    let reference_clean = parse_summary(&record.gt_text_summary, TaskKind::Both, opts.token_width)
        .map(|p| p.clean_text)
        .unwrap_or_default();

    if has_text && (wants(Metric::CrossFClip) || wants(Metric::VtClipScore)) && frame_set.is_some() {
        let pred_text = match sources.text(pred.text_emb.as_ref(), &parsed.clean_text) {
            Ok(Some((set, src))) => {
                provenance.predicted_text = Some(src);
                Some(set)
            }
            Ok(None) => None,
            Err(e) => {
                result.errors.push(format!("predicted text embeddings: {e}"));
                None
            }
        };
        if wants(Metric::CrossFClip) {
            let ref_text = match sources.text(record.text_emb.as_ref(), &reference_clean) {
                Ok(Some((set, src))) => {
                    provenance.reference_text = Some(src);
                    Some(set)
                }
                Ok(None) => None,
                Err(e) => {
                    result.errors.push(format!("reference text embeddings: {e}"));
                    None
                }
            };
            if let (Some(v), Some(v_hat), Some(t), Some(t_hat)) = (&gt_frames, &pred_frames, &ref_text, &pred_text) {
                match cross_f_clip(v, v_hat, t, t_hat) {
                    Ok(x) => result.cross_f_clip = Some(x),
                    Err(e) => result.errors.push(format!("cross_f_clip: {e}")),
                }
            }
        }
        if wants(Metric::VtClipScore) {
            if let (Some(v_hat), Some(t_hat)) = (&pred_frames, &pred_text) {
                match vt_clip_score(v_hat, t_hat) {
                    Ok(x) => result.vt_clip_score = Some(x),
                    Err(e) => result.errors.push(format!("vt_clip_score: {e}")),
                }
            }
        }
    }

    if has_text && [Metric::Bleu4, Metric::RougeL, Metric::Cider].into_iter().any(wants) {
        let p = tokenize(&parsed.clean_text);
        let r = tokenize(&reference_clean);
        result.text = Some(TextScore {
            bleu4: bleu4(&p, &r),
            rouge_l: rouge_l(&p, &r, opts.text.rouge_beta),
            cider: 0.0,
        });
        text_pairs.push(TextPair {
            video_id: record.video_id.clone(),
            pred: p,
            reference: r,
        });
    }
    result
}

fn round_result(r: &mut VideoResult) {
    for x in [&mut r.imp_score, &mut r.cross_f_clip, &mut r.vt_clip_score].into_iter().flatten() {
        *x = round6(*x);
    }
    if let Some(v) = r.v2v.as_mut() {
        for x in [&mut v.precision, &mut v.recall, &mut v.f1] {
            *x = round6(*x);
        }
        for x in [&mut v.spearman, &mut v.kendall].into_iter().flatten() {
            *x = round6(*x);
        }
    }
    if let Some(c) = r.clip.as_mut() {
        for x in [&mut c.r_clip, &mut c.p_clip, &mut c.f_clip] {
            *x = round6(*x);
        }
    }
    if let Some(t) = r.text.as_mut() {
        for x in [&mut t.bleu4, &mut t.rouge_l, &mut t.cider] {
            *x = round6(*x);
        }
    }
}

fn metric_values(r: &VideoResult, opts: &EvalOptions) -> Vec<(&'static str, Option<f64>)> {
    let wants = |m: Metric| opts.metrics.contains(&m);
    let mut out = Vec::new();
    if wants(Metric::F1) {
        out.push(("precision", r.v2v.map(|v| v.precision)));
        out.push(("recall", r.v2v.map(|v| v.recall)));
        out.push(("f1", r.v2v.map(|v| v.f1)));
    }
    if wants(Metric::Spearman) {
        out.push(("spearman", r.v2v.and_then(|v| v.spearman)));
    }
    if wants(Metric::Kendall) {
        out.push(("kendall", r.v2v.and_then(|v| v.kendall)));
    }
    if wants(Metric::Spearman) || wants(Metric::Kendall) {
        out.push(("imp_score", r.imp_score));
    }
    if wants(Metric::FClip) {
        out.push(("r_clip", r.clip.map(|c| c.r_clip)));
        out.push(("p_clip", r.clip.map(|c| c.p_clip)));
        out.push(("f_clip", r.clip.map(|c| c.f_clip)));
    }
    if wants(Metric::CrossFClip) {
        out.push(("cross_f_clip", r.cross_f_clip));
    }
    if wants(Metric::VtClipScore) {
        out.push(("vt_clip_score", r.vt_clip_score));
    }
    if wants(Metric::Bleu4) {
        out.push(("bleu4", r.text.map(|t| t.bleu4)));
    }
    if wants(Metric::RougeL) {
        out.push(("rouge_l", r.text.map(|t| t.rouge_l)));
    }
    if wants(Metric::Cider) {
        out.push(("cider", r.text.map(|t| t.cider)));
    }
    out
}

/// Evaluates every manifest video that has a prediction.
pub fn evaluate(records: &[VideoRecord], predictions: &[Prediction], opts: &EvalOptions) -> Result<EvalReport> {
    if opts.metrics.is_empty() {
        return Err(Error::Argument("no metrics selected".into()));
    }
    let provider = opts.provider_url.as_deref().map(RemoteProvider::new).transpose()?;
    let sources = Sources {
        provider: provider.as_ref(),
    };
    let by_id: HashMap<&str, &Prediction> = predictions.iter().map(|p| (p.video_id.as_str(), p)).collect();
    let known: BTreeSet<&str> = records.iter().map(|r| r.video_id.as_str()).collect();

    let mut per_video = BTreeMap::new();
    let mut provenance = BTreeMap::new();
    let mut missing = Vec::new();
    let mut text_pairs = Vec::new();
    for record in records {
        let Some(pred) = by_id.get(record.video_id.as_str()) else {
            missing.push(record.video_id.clone());
            continue;
        };
        let mut prov = EmbeddingProvenance::default();
        let result = evaluate_video(record, pred, opts, &sources, &mut prov, &mut text_pairs);
        if prov != EmbeddingProvenance::default() {
            provenance.insert(record.video_id.clone(), prov);
        }
        per_video.insert(record.video_id.clone(), result);
    }

    if opts.metrics.contains(&Metric::Cider) && !text_pairs.is_empty() {
        let preds: Vec<_> = text_pairs.iter().map(|p| p.pred.clone()).collect();
        let refs: Vec<_> = text_pairs.iter().map(|p| p.reference.clone()).collect();
        let scores = cider(&preds, &refs, &opts.text.cider)?;
        for (pair, score) in text_pairs.iter().zip(scores.per_item) {
            if let Some(t) = per_video.get_mut(&pair.video_id).and_then(|r: &mut VideoResult| r.text.as_mut()) {
                t.cider = score;
            }
        }
    }

    for r in per_video.values_mut() {
        round_result(r);
    }

    let mut columns: BTreeMap<&'static str, Vec<f64>> = BTreeMap::new();
    let mut excluded: BTreeMap<&'static str, usize> = BTreeMap::new();
    for result in per_video.values() {
        for (name, value) in metric_values(result, opts) {
            columns.entry(name).or_default();
            match value {
                Some(v) => columns.get_mut(name).expect("inserted").push(v),
                None => *excluded.entry(name).or_default() += 1,
            }
        }
    }
    let corpus_means = columns
        .into_iter()
        .filter_map(|(name, values)| {
            stable_mean(&values).map(|mean| {
                (
                    name.to_string(),
                    MeanEntry {
                        mean: round6(mean),
                        count: values.len(),
                        excluded: excluded.get(name).copied().unwrap_or(0),
                    },
                )
            })
        })
        .collect();

    let unmatched_predictions = predictions
        .iter()
        .filter(|p| !known.contains(p.video_id.as_str()))
        .map(|p| p.video_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    Ok(EvalReport {
        tool_version: TOOL_VERSION.to_string(),
        config_echo: config_echo(opts),
        provenance,
        per_video,
        corpus_means,
        missing,
        unmatched_predictions,
    })
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Aligned plain-text table: one row per video plus a mean row.
    pub fn to_table(&self, percent: bool) -> String {
        const COLUMNS: [&str; 11] = [
            "f1", "spearman", "kendall", "f_clip", "cross_f_clip", "vt_clip_score", "bleu4", "rouge_l", "cider",
            "precision", "recall",
        ];
        let scaled = |name: &str, v: f64| {
            let pct = percent && matches!(name, "f1" | "precision" | "recall" | "f_clip" | "cross_f_clip" | "vt_clip_score");
            if pct { v * 100.0 } else { v }
        };
        let cols: Vec<&str> = COLUMNS
            .iter()
            .copied()
            .filter(|c| self.corpus_means.contains_key(*c))
            .collect();
        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["video_id".to_string()];
        header.extend(cols.iter().map(|c| c.to_string()));
        rows.push(header);
        for (id, r) in &self.per_video {
            let values: HashMap<&str, Option<f64>> = video_columns(r).into_iter().collect();
            let mut row = vec![id.clone()];
            for c in &cols {
                row.push(match values.get(c).copied().flatten() {
                    Some(v) => format!("{:.6}", scaled(c, v)),
                    None => "-".into(),
                });
            }
            rows.push(row);
        }
        let mut mean_row = vec!["MEAN".to_string()];
        for c in &cols {
            mean_row.push(format!("{:.6}", scaled(c, self.corpus_means[*c].mean)));
        }
        rows.push(mean_row);

        let widths: Vec<usize> = (0..rows[0].len())
            .map(|i| rows.iter().map(|r| r[i].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &rows {
            let cells: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(i, cell)| {
                    if i == 0 {
                        format!("{cell:<w$}", w = widths[i])
                    } else {
                        format!("{cell:>w$}", w = widths[i])
                    }
                })
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        if !self.missing.is_empty() {
            out.push_str(&format!("missing predictions: {}\n", self.missing.join(", ")));
        }
        out
    }
}

fn video_columns(r: &VideoResult) -> Vec<(&'static str, Option<f64>)> {
    vec![
        ("precision", r.v2v.map(|v| v.precision)),
        ("recall", r.v2v.map(|v| v.recall)),
        ("f1", r.v2v.map(|v| v.f1)),
        ("spearman", r.v2v.and_then(|v| v.spearman)),
        ("kendall", r.v2v.and_then(|v| v.kendall)),
        ("f_clip", r.clip.map(|c| c.f_clip)),
        ("cross_f_clip", r.cross_f_clip),
        ("vt_clip_score", r.vt_clip_score),
        ("bleu4", r.text.map(|t| t.bleu4)),
        ("rouge_l", r.text.map(|t| t.rouge_l)),
        ("cider", r.text.map(|t| t.cider)),
    ]
}
