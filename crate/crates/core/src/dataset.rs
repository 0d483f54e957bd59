//! Dataset manifests, the caption redundancy filter and corpus statistics.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingSet;
use crate::error::{Error, LineError, Result};
use crate::metrics::{stable_mean, tokenize};
use crate::summary_parser::parse_v2vt;

/// Redundancy threshold used when curating caption summaries.
pub const DEFAULT_REDUNDANCY_THRESHOLD: f64 = 0.93;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Argument(format!(
                "unknown split {other:?} (expected train, val or test)"
            ))),
        }
    }
}

fn default_fps() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoRecord {
    pub video_id: String,
    pub duration_s: f64,
    pub frame_count: usize,
    #[serde(default = "default_fps")]
    pub fps: f64,
    pub gt_video_summary: Vec<usize>,
    pub gt_text_summary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_frame_scores: Option<Vec<f64>>,
    pub split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_emb: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_emb: Option<PathBuf>,
}

impl VideoRecord {
    /// Checks the record against a normalized timeline of `timeline_len` frames.
    pub fn validate(&self, timeline_len: usize) -> std::result::Result<(), String> {
        if self.video_id.is_empty() {
            return Err("video_id is empty".into());
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(format!("duration_s must be positive, got {}", self.duration_s));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(format!("fps must be positive, got {}", self.fps));
        }
        if self.frame_count == 0 {
            return Err("frame_count must be positive".into());
        }
        let expected = self.duration_s * self.fps;
        if (self.frame_count as f64 - expected).abs() > 1.0 {
            return Err(format!(
                "frame_count {} disagrees with duration_s * fps = {expected}",
                self.frame_count
            ));
        }
        if let Some(&bad) = self.gt_video_summary.iter().find(|&&i| i >= timeline_len) {
            return Err(format!(
                "gt_video_summary index {bad} outside the {timeline_len}-frame timeline"
            ));
        }
        if self.gt_video_summary.windows(2).any(|w| w[0] >= w[1]) {
            return Err("gt_video_summary must be sorted and unique".into());
        }
        if let Some(scores) = &self.gt_frame_scores {
            if scores.len() != timeline_len {
                return Err(format!(
                    "gt_frame_scores has {} entries, expected {timeline_len}",
                    scores.len()
                ));
            }
            if scores.iter().any(|s| !s.is_finite()) {
                return Err("gt_frame_scores must be finite".into());
            }
        }
        Ok(())
    }
}

/// Reads a JSON-lines manifest. Every problem is reported with its line number;
/// relative embedding paths are resolved against the manifest's directory.
pub fn load_manifest(path: impl AsRef<Path>, timeline_len: usize) -> Result<Vec<VideoRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut first_seen: HashMap<String, usize> = HashMap::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut record: VideoRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                errors.push(LineError {
                    line: line_no,
                    message: e.to_string(),
                });
                continue;
            }
        };
        if let Err(message) = record.validate(timeline_len) {
            errors.push(LineError { line: line_no, message });
            continue;
        }
        if let Some(&first) = first_seen.get(&record.video_id) {
            errors.push(LineError {
                line: line_no,
                message: format!(
                    "duplicate video_id {:?} (lines {first} and {line_no})",
                    record.video_id
                ),
            });
            continue;
        }
        first_seen.insert(record.video_id.clone(), line_no);
        for p in [&mut record.frame_emb, &mut record.text_emb].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        records.push(record);
    }
    if errors.is_empty() {
        Ok(records)
    } else {
        Err(Error::Load {
            path: path.to_path_buf(),
            errors,
        })
    }
}

/// Pairwise similarity between items, in `[-1, 1]`.
pub trait SimilaritySource {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn similarity(&self, i: usize, j: usize) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    count: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let count = rows.len();
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != count) {
            return Err(Error::Argument(format!(
                "similarity matrix is not square: row {i} has {} entries, expected {count}",
                row.len()
            )));
        }
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("similarity matrix has non-finite entries".into()));
        }
        Ok(Self { count, values })
    }

    pub fn from_fn(count: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        Self::new(
            (0..count)
                .map(|i| (0..count).map(|j| f(i, j)).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.count.max(1))
    }
}

impl SimilaritySource for SimilarityMatrix {
    fn len(&self) -> usize {
        self.count
    }

    fn similarity(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.count + j]
    }
}

/// Raw (unclamped) cosine between caption embeddings.
impl SimilaritySource for EmbeddingSet {
    fn len(&self) -> usize {
        EmbeddingSet::len(self)
    }

    fn similarity(&self, i: usize, j: usize) -> f64 {
        self.items()[i]
            .dot(&self.items()[j])
            .expect("items of one set share a dimension")
    }
}

/// Greedy scan in temporal order: item 0 is kept, item `i` is kept iff its
/// similarity to every already-kept item is below `threshold`.
pub fn redundancy_filter<S: SimilaritySource + ?Sized>(sims: &S, threshold: f64) -> Result<Vec<usize>> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Argument(format!("threshold must be in (0, 1], got {threshold}")));
    }
    let mut kept: Vec<usize> = Vec::new();
    for i in 0..sims.len() {
        if kept.iter().all(|&k| sims.similarity(i, k) < threshold) {
            kept.push(i);
        }
    }
    Ok(kept)
}

pub const XSIM_MAGIC: &[u8; 4] = b"XSIM";

/// `XSIM` layout: magic, count u32 LE, count*count f32 LE row-major.
pub fn decode_similarity_matrix(bytes: &[u8]) -> Result<SimilarityMatrix> {
    let format_err = |offset: usize, message: String| Error::Format {
        offset: offset as u64,
        message,
    };
    if bytes.len() < 4 || &bytes[..4] != XSIM_MAGIC {
        return Err(format_err(0, "bad magic, expected \"XSIM\"".into()));
    }
    if bytes.len() < 8 {
        return Err(format_err(bytes.len(), "truncated header".into()));
    }
    let count = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let expected = count
        .checked_mul(count)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| format_err(4, "count overflows".into()))?;
    let payload = &bytes[8..];
    if payload.len() != expected {
        let at = 8 + payload.len().min(expected);
        return Err(format_err(
            at,
            format!("expected {expected} payload bytes for {count}x{count}, found {}", payload.len()),
        ));
    }
    let values: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(format_err(8 + 4 * i, "non-finite similarity".into()));
    }
    Ok(SimilarityMatrix { count, values })
}

pub fn encode_similarity_matrix(m: &SimilarityMatrix) -> Vec<u8> {
    let mut out = XSIM_MAGIC.to_vec();
    out.extend_from_slice(&(m.count as u32).to_le_bytes());
    for v in &m.values {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

pub fn load_similarity_matrix(path: impl AsRef<Path>) -> Result<SimilarityMatrix> {
    let path = path.as_ref();
    decode_similarity_matrix(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_videos: usize,
    pub mean_duration_s: f64,
    pub mean_text_tokens: f64,
    pub mean_video_summary_frames: f64,
    pub mean_compression_ratio: f64,
}

/// Corpus means. Text length counts tokens of the summary with temporal tokens removed.
pub fn corpus_stats(records: &[VideoRecord], token_width: usize) -> Result<CorpusStats> {
    if records.is_empty() {
        return Err(Error::Argument("statistics over an empty corpus".into()));
    }
    let column = |f: &dyn Fn(&VideoRecord) -> f64| -> Vec<f64> { records.iter().map(f).collect() };
    let text_tokens = records
        .iter()
        .map(|r| Ok(tokenize(&parse_v2vt(&r.gt_text_summary, token_width)?.clean_text).len() as f64))
        .collect::<Result<Vec<_>>>()?;
    let mean = |v: &[f64]| stable_mean(v).expect("non-empty corpus");
    Ok(CorpusStats {
        n_videos: records.len(),
        mean_duration_s: mean(&column(&|r| r.duration_s)),
        mean_text_tokens: mean(&text_tokens),
        mean_video_summary_frames: mean(&column(&|r| r.gt_video_summary.len() as f64)),
        mean_compression_ratio: mean(&column(&|r| {
            r.gt_video_summary.len() as f64 / r.frame_count as f64
        })),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

/// Reference split sizes of the released corpus.
pub const REFERENCE_SPLITS: SplitCounts = SplitCounts {
    train: 25_000,
    val: 1_000,
    test: 4_000,
};

impl SplitCounts {
    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }

    fn add(&mut self, split: Split) {
        match split {
            Split::Train => self.train += 1,
            Split::Val => self.val += 1,
            Split::Test => self.test += 1,
        }
    }

    /// One message per split whose share differs from `expected`'s by more than one point.
    pub fn proportion_warnings(&self, expected: &SplitCounts) -> Vec<String> {
        let (total, expected_total) = (self.total(), expected.total());
        if total == 0 || expected_total == 0 {
            return Vec::new();
        }
        [
            ("train", self.train, expected.train),
            ("val", self.val, expected.val),
            ("test", self.test, expected.test),
        ]
        .into_iter()
        .filter_map(|(name, got, want)| {
            let (got, want) = (got as f64 / total as f64, want as f64 / expected_total as f64);
            ((got - want).abs() > 0.01).then(|| {
                format!("{name} share {:.2}% deviates from expected {:.2}%", got * 100.0, want * 100.0)
            })
        })
        .collect()
    }
}

pub fn split_counts(records: &[VideoRecord]) -> SplitCounts {
    let mut counts = SplitCounts::default();
    for r in records {
        counts.add(r.split);
    }
    counts
}

/// Tallies raw split labels, rejecting anything but train/val/test.
pub fn count_split_labels<S: AsRef<str>>(labels: &[S]) -> Result<SplitCounts> {
    let mut counts = SplitCounts::default();
    for label in labels {
        counts.add(label.as_ref().parse()?);
    }
    Ok(counts)
}
