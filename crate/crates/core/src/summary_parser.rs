//! Parsing of generated summaries into frame indices and clean text.
//!
//! Video summaries are bare token lists (`[f03] [f07]`), text summaries are
//! prose with tokens embedded anywhere, even glued to words
//! (`[f00]Start[f99] end`). Both reduce to the same [`ParsedSummary`].

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::temporal_codec::{token_capacity, TimelineMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TaskKind {
    Video,
    Text,
    Both,
}

impl TaskKind {
    pub fn word(self) -> &'static str {
        match self {
            TaskKind::Video => "VIDEO",
            TaskKind::Text => "TEXT",
            TaskKind::Both => "BOTH",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.word())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "VIDEO" | "V2V" => Ok(TaskKind::Video),
            "TEXT" | "V2T" => Ok(TaskKind::Text),
            "BOTH" | "V2VT" => Ok(TaskKind::Both),
            _ => Err(Error::Argument(format!("unknown task {s:?} (expected VIDEO, TEXT or BOTH)"))),
        }
    }
}

pub fn make_task_instruction(task: TaskKind) -> String {
    format!("Please generate a {} summarization for this video.", task.word())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSpan {
    /// Offset in characters (not bytes) into the raw text.
    pub offset: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedSummary {
    #[serde(rename = "text")]
    pub clean_text: String,
    #[serde(rename = "indices")]
    pub frame_indices: Vec<usize>,
    pub token_spans: Vec<TokenSpan>,
    pub task: TaskKind,
    /// Bracketed `[f...]` fragments that did not decode at the configured width.
    pub malformed_tokens: usize,
}

impl ParsedSummary {
    pub fn is_empty(&self) -> bool {
        self.frame_indices.is_empty()
    }
}

fn candidate_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| Regex::new(r"\[f([^\[\]\s]*)\]").expect("static regex"))
}

struct Scan {
    spans: Vec<TokenSpan>,
    /// Byte ranges of well-formed tokens.
    ranges: Vec<(usize, usize)>,
    malformed: usize,
}

fn scan(raw: &str, width: usize) -> Result<Scan> {
    token_capacity(width)?;
    let mut spans = Vec::new();
    let mut ranges = Vec::new();
    let mut malformed = 0;
    let mut chars_before = 0;
    let mut last_byte = 0;
    for caps in candidate_pattern().captures_iter(raw) {
        let whole = caps.get(0).expect("group 0");
        let digits = &caps[1];
        if digits.len() != width || !digits.bytes().all(|b| b.is_ascii_digit()) {
            malformed += 1;
            continue;
        }
        chars_before += raw[last_byte..whole.start()].chars().count();
        last_byte = whole.start();
        spans.push(TokenSpan {
            offset: chars_before,
            index: digits.parse().expect("ascii digits"),
        });
        ranges.push((whole.start(), whole.end()));
    }
    if malformed > 0 {
        log::debug!("skipped {malformed} malformed temporal token(s)");
    }
    Ok(Scan {
        spans,
        ranges,
        malformed,
    })
}

fn dedupe_keep_first(spans: &[TokenSpan]) -> Vec<usize> {
    let mut seen = HashSet::new();
    spans
        .iter()
        .map(|s| s.index)
        .filter(|i| seen.insert(*i))
        .collect()
}

/// Replaces every token with a space, then collapses whitespace runs.
fn strip_tokens(raw: &str, ranges: &[(usize, usize)]) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut cursor = 0;
    for &(start, end) in ranges {
        out.push_str(&raw[cursor..start]);
        out.push(' ');
        cursor = end;
    }
    out.push_str(&raw[cursor..]);
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parses a video-only summary. Non-token text is ignored.
pub fn parse_v2v(raw: &str, width: usize) -> Result<ParsedSummary> {
    let scan = scan(raw, width)?;
    if scan.spans.is_empty() {
        return Err(Error::EmptySummary(format!(
            "no temporal tokens of width {width} found ({} malformed)",
            scan.malformed
        )));
    }
    Ok(ParsedSummary {
        clean_text: String::new(),
        frame_indices: dedupe_keep_first(&scan.spans),
        token_spans: scan.spans,
        task: TaskKind::Video,
        malformed_tokens: scan.malformed,
    })
}

/// Parses a text summary with embedded tokens. A summary with no tokens is valid.
pub fn parse_v2vt(raw: &str, width: usize) -> Result<ParsedSummary> {
    let scan = scan(raw, width)?;
    Ok(ParsedSummary {
        clean_text: strip_tokens(raw, &scan.ranges),
        frame_indices: dedupe_keep_first(&scan.spans),
        token_spans: scan.spans,
        task: TaskKind::Both,
        malformed_tokens: scan.malformed,
    })
}

/// Dispatches on the task: VIDEO uses [`parse_v2v`], TEXT and BOTH use [`parse_v2vt`].
pub fn parse_summary(raw: &str, task: TaskKind, width: usize) -> Result<ParsedSummary> {
    match task {
        TaskKind::Video => parse_v2v(raw, width),
        TaskKind::Text | TaskKind::Both => Ok(ParsedSummary {
            task,
            ..parse_v2vt(raw, width)?
        }),
    }
}

/// Drops indices outside the timeline and sorts the rest ascending.
pub fn validate_against_timeline(summary: &ParsedSummary, map: &TimelineMap) -> Result<ParsedSummary> {
    let limit = map.target_count();
    let (mut kept, dropped): (Vec<usize>, Vec<usize>) =
        summary.frame_indices.iter().partition(|&&i| i < limit);
    if !dropped.is_empty() {
        log::warn!("dropping out-of-range frame indices {dropped:?} (timeline length {limit})");
    }
    if kept.is_empty() {
        return Err(Error::EmptySummary(format!(
            "no frame index falls inside the {limit}-frame timeline"
        )));
    }
    kept.sort_unstable();
    kept.dedup();
    Ok(ParsedSummary {
        frame_indices: kept,
        ..summary.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::temporal_codec::encode_temporal_token;

    #[test]
    fn instructions() {
        assert_eq!(
            make_task_instruction(TaskKind::Both),
            "Please generate a BOTH summarization for this video."
        );
        assert_eq!(
            make_task_instruction(TaskKind::Video),
            "Please generate a VIDEO summarization for this video."
        );
        assert_eq!(
            make_task_instruction(TaskKind::Text),
            "Please generate a TEXT summarization for this video."
        );
    }

    #[test]
    fn task_from_str() {
        assert_eq!("video".parse::<TaskKind>().unwrap(), TaskKind::Video);
        assert_eq!("V2VT".parse::<TaskKind>().unwrap(), TaskKind::Both);
        assert!("audio".parse::<TaskKind>().is_err());
    }

    #[test]
    fn v2v_examples() {
        let s = parse_v2v("[f03] [f07] [f42]", 2).unwrap();
        assert_eq!(s.frame_indices, [3, 7, 42]);
        assert_eq!(s.clean_text, "");
        assert_eq!(s.task, TaskKind::Video);

        let s = parse_v2v("[f07] [f07] [f03]", 2).unwrap();
        assert_eq!(s.frame_indices, [7, 3]);
        let rendered: Vec<_> = s
            .frame_indices
            .iter()
            .map(|&i| encode_temporal_token(i, 2).unwrap())
            .collect();
        let unique: HashSet<_> = rendered.iter().collect();
        assert_eq!(unique.len(), rendered.len());
        assert_eq!(s.token_spans.len(), 3);

        assert!(matches!(parse_v2v("hello", 2), Err(Error::EmptySummary(_))));
    }

    #[test]
    fn malformed_tokens_are_counted() {
        let s = parse_v2v("[f1] [f03] [fxy] [f123] [f04]", 2).unwrap();
        assert_eq!(s.frame_indices, [3, 4]);
        assert_eq!(s.malformed_tokens, 3);
        assert!(matches!(parse_v2v("[f1] [f2]", 2), Err(Error::EmptySummary(_))));
    }

    #[test]
    fn v2vt_examples() {
        let s = parse_v2vt("[f02] A chef chops onions. [f15] The dish is plated.", 2).unwrap();
        assert_eq!(s.frame_indices, [2, 15]);
        assert_eq!(s.clean_text, "A chef chops onions. The dish is plated.");
        assert_eq!(
            s.token_spans,
            [TokenSpan { offset: 0, index: 2 }, TokenSpan { offset: 27, index: 15 }]
        );

        let s = parse_v2vt("A dog runs.", 2).unwrap();
        assert!(s.frame_indices.is_empty());
        assert_eq!(s.clean_text, "A dog runs.");

        let s = parse_v2vt("[f00]Start[f99] end", 2).unwrap();
        assert_eq!(s.frame_indices, [0, 99]);
        assert_eq!(s.clean_text, "Start end");
    }

    #[test]
    fn offsets_count_characters() {
        let s = parse_v2vt("café [f05] crème", 2).unwrap();
        assert_eq!(s.token_spans, [TokenSpan { offset: 5, index: 5 }]);
        assert_eq!(s.clean_text, "café crème");
    }

    #[test]
    fn parse_summary_keeps_task() {
        let s = parse_summary("[f02] text", TaskKind::Text, 2).unwrap();
        assert_eq!(s.task, TaskKind::Text);
        assert_eq!(s.clean_text, "text");
        let s = parse_summary("[f03] [f07]", TaskKind::Video, 2).unwrap();
        assert_eq!((s.frame_indices.as_slice(), s.clean_text.as_str()), (&[3, 7][..], ""));
    }

    #[test]
    fn validation_examples() {
        let map = TimelineMap::identity(100).unwrap();
        let s = parse_v2v("[f03] [f07] [f42]", 2).unwrap();
        assert_eq!(validate_against_timeline(&s, &map).unwrap().frame_indices, [3, 7, 42]);

        let s = parse_v2v("[f99] [f03]", 2).unwrap();
        let short = TimelineMap::identity(50).unwrap();
        assert_eq!(validate_against_timeline(&s, &short).unwrap().frame_indices, [3]);

        let s = parse_v2v("[f120]", 3).unwrap();
        assert!(matches!(validate_against_timeline(&s, &map), Err(Error::EmptySummary(_))));
    }

    #[test]
    fn validation_is_idempotent() {
        let map = TimelineMap::identity(60).unwrap();
        let s = parse_v2v("[f59] [f07] [f80] [f01] [f07]", 2).unwrap();
        let once = validate_against_timeline(&s, &map).unwrap();
        let twice = validate_against_timeline(&once, &map).unwrap();
        assert_eq!(once, twice);
        assert_eq!(once.frame_indices, [1, 7, 59]);
    }

    #[test]
    fn reinserting_tokens_restores_multiset() {
        let raw = "[f04] Cut the bread.[f10] Spread butter [f04] and serve [f77].";
        let s = parse_v2vt(raw, 2).unwrap();
        let mut rebuilt = s.clean_text.clone();
        for span in &s.token_spans {
            rebuilt.push_str(&encode_temporal_token(span.index, 2).unwrap());
        }
        let mut original: Vec<_> = scan(raw, 2).unwrap().spans.iter().map(|s| s.index).collect();
        let mut again: Vec<_> = scan(&rebuilt, 2).unwrap().spans.iter().map(|s| s.index).collect();
        original.sort_unstable();
        again.sort_unstable();
        assert_eq!(original, again);
        assert!(s.token_spans.windows(2).all(|w| w[0].offset < w[1].offset));
    }
}
