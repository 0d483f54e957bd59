//! Temporal prompt tokens (`[f00]` .. `[f99]`) and the normalized timeline.
//!
//! A video of `original_count` frames is mapped onto `target_count` slots by
//! uniform downsampling: slot `k` takes original frame `floor(k * L / T)`.
//! Each slot is labelled with a zero-padded token so a language model can
//! refer to frames by position.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOKEN_WIDTH: usize = 2;
pub const DEFAULT_TARGET_FRAMES: usize = 100;
pub const DEFAULT_FPS: f64 = 1.0;

/// Largest supported digit count; keeps `10^width` inside a `u64`.
pub const MAX_TOKEN_WIDTH: usize = 18;

/// Number of distinct indices representable with `width` digits.
pub fn token_capacity(width: usize) -> Result<u64> {
    if width == 0 || width > MAX_TOKEN_WIDTH {
        return Err(Error::Argument(format!(
            "token width must be in 1..={MAX_TOKEN_WIDTH}, got {width}"
        )));
    }
    Ok(10u64.pow(width as u32))
}

/// A frame reference on the normalized timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TemporalToken {
    index: usize,
    width: usize,
}

impl TemporalToken {
    pub fn new(index: usize, width: usize) -> Result<Self> {
        let capacity = token_capacity(width)?;
        if index as u64 >= capacity {
            return Err(Error::Range(format!(
                "index {index} does not fit in {width} digit(s) (max {})",
                capacity - 1
            )));
        }
        Ok(Self { index, width })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Parses a token whose digit count must equal `width`.
    pub fn parse(text: &str, width: usize) -> Result<Self> {
        token_capacity(width)?;
        let digits = text
            .strip_prefix("[f")
            .and_then(|rest| rest.strip_suffix(']'))
            .ok_or_else(|| Error::Parse(format!("{text:?} is not of the form [f<digits>]")))?;
        if digits.len() != width || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Parse(format!(
                "{text:?} must carry exactly {width} decimal digit(s)"
            )));
        }
        let index = digits
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("{text:?}: {e}")))?;
        Self::new(index, width)
    }
}

impl fmt::Display for TemporalToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[f{:0width$}]", self.index, width = self.width)
    }
}

/// Infers the width from the number of digits.
impl FromStr for TemporalToken {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let width = s
            .strip_prefix("[f")
            .and_then(|rest| rest.strip_suffix(']'))
            .map(str::len)
            .ok_or_else(|| Error::Parse(format!("{s:?} is not of the form [f<digits>]")))?;
        Self::parse(s, width)
    }
}

pub fn encode_temporal_token(index: usize, width: usize) -> Result<String> {
    Ok(TemporalToken::new(index, width)?.to_string())
}

pub fn decode_temporal_token(text: &str, width: usize) -> Result<usize> {
    Ok(TemporalToken::parse(text, width)?.index())
}

/// Maps normalized timeline positions back to source frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimelineMap {
    original_count: usize,
    target_count: usize,
    fps: f64,
}

impl TimelineMap {
    pub fn new(original_count: usize, target_count: usize, fps: f64) -> Result<Self> {
        if original_count == 0 || target_count == 0 {
            return Err(Error::Argument(format!(
                "frame counts must be positive (original {original_count}, target {target_count})"
            )));
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::Argument(format!("fps must be positive and finite, got {fps}")));
        }
        Ok(Self {
            original_count,
            target_count,
            fps,
        })
    }

    pub fn identity(count: usize) -> Result<Self> {
        Self::new(count, count, DEFAULT_FPS)
    }

    pub fn original_count(&self) -> usize {
        self.original_count
    }

    pub fn target_count(&self) -> usize {
        self.target_count
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    /// Set when the source has fewer frames than the target timeline, in
    /// which case consecutive slots repeat source frames.
    pub fn is_shorter_than_target(&self) -> bool {
        self.original_count < self.target_count
    }

    pub fn original_index(&self, norm_index: usize) -> Result<usize> {
        if norm_index >= self.target_count {
            return Err(Error::Range(format!(
                "normalized index {norm_index} outside 0..{}",
                self.target_count
            )));
        }
        let scaled = norm_index as u128 * self.original_count as u128 / self.target_count as u128;
        Ok(scaled as usize)
    }

    pub fn to_original_timestamp(&self, norm_index: usize) -> Result<f64> {
        Ok(self.original_index(norm_index)? as f64 / self.fps)
    }
}

pub fn build_timeline_map(original_count: usize, target_count: usize, fps: f64) -> Result<TimelineMap> {
    TimelineMap::new(original_count, target_count, fps)
}

pub fn to_original_timestamp(map: &TimelineMap, norm_index: usize) -> Result<f64> {
    map.to_original_timestamp(norm_index)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterleavedEntry {
    pub token: String,
    pub index: usize,
    /// Source frame whose visual features fill this slot.
    pub visual_slot: usize,
}

/// `t_1, v_1, t_2, v_2, ...`: one temporal token and one visual slot per normalized frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterleavedSequence {
    pub timeline: TimelineMap,
    pub shorter_than_target: bool,
    pub entries: Vec<InterleavedEntry>,
}

impl InterleavedSequence {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn build_interleaved_sequence(map: &TimelineMap, width: usize) -> Result<InterleavedSequence> {
    let capacity = token_capacity(width)?;
    if map.target_count() as u64 > capacity {
        return Err(Error::Range(format!(
            "{} timeline slots need more than {width} token digit(s)",
            map.target_count()
        )));
    }
    let entries = (0..map.target_count())
        .map(|k| {
            Ok(InterleavedEntry {
                token: encode_temporal_token(k, width)?,
                index: k,
                visual_slot: map.original_index(k)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InterleavedSequence {
        timeline: *map,
        shorter_than_target: map.is_shorter_than_target(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Uniform sampling by walking the source at a fixed stride, independent of the
    /// multiply-then-divide formula.
    fn stride_oracle(original: usize, target: usize, k: usize) -> usize {
        let mut acc = 0usize;
        let mut frame = 0usize;
        for _ in 0..k {
            acc += original;
            while acc >= target {
                acc -= target;
                frame += 1;
            }
        }
        frame
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode_temporal_token(0, 2).unwrap(), "[f00]");
        assert_eq!(encode_temporal_token(99, 2).unwrap(), "[f99]");
        assert_eq!(encode_temporal_token(7, 3).unwrap(), "[f007]");
        assert!(matches!(encode_temporal_token(100, 2), Err(Error::Range(_))));
        assert!(matches!(encode_temporal_token(1, 0), Err(Error::Argument(_))));
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode_temporal_token("[f12]", 2).unwrap(), 12);
        assert_eq!(decode_temporal_token("[f00]", 2).unwrap(), 0);
        for bad in ["[g12]", "f12]", "[f12", "[f1]", "[f123]", "[f1a]", "[f+1]", "[f１２]"] {
            assert!(
                matches!(decode_temporal_token(bad, 2), Err(Error::Parse(_))),
                "{bad} should not parse"
            );
        }
    }

    #[test]
    fn from_str_infers_width() {
        let token: TemporalToken = "[f007]".parse().unwrap();
        assert_eq!((token.index(), token.width()), (7, 3));
    }

    #[test]
    fn timeline_examples() {
        assert_eq!(build_timeline_map(100, 100, 1.0).unwrap().original_index(37).unwrap(), 37);
        assert_eq!(build_timeline_map(200, 100, 1.0).unwrap().original_index(50).unwrap(), 100);
        assert_eq!(build_timeline_map(940, 100, 1.0).unwrap().original_index(99).unwrap(), 930);
        assert_eq!(stride_oracle(200, 100, 50), 100);
        assert_eq!(stride_oracle(940, 100, 99), 930);
        assert!(matches!(build_timeline_map(0, 100, 1.0), Err(Error::Argument(_))));
        assert!(matches!(build_timeline_map(10, 0, 1.0), Err(Error::Argument(_))));
        assert!(matches!(build_timeline_map(10, 10, 0.0), Err(Error::Argument(_))));
    }

    #[test]
    fn short_videos_are_flagged() {
        let map = build_timeline_map(40, 100, 1.0).unwrap();
        assert!(map.is_shorter_than_target());
        assert_eq!(map.original_index(1).unwrap(), 0);
        assert_eq!(map.original_index(99).unwrap(), 39);
        assert!(!build_timeline_map(100, 100, 1.0).unwrap().is_shorter_than_target());
    }

    #[test]
    fn timestamps() {
        let identity = TimelineMap::identity(100).unwrap();
        assert_eq!(to_original_timestamp(&identity, 5).unwrap(), 5.0);
        let half = build_timeline_map(200, 100, 1.0).unwrap();
        assert_eq!(to_original_timestamp(&half, 50).unwrap(), 100.0);
        let half_2fps = build_timeline_map(200, 100, 2.0).unwrap();
        assert_eq!(to_original_timestamp(&half_2fps, 50).unwrap(), 50.0);
        assert!(matches!(to_original_timestamp(&half, 100), Err(Error::Range(_))));
    }

    #[test]
    fn interleaved_examples() {
        let seq = build_interleaved_sequence(&TimelineMap::identity(3).unwrap(), 2).unwrap();
        let pairs: Vec<_> = seq.entries.iter().map(|e| (e.token.as_str(), e.visual_slot)).collect();
        assert_eq!(pairs, [("[f00]", 0), ("[f01]", 1), ("[f02]", 2)]);

        let seq = build_interleaved_sequence(&TimelineMap::identity(100).unwrap(), 2).unwrap();
        assert_eq!(seq.len(), 100);
        assert_eq!(seq.entries[0].token, "[f00]");
        assert_eq!(seq.entries[99].token, "[f99]");

        let seq = build_interleaved_sequence(&build_timeline_map(200, 100, 1.0).unwrap(), 2).unwrap();
        assert_eq!(seq.entries[50].visual_slot, 100);

        let too_long = TimelineMap::identity(101).unwrap();
        assert!(matches!(build_interleaved_sequence(&too_long, 2), Err(Error::Range(_))));
    }

    proptest! {
        #[test]
        fn map_matches_stride_oracle(original in 1usize..2000, target in 1usize..300, seed in any::<usize>()) {
            let map = build_timeline_map(original, target, 1.0).unwrap();
            let k = seed % target;
            prop_assert_eq!(map.original_index(k).unwrap(), stride_oracle(original, target, k));
        }

        #[test]
        fn interleaved_tokens_are_contiguous(original in 1usize..500, target in 1usize..=100) {
            let map = build_timeline_map(original, target, 1.0).unwrap();
            let seq = build_interleaved_sequence(&map, 2).unwrap();
            prop_assert_eq!(seq.len(), target);
            for (k, entry) in seq.entries.iter().enumerate() {
                prop_assert_eq!(entry.index, k);
                prop_assert_eq!(decode_temporal_token(&entry.token, 2).unwrap(), k);
            }
        }
    }
}
