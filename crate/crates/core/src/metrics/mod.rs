//! Video, cross-modal and text summary metrics.

mod clip;
mod overlap;
mod rank;
mod text;

use serde::{Deserialize, Serialize};

pub use clip::{cross_f_clip, f_clip, p_clip, r_clip, vt_clip_score, ClipScore};
pub use overlap::{f1_frame_overlap, OverlapScore};
pub use rank::{average_ranks, kendall_tau, spearman_rho};
pub use text::{bleu4, cider, lcs_length, rouge_l, tokenize, CiderConfig, CiderResult};

/// `2pr / (p + r)`, or 0 when both are 0.
pub fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct V2VScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub spearman: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kendall: Option<f64>,
}

impl From<OverlapScore> for V2VScore {
    fn from(o: OverlapScore) -> Self {
        Self {
            precision: o.precision,
            recall: o.recall,
            f1: o.f1,
            spearman: None,
            kendall: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextScore {
    pub bleu4: f64,
    pub rouge_l: f64,
    pub cider: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextMetricConfig {
    pub rouge_beta: f64,
    pub bleu_smoothing: String,
    pub cider: CiderConfig,
    pub tokenizer: String,
}

impl Default for TextMetricConfig {
    fn default() -> Self {
        Self {
            rouge_beta: 1.0,
            bleu_smoothing: "none".into(),
            cider: CiderConfig::default(),
            tokenizer: "lowercase, whitespace split, punctuation as separate tokens".into(),
        }
    }
}

/// Mean that does not depend on the order of `values`: sorted, then
/// compensated (Neumaier) summation. `None` for an empty slice.
pub fn stable_mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in sorted {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    Some((sum + comp) / values.len() as f64)
}

/// Scores an aligned corpus of raw prediction/reference strings.
pub fn text_scores(preds: &[String], refs: &[String], cfg: &TextMetricConfig) -> crate::Result<Vec<TextScore>> {
    let preds: Vec<Vec<String>> = preds.iter().map(|s| tokenize(s)).collect();
    let refs: Vec<Vec<String>> = refs.iter().map(|s| tokenize(s)).collect();
    let ciders = cider(&preds, &refs, &cfg.cider)?;
    Ok(preds
        .iter()
        .zip(&refs)
        .zip(ciders.per_item)
        .map(|((p, r), c)| TextScore {
            bleu4: bleu4(p, r),
            rouge_l: rouge_l(p, r, cfg.rouge_beta),
            cider: c,
        })
        .collect())
}
