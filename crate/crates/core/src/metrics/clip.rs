//! Greedy-matching similarity scores over embedding sets.
//!
//! Recall averages, over reference items, the best clamped cosine to any
//! predicted item; precision does the same from the predicted side.

use serde::{Deserialize, Serialize};

use super::harmonic_mean;
use crate::embeddings::{clamped_cosine, EmbeddingSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipScore {
    pub r_clip: f64,
    pub p_clip: f64,
    pub f_clip: f64,
}

fn check_sets(a: &EmbeddingSet, b: &EmbeddingSet) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Argument(format!(
            "similarity score over an empty set ({} vs {} items)",
            a.len(),
            b.len()
        )));
    }
    if a.dim() != b.dim() {
        return Err(Error::Argument(format!(
            "embedding dimensions differ ({} vs {})",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// `sims[i][j] = max(cos(reference_i, predicted_j), 0)`.
fn similarity_matrix(reference: &EmbeddingSet, predicted: &EmbeddingSet) -> Result<Vec<Vec<f64>>> {
    check_sets(reference, predicted)?;
    reference
        .items()
        .iter()
        .map(|r| predicted.items().iter().map(|p| clamped_cosine(r, p)).collect())
        .collect()
}

fn mean_row_max(sims: &[Vec<f64>]) -> f64 {
    let total: f64 = sims
        .iter()
        .map(|row| row.iter().copied().fold(0.0, f64::max))
        .sum();
    total / sims.len() as f64
}

fn mean_col_max(sims: &[Vec<f64>]) -> f64 {
    let cols = sims[0].len();
    let total: f64 = (0..cols)
        .map(|j| sims.iter().map(|row| row[j]).fold(0.0, f64::max))
        .sum();
    total / cols as f64
}

pub fn r_clip(reference: &EmbeddingSet, predicted: &EmbeddingSet) -> Result<f64> {
    Ok(mean_row_max(&similarity_matrix(reference, predicted)?))
}

pub fn p_clip(reference: &EmbeddingSet, predicted: &EmbeddingSet) -> Result<f64> {
    Ok(mean_col_max(&similarity_matrix(reference, predicted)?))
}

pub fn f_clip(reference: &EmbeddingSet, predicted: &EmbeddingSet) -> Result<ClipScore> {
    let sims = similarity_matrix(reference, predicted)?;
    let (r, p) = (mean_row_max(&sims), mean_col_max(&sims));
    Ok(ClipScore {
        r_clip: r,
        p_clip: p,
        f_clip: harmonic_mean(p, r),
    })
}

/// Mean of F(reference video, predicted text) and F(predicted video, reference text).
pub fn cross_f_clip(
    ref_video: &EmbeddingSet,
    pred_video: &EmbeddingSet,
    ref_text: &EmbeddingSet,
    pred_text: &EmbeddingSet,
) -> Result<f64> {
    let dims = [ref_video.dim(), pred_video.dim(), ref_text.dim(), pred_text.dim()];
    if dims.iter().any(|&d| d != dims[0]) {
        return Err(Error::Argument(format!(
            "frame and sentence embeddings must share one space, got dimensions {dims:?}"
        )));
    }
    let video_to_text = f_clip(ref_video, pred_text)?.f_clip;
    let text_to_video = f_clip(pred_video, ref_text)?.f_clip;
    Ok((video_to_text + text_to_video) / 2.0)
}

/// Clamped cosine between the mean-pooled frame and sentence embeddings.
pub fn vt_clip_score(pred_video: &EmbeddingSet, pred_text: &EmbeddingSet) -> Result<f64> {
    check_sets(pred_video, pred_text)?;
    clamped_cosine(&pred_video.mean_pooled()?, &pred_text.mean_pooled()?)
}
