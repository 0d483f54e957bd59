//! Caption metrics for text summaries: BLEU-4, ROUGE-L and CIDEr-D.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowercases, splits on whitespace and emits every non-alphanumeric
/// character as a token of its own.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars().flat_map(char::to_lowercase) {
        if ch.is_whitespace() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        } else if ch.is_alphanumeric() {
            current.push(ch);
        } else {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            tokens.push(ch.to_string());
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

type NgramCounts<'a> = HashMap<&'a [String], usize>;

fn ngram_counts(tokens: &[String], n: usize) -> NgramCounts<'_> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence BLEU-4 against a single reference, uniform weights, no smoothing.
pub fn bleu4(pred: &[String], reference: &[String]) -> f64 {
    if pred.is_empty() {
        log::warn!("BLEU-4 of an empty prediction is 0");
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let hyp = ngram_counts(pred, n);
        let refs = ngram_counts(reference, n);
        let total: usize = hyp.values().sum();
        let clipped: usize = hyp
            .iter()
            .map(|(gram, &c)| c.min(refs.get(gram).copied().unwrap_or(0)))
            .sum();
        if clipped == 0 || total == 0 {
            return 0.0;
        }
        log_sum += (clipped as f64 / total as f64).ln() / 4.0;
    }
    let (c, r) = (pred.len() as f64, reference.len() as f64);
    let brevity = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    brevity * log_sum.exp()
}

pub fn lcs_length(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// LCS-based F-measure; `beta` weights recall against precision.
pub fn rouge_l(pred: &[String], reference: &[String], beta: f64) -> f64 {
    if pred.is_empty() || reference.is_empty() {
        log::warn!("ROUGE-L with an empty side is 0");
        return 0.0;
    }
    let lcs = lcs_length(pred, reference) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let recall = lcs / reference.len() as f64;
    let precision = lcs / pred.len() as f64;
    let b2 = beta * beta;
    (1.0 + b2) * precision * recall / (recall + b2 * precision)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiderConfig {
    pub max_n: usize,
    pub sigma: f64,
    pub scale: f64,
}

impl Default for CiderConfig {
    fn default() -> Self {
        Self {
            max_n: 4,
            sigma: 6.0,
            scale: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiderResult {
    pub per_item: Vec<f64>,
    pub mean: f64,
}

struct TfIdf<'a> {
    /// One weight map per n-gram order.
    weights: Vec<HashMap<&'a [String], f64>>,
    norms: Vec<f64>,
    len: usize,
}

fn tf_idf<'a>(
    tokens: &'a [String],
    doc_freq: &HashMap<&[String], f64>,
    log_corpus: f64,
    max_n: usize,
) -> TfIdf<'a> {
    let mut weights = Vec::with_capacity(max_n);
    let mut norms = Vec::with_capacity(max_n);
    for n in 1..=max_n {
        let map: HashMap<&[String], f64> = ngram_counts(tokens, n)
            .into_iter()
            .map(|(g, tf)| {
                let df = doc_freq.get(g).copied().unwrap_or(0.0).max(1.0);
                (g, tf as f64 * (log_corpus - df.ln()))
            })
            .collect();
        norms.push(map.values().map(|w| w * w).sum::<f64>().sqrt());
        weights.push(map);
    }
    TfIdf {
        weights,
        norms,
        len: tokens.len(),
    }
}

/// CIDEr-D over an aligned corpus with one reference per prediction.
///
/// Document frequencies come from the references; each order's TF-IDF cosine
/// clips prediction weights at the reference weight and is damped by a
/// Gaussian on the length difference.
pub fn cider(preds: &[Vec<String>], refs: &[Vec<String>], cfg: &CiderConfig) -> Result<CiderResult> {
    if preds.len() != refs.len() {
        return Err(Error::Argument(format!(
            "{} predictions for {} references",
            preds.len(),
            refs.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::Empty("CIDEr over an empty corpus".into()));
    }
    if cfg.max_n == 0 {
        return Err(Error::Argument("CIDEr needs max_n >= 1".into()));
    }
    if preds.len() == 1 {
        log::warn!("CIDEr over a single item: IDF weights are degenerate");
    }

    let mut doc_freq: HashMap<&[String], f64> = HashMap::new();
    for r in refs {
        let grams: HashSet<&[String]> = (1..=cfg.max_n)
            .flat_map(|n| ngram_counts(r, n).into_keys())
            .collect();
        for g in grams {
            *doc_freq.entry(g).or_insert(0.0) += 1.0;
        }
    }
    let log_corpus = (refs.len() as f64).ln();

    let vectorize = |tokens| tf_idf(tokens, &doc_freq, log_corpus, cfg.max_n);

    let per_item: Vec<f64> = preds
        .iter()
        .zip(refs)
        .map(|(p, r)| {
            let (hyp, reference) = (vectorize(p), vectorize(r));
            let delta = hyp.len as f64 - reference.len as f64;
            let penalty = (-(delta * delta) / (2.0 * cfg.sigma * cfg.sigma)).exp();
            let total: f64 = (0..cfg.max_n)
                .map(|n| {
                    let mut val: f64 = hyp.weights[n]
                        .iter()
                        .map(|(g, &h)| {
                            let r = reference.weights[n].get(g).copied().unwrap_or(0.0);
                            h.min(r) * r
                        })
                        .sum();
                    if hyp.norms[n] != 0.0 && reference.norms[n] != 0.0 {
                        val /= hyp.norms[n] * reference.norms[n];
                    }
                    val * penalty
                })
                .sum();
            total / cfg.max_n as f64 * cfg.scale
        })
        .collect();
    let mean = per_item.iter().sum::<f64>() / per_item.len() as f64;
    Ok(CiderResult { per_item, mean })
}
