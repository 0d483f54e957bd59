//! Frame importance from the logits of decoded temporal-token digits.
//!
//! For each emitted token the probability of the digit pair is approximated
//! by the product of the per-digit softmax probabilities. Every referenced
//! frame gets its own pair probability; unreferenced frames score 0.

use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, LineError, Result};

/// Softmax with max-subtraction.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::Empty("softmax of an empty vector".into()));
    }
    if let Some(bad) = logits.iter().find(|x| !x.is_finite()) {
        return Err(Error::Numeric(format!("non-finite logit {bad}")));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Probability of one digit: `softmax(logits)[decoded]`.
fn digit_probability(logits: &[f64], decoded: usize) -> Result<f64> {
    if decoded >= logits.len() {
        return Err(Error::Index(format!(
            "decoded id {decoded} outside vocabulary of size {}",
            logits.len()
        )));
    }
    Ok(softmax(logits)?[decoded])
}

/// Joint probability of a multi-digit token as the product of its digits.
pub fn digit_sequence_probability<'a>(
    digits: impl IntoIterator<Item = (&'a [f64], usize)>,
) -> Result<f64> {
    let mut product = 1.0;
    let mut count = 0;
    for (logits, decoded) in digits {
        product *= digit_probability(logits, decoded)?;
        count += 1;
    }
    if count == 0 {
        return Err(Error::Empty("token without digits".into()));
    }
    Ok(product)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitRecord {
    /// Output position of the tens digit; the ones digit follows at `position + 1`.
    pub position: usize,
    pub frame_index: usize,
    pub tens_logits: Vec<f64>,
    pub ones_logits: Vec<f64>,
    pub decoded_tens_id: usize,
    pub decoded_ones_id: usize,
}

impl LogitRecord {
    pub fn validate(&self) -> Result<()> {
        if self.tens_logits.len() != self.ones_logits.len() {
            return Err(Error::Argument(format!(
                "tens/ones logit dimensions differ ({} vs {})",
                self.tens_logits.len(),
                self.ones_logits.len()
            )));
        }
        if self.tens_logits.len() < 2 {
            return Err(Error::Argument("logit vectors need at least two entries".into()));
        }
        for (name, id) in [("tens", self.decoded_tens_id), ("ones", self.decoded_ones_id)] {
            if id >= self.tens_logits.len() {
                return Err(Error::Index(format!(
                    "decoded {name} id {id} outside vocabulary of size {}",
                    self.tens_logits.len()
                )));
            }
        }
        Ok(())
    }
}

pub fn digit_pair_probability(rec: &LogitRecord) -> Result<f64> {
    rec.validate()?;
    digit_sequence_probability([
        (rec.tens_logits.as_slice(), rec.decoded_tens_id),
        (rec.ones_logits.as_slice(), rec.decoded_ones_id),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceVector {
    pub scores: Vec<f64>,
    /// Mean pair probability over the decoded tokens (not over all frames).
    pub mean_score: f64,
}

pub fn importance_vector(records: &[LogitRecord], timeline_len: usize) -> Result<ImportanceVector> {
    if records.is_empty() {
        return Err(Error::Empty("no logit records".into()));
    }
    let mut scores = vec![0.0; timeline_len];
    let mut seen = HashSet::new();
    let mut total = 0.0;
    for rec in records {
        if rec.frame_index >= timeline_len {
            return Err(Error::Range(format!(
                "frame index {} outside timeline of length {timeline_len}",
                rec.frame_index
            )));
        }
        if !seen.insert(rec.frame_index) {
            return Err(Error::Argument(format!(
                "frame index {} appears in more than one record",
                rec.frame_index
            )));
        }
        let p = digit_pair_probability(rec)?;
        scores[rec.frame_index] = p;
        total += p;
    }
    Ok(ImportanceVector {
        scores,
        mean_score: total / records.len() as f64,
    })
}

/// Reads one [`LogitRecord`] per non-blank line.
pub fn read_logit_records(path: &Path) -> Result<Vec<LogitRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<LogitRecord>(&line) {
            Ok(rec) => records.push(rec),
            Err(e) => errors.push(LineError {
                line: n + 1,
                message: e.to_string(),
            }),
        }
    }
    if !errors.is_empty() {
        return Err(Error::Load {
            path: path.to_path_buf(),
            errors,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(frame: usize, tens: Vec<f64>, ones: Vec<f64>, ids: (usize, usize)) -> LogitRecord {
        LogitRecord {
            position: frame * 4,
            frame_index: frame,
            tens_logits: tens,
            ones_logits: ones,
            decoded_tens_id: ids.0,
            decoded_ones_id: ids.1,
        }
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&[0.0, 0.0]).unwrap(), [0.5, 0.5]);
        let sat = softmax(&[1000.0, 0.0]).unwrap();
        assert!((sat[0] - 1.0).abs() < 1e-12 && sat[1] < 1e-300);
        // e^x / sum e^x evaluated directly
        let direct: Vec<f64> = {
            let e: Vec<f64> = [1.0f64, 2.0, 3.0].iter().map(|x| x.exp()).collect();
            let s: f64 = e.iter().sum();
            e.iter().map(|x| x / s).collect()
        };
        let got = softmax(&[1.0, 2.0, 3.0]).unwrap();
        for ((g, d), frozen) in got.iter().zip(&direct).zip([0.09003057, 0.24472847, 0.66524096]) {
            assert!((g - d).abs() < 1e-15);
            assert!((g - frozen).abs() < 1e-8);
        }
    }

    #[test]
    fn softmax_rejects_bad_input() {
        assert!(matches!(softmax(&[f64::NAN, 0.0]), Err(Error::Numeric(_))));
        assert!(matches!(softmax(&[f64::INFINITY]), Err(Error::Numeric(_))));
        assert!(matches!(softmax(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn pair_probability_examples() {
        let saturated = record(3, vec![0.0, 500.0], vec![500.0, 0.0], (1, 0));
        assert!((digit_pair_probability(&saturated).unwrap() - 1.0).abs() < 1e-12);
        let uniform2 = record(3, vec![0.0; 2], vec![0.0; 2], (0, 1));
        assert!((digit_pair_probability(&uniform2).unwrap() - 0.25).abs() < 1e-15);
        let uniform10 = record(3, vec![1.5; 10], vec![1.5; 10], (4, 9));
        assert!((digit_pair_probability(&uniform10).unwrap() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn pair_probability_errors() {
        let bad_id = record(0, vec![0.0; 3], vec![0.0; 3], (3, 0));
        assert!(matches!(digit_pair_probability(&bad_id), Err(Error::Index(_))));
        let mismatched = record(0, vec![0.0; 3], vec![0.0; 4], (0, 0));
        assert!(matches!(digit_pair_probability(&mismatched), Err(Error::Argument(_))));
        let tiny = record(0, vec![0.0], vec![0.0], (0, 0));
        assert!(matches!(digit_pair_probability(&tiny), Err(Error::Argument(_))));
    }

    #[test]
    fn shift_invariance() {
        let base = record(7, vec![0.3, -1.2, 2.5, 0.0], vec![1.1, 0.4, -0.7, 3.0], (2, 3));
        let p = digit_pair_probability(&base).unwrap();
        for shift in [-1e4, -37.5, 0.1, 1e4] {
            let shifted = LogitRecord {
                tens_logits: base.tens_logits.iter().map(|x| x + shift).collect(),
                ones_logits: base.ones_logits.iter().map(|x| x + shift).collect(),
                ..base.clone()
            };
            assert!((digit_pair_probability(&shifted).unwrap() - p).abs() < 1e-12);
        }
    }

    #[test]
    fn three_digit_tokens() {
        let digits = [vec![0.0; 10], vec![0.0; 10], vec![0.0; 10]];
        let p = digit_sequence_probability(digits.iter().map(|d| (d.as_slice(), 0))).unwrap();
        assert!((p - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn vector_examples() {
        let one = record(3, vec![0.0, 800.0], vec![800.0, 0.0], (1, 0));
        let v = importance_vector(&[one], 5).unwrap();
        assert_eq!(v.scores.len(), 5);
        assert!((v.scores[3] - 1.0).abs() < 1e-12);
        assert!(v.scores.iter().enumerate().all(|(i, s)| i == 3 || *s == 0.0));
        assert!((v.mean_score - 1.0).abs() < 1e-12);

        let a = record(0, vec![0.0; 2], vec![0.0; 2], (0, 0));
        let b = record(4, vec![0.0; 2], vec![0.0; 2], (0, 1));
        let v = importance_vector(&[a, b], 5).unwrap();
        assert_eq!(v.scores, [0.25, 0.0, 0.0, 0.0, 0.25]);
        assert_eq!(v.mean_score, 0.25);

        assert!(matches!(importance_vector(&[], 5), Err(Error::Empty(_))));
    }

    #[test]
    fn vector_errors() {
        let a = record(2, vec![0.0; 2], vec![0.0; 2], (0, 0));
        assert!(matches!(
            importance_vector(&[a.clone(), a.clone()], 5),
            Err(Error::Argument(_))
        ));
        assert!(matches!(importance_vector(&[a], 2), Err(Error::Range(_))));
    }
}
