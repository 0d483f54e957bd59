use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::harmonic_mean;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Frame-set overlap between a predicted and a reference video summary.
pub fn f1_frame_overlap(pred: &[usize], gt: &[usize]) -> Result<OverlapScore> {
    if pred.is_empty() && gt.is_empty() {
        return Err(Error::UndefinedScore(
            "frame F1 with both prediction and reference empty".into(),
        ));
    }
    let pred: BTreeSet<usize> = pred.iter().copied().collect();
    let gt: BTreeSet<usize> = gt.iter().copied().collect();
    let hits = pred.intersection(&gt).count() as f64;
    let ratio = |n: usize| if n == 0 { 0.0 } else { hits / n as f64 };
    let precision = ratio(pred.len());
    let recall = ratio(gt.len());
    Ok(OverlapScore {
        precision,
        recall,
        f1: harmonic_mean(precision, recall),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let perfect = f1_frame_overlap(&[1, 5, 9], &[1, 5, 9]).unwrap();
        assert_eq!((perfect.precision, perfect.recall, perfect.f1), (1.0, 1.0, 1.0));
        let half = f1_frame_overlap(&[1, 2], &[2, 3]).unwrap();
        assert_eq!((half.precision, half.recall, half.f1), (0.5, 0.5, 0.5));
        assert_eq!(f1_frame_overlap(&[1], &[2, 3]).unwrap().f1, 0.0);
    }

    #[test]
    fn empty_sides() {
        let no_pred = f1_frame_overlap(&[], &[2, 3]).unwrap();
        assert_eq!((no_pred.precision, no_pred.recall, no_pred.f1), (0.0, 0.0, 0.0));
        assert!(matches!(f1_frame_overlap(&[], &[]), Err(Error::UndefinedScore(_))));
    }

    #[test]
    fn uneven_sizes() {
        let s = f1_frame_overlap(&[1, 2, 3, 4], &[4]).unwrap();
        assert_eq!((s.precision, s.recall), (0.25, 1.0));
        assert!((s.f1 - 0.4).abs() < 1e-15);
    }
}
