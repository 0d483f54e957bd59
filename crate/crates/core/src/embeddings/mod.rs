//! Unit-norm frame and sentence embeddings.
//!
//! Vectors are normalized when admitted to an [`EmbeddingSet`], so dot
//! products between items are cosine similarities and any positive scaling
//! of the source data has no effect downstream.

mod remote;
mod xemb;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use remote::{fetch_remote, PayloadKind, RemoteProvider};
pub use xemb::{decode_xemb, encode_xemb, load_embedding_file, save_embedding_file, XEMB_MAGIC, XEMB_VERSION};

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f64>,
}

impl Embedding {
    /// Normalizes `values` to unit length. Zero, empty and non-finite vectors are rejected.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Argument("embedding has no components".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("embedding has non-finite components".into()));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Numeric(format!("embedding cannot be normalized (norm {norm})")));
        }
        Ok(Self {
            values: values.into_iter().map(|v| v / norm).collect(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn dot(&self, other: &Embedding) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::Argument(format!(
                "dimension mismatch: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum())
    }
}

/// `max(cos(a, b), 0)`; the upper end is clipped to absorb rounding.
pub fn clamped_cosine(a: &Embedding, b: &Embedding) -> Result<f64> {
    Ok(a.dot(b)?.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSetMeta {
    pub count: usize,
    pub dim: usize,
}

/// Ordered, optionally labelled, embeddings of one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    items: Vec<Embedding>,
    labels: Option<Vec<String>>,
    dim: usize,
}

impl EmbeddingSet {
    pub fn new(items: Vec<Embedding>, labels: Option<Vec<String>>) -> Result<Self> {
        let dim = items.first().map_or(0, Embedding::dim);
        if let Some((i, e)) = items.iter().enumerate().find(|(_, e)| e.dim() != dim) {
            return Err(Error::Argument(format!(
                "item {i} has dimension {} but the set has {dim}",
                e.dim()
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != items.len() {
                return Err(Error::Argument(format!(
                    "{} labels for {} items",
                    labels.len(),
                    items.len()
                )));
            }
            let mut seen = HashSet::new();
            if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
                return Err(Error::Argument(format!("duplicate label {dup:?}")));
            }
        }
        Ok(Self { items, labels, dim })
    }

    pub fn from_vectors<I, V>(vectors: I) -> Result<Self>
    where
        I: IntoIterator<Item = V>,
        V: Into<Vec<f64>>,
    {
        let items = vectors
            .into_iter()
            .map(|v| Embedding::new(v.into()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(items, None)
    }

    pub fn items(&self) -> &[Embedding] {
        &self.items
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Items whose label is one of `wanted`, in set order.
    pub fn select_labels<S: AsRef<str>>(&self, wanted: &[S]) -> Result<EmbeddingSet> {
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| Error::Argument("embedding set carries no labels".into()))?;
        let wanted: HashSet<&str> = wanted.iter().map(AsRef::as_ref).collect();
        let (items, kept): (Vec<_>, Vec<_>) = self
            .items
            .iter()
            .zip(labels)
            .filter(|(_, l)| wanted.contains(l.as_str()))
            .map(|(e, l)| (e.clone(), l.clone()))
            .unzip();
        Self::new(items, Some(kept))
    }

    /// Items at the given positions, in the order given.
    pub fn select_rows(&self, rows: &[usize]) -> Result<EmbeddingSet> {
        let items = rows
            .iter()
            .map(|&r| {
                self.items.get(r).cloned().ok_or_else(|| {
                    Error::Range(format!("row {r} outside set of {} items", self.items.len()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let labels = self
            .labels
            .as_ref()
            .map(|l| rows.iter().map(|&r| l[r].clone()).collect());
        Self::new(items, labels)
    }

    /// Unit-normalized mean of all items.
    pub fn mean_pooled(&self) -> Result<Embedding> {
        if self.is_empty() {
            return Err(Error::Argument("cannot pool an empty embedding set".into()));
        }
        let mut sum = vec![0.0; self.dim];
        for item in &self.items {
            for (s, v) in sum.iter_mut().zip(item.values()) {
                *s += v;
            }
        }
        let n = self.items.len() as f64;
        Embedding::new(sum.into_iter().map(|s| s / n).collect())
    }

    pub fn meta(&self) -> EmbeddingSetMeta {
        EmbeddingSetMeta {
            count: self.len(),
            dim: self.dim,
        }
    }
}
