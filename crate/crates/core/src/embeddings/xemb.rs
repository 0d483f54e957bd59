//! `XEMB` binary layout, all integers little-endian:
//!
//! ```text
//! "XEMB" | version u16 (=1) | count u32 | dim u32 | count*dim f32 (row-major)
//! [ flag u8 | if flag == 1: count * (len u16, utf-8 bytes) ]
//! ```

use std::path::Path;

use super::{Embedding, EmbeddingSet};
use crate::error::{Error, Result};

pub const XEMB_MAGIC: &[u8; 4] = b"XEMB";
pub const XEMB_VERSION: u16 = 1;
const HEADER_LEN: usize = 14;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(format_err(
                self.pos,
                format!(
                    "truncated {what}: need {n} byte(s), {} left",
                    self.bytes.len() - self.pos
                ),
            )),
        }
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }
}

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        message: message.into(),
    }
}

pub fn decode_xemb(bytes: &[u8]) -> Result<EmbeddingSet> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4, "magic")?;
    if magic != XEMB_MAGIC {
        return Err(format_err(0, format!("bad magic {magic:?}, expected \"XEMB\"")));
    }
    let version = r.u16("version")?;
    if version != XEMB_VERSION {
        return Err(format_err(4, format!("unsupported version {version}")));
    }
    let count = r.u32("count")? as usize;
    let dim = r.u32("dim")? as usize;
    if count > 0 && dim == 0 {
        return Err(format_err(10, "dimension is zero"));
    }
    let payload_len = count
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| format_err(6, "count * dim overflows"))?;
    if bytes.len() - HEADER_LEN < payload_len {
        return Err(format_err(
            bytes.len(),
            format!(
                "truncated payload: header promises {count}x{dim} floats ({payload_len} bytes), found {}",
                bytes.len() - HEADER_LEN
            ),
        ));
    }

    let mut items = Vec::with_capacity(count);
    for row in 0..count {
        let offset = r.pos;
        let raw = r.take(dim * 4, "vector")?;
        let values: Vec<f64> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect();
        let item = Embedding::new(values).map_err(|e| format_err(offset, format!("vector {row}: {e}")))?;
        items.push(item);
    }

    let labels = if r.pos == bytes.len() {
        None
    } else {
        let flag_at = r.pos;
        match r.u8("label flag")? {
            0 => None,
            1 => {
                let mut labels = Vec::with_capacity(count);
                for i in 0..count {
                    let len = r.u16("label length")? as usize;
                    let at = r.pos;
                    let raw = r.take(len, "label")?;
                    let label = std::str::from_utf8(raw)
                        .map_err(|e| format_err(at, format!("label {i} is not UTF-8: {e}")))?;
                    labels.push(label.to_owned());
                }
                Some(labels)
            }
            other => return Err(format_err(flag_at, format!("label flag must be 0 or 1, got {other}"))),
        }
    };
    if r.pos != bytes.len() {
        return Err(format_err(r.pos, format!("{} trailing byte(s)", bytes.len() - r.pos)));
    }
    EmbeddingSet::new(items, labels).map_err(|e| format_err(HEADER_LEN + payload_len, e.to_string()))
}

pub fn encode_xemb(set: &EmbeddingSet) -> Result<Vec<u8>> {
    let count = u32::try_from(set.len()).map_err(|_| Error::Argument("too many embeddings".into()))?;
    let dim = u32::try_from(set.dim()).map_err(|_| Error::Argument("dimension too large".into()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + set.len() * set.dim() * 4 + 1);
    out.extend_from_slice(XEMB_MAGIC);
    out.extend_from_slice(&XEMB_VERSION.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&dim.to_le_bytes());
    for item in set.items() {
        for v in item.values() {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    match set.labels() {
        None => out.push(0),
        Some(labels) => {
            out.push(1);
            for label in labels {
                let len = u16::try_from(label.len())
                    .map_err(|_| Error::Argument(format!("label {label:?} longer than 65535 bytes")))?;
                out.extend_from_slice(&len.to_le_bytes());
                out.extend_from_slice(label.as_bytes());
            }
        }
    }
    Ok(out)
}

pub fn load_embedding_file(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_xemb(&bytes)
}

pub fn save_embedding_file(set: &EmbeddingSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_xemb(set)?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw_file(count: u32, dim: u32, floats: &[f32]) -> Vec<u8> {
        let mut out = b"XEMB".to_vec();
        out.extend_from_slice(&1u16.to_le_bytes());
        out.extend_from_slice(&count.to_le_bytes());
        out.extend_from_slice(&dim.to_le_bytes());
        for f in floats {
            out.extend_from_slice(&f.to_le_bytes());
        }
        out
    }

    #[test]
    fn loads_and_normalizes() {
        let set = decode_xemb(&raw_file(2, 3, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0])).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.dim(), 3);
        assert_eq!(set.items()[0].values(), [1.0, 0.0, 0.0]);
        assert_eq!(set.items()[1].values(), [0.0, 1.0, 0.0]);
        assert!(set.labels().is_none());
    }

    #[test]
    fn truncated_payload() {
        let err = decode_xemb(&raw_file(1, 3, &[1.0, 0.0])).unwrap_err();
        match err {
            Error::Format { offset, message } => {
                assert_eq!(offset, 22);
                assert!(message.contains("truncated"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_and_bad_magic() {
        assert!(matches!(decode_xemb(&[]), Err(Error::Format { offset: 0, .. })));
        let mut bad = raw_file(1, 1, &[1.0]);
        bad[0] = b'Y';
        assert!(matches!(decode_xemb(&bad), Err(Error::Format { offset: 0, .. })));
        let mut version = raw_file(1, 1, &[1.0]);
        version[4] = 2;
        assert!(matches!(decode_xemb(&version), Err(Error::Format { offset: 4, .. })));
    }

    #[test]
    fn zero_vector_names_its_offset() {
        let err = decode_xemb(&raw_file(2, 2, &[1.0, 0.0, 0.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::Format { offset: 22, .. }), "{err:?}");
    }

    #[test]
    fn labels_and_trailing_bytes() {
        let mut bytes = raw_file(2, 1, &[1.0, 3.0]);
        bytes.push(1);
        for label in ["f03", "f17"] {
            bytes.extend_from_slice(&(label.len() as u16).to_le_bytes());
            bytes.extend_from_slice(label.as_bytes());
        }
        let set = decode_xemb(&bytes).unwrap();
        assert_eq!(set.labels().unwrap(), ["f03", "f17"]);

        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(matches!(decode_xemb(&trailing), Err(Error::Format { .. })));

        let mut short_label = bytes;
        short_label.pop();
        assert!(matches!(decode_xemb(&short_label), Err(Error::Format { .. })));

        let mut flag_zero = raw_file(1, 1, &[1.0]);
        flag_zero.push(0);
        assert!(decode_xemb(&flag_zero).unwrap().labels().is_none());
    }

    #[test]
    fn duplicate_labels_rejected() {
        let mut bytes = raw_file(2, 1, &[1.0, 1.0]);
        bytes.push(1);
        for _ in 0..2 {
            bytes.extend_from_slice(&1u16.to_le_bytes());
            bytes.push(b'a');
        }
        assert!(matches!(decode_xemb(&bytes), Err(Error::Format { .. })));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.xemb");
        let set = EmbeddingSet::new(
            EmbeddingSet::from_vectors([vec![3.0, 4.0], vec![-1.0, 1.0]]).unwrap().items().to_vec(),
            Some(vec!["0".into(), "1".into()]),
        )
        .unwrap();
        save_embedding_file(&set, &path).unwrap();
        let back = load_embedding_file(&path).unwrap();
        assert_eq!(back.labels(), set.labels());
        assert!(matches!(load_embedding_file(dir.path().join("missing")), Err(Error::Io { .. })));
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent_through_storage(
            rows in proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, 4), 1..6)
        ) {
            prop_assume!(rows.iter().all(|r| r.iter().map(|v| v * v).sum::<f64>() > 1e-6));
            let set = EmbeddingSet::from_vectors(rows).unwrap();
            let once = decode_xemb(&encode_xemb(&set).unwrap()).unwrap();
            let twice = decode_xemb(&encode_xemb(&once).unwrap()).unwrap();
            for (a, b) in set.items().iter().zip(twice.items()) {
                for (x, y) in a.values().iter().zip(b.values()) {
                    prop_assert!((x - y).abs() < 1e-6);
                }
            }
        }
    }
}
