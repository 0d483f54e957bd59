//! C ABI over `xum-eval`.
//!
//! Every fallible call returns an [`XumStatus`]; on failure the message is
//! available from [`xum_last_error`] on the same thread. Handles are opaque
//! and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use xum_eval::dataset::{redundancy_filter, SimilarityMatrix};
use xum_eval::embeddings::{load_embedding_file, EmbeddingSet};
use xum_eval::importance::{importance_vector, read_logit_records};
use xum_eval::metrics::{cross_f_clip, f1_frame_overlap, f_clip, kendall_tau, spearman_rho, vt_clip_score};
use xum_eval::summary_parser::{parse_summary, ParsedSummary, TaskKind};
use xum_eval::temporal_codec::{decode_temporal_token, encode_temporal_token};
use xum_eval::Error;

/// Result of every fallible call; `OK` is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XumStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Format = 4,
    Parse = 5,
    Range = 6,
    Argument = 7,
    Numeric = 8,
    EmptySummary = 9,
    Empty = 10,
    UndefinedScore = 11,
    Provider = 12,
    BufferTooSmall = 13,
    Panic = 14,
}

impl From<&Error> for XumStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Range(_) | Error::Index(_) => XumStatus::Range,
            Error::Parse(_) => XumStatus::Parse,
            Error::Argument(_) => XumStatus::Argument,
            Error::Numeric(_) => XumStatus::Numeric,
            Error::EmptySummary(_) => XumStatus::EmptySummary,
            Error::Empty(_) => XumStatus::Empty,
            Error::UndefinedScore(_) => XumStatus::UndefinedScore,
            Error::Format { .. } | Error::Load { .. } | Error::Json(_) => XumStatus::Format,
            Error::Provider { .. } => XumStatus::Provider,
            Error::Io { .. } => XumStatus::Io,
        }
    }
}

/// Task selector for [`xum_summary_parse`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XumTask {
    Video = 0,
    Text = 1,
    Both = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct XumClipScore {
    pub r_clip: f64,
    pub p_clip: f64,
    pub f_clip: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct XumOverlapScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Opaque set of unit-norm embeddings.
pub struct XumEmbeddingSet(EmbeddingSet);

/// Opaque parsed summary.
pub struct XumSummary {
    parsed: ParsedSummary,
    text: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(XumStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(XumStatus::from(&e), e.to_string())
    }
}

fn fail(status: XumStatus, message: impl Into<String>) -> Failure {
    Failure(status, message.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> XumStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            XumStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            XumStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or_else(|| fail(XumStatus::NullPointer, format!("{name} is null")))
}

unsafe fn handle<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| fail(XumStatus::NullPointer, format!("{name} is null")))
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        Ok(&[])
    } else if ptr.is_null() {
        Err(fail(XumStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(std::slice::from_raw_parts(ptr, len))
    }
}

unsafe fn string<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(fail(XumStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(XumStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn xum_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn xum_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads an `XEMB` file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn xum_embedding_set_load(path: *const c_char, out: *mut *mut XumEmbeddingSet) -> XumStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let set = load_embedding_file(string(path, "path")?)?;
        *out = Box::into_raw(Box::new(XumEmbeddingSet(set)));
        Ok(())
    })
}

/// Builds a set from `count` row-major vectors of length `dim`; rows are
/// normalized.
///
/// # Safety
/// `values` must point to `count * dim` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn xum_embedding_set_from_values(
    values: *const f64,
    count: usize,
    dim: usize,
    out: *mut *mut XumEmbeddingSet,
) -> XumStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        if dim == 0 {
            return Err(fail(XumStatus::Argument, "dim must be positive"));
        }
        let total = count
            .checked_mul(dim)
            .ok_or_else(|| fail(XumStatus::Argument, "count * dim overflows"))?;
        let values = slice(values, total, "values")?;
        let set = EmbeddingSet::from_vectors(values.chunks(dim).map(<[f64]>::to_vec))?;
        *out = Box::into_raw(Box::new(XumEmbeddingSet(set)));
        Ok(())
    })
}

/// # Safety
/// `set` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn xum_embedding_set_free(set: *mut XumEmbeddingSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of vectors; 0 for a null handle.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn xum_embedding_set_len(set: *const XumEmbeddingSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.len())
}

/// Vector dimension; 0 for a null handle.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn xum_embedding_set_dim(set: *const XumEmbeddingSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.dim())
}

/// Greedy CLIP matching of `reference` against `predicted`.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn xum_f_clip(
    reference: *const XumEmbeddingSet,
    predicted: *const XumEmbeddingSet,
    out: *mut XumClipScore,
) -> XumStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let s = f_clip(&handle(reference, "reference")?.0, &handle(predicted, "predicted")?.0)?;
        *out = XumClipScore {
            r_clip: s.r_clip,
            p_clip: s.p_clip,
            f_clip: s.f_clip,
        };
        Ok(())
    })
}

/// Mean of the video-to-text and text-to-video F_CLIP scores.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn xum_cross_f_clip(
    ref_video: *const XumEmbeddingSet,
    pred_video: *const XumEmbeddingSet,
    ref_text: *const XumEmbeddingSet,
    pred_text: *const XumEmbeddingSet,
    out: *mut f64,
) -> XumStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = cross_f_clip(
            &handle(ref_video, "ref_video")?.0,
            &handle(pred_video, "pred_video")?.0,
            &handle(ref_text, "ref_text")?.0,
            &handle(pred_text, "pred_text")?.0,
        )?;
        Ok(())
    })
}

/// Cosine of the mean-pooled predicted video and text embeddings.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn xum_vt_clip_score(
    pred_video: *const XumEmbeddingSet,
    pred_text: *const XumEmbeddingSet,
    out: *mut f64,
) -> XumStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = vt_clip_score(&handle(pred_video, "pred_video")?.0, &handle(pred_text, "pred_text")?.0)?;
        Ok(())
    })
}

/// Frame-set precision, recall and F1.
///
/// # Safety
/// Arrays must hold the stated number of elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn xum_f1_overlap(
    predicted: *const usize,
    predicted_len: usize,
    reference: *const usize,
    reference_len: usize,
    out: *mut XumOverlapScore,
) -> XumStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let s = f1_frame_overlap(
            slice(predicted, predicted_len, "predicted")?,
            slice(reference, reference_len, "reference")?,
        )?;
        *out = XumOverlapScore {
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
        };
        Ok(())
    })
}

/// Spearman's rho with average ranks for ties.
///
/// # Safety
/// Both arrays must hold `len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn xum_spearman(x: *const f64, y: *const f64, len: usize, out: *mut f64) -> XumStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = spearman_rho(slice(x, len, "x")?, slice(y, len, "y")?)?;
        Ok(())
    })
}

/// Kendall's tau-b.
///
/// # Safety
/// Both arrays must hold `len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn xum_kendall(x: *const f64, y: *const f64, len: usize, out: *mut f64) -> XumStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = kendall_tau(slice(x, len, "x")?, slice(y, len, "y")?)?;
        Ok(())
    })
}

/// Writes `[fNN]` for `index` into `buf` (NUL-terminated). `written` receives
/// the length without the NUL; on `BUFFER_TOO_SMALL` it holds the needed length.
///
/// # Safety
/// `buf` must hold `capacity` bytes; `written` must be valid.
#[no_mangle]
pub unsafe extern "C" fn xum_encode_token(
    index: usize,
    width: usize,
    buf: *mut c_char,
    capacity: usize,
    written: *mut usize,
) -> XumStatus {
    guard(|| {
        let written = out_ref(written, "written")?;
        let token = encode_temporal_token(index, width)?;
        *written = token.len();
        copy_c_string(&token, buf, capacity)
    })
}

unsafe fn copy_c_string(s: &str, buf: *mut c_char, capacity: usize) -> Result<(), Failure> {
    if capacity < s.len() + 1 {
        return Err(fail(
            XumStatus::BufferTooSmall,
            format!("need {} bytes, have {capacity}", s.len() + 1),
        ));
    }
    let buf = out_ref(buf, "buf")?;
    std::ptr::copy_nonoverlapping(s.as_ptr().cast::<c_char>(), buf, s.len());
    *(buf as *mut c_char).add(s.len()) = 0;
    Ok(())
}

/// Decodes a `[fNN]` token of the given width.
///
/// # Safety
/// `text` must be NUL-terminated; `index` must be valid.
#[no_mangle]
pub unsafe extern "C" fn xum_decode_token(text: *const c_char, width: usize, index: *mut usize) -> XumStatus {
    guard(|| {
        let index = out_ref(index, "index")?;
        *index = decode_temporal_token(string(text, "text")?, width)?;
        Ok(())
    })
}

/// Parses a generated summary.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn xum_summary_parse(
    text: *const c_char,
    task: XumTask,
    width: usize,
    out: *mut *mut XumSummary,
) -> XumStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let task = match task {
            XumTask::Video => TaskKind::Video,
            XumTask::Text => TaskKind::Text,
            XumTask::Both => TaskKind::Both,
        };
        let parsed = parse_summary(string(text, "text")?, task, width)?;
        let text = CString::new(parsed.clean_text.clone())
            .map_err(|_| fail(XumStatus::InvalidUtf8, "summary text contains NUL"))?;
        *out = Box::into_raw(Box::new(XumSummary { parsed, text }));
        Ok(())
    })
}

/// # Safety
/// `summary` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn xum_summary_free(summary: *mut XumSummary) {
    if !summary.is_null() {
        drop(Box::from_raw(summary));
    }
}

/// Number of distinct frame indices; 0 for a null handle.
///
/// # Safety
/// `summary` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn xum_summary_frame_count(summary: *const XumSummary) -> usize {
    summary.as_ref().map_or(0, |s| s.parsed.frame_indices.len())
}

/// Pointer to the frame indices, valid for the handle's lifetime.
///
/// # Safety
/// `summary` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn xum_summary_frames(summary: *const XumSummary) -> *const usize {
    summary.as_ref().map_or(std::ptr::null(), |s| s.parsed.frame_indices.as_ptr())
}

/// Token-free text, valid for the handle's lifetime.
///
/// # Safety
/// `summary` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn xum_summary_text(summary: *const XumSummary) -> *const c_char {
    summary.as_ref().map_or(std::ptr::null(), |s| s.text.as_ptr())
}

/// Count of `[f...]` candidates that did not decode.
///
/// # Safety
/// `summary` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn xum_summary_malformed_tokens(summary: *const XumSummary) -> usize {
    summary.as_ref().map_or(0, |s| s.parsed.malformed_tokens)
}

/// Greedy redundancy filter over a row-major `count x count` similarity
/// matrix. `kept` must have room for `count` indices.
///
/// # Safety
/// `similarities` must hold `count * count` doubles, `kept` `count` slots.
#[no_mangle]
pub unsafe extern "C" fn xum_redundancy_filter(
    similarities: *const f64,
    count: usize,
    threshold: f64,
    kept: *mut usize,
    kept_len: *mut usize,
) -> XumStatus {
    guard(|| {
        let kept_len = out_ref(kept_len, "kept_len")?;
        let total = count
            .checked_mul(count)
            .ok_or_else(|| fail(XumStatus::Argument, "count * count overflows"))?;
        let values = slice(similarities, total, "similarities")?;
        let matrix = SimilarityMatrix::from_fn(count, |i, j| values[i * count + j])?;
        let result = redundancy_filter(&matrix, threshold)?;
        if !result.is_empty() {
            out_ref(kept, "kept")?;
            std::ptr::copy_nonoverlapping(result.as_ptr(), kept, result.len());
        }
        *kept_len = result.len();
        Ok(())
    })
}

/// Per-frame importance scores from a JSON-lines logit file. `scores` must
/// have room for `timeline_len` doubles.
///
/// # Safety
/// `path` must be NUL-terminated; `scores` must hold `timeline_len` doubles;
/// `mean_score` must be valid.
#[no_mangle]
pub unsafe extern "C" fn xum_importance_from_file(
    path: *const c_char,
    timeline_len: usize,
    scores: *mut f64,
    mean_score: *mut f64,
) -> XumStatus {
    guard(|| {
        let mean_score = out_ref(mean_score, "mean_score")?;
        let records = read_logit_records(Path::new(string(path, "path")?))?;
        let iv = importance_vector(&records, timeline_len)?;
        if !iv.scores.is_empty() {
            out_ref(scores, "scores")?;
            std::ptr::copy_nonoverlapping(iv.scores.as_ptr(), scores, iv.scores.len());
        }
        *mean_score = iv.mean_score;
        Ok(())
    })
}
