//! C ABI over the SMER core.
//!
//! Handles are opaque pointers created by `*_load`/`smer_explain` and
//! released with the matching `*_free`. Every fallible function returns a
//! [`SmerStatus`]; on failure, `smer_last_error_message` describes the error
//! for the calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use smer_core::corpus::{tokenize, Document, PipelineConfig};
use smer_core::embedding::EmbeddingModel;
use smer_core::models::{logistic, LinearClassifier};
use smer_core::smer::{explain_document, score_word, Explanation};
use smer_core::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmerStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidInput = 5,
    OutOfVocabulary = 6,
    EmptyDocument = 7,
    Undefined = 8,
    Numeric = 9,
    Fidelity = 10,
    Panic = 11,
}

impl From<&Error> for SmerStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Io { .. } => SmerStatus::Io,
            Error::Parse { .. } => SmerStatus::Parse,
            Error::InvalidInput(_) | Error::Usage(_) => SmerStatus::InvalidInput,
            Error::OutOfVocabulary(_) => SmerStatus::OutOfVocabulary,
            Error::EmptyDocument { .. } => SmerStatus::EmptyDocument,
            Error::Undefined(_) => SmerStatus::Undefined,
            Error::Numeric(_) => SmerStatus::Numeric,
            Error::Fidelity { .. } => SmerStatus::Fidelity,
        }
    }
}

/// An embedding classifier together with its word vectors.
pub struct SmerModel {
    classifier: LinearClassifier,
    embeddings: EmbeddingModel,
}

/// Per-token scores of one text.
pub struct SmerExplanation {
    inner: Explanation,
    words: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let msg = CString::new(message.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: SmerStatus, message: impl Into<String>) -> SmerStatus {
    set_error(message);
    status
}

fn from_error(e: Error) -> SmerStatus {
    fail(SmerStatus::from(&e), e.to_string())
}

/// Runs `f`, converting panics into `SmerStatus::Panic`.
fn guarded(f: impl FnOnce() -> SmerStatus) -> SmerStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(SmerStatus::Panic, "internal panic"),
    }
}

/// # Safety
/// `p` is null or a NUL-terminated string valid for the call.
unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, SmerStatus> {
    if p.is_null() {
        return Err(fail(SmerStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SmerStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

/// Message for the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn smer_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn smer_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a classifier JSON and the word2vec text file it was trained on.
///
/// # Safety
/// Paths are NUL-terminated strings; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn smer_model_load(
    classifier_path: *const c_char,
    embeddings_path: *const c_char,
    out: *mut *mut SmerModel,
) -> SmerStatus {
    guarded(|| {
        if out.is_null() {
            return fail(SmerStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let (clf_path, emb_path) = match (
            str_arg(classifier_path, "classifier_path"),
            str_arg(embeddings_path, "embeddings_path"),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let classifier = match LinearClassifier::load(Path::new(clf_path)) {
            Ok(c) => c,
            Err(e) => return from_error(e),
        };
        let embeddings = match EmbeddingModel::load(Path::new(emb_path)) {
            Ok(m) => m,
            Err(e) => return from_error(e),
        };
        // scoring one word validates that the pair is an embedding model
        if let Some(w) = embeddings.words().first() {
            if let Err(e) = score_word(&classifier, &embeddings, w) {
                return from_error(e);
            }
        }
        *out = Box::into_raw(Box::new(SmerModel {
            classifier,
            embeddings,
        }));
        SmerStatus::Ok
    })
}

/// # Safety
/// `model` is null or a handle from `smer_model_load` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn smer_model_free(model: *mut SmerModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Embedding dimension, or 0 for a null handle.
///
/// # Safety
/// `model` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn smer_model_dim(model: *const SmerModel) -> usize {
    model.as_ref().map_or(0, |m| m.embeddings.dim())
}

/// Logit and SMER score of a single word.
///
/// # Safety
/// `model` is a live handle, `word` a NUL-terminated string, and the output
/// pointers are valid or null (null outputs are skipped).
#[no_mangle]
pub unsafe extern "C" fn smer_score_word(
    model: *const SmerModel,
    word: *const c_char,
    logit_out: *mut f64,
    score_out: *mut f64,
) -> SmerStatus {
    guarded(|| {
        let Some(m) = model.as_ref() else {
            return fail(SmerStatus::NullPointer, "model is null");
        };
        let word = match str_arg(word, "word") {
            Ok(w) => w,
            Err(s) => return s,
        };
        match score_word(&m.classifier, &m.embeddings, word) {
            Ok(ws) => {
                if !logit_out.is_null() {
                    *logit_out = ws.logit;
                }
                if !score_out.is_null() {
                    *score_out = ws.score();
                }
                SmerStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Tokenizes `text` with the default pipeline and explains it word by word.
/// Fails with `SMER_STATUS_FIDELITY` if the document logit and the mean word
/// logit disagree.
///
/// # Safety
/// `model` is a live handle, `text` a NUL-terminated string, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn smer_explain(
    model: *const SmerModel,
    text: *const c_char,
    out: *mut *mut SmerExplanation,
) -> SmerStatus {
    guarded(|| {
        if out.is_null() {
            return fail(SmerStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let Some(m) = model.as_ref() else {
            return fail(SmerStatus::NullPointer, "model is null");
        };
        let text = match str_arg(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let doc = Document {
            doi: "text".into(),
            tokens: tokenize(text, &PipelineConfig::default()),
            pub_year: 2000,
            citations: Default::default(),
        };
        match explain_document(&m.classifier, &m.embeddings, &doc) {
            Ok(inner) => {
                let words = inner
                    .tokens
                    .iter()
                    .map(|t| CString::new(t.word.as_str()).unwrap_or_default())
                    .collect();
                *out = Box::into_raw(Box::new(SmerExplanation { inner, words }));
                SmerStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `expl` is null or a handle from `smer_explain` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn smer_explanation_free(expl: *mut SmerExplanation) {
    if !expl.is_null() {
        drop(Box::from_raw(expl));
    }
}

/// Number of in-vocabulary tokens, or 0 for a null handle.
///
/// # Safety
/// `expl` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn smer_explanation_len(expl: *const SmerExplanation) -> usize {
    expl.as_ref().map_or(0, |e| e.inner.tokens.len())
}

/// Document probability, or NaN for a null handle.
///
/// # Safety
/// `expl` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn smer_explanation_doc_score(expl: *const SmerExplanation) -> f64 {
    expl.as_ref().map_or(f64::NAN, |e| logistic(e.inner.doc_logit))
}

/// Document logit, or NaN for a null handle.
///
/// # Safety
/// `expl` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn smer_explanation_doc_logit(expl: *const SmerExplanation) -> f64 {
    expl.as_ref().map_or(f64::NAN, |e| e.inner.doc_logit)
}

/// Token `index` of an explanation. `word_out` receives a pointer owned by
/// the explanation, valid until it is freed.
///
/// # Safety
/// `expl` is a live handle; output pointers are valid or null.
#[no_mangle]
pub unsafe extern "C" fn smer_explanation_token(
    expl: *const SmerExplanation,
    index: usize,
    word_out: *mut *const c_char,
    logit_out: *mut f64,
    score_out: *mut f64,
) -> SmerStatus {
    guarded(|| {
        let Some(e) = expl.as_ref() else {
            return fail(SmerStatus::NullPointer, "explanation is null");
        };
        let Some(t) = e.inner.tokens.get(index) else {
            return fail(
                SmerStatus::InvalidInput,
                format!("token index {index} out of range (len {})", e.inner.tokens.len()),
            );
        };
        if !word_out.is_null() {
            *word_out = e.words[index].as_ptr();
        }
        if !logit_out.is_null() {
            *logit_out = t.logit;
        }
        if !score_out.is_null() {
            *score_out = t.score;
        }
        SmerStatus::Ok
    })
}

/// ROC-AUC of `n` scores against 0/1 labels; ties count one half.
///
/// # Safety
/// `scores` and `labels` point to `n` readable elements; `out` is valid.
#[no_mangle]
pub unsafe extern "C" fn smer_auc(
    scores: *const f64,
    labels: *const u8,
    n: usize,
    out: *mut f64,
) -> SmerStatus {
    guarded(|| {
        if scores.is_null() || labels.is_null() || out.is_null() {
            return fail(SmerStatus::NullPointer, "null argument");
        }
        let s = std::slice::from_raw_parts(scores, n);
        let l = std::slice::from_raw_parts(labels, n);
        if l.iter().any(|&y| y > 1) {
            return fail(SmerStatus::InvalidInput, "labels must be 0 or 1");
        }
        match smer_core::eval::auc(s, l) {
            Ok(a) => {
                *out = a;
                SmerStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
