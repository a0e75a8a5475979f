//! C ABI over the `chempat` library.
//!
//! Corpora and models are opaque heap handles released with their `_free`
//! function. Every call returns a [`ChempatStatus`]; on failure the message is
//! available from [`chempat_last_error`] on the same thread. Strings returned
//! to the caller are released with [`chempat_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use chempat::brat::{self, Corpus};
use chempat::crf::{self, CrfModel, TrainConfig};
use chempat::ensemble::{majority_vote, tally_votes, EnsembleConfig, PredictionSet, Quorum};
use chempat::eval::{evaluate, metrics_tsv, MatchMode};
use chempat::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChempatStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidArgument = 5,
    Numerical = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChempatMatchMode {
    Exact = 0,
    Relaxed = 1,
}

/// Micro-averaged counts and scores.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ChempatMetrics {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Opaque corpus handle.
pub struct ChempatCorpus(Corpus);

/// Opaque CRF model handle.
pub struct ChempatModel(CrfModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(ChempatStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.root_cause() {
            Error::Io { .. } => ChempatStatus::Io,
            Error::Parse { .. }
            | Error::Bounds { .. }
            | Error::SurfaceMismatch { .. }
            | Error::Unsupported { .. }
            | Error::InvalidType(_)
            | Error::MissingText { .. }
            | Error::ModelFormat { .. } => ChempatStatus::Parse,
            Error::Numerical(_) => ChempatStatus::Numerical,
            _ => ChempatStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ChempatStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            ChempatStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            ChempatStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(ChempatStatus::NullArgument, format!("{what} is NULL"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(ChempatStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    let c = CString::new(s).map_err(|_| Failure(ChempatStatus::InvalidArgument, "output contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

/// Library version as a static NUL-terminated string. Do not free.
#[no_mangle]
pub extern "C" fn chempat_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy of the last error message on this thread, or NULL after a
/// successful call. Free with `chempat_string_free`.
#[no_mangle]
pub extern "C" fn chempat_last_error() -> *mut c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn chempat_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a BRAT directory of paired `.txt`/`.ann` files.
///
/// # Safety
/// `dir` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chempat_corpus_load(dir: *const c_char, out: *mut *mut ChempatCorpus) -> ChempatStatus {
    guard(|| {
        let dir = str_arg(dir, "dir")?;
        put(out, ChempatCorpus(brat::load_corpus(Path::new(dir))?), "out")
    })
}

/// Loads `.ann` files from `dir`, reading texts from `reference`.
///
/// # Safety
/// Pointers must be valid; `reference` must be a live corpus handle.
#[no_mangle]
pub unsafe extern "C" fn chempat_corpus_load_predictions(
    dir: *const c_char,
    reference: *const ChempatCorpus,
    out: *mut *mut ChempatCorpus,
) -> ChempatStatus {
    guard(|| {
        let dir = str_arg(dir, "dir")?;
        let reference = ref_arg(reference, "reference")?;
        put(out, ChempatCorpus(brat::load_predictions(Path::new(dir), &reference.0)?), "out")
    })
}

/// Writes `.ann` files (and `.txt` files when `with_text` is true).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn chempat_corpus_write(
    corpus: *const ChempatCorpus,
    dir: *const c_char,
    with_text: bool,
) -> ChempatStatus {
    guard(|| {
        let corpus = ref_arg(corpus, "corpus")?;
        let dir = str_arg(dir, "dir")?;
        Ok(brat::write_corpus(&corpus.0, Path::new(dir), with_text)?)
    })
}

/// # Safety
/// `corpus` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn chempat_corpus_free(corpus: *mut ChempatCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Number of documents; 0 for NULL.
///
/// # Safety
/// `corpus` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn chempat_corpus_len(corpus: *const ChempatCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.0.len())
}

/// Number of entities over all documents; 0 for NULL.
///
/// # Safety
/// `corpus` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn chempat_corpus_entity_count(corpus: *const ChempatCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.0.entity_count())
}

/// Parses `ann` against `text` and writes its canonical serialization.
///
/// # Safety
/// Strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chempat_ann_canonicalize(
    ann: *const c_char,
    text: *const c_char,
    out: *mut *mut c_char,
) -> ChempatStatus {
    guard(|| {
        let ann = str_arg(ann, "ann")?;
        let text = str_arg(text, "text")?;
        let parsed = brat::parse_ann(ann, text)?;
        put_string(out, brat::serialize_ann(&parsed))
    })
}

/// Overall micro-averaged metrics of `pred` against `gold`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chempat_evaluate(
    gold: *const ChempatCorpus,
    pred: *const ChempatCorpus,
    mode: ChempatMatchMode,
    out: *mut ChempatMetrics,
) -> ChempatStatus {
    guard(|| {
        let gold = ref_arg(gold, "gold")?;
        let pred = ref_arg(pred, "pred")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let mode = match mode {
            ChempatMatchMode::Exact => MatchMode::Exact,
            ChempatMatchMode::Relaxed => MatchMode::Relaxed,
        };
        let m = evaluate(&gold.0, &pred.0, mode).overall;
        *out = ChempatMetrics {
            tp: m.tp as u64,
            fp: m.fp as u64,
            fn_: m.fn_ as u64,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
        };
        Ok(())
    })
}

/// Per-type metrics TSV for both match modes.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chempat_evaluate_report(
    gold: *const ChempatCorpus,
    pred: *const ChempatCorpus,
    out: *mut *mut c_char,
) -> ChempatStatus {
    guard(|| {
        let gold = ref_arg(gold, "gold")?;
        let pred = ref_arg(pred, "pred")?;
        let scores: Vec<_> =
            [MatchMode::Exact, MatchMode::Relaxed].into_iter().map(|m| evaluate(&gold.0, &pred.0, m)).collect();
        put_string(out, metrics_tsv(&scores))
    })
}

/// Majority vote over `n` prediction corpora named by `names`. `min_votes`
/// of 0 selects strict majority; otherwise at least `min_votes` members must
/// agree.
///
/// # Safety
/// `sets` and `names` must each point to `n` valid entries.
#[no_mangle]
pub unsafe extern "C" fn chempat_vote(
    sets: *const *const ChempatCorpus,
    names: *const *const c_char,
    n: usize,
    min_votes: usize,
    out: *mut *mut ChempatCorpus,
) -> ChempatStatus {
    guard(|| {
        if n == 0 {
            return Err(Failure(ChempatStatus::InvalidArgument, "no prediction sets".into()));
        }
        if sets.is_null() || names.is_null() {
            return Err(null("sets or names"));
        }
        let mut members = Vec::with_capacity(n);
        for i in 0..n {
            let corpus = ref_arg(*sets.add(i), "sets[i]")?;
            let name = str_arg(*names.add(i), "names[i]")?;
            members.push(PredictionSet::new(name, corpus.0.clone()));
        }
        let tally = tally_votes(&members)?;
        let quorum = if min_votes == 0 { Quorum::StrictMajority } else { Quorum::AtLeast(min_votes) };
        let config = EnsembleConfig::new(quorum, tally.models().to_vec())?;
        put(out, ChempatCorpus(majority_vote(&tally, &config)?), "out")
    })
}

/// Trains a CRF. Non-positive `max_iterations` or `tolerance` select the
/// defaults (200 and 1e-6).
///
/// # Safety
/// `corpus` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chempat_model_train(
    corpus: *const ChempatCorpus,
    l2: f64,
    max_iterations: i64,
    tolerance: f64,
    out: *mut *mut ChempatModel,
) -> ChempatStatus {
    guard(|| {
        let corpus = ref_arg(corpus, "corpus")?;
        let defaults = TrainConfig::default();
        let config = TrainConfig {
            l2,
            max_iterations: if max_iterations > 0 { max_iterations as usize } else { defaults.max_iterations },
            tolerance: if tolerance > 0.0 { tolerance } else { defaults.tolerance },
            ..defaults
        };
        let (model, _) = crf::train(&corpus.0, &config)?;
        put(out, ChempatModel(model), "out")
    })
}

/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chempat_model_load(path: *const c_char, out: *mut *mut ChempatModel) -> ChempatStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        put(out, ChempatModel(CrfModel::load(Path::new(path))?), "out")
    })
}

/// # Safety
/// `model` must be live; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn chempat_model_save(model: *const ChempatModel, path: *const c_char) -> ChempatStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        let path = str_arg(path, "path")?;
        Ok(model.0.save(Path::new(path))?)
    })
}

/// Tags every document text of `texts`, ignoring its existing entities.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chempat_model_tag(
    model: *const ChempatModel,
    texts: *const ChempatCorpus,
    out: *mut *mut ChempatCorpus,
) -> ChempatStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        let texts = ref_arg(texts, "texts")?;
        let tagged = texts
            .0
            .documents()
            .map(|d| d.with_entities(crf::tag_document(&model.0, &d.text)))
            .collect::<chempat::Result<Corpus>>()?;
        put(out, ChempatCorpus(tagged), "out")
    })
}

/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn chempat_model_free(model: *mut ChempatModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
