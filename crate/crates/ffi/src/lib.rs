// SPDX-License-Identifier: Apache-2.0

//! C ABI over `metapath-core`.
//!
//! Datasets and classification results are opaque handles created by this
//! library and released with the matching `*_free` function. Every fallible
//! call returns an [`MpStatus`]; on failure the message is available from
//! [`mp_last_error`] on the same thread. Configuration is passed as the same
//! flat JSON document the command-line tool reads (NULL means defaults).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use metapath_core::config::{from_value, RunConfig};
use metapath_core::datagen::generate_dataset;
use metapath_core::eval::run_experiment;
use metapath_core::hin::io::load_dataset;
use metapath_core::hin::{HinGraph, LabelAssignment};
use metapath_core::pipeline::{classify, Classification, PreparedGraph};
use metapath_core::propagate::LabelFlag;
use metapath_core::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// An argument is out of range or not valid UTF-8.
    InvalidArgument = 2,
    /// The configuration JSON is malformed or fails validation.
    Config = 3,
    /// A file could not be read or written.
    Io = 4,
    /// Input data is malformed or inconsistent.
    InvalidData = 5,
    /// An iterative solver hit its iteration cap.
    NotConverged = 6,
    /// A numerical failure: ill-conditioned system, NaN scores.
    Numerical = 7,
    /// The caller's buffer is shorter than required.
    BufferTooSmall = 8,
    /// Any other runtime failure.
    Failed = 9,
    /// A panic was caught at the boundary.
    Panic = 10,
}

/// A loaded or generated network with its labels.
pub struct MpDataset {
    graph: HinGraph,
    /// Labels carried by the node table.
    labels: LabelAssignment,
    /// Ground truth when available, else `labels`.
    truth: LabelAssignment,
    ids: Vec<CString>,
}

/// Output of [`mp_classify`].
pub struct MpResult {
    inner: Classification,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

type Failure = (MpStatus, String);

fn status_of(e: &Error) -> MpStatus {
    if e.is_config() {
        return MpStatus::Config;
    }
    match e.root() {
        Error::Io { .. } => MpStatus::Io,
        Error::Csv { .. }
        | Error::Json { .. }
        | Error::Parse { .. }
        | Error::UnknownType(_)
        | Error::UnknownNode(_)
        | Error::ConflictingNode { .. }
        | Error::InvalidWeight { .. }
        | Error::LabelOnNonTarget(_)
        | Error::LabelOutOfRange { .. }
        | Error::NoSuchRelation(..)
        | Error::Dimension(_)
        | Error::TooFewSeeds(_)
        | Error::EmptySplit { .. }
        | Error::EmptyEvalSet => MpStatus::InvalidData,
        Error::SvrNotConverged { .. } | Error::PropagationNotConverged { .. } => MpStatus::NotConverged,
        Error::IllConditioned { .. } | Error::NanScore(_) | Error::NegativeEntry { .. } | Error::NotSymmetric => {
            MpStatus::Numerical
        }
        _ => MpStatus::Failed,
    }
}

fn core_err(e: Error) -> Failure {
    (status_of(&e), e.to_string())
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MpStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MpStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(&format!("panic: {msg}"));
            MpStatus::Panic
        }
    }
}

fn non_null<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    // SAFETY: non-null pointers are required by every API contract to point
    // at a live object of the right type.
    unsafe { p.as_ref() }.ok_or_else(|| (MpStatus::NullArgument, format!("{name} is NULL")))
}

fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err((MpStatus::NullArgument, format!("{name} is NULL")));
    }
    // SAFETY: caller passes a NUL-terminated string.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| (MpStatus::InvalidArgument, format!("{name} is not valid UTF-8")))
}

fn config_arg(p: *const c_char) -> Result<RunConfig, Failure> {
    if p.is_null() {
        return Ok(RunConfig::default());
    }
    let text = str_arg(p, "config_json")?;
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| (MpStatus::Config, format!("invalid config JSON: {e}")))?;
    from_value(value).map_err(core_err)
}

fn out_slice<'a, T>(p: *mut T, len: usize, needed: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if p.is_null() {
        return Err((MpStatus::NullArgument, format!("{name} is NULL")));
    }
    if len < needed {
        return Err((MpStatus::BufferTooSmall, format!("{name} holds {len} values, {needed} required")));
    }
    // SAFETY: caller guarantees `p` points at `len` writable elements.
    Ok(unsafe { std::slice::from_raw_parts_mut(p, needed) })
}

fn into_handle(graph: HinGraph, labels: LabelAssignment, truth: Option<LabelAssignment>) -> *mut MpDataset {
    let ids = graph
        .node_ids(graph.target_type_id())
        .iter()
        .map(|id| CString::new(id.as_str()).unwrap_or_default())
        .collect();
    let truth = truth.unwrap_or_else(|| labels.clone());
    Box::into_raw(Box::new(MpDataset { graph, labels, truth, ids }))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mp_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version has no interior NUL"),
    };
    VERSION.as_ptr()
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn mp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Loads `nodes.csv`, `edges.csv`, `schema.json` (and `truth.csv` when
/// present) from directory `dir`.
///
/// # Safety
/// `dir` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_dataset_load(dir: *const c_char, out: *mut *mut MpDataset) -> MpStatus {
    guard(|| {
        let dir = str_arg(dir, "dir")?;
        if out.is_null() {
            return Err((MpStatus::NullArgument, "out is NULL".into()));
        }
        let ds = load_dataset(&PathBuf::from(dir)).map_err(core_err)?;
        // SAFETY: checked non-null above.
        unsafe { *out = into_handle(ds.graph, ds.labels, ds.truth) };
        Ok(())
    })
}

/// Generates a synthetic dataset from the generator keys of `config_json`
/// (NULL for defaults). Node labels are empty; ground truth is kept.
///
/// # Safety
/// `config_json` must be NULL or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_dataset_generate(config_json: *const c_char, out: *mut *mut MpDataset) -> MpStatus {
    guard(|| {
        let cfg = config_arg(config_json)?;
        if out.is_null() {
            return Err((MpStatus::NullArgument, "out is NULL".into()));
        }
        let (graph, truth) = generate_dataset(&cfg.generator()).and_then(|d| d.build()).map_err(core_err)?;
        let labels = LabelAssignment::unlabeled(truth.classes(), truth.len());
        // SAFETY: checked non-null above.
        unsafe { *out = into_handle(graph, labels, Some(truth)) };
        Ok(())
    })
}

/// Releases a dataset; NULL is ignored.
///
/// # Safety
/// `ds` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mp_dataset_free(ds: *mut MpDataset) {
    if !ds.is_null() {
        // SAFETY: pointer was produced by Box::into_raw in into_handle.
        drop(unsafe { Box::from_raw(ds) });
    }
}

/// Number of target-type nodes; 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset.
#[no_mangle]
pub unsafe extern "C" fn mp_dataset_target_count(ds: *const MpDataset) -> usize {
    // SAFETY: see function contract.
    unsafe { ds.as_ref() }.map_or(0, |d| d.graph.target_count())
}

/// Number of classes declared by the schema; 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset.
#[no_mangle]
pub unsafe extern "C" fn mp_dataset_classes(ds: *const MpDataset) -> u32 {
    // SAFETY: see function contract.
    unsafe { ds.as_ref() }.map_or(0, |d| d.graph.schema().classes)
}

/// Id of target node `index`, owned by the dataset; NULL when out of range.
///
/// # Safety
/// `ds` must be NULL or a live dataset.
#[no_mangle]
pub unsafe extern "C" fn mp_dataset_target_id(ds: *const MpDataset, index: usize) -> *const c_char {
    // SAFETY: see function contract.
    unsafe { ds.as_ref() }
        .and_then(|d| d.ids.get(index))
        .map_or(std::ptr::null(), |c| c.as_ptr())
}

/// Copies ground-truth classes (1-based, 0 = unknown) into `out[0..n)`.
///
/// # Safety
/// `ds` must be a live dataset and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn mp_dataset_truth(ds: *const MpDataset, out: *mut u32, len: usize) -> MpStatus {
    guard(|| {
        let d = non_null(ds, "ds")?;
        let dst = out_slice(out, len, d.truth.len(), "out")?;
        for (o, l) in dst.iter_mut().zip(d.truth.as_slice()) {
            *o = l.unwrap_or(0);
        }
        Ok(())
    })
}

/// Fits path weights on the given seeds, propagates their labels and
/// assigns a class to every target node. With `n_seeds == 0` the labels of
/// the node table are used.
///
/// # Safety
/// `ds` must be a live dataset; `seed_index` and `seed_class` must hold
/// `n_seeds` values each (may be NULL when `n_seeds == 0`); `config_json`
/// must be NULL or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_classify(
    ds: *const MpDataset,
    seed_index: *const usize,
    seed_class: *const u32,
    n_seeds: usize,
    config_json: *const c_char,
    out: *mut *mut MpResult,
) -> MpStatus {
    guard(|| {
        let d = non_null(ds, "ds")?;
        let cfg = config_arg(config_json)?;
        if out.is_null() {
            return Err((MpStatus::NullArgument, "out is NULL".into()));
        }
        let seeds = if n_seeds == 0 {
            d.labels.clone()
        } else {
            if seed_index.is_null() || seed_class.is_null() {
                return Err((MpStatus::NullArgument, "seed arrays are NULL".into()));
            }
            // SAFETY: caller guarantees both arrays hold n_seeds values.
            let (idx, cls) = unsafe {
                (std::slice::from_raw_parts(seed_index, n_seeds), std::slice::from_raw_parts(seed_class, n_seeds))
            };
            let n = d.graph.target_count();
            let mut labels = vec![None; n];
            for (&i, &c) in idx.iter().zip(cls) {
                if i >= n {
                    return Err((MpStatus::InvalidArgument, format!("seed index {i} out of range (n = {n})")));
                }
                labels[i] = Some(c);
            }
            LabelAssignment::new(d.graph.schema().classes, labels).map_err(|e| {
                (MpStatus::InvalidArgument, e.to_string())
            })?
        };
        let prepared = PreparedGraph::new(d.graph.clone(), &cfg.metapaths).map_err(core_err)?;
        let inner = classify(&prepared, &seeds, &cfg.weights(), &cfg.propagation(), cfg.spectral_iters, cfg.rng_seed)
            .map_err(core_err)?;
        // SAFETY: checked non-null above.
        unsafe { *out = Box::into_raw(Box::new(MpResult { inner })) };
        Ok(())
    })
}

/// Releases a result; NULL is ignored.
///
/// # Safety
/// `res` must come from [`mp_classify`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mp_result_free(res: *mut MpResult) {
    if !res.is_null() {
        // SAFETY: pointer was produced by Box::into_raw in mp_classify.
        drop(unsafe { Box::from_raw(res) });
    }
}

/// Writes the node count, class count and meta-path count of a result.
/// Any output pointer may be NULL.
///
/// # Safety
/// `res` must be a live result; non-NULL outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_result_dims(res: *const MpResult, n: *mut usize, classes: *mut usize, paths: *mut usize) -> MpStatus {
    guard(|| {
        let r = &non_null(res, "res")?.inner;
        let vals = [
            (n, r.scores.entries.rows()),
            (classes, r.scores.entries.cols()),
            (paths, r.beta.normalized.len()),
        ];
        for (p, v) in vals {
            // SAFETY: non-NULL outputs are writable per contract.
            if let Some(p) = unsafe { p.as_mut() } {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Copies assigned classes (1-based) into `out[0..n)`.
///
/// # Safety
/// `res` must be a live result and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn mp_result_labels(res: *const MpResult, out: *mut u32, len: usize) -> MpStatus {
    guard(|| {
        let r = &non_null(res, "res")?.inner;
        let dst = out_slice(out, len, r.assignments.len(), "out")?;
        for (o, a) in dst.iter_mut().zip(&r.assignments) {
            *o = a.class;
        }
        Ok(())
    })
}

/// Copies per-node flags into `out[0..n)`: 0 none, 1 tie, 2 unreachable.
///
/// # Safety
/// `res` must be a live result and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn mp_result_flags(res: *const MpResult, out: *mut u8, len: usize) -> MpStatus {
    guard(|| {
        let r = &non_null(res, "res")?.inner;
        let dst = out_slice(out, len, r.assignments.len(), "out")?;
        for (o, a) in dst.iter_mut().zip(&r.assignments) {
            *o = match a.flag {
                LabelFlag::None => 0,
                LabelFlag::Tie => 1,
                LabelFlag::Unreachable => 2,
            };
        }
        Ok(())
    })
}

/// Copies the n×p score matrix, row-major, into `out`.
///
/// # Safety
/// `res` must be a live result and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn mp_result_scores(res: *const MpResult, out: *mut f64, len: usize) -> MpStatus {
    guard(|| {
        let r = &non_null(res, "res")?.inner;
        let src = r.scores.entries.as_slice();
        out_slice(out, len, src.len(), "out")?.copy_from_slice(src);
        Ok(())
    })
}

/// Copies the normalized path weights, in meta-path order, into `out`.
///
/// # Safety
/// `res` must be a live result and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn mp_result_weights(res: *const MpResult, out: *mut f64, len: usize) -> MpStatus {
    guard(|| {
        let r = &non_null(res, "res")?.inner;
        let src = &r.beta.normalized;
        out_slice(out, len, src.len(), "out")?.copy_from_slice(src);
        Ok(())
    })
}

/// Power-iteration estimate of the fused operator's spectral radius; NaN
/// for NULL.
///
/// # Safety
/// `res` must be NULL or a live result.
#[no_mangle]
pub unsafe extern "C" fn mp_result_spectral_radius(res: *const MpResult) -> f64 {
    // SAFETY: see function contract.
    unsafe { res.as_ref() }.map_or(f64::NAN, |r| r.inner.spectral_radius)
}

/// Runs the seed-fraction experiment against the dataset's ground truth and
/// writes the report files into `out_dir`.
///
/// # Safety
/// `ds` must be a live dataset; strings must be NUL-terminated
/// (`config_json` may be NULL).
#[no_mangle]
pub unsafe extern "C" fn mp_evaluate(ds: *const MpDataset, config_json: *const c_char, out_dir: *const c_char) -> MpStatus {
    guard(|| {
        let d = non_null(ds, "ds")?;
        let cfg = config_arg(config_json)?;
        let dir = PathBuf::from(str_arg(out_dir, "out_dir")?);
        let prepared = PreparedGraph::new(d.graph.clone(), &cfg.metapaths).map_err(core_err)?;
        let report = run_experiment(&prepared, &d.truth, &cfg.experiment()).map_err(core_err)?;
        report.write(&dir).map_err(core_err)?;
        Ok(())
    })
}
