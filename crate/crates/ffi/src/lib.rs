//! C ABI over the dea-select engine.
//!
//! All functions are panic-safe, return [`DeaStatus`] codes, and hand out
//! opaque pointers created by this library. Every `*_free` function accepts
//! null. The most recent failure message per thread is retrievable with
//! [`dea_last_error_message`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use libc::c_char;

use dea_select::data::{normalize_outputs, parse_dataset_csv, Dataset};
use dea_select::dea::{all_efficiencies, ActiveSet};
use dea_select::select::{
    solve_selection, Mode, SelectError, SelectionConfig, SelectionSolution,
};

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeaStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    IoError = 3,
    DataError = 4,
    InvalidArgument = 5,
    Infeasible = 6,
    SolverError = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Opaque dataset handle.
pub struct DeaDataset {
    inner: Dataset,
}

/// Opaque selection-configuration handle.
pub struct DeaConfig {
    inner: SelectionConfig,
}

/// Opaque solution handle.
pub struct DeaSolution {
    inner: SelectionSolution,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn classify(e: &SelectError) -> DeaStatus {
    match e {
        SelectError::StructurallyInfeasible(_) | SelectError::NormalizationInfeasible { .. } => {
            DeaStatus::Infeasible
        }
        SelectError::BadWeights(_)
        | SelectError::BadPercentile(_)
        | SelectError::InvalidConfig(_)
        | SelectError::Data(_) => DeaStatus::InvalidArgument,
        _ => DeaStatus::SolverError,
    }
}

/// Most recent error message on this thread; empty string when none.
/// The pointer stays valid until the next failing call on the thread.
#[no_mangle]
pub extern "C" fn dea_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dea_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, DeaStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(DeaStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        DeaStatus::InvalidUtf8
    })
}

fn guard<F: FnOnce() -> DeaStatus>(f: F) -> DeaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            DeaStatus::Panic
        }
    }
}

/// Parse a dataset from CSV text (header: id, in:..., out:...).
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
/// On `Ok` the caller owns the handle and must free it with
/// [`dea_dataset_free`].
#[no_mangle]
pub unsafe extern "C" fn dea_dataset_parse_csv(
    text: *const c_char,
    out: *mut *mut DeaDataset,
) -> DeaStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return DeaStatus::NullArgument;
        }
        let text = match read_str(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_dataset_csv(text) {
            Ok(d) => {
                *out = Box::into_raw(Box::new(DeaDataset { inner: d }));
                DeaStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                DeaStatus::DataError
            }
        }
    })
}

/// Load a dataset from a CSV file on disk.
///
/// # Safety
/// As [`dea_dataset_parse_csv`]; `path` must name a readable file.
#[no_mangle]
pub unsafe extern "C" fn dea_dataset_load_csv(
    path: *const c_char,
    out: *mut *mut DeaDataset,
) -> DeaStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return DeaStatus::NullArgument;
        }
        let path = match read_str(path) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                set_error(&format!("cannot read {path}: {e}"));
                return DeaStatus::IoError;
            }
        };
        match parse_dataset_csv(&text) {
            Ok(d) => {
                *out = Box::into_raw(Box::new(DeaDataset { inner: d }));
                DeaStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                DeaStatus::DataError
            }
        }
    })
}

/// Range-normalize the outputs into a new dataset handle.
///
/// # Safety
/// `ds` must be a live handle from this library; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dea_dataset_normalize_outputs(
    ds: *const DeaDataset,
    out: *mut *mut DeaDataset,
) -> DeaStatus {
    guard(|| {
        if ds.is_null() || out.is_null() {
            set_error("null argument");
            return DeaStatus::NullArgument;
        }
        let normalized = normalize_outputs(&(*ds).inner);
        *out = Box::into_raw(Box::new(DeaDataset { inner: normalized }));
        DeaStatus::Ok
    })
}

/// Fetch the dataset shape. Null count pointers are skipped.
///
/// # Safety
/// `ds` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn dea_dataset_counts(
    ds: *const DeaDataset,
    dmus: *mut usize,
    inputs: *mut usize,
    outputs: *mut usize,
) -> DeaStatus {
    guard(|| {
        if ds.is_null() {
            set_error("null dataset");
            return DeaStatus::NullArgument;
        }
        let d = &(*ds).inner;
        if !dmus.is_null() {
            *dmus = d.num_dmus();
        }
        if !inputs.is_null() {
            *inputs = d.num_inputs();
        }
        if !outputs.is_null() {
            *outputs = d.num_outputs();
        }
        DeaStatus::Ok
    })
}

/// # Safety
/// `ds` must be a handle from this library, not yet freed, or null.
#[no_mangle]
pub unsafe extern "C" fn dea_dataset_free(ds: *mut DeaDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Parse a selection configuration from its key=value text form.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dea_config_parse(
    text: *const c_char,
    out: *mut *mut DeaConfig,
) -> DeaStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return DeaStatus::NullArgument;
        }
        let text = match read_str(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match SelectionConfig::parse(text) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(DeaConfig { inner: cfg }));
                DeaStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                DeaStatus::InvalidArgument
            }
        }
    })
}

/// # Safety
/// `cfg` must be a handle from this library, not yet freed, or null.
#[no_mangle]
pub unsafe extern "C" fn dea_config_free(cfg: *mut DeaConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Efficiency scores for all DMUs. `outputs` lists 1-based output indices
/// (`n_outputs` of them); pass `n_outputs = 0` to use every output.
/// `values` must hold one f64 per DMU.
///
/// # Safety
/// `ds` must be a live handle; `outputs` must point to `n_outputs` entries
/// when nonzero; `values` must have room for K doubles.
#[no_mangle]
pub unsafe extern "C" fn dea_efficiencies(
    ds: *const DeaDataset,
    outputs: *const u32,
    n_outputs: usize,
    values: *mut f64,
    values_len: usize,
) -> DeaStatus {
    guard(|| {
        if ds.is_null() || values.is_null() {
            set_error("null argument");
            return DeaStatus::NullArgument;
        }
        let d = &(*ds).inner;
        if values_len < d.num_dmus() {
            set_error("values buffer shorter than the DMU count");
            return DeaStatus::BufferTooSmall;
        }
        let active = if n_outputs == 0 {
            ActiveSet::full(d)
        } else {
            if outputs.is_null() {
                set_error("null outputs with nonzero n_outputs");
                return DeaStatus::NullArgument;
            }
            let list = std::slice::from_raw_parts(outputs, n_outputs);
            let mut zero_based = Vec::with_capacity(n_outputs);
            for &o in list {
                if o == 0 || o as usize > d.num_outputs() {
                    set_error(&format!("output index {o} out of range"));
                    return DeaStatus::InvalidArgument;
                }
                zero_based.push(o as usize - 1);
            }
            ActiveSet::with_outputs(d, zero_based)
        };
        match all_efficiencies(d, &active) {
            Ok(effs) => {
                std::ptr::copy_nonoverlapping(effs.as_ptr(), values, effs.len());
                DeaStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                DeaStatus::SolverError
            }
        }
    })
}

/// Solve the joint selection problem.
///
/// # Safety
/// `ds` and `cfg` must be live handles; `out` a valid pointer. On `Ok` the
/// caller owns the solution handle.
#[no_mangle]
pub unsafe extern "C" fn dea_solve_joint(
    ds: *const DeaDataset,
    cfg: *const DeaConfig,
    out: *mut *mut DeaSolution,
) -> DeaStatus {
    solve_mode(ds, cfg, Mode::Joint, out)
}

/// Solve the individual selection problem for a DMU (1-based index).
///
/// # Safety
/// As [`dea_solve_joint`].
#[no_mangle]
pub unsafe extern "C" fn dea_solve_individual(
    ds: *const DeaDataset,
    cfg: *const DeaConfig,
    dmu: u32,
    out: *mut *mut DeaSolution,
) -> DeaStatus {
    guard(|| {
        if ds.is_null() {
            set_error("null dataset");
            return DeaStatus::NullArgument;
        }
        if dmu == 0 || dmu as usize > (*ds).inner.num_dmus() {
            set_error(&format!("DMU index {dmu} out of range (1-based)"));
            return DeaStatus::InvalidArgument;
        }
        solve_mode_inner(ds, cfg, Mode::Individual(dmu as usize - 1), out)
    })
}

unsafe fn solve_mode(
    ds: *const DeaDataset,
    cfg: *const DeaConfig,
    mode: Mode,
    out: *mut *mut DeaSolution,
) -> DeaStatus {
    guard(|| solve_mode_inner(ds, cfg, mode, out))
}

unsafe fn solve_mode_inner(
    ds: *const DeaDataset,
    cfg: *const DeaConfig,
    mode: Mode,
    out: *mut *mut DeaSolution,
) -> DeaStatus {
    if ds.is_null() || cfg.is_null() || out.is_null() {
        set_error("null argument");
        return DeaStatus::NullArgument;
    }
    match solve_selection(&(*ds).inner, &(*cfg).inner, mode) {
        Ok(sol) => {
            *out = Box::into_raw(Box::new(DeaSolution { inner: sol }));
            DeaStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            classify(&e)
        }
    }
}

/// Objective value of a solution (NaN for a null handle).
///
/// # Safety
/// `sol` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn dea_solution_objective(sol: *const DeaSolution) -> f64 {
    if sol.is_null() {
        return f64::NAN;
    }
    (*sol).inner.objective_value
}

/// Relative optimality gap reported by the solver.
///
/// # Safety
/// `sol` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn dea_solution_gap(sol: *const DeaSolution) -> f64 {
    if sol.is_null() {
        return f64::NAN;
    }
    (*sol).inner.outcome.gap
}

/// Number of selected outputs.
///
/// # Safety
/// `sol` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn dea_solution_num_selected(sol: *const DeaSolution) -> usize {
    if sol.is_null() {
        return 0;
    }
    (*sol).inner.selected_outputs.len()
}

/// Copy the selected outputs as 1-based indices.
///
/// # Safety
/// `sol` must be a live handle; `buf` must have room for `buf_len` entries.
#[no_mangle]
pub unsafe extern "C" fn dea_solution_selected_outputs(
    sol: *const DeaSolution,
    buf: *mut u32,
    buf_len: usize,
) -> DeaStatus {
    guard(|| {
        if sol.is_null() || buf.is_null() {
            set_error("null argument");
            return DeaStatus::NullArgument;
        }
        let sel = &(*sol).inner.selected_outputs;
        if buf_len < sel.len() {
            set_error("selection buffer too small");
            return DeaStatus::BufferTooSmall;
        }
        for (i, &o) in sel.iter().enumerate() {
            *buf.add(i) = o as u32 + 1;
        }
        DeaStatus::Ok
    })
}

/// Copy the per-DMU efficiencies under the realized selection.
///
/// # Safety
/// `sol` must be a live handle; `buf` must have room for `buf_len` entries.
#[no_mangle]
pub unsafe extern "C" fn dea_solution_efficiencies(
    sol: *const DeaSolution,
    buf: *mut f64,
    buf_len: usize,
) -> DeaStatus {
    guard(|| {
        if sol.is_null() || buf.is_null() {
            set_error("null argument");
            return DeaStatus::NullArgument;
        }
        let effs = &(*sol).inner.efficiencies;
        if buf_len < effs.len() {
            set_error("efficiency buffer too small");
            return DeaStatus::BufferTooSmall;
        }
        std::ptr::copy_nonoverlapping(effs.as_ptr(), buf, effs.len());
        DeaStatus::Ok
    })
}

/// # Safety
/// `sol` must be a handle from this library, not yet freed, or null.
#[no_mangle]
pub unsafe extern "C" fn dea_solution_free(sol: *mut DeaSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}
