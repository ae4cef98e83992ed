//! C ABI over `sbpt-core`.
//!
//! Objects are opaque heap handles released with the matching `*_free`
//! function. Every entry point returns an [`SbptStatus`]; on failure the
//! message is available from [`sbpt_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sbpt_core::driver::Problem;
use sbpt_core::integrals::{freeze_core, IntegralSet};
use sbpt_core::qubitmap::resource_report;
use sbpt_core::sbpt::{Method, SbptOptions};
use sbpt_core::symmetry::GroupingFile;
use sbpt_core::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbptStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidString = 2,
    Parse = 3,
    Range = 4,
    Io = 5,
    Usage = 6,
    Convergence = 7,
    Capacity = 8,
    EmptySector = 9,
    PartitionIntegrity = 10,
    Intruder = 11,
    SymmetryViolation = 12,
    Internal = 13,
    Panic = 14,
}

pub const SBPT_METHOD_UC: u32 = 1;
pub const SBPT_METHOD_SC: u32 = 2;
pub const SBPT_METHOD_EN: u32 = 4;

/// Energies in hartree; corrections that were not requested are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SbptEnergies {
    pub e0: f64,
    pub e1: f64,
    pub e2_uc: f64,
    pub e2_sc: f64,
    pub e2_en: f64,
    pub n_det_ref: usize,
    pub n_irreps: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SbptResources {
    pub n_orbitals: usize,
    pub n_qubits: usize,
    pub n_det: usize,
}

/// Opaque integral set.
pub struct SbptIntegrals(IntegralSet);

/// Opaque grouping description.
pub struct SbptGrouping(GroupingFile);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SbptStatus {
    match e {
        Error::Parse { .. } | Error::Json(_) => SbptStatus::Parse,
        Error::Range(_) => SbptStatus::Range,
        Error::Conflict { .. } => SbptStatus::Parse,
        Error::Io(_) => SbptStatus::Io,
        Error::Usage(_) => SbptStatus::Usage,
        Error::Convergence { .. } => SbptStatus::Convergence,
        Error::Capacity { .. } => SbptStatus::Capacity,
        Error::EmptySector => SbptStatus::EmptySector,
        Error::PartitionIntegrity(_) => SbptStatus::PartitionIntegrity,
        Error::Intruder { .. } => SbptStatus::Intruder,
        Error::SymmetryViolation(_) => SbptStatus::SymmetryViolation,
        Error::Plan(_) => SbptStatus::Internal,
        Error::Point { source, .. } => status_of(source),
    }
}

fn guard(f: impl FnOnce() -> Result<(), (SbptStatus, String)>) -> SbptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SbptStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside sbpt".into());
            SbptStatus::Panic
        }
    }
}

fn core_err(e: Error) -> (SbptStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SbptStatus, String) {
    (SbptStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_path<'a>(p: *const c_char) -> Result<&'a str, (SbptStatus, String)> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (SbptStatus::InvalidString, "path is not valid UTF-8".into()))
}

/// Message describing the last failure on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn sbpt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Reads an FCIDUMP file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sbpt_integrals_load(
    path: *const c_char,
    out: *mut *mut SbptIntegrals,
) -> SbptStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = read_path(path)?;
        let ints = IntegralSet::from_path(path).map_err(core_err)?;
        *out = Box::into_raw(Box::new(SbptIntegrals(ints)));
        Ok(())
    })
}

/// Folds the listed spatial orbitals (0-based) into the core; writes a new handle.
///
/// # Safety
/// `ints` must come from this library, `core` must point to `n_core` values (or be null when zero).
#[no_mangle]
pub unsafe extern "C" fn sbpt_integrals_freeze_core(
    ints: *const SbptIntegrals,
    core: *const usize,
    n_core: usize,
    out: *mut *mut SbptIntegrals,
) -> SbptStatus {
    guard(|| {
        let ints = ints.as_ref().ok_or_else(|| null("integrals"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let core: &[usize] = if n_core == 0 {
            &[]
        } else if core.is_null() {
            return Err(null("core"));
        } else {
            std::slice::from_raw_parts(core, n_core)
        };
        let frozen = freeze_core(&ints.0, core).map_err(core_err)?;
        *out = Box::into_raw(Box::new(SbptIntegrals(frozen)));
        Ok(())
    })
}

/// Spatial orbital count, or 0 for a null handle.
///
/// # Safety
/// `ints` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn sbpt_integrals_n_orbitals(ints: *const SbptIntegrals) -> usize {
    ints.as_ref().map_or(0, |i| i.0.n_spatial)
}

/// Electron count, or 0 for a null handle.
///
/// # Safety
/// `ints` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn sbpt_integrals_n_electrons(ints: *const SbptIntegrals) -> usize {
    ints.as_ref().map_or(0, |i| i.0.n_electrons)
}

/// # Safety
/// `ints` must be null or a handle from this library that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sbpt_integrals_free(ints: *mut SbptIntegrals) {
    if !ints.is_null() {
        drop(Box::from_raw(ints));
    }
}

/// Reads a grouping file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sbpt_grouping_load(
    path: *const c_char,
    out: *mut *mut SbptGrouping,
) -> SbptStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = read_path(path)?;
        let g = GroupingFile::from_path(path).map_err(core_err)?;
        *out = Box::into_raw(Box::new(SbptGrouping(g)));
        Ok(())
    })
}

/// # Safety
/// `g` must be null or a handle from this library that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sbpt_grouping_free(g: *mut SbptGrouping) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Reference energy plus the corrections selected by `methods` (`SBPT_METHOD_*` bits).
///
/// # Safety
/// Handles must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sbpt_run(
    ints: *const SbptIntegrals,
    grouping: *const SbptGrouping,
    methods: u32,
    regularize_intruders: bool,
    out: *mut SbptEnergies,
) -> SbptStatus {
    guard(|| {
        let ints = ints.as_ref().ok_or_else(|| null("integrals"))?;
        let grouping = grouping.as_ref().ok_or_else(|| null("grouping"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if methods & !(SBPT_METHOD_UC | SBPT_METHOD_SC | SBPT_METHOD_EN) != 0 {
            return Err((
                SbptStatus::Usage,
                format!("unknown method bits {methods:#x}"),
            ));
        }
        let mut list = Vec::new();
        for (bit, m) in [
            (SBPT_METHOD_UC, Method::Uc),
            (SBPT_METHOD_SC, Method::Sc),
            (SBPT_METHOD_EN, Method::En),
        ] {
            if methods & bit != 0 {
                list.push(m);
            }
        }
        let problem = Problem::new(ints.0.clone(), &grouping.0).map_err(core_err)?;
        let opts = SbptOptions {
            regularize_intruders,
            ..Default::default()
        };
        let (res, _, _) = problem.solve(&list, &opts).map_err(core_err)?;
        *out = SbptEnergies {
            e0: res.e0,
            e1: res.e1,
            e2_uc: res.e2(Method::Uc).unwrap_or(f64::NAN),
            e2_sc: res.e2(Method::Sc).unwrap_or(f64::NAN),
            e2_en: res.e2(Method::En).unwrap_or(f64::NAN),
            n_det_ref: res.n_det_ref,
            n_irreps: res.n_irreps,
        };
        Ok(())
    })
}

/// Active orbitals, tapered qubits and reference-sector size for one grouping.
///
/// # Safety
/// Handles must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sbpt_resources(
    ints: *const SbptIntegrals,
    grouping: *const SbptGrouping,
    out: *mut SbptResources,
) -> SbptStatus {
    guard(|| {
        let ints = ints.as_ref().ok_or_else(|| null("integrals"))?;
        let grouping = grouping.as_ref().ok_or_else(|| null("grouping"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let (na, nb) = ints.0.n_alpha_beta();
        let (model, target) = grouping
            .0
            .model_and_target(ints.0.n_spatial, na, nb)
            .map_err(core_err)?;
        let rows = resource_report(&[(String::new(), model, target)]).map_err(core_err)?;
        *out = SbptResources {
            n_orbitals: rows[0].n_orbitals,
            n_qubits: rows[0].n_qubits,
            n_det: rows[0].n_det,
        };
        Ok(())
    })
}
