//! C interface to `quadmini`.
//!
//! Every entry point returns a [`QmStatus`]; on failure a message is kept
//! per thread and can be read with [`qm_last_error`]. Convergence studies
//! are returned behind the opaque [`QmStudy`] handle, released with
//! [`qm_study_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use quadmini::mesh::{DofMap, Mesh};
use quadmini::refelem::BubbleKind;
use quadmini::stability::{build_macro_matrix, check_m1, estimate_infsup, MACRO_COLS, MACRO_ROWS, MAX_INFSUP_LEVEL};
use quadmini::verify::{run_convergence_study, ErrorReport, ExampleId, VerifyError};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Singular = 3,
    OutOfRange = 4,
    Internal = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QmBubble {
    Standard = 0,
    Corner = 1,
    Linear = 2,
    QuadSym = 3,
}

impl From<QmBubble> for BubbleKind {
    fn from(b: QmBubble) -> Self {
        match b {
            QmBubble::Standard => BubbleKind::Standard,
            QmBubble::Corner => BubbleKind::Corner,
            QmBubble::Linear => BubbleKind::Linear,
            QmBubble::QuadSym => BubbleKind::QuadSym,
        }
    }
}

/// Errors of one refinement level; rates are NaN on the first level.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QmLevelErrors {
    pub level: u32,
    pub elements: u32,
    pub h1_u: f64,
    pub h1_rate: f64,
    pub l2_u: f64,
    pub l2_rate: f64,
    pub l2_p: f64,
    pub p_rate: f64,
}

/// Opaque convergence-study result.
pub struct QmStudy {
    report: ErrorReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn guard(f: impl FnOnce() -> QmStatus) -> QmStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            QmStatus::Internal
        }
    }
}

fn bubble_from(raw: i32) -> Option<QmBubble> {
    match raw {
        0 => Some(QmBubble::Standard),
        1 => Some(QmBubble::Corner),
        2 => Some(QmBubble::Linear),
        3 => Some(QmBubble::QuadSym),
        _ => None,
    }
}

macro_rules! bubble_or_return {
    ($raw:expr) => {
        match bubble_from($raw) {
            Some(b) => BubbleKind::from(b),
            None => {
                set_error(format!("unknown bubble code {}", $raw));
                return QmStatus::InvalidArgument;
            }
        }
    };
}

/// Message for the last failing call on this thread (empty after
/// success). The pointer is valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn qm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Exact rank of the 9x10 macro-element matrix for `bubble` (a
/// [`QmBubble`] value).
///
/// # Safety
/// `rank` must be null or point to writable memory for one `uint32_t`.
#[no_mangle]
pub unsafe extern "C" fn qm_macro_rank(bubble: i32, rank: *mut u32) -> QmStatus {
    guard(|| {
        if rank.is_null() {
            set_error("rank is null");
            return QmStatus::NullPointer;
        }
        let kind = bubble_or_return!(bubble);
        match check_m1(kind) {
            Ok(r) => {
                *rank = r.rank as u32;
                QmStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                QmStatus::Internal
            }
        }
    })
}

/// Writes the macro matrix row-major as 90 numerator/denominator pairs.
///
/// # Safety
/// `numerators` and `denominators` must each point to 90 writable
/// `int64_t`.
#[no_mangle]
pub unsafe extern "C" fn qm_macro_matrix(bubble: i32, numerators: *mut i64, denominators: *mut i64) -> QmStatus {
    guard(|| {
        if numerators.is_null() || denominators.is_null() {
            set_error("output buffer is null");
            return QmStatus::NullPointer;
        }
        let kind = bubble_or_return!(bubble);
        let fractions = match build_macro_matrix(kind).map(|d| d.to_i64_fractions()) {
            Ok(Some(f)) => f,
            Ok(None) => {
                set_error("entry does not fit in 64 bits");
                return QmStatus::OutOfRange;
            }
            Err(e) => {
                set_error(e.to_string());
                return QmStatus::Internal;
            }
        };
        debug_assert_eq!(fractions.len(), MACRO_ROWS * MACRO_COLS);
        for (i, (n, d)) in fractions.into_iter().enumerate() {
            *numerators.add(i) = n;
            *denominators.add(i) = d;
        }
        QmStatus::Ok
    })
}

/// Discrete inf-sup constant on refinement `level` (1..=4).
///
/// # Safety
/// `beta` must point to a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn qm_infsup(bubble: i32, level: u32, shear: f64, beta: *mut f64) -> QmStatus {
    guard(|| {
        if beta.is_null() {
            set_error("beta is null");
            return QmStatus::NullPointer;
        }
        let kind = bubble_or_return!(bubble);
        let level = level as usize;
        if !(1..=MAX_INFSUP_LEVEL).contains(&level) {
            set_error(format!("level must be in 1..={MAX_INFSUP_LEVEL}"));
            return QmStatus::OutOfRange;
        }
        let mesh = match Mesh::for_level(level, shear) {
            Ok(m) => m,
            Err(e) => {
                set_error(e.to_string());
                return QmStatus::InvalidArgument;
            }
        };
        let dofs = DofMap::new(&mesh);
        match estimate_infsup(&mesh, &dofs, kind) {
            Ok(b) => {
                *beta = b;
                QmStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                QmStatus::Internal
            }
        }
    })
}

/// Runs a convergence study (`example` 1 or 2, levels `1..=max_level`).
/// On success `*out` receives a handle to release with [`qm_study_free`].
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn qm_study_run(
    example: i32,
    bubble: i32,
    max_level: u32,
    shear: f64,
    out: *mut *mut QmStudy,
) -> QmStatus {
    guard(|| {
        if out.is_null() {
            set_error("out is null");
            return QmStatus::NullPointer;
        }
        *out = ptr::null_mut();
        let kind = bubble_or_return!(bubble);
        let example = match example {
            1 => ExampleId::Example1,
            2 => ExampleId::Example2,
            other => {
                set_error(format!("unknown example {other}"));
                return QmStatus::InvalidArgument;
            }
        };
        if !(0.0..0.5).contains(&shear) {
            set_error("shear must lie in [0, 0.5)");
            return QmStatus::InvalidArgument;
        }
        match run_convergence_study(example, kind, max_level as usize, shear) {
            Ok(report) => {
                *out = Box::into_raw(Box::new(QmStudy { report }));
                QmStatus::Ok
            }
            Err(e @ VerifyError::Singular { .. }) => {
                set_error(e.to_string());
                QmStatus::Singular
            }
            Err(e @ VerifyError::LevelOutOfRange(_)) => {
                set_error(e.to_string());
                QmStatus::OutOfRange
            }
            Err(e) => {
                set_error(e.to_string());
                QmStatus::Internal
            }
        }
    })
}

/// Number of levels in a study (0 for a null handle).
///
/// # Safety
/// `study` must be null or a live handle from [`qm_study_run`].
#[no_mangle]
pub unsafe extern "C" fn qm_study_levels(study: *const QmStudy) -> usize {
    study.as_ref().map_or(0, |s| s.report.levels.len())
}

/// Copies row `index` (0-based) of a study.
///
/// # Safety
/// `study` must be a live handle and `row` must point to a writable
/// [`QmLevelErrors`].
#[no_mangle]
pub unsafe extern "C" fn qm_study_row(study: *const QmStudy, index: usize, row: *mut QmLevelErrors) -> QmStatus {
    guard(|| {
        let (Some(s), false) = (study.as_ref(), row.is_null()) else {
            set_error("null argument");
            return QmStatus::NullPointer;
        };
        let Some(l) = s.report.levels.get(index) else {
            set_error(format!("row {index} out of range"));
            return QmStatus::OutOfRange;
        };
        *row = QmLevelErrors {
            level: l.level as u32,
            elements: l.elements as u32,
            h1_u: l.norms.h1_u,
            h1_rate: l.h1_rate.unwrap_or(f64::NAN),
            l2_u: l.norms.l2_u,
            l2_rate: l.l2_rate.unwrap_or(f64::NAN),
            l2_p: l.norms.l2_p,
            p_rate: l.p_rate.unwrap_or(f64::NAN),
        };
        QmStatus::Ok
    })
}

/// Releases a study handle; null is ignored.
///
/// # Safety
/// `study` must be null or a handle from [`qm_study_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qm_study_free(study: *mut QmStudy) {
    if !study.is_null() {
        drop(Box::from_raw(study));
    }
}
