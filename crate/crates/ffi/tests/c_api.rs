use std::ffi::CStr;
use std::ptr;

use quadmini_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(qm_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn macro_ranks() {
    let mut rank = 0u32;
    for (code, want) in [(0, 7), (1, 8), (2, 8), (3, 7)] {
        assert_eq!(unsafe { qm_macro_rank(code, &mut rank) }, QmStatus::Ok);
        assert_eq!(rank, want);
    }
    assert_eq!(unsafe { qm_macro_rank(9, &mut rank) }, QmStatus::InvalidArgument);
    assert!(last_error().contains("bubble"));
    assert_eq!(unsafe { qm_macro_rank(1, ptr::null_mut()) }, QmStatus::NullPointer);
}

#[test]
fn macro_entries() {
    let mut num = [0i64; 90];
    let mut den = [0i64; 90];
    assert_eq!(
        unsafe { qm_macro_matrix(1, num.as_mut_ptr(), den.as_mut_ptr()) },
        QmStatus::Ok
    );
    assert_eq!((num[0], den[0]), (4, 15));
    assert_eq!((num[8], den[8]), (1, 12));
    assert!(den.iter().all(|&d| d > 0));
}

#[test]
fn study_handle_lifecycle() {
    let mut study = ptr::null_mut();
    assert_eq!(unsafe { qm_study_run(1, 1, 2, 0.0, &mut study) }, QmStatus::Ok);
    assert_eq!(unsafe { qm_study_levels(study) }, 2);
    let mut row = QmLevelErrors {
        level: 0,
        elements: 0,
        h1_u: 0.0,
        h1_rate: 0.0,
        l2_u: 0.0,
        l2_rate: 0.0,
        l2_p: 0.0,
        p_rate: 0.0,
    };
    assert_eq!(unsafe { qm_study_row(study, 0, &mut row) }, QmStatus::Ok);
    assert_eq!((row.level, row.elements), (1, 16));
    assert!(row.h1_rate.is_nan() && row.h1_u > 0.0);
    assert_eq!(unsafe { qm_study_row(study, 1, &mut row) }, QmStatus::Ok);
    assert!(row.h1_rate > 0.9 && row.h1_rate < 1.2);
    assert_eq!(unsafe { qm_study_row(study, 2, &mut row) }, QmStatus::OutOfRange);
    unsafe { qm_study_free(study) };
    unsafe { qm_study_free(ptr::null_mut()) };
    assert_eq!(unsafe { qm_study_levels(ptr::null()) }, 0);
}

#[test]
fn singular_and_invalid_studies() {
    let mut study = ptr::null_mut();
    assert_eq!(unsafe { qm_study_run(1, 0, 1, 0.0, &mut study) }, QmStatus::Singular);
    assert!(study.is_null());
    assert!(last_error().contains("singular"));
    assert_eq!(
        unsafe { qm_study_run(3, 1, 1, 0.0, &mut study) },
        QmStatus::InvalidArgument
    );
    assert_eq!(unsafe { qm_study_run(1, 1, 9, 0.0, &mut study) }, QmStatus::OutOfRange);
    assert_eq!(
        unsafe { qm_study_run(1, 1, 1, 0.9, &mut study) },
        QmStatus::InvalidArgument
    );
}

#[test]
fn infsup_levels() {
    let mut beta = 0.0;
    assert_eq!(unsafe { qm_infsup(1, 1, 0.0, &mut beta) }, QmStatus::Ok);
    assert!(beta > 0.05);
    assert_eq!(unsafe { qm_infsup(1, 5, 0.0, &mut beta) }, QmStatus::OutOfRange);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { qm_infsup(1, 1, 0.0, &mut beta) }, QmStatus::Ok);
    assert!(last_error().is_empty());
}

#[test]
fn header_is_generated() {
    let header = include_str!("../include/quadmini.h");
    for name in [
        "qm_macro_rank",
        "qm_study_run",
        "qm_study_free",
        "qm_last_error",
        "QM_STATUS_SINGULAR",
        "QmStudy",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
