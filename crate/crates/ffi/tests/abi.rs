use std::ffi::{CStr, CString};
use std::ptr;

use fracstab_ffi::*;

fn last_error() -> String {
    let p = fs_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn ml_values_and_errors() {
    let mut v = 0.0;
    assert_eq!(unsafe { fs_ml_one(0.5, -1.0, &mut v) }, FsStatus::Ok);
    assert!((v - 0.427_583_576_155_807).abs() < 1e-13);
    assert!(fs_last_error().is_null());

    assert_eq!(unsafe { fs_ml_two(1.0, 2.0, -2.0, &mut v) }, FsStatus::Ok);
    assert!((v - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-14);

    assert_eq!(unsafe { fs_ml_one(-1.0, 0.5, &mut v) }, FsStatus::Usage);
    assert!(last_error().contains("invalid argument"));

    assert_eq!(unsafe { fs_ml_one(0.5, 1.0, ptr::null_mut()) }, FsStatus::NullPointer);
    assert!(last_error().contains("out"));
}

#[test]
fn demo_run_round_trip() {
    let name = CString::new("lmi").unwrap();
    let mut scn = ptr::null_mut();
    assert_eq!(unsafe { fs_scenario_demo(name.as_ptr(), &mut scn) }, FsStatus::Ok);
    assert_eq!(unsafe { fs_scenario_set_q(scn, 0.5) }, FsStatus::Ok);
    assert_eq!(unsafe { fs_scenario_set_q(scn, 1.5) }, FsStatus::Usage);

    let mut rep = ptr::null_mut();
    assert_eq!(unsafe { fs_run(scn, &mut rep) }, FsStatus::Ok);
    assert_eq!(unsafe { fs_report_pass(rep) }, 1);

    let text = unsafe { fs_report_text(rep) };
    let s = unsafe { CStr::from_ptr(text) }.to_str().unwrap().to_owned();
    assert!(s.contains("result = PASS"));
    unsafe { fs_string_free(text) };

    let json = unsafe { fs_report_json(rep) };
    assert!(unsafe { CStr::from_ptr(json) }.to_str().unwrap().contains("\"pass\": true"));
    unsafe { fs_string_free(json) };

    let n = unsafe { fs_report_series_len(rep) };
    assert_eq!(n, 1001);
    let (mut t, mut val, mut bnd) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut written = 0;
    let st = unsafe { fs_report_series(rep, t.as_mut_ptr(), val.as_mut_ptr(), bnd.as_mut_ptr(), n, &mut written) };
    assert_eq!(st, FsStatus::Ok);
    assert_eq!(written, n);
    assert_eq!(t[0], 0.0);
    assert!((t[n - 1] - 10.0).abs() < 1e-12);
    assert!(val.iter().zip(&bnd).all(|(v, b)| *v <= b * 1.02));

    unsafe {
        fs_report_free(rep);
        fs_scenario_free(scn);
    }
}

#[test]
fn bad_toml_reports_line() {
    let text = CString::new("[scenario]\nname = \"x\"\nbogus = 1\n").unwrap();
    let mut scn = ptr::null_mut();
    assert_eq!(unsafe { fs_scenario_from_toml(text.as_ptr(), &mut scn) }, FsStatus::Usage);
    assert!(scn.is_null());
    let msg = last_error();
    assert!(msg.contains("<ffi>:"), "{msg}");
}

#[test]
fn unknown_demo_and_nulls() {
    let name = CString::new("nope").unwrap();
    let mut scn = ptr::null_mut();
    assert_eq!(unsafe { fs_scenario_demo(name.as_ptr(), &mut scn) }, FsStatus::Usage);
    assert_eq!(unsafe { fs_scenario_demo(ptr::null(), &mut scn) }, FsStatus::NullPointer);
    let mut rep = ptr::null_mut();
    assert_eq!(unsafe { fs_run(ptr::null(), &mut rep) }, FsStatus::NullPointer);
    assert_eq!(unsafe { fs_report_pass(ptr::null()) }, 0);
    unsafe {
        fs_scenario_free(ptr::null_mut());
        fs_report_free(ptr::null_mut());
        fs_string_free(ptr::null_mut());
    }
}

#[test]
fn last_error_is_per_thread() {
    let mut v = 0.0;
    assert_eq!(unsafe { fs_ml_one(-1.0, 0.5, &mut v) }, FsStatus::Usage);
    std::thread::spawn(|| assert!(fs_last_error().is_null())).join().unwrap();
    assert!(!fs_last_error().is_null());
}

#[test]
fn header_declares_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/fracstab.h")).unwrap();
    for sym in [
        "fs_ml_one",
        "fs_ml_two",
        "fs_last_error",
        "fs_scenario_demo",
        "fs_run",
        "fs_report_free",
        "typedef struct FsScenario FsScenario",
        "FS_STATUS_ENVELOPE_FAIL",
    ] {
        assert!(h.contains(sym), "header lacks {sym}");
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(fs_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
