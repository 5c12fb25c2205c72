use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use finslerkit_ffi::*;

const RANDERS: &str = r#"{"metric": {"type": "named", "family": "randers", "b": 0.5}}"#;

fn build(json: &str) -> (i32, *mut FkMetric) {
    let text = CString::new(json).unwrap();
    let mut m = ptr::null_mut();
    let rc = unsafe { fk_metric_from_json(text.as_ptr(), &mut m) };
    (rc, m)
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(fk_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn randers_round_trip_through_handles() {
    let (rc, m) = build(RANDERS);
    assert_eq!(rc, FK_OK);
    assert_eq!(unsafe { fk_metric_dimension(m) }, 2);
    let (base, v) = ([0.0, 0.0], [1.0, 0.0]);
    let mut f = 0.0;
    assert_eq!(unsafe { fk_metric_eval(m, base.as_ptr(), v.as_ptr(), 2, &mut f) }, FK_OK);
    assert_eq!(f, 1.5);
    let mut g = [0.0; 4];
    assert_eq!(unsafe { fk_metric_tensor(m, base.as_ptr(), v.as_ptr(), 2, g.as_mut_ptr()) }, FK_OK);
    assert!((g[0] - 2.25).abs() < 1e-12 && (g[3] - 1.5).abs() < 1e-12);
    assert!((g[0] * g[3] - g[1] * g[2] - 3.375).abs() < 1e-12);
    let (mut class, mut lmin) = (-1, 0.0);
    let rc = unsafe { fk_metric_classify(m, base.as_ptr(), v.as_ptr(), 2, 1e-9, &mut class, &mut lmin) };
    assert_eq!(rc, FK_OK);
    assert_eq!(class, 0);
    assert!((lmin - 1.5).abs() < 1e-12);
    unsafe { fk_metric_free(m) };
}

#[test]
fn error_codes() {
    let (rc, m) = build(r#"{"metric": {"type": "named", "family": "matsumoto", "q": 0, "b": 0.5}}"#);
    assert_eq!(rc, FK_INVALID_CONFIG);
    assert!(m.is_null());
    assert!(last_error().contains("E_BAD_EXPONENT"), "{}", last_error());

    let (rc, _) = build("{ not json");
    assert_eq!(rc, FK_INVALID_CONFIG);
    assert!(last_error().starts_with("E_PARSE"));

    assert_eq!(unsafe { fk_metric_from_json(ptr::null(), ptr::null_mut()) }, FK_NULL_POINTER);

    let (rc, m) = build(r#"{"metric": {"type": "lorentz_example"}}"#);
    assert_eq!(rc, FK_OK);
    let (base, spacelike) = ([0.0, 0.0], [1.0, 0.0]);
    let mut f = 0.0;
    let rc = unsafe { fk_metric_eval(m, base.as_ptr(), spacelike.as_ptr(), 2, &mut f) };
    assert_eq!(rc, FK_OUTSIDE_DOMAIN);
    assert!(last_error().contains("E_OUTSIDE_DOMAIN"));
    let v3 = [0.0, 1.0, 0.0];
    let rc = unsafe { fk_metric_eval(m, v3.as_ptr(), v3.as_ptr(), 3, &mut f) };
    assert_eq!(rc, FK_DIMENSION_MISMATCH);
    let rc = unsafe { fk_metric_eval(m, base.as_ptr(), ptr::null(), 2, &mut f) };
    assert_eq!(rc, FK_NULL_POINTER);
    let timelike = [0.0, 2.0];
    assert_eq!(unsafe { fk_metric_eval(m, base.as_ptr(), timelike.as_ptr(), 2, &mut f) }, FK_OK);
    assert_eq!(f, 2.0);
    assert_eq!(last_error(), "");
    unsafe { fk_metric_free(m) };
    unsafe { fk_metric_free(ptr::null_mut()) };
    assert_eq!(unsafe { fk_metric_dimension(ptr::null()) }, 0);
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(fk_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_symbol() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/finslerkit.h")).unwrap();
    for sym in [
        "fk_metric_from_json",
        "fk_metric_free",
        "fk_metric_dimension",
        "fk_metric_eval",
        "fk_metric_tensor",
        "fk_metric_classify",
        "fk_last_error_message",
        "fk_version",
        "typedef struct FkMetric FkMetric",
        "#define FK_PANIC 6",
    ] {
        assert!(header.contains(sym), "missing {sym}");
    }
}

const C_SMOKE: &str = r#"
#include <stdio.h>
#include <math.h>
#include "finslerkit.h"

int main(void) {
    FkMetric *m = NULL;
    if (fk_metric_from_json("{\"metric\": {\"type\": \"named\", \"family\": \"randers\", \"b\": 0.5}}", &m) != FK_OK)
        return 10;
    double base[2] = {0.0, 0.0}, v[2] = {1.0, 0.0}, g[4];
    if (fk_metric_tensor(m, base, v, 2, g) != FK_OK) return 11;
    double det = g[0] * g[3] - g[1] * g[2];
    if (fabs(det - 3.375) > 1e-12) return 12;
    int32_t cls = -1; double lmin = 0.0;
    if (fk_metric_classify(m, base, v, 2, 1e-9, &cls, &lmin) != FK_OK || cls != 0) return 13;
    fk_metric_free(m);
    if (fk_metric_from_json("{\"metric\": {\"type\": \"nope\"}}", &m) != FK_INVALID_CONFIG) return 14;
    printf("%s %s\n", fk_version(), fk_last_error_message());
    return 0;
}
"#;

#[test]
fn c_program_links_against_staticlib() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let target = std::env::var_os("CARGO_TARGET_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| manifest.join("../../target"));
    let lib = target.join("debug/libfinslerkit_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping C smoke test: no cc or no {}", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let exe = dir.path().join("smoke");
    std::fs::write(&src, C_SMOKE).unwrap();
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "cc failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "smoke exited with {:?}", out.status.code());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with(env!("CARGO_PKG_VERSION")), "{text}");
    assert!(text.contains("E_PARSE"), "{text}");
}
