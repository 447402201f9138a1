use std::ffi::{c_char, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use vispart_ffi::*;

fn last_error() -> String {
    unsafe {
        let n = vp_last_error_message(ptr::null_mut(), 0);
        let mut buf = vec![0 as c_char; n + 1];
        vp_last_error_message(buf.as_mut_ptr(), buf.len());
        std::ffi::CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn set_from(dim: usize, level: u32, coords: &[u32]) -> *mut VpGridSet {
    let mut h = ptr::null_mut();
    let st = unsafe { vp_gridset_from_coords(dim, level, coords.as_ptr(), coords.len() / dim, &mut h) };
    assert_eq!(st, VpStatus::Ok, "{}", last_error());
    h
}

#[test]
fn roundtrip_and_queries() {
    // a 2x2 block in the corner of the level-2 grid
    let s = set_from(2, 2, &[0, 0, 0, 1, 1, 0, 1, 1]);
    unsafe {
        let mut len = 0;
        assert_eq!(vp_gridset_len(s, &mut len), VpStatus::Ok);
        assert_eq!(len, 4);
        let mut buf = [0u32; 8];
        assert_eq!(vp_gridset_coords(s, buf.as_mut_ptr(), 8), VpStatus::Ok);
        assert_eq!(buf, [0, 0, 0, 1, 1, 0, 1, 1]);
        assert_eq!(vp_gridset_coords(s, buf.as_mut_ptr(), 7), VpStatus::InvalidArgument);

        // covered by one cube of side 1/2
        let mut c = 0.0;
        assert_eq!(vp_dyadic_content(s, 1.0, &mut c), VpStatus::Ok);
        assert!((c - 0.5).abs() < 1e-15);

        let mut vis = ptr::null_mut();
        let e = [0.0, 1.0];
        assert_eq!(vp_visible_cells(s, e.as_ptr(), 2, 4, &mut vis), VpStatus::Ok, "{}", last_error());
        assert_eq!(vp_gridset_len(vis, &mut len), VpStatus::Ok);
        assert_eq!(len, 2);
        vp_gridset_free(vis);

        let mut m = ptr::null_mut();
        assert_eq!(vp_frostman_build(s, 1.5, &mut m), VpStatus::Ok);
        let mut mass = 0.0;
        assert_eq!(vp_measure_total_mass(m, &mut mass), VpStatus::Ok);
        assert!(mass > 0.0);
        let mut q = 0.0;
        assert_eq!(vp_measure_mass_of(m, 0, [0u32, 0].as_ptr(), 2, &mut q), VpStatus::Ok);
        assert_eq!(q, mass);
        let mut energy = 0.0;
        assert_eq!(vp_spatial_energy(m, 1.0, &mut energy), VpStatus::Ok);
        assert!(energy > 0.0);
        vp_measure_free(m);
        vp_gridset_free(s);
    }
}

#[test]
fn full_percolation_has_dimension_two() {
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(vp_gridset_percolation(2, 1.0, 5, 7, &mut h), VpStatus::Ok);
        let mut slope = 0.0;
        assert_eq!(vp_box_dimension(h, 0, &mut slope), VpStatus::Ok);
        assert!((slope - 2.0).abs() < 1e-12);
        vp_gridset_free(h);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut h = ptr::null_mut();
        // coordinate 4 is outside the level-2 grid
        assert_eq!(vp_gridset_from_coords(2, 2, [4u32, 0].as_ptr(), 1, &mut h), VpStatus::InvalidArgument);
        assert!(h.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(vp_gridset_len(ptr::null(), &mut 0), VpStatus::NullPointer);
        assert!(last_error().contains("set"));

        assert_eq!(vp_gridset_percolation(2, 1.5, 3, 0, &mut h), VpStatus::InvalidArgument);

        let missing = CString::new("/nonexistent/set.txt").unwrap();
        assert_eq!(vp_gridset_read(missing.as_ptr(), &mut h), VpStatus::Io);

        let s = set_from(2, 2, &[1, 1]);
        let mut c = 0.0;
        assert_eq!(vp_dyadic_content(s, -1.0, &mut c), VpStatus::InvalidArgument);
        let zero = [0.0, 0.0];
        let mut v = ptr::null_mut();
        assert_eq!(vp_visible_cells(s, zero.as_ptr(), 2, 4, &mut v), VpStatus::InvalidArgument);
        vp_gridset_free(s);

        // freeing null is a no-op
        vp_gridset_free(ptr::null_mut());
        vp_measure_free(ptr::null_mut());

        // truncation keeps the terminator
        let mut tiny = [1 as c_char; 4];
        let n = vp_last_error_message(tiny.as_mut_ptr(), tiny.len());
        assert!(n > 3);
        assert_eq!(tiny[3], 0);
    }
}

const C_SMOKE: &str = r#"
#include <stdio.h>
#include "vispart.h"

int main(void) {
    uint32_t coords[] = {0, 0, 1, 1, 2, 2, 3, 3};
    VpGridSet *set = NULL;
    if (vp_gridset_from_coords(2, 2, coords, 4, &set) != VP_STATUS_OK) return 1;
    double c = 0.0;
    if (vp_dyadic_content(set, 1.0, &c) != VP_STATUS_OK) return 2;
    size_t n = 0;
    vp_gridset_len(NULL, &n);
    char msg[128];
    vp_last_error_message(msg, sizeof msg);
    printf("%.6f %s\n", c, msg);
    vp_gridset_free(set);
    return 0;
}
"#;

#[test]
fn header_compiles_and_links_from_c() {
    let cc = match Command::new("cc").arg("--version").output() {
        Ok(o) if o.status.success() => "cc",
        _ => {
            eprintln!("no C compiler; skipping");
            return;
        }
    };
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<this test>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|p| p.parent()).unwrap();
    let lib = profile_dir.join("libvispart_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(&src, C_SMOKE).unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(manifest.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success());
    let stdout = String::from_utf8(run.stdout).unwrap();
    // four diagonal level-2 cells: best cover is the cells themselves, 4 * 1/4
    assert!(stdout.starts_with("1.000000 null pointer: set"), "{stdout}");
}
