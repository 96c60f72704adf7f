use std::ffi::CString;
use std::ptr;

use soficlab_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0u8; soficlab_last_error_length() + 1];
    let n = unsafe { soficlab_last_error_message(buf.as_mut_ptr() as *mut _, buf.len()) };
    String::from_utf8(buf[..n].to_vec()).unwrap()
}

#[test]
fn sigma_handle_round_trip() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { soficlab_sigma_new(7, 5, 3, &mut h) }, SoficlabStatus::Ok);
    let mut n = 0u64;
    assert_eq!(unsafe { soficlab_sigma_domain_size(h, &mut n) }, SoficlabStatus::Ok);
    assert_eq!(n, 2187 * 168);

    // t = generator 4 on the left; t then t^-1 is the identity.
    let t = [5i32, -5];
    let mut y = 0u64;
    assert_eq!(unsafe { soficlab_sigma_apply(h, t.as_ptr(), 2, ptr::null(), 0, 12345, &mut y) }, SoficlabStatus::Ok);
    assert_eq!(y, 12345);
    let mut moved = 0;
    for x in (0..n).step_by(997) {
        unsafe { soficlab_sigma_apply(h, t.as_ptr(), 1, ptr::null(), 0, x, &mut y) };
        moved += (y != x) as u32;
    }
    assert!(moved > 0);

    let b3 = [3i32];
    let (mut v, mut r) = (0.0, 1.0);
    assert_eq!(unsafe { soficlab_sigma_commutator_defect(h, t.as_ptr(), 1, b3.as_ptr(), 1, 0, 0, &mut v, &mut r) }, SoficlabStatus::Ok);
    assert!(v > 1.0 / 243.0);
    assert_eq!(r, 0.0);

    let bad = [9i32];
    assert_eq!(unsafe { soficlab_sigma_apply(h, bad.as_ptr(), 1, ptr::null(), 0, 0, &mut y) }, SoficlabStatus::InvalidArgument);
    assert!(!last_error().is_empty());
    unsafe { soficlab_sigma_free(h) };
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { soficlab_sigma_new(4, 5, 3, &mut h) }, SoficlabStatus::InvalidArgument);
    assert!(last_error().contains("p not prime"));
    assert!(h.is_null());
    assert_eq!(unsafe { soficlab_sigma_new(7, 5, 3, ptr::null_mut()) }, SoficlabStatus::NullPointer);
    assert_eq!(unsafe { soficlab_sp_density(7, ptr::null_mut()) }, SoficlabStatus::NullPointer);
}

#[test]
fn verify_report_json() {
    let suite = CString::new("covers").unwrap();
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { soficlab_verify(suite.as_ptr(), 7, 5, 3, 42, 0, &mut r) }, SoficlabStatus::Ok);
    assert_eq!(unsafe { soficlab_report_all_pass(r) }, 1);
    assert!(unsafe { soficlab_report_check_count(r) } > 0);
    let mut needed = 0;
    assert_eq!(unsafe { soficlab_report_json(r, ptr::null_mut(), 0, &mut needed) }, SoficlabStatus::BufferTooSmall);
    let mut buf = vec![0u8; needed];
    assert_eq!(unsafe { soficlab_report_json(r, buf.as_mut_ptr() as *mut _, buf.len(), &mut needed) }, SoficlabStatus::Ok);
    let text = std::str::from_utf8(&buf[..needed - 1]).unwrap();
    assert!(text.contains("\"command\": \"verify covers\""));
    unsafe { soficlab_report_free(r) };
    assert_eq!(unsafe { soficlab_report_all_pass(ptr::null()) }, -1);

    let unknown = CString::new("nope").unwrap();
    assert_eq!(unsafe { soficlab_verify(unknown.as_ptr(), 7, 5, 3, 0, 0, &mut r) }, SoficlabStatus::InvalidArgument);
}

#[test]
fn scalar_quantities() {
    let mut d = 0.0;
    assert_eq!(unsafe { soficlab_sp_density(7, &mut d) }, SoficlabStatus::Ok);
    assert!((d - 204.0 / 2187.0).abs() < 1e-15);
    assert_eq!(unsafe { soficlab_boundary_ratio(7, &mut d) }, SoficlabStatus::Ok);
    assert!((d - 240.0 / 2187.0).abs() < 1e-15);
}

#[test]
fn header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/soficlab.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in ["soficlab_sigma_new", "soficlab_verify", "soficlab_report_json", "SOFICLAB_STATUS_RESOURCE"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    if let Ok(out) = std::process::Command::new("cc").args(["-fsyntax-only", "-x", "c", header]).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
