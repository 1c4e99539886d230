use std::ffi::{CStr, CString};
use std::ptr;

use teich_ffi::*;

const THETA: &str = r#"{"vertices":[1,2],"edges":[{"id":1,"ends":[1,2]},{"id":2,"ends":[1,2]},{"id":3,"ends":[1,2]}],"tails":[]}"#;

fn last_error() -> String {
    let p = teich_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn graph_round_trip() {
    let json = CString::new(THETA).unwrap();
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(teich_graph_from_json(json.as_ptr(), &mut g), TeichStatus::Ok);
        let (mut genus, mut tails) = (0, 0);
        assert_eq!(teich_graph_type(g, &mut genus, &mut tails), TeichStatus::Ok);
        assert_eq!((genus, tails), (2, 0));

        let mut ok = 0;
        let mut report = ptr::null_mut();
        assert_eq!(teich_graph_validate(g, &mut ok, &mut report), TeichStatus::Ok);
        assert_eq!(ok, 1);
        teich_string_free(report);

        let mut s = ptr::null_mut();
        assert_eq!(teich_graph_to_json(g, &mut s), TeichStatus::Ok);
        let mut g2 = ptr::null_mut();
        assert_eq!(teich_graph_from_json(s, &mut g2), TeichStatus::Ok);
        teich_string_free(s);
        teich_graph_free(g2);
        teich_graph_free(g);
    }
}

#[test]
fn errors_are_reported() {
    let bad = CString::new("{not json").unwrap();
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(teich_graph_from_json(bad.as_ptr(), &mut g), TeichStatus::ParseError);
        assert!(g.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(teich_graph_from_json(ptr::null(), &mut g), TeichStatus::NullPointer);

        let mut v = 0.0;
        assert_eq!(teich_mzv([1u32, 2].as_ptr(), 2, &mut v), TeichStatus::InvalidInput);
        assert!(last_error().contains("diverg"), "{}", last_error());
    }
}

#[test]
fn enumeration_counts() {
    let mut count = 0;
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(teich_enumerate_trivalent(0, 4, &mut count, &mut s), TeichStatus::Ok);
        assert_eq!(count, 3);
        let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(s).to_str().unwrap()).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 3);
        teich_string_free(s);
        assert_eq!(teich_enumerate_trivalent(0, 2, &mut count, &mut s), TeichStatus::InvalidInput);
    }
}

#[test]
fn numerics() {
    let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
    let mut v = 0.0;
    unsafe {
        assert_eq!(teich_mzv([2u32, 1].as_ptr(), 2, &mut v), TeichStatus::Ok);
        assert!((v - 1.202_056_903_159_594).abs() < 1e-12);

        let mut d = 0;
        assert_eq!(teich_witt_dim(2, 4, &mut d), TeichStatus::Ok);
        assert_eq!(d, 3);

        let mut a = ptr::null_mut();
        assert_eq!(teich_associator_new(3, &mut a), TeichStatus::Ok);
        let ab = CString::new("ab").unwrap();
        assert_eq!(teich_associator_coefficient(a, ab.as_ptr(), &mut v), TeichStatus::Ok);
        assert!((v + zeta2).abs() < 1e-6);
        let long = CString::new("abab").unwrap();
        assert_eq!(teich_associator_coefficient(a, long.as_ptr(), &mut v), TeichStatus::InvalidInput);
        teich_associator_free(a);

        // E12 and E23
        let ma = [0i64, 1, 0, 0, 0, 0, 0, 0, 0];
        let mb = [0i64, 0, 0, 0, 0, 1, 0, 0, 0];
        let mut out = [0.0; 18];
        let mut err = 0.0;
        assert_eq!(teich_phi(3, ma.as_ptr(), mb.as_ptr(), out.as_mut_ptr(), &mut err), TeichStatus::Ok);
        assert!((out[2 * 2] + zeta2).abs() < 1e-6);
        assert!((out[0] - 1.0).abs() < 1e-9);
        assert!(err < 1e-4);

        let not_nilpotent = [1i64, 0, 0, 0, 0, 0, 0, 0, 0];
        assert_eq!(
            teich_phi(3, not_nilpotent.as_ptr(), mb.as_ptr(), out.as_mut_ptr(), &mut err),
            TeichStatus::InvalidInput
        );
    }
}
