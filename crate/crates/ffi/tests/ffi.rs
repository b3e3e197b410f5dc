use std::ffi::{CStr, CString};
use std::ptr;

use ginivar_ffi::*;

fn last_error() -> String {
    let p = gv_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn scalar_functions_round_trip() {
    let mut g = 0.0;
    let mut s = 0.0;
    unsafe {
        assert_eq!(gv_gini_from_sigma(0.8, &mut g), GvStatus::Ok);
        assert_eq!(gv_sigma_from_gini(g, &mut s), GvStatus::Ok);
    }
    assert!((s - 0.8).abs() < 1e-10);
    assert!(gv_last_error().is_null());
}

#[test]
fn domain_errors_map_to_validation() {
    let mut g = 0.0;
    let st = unsafe { gv_gini_from_sigma(-1.0, &mut g) };
    assert_eq!(st, GvStatus::Validation);
    assert!(last_error().contains("domain"));
}

#[test]
fn null_pointers_are_rejected() {
    assert_eq!(unsafe { gv_gini_from_sigma(0.5, ptr::null_mut()) }, GvStatus::InvalidArgument);
    assert!(last_error().contains("null"));
    assert_eq!(unsafe { gv_dataset_periods(ptr::null()) }, 0);
    unsafe {
        gv_dataset_free(ptr::null_mut());
        gv_draws_free(ptr::null_mut());
        gv_bands_free(ptr::null_mut());
        gv_string_free(ptr::null_mut());
    }
}

#[test]
fn grouped_gini_of_equal_groups_is_zero() {
    let shares = [0.25, 0.5, 0.75, 1.0];
    let means = [3.0; 4];
    let mut g = 1.0;
    assert_eq!(
        unsafe { gv_grouped_gini(shares.as_ptr(), means.as_ptr(), 4, &mut g) },
        GvStatus::Ok
    );
    assert!(g.abs() < 1e-12);
}

#[test]
fn missing_config_is_validation_error() {
    let path = CString::new("/nonexistent/config.json").unwrap();
    let mut ds = ptr::null_mut();
    assert_eq!(unsafe { gv_dataset_load(path.as_ptr(), &mut ds) }, GvStatus::Validation);
    assert!(ds.is_null());
}

#[test]
fn fixture_config_loads() {
    let path = CString::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/synthetic/config.json")).unwrap();
    let mut ds = ptr::null_mut();
    assert_eq!(unsafe { gv_dataset_load(path.as_ptr(), &mut ds) }, GvStatus::Ok, "{}", {
        let p = gv_last_error();
        if p.is_null() { String::new() } else { last_error() }
    });
    unsafe {
        assert_eq!(gv_dataset_dim(ds), 3);
        assert_eq!(gv_dataset_periods(ds), 60);
        gv_dataset_free(ds);
    }
}

#[test]
fn short_chain_and_bands() {
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(gv_dataset_synthetic(3, &mut ds), GvStatus::Ok);
        let mut draws = ptr::null_mut();
        assert_eq!(gv_run_joint(ds, 11, 300, 50, 2, &mut draws), GvStatus::Ok);
        assert_eq!(gv_draws_len(draws), 50);
        assert_eq!(gv_draws_dim(draws), 3);
        let t = gv_draws_periods(draws);
        let mut h = vec![0.0; t];
        assert_eq!(gv_draws_h(draws, 49, h.as_mut_ptr(), t), GvStatus::Ok);
        assert!(h.iter().all(|x| x.is_finite()));
        assert_eq!(gv_draws_h(draws, 50, h.as_mut_ptr(), t), GvStatus::InvalidArgument);
        let mut beta = vec![0.0; 12];
        assert_eq!(gv_draws_beta(draws, 0, beta.as_mut_ptr(), 11), GvStatus::InvalidArgument);
        assert_eq!(gv_draws_beta(draws, 0, beta.as_mut_ptr(), 12), GvStatus::Ok);

        let shock = CString::new("rate").unwrap();
        let q = [0.16, 0.5, 0.84];
        let mut bands = ptr::null_mut();
        assert_eq!(
            gv_irf_bands(draws, shock.as_ptr(), 8, 1.0, q.as_ptr(), 3, ptr::null(), &mut bands),
            GvStatus::Ok
        );
        let mut v = 0.0;
        assert_eq!(gv_bands_value(bands, 2, 0, 1, &mut v), GvStatus::Ok);
        assert!((v - 1.0).abs() < 1e-12);
        assert_eq!(gv_bands_value(bands, 3, 0, 1, &mut v), GvStatus::InvalidArgument);
        let mut csv = ptr::null_mut();
        assert_eq!(gv_bands_csv(bands, &mut csv), GvStatus::Ok);
        let text = CStr::from_ptr(csv).to_str().unwrap().to_string();
        assert!(text.starts_with("variable,horizon,quantile,value,shutdown\n"));
        assert_eq!(text.lines().count(), 1 + 3 * 9 * 3);
        gv_string_free(csv);
        gv_bands_free(bands);

        let bad = CString::new("nosuch").unwrap();
        let mut b2 = ptr::null_mut();
        assert_eq!(
            gv_irf_bands(draws, bad.as_ptr(), 8, 1.0, q.as_ptr(), 3, ptr::null(), &mut b2),
            GvStatus::Validation
        );
        gv_draws_free(draws);

        let mut two = ptr::null_mut();
        assert_eq!(gv_run_twostep(ds, 12, 100, 20, 1, &mut two), GvStatus::Ok);
        assert_eq!(gv_draws_len(two), 20);
        gv_draws_free(two);
        gv_dataset_free(ds);
    }
}

#[test]
fn draws_survive_disk_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("d").to_str().unwrap()).unwrap();
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(gv_dataset_synthetic(5, &mut ds), GvStatus::Ok);
        let mut draws = ptr::null_mut();
        assert_eq!(gv_run_twostep(ds, 1, 50, 10, 1, &mut draws), GvStatus::Ok);
        assert_eq!(gv_draws_write(draws, path.as_ptr()), GvStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(gv_draws_read(path.as_ptr(), &mut back), GvStatus::Ok);
        let mut a = vec![0.0; 12];
        let mut b = vec![0.0; 12];
        gv_draws_beta(draws, 9, a.as_mut_ptr(), 12);
        gv_draws_beta(back, 9, b.as_mut_ptr(), 12);
        assert_eq!(a, b);
        gv_draws_free(draws);
        gv_draws_free(back);
        gv_dataset_free(ds);
    }
}

#[test]
fn lorenz_simulation_through_c_abi() {
    let (mut t, mut g) = (0.0, 0.0);
    assert_eq!(unsafe { gv_simulate_lorenz(0.0, 1.0, 20_000, 5, 0, &mut t, &mut g) }, GvStatus::Ok);
    assert!(g < t);
    assert_eq!(unsafe { gv_simulate_lorenz(0.0, 1.0, 3, 5, 0, &mut t, &mut g) }, GvStatus::Validation);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/ginivar.h")).unwrap();
    for name in [
        "gv_last_error", "gv_version", "gv_dataset_load", "gv_dataset_synthetic", "gv_run_joint",
        "gv_run_twostep", "gv_irf_bands", "gv_bands_value", "gv_draws_free", "GV_STATUS_PANIC",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
    let v = unsafe { CStr::from_ptr(gv_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
