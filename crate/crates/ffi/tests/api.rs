use std::ffi::{CStr, CString};
use std::ptr;

use femtoq_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(fq_last_error()) }.to_string_lossy().into_owned()
}

fn small_config() -> *mut FqConfig {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("small.toml");
    std::fs::write(&path, "[phases]\nm_max = 5\n[learning]\nmax_iterations = 2000\n").unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { fq_config_load(c.as_ptr(), &mut cfg) }, FqStatus::Ok);
    assert!(!cfg.is_null());
    cfg
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(fq_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn sweep_through_handles() {
    let cfg = small_config();
    unsafe {
        assert_eq!(fq_config_set_seed(cfg, 3), FqStatus::Ok);
        let mut run = ptr::null_mut();
        assert_eq!(fq_run(cfg, &mut run), FqStatus::Ok);
        assert_eq!(fq_run_density_count(run), 5);
        let mut s = FqDensitySummary::default();
        for k in 0..5 {
            assert_eq!(fq_run_summary(run, k, &mut s), FqStatus::Ok);
            assert_eq!(s.m, k + 1);
            assert!((0.0..=1.0).contains(&s.jain));
            assert!(s.sum_capacity > 0.0);
        }
        assert_eq!(fq_run_summary(run, 5, &mut s), FqStatus::InvalidArgument);
        assert!(last_error().contains("out of range"));

        let out = tempfile::tempdir().unwrap();
        let dir = CString::new(out.path().to_str().unwrap()).unwrap();
        assert_eq!(fq_run_write(run, cfg, dir.as_ptr()), FqStatus::Ok);
        assert!(out.path().join("summary.csv").exists());

        fq_run_free(run);
        fq_config_free(cfg);
    }
}

#[test]
fn same_seed_same_summary() {
    let summaries: Vec<FqDensitySummary> = (0..2)
        .map(|_| unsafe {
            let cfg = small_config();
            let mut run = ptr::null_mut();
            assert_eq!(fq_run(cfg, &mut run), FqStatus::Ok);
            let mut s = FqDensitySummary::default();
            assert_eq!(fq_run_summary(run, 4, &mut s), FqStatus::Ok);
            fq_run_free(run);
            fq_config_free(cfg);
            s
        })
        .collect();
    assert_eq!(summaries[0], summaries[1]);
}

#[test]
fn oracle_through_handles() {
    unsafe {
        let cfg = fq_config_default();
        let mut oracle = ptr::null_mut();
        assert_eq!(fq_oracle(cfg, 15, &mut oracle), FqStatus::OracleCapExceeded);
        assert!(oracle.is_null());
        assert!(last_error().contains("31^15"));
        assert_eq!(fq_oracle(cfg, 0, &mut oracle), FqStatus::InvalidArgument);

        assert_eq!(fq_oracle(cfg, 2, &mut oracle), FqStatus::Ok);
        let (mut obj, mut feasible) = (0.0, false);
        assert_eq!(fq_oracle_objective(oracle, &mut obj, &mut feasible), FqStatus::Ok);
        assert!(obj > 0.0);
        let mut actions = [usize::MAX; 2];
        assert_eq!(fq_oracle_actions(oracle, actions.as_mut_ptr(), 2), FqStatus::Ok);
        assert!(actions.iter().all(|&a| a < 31));
        assert_eq!(fq_oracle_actions(oracle, actions.as_mut_ptr(), 1), FqStatus::InvalidArgument);
        fq_oracle_free(oracle);
        fq_config_free(cfg);
    }
}

#[test]
fn config_errors() {
    unsafe {
        let cfg = fq_config_default();
        assert_eq!(fq_config_set_m_max(cfg, 0), FqStatus::ConfigError);
        assert!(last_error().contains("m_max"));
        assert_eq!(fq_config_set_m_max(ptr::null_mut(), 3), FqStatus::NullPointer);
        fq_config_free(cfg);
        fq_config_free(ptr::null_mut());

        let missing = CString::new("/nonexistent/femtoq.toml").unwrap();
        let mut out = ptr::null_mut();
        assert_eq!(fq_config_load(missing.as_ptr(), &mut out), FqStatus::ConfigError);
        assert_eq!(fq_config_load(ptr::null(), &mut out), FqStatus::NullPointer);
    }
}

#[test]
fn formulas() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(fq_pathloss_residential(50.0, 62.3, 4.0, 5.0, &mut v), FqStatus::Ok);
        assert!((v - 102.3).abs() < 1e-9);
        assert_eq!(fq_pathloss_indoor_outdoor(5.0, 2.4, &mut v), FqStatus::Ok);
        assert!((v - 83.472).abs() < 1e-9);
        assert_eq!(fq_capacity(3.0, &mut v), FqStatus::Ok);
        assert_eq!(v, 2.0);
        assert_eq!(fq_capacity(-1.0, &mut v), FqStatus::InvalidArgument);
        let x = [1.0, 2.0, 3.0];
        assert_eq!(fq_jain_index(x.as_ptr(), 3, &mut v), FqStatus::Ok);
        assert!((v - 6.0 / 7.0).abs() < 1e-12);
        assert_eq!(fq_jain_index(x.as_ptr(), 0, &mut v), FqStatus::InvalidArgument);
        assert_eq!(fq_jain_index(ptr::null(), 3, &mut v), FqStatus::NullPointer);
        assert_eq!(fq_capacity(1.0, ptr::null_mut()), FqStatus::NullPointer);
    }
}
