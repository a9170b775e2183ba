use std::ffi::{c_char, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use momtunnel_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; mt_last_error_length() + 1];
    assert_eq!(
        unsafe { mt_last_error_message(buf.as_mut_ptr(), buf.len()) },
        MtStatus::Ok
    );
    let bytes: Vec<u8> = buf.iter().take_while(|&&c| c != 0).map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

fn model(order: u32) -> *mut MtModel {
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { mt_model_new(1.0, 1.0, 1.0, 1.0, 4, order, &mut m) },
        MtStatus::Ok
    );
    m
}

fn run(config: &str) -> Result<*mut MtRun, (MtStatus, String)> {
    let text = CString::new(config).unwrap();
    let mut r = ptr::null_mut();
    match unsafe { mt_run_from_toml(text.as_ptr(), &mut r) } {
        MtStatus::Ok => Ok(r),
        s => Err((s, last_error())),
    }
}

#[test]
fn model_roundtrip() {
    let m = model(2);
    let mut dim = 0;
    unsafe {
        assert_eq!(mt_model_dim(m, &mut dim), MtStatus::Ok);
        assert_eq!(dim, 5);
        let y = [-10.0, 1.0, 1.0, 0.0, 0.25];
        let mut h = 0.0;
        assert_eq!(mt_model_hamiltonian(m, y.as_ptr(), 5, &mut h), MtStatus::Ok);
        assert!((h - 0.625).abs() < 1e-7);
        let mut dy = [0.0; 5];
        assert_eq!(mt_model_rhs(m, y.as_ptr(), dy.as_mut_ptr(), 5), MtStatus::Ok);
        assert_eq!(dy[0], 1.0);
        assert_eq!(dy[2], 0.0);
        let mut v = 0.0;
        assert_eq!(
            mt_model_effective_potential(m, 0.0, y.as_ptr(), 5, &mut v),
            MtStatus::Ok
        );
        assert!((v - 1.125).abs() < 1e-15);
        assert_eq!(mt_model_potential_derivative(m, 0.0, 0, &mut v), MtStatus::Ok);
        assert_eq!(v, 1.0);
        mt_model_free(m);
    }
}

#[test]
fn bad_arguments_report_codes_and_messages() {
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(
            mt_model_new(1.0, 1.0, 1.0, 1.0, 4, 5, &mut m),
            MtStatus::InvalidArgument
        );
        assert!(last_error().contains('5'));
        assert!(m.is_null());
        assert_eq!(
            mt_model_new(-1.0, 1.0, 1.0, 1.0, 4, 2, &mut m),
            MtStatus::InvalidArgument
        );
        assert!(last_error().contains("mass"));
        assert_eq!(
            mt_model_new(1.0, 1.0, 1.0, 1.0, 4, 2, ptr::null_mut()),
            MtStatus::NullPointer
        );
        assert_eq!(mt_model_dim(ptr::null(), &mut 0), MtStatus::NullPointer);

        let m = model(3);
        let y = [0.0; 5];
        let mut h = 0.0;
        assert_eq!(
            mt_model_hamiltonian(m, y.as_ptr(), 5, &mut h),
            MtStatus::InvalidArgument
        );
        assert_eq!(mt_model_potential_derivative(m, 0.0, 9, &mut h), MtStatus::OutOfRange);
        mt_model_free(m);

        let mut small = [0 as c_char; 2];
        assert_eq!(mt_last_error_message(small.as_mut_ptr(), 2), MtStatus::BufferTooSmall);
    }
}

#[test]
fn success_clears_last_error() {
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(
            mt_model_new(1.0, 0.0, 1.0, 1.0, 4, 0, &mut m),
            MtStatus::InvalidArgument
        );
        assert!(!last_error().is_empty());
        let m = model(0);
        let mut d = 0;
        assert_eq!(mt_model_dim(m, &mut d), MtStatus::Ok);
        assert_eq!(d, 2);
        mt_model_free(m);
    }
    assert_eq!(last_error(), "");
}

#[test]
fn run_from_configuration() {
    let r = run("[packet]\nq0 = -1.8\nenergy = 0.98\n").unwrap();
    unsafe {
        let (mut len, mut dim) = (0, 0);
        mt_run_len(r, &mut len);
        mt_run_dim(r, &mut dim);
        assert!(len > 100);
        assert_eq!(dim, 5);
        let mut tag = MtTag::Undetermined;
        let mut term = MtTermination::StepFailure;
        mt_run_tag(r, &mut tag);
        mt_run_termination(r, &mut term);
        assert_eq!(tag, MtTag::Reflected);
        assert_eq!(term, MtTermination::Escaped);
        let mut drift = 1.0;
        mt_run_energy_drift(r, &mut drift);
        assert!(drift < 1e-8);

        let (mut t, mut y) = (0.0, [0.0; 5]);
        assert_eq!(mt_run_sample(r, 0, &mut t, y.as_mut_ptr(), 5), MtStatus::Ok);
        assert_eq!((t, y[0], y[2]), (0.0, -1.8, 0.25));
        assert_eq!(mt_run_sample(r, len, &mut t, y.as_mut_ptr(), 5), MtStatus::OutOfRange);
        assert_eq!(mt_run_sample(r, 0, &mut t, y.as_mut_ptr(), 3), MtStatus::BufferTooSmall);
        mt_run_free(r);
    }
}

#[test]
fn configuration_errors() {
    let (status, msg) = run("[packet]\nq0 = -2.0\nsigma = 1.0\n").unwrap_err();
    assert_eq!(status, MtStatus::Config);
    assert!(msg.contains("sigma"));
    let (status, _) = run("[packet]\nq0 = 0.0\nenergy = 0.5\n").unwrap_err();
    assert_eq!(status, MtStatus::Config);
    unsafe {
        assert_eq!(
            mt_run_from_toml(ptr::null(), &mut ptr::null_mut()),
            MtStatus::NullPointer
        );
    }
}

#[test]
fn algebra_check_passes() {
    assert_eq!(mt_check_algebra(), MtStatus::Ok);
}

fn header_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(header_dir().join("momtunnel.h")).unwrap();
    for name in [
        "mt_last_error_length",
        "mt_last_error_message",
        "mt_model_new",
        "mt_model_free",
        "mt_model_rhs",
        "mt_run_from_toml",
        "mt_run_sample",
        "mt_check_algebra",
        "typedef struct MtRun MtRun",
        "MT_STATUS_ALGEBRA_MISMATCH = 7",
    ] {
        assert!(header.contains(name), "{name}");
    }
}

#[test]
fn c_program_links_against_static_library() {
    // target/<profile>/deps/<test binary> -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libmomtunnel_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/c/smoke.c");
    let bin = Path::new(env!("CARGO_TARGET_TMPDIR")).join("ffi_smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header_dir())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    let fields: Vec<&str> = text.split_whitespace().collect();
    assert_eq!(fields[0], "0.625000");
    assert_eq!(fields[1], "1");
    assert_eq!(fields[3], "-10.000");
}
