use std::ffi::CStr;
use std::ptr;

use slowlight::synthetic::{
    decay_trace, fsr_centers, g2_histogram, line_spectrum, linspace, DecaySpec, G2Spec, Line,
};
use slowlight_ffi::*;

fn last_error() -> String {
    let p = sl_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn small_solver() -> SlSolverParams {
    SlSolverParams {
        cutoff: 4,
        n_bands: 16,
        k_points: 6,
        k_min: 0.3,
        k_max: 0.5,
        ..sl_solver_default()
    }
}

#[test]
fn defaults_match_the_rust_side() {
    let g = sl_geometry_default();
    assert_eq!((g.a_nm, g.r_nm, g.d_nm), (261.0, 65.0, 160.0));
    assert_eq!(g.rows_per_side, 5);
    let s = sl_solver_default();
    assert_eq!(s.cutoff, 7);
    assert_eq!(s.n_eff, 0.0);
}

#[test]
fn null_pointers_are_reported() {
    sl_clear_error();
    assert!(sl_last_error_message().is_null());
    let st = unsafe { sl_beta_factor(1.0, 1.0, ptr::null_mut()) };
    assert_eq!(st, SlStatus::NullPointer);
    assert!(last_error().contains("out"));
    let mut out = ptr::null_mut();
    let st = unsafe { sl_waveguide_solve(ptr::null(), &small_solver(), &mut out) };
    assert_eq!(st, SlStatus::NullPointer);
    assert!(out.is_null());
    unsafe {
        sl_waveguide_free(ptr::null_mut());
        sl_fringe_free(ptr::null_mut());
        assert_eq!(sl_waveguide_k_points(ptr::null()), 0);
        assert_eq!(sl_fringe_peak_count(ptr::null()), 0);
    }
}

#[test]
fn invalid_parameters_map_to_their_status() {
    let mut g = sl_geometry_default();
    g.r_nm = 200.0;
    let mut out = ptr::null_mut();
    let st = unsafe { sl_waveguide_solve(&g, &small_solver(), &mut out) };
    assert_eq!(st, SlStatus::InvalidParameter);
    assert!(last_error().contains("r_nm"));
    assert!(out.is_null());

    let mut v = f64::NAN;
    assert_eq!(
        unsafe { sl_f_zpl(1.7, -1.0, 0.7, 0.45, &mut v) },
        SlStatus::InvalidParameter
    );
    assert!(v.is_nan(), "out must be untouched on failure");
}

#[test]
fn scalar_wrappers() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(sl_f_zpl(1.7, 1.01, 0.70, 0.452, &mut v), SlStatus::Ok);
        assert!((v - 2.159).abs() < 2e-3);
        assert_eq!(sl_beta_factor(3.0, 1.0, &mut v), SlStatus::Ok);
        assert!((v - 0.75).abs() < 1e-12);
        let d = [1.0, 1.0, 1.0];
        let f = [1.0, 1.0, 0.0];
        assert_eq!(
            sl_orientation_factor(d.as_ptr(), f.as_ptr(), &mut v),
            SlStatus::Ok
        );
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
        let g = sl_geometry_default();
        assert_eq!(sl_depth_factor(&g, 737.0, &mut v), SlStatus::Ok);
        assert!(v > 0.0 && v < 1.0);
        let inputs = SlRateInputs {
            n_g: 70.0,
            s_eff_nm2: 6.0e4,
            wavelength_nm: 737.0,
            index: 2.4,
            orientation_factor: 1.0,
            depth_factor: 1.0,
            local_field_ratio: 1.0,
        };
        let mut r1 = 0.0;
        assert_eq!(sl_rate_enhancement(&inputs, &mut r1), SlStatus::Ok);
        let mut r2 = 0.0;
        let doubled = SlRateInputs {
            n_g: 140.0,
            ..inputs
        };
        assert_eq!(sl_rate_enhancement(&doubled, &mut r2), SlStatus::Ok);
        assert!((r2 / r1 - 2.0).abs() < 1e-12);
    }
}

#[test]
fn waveguide_handle_round_trip() {
    let g = sl_geometry_default();
    let p = small_solver();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { sl_waveguide_solve(&g, &p, &mut h) }, SlStatus::Ok);
    assert!(!h.is_null());
    unsafe {
        assert_eq!(sl_waveguide_k_points(h), 6);
        let nb = sl_waveguide_band_count(h);
        assert_eq!(nb, 16);
        let mut k = 0.0;
        assert_eq!(sl_waveguide_k(h, 5, &mut k), SlStatus::Ok);
        assert_eq!(k, 0.5);
        assert_eq!(sl_waveguide_k(h, 6, &mut k), SlStatus::OutOfRange);
        let mut prev = 0.0;
        for b in 0..nb {
            let mut f = 0.0;
            assert_eq!(sl_waveguide_frequency(h, b, 0, &mut f), SlStatus::Ok);
            assert!(f > 0.0);
            let mut par = SlParity::Unclassified;
            assert_eq!(sl_waveguide_parity(h, b, &mut par), SlStatus::Ok);
            prev = f64::max(prev, f);
        }
        let mut f = 0.0;
        assert_eq!(
            sl_waveguide_frequency(h, nb, 0, &mut f),
            SlStatus::OutOfRange
        );
        let (mut lo, mut hi) = (0.0, 0.0);
        if sl_waveguide_gap(h, &mut lo, &mut hi) == SlStatus::Ok {
            assert!(hi > lo);
        }
        let mut band = 0usize;
        match sl_waveguide_guided_band(h, SlParity::Even, &mut band) {
            SlStatus::Ok => {
                let mut ng = 0.0;
                assert_eq!(sl_waveguide_group_index(h, band, 0, &mut ng), SlStatus::Ok);
                assert!(ng > 0.0);
            }
            st => assert_eq!(st, SlStatus::Data),
        }
        assert_eq!(
            sl_waveguide_guided_band(h, SlParity::Unclassified, &mut band),
            SlStatus::Data
        );
        sl_waveguide_free(h);
    }
}

#[test]
fn fringe_handle_round_trip() {
    let length = 51.0 * 261.0;
    let centers = fsr_centers(736.0, 739.0, length, |_| 40.0).unwrap();
    let lines: Vec<Line> = centers
        .iter()
        .map(|&c| Line {
            center_nm: c,
            fwhm_nm: 0.05,
            amplitude: 100.0,
        })
        .collect();
    let axis = linspace(735.5, 739.5, 1601);
    let s = line_spectrum(&axis, &lines, None, None).unwrap();
    let mut h = ptr::null_mut();
    let st = unsafe {
        sl_fringe_analyze(
            s.wavelength_nm().as_ptr(),
            s.intensity().as_ptr(),
            s.len(),
            length,
            &mut h,
        )
    };
    assert_eq!(st, SlStatus::Ok, "{}", last_error());
    unsafe {
        let n = sl_fringe_peak_count(h);
        assert_eq!(n, centers.len());
        let mut peak = std::mem::zeroed::<SlPeak>();
        assert_eq!(sl_fringe_peak(h, 0, &mut peak), SlStatus::Ok);
        assert!((peak.center_nm - centers[0]).abs() < 1e-3);
        let (mut wl, mut ng) = (0.0, 0.0);
        assert_eq!(sl_fringe_group_index(h, 0, &mut wl, &mut ng), SlStatus::Ok);
        assert!((ng - 40.0).abs() < 0.5, "{ng}");
        assert_eq!(
            sl_fringe_group_index(h, n - 1, &mut wl, &mut ng),
            SlStatus::OutOfRange
        );
        assert_eq!(sl_fringe_peak(h, n, &mut peak), SlStatus::OutOfRange);
        sl_fringe_free(h);
    }
}

#[test]
fn decay_and_g2() {
    let spec = DecaySpec {
        tau_ns: 1.5,
        peak_counts: 5000.0,
        offset: 5.0,
        bin_ns: 0.05,
        bins: 400,
        peak_bin: 20,
    };
    let tr = decay_trace(&spec, None).unwrap();
    let mut fit = unsafe { std::mem::zeroed::<SlDecayFit>() };
    let st = unsafe {
        sl_fit_decay(
            tr.time_ns().as_ptr(),
            tr.counts().as_ptr(),
            tr.len(),
            &mut fit,
        )
    };
    assert_eq!(st, SlStatus::Ok, "{}", last_error());
    assert!((fit.tau_ns - 1.5).abs() < 1e-6);
    assert!(fit.window_end_ns > fit.window_start_ns);

    let flat = vec![3.0; 50];
    let t: Vec<f64> = (0..50).map(|i| i as f64).collect();
    let st = unsafe { sl_fit_decay(t.as_ptr(), flat.as_ptr(), 50, &mut fit) };
    assert_eq!(st, SlStatus::Data);

    let g = G2Spec {
        rep_period_ns: 12.82,
        orders: 5,
        side_area: 1.0e4,
        ratio: 0.3,
        peak_tau_ns: 1.0,
        bin_ns: 0.05,
        background: 0.0,
    };
    let hist = g2_histogram(&g, None).unwrap();
    let mut v = 0.0;
    let st = unsafe {
        sl_g2_zero(
            hist.delay_ns().as_ptr(),
            hist.counts().as_ptr(),
            hist.counts().len(),
            12.82,
            0.0,
            &mut v,
        )
    };
    assert_eq!(st, SlStatus::Ok, "{}", last_error());
    assert!((v - 0.3).abs() < 0.01, "{v}");
}

#[test]
fn header_declares_the_api() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/slowlight.h"))
            .unwrap();
    for name in [
        "SL_STATUS_OK = 0",
        "typedef struct SlWaveguide SlWaveguide;",
        "typedef struct SlFringeAnalysis SlFringeAnalysis;",
        "sl_waveguide_solve(",
        "sl_waveguide_free(",
        "sl_fringe_analyze(",
        "sl_fit_decay(",
        "sl_g2_zero(",
        "sl_last_error_message(",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("check.c");
    std::fs::write(&src, "#include \"slowlight.h\"\nint main(void) { SlGeometry g = sl_geometry_default(); return g.a_nm > 0 ? 0 : 1; }\n").unwrap();
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let Ok(out) = std::process::Command::new("cc")
        .args([
            "-std=c99",
            "-Wall",
            "-Werror",
            "-fsyntax-only",
            "-I",
            include,
        ])
        .arg(&src)
        .output()
    else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
