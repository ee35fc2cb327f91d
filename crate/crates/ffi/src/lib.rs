//! C ABI for `slowlight`.
//!
//! Every fallible call returns an [`SlStatus`]; on failure the message is
//! available from [`sl_last_error_message`] on the same thread until the
//! next failing call. Results are written through out-pointers, which are
//! left untouched on failure. Handles are opaque and released with their
//! matching `_free` function; passing NULL to a `_free` function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use slowlight::bandsolver::{Parity, SolverParams};
use slowlight::coupling::{self, RateInputs};
use slowlight::dispersion::{group_index_hf, guided_modes, GroupIndex, GuidedModes};
use slowlight::geometry::WaveguideGeometry;
use slowlight::spectra::{analyze_fringes, FringeAnalysis, FringeOptions, Spectrum};
use slowlight::timetrace::{
    fit_decay, g2_peak_areas, g2_zero, DecayOptions, DecayTrace, G2Histogram,
};
use slowlight::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Precondition = 3,
    Numerical = 4,
    FitDivergence = 5,
    Data = 6,
    Io = 7,
    OutOfRange = 8,
    Panic = 9,
}

impl From<&Error> for SlStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parameter { .. } => SlStatus::InvalidParameter,
            Error::Precondition(_) => SlStatus::Precondition,
            Error::Numerical(_) => SlStatus::Numerical,
            Error::FitDivergence { .. } => SlStatus::FitDivergence,
            Error::Parse { .. } | Error::Data(_) | Error::Json(_) => SlStatus::Data,
            Error::Io(_) => SlStatus::Io,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(SlStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(SlStatus::from(&e), e.to_string())
    }
}

fn null(name: &str) -> Fail {
    Fail(SlStatus::NullPointer, format!("`{name}` is NULL"))
}

fn out_of_range(what: &str, i: usize, len: usize) -> Fail {
    Fail(
        SlStatus::OutOfRange,
        format!("{what} {i} is out of range (size {len})"),
    )
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SlStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SlStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, name: &str, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(v);
    Ok(())
}

unsafe fn slice<'a>(p: *const f64, n: usize, name: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(name))
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn sl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn sl_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Waveguide geometry; lengths in nanometres.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlGeometry {
    pub a_nm: f64,
    pub r_nm: f64,
    pub d_nm: f64,
    pub n_bulk: f64,
    pub n_clad: f64,
    pub rows_per_side: u32,
    pub emitter_depth_nm: f64,
}

impl From<SlGeometry> for WaveguideGeometry {
    fn from(g: SlGeometry) -> Self {
        WaveguideGeometry {
            lattice_constant_nm: g.a_nm,
            hole_radius_nm: g.r_nm,
            slab_thickness_nm: g.d_nm,
            n_bulk: g.n_bulk,
            n_clad: g.n_clad,
            rows_per_side: g.rows_per_side as usize,
            emitter_depth_nm: g.emitter_depth_nm,
        }
    }
}

/// The fabricated diamond device.
#[no_mangle]
pub extern "C" fn sl_geometry_default() -> SlGeometry {
    let g = WaveguideGeometry::diamond_w1();
    SlGeometry {
        a_nm: g.lattice_constant_nm,
        r_nm: g.hole_radius_nm,
        d_nm: g.slab_thickness_nm,
        n_bulk: g.n_bulk,
        n_clad: g.n_clad,
        rows_per_side: g.rows_per_side as u32,
        emitter_depth_nm: g.emitter_depth_nm,
    }
}

/// Band-sweep settings. `n_eff <= 0` derives the background index from the
/// slab.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlSolverParams {
    pub cutoff: u32,
    pub n_bands: u32,
    pub k_points: u32,
    pub k_min: f64,
    pub k_max: f64,
    pub n_eff: f64,
}

#[no_mangle]
pub extern "C" fn sl_solver_default() -> SlSolverParams {
    let p = SolverParams::default();
    SlSolverParams {
        cutoff: p.cutoff,
        n_bands: p.n_bands as u32,
        k_points: p.k_points as u32,
        k_min: p.k_min,
        k_max: p.k_max,
        n_eff: p.n_eff.unwrap_or(0.0),
    }
}

impl From<SlSolverParams> for SolverParams {
    fn from(p: SlSolverParams) -> Self {
        SolverParams {
            cutoff: p.cutoff,
            n_bands: p.n_bands as usize,
            k_points: p.k_points as usize,
            k_min: p.k_min,
            k_max: p.k_max,
            n_eff: (p.n_eff > 0.0).then_some(p.n_eff),
            ..SolverParams::default()
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlParity {
    Even = 0,
    Odd = 1,
    Unclassified = 2,
}

impl From<Parity> for SlParity {
    fn from(p: Parity) -> Self {
        match p {
            Parity::Even => SlParity::Even,
            Parity::Odd => SlParity::Odd,
            Parity::Unclassified => SlParity::Unclassified,
        }
    }
}

/// Solved supercell bands with the bulk gap and guided-band tags.
pub struct SlWaveguide {
    modes: GuidedModes,
}

/// Runs the band sweep. On success `*out` owns a new handle.
///
/// # Safety
/// Pointers must be NULL or valid for the access implied by their type.
#[no_mangle]
pub unsafe extern "C" fn sl_waveguide_solve(
    geometry: *const SlGeometry,
    params: *const SlSolverParams,
    out: *mut *mut SlWaveguide,
) -> SlStatus {
    guard(|| {
        let g: WaveguideGeometry = (*deref(geometry, "geometry")?).into();
        let p: SolverParams = (*deref(params, "params")?).into();
        if out.is_null() {
            return Err(null("out"));
        }
        let modes = guided_modes(&g, &p)?;
        write(out, "out", Box::into_raw(Box::new(SlWaveguide { modes })))
    })
}

/// # Safety
/// `handle` must be NULL or come from [`sl_waveguide_solve`], freed once.
#[no_mangle]
pub unsafe extern "C" fn sl_waveguide_free(handle: *mut SlWaveguide) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of k samples, 0 for NULL.
///
/// # Safety
/// `handle` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_waveguide_k_points(handle: *const SlWaveguide) -> usize {
    handle.as_ref().map_or(0, |h| h.modes.bands.points.len())
}

/// Number of tracked bands, 0 for NULL.
///
/// # Safety
/// `handle` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_waveguide_band_count(handle: *const SlWaveguide) -> usize {
    handle.as_ref().map_or(0, |h| h.modes.bands.bands.len())
}

/// Normalized Bloch wavenumber `k a / 2 pi` of sample `k_index`.
///
/// # Safety
/// Pointers must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_waveguide_k(
    handle: *const SlWaveguide,
    k_index: usize,
    out: *mut f64,
) -> SlStatus {
    guard(|| {
        let h = deref(handle, "handle")?;
        let pts = &h.modes.bands.points;
        let p = pts
            .get(k_index)
            .ok_or_else(|| out_of_range("k index", k_index, pts.len()))?;
        write(out, "out", p.k_norm)
    })
}

/// Frequency `a / lambda` of `band` at sample `k_index`.
///
/// # Safety
/// Pointers must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_waveguide_frequency(
    handle: *const SlWaveguide,
    band: usize,
    k_index: usize,
    out: *mut f64,
) -> SlStatus {
    guard(|| {
        let h = deref(handle, "handle")?;
        let (b, k) = check_band(h, band, k_index)?;
        write(out, "out", h.modes.bands.band_mode(b, k).0.a_over_lambda)
    })
}

fn check_band(h: &SlWaveguide, band: usize, k_index: usize) -> Result<(usize, usize), Fail> {
    let bs = &h.modes.bands;
    if band >= bs.bands.len() {
        return Err(out_of_range("band", band, bs.bands.len()));
    }
    if k_index >= bs.points.len() {
        return Err(out_of_range("k index", k_index, bs.points.len()));
    }
    Ok((band, k_index))
}

/// Mirror parity of a tracked band.
///
/// # Safety
/// Pointers must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_waveguide_parity(
    handle: *const SlWaveguide,
    band: usize,
    out: *mut SlParity,
) -> SlStatus {
    guard(|| {
        let h = deref(handle, "handle")?;
        let bands = &h.modes.bands.bands;
        let b = bands
            .get(band)
            .ok_or_else(|| out_of_range("band", band, bands.len()))?;
        write(out, "out", b.parity.into())
    })
}

/// Bulk gap edges in `a / lambda`; `SL_STATUS_DATA` when there is no gap.
///
/// # Safety
/// Pointers must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_waveguide_gap(
    handle: *const SlWaveguide,
    lo: *mut f64,
    hi: *mut f64,
) -> SlStatus {
    guard(|| {
        let h = deref(handle, "handle")?;
        let gap = h
            .modes
            .gap
            .ok_or_else(|| Fail(SlStatus::Data, "the defect-free lattice has no gap".into()))?;
        if lo.is_null() || hi.is_null() {
            return Err(null("lo/hi"));
        }
        write(lo, "lo", gap.gap_lo)?;
        write(hi, "hi", gap.gap_hi)
    })
}

/// Index of the gap-guided band of the given parity.
///
/// # Safety
/// Pointers must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_waveguide_guided_band(
    handle: *const SlWaveguide,
    parity: SlParity,
    out: *mut usize,
) -> SlStatus {
    guard(|| {
        let h = deref(handle, "handle")?;
        let w = match parity {
            SlParity::Even => h.modes.even,
            SlParity::Odd => h.modes.odd,
            SlParity::Unclassified => None,
        };
        let w = w.ok_or_else(|| {
            Fail(
                SlStatus::Data,
                format!("no gap-guided band of parity {parity:?}"),
            )
        })?;
        write(out, "out", w.band)
    })
}

/// Group index of `band` at `k_index` from the eigenvector; `INFINITY`
/// where the group velocity vanishes.
///
/// # Safety
/// Pointers must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_waveguide_group_index(
    handle: *const SlWaveguide,
    band: usize,
    k_index: usize,
    out: *mut f64,
) -> SlStatus {
    guard(|| {
        let h = deref(handle, "handle")?;
        let (b, k) = check_band(h, band, k_index)?;
        let bs = &h.modes.bands;
        let (_, v) = bs.band_mode(b, k);
        let ng = match group_index_hf(v, bs.model.epsilon(), bs.model.basis(), bs.points[k].k)? {
            GroupIndex::Finite { n_g, .. } => n_g,
            GroupIndex::Divergent => f64::INFINITY,
        };
        write(out, "out", ng)
    })
}

/// `(tau_off / tau_on - 1) / (debye_waller * branching_fraction)`.
///
/// # Safety
/// `out` must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_f_zpl(
    tau_off_ns: f64,
    tau_on_ns: f64,
    debye_waller: f64,
    branching_fraction: f64,
    out: *mut f64,
) -> SlStatus {
    guard(|| {
        let v = coupling::f_zpl(tau_off_ns, tau_on_ns, debye_waller, branching_fraction)?;
        write(out, "out", v)
    })
}

/// # Safety
/// `out` must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_beta_factor(
    gamma_wg_per_ns: f64,
    gamma_phc_per_ns: f64,
    out: *mut f64,
) -> SlStatus {
    guard(|| {
        write(
            out,
            "out",
            coupling::beta_factor(gamma_wg_per_ns, gamma_phc_per_ns)?,
        )
    })
}

/// `dipole` and `field` point to three doubles each.
///
/// # Safety
/// Pointers must be NULL or valid for three reads.
#[no_mangle]
pub unsafe extern "C" fn sl_orientation_factor(
    dipole: *const f64,
    field: *const f64,
    out: *mut f64,
) -> SlStatus {
    guard(|| {
        let d = slice(dipole, 3, "dipole")?;
        let f = slice(field, 3, "field")?;
        let v = coupling::orientation_factor([d[0], d[1], d[2]], [f[0], f[1], f[2]])?;
        write(out, "out", v)
    })
}

/// # Safety
/// Pointers must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_depth_factor(
    geometry: *const SlGeometry,
    wavelength_nm: f64,
    out: *mut f64,
) -> SlStatus {
    guard(|| {
        let g: WaveguideGeometry = (*deref(geometry, "geometry")?).into();
        write(out, "out", coupling::depth_factor(&g, wavelength_nm)?)
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlRateInputs {
    pub n_g: f64,
    pub s_eff_nm2: f64,
    pub wavelength_nm: f64,
    pub index: f64,
    pub orientation_factor: f64,
    pub depth_factor: f64,
    pub local_field_ratio: f64,
}

/// Waveguide emission rate relative to bulk.
///
/// # Safety
/// Pointers must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_rate_enhancement(
    inputs: *const SlRateInputs,
    out: *mut f64,
) -> SlStatus {
    guard(|| {
        let i = deref(inputs, "inputs")?;
        let v = coupling::waveguide_rate_enhancement(&RateInputs {
            n_g: i.n_g,
            s_eff_nm2: i.s_eff_nm2,
            wavelength_nm: i.wavelength_nm,
            index: i.index,
            orientation_factor: i.orientation_factor,
            depth_factor: i.depth_factor,
            local_field_ratio: i.local_field_ratio,
        })?;
        write(out, "out", v)
    })
}

/// Fitted fringes of one spectrum.
pub struct SlFringeAnalysis {
    analysis: FringeAnalysis,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlPeak {
    pub center_nm: f64,
    pub fwhm_nm: f64,
    pub amplitude: f64,
    pub center_sigma_nm: f64,
    pub fwhm_sigma_nm: f64,
    pub amplitude_sigma: f64,
}

/// Background subtraction, peak search and multi-Lorentzian fit of `n`
/// samples with default settings and the given waveguide length.
///
/// # Safety
/// Arrays must hold `n` doubles; pointers must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_fringe_analyze(
    wavelength_nm: *const f64,
    counts: *const f64,
    n: usize,
    waveguide_length_nm: f64,
    out: *mut *mut SlFringeAnalysis,
) -> SlStatus {
    guard(|| {
        let x = slice(wavelength_nm, n, "wavelength_nm")?.to_vec();
        let y = slice(counts, n, "counts")?.to_vec();
        if out.is_null() {
            return Err(null("out"));
        }
        let s = Spectrum::new(x, y)?;
        let opts = FringeOptions {
            waveguide_length_nm,
            ..FringeOptions::default()
        };
        let analysis = analyze_fringes(&s, &opts)?;
        write(
            out,
            "out",
            Box::into_raw(Box::new(SlFringeAnalysis { analysis })),
        )
    })
}

/// # Safety
/// `handle` must be NULL or come from [`sl_fringe_analyze`], freed once.
#[no_mangle]
pub unsafe extern "C" fn sl_fringe_free(handle: *mut SlFringeAnalysis) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_fringe_peak_count(handle: *const SlFringeAnalysis) -> usize {
    handle.as_ref().map_or(0, |h| h.analysis.peaks.len())
}

/// # Safety
/// Pointers must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_fringe_peak(
    handle: *const SlFringeAnalysis,
    index: usize,
    out: *mut SlPeak,
) -> SlStatus {
    guard(|| {
        let h = deref(handle, "handle")?;
        let peaks = &h.analysis.peaks;
        let p = peaks
            .get(index)
            .ok_or_else(|| out_of_range("peak", index, peaks.len()))?;
        write(
            out,
            "out",
            SlPeak {
                center_nm: p.center_nm,
                fwhm_nm: p.fwhm_nm,
                amplitude: p.amplitude,
                center_sigma_nm: p.center_sigma_nm,
                fwhm_sigma_nm: p.fwhm_sigma_nm,
                amplitude_sigma: p.amplitude_sigma,
            },
        )
    })
}

/// Group index between peaks `index` and `index + 1`.
///
/// # Safety
/// Pointers must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_fringe_group_index(
    handle: *const SlFringeAnalysis,
    index: usize,
    wavelength_nm: *mut f64,
    n_g: *mut f64,
) -> SlStatus {
    guard(|| {
        let h = deref(handle, "handle")?;
        let pts = &h.analysis.ng_points;
        let p = pts
            .get(index)
            .ok_or_else(|| out_of_range("fringe pair", index, pts.len()))?;
        if wavelength_nm.is_null() || n_g.is_null() {
            return Err(null("wavelength_nm/n_g"));
        }
        write(wavelength_nm, "wavelength_nm", p.wavelength_nm)?;
        write(n_g, "n_g", p.n_g)
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlDecayFit {
    pub tau_ns: f64,
    pub tau_sigma_ns: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub window_start_ns: f64,
    pub window_end_ns: f64,
    pub reduced_chi2: f64,
}

/// Single-exponential fit from one bin past the maximum to the end.
///
/// # Safety
/// Arrays must hold `n` doubles; pointers must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_fit_decay(
    time_ns: *const f64,
    counts: *const f64,
    n: usize,
    out: *mut SlDecayFit,
) -> SlStatus {
    guard(|| {
        let t = slice(time_ns, n, "time_ns")?.to_vec();
        let c = slice(counts, n, "counts")?.to_vec();
        if out.is_null() {
            return Err(null("out"));
        }
        let fit = fit_decay(&DecayTrace::new(t, c)?, &DecayOptions::default())?;
        write(
            out,
            "out",
            SlDecayFit {
                tau_ns: fit.tau_ns,
                tau_sigma_ns: fit.tau_sigma_ns,
                amplitude: fit.amplitude,
                offset: fit.offset,
                window_start_ns: fit.window_ns[0],
                window_end_ns: fit.window_ns[1],
                reduced_chi2: fit.reduced_chi2,
            },
        )
    })
}

/// Zero-delay correlation from a pulsed histogram. `half_window_ns <= 0`
/// selects a quarter period.
///
/// # Safety
/// Arrays must hold `n` doubles; pointers must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_g2_zero(
    delay_ns: *const f64,
    counts: *const f64,
    n: usize,
    rep_period_ns: f64,
    half_window_ns: f64,
    out: *mut f64,
) -> SlStatus {
    guard(|| {
        let d = slice(delay_ns, n, "delay_ns")?.to_vec();
        let c = slice(counts, n, "counts")?.to_vec();
        if out.is_null() {
            return Err(null("out"));
        }
        let hist = G2Histogram::new(d, c, rep_period_ns)?;
        let areas = g2_peak_areas(&hist, (half_window_ns > 0.0).then_some(half_window_ns))?;
        write(out, "out", g2_zero(&areas)?.g2_zero)
    })
}
