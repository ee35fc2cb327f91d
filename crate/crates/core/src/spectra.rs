//! Photoluminescence spectra: background removal, multi-Lorentzian fits of
//! Fabry-Perot fringes, and the group-index and Q curves derived from them.

use std::path::Path;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{self, FitOptions, Problem};
use crate::io;

/// Sampled spectrum on a strictly increasing wavelength axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    wavelength_nm: Vec<f64>,
    intensity: Vec<f64>,
}

impl Spectrum {
    pub fn new(wavelength_nm: Vec<f64>, intensity: Vec<f64>) -> Result<Self> {
        if wavelength_nm.len() != intensity.len() {
            return Err(Error::Data(format!(
                "{} wavelengths but {} intensities",
                wavelength_nm.len(),
                intensity.len()
            )));
        }
        if wavelength_nm.is_empty() {
            return Err(Error::Data("spectrum is empty".into()));
        }
        if let Some(i) = wavelength_nm.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Data(format!(
                "wavelengths must be strictly increasing ({} then {})",
                wavelength_nm[i],
                wavelength_nm[i + 1]
            )));
        }
        if let Some(v) = wavelength_nm
            .iter()
            .chain(&intensity)
            .find(|v| !v.is_finite())
        {
            return Err(Error::Data(format!("non-finite value {v}")));
        }
        if let Some(i) = intensity.iter().position(|&v| v < 0.0) {
            return Err(Error::Data(format!(
                "negative intensity {} at {} nm",
                intensity[i], wavelength_nm[i]
            )));
        }
        Ok(Self {
            wavelength_nm,
            intensity,
        })
    }

    /// Sorts `(wavelength, intensity)` pairs; repeated wavelengths are an
    /// error.
    pub fn from_pairs(mut pairs: Vec<(f64, f64)>) -> Result<Self> {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Data(format!("duplicate wavelength {} nm", w[0].0)));
        }
        let (wl, counts) = pairs.into_iter().unzip();
        Self::new(wl, counts)
    }

    pub fn wavelength_nm(&self) -> &[f64] {
        &self.wavelength_nm
    }

    pub fn intensity(&self) -> &[f64] {
        &self.intensity
    }

    pub fn len(&self) -> usize {
        self.intensity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensity.is_empty()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.wavelength_nm[0], self.wavelength_nm[self.len() - 1])
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.wavelength_nm.clone(),
            self.intensity.iter().map(|v| v * factor).collect(),
        )
    }

    fn median_step(&self) -> f64 {
        let mut d: Vec<f64> = self.wavelength_nm.windows(2).map(|w| w[1] - w[0]).collect();
        if d.is_empty() {
            return 0.0;
        }
        d.sort_by(f64::total_cmp);
        d[d.len() / 2]
    }
}

/// Reads a `wavelength_nm,counts` CSV.
pub fn load_spectrum(path: &Path) -> Result<Spectrum> {
    let rows = io::read_two_columns(path)?;
    if let Some(r) = rows.iter().find(|r| r.y < 0.0) {
        return Err(Error::Data(format!(
            "{}:{}: negative counts {}",
            path.display(),
            r.line,
            r.y
        )));
    }
    Spectrum::from_pairs(rows.into_iter().map(|r| (r.x, r.y)).collect())
}

/// `amplitude * exp(-(x - center)^2 / (2 sigma^2)) + offset`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBackground {
    pub amplitude: f64,
    pub center_nm: f64,
    pub sigma_nm: f64,
    pub offset: f64,
}

impl GaussianBackground {
    pub fn eval(&self, x: f64) -> f64 {
        if self.amplitude == 0.0 {
            return self.offset;
        }
        let u = (x - self.center_nm) / self.sigma_nm;
        self.amplitude * (-0.5 * u * u).exp() + self.offset
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackgroundFit {
    pub model: GaussianBackground,
    /// Input minus the model, clamped at zero.
    pub corrected: Spectrum,
    /// Samples excluded as fringe excursions in the final pass.
    pub excluded: usize,
}

const CLIP_PASSES: usize = 2;
const CLIP_SIGMAS: f64 = 2.0;

struct GaussianProblem<'a> {
    x: &'a [f64],
    y: &'a [f64],
    weight: &'a [f64],
}

impl Problem for GaussianProblem<'_> {
    fn n_residuals(&self) -> usize {
        self.x.len()
    }

    fn evaluate(&self, p: &[f64], r: &mut [f64], jac: &mut Mat<f64>) -> bool {
        let [a, c, s, b] = [p[0], p[1], p[2], p[3]];
        if s == 0.0 {
            return false;
        }
        for i in 0..self.x.len() {
            let w = self.weight[i];
            let u = (self.x[i] - c) / s;
            let g = (-0.5 * u * u).exp();
            r[i] = w * (a * g + b - self.y[i]);
            jac[(i, 0)] = w * g;
            jac[(i, 1)] = w * a * g * u / s;
            jac[(i, 2)] = w * a * g * u * u / s;
            jac[(i, 3)] = w;
        }
        true
    }
}

/// Fits a Gaussian plus constant to the broad emission, excluding fringe
/// peaks by two passes of one-sided sigma clipping.
pub fn fit_background(s: &Spectrum, opts: &FitOptions) -> Result<BackgroundFit> {
    if s.len() < 10 {
        return Err(Error::Precondition(format!(
            "background fit needs at least 10 samples, got {}",
            s.len()
        )));
    }
    let x = s.wavelength_nm();
    let y = s.intensity();
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        let model = GaussianBackground {
            amplitude: 0.0,
            center_nm: 0.5 * (x[0] + x[x.len() - 1]),
            sigma_nm: x[x.len() - 1] - x[0],
            offset: lo,
        };
        return finish(s, model, 0);
    }
    let excess: Vec<f64> = y.iter().map(|v| v - lo).collect();
    let total: f64 = excess.iter().sum();
    let c0 = x.iter().zip(&excess).map(|(x, e)| x * e).sum::<f64>() / total;
    let var = x
        .iter()
        .zip(&excess)
        .map(|(x, e)| e * (x - c0).powi(2))
        .sum::<f64>()
        / total;
    let span = x[x.len() - 1] - x[0];
    let s0 = if var > 0.0 { var.sqrt() } else { 0.25 * span };
    let p0 = vec![hi - lo, c0, s0, lo];
    // A Gaussian much wider than the data is indistinguishable from a
    // constant, and the fit then wanders along the amplitude/offset valley.
    match clipped_gaussian(s, p0, opts) {
        Ok((p, excluded)) if p[2].abs() <= span => finish(s, background_from(&p), excluded),
        Ok(_) | Err(Error::FitDivergence { .. }) => flat_background(s),
        Err(e) => Err(e),
    }
}

fn clipped_gaussian(s: &Spectrum, mut p: Vec<f64>, opts: &FitOptions) -> Result<(Vec<f64>, usize)> {
    let x = s.wavelength_nm();
    let y = s.intensity();
    let mut weight = vec![1.0; s.len()];
    let mut excluded = 0;
    for pass in 0..=CLIP_PASSES {
        let sol = fit::minimize(
            &GaussianProblem {
                x,
                y,
                weight: &weight,
            },
            &p,
            opts,
        )?;
        p = sol.params;
        if pass == CLIP_PASSES {
            break;
        }
        let model = background_from(&p);
        let resid: Vec<f64> = (0..s.len()).map(|i| y[i] - model.eval(x[i])).collect();
        let kept: Vec<f64> = resid
            .iter()
            .zip(&weight)
            .filter(|(_, &w)| w > 0.0)
            .map(|(r, _)| *r)
            .collect();
        let sigma = 1.4826 * median_abs_deviation(&kept);
        let threshold = CLIP_SIGMAS * sigma;
        let next: Vec<f64> = resid
            .iter()
            .map(|&r| if r > threshold { 0.0 } else { 1.0 })
            .collect();
        let n_kept = next.iter().filter(|&&w| w > 0.0).count();
        if n_kept < 10 || next == weight {
            break;
        }
        excluded = s.len() - n_kept;
        weight = next;
    }
    Ok((p, excluded))
}

/// Constant level from the median, with the same one-sided clipping.
fn flat_background(s: &Spectrum) -> Result<BackgroundFit> {
    let x = s.wavelength_nm();
    let mut kept = s.intensity().to_vec();
    let mut level = median(kept.clone());
    for _ in 0..CLIP_PASSES {
        let threshold = level + CLIP_SIGMAS * 1.4826 * median_abs_deviation(&kept);
        let next: Vec<f64> = s
            .intensity()
            .iter()
            .copied()
            .filter(|&v| v <= threshold)
            .collect();
        if next.len() < 10 {
            break;
        }
        kept = next;
        level = kept.iter().sum::<f64>() / kept.len() as f64;
    }
    let model = GaussianBackground {
        amplitude: 0.0,
        center_nm: 0.5 * (x[0] + x[x.len() - 1]),
        sigma_nm: x[x.len() - 1] - x[0],
        offset: level,
    };
    finish(s, model, s.len() - kept.len())
}

fn background_from(p: &[f64]) -> GaussianBackground {
    GaussianBackground {
        amplitude: p[0],
        center_nm: p[1],
        sigma_nm: p[2].abs(),
        offset: p[3],
    }
}

fn finish(s: &Spectrum, model: GaussianBackground, excluded: usize) -> Result<BackgroundFit> {
    let corrected = s
        .wavelength_nm()
        .iter()
        .zip(s.intensity())
        .map(|(&x, &y)| (y - model.eval(x)).max(0.0))
        .collect();
    Ok(BackgroundFit {
        model,
        corrected: Spectrum::new(s.wavelength_nm.clone(), corrected)?,
        excluded,
    })
}

fn median_abs_deviation(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let med = median(v.to_vec());
    median(v.iter().map(|x| (x - med).abs()).collect())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Spectrum with the fitted Gaussian background removed.
pub fn subtract_background(s: &Spectrum) -> Result<Spectrum> {
    Ok(fit_background(s, &FitOptions::default())?.corrected)
}

/// Local maxima whose topographic prominence is at least
/// `min_prominence_fraction` of the global maximum, thinned so that no two
/// are closer than `min_separation_nm` (taller peaks win). The mean of a
/// maximum's two neighbours must keep 40% of its prominence, which rejects
/// single-sample noise spikes, and the prominence must also clear eight
/// times the white-noise level. Sorted by wavelength.
pub fn find_peaks(s: &Spectrum, min_prominence_fraction: f64, min_separation_nm: f64) -> Vec<f64> {
    let x = s.wavelength_nm();
    let y = s.intensity();
    let n = y.len();
    let top = y.iter().copied().fold(0.0, f64::max);
    if n < 3 || top <= 0.0 {
        return Vec::new();
    }
    let threshold = (min_prominence_fraction * top).max(8.0 * noise_level(y));
    let mut candidates = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if y[i] > y[i - 1] {
            // Walk across a flat top.
            let mut j = i;
            while j + 1 < n && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < n && y[j + 1] < y[i] {
                let peak = (i + j) / 2;
                let p = prominence(y, peak);
                let shoulder = 0.5 * (y[i - 1] + y[j + 1]);
                if p >= threshold && y[peak] > 0.0 && shoulder >= y[peak] - 0.6 * p {
                    candidates.push(peak);
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    candidates.sort_by(|&a, &b| y[b].total_cmp(&y[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for c in candidates {
        if kept
            .iter()
            .all(|&k| (x[k] - x[c]).abs() >= min_separation_nm)
        {
            kept.push(c);
        }
    }
    kept.sort_unstable();
    kept.into_iter().map(|k| x[k]).collect()
}

/// Robust white-noise sigma from the MAD of second differences, which
/// ignores the smooth line shapes.
fn noise_level(y: &[f64]) -> f64 {
    let mut d2: Vec<f64> = y
        .windows(3)
        .map(|w| (w[0] - 2.0 * w[1] + w[2]).abs())
        .collect();
    if d2.is_empty() {
        return 0.0;
    }
    let mid = d2.len() / 2;
    let (_, m, _) = d2.select_nth_unstable_by(mid, f64::total_cmp);
    1.4826 * *m / 6f64.sqrt()
}

fn prominence(y: &[f64], peak: usize) -> f64 {
    let h = y[peak];
    let mut left_min = h;
    let mut i = peak;
    while i > 0 {
        i -= 1;
        if y[i] > h {
            break;
        }
        left_min = left_min.min(y[i]);
    }
    let mut right_min = h;
    let mut i = peak;
    while i + 1 < y.len() {
        i += 1;
        if y[i] > h {
            break;
        }
        right_min = right_min.min(y[i]);
    }
    h - left_min.max(right_min)
}

/// Fitted Lorentzian line with one-sigma uncertainties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianPeak {
    pub center_nm: f64,
    pub fwhm_nm: f64,
    pub amplitude: f64,
    pub center_sigma_nm: f64,
    pub fwhm_sigma_nm: f64,
    pub amplitude_sigma: f64,
}

impl LorentzianPeak {
    pub fn eval(&self, x: f64) -> f64 {
        lorentzian(x, self.amplitude, self.center_nm, self.fwhm_nm)
    }
}

fn lorentzian(x: f64, amplitude: f64, center: f64, fwhm: f64) -> f64 {
    let h = 0.5 * fwhm;
    amplitude * h * h / ((x - center).powi(2) + h * h)
}

/// Result of a simultaneous multi-Lorentzian fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LorentzianFit {
    /// Sorted by center.
    pub peaks: Vec<LorentzianPeak>,
    pub offset: f64,
    pub offset_sigma: f64,
    pub cost: f64,
    pub iterations: usize,
}

struct LorentzProblem<'a> {
    x: &'a [f64],
    y: &'a [f64],
}

impl Problem for LorentzProblem<'_> {
    fn n_residuals(&self) -> usize {
        self.x.len()
    }

    // p = [offset, (amplitude, center, fwhm) per peak]
    fn evaluate(&self, p: &[f64], r: &mut [f64], jac: &mut Mat<f64>) -> bool {
        let n_peaks = (p.len() - 1) / 3;
        if (0..n_peaks).any(|k| !(p[3 + 3 * k] > 0.0)) {
            return false;
        }
        for (i, (&x, &y)) in self.x.iter().zip(self.y).enumerate() {
            let mut model = p[0];
            jac[(i, 0)] = 1.0;
            for k in 0..n_peaks {
                let (a, c, w) = (p[1 + 3 * k], p[2 + 3 * k], p[3 + 3 * k]);
                let h = 0.5 * w;
                let dx = x - c;
                let d = dx * dx + h * h;
                let shape = h * h / d;
                model += a * shape;
                jac[(i, 1 + 3 * k)] = shape;
                jac[(i, 2 + 3 * k)] = 2.0 * a * h * h * dx / (d * d);
                jac[(i, 3 + 3 * k)] = a * h * dx * dx / (d * d);
            }
            r[i] = model - y;
        }
        true
    }
}

/// Simultaneous least-squares fit of `sum_i A_i (w_i/2)^2 / ((x - c_i)^2 +
/// (w_i/2)^2) + offset`, seeded from `candidates` (centers in nm).
pub fn fit_lorentzians(
    s: &Spectrum,
    candidates: &[f64],
    opts: &FitOptions,
) -> Result<LorentzianFit> {
    if candidates.is_empty() {
        return Err(Error::Precondition("no peak candidates to fit".into()));
    }
    let x = s.wavelength_nm();
    let y = s.intensity();
    let (lo, hi) = s.range();
    let mut centers = candidates.to_vec();
    centers.sort_by(f64::total_cmp);
    if let Some(c) = centers.iter().find(|&&c| !(c >= lo && c <= hi)) {
        return Err(Error::Precondition(format!(
            "candidate {c} nm lies outside the spectrum"
        )));
    }
    let baseline = y.iter().copied().fold(f64::INFINITY, f64::min);
    let mut p0 = vec![baseline];
    for (k, &c) in centers.iter().enumerate() {
        let left_bound = if k > 0 {
            0.5 * (centers[k - 1] + c)
        } else {
            lo
        };
        let right_bound = if k + 1 < centers.len() {
            0.5 * (c + centers[k + 1])
        } else {
            hi
        };
        let i = nearest(x, c);
        let height = y[i] - baseline;
        let fwhm = estimate_fwhm(x, y, i, baseline, left_bound, right_bound);
        let in_window = x
            .iter()
            .filter(|&&v| (v - x[i]).abs() <= 2.0 * fwhm)
            .count();
        if in_window < 4 {
            return Err(Error::Precondition(format!(
                "peak near {c} nm has {in_window} samples within two widths; at least 4 are needed"
            )));
        }
        p0.extend([
            height.max(f64::MIN_POSITIVE),
            x[i],
            fwhm.max(s.median_step()),
        ]);
    }
    let sol = fit::minimize(&LorentzProblem { x, y }, &p0, opts)?;
    let sigma = sol.sigmas()?;
    let mut peaks = Vec::with_capacity(centers.len());
    for (k, &seed) in centers.iter().enumerate() {
        let j = 1 + 3 * k;
        let peak = LorentzianPeak {
            amplitude: sol.params[j],
            center_nm: sol.params[j + 1],
            fwhm_nm: sol.params[j + 2],
            amplitude_sigma: sigma[j],
            center_sigma_nm: sigma[j + 1],
            fwhm_sigma_nm: sigma[j + 2],
        };
        if !(peak.amplitude > 0.0) {
            return Err(Error::Numerical(format!(
                "peak seeded at {} nm converged to non-positive amplitude {}",
                seed, peak.amplitude
            )));
        }
        if !(peak.center_nm >= lo && peak.center_nm <= hi) {
            return Err(Error::Numerical(format!(
                "peak seeded at {} nm left the spectrum (center {} nm)",
                seed, peak.center_nm
            )));
        }
        peaks.push(peak);
    }
    peaks.sort_by(|a, b| a.center_nm.total_cmp(&b.center_nm));
    Ok(LorentzianFit {
        peaks,
        offset: sol.params[0],
        offset_sigma: sigma[0],
        cost: sol.cost,
        iterations: sol.iterations,
    })
}

fn nearest(x: &[f64], v: f64) -> usize {
    let i = x.partition_point(|&a| a < v);
    if i == 0 {
        0
    } else if i == x.len() || v - x[i - 1] <= x[i] - v {
        i - 1
    } else {
        i
    }
}

/// Full width at half maximum from linear interpolation of the half-height
/// crossings, searched no further than the given bounds.
fn estimate_fwhm(x: &[f64], y: &[f64], i: usize, baseline: f64, left: f64, right: f64) -> f64 {
    let half = baseline + 0.5 * (y[i] - baseline);
    let mut l = None;
    let mut j = i;
    while j > 0 && x[j - 1] >= left {
        if y[j - 1] <= half {
            let t = (y[j] - half) / (y[j] - y[j - 1]);
            l = Some(x[j] - t * (x[j] - x[j - 1]));
            break;
        }
        j -= 1;
    }
    let mut r = None;
    let mut j = i;
    while j + 1 < x.len() && x[j + 1] <= right {
        if y[j + 1] <= half {
            let t = (y[j] - half) / (y[j] - y[j + 1]);
            r = Some(x[j] + t * (x[j + 1] - x[j]));
            break;
        }
        j += 1;
    }
    match (l, r) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (x[i] - l),
        (None, Some(r)) => 2.0 * (r - x[i]),
        (None, None) => (right - left).min(x[x.len() - 1] - x[0]),
    }
}

/// Group index between adjacent fringes, reported at their midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NgPoint {
    pub wavelength_nm: f64,
    pub n_g: f64,
}

/// `n_g = l1 l2 / (2 L (l2 - l1))` for each adjacent pair of fringe centers.
pub fn fringe_group_index(
    peaks: &[LorentzianPeak],
    waveguide_length_nm: f64,
) -> Result<Vec<NgPoint>> {
    if !(waveguide_length_nm > 0.0 && waveguide_length_nm.is_finite()) {
        return Err(Error::param(
            "waveguide_length_nm",
            format!("must be positive, got {waveguide_length_nm}"),
        ));
    }
    if peaks.len() < 2 {
        return Err(Error::Precondition(format!(
            "group index needs at least 2 fringes, got {}",
            peaks.len()
        )));
    }
    let mut c: Vec<f64> = peaks.iter().map(|p| p.center_nm).collect();
    c.sort_by(f64::total_cmp);
    c.windows(2)
        .map(|w| {
            let (l1, l2) = (w[0], w[1]);
            if !(l2 - l1 > 1e-12 * l2) {
                return Err(Error::Data(format!("coincident fringe centers at {l1} nm")));
            }
            Ok(NgPoint {
                wavelength_nm: 0.5 * (l1 + l2),
                n_g: l1 * l2 / (2.0 * waveguide_length_nm * (l2 - l1)),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QPoint {
    pub wavelength_nm: f64,
    pub q: f64,
}

/// `Q = center / FWHM` per peak.
pub fn q_factors(peaks: &[LorentzianPeak]) -> Vec<QPoint> {
    peaks
        .iter()
        .map(|p| QPoint {
            wavelength_nm: p.center_nm,
            q: p.center_nm / p.fwhm_nm,
        })
        .collect()
}

/// Settings for [`analyze_fringes`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FringeOptions {
    pub waveguide_length_nm: f64,
    pub subtract_background: bool,
    pub min_prominence_fraction: f64,
    /// Defaults to three median sample spacings.
    pub min_separation_nm: Option<f64>,
    pub fit: FitOptions,
}

impl Default for FringeOptions {
    fn default() -> Self {
        Self {
            waveguide_length_nm: 51.0 * 261.0,
            subtract_background: true,
            min_prominence_fraction: 0.05,
            min_separation_nm: None,
            fit: FitOptions::default(),
        }
    }
}

impl FringeOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.waveguide_length_nm > 0.0 && self.waveguide_length_nm.is_finite()) {
            return Err(Error::param("waveguide_length_nm", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.min_prominence_fraction) {
            return Err(Error::param(
                "min_prominence_fraction",
                "must lie in [0, 1)",
            ));
        }
        if let Some(s) = self.min_separation_nm {
            if !(s >= 0.0) {
                return Err(Error::param("min_separation_nm", "must be non-negative"));
            }
        }
        self.fit.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FringeAnalysis {
    pub peaks: Vec<LorentzianPeak>,
    pub ng_points: Vec<NgPoint>,
    pub q_points: Vec<QPoint>,
    pub waveguide_length_nm: f64,
    pub background: Option<GaussianBackground>,
    pub offset: f64,
}

/// Background removal, peak search, multi-Lorentzian fit, then n_g and Q.
pub fn analyze_fringes(s: &Spectrum, opts: &FringeOptions) -> Result<FringeAnalysis> {
    opts.validate()?;
    let (work, background) = if opts.subtract_background {
        let bg = fit_background(s, &opts.fit)?;
        (bg.corrected, Some(bg.model))
    } else {
        (s.clone(), None)
    };
    let separation = opts.min_separation_nm.unwrap_or(3.0 * s.median_step());
    let candidates = find_peaks(&work, opts.min_prominence_fraction, separation);
    if candidates.len() < 2 {
        return Err(Error::Data(format!(
            "found {} fringe peak(s); at least 2 are needed",
            candidates.len()
        )));
    }
    let fit = fit_lorentzians(&work, &candidates, &opts.fit)?;
    let ng_points = fringe_group_index(&fit.peaks, opts.waveguide_length_nm)?;
    let q_points = q_factors(&fit.peaks);
    Ok(FringeAnalysis {
        peaks: fit.peaks,
        ng_points,
        q_points,
        waveguide_length_nm: opts.waveguide_length_nm,
        background,
        offset: fit.offset,
    })
}
