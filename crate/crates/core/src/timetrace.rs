//! Time-resolved photoluminescence: single-exponential lifetime fits and
//! pulsed second-order correlation histograms.

use std::path::Path;

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{self, FitOptions, Problem};
use crate::io;

/// Photon counts per time bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayTrace {
    time_ns: Vec<f64>,
    counts: Vec<f64>,
}

impl DecayTrace {
    pub fn new(time_ns: Vec<f64>, counts: Vec<f64>) -> Result<Self> {
        check_series(&time_ns, &counts, "time")?;
        Ok(Self { time_ns, counts })
    }

    pub fn time_ns(&self) -> &[f64] {
        &self.time_ns
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.time_ns.clone(),
            self.counts.iter().map(|c| c * factor).collect(),
        )
    }

    fn peak_index(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = i;
            }
        }
        best
    }
}

fn check_series(x: &[f64], counts: &[f64], what: &str) -> Result<()> {
    if x.len() != counts.len() {
        return Err(Error::Data(format!(
            "{} {what} values but {} counts",
            x.len(),
            counts.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::Data("trace is empty".into()));
    }
    if let Some(w) = x.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::Data(format!(
            "{what} must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    if let Some(v) = x.iter().chain(counts).find(|v| !v.is_finite()) {
        return Err(Error::Data(format!("non-finite value {v}")));
    }
    if let Some(c) = counts.iter().find(|&&c| c < 0.0) {
        return Err(Error::Data(format!("negative count {c}")));
    }
    Ok(())
}

/// Reads a `time_ns,counts` CSV.
pub fn load_decay(path: &Path) -> Result<DecayTrace> {
    let rows = io::read_two_columns(path)?;
    DecayTrace::new(
        rows.iter().map(|r| r.x).collect(),
        rows.iter().map(|r| r.y).collect(),
    )
}

/// Parametric-bootstrap settings; the seed makes the spread reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bootstrap {
    pub resamples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayOptions {
    /// `[start, end]` in ns. Defaults to one bin past the maximum through
    /// the last bin.
    pub window_ns: Option<[f64; 2]>,
    pub fit: FitOptions,
    pub bootstrap: Option<Bootstrap>,
}

/// `A exp(-(t - t_start) / tau) + B` over the fit window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub tau_ns: f64,
    pub tau_sigma_ns: f64,
    /// Model value above the offset at the window start.
    pub amplitude: f64,
    pub amplitude_sigma: f64,
    pub offset: f64,
    pub offset_sigma: f64,
    pub window_ns: [f64; 2],
    pub bins: usize,
    /// Pearson chi-square per degree of freedom with Poisson variances.
    pub reduced_chi2: f64,
    /// Standard deviation of tau over bootstrap resamples, when requested.
    pub bootstrap_tau_sigma_ns: Option<f64>,
}

struct DecayProblem<'a> {
    t: &'a [f64],
    y: &'a [f64],
    /// `1 / sigma_i`
    w: &'a [f64],
}

impl Problem for DecayProblem<'_> {
    fn n_residuals(&self) -> usize {
        self.t.len()
    }

    fn evaluate(&self, p: &[f64], r: &mut [f64], jac: &mut Mat<f64>) -> bool {
        let [a, tau, b] = [p[0], p[1], p[2]];
        if !(tau > 0.0) {
            return false;
        }
        let t0 = self.t[0];
        for i in 0..self.t.len() {
            let dt = self.t[i] - t0;
            let e = (-dt / tau).exp();
            let w = self.w[i];
            r[i] = w * (a * e + b - self.y[i]);
            jac[(i, 0)] = w * e;
            jac[(i, 1)] = w * a * e * dt / (tau * tau);
            jac[(i, 2)] = w;
        }
        true
    }
}

/// Weighted least-squares single-exponential fit. Poisson variances are
/// taken from the data, then from the fitted model in a second pass.
pub fn fit_decay(trace: &DecayTrace, opts: &DecayOptions) -> Result<DecayFit> {
    let (lo, hi) = fit_window(trace, opts.window_ns)?;
    let t = &trace.time_ns[lo..=hi];
    let y = &trace.counts[lo..=hi];
    let mut fit = fit_window_data(t, y, &opts.fit)?;
    if let Some(b) = opts.bootstrap {
        fit.bootstrap_tau_sigma_ns = Some(bootstrap_sigma(t, &fit, b, &opts.fit)?);
    }
    Ok(fit)
}

fn fit_window(trace: &DecayTrace, window: Option<[f64; 2]>) -> Result<(usize, usize)> {
    let peak = trace.peak_index();
    let t = &trace.time_ns;
    let (lo, hi) = match window {
        None => (peak + 1, t.len().saturating_sub(1)),
        Some([start, end]) => {
            if !(end > start) {
                return Err(Error::param(
                    "window_ns",
                    format!("end {end} must exceed start {start}"),
                ));
            }
            if start < t[peak] {
                return Err(Error::Precondition(format!(
                    "fit window starts at {start} ns, before the trace maximum at {} ns",
                    t[peak]
                )));
            }
            let lo = t.partition_point(|&v| v < start);
            let hi = t.partition_point(|&v| v <= end);
            (lo, hi.saturating_sub(1))
        }
    };
    if lo >= t.len() || hi < lo || hi - lo + 1 < 10 {
        let n = if lo < t.len() && hi >= lo {
            hi - lo + 1
        } else {
            0
        };
        return Err(Error::Precondition(format!(
            "fit window holds {n} bins; at least 10 are needed"
        )));
    }
    Ok((lo, hi))
}

fn fit_window_data(t: &[f64], y: &[f64], opts: &FitOptions) -> Result<DecayFit> {
    let first = y[0];
    if y.iter().all(|&v| v == first) {
        return Err(Error::Data(
            "counts are constant over the window; no decay to fit".into(),
        ));
    }
    let p0 = initial_guess(t, y);
    // Variance floor for empty bins: one count for integer data, but tied to
    // the data so that rescaled traces fit identically.
    let floor = y
        .iter()
        .copied()
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let data_weights: Vec<f64> = y.iter().map(|&v| 1.0 / v.max(floor).sqrt()).collect();
    let sol = fit::minimize(
        &DecayProblem {
            t,
            y,
            w: &data_weights,
        },
        &p0,
        opts,
    )?;
    let model = |p: &[f64], dt: f64| p[0] * (-dt / p[1]).exp() + p[2];
    let model_weights: Vec<f64> = t
        .iter()
        .map(|&ti| 1.0 / model(&sol.params, ti - t[0]).max(floor).sqrt())
        .collect();
    let sol = fit::minimize(
        &DecayProblem {
            t,
            y,
            w: &model_weights,
        },
        &sol.params,
        opts,
    )?;
    let sigma = sol.sigmas()?;
    let [a, tau, b] = [sol.params[0], sol.params[1], sol.params[2]];
    if !(a > 0.0) {
        return Err(Error::Data(format!(
            "fitted amplitude {a} is not positive; no decay identified"
        )));
    }
    let dof = (t.len() - 3) as f64;
    // Residuals are already divided by the model standard deviation.
    let reduced_chi2 = 2.0 * sol.cost / dof;
    // Covariance from the Poisson-weighted problem is already in count
    // units; undo the residual-variance rescaling applied by the solver.
    let unscale = (1.0 / reduced_chi2.max(f64::MIN_POSITIVE)).sqrt();
    let scale = if reduced_chi2 > 1.0 { 1.0 } else { unscale };
    Ok(DecayFit {
        tau_ns: tau,
        tau_sigma_ns: sigma[1] * scale,
        amplitude: a,
        amplitude_sigma: sigma[0] * scale,
        offset: b,
        offset_sigma: sigma[2] * scale,
        window_ns: [t[0], t[t.len() - 1]],
        bins: t.len(),
        reduced_chi2,
        bootstrap_tau_sigma_ns: None,
    })
}

/// Offset from the tail, amplitude from the first bin, tau from a
/// log-linear fit of the excess.
fn initial_guess(t: &[f64], y: &[f64]) -> [f64; 3] {
    let n = y.len();
    let tail = (n / 10).max(1);
    let b = y[n - tail..].iter().sum::<f64>() / tail as f64;
    let a = (y[0] - b).max(1e-12 * y[0].abs().max(1.0));
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(_, &v)| v - b > 0.05 * a)
        .map(|(&ti, &v)| (ti - t[0], (v - b).ln()))
        .collect();
    let span = t[n - 1] - t[0];
    let mut tau = 0.25 * span;
    if pts.len() >= 2 {
        let m = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        if slope < 0.0 && slope.is_finite() {
            tau = (-1.0 / slope).min(10.0 * span);
        }
    }
    [a, tau, b]
}

fn bootstrap_sigma(t: &[f64], fit: &DecayFit, b: Bootstrap, opts: &FitOptions) -> Result<f64> {
    if b.resamples < 2 {
        return Err(Error::param("bootstrap.resamples", "must be at least 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(b.seed);
    let mean: Vec<f64> = t
        .iter()
        .map(|&ti| fit.amplitude * (-(ti - t[0]) / fit.tau_ns).exp() + fit.offset.max(0.0))
        .collect();
    let mut taus = Vec::with_capacity(b.resamples);
    for _ in 0..b.resamples {
        let y: Vec<f64> = mean.iter().map(|&m| poisson(&mut rng, m)).collect();
        match fit_window_data(t, &y, opts) {
            Ok(f) => taus.push(f.tau_ns),
            Err(Error::FitDivergence { .. }) | Err(Error::Data(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if taus.len() < 2 {
        return Err(Error::Numerical("bootstrap resamples failed to fit".into()));
    }
    let m = taus.iter().sum::<f64>() / taus.len() as f64;
    let var = taus.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (taus.len() - 1) as f64;
    Ok(var.sqrt())
}

pub(crate) fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean).map(|d| d.sample(rng)).unwrap_or(mean)
}

/// Coincidence counts against delay for a pulsed source.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct G2Histogram {
    delay_ns: Vec<f64>,
    counts: Vec<f64>,
    rep_period_ns: f64,
}

impl G2Histogram {
    /// `delay_ns` are bin centers and must be uniformly spaced.
    pub fn new(delay_ns: Vec<f64>, counts: Vec<f64>, rep_period_ns: f64) -> Result<Self> {
        check_series(&delay_ns, &counts, "delay")?;
        if !(rep_period_ns > 0.0 && rep_period_ns.is_finite()) {
            return Err(Error::param(
                "rep_period_ns",
                format!("must be positive, got {rep_period_ns}"),
            ));
        }
        if delay_ns.len() < 2 {
            return Err(Error::Data("histogram needs at least 2 bins".into()));
        }
        let width = (delay_ns[delay_ns.len() - 1] - delay_ns[0]) / (delay_ns.len() - 1) as f64;
        if let Some(w) = delay_ns
            .windows(2)
            .find(|w| ((w[1] - w[0]) - width).abs() > 1e-6 * width)
        {
            return Err(Error::Data(format!(
                "bins are not uniform: spacing {} against {width}",
                w[1] - w[0]
            )));
        }
        Ok(Self {
            delay_ns,
            counts,
            rep_period_ns,
        })
    }

    pub fn delay_ns(&self) -> &[f64] {
        &self.delay_ns
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn rep_period_ns(&self) -> f64 {
        self.rep_period_ns
    }

    pub fn bin_width_ns(&self) -> f64 {
        (self.delay_ns[self.delay_ns.len() - 1] - self.delay_ns[0])
            / (self.delay_ns.len() - 1) as f64
    }

    fn edges(&self) -> (f64, f64) {
        let h = 0.5 * self.bin_width_ns();
        (
            self.delay_ns[0] - h,
            self.delay_ns[self.delay_ns.len() - 1] + h,
        )
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.delay_ns.clone(),
            self.counts.iter().map(|c| c * factor).collect(),
            self.rep_period_ns,
        )
    }
}

/// Reads a `delay_ns,counts` CSV.
pub fn load_g2(path: &Path, rep_period_ns: f64) -> Result<G2Histogram> {
    let rows = io::read_two_columns(path)?;
    G2Histogram::new(
        rows.iter().map(|r| r.x).collect(),
        rows.iter().map(|r| r.y).collect(),
        rep_period_ns,
    )
}

/// Period of a 78 MHz pulsed laser.
pub const REP_PERIOD_78MHZ_NS: f64 = 1e3 / 78.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakArea {
    /// Pulse order; 0 is the zero-delay peak.
    pub order: i64,
    pub center_ns: f64,
    pub area: f64,
}

/// Counts integrated over `center +- half_window` around every pulse order
/// `m * rep_period` whose window lies inside the histogram. Bins straddling
/// a window edge contribute by their overlap fraction. The default half
/// window is a quarter period.
pub fn g2_peak_areas(hist: &G2Histogram, half_window_ns: Option<f64>) -> Result<Vec<PeakArea>> {
    let period = hist.rep_period_ns;
    let hw = half_window_ns.unwrap_or(0.25 * period);
    if !(hw > 0.0 && hw < 0.5 * period) {
        return Err(Error::param(
            "half_window_ns",
            format!("must lie in (0, {}), got {hw}", 0.5 * period),
        ));
    }
    let (lo, hi) = hist.edges();
    if hi - lo < period {
        return Err(Error::Data(format!(
            "histogram spans {} ns, less than one period of {period} ns",
            hi - lo
        )));
    }
    let eps = 1e-9 * period;
    let m_lo = ((lo + hw - eps) / period).ceil() as i64;
    let m_hi = ((hi - hw + eps) / period).floor() as i64;
    let width = hist.bin_width_ns();
    let mut areas = Vec::new();
    for m in m_lo..=m_hi {
        let c = m as f64 * period;
        let (a, b) = (c - hw, c + hw);
        let mut area = 0.0;
        for (&d, &n) in hist.delay_ns.iter().zip(&hist.counts) {
            let overlap = (b.min(d + 0.5 * width) - a.max(d - 0.5 * width)).max(0.0);
            area += n * overlap / width;
        }
        areas.push(PeakArea {
            order: m,
            center_ns: c,
            area,
        });
    }
    Ok(areas)
}

/// Side peaks varying by more than this fraction of their mean indicate
/// long-lived bunching.
pub const BUNCHING_SPREAD: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct G2Result {
    pub g2_zero: f64,
    pub central_area: f64,
    pub side_mean: f64,
    pub side_orders: Vec<i64>,
    pub bunching_detected: bool,
}

/// `g2(0) = area(0) / mean(area(m != 0))`. When the side peaks spread by more
/// than [`BUNCHING_SPREAD`], the orders `|m| <= 1` are left out of the mean.
pub fn g2_zero(areas: &[PeakArea]) -> Result<G2Result> {
    let central = areas
        .iter()
        .find(|a| a.order == 0)
        .ok_or_else(|| Error::Precondition("no zero-delay peak in the histogram".into()))?;
    let left = areas.iter().filter(|a| a.order < 0).count();
    let right = areas.iter().filter(|a| a.order > 0).count();
    if left < 3 || right < 3 {
        return Err(Error::Precondition(format!(
            "need at least 3 side peaks on each side, got {left} and {right}"
        )));
    }
    let side: Vec<&PeakArea> = areas.iter().filter(|a| a.order != 0).collect();
    let mean_of = |v: &[&PeakArea]| v.iter().map(|a| a.area).sum::<f64>() / v.len() as f64;
    let all_mean = mean_of(&side);
    let max = side
        .iter()
        .map(|a| a.area)
        .fold(f64::NEG_INFINITY, f64::max);
    let min = side.iter().map(|a| a.area).fold(f64::INFINITY, f64::min);
    let bunching = all_mean > 0.0 && (max - min) / all_mean > BUNCHING_SPREAD;
    let used: Vec<&PeakArea> = if bunching {
        side.iter().copied().filter(|a| a.order.abs() > 1).collect()
    } else {
        side
    };
    let side_mean = mean_of(&used);
    if !(side_mean > 0.0) {
        return Err(Error::Data("side peaks hold no counts".into()));
    }
    Ok(G2Result {
        g2_zero: central.area / side_mean,
        central_area: central.area,
        side_mean,
        side_orders: used.iter().map(|a| a.order).collect(),
        bunching_detected: bunching,
    })
}
