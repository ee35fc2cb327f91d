//! Seeded generators for synthetic spectra, decay traces and correlation
//! histograms with known ground truth.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::spectra::{GaussianBackground, Spectrum};
use crate::timetrace::{poisson, DecayTrace, G2Histogram};

/// Fabry-Perot resonances from `start_nm` up to `end_nm`. Adjacent centers
/// are one round trip of phase apart: `2 L * integral(n_g / l^2) = 1`.
pub fn fsr_centers(
    start_nm: f64,
    end_nm: f64,
    length_nm: f64,
    n_g: impl Fn(f64) -> f64,
) -> Result<Vec<f64>> {
    if !(length_nm > 0.0 && start_nm > 0.0 && end_nm > start_nm) {
        return Err(Error::Precondition(
            "need 0 < start < end and a positive length".into(),
        ));
    }
    let phase = |a: f64, b: f64| {
        const N: usize = 64;
        let h = (b - a) / N as f64;
        let f = |l: f64| n_g(l) / (l * l);
        let inner: f64 = (1..N)
            .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
            .sum();
        2.0 * length_nm * h / 3.0 * (f(a) + inner + f(b))
    };
    let mut out = vec![start_nm];
    let mut l = start_nm;
    loop {
        let ng = n_g(l);
        if !(ng > 0.0) {
            return Err(Error::Precondition(format!(
                "group index {ng} at {l} nm gives no next fringe"
            )));
        }
        let step = l * l / (2.0 * length_nm * ng);
        let mut hi = l + step;
        while phase(l, hi) < 1.0 {
            hi += step;
            if hi > end_nm + step {
                return Ok(out);
            }
        }
        let mut lo = l;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if phase(l, mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        l = 0.5 * (lo + hi);
        if l > end_nm {
            break;
        }
        out.push(l);
    }
    Ok(out)
}

/// One Lorentzian line: center, FWHM and peak height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub center_nm: f64,
    pub fwhm_nm: f64,
    pub amplitude: f64,
}

/// Lines plus an optional Gaussian background sampled on `axis`, with
/// optional additive white noise `(sigma, seed)`. Negative samples are
/// clamped to zero.
pub fn line_spectrum(
    axis: &[f64],
    lines: &[Line],
    background: Option<GaussianBackground>,
    noise: Option<(f64, u64)>,
) -> Result<Spectrum> {
    let mut y: Vec<f64> = axis
        .iter()
        .map(|&x| {
            let bg = background.map_or(0.0, |b| b.eval(x));
            bg + lines
                .iter()
                .map(|l| {
                    let h = 0.5 * l.fwhm_nm;
                    l.amplitude * h * h / ((x - l.center_nm).powi(2) + h * h)
                })
                .sum::<f64>()
        })
        .collect();
    if let Some((sigma, seed)) = noise {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::param("noise", e.to_string()))?;
        for v in &mut y {
            *v += normal.sample(&mut rng);
        }
    }
    for v in &mut y {
        *v = v.max(0.0);
    }
    Spectrum::new(axis.to_vec(), y)
}

/// Evenly spaced axis with `n` samples from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Parameters of a synthetic lifetime measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecaySpec {
    pub tau_ns: f64,
    /// Expected counts in the peak bin, above the offset.
    pub peak_counts: f64,
    pub offset: f64,
    pub bin_ns: f64,
    pub bins: usize,
    /// Bin holding the excitation pulse; counts rise linearly before it.
    pub peak_bin: usize,
}

impl DecaySpec {
    pub fn expected(&self) -> Vec<f64> {
        (0..self.bins)
            .map(|i| {
                let shape = if i < self.peak_bin {
                    i as f64 / self.peak_bin as f64
                } else {
                    (-((i - self.peak_bin) as f64) * self.bin_ns / self.tau_ns).exp()
                };
                self.peak_counts * shape + self.offset
            })
            .collect()
    }
}

/// Decay trace with Poisson counts when `seed` is given, expected counts
/// otherwise.
pub fn decay_trace(spec: &DecaySpec, seed: Option<u64>) -> Result<DecayTrace> {
    let time: Vec<f64> = (0..spec.bins).map(|i| i as f64 * spec.bin_ns).collect();
    let mut counts = spec.expected();
    if let Some(seed) = seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        counts = counts.iter().map(|&m| poisson(&mut rng, m)).collect();
    }
    DecayTrace::new(time, counts)
}

/// Parameters of a synthetic pulsed correlation histogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct G2Spec {
    pub rep_period_ns: f64,
    /// Peaks at orders `-orders..=orders`.
    pub orders: i64,
    /// Expected coincidences in each side peak.
    pub side_area: f64,
    /// Central-to-side area ratio.
    pub ratio: f64,
    /// Decay constant of the two-sided exponential peak shape.
    pub peak_tau_ns: f64,
    pub bin_ns: f64,
    /// Flat coincidence background per bin.
    pub background: f64,
}

impl G2Spec {
    pub fn expected(&self) -> (Vec<f64>, Vec<f64>) {
        let p = self.rep_period_ns;
        let span = (self.orders as f64 + 0.5) * p;
        let n = (2.0 * span / self.bin_ns).round() as usize;
        let start = -0.5 * n as f64 * self.bin_ns;
        let tau = self.peak_tau_ns;
        // Cumulative of the unit-area two-sided exponential.
        let cdf = |x: f64| {
            if x < 0.0 {
                0.5 * (x / tau).exp()
            } else {
                1.0 - 0.5 * (-x / tau).exp()
            }
        };
        let delays: Vec<f64> = (0..n)
            .map(|i| start + (i as f64 + 0.5) * self.bin_ns)
            .collect();
        let counts = delays
            .iter()
            .map(|&d| {
                let (a, b) = (d - 0.5 * self.bin_ns, d + 0.5 * self.bin_ns);
                let peaks: f64 = (-self.orders - 1..=self.orders + 1)
                    .map(|m| {
                        let c = m as f64 * p;
                        let area = if m == 0 {
                            self.ratio * self.side_area
                        } else {
                            self.side_area
                        };
                        area * (cdf(b - c) - cdf(a - c))
                    })
                    .sum();
                peaks + self.background
            })
            .collect();
        (delays, counts)
    }
}

pub fn g2_histogram(spec: &G2Spec, seed: Option<u64>) -> Result<G2Histogram> {
    let (delays, mut counts) = spec.expected();
    if let Some(seed) = seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        counts = counts.iter().map(|&m| poisson(&mut rng, m)).collect();
    }
    G2Histogram::new(delays, counts, spec.rep_period_ns)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_index_comb_has_the_fsr_spacing() {
        let c = fsr_centers(737.0, 740.0, 51.0 * 261.0, |_| 72.9).unwrap();
        assert!(c.len() > 5);
        for w in c.windows(2) {
            let ng = w[0] * w[1] / (2.0 * 51.0 * 261.0 * (w[1] - w[0]));
            assert!((ng - 72.9).abs() < 1e-9);
        }
        assert!((c[1] - c[0] - 0.28).abs() < 0.001);
    }

    #[test]
    fn seeds_are_reproducible() {
        let spec = DecaySpec {
            tau_ns: 1.0,
            peak_counts: 100.0,
            offset: 1.0,
            bin_ns: 0.1,
            bins: 50,
            peak_bin: 5,
        };
        assert_eq!(
            decay_trace(&spec, Some(4)).unwrap(),
            decay_trace(&spec, Some(4)).unwrap()
        );
        assert_ne!(
            decay_trace(&spec, Some(4)).unwrap(),
            decay_trace(&spec, Some(5)).unwrap()
        );
    }

    #[test]
    fn g2_expected_areas() {
        let spec = G2Spec {
            rep_period_ns: 12.82,
            orders: 4,
            side_area: 1000.0,
            ratio: 0.5,
            peak_tau_ns: 1.0,
            bin_ns: 0.05,
            background: 0.0,
        };
        let (_, counts) = spec.expected();
        let total: f64 = counts.iter().sum();
        // nine full peaks plus the tails of the two just outside
        assert!((total - 8.5 * 1000.0).abs() < 1.0, "{total}");
    }
}
