//! Group index, band gaps and wavelength mapping.

use faer::{c64, Col, ColRef};
use serde::{Deserialize, Serialize};

use crate::bandsolver::{
    band_sweep, bulk_band_sweep, effective_index, BandStructure, BlochK, Parity, SolverParams,
};
use crate::error::{Error, Result};
use crate::geometry::{EpsilonOperator, PlaneWaveBasis, WaveguideGeometry};

/// Group velocities below this fraction of `c` count as divergent `n_g`.
pub const DIVERGENCE_VELOCITY: f64 = 1e-12;

/// Smallest gap, relative to its center, reported by [`detect_gap`].
pub const MIN_RELATIVE_GAP: f64 = 1e-3;

/// `lambda = a / (a/lambda) + offset`.
pub fn to_wavelength(a_nm: f64, a_over_lambda: f64, offset_nm: f64) -> Result<f64> {
    if !(a_over_lambda > 0.0 && a_over_lambda.is_finite()) {
        return Err(Error::param(
            "a_over_lambda",
            format!("must be positive, got {a_over_lambda}"),
        ));
    }
    Ok(a_nm / a_over_lambda + offset_nm)
}

/// Finite-difference group index at one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdPoint {
    pub k_norm: f64,
    pub a_over_lambda: f64,
    /// `|dk/d(a/lambda)|`; infinite where the stencil slope vanishes.
    pub n_g: f64,
    /// The frequency is not monotone across the stencil, so the value
    /// straddles a band extremum.
    pub non_monotone: bool,
}

/// `n_g = |d k_norm / d(a/lambda)|` by second-order differences on a
/// possibly non-uniform grid, one-sided at the ends.
pub fn group_index_fd(k_norm: &[f64], a_over_lambda: &[f64]) -> Result<Vec<FdPoint>> {
    let n = k_norm.len();
    if n < 3 || a_over_lambda.len() != n {
        return Err(Error::Precondition(format!(
            "need at least 3 matching samples, got {} k and {} frequencies",
            n,
            a_over_lambda.len()
        )));
    }
    if k_norm.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition(
            "k samples must be strictly increasing".into(),
        ));
    }
    let (k, f) = (k_norm, a_over_lambda);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Stencil centers: interior points use i-1, i, i+1.
        let c = i.clamp(1, n - 2);
        let (x0, x1, x2) = (k[c - 1], k[c], k[c + 1]);
        let (f0, f1, f2) = (f[c - 1], f[c], f[c + 1]);
        let x = k[i];
        // Derivative of the quadratic through the three points, at x.
        let w0 = (2.0 * x - x1 - x2) / ((x0 - x1) * (x0 - x2));
        let w1 = (2.0 * x - x0 - x2) / ((x1 - x0) * (x1 - x2));
        let w2 = (2.0 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
        let slope = w0 * f0 + w1 * f1 + w2 * f2;
        let (d0, d1) = (f1 - f0, f2 - f1);
        out.push(FdPoint {
            k_norm: x,
            a_over_lambda: f[i],
            n_g: 1.0 / slope.abs(),
            non_monotone: d0 * d1 <= 0.0,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GroupIndex {
    /// `velocity` is the signed group velocity in units of `c`.
    Finite {
        n_g: f64,
        velocity: f64,
    },
    Divergent,
}

impl GroupIndex {
    pub fn value(self) -> Option<f64> {
        match self {
            GroupIndex::Finite { n_g, .. } => Some(n_g),
            GroupIndex::Divergent => None,
        }
    }
}

/// Group index from the eigenvector by first-order perturbation in `kx`.
///
/// At time-reversal invariant points (`2k` a reciprocal lattice vector, such
/// as the zone edge) the slope vanishes by symmetry and the result is
/// [`GroupIndex::Divergent`]; the basis truncation would otherwise leave a
/// small spurious velocity there.
pub fn group_index_hf(
    eigvec: ColRef<'_, c64>,
    eps: &EpsilonOperator,
    basis: &PlaneWaveBasis,
    k: BlochK,
) -> Result<GroupIndex> {
    let n = basis.len();
    if eigvec.nrows() != n || eps.dim() != n {
        return Err(Error::Precondition(
            "eigenvector, basis and operator sizes differ".into(),
        ));
    }
    if basis.lattice_coordinates([2.0 * k.kx, 0.0]).is_some() {
        return Ok(GroupIndex::Divergent);
    }
    let g = basis.vectors();
    let qx = Col::from_fn(n, |i| eigvec[i] * (k.kx + g[i][0]));
    let qy = Col::from_fn(n, |i| eigvec[i] * g[i][1]);
    let eta = eps.eta_matrix();
    let eta_h = eta * eigvec;
    let eta_qx = eta * &qx;
    let eta_qy = eta * &qy;
    let mu = (qx.adjoint() * &eta_qx).re + (qy.adjoint() * &eta_qy).re;
    let dmu = 2.0 * (qx.adjoint() * &eta_h).re;
    if !(mu > 0.0) {
        return Err(Error::Numerical(format!("non-positive eigenvalue {mu:e}")));
    }
    let velocity = dmu / (2.0 * mu.sqrt());
    if velocity.abs() < DIVERGENCE_VELOCITY {
        return Ok(GroupIndex::Divergent);
    }
    Ok(GroupIndex::Finite {
        n_g: 1.0 / velocity.abs(),
        velocity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupIndexPoint {
    pub wavelength_nm: f64,
    pub a_over_lambda: f64,
    pub k_norm: f64,
    pub n_g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupIndexCurve {
    pub band_label: Parity,
    pub points: Vec<GroupIndexPoint>,
    /// k samples where the group velocity vanished; excluded from `points`.
    pub divergent_k: Vec<f64>,
    /// Finite-difference points whose stencil straddles an extremum.
    pub flagged_k: Vec<f64>,
}

impl GroupIndexCurve {
    pub fn max_n_g(&self) -> Option<&GroupIndexPoint> {
        self.points.iter().max_by(|a, b| a.n_g.total_cmp(&b.n_g))
    }

    /// Frequency where `n_g` first reaches `target` going up in `k`,
    /// linearly interpolated between samples.
    pub fn a_over_lambda_at(&self, target: f64) -> Option<f64> {
        self.points.windows(2).find_map(|w| {
            let (p, q) = (w[0], w[1]);
            if (p.n_g - target) * (q.n_g - target) <= 0.0 && p.n_g != q.n_g {
                let t = (target - p.n_g) / (q.n_g - p.n_g);
                Some(p.a_over_lambda + t * (q.a_over_lambda - p.a_over_lambda))
            } else {
                None
            }
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupIndexMethod {
    FiniteDifference,
    #[default]
    HellmannFeynman,
}

/// Group-index curve along one tracked band.
pub fn group_index_curve(
    bands: &BandStructure,
    band: usize,
    method: GroupIndexMethod,
    offset_nm: f64,
) -> Result<GroupIndexCurve> {
    let a = bands.model.lattice_constant();
    let k_norm = bands.k_norms();
    let freq = bands.band_frequencies(band);
    let mut curve = GroupIndexCurve {
        band_label: bands.bands[band].parity,
        points: Vec::new(),
        divergent_k: Vec::new(),
        flagged_k: Vec::new(),
    };
    match method {
        GroupIndexMethod::FiniteDifference => {
            for p in group_index_fd(&k_norm, &freq)? {
                if p.non_monotone {
                    curve.flagged_k.push(p.k_norm);
                }
                if p.n_g.is_finite() {
                    curve.points.push(GroupIndexPoint {
                        wavelength_nm: to_wavelength(a, p.a_over_lambda, offset_nm)?,
                        a_over_lambda: p.a_over_lambda,
                        k_norm: p.k_norm,
                        n_g: p.n_g,
                    });
                } else {
                    curve.divergent_k.push(p.k_norm);
                }
            }
        }
        GroupIndexMethod::HellmannFeynman => {
            let model = &bands.model;
            for (i, p) in bands.points.iter().enumerate() {
                let (mode, v) = bands.band_mode(band, i);
                match group_index_hf(v, model.epsilon(), model.basis(), p.k)? {
                    GroupIndex::Finite { n_g, .. } => curve.points.push(GroupIndexPoint {
                        wavelength_nm: to_wavelength(a, mode.a_over_lambda, offset_nm)?,
                        a_over_lambda: mode.a_over_lambda,
                        k_norm: p.k_norm,
                        n_g,
                    }),
                    GroupIndex::Divergent => curve.divergent_k.push(p.k_norm),
                }
            }
        }
    }
    Ok(curve)
}

/// Band gap of the defect-free lattice, in a/lambda.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapReport {
    pub gap_lo: f64,
    pub gap_hi: f64,
    /// Zero-based index of the band below the gap.
    pub band_below: usize,
}

impl GapReport {
    pub fn midgap(&self) -> f64 {
        0.5 * (self.gap_lo + self.gap_hi)
    }

    pub fn width(&self) -> f64 {
        self.gap_hi - self.gap_lo
    }

    pub fn contains(&self, a_over_lambda: f64) -> bool {
        a_over_lambda > self.gap_lo && a_over_lambda < self.gap_hi
    }
}

/// Largest window between consecutive bands that no k sample enters.
/// `frequencies[k]` lists the bands at one k in ascending order. Returns
/// `None` when no window exceeds [`MIN_RELATIVE_GAP`].
pub fn detect_gap(frequencies: &[Vec<f64>]) -> Option<GapReport> {
    let n_bands = frequencies.iter().map(Vec::len).min()?;
    let mut best: Option<GapReport> = None;
    for b in 0..n_bands.saturating_sub(1) {
        let lo = frequencies
            .iter()
            .map(|f| f[b])
            .fold(f64::NEG_INFINITY, f64::max);
        let hi = frequencies
            .iter()
            .map(|f| f[b + 1])
            .fold(f64::INFINITY, f64::min);
        if hi - lo <= MIN_RELATIVE_GAP * 0.5 * (hi + lo) {
            continue;
        }
        if best.is_none_or(|g| hi - lo > g.width()) {
            best = Some(GapReport {
                gap_lo: lo,
                gap_hi: hi,
                band_below: b,
            });
        }
    }
    best
}

/// Part of a tracked supercell band that lies inside the bulk gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GuidedWindow {
    pub band: usize,
    pub parity: Parity,
    pub lo: f64,
    pub hi: f64,
    pub points_in_gap: usize,
}

/// Every tracked band with at least one sample inside `gap`.
pub fn guided_windows(bands: &BandStructure, gap: &GapReport) -> Vec<GuidedWindow> {
    (0..bands.bands.len())
        .filter_map(|b| {
            let inside: Vec<f64> = bands
                .band_frequencies(b)
                .into_iter()
                .filter(|&f| gap.contains(f))
                .collect();
            if inside.is_empty() {
                return None;
            }
            Some(GuidedWindow {
                band: b,
                parity: bands.bands[b].parity,
                lo: inside.iter().copied().fold(f64::INFINITY, f64::min),
                hi: inside.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                points_in_gap: inside.len(),
            })
        })
        .collect()
}

/// The even and odd band with the most samples inside the gap.
pub fn guided_pair(windows: &[GuidedWindow]) -> (Option<GuidedWindow>, Option<GuidedWindow>) {
    let pick = |parity| {
        windows
            .iter()
            .filter(|w| w.parity == parity)
            .max_by_key(|w| w.points_in_gap)
            .copied()
    };
    (pick(Parity::Even), pick(Parity::Odd))
}


/// Band sweep together with the bulk gap and the gap-guided bands found in
/// it.
#[derive(Debug, Clone)]
pub struct GuidedModes {
    pub bands: BandStructure,
    /// `None` when the defect-free lattice has no TE gap (e.g. `r = 0`).
    pub gap: Option<GapReport>,
    pub windows: Vec<GuidedWindow>,
    pub even: Option<GuidedWindow>,
    pub odd: Option<GuidedWindow>,
}

/// Runs the supercell sweep over `params.k_path()` and classifies the bands
/// guided inside the bulk gap.
pub fn guided_modes(geom: &WaveguideGeometry, params: &SolverParams) -> Result<GuidedModes> {
    params.validate()?;
    let n_eff = effective_index(geom, params)?;
    let bulk = bulk_band_sweep(
        geom,
        n_eff,
        params.bulk_cutoff,
        params.bulk_points_per_segment,
        4,
    )?;
    let gap = detect_gap(&bulk.frequencies);
    let bands = band_sweep(geom, params, &params.k_path())?;
    let windows = gap.map(|g| guided_windows(&bands, &g)).unwrap_or_default();
    let (even, odd) = guided_pair(&windows);
    Ok(GuidedModes {
        bands,
        gap,
        windows,
        even,
        odd,
    })
}
