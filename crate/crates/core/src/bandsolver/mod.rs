//! TE plane-wave band solver for the waveguide supercell and the bulk lattice.

mod bulk;
mod field;
mod operator;
mod tracking;

pub use bulk::{bulk_band_sweep, BulkBands};
pub use field::{classify_parity, mirror_overlap, reconstruct_field, ModeField, SpectralField};
pub use operator::{assemble_operator, solve_bands, Eigenpairs};
pub use tracking::OVERLAP_THRESHOLD;

use std::f64::consts::PI;
use std::sync::Arc;

use faer::{c64, ColRef, Mat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    build_supercell, epsilon_fourier_with_rule, rasterize_epsilon, slab_effective_index,
    EpsilonGrid, EpsilonOperator, FactorizationRule, PlaneWaveBasis, Supercell, WaveguideGeometry,
};
use crate::linalg;

/// Normalized frequency at which the slab index is first evaluated.
pub const BAND_CENTER_A_OVER_LAMBDA: f64 = 0.37;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    Unclassified,
}

impl Parity {
    pub const THRESHOLD: f64 = 0.9;

    pub fn from_overlap(s: f64) -> Self {
        if s > Self::THRESHOLD {
            Parity::Even
        } else if s < -Self::THRESHOLD {
            Parity::Odd
        } else {
            Parity::Unclassified
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
            Parity::Unclassified => "unclassified",
        }
    }
}

/// Bloch wavevector along the waveguide axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochK {
    /// rad/nm
    pub kx: f64,
}

impl BlochK {
    pub fn from_normalized(k_norm: f64, a_nm: f64) -> Self {
        Self {
            kx: 2.0 * PI * k_norm / a_nm,
        }
    }

    /// `kx a / 2 pi`
    pub fn normalized(self, a_nm: f64) -> f64 {
        self.kx * a_nm / (2.0 * PI)
    }

    pub fn vector(self) -> [f64; 2] {
        [self.kx, 0.0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    /// Plane-wave orders along x; the y range is scaled by the cell aspect ratio.
    pub cutoff: u32,
    pub n_bands: usize,
    pub k_points: usize,
    pub k_min: f64,
    pub k_max: f64,
    /// Fixed 2D background index. `None` derives it from the slab.
    pub n_eff: Option<f64>,
    pub factorization: FactorizationRule,
    /// Orders used for the defect-free primitive cell.
    pub bulk_cutoff: u32,
    pub bulk_points_per_segment: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            cutoff: 7,
            n_bands: 24,
            k_points: 64,
            k_min: 0.25,
            k_max: 0.5,
            n_eff: None,
            factorization: FactorizationRule::Inverse,
            bulk_cutoff: 10,
            bulk_points_per_segment: 16,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if self.cutoff == 0 {
            return Err(Error::param("cutoff", "must be at least 1"));
        }
        if self.n_bands == 0 {
            return Err(Error::param("n_bands", "must be at least 1"));
        }
        if self.k_points == 0 {
            return Err(Error::param("k_points", "must be at least 1"));
        }
        for (name, v) in [("k_min", self.k_min), ("k_max", self.k_max)] {
            if !(0.0..=0.5).contains(&v) {
                return Err(Error::param(name, format!("must lie in [0, 0.5], got {v}")));
            }
        }
        if self.k_min > self.k_max {
            return Err(Error::param("k_min", "must not exceed k_max"));
        }
        if self.bulk_cutoff == 0 || self.bulk_points_per_segment == 0 {
            return Err(Error::param(
                "bulk_cutoff",
                "bulk sampling must be non-empty",
            ));
        }
        Ok(())
    }

    /// Uniform normalized k samples over `[k_min, k_max]`.
    pub fn k_path(&self) -> Vec<f64> {
        if self.k_points == 1 {
            return vec![self.k_max];
        }
        let step = (self.k_max - self.k_min) / (self.k_points - 1) as f64;
        (0..self.k_points)
            .map(|i| {
                if i + 1 == self.k_points {
                    self.k_max
                } else {
                    self.k_min + i as f64 * step
                }
            })
            .collect()
    }
}

/// Background index of the 2D model. The slab index is evaluated at
/// `a/lambda = 0.37`, the bulk gap is located with it, and the slab index
/// is evaluated once more at the midgap wavelength.
pub fn effective_index(geom: &WaveguideGeometry, params: &SolverParams) -> Result<f64> {
    geom.validate()?;
    if let Some(n) = params.n_eff {
        if !(n > geom.n_clad && n <= geom.n_bulk) {
            return Err(Error::param(
                "n_eff",
                format!("must lie in ({}, {}], got {n}", geom.n_clad, geom.n_bulk),
            ));
        }
        return Ok(n);
    }
    let a = geom.lattice_constant_nm;
    let slab = |a_over_lambda: f64| {
        slab_effective_index(
            geom.slab_thickness_nm,
            geom.n_bulk,
            geom.n_clad,
            a / a_over_lambda,
        )
    };
    let n0 = slab(BAND_CENTER_A_OVER_LAMBDA)?;
    if geom.hole_radius_nm == 0.0 {
        return Ok(n0);
    }
    let bulk = bulk_band_sweep(
        geom,
        n0,
        params.bulk_cutoff,
        params.bulk_points_per_segment,
        4,
    )?;
    match crate::dispersion::detect_gap(&bulk.frequencies) {
        Some(gap) => slab(0.5 * (gap.gap_lo + gap.gap_hi)),
        None => Ok(n0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mode {
    pub a_over_lambda: f64,
    /// `(omega / c)^2` in rad^2/nm^2.
    pub mu: f64,
    pub parity: Parity,
    pub mirror_overlap: f64,
}

/// Modes at one k, ascending in frequency, with their eigenvectors as
/// columns of `eigvecs`.
#[derive(Debug, Clone)]
pub struct KPoint {
    pub k_norm: f64,
    pub k: BlochK,
    pub modes: Vec<Mode>,
    pub eigvecs: Mat<c64>,
}

impl KPoint {
    pub fn eigvec(&self, mode: usize) -> ColRef<'_, c64> {
        self.eigvecs.col(mode)
    }
}

/// One band followed across k: `modes[i]` indexes `points[i].modes`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackedBand {
    pub modes: Vec<usize>,
    pub parity: Parity,
}

/// Discretized waveguide: supercell, basis and permittivity operator.
#[derive(Debug, Clone)]
pub struct Waveguide {
    geom: WaveguideGeometry,
    cell: Supercell,
    basis: PlaneWaveBasis,
    eps: EpsilonOperator,
    n_eff: f64,
    mirror: Option<Vec<usize>>,
}

impl Waveguide {
    pub fn new(geom: &WaveguideGeometry, params: &SolverParams) -> Result<Self> {
        params.validate()?;
        let n_eff = effective_index(geom, params)?;
        let cell = build_supercell(geom)?;
        let basis = PlaneWaveBasis::for_cell(&cell, params.cutoff)?;
        let eps = epsilon_fourier_with_rule(&cell, geom, &basis, n_eff, params.factorization)?;
        let mirror = basis
            .mirror_map()
            .filter(|m| eps.is_real() && operator::is_mirror_invariant(eps.eta_matrix(), m, 1e-10));
        Ok(Self {
            geom: *geom,
            cell,
            basis,
            eps,
            n_eff,
            mirror,
        })
    }

    pub fn geometry(&self) -> &WaveguideGeometry {
        &self.geom
    }

    pub fn cell(&self) -> &Supercell {
        &self.cell
    }

    pub fn basis(&self) -> &PlaneWaveBasis {
        &self.basis
    }

    pub fn epsilon(&self) -> &EpsilonOperator {
        &self.eps
    }

    pub fn n_eff(&self) -> f64 {
        self.n_eff
    }

    pub fn lattice_constant(&self) -> f64 {
        self.geom.lattice_constant_nm
    }

    pub fn eps_grid(&self, px_per_a: usize) -> Result<EpsilonGrid> {
        rasterize_epsilon(&self.cell, &self.geom, self.n_eff, px_per_a)
    }

    /// Lowest `n_bands` modes at normalized wavevector `k_norm`.
    pub fn solve_k(&self, k_norm: f64, n_bands: usize) -> Result<KPoint> {
        let a = self.lattice_constant();
        let k = BlochK::from_normalized(k_norm, a);
        let theta = assemble_operator(&self.basis, &self.eps, k.vector())?;
        let (mu, eigvecs) = match &self.mirror {
            Some(mirror) => {
                let real = linalg::real_part(theta.as_ref());
                drop(theta);
                let s = operator::solve_mirror_sectors(real.as_ref(), mirror, n_bands)?;
                merge_sectors(s.even, s.odd, n_bands)
            }
            None => {
                let e = solve_bands(theta.as_ref(), n_bands)?;
                (e.mu, e.vectors)
            }
        };
        let parity: Vec<(Parity, f64)> = match &self.mirror {
            Some(mirror) => field::classify_all(&eigvecs, &self.basis, &self.eps, k.kx, mirror),
            None => match self.basis.mirror_map() {
                Some(m) => field::classify_all(&eigvecs, &self.basis, &self.eps, k.kx, &m),
                None => vec![(Parity::Unclassified, 0.0); mu.len()],
            },
        };
        let modes = mu
            .iter()
            .zip(parity)
            .map(|(&mu, (parity, s))| Mode {
                a_over_lambda: a_over_lambda(mu, a),
                mu,
                parity,
                mirror_overlap: s,
            })
            .collect();
        Ok(KPoint {
            k_norm,
            k,
            modes,
            eigvecs,
        })
    }

    /// Solves every k in parallel, then tracks bands sequentially.
    pub fn band_sweep(self: &Arc<Self>, k_path: &[f64], n_bands: usize) -> Result<BandStructure> {
        if k_path.is_empty() {
            return Err(Error::Precondition("k path is empty".into()));
        }
        if k_path.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Precondition("k path must be monotone in kx".into()));
        }
        let points = k_path
            .par_iter()
            .map(|&k| self.solve_k(k, n_bands))
            .collect::<Result<Vec<_>>>()?;
        let bands = tracking::track(&points);
        Ok(BandStructure {
            model: Arc::clone(self),
            points,
            bands,
        })
    }
}

fn merge_sectors(even: Eigenpairs, odd: Eigenpairs, n_bands: usize) -> (Vec<f64>, Mat<c64>) {
    let mut all: Vec<(f64, bool, usize)> = even
        .mu
        .iter()
        .enumerate()
        .map(|(i, &m)| (m, true, i))
        .chain(odd.mu.iter().enumerate().map(|(i, &m)| (m, false, i)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    all.truncate(n_bands);
    let n = even.vectors.nrows();
    let vectors = Mat::from_fn(n, all.len(), |r, c| {
        let (_, is_even, i) = all[c];
        if is_even {
            even.vectors[(r, i)]
        } else {
            odd.vectors[(r, i)]
        }
    });
    (all.iter().map(|t| t.0).collect(), vectors)
}

/// `a / lambda = (a / 2 pi) sqrt(mu)`; tiny negative round-off maps to 0.
pub fn a_over_lambda(mu: f64, a_nm: f64) -> f64 {
    a_nm / (2.0 * PI) * mu.max(0.0).sqrt()
}

/// Band sweep result over a k path, with the model it was computed on.
#[derive(Debug, Clone)]
pub struct BandStructure {
    pub model: Arc<Waveguide>,
    pub points: Vec<KPoint>,
    pub bands: Vec<TrackedBand>,
}

impl BandStructure {
    pub fn k_norms(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.k_norm).collect()
    }

    pub fn band_frequencies(&self, band: usize) -> Vec<f64> {
        self.bands[band]
            .modes
            .iter()
            .zip(&self.points)
            .map(|(&m, p)| p.modes[m].a_over_lambda)
            .collect()
    }

    pub fn band_mode(&self, band: usize, k_index: usize) -> (&Mode, ColRef<'_, c64>) {
        let p = &self.points[k_index];
        let m = self.bands[band].modes[k_index];
        (&p.modes[m], p.eigvec(m))
    }
}

/// Sweeps the waveguide over `k_path` with the given parameters.
pub fn band_sweep(
    geom: &WaveguideGeometry,
    params: &SolverParams,
    k_path: &[f64],
) -> Result<BandStructure> {
    let model = Arc::new(Waveguide::new(geom, params)?);
    model.band_sweep(k_path, params.n_bands)
}

#[cfg(test)]
mod tests;
