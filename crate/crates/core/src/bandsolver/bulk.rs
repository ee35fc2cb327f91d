use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::{a_over_lambda, assemble_operator, solve_bands};
use crate::error::Result;
use crate::geometry::{epsilon_fourier, PlaneWaveBasis, Supercell, WaveguideGeometry};

/// Bands of the defect-free triangular lattice along Gamma-M-K-Gamma.
#[derive(Debug, Clone, Serialize)]
pub struct BulkBands {
    /// Wavevectors in rad/nm.
    pub path: Vec<[f64; 2]>,
    /// `frequencies[k][band]` in a/lambda, ascending per k.
    pub frequencies: Vec<Vec<f64>>,
}

/// Sweeps the primitive cell of the hole lattice with background index
/// `n_eff`. `cutoff` sets `|G| <= cutoff * 2 pi / a`.
pub fn bulk_band_sweep(
    geom: &WaveguideGeometry,
    n_eff: f64,
    cutoff: u32,
    points_per_segment: usize,
    n_bands: usize,
) -> Result<BulkBands> {
    geom.validate()?;
    let a = geom.lattice_constant_nm;
    let cell = Supercell::triangular_primitive(a);
    let basis = PlaneWaveBasis::within_radius(cell.reciprocal(), cutoff as f64 * 2.0 * PI / a)?;
    let eps = epsilon_fourier(&cell, geom, &basis, n_eff)?;
    let path = gamma_m_k_path(a, points_per_segment);
    let frequencies = path
        .par_iter()
        .map(|&k| {
            let theta = assemble_operator(&basis, &eps, k)?;
            let e = solve_bands(theta.as_ref(), n_bands)?;
            Ok(e.mu.iter().map(|&mu| a_over_lambda(mu, a)).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(BulkBands { path, frequencies })
}

/// High-symmetry loop of the triangular lattice with `a1 = (a, 0)`:
/// `M = (0, 2 pi / (sqrt 3 a))`, `K = (2 pi / a)(1/3, 1/sqrt 3)`.
pub(crate) fn gamma_m_k_path(a: f64, per_segment: usize) -> Vec<[f64; 2]> {
    let s3 = 3f64.sqrt();
    let gamma = [0.0, 0.0];
    let m = [0.0, 2.0 * PI / (s3 * a)];
    let k = [2.0 * PI / (3.0 * a), 2.0 * PI / (s3 * a)];
    let corners = [gamma, m, k, gamma];
    let mut path = Vec::with_capacity(3 * per_segment + 1);
    for w in corners.windows(2) {
        for i in 0..per_segment {
            let t = i as f64 / per_segment as f64;
            path.push([
                w[0][0] + t * (w[1][0] - w[0][0]),
                w[0][1] + t * (w[1][1] - w[0][1]),
            ]);
        }
    }
    path.push(gamma);
    path
}
