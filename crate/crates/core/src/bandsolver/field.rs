use faer::{c64, Col, ColRef, Mat};

use super::operator::shifted;
use super::Parity;
use crate::error::{Error, Result};
use crate::geometry::{EpsilonGrid, EpsilonOperator, Grid2D, PlaneWaveBasis};

/// Plane-wave coefficients of `Hz` and of the displacement field
/// `D = (dHz/dy, -dHz/dx)` for one Bloch mode.
#[derive(Debug, Clone)]
pub struct SpectralField {
    k: [f64; 2],
    vectors: Vec<[f64; 2]>,
    hz: Vec<c64>,
    dx: Vec<c64>,
    dy: Vec<c64>,
}

impl SpectralField {
    pub fn new(eigvec: ColRef<'_, c64>, basis: &PlaneWaveBasis, k: [f64; 2]) -> Result<Self> {
        if eigvec.nrows() != basis.len() {
            return Err(Error::Precondition(format!(
                "eigenvector has {} entries, basis has {}",
                eigvec.nrows(),
                basis.len()
            )));
        }
        let q = shifted(basis, k);
        let i = c64::new(0.0, 1.0);
        let hz: Vec<c64> = (0..basis.len()).map(|n| eigvec[n]).collect();
        let dx = hz.iter().zip(&q).map(|(h, q)| i * q[1] * h).collect();
        let dy = hz.iter().zip(&q).map(|(h, q)| -i * q[0] * h).collect();
        Ok(Self {
            k,
            vectors: basis.vectors().to_vec(),
            hz,
            dx,
            dy,
        })
    }

    fn sum(&self, coeff: &[c64], p: [f64; 2]) -> c64 {
        let mut acc = c64::new(0.0, 0.0);
        for (c, g) in coeff.iter().zip(&self.vectors) {
            let ph = (self.k[0] + g[0]) * p[0] + (self.k[1] + g[1]) * p[1];
            acc += c * c64::new(ph.cos(), ph.sin());
        }
        acc
    }

    pub fn hz_at(&self, p: [f64; 2]) -> c64 {
        self.sum(&self.hz, p)
    }

    /// In-plane displacement field `(Dx, Dy)` at `p`.
    pub fn d_at(&self, p: [f64; 2]) -> [c64; 2] {
        [self.sum(&self.dx, p), self.sum(&self.dy, p)]
    }

    /// Evaluates `Hz`, `Dx`, `Dy` on every grid point. Terms are grouped by
    /// `G_x`, which makes the sum separable in `x` and `y`.
    fn on_grid(&self, grid: &Grid2D) -> [Vec<c64>; 3] {
        let mut order: Vec<usize> = (0..self.vectors.len()).collect();
        order.sort_by(|&a, &b| self.vectors[a][0].total_cmp(&self.vectors[b][0]));
        let scale = self
            .vectors
            .iter()
            .map(|g| g[0].abs())
            .fold(0.0, f64::max)
            .max(1.0);
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for &i in &order {
            match groups.last_mut() {
                Some(g) if (self.vectors[g[0]][0] - self.vectors[i][0]).abs() <= 1e-12 * scale => {
                    g.push(i)
                }
                _ => groups.push(vec![i]),
            }
        }
        let mut out = [
            vec![c64::new(0.0, 0.0); grid.len()],
            vec![c64::new(0.0, 0.0); grid.len()],
            vec![c64::new(0.0, 0.0); grid.len()],
        ];
        let coeffs = [&self.hz, &self.dx, &self.dy];
        let mut partial = vec![[c64::new(0.0, 0.0); 3]; grid.ny];
        for group in &groups {
            partial
                .iter_mut()
                .for_each(|p| *p = [c64::new(0.0, 0.0); 3]);
            for &n in group {
                let gy = self.k[1] + self.vectors[n][1];
                for (iy, acc) in partial.iter_mut().enumerate() {
                    let ph = gy * grid.y(iy);
                    let e = c64::new(ph.cos(), ph.sin());
                    for c in 0..3 {
                        acc[c] += coeffs[c][n] * e;
                    }
                }
            }
            let gx = self.k[0] + self.vectors[group[0]][0];
            for ix in 0..grid.nx {
                let ph = gx * grid.x(ix);
                let e = c64::new(ph.cos(), ph.sin());
                for (iy, acc) in partial.iter().enumerate() {
                    let idx = grid.index(ix, iy);
                    for c in 0..3 {
                        out[c][idx] += acc[c] * e;
                    }
                }
            }
        }
        out
    }
}

/// In-plane mode field on one supercell period, scaled so that
/// `max |E| = 1`.
#[derive(Debug, Clone)]
pub struct ModeField {
    pub grid: Grid2D,
    pub k: [f64; 2],
    pub hz: Vec<c64>,
    pub ex: Vec<c64>,
    pub ey: Vec<c64>,
}

impl ModeField {
    pub fn intensity(&self, i: usize) -> f64 {
        self.ex[i].norm_sqr() + self.ey[i].norm_sqr()
    }
}

/// Rebuilds `Hz` and `E = D / eps(r)` for an eigenvector on the grid of
/// `eps_grid`.
pub fn reconstruct_field(
    eigvec: ColRef<'_, c64>,
    basis: &PlaneWaveBasis,
    k: [f64; 2],
    eps_grid: &EpsilonGrid,
) -> Result<ModeField> {
    let spectral = SpectralField::new(eigvec, basis, k)?;
    let [mut hz, mut ex, mut ey] = spectral.on_grid(&eps_grid.grid);
    for (i, &eps) in eps_grid.values.iter().enumerate() {
        ex[i] /= eps;
        ey[i] /= eps;
    }
    let peak = ex
        .iter()
        .zip(&ey)
        .map(|(x, y)| (x.norm_sqr() + y.norm_sqr()).sqrt())
        .fold(0.0, f64::max);
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::Numerical(
            "mode has no in-plane electric field".into(),
        ));
    }
    for v in hz.iter_mut().chain(ex.iter_mut()).chain(ey.iter_mut()) {
        *v /= peak;
    }
    Ok(ModeField {
        grid: eps_grid.grid,
        k,
        hz,
        ex,
        ey,
    })
}

/// Plane-wave coefficients of `Ey = -eta * (k_x + G_x) h`, up to a constant.
fn ey_coefficients(
    eigvec: ColRef<'_, c64>,
    basis: &PlaneWaveBasis,
    eps: &EpsilonOperator,
    kx: f64,
) -> Col<c64> {
    let q = Col::from_fn(basis.len(), |i| eigvec[i] * (kx + basis.vectors()[i][0]));
    eps.eta_matrix() * q
}

/// Mirror overlap `s = <Ey, M Ey> / <Ey, Ey>` with `M: y -> -y`.
pub fn mirror_overlap(
    eigvec: ColRef<'_, c64>,
    basis: &PlaneWaveBasis,
    eps: &EpsilonOperator,
    kx: f64,
) -> Result<f64> {
    if eigvec.nrows() != basis.len() || eps.dim() != basis.len() {
        return Err(Error::Precondition(
            "eigenvector, basis and operator sizes differ".into(),
        ));
    }
    let mirror = basis
        .mirror_map()
        .ok_or_else(|| Error::Precondition("basis is not closed under y -> -y".into()))?;
    let ey = ey_coefficients(eigvec, basis, eps, kx);
    Ok(overlap(ey.as_ref(), &mirror))
}

fn overlap(ey: ColRef<'_, c64>, mirror: &[usize]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &j) in mirror.iter().enumerate() {
        num += (ey[i].conj() * ey[j]).re;
        den += ey[i].norm_sqr();
    }
    if den <= 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Parity of `Ey` under `y -> -y`; modes whose overlap falls between the
/// thresholds are left unclassified.
pub fn classify_parity(
    eigvec: ColRef<'_, c64>,
    basis: &PlaneWaveBasis,
    eps: &EpsilonOperator,
    kx: f64,
) -> Result<Parity> {
    Ok(Parity::from_overlap(mirror_overlap(
        eigvec, basis, eps, kx,
    )?))
}

/// Parities of every column of `vectors`, sharing one matrix product.
pub(crate) fn classify_all(
    vectors: &Mat<c64>,
    basis: &PlaneWaveBasis,
    eps: &EpsilonOperator,
    kx: f64,
    mirror: &[usize],
) -> Vec<(Parity, f64)> {
    let q = Mat::from_fn(vectors.nrows(), vectors.ncols(), |i, c| {
        vectors[(i, c)] * (kx + basis.vectors()[i][0])
    });
    let ey = eps.eta_matrix() * q;
    (0..ey.ncols())
        .map(|c| {
            let s = overlap(ey.col(c), mirror);
            (Parity::from_overlap(s), s)
        })
        .collect()
}
