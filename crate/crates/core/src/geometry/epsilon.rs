use std::f64::consts::PI;

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use super::basis::combine;
use super::{PlaneWaveBasis, Supercell, WaveguideGeometry};
use crate::error::{Error, Result};
use crate::linalg;

/// How the inverse permittivity `eta` is built from the truncated basis.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorizationRule {
    /// `eta` is the matrix inverse of the truncated `eps(G - G')` matrix.
    #[default]
    Inverse,
    /// `eta(G - G')` are the exact Fourier coefficients of `1/eps(r)`.
    /// Slower to converge for high-contrast holes but variational in the
    /// cutoff, which the monotonicity checks rely on.
    Laurent,
}

/// Fourier-space permittivity and its inverse over a plane-wave basis.
#[derive(Debug, Clone)]
pub struct EpsilonOperator {
    eps: Mat<c64>,
    eta: Mat<c64>,
    real: bool,
    rule: FactorizationRule,
}

impl EpsilonOperator {
    /// Fills `eps[i][j] = coeff(G_i - G_j)` and inverts it.
    pub fn from_fourier<F>(basis: &PlaneWaveBasis, coeff: F) -> Result<Self>
    where
        F: Fn([f64; 2]) -> c64,
    {
        let table = DifferenceTable::build(basis, coeff);
        let eps = table.fill(basis);
        let real = table.is_real();
        let eta = linalg::hpd_inverse(eps.as_ref(), real, "permittivity matrix")?;
        Ok(Self {
            eps,
            eta,
            real,
            rule: FactorizationRule::Inverse,
        })
    }

    /// Uses separate closed forms for `eps` and `1/eps`.
    pub fn from_fourier_pair<F, H>(
        basis: &PlaneWaveBasis,
        eps_coeff: F,
        eta_coeff: H,
    ) -> Result<Self>
    where
        F: Fn([f64; 2]) -> c64,
        H: Fn([f64; 2]) -> c64,
    {
        let e = DifferenceTable::build(basis, eps_coeff);
        let h = DifferenceTable::build(basis, eta_coeff);
        Ok(Self {
            eps: e.fill(basis),
            eta: h.fill(basis),
            real: e.is_real() && h.is_real(),
            rule: FactorizationRule::Laurent,
        })
    }

    pub fn eps_matrix(&self) -> MatRef<'_, c64> {
        self.eps.as_ref()
    }

    pub fn eta_matrix(&self) -> MatRef<'_, c64> {
        self.eta.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.eps.nrows()
    }

    /// True when every Fourier coefficient is real, which holds for
    /// inversion-symmetric hole layouts.
    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn rule(&self) -> FactorizationRule {
        self.rule
    }
}

/// Coefficients over the rectangle of index differences spanned by a basis,
/// so each distinct `G - G'` is evaluated once.
struct DifferenceTable {
    lo: [i32; 2],
    span: [usize; 2],
    values: Vec<c64>,
}

impl DifferenceTable {
    fn build<F: Fn([f64; 2]) -> c64>(basis: &PlaneWaveBasis, coeff: F) -> Self {
        let mut min = [i32::MAX; 2];
        let mut max = [i32::MIN; 2];
        for m in basis.indices() {
            for c in 0..2 {
                min[c] = min[c].min(m[c]);
                max[c] = max[c].max(m[c]);
            }
        }
        let lo = [min[0] - max[0], min[1] - max[1]];
        let span = [
            (2 * (max[0] - min[0]) + 1) as usize,
            (2 * (max[1] - min[1]) + 1) as usize,
        ];
        let recip = basis.reciprocal();
        let mut values = Vec::with_capacity(span[0] * span[1]);
        for d1 in 0..span[0] {
            for d2 in 0..span[1] {
                let m = [lo[0] + d1 as i32, lo[1] + d2 as i32];
                values.push(coeff(combine(recip, m)));
            }
        }
        let mut table = Self { lo, span, values };
        table.enforce_conjugate_symmetry();
        table
    }

    fn slot(&self, m: [i32; 2]) -> usize {
        (m[0] - self.lo[0]) as usize * self.span[1] + (m[1] - self.lo[1]) as usize
    }

    // The range is symmetric about zero, so -m is always present.
    fn enforce_conjugate_symmetry(&mut self) {
        for i in 0..self.values.len() {
            let d1 = (i / self.span[1]) as i32 + self.lo[0];
            let d2 = (i % self.span[1]) as i32 + self.lo[1];
            let j = self.slot([-d1, -d2]);
            if j < i {
                continue;
            }
            let avg = 0.5 * (self.values[i] + self.values[j].conj());
            self.values[i] = avg;
            self.values[j] = avg.conj();
        }
        if self.is_real() {
            for v in &mut self.values {
                v.im = 0.0;
            }
        }
    }

    fn is_real(&self) -> bool {
        let scale = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        self.values.iter().all(|v| v.im.abs() <= 1e-13 * scale)
    }

    fn fill(&self, basis: &PlaneWaveBasis) -> Mat<c64> {
        let idx = basis.indices();
        Mat::from_fn(idx.len(), idx.len(), |i, j| {
            self.values[self.slot([idx[i][0] - idx[j][0], idx[i][1] - idx[j][1]])]
        })
    }
}

/// Fourier coefficient of a lattice of disks of index `n_hole` in a
/// background of index `n_bg`, raised to power `p` (`p = 1` gives the
/// permittivity, `p = -1` the inverse permittivity).
fn disk_coefficient(
    cell: &Supercell,
    radius: f64,
    n_bg: f64,
    n_hole: f64,
    p: i32,
    g: [f64; 2],
) -> c64 {
    let bg = (n_bg * n_bg).powi(p);
    let hole = (n_hole * n_hole).powi(p);
    let gr = g[0].hypot(g[1]) * radius;
    // Same tolerance as the basis closure checks; exact zero is the common case.
    let is_zero = g[0].abs() < 1e-12 && g[1].abs() < 1e-12;
    let form = if gr < 1e-8 {
        1.0 - gr * gr / 8.0
    } else {
        2.0 * libm::j1(gr) / gr
    };
    let fill = PI * radius * radius / cell.area() * form;
    let mut structure = c64::new(0.0, 0.0);
    for c in &cell.hole_centers {
        let phase = -(g[0] * c[0] + g[1] * c[1]);
        structure += c64::new(phase.cos(), phase.sin());
    }
    let delta = if is_zero { bg } else { 0.0 };
    c64::new(delta, 0.0) + structure * ((hole - bg) * fill)
}

fn check_index(geom: &WaveguideGeometry, n_eff: f64) -> Result<()> {
    if !(n_eff.is_finite() && n_eff > geom.n_clad && n_eff <= geom.n_bulk) {
        return Err(Error::param(
            "n_eff",
            format!(
                "must lie in ({}, {}], got {n_eff}",
                geom.n_clad, geom.n_bulk
            ),
        ));
    }
    Ok(())
}

/// Permittivity operator of the hole lattice in a background of index `n_eff`,
/// with the inverse-rule `eta`.
pub fn epsilon_fourier(
    cell: &Supercell,
    geom: &WaveguideGeometry,
    basis: &PlaneWaveBasis,
    n_eff: f64,
) -> Result<EpsilonOperator> {
    epsilon_fourier_with_rule(cell, geom, basis, n_eff, FactorizationRule::Inverse)
}

pub fn epsilon_fourier_with_rule(
    cell: &Supercell,
    geom: &WaveguideGeometry,
    basis: &PlaneWaveBasis,
    n_eff: f64,
    rule: FactorizationRule,
) -> Result<EpsilonOperator> {
    check_index(geom, n_eff)?;
    let r = geom.hole_radius_nm;
    let n_clad = geom.n_clad;
    match rule {
        FactorizationRule::Inverse => {
            EpsilonOperator::from_fourier(basis, |g| disk_coefficient(cell, r, n_eff, n_clad, 1, g))
        }
        FactorizationRule::Laurent => EpsilonOperator::from_fourier_pair(
            basis,
            |g| disk_coefficient(cell, r, n_eff, n_clad, 1, g),
            |g| disk_coefficient(cell, r, n_eff, n_clad, -1, g),
        ),
    }
}

/// Uniform pixel grid over the fundamental rectangle `[0, a) x [-W/2, W/2)`.
/// Sample `(ix, iy)` sits at the pixel center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub origin: [f64; 2],
    pub spacing: [f64; 2],
}

impl Grid2D {
    pub fn for_cell(cell: &Supercell, px_per_a: usize) -> Self {
        let a = cell.period_x();
        let w = cell.width();
        let nx = px_per_a;
        let ny = ((w / a) * px_per_a as f64).round().max(1.0) as usize;
        Self {
            nx,
            ny,
            origin: [0.0, -0.5 * w],
            spacing: [a / nx as f64, w / ny as f64],
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major with `x` fastest.
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.origin[0] + (ix as f64 + 0.5) * self.spacing[0]
    }

    pub fn y(&self, iy: usize) -> f64 {
        self.origin[1] + (iy as f64 + 0.5) * self.spacing[1]
    }

    pub fn point(&self, ix: usize, iy: usize) -> [f64; 2] {
        [self.x(ix), self.y(iy)]
    }

    pub fn pixel_area(&self) -> f64 {
        self.spacing[0] * self.spacing[1]
    }
}

/// Real-space permittivity sampled on a [`Grid2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonGrid {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

impl EpsilonGrid {
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.index(ix, iy)]
    }
}

/// Binary permittivity map: `n_clad^2` inside holes, `n_eff^2` elsewhere.
pub fn rasterize_epsilon(
    cell: &Supercell,
    geom: &WaveguideGeometry,
    n_eff: f64,
    px_per_a: usize,
) -> Result<EpsilonGrid> {
    if px_per_a < 16 {
        return Err(Error::param(
            "grid_resolution",
            format!("need at least 16 points per lattice constant, got {px_per_a}"),
        ));
    }
    check_index(geom, n_eff)?;
    if cell.lattice_x[1] != 0.0 {
        return Err(Error::param(
            "lattice_x",
            "rasterization needs the first lattice vector along x",
        ));
    }
    let grid = Grid2D::for_cell(cell, px_per_a);
    let (a, w, shift) = (cell.period_x(), cell.width(), cell.lattice_y[0]);
    let r2 = geom.hole_radius_nm.powi(2);
    let (inside, outside) = (geom.n_clad.powi(2), n_eff * n_eff);
    let mut values = vec![outside; grid.len()];
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let p = grid.point(ix, iy);
            let hit = cell.hole_centers.iter().any(|c| {
                // Minimum image: first along the oblique y vector, then along x.
                let mut dy = p[1] - c[1];
                let m = (dy / w).round();
                dy -= m * w;
                let mut dx = p[0] - c[0] - m * shift;
                dx -= (dx / a).round() * a;
                dx * dx + dy * dy < r2
            });
            if hit {
                values[grid.index(ix, iy)] = inside;
            }
        }
    }
    Ok(EpsilonGrid { grid, values })
}
