//! Line-defect photonic-crystal waveguide geometry.
//!
//! A W1 waveguide is a triangular lattice of air holes in a high-index slab
//! with one row of holes removed. The slab is collapsed to a 2D problem with an
//! effective index (see [`slab_effective_index`]) and modelled with a supercell
//! that is periodic along the waveguide axis `x` and repeats the defect every
//! `2 * rows_per_side + 2` row slots along `y`.

mod basis;
mod epsilon;
mod slab;

pub use basis::PlaneWaveBasis;
pub use epsilon::{
    epsilon_fourier, epsilon_fourier_with_rule, rasterize_epsilon, EpsilonGrid, EpsilonOperator,
    FactorizationRule, Grid2D,
};
pub use slab::{slab_effective_index, slab_transverse_wavenumber};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical parameters of the slab waveguide. Lengths are in nanometres.
/// Missing fields in serialized form take the [`diamond_w1`] values.
///
/// [`diamond_w1`]: WaveguideGeometry::diamond_w1
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveguideGeometry {
    #[serde(rename = "a_nm")]
    pub lattice_constant_nm: f64,
    #[serde(rename = "r_nm")]
    pub hole_radius_nm: f64,
    #[serde(rename = "d_nm")]
    pub slab_thickness_nm: f64,
    pub n_bulk: f64,
    pub n_clad: f64,
    pub rows_per_side: usize,
    /// Emitter depth below the top surface of the slab.
    pub emitter_depth_nm: f64,
}

impl Default for WaveguideGeometry {
    fn default() -> Self {
        Self::diamond_w1()
    }
}

impl WaveguideGeometry {
    /// The fabricated diamond device: a = 261 nm, r = 65 nm, d = 160 nm,
    /// n = 2.4, suspended in air, emitters implanted 40 nm deep.
    pub fn diamond_w1() -> Self {
        Self {
            lattice_constant_nm: 261.0,
            hole_radius_nm: 65.0,
            slab_thickness_nm: 160.0,
            n_bulk: 2.4,
            n_clad: 1.0,
            rows_per_side: 5,
            emitter_depth_nm: 40.0,
        }
    }

    /// Checks every geometric invariant, naming the offending field.
    ///
    /// A hole radius of exactly zero is accepted and describes a uniform
    /// slab; it is the empty-lattice reference used by the oracles.
    pub fn validate(&self) -> Result<()> {
        let a = self.lattice_constant_nm;
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::param("a_nm", format!("must be positive, got {a}")));
        }
        let r = self.hole_radius_nm;
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::param(
                "r_nm",
                format!("must be non-negative, got {r}"),
            ));
        }
        if r >= a / 2.0 {
            return Err(Error::param(
                "r_nm",
                format!("holes overlap along a row: r = {r} >= a/2 = {}", a / 2.0),
            ));
        }
        let d = self.slab_thickness_nm;
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::param("d_nm", format!("must be positive, got {d}")));
        }
        if !(self.n_clad.is_finite() && self.n_clad >= 1.0) {
            return Err(Error::param(
                "n_clad",
                format!("must be at least 1, got {}", self.n_clad),
            ));
        }
        if !(self.n_bulk.is_finite() && self.n_bulk > self.n_clad) {
            return Err(Error::param(
                "n_bulk",
                format!(
                    "must exceed the cladding index {}, got {}",
                    self.n_clad, self.n_bulk
                ),
            ));
        }
        if self.rows_per_side < 3 {
            return Err(Error::param(
                "rows_per_side",
                format!(
                    "at least 3 rows are needed to confine the mode, got {}",
                    self.rows_per_side
                ),
            ));
        }
        let z = self.emitter_depth_nm;
        if !(z.is_finite() && (0.0..=d).contains(&z)) {
            return Err(Error::param(
                "emitter_depth_nm",
                format!("must lie within the slab [0, {d}], got {z}"),
            ));
        }
        Ok(())
    }

    /// Row pitch of the triangular lattice, `sqrt(3)/2 * a`.
    pub fn row_pitch_nm(&self) -> f64 {
        0.5 * 3f64.sqrt() * self.lattice_constant_nm
    }
}

/// Periodic cell holding the hole layout.
///
/// `lattice_x` is always `(a, 0)`. The rectangle `[0, a) x [-W/2, W/2)`
/// with `W = lattice_y[1]` is a fundamental domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Supercell {
    pub lattice_x: [f64; 2],
    pub lattice_y: [f64; 2],
    pub hole_centers: Vec<[f64; 2]>,
}

impl Supercell {
    /// One-hole primitive cell of the defect-free triangular lattice.
    pub fn triangular_primitive(a: f64) -> Self {
        Self {
            lattice_x: [a, 0.0],
            lattice_y: [0.5 * a, 0.5 * 3f64.sqrt() * a],
            hole_centers: vec![[0.0, 0.0]],
        }
    }

    /// Square cell of side `a` with no holes.
    pub fn empty_square(a: f64) -> Self {
        Self {
            lattice_x: [a, 0.0],
            lattice_y: [0.0, a],
            hole_centers: Vec::new(),
        }
    }

    pub fn area(&self) -> f64 {
        (self.lattice_x[0] * self.lattice_y[1] - self.lattice_x[1] * self.lattice_y[0]).abs()
    }

    /// Period along the waveguide axis.
    pub fn period_x(&self) -> f64 {
        self.lattice_x[0]
    }

    /// Extent of the cell transverse to the waveguide.
    pub fn width(&self) -> f64 {
        self.lattice_y[1]
    }

    /// Primitive reciprocal vectors `b1, b2` with `a_i . b_j = 2 pi delta_ij`.
    pub fn reciprocal(&self) -> [[f64; 2]; 2] {
        let [a1, a2] = [self.lattice_x, self.lattice_y];
        let det = a1[0] * a2[1] - a1[1] * a2[0];
        let s = 2.0 * std::f64::consts::PI / det;
        [[a2[1] * s, -a2[0] * s], [-a1[1] * s, a1[0] * s]]
    }

    /// Maps a point into the fundamental rectangle `[0, a) x [-W/2, W/2)`.
    pub fn wrap(&self, p: [f64; 2]) -> [f64; 2] {
        let w = self.width();
        let m = ((p[1] + 0.5 * w) / w).floor();
        let x = p[0] - m * self.lattice_y[0];
        let y = p[1] - m * w;
        let a = self.period_x();
        [x - (x / a).floor() * a, y]
    }
}

/// Builds the W1 supercell: `rows_per_side` rows of holes above and below an
/// empty row at `y = 0`, rows alternately shifted by `a/2`.
///
/// The cell is rectangular with `2N + 2` row slots, so one extra row sits on
/// the cell boundary `y = -W/2` and is shared by neighbouring copies. An odd
/// slot count cannot close the triangular lattice in a rectangle without a
/// stacking fault, and the fault row binds a mode of its own inside the gap.
pub fn build_supercell(geom: &WaveguideGeometry) -> Result<Supercell> {
    geom.validate()?;
    let a = geom.lattice_constant_nm;
    let h = geom.row_pitch_nm();
    let n = geom.rows_per_side as i64;
    let offset = |m: i64| if m.rem_euclid(2) == 1 { 0.5 * a } else { 0.0 };
    let mut hole_centers = Vec::with_capacity(2 * n as usize + 1);
    hole_centers.push([offset(n + 1), -((n + 1) as f64) * h]);
    for m in (-n..=n).filter(|&m| m != 0) {
        hole_centers.push([offset(m), m as f64 * h]);
    }
    Ok(Supercell {
        lattice_x: [a, 0.0],
        lattice_y: [0.0, (2 * n + 2) as f64 * h],
        hole_centers,
    })
}
