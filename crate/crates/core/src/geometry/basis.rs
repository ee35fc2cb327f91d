use std::collections::HashMap;

use super::Supercell;
use crate::error::{Error, Result};

/// Truncated set of reciprocal-lattice vectors `G = m1 b1 + m2 b2`.
///
/// Every basis built here contains `G = 0` and is closed under `G -> -G`.
#[derive(Debug, Clone)]
pub struct PlaneWaveBasis {
    reciprocal: [[f64; 2]; 2],
    indices: Vec<[i32; 2]>,
    vectors: Vec<[f64; 2]>,
    lookup: HashMap<[i32; 2], usize>,
}

impl PlaneWaveBasis {
    /// Rectangular cutoff for a cell whose first lattice vector is `(a, 0)`:
    /// `|G_x| <= cutoff * 2 pi / a` and the same bound on `|G_y|`, so the
    /// number of orders along `y` grows with the cell aspect ratio.
    pub fn for_cell(cell: &Supercell, cutoff: u32) -> Result<Self> {
        if cell.lattice_x[1] != 0.0 {
            return Err(Error::param(
                "lattice_x",
                "rectangular cutoff needs the first lattice vector along x",
            ));
        }
        let recip = cell.reciprocal();
        let g_max = cutoff as f64 * 2.0 * std::f64::consts::PI / cell.period_x();
        let slack = 1e-9 * g_max.max(1e-300);
        let p_max = cutoff as i32;
        let mut indices = Vec::new();
        for m1 in -p_max..=p_max {
            let gy0 = m1 as f64 * recip[0][1];
            let b2y = recip[1][1];
            let lo = ((-g_max - slack - gy0) / b2y).ceil() as i32;
            let hi = ((g_max + slack - gy0) / b2y).floor() as i32;
            for m2 in lo..=hi {
                indices.push([m1, m2]);
            }
        }
        Self::from_indices(recip, indices)
    }

    /// All `G` with `|G| <= g_max`.
    pub fn within_radius(reciprocal: [[f64; 2]; 2], g_max: f64) -> Result<Self> {
        // m_i = G . a_i / 2 pi, and |a_1| / 2 pi = |b_2| / |det b|.
        let [b1, b2] = reciprocal;
        let det = (b1[0] * b2[1] - b1[1] * b2[0]).abs();
        if det == 0.0 {
            return Err(Error::param("reciprocal", "vectors are linearly dependent"));
        }
        let m1_max = (g_max * b2[0].hypot(b2[1]) / det).ceil() as i32 + 1;
        let m2_max = (g_max * b1[0].hypot(b1[1]) / det).ceil() as i32 + 1;
        let slack = 1e-9 * g_max.max(1e-300);
        let mut indices = Vec::new();
        for m1 in -m1_max..=m1_max {
            for m2 in -m2_max..=m2_max {
                let g = combine(reciprocal, [m1, m2]);
                if g[0].hypot(g[1]) <= g_max + slack {
                    indices.push([m1, m2]);
                }
            }
        }
        Self::from_indices(reciprocal, indices)
    }

    /// Builds a basis from explicit integer coordinates, rejecting sets that
    /// lack `G = 0`, contain duplicates, or are not closed under negation.
    pub fn from_indices(reciprocal: [[f64; 2]; 2], indices: Vec<[i32; 2]>) -> Result<Self> {
        let mut lookup = HashMap::with_capacity(indices.len());
        for (i, m) in indices.iter().enumerate() {
            if lookup.insert(*m, i).is_some() {
                return Err(Error::param("basis", format!("duplicate index {m:?}")));
            }
        }
        if !lookup.contains_key(&[0, 0]) {
            return Err(Error::param("basis", "must contain G = 0"));
        }
        if let Some(m) = indices
            .iter()
            .find(|m| !lookup.contains_key(&[-m[0], -m[1]]))
        {
            return Err(Error::param(
                "basis",
                format!("not closed under negation: {m:?} present without its negative"),
            ));
        }
        let vectors = indices.iter().map(|&m| combine(reciprocal, m)).collect();
        Ok(Self {
            reciprocal,
            indices,
            vectors,
            lookup,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn reciprocal(&self) -> [[f64; 2]; 2] {
        self.reciprocal
    }

    pub fn indices(&self) -> &[[i32; 2]] {
        &self.indices
    }

    /// Cartesian reciprocal vectors in rad/nm.
    pub fn vectors(&self) -> &[[f64; 2]] {
        &self.vectors
    }

    pub fn position(&self, m: [i32; 2]) -> Option<usize> {
        self.lookup.get(&m).copied()
    }

    pub fn zero_index(&self) -> usize {
        self.lookup[&[0, 0]]
    }

    /// Position of the vector reflected by `y -> -y`, if it is in the basis.
    pub fn mirror_partner(&self, i: usize) -> Option<usize> {
        let g = self.vectors[i];
        self.locate([g[0], -g[1]])
    }

    /// Position of `-G`; always present.
    pub fn negation_partner(&self, i: usize) -> usize {
        let m = self.indices[i];
        self.lookup[&[-m[0], -m[1]]]
    }

    /// Mirror partner of every basis vector, or `None` if the truncation
    /// is not mirror closed.
    pub fn mirror_map(&self) -> Option<Vec<usize>> {
        (0..self.len()).map(|i| self.mirror_partner(i)).collect()
    }

    /// Integer coordinates of `g` in the reciprocal lattice, if it is a
    /// lattice vector (whether or not it is inside the truncation).
    pub fn lattice_coordinates(&self, g: [f64; 2]) -> Option<[i32; 2]> {
        let [b1, b2] = self.reciprocal;
        let det = b1[0] * b2[1] - b1[1] * b2[0];
        let c1 = (g[0] * b2[1] - g[1] * b2[0]) / det;
        let c2 = (b1[0] * g[1] - b1[1] * g[0]) / det;
        let m = [c1.round(), c2.round()];
        if (c1 - m[0]).abs() > 1e-6 || (c2 - m[1]).abs() > 1e-6 {
            return None;
        }
        Some([m[0] as i32, m[1] as i32])
    }

    fn locate(&self, g: [f64; 2]) -> Option<usize> {
        self.lattice_coordinates(g).and_then(|m| self.position(m))
    }
}

pub(crate) fn combine(recip: [[f64; 2]; 2], m: [i32; 2]) -> [f64; 2] {
    let (m1, m2) = (m[0] as f64, m[1] as f64);
    [
        m1 * recip[0][0] + m2 * recip[1][0],
        m1 * recip[0][1] + m2 * recip[1][1],
    ]
}
