//! Emitter-waveguide coupling: mode area, rate enhancement, beta factor and
//! the lifetime-based ZPL Purcell factor.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bandsolver::{reconstruct_field, BandStructure, ModeField};
use crate::dispersion::{group_index_hf, to_wavelength, GroupIndex};
use crate::error::{Error, Result};
use crate::geometry::{slab_transverse_wavenumber, EpsilonGrid, WaveguideGeometry};

/// Silicon-vacancy emitter and environment parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmitterParams {
    pub dipole_axis: [f64; 3],
    pub field_axis: [f64; 3],
    pub debye_waller: f64,
    /// Fraction of the ZPL in the filtered line: 0.452 (C) or 0.325 (B).
    pub branching_fraction: f64,
    pub tau_bulk_ns: f64,
    pub gamma_phc_per_ns: f64,
    pub gamma_bulk_per_ns: f64,
}

impl Default for EmitterParams {
    fn default() -> Self {
        Self {
            dipole_axis: [1.0, 1.0, 1.0],
            field_axis: [1.0, 1.0, 0.0],
            debye_waller: 0.70,
            branching_fraction: 0.452,
            tau_bulk_ns: 1.7,
            gamma_phc_per_ns: 0.38,
            gamma_bulk_per_ns: 0.59,
        }
    }
}

impl EmitterParams {
    pub fn validate(&self) -> Result<()> {
        unit(self.dipole_axis, "dipole_axis")?;
        unit(self.field_axis, "field_axis")?;
        for (name, v) in [
            ("debye_waller", self.debye_waller),
            ("branching_fraction", self.branching_fraction),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::param(name, format!("must lie in (0, 1], got {v}")));
            }
        }
        for (name, v) in [
            ("tau_bulk_ns", self.tau_bulk_ns),
            ("gamma_phc_per_ns", self.gamma_phc_per_ns),
            ("gamma_bulk_per_ns", self.gamma_bulk_per_ns),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// `zeta = debye_waller * branching_fraction`
    pub fn zpl_fraction(&self) -> f64 {
        self.debye_waller * self.branching_fraction
    }
}

fn unit(v: [f64; 3], name: &str) -> Result<[f64; 3]> {
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::param(name, "must be a non-zero finite vector"));
    }
    Ok([v[0] / norm, v[1] / norm, v[2] / norm])
}

/// `S_eff = sum(eps |E|^2 dA) / max(eps |E|^2)` by midpoint quadrature.
pub fn effective_mode_area(field: &ModeField, eps: &EpsilonGrid) -> Result<f64> {
    if field.grid != eps.grid || field.ex.len() != eps.values.len() {
        return Err(Error::Precondition(
            "field and permittivity grids differ".into(),
        ));
    }
    let mut sum = 0.0;
    let mut peak = 0.0f64;
    for (i, &e) in eps.values.iter().enumerate() {
        let w = e * field.intensity(i);
        sum += w;
        peak = peak.max(w);
    }
    if !(peak > 0.0) {
        return Err(Error::Data("field is zero everywhere".into()));
    }
    Ok(sum * eps.grid.pixel_area() / peak)
}

/// `|E(r)|^2 / max |E|^2` at the pixel nearest `point`, folded into the cell.
pub fn local_field_ratio(field: &ModeField, point: [f64; 2]) -> Result<f64> {
    let g = field.grid;
    let peak = (0..g.len()).map(|i| field.intensity(i)).fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::Data("field is zero everywhere".into()));
    }
    let pixel = |x: f64, origin: f64, step: f64, n: usize| {
        let i = ((x - origin) / step).floor() as i64;
        i.rem_euclid(n as i64) as usize
    };
    let ix = pixel(point[0], g.origin[0], g.spacing[0], g.nx);
    let iy = pixel(point[1], g.origin[1], g.spacing[1], g.ny);
    Ok(field.intensity(g.index(ix, iy)) / peak)
}

/// `|f . d|^2` for the normalized field and dipole directions.
pub fn orientation_factor(dipole_axis: [f64; 3], field_axis: [f64; 3]) -> Result<f64> {
    let d = unit(dipole_axis, "dipole_axis")?;
    let f = unit(field_axis, "field_axis")?;
    let dot = d[0] * f[0] + d[1] * f[1] + d[2] * f[2];
    Ok((dot * dot).min(1.0))
}

/// Intensity of the fundamental slab mode at the emitter depth relative to
/// the midplane, `cos^2(kappa (z - d/2))`.
pub fn depth_factor(geom: &WaveguideGeometry, wavelength_nm: f64) -> Result<f64> {
    geom.validate()?;
    let d = geom.slab_thickness_nm;
    let kappa = slab_transverse_wavenumber(d, geom.n_bulk, geom.n_clad, wavelength_nm)?;
    Ok((kappa * (geom.emitter_depth_nm - 0.5 * d)).cos().powi(2))
}

/// Inputs to [`waveguide_rate_enhancement`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateInputs {
    pub n_g: f64,
    pub s_eff_nm2: f64,
    pub wavelength_nm: f64,
    /// Material index `n`.
    pub index: f64,
    pub orientation_factor: f64,
    pub depth_factor: f64,
    /// `|E(r)|^2 / |E_max|^2` at the emitter; 1 at the field maximum.
    pub local_field_ratio: f64,
}

/// `Gamma_wg / Gamma_0 = 3/(4 pi) (lambda/n)^2 / S_eff * n_g / n * factors`.
pub fn waveguide_rate_enhancement(p: &RateInputs) -> Result<f64> {
    for (name, v) in [
        ("n_g", p.n_g),
        ("s_eff_nm2", p.s_eff_nm2),
        ("wavelength_nm", p.wavelength_nm),
        ("index", p.index),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::param(name, format!("must be positive, got {v}")));
        }
    }
    for (name, v) in [
        ("orientation_factor", p.orientation_factor),
        ("depth_factor", p.depth_factor),
        ("local_field_ratio", p.local_field_ratio),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::param(name, format!("must lie in [0, 1], got {v}")));
        }
    }
    let lambda_n = p.wavelength_nm / p.index;
    Ok(
        3.0 / (4.0 * PI) * lambda_n * lambda_n / p.s_eff_nm2 * p.n_g / p.index
            * p.orientation_factor
            * p.depth_factor
            * p.local_field_ratio,
    )
}

/// `beta = gamma_wg / (gamma_wg + gamma_phc)`
pub fn beta_factor(gamma_wg_per_ns: f64, gamma_phc_per_ns: f64) -> Result<f64> {
    if !(gamma_wg_per_ns >= 0.0 && gamma_phc_per_ns >= 0.0)
        || !(gamma_wg_per_ns.is_finite() && gamma_phc_per_ns.is_finite())
    {
        return Err(Error::param(
            "gamma",
            "rates must be finite and non-negative",
        ));
    }
    let total = gamma_wg_per_ns + gamma_phc_per_ns;
    if total == 0.0 {
        return Err(Error::param("gamma", "both rates are zero"));
    }
    Ok(gamma_wg_per_ns / total)
}

/// `F_ZPL = (tau_off / tau_on - 1) / (debye_waller * branching)`. Negative
/// values (suppressed emission) are returned as they are.
pub fn f_zpl(
    tau_off_ns: f64,
    tau_on_ns: f64,
    debye_waller: f64,
    branching_fraction: f64,
) -> Result<f64> {
    check_lifetimes(tau_off_ns, tau_on_ns)?;
    let zeta = zeta(debye_waller, branching_fraction)?;
    Ok((tau_off_ns / tau_on_ns - 1.0) / zeta)
}

/// Inverse of [`f_zpl`]: the on-resonance lifetime giving `f`.
pub fn tau_on_from_f_zpl(
    f: f64,
    tau_off_ns: f64,
    debye_waller: f64,
    branching_fraction: f64,
) -> Result<f64> {
    check_lifetimes(tau_off_ns, 1.0)?;
    let zeta = zeta(debye_waller, branching_fraction)?;
    let ratio = 1.0 + f * zeta;
    if !(ratio > 0.0) {
        return Err(Error::param(
            "f_zpl",
            format!("{f} implies a non-positive lifetime"),
        ));
    }
    Ok(tau_off_ns / ratio)
}

fn check_lifetimes(tau_off: f64, tau_on: f64) -> Result<()> {
    for (name, v) in [("tau_off_ns", tau_off), ("tau_on_ns", tau_on)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::param(name, format!("must be positive, got {v}")));
        }
    }
    Ok(())
}

fn zeta(debye_waller: f64, branching: f64) -> Result<f64> {
    for (name, v) in [
        ("debye_waller", debye_waller),
        ("branching_fraction", branching),
    ] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::param(name, format!("must lie in (0, 1], got {v}")));
        }
    }
    Ok(debye_waller * branching)
}

/// Per-k coupling figures along a band, emitter at the field maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AchievablePoint {
    pub k_norm: f64,
    pub wavelength_nm: f64,
    pub n_g: f64,
    pub s_eff_nm2: f64,
    pub purcell_fp: f64,
    pub beta: f64,
}

/// Solver mode data needed by the coupling figures at one k sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeSample {
    pub k_norm: f64,
    pub a_over_lambda: f64,
    pub n_g: f64,
    pub s_eff_nm2: f64,
}

/// Group index and mode area at every k of `band` with finite group
/// velocity.
pub fn mode_samples(
    bands: &BandStructure,
    band: usize,
    px_per_a: usize,
) -> Result<Vec<ModeSample>> {
    let model = &bands.model;
    let grid = model.eps_grid(px_per_a)?;
    let mut out = Vec::new();
    for (i, p) in bands.points.iter().enumerate() {
        let (mode, v) = bands.band_mode(band, i);
        let GroupIndex::Finite { n_g, .. } =
            group_index_hf(v, model.epsilon(), model.basis(), p.k)?
        else {
            continue;
        };
        let field = reconstruct_field(v, model.basis(), p.k.vector(), &grid)?;
        out.push(ModeSample {
            k_norm: p.k_norm,
            a_over_lambda: mode.a_over_lambda,
            n_g,
            s_eff_nm2: effective_mode_area(&field, &grid)?,
        });
    }
    Ok(out)
}

/// Purcell factor and beta along a band for an emitter at the in-plane field
/// maximum and the slab midplane; only the polarization mismatch reduces
/// the coupling.
pub fn achievable_beta_curve(
    geom: &WaveguideGeometry,
    samples: &[ModeSample],
    emitter: &EmitterParams,
    offset_nm: f64,
) -> Result<Vec<AchievablePoint>> {
    emitter.validate()?;
    let orientation = orientation_factor(emitter.dipole_axis, emitter.field_axis)?;
    let a = geom.lattice_constant_nm;
    samples
        .iter()
        .map(|s| {
            let wavelength_nm = to_wavelength(a, s.a_over_lambda, offset_nm)?;
            let fp = waveguide_rate_enhancement(&RateInputs {
                n_g: s.n_g,
                s_eff_nm2: s.s_eff_nm2,
                wavelength_nm,
                index: geom.n_bulk,
                orientation_factor: orientation,
                depth_factor: 1.0,
                local_field_ratio: 1.0,
            })?;
            Ok(AchievablePoint {
                k_norm: s.k_norm,
                wavelength_nm,
                n_g: s.n_g,
                s_eff_nm2: s.s_eff_nm2,
                purcell_fp: fp,
                beta: beta_factor(fp * emitter.gamma_bulk_per_ns, emitter.gamma_phc_per_ns)?,
            })
        })
        .collect()
}

/// Linear interpolation of the sample where the group index reaches
/// `n_g`, walking from low to high `n_g` along the band.
pub fn sample_at_group_index(samples: &[ModeSample], n_g: f64) -> Option<ModeSample> {
    samples.windows(2).find_map(|w| {
        let (p, q) = (w[0], w[1]);
        if (p.n_g - n_g) * (q.n_g - n_g) > 0.0 || p.n_g == q.n_g {
            return None;
        }
        let t = (n_g - p.n_g) / (q.n_g - p.n_g);
        let lerp = |a: f64, b: f64| a + t * (b - a);
        Some(ModeSample {
            k_norm: lerp(p.k_norm, q.k_norm),
            a_over_lambda: lerp(p.a_over_lambda, q.a_over_lambda),
            n_g,
            s_eff_nm2: lerp(p.s_eff_nm2, q.s_eff_nm2),
        })
    })
}

/// Coupling figures for one operating point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingReport {
    pub n_g: f64,
    pub wavelength_nm: f64,
    pub s_eff_nm2: f64,
    pub orientation_factor: f64,
    pub depth_factor: f64,
    /// `Gamma_wg / Gamma_0` for the emitter at its implantation depth.
    pub rate_enhancement: f64,
    /// Achievable enhancement at the field maximum (depth factor 1).
    pub purcell_fp: f64,
    /// From `purcell_fp * gamma_bulk` against `gamma_phc`.
    pub beta: f64,
    /// From a measured on-resonance lifetime, when one is given.
    pub f_zpl: Option<f64>,
    pub tau_on_ns: Option<f64>,
    pub emitter: EmitterParams,
    pub local_field_ratio: f64,
}

/// Assembles a [`CouplingReport`] from a solver sample.
pub fn coupling_report(
    geom: &WaveguideGeometry,
    sample: &ModeSample,
    emitter: &EmitterParams,
    tau_on_ns: Option<f64>,
    local_field_ratio: f64,
    offset_nm: f64,
) -> Result<CouplingReport> {
    emitter.validate()?;
    let wavelength_nm = to_wavelength(geom.lattice_constant_nm, sample.a_over_lambda, offset_nm)?;
    let orientation = orientation_factor(emitter.dipole_axis, emitter.field_axis)?;
    let depth = depth_factor(geom, wavelength_nm)?;
    let base = RateInputs {
        n_g: sample.n_g,
        s_eff_nm2: sample.s_eff_nm2,
        wavelength_nm,
        index: geom.n_bulk,
        orientation_factor: orientation,
        depth_factor: depth,
        local_field_ratio,
    };
    let rate_enhancement = waveguide_rate_enhancement(&base)?;
    let purcell_fp = waveguide_rate_enhancement(&RateInputs {
        depth_factor: 1.0,
        local_field_ratio: 1.0,
        ..base
    })?;
    let beta = beta_factor(
        purcell_fp * emitter.gamma_bulk_per_ns,
        emitter.gamma_phc_per_ns,
    )?;
    let f_zpl = tau_on_ns
        .map(|t| {
            f_zpl(
                emitter.tau_bulk_ns,
                t,
                emitter.debye_waller,
                emitter.branching_fraction,
            )
        })
        .transpose()?;
    Ok(CouplingReport {
        n_g: sample.n_g,
        wavelength_nm,
        s_eff_nm2: sample.s_eff_nm2,
        orientation_factor: orientation,
        depth_factor: depth,
        rate_enhancement,
        purcell_fp,
        beta,
        f_zpl,
        tau_on_ns,
        emitter: *emitter,
        local_field_ratio,
    })
}
