use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bandsolver::SolverParams;
use crate::coupling::EmitterParams;
use crate::dispersion::GroupIndexMethod;
use crate::error::{Error, Result};
use crate::fit::FitOptions;
use crate::geometry::WaveguideGeometry;
use crate::spectra::FringeOptions;
use crate::timetrace::REP_PERIOD_78MHZ_NS;

pub const SCHEMA_VERSION: u32 = 1;

/// Everything a run needs. Every block and field is optional in the JSON
/// file; missing values take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub geometry: WaveguideGeometry,
    pub solver: SolverParams,
    pub emitter: EmitterParams,
    pub analysis: AnalysisConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            geometry: WaveguideGeometry::diamond_w1(),
            solver: SolverParams::default(),
            emitter: EmitterParams::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Waveguide length between the couplers in lattice constants.
    pub waveguide_length_a: f64,
    pub subtract_background: bool,
    pub min_prominence_fraction: f64,
    pub min_separation_nm: Option<f64>,
    pub fit: FitOptions,
    pub group_index_method: GroupIndexMethod,
    /// Added to every computed wavelength.
    pub offset_nm: f64,
    /// Group index at which the coupling report is evaluated.
    pub target_n_g: f64,
    /// Field sampling density for mode areas, pixels per lattice constant.
    pub px_per_a: usize,
    pub tau_on_ns: Option<f64>,
    pub local_field_ratio: f64,
    pub decay_window_ns: Option<[f64; 2]>,
    /// Bootstrap resamples for lifetime fits; 0 disables the bootstrap.
    pub bootstrap_resamples: usize,
    pub rep_period_ns: f64,
    pub g2_half_window_ns: Option<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            waveguide_length_a: 51.0,
            subtract_background: true,
            min_prominence_fraction: 0.05,
            min_separation_nm: None,
            fit: FitOptions::default(),
            group_index_method: GroupIndexMethod::HellmannFeynman,
            offset_nm: 0.0,
            target_n_g: 70.0,
            px_per_a: 64,
            tau_on_ns: None,
            local_field_ratio: 1.0,
            decay_window_ns: None,
            bootstrap_resamples: 0,
            rep_period_ns: REP_PERIOD_78MHZ_NS,
            g2_half_window_ns: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        })?;
        let cfg: Self = serde_json::from_str(&text)?;
        Ok(cfg)
    }

    /// Checks every block before any computation.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::param(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        self.geometry.validate()?;
        self.solver.validate()?;
        self.emitter.validate()?;
        let a = &self.analysis;
        self.fringe_options().validate()?;
        if !(a.offset_nm.is_finite()) {
            return Err(Error::param("offset_nm", "must be finite"));
        }
        if !(a.target_n_g > 0.0 && a.target_n_g.is_finite()) {
            return Err(Error::param("target_n_g", "must be positive"));
        }
        if a.px_per_a < 16 {
            return Err(Error::param(
                "px_per_a",
                format!("must be at least 16, got {}", a.px_per_a),
            ));
        }
        if let Some(t) = a.tau_on_ns {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::param("tau_on_ns", "must be positive"));
            }
        }
        if !(0.0..=1.0).contains(&a.local_field_ratio) {
            return Err(Error::param("local_field_ratio", "must lie in [0, 1]"));
        }
        if let Some([s, e]) = a.decay_window_ns {
            if !(e > s) {
                return Err(Error::param("decay_window_ns", "end must exceed start"));
            }
        }
        if a.bootstrap_resamples == 1 {
            return Err(Error::param(
                "bootstrap_resamples",
                "use 0 to disable or at least 2",
            ));
        }
        if !(a.rep_period_ns > 0.0 && a.rep_period_ns.is_finite()) {
            return Err(Error::param("rep_period_ns", "must be positive"));
        }
        if let Some(h) = a.g2_half_window_ns {
            if !(h > 0.0 && h < 0.5 * a.rep_period_ns) {
                return Err(Error::param(
                    "g2_half_window_ns",
                    "must lie in (0, rep_period_ns / 2)",
                ));
            }
        }
        Ok(())
    }

    pub fn waveguide_length_nm(&self) -> f64 {
        self.analysis.waveguide_length_a * self.geometry.lattice_constant_nm
    }

    pub fn fringe_options(&self) -> FringeOptions {
        let a = &self.analysis;
        FringeOptions {
            waveguide_length_nm: self.waveguide_length_nm(),
            subtract_background: a.subtract_background,
            min_prominence_fraction: a.min_prominence_fraction,
            min_separation_nm: a.min_separation_nm,
            fit: a.fit,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_the_default() {
        let cfg: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn partial_blocks_keep_other_defaults() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"geometry": {"r_nm": 70}, "solver": {"cutoff": 5}}"#).unwrap();
        assert_eq!(cfg.geometry.hole_radius_nm, 70.0);
        assert_eq!(cfg.geometry.lattice_constant_nm, 261.0);
        assert_eq!(cfg.solver.cutoff, 5);
        assert_eq!(cfg.solver.k_points, 64);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"geometry": {"radius": 70}}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"extra": 1}"#).is_err());
    }

    #[test]
    fn validation_names_the_field() {
        let mut cfg = RunConfig::default();
        cfg.geometry.hole_radius_nm = 140.0;
        match cfg.validate() {
            Err(Error::Parameter { field, .. }) => assert_eq!(field, "r_nm"),
            other => panic!("{other:?}"),
        }
        let cfg = RunConfig {
            schema_version: 2,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.analysis.px_per_a = 4;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn length_is_in_lattice_constants() {
        assert_eq!(RunConfig::default().waveguide_length_nm(), 51.0 * 261.0);
    }
}
