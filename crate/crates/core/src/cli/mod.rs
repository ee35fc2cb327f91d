//! Command-line front end: configuration, dispatch and file output.

mod config;

pub use config::{AnalysisConfig, RunConfig, SCHEMA_VERSION};

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bandsolver::Parity;
use crate::coupling::{self, AchievablePoint, CouplingReport, ModeSample};
use crate::dispersion::{
    group_index_curve, guided_modes, GapReport, GroupIndexCurve, GuidedModes, GuidedWindow,
};
use crate::error::{Error, Result};
use crate::io;
use crate::spectra::{analyze_fringes, load_spectrum, FringeAnalysis};
use crate::timetrace::{
    fit_decay, g2_peak_areas, g2_zero, load_decay, load_g2, Bootstrap, DecayFit, DecayOptions,
    G2Result, PeakArea,
};

#[derive(Debug, Parser)]
#[command(
    name = "slowlight",
    version,
    about = "Photonic-crystal waveguide dispersion, emitter coupling and spectroscopy fits"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// JSON run configuration; missing fields take defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if needed.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Added to every computed wavelength (nm).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub offset_nm: Option<f64>,
    /// Seed for bootstrap resampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for the band sweep.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Supercell band structure with gap-guided modes tagged by parity.
    Bands,
    /// Group index against wavelength for the guided bands.
    Ngroup,
    /// Purcell factor, beta factor and ZPL enhancement at a target group index.
    Coupling(CouplingArgs),
    /// Fabry-Perot fringe fit of a photoluminescence spectrum.
    FitSpectrum(FileArg),
    /// Single-exponential lifetime fit of a decay trace.
    FitLifetime(LifetimeArgs),
    /// Zero-delay second-order correlation from a pulsed histogram.
    FitG2(G2Args),
}

#[derive(Debug, Clone, Args)]
pub struct FileArg {
    /// Two-column CSV input.
    pub path: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CouplingArgs {
    /// Measured on-resonance lifetime (ns) for the ZPL Purcell factor.
    #[arg(long)]
    pub tau_on_ns: Option<f64>,
    /// Dipole axis as `x,y,z`.
    #[arg(long, value_parser = parse_axis, allow_hyphen_values = true)]
    pub dipole: Option<[f64; 3]>,
    /// Field polarization axis as `x,y,z`.
    #[arg(long, value_parser = parse_axis, allow_hyphen_values = true)]
    pub field: Option<[f64; 3]>,
    /// Group index at which to evaluate the report.
    #[arg(long)]
    pub n_g: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct LifetimeArgs {
    pub path: PathBuf,
    /// Bootstrap resamples (0 disables).
    #[arg(long)]
    pub bootstrap: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct G2Args {
    pub path: PathBuf,
    /// Laser repetition period (ns).
    #[arg(long)]
    pub rep_period_ns: Option<f64>,
}

fn parse_axis(s: &str) -> std::result::Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    <[f64; 3]>::try_from(v).map_err(|v| format!("expected 3 components, got {}", v.len()))
}

/// Loads the configuration and applies flag overrides (flag > file >
/// default), then validates it.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.global.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(o) = cli.global.offset_nm {
        cfg.analysis.offset_nm = o;
    }
    match &cli.command {
        Command::Coupling(c) => {
            if let Some(t) = c.tau_on_ns {
                cfg.analysis.tau_on_ns = Some(t);
            }
            if let Some(d) = c.dipole {
                cfg.emitter.dipole_axis = d;
            }
            if let Some(f) = c.field {
                cfg.emitter.field_axis = f;
            }
            if let Some(n) = c.n_g {
                cfg.analysis.target_n_g = n;
            }
        }
        Command::FitLifetime(l) => {
            if let Some(b) = l.bootstrap {
                cfg.analysis.bootstrap_resamples = b;
            }
        }
        Command::FitG2(g) => {
            if let Some(p) = g.rep_period_ns {
                cfg.analysis.rep_period_ns = p;
            }
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one command and returns the files it wrote.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let cfg = resolve_config(cli)?;
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(Error::param("threads", "must be at least 1"));
        }
        // Only the first configuration in a process takes effect.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let out = &cli.global.out;
    std::fs::create_dir_all(out)?;
    match &cli.command {
        Command::Bands => cmd_bands(&cfg, out),
        Command::Ngroup => cmd_ngroup(&cfg, out),
        Command::Coupling(_) => cmd_coupling(&cfg, out),
        Command::FitSpectrum(f) => cmd_fit_spectrum(&f.path, &cfg, out),
        Command::FitLifetime(l) => cmd_fit_lifetime(&l.path, &cfg, cli.global.seed, out),
        Command::FitG2(g) => cmd_fit_g2(&g.path, &cfg, out),
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    body: &'a T,
}

fn write_report<T: Serialize>(path: &Path, body: &T) -> Result<()> {
    io::write_json(
        path,
        &Envelope {
            schema_version: SCHEMA_VERSION,
            body,
        },
    )
}

#[derive(Serialize)]
struct BandSummary {
    band: usize,
    parity: Parity,
    min_a_over_lambda: f64,
    max_a_over_lambda: f64,
}

#[derive(Serialize)]
struct BandsReport {
    n_eff: f64,
    k_points: usize,
    basis_size: usize,
    gap: Option<GapReport>,
    guided: Vec<GuidedWindow>,
    even: Option<GuidedWindow>,
    odd: Option<GuidedWindow>,
    bands: Vec<BandSummary>,
}

pub fn cmd_bands(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let g = guided_modes(&cfg.geometry, &cfg.solver)?;
    let bs = &g.bands;
    let csv = out.join("bands.csv");
    let mut rows = Vec::new();
    for (b, band) in bs.bands.iter().enumerate() {
        for (i, p) in bs.points.iter().enumerate() {
            let m = &p.modes[band.modes[i]];
            rows.push(vec![
                p.k_norm,
                b as f64,
                m.a_over_lambda,
                parity_code(m.parity),
                m.mirror_overlap,
            ]);
        }
    }
    // Parity as +1 (even), -1 (odd) or 0 (unclassified).
    io::write_csv(
        &csv,
        &[
            "k_norm",
            "band_index",
            "a_over_lambda",
            "parity",
            "mirror_overlap",
        ],
        rows,
    )?;
    let report = BandsReport {
        n_eff: bs.model.n_eff(),
        k_points: bs.points.len(),
        basis_size: bs.model.basis().len(),
        gap: g.gap,
        guided: g.windows.clone(),
        even: g.even,
        odd: g.odd,
        bands: (0..bs.bands.len())
            .map(|b| {
                let f = bs.band_frequencies(b);
                BandSummary {
                    band: b,
                    parity: bs.bands[b].parity,
                    min_a_over_lambda: f.iter().copied().fold(f64::INFINITY, f64::min),
                    max_a_over_lambda: f.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                }
            })
            .collect(),
    };
    let json = out.join("bands.json");
    write_report(&json, &report)?;
    Ok(vec![csv, json])
}

#[derive(Serialize)]
struct NgroupReport<'a> {
    method: crate::dispersion::GroupIndexMethod,
    offset_nm: f64,
    curves: Vec<&'a GroupIndexCurve>,
}

pub fn cmd_ngroup(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let g = guided_modes(&cfg.geometry, &cfg.solver)?;
    let guided = guided_or_err(&g)?;
    let mut files = Vec::new();
    let mut curves = Vec::new();
    for w in guided {
        let curve = group_index_curve(
            &g.bands,
            w.band,
            cfg.analysis.group_index_method,
            cfg.analysis.offset_nm,
        )?;
        let path = out.join(format!("ngroup_{}.csv", w.parity.as_str()));
        io::write_csv(
            &path,
            &["wavelength_nm", "n_g", "band", "k_norm", "a_over_lambda"],
            curve.points.iter().map(|p| {
                vec![
                    p.wavelength_nm,
                    p.n_g,
                    w.band as f64,
                    p.k_norm,
                    p.a_over_lambda,
                ]
            }),
        )?;
        files.push(path);
        curves.push(curve);
    }
    let json = out.join("ngroup.json");
    write_report(
        &json,
        &NgroupReport {
            method: cfg.analysis.group_index_method,
            offset_nm: cfg.analysis.offset_nm,
            curves: curves.iter().collect(),
        },
    )?;
    files.push(json);
    Ok(files)
}

fn parity_code(p: Parity) -> f64 {
    match p {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
        Parity::Unclassified => 0.0,
    }
}

fn guided_or_err(g: &GuidedModes) -> Result<Vec<GuidedWindow>> {
    let v: Vec<GuidedWindow> = [g.even, g.odd].into_iter().flatten().collect();
    if v.is_empty() {
        return Err(Error::Data(
            "no gap-guided band found for this geometry".into(),
        ));
    }
    Ok(v)
}

#[derive(Serialize)]
struct CouplingOutput<'a> {
    k_norm: f64,
    report: &'a CouplingReport,
}

pub fn cmd_coupling(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let g = guided_modes(&cfg.geometry, &cfg.solver)?;
    let even = g
        .even
        .ok_or_else(|| Error::Data("no even gap-guided band found for this geometry".into()))?;
    let samples = coupling::mode_samples(&g.bands, even.band, cfg.analysis.px_per_a)?;
    let (report, k_norm, curve) = coupling_from_samples(cfg, &samples)?;
    let csv = out.join("achievable_beta.csv");
    io::write_csv(
        &csv,
        &["wavelength_nm", "n_g", "Fp", "beta"],
        curve
            .iter()
            .map(|p| vec![p.wavelength_nm, p.n_g, p.purcell_fp, p.beta]),
    )?;
    let json = out.join("coupling.json");
    write_report(
        &json,
        &CouplingOutput {
            k_norm,
            report: &report,
        },
    )?;
    Ok(vec![json, csv])
}

/// Coupling report at the configured target group index, plus the full
/// achievable-beta curve.
pub fn coupling_from_samples(
    cfg: &RunConfig,
    samples: &[ModeSample],
) -> Result<(CouplingReport, f64, Vec<AchievablePoint>)> {
    let a = &cfg.analysis;
    let curve = coupling::achievable_beta_curve(&cfg.geometry, samples, &cfg.emitter, a.offset_nm)?;
    let sample = coupling::sample_at_group_index(samples, a.target_n_g).ok_or_else(|| {
        Error::Data(format!(
            "the even band never reaches n_g = {} in the sampled k range",
            a.target_n_g
        ))
    })?;
    let report = coupling::coupling_report(
        &cfg.geometry,
        &sample,
        &cfg.emitter,
        a.tau_on_ns,
        a.local_field_ratio,
        a.offset_nm,
    )?;
    Ok((report, sample.k_norm, curve))
}

pub fn cmd_fit_spectrum(path: &Path, cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let spectrum = load_spectrum(path)?;
    let analysis: FringeAnalysis = analyze_fringes(&spectrum, &cfg.fringe_options())?;
    let json = out.join("fringe.json");
    write_report(&json, &analysis)?;
    let ng = out.join("ng.csv");
    io::write_csv(
        &ng,
        &["lambda_nm", "ng"],
        analysis
            .ng_points
            .iter()
            .map(|p| vec![p.wavelength_nm, p.n_g]),
    )?;
    let q = out.join("q.csv");
    io::write_csv(
        &q,
        &["lambda_nm", "Q"],
        analysis.q_points.iter().map(|p| vec![p.wavelength_nm, p.q]),
    )?;
    Ok(vec![json, ng, q])
}

pub fn cmd_fit_lifetime(
    path: &Path,
    cfg: &RunConfig,
    seed: Option<u64>,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    let trace = load_decay(path)?;
    let resamples = cfg.analysis.bootstrap_resamples;
    let opts = DecayOptions {
        window_ns: cfg.analysis.decay_window_ns,
        fit: cfg.analysis.fit,
        bootstrap: (resamples > 0).then(|| Bootstrap {
            resamples,
            seed: seed.unwrap_or(0),
        }),
    };
    let fit: DecayFit = fit_decay(&trace, &opts)?;
    let json = out.join("decay.json");
    write_report(&json, &fit)?;
    Ok(vec![json])
}

#[derive(Serialize)]
struct G2Output {
    rep_period_ns: f64,
    half_window_ns: f64,
    areas: Vec<PeakArea>,
    #[serde(flatten)]
    result: G2Result,
}

pub fn cmd_fit_g2(path: &Path, cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let period = cfg.analysis.rep_period_ns;
    let hist = load_g2(path, period)?;
    let areas = g2_peak_areas(&hist, cfg.analysis.g2_half_window_ns)?;
    let result = g2_zero(&areas)?;
    let json = out.join("g2.json");
    write_report(
        &json,
        &G2Output {
            rep_period_ns: period,
            half_window_ns: cfg.analysis.g2_half_window_ns.unwrap_or(0.25 * period),
            areas,
            result,
        },
    )?;
    Ok(vec![json])
}
