//! Regenerates the CSV fixtures under `tests/fixtures`.
//!
//! cargo run -p slowlight --example make_fixtures

use std::path::Path;

use slowlight::io::write_csv;
use slowlight::spectra::GaussianBackground;
use slowlight::synthetic::{self, DecaySpec, G2Spec, Line};
use slowlight::timetrace::REP_PERIOD_78MHZ_NS;

/// Fringe comb whose group index rises toward the band edge and levels off
/// at 73, with linewidths narrowing as the index grows.
pub fn fringe_fixture() -> slowlight::Result<slowlight::spectra::Spectrum> {
    let length = 51.0 * 261.0;
    let n_g = |l: f64| (15.0 + 58.0 * ((l - 737.2) / 0.9).exp()).min(73.0);
    let centers = synthetic::fsr_centers(732.0, 737.9, length, n_g)?;
    let lines: Vec<Line> = centers
        .iter()
        .map(|&c| Line {
            center_nm: c,
            fwhm_nm: 0.02 + 0.6 / n_g(c),
            amplitude: 100.0,
        })
        .collect();
    let background = GaussianBackground {
        amplitude: 300.0,
        center_nm: 736.0,
        sigma_nm: 4.0,
        offset: 20.0,
    };
    let axis = synthetic::linspace(730.0, 740.0, 2001);
    synthetic::line_spectrum(&axis, &lines, Some(background), Some((1.0, 7)))
}

fn main() -> slowlight::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    std::fs::create_dir_all(&dir)?;

    let s = fringe_fixture()?;
    write_csv(
        &dir.join("fringes.csv"),
        &["wavelength_nm", "counts"],
        s.wavelength_nm()
            .iter()
            .zip(s.intensity())
            .map(|(&x, &y)| vec![x, y]),
    )?;

    let decay = synthetic::decay_trace(
        &DecaySpec {
            tau_ns: 1.01,
            peak_counts: 1e4,
            offset: 20.0,
            bin_ns: 0.025,
            bins: 480,
            peak_bin: 40,
        },
        Some(1),
    )?;
    write_csv(
        &dir.join("decay.csv"),
        &["time_ns", "counts"],
        decay
            .time_ns()
            .iter()
            .zip(decay.counts())
            .map(|(&x, &y)| vec![x, y]),
    )?;

    let g2 = synthetic::g2_histogram(
        &G2Spec {
            rep_period_ns: REP_PERIOD_78MHZ_NS,
            orders: 5,
            side_area: 1e4,
            ratio: 0.47,
            peak_tau_ns: 1.5,
            bin_ns: 0.064,
            background: 0.0,
        },
        Some(2),
    )?;
    write_csv(
        &dir.join("g2.csv"),
        &["delay_ns", "counts"],
        g2.delay_ns()
            .iter()
            .zip(g2.counts())
            .map(|(&x, &y)| vec![x, y]),
    )?;
    Ok(())
}
