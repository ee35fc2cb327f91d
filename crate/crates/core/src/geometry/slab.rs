use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Effective index of the fundamental even TE mode of a symmetric slab.
///
/// Solves `kappa * tan(kappa d / 2) = gamma` with
/// `kappa = k0 sqrt(n_core^2 - n_eff^2)` and `gamma = k0 sqrt(n_eff^2 - n_clad^2)`.
/// Internally the equation is written in the normalized transverse phase
/// `u = kappa d / 2` as `u sin u - sqrt(V^2 - u^2) cos u = 0`, which is
/// monotone on `(0, min(V, pi/2))` and solved by safeguarded Newton steps.
pub fn slab_effective_index(
    d_nm: f64,
    n_core: f64,
    n_clad: f64,
    wavelength_nm: f64,
) -> Result<f64> {
    if !(d_nm > 0.0 && d_nm.is_finite()) {
        return Err(Error::param(
            "d_nm",
            format!("must be positive, got {d_nm}"),
        ));
    }
    if !(wavelength_nm > 0.0 && wavelength_nm.is_finite()) {
        return Err(Error::param(
            "wavelength_nm",
            format!("must be positive, got {wavelength_nm}"),
        ));
    }
    if !(n_clad >= 1.0 && n_core >= n_clad) {
        return Err(Error::param(
            "n_bulk",
            format!("need n_core >= n_clad >= 1, got n_core = {n_core}, n_clad = {n_clad}"),
        ));
    }
    if n_core == n_clad {
        return Ok(n_core);
    }
    let k0 = 2.0 * std::f64::consts::PI / wavelength_nm;
    let na2 = n_core * n_core - n_clad * n_clad;
    let v = 0.5 * k0 * d_nm * na2.sqrt();
    let u = solve_phase(v);
    let kappa = 2.0 * u / d_nm;
    let n_eff = (n_core * n_core - (kappa / k0).powi(2)).sqrt();
    Ok(n_eff.clamp(n_clad.next_up(), n_core.next_down()))
}

/// `kappa = k0 sqrt(n_core^2 - n_eff^2)` for the fundamental TE mode, in rad/nm.
pub fn slab_transverse_wavenumber(
    d_nm: f64,
    n_core: f64,
    n_clad: f64,
    wavelength_nm: f64,
) -> Result<f64> {
    let n_eff = slab_effective_index(d_nm, n_core, n_clad, wavelength_nm)?;
    let k0 = 2.0 * std::f64::consts::PI / wavelength_nm;
    Ok(k0 * (n_core * n_core - n_eff * n_eff).max(0.0).sqrt())
}

fn solve_phase(v: f64) -> f64 {
    let g = |u: f64| u * u.sin() - (v * v - u * u).max(0.0).sqrt() * u.cos();
    let dg = |u: f64| {
        let s = (v * v - u * u).max(1e-300).sqrt();
        u.sin() + u * u.cos() + u * u.cos() / s + s * u.sin()
    };
    let mut lo = 0.0;
    let mut hi = v.min(FRAC_PI_2);
    // g(0) = -V < 0 and g(hi) >= 0 on the bracket.
    let mut u = 0.5 * (lo + hi);
    for _ in 0..200 {
        let gu = g(u);
        if gu == 0.0 {
            return u;
        }
        if gu < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let newton = u - gu / dg(u);
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let done = (next - u).abs() <= 4.0 * f64::EPSILON * u;
        u = next;
        if done {
            break;
        }
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homogeneous_limit_returns_core_index() {
        assert_eq!(slab_effective_index(160.0, 2.4, 2.4, 700.0).unwrap(), 2.4);
    }

    #[test]
    fn thick_slab_approaches_core_index() {
        let n = slab_effective_index(7070.0, 2.4, 1.0, 707.0).unwrap();
        assert!((2.4 - n).abs() < 1e-3, "{n}");
    }

    #[test]
    fn result_is_strictly_inside_the_index_range() {
        for &d in &[1.0, 20.0, 160.0, 1000.0] {
            let n = slab_effective_index(d, 2.4, 1.0, 707.0).unwrap();
            assert!(n > 1.0 && n < 2.4, "d = {d}: {n}");
        }
    }

    // Plain bisection on kappa tan(kappa d/2) - gamma over n_eff, written
    // directly in the index rather than the normalized phase.
    fn bisection_oracle(d: f64, n1: f64, n2: f64, lambda: f64) -> f64 {
        let k0 = 2.0 * std::f64::consts::PI / lambda;
        let f = |n: f64| {
            let kappa = k0 * (n1 * n1 - n * n).sqrt();
            let gamma = k0 * (n * n - n2 * n2).sqrt();
            kappa * (kappa * d / 2.0).tan() - gamma
        };
        // The fundamental root has kappa d/2 < pi/2.
        let n_lo = (n1 * n1 - (std::f64::consts::PI / (k0 * d)).powi(2))
            .max(n2 * n2)
            .sqrt();
        let (mut lo, mut hi) = (n_lo + 1e-15, n1 - 1e-15);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            // f decreases with n on the fundamental branch.
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn matches_bisection_oracle() {
        let n = slab_effective_index(160.0, 2.4, 1.0, 707.0).unwrap();
        let oracle = bisection_oracle(160.0, 2.4, 1.0, 707.0);
        assert!((n - oracle).abs() < 1e-9, "{n} vs {oracle}");
        for &(d, lam) in &[(100.0, 600.0), (300.0, 900.0), (50.0, 1550.0)] {
            let n = slab_effective_index(d, 3.4, 1.44, lam).unwrap();
            assert!((n - bisection_oracle(d, 3.4, 1.44, lam)).abs() < 1e-9);
        }
    }

    #[test]
    fn monotone_in_thickness_and_core_index() {
        let mut prev = 1.0;
        for i in 1..40 {
            let n = slab_effective_index(10.0 * i as f64, 2.4, 1.0, 707.0).unwrap();
            assert!(n > prev);
            prev = n;
        }
        let mut prev = 1.0;
        for i in 1..40 {
            let n = slab_effective_index(160.0, 1.0 + 0.05 * i as f64, 1.0, 707.0).unwrap();
            assert!(n > prev);
            prev = n;
        }
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(slab_effective_index(0.0, 2.4, 1.0, 707.0).is_err());
        assert!(slab_effective_index(160.0, 2.4, 1.0, -1.0).is_err());
        assert!(slab_effective_index(160.0, 1.0, 1.5, 707.0).is_err());
    }
}
