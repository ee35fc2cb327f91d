use super::*;
use crate::geometry::{epsilon_fourier, PlaneWaveBasis, Supercell};
use faer::Col;

fn uniform_w1() -> WaveguideGeometry {
    WaveguideGeometry {
        hole_radius_nm: 0.0,
        ..WaveguideGeometry::diamond_w1()
    }
}

fn small_params(n_eff: f64) -> SolverParams {
    SolverParams {
        cutoff: 2,
        n_bands: 12,
        n_eff: Some(n_eff),
        ..SolverParams::default()
    }
}

#[test]
fn uniform_medium_gives_folded_light_lines() {
    let geom = uniform_w1();
    let model = Waveguide::new(&geom, &small_params(2.0)).unwrap();
    let a = geom.lattice_constant_nm;
    for &k_norm in &[0.0, 0.17, 0.33, 0.5] {
        let kp = model.solve_k(k_norm, 12).unwrap();
        let kx = BlochK::from_normalized(k_norm, a).kx;
        let mut lines: Vec<f64> = model
            .basis()
            .vectors()
            .iter()
            .map(|g| (kx + g[0]).hypot(g[1]) * a / (2.0 * PI * 2.0))
            .collect();
        lines.sort_by(f64::total_cmp);
        for (m, exact) in kp.modes.iter().zip(&lines) {
            let tol = 1e-8 * exact.max(1e-300);
            assert!(
                (m.a_over_lambda - exact).abs() <= tol.max(1e-12),
                "{} vs {exact}",
                m.a_over_lambda
            );
        }
    }
}

#[test]
fn one_by_one_cell_at_zone_edge() {
    let a = 300.0;
    let cell = Supercell::empty_square(a);
    let geom = WaveguideGeometry {
        lattice_constant_nm: a,
        hole_radius_nm: 0.0,
        ..WaveguideGeometry::diamond_w1()
    };
    let basis = PlaneWaveBasis::for_cell(&cell, 3).unwrap();
    let eps = epsilon_fourier(&cell, &geom, &basis, 1.8).unwrap();
    let theta = assemble_operator(&basis, &eps, BlochK::from_normalized(0.5, a).vector()).unwrap();
    let e = solve_bands(theta.as_ref(), 4).unwrap();
    assert!((a_over_lambda(e.mu[0], a) - 0.5 / 1.8).abs() < 1e-12);
    assert!((a_over_lambda(e.mu[1], a) - 0.5 / 1.8).abs() < 1e-12);
}

#[test]
fn operator_entry_at_gamma_vanishes() {
    let geom = WaveguideGeometry::diamond_w1();
    let cell = build_supercell(&geom).unwrap();
    let basis = PlaneWaveBasis::for_cell(&cell, 2).unwrap();
    let eps = epsilon_fourier(&cell, &geom, &basis, 2.0).unwrap();
    let theta = assemble_operator(&basis, &eps, [0.0, 0.0]).unwrap();
    let z = basis.zero_index();
    assert_eq!(theta[(z, z)], c64::new(0.0, 0.0));
    assert!(linalg::hermiticity_residual(theta.as_ref()) < 1e-12);
}

#[test]
fn mirror_sectors_agree_with_the_full_solve() {
    let geom = WaveguideGeometry::diamond_w1();
    let params = SolverParams {
        n_eff: Some(1.99),
        ..small_params(1.99)
    };
    let model = Waveguide::new(&geom, &params).unwrap();
    assert!(model.mirror.is_some());
    let kp = model.solve_k(0.42, 10).unwrap();
    let theta = assemble_operator(model.basis(), model.epsilon(), kp.k.vector()).unwrap();
    let full = solve_bands(theta.as_ref(), 10).unwrap();
    for (m, mu) in kp.modes.iter().zip(&full.mu) {
        assert!((m.mu - mu).abs() < 1e-10 * mu.abs(), "{} vs {mu}", m.mu);
    }
}

#[test]
fn eigenvectors_are_orthonormal() {
    let geom = WaveguideGeometry::diamond_w1();
    let model = Waveguide::new(&geom, &small_params(1.99)).unwrap();
    let kp = model.solve_k(0.4, 12).unwrap();
    let gram = kp.eigvecs.adjoint() * &kp.eigvecs;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((gram[(i, j)] - c64::new(expect, 0.0)).norm() < 1e-10);
        }
    }
}

#[test]
fn spectra_at_opposite_k_coincide() {
    let geom = WaveguideGeometry::diamond_w1();
    let model = Waveguide::new(&geom, &small_params(1.99)).unwrap();
    let plus = model.solve_k(0.37, 12).unwrap();
    let minus = model.solve_k(-0.37, 12).unwrap();
    for (p, m) in plus.modes.iter().zip(&minus.modes) {
        assert!((p.a_over_lambda - m.a_over_lambda).abs() < 1e-10);
    }
}

#[test]
fn sector_vectors_have_the_expected_parity() {
    let geom = WaveguideGeometry::diamond_w1();
    let model = Waveguide::new(&geom, &small_params(1.99)).unwrap();
    let kp = model.solve_k(0.45, 12).unwrap();
    let mirror = model.basis().mirror_map().unwrap();
    for (c, mode) in kp.modes.iter().enumerate() {
        // Mirror-even Hz coefficients mean the mode is even in Ey.
        let v = kp.eigvec(c);
        let hz_even = (0..v.nrows()).all(|i| (v[i] - v[mirror[i]]).norm() < 1e-12);
        let hz_odd = (0..v.nrows()).all(|i| (v[i] + v[mirror[i]]).norm() < 1e-12);
        assert!(hz_even ^ hz_odd);
        let expect = if hz_even { Parity::Even } else { Parity::Odd };
        assert_eq!(mode.parity, expect);
    }
}

#[test]
fn symmetrized_vectors_classify_by_construction() {
    let geom = WaveguideGeometry::diamond_w1();
    let model = Waveguide::new(&geom, &small_params(1.99)).unwrap();
    let basis = model.basis();
    let mirror = basis.mirror_map().unwrap();
    let n = basis.len();
    let v = Col::from_fn(n, |i| {
        c64::new(((i * 7919) % 13) as f64 - 6.0, ((i * 104729) % 5) as f64)
    });
    let build = |sign: f64| {
        let w = Col::from_fn(n, |i| v[i] + v[mirror[i]] * sign);
        let norm = w.norm_l2();
        Col::from_fn(n, |i| w[i] / norm)
    };
    let kx = BlochK::from_normalized(0.4, 261.0).kx;
    let even = classify_parity(build(1.0).as_ref(), basis, model.epsilon(), kx).unwrap();
    let odd = classify_parity(build(-1.0).as_ref(), basis, model.epsilon(), kx).unwrap();
    assert_eq!(even, Parity::Even);
    assert_eq!(odd, Parity::Odd);
    assert_eq!(Parity::from_overlap(0.5), Parity::Unclassified);
}

/// Transfer-matrix band edges of a two-layer stack for `Hz` with the
/// interface conditions `[Hz]` and `[Hz' / eps]` continuous.
fn bragg_edges(eps: [f64; 2], widths: [f64; 2], count: usize) -> Vec<f64> {
    let half_trace = |w: f64| {
        // w = omega / c in rad/nm
        let mut m = [[1.0, 0.0], [0.0, 1.0]];
        for l in 0..2 {
            let k = eps[l].sqrt() * w;
            let (s, c) = (k * widths[l]).sin_cos();
            let layer = [[c, eps[l] / k * s], [-k / eps[l] * s, c]];
            m = [
                [
                    layer[0][0] * m[0][0] + layer[0][1] * m[1][0],
                    layer[0][0] * m[0][1] + layer[0][1] * m[1][1],
                ],
                [
                    layer[1][0] * m[0][0] + layer[1][1] * m[1][0],
                    layer[1][0] * m[0][1] + layer[1][1] * m[1][1],
                ],
            ];
        }
        0.5 * (m[0][0] + m[1][1])
    };
    // Zone-edge band edges are the roots of trace/2 + 1.
    let f = |w: f64| half_trace(w) + 1.0;
    let a = widths[0] + widths[1];
    let step = 1e-4 / a;
    let mut edges = Vec::new();
    let mut w0 = step;
    while edges.len() < count {
        let w1 = w0 + step;
        let (f0, f1) = (f(w0), f(w1));
        if f0 == 0.0 || f0 * f1 < 0.0 {
            let (mut lo, mut hi) = (w0, w1);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if f(lo) * f(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            edges.push(0.5 * (lo + hi));
        }
        w0 = w1;
    }
    edges
}

#[test]
fn stripe_lattice_matches_transfer_matrix_edges() {
    let a = 300.0;
    let fill = 0.4;
    let (e_hi, e_lo) = (5.76, 1.0);
    let cell = Supercell::empty_square(a);
    let recip = cell.reciprocal();
    let orders = 160;
    let indices = (-orders..=orders).map(|m| [m, 0]).collect();
    let basis = PlaneWaveBasis::from_indices(recip, indices).unwrap();
    let width = fill * a;
    let eps = EpsilonOperator::from_fourier(&basis, |g| {
        if g[0] == 0.0 {
            c64::new(e_lo + (e_hi - e_lo) * fill, 0.0)
        } else {
            let x = g[0] * width / 2.0;
            c64::new((e_hi - e_lo) * fill * x.sin() / x, 0.0)
        }
    })
    .unwrap();
    let k = BlochK::from_normalized(0.5, a);
    let theta = assemble_operator(&basis, &eps, k.vector()).unwrap();
    let e = solve_bands(theta.as_ref(), 4).unwrap();
    let edges = bragg_edges([e_hi, e_lo], [width, a - width], 4);
    for (mu, w) in e.mu.iter().zip(&edges) {
        let pwe = mu.sqrt();
        assert!(((pwe - w) / w).abs() < 1e-4, "{pwe} vs {w}");
    }
}

#[test]
fn laurent_eigenvalues_decrease_with_cutoff() {
    let geom = WaveguideGeometry::diamond_w1();
    let cell = Supercell::triangular_primitive(geom.lattice_constant_nm);
    let unit = 2.0 * PI / geom.lattice_constant_nm;
    let k = [0.3 * unit, 0.2 * unit];
    let mut prev: Option<Vec<f64>> = None;
    for cutoff in [2.0, 3.0, 4.0, 5.5] {
        let basis = PlaneWaveBasis::within_radius(cell.reciprocal(), cutoff * unit).unwrap();
        let eps = crate::geometry::epsilon_fourier_with_rule(
            &cell,
            &geom,
            &basis,
            2.0,
            FactorizationRule::Laurent,
        )
        .unwrap();
        let theta = assemble_operator(&basis, &eps, k).unwrap();
        let mu = solve_bands(theta.as_ref(), 6).unwrap().mu;
        if let Some(p) = &prev {
            for (new, old) in mu.iter().zip(p) {
                assert!(*new <= old * (1.0 + 1e-6), "{new} > {old}");
            }
        }
        prev = Some(mu);
    }
}

#[test]
fn bulk_lattice_has_a_te_gap() {
    let geom = WaveguideGeometry::diamond_w1();
    let bulk = bulk_band_sweep(&geom, 2.0, 6, 8, 4).unwrap();
    let gap = crate::dispersion::detect_gap(&bulk.frequencies).unwrap();
    assert_eq!(gap.band_below, 0);
    assert!(gap.gap_lo > 0.3 && gap.gap_hi < 0.4, "{gap:?}");
}

#[test]
fn sweep_rejects_non_monotone_path() {
    let geom = WaveguideGeometry::diamond_w1();
    assert!(band_sweep(&geom, &small_params(1.99), &[0.3, 0.2]).is_err());
}

#[test]
fn two_point_sweep_equals_independent_solves() {
    let geom = WaveguideGeometry::diamond_w1();
    let params = small_params(1.99);
    let bs = band_sweep(&geom, &params, &[0.3, 0.45]).unwrap();
    for (p, &k) in bs.points.iter().zip(&[0.3, 0.45]) {
        let single = bs.model.solve_k(k, params.n_bands).unwrap();
        assert_eq!(p.modes, single.modes);
    }
}

#[test]
fn plane_wave_field_has_uniform_magnitude() {
    let geom = uniform_w1();
    let model = Waveguide::new(&geom, &small_params(2.0)).unwrap();
    let basis = model.basis();
    let mut v = Col::<c64>::zeros(basis.len());
    v[basis.zero_index()] = c64::new(1.0, 0.0);
    let k = BlochK::from_normalized(0.3, geom.lattice_constant_nm);
    let grid = model.eps_grid(16).unwrap();
    let field = reconstruct_field(v.as_ref(), basis, k.vector(), &grid).unwrap();
    for i in 0..field.grid.len() {
        assert!((field.intensity(i) - 1.0).abs() < 1e-12);
        // k along x: E is purely along y.
        assert!(field.ex[i].norm() < 1e-12);
    }
}

#[test]
fn spectral_field_is_bloch_periodic() {
    let geom = WaveguideGeometry::diamond_w1();
    let model = Waveguide::new(&geom, &small_params(1.99)).unwrap();
    let kp = model.solve_k(0.41, 12).unwrap();
    let f = SpectralField::new(kp.eigvec(11), model.basis(), kp.k.vector()).unwrap();
    let a = geom.lattice_constant_nm;
    let phase = c64::new((kp.k.kx * a).cos(), (kp.k.kx * a).sin());
    for p in [[10.0, 3.0], [100.0, -70.0], [200.0, 400.0]] {
        let here = f.hz_at(p);
        let there = f.hz_at([p[0] + a, p[1]]);
        assert!((there - phase * here).norm() < 1e-9 * (1.0 + here.norm()));
    }
}
