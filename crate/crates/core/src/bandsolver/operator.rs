use faer::{c64, Mat, MatRef, Side};

use crate::error::{Error, Result};
use crate::geometry::{EpsilonOperator, PlaneWaveBasis};
use crate::linalg;

/// Lowest eigenpairs of a band operator. `vectors` holds one unit
/// eigenvector per column, matching `mu` (ascending).
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub mu: Vec<f64>,
    pub vectors: Mat<c64>,
}

/// TE master operator `Theta[i][j] = eta(G_i - G_j) (k + G_i).(k + G_j)`,
/// symmetrized to be exactly Hermitian.
pub fn assemble_operator(
    basis: &PlaneWaveBasis,
    eps: &EpsilonOperator,
    k: [f64; 2],
) -> Result<Mat<c64>> {
    let n = basis.len();
    if eps.dim() != n {
        return Err(Error::Precondition(format!(
            "basis has {n} vectors but the permittivity operator is {}x{}",
            eps.dim(),
            eps.dim()
        )));
    }
    let q = shifted(basis, k);
    let eta = eps.eta_matrix();
    let mut theta = Mat::from_fn(n, n, |i, j| {
        eta[(i, j)] * (q[i][0] * q[j][0] + q[i][1] * q[j][1])
    });
    for j in 0..n {
        theta[(j, j)].im = 0.0;
        for i in 0..j {
            let avg = 0.5 * (theta[(i, j)] + theta[(j, i)].conj());
            theta[(i, j)] = avg;
            theta[(j, i)] = avg.conj();
        }
    }
    Ok(theta)
}

pub(crate) fn shifted(basis: &PlaneWaveBasis, k: [f64; 2]) -> Vec<[f64; 2]> {
    basis
        .vectors()
        .iter()
        .map(|g| [k[0] + g[0], k[1] + g[1]])
        .collect()
}

/// Lowest `n_bands` eigenpairs of a Hermitian operator. Operators with
/// negligible imaginary parts are diagonalized in real arithmetic.
pub fn solve_bands(theta: MatRef<'_, c64>, n_bands: usize) -> Result<Eigenpairs> {
    let n = theta.nrows();
    if n == 0 || theta.ncols() != n {
        return Err(Error::Precondition(
            "operator must be square and non-empty".into(),
        ));
    }
    let scale = linalg::max_abs(theta);
    if linalg::hermiticity_residual(theta) > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Precondition("operator is not Hermitian".into()));
    }
    let n_bands = n_bands.min(n);
    if linalg::max_abs_imag(theta) <= 1e-14 * scale {
        let (mu, v) = real_eigen(linalg::real_part(theta).as_ref(), n_bands)?;
        return Ok(Eigenpairs {
            mu,
            vectors: linalg::complexify(v.as_ref()),
        });
    }
    let eig = theta
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| eigen_failure(theta, format!("{e:?}")))?;
    let s = eig.S().column_vector();
    let u = eig.U();
    let mu = (0..n_bands).map(|i| s[i].re).collect::<Vec<_>>();
    check_spectrum(&mu, theta)?;
    Ok(Eigenpairs {
        mu,
        vectors: u.subcols(0, n_bands).to_owned(),
    })
}

pub(crate) fn real_eigen(m: MatRef<'_, f64>, n_bands: usize) -> Result<(Vec<f64>, Mat<f64>)> {
    let eig = m.self_adjoint_eigen(Side::Lower).map_err(|e| {
        Error::Numerical(format!(
            "symmetric eigensolver failed on a {}x{} operator: {e:?}",
            m.nrows(),
            m.ncols()
        ))
    })?;
    let s = eig.S().column_vector();
    let n_bands = n_bands.min(m.nrows());
    let mu = (0..n_bands).map(|i| s[i]).collect::<Vec<_>>();
    if mu.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite eigenvalue".into()));
    }
    Ok((mu, eig.U().subcols(0, n_bands).to_owned()))
}

fn eigen_failure(theta: MatRef<'_, c64>, what: String) -> Error {
    Error::Numerical(format!(
        "Hermitian eigensolver failed ({what}) on a {}x{} operator with max |entry| {:.3e}",
        theta.nrows(),
        theta.ncols(),
        linalg::max_abs(theta)
    ))
}

fn check_spectrum(mu: &[f64], theta: MatRef<'_, c64>) -> Result<()> {
    if mu.iter().any(|v| !v.is_finite()) {
        return Err(eigen_failure(theta, "non-finite eigenvalue".into()));
    }
    Ok(())
}

/// Eigenpairs of one mirror sector, with vectors expanded back to the full
/// basis.
#[derive(Debug, Clone)]
pub(crate) struct SectorSolution {
    pub even: Eigenpairs,
    pub odd: Eigenpairs,
}

/// Solves the `y -> -y` even and odd sectors of a real operator separately.
/// "Even" refers to the magnetic field coefficients, `h(MG) = h(G)`.
pub(crate) fn solve_mirror_sectors(
    theta: MatRef<'_, f64>,
    mirror: &[usize],
    n_bands: usize,
) -> Result<SectorSolution> {
    let n = theta.nrows();
    let mut pairs = Vec::new();
    let mut singles = Vec::new();
    for (i, &j) in mirror.iter().enumerate() {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => pairs.push((i, j)),
            std::cmp::Ordering::Equal => singles.push(i),
            std::cmp::Ordering::Greater => {}
        }
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // Each sector basis vector as a sparse list of (index, weight).
    let mut even: Vec<Vec<(usize, f64)>> = singles.iter().map(|&i| vec![(i, 1.0)]).collect();
    even.extend(pairs.iter().map(|&(i, j)| vec![(i, h), (j, h)]));
    let odd: Vec<Vec<(usize, f64)>> = pairs.iter().map(|&(i, j)| vec![(i, h), (j, -h)]).collect();
    let solve = |sector: &[Vec<(usize, f64)>]| -> Result<Eigenpairs> {
        if sector.is_empty() {
            return Ok(Eigenpairs {
                mu: Vec::new(),
                vectors: Mat::zeros(n, 0),
            });
        }
        let m = sector.len();
        let block = Mat::from_fn(m, m, |p, q| {
            let mut acc = 0.0;
            for &(a, wa) in &sector[p] {
                for &(b, wb) in &sector[q] {
                    acc += wa * wb * theta[(a, b)];
                }
            }
            acc
        });
        let (mu, v) = real_eigen(block.as_ref(), n_bands)?;
        let mut vectors = Mat::<c64>::zeros(n, mu.len());
        for c in 0..mu.len() {
            for (p, entries) in sector.iter().enumerate() {
                for &(a, wa) in entries {
                    vectors[(a, c)] = c64::new(wa * v[(p, c)], 0.0);
                }
            }
        }
        Ok(Eigenpairs { mu, vectors })
    };
    Ok(SectorSolution {
        even: solve(&even)?,
        odd: solve(&odd)?,
    })
}

/// True when `m[mirror[i]][mirror[j]] == m[i][j]` up to `tol` relative.
pub(crate) fn is_mirror_invariant(m: MatRef<'_, c64>, mirror: &[usize], tol: f64) -> bool {
    let scale = linalg::max_abs(m).max(f64::MIN_POSITIVE);
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if (m[(mirror[i], mirror[j])] - m[(i, j)]).norm() > tol * scale {
                return false;
            }
        }
    }
    true
}
