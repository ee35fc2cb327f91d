//! Small helpers around `faer` dense matrices.

use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, Mat, MatRef, Side};

use crate::error::{Error, Result};

pub(crate) fn max_abs_imag(m: MatRef<'_, c64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            worst = worst.max(m[(i, j)].im.abs());
        }
    }
    worst
}

pub(crate) fn max_abs(m: MatRef<'_, c64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            worst = worst.max(m[(i, j)].norm());
        }
    }
    worst
}

pub(crate) fn real_part(m: MatRef<'_, c64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re)
}

pub(crate) fn complexify(m: MatRef<'_, f64>) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| c64::new(m[(i, j)], 0.0))
}

/// Largest elementwise deviation from Hermitian symmetry.
pub fn hermiticity_residual(m: MatRef<'_, c64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..=j.min(m.nrows() - 1) {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Inverse of a Hermitian positive-definite matrix. When `real` is set the
/// imaginary parts are known to vanish and the factorization runs in real
/// arithmetic.
pub(crate) fn hpd_inverse(m: MatRef<'_, c64>, real: bool, what: &str) -> Result<Mat<c64>> {
    let fail = |_| {
        Error::Numerical(format!(
            "{what} is singular or not positive definite at this truncation; \
             increase the plane-wave cutoff"
        ))
    };
    if real {
        let r = real_part(m);
        let inv = r.llt(Side::Lower).map_err(fail)?.inverse();
        check_finite(inv.as_ref(), what)?;
        Ok(complexify(inv.as_ref()))
    } else {
        let inv = m.to_owned().llt(Side::Lower).map_err(fail)?.inverse();
        for j in 0..inv.ncols() {
            for i in 0..inv.nrows() {
                if !inv[(i, j)].re.is_finite() || !inv[(i, j)].im.is_finite() {
                    return Err(Error::Numerical(format!("{what} inverse is not finite")));
                }
            }
        }
        Ok(inv)
    }
}

fn check_finite(m: MatRef<'_, f64>, what: &str) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(Error::Numerical(format!("{what} inverse is not finite")));
            }
        }
    }
    Ok(())
}
