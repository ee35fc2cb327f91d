//! Damped Gauss-Newton (Levenberg-Marquardt) least squares shared by the
//! spectral and time-trace fits.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{Col, Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    /// Stop when an accepted step lowers the cost by less than this fraction.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 200,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::param(
                "tolerance",
                format!("must lie in (0, 1), got {}", self.tolerance),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::param("max_iterations", "must be at least 1"));
        }
        Ok(())
    }
}

/// Least-squares problem with `residuals.len()` fixed at construction.
pub(crate) trait Problem {
    fn n_residuals(&self) -> usize;

    /// Fills residuals and the Jacobian `d r_i / d p_j`. Returns `false` for
    /// parameters outside the model's domain.
    fn evaluate(&self, p: &[f64], r: &mut [f64], jac: &mut Mat<f64>) -> bool;
}

#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub params: Vec<f64>,
    /// `0.5 * sum r^2`
    pub cost: f64,
    /// `s^2 (J^T J)^-1` with `s^2 = 2 cost / (m - n)`; `None` when the
    /// Jacobian is rank deficient at the optimum.
    pub covariance: Option<Mat<f64>>,
    pub iterations: usize,
}

impl Solution {
    pub fn sigma(&self, j: usize) -> Option<f64> {
        self.covariance.as_ref().map(|c| c[(j, j)].max(0.0).sqrt())
    }

    pub fn sigmas(&self) -> Result<Vec<f64>> {
        (0..self.params.len())
            .map(|j| self.sigma(j))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| {
                Error::Numerical(
                    "Jacobian is rank deficient at the optimum; parameters are not identifiable"
                        .into(),
                )
            })
    }
}

pub(crate) fn minimize(problem: &impl Problem, p0: &[f64], opts: &FitOptions) -> Result<Solution> {
    opts.validate()?;
    let n = p0.len();
    let m = problem.n_residuals();
    if m < n {
        return Err(Error::Precondition(format!(
            "{m} residuals cannot determine {n} parameters"
        )));
    }
    let mut p = p0.to_vec();
    let mut r = vec![0.0; m];
    let mut jac = Mat::<f64>::zeros(m, n);
    if !problem.evaluate(&p, &mut r, &mut jac) {
        return Err(Error::Precondition(
            "initial parameters are outside the model domain".into(),
        ));
    }
    let mut cost = half_sum_sq(&r);
    if !cost.is_finite() {
        return Err(Error::Numerical(
            "non-finite residuals at the initial parameters".into(),
        ));
    }
    let mut history = vec![cost];
    let mut lambda = 1e-3;
    let mut trial_r = vec![0.0; m];
    let mut trial_jac = Mat::<f64>::zeros(m, n);
    let mut converged = cost == 0.0;
    let mut iterations = 0;

    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let rc = Col::from_fn(m, |i| r[i]);
        let grad = jac.transpose() * &rc;
        let scale: Vec<f64> = (0..n)
            .map(|j| {
                jtj[(j, j)]
                    .max(1e-12 * max_diag(&jtj))
                    .max(f64::MIN_POSITIVE)
            })
            .collect();
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for j in 0..n {
                a[(j, j)] += lambda * scale[j];
            }
            let Ok(llt) = a.llt(Side::Lower) else {
                lambda *= 10.0;
                continue;
            };
            let step = llt.solve(&grad);
            let trial: Vec<f64> = (0..n).map(|j| p[j] - step[j]).collect();
            if problem.evaluate(&trial, &mut trial_r, &mut trial_jac) {
                let trial_cost = half_sum_sq(&trial_r);
                if trial_cost.is_finite() && trial_cost <= cost {
                    let decrease = (cost - trial_cost) / cost.max(f64::MIN_POSITIVE);
                    let tiny_step = (0..n).all(|j| step[j].abs() <= 1e-15 * (p[j].abs() + 1e-300));
                    p = trial;
                    std::mem::swap(&mut r, &mut trial_r);
                    std::mem::swap(&mut jac, &mut trial_jac);
                    cost = trial_cost;
                    history.push(cost);
                    lambda = (lambda / 10.0).max(1e-12);
                    accepted = true;
                    converged = decrease < opts.tolerance || tiny_step || cost == 0.0;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !accepted {
            // No downhill direction at any damping: the cost sits at a
            // minimum to working precision.
            converged = true;
        }
    }
    if !converged {
        return Err(Error::FitDivergence {
            iterations,
            cost,
            best_params: p,
            cost_history: history,
        });
    }
    let covariance = covariance(&jac, cost, m, n);
    Ok(Solution {
        params: p,
        cost,
        covariance,
        iterations,
    })
}

fn covariance(jac: &Mat<f64>, cost: f64, m: usize, n: usize) -> Option<Mat<f64>> {
    let jtj = jac.transpose() * jac;
    let inv = jtj.llt(Side::Lower).ok()?.inverse();
    if (0..n).any(|j| !(inv[(j, j)] >= 0.0 && inv[(j, j)].is_finite())) {
        return None;
    }
    let dof = m.saturating_sub(n).max(1) as f64;
    Some(inv * faer::Scale(2.0 * cost / dof))
}

fn max_diag(m: &Mat<f64>) -> f64 {
    (0..m.nrows()).map(|j| m[(j, j)]).fold(0.0, f64::max)
}

fn half_sum_sq(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `y = a exp(b x)`, the classic two-parameter test.
    struct Exp {
        x: Vec<f64>,
        y: Vec<f64>,
    }

    impl Problem for Exp {
        fn n_residuals(&self) -> usize {
            self.x.len()
        }

        fn evaluate(&self, p: &[f64], r: &mut [f64], jac: &mut Mat<f64>) -> bool {
            for (i, (&x, &y)) in self.x.iter().zip(&self.y).enumerate() {
                let e = (p[1] * x).exp();
                r[i] = p[0] * e - y;
                jac[(i, 0)] = e;
                jac[(i, 1)] = p[0] * x * e;
            }
            true
        }
    }

    #[test]
    fn recovers_exact_parameters() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let y = x.iter().map(|x| 3.0 * (-1.3 * x).exp()).collect();
        let sol = minimize(&Exp { x, y }, &[1.0, 0.0], &FitOptions::default()).unwrap();
        assert!((sol.params[0] - 3.0).abs() < 1e-10);
        assert!((sol.params[1] + 1.3).abs() < 1e-10);
        assert!(sol.cost < 1e-20);
    }

    #[test]
    fn linear_covariance_matches_closed_form() {
        // y = a + b x with known residuals: covariance is s^2 (X^T X)^-1.
        struct Line(Vec<f64>, Vec<f64>);
        impl Problem for Line {
            fn n_residuals(&self) -> usize {
                self.0.len()
            }
            fn evaluate(&self, p: &[f64], r: &mut [f64], jac: &mut Mat<f64>) -> bool {
                for i in 0..self.0.len() {
                    r[i] = p[0] + p[1] * self.0[i] - self.1[i];
                    jac[(i, 0)] = 1.0;
                    jac[(i, 1)] = self.0[i];
                }
                true
            }
        }
        let x = vec![0.0, 1.0, 2.0, 3.0];
        let y = vec![0.1, 0.9, 2.1, 2.9];
        let sol = minimize(
            &Line(x.clone(), y.clone()),
            &[0.0, 0.0],
            &FitOptions::default(),
        )
        .unwrap();
        let b = sol.params[1];
        let a = sol.params[0];
        let ss: f64 = x.iter().zip(&y).map(|(x, y)| (a + b * x - y).powi(2)).sum();
        let s2 = ss / 2.0;
        // X^T X = [[4, 6], [6, 14]], det 20
        assert!((sol.covariance.as_ref().unwrap()[(0, 0)] - s2 * 14.0 / 20.0).abs() < 1e-12);
        assert!((sol.covariance.as_ref().unwrap()[(1, 1)] - s2 * 4.0 / 20.0).abs() < 1e-12);
        assert!((b - 0.96).abs() < 1e-12);
    }

    #[test]
    fn iteration_cap_reports_history() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let y = x.iter().map(|x| 3.0 * (-1.3 * x).exp()).collect();
        let opts = FitOptions {
            max_iterations: 1,
            ..FitOptions::default()
        };
        match minimize(&Exp { x, y }, &[1.0, 0.0], &opts) {
            Err(Error::FitDivergence {
                iterations,
                cost_history,
                best_params,
                ..
            }) => {
                assert_eq!(iterations, 1);
                assert_eq!(best_params.len(), 2);
                assert!(cost_history.len() >= 2);
                assert!(cost_history.windows(2).all(|w| w[1] <= w[0]));
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn underdetermined_is_rejected() {
        let sol = minimize(
            &Exp {
                x: vec![0.0],
                y: vec![1.0],
            },
            &[1.0, 0.0],
            &FitOptions::default(),
        );
        assert!(matches!(sol, Err(Error::Precondition(_))));
    }
}
