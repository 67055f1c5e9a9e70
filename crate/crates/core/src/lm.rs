//! Damped Gauss-Newton (Levenberg-Marquardt) for small dense least-squares
//! problems.

use nalgebra::{DMatrix, DVector};

pub(crate) trait Residuals {
    fn residual_count(&self) -> usize;
    fn param_count(&self) -> usize;
    /// Fills `r` with residuals at `x` and, when given, `jac` (residuals ×
    /// parameters) with their partial derivatives.
    fn eval(&self, x: &[f64], r: &mut [f64], jac: Option<&mut DMatrix<f64>>);
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LmSettings {
    pub max_iterations: usize,
    /// Converged once an accepted step lowers the objective by less than
    /// this fraction.
    pub relative_tolerance: f64,
}

impl Default for LmSettings {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            relative_tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LmOutcome {
    pub x: Vec<f64>,
    /// Sum of squared residuals.
    pub cost: f64,
    /// Stopped on the tolerance or at a stationary point rather than at the
    /// iteration cap.
    #[cfg_attr(not(test), allow(dead_code))]
    pub converged: bool,
}

impl LmOutcome {
    /// Finite cost and parameters. Hitting the iteration cap still counts:
    /// near-degenerate models creep along a valley and never meet the
    /// relative tolerance.
    pub fn usable(&self) -> bool {
        self.cost.is_finite() && self.x.iter().all(|v| v.is_finite())
    }
}

const LAMBDA_START: f64 = 1e-3;
const LAMBDA_MIN: f64 = 1e-15;
const LAMBDA_MAX: f64 = 1e16;

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

pub(crate) fn minimize<P: Residuals>(problem: &P, x0: &[f64], settings: LmSettings) -> LmOutcome {
    let rows = problem.residual_count();
    let cols = problem.param_count();
    let mut x = x0.to_vec();
    let mut r = vec![0.0; rows];
    let mut jac = DMatrix::zeros(rows, cols);
    problem.eval(&x, &mut r, Some(&mut jac));
    let mut cost = sum_sq(&r);
    if !cost.is_finite() {
        return LmOutcome {
            x,
            cost,
            converged: false,
        };
    }

    let mut trial = vec![0.0; rows];
    let mut lambda = LAMBDA_START;
    let mut converged = cost == 0.0;
    let mut iterations = 0;
    while !converged && iterations < settings.max_iterations {
        iterations += 1;
        let normal = jac.transpose() * &jac;
        let grad = jac.transpose() * DVector::from_column_slice(&r);
        let diag_floor = normal.diagonal().max() * 1e-12 + f64::MIN_POSITIVE;

        let mut damped = normal.clone();
        for i in 0..cols {
            damped[(i, i)] += lambda * normal[(i, i)].max(diag_floor);
        }
        let step = damped.cholesky().map(|ch| ch.solve(&(-&grad)));
        let accepted = match step {
            Some(step) if step.iter().all(|v| v.is_finite()) => {
                let x_new: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + d).collect();
                problem.eval(&x_new, &mut trial, None);
                let new_cost = sum_sq(&trial);
                if new_cost.is_finite() && new_cost < cost {
                    let relative = (cost - new_cost) / cost;
                    x = x_new;
                    cost = new_cost;
                    problem.eval(&x, &mut r, Some(&mut jac));
                    lambda = (lambda / 10.0).max(LAMBDA_MIN);
                    if relative < settings.relative_tolerance || cost == 0.0 {
                        converged = true;
                    }
                    true
                } else {
                    false
                }
            }
            _ => false,
        };
        if !accepted {
            lambda *= 10.0;
            // no descent direction left: stationary point
            if lambda > LAMBDA_MAX {
                converged = true;
            }
        }
    }
    LmOutcome { x, cost, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// y = a·exp(b·t)
    struct ExpModel {
        t: Vec<f64>,
        y: Vec<f64>,
    }

    impl Residuals for ExpModel {
        fn residual_count(&self) -> usize {
            self.t.len()
        }
        fn param_count(&self) -> usize {
            2
        }
        fn eval(&self, x: &[f64], r: &mut [f64], jac: Option<&mut DMatrix<f64>>) {
            for (i, (&t, &y)) in self.t.iter().zip(&self.y).enumerate() {
                r[i] = x[0] * (x[1] * t).exp() - y;
            }
            if let Some(j) = jac {
                for (i, &t) in self.t.iter().enumerate() {
                    j[(i, 0)] = (x[1] * t).exp();
                    j[(i, 1)] = x[0] * t * (x[1] * t).exp();
                }
            }
        }
    }

    #[test]
    fn recovers_exponential() {
        let t: Vec<f64> = (0..20).map(|i| i as f64 / 10.0).collect();
        let y = t.iter().map(|&t| 2.5 * (-0.7 * t).exp()).collect();
        let out = minimize(&ExpModel { t, y }, &[1.0, 0.0], LmSettings::default());
        assert!(out.converged);
        assert!((out.x[0] - 2.5).abs() < 1e-9);
        assert!((out.x[1] + 0.7).abs() < 1e-9);
        assert!(out.cost < 1e-20);
    }

    #[test]
    fn rosenbrock_as_residuals() {
        struct Rosen;
        impl Residuals for Rosen {
            fn residual_count(&self) -> usize {
                2
            }
            fn param_count(&self) -> usize {
                2
            }
            fn eval(&self, x: &[f64], r: &mut [f64], jac: Option<&mut DMatrix<f64>>) {
                r[0] = 10.0 * (x[1] - x[0] * x[0]);
                r[1] = 1.0 - x[0];
                if let Some(j) = jac {
                    j[(0, 0)] = -20.0 * x[0];
                    j[(0, 1)] = 10.0;
                    j[(1, 0)] = -1.0;
                    j[(1, 1)] = 0.0;
                }
            }
        }
        let out = minimize(&Rosen, &[-1.2, 1.0], LmSettings::default());
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-8 && (out.x[1] - 1.0).abs() < 1e-8);
    }
}
