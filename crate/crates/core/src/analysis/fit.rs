//! Nonlinear least squares (Levenberg–Marquardt with a finite-difference Jacobian).

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug, PartialEq)]
pub struct LeastSquares {
    pub params: Vec<f64>,
    /// Standard errors from `s² (JᵀJ)⁻¹` with `s² = ‖r‖² / (m - p)`.
    pub stderr: Vec<f64>,
    /// Euclidean norm of the residual vector.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn jacobian(residual: &dyn Fn(&[f64]) -> Vec<f64>, p: &[f64], r0: &[f64]) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(r0.len(), p.len());
    let mut q = p.to_vec();
    for k in 0..p.len() {
        let h = 1e-7 * p[k].abs().max(1e-6);
        q[k] = p[k] + h;
        let rp = residual(&q);
        q[k] = p[k] - h;
        let rm = residual(&q);
        q[k] = p[k];
        for i in 0..r0.len() {
            jac[(i, k)] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    jac
}

fn norm_sqr(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// Minimize `‖residual(p)‖²` from `p0`. Parameters for which `valid` is false
/// are rejected as trial steps.
pub fn levenberg_marquardt(
    residual: &dyn Fn(&[f64]) -> Vec<f64>,
    valid: &dyn Fn(&[f64]) -> bool,
    p0: &[f64],
    max_iter: usize,
) -> LeastSquares {
    let n = p0.len();
    let mut p = p0.to_vec();
    let mut r = residual(&p);
    let mut cost = norm_sqr(&r);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let jac = jacobian(residual, &p, &r);
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * DVector::from_column_slice(&r);
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&(-&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            if !valid(&trial) {
                lambda *= 10.0;
                continue;
            }
            let rt = residual(&trial);
            let ct = norm_sqr(&rt);
            if ct.is_finite() && ct <= cost {
                let rel_step = step.iter().zip(&p).map(|(s, q)| (s / q.abs().max(1e-12)).abs()).fold(0.0, f64::max);
                let rel_cost = (cost - ct) / cost.max(1e-300);
                p = trial;
                r = rt;
                cost = ct;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if rel_step < 1e-10 || rel_cost < 1e-14 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // no downhill step at any damping: stationary to working precision
            converged = true;
        }
        if converged {
            break;
        }
    }
    let jac = jacobian(residual, &p, &r);
    let dof = (r.len() as f64 - n as f64).max(1.0);
    let s2 = cost / dof;
    let stderr = match (jac.transpose() * &jac).try_inverse() {
        Some(inv) => (0..n).map(|k| (s2 * inv[(k, k)]).max(0.0).sqrt()).collect(),
        None => vec![f64::INFINITY; n],
    };
    LeastSquares { params: p, stderr, residual_norm: cost.sqrt(), converged, iterations }
}

/// Ordinary least squares `y ≈ X b`; returns coefficients, their standard errors and
/// the residual norm.
pub fn linear_least_squares(design: &DMatrix<f64>, y: &[f64]) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let (m, n) = design.shape();
    let yv = DVector::from_column_slice(y);
    let xtx = design.transpose() * design;
    let inv = xtx.clone().try_inverse()?;
    let b = &inv * (design.transpose() * &yv);
    let res = &yv - design * &b;
    let cost = res.norm_squared();
    let s2 = if m > n { cost / (m - n) as f64 } else { 0.0 };
    let se = (0..n).map(|k| (s2 * inv[(k, k)]).max(0.0).sqrt()).collect();
    Some((b.iter().copied().collect(), se, cost.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_fit() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|x| 2.0 * (-1.3 * x).exp()).collect();
        let res = |p: &[f64]| x.iter().zip(&y).map(|(x, y)| p[0] * (-p[1] * x).exp() - y).collect();
        let fit = levenberg_marquardt(&res, &|_| true, &[1.0, 0.5], 200);
        assert!(fit.converged);
        assert!((fit.params[0] - 2.0).abs() < 1e-8 && (fit.params[1] - 1.3).abs() < 1e-8);
        assert!(fit.residual_norm < 1e-8);
    }

    #[test]
    fn straight_line_ols() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let design = DMatrix::from_fn(10, 2, |i, j| if j == 0 { 1.0 } else { x[i] });
        let y: Vec<f64> = x.iter().map(|x| 3.0 - 0.5 * x).collect();
        let (b, se, r) = linear_least_squares(&design, &y).unwrap();
        assert!((b[0] - 3.0).abs() < 1e-12 && (b[1] + 0.5).abs() < 1e-12);
        assert!(se.iter().all(|s| *s < 1e-10) && r < 1e-10);
    }
}
