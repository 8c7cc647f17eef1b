//! Basis pursuit `min ‖c‖₁ s.t. Ac = y` by ADMM with support polishing.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, AffineProjector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BpOptions {
    /// Feasibility tolerance relative to `‖y‖₂`.
    pub eq_tol: f64,
    pub max_iter: usize,
    /// Relative ℓ2 error below which a recovery counts as exact.
    pub success_threshold: f64,
    /// Relative duality gap at which the iteration stops.
    pub gap_tol: f64,
}

impl Default for BpOptions {
    fn default() -> Self {
        BpOptions { eq_tol: 1e-8, max_iter: 20_000, success_threshold: 1e-3, gap_tol: 1e-10 }
    }
}

impl BpOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.eq_tol, self.success_threshold, self.gap_tol].iter().all(|&t| t > 0.0 && t.is_finite());
        if !positive || self.max_iter == 0 {
            return Err(Error::Parameter("basis pursuit tolerances and max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpSolution {
    pub x: DVector<f64>,
    /// `‖x‖₁`.
    pub objective: f64,
    /// Best certified lower bound on the optimum.
    pub lower_bound: f64,
    /// `‖Ax − y‖₂`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves basis pursuit for a single right-hand side.
pub fn bp_solve(a: &DMatrix<f64>, y: &DVector<f64>, opts: &BpOptions) -> Result<BpSolution> {
    let projector = AffineProjector::new(a);
    bp_solve_with(a, &projector, y, opts)
}

/// As [`bp_solve`], reusing a projector built for `a`.
pub fn bp_solve_with(a: &DMatrix<f64>, projector: &AffineProjector, y: &DVector<f64>, opts: &BpOptions) -> Result<BpSolution> {
    opts.validate()?;
    if y.len() != a.nrows() {
        return Err(Error::Dimension(format!("measurement length {} for a {}-row matrix", y.len(), a.nrows())));
    }
    let n = a.ncols();
    let y_norm = y.norm();
    let feas_tol = opts.eq_tol * y_norm;
    let x0 = projector.min_norm_solution(y);
    let r0 = (a * &x0 - y).norm();
    if r0 > feas_tol {
        return Err(Error::Infeasible(format!("measurements are not in the range of A (residual {r0:.3e})")));
    }
    if y_norm == 0.0 {
        return Ok(BpSolution {
            x: DVector::zeros(n),
            objective: 0.0,
            lower_bound: 0.0,
            residual: 0.0,
            iterations: 0,
            converged: true,
        });
    }

    let amax = x0.amax();
    let mut rho = if amax > 0.0 { 10.0 / amax } else { 1.0 };
    let mut z = x0.clone();
    let mut u = DVector::<f64>::zeros(n);
    let mut best = (x0.lp_norm(1), x0.clone());
    let mut lower = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let mut last_support = Vec::new();

    for it in 1..=opts.max_iter {
        iterations = it;
        let x = &x0 + projector.project_nullspace(&(&z - &u - &x0));
        let z_old = z.clone();
        let t = 1.0 / rho;
        z = (&x + &u).map(|v| v.signum() * (v.abs() - t).max(0.0));
        u += &x - &z;

        if it % CHECK_EVERY != 0 && it != opts.max_iter {
            continue;
        }
        let value = x.lp_norm(1);
        if value < best.0 {
            best = (value, x.clone());
        }
        lower = lower.max(dual_bound(projector, &(&u * rho), &x));
        if let Some((polished, bound)) = polish(a, y, &z, feas_tol, &mut last_support) {
            let pv = polished.lp_norm(1);
            if pv < best.0 {
                best = (pv, polished);
            }
            lower = lower.max(bound);
        }
        if best.0 - lower <= opts.gap_tol * best.0.max(1.0) {
            converged = true;
            break;
        }
        if (it / CHECK_EVERY).is_power_of_two() {
            let r = (&x - &z).norm();
            let s = rho * (&z - &z_old).norm();
            if r > 10.0 * s {
                rho *= 2.0;
                u /= 2.0;
            } else if s > 10.0 * r {
                rho /= 2.0;
                u *= 2.0;
            }
        }
    }
    let (objective, x) = best;
    let residual = (a * &x - y).norm();
    Ok(BpSolution { x, objective, lower_bound: lower, residual, iterations, converged })
}

const CHECK_EVERY: usize = 10;

/// Weak-duality bound `⟨x, w⟩` for `w` in the row space of `A` with
/// `‖w‖∞ ≤ 1`, valid for any feasible `x`.
fn dual_bound(projector: &AffineProjector, w: &DVector<f64>, feasible: &DVector<f64>) -> f64 {
    let row_part = w - projector.project_nullspace(w);
    let scale = row_part.amax();
    if scale == 0.0 {
        return 0.0;
    }
    feasible.dot(&row_part) / scale.max(1.0)
}

/// Least-squares solution restricted to the current support, with the dual
/// bound obtained from its sign pattern.
///
/// Skipped when the support has not changed since the previous call.
fn polish(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    z: &DVector<f64>,
    feas_tol: f64,
    last_support: &mut Vec<usize>,
) -> Option<(DVector<f64>, f64)> {
    let zmax = z.amax();
    if zmax == 0.0 {
        return None;
    }
    let support: Vec<usize> = (0..z.len()).filter(|&i| z[i].abs() > 1e-9 * zmax).collect();
    if support.is_empty() || support.len() > a.nrows() || support == *last_support {
        return None;
    }
    last_support.clone_from(&support);
    let (u, sigma, v_t) = linalg::svd(&a.select_columns(&support));
    let smax = sigma[0];
    let inv = sigma.map(|v| if v > 1e-12 * smax { 1.0 / v } else { 0.0 });
    let coeffs = v_t.transpose() * (u.transpose() * y).component_mul(&inv);
    let mut x = DVector::zeros(a.ncols());
    for (k, &i) in support.iter().enumerate() {
        x[i] = coeffs[k];
    }
    if (a * &x - y).norm() > feas_tol {
        return None;
    }
    // ν solving A_Sᵀ ν = sign(x_S) in the least-squares sense; Aᵀν then lies
    // in the row space and gives a bound once scaled into the ℓ∞ ball.
    let signs = DVector::from_iterator(support.len(), coeffs.iter().map(|v| v.signum()));
    let nu = &u * (&v_t * signs).component_mul(&inv);
    let w = a.transpose() * nu;
    let scale = w.amax().max(1.0);
    let bound = x.dot(&w) / scale;
    Some((x, bound))
}

/// `‖ĉ − c‖₂ / ‖c‖₂ ≤ τ`.
pub fn recovery_success(c_hat: &DVector<f64>, c_true: &DVector<f64>, tau: f64) -> Result<bool> {
    if c_hat.len() != c_true.len() {
        return Err(Error::Dimension(format!("lengths {} and {} differ", c_hat.len(), c_true.len())));
    }
    let norm = c_true.norm();
    if norm == 0.0 {
        return Err(Error::Parameter("true signal is zero; relative error is undefined".into()));
    }
    Ok((c_hat - c_true).norm() / norm <= tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_measurements() {
        let a = DMatrix::<f64>::identity(4, 4);
        let y = DVector::from_vec(vec![1.0, -2.0, 0.0, 0.5]);
        let s = bp_solve(&a, &y, &BpOptions::default()).unwrap();
        assert!((s.x - &y).amax() < 1e-10);
        assert!(s.converged);
    }

    #[test]
    fn two_candidate_lp() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let y = DVector::from_vec(vec![2.0]);
        let s = bp_solve(&a, &y, &BpOptions::default()).unwrap();
        assert!((s.x[0]).abs() < 1e-9 && (s.x[1] - 1.0).abs() < 1e-9, "{:?}", s.x);
        assert!((s.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn inconsistent_system_is_infeasible() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        let y = DVector::from_vec(vec![1.0, 0.0]);
        assert!(matches!(bp_solve(&a, &y, &BpOptions::default()), Err(Error::Infeasible(_))));
    }

    #[test]
    fn zero_measurements_give_zero() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]);
        let s = bp_solve(&a, &DVector::zeros(1), &BpOptions::default()).unwrap();
        assert_eq!(s.x, DVector::zeros(3));
    }

    #[test]
    fn success_criterion() {
        let c = DVector::from_vec(vec![1.0, 0.0, -2.0]);
        assert!(recovery_success(&c, &c, 1e-3).unwrap());
        assert!(!recovery_success(&DVector::zeros(3), &c, 1e-3).unwrap());
        assert!(recovery_success(&(&c * (1.0 + 5e-4)), &c, 1e-3).unwrap());
        assert!(recovery_success(&c, &DVector::zeros(3), 1e-3).is_err());
    }
}
