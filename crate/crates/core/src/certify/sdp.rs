//! First-order solver for the lifted spherical-section relaxation.
//!
//! The relaxation is
//!
//! ```text
//! minimize Σᵢⱼ |Yᵢⱼ|  subject to  Y ⪰ 0, trace(Y) = 1, A·Y = 0.
//! ```
//!
//! Every feasible `Y` has the form `Z M Zᵀ` with `Z` an orthonormal nullspace
//! basis and `M` in the spectrahedron `{M ⪰ 0, trace(M) = 1}`, so the solver
//! works with `M` directly and splits off the ℓ1 term:
//!
//! ```text
//! M ← Π_spec(Zᵀ(Y + U)Z),   P = Z M Zᵀ,   Y ← soft(P − U, 1/ρ),   U ← U + Y − P.
//! ```
//!
//! For any symmetric `W` with entries in `[−1, 1]`,
//! `Σ|Pᵢⱼ| ≥ ⟨W, P⟩ = ⟨ZᵀWZ, M⟩ ≥ λ_min(ZᵀWZ)`, so each dual iterate yields a
//! rigorous lower bound. The reported `delta_sq` is the best such bound.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Certificate, CertificateMethod, SolverReport, SolverStatus};
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdpOptions {
    /// Relative duality-gap tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Largest accepted column count `N`.
    pub max_columns: usize,
    /// Iterations between duality-gap evaluations.
    pub check_every: usize,
    /// Initial penalty; chosen from the problem scale when absent.
    pub rho: Option<f64>,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions { tol: 1e-6, max_iter: 50_000, max_columns: 1100, check_every: 10, rho: None }
    }
}

impl SdpOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || self.check_every == 0 {
            return Err(Error::Parameter("SDP options need tol > 0, max_iter > 0 and check_every > 0".into()));
        }
        if let Some(rho) = self.rho {
            if !(rho > 0.0) {
                return Err(Error::Parameter(format!("penalty must be positive, got {rho}")));
            }
        }
        Ok(())
    }
}

/// Certified lower bound `delta_sq ≤ SSP(A)²` from the lifted relaxation.
///
/// A trivial nullspace yields an infinite certificate. When the iteration
/// limit is reached before the gap closes, the certificate is flagged
/// unconverged with `delta_sq = 0`; the best dual bound stays in the report.
pub fn ssp_sdp_lower_bound(a: &DMatrix<f64>, opts: &SdpOptions) -> Result<Certificate> {
    opts.validate()?;
    let n = a.ncols();
    if n > opts.max_columns {
        return Err(Error::Size(format!("{n} columns exceed the SDP cap of {}", opts.max_columns)));
    }
    let start = Instant::now();
    let z = linalg::nullspace(a);
    if z.ncols() == 0 {
        let report = SolverReport {
            objective: f64::INFINITY,
            dual_bound: f64::INFINITY,
            runtime_seconds: start.elapsed().as_secs_f64(),
            ..Default::default()
        };
        return Ok(Certificate::new(f64::INFINITY, CertificateMethod::SdpRelaxation, SolverStatus::TrivialNullspace, report));
    }
    let out = Admm::new(z, opts).run();
    let report = SolverReport {
        iterations: out.iterations,
        primal_residual: out.primal_residual,
        dual_residual: out.dual_residual,
        objective: out.primal,
        dual_bound: out.dual,
        runtime_seconds: start.elapsed().as_secs_f64(),
    };
    let (delta_sq, status) =
        if out.converged { (out.dual.max(0.0), SolverStatus::Converged) } else { (0.0, SolverStatus::Unconverged) };
    Ok(Certificate::new(delta_sq, CertificateMethod::SdpRelaxation, status, report))
}

const RELAXATION: f64 = 1.6;

struct Outcome {
    iterations: usize,
    primal: f64,
    dual: f64,
    primal_residual: f64,
    dual_residual: f64,
    converged: bool,
}

struct Admm<'a> {
    z: DMatrix<f64>,
    opts: &'a SdpOptions,
}

impl<'a> Admm<'a> {
    fn new(z: DMatrix<f64>, opts: &'a SdpOptions) -> Self {
        Admm { z, opts }
    }

    fn run(&self) -> Outcome {
        let z = &self.z;
        let (n, d) = z.shape();
        let mut p = (z * z.transpose()) / d as f64;
        let mut y = p.clone();
        let mut u = DMatrix::<f64>::zeros(n, n);
        let mut rho = self.opts.rho.unwrap_or_else(|| {
            let mean = p.iter().map(|v| v.abs()).sum::<f64>() / (n * n) as f64;
            if mean > 0.0 { 1.0 / mean } else { 1.0 }
        });
        let mut best_primal = entry_l1(&p);
        let mut best_dual = f64::NEG_INFINITY;
        let (mut r_norm, mut s_norm) = (f64::INFINITY, f64::INFINITY);
        let mut iterations = 0;
        let mut converged = false;

        for it in 1..=self.opts.max_iter {
            iterations = it;
            let mut target = &y + &u;
            target = z.transpose() * target * z;
            symmetrize(&mut target);
            let p_new = self.lift(&target);
            let threshold = 1.0 / rho;
            let mut diff = 0.0;
            let mut change = 0.0;
            for (((yv, uv), &pv), &po) in y.iter_mut().zip(u.iter_mut()).zip(p_new.iter()).zip(p.iter()) {
                let relaxed = RELAXATION * pv + (1.0 - RELAXATION) * *yv;
                *yv = soft(relaxed - *uv, threshold);
                *uv += *yv - relaxed;
                diff += (*yv - pv) * (*yv - pv);
                change += (pv - po) * (pv - po);
            }
            r_norm = diff.sqrt();
            s_norm = rho * change.sqrt();
            p = p_new;

            if it % self.opts.check_every == 0 || it == self.opts.max_iter {
                best_primal = best_primal.min(entry_l1(&p));
                best_dual = best_dual.max(self.dual_bound(&u, rho, &p));
                let gap_closed = best_primal - best_dual <= self.opts.tol * best_primal.max(1.0);
                let scale_p = p.norm().max(y.norm());
                let scale_d = rho * u.norm();
                let stalled = r_norm <= self.opts.tol * scale_p && s_norm <= self.opts.tol * scale_d;
                if gap_closed || stalled {
                    converged = true;
                    break;
                }
                if !rebalance_at(it) {
                    continue;
                }
                if r_norm > 10.0 * s_norm {
                    rho *= 2.0;
                    u /= 2.0;
                } else if s_norm > 10.0 * r_norm {
                    rho /= 2.0;
                    u *= 2.0;
                }
            }
        }
        Outcome {
            iterations,
            primal: best_primal,
            dual: best_dual,
            primal_residual: r_norm,
            dual_residual: s_norm,
            converged,
        }
    }

    /// `Z Π_spec(S) Zᵀ`, assembled from the nonzero eigenpairs only.
    fn lift(&self, s: &DMatrix<f64>) -> DMatrix<f64> {
        let (values, vectors) = linalg::symmetric_eigen(s);
        let weights = simplex_projection(&values);
        let keep: Vec<usize> = (0..weights.len()).filter(|&k| weights[k] > 0.0).collect();
        let mut g = DMatrix::zeros(self.z.nrows(), keep.len());
        let mut scaled = DMatrix::zeros(self.z.nrows(), keep.len());
        for (c, &k) in keep.iter().enumerate() {
            let col = &self.z * vectors.column(k);
            scaled.set_column(c, &(&col * weights[k]));
            g.set_column(c, &col);
        }
        scaled * g.transpose()
    }

    /// Best of two dual candidates: the clipped scaled multiplier and a sign
    /// pattern of the current primal point.
    fn dual_bound(&self, u: &DMatrix<f64>, rho: f64, p: &DMatrix<f64>) -> f64 {
        let mut w = u.map(|v| (-rho * v).clamp(-1.0, 1.0));
        symmetrize(&mut w);
        let from_multiplier = self.lambda_min(&w);
        let scale = p.amax();
        let mut hybrid = w;
        hybrid.zip_apply(p, |wv, pv| {
            if pv.abs() > 1e-9 * scale {
                *wv = pv.signum();
            }
        });
        symmetrize(&mut hybrid);
        from_multiplier.max(self.lambda_min(&hybrid))
    }

    fn lambda_min(&self, w: &DMatrix<f64>) -> f64 {
        let mut reduced = self.z.transpose() * w * &self.z;
        symmetrize(&mut reduced);
        linalg::symmetric_eigenvalues(&reduced)[0]
    }
}

/// Penalty updates at geometrically spaced iterations, so that they stop
/// interfering with convergence.
fn rebalance_at(it: usize) -> bool {
    it >= 20 && (it / 10).is_power_of_two()
}

fn entry_l1(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v.abs()).sum()
}

fn soft(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Euclidean projection of `v` onto the probability simplex.
fn simplex_projection(v: &DVector<f64>) -> DVector<f64> {
    let mut sorted: Vec<f64> = v.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &s) in sorted.iter().enumerate() {
        cumulative += s;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    v.map(|x| (x - theta).max(0.0))
}
