//! Unique sparse-recovery certificates.
//!
//! For a sensing matrix `A` with nullspace `N(A)`:
//!
//! * `Spark(A)` is the size of the smallest linearly dependent column set;
//!   every `k`-sparse signal is the unique sparsest solution when `2k < Spark`.
//! * `SSP(A) = min_{η ∈ N(A)∖0} ‖η‖₁/‖η‖₂`. Cauchy–Schwarz gives
//!   `‖η‖₁² ≤ ‖η‖₀‖η‖₂²`, hence `SSP(A)² ≤ Spark(A)`.
//! * Any `Δ² ≤ SSP(A)²` certifies uniqueness for `k < Δ²/2`.
//!
//! [`spark_bruteforce`] and [`ssp_exact_small`] are exact and exponential; the
//! working-scale certificate is [`ssp_sdp_lower_bound`].

mod exact;
mod sdp;

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Dense};
use crate::sensing::{realify, prune_zero_rows, Provenance, SensingSystem};

pub use exact::{spark_bruteforce, ssp_by_circuits, DEFAULT_SPARK_CAP, ssp_by_sweep, ssp_exact_small, ExactOptions, Spark, SspExact, SspMethod};
pub use sdp::{ssp_sdp_lower_bound, SdpOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateMethod {
    ExactSmall,
    SdpRelaxation,
    Coherence,
}

impl CertificateMethod {
    pub fn name(self) -> &'static str {
        match self {
            CertificateMethod::ExactSmall => "exact",
            CertificateMethod::SdpRelaxation => "sdp",
            CertificateMethod::Coherence => "coherence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    /// Computed by an exact method.
    Exact,
    /// Duality gap below tolerance.
    Converged,
    /// Iteration limit reached; `delta_sq` is reported as 0.
    Unconverged,
    /// `A` is injective; every sparsity level is recoverable.
    TrivialNullspace,
}

impl SolverStatus {
    pub fn name(self) -> &'static str {
        match self {
            SolverStatus::Exact => "exact",
            SolverStatus::Converged => "converged",
            SolverStatus::Unconverged => "unconverged",
            SolverStatus::TrivialNullspace => "trivial_nullspace",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Relaxation objective at the final primal iterate (an upper bound on
    /// the relaxation optimum).
    pub objective: f64,
    /// Best dual lower bound found, reported even when unconverged.
    #[serde(with = "finite_or_inf")]
    pub dual_bound: f64,
    pub runtime_seconds: f64,
}

/// A certified lower bound `delta_sq ≤ SSP(A)²` and the sparsity it implies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(with = "finite_or_inf")]
    pub delta_sq: f64,
    /// Largest `k` with `k < delta_sq/2`; `None` when `A` is injective.
    pub k_max: Option<usize>,
    pub method: CertificateMethod,
    pub status: SolverStatus,
    pub solver_report: SolverReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl Certificate {
    pub(crate) fn new(delta_sq: f64, method: CertificateMethod, status: SolverStatus, report: SolverReport) -> Self {
        Certificate { delta_sq, k_max: recovery_kmax(delta_sq), method, status, solver_report: report, provenance: None }
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Certificate> {
        Ok(serde_json::from_str(text)?)
    }
}

/// `max{k ∈ ℤ≥0 : k < delta_sq/2}`, or `None` (unbounded) for an infinite
/// bound. A zero bound gives `Some(0)`: only the zero signal.
///
/// Bounds within a relative `1e−12` above an even integer round down, so
/// round-off in `delta_sq` never admits an extra sparsity level.
pub fn recovery_kmax(delta_sq: f64) -> Option<usize> {
    if delta_sq.is_infinite() {
        return None;
    }
    let half = delta_sq.max(0.0) / 2.0 * (1.0 - 1e-12);
    Some((half.ceil() as usize).saturating_sub(1))
}

/// Exact certificate `delta_sq = SSP(A)²` for small matrices.
pub fn exact_certificate(a: &DMatrix<f64>, opts: &ExactOptions) -> Result<Certificate> {
    let start = Instant::now();
    let ssp = ssp_exact_small(a, opts)?;
    let delta_sq = ssp.ratio * ssp.ratio;
    let status = if delta_sq.is_infinite() { SolverStatus::TrivialNullspace } else { SolverStatus::Exact };
    let report = SolverReport {
        objective: delta_sq,
        dual_bound: delta_sq,
        runtime_seconds: start.elapsed().as_secs_f64(),
        ..Default::default()
    };
    Ok(Certificate::new(delta_sq, CertificateMethod::ExactSmall, status, report))
}

/// Mutual coherence `max_{i≠j} |⟨aᵢ, aⱼ⟩| / (‖aᵢ‖‖aⱼ‖)`.
pub fn mutual_coherence(a: &DMatrix<f64>) -> Result<f64> {
    let norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    if let Some(j) = norms.iter().position(|&v| v == 0.0) {
        return Err(Error::Parameter(format!("column {j} is zero; coherence is undefined")));
    }
    let gram = a.transpose() * a;
    let mut mu: f64 = 0.0;
    for i in 0..a.ncols() {
        for j in (i + 1)..a.ncols() {
            mu = mu.max(gram[(i, j)].abs() / (norms[i] * norms[j]));
        }
    }
    Ok(mu)
}

/// Coherence lower bound `Spark(A) ≥ 1 + 1/μ`; infinite when the columns are
/// mutually orthogonal (`μ ≤ 1e−12`).
pub fn coherence_spark_bound(a: &DMatrix<f64>) -> Result<f64> {
    let mu = mutual_coherence(a)?;
    Ok(if mu <= 1e-12 { f64::INFINITY } else { 1.0 + 1.0 / mu })
}

/// Certificate from the coherence bound, for comparison with the others.
///
/// A zero column is a 1-sparse nullspace vector, so the bound is exactly 1.
pub fn coherence_certificate(a: &DMatrix<f64>) -> Result<Certificate> {
    let start = Instant::now();
    let bound = if a.column_iter().any(|c| c.iter().all(|&v| v == 0.0)) { 1.0 } else { coherence_spark_bound(a)? };
    let report = SolverReport {
        objective: bound,
        dual_bound: bound,
        runtime_seconds: start.elapsed().as_secs_f64(),
        ..Default::default()
    };
    let status = if bound.is_infinite() { SolverStatus::TrivialNullspace } else { SolverStatus::Exact };
    Ok(Certificate::new(bound, CertificateMethod::Coherence, status, report))
}

/// Per-mode sparsity bound `k < min_i Δᵢ²/2` for Kronecker systems.
///
/// The assembled matrix `A₂ ⊗ A₁` contains `u ⊗ eⱼ` in its nullspace for every
/// `u ∈ N(A₂)`, so `SSP(A₂ ⊗ A₁) ≤ min_i SSP(Aᵢ)`: this per-mode figure is an
/// optimistic estimate and not a certificate for the assembled matrix.
pub fn kron_recovery_bound(per_mode: &[f64]) -> Result<Option<usize>> {
    if per_mode.is_empty() {
        return Err(Error::Parameter("per-mode bound list is empty".into()));
    }
    let min = per_mode.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(recovery_kmax(min))
}

/// Per-mode certificates of a separable sensing system.
#[derive(Debug, Clone)]
pub struct KroneckerBound {
    pub per_mode: Vec<Certificate>,
    pub k_max: Option<usize>,
}

/// Certifies each mode factor with `certify` and combines them with
/// [`kron_recovery_bound`]. Fails for systems built from non-separable masks.
pub fn certify_kronecker<F>(system: &SensingSystem, mut certify: F) -> Result<KroneckerBound>
where
    F: FnMut(&DMatrix<f64>) -> Result<Certificate>,
{
    let factors = system.mode_factors().ok_or_else(|| {
        Error::Parameter("mask is not a Cartesian product; certify the assembled matrix instead".into())
    })?;
    let mut per_mode = Vec::with_capacity(2);
    for factor in [&factors.a1, &factors.a2] {
        let real = match factor {
            Dense::Real(m) => m.clone(),
            Dense::Complex(m) => prune_zero_rows(&realify(m)),
        };
        per_mode.push(certify(&real)?);
    }
    let deltas: Vec<f64> = per_mode.iter().map(|c| c.delta_sq).collect();
    let k_max = kron_recovery_bound(&deltas)?;
    Ok(KroneckerBound { per_mode, k_max })
}

/// Nullity of `A` under the crate's rank tolerance.
pub fn nullity(a: &DMatrix<f64>) -> usize {
    a.ncols() - linalg::rank(a)
}

pub(crate) mod finite_or_inf {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
        }
    }
}
