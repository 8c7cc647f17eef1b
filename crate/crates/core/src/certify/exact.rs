//! Exact (exponential-time) Spark and spherical-section computations.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, RANK_TOL};

/// Default column cap for [`spark_bruteforce`].
pub const DEFAULT_SPARK_CAP: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spark {
    Finite(usize),
    /// Columns are linearly independent: the nullspace is trivial.
    Infinite,
}

impl Spark {
    pub fn as_f64(self) -> f64 {
        match self {
            Spark::Finite(s) => s as f64,
            Spark::Infinite => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactOptions {
    /// Column cap for circuit enumeration (nullity ≥ 3).
    pub max_columns: usize,
    /// Nullity cap for circuit enumeration.
    pub max_nullity: usize,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions { max_columns: 16, max_nullity: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SspMethod {
    TrivialNullspace,
    ClosedForm,
    AngularSweep,
    CircuitEnumeration,
}

/// Exact spherical-section value `SSP(A) = min ‖η‖₁/‖η‖₂` (not squared).
#[derive(Debug, Clone, PartialEq)]
pub struct SspExact {
    pub ratio: f64,
    /// A unit-norm minimizer, absent for a trivial nullspace.
    pub witness: Option<DVector<f64>>,
    pub nullity: usize,
    pub method: SspMethod,
}

fn threshold(a: &DMatrix<f64>) -> f64 {
    RANK_TOL * linalg::spectral_norm(a)
}

fn min_singular_value(a: &DMatrix<f64>, cols: &[usize]) -> f64 {
    if cols.len() > a.nrows() {
        return 0.0;
    }
    linalg::singular_values(&a.select_columns(cols)).min()
}

/// Smallest number of linearly dependent columns, by enumerating column
/// subsets in increasing size.
///
/// A subset is dependent when its smallest singular value is at most
/// `1e−10·σ_max(A)`.
pub fn spark_bruteforce(a: &DMatrix<f64>, max_columns: usize) -> Result<Spark> {
    let n = a.ncols();
    if n > max_columns {
        return Err(Error::Size(format!("{n} columns exceed the brute-force Spark cap of {max_columns}")));
    }
    let r = linalg::rank(a);
    if r == n {
        return Ok(Spark::Infinite);
    }
    let tol = threshold(a);
    for size in 1..=(r + 1).min(n) {
        let combos: Vec<Vec<usize>> = (0..n).combinations(size).collect();
        if combos.par_iter().any(|cols| min_singular_value(a, cols) <= tol) {
            return Ok(Spark::Finite(size));
        }
    }
    // rank r < n guarantees a dependent set of size r + 1.
    unreachable!("no dependent subset up to size rank + 1")
}

/// Exact `SSP(A)`, dispatching on the nullity `d`: closed form for `d ≤ 1`, an
/// angular sweep for `d = 2` and circuit enumeration for `d ≥ 3`.
pub fn ssp_exact_small(a: &DMatrix<f64>, opts: &ExactOptions) -> Result<SspExact> {
    let z = linalg::nullspace(a);
    let d = z.ncols();
    match d {
        0 => Ok(SspExact { ratio: f64::INFINITY, witness: None, nullity: 0, method: SspMethod::TrivialNullspace }),
        1 => {
            let v = z.column(0).into_owned();
            Ok(SspExact { ratio: v.lp_norm(1) / v.norm(), witness: Some(v), nullity: 1, method: SspMethod::ClosedForm })
        }
        2 => {
            let (ratio, witness) = sweep(&z);
            Ok(SspExact { ratio, witness: Some(witness), nullity: 2, method: SspMethod::AngularSweep })
        }
        _ => {
            if d > opts.max_nullity {
                return Err(Error::Size(format!(
                    "nullity {d} exceeds the exact cap of {}; use the SDP lower bound",
                    opts.max_nullity
                )));
            }
            let (ratio, witness) = circuits(a, opts.max_columns)?;
            Ok(SspExact { ratio, witness: Some(witness), nullity: d, method: SspMethod::CircuitEnumeration })
        }
    }
}

/// `SSP(A)` for a nullity-2 matrix by a dense sweep of the unit circle in the
/// nullspace followed by golden-section refinement.
pub fn ssp_by_sweep(a: &DMatrix<f64>) -> Result<f64> {
    let z = linalg::nullspace(a);
    if z.ncols() != 2 {
        return Err(Error::Parameter(format!("angular sweep needs nullity 2, got {}", z.ncols())));
    }
    Ok(sweep(&z).0)
}

/// `SSP(A)` as the minimum of `‖η‖₁/‖η‖₂` over the circuits of `A`.
///
/// Per sign orthant the ratio is minimized on an extreme ray of the polyhedral
/// cone `N(A) ∩ orthant`; those rays are exactly the minimal-support nullspace
/// vectors (circuits), so enumerating column subsets that are minimally
/// dependent covers every orthant at once.
pub fn ssp_by_circuits(a: &DMatrix<f64>, max_columns: usize) -> Result<f64> {
    if linalg::nullspace(a).ncols() == 0 {
        return Ok(f64::INFINITY);
    }
    circuits(a, max_columns).map(|(r, _)| r)
}

const SWEEP_POINTS: usize = 20_000;
const REFINE_BRACKETS: usize = 16;

fn sweep(z: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let (z1, z2) = (z.column(0).into_owned(), z.column(1).into_owned());
    let point = |t: f64| &z1 * t.cos() + &z2 * t.sin();
    let f = |t: f64| point(t).lp_norm(1);
    let step = std::f64::consts::PI / SWEEP_POINTS as f64;
    let values: Vec<f64> = (0..SWEEP_POINTS).map(|k| f(k as f64 * step)).collect();
    // f(θ + π) = f(θ), so neighbours wrap around.
    let mut minima: Vec<usize> = (0..SWEEP_POINTS)
        .filter(|&k| {
            let prev = values[(k + SWEEP_POINTS - 1) % SWEEP_POINTS];
            let next = values[(k + 1) % SWEEP_POINTS];
            values[k] <= prev && values[k] <= next
        })
        .collect();
    minima.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    minima.truncate(REFINE_BRACKETS);
    let mut best = (f64::INFINITY, 0.0);
    for k in minima {
        let centre = k as f64 * step;
        let t = golden_section(&f, centre - step, centre + step);
        for cand in [t, centre] {
            let v = f(cand);
            if v < best.0 {
                best = (v, cand);
            }
        }
    }
    (best.0, point(best.1))
}

fn golden_section(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-13 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

fn circuits(a: &DMatrix<f64>, max_columns: usize) -> Result<(f64, DVector<f64>)> {
    let n = a.ncols();
    if n > max_columns {
        return Err(Error::Size(format!("{n} columns exceed the circuit-enumeration cap of {max_columns}")));
    }
    let r = linalg::rank(a);
    let tol = threshold(a);
    let mut best: Option<(f64, Vec<usize>, DVector<f64>)> = None;
    for size in 1..=(r + 1).min(n) {
        let combos: Vec<Vec<usize>> = (0..n).combinations(size).collect();
        let found = combos
            .into_par_iter()
            .filter_map(|cols| {
                let v = circuit_vector(a, &cols, tol)?;
                Some((v.lp_norm(1), cols, v))
            })
            .min_by(|x, y| x.0.total_cmp(&y.0).then_with(|| x.1.cmp(&y.1)));
        if let Some(cand) = found {
            if best.as_ref().is_none_or(|b| cand.0 < b.0) {
                best = Some(cand);
            }
        }
    }
    let (ratio, cols, v) = best.ok_or_else(|| Error::Parameter("matrix has no circuits (trivial nullspace)".into()))?;
    let mut witness = DVector::zeros(n);
    for (k, &c) in cols.iter().enumerate() {
        witness[c] = v[k];
    }
    Ok((ratio, witness))
}

/// Unit null vector of `A[:, cols]` when those columns form a circuit.
fn circuit_vector(a: &DMatrix<f64>, cols: &[usize], tol: f64) -> Option<DVector<f64>> {
    let sub = a.select_columns(cols);
    let z = linalg::nullspace_below(&sub, tol);
    if z.ncols() != 1 {
        return None;
    }
    let v = z.column(0).into_owned();
    v.iter().all(|x| x.abs() > 1e-9).then_some(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn spark_examples() {
        let zero_col = m(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(spark_bruteforce(&zero_col, 24).unwrap(), Spark::Finite(1));
        let tri = m(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        assert_eq!(spark_bruteforce(&tri, 24).unwrap(), Spark::Finite(3));
        let dup = m(2, 3, &[1.0, 2.0, 1.0, 3.0, 1.0, 3.0]);
        assert_eq!(spark_bruteforce(&dup, 24).unwrap(), Spark::Finite(2));
        let inv = m(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        assert_eq!(spark_bruteforce(&inv, 24).unwrap(), Spark::Infinite);
        let wide = DMatrix::zeros(1, 30);
        assert!(matches!(spark_bruteforce(&wide, 24), Err(Error::Size(_))));
    }

    #[test]
    fn ssp_closed_forms() {
        let s = ssp_exact_small(&m(1, 2, &[1.0, 1.0]), &ExactOptions::default()).unwrap();
        assert!((s.ratio - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(s.method, SspMethod::ClosedForm);
        let s = ssp_exact_small(&m(1, 2, &[1.0, 2.0]), &ExactOptions::default()).unwrap();
        assert!((s.ratio - 3.0 / 5f64.sqrt()).abs() < 1e-12);
        let s = ssp_exact_small(&m(2, 3, &[1.0, 0.0, -1.0, 0.0, 1.0, -1.0]), &ExactOptions::default()).unwrap();
        assert!((s.ratio - 3f64.sqrt()).abs() < 1e-12);
        let s = ssp_exact_small(&DMatrix::identity(3, 3), &ExactOptions::default()).unwrap();
        assert_eq!(s.ratio, f64::INFINITY);
        assert!(s.witness.is_none());
    }

    #[test]
    fn circuits_agree_with_closed_form() {
        let a = m(1, 2, &[1.0, 2.0]);
        assert!((ssp_by_circuits(&a, 16).unwrap() - 3.0 / 5f64.sqrt()).abs() < 1e-12);
        // Nullspace of [1 1 1] is 2-dimensional; circuits are e_i − e_j.
        let a = m(1, 3, &[1.0, 1.0, 1.0]);
        assert!((ssp_by_circuits(&a, 16).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert!((ssp_by_sweep(&a).unwrap() - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn nullity_cap_is_enforced() {
        let a = DMatrix::from_fn(1, 8, |_, j| j as f64 + 1.0);
        let opts = ExactOptions { max_columns: 16, max_nullity: 4 };
        assert!(matches!(ssp_exact_small(&a, &opts), Err(Error::Size(_))));
        let wide = DMatrix::from_fn(2, 20, |i, j| ((i + 1) * (j + 3)) as f64 % 7.0 + 1.0);
        assert!(matches!(ssp_exact_small(&wide, &ExactOptions::default()), Err(Error::Size(_))));
    }

    #[test]
    fn witness_is_in_nullspace() {
        let a = m(2, 5, &[1.0, 2.0, 0.5, -1.0, 3.0, 0.0, 1.0, -2.0, 4.0, 1.0]);
        let s = ssp_exact_small(&a, &ExactOptions::default()).unwrap();
        let w = s.witness.unwrap();
        assert!((&a * &w).norm() < 1e-10);
        assert!((w.lp_norm(1) / w.norm() - s.ratio).abs() < 1e-10);
    }
}
