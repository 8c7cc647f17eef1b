//! Measurement model: vectorization, Kronecker composition, mask row
//! selection and realification.
//!
//! For separable sampling the sensing matrix is
//! `A = rows_Ω[(Φ₂ ⊗ Φ₁)ᵀ (Ψ ⊗ Ψ)] = rows_Ω[(Φ₂ᵀΨ) ⊗ (Φ₁ᵀΨ)]`, so the row of
//! measurement `(i, j)` is `kron(B₂[j, :], B₁[i, :])` with `Bₖ = Φₖᵀ Ψ`. Rows
//! follow the mask's column-major order `i + j·m`.
//!
//! Fourier sampling reads mask coordinates as centered k-space: mask position
//! `p` selects DFT frequency `(p − ⌊size/2⌋) mod size`, so the grid center is
//! the zero frequency. Complex rows are split into real and imaginary parts
//! and all-zero rows (the imaginary part of a real frequency) are dropped.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bases::{Basis, BasisKind, MuraOperator};
use crate::error::{dims, param, Error, Result};
use crate::linalg::{self, Dense};
use crate::masks::{is_separable, Mask, MaskKind};
use crate::rng;

/// How the image is transferred to the acquisition grid.
#[derive(Debug, Clone)]
pub enum SamplingOperator {
    /// `Y = Φ₁ᵀ X Φ₂`.
    Separable { phi1: Basis, phi2: Basis },
    /// `Y = X ∗ PSF` (2-D circular convolution).
    Convolution(MuraOperator),
}

impl SamplingOperator {
    pub fn separable(phi1: Basis, phi2: Basis) -> Self {
        SamplingOperator::Separable { phi1, phi2 }
    }

    pub fn same(phi: Basis) -> Self {
        SamplingOperator::Separable { phi1: phi.clone(), phi2: phi }
    }

    fn describe(&self) -> (Vec<String>, Vec<Option<u64>>) {
        match self {
            SamplingOperator::Separable { phi1, phi2 } => (
                vec![phi1.kind().name().to_string(), phi2.kind().name().to_string()],
                vec![phi1.seed(), phi2.seed()],
            ),
            SamplingOperator::Convolution(_) => (vec!["mura_convolution".to_string()], vec![]),
        }
    }
}

/// Where a sensing matrix came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub rows: usize,
    pub cols: usize,
    pub mask_kind: MaskKind,
    pub mask_seed: Option<u64>,
    pub mask_samples: usize,
    /// Sampling basis kind per mode, or `mura_convolution`.
    pub sampling: Vec<String>,
    pub sampling_seeds: Vec<Option<u64>>,
    pub sparsifier: BasisKind,
    pub realified: bool,
}

/// Per-mode factors `A₁ = (Φ₁ᵀΨ)[R, :]`, `A₂ = (Φ₂ᵀΨ)[C, :]` of a separable
/// mask `Ω = R × C`. Complex for Fourier sampling (before realification).
#[derive(Debug, Clone, PartialEq)]
pub struct ModeFactors {
    pub a1: Dense,
    pub a2: Dense,
}

#[derive(Debug, Clone)]
pub struct SensingSystem {
    matrix: DMatrix<f64>,
    provenance: Provenance,
    mode_factors: Option<ModeFactors>,
    row_rank: usize,
}

impl SensingSystem {
    /// The real sensing matrix `A` (`q × N`).
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn mode_factors(&self) -> Option<&ModeFactors> {
        self.mode_factors.as_ref()
    }

    /// Numerical rank of `A`; equals `q` when the rows are independent.
    pub fn row_rank(&self) -> usize {
        self.row_rank
    }

    pub fn has_full_row_rank(&self) -> bool {
        self.row_rank == self.matrix.nrows()
    }

    /// `|Ω| / N`, counting one complex sample as one sample.
    pub fn sampling_ratio(&self) -> f64 {
        self.provenance.mask_samples as f64 / (self.provenance.rows * self.provenance.cols) as f64
    }

    pub fn measure(&self, coefficients: &DVector<f64>) -> DVector<f64> {
        &self.matrix * coefficients
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }
}

/// Maps a mask coordinate to the basis column it samples.
fn sample_index(pos: usize, size: usize, kind: BasisKind) -> usize {
    if kind == BasisKind::Fourier {
        (pos + size - size / 2) % size
    } else {
        pos
    }
}

/// Assembles `A = Φ_Ωᵀ (Ψ ⊗ Ψ)` for a mask, a sampling operator and a real
/// orthonormal sparsifier.
pub fn build_sensing(mask: &Mask, sampling: &SamplingOperator, psi: &Basis) -> Result<SensingSystem> {
    let (m, n) = (mask.rows(), mask.cols());
    if !psi.orthonormal() || psi.entries().is_complex() {
        return param("sparsifier must be a real orthonormal basis");
    }
    if psi.entries().orthonormality_defect() > 1e-10 {
        return param("sparsifier entries are not orthonormal");
    }
    if psi.size() != m || psi.size() != n {
        return dims(format!("sparsifier of size {} on a {m}x{n} grid", psi.size()));
    }
    let synthesis = psi.synthesis()?;

    let (complex_rows, real_rows, mode_factors) = match sampling {
        SamplingOperator::Separable { phi1, phi2 } => {
            if phi1.size() != m || phi2.size() != n {
                return dims(format!(
                    "sampling bases of sizes {} and {} on a {m}x{n} grid",
                    phi1.size(),
                    phi2.size()
                ));
            }
            let b1 = phi1.entries().transpose().mul_real(&synthesis);
            let b2 = phi2.entries().transpose().mul_real(&synthesis);
            let rows: Vec<(usize, usize)> = mask
                .indices()
                .iter()
                .map(|&(i, j)| (sample_index(i, m, phi1.kind()), sample_index(j, n, phi2.kind())))
                .collect();
            let factors = is_separable(mask).map(|(r, c)| {
                let r: Vec<usize> = r.into_iter().map(|i| sample_index(i, m, phi1.kind())).collect();
                let c: Vec<usize> = c.into_iter().map(|j| sample_index(j, n, phi2.kind())).collect();
                ModeFactors { a1: b1.select_rows(&r), a2: b2.select_rows(&c) }
            });
            match (&b1, &b2) {
                (Dense::Real(b1), Dense::Real(b2)) => {
                    let mut a = DMatrix::zeros(rows.len(), m * n);
                    for (r, &(i, j)) in rows.iter().enumerate() {
                        a.set_row(r, &b2.row(j).kronecker(&b1.row(i)));
                    }
                    (None, Some(a), factors)
                }
                _ => {
                    let (b1, b2) = (b1.to_complex(), b2.to_complex());
                    let mut a = DMatrix::zeros(rows.len(), m * n);
                    for (r, &(i, j)) in rows.iter().enumerate() {
                        a.set_row(r, &b2.row(j).kronecker(&b1.row(i)));
                    }
                    (Some(a), None, factors)
                }
            }
        }
        SamplingOperator::Convolution(op) => {
            if op.side() != m || m != n {
                return dims(format!("convolution of side {} on a {m}x{n} grid", op.side()));
            }
            let full = op.matrix() * synthesis.kronecker(&synthesis);
            (None, Some(full.select_rows(&mask.linear_indices())), None)
        }
    };

    let realified = complex_rows.is_some();
    let matrix = match (complex_rows, real_rows) {
        (Some(c), _) => prune_zero_rows(&realify(&c)),
        (None, Some(r)) => r,
        (None, None) => unreachable!("one of the branches always builds a matrix"),
    };
    let (sampling_names, sampling_seeds) = sampling.describe();
    let provenance = Provenance {
        rows: m,
        cols: n,
        mask_kind: mask.kind(),
        mask_seed: mask.seed(),
        mask_samples: mask.len(),
        sampling: sampling_names,
        sampling_seeds,
        sparsifier: psi.kind(),
        realified,
    };
    let row_rank = linalg::rank(&matrix);
    Ok(SensingSystem { matrix, provenance, mode_factors, row_rank })
}

/// `Φ₁ᵀ X Φ₂`.
pub fn acquire_full(x: &DMatrix<f64>, phi1: &Basis, phi2: &Basis) -> Result<Dense> {
    if phi1.size() != x.nrows() || phi2.size() != x.ncols() {
        return dims(format!(
            "image {}x{} with bases of sizes {} and {}",
            x.nrows(),
            x.ncols(),
            phi1.size(),
            phi2.size()
        ));
    }
    Ok(match (phi1.entries(), phi2.entries()) {
        (Dense::Real(p1), Dense::Real(p2)) => Dense::Real(p1.transpose() * x * p2),
        (p1, p2) => {
            let xc = x.map(|v| Complex64::new(v, 0.0));
            Dense::Complex(p1.to_complex().transpose() * xc * p2.to_complex())
        }
    })
}

/// Stacks `Re(M)` over `Im(M)`.
pub fn realify(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    let q = m.nrows();
    DMatrix::from_fn(2 * q, m.ncols(), |r, c| if r < q { m[(r, c)].re } else { m[(r - q, c)].im })
}

/// Drops rows whose largest entry is at most `1e−13` times the largest entry
/// of the whole matrix.
pub fn prune_zero_rows(m: &DMatrix<f64>) -> DMatrix<f64> {
    let scale = m.amax();
    let keep: Vec<usize> = (0..m.nrows()).filter(|&r| m.row(r).amax() > 1e-13 * scale).collect();
    m.select_rows(&keep)
}

/// Sparse coefficient image `C` in `X = Ψ C Ψᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseImage {
    coefficients: DMatrix<f64>,
    support: Vec<usize>,
}

impl SparseImage {
    pub fn new(coefficients: DMatrix<f64>) -> SparseImage {
        let support = coefficients.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(l, _)| l).collect();
        SparseImage { coefficients, support }
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    /// Column-major linear indices of the nonzero coefficients.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    /// `vec(C)`.
    pub fn to_vector(&self) -> DVector<f64> {
        linalg::vec(&self.coefficients)
    }
}

/// `X = Ψ C Ψᵀ` with `Ψ` the synthesis matrix of `psi`.
pub fn synthesize_image(c: &SparseImage, psi: &Basis) -> Result<DMatrix<f64>> {
    let s = psi.synthesis()?;
    let cm = c.coefficients();
    if cm.nrows() != s.ncols() || cm.ncols() != s.ncols() {
        return dims(format!("coefficients {}x{} with sparsifier of size {}", cm.nrows(), cm.ncols(), s.ncols()));
    }
    Ok(&s * cm * s.transpose())
}

/// `C = Ψᵀ X Ψ`, the inverse of [`synthesize_image`] for orthonormal `Ψ`.
pub fn analyze_image(x: &DMatrix<f64>, psi: &Basis) -> Result<DMatrix<f64>> {
    let s = psi.synthesis()?;
    if x.nrows() != s.nrows() || x.ncols() != s.nrows() {
        return dims(format!("image {}x{} with sparsifier of size {}", x.nrows(), x.ncols(), s.nrows()));
    }
    Ok(s.transpose() * x * &s)
}

/// Distribution of the nonzero amplitudes of a random sparse image.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeLaw {
    #[default]
    StandardNormal,
    /// `±1` with equal probability.
    Rademacher,
}

/// `k`-sparse `m × n` coefficient image with a uniformly random support.
pub fn random_sparse(m: usize, n: usize, k: usize, seed: u64, law: AmplitudeLaw) -> Result<SparseImage> {
    if k > m * n {
        return Err(Error::Parameter(format!("sparsity {k} exceeds {m}x{n} = {} coefficients", m * n)));
    }
    let mut r = rng::seeded(seed);
    let support = rand::seq::index::sample(&mut r, m * n, k).into_vec();
    let mut c = DMatrix::zeros(m, n);
    for l in support {
        let v = match law {
            AmplitudeLaw::StandardNormal => loop {
                let v: f64 = r.sample(StandardNormal);
                if v != 0.0 {
                    break v;
                }
            },
            AmplitudeLaw::Rademacher => {
                if r.random::<bool>() { 1.0 } else { -1.0 }
            }
        };
        c[(l % m, l / m)] = v;
    }
    Ok(SparseImage::new(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::{generate_basis, wavelet_matrix};
    use crate::masks::{generate_mask, MaskParams};

    fn id(n: usize) -> Basis {
        generate_basis(BasisKind::Identity, n, None).unwrap()
    }

    #[test]
    fn identity_full_mask_gives_identity() {
        let mask = Mask::full(3, 3).unwrap();
        let sys = build_sensing(&mask, &SamplingOperator::same(id(3)), &id(3)).unwrap();
        assert_eq!(sys.matrix(), &DMatrix::<f64>::identity(9, 9));
        assert!(sys.has_full_row_rank());
        assert!(sys.mode_factors().is_some());
    }

    #[test]
    fn orthonormal_full_mask_has_orthonormal_rows() {
        let mask = Mask::full(8, 8).unwrap();
        let wht = generate_basis(BasisKind::WalshHadamard, 8, None).unwrap();
        let d4 = wavelet_matrix(8, 1).unwrap();
        let sys = build_sensing(&mask, &SamplingOperator::same(wht), &d4).unwrap();
        let a = sys.matrix();
        assert!((a * a.transpose() - DMatrix::identity(64, 64)).amax() < 1e-12);
    }

    #[test]
    fn acquire_identity_and_dft_delta() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let Dense::Real(y) = acquire_full(&x, &id(2), &id(2)).unwrap() else { panic!() };
        assert_eq!(y, x);
        let f = generate_basis(BasisKind::Fourier, 2, None).unwrap();
        let delta = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let Dense::Complex(y) = acquire_full(&delta, &f, &f).unwrap() else { panic!() };
        for v in y.iter() {
            assert!((v - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        }
        assert!(acquire_full(&x, &id(3), &id(2)).is_err());
    }

    #[test]
    fn realify_examples() {
        let m = DMatrix::from_row_slice(1, 2, &[Complex64::new(1.0, 2.0), Complex64::new(3.0, 0.0)]);
        let r = realify(&m);
        assert_eq!(r, DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 2.0, 0.0]));
        let real = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.5, 2.0]);
        let pruned = prune_zero_rows(&realify(&real.map(|v| Complex64::new(v, 0.0))));
        assert_eq!(pruned, real);
    }

    #[test]
    fn realified_dft_keeps_full_column_rank() {
        let f = generate_basis(BasisKind::Fourier, 4, None).unwrap();
        let Dense::Complex(m) = f.entries() else { panic!() };
        let r = realify(m);
        assert_eq!(linalg::nullspace(&r).ncols(), 0);
    }

    #[test]
    fn fourier_mask_center_is_dc() {
        // Sampling only the grid center with Fourier bases and identity
        // sparsifier measures the image mean: a real row of constants.
        let mask = Mask::from_indices(4, 4, [(2, 2)], false).unwrap();
        let f = generate_basis(BasisKind::Fourier, 4, None).unwrap();
        let sys = build_sensing(&mask, &SamplingOperator::same(f), &id(4)).unwrap();
        assert_eq!(sys.matrix().nrows(), 1);
        assert!(sys.matrix().iter().all(|&v| (v - 0.25).abs() < 1e-15));
        assert!(sys.provenance().realified);
    }

    #[test]
    fn downsample_mode_factors_reconstruct() {
        let mask = generate_mask(MaskKind::DownSample, 4, 4, &MaskParams::stride(2), None).unwrap();
        let wht = generate_basis(BasisKind::WalshHadamard, 4, None).unwrap();
        let d4 = wavelet_matrix(4, 1).unwrap();
        let sys = build_sensing(&mask, &SamplingOperator::same(wht), &d4).unwrap();
        let f = sys.mode_factors().unwrap();
        let rebuilt = f.a2.kronecker(&f.a1);
        assert!((rebuilt.as_real().unwrap() - sys.matrix()).amax() < 1e-12);
    }

    #[test]
    fn sensing_rejects_bad_sparsifier() {
        let mask = generate_mask(MaskKind::DownSample, 4, 4, &MaskParams::stride(2), None).unwrap();
        let g = generate_basis(BasisKind::Gaussian, 4, Some(1)).unwrap();
        assert!(build_sensing(&mask, &SamplingOperator::same(id(4)), &g).is_err());
        assert!(build_sensing(&mask, &SamplingOperator::same(id(8)), &id(4)).is_err());
    }

    #[test]
    fn synthesis_round_trip() {
        let zero = SparseImage::new(DMatrix::zeros(4, 4));
        assert_eq!(synthesize_image(&zero, &id(4)).unwrap(), DMatrix::zeros(4, 4));
        let c = random_sparse(16, 16, 5, 3, AmplitudeLaw::StandardNormal).unwrap();
        assert_eq!(synthesize_image(&c, &id(16)).unwrap(), *c.coefficients());
        let d4 = wavelet_matrix(16, 1).unwrap();
        let x = synthesize_image(&c, &d4).unwrap();
        let back = analyze_image(&x, &d4).unwrap();
        assert!((back - c.coefficients()).amax() < 1e-12);
    }

    #[test]
    fn random_sparse_edges() {
        let z = random_sparse(4, 4, 0, 1, AmplitudeLaw::StandardNormal).unwrap();
        assert_eq!(z.sparsity(), 0);
        let d = random_sparse(4, 4, 16, 1, AmplitudeLaw::Rademacher).unwrap();
        assert_eq!(d.sparsity(), 16);
        assert!(random_sparse(4, 4, 17, 1, AmplitudeLaw::StandardNormal).is_err());
        let a = random_sparse(16, 16, 10, 1, AmplitudeLaw::StandardNormal).unwrap();
        let b = random_sparse(16, 16, 10, 2, AmplitudeLaw::StandardNormal).unwrap();
        assert_ne!(a.support(), b.support());
        assert_eq!(a, random_sparse(16, 16, 10, 1, AmplitudeLaw::StandardNormal).unwrap());
    }
}
