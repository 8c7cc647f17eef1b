//! Sampling dictionaries and the wavelet sparsifier.
//!
//! Every basis is an `n × n` matrix whose *columns* are its atoms: a sampling
//! basis `Φ` acquires `Y = Φ₁ᵀ X Φ₂`. The one exception is the Daubechies-4
//! basis, which stores the orthonormal *analysis* matrix `W` (rows are the
//! wavelets); [`Basis::synthesis`] returns `Wᵀ` for it.
//!
//! Normalizations put all bases on equal column-energy footing: Fourier,
//! Walsh–Hadamard and wavelet matrices are orthonormal, Bernoulli entries are
//! `±1/√n`, Gaussian entries have variance `1/n` and MURA circulant columns
//! have unit norm.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::linalg::Dense;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    /// Calibration basis.
    Identity,
    Fourier,
    WalshHadamard,
    Bernoulli,
    Gaussian,
    MuraCirculant,
    DaubechiesWavelet,
}

impl BasisKind {
    pub fn name(self) -> &'static str {
        match self {
            BasisKind::Identity => "identity",
            BasisKind::Fourier => "fourier",
            BasisKind::WalshHadamard => "wht",
            BasisKind::Bernoulli => "bernoulli",
            BasisKind::Gaussian => "gaussian",
            BasisKind::MuraCirculant => "mura",
            BasisKind::DaubechiesWavelet => "db4",
        }
    }

    pub fn parse(s: &str) -> Option<BasisKind> {
        match s.to_ascii_lowercase().as_str() {
            "identity" | "id" | "dirac" => Some(BasisKind::Identity),
            "fourier" | "dft" => Some(BasisKind::Fourier),
            "wht" | "hadamard" | "walsh_hadamard" | "walsh-hadamard" => Some(BasisKind::WalshHadamard),
            "bernoulli" => Some(BasisKind::Bernoulli),
            "gaussian" | "normal" => Some(BasisKind::Gaussian),
            "mura" | "mura_circulant" => Some(BasisKind::MuraCirculant),
            "db4" | "d4" | "daubechies" | "daubechies_wavelet" => Some(BasisKind::DaubechiesWavelet),
            _ => None,
        }
    }

    pub fn needs_seed(self) -> bool {
        matches!(self, BasisKind::Bernoulli | BasisKind::Gaussian)
    }

    pub fn is_complex(self) -> bool {
        self == BasisKind::Fourier
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    kind: BasisKind,
    size: usize,
    orthonormal: bool,
    seed: Option<u64>,
    entries: Dense,
}

impl Basis {
    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn orthonormal(&self) -> bool {
        self.orthonormal
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn field(&self) -> Field {
        if self.entries.is_complex() { Field::Complex } else { Field::Real }
    }

    pub fn entries(&self) -> &Dense {
        &self.entries
    }

    /// Rebuilds a basis from stored entries (cache files, fixtures).
    pub fn from_entries(kind: BasisKind, seed: Option<u64>, entries: Dense) -> Result<Basis> {
        let n = entries.nrows();
        if n != entries.ncols() {
            return param(format!("basis must be square, got {}x{}", n, entries.ncols()));
        }
        if kind.is_complex() != entries.is_complex() {
            return param(format!("{} basis has the wrong scalar field", kind.name()));
        }
        let orthonormal = matches!(
            kind,
            BasisKind::Identity | BasisKind::Fourier | BasisKind::WalshHadamard | BasisKind::DaubechiesWavelet
        );
        Ok(Basis { kind, size: n, orthonormal, seed, entries })
    }

    /// Matrix whose columns are the synthesis atoms, for real bases.
    pub fn synthesis(&self) -> Result<DMatrix<f64>> {
        match &self.entries {
            Dense::Real(m) if self.kind == BasisKind::DaubechiesWavelet => Ok(m.transpose()),
            Dense::Real(m) => Ok(m.clone()),
            Dense::Complex(_) => param(format!("{} basis is complex and cannot synthesize real images", self.kind.name())),
        }
    }
}

/// Builds a sampling or sparsifying basis of size `n`.
pub fn generate_basis(kind: BasisKind, n: usize, seed: Option<u64>) -> Result<Basis> {
    if n < 2 {
        return param(format!("basis size must be at least 2, got {n}"));
    }
    let seed = if kind.needs_seed() {
        Some(seed.ok_or_else(|| Error::Parameter(format!("{} basis needs a seed", kind.name())))?)
    } else {
        None
    };
    let entries = match kind {
        BasisKind::Identity => Dense::Real(DMatrix::identity(n, n)),
        BasisKind::Fourier => Dense::Complex(fourier_matrix(n)),
        BasisKind::WalshHadamard => {
            if !n.is_power_of_two() {
                return param(format!("Walsh-Hadamard basis needs a power-of-two size, got {n}"));
            }
            Dense::Real(hadamard_unnormalized(n) / (n as f64).sqrt())
        }
        BasisKind::Bernoulli => {
            let mut r = rng::seeded(seed.unwrap());
            let scale = 1.0 / (n as f64).sqrt();
            Dense::Real(DMatrix::from_fn(n, n, |_, _| if r.random::<bool>() { scale } else { -scale }))
        }
        BasisKind::Gaussian => {
            let mut r = rng::seeded(seed.unwrap());
            let scale = 1.0 / (n as f64).sqrt();
            Dense::Real(DMatrix::from_fn(n, n, |_, _| r.sample::<f64, _>(StandardNormal) * scale))
        }
        BasisKind::MuraCirculant => {
            if !is_prime(n) {
                return param(format!("MURA circulant basis needs a prime size, got {n}"));
            }
            Dense::Real(mura_circulant(n))
        }
        BasisKind::DaubechiesWavelet => return wavelet_matrix(n, 1),
    };
    Basis::from_entries(kind, seed, entries)
}

/// Unitary DFT matrix, entry `(j, k) = exp(−2πi·jk/n)/√n`.
///
/// Angles that are multiples of `π/2` are set exactly.
pub fn fourier_matrix(n: usize) -> DMatrix<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |j, k| {
        let r = (j * k) % n;
        let z = if (4 * r) % n == 0 {
            match 4 * r / n {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, -1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, 1.0),
            }
        } else {
            let angle = -2.0 * PI * r as f64 / n as f64;
            Complex64::new(angle.cos(), angle.sin())
        };
        z * scale
    })
}

/// Sylvester-ordered `±1` Hadamard matrix: `H[i, j] = (−1)^{popcount(i & j)}`.
pub fn hadamard_unnormalized(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 })
}

/// Daubechies-4 scaling filter `[(1+√3), (3+√3), (3−√3), (1−√3)] / (4√2)`.
pub fn daubechies4_filter() -> [f64; 4] {
    let s3 = 3f64.sqrt();
    let d = 4.0 * SQRT_2;
    [(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d]
}

/// Periodized Daubechies-4 analysis matrix with `levels` decomposition levels.
///
/// Rows `0..n/2` of a single level are the low-pass (scaling) outputs and rows
/// `n/2..n` the high-pass (detail) outputs; deeper levels recurse on the
/// low-pass half.
pub fn wavelet_matrix(n: usize, levels: usize) -> Result<Basis> {
    if n < 4 || n % 2 != 0 {
        return param(format!("Daubechies-4 transform needs an even size of at least 4, got {n}"));
    }
    if levels == 0 {
        return param("wavelet transform needs at least one level");
    }
    if levels > 1 && (n % (1 << levels) != 0 || n >> (levels - 1) < 4) {
        return param(format!("size {n} does not support {levels} Daubechies-4 levels"));
    }
    let w = wavelet_levels(n, levels);
    Basis::from_entries(BasisKind::DaubechiesWavelet, None, Dense::Real(w))
}

fn wavelet_levels(n: usize, levels: usize) -> DMatrix<f64> {
    let single = wavelet_single_level(n);
    if levels == 1 {
        return single;
    }
    let mut outer = DMatrix::identity(n, n);
    outer.view_mut((0, 0), (n / 2, n / 2)).copy_from(&wavelet_levels(n / 2, levels - 1));
    outer * single
}

fn wavelet_single_level(n: usize) -> DMatrix<f64> {
    let h = daubechies4_filter();
    let g = [h[3], -h[2], h[1], -h[0]];
    let half = n / 2;
    let mut w = DMatrix::zeros(n, n);
    for k in 0..half {
        for t in 0..4 {
            let col = (2 * k + t) % n;
            w[(k, col)] += h[t];
            w[(half + k, col)] += g[t];
        }
    }
    w
}

pub fn is_prime(p: usize) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Legendre symbol of `i` modulo an odd prime `p` via Euler's criterion:
/// `+1` for a nonzero quadratic residue, `−1` otherwise (including `i ≡ 0`).
fn legendre(i: usize, p: usize) -> i8 {
    if p == 2 {
        return if i % 2 == 1 { 1 } else { -1 };
    }
    if i % p == 0 {
        return -1;
    }
    if mod_pow(i % p, (p - 1) / 2, p) == 1 { 1 } else { -1 }
}

fn mod_pow(mut base: usize, mut exp: usize, modulus: usize) -> usize {
    let mut acc = 1 % modulus;
    base %= modulus;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % modulus;
        }
        base = base * base % modulus;
        exp >>= 1;
    }
    acc
}

/// Circulant with first column `a_i = 1` for nonzero quadratic residues `i`
/// modulo `n`, scaled to unit-norm columns: `Φ[i, j] = a_{(i − j) mod n}`.
fn mura_circulant(n: usize) -> DMatrix<f64> {
    let row: Vec<f64> = (0..n).map(|i| if i != 0 && legendre(i, n) == 1 { 1.0 } else { 0.0 }).collect();
    let norm = row.iter().sum::<f64>().sqrt();
    DMatrix::from_fn(n, n, |i, j| row[(i + n - j) % n] / norm)
}

/// Binary Modified Uniformly Redundant Array of prime side `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MuraGrid {
    p: usize,
    cells: DMatrix<u8>,
}

impl MuraGrid {
    pub fn side(&self) -> usize {
        self.p
    }

    pub fn cell(&self, i: usize, j: usize) -> u8 {
        self.cells[(i, j)]
    }

    pub fn cells(&self) -> &DMatrix<u8> {
        &self.cells
    }

    pub fn open_cells(&self) -> usize {
        self.cells.iter().filter(|&&c| c == 1).count()
    }

    pub fn to_real(&self) -> DMatrix<f64> {
        self.cells.map(f64::from)
    }
}

/// Standard MURA construction with `C_i = +1` for nonzero quadratic residues
/// modulo `p`: row 0 is closed, column 0 (below row 0) is open and the
/// remaining cells are open exactly when `C_i·C_j = +1`.
pub fn mura_pattern(p: usize) -> Result<MuraGrid> {
    if !is_prime(p) {
        return param(format!("MURA side length must be prime, got {p}"));
    }
    let c: Vec<i8> = (0..p).map(|i| legendre(i, p)).collect();
    let cells = DMatrix::from_fn(p, p, |i, j| match (i, j) {
        (0, _) => 0,
        (_, 0) => 1,
        _ => u8::from(c[i] * c[j] == 1),
    });
    Ok(MuraGrid { p, cells })
}

/// 2-D circular convolution with a point-spread function on `p × p` images,
/// applied as a pointwise product in the 2-D Fourier domain.
#[derive(Debug, Clone)]
pub struct MuraOperator {
    psf: DMatrix<f64>,
    dft: DMatrix<Complex64>,
    transfer: DMatrix<Complex64>,
}

/// Coded-aperture operator whose point-spread function is the MURA grid.
pub fn mura_operator(p: usize) -> Result<MuraOperator> {
    Ok(MuraOperator::from_psf(mura_pattern(p)?.to_real()))
}

impl MuraOperator {
    /// Operator for an arbitrary square point-spread function.
    pub fn from_psf(psf: DMatrix<f64>) -> MuraOperator {
        assert_eq!(psf.nrows(), psf.ncols(), "point-spread function must be square");
        let p = psf.nrows();
        let dft = fourier_matrix(p);
        let k = psf.map(|v| Complex64::new(v, 0.0));
        // Unnormalized 2-D DFT of the kernel.
        let transfer = (&dft * k * &dft) * Complex64::new(p as f64, 0.0);
        MuraOperator { psf, dft, transfer }
    }

    pub fn side(&self) -> usize {
        self.psf.nrows()
    }

    pub fn psf(&self) -> &DMatrix<f64> {
        &self.psf
    }

    /// `(X ∗ PSF)[a, b] = Σ X[i, j]·PSF[(a − i) mod p, (b − j) mod p]`.
    pub fn apply(&self, image: &DMatrix<f64>) -> DMatrix<f64> {
        let x = image.map(|v| Complex64::new(v, 0.0));
        let spectrum = (&self.dft * x * &self.dft).component_mul(&self.transfer);
        let inv = self.dft.map(|z| z.conj());
        (&inv * spectrum * &inv).map(|z| z.re)
    }

    /// Explicit block-circulant-with-circulant-blocks matrix acting on
    /// column-major `vec(X)`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let p = self.side();
        DMatrix::from_fn(p * p, p * p, |row, col| {
            let (i, j) = (row % p, row / p);
            let (a, b) = (col % p, col / p);
            self.psf[((i + p - a) % p, (j + p - b) % p)]
        })
    }
}
