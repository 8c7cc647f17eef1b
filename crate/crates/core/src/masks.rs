//! Sub-sampling masks over an `m × n` acquisition grid.
//!
//! A mask is the index set Ω of grid samples that are actually acquired. Four
//! generators are provided: radial lines through the grid center, uniform
//! random sampling, center-weighted (density-varied) random sampling and
//! regular down-sampling. Indices are stored in column-major linear order
//! `i + j·m`, the same order used by [`crate::linalg::vec`], so that row `r`
//! of a sensing matrix corresponds to the `r`-th index of its mask.
//!
//! The grid center is `(⌊m/2⌋, ⌊n/2⌋)`, which is where the zero frequency
//! sits after an `fftshift`.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::rng;

/// Default decay exponent of the density-varied sampling law.
pub const DEFAULT_DENSITY_ALPHA: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskKind {
    Radial,
    UniformRandom,
    DensityVaried,
    DownSample,
    /// Explicit index sets (nested chains, calibration, binary imports).
    Custom,
}

impl MaskKind {
    pub fn is_random(self) -> bool {
        matches!(self, MaskKind::UniformRandom | MaskKind::DensityVaried)
    }

    pub fn name(self) -> &'static str {
        match self {
            MaskKind::Radial => "radial",
            MaskKind::UniformRandom => "random",
            MaskKind::DensityVaried => "density",
            MaskKind::DownSample => "downsample",
            MaskKind::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<MaskKind> {
        match s.to_ascii_lowercase().as_str() {
            "radial" => Some(MaskKind::Radial),
            "random" | "uniform" | "uniform_random" => Some(MaskKind::UniformRandom),
            "density" | "density_varied" | "variable_density" => Some(MaskKind::DensityVaried),
            "downsample" | "down_sample" | "down-sample" => Some(MaskKind::DownSample),
            "custom" => Some(MaskKind::Custom),
            _ => None,
        }
    }
}

/// Kind-specific generator parameters. Unused fields stay `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskParams {
    /// Number of radial lines `L`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lines: Option<usize>,
    /// Target sampling ratio `|Ω| / (m·n)` for the random kinds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    /// Decay exponent `α` of the density-varied law.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Down-sampling stride `s`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
}

impl MaskParams {
    pub fn radial(lines: usize) -> Self {
        MaskParams { lines: Some(lines), ..Default::default() }
    }

    pub fn uniform(ratio: f64) -> Self {
        MaskParams { ratio: Some(ratio), ..Default::default() }
    }

    pub fn density(ratio: f64, alpha: f64) -> Self {
        MaskParams { ratio: Some(ratio), alpha: Some(alpha), ..Default::default() }
    }

    pub fn stride(stride: usize) -> Self {
        MaskParams { stride: Some(stride), ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    rows: usize,
    cols: usize,
    kind: MaskKind,
    params: MaskParams,
    seed: Option<u64>,
    indices: Vec<(usize, usize)>,
}

impl Mask {
    /// Builds a custom mask from explicit grid coordinates.
    ///
    /// Duplicates are merged. The set must be non-empty, in bounds and, unless
    /// `allow_full` is set, strictly smaller than the grid.
    pub fn from_indices(
        rows: usize,
        cols: usize,
        indices: impl IntoIterator<Item = (usize, usize)>,
        allow_full: bool,
    ) -> Result<Mask> {
        Mask::assemble(rows, cols, MaskKind::Custom, MaskParams::default(), None, indices, allow_full)
    }

    /// The calibration mask that keeps every grid sample.
    pub fn full(rows: usize, cols: usize) -> Result<Mask> {
        let all = (0..cols).flat_map(|j| (0..rows).map(move |i| (i, j)));
        Mask::from_indices(rows, cols, all, true)
    }

    fn assemble(
        rows: usize,
        cols: usize,
        kind: MaskKind,
        params: MaskParams,
        seed: Option<u64>,
        indices: impl IntoIterator<Item = (usize, usize)>,
        allow_full: bool,
    ) -> Result<Mask> {
        if rows == 0 || cols == 0 {
            return param("mask grid must have positive dimensions");
        }
        let mut linear = BTreeSet::new();
        for (i, j) in indices {
            if i >= rows || j >= cols {
                return param(format!("index ({i}, {j}) outside {rows}x{cols} grid"));
            }
            linear.insert(i + j * rows);
        }
        let total = rows * cols;
        if linear.is_empty() {
            return Err(Error::Cardinality("mask selects no samples".into()));
        }
        if linear.len() == total && !allow_full {
            return Err(Error::Cardinality(
                "mask selects every sample; compressed sensing needs |Ω| < m·n".into(),
            ));
        }
        let indices = linear.into_iter().map(|l| (l % rows, l / rows)).collect();
        Ok(Mask { rows, cols, kind, params, seed, indices })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn kind(&self) -> MaskKind {
        self.kind
    }

    pub fn params(&self) -> &MaskParams {
        &self.params
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Selected coordinates, sorted by column-major linear index.
    pub fn indices(&self) -> &[(usize, usize)] {
        &self.indices
    }

    /// Column-major linear indices `i + j·m`, ascending.
    pub fn linear_indices(&self) -> Vec<usize> {
        self.indices.iter().map(|&(i, j)| i + j * self.rows).collect()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.indices.len() == self.rows * self.cols
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.rows && j < self.cols && self.indices.binary_search_by_key(&(i + j * self.rows), |&(a, b)| a + b * self.rows).is_ok()
    }

    /// `(|Ω|, m·n)`, the exact sampling ratio as a fraction.
    pub fn ratio_parts(&self) -> (usize, usize) {
        (self.indices.len(), self.rows * self.cols)
    }

    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.indices.iter().all(|&(i, j)| other.contains(i, j))
    }
}

/// Generates a mask of the given kind.
///
/// Random kinds require a seed; the deterministic kinds ignore it and record
/// no seed.
pub fn generate_mask(kind: MaskKind, m: usize, n: usize, params: &MaskParams, seed: Option<u64>) -> Result<Mask> {
    if m < 2 || n < 2 {
        return param(format!("mask grid must be at least 2x2, got {m}x{n}"));
    }
    match kind {
        MaskKind::Radial => {
            let lines = params.lines.ok_or_else(|| Error::Parameter("radial mask needs a line count".into()))?;
            if lines == 0 {
                return param("radial mask needs at least one line");
            }
            let p = MaskParams::radial(lines);
            Mask::assemble(m, n, kind, p, None, radial_pixels(m, n, lines), false)
        }
        MaskKind::UniformRandom => {
            let ratio = checked_ratio(params)?;
            let seed = seed.ok_or_else(|| Error::Parameter("random mask needs a seed".into()))?;
            let target = target_count(ratio, m, n)?;
            let mut r = rng::seeded(seed);
            let picked = index::sample(&mut r, m * n, target).into_vec();
            Mask::assemble(m, n, kind, MaskParams::uniform(ratio), Some(seed), picked.into_iter().map(|l| (l % m, l / m)), false)
        }
        MaskKind::DensityVaried => {
            let ratio = checked_ratio(params)?;
            let alpha = params.alpha.unwrap_or(DEFAULT_DENSITY_ALPHA);
            if !(alpha.is_finite() && alpha >= 0.0) {
                return param(format!("density exponent must be finite and non-negative, got {alpha}"));
            }
            let seed = seed.ok_or_else(|| Error::Parameter("density-varied mask needs a seed".into()))?;
            let target = target_count(ratio, m, n)?;
            let picked = density_pixels(m, n, target, alpha, seed)?;
            Mask::assemble(m, n, kind, MaskParams::density(ratio, alpha), Some(seed), picked, false)
        }
        MaskKind::DownSample => {
            let s = params.stride.ok_or_else(|| Error::Parameter("down-sampling mask needs a stride".into()))?;
            if s < 2 {
                return param(format!("down-sampling stride must be at least 2, got {s}"));
            }
            let picked = (0..n).step_by(s).flat_map(|j| (0..m).step_by(s).map(move |i| (i, j)));
            Mask::assemble(m, n, kind, MaskParams::stride(s), None, picked, false)
        }
        MaskKind::Custom => param("custom masks are built with Mask::from_indices"),
    }
}

/// Largest sampling ratio a down-sampling mask may realize.
pub const MAX_DOWNSAMPLE_RATIO: f64 = 0.25;

/// Smallest stride `s ≥ 2` whose down-sampling mask realizes a ratio of at
/// most `ratio`.
pub fn downsample_stride(m: usize, n: usize, ratio: f64) -> Result<usize> {
    if !(ratio > 0.0 && ratio <= MAX_DOWNSAMPLE_RATIO) {
        return param(format!(
            "down-sampling ratio {ratio} is outside (0, {MAX_DOWNSAMPLE_RATIO}]; stride 2 already keeps at most a quarter of the grid"
        ));
    }
    let total = (m * n) as f64;
    (2..=m.max(n))
        .find(|&s| (m.div_ceil(s) * n.div_ceil(s)) as f64 / total <= ratio)
        .ok_or_else(|| Error::Cardinality(format!("no stride realizes ratio {ratio} on a {m}x{n} grid")))
}

/// `|Ω| / (m·n)`.
pub fn mask_ratio(mask: &Mask) -> f64 {
    let (num, den) = mask.ratio_parts();
    num as f64 / den as f64
}

/// Returns `(R, C)` when Ω is exactly the Cartesian product `R × C`.
pub fn is_separable(mask: &Mask) -> Option<(Vec<usize>, Vec<usize>)> {
    let rows: BTreeSet<usize> = mask.indices.iter().map(|&(i, _)| i).collect();
    let cols: BTreeSet<usize> = mask.indices.iter().map(|&(_, j)| j).collect();
    // Ω ⊆ R × C always holds, so equal cardinality means equality.
    (rows.len() * cols.len() == mask.len()).then(|| (rows.into_iter().collect(), cols.into_iter().collect()))
}

/// Grid center `(⌊m/2⌋, ⌊n/2⌋)`.
pub fn grid_center(m: usize, n: usize) -> (usize, usize) {
    (m / 2, n / 2)
}

fn checked_ratio(params: &MaskParams) -> Result<f64> {
    let ratio = params.ratio.ok_or_else(|| Error::Parameter("random mask needs a sampling ratio".into()))?;
    if !(ratio > 0.0 && ratio < 1.0) {
        return param(format!("sampling ratio must lie in (0, 1), got {ratio}"));
    }
    Ok(ratio)
}

fn target_count(ratio: f64, m: usize, n: usize) -> Result<usize> {
    let total = m * n;
    let target = (ratio * total as f64).round() as usize;
    if target == 0 || target >= total {
        return Err(Error::Cardinality(format!(
            "ratio {ratio} on a {m}x{n} grid gives {target} of {total} samples"
        )));
    }
    Ok(target)
}

fn radial_pixels(m: usize, n: usize, lines: usize) -> Vec<(usize, usize)> {
    let (ci, cj) = grid_center(m, n);
    let mut out = Vec::new();
    for l in 0..lines {
        // Reduce l/L so nested angle sets produce bit-identical angles.
        let g = gcd(l, lines).max(1);
        let theta = (l / g) as f64 * std::f64::consts::PI / (lines / g) as f64;
        let dir = (theta.sin(), theta.cos());
        for sign in [1.0, -1.0] {
            let d = (sign * dir.0, sign * dir.1);
            let end = boundary_point(m, n, (ci, cj), d);
            out.extend(bresenham((ci as i64, cj as i64), end).into_iter().map(|(i, j)| (i as usize, j as usize)));
        }
    }
    out
}

/// Rounded point where the ray `center + t·d`, `t ≥ 0`, leaves the grid.
fn boundary_point(m: usize, n: usize, center: (usize, usize), d: (f64, f64)) -> (i64, i64) {
    const EPS: f64 = 1e-12;
    let limit = |c: usize, size: usize, step: f64| -> f64 {
        if step > EPS {
            (size - 1 - c) as f64 / step
        } else if step < -EPS {
            c as f64 / -step
        } else {
            f64::INFINITY
        }
    };
    let t = limit(center.0, m, d.0).min(limit(center.1, n, d.1));
    let i = (center.0 as f64 + t * d.0).round().clamp(0.0, (m - 1) as f64);
    let j = (center.1 as f64 + t * d.1).round().clamp(0.0, (n - 1) as f64);
    (i as i64, j as i64)
}

/// Integer line from `p0` to `p1`, both ends included.
fn bresenham(p0: (i64, i64), p1: (i64, i64)) -> Vec<(i64, i64)> {
    let (mut x, mut y) = p0;
    let dx = (p1.0 - x).abs();
    let dy = -(p1.1 - y).abs();
    let sx = if x < p1.0 { 1 } else { -1 };
    let sy = if y < p1.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx - dy + 1) as usize);
    loop {
        out.push((x, y));
        if (x, y) == p1 {
            return out;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Sampling weight `(1 − r/r_max)^α` of every grid cell, column-major.
pub fn density_weights(m: usize, n: usize, alpha: f64) -> Vec<f64> {
    let (ci, cj) = grid_center(m, n);
    let dist = |i: usize, j: usize| ((i as f64 - ci as f64).powi(2) + (j as f64 - cj as f64).powi(2)).sqrt();
    let r_max = (0..n).flat_map(|j| (0..m).map(move |i| (i, j))).map(|(i, j)| dist(i, j)).fold(0.0, f64::max);
    (0..n)
        .flat_map(|j| (0..m).map(move |i| (i, j)))
        .map(|(i, j)| (1.0 - dist(i, j) / r_max).max(0.0).powf(alpha))
        .collect()
}

/// Center pixel plus `target − 1` cells drawn one at a time, each with
/// probability proportional to its weight among the cells not yet drawn.
///
/// Uses exponential keys `ln(u)/w` (Efraimidis–Spirakis): the `k` largest keys
/// are distributed exactly like `k` successive weighted draws without
/// replacement.
fn density_pixels(m: usize, n: usize, target: usize, alpha: f64, seed: u64) -> Result<Vec<(usize, usize)>> {
    let weights = density_weights(m, n, alpha);
    let (ci, cj) = grid_center(m, n);
    let center = ci + cj * m;
    let mut r = rng::seeded(seed);
    let mut keyed: Vec<(f64, usize)> = Vec::with_capacity(weights.len());
    for (l, &w) in weights.iter().enumerate() {
        // Draw for every cell so the stream does not depend on which cells
        // have zero weight.
        let u: f64 = 1.0 - r.random::<f64>();
        if l != center && w > 0.0 {
            keyed.push((u.ln() / w, l));
        }
    }
    if keyed.len() < target - 1 {
        return Err(Error::Cardinality(format!(
            "only {} cells have positive density, cannot draw {target}",
            keyed.len() + 1
        )));
    }
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut picked = vec![(ci, cj)];
    picked.extend(keyed.into_iter().take(target - 1).map(|(_, l)| (l % m, l / m)));
    Ok(picked)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaskRecord {
    kind: MaskKind,
    m: usize,
    n: usize,
    params: MaskParams,
    seed: Option<u64>,
    indices: Vec<[usize; 2]>,
}

impl Mask {
    /// JSON record `{kind, m, n, params, seed, indices: [[i, j], ...]}`.
    pub fn to_json(&self) -> Result<String> {
        let rec = MaskRecord {
            kind: self.kind,
            m: self.rows,
            n: self.cols,
            params: self.params,
            seed: self.seed,
            indices: self.indices.iter().map(|&(i, j)| [i, j]).collect(),
        };
        Ok(serde_json::to_string_pretty(&rec)?)
    }

    pub fn from_json(text: &str) -> Result<Mask> {
        let rec: MaskRecord = serde_json::from_str(text)?;
        let mask = Mask::assemble(
            rec.m,
            rec.n,
            rec.kind,
            rec.params,
            rec.seed,
            rec.indices.into_iter().map(|[i, j]| (i, j)),
            rec.kind == MaskKind::Custom,
        )?;
        Ok(mask)
    }

    /// Compact binary form: `m`, `n` as little-endian `u32`, then one
    /// little-endian `u16` pair `(i, j)` per sample. Kind and seed are not
    /// stored; decoding yields a custom mask.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        if self.rows > usize::from(u16::MAX) + 1 || self.cols > usize::from(u16::MAX) + 1 {
            return param("binary mask format supports grids up to 65536 per side");
        }
        w.write_all(&(self.rows as u32).to_le_bytes())?;
        w.write_all(&(self.cols as u32).to_le_bytes())?;
        for &(i, j) in &self.indices {
            w.write_all(&(i as u16).to_le_bytes())?;
            w.write_all(&(j as u16).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Mask> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() < 8 || (bytes.len() - 8) % 4 != 0 {
            return Err(Error::Format(format!("binary mask has invalid length {}", bytes.len())));
        }
        let m = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
        let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let pairs = bytes[8..].chunks_exact(4).map(|c| {
            (u16::from_le_bytes([c[0], c[1]]) as usize, u16::from_le_bytes([c[2], c[3]]) as usize)
        });
        Mask::from_indices(m, n, pairs, true)
    }
}
