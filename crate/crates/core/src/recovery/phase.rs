//! Phase-transition sweeps over the (sampling level, sparsity) plane.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bp::{bp_solve_with, recovery_success, BpOptions};
use crate::bases::{generate_basis, mura_operator, Basis, BasisKind};
use crate::error::{Error, Result};
use crate::linalg::AffineProjector;
use crate::masks::{downsample_stride, generate_mask, mask_ratio, Mask, MaskKind, MaskParams, DEFAULT_DENSITY_ALPHA};
use crate::rng::derive_seed;
use crate::sensing::{build_sensing, random_sparse, AmplitudeLaw, SamplingOperator, SensingSystem};

const TAG_BASIS: u64 = 1;
const TAG_MASK: u64 = 2;
const TAG_SIGNAL: u64 = 3;

/// One point of the sampling axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingLevel {
    /// Target `|Ω|/N` for random and down-sampling masks.
    Ratio(f64),
    /// Number of spokes for radial masks.
    Lines(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTransitionConfig {
    /// Free-form label copied to the output.
    pub modality: String,
    /// Image side; images are `size × size`.
    pub size: usize,
    /// Sampling basis. `mura_circulant` selects 2-D MURA convolution.
    pub sampling: BasisKind,
    pub sparsifier: BasisKind,
    pub mask: MaskKind,
    pub levels: Vec<SamplingLevel>,
    pub sparsities: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub density_alpha: f64,
    #[serde(default)]
    pub amplitude: AmplitudeLaw,
    #[serde(default)]
    pub bp: BpOptions,
}

fn default_alpha() -> f64 {
    DEFAULT_DENSITY_ALPHA
}

impl PhaseTransitionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() || self.sparsities.is_empty() || self.trials == 0 {
            return Err(Error::Parameter("levels, sparsities and trials must be non-empty".into()));
        }
        let n = self.size * self.size;
        if let Some(&k) = self.sparsities.iter().find(|&&k| k == 0 || k > n) {
            return Err(Error::Parameter(format!("sparsity {k} outside 1..={n}")));
        }
        for level in &self.levels {
            match (self.mask, level) {
                (MaskKind::Radial, SamplingLevel::Lines(l)) if *l > 0 => {}
                (MaskKind::Radial, _) => return Err(Error::Parameter("radial masks take positive line counts".into())),
                (_, SamplingLevel::Lines(_)) => {
                    return Err(Error::Parameter(format!("{} masks take sampling ratios, not lines", self.mask.name())))
                }
                (MaskKind::DownSample, SamplingLevel::Ratio(r)) => {
                    downsample_stride(self.size, self.size, *r)?;
                }
                (_, SamplingLevel::Ratio(r)) if *r > 0.0 && *r < 1.0 => {}
                (_, SamplingLevel::Ratio(r)) => return Err(Error::Parameter(format!("sampling ratio {r} outside (0, 1)"))),
            }
        }
        if self.mask == MaskKind::Custom {
            return Err(Error::Parameter("phase transitions need a generated mask kind".into()));
        }
        self.bp.validate()
    }
}

/// Success counts of one `(level, k)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub level: SamplingLevel,
    /// Mean realized `|Ω|/N` over the trials.
    pub ratio: f64,
    pub k: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTransitionResult {
    pub modality: String,
    pub sampling: BasisKind,
    pub sparsifier: BasisKind,
    pub mask: MaskKind,
    pub size: usize,
    pub seed: u64,
    /// Level-major, then sparsity, in configuration order.
    pub cells: Vec<PhaseCell>,
}

/// The mask and sensing system of one `(level, trial)` realization.
#[derive(Debug, Clone)]
pub struct TrialSystem {
    pub level: SamplingLevel,
    pub trial: usize,
    pub mask: Mask,
    pub system: SensingSystem,
}

/// Mask for `(level, trial)`. Random kinds get a fresh derived seed per trial;
/// radial and down-sampling masks are the same for every trial.
pub fn trial_mask(config: &PhaseTransitionConfig, level_index: usize, trial: usize) -> Result<Mask> {
    let level = *config
        .levels
        .get(level_index)
        .ok_or_else(|| Error::Parameter(format!("level index {level_index} out of range")))?;
    let s = config.size;
    let seed = config.mask.is_random().then(|| derive_seed(config.seed, &[TAG_MASK, level_index as u64, trial as u64]));
    let params = match (config.mask, level) {
        (MaskKind::Radial, SamplingLevel::Lines(l)) => MaskParams::radial(l),
        (MaskKind::DownSample, SamplingLevel::Ratio(r)) => MaskParams::stride(downsample_stride(s, s, r)?),
        (MaskKind::DensityVaried, SamplingLevel::Ratio(r)) => MaskParams::density(r, config.density_alpha),
        (_, SamplingLevel::Ratio(r)) => MaskParams::uniform(r),
        (kind, SamplingLevel::Lines(_)) => {
            return Err(Error::Parameter(format!("{} masks take sampling ratios, not lines", kind.name())))
        }
    };
    generate_mask(config.mask, s, s, &params, seed)
}

/// Sampling operator for `trial`; random bases are redrawn per trial and
/// shared across levels.
pub fn trial_sampling(config: &PhaseTransitionConfig, trial: usize) -> Result<SamplingOperator> {
    if config.sampling == BasisKind::MuraCirculant {
        return Ok(SamplingOperator::Convolution(mura_operator(config.size)?));
    }
    let seed = config.sampling.needs_seed().then(|| derive_seed(config.seed, &[TAG_BASIS, trial as u64]));
    Ok(SamplingOperator::same(generate_basis(config.sampling, config.size, seed)?))
}

pub fn sparsifier(config: &PhaseTransitionConfig) -> Result<Basis> {
    generate_basis(config.sparsifier, config.size, None)
}

pub fn trial_system(config: &PhaseTransitionConfig, level_index: usize, trial: usize) -> Result<TrialSystem> {
    let mask = trial_mask(config, level_index, trial)?;
    let sampling = trial_sampling(config, trial)?;
    let system = build_sensing(&mask, &sampling, &sparsifier(config)?)?;
    Ok(TrialSystem { level: config.levels[level_index], trial, mask, system })
}

/// Seed of the random signal drawn for `(level, trial, k)`.
pub fn signal_seed(config: &PhaseTransitionConfig, level_index: usize, trial: usize, k: usize) -> u64 {
    derive_seed(config.seed, &[TAG_SIGNAL, level_index as u64, trial as u64, k as u64])
}

/// Runs the sweep. Each `(level, trial)` system is built once and reused for
/// every sparsity; units run in parallel and are reduced in order.
pub fn phase_transition(config: &PhaseTransitionConfig) -> Result<PhaseTransitionResult> {
    config.validate()?;
    let units: Vec<(usize, usize)> =
        (0..config.levels.len()).flat_map(|l| (0..config.trials).map(move |t| (l, t))).collect();
    let outcomes: Vec<(f64, Vec<bool>)> = units.par_iter().map(|&(l, t)| run_unit(config, l, t)).collect::<Result<_>>()?;

    let mut cells = Vec::with_capacity(config.levels.len() * config.sparsities.len());
    for (l, level) in config.levels.iter().enumerate() {
        let rows = &outcomes[l * config.trials..(l + 1) * config.trials];
        let ratio = rows.iter().map(|r| r.0).sum::<f64>() / config.trials as f64;
        for (ki, &k) in config.sparsities.iter().enumerate() {
            let successes = rows.iter().filter(|r| r.1[ki]).count();
            cells.push(PhaseCell {
                level: *level,
                ratio,
                k,
                trials: config.trials,
                successes,
                success_rate: successes as f64 / config.trials as f64,
            });
        }
    }
    Ok(PhaseTransitionResult {
        modality: config.modality.clone(),
        sampling: config.sampling,
        sparsifier: config.sparsifier,
        mask: config.mask,
        size: config.size,
        seed: config.seed,
        cells,
    })
}

fn run_unit(config: &PhaseTransitionConfig, level_index: usize, trial: usize) -> Result<(f64, Vec<bool>)> {
    let ts = trial_system(config, level_index, trial)?;
    let a = ts.system.matrix();
    let projector = AffineProjector::new(a);
    let s = config.size;
    let mut hits = Vec::with_capacity(config.sparsities.len());
    for &k in &config.sparsities {
        let signal = random_sparse(s, s, k, signal_seed(config, level_index, trial, k), config.amplitude)?;
        let c = signal.to_vector();
        let y = a * &c;
        let sol = bp_solve_with(a, &projector, &y, &config.bp)?;
        hits.push(recovery_success(&sol.x, &c, config.bp.success_threshold)?);
    }
    Ok((mask_ratio(&ts.mask), hits))
}
