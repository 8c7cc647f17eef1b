//! Experiment orchestration: certificate sweeps, phase transitions and the
//! artifacts they leave in the output directory.

use std::path::Path;

use cs_certify_core::certify::{
    coherence_certificate, exact_certificate, recovery_kmax, ssp_sdp_lower_bound, Certificate, ExactOptions, SdpOptions,
};
use cs_certify_core::masks::{mask_ratio, MaskKind};
use cs_certify_core::recovery::{
    phase_transition, trial_mask, trial_sampling, trial_system, PhaseTransitionConfig, PhaseTransitionResult, SamplingLevel,
};
use cs_certify_core::sensing::SamplingOperator;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{load_config, parse_value, CertificateChoice, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::matrix_io::format_value;

pub const CERTIFICATES_FILE: &str = "certificates.csv";
pub const PHASE_FILE: &str = "phase_transition.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PLOT_FILE: &str = "plot.gp";

/// One row of the certificate CSV. Summary rows carry `mean` or `stddev` in
/// the `trial` column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub modality: String,
    pub basis: String,
    pub mask: String,
    pub ratio: String,
    pub trial: String,
    pub delta_sq: String,
    pub k_max: String,
    pub method: String,
    pub solver_status: String,
}

/// One row of the phase-transition CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub modality: String,
    pub basis: String,
    pub mask: String,
    pub ratio: f64,
    pub k: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub sampling: String,
    pub mask: String,
    /// Seed of the sampling basis per trial; `null` for deterministic bases.
    pub basis_seeds: Vec<Option<u64>>,
    /// Mask seed per level and trial; `null` for deterministic masks.
    pub mask_seeds: Vec<Vec<Option<u64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub file: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    Partial,
}

/// Everything needed to regenerate the artifacts bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub rng: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<RunSeeds>,
    pub artifacts: Vec<Artifact>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        // Re-validate the embedded configuration like a config file.
        parse_value(value.get("config").unwrap_or(&serde_json::Value::Null)).map_err(CliError::Config)?;
        Ok(serde_json::from_value(value)?)
    }
}

/// The phase-transition configurations of an experiment, sampling-major.
pub fn runs(config: &ExperimentConfig) -> Vec<PhaseTransitionConfig> {
    let preset = config.preset.preset();
    let mut out = Vec::new();
    for &sampling in &config.sampling {
        for &mask in &config.masks {
            let levels = if mask == MaskKind::Radial {
                config.lines.iter().map(|&l| SamplingLevel::Lines(l)).collect()
            } else {
                config.ratios.iter().map(|&r| SamplingLevel::Ratio(r)).collect()
            };
            out.push(PhaseTransitionConfig {
                modality: config.preset.name().to_string(),
                size: config.size,
                sampling,
                sparsifier: preset.sparsifier,
                mask,
                levels,
                sparsities: config.sparsities.clone(),
                trials: config.trials,
                seed: config.seed,
                density_alpha: config.density_alpha,
                amplitude: config.amplitude,
                bp: config.bp,
            });
        }
    }
    out
}

pub fn run_experiment(config_path: &Path, out_dir: &Path) -> Result<Manifest> {
    let config = load_config(config_path)?;
    run_config(&config, out_dir)
}

/// Re-runs the experiment recorded in a manifest.
pub fn replay_manifest(manifest_path: &Path, out_dir: &Path) -> Result<Manifest> {
    let manifest = Manifest::load(manifest_path)?;
    run_config(&manifest.config, out_dir)
}

/// Runs all certificate and phase-transition sweeps and writes the artifacts.
///
/// On a failure, whatever finished is still written and the manifest is
/// marked partial.
pub fn run_config(config: &ExperimentConfig, out_dir: &Path) -> Result<Manifest> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir.display(), e))?;
    let runs = runs(config);
    let mut failure: Option<String> = None;

    let certificates = if config.certificate.method == CertificateChoice::None {
        Vec::new()
    } else {
        match certificate_rows(config, &runs) {
            Ok(rows) => rows,
            Err(e) => {
                failure = Some(e.to_string());
                Vec::new()
            }
        }
    };

    let mut phase = Vec::new();
    if failure.is_none() {
        for run in &runs {
            match phase_transition(run) {
                Ok(result) => phase.extend(phase_rows(&result)),
                Err(e) => {
                    failure = Some(e.to_string());
                    break;
                }
            }
        }
    }

    let seeds = match runs.iter().map(run_seeds).collect::<Result<Vec<_>>>() {
        Ok(s) => s,
        Err(e) => {
            failure.get_or_insert(e.to_string());
            Vec::new()
        }
    };

    let mut artifacts = Vec::new();
    if config.certificate.method != CertificateChoice::None {
        write_rows(&out_dir.join(CERTIFICATES_FILE), &certificates)?;
        artifacts.push(Artifact { file: CERTIFICATES_FILE.into(), rows: certificates.len() });
    }
    write_rows(&out_dir.join(PHASE_FILE), &phase)?;
    artifacts.push(Artifact { file: PHASE_FILE.into(), rows: phase.len() });
    if config.plot {
        let script = gnuplot_script(config, &runs);
        let path = out_dir.join(PLOT_FILE);
        std::fs::write(&path, script).map_err(|e| CliError::io(path.display(), e))?;
        artifacts.push(Artifact { file: PLOT_FILE.into(), rows: 0 });
    }

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        status: if failure.is_some() { RunStatus::Partial } else { RunStatus::Complete },
        error: failure.clone(),
        rng: "chacha20".into(),
        config: config.clone(),
        seeds,
        artifacts,
    };
    let path = out_dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| CliError::io(path.display(), e))?;
    match failure {
        Some(e) => Err(CliError::Partial(e)),
        None => Ok(manifest),
    }
}

/// Certifies one sensing matrix with the configured method.
pub fn certify_matrix(a: &DMatrix<f64>, config: &ExperimentConfig) -> Result<Certificate> {
    let c = &config.certificate;
    let cert = match c.method {
        CertificateChoice::Sdp => {
            ssp_sdp_lower_bound(a, &SdpOptions { tol: c.tol, max_iter: c.max_iter, ..Default::default() })?
        }
        CertificateChoice::Exact => exact_certificate(a, &ExactOptions::default())?,
        CertificateChoice::Coherence => coherence_certificate(a)?,
        CertificateChoice::None => return Err(CliError::Usage("no certificate method configured".into())),
    };
    Ok(cert)
}

fn certificate_rows(config: &ExperimentConfig, runs: &[PhaseTransitionConfig]) -> Result<Vec<CertificateRow>> {
    let trials = config.certificate.trials;
    let units: Vec<(usize, usize, usize)> = runs
        .iter()
        .enumerate()
        .flat_map(|(r, run)| (0..run.levels.len()).flat_map(move |l| (0..trials).map(move |t| (r, l, t))))
        .collect();
    let certs: Vec<(f64, Certificate)> = units
        .par_iter()
        .map(|&(r, l, t)| {
            let ts = trial_system(&runs[r], l, t)?;
            let cert = certify_matrix(ts.system.matrix(), config)?;
            Ok((mask_ratio(&ts.mask), cert))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(certs.len() + 2 * units.len() / trials.max(1));
    for (block, run_level) in certs.chunks(trials).zip(units.chunks(trials)) {
        let run = &runs[run_level[0].0];
        let label = |ratio: f64, trial: String, delta: f64, k_max: String, method: &str, status: &str| CertificateRow {
            modality: run.modality.clone(),
            basis: run.sampling.name().into(),
            mask: run.mask.name().into(),
            ratio: format_value(ratio),
            trial,
            delta_sq: format_value(delta),
            k_max,
            method: method.into(),
            solver_status: status.into(),
        };
        for (t, (ratio, cert)) in block.iter().enumerate() {
            rows.push(label(*ratio, t.to_string(), cert.delta_sq, format_kmax(cert.k_max), cert.method.name(), cert.status.name()));
        }
        let method = block[0].1.method.name();
        let mean_ratio = block.iter().map(|b| b.0).sum::<f64>() / block.len() as f64;
        let deltas: Vec<f64> = block.iter().map(|b| b.1.delta_sq).collect();
        let (mean, sd) = mean_std(&deltas);
        rows.push(label(mean_ratio, "mean".into(), mean, format_kmax(recovery_kmax(mean)), method, "summary"));
        rows.push(label(mean_ratio, "stddev".into(), sd, String::new(), method, "summary"));
    }
    Ok(rows)
}

fn format_kmax(k: Option<usize>) -> String {
    k.map_or_else(|| "inf".into(), |k| k.to_string())
}

/// Mean and sample standard deviation; infinite entries make the mean
/// infinite and the spread infinite unless all entries are infinite.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let infinite = values.iter().filter(|v| v.is_infinite()).count();
    if infinite == values.len() {
        return (f64::INFINITY, 0.0);
    }
    if infinite > 0 {
        return (f64::INFINITY, f64::INFINITY);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn phase_rows(result: &PhaseTransitionResult) -> Vec<PhaseRow> {
    result
        .cells
        .iter()
        .map(|c| PhaseRow {
            modality: result.modality.clone(),
            basis: result.sampling.name().into(),
            mask: result.mask.name().into(),
            ratio: c.ratio,
            k: c.k,
            trials: c.trials,
            successes: c.successes,
            success_rate: c.success_rate,
            seed: result.seed,
        })
        .collect()
}

fn run_seeds(run: &PhaseTransitionConfig) -> Result<RunSeeds> {
    let basis_seeds = (0..run.trials)
        .map(|t| {
            Ok(match trial_sampling(run, t)? {
                SamplingOperator::Separable { phi1, .. } => phi1.seed(),
                SamplingOperator::Convolution(_) => None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mask_seeds = (0..run.levels.len())
        .map(|l| (0..run.trials).map(|t| Ok(trial_mask(run, l, t)?.seed())).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(RunSeeds { sampling: run.sampling.name().into(), mask: run.mask.name().into(), basis_seeds, mask_seeds })
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        // csv only emits the header alongside the first record.
        let header = header_of::<T>();
        w.write_record(header)?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| CliError::io(path.display(), e))
}

fn header_of<T>() -> &'static [&'static str] {
    if std::any::type_name::<T>().ends_with("CertificateRow") {
        &["modality", "basis", "mask", "ratio", "trial", "delta_sq", "k_max", "method", "solver_status"]
    } else {
        &["modality", "basis", "mask", "ratio", "k", "trials", "successes", "success_rate", "seed"]
    }
}

pub fn read_certificate_csv(path: &Path) -> Result<Vec<CertificateRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn read_phase_csv(path: &Path) -> Result<Vec<PhaseRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

fn gnuplot_script(config: &ExperimentConfig, runs: &[PhaseTransitionConfig]) -> String {
    let mut s = String::new();
    s.push_str("# gnuplot -c plot.gp\nset datafile separator ','\nset key outside right\nset grid\n");
    s.push_str("set terminal pngcairo size 1000,600\n");
    if config.certificate.method != CertificateChoice::None {
        s.push_str("set output 'certificates.png'\nset xlabel 'sampling ratio |Omega|/N'\nset ylabel 'Delta^2/2'\n");
        let curves: Vec<String> = runs
            .iter()
            .map(|r| {
                let (b, m) = (r.sampling.name(), r.mask.name());
                format!(
                    "'{CERTIFICATES_FILE}' using (strcol(2) eq '{b}' && strcol(3) eq '{m}' && strcol(5) eq 'mean' ? $4 : 1/0):($6/2) with linespoints title '{b}/{m}'"
                )
            })
            .collect();
        s.push_str(&format!("plot {}\n", curves.join(", \\\n     ")));
    }
    s.push_str("set xlabel 'sampling ratio |Omega|/N'\nset ylabel 'sparsity k'\nset cblabel 'success rate'\nset cbrange [0:1]\n");
    for r in runs {
        let (b, m) = (r.sampling.name(), r.mask.name());
        s.push_str(&format!(
            "set output 'phase_{b}_{m}.png'\nplot '{PHASE_FILE}' using (strcol(2) eq '{b}' && strcol(3) eq '{m}' ? $4 : 1/0):5:8 with points pt 5 ps 2 palette title '{b}/{m}'\n"
        ));
    }
    s
}
