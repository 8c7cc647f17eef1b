//! Command-line surface and the dispatch of each subcommand.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use cs_certify_core::bases::{mura_operator, BasisKind};
use cs_certify_core::certify::{
    coherence_certificate, exact_certificate, spark_bruteforce, ssp_sdp_lower_bound, ExactOptions, SdpOptions, Spark,
    DEFAULT_SPARK_CAP,
};
use cs_certify_core::linalg::Dense;
use cs_certify_core::masks::{generate_mask, Mask, MaskKind, MaskParams};
use cs_certify_core::recovery::{bp_solve, BpOptions};
use cs_certify_core::sensing::{build_sensing, SamplingOperator};
use nalgebra::DMatrix;

use crate::cache;
use crate::config::{load_config, validate_config};
use crate::error::{CliError, Result};
use crate::experiment::{replay_manifest, run_config, Manifest};
use crate::matrix_io::{format_value, read_matrix, read_vector, write_matrix, write_vector};

#[derive(Debug, Parser)]
#[command(name = "cs-certify", version, about = "Sparse-recovery certificates for compressed-sensing imaging")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Default)]
pub struct GlobalArgs {
    /// Base seed for random masks, bases and signals.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Solver tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Solver iteration cap.
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Directory that relative `--out` paths are resolved against.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sub-sampling masks.
    Mask {
        #[command(subcommand)]
        action: MaskCommand,
    },
    /// Sampling and sparsifying bases.
    Basis {
        #[command(subcommand)]
        action: BasisCommand,
    },
    /// Sensing matrices.
    Sensing {
        #[command(subcommand)]
        action: SensingCommand,
    },
    /// Certify the recovery capacity of a sensing matrix.
    Certify {
        /// Sensing matrix CSV.
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Sdp)]
        method: Method,
        /// Certificate JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Basis pursuit decoding of `y = A c`.
    Recover {
        /// Sensing matrix CSV.
        #[arg(long)]
        matrix: PathBuf,
        /// Measurement vector CSV as one column or one row.
        #[arg(long)]
        measurements: PathBuf,
        /// Recovered coefficients as a one-column CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment from a config file or replay a manifest.
    Experiment {
        /// Experiment config JSON.
        #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
        config: Option<PathBuf>,
        /// Manifest of an earlier run to replay.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Output directory for the artifacts.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check an experiment config and list its diagnostics.
    Validate {
        /// Experiment config JSON.
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum MaskCommand {
    /// Generate a mask.
    Gen {
        /// radial, random, density or downsample.
        #[arg(long, value_parser = parse_mask_kind)]
        kind: MaskKind,
        /// Grid size as `MxN` or `N`.
        #[arg(long, value_parser = parse_size)]
        size: (usize, usize),
        /// Spoke count of radial masks.
        #[arg(long)]
        lines: Option<usize>,
        /// Target `|Ω|/N` of random and density masks.
        #[arg(long)]
        ratio: Option<f64>,
        /// Density decay exponent.
        #[arg(long)]
        alpha: Option<f64>,
        /// Down-sampling stride.
        #[arg(long)]
        stride: Option<usize>,
        /// `.bin` writes the binary format, anything else JSON.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum BasisCommand {
    /// Generate an `n × n` basis as CSV.
    Gen {
        /// identity, fourier, wht, bernoulli, gaussian, mura or db4.
        #[arg(long, value_parser = parse_basis_kind)]
        kind: BasisKind,
        #[arg(long)]
        n: usize,
        /// Basis CSV; complex bases use re,im column pairs.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum SensingCommand {
    /// Assemble a sensing matrix from a mask and bases.
    Build {
        /// Mask JSON or `.bin`.
        #[arg(long)]
        mask: PathBuf,
        /// Sampling basis along both modes, or along the first with `--phi2`.
        #[arg(long, value_parser = parse_basis_kind)]
        phi: BasisKind,
        /// Sampling basis along the second mode.
        #[arg(long, value_parser = parse_basis_kind)]
        phi2: Option<BasisKind>,
        /// Sparsifying basis.
        #[arg(long, value_parser = parse_basis_kind, default_value = "db4")]
        psi: BasisKind,
        /// Matrix CSV; the provenance goes next to it as `<stem>.provenance.json`.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Sdp,
    Exact,
    Coherence,
    Spark,
}

fn parse_mask_kind(s: &str) -> std::result::Result<MaskKind, String> {
    MaskKind::parse(s).ok_or_else(|| format!("unknown mask kind {s:?}"))
}

fn parse_basis_kind(s: &str) -> std::result::Result<BasisKind, String> {
    BasisKind::parse(s).ok_or_else(|| format!("unknown basis kind {s:?}"))
}

fn parse_size(s: &str) -> std::result::Result<(usize, usize), String> {
    let bad = || format!("expected MxN or N, got {s:?}");
    match s.split_once(['x', 'X']) {
        Some((m, n)) => Ok((m.trim().parse().map_err(|_| bad())?, n.trim().parse().map_err(|_| bad())?)),
        None => {
            let n = s.trim().parse().map_err(|_| bad())?;
            Ok((n, n))
        }
    }
}

/// Runs a parsed command line inside a worker pool sized by `--jobs`.
pub fn run(cli: Cli) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.global.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().map_err(|e| CliError::Usage(e.to_string()))?;
    pool.install(|| dispatch(&cli.global, cli.command))
}

fn resolve(global: &GlobalArgs, path: &Path) -> PathBuf {
    match &global.out_dir {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

fn prepare(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => std::fs::create_dir_all(p).map_err(|e| CliError::io(p.display(), e)),
        _ => Ok(()),
    }
}

fn dispatch(global: &GlobalArgs, command: Command) -> Result<()> {
    match command {
        Command::Mask { action: MaskCommand::Gen { kind, size, lines, ratio, alpha, stride, out } } => {
            let params = MaskParams { lines, ratio, alpha, stride };
            let mask = generate_mask(kind, size.0, size.1, &params, global.seed)?;
            let out = resolve(global, &out);
            prepare(&out)?;
            write_mask(&mask, &out)?;
            eprintln!("{}: {} of {} samples", out.display(), mask.len(), size.0 * size.1);
            Ok(())
        }
        Command::Basis { action: BasisCommand::Gen { kind, n, out } } => {
            let basis = cache::basis(kind, n, global.seed)?;
            let out = resolve(global, &out);
            prepare(&out)?;
            write_dense(&out, basis.entries())
        }
        Command::Sensing { action: SensingCommand::Build { mask, phi, phi2, psi, out } } => {
            let mask = read_mask(&mask)?;
            let sampling = if phi == BasisKind::MuraCirculant {
                if phi2.is_some_and(|k| k != phi) {
                    return Err(CliError::Usage("mura_circulant cannot be combined with another sampling basis".into()));
                }
                if mask.rows() != mask.cols() {
                    return Err(CliError::Usage("mura_circulant needs a square mask".into()));
                }
                SamplingOperator::Convolution(mura_operator(mask.rows())?)
            } else {
                let phi1 = cache::basis(phi, mask.rows(), global.seed)?;
                let seed2 = global.seed.map(|s| s.wrapping_add(1));
                let phi2 = cache::basis(phi2.unwrap_or(phi), mask.cols(), seed2)?;
                SamplingOperator::separable(phi1, phi2)
            };
            if mask.rows() != mask.cols() {
                return Err(CliError::Usage("the sparsifier needs a square grid".into()));
            }
            let psi = cache::basis(psi, mask.rows(), None)?;
            let system = build_sensing(&mask, &sampling, &psi)?;
            let out = resolve(global, &out);
            prepare(&out)?;
            write_matrix(&out, system.matrix())?;
            let prov = out.with_extension("provenance.json");
            write_json(&prov, system.provenance())
        }
        Command::Certify { matrix, method, out } => {
            let a = read_matrix(&matrix)?;
            let out = resolve(global, &out);
            prepare(&out)?;
            let json = certify_json(&a, method, global)?;
            std::fs::write(&out, json + "\n").map_err(|e| CliError::io(out.display(), e))
        }
        Command::Recover { matrix, measurements, out } => {
            let a = read_matrix(&matrix)?;
            let y = read_vector(&measurements)?;
            let mut opts = BpOptions::default();
            if let Some(t) = global.tol {
                opts.gap_tol = t;
            }
            if let Some(m) = global.max_iter {
                opts.max_iter = m;
            }
            let sol = bp_solve(&a, &y, &opts)?;
            let out = resolve(global, &out);
            prepare(&out)?;
            write_vector(&out, &sol.x)?;
            eprintln!(
                "objective {} lower bound {} residual {:e} iterations {}{}",
                format_value(sol.objective),
                format_value(sol.lower_bound),
                sol.residual,
                sol.iterations,
                if sol.converged { "" } else { " (not converged)" }
            );
            Ok(())
        }
        Command::Experiment { config, manifest, out } => {
            let out = match (out, &global.out_dir) {
                (Some(o), _) => resolve(global, &o),
                (None, Some(d)) => d.clone(),
                (None, None) => PathBuf::from("."),
            };
            let manifest: Manifest = match (config, manifest) {
                (_, Some(m)) => replay_manifest(&m, &out)?,
                (Some(c), None) => {
                    let mut cfg = load_config(&c)?;
                    if let Some(s) = global.seed {
                        cfg.seed = s;
                    }
                    if let Some(t) = global.tol {
                        cfg.certificate.tol = t;
                    }
                    if let Some(m) = global.max_iter {
                        cfg.certificate.max_iter = m;
                    }
                    run_config(&cfg, &out)?
                }
                (None, None) => return Err(CliError::Usage("either --config or --manifest is required".into())),
            };
            for a in &manifest.artifacts {
                eprintln!("{}: {} rows", out.join(&a.file).display(), a.rows);
            }
            Ok(())
        }
        Command::Validate { config } => {
            let diagnostics = validate_config(&config)?;
            if diagnostics.is_empty() {
                println!("{}: ok", config.display());
                Ok(())
            } else {
                Err(CliError::Config(diagnostics))
            }
        }
    }
}

fn certify_json(a: &DMatrix<f64>, method: Method, global: &GlobalArgs) -> Result<String> {
    let cert = match method {
        Method::Sdp => {
            let mut opts = SdpOptions::default();
            if let Some(t) = global.tol {
                opts.tol = t;
            }
            if let Some(m) = global.max_iter {
                opts.max_iter = m;
            }
            ssp_sdp_lower_bound(a, &opts)?
        }
        Method::Exact => exact_certificate(a, &ExactOptions::default())?,
        Method::Coherence => coherence_certificate(a)?,
        Method::Spark => {
            let spark = match spark_bruteforce(a, DEFAULT_SPARK_CAP)? {
                Spark::Finite(s) => serde_json::Value::from(s),
                Spark::Infinite => serde_json::Value::from("inf"),
            };
            return Ok(serde_json::to_string_pretty(&serde_json::json!({ "spark": spark }))?);
        }
    };
    Ok(cert.to_json()?)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).map_err(|e| CliError::io(path.display(), e))
}

fn is_binary(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "bin")
}

pub fn write_mask(mask: &Mask, path: &Path) -> Result<()> {
    if is_binary(path) {
        let f = File::create(path).map_err(|e| CliError::io(path.display(), e))?;
        mask.write_binary(BufWriter::new(f))?;
        Ok(())
    } else {
        std::fs::write(path, mask.to_json()? + "\n").map_err(|e| CliError::io(path.display(), e))
    }
}

pub fn read_mask(path: &Path) -> Result<Mask> {
    if is_binary(path) {
        let f = File::open(path).map_err(|e| CliError::io(path.display(), e))?;
        Ok(Mask::read_binary(BufReader::new(f))?)
    } else {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        Ok(Mask::from_json(&text)?)
    }
}

/// Real bases as plain rows; complex bases as `re,im` column pairs.
fn write_dense(path: &Path, entries: &Dense) -> Result<()> {
    let m = match entries {
        Dense::Real(m) => m.clone(),
        Dense::Complex(c) => DMatrix::from_fn(c.nrows(), 2 * c.ncols(), |i, j| {
            let z = c[(i, j / 2)];
            if j % 2 == 0 { z.re } else { z.im }
        }),
    };
    write_matrix(path, &m)
}
