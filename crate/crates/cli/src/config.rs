//! Experiment configuration: a versioned JSON document validated field by
//! field so that every problem is reported with its JSON path.

use std::fmt;
use std::path::Path;

use cs_certify_core::bases::{is_prime, BasisKind};
use cs_certify_core::masks::{downsample_stride, MaskKind, DEFAULT_DENSITY_ALPHA, MAX_DOWNSAMPLE_RATIO};
use cs_certify_core::recovery::BpOptions;
use cs_certify_core::sensing::AmplitudeLaw;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};
use crate::presets::Modality;

pub const SCHEMA_VERSION: u64 = 1;

/// A violated rule at a JSON path such as `.ratios[0]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub path: String,
    pub rule: String,
}

impl Diagnostic {
    fn new(path: impl Into<String>, rule: impl Into<String>) -> Self {
        Diagnostic { path: path.into(), rule: rule.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.rule)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateChoice {
    Sdp,
    Exact,
    Coherence,
    None,
}

impl CertificateChoice {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "sdp" => Some(CertificateChoice::Sdp),
            "exact" => Some(CertificateChoice::Exact),
            "coherence" => Some(CertificateChoice::Coherence),
            "none" => Some(CertificateChoice::None),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateConfig {
    pub method: CertificateChoice,
    pub tol: f64,
    pub max_iter: usize,
    /// Mask realizations certified per sampling level.
    pub trials: usize,
}

/// A validated experiment with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u64,
    pub preset: Modality,
    pub size: usize,
    pub sampling: Vec<BasisKind>,
    pub masks: Vec<MaskKind>,
    pub ratios: Vec<f64>,
    pub lines: Vec<usize>,
    pub sparsities: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub certificate: CertificateConfig,
    pub bp: BpOptions,
    pub density_alpha: f64,
    pub amplitude: AmplitudeLaw,
    pub plot: bool,
}

const KEYS: &[&str] = &[
    "schema_version",
    "preset",
    "size",
    "sampling",
    "masks",
    "ratios",
    "lines",
    "sparsities",
    "trials",
    "seed",
    "certificate",
    "bp",
    "density_alpha",
    "amplitude",
    "plot",
];

/// Diagnostics for the configuration file at `path`; empty when it is valid.
pub fn validate_config(path: &Path) -> Result<Vec<Diagnostic>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    Ok(match parse_text(&text) {
        Ok(_) => Vec::new(),
        Err(d) => d,
    })
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    parse_text(&text).map_err(CliError::Config)
}

pub fn parse_text(text: &str) -> std::result::Result<ExperimentConfig, Vec<Diagnostic>> {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        vec![Diagnostic::new("$", format!("invalid JSON at line {} column {}: {e}", e.line(), e.column()))]
    })?;
    parse_value(&value)
}

pub fn parse_value(value: &Value) -> std::result::Result<ExperimentConfig, Vec<Diagnostic>> {
    let mut v = Validator::default();
    let cfg = v.config(value);
    match cfg {
        Some(c) if v.diags.is_empty() => Ok(c),
        _ => Err(v.diags),
    }
}

#[derive(Default)]
struct Validator {
    diags: Vec<Diagnostic>,
}

impl Validator {
    fn fail(&mut self, path: impl Into<String>, rule: impl Into<String>) {
        self.diags.push(Diagnostic::new(path, rule));
    }

    fn config(&mut self, value: &Value) -> Option<ExperimentConfig> {
        let Some(obj) = value.as_object() else {
            self.fail("$", "top level must be an object");
            return None;
        };
        for key in obj.keys() {
            if !KEYS.contains(&key.as_str()) {
                self.fail(format!(".{key}"), "unknown field");
            }
        }
        match obj.get("schema_version").map(Value::as_u64) {
            Some(Some(SCHEMA_VERSION)) => {}
            Some(_) => self.fail(".schema_version", format!("must equal {SCHEMA_VERSION}")),
            None => self.fail(".schema_version", "required field is missing"),
        }
        let preset = match obj.get("preset") {
            None => {
                self.fail(".preset", "required field is missing");
                None
            }
            Some(p) => match p.as_str().and_then(Modality::parse) {
                Some(m) => Some(m),
                None => {
                    let names: Vec<&str> = Modality::ALL.iter().map(|m| m.name()).collect();
                    self.fail(".preset", format!("must be one of {}", names.join(", ")));
                    None
                }
            },
        };
        let preset = preset?.preset();

        let size = match obj.get("size") {
            None => Some(preset.default_size),
            Some(s) => self.uint(".size", s, 2),
        };
        let sampling = self.kinds(obj, "sampling", preset.sampling, BasisKind::parse, |k| preset.allows_sampling(k));
        let masks = self.kinds(obj, "masks", preset.masks, MaskKind::parse, |k| preset.allows_mask(k));

        if let (Some(size), Some(sampling)) = (size, &sampling) {
            for kind in sampling.iter().copied().chain([preset.sparsifier]) {
                if let Some(rule) = size_rule(kind, size) {
                    self.fail(".size", rule);
                }
            }
        }

        let ratios = self.float_list(obj, "ratios", |r| r > 0.0 && r < 1.0, "must lie strictly between 0 and 1");
        let lines = self.uint_list(obj, "lines", 1);
        let sparsities = self.uint_list(obj, "sparsities", 1);

        if let Some(masks) = &masks {
            let radial = masks.contains(&MaskKind::Radial);
            let ratio_masks = masks.iter().any(|&m| m != MaskKind::Radial);
            if radial && lines.as_ref().is_some_and(|l| l.is_empty()) {
                self.fail(".lines", "radial masks need a non-empty line list");
            }
            if ratio_masks && ratios.as_ref().is_some_and(|r| r.is_empty()) {
                self.fail(".ratios", "random and down-sampling masks need a non-empty ratio list");
            }
            if let (true, Some(ratios), Some(size)) = (masks.contains(&MaskKind::DownSample), &ratios, size) {
                for (i, &r) in ratios.iter().enumerate() {
                    if r > MAX_DOWNSAMPLE_RATIO {
                        self.fail(
                            format!(".ratios[{i}]"),
                            format!("down-sampling keeps at most {MAX_DOWNSAMPLE_RATIO} of the grid"),
                        );
                    } else if r > 0.0 && downsample_stride(size, size, r).is_err() {
                        self.fail(format!(".ratios[{i}]"), format!("no down-sampling stride realizes {r} on a {size}x{size} grid"));
                    }
                }
            }
        }
        if let (Some(s), Some(size)) = (&sparsities, size) {
            if s.is_empty() {
                self.fail(".sparsities", "must not be empty");
            }
            for (i, &k) in s.iter().enumerate() {
                if k > size * size {
                    self.fail(format!(".sparsities[{i}]"), format!("exceeds the {} coefficients of the image", size * size));
                }
            }
        }

        let trials = match obj.get("trials") {
            None => Some(10),
            Some(t) => self.uint(".trials", t, 1),
        };
        let seed = match obj.get("seed") {
            None => {
                self.fail(".seed", "required field is missing");
                None
            }
            Some(s) => s.as_u64().or_else(|| {
                self.fail(".seed", "must be a non-negative integer");
                None
            }),
        };
        let certificate = trials.and_then(|t| self.certificate(obj.get("certificate"), t));
        let bp = self.bp(obj.get("bp"));
        let density_alpha = match obj.get("density_alpha") {
            None => Some(DEFAULT_DENSITY_ALPHA),
            Some(a) => match a.as_f64() {
                Some(x) if x >= 0.0 && x.is_finite() => Some(x),
                _ => {
                    self.fail(".density_alpha", "must be a non-negative number");
                    None
                }
            },
        };
        let amplitude = match obj.get("amplitude").map(|a| a.as_str()) {
            None => Some(AmplitudeLaw::StandardNormal),
            Some(Some("standard_normal")) => Some(AmplitudeLaw::StandardNormal),
            Some(Some("rademacher")) => Some(AmplitudeLaw::Rademacher),
            Some(_) => {
                self.fail(".amplitude", "must be \"standard_normal\" or \"rademacher\"");
                None
            }
        };
        let plot = match obj.get("plot") {
            None => Some(true),
            Some(p) => p.as_bool().or_else(|| {
                self.fail(".plot", "must be a boolean");
                None
            }),
        };

        Some(ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            preset: preset.modality,
            size: size?,
            sampling: sampling?,
            masks: masks?,
            ratios: ratios?,
            lines: lines?,
            sparsities: sparsities?,
            trials: trials?,
            seed: seed?,
            certificate: certificate?,
            bp: bp?,
            density_alpha: density_alpha?,
            amplitude: amplitude?,
            plot: plot?,
        })
    }

    fn uint(&mut self, path: &str, v: &Value, min: u64) -> Option<usize> {
        match v.as_u64() {
            Some(x) if x >= min => Some(x as usize),
            _ => {
                self.fail(path, format!("must be an integer of at least {min}"));
                None
            }
        }
    }

    fn positive(&mut self, path: &str, v: &Value) -> Option<f64> {
        match v.as_f64() {
            Some(x) if x > 0.0 && x.is_finite() => Some(x),
            _ => {
                self.fail(path, "must be a positive number");
                None
            }
        }
    }

    fn array<'v>(&mut self, obj: &'v Map<String, Value>, key: &str) -> Option<&'v [Value]> {
        match obj.get(key) {
            None => Some(&[]),
            Some(Value::Array(a)) => Some(a),
            Some(_) => {
                self.fail(format!(".{key}"), "must be an array");
                None
            }
        }
    }

    fn float_list(&mut self, obj: &Map<String, Value>, key: &str, ok: impl Fn(f64) -> bool, rule: &str) -> Option<Vec<f64>> {
        let items = self.array(obj, key)?;
        let mut out = Vec::with_capacity(items.len());
        let before = self.diags.len();
        for (i, item) in items.iter().enumerate() {
            match item.as_f64() {
                Some(x) if ok(x) => out.push(x),
                _ => self.fail(format!(".{key}[{i}]"), rule),
            }
        }
        (self.diags.len() == before).then_some(out)
    }

    fn uint_list(&mut self, obj: &Map<String, Value>, key: &str, min: u64) -> Option<Vec<usize>> {
        let items = self.array(obj, key)?;
        let before = self.diags.len();
        let out: Vec<usize> = items.iter().enumerate().filter_map(|(i, item)| self.uint(&format!(".{key}[{i}]"), item, min)).collect();
        (self.diags.len() == before).then_some(out)
    }

    fn kinds<K: Copy + PartialEq>(
        &mut self,
        obj: &Map<String, Value>,
        key: &str,
        defaults: &[K],
        parse: fn(&str) -> Option<K>,
        allowed: impl Fn(K) -> bool,
    ) -> Option<Vec<K>> {
        if !obj.contains_key(key) {
            return Some(defaults.to_vec());
        }
        let items = self.array(obj, key)?;
        if items.is_empty() {
            self.fail(format!(".{key}"), "must not be empty");
            return None;
        }
        let before = self.diags.len();
        let mut out = Vec::new();
        for (i, item) in items.iter().enumerate() {
            match item.as_str().and_then(parse) {
                Some(k) if allowed(k) => {
                    if !out.contains(&k) {
                        out.push(k);
                    }
                }
                Some(_) => self.fail(format!(".{key}[{i}]"), "not available for this preset"),
                None => self.fail(format!(".{key}[{i}]"), "unknown name"),
            }
        }
        (self.diags.len() == before).then_some(out)
    }

    fn certificate(&mut self, v: Option<&Value>, trials: usize) -> Option<CertificateConfig> {
        let mut c = CertificateConfig { method: CertificateChoice::Sdp, tol: 1e-6, max_iter: 50_000, trials };
        let Some(v) = v else { return Some(c) };
        let Some(obj) = v.as_object() else {
            self.fail(".certificate", "must be an object");
            return None;
        };
        let before = self.diags.len();
        for (key, val) in obj {
            let path = format!(".certificate.{key}");
            match key.as_str() {
                "method" => match val.as_str().and_then(CertificateChoice::parse) {
                    Some(m) => c.method = m,
                    None => self.fail(path, "must be one of sdp, exact, coherence, none"),
                },
                "tol" => c.tol = self.positive(&path, val).unwrap_or(c.tol),
                "max_iter" => c.max_iter = self.uint(&path, val, 1).unwrap_or(c.max_iter),
                "trials" => c.trials = self.uint(&path, val, 1).unwrap_or(c.trials),
                _ => self.fail(path, "unknown field"),
            }
        }
        (self.diags.len() == before).then_some(c)
    }

    fn bp(&mut self, v: Option<&Value>) -> Option<BpOptions> {
        let mut b = BpOptions::default();
        let Some(v) = v else { return Some(b) };
        let Some(obj) = v.as_object() else {
            self.fail(".bp", "must be an object");
            return None;
        };
        let before = self.diags.len();
        for (key, val) in obj {
            let path = format!(".bp.{key}");
            match key.as_str() {
                "eq_tol" => b.eq_tol = self.positive(&path, val).unwrap_or(b.eq_tol),
                "max_iter" => b.max_iter = self.uint(&path, val, 1).unwrap_or(b.max_iter),
                "success_threshold" => b.success_threshold = self.positive(&path, val).unwrap_or(b.success_threshold),
                "gap_tol" => b.gap_tol = self.positive(&path, val).unwrap_or(b.gap_tol),
                _ => self.fail(path, "unknown field"),
            }
        }
        (self.diags.len() == before).then_some(b)
    }
}

/// Size requirement of a basis kind, if `size` violates it.
pub fn size_rule(kind: BasisKind, size: usize) -> Option<String> {
    match kind {
        BasisKind::WalshHadamard if !size.is_power_of_two() => {
            Some(format!("power-of-two required for {} (got {size})", kind.name()))
        }
        BasisKind::DaubechiesWavelet if size < 4 || size % 2 != 0 => {
            Some(format!("even size of at least 4 required for {} (got {size})", kind.name()))
        }
        BasisKind::MuraCirculant if !is_prime(size) => Some(format!("prime size required for {} (got {size})", kind.name())),
        _ => None,
    }
}
