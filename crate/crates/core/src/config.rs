//! Experiment configuration: a TOML file with one section per pipeline
//! stage, `--set section.key=value` overrides, and a canonical hash that
//! every output file records.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::po_field::{FarFieldDirection, FeedModel, GeometryParams, QuadratureSettings, ReflectorGeometry};
use crate::residual_net::{NetConfig, TrainConfig};
use crate::resnet_sa::{MeasurementNoise, MismatchScenario};
use crate::weights::{SaConfig, MAX_LEVELS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeedSection {
    pub q_theoretical: f64,
    pub q_true: f64,
    pub i0_re: f64,
    pub i0_im: f64,
}

impl Default for FeedSection {
    fn default() -> Self {
        Self {
            q_theoretical: 1.14,
            q_true: 1.5,
            i0_re: 1.0,
            i0_im: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetSection {
    pub psi_deg: f64,
    pub phi_deg: f64,
}

impl Default for TargetSection {
    fn default() -> Self {
        Self {
            psi_deg: 2.5,
            phi_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SaSection {
    pub m_levels: usize,
    pub iterations: usize,
    pub schedule_len: usize,
    pub seed: u64,
    pub scale_samples: usize,
}

impl Default for SaSection {
    fn default() -> Self {
        let sa = SaConfig::default();
        Self {
            m_levels: 4,
            iterations: sa.iterations,
            schedule_len: sa.schedule_len,
            seed: sa.seed,
            scale_samples: sa.scale_samples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetSection {
    pub width: usize,
    pub blocks: usize,
    pub include_gain_feature: bool,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub decay: f64,
    pub split_fraction: f64,
    pub seed: u64,
}

impl Default for NetSection {
    fn default() -> Self {
        let n = NetConfig::default();
        let t = TrainConfig::default();
        Self {
            width: n.width,
            blocks: n.blocks,
            include_gain_feature: n.include_gain_feature,
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            decay: t.decay,
            split_fraction: t.split_fraction,
            seed: t.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    pub trajectories: usize,
    pub seed: u64,
    pub noise_sigma_db: f64,
    pub noise_seed: u64,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            trajectories: 20,
            seed: 1000,
            noise_sigma_db: 0.0,
            noise_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PatternSection {
    pub psi_min_deg: f64,
    pub psi_max_deg: f64,
    pub psi_step_deg: f64,
    pub phi_deg: f64,
}

impl Default for PatternSection {
    fn default() -> Self {
        Self {
            psi_min_deg: 0.0,
            psi_max_deg: 3.0,
            psi_step_deg: 0.01,
            phi_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "results".into() }
    }
}

/// Everything one experiment needs. Absent keys take their defaults, which
/// describe the full 18 m, 1.5 GHz reflector.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub geometry: GeometryParams,
    pub quadrature: QuadratureSettings,
    pub feed: FeedSection,
    pub target: TargetSection,
    pub sa: SaSection,
    pub net: NetSection,
    pub dataset: DatasetSection,
    pub pattern: PatternSection,
    pub output: OutputSection,
}

/// One documented key for `--help`.
pub struct KeyDoc {
    pub key: &'static str,
    pub unit: &'static str,
    pub about: &'static str,
}

pub const KEYS: &[KeyDoc] = &[
    KeyDoc {
        key: "geometry.diameter_m",
        unit: "m",
        about: "dish diameter",
    },
    KeyDoc {
        key: "geometry.rim_width_m",
        unit: "m",
        about: "radial width of the reconfigurable rim",
    },
    KeyDoc {
        key: "geometry.f_over_d",
        unit: "-",
        about: "focal length over diameter",
    },
    KeyDoc {
        key: "geometry.frequency_hz",
        unit: "Hz",
        about: "operating frequency",
    },
    KeyDoc {
        key: "geometry.element_side_wavelengths",
        unit: "wavelengths",
        about: "element side; also the ring width",
    },
    KeyDoc {
        key: "geometry.elements_per_ring",
        unit: "-",
        about: "fixed elements per ring (auto: floor(2*pi*rho/side))",
    },
    KeyDoc {
        key: "quadrature.samples_per_wavelength",
        unit: "1/wavelength",
        about: "dish integration density",
    },
    KeyDoc {
        key: "quadrature.refinement",
        unit: "-",
        about: "multiplies the integration density",
    },
    KeyDoc {
        key: "quadrature.tolerance_db",
        unit: "dB",
        about: "allowed change under 2x refinement",
    },
    KeyDoc {
        key: "feed.q_theoretical",
        unit: "-",
        about: "cos^q feed exponent of the theoretical pattern",
    },
    KeyDoc {
        key: "feed.q_true",
        unit: "-",
        about: "cos^q feed exponent of the true pattern",
    },
    KeyDoc {
        key: "feed.i0_re",
        unit: "A",
        about: "feed current amplitude, real part",
    },
    KeyDoc {
        key: "feed.i0_im",
        unit: "A",
        about: "feed current amplitude, imaginary part",
    },
    KeyDoc {
        key: "target.psi_deg",
        unit: "deg",
        about: "null direction, angle from boresight",
    },
    KeyDoc {
        key: "target.phi_deg",
        unit: "deg",
        about: "null direction, azimuth",
    },
    KeyDoc {
        key: "sa.m_levels",
        unit: "-",
        about: "phase quantization levels M (2..=36)",
    },
    KeyDoc {
        key: "sa.iterations",
        unit: "-",
        about: "annealing steps per chain",
    },
    KeyDoc {
        key: "sa.schedule_len",
        unit: "-",
        about: "temperatures in the schedule 1, 1/2, ..., 1/T",
    },
    KeyDoc {
        key: "sa.seed",
        unit: "-",
        about: "seed of the evaluation chains",
    },
    KeyDoc {
        key: "sa.scale_samples",
        unit: "-",
        about: "random vectors used to scale the temperature",
    },
    KeyDoc {
        key: "net.width",
        unit: "-",
        about: "hidden width",
    },
    KeyDoc {
        key: "net.blocks",
        unit: "-",
        about: "residual blocks",
    },
    KeyDoc {
        key: "net.include_gain_feature",
        unit: "bool",
        about: "feed the theoretical gain to the network",
    },
    KeyDoc {
        key: "net.epochs",
        unit: "-",
        about: "training epochs",
    },
    KeyDoc {
        key: "net.batch_size",
        unit: "-",
        about: "mini-batch size",
    },
    KeyDoc {
        key: "net.learning_rate",
        unit: "-",
        about: "Adam step size",
    },
    KeyDoc {
        key: "net.decay",
        unit: "-",
        about: "per-epoch learning-rate factor",
    },
    KeyDoc {
        key: "net.split_fraction",
        unit: "-",
        about: "training share of the dataset",
    },
    KeyDoc {
        key: "net.seed",
        unit: "-",
        about: "initialization and shuffling seed",
    },
    KeyDoc {
        key: "dataset.trajectories",
        unit: "-",
        about: "theoretical-pattern chains in the dataset",
    },
    KeyDoc {
        key: "dataset.seed",
        unit: "-",
        about: "seed of the dataset chains",
    },
    KeyDoc {
        key: "dataset.noise_sigma_db",
        unit: "dB",
        about: "std of Gaussian noise on measured true gains",
    },
    KeyDoc {
        key: "dataset.noise_seed",
        unit: "-",
        about: "seed of the measurement noise",
    },
    KeyDoc {
        key: "pattern.psi_min_deg",
        unit: "deg",
        about: "first sweep angle",
    },
    KeyDoc {
        key: "pattern.psi_max_deg",
        unit: "deg",
        about: "last sweep angle",
    },
    KeyDoc {
        key: "pattern.psi_step_deg",
        unit: "deg",
        about: "sweep step",
    },
    KeyDoc {
        key: "pattern.phi_deg",
        unit: "deg",
        about: "sweep azimuth",
    },
    KeyDoc {
        key: "output.dir",
        unit: "path",
        about: "directory for all output files",
    },
];

/// `key  default  unit  description`, one line per key.
pub fn key_help() -> String {
    let defaults = toml::Table::try_from(ExperimentConfig::default()).expect("defaults serialize");
    let mut out = String::from("Config keys (section.key, default, unit):\n");
    for k in KEYS {
        let value = lookup(&defaults, k.key)
            .map(|v| v.to_string())
            .unwrap_or_else(|| "auto".into());
        let _ = writeln!(out, "  {:<38} {:<12} {:<14} {}", k.key, value, k.unit, k.about);
    }
    out
}

fn lookup<'a>(table: &'a toml::Table, key: &str) -> Option<&'a toml::Value> {
    let (section, name) = key.split_once('.')?;
    table.get(section)?.as_table()?.get(name)
}

/// 1-based line of `offset` in `text`.
fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line on which `section.key` is assigned, if it appears in the file.
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    let (section, name) = key.split_once('.')?;
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = header.trim().to_string();
        } else if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == name {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

/// Parses a `--set` value as TOML, falling back to a bare string.
fn override_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl ExperimentConfig {
    /// Parses TOML text; `source` names it in diagnostics.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        Self::parse_with_overrides(text, source, &[])
    }

    /// Parses TOML text, then applies `section.key=value` overrides in order.
    pub fn parse_with_overrides(text: &str, source: &str, overrides: &[String]) -> Result<Self> {
        let parse_error = |e: toml::de::Error| Error::Parse {
            path: source.to_string(),
            line: e.span().map(|s| line_at(text, s.start)).unwrap_or(1),
            message: e.message().trim().to_string(),
        };
        let mut config: ExperimentConfig = toml::from_str(text).map_err(parse_error)?;
        if !overrides.is_empty() {
            let mut table: toml::Table = toml::from_str(text).map_err(parse_error)?;
            for o in overrides {
                let (key, raw) = o
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("--set {o}: expected section.key=value")))?;
                let key = key.trim();
                let (section, name) = key
                    .split_once('.')
                    .ok_or_else(|| Error::Config(format!("--set {key}: expected section.key")))?;
                let entry = table
                    .entry(section.to_string())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()));
                let toml::Value::Table(section_table) = entry else {
                    return Err(Error::Config(format!("--set {key}: {section} is not a section")));
                };
                section_table.insert(name.to_string(), override_value(raw.trim()));
                config = toml::Value::Table(table.clone())
                    .try_into()
                    .map_err(|e: toml::de::Error| Error::Config(format!("--set {key}: {}", e.message().trim())))?;
            }
        }
        config
            .validate()
            .map_err(|(key, message)| match line_of_key(text, key) {
                Some(line) if !overrides.iter().any(|o| o.trim_start().starts_with(key)) => Error::Parse {
                    path: source.to_string(),
                    line,
                    message: format!("{key}: {message}"),
                },
                _ => Error::Config(format!("{key}: {message}")),
            })?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_with_overrides(&text, &path.display().to_string(), overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form, so formatting and key order in the
    /// source file do not matter. The output directory is excluded: moving
    /// a run elsewhere does not change its results.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output.dir.clear();
        let digest = Sha256::digest(canonical.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Range and consistency checks; the error names the offending key.
    fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        let positive = |key: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err((key, format!("must be a positive number, got {v}")))
            }
        };
        let at_least = |key: &'static str, v: usize, min: usize| {
            if v >= min {
                Ok(())
            } else {
                Err((key, format!("must be at least {min}, got {v}")))
            }
        };
        let g = &self.geometry;
        positive("geometry.diameter_m", g.diameter_m)?;
        positive("geometry.rim_width_m", g.rim_width_m)?;
        positive("geometry.f_over_d", g.f_over_d)?;
        positive("geometry.frequency_hz", g.frequency_hz)?;
        positive("geometry.element_side_wavelengths", g.element_side_wavelengths)?;
        if g.rim_width_m >= g.diameter_m / 2.0 {
            return Err(("geometry.rim_width_m", "must be below the dish radius".into()));
        }
        if g.elements_per_ring == Some(0) {
            return Err(("geometry.elements_per_ring", "must be positive".into()));
        }
        positive(
            "quadrature.samples_per_wavelength",
            self.quadrature.samples_per_wavelength,
        )?;
        positive("quadrature.refinement", self.quadrature.refinement)?;
        positive("quadrature.tolerance_db", self.quadrature.tolerance_db)?;
        for (key, q) in [
            ("feed.q_theoretical", self.feed.q_theoretical),
            ("feed.q_true", self.feed.q_true),
        ] {
            if !(q.is_finite() && q >= 0.0) {
                return Err((key, format!("must be a non-negative number, got {q}")));
            }
        }
        if !(self.feed.i0_re.is_finite() && self.feed.i0_im.is_finite())
            || (self.feed.i0_re == 0.0 && self.feed.i0_im == 0.0)
        {
            return Err(("feed.i0_re", "feed current must be finite and non-zero".into()));
        }
        let t = &self.target;
        if !(t.psi_deg.is_finite() && (0.0..90.0).contains(&t.psi_deg)) {
            return Err(("target.psi_deg", format!("must lie in [0, 90), got {}", t.psi_deg)));
        }
        if !t.phi_deg.is_finite() {
            return Err(("target.phi_deg", "must be finite".into()));
        }
        if !(2..=MAX_LEVELS).contains(&self.sa.m_levels) {
            return Err((
                "sa.m_levels",
                format!("must lie in 2..={MAX_LEVELS}, got {}", self.sa.m_levels),
            ));
        }
        at_least("sa.iterations", self.sa.iterations, 1)?;
        at_least("sa.schedule_len", self.sa.schedule_len, 1)?;
        at_least("sa.scale_samples", self.sa.scale_samples, 2)?;
        at_least("net.width", self.net.width, 1)?;
        at_least("net.epochs", self.net.epochs, 1)?;
        at_least("net.batch_size", self.net.batch_size, 1)?;
        positive("net.learning_rate", self.net.learning_rate)?;
        positive("net.decay", self.net.decay)?;
        if !(self.net.split_fraction > 0.0 && self.net.split_fraction < 1.0) {
            return Err((
                "net.split_fraction",
                format!("must lie in (0, 1), got {}", self.net.split_fraction),
            ));
        }
        at_least("dataset.trajectories", self.dataset.trajectories, 1)?;
        if !(self.dataset.noise_sigma_db.is_finite() && self.dataset.noise_sigma_db >= 0.0) {
            return Err(("dataset.noise_sigma_db", "must be non-negative".into()));
        }
        let p = &self.pattern;
        if !(p.psi_min_deg.is_finite() && p.psi_min_deg >= 0.0) {
            return Err(("pattern.psi_min_deg", "must be non-negative".into()));
        }
        if !(p.psi_max_deg.is_finite() && p.psi_max_deg < 90.0) {
            return Err(("pattern.psi_max_deg", "must lie below 90".into()));
        }
        if p.psi_max_deg < p.psi_min_deg {
            return Err((
                "pattern.psi_max_deg",
                "must not be below psi_min_deg (empty grid)".into(),
            ));
        }
        positive("pattern.psi_step_deg", p.psi_step_deg)?;
        if !p.phi_deg.is_finite() {
            return Err(("pattern.phi_deg", "must be finite".into()));
        }
        if self.output.dir.is_empty() {
            return Err(("output.dir", "must not be empty".into()));
        }
        Ok(())
    }

    pub fn sa_config(&self) -> SaConfig {
        SaConfig {
            iterations: self.sa.iterations,
            schedule_len: self.sa.schedule_len,
            seed: self.sa.seed,
            scale_samples: self.sa.scale_samples,
        }
    }

    /// Chains that generate training data.
    pub fn dataset_sa_config(&self) -> SaConfig {
        self.sa_config().with_seed(self.dataset.seed)
    }

    pub fn net_config(&self) -> NetConfig {
        NetConfig {
            width: self.net.width,
            blocks: self.net.blocks,
            include_gain_feature: self.net.include_gain_feature,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.net.epochs,
            batch_size: self.net.batch_size,
            learning_rate: self.net.learning_rate,
            decay: self.net.decay,
            seed: self.net.seed,
            split_fraction: self.net.split_fraction,
        }
    }

    pub fn noise(&self) -> MeasurementNoise {
        MeasurementNoise {
            sigma_db: self.dataset.noise_sigma_db,
            seed: self.dataset.noise_seed,
        }
    }

    pub fn target_direction(&self) -> Result<FarFieldDirection> {
        FarFieldDirection::from_degrees(self.target.psi_deg, self.target.phi_deg)
    }

    pub fn feeds(&self) -> Result<(FeedModel, FeedModel)> {
        let i0 = Complex64::new(self.feed.i0_re, self.feed.i0_im);
        Ok((
            FeedModel::new(i0, self.feed.q_theoretical)?,
            FeedModel::new(i0, self.feed.q_true)?,
        ))
    }

    /// `ψ` values of the pattern sweep in degrees, endpoints included.
    pub fn psi_grid_deg(&self) -> Vec<f64> {
        let p = &self.pattern;
        let steps = ((p.psi_max_deg - p.psi_min_deg) / p.psi_step_deg + 1e-9).floor() as usize;
        // snapped to 1e-9 deg so CSVs show 1.5 rather than 1.5000000000000002
        (0..=steps)
            .map(|i| ((p.psi_min_deg + i as f64 * p.psi_step_deg) * 1e9).round() / 1e9)
            .collect()
    }

    pub fn geometry(&self) -> Result<ReflectorGeometry> {
        ReflectorGeometry::build(&self.geometry)
    }

    pub fn scenario(&self) -> Result<MismatchScenario> {
        let (theoretical, true_feed) = self.feeds()?;
        MismatchScenario::new(
            Arc::new(self.geometry()?),
            theoretical,
            true_feed,
            self.target_direction()?,
            self.quadrature,
            self.sa.m_levels,
        )
    }

    /// Comment lines identifying the config and every seed.
    pub fn provenance(&self) -> Vec<String> {
        vec![
            format!("ris-nulling {}", env!("CARGO_PKG_VERSION")),
            format!("config_sha256={}", self.hash()),
            format!(
                "seeds: sa={} dataset={} noise={} net={}",
                self.sa.seed, self.dataset.seed, self.dataset.noise_seed, self.net.seed
            ),
        ]
    }
}
