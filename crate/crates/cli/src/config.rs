//! Flat `key=value` run configuration.
//!
//! A single static table lists every key with its type and default. Parsing,
//! validation and the `--help` listing all read from it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fdtn_core::data::ExportFormat;
use fdtn_core::model::TrainSettings;
use fdtn_core::nn::AdamSettings;
use fdtn_core::{FdtnConfig, TransformVariant};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Uint,
    Int,
    Float,
    Bool,
    Text,
    Choice(&'static [&'static str]),
}

impl Kind {
    fn describe(self) -> String {
        match self {
            Kind::Uint => "unsigned integer".into(),
            Kind::Int => "integer".into(),
            Kind::Float => "number".into(),
            Kind::Bool => "true or false".into(),
            Kind::Text => "text".into(),
            Kind::Choice(options) => format!("one of {}", options.join(", ")),
        }
    }

    fn accepts(self, value: &str) -> bool {
        match self {
            Kind::Uint => value.parse::<u64>().is_ok(),
            Kind::Int => value.parse::<i64>().is_ok(),
            Kind::Float => value.parse::<f64>().map(f64::is_finite).unwrap_or(false),
            Kind::Bool => matches!(value, "true" | "false"),
            Kind::Text => true,
            Kind::Choice(options) => options.contains(&value),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub name: &'static str,
    pub kind: Kind,
    pub default: &'static str,
    pub help: &'static str,
}

const fn key(name: &'static str, kind: Kind, default: &'static str, help: &'static str) -> KeySpec {
    KeySpec {
        name,
        kind,
        default,
        help,
    }
}

pub const KEYS: &[KeySpec] = &[
    // dataset
    key(
        "dataset",
        Kind::Choice(&["ball", "digit", "morse"]),
        "ball",
        "synthetic dataset generator",
    ),
    key(
        "dataset_dir",
        Kind::Text,
        "data",
        "directory holding train.fdtn and test.fdtn",
    ),
    key("seed", Kind::Uint, "42", "dataset generator seed"),
    key("train_count", Kind::Uint, "2000", "training sequences"),
    key("test_count", Kind::Uint, "200", "held-out sequences"),
    key("frames", Kind::Uint, "10", "frames per sequence"),
    key(
        "frame_width",
        Kind::Uint,
        "40",
        "frame width in pixels (Morse line length)",
    ),
    key(
        "frame_height",
        Kind::Uint,
        "40",
        "frame height in pixels (1 for Morse)",
    ),
    key("radius_min", Kind::Float, "3", "smallest ball radius"),
    key("radius_max", Kind::Float, "5", "largest ball radius"),
    key(
        "speed_min",
        Kind::Float,
        "0.5",
        "smallest per-axis speed, pixels per frame",
    ),
    key(
        "speed_max",
        Kind::Float,
        "2.5",
        "largest per-axis speed, pixels per frame",
    ),
    key("velocity_min", Kind::Int, "-3", "smallest Morse velocity"),
    key("velocity_max", Kind::Int, "3", "largest Morse velocity"),
    key(
        "noise_sigma",
        Kind::Float,
        "0.1",
        "Morse seed-frame noise level",
    ),
    key(
        "noisy_frames",
        Kind::Uint,
        "2",
        "leading Morse frames that receive noise",
    ),
    key(
        "digit_train_idx",
        Kind::Text,
        "",
        "IDX image file for training glyphs (empty: built-in glyphs)",
    ),
    key(
        "digit_test_idx",
        Kind::Text,
        "",
        "IDX image file for test glyphs (empty: built-in glyphs)",
    ),
    // model
    key(
        "transform_variant",
        Kind::Choice(&["none", "fc", "conv", "morse_denoise"]),
        "fc",
        "transform model between steps",
    ),
    key(
        "refine_enabled",
        Kind::Bool,
        "true",
        "apply the refine gate to each predicted frame",
    ),
    key(
        "seed_count",
        Kind::Uint,
        "2",
        "observed frames encoded into the phase field",
    ),
    key(
        "horizon",
        Kind::Uint,
        "8",
        "frames predicted during training and evaluation",
    ),
    key("eps", Kind::Float, "1e-8", "phase encoding stabiliser"),
    key(
        "fc_hidden",
        Kind::Uint,
        "20",
        "hidden units of the fc transform",
    ),
    key(
        "conv_channels",
        Kind::Uint,
        "4",
        "channels of the conv transform",
    ),
    key(
        "conv_kernel",
        Kind::Uint,
        "5",
        "kernel extent of the conv transform",
    ),
    key(
        "morse_hidden",
        Kind::Uint,
        "64",
        "hidden units of the Morse denoiser",
    ),
    key(
        "refine_channels",
        Kind::Uint,
        "4",
        "channels of the refine stack",
    ),
    key(
        "refine_kernel",
        Kind::Uint,
        "3",
        "kernel extent of the refine stack",
    ),
    key("init_seed", Kind::Uint, "1", "weight initialisation seed"),
    // training
    key("epochs", Kind::Uint, "20", "passes over the training split"),
    key("batch_size", Kind::Uint, "16", "sequences per Adam step"),
    key("lr", Kind::Float, "0.001", "Adam learning rate"),
    key("beta1", Kind::Float, "0.9", "Adam first-moment decay"),
    key("beta2", Kind::Float, "0.999", "Adam second-moment decay"),
    key(
        "adam_eps",
        Kind::Float,
        "1e-8",
        "Adam denominator stabiliser",
    ),
    key("train_seed", Kind::Uint, "7", "shuffle seed"),
    key("checkpoint", Kind::Text, "model.ckpt", "checkpoint path"),
    key("train_log", Kind::Text, "train.log", "per-epoch log path"),
    key(
        "log_timing",
        Kind::Bool,
        "false",
        "record wall-clock seconds in the log (NA otherwise)",
    ),
    // prediction, evaluation, export
    key(
        "split",
        Kind::Choice(&["train", "test"]),
        "test",
        "split used by predict, eval and export",
    ),
    key(
        "sequence",
        Kind::Uint,
        "0",
        "sequence index used by predict and export",
    ),
    key(
        "predict_horizon",
        Kind::Uint,
        "0",
        "frames to predict (0: use horizon)",
    ),
    key(
        "output_dir",
        Kind::Text,
        "out",
        "directory for predict and export frames",
    ),
    key(
        "export_format",
        Kind::Choice(&["pgm", "csv"]),
        "pgm",
        "frame file format",
    ),
];

fn spec(name: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|k| k.name == name)
}

/// Key listing for `--help`, generated from [`KEYS`].
pub fn help_listing() -> String {
    let width = KEYS.iter().map(|k| k.name.len()).max().unwrap_or(0);
    let mut out = String::from("Configuration keys (key=value, one per line, # comments):\n");
    for k in KEYS {
        let default = if k.default.is_empty() {
            "\"\""
        } else {
            k.default
        };
        writeln!(
            out,
            "  {:<width$}  {} [default: {}; {}]",
            k.name,
            k.help,
            default,
            k.kind.describe()
        )
        .expect("writing to a string cannot fail");
    }
    out
}

/// Validated key/value table with every key present.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigTable {
    values: BTreeMap<&'static str, String>,
}

fn parse_pair(line: &str) -> Result<(&str, &str)> {
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| CliError::Syntax(format!("expected key=value, got {line:?}")))?;
    Ok((k.trim(), v.trim()))
}

impl ConfigTable {
    pub fn defaults() -> Self {
        ConfigTable {
            values: KEYS
                .iter()
                .map(|k| (k.name, k.default.to_string()))
                .collect(),
        }
    }

    /// Parse file text, then apply `--set` overrides in order.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table = ConfigTable::defaults();
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = parse_pair(line)?;
            table.set(k, v)?;
        }
        for o in overrides {
            let (k, v) = parse_pair(o)?;
            table.set(k, v)?;
        }
        Ok(table)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Path(format!("cannot read config {}: {e}", path.display())))?;
        ConfigTable::parse(&text, overrides)
    }

    pub fn set(&mut self, name: &str, value: &str) -> Result<()> {
        let spec = spec(name).ok_or_else(|| CliError::UnknownKey(name.to_string()))?;
        if !spec.kind.accepts(value) {
            return Err(CliError::TypeMismatch {
                key: spec.name,
                value: value.to_string(),
                expected: spec.kind.describe(),
            });
        }
        self.values.insert(spec.name, value.to_string());
        Ok(())
    }

    pub fn get(&self, name: &str) -> &str {
        self.values
            .get(name)
            .unwrap_or_else(|| panic!("{name} is not in the key table"))
    }

    fn uint(&self, name: &str) -> usize {
        self.get(name).parse().expect("validated on set")
    }

    fn u64(&self, name: &str) -> u64 {
        self.get(name).parse().expect("validated on set")
    }

    fn int(&self, name: &str) -> i64 {
        self.get(name).parse().expect("validated on set")
    }

    fn float(&self, name: &str) -> f64 {
        self.get(name).parse().expect("validated on set")
    }

    fn flag(&self, name: &str) -> bool {
        self.get(name) == "true"
    }

    /// Non-empty path value; an empty value is a missing required key.
    pub fn path(&self, name: &'static str) -> Result<PathBuf> {
        match self.get(name) {
            "" => Err(CliError::MissingKey(name)),
            p => Ok(PathBuf::from(p)),
        }
    }

    fn optional_path(&self, name: &str) -> Option<PathBuf> {
        Some(self.get(name))
            .filter(|p| !p.is_empty())
            .map(PathBuf::from)
    }

    /// Canonical `key=value` rendering of every key, in table order.
    pub fn to_text(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{}={}\n", k.name, self.get(k.name)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Ball,
    Digit,
    Morse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSettings {
    pub kind: DatasetKind,
    pub dir: PathBuf,
    pub seed: u64,
    pub train_count: usize,
    pub test_count: usize,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub radius: (f64, f64),
    pub speed: (f64, f64),
    pub velocity: (i64, i64),
    pub noise_sigma: f64,
    pub noisy_frames: usize,
    pub digit_train_idx: Option<PathBuf>,
    pub digit_test_idx: Option<PathBuf>,
}

impl DataSettings {
    pub fn train_path(&self) -> PathBuf {
        self.dir.join("train.fdtn")
    }

    pub fn test_path(&self) -> PathBuf {
        self.dir.join("test.fdtn")
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub table: ConfigTable,
    pub data: DataSettings,
    pub model: FdtnConfig,
    pub train: TrainSettings,
    pub checkpoint: PathBuf,
    pub train_log: PathBuf,
    pub log_timing: bool,
    pub split: fdtn_core::data::Split,
    pub sequence: usize,
    pub predict_horizon: usize,
    pub output_dir: PathBuf,
    pub export_format: ExportFormat,
}

impl RunConfig {
    pub fn from_table(table: ConfigTable) -> Result<Self> {
        let kind = match table.get("dataset") {
            "ball" => DatasetKind::Ball,
            "digit" => DatasetKind::Digit,
            _ => DatasetKind::Morse,
        };
        let data = DataSettings {
            kind,
            dir: table.path("dataset_dir")?,
            seed: table.u64("seed"),
            train_count: table.uint("train_count"),
            test_count: table.uint("test_count"),
            frames: table.uint("frames"),
            width: table.uint("frame_width"),
            height: table.uint("frame_height"),
            radius: (table.float("radius_min"), table.float("radius_max")),
            speed: (table.float("speed_min"), table.float("speed_max")),
            velocity: (table.int("velocity_min"), table.int("velocity_max")),
            noise_sigma: table.float("noise_sigma"),
            noisy_frames: table.uint("noisy_frames"),
            digit_train_idx: table.optional_path("digit_train_idx"),
            digit_test_idx: table.optional_path("digit_test_idx"),
        };
        let model = FdtnConfig {
            transform_variant: table
                .get("transform_variant")
                .parse::<TransformVariant>()
                .map_err(|e| CliError::invalid("transform_variant", e))?,
            refine_enabled: table.flag("refine_enabled"),
            seed_count: table.uint("seed_count"),
            horizon: table.uint("horizon"),
            frame_width: data.width,
            frame_height: data.height,
            eps: table.float("eps"),
            fc_hidden: table.uint("fc_hidden"),
            conv_channels: table.uint("conv_channels"),
            conv_kernel: table.uint("conv_kernel"),
            morse_hidden: table.uint("morse_hidden"),
            refine_channels: table.uint("refine_channels"),
            refine_kernel: table.uint("refine_kernel"),
            init_seed: table.u64("init_seed"),
        };
        model
            .validate()
            .map_err(|e| CliError::Invalid(e.to_string()))?;
        let train = TrainSettings {
            adam: AdamSettings {
                lr: table.float("lr"),
                beta1: table.float("beta1"),
                beta2: table.float("beta2"),
                eps: table.float("adam_eps"),
            },
            epochs: table.uint("epochs"),
            batch_size: table.uint("batch_size"),
            seed: table.u64("train_seed"),
            threads: 1,
        };
        if train.batch_size == 0 {
            return Err(CliError::invalid("batch_size", "must be at least 1"));
        }
        Ok(RunConfig {
            data,
            model,
            train,
            checkpoint: table.path("checkpoint")?,
            train_log: table.path("train_log")?,
            log_timing: table.flag("log_timing"),
            split: table
                .get("split")
                .parse()
                .map_err(|e| CliError::invalid("split", e))?,
            sequence: table.uint("sequence"),
            predict_horizon: table.uint("predict_horizon"),
            output_dir: table.path("output_dir")?,
            export_format: table
                .get("export_format")
                .parse()
                .map_err(|e| CliError::invalid("export_format", e))?,
            table,
        })
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        RunConfig::from_table(ConfigTable::load(path, overrides)?)
    }
}
