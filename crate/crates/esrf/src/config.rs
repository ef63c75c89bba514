//! Run configuration: flat `key=value` text (diff-friendly) with CLI flag
//! overrides. Unknown keys are rejected; parsing and serialization round-trip
//! exactly.

use std::fmt::Write as _;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
#[error("config error: key '{key}': {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

fn err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    Sea,
    SeaA,
    SeaG,
    Agrawal,
    AgrA,
    AgrG,
    Led,
    LedA,
    LedG,
    Rtg,
    Rbf,
    RbfM,
    RbfF,
    Hyperplane,
    File,
}

impl StreamKind {
    pub fn parse(token: &str) -> Result<Self, ConfigError> {
        Ok(match token {
            "sea" => StreamKind::Sea,
            "sea_a" => StreamKind::SeaA,
            "sea_g" => StreamKind::SeaG,
            "agrawal" | "agr" => StreamKind::Agrawal,
            "agr_a" => StreamKind::AgrA,
            "agr_g" => StreamKind::AgrG,
            "led" => StreamKind::Led,
            "led_a" => StreamKind::LedA,
            "led_g" => StreamKind::LedG,
            "rtg" => StreamKind::Rtg,
            "rbf" => StreamKind::Rbf,
            "rbf_m" => StreamKind::RbfM,
            "rbf_f" => StreamKind::RbfF,
            "hyperplane" | "hyper" => StreamKind::Hyperplane,
            "file" => StreamKind::File,
            other => {
                return Err(err(
                    "stream",
                    format!(
                        "unknown stream '{other}' (expected sea[_a|_g], agrawal, agr_a, agr_g, \
                         led[_a|_g], rtg, rbf[_m|_f], hyperplane or file)"
                    ),
                ))
            }
        })
    }

    pub fn token(&self) -> &'static str {
        match self {
            StreamKind::Sea => "sea",
            StreamKind::SeaA => "sea_a",
            StreamKind::SeaG => "sea_g",
            StreamKind::Agrawal => "agrawal",
            StreamKind::AgrA => "agr_a",
            StreamKind::AgrG => "agr_g",
            StreamKind::Led => "led",
            StreamKind::LedA => "led_a",
            StreamKind::LedG => "led_g",
            StreamKind::Rtg => "rtg",
            StreamKind::Rbf => "rbf",
            StreamKind::RbfM => "rbf_m",
            StreamKind::RbfF => "rbf_f",
            StreamKind::Hyperplane => "hyperplane",
            StreamKind::File => "file",
        }
    }

    /// Canonical dataset label used in result rows.
    pub fn default_label(&self) -> &'static str {
        match self {
            StreamKind::Sea => "SEA",
            StreamKind::SeaA => "SEA_a",
            StreamKind::SeaG => "SEA_g",
            StreamKind::Agrawal => "AGR",
            StreamKind::AgrA => "AGR_a",
            StreamKind::AgrG => "AGR_g",
            StreamKind::Led => "LED",
            StreamKind::LedA => "LED_a",
            StreamKind::LedG => "LED_g",
            StreamKind::Rtg => "RTG",
            StreamKind::Rbf => "RBF",
            StreamKind::RbfM => "RBF_m",
            StreamKind::RbfF => "RBF_f",
            StreamKind::Hyperplane => "HYPER",
            StreamKind::File => "FILE",
        }
    }

    pub fn has_drift_composition(&self) -> bool {
        matches!(
            self,
            StreamKind::SeaA
                | StreamKind::SeaG
                | StreamKind::AgrA
                | StreamKind::AgrG
                | StreamKind::LedA
                | StreamKind::LedG
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerKind {
    Arf,
    Srf,
    Esrf,
}

impl LearnerKind {
    pub fn parse(token: &str) -> Result<Self, ConfigError> {
        Ok(match token {
            "arf" => LearnerKind::Arf,
            "srf" => LearnerKind::Srf,
            "esrf" => LearnerKind::Esrf,
            other => {
                return Err(err(
                    "learner",
                    format!("unknown learner '{other}' (expected arf, srf or esrf)"),
                ))
            }
        })
    }

    pub fn token(&self) -> &'static str {
        match self {
            LearnerKind::Arf => "arf",
            LearnerKind::Srf => "srf",
            LearnerKind::Esrf => "esrf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Arff,
    Csv,
}

impl FileFormat {
    pub fn parse(token: &str) -> Result<Self, ConfigError> {
        Ok(match token {
            "arff" => FileFormat::Arff,
            "csv" => FileFormat::Csv,
            other => {
                return Err(err(
                    "format",
                    format!("unknown format '{other}' (expected arff or csv)"),
                ))
            }
        })
    }

    pub fn token(&self) -> &'static str {
        match self {
            FileFormat::Arff => "arff",
            FileFormat::Csv => "csv",
        }
    }
}

/// Full description of one experiment. Optional generator parameters fall
/// back to per-generator defaults when absent.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: Option<String>,
    pub stream: StreamKind,
    /// Concept id of the base generator (SEA 1-4, Agrawal 1-10, LED number
    /// of shifted segment positions).
    pub function: Option<u32>,
    /// Concept id of the drift target for the `_a`/`_g` compositions.
    pub target_function: Option<u32>,
    pub noise: Option<f64>,
    pub perturbation: Option<f64>,
    pub centroids: Option<usize>,
    pub speed: Option<f64>,
    pub mag_change: Option<f64>,
    pub drift_attrs: Option<usize>,
    pub drift_position: Option<u64>,
    pub drift_width: Option<u64>,
    pub data: Option<PathBuf>,
    pub format: FileFormat,
    pub class_index: Option<usize>,
    pub has_header: bool,
    pub learner: LearnerKind,
    pub n_trees: usize,
    pub fs: usize,
    pub cs: usize,
    pub r: usize,
    pub tg: f64,
    pub ts: f64,
    pub window: f64,
    pub min_fs: usize,
    pub max_total: usize,
    pub folds: usize,
    /// Instances to evaluate; 0 means until the stream ends (files only).
    pub instances: u64,
    pub report_interval: u64,
    pub seed: u64,
    pub jobs: usize,
    pub out: PathBuf,
    pub timeline_out: Option<PathBuf>,
    pub baseline: Option<PathBuf>,
    pub baseline_learner: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: None,
            stream: StreamKind::Sea,
            function: None,
            target_function: None,
            noise: None,
            perturbation: None,
            centroids: None,
            speed: None,
            mag_change: None,
            drift_attrs: None,
            drift_position: None,
            drift_width: None,
            data: None,
            format: FileFormat::Arff,
            class_index: None,
            has_header: false,
            learner: LearnerKind::Esrf,
            n_trees: 100,
            fs: 10,
            cs: 10,
            r: 1,
            tg: 0.01,
            ts: 0.001,
            window: 2000.0,
            min_fs: 10,
            max_total: 100,
            folds: 1,
            instances: 1_000_000,
            report_interval: 10_000,
            seed: 42,
            jobs: 0,
            out: PathBuf::from("results.csv"),
            timeline_out: None,
            baseline: None,
            baseline_learner: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> Result<T, ConfigError> {
    value
        .parse::<T>()
        .map_err(|_| err(key, format!("expected {what}, got '{value}'")))
}

impl RunConfig {
    /// Applies one `key=value` pair. Unknown keys are rejected.
    pub fn apply_pair(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let optional = |v: &str| -> Option<String> {
            if v.is_empty() {
                None
            } else {
                Some(v.to_string())
            }
        };
        match key {
            "dataset" => self.dataset = optional(value),
            "stream" => self.stream = StreamKind::parse(value)?,
            "function" => self.function = Some(parse_num(key, value, "an integer")?),
            "target_function" => self.target_function = Some(parse_num(key, value, "an integer")?),
            "noise" => self.noise = Some(parse_num(key, value, "a fraction")?),
            "perturbation" => self.perturbation = Some(parse_num(key, value, "a fraction")?),
            "centroids" => self.centroids = Some(parse_num(key, value, "an integer")?),
            "speed" => self.speed = Some(parse_num(key, value, "a number")?),
            "mag_change" => self.mag_change = Some(parse_num(key, value, "a number")?),
            "drift_attrs" => self.drift_attrs = Some(parse_num(key, value, "an integer")?),
            "drift_position" => self.drift_position = Some(parse_num(key, value, "an integer")?),
            "drift_width" => self.drift_width = Some(parse_num(key, value, "an integer")?),
            "data" => self.data = optional(value).map(PathBuf::from),
            "format" => self.format = FileFormat::parse(value)?,
            "class_index" => self.class_index = Some(parse_num(key, value, "an integer")?),
            "has_header" => self.has_header = parse_num(key, value, "true or false")?,
            "learner" => self.learner = LearnerKind::parse(value)?,
            "n_trees" => self.n_trees = parse_num(key, value, "an integer")?,
            "fs" => self.fs = parse_num(key, value, "an integer")?,
            "cs" => self.cs = parse_num(key, value, "an integer")?,
            "r" => self.r = parse_num(key, value, "an integer")?,
            "tg" => self.tg = parse_num(key, value, "a number")?,
            "ts" => self.ts = parse_num(key, value, "a number")?,
            "window" => self.window = parse_num(key, value, "a number")?,
            "min_fs" => self.min_fs = parse_num(key, value, "an integer")?,
            "max_total" => self.max_total = parse_num(key, value, "an integer")?,
            "folds" => self.folds = parse_num(key, value, "an integer")?,
            "instances" => self.instances = parse_num(key, value, "an integer")?,
            "report_interval" => self.report_interval = parse_num(key, value, "an integer")?,
            "seed" => self.seed = parse_num(key, value, "an integer")?,
            "jobs" => self.jobs = parse_num(key, value, "an integer")?,
            "out" => self.out = PathBuf::from(value),
            "timeline_out" => self.timeline_out = optional(value).map(PathBuf::from),
            "baseline" => self.baseline = optional(value).map(PathBuf::from),
            "baseline_learner" => self.baseline_learner = optional(value),
            other => return Err(err(other, "unknown key")),
        }
        Ok(())
    }

    /// Parses flat `key=value` text ('#' comments, blank lines ignored) on
    /// top of the defaults, then validates.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = RunConfig::default();
        config.apply_text(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Applies `key=value` lines without validating (callers layer flags on
    /// top before validation).
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for raw in text.lines() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                err(line, "expected key=value")
            })?;
            self.apply_pair(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Serializes to the flat text form; `parse` reconstructs an equal
    /// config.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        if let Some(dataset) = &self.dataset {
            kv("dataset", dataset.clone());
        }
        kv("stream", self.stream.token().into());
        if let Some(v) = self.function {
            kv("function", v.to_string());
        }
        if let Some(v) = self.target_function {
            kv("target_function", v.to_string());
        }
        if let Some(v) = self.noise {
            kv("noise", v.to_string());
        }
        if let Some(v) = self.perturbation {
            kv("perturbation", v.to_string());
        }
        if let Some(v) = self.centroids {
            kv("centroids", v.to_string());
        }
        if let Some(v) = self.speed {
            kv("speed", v.to_string());
        }
        if let Some(v) = self.mag_change {
            kv("mag_change", v.to_string());
        }
        if let Some(v) = self.drift_attrs {
            kv("drift_attrs", v.to_string());
        }
        if let Some(v) = self.drift_position {
            kv("drift_position", v.to_string());
        }
        if let Some(v) = self.drift_width {
            kv("drift_width", v.to_string());
        }
        if let Some(v) = &self.data {
            kv("data", v.display().to_string());
        }
        kv("format", self.format.token().into());
        if let Some(v) = self.class_index {
            kv("class_index", v.to_string());
        }
        kv("has_header", self.has_header.to_string());
        kv("learner", self.learner.token().into());
        kv("n_trees", self.n_trees.to_string());
        kv("fs", self.fs.to_string());
        kv("cs", self.cs.to_string());
        kv("r", self.r.to_string());
        kv("tg", self.tg.to_string());
        kv("ts", self.ts.to_string());
        kv("window", self.window.to_string());
        kv("min_fs", self.min_fs.to_string());
        kv("max_total", self.max_total.to_string());
        kv("folds", self.folds.to_string());
        kv("instances", self.instances.to_string());
        kv("report_interval", self.report_interval.to_string());
        kv("seed", self.seed.to_string());
        kv("jobs", self.jobs.to_string());
        kv("out", self.out.display().to_string());
        if let Some(v) = &self.timeline_out {
            kv("timeline_out", v.display().to_string());
        }
        if let Some(v) = &self.baseline {
            kv("baseline", v.display().to_string());
        }
        if let Some(v) = &self.baseline_learner {
            kv("baseline_learner", v.clone());
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.stream == StreamKind::File {
            if self.data.is_none() {
                return Err(err("data", "stream=file requires a data path"));
            }
        } else if self.data.is_some() {
            return Err(err("data", "data path only applies to stream=file"));
        }
        if let Some(f) = self.function {
            let range: std::ops::RangeInclusive<u32> = match self.stream {
                StreamKind::Sea | StreamKind::SeaA | StreamKind::SeaG => 1..=4,
                StreamKind::Agrawal | StreamKind::AgrA | StreamKind::AgrG => 1..=10,
                StreamKind::Led | StreamKind::LedA | StreamKind::LedG => 0..=23,
                _ => 0..=u32::MAX,
            };
            if !range.contains(&f) {
                return Err(err(
                    "function",
                    format!("{f} outside {:?} for this generator", range),
                ));
            }
        }
        if let Some(n) = self.noise {
            if !(0.0..=1.0).contains(&n) {
                return Err(err("noise", format!("must be in [0,1], got {n}")));
            }
        }
        if let Some(p) = self.perturbation {
            if !(0.0..=1.0).contains(&p) {
                return Err(err("perturbation", format!("must be in [0,1], got {p}")));
            }
        }
        if self.centroids == Some(0) {
            return Err(err("centroids", "must be at least 1"));
        }
        if self.drift_width == Some(0) {
            return Err(err("drift_width", "must be at least 1"));
        }
        if !(self.tg >= 0.0) {
            return Err(err("tg", format!("threshold must be >= 0, got {}", self.tg)));
        }
        if !(self.ts >= 0.0) {
            return Err(err("ts", format!("threshold must be >= 0, got {}", self.ts)));
        }
        if self.window < 1.0 {
            return Err(err("window", "EWMA window must be at least 1"));
        }
        if self.n_trees < 1 {
            return Err(err("n_trees", "must be at least 1"));
        }
        if self.fs < 1 {
            return Err(err("fs", "must be at least 1"));
        }
        if self.r < 1 {
            return Err(err("r", "must be at least 1"));
        }
        if self.min_fs < 1 {
            return Err(err("min_fs", "must be at least 1"));
        }
        if self.min_fs > self.fs {
            return Err(err(
                "min_fs",
                format!("must not exceed fs ({} > {})", self.min_fs, self.fs),
            ));
        }
        if self.learner == LearnerKind::Esrf && self.fs + self.cs + self.r > self.max_total {
            return Err(err(
                "max_total",
                format!(
                    "fs+cs+r = {} exceeds max_total {}",
                    self.fs + self.cs + self.r,
                    self.max_total
                ),
            ));
        }
        if self.folds < 1 {
            return Err(err("folds", "must be at least 1 (1 = plain prequential)"));
        }
        if self.report_interval < 1 {
            return Err(err("report_interval", "must be at least 1"));
        }
        if self.instances == 0 && self.stream != StreamKind::File {
            return Err(err(
                "instances",
                "synthetic streams are endless; instances must be positive",
            ));
        }
        Ok(())
    }

    /// Dataset label for result rows.
    pub fn dataset_label(&self) -> String {
        if let Some(label) = &self.dataset {
            return label.clone();
        }
        if self.stream == StreamKind::File {
            if let Some(path) = &self.data {
                if let Some(stem) = path.file_stem() {
                    return stem.to_string_lossy().into_owned();
                }
            }
        }
        self.stream.default_label().to_string()
    }

    /// Compact learner-parameter summary for the results CSV.
    pub fn config_summary(&self) -> String {
        match self.learner {
            LearnerKind::Arf => format!("n_trees={}", self.n_trees),
            LearnerKind::Srf => format!("fs={};cs={}", self.fs, self.cs),
            LearnerKind::Esrf => format!(
                "fs={};cs={};r={};tg={};ts={};w={};min_fs={};max_total={}",
                self.fs,
                self.cs,
                self.r,
                self.tg,
                self.ts,
                self.window,
                self.min_fs,
                self.max_total
            ),
        }
    }
}
