use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::encoder::{BackendDescriptor, BackendKind};
use crate::error::{Error, Result};
use crate::head::{DEFAULT_REVIEW_BAND, DEFAULT_THRESHOLD};

pub const ENV_PREFIX: &str = "VSG_";
pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_AUDIT_LOG: &str = "voiceguard-audit.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub backend: BackendDescriptor,
    pub head_path: Option<PathBuf>,
    pub threshold: f64,
    pub review_band: (f64, f64),
    pub audit_log_path: PathBuf,
    pub service_port: u16,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            backend: BackendDescriptor::stub(0),
            head_path: None,
            threshold: DEFAULT_THRESHOLD,
            review_band: DEFAULT_REVIEW_BAND,
            audit_log_path: PathBuf::from(DEFAULT_AUDIT_LOG),
            service_port: DEFAULT_PORT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    Stub,
    External,
}

impl FromStr for BackendChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stub" => Ok(Self::Stub),
            "external" => Ok(Self::External),
            other => Err(Error::Config(format!("unknown backend {other:?} (expected stub or external)"))),
        }
    }
}

/// One configuration layer. The same flat keys are accepted in the config
/// file, as `VSG_<KEY>` environment variables and as CLI flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub backend: Option<BackendChoice>,
    pub model: Option<PathBuf>,
    pub transcription: Option<bool>,
    pub seed: Option<u64>,
    pub head: Option<PathBuf>,
    pub threshold: Option<f64>,
    pub review_low: Option<f64>,
    pub review_high: Option<f64>,
    pub audit_log: Option<PathBuf>,
    pub port: Option<u16>,
}

const KEYS: [&str; 10] = [
    "backend",
    "model",
    "transcription",
    "seed",
    "head",
    "threshold",
    "review_low",
    "review_high",
    "audit_log",
    "port",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {key} = {value:?}")))
}

impl ConfigOverrides {
    /// Flat `key = value` file (TOML syntax, no tables).
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))
    }

    /// Picks `VSG_*` variables out of an environment listing; other names are
    /// ignored, unknown `VSG_` keys are an error.
    pub fn from_env<I, K, V>(vars: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut o = Self::default();
        for (k, v) in vars {
            if let Some(key) = k.as_ref().strip_prefix(ENV_PREFIX) {
                o.set(&key.to_ascii_lowercase(), v.as_ref())?;
            }
        }
        Ok(o)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "backend" => self.backend = Some(value.trim().parse()?),
            "model" => self.model = Some(value.into()),
            "transcription" => self.transcription = Some(parse(key, value)?),
            "seed" => self.seed = Some(parse(key, value)?),
            "head" => self.head = Some(value.into()),
            "threshold" => self.threshold = Some(parse(key, value)?),
            "review_low" => self.review_low = Some(parse(key, value)?),
            "review_high" => self.review_high = Some(parse(key, value)?),
            "audit_log" => self.audit_log = Some(value.into()),
            "port" => self.port = Some(parse(key, value)?),
            other => {
                return Err(Error::Config(format!("unknown key {other:?}; known keys: {}", KEYS.join(", "))));
            }
        }
        Ok(())
    }
}

impl EngineConfig {
    /// Layer order, lowest first: defaults, config file, `VSG_` environment,
    /// command-line flags.
    pub fn resolve(file: Option<&Path>, env: &ConfigOverrides, cli: &ConfigOverrides) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = file {
            cfg.apply(&ConfigOverrides::from_file(path)?);
        }
        cfg.apply(env);
        cfg.apply(cli);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &ConfigOverrides) {
        if let Some(b) = o.backend {
            self.backend.kind = match b {
                BackendChoice::Stub => BackendKind::Stub,
                BackendChoice::External => BackendKind::ExternalModel,
            };
        }
        if let Some(m) = &o.model {
            self.backend.model_path = Some(m.clone());
        }
        if let Some(t) = o.transcription {
            self.backend.supports_transcription = t;
        }
        if let Some(s) = o.seed {
            self.backend.seed = Some(s);
        }
        if let Some(h) = &o.head {
            self.head_path = Some(h.clone());
        }
        if let Some(t) = o.threshold {
            self.threshold = t;
        }
        if let Some(lo) = o.review_low {
            self.review_band.0 = lo;
        }
        if let Some(hi) = o.review_high {
            self.review_band.1 = hi;
        }
        if let Some(a) = &o.audit_log {
            self.audit_log_path = a.clone();
        }
        if let Some(p) = o.port {
            self.service_port = p;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!("threshold {} outside (0, 1)", self.threshold)));
        }
        let (lo, hi) = self.review_band;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo >= hi {
            return Err(Error::Config(format!("review band ({lo}, {hi}) must satisfy 0 <= low < high <= 1")));
        }
        self.backend.validate()
    }
}
