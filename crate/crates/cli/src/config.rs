use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tvcpd_core::benchgen::Scheme;
use tvcpd_core::confusion::TrainConfig;
use tvcpd_core::lda::LdaConfig;
use tvcpd_core::Method;

pub const CONFIG_VERSION: u32 = 1;

/// Invalid configuration; reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub config_version: u32,
    pub out_dir: PathBuf,
    pub seeds: Seeds,
    pub data: DataConfig,
    pub detect: DetectConfig,
    pub train: TrainSection,
    pub lda: LdaSection,
    pub benchgen: BenchgenConfig,
    pub fetch: FetchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            config_version: CONFIG_VERSION,
            out_dir: PathBuf::from("out"),
            seeds: Seeds::default(),
            data: DataConfig::default(),
            detect: DetectConfig::default(),
            train: TrainSection::default(),
            lda: LdaSection::default(),
            benchgen: BenchgenConfig::default(),
            fetch: FetchConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Seeds {
    pub data: u64,
    pub split: u64,
    pub train: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub corpus: Option<PathBuf>,
    pub interval: Option<[NaiveDate; 2]>,
    pub min_words: usize,
    pub categories: Vec<String>,
    /// `date,label` CSV; without it a benchmark manifest next to the corpus is used.
    pub events: Option<PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            interval: None,
            min_words: 1000,
            categories: Vec::new(),
            events: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Tfidf,
    Embeddings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectConfig {
    pub method: Method,
    pub window_l: usize,
    pub features: FeatureKind,
    pub min_df: usize,
    pub max_df: f64,
    pub embeddings: Option<PathBuf>,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            method: Method::Confusion,
            window_l: 8,
            features: FeatureKind::Tfidf,
            min_df: 2,
            max_df: 0.9,
            embeddings: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub lr: f64,
    pub batch_size: usize,
    pub min_epochs: usize,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            lr: t.lr,
            batch_size: t.batch_size,
            min_epochs: t.min_epochs,
            max_epochs: t.max_epochs,
            patience: t.patience,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LdaSection {
    pub topics: usize,
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
}

impl Default for LdaSection {
    fn default() -> Self {
        let l = LdaConfig::default();
        Self {
            topics: l.topics,
            alpha: l.alpha,
            beta: l.beta,
            iterations: l.iterations,
            burn_in: l.burn_in,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchgenConfig {
    pub scheme: Scheme,
    /// Defaults to a 30-day interval (topic switch) or the year 2015 (splice).
    pub interval: Option<[NaiveDate; 2]>,
    /// Drawn from the data seed when absent.
    pub change_date: Option<NaiveDate>,
    pub per_day: usize,
    pub jitter: usize,
    /// Calendar days generated beyond each interval end; defaults to L.
    pub margin_days: Option<usize>,
    pub topic_vocab: usize,
    pub background_vocab: usize,
    pub doc_length: f64,
    pub background_mix: f64,
    /// Null benchmark: both regimes use the same topic.
    pub same_topic: bool,
}

impl Default for BenchgenConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::TopicSwitch,
            interval: None,
            change_date: None,
            per_day: 10,
            jitter: 0,
            margin_days: None,
            topic_vocab: 60,
            background_vocab: 100,
            doc_length: 40.0,
            background_mix: 0.5,
            same_topic: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FetchConfig {
    pub section: Option<String>,
    pub out: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub page_size: u32,
}

impl Default for FetchConfig {
    fn default() -> Self {
        Self {
            section: None,
            out: None,
            cache_dir: None,
            page_size: 50,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string().trim_end().to_string()))?;
        if cfg.config_version != CONFIG_VERSION {
            return Err(ConfigError(format!(
                "config_version: unsupported version {} (expected {CONFIG_VERSION})",
                cfg.config_version
            )));
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field: &str, msg: &str| Err(ConfigError(format!("{field}: {msg}")));
        if self.detect.window_l == 0 {
            return bad("detect.window_l", "invalid L = 0; the window length L must be at least 1");
        }
        if let Some([a, b]) = self.data.interval {
            if a > b {
                return bad("data.interval", "start is after end");
            }
        }
        if !(self.train.lr > 0.0) {
            return bad("train.lr", "must be positive");
        }
        if self.train.batch_size == 0 {
            return bad("train.batch_size", "must be positive");
        }
        if self.train.max_epochs == 0 || self.train.min_epochs > self.train.max_epochs {
            return bad("train.max_epochs", "must be positive and at least train.min_epochs");
        }
        if self.detect.min_df == 0 {
            return bad("detect.min_df", "must be at least 1");
        }
        if !(self.detect.max_df > 0.0 && self.detect.max_df <= 1.0) {
            return bad("detect.max_df", "must lie in (0, 1]");
        }
        if self.lda.topics == 0 {
            return bad("lda.topics", "must be at least 1");
        }
        if self.benchgen.per_day == 0 {
            return bad("benchgen.per_day", "must be positive");
        }
        if !(0.0..1.0).contains(&self.benchgen.background_mix) {
            return bad("benchgen.background_mix", "must lie in [0, 1)");
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.train.lr,
            batch_size: self.train.batch_size,
            min_epochs: self.train.min_epochs,
            max_epochs: self.train.max_epochs,
            patience: self.train.patience,
            seed: self.seeds.train,
        }
    }

    pub fn lda_config(&self) -> LdaConfig {
        LdaConfig {
            topics: self.lda.topics,
            alpha: self.lda.alpha,
            beta: self.lda.beta,
            iterations: self.lda.iterations,
            burn_in: self.lda.burn_in,
            seed: self.seeds.train,
        }
    }

    /// SHA-256 of the resolved configuration, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out_dir = PathBuf::new();
        let json = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn parse_interval(s: &str) -> Result<[NaiveDate; 2], String> {
    let (a, b) = s
        .split_once(':')
        .or_else(|| s.split_once(','))
        .ok_or_else(|| format!("expected START:END, got `{s}`"))?;
    let parse = |t: &str| NaiveDate::parse_from_str(t.trim(), "%Y-%m-%d").map_err(|e| format!("`{t}`: {e}"));
    Ok([parse(a)?, parse(b)?])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_hyperparameters() {
        let c = RunConfig::default();
        assert_eq!(c.train.lr, 8e-5);
        assert_eq!(c.train.batch_size, 64);
        assert_eq!((c.train.min_epochs, c.train.max_epochs), (1000, 5000));
        assert_eq!((c.lda.topics, c.lda.iterations), (20, 83));
        assert!(c.validate().is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let err = RunConfig::parse("config_version = 1\n[detect]\nwindow = 3\n").unwrap_err();
        assert!(err.0.contains("window"), "{}", err.0);
    }

    #[test]
    fn version_is_checked() {
        assert!(RunConfig::parse("config_version = 7\n").is_err());
    }

    #[test]
    fn zero_window_names_l() {
        let mut c = RunConfig::default();
        c.detect.window_l = 0;
        assert!(c.validate().unwrap_err().0.contains("L"));
    }

    #[test]
    fn hash_ignores_out_dir_only() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.out_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seeds.split = 4;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn interval_forms() {
        let [a, b] = parse_interval("2015-01-01:2015-12-31").unwrap();
        assert_eq!((a.to_string(), b.to_string()), ("2015-01-01".into(), "2015-12-31".into()));
        assert!(parse_interval("2015-01-01,2015-02-01").is_ok());
        assert!(parse_interval("2015-01-01").is_err());
    }
}
