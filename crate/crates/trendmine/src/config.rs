//! Run configuration: TOML file, command-line overrides and defaults.
//!
//! Precedence is command line, then config file, then `TRENDMINE_SEED` (seed
//! only), then built-in defaults. Relative paths in a config file resolve
//! against the file's directory.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use trendmine_core::kdtree::DistanceMetric;
use trendmine_core::sentiment::PriorMode;
use trendmine_core::text::{CandidatePair, CandidateSpec};
use trendmine_core::TimeWindow;

use crate::error::{Error, Result};

pub const SEED_ENV: &str = "TRENDMINE_SEED";
pub const DEFAULT_SEED: u64 = 2012;
pub const DEFAULT_SAMPLE_SIZE: usize = 10_000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputFiles {
    pub tweets: Option<PathBuf>,
    pub polls: Option<PathBuf>,
    pub labeled: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub states: Option<PathBuf>,
    pub stop_words: Option<PathBuf>,
    pub negation_cues: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    pub first_day: Option<NaiveDate>,
    pub last_day: Option<NaiveDate>,
    pub day_offset_minutes: i32,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            first_day: None,
            last_day: None,
            day_offset_minutes: trendmine_core::bucket::DEFAULT_DAY_OFFSET_MINUTES,
        }
    }
}

impl WindowConfig {
    pub fn window(&self) -> Result<TimeWindow> {
        let offset = self.day_offset_minutes;
        match (self.first_day, self.last_day) {
            (None, None) => Ok(TimeWindow::unbounded(offset)),
            (first, last) => TimeWindow::from_local_dates(
                first.unwrap_or(NaiveDate::from_ymd_opt(1970, 1, 2).expect("valid")),
                last.unwrap_or(NaiveDate::from_ymd_opt(9999, 12, 30).expect("valid")),
                offset,
            )
            .map_err(Error::invalid),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaSettings {
    pub k: usize,
    /// `None` means 50/k.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub top_n: usize,
    pub min_count: usize,
}

impl Default for LdaSettings {
    fn default() -> Self {
        Self {
            k: 5,
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            top_n: 15,
            min_count: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrendSettings {
    pub top_n: usize,
    pub peak_prominence: f64,
}

impl Default for TrendSettings {
    fn default() -> Self {
        Self {
            top_n: 10,
            peak_prominence: trendmine_core::trends::DEFAULT_PEAK_PROMINENCE,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeoSettings {
    pub metric: DistanceMetric,
    pub max_anchor_distance: Option<f64>,
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub sample_size: usize,
    pub format: OutputFormat,
    pub prior: PriorMode,
    pub input: InputFiles,
    pub window: WindowConfig,
    pub candidates: Vec<CandidateSpec>,
    pub lda: LdaSettings,
    pub trends: TrendSettings,
    pub geo: GeoSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            sample_size: DEFAULT_SAMPLE_SIZE,
            format: OutputFormat::Csv,
            prior: PriorMode::Empirical,
            input: InputFiles::default(),
            window: WindowConfig::default(),
            candidates: CandidatePair::election_2012().as_slice().to_vec(),
            lda: LdaSettings::default(),
            trends: TrendSettings::default(),
            geo: GeoSettings::default(),
        }
    }
}

/// Command-line values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub sample_size: Option<usize>,
    pub format: Option<OutputFormat>,
    pub tweets: Option<PathBuf>,
    pub polls: Option<PathBuf>,
    pub labeled: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub states: Option<PathBuf>,
    pub k: Option<usize>,
    pub iterations: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))
    }

    /// Reads `path` (if any) and applies overrides and the seed variable.
    /// Whether the seed came from the file matters for precedence, so the
    /// file is parsed once as a loose table to find out.
    pub fn resolve(path: Option<&Path>, env_seed: Option<&str>, cli: &Overrides) -> Result<Self> {
        let (mut cfg, file_has_seed) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                let mut cfg = Self::from_toml(&text)?;
                let table: toml::Table = text.parse().map_err(|e| Error::invalid(format!("config: {e}")))?;
                cfg.input.rebase(p.parent().unwrap_or(Path::new("")));
                (cfg, table.contains_key("seed"))
            }
            None => (Self::default(), false),
        };
        if !file_has_seed {
            if let Some(s) = env_seed.filter(|s| !s.trim().is_empty()) {
                cfg.seed = s
                    .trim()
                    .parse()
                    .map_err(|_| Error::invalid(format!("{SEED_ENV}={s:?} is not an unsigned integer")))?;
            }
        }
        macro_rules! take {
            ($dst:expr, $src:expr) => {
                if let Some(v) = $src.clone() {
                    $dst = v;
                }
            };
        }
        take!(cfg.seed, cli.seed);
        take!(cfg.sample_size, cli.sample_size);
        take!(cfg.format, cli.format);
        let i = &mut cfg.input;
        for (dst, src) in [
            (&mut i.tweets, &cli.tweets),
            (&mut i.polls, &cli.polls),
            (&mut i.labeled, &cli.labeled),
            (&mut i.model, &cli.model),
            (&mut i.states, &cli.states),
        ] {
            if src.is_some() {
                *dst = src.clone();
            }
        }
        take!(cfg.lda.k, cli.k);
        take!(cfg.lda.iterations, cli.iterations);
        if cli.alpha.is_some() {
            cfg.lda.alpha = cli.alpha;
        }
        take!(cfg.lda.beta, cli.beta);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_size == 0 {
            return Err(Error::invalid("sample size must be at least 1"));
        }
        self.candidate_pair()?;
        self.window.window()?;
        self.lda_config().validate().map_err(Error::invalid)?;
        if !(self.trends.peak_prominence.is_finite() && self.trends.peak_prominence > 0.0) {
            return Err(Error::invalid("peak prominence must be positive"));
        }
        Ok(())
    }

    pub fn candidate_pair(&self) -> Result<CandidatePair> {
        match self.candidates.as_slice() {
            [a, b] => CandidatePair::new(a.clone(), b.clone()).map_err(Error::invalid),
            other => Err(Error::invalid(format!(
                "exactly two candidates are required, found {}",
                other.len()
            ))),
        }
    }

    pub fn lda_config(&self) -> trendmine_core::LdaConfig {
        let mut c = trendmine_core::LdaConfig::with_topics(self.lda.k);
        if let Some(a) = self.lda.alpha {
            c.alpha = a;
        }
        c.beta = self.lda.beta;
        c.iterations = self.lda.iterations;
        c.top_n = self.lda.top_n;
        c.min_count = self.lda.min_count;
        c.seed = self.seed;
        c
    }

    /// SHA-256 over the canonical JSON of the settings. Input paths are left
    /// out (their contents are hashed separately in the manifest) so that
    /// the same data under another directory gives the same hash.
    pub fn hash(&self) -> String {
        let mut hashed = self.clone();
        hashed.input = InputFiles::default();
        let json = serde_json::to_vec(&hashed).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

impl InputFiles {
    fn rebase(&mut self, base: &Path) {
        for p in [
            &mut self.tweets,
            &mut self.polls,
            &mut self.labeled,
            &mut self.model,
            &mut self.states,
            &mut self.stop_words,
            &mut self.negation_cues,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}
