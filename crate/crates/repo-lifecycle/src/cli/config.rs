//! Run configuration: defaults, overridden by a flat `key=value` config
//! file, overridden by environment, overridden by command-line flags.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::ingest::BotPatterns;
use crate::month::Month;
use crate::valuation::ValuationConfig;

/// Everything a pipeline run needs to know.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub projects: Vec<String>,
    pub cutoff_month: Option<Month>,
    pub cache_dir: PathBuf,
    pub output_dir: PathBuf,
    pub valuation: ValuationConfig,
    pub stability_fraction: f64,
    pub fetch_concurrency: usize,
    pub exclude_bots: bool,
    pub bot_patterns: BotPatterns,
    pub token: Option<String>,
    /// Where the token came from, for error messages.
    pub token_source: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            projects: Vec::new(),
            cutoff_month: None,
            cache_dir: PathBuf::from("cache"),
            output_dir: PathBuf::from("out"),
            valuation: ValuationConfig::default(),
            stability_fraction: 0.75,
            fetch_concurrency: 4,
            exclude_bots: true,
            bot_patterns: BotPatterns::default(),
            token: None,
            token_source: "none".to_string(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.valuation.validate()?;
        if !(0.0 < self.stability_fraction && self.stability_fraction <= 1.0) {
            return Err(Error::Config("stability_fraction must be in (0, 1]".into()));
        }
        if self.fetch_concurrency < 1 {
            return Err(Error::Config("fetch_concurrency must be at least 1".into()));
        }
        Ok(())
    }

    /// Apply a parsed config file (lowest precedence above defaults).
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let entries = parse_flat(&path.display().to_string(), &text)?;
        for (key, value) in entries {
            self.apply_entry(&key, &value)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }

    /// Apply the process environment (middle precedence).
    pub fn apply_env(&mut self) {
        if let Ok(token) = std::env::var("GITHUB_TOKEN") {
            if !token.is_empty() {
                self.token = Some(token);
                self.token_source = "GITHUB_TOKEN".to_string();
            }
        }
    }

    fn apply_entry(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("invalid {what} '{value}'"));
        match key {
            "projects" => {
                self.projects = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect();
            }
            "cutoff" => self.cutoff_month = Some(value.parse()?),
            "cache_dir" => self.cache_dir = PathBuf::from(value),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "monthly_salary" => {
                self.valuation.monthly_salary = value.parse().map_err(|_| bad("monthly_salary"))?
            }
            "time_fraction" => {
                self.valuation.time_fraction = value.parse().map_err(|_| bad("time_fraction"))?
            }
            "maturation_threshold" => {
                self.valuation.maturation_threshold =
                    value.parse().map_err(|_| bad("maturation_threshold"))?
            }
            "per_download_value" => {
                self.valuation.per_download_value =
                    Some(value.parse().map_err(|_| bad("per_download_value"))?)
            }
            "stability_fraction" => {
                self.stability_fraction = value.parse().map_err(|_| bad("stability_fraction"))?
            }
            "fetch_concurrency" => {
                self.fetch_concurrency = value.parse().map_err(|_| bad("fetch_concurrency"))?
            }
            "exclude_bots" => self.exclude_bots = value.parse().map_err(|_| bad("exclude_bots"))?,
            "bot_patterns" => {
                self.bot_patterns = BotPatterns::new(
                    value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(String::from),
                );
            }
            "token" => {
                self.token = Some(value.to_string());
                self.token_source = "config file".to_string();
            }
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }
}

/// Parse `key = value` lines; `#` starts a comment, blank lines skipped.
fn parse_flat(path: &str, text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.to_string(),
            line: idx + 1,
            message: format!("expected key=value, got '{raw}'"),
        })?;
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}
