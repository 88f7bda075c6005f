//! Run configuration, read from a TOML file.

use std::path::{Path, PathBuf};

use nullnet_core::nullmodel::{NullModelChoice, DEFAULT_SPARSE_THRESHOLD};
use nullnet_core::projection::{FdrFamily, PValueMode};
use nullnet_core::reputability::{MIN_OCCURRENCE_DIRECTED, MIN_OCCURRENCE_VERIFIED};
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Config {
    /// Raw tweet JSONL files, relative to the config file.
    pub input: Vec<PathBuf>,
    /// Annotation CSV; without it every domain is unclassified.
    #[serde(default)]
    pub annotations: Option<PathBuf>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub fdr_family: FdrFamily,
    #[serde(default)]
    pub p_value: PValueChoice,
    /// Family size up to which `p-value = "auto"` uses the exact tail.
    #[serde(default = "default_exact_cutoff")]
    pub exact_cutoff: usize,
    #[serde(default)]
    pub null_model: NullModelChoice,
    #[serde(default = "default_sparse_threshold")]
    pub sparse_threshold: f64,
    /// Louvain restarts; defaults to min(N, 1000).
    #[serde(default)]
    pub restarts: Option<usize>,
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
    #[serde(default = "default_min_verified")]
    pub min_occurrence_verified: usize,
    #[serde(default = "default_min_directed")]
    pub min_occurrence_directed: usize,
    #[serde(default)]
    pub keep_subdomains: bool,
    #[serde(default = "default_bucket")]
    pub bucket_seconds: i64,
    #[serde(default = "default_top_domains")]
    pub top_domains: usize,
    #[serde(default = "default_hits_tol")]
    pub hits_tol: f64,
    #[serde(default)]
    pub filters: Filters,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Filters {
    #[serde(default)]
    pub language: Option<String>,
    /// Inclusive start, `YYYY-MM-DD` or RFC 3339.
    #[serde(default)]
    pub date_from: Option<String>,
    /// Exclusive end, `YYYY-MM-DD` or RFC 3339.
    #[serde(default)]
    pub date_to: Option<String>,
    /// Case-insensitive substring of the tweet text.
    #[serde(default)]
    pub keyword: Option<String>,
    #[serde(default = "default_max_malformed")]
    pub max_malformed_fraction: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PValueChoice {
    #[default]
    Poisson,
    PoissonBinomial,
    Auto,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("run")
}
fn default_alpha() -> f64 {
    0.05
}
fn default_exact_cutoff() -> usize {
    2000
}
fn default_sparse_threshold() -> f64 {
    DEFAULT_SPARSE_THRESHOLD
}
fn default_max_sweeps() -> usize {
    nullnet_core::communities::lpa::DEFAULT_MAX_SWEEPS
}
fn default_min_verified() -> usize {
    MIN_OCCURRENCE_VERIFIED
}
fn default_min_directed() -> usize {
    MIN_OCCURRENCE_DIRECTED
}
fn default_bucket() -> i64 {
    86_400
}
fn default_top_domains() -> usize {
    10
}
fn default_hits_tol() -> f64 {
    nullnet_core::communities::hits::DEFAULT_TOL
}
fn default_max_malformed() -> f64 {
    0.1
}

impl Config {
    /// Config with every default and the given inputs.
    pub fn new(input: Vec<PathBuf>, out_dir: PathBuf) -> Self {
        let mut c: Config = toml::from_str("input = []").expect("defaults parse");
        c.input = input;
        c.out_dir = out_dir;
        c
    }

    /// Reads a config file and resolves relative paths against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: Config = toml::from_str(&text)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &PathBuf| {
            if p.is_absolute() {
                p.clone()
            } else {
                base.join(p)
            }
        };
        self.input = self.input.iter().map(join).collect();
        self.annotations = self.annotations.as_ref().map(join);
        self.out_dir = join(&self.out_dir);
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.input.is_empty() {
            return bad("at least one input file is required".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.sparse_threshold >= 0.0 && self.sparse_threshold <= 1.0) {
            return bad(format!(
                "sparse-threshold must lie in [0, 1], got {}",
                self.sparse_threshold
            ));
        }
        if self.restarts == Some(0) {
            return bad("restarts must be positive".into());
        }
        if self.min_occurrence_verified == 0 || self.min_occurrence_directed == 0 {
            return bad("min-occurrence thresholds must be at least 1".into());
        }
        if self.bucket_seconds <= 0 {
            return bad("bucket-seconds must be positive".into());
        }
        if self.hits_tol.is_nan() || self.hits_tol <= 0.0 {
            return bad("hits-tol must be positive".into());
        }
        let f = self.filters.max_malformed_fraction;
        if !(0.0..=1.0).contains(&f) {
            return bad(format!(
                "max-malformed-fraction must lie in [0, 1], got {f}"
            ));
        }
        Ok(())
    }

    pub fn p_value_mode(&self) -> PValueMode {
        match self.p_value {
            PValueChoice::Poisson => PValueMode::Poisson,
            PValueChoice::PoissonBinomial => PValueMode::PoissonBinomial,
            PValueChoice::Auto => PValueMode::Auto {
                cutoff: self.exact_cutoff,
            },
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c: Config = toml::from_str("input = [\"a.jsonl\"]").unwrap();
        assert_eq!(c.alpha, 0.05);
        assert_eq!(c.min_occurrence_verified, 20);
        assert_eq!(c.min_occurrence_directed, 100);
        assert_eq!(c.fdr_family, FdrFamily::Nonzero);
        assert_eq!(c.null_model, NullModelChoice::Auto);
        assert_eq!(c.restarts, None);
        assert!(!c.keep_subdomains);
        c.validate().unwrap();
    }

    #[test]
    fn kebab_keys() {
        let c: Config = toml::from_str(
            "input = [\"a\"]\nfdr-family = \"all-pairs\"\nnull-model = \"chung-lu\"\n\
             keep-subdomains = true\nsparse-threshold = 0.5\n[filters]\nlanguage = \"it\"\n",
        )
        .unwrap();
        assert_eq!(c.fdr_family, FdrFamily::AllPairs);
        assert_eq!(c.null_model, NullModelChoice::ChungLu);
        assert_eq!(c.filters.language.as_deref(), Some("it"));
        assert!(toml::from_str::<Config>("input = []\nalpah = 0.1\n").is_err());
    }

    #[test]
    fn invalid_values() {
        let mut c = Config::new(vec!["a".into()], "out".into());
        c.alpha = 1.5;
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
        let c = Config::new(vec![], "out".into());
        assert!(c.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let c = Config::new(vec!["a.jsonl".into()], "out".into());
        let back: Config = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }
}
