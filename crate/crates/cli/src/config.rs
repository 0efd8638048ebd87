use std::path::{Path, PathBuf};

use dptlab::exact::ratio;
use dptlab::tester::Mode;
use dptlab::{parse_fraction, Rational};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{AtStage, CliError, CliResult, Stage};

/// Rationals may be written as strings (`"1/10"`, `"0.05"`) or plain numbers.
mod fraction {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(i64),
        Float(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = match Raw::deserialize(d)? {
            Raw::Int(v) => v.to_string(),
            // shortest round-trip formatting, so 0.1 parses as exactly 1/10
            Raw::Float(v) => format!("{v}"),
            Raw::Text(t) => t,
        };
        parse_fraction(&text).map_err(serde::de::Error::custom)
    }

    pub fn serialize<S: serde::Serializer>(value: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&value.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilyConfig {
    SlidingWindow {
        n: u32,
        k: u32,
        #[serde(default)]
        sparse: bool,
    },
    CliqueSlice {
        n: u32,
    },
    Johnson {
        n: u32,
        k: u32,
        t: u32,
    },
    /// A graph JSON file (domain plus weighted edges).
    GraphFile {
        path: PathBuf,
    },
}

impl FamilyConfig {
    pub fn label(&self) -> &'static str {
        match self {
            FamilyConfig::SlidingWindow { sparse: false, .. } => "sliding-window",
            FamilyConfig::SlidingWindow { sparse: true, .. } => "sparse-sliding-window",
            FamilyConfig::CliqueSlice { .. } => "clique-slice",
            FamilyConfig::Johnson { .. } => "johnson",
            FamilyConfig::GraphFile { .. } => "graph-file",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CorruptionConfig {
    /// F is the codeword of the planted assignment.
    #[default]
    None,
    RandomSetCorruption {
        #[serde(with = "fraction")]
        delta: Rational,
    },
    PerSetSingleFlip,
    /// Flips `coord` on the listed sets, or on every set containing it.
    CoordinateClusterFlip {
        coord: u32,
        #[serde(default)]
        sets: Option<Vec<usize>>,
    },
}

fn default_trials() -> u64 {
    10_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TesterConfig {
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_trials")]
    pub trials: u64,
}

fn default_mode() -> Mode {
    Mode::Exact
}

impl Default for TesterConfig {
    fn default() -> Self {
        TesterConfig { mode: Mode::Exact, trials: default_trials() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StrategyConfig {
    #[default]
    Exhaustive,
    Sampled {
        per_size: usize,
    },
}

fn default_c() -> Rational {
    dptlab::certify::default_c()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    #[serde(with = "fraction")]
    pub lambda: Rational,
    #[serde(with = "fraction")]
    pub rho: Rational,
    #[serde(with = "fraction", default = "default_c")]
    pub c: Rational,
    #[serde(default)]
    pub strategy: StrategyConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub csv: PathBuf,
    #[serde(default)]
    pub certificate: Option<PathBuf>,
}

fn default_instances() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Base seed; instance `i` uses `seed + i`.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_instances")]
    pub instances: u64,
    pub family: FamilyConfig,
    /// Fixed planted assignment; drawn per instance when absent.
    #[serde(default)]
    pub assignment: Option<PathBuf>,
    #[serde(default)]
    pub corruption: CorruptionConfig,
    #[serde(default)]
    pub tester: TesterConfig,
    #[serde(default)]
    pub certify: Option<CertifyConfig>,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// Reads TOML, or JSON when the extension is `.json`. Relative paths
    /// inside the file are taken relative to the file's directory. Call
    /// [`validate`](Self::validate) after applying any overrides.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::invalid(Stage::Config, format!("cannot read {}: {e}", path.display())))?;
        let mut config: ExperimentConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).at(Stage::Config)?
        } else {
            toml::from_str(&text).at(Stage::Config)?
        };
        if let Some(base) = path.parent() {
            config.rebase(base);
        }
        Ok(config)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let FamilyConfig::GraphFile { path } = &mut self.family {
            fix(path);
        }
        if let Some(p) = &mut self.assignment {
            fix(p);
        }
        fix(&mut self.output.csv);
        if let Some(p) = &mut self.output.certificate {
            fix(p);
        }
    }

    /// Whether any step draws random bits.
    pub fn needs_seed(&self) -> bool {
        self.assignment.is_none()
            || matches!(
                self.corruption,
                CorruptionConfig::RandomSetCorruption { .. } | CorruptionConfig::PerSetSingleFlip
            )
            || self.tester.mode == Mode::MonteCarlo
            || matches!(&self.certify, Some(c) if matches!(c.strategy, StrategyConfig::Sampled { .. }))
    }

    pub fn validate(&self) -> CliResult<()> {
        let fail = |msg: String| Err(CliError::invalid(Stage::Config, msg));
        if self.instances == 0 {
            return fail("instances must be at least 1".into());
        }
        if self.needs_seed() && self.seed.is_none() {
            return fail("a seed is required: this experiment has randomized steps".into());
        }
        if self.seed.is_some_and(|s| s.checked_add(self.instances - 1).is_none()) {
            return fail("seed + instances overflows".into());
        }
        if let CorruptionConfig::RandomSetCorruption { delta } = &self.corruption {
            if delta < &ratio(0, 1) || delta > &ratio(1, 1) {
                return fail(format!("delta must lie in [0, 1], got {delta}"));
            }
        }
        if self.tester.mode == Mode::MonteCarlo && self.tester.trials == 0 {
            return fail("monte-carlo mode needs at least one trial".into());
        }
        if let Some(c) = &self.certify {
            if let StrategyConfig::Sampled { per_size: 0 } = c.strategy {
                return fail("per_size must be positive".into());
            }
        }
        let mut files: Vec<&Path> = Vec::new();
        if let FamilyConfig::GraphFile { path } = &self.family {
            files.push(path);
        }
        if let Some(p) = &self.assignment {
            files.push(p);
        }
        for p in files {
            if !p.is_file() {
                return fail(format!("missing file {}", p.display()));
            }
        }
        Ok(())
    }
}
