use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::agent::AgentConfig;
use crate::channel::ChannelConfig;
use crate::quantizer::DEFAULT_DELTA_BIG;
use crate::system::SystemParams;
use crate::{Error, Result};

/// Prefix of environment variables that override config keys, e.g.
/// `DRTO__EXPERIMENT__TOTAL_FRAMES=5000` or `DRTO__SYSTEM__N_ST=7`.
/// Values are parsed as JSON and fall back to plain strings.
pub const ENV_PREFIX: &str = "DRTO__";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Drto,
    Ddlo,
    Cd,
    Enum,
    PureTc,
    PureSat,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Drto,
        Algorithm::Ddlo,
        Algorithm::Cd,
        Algorithm::Enum,
        Algorithm::PureTc,
        Algorithm::PureSat,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Drto => "drto",
            Algorithm::Ddlo => "ddlo",
            Algorithm::Cd => "cd",
            Algorithm::Enum => "enum",
            Algorithm::PureTc => "pure-tc",
            Algorithm::PureSat => "pure-sat",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantizerConfig {
    pub delta_big: usize,
}

impl Default for QuantizerConfig {
    fn default() -> Self {
        Self {
            delta_big: DEFAULT_DELTA_BIG,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub total_frames: u64,
    pub algorithms: Vec<Algorithm>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Normalize every frame's cost by the exhaustive optimum.
    pub compute_ratio: bool,
    /// Write wall-clock columns. Off makes every output byte-reproducible.
    pub record_timing: bool,
    /// Frames at the end of a run used for tail statistics.
    pub tail_frames: u64,
    /// Run seeds on parallel threads (never in bench mode).
    pub parallel: bool,
    /// Frames excluded from bench timing.
    pub warmup_frames: u64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            total_frames: 30_000,
            algorithms: vec![Algorithm::Drto],
            seeds: vec![0],
            output_dir: PathBuf::from("results"),
            compute_ratio: true,
            record_timing: true,
            tail_frames: 3_000,
            parallel: true,
            warmup_frames: 100,
        }
    }
}

/// Complete run configuration, read from JSON.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemParams,
    pub channel: ChannelConfig,
    pub agent: AgentConfig,
    pub quantizer: QuantizerConfig,
    pub experiment: ExperimentSection,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.channel.mean_gains(&self.system)?;
        self.agent.validate()?;
        if self.quantizer.delta_big == 0 {
            return Err(Error::Config("quantizer.delta_big must be positive".into()));
        }
        let e = &self.experiment;
        if e.total_frames == 0 {
            return Err(Error::Config("experiment.total_frames must be at least 1".into()));
        }
        if e.algorithms.is_empty() {
            return Err(Error::Config("experiment.algorithms must list at least one algorithm".into()));
        }
        if e.seeds.is_empty() {
            return Err(Error::Config("experiment.seeds must list at least one seed".into()));
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_value(serde_json::from_str(text)?, std::iter::empty())
    }

    /// Reads `path` (or defaults when `None`) and applies overrides from the
    /// process environment.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        Self::load_with_env(path, std::env::vars())
    }

    pub fn load_with_env(path: Option<&Path>, env: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => Value::Object(Default::default()),
        };
        Self::from_value(value, env)
    }

    fn from_value(mut value: Value, env: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        for (key, raw) in env {
            let Some(rest) = key.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let path: Vec<String> = rest.split("__").map(|s| s.to_ascii_lowercase()).collect();
            let parsed = serde_json::from_str(&raw).unwrap_or(Value::String(raw));
            set_path(&mut value, &path, parsed).map_err(|e| Error::Config(format!("{key}: {e}")))?;
        }
        let cfg: ExperimentConfig = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn set_path(root: &mut Value, path: &[String], v: Value) -> std::result::Result<(), String> {
    let (last, parents) = path.split_last().ok_or("empty key")?;
    let mut node = root;
    for p in parents {
        let obj = node.as_object_mut().ok_or_else(|| format!("{p} is not a section"))?;
        node = obj.entry(p.clone()).or_insert_with(|| Value::Object(Default::default()));
    }
    node.as_object_mut()
        .ok_or_else(|| format!("{last} has no parent section"))?
        .insert(last.clone(), v);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_all_defaults() {
        let cfg = ExperimentConfig::from_json_str("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.quantizer.delta_big, 64);
        assert_eq!(cfg.agent.batch_size, 128);
        assert_eq!(cfg.experiment.total_frames, 30_000);
    }

    #[test]
    fn sections_parse() {
        let cfg = ExperimentConfig::from_json_str(
            r#"{
                "system": {"n_st": 3},
                "channel": {"mode": {"direct_snr": {"st_snr_db": [5, 6, 7], "tc_snr_db": 15}}, "fading": "none"},
                "agent": {"delta_train": 5},
                "quantizer": {"delta_big": 32},
                "experiment": {"algorithms": ["drto", "pure-tc", "enum"], "seeds": [1, 2]}
            }"#,
        )
        .unwrap();
        assert_eq!(cfg.system.n_st, 3);
        assert_eq!(cfg.agent.delta_train, 5);
        assert_eq!(cfg.quantizer.delta_big, 32);
        assert_eq!(cfg.experiment.algorithms, vec![Algorithm::Drto, Algorithm::PureTc, Algorithm::Enum]);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for bad in [
            r#"{"experiment": {"total_frames": 0}}"#,
            r#"{"experiment": {"algorithms": []}}"#,
            r#"{"experiment": {"algorithms": ["magic"]}}"#,
            r#"{"system": {"n_st": 2}, "channel": {"mode": {"direct_snr": {"st_snr_db": [1, 2, 3], "tc_snr_db": 1}}}}"#,
            r#"{"unknown": {}}"#,
        ] {
            assert!(ExperimentConfig::from_json_str(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn env_overrides() {
        let env = vec![
            ("DRTO__EXPERIMENT__TOTAL_FRAMES".to_string(), "123".to_string()),
            ("DRTO__SYSTEM__N_ST".to_string(), "4".to_string()),
            ("DRTO__EXPERIMENT__OUTPUT_DIR".to_string(), "out/x".to_string()),
            ("OTHER".to_string(), "1".to_string()),
        ];
        let cfg = ExperimentConfig::load_with_env(None, env).unwrap();
        assert_eq!(cfg.experiment.total_frames, 123);
        assert_eq!(cfg.system.n_st, 4);
        assert_eq!(cfg.system.p_st.len(), 4);
        assert_eq!(cfg.experiment.output_dir, PathBuf::from("out/x"));
    }

    #[test]
    fn documented_examples_parse() {
        let full = ExperimentConfig::from_json_str(
            r#"{
              "system":     { "n_st": 5, "bandwidth_total": 8e8, "p_st": 1.0, "p_sat": 3.0,
                              "noise": 1e-9, "task_bits": 8e8, "intensity": 10.0,
                              "f_sat": 4e8, "f_tc": 3e9, "p_compute_sat": 0.5, "lambda": 0.5 },
              "channel":    { "mode": { "direct_snr": { "st_snr_db": 10.0, "tc_snr_db": 20.0 } },
                              "fading": "iid_exponential", "deep_fade_prob": 0.0 },
              "agent":      { "delta_train": 10, "batch_size": 128, "memory_capacity": 1024,
                              "learning_rate": 0.01, "init_std": 0.1 },
              "quantizer":  { "delta_big": 64 },
              "experiment": { "total_frames": 30000, "algorithms": ["drto"], "seeds": [0],
                              "output_dir": "results", "compute_ratio": true, "record_timing": true,
                              "tail_frames": 3000, "parallel": true, "warmup_frames": 100 }
            }"#,
        )
        .unwrap();
        assert_eq!(full, ExperimentConfig::default());
        let pl = ExperimentConfig::from_json_str(
            r#"{"channel": {"mode": {"path_loss": {"st": {"distance_m": 1e6}, "tc": {"distance_m": 1.2e6}}}}}"#,
        )
        .unwrap();
        let means = pl.channel.mean_gains(&pl.system).unwrap();
        assert!(means.st.iter().all(|&g| g == means.st[0]) && means.tc < means.st[0]);
        assert!(ExperimentConfig::from_json_str(r#"{"channel": {"mode": {"path_loss": {"st": {}, "tc": {}}}}}"#).is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
        }
    }
}
