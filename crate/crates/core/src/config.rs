//! Experiment configuration files.
//!
//! A TOML document with four optional tables. Every constant has a default,
//! so an empty file is a valid configuration:
//!
//! ```toml
//! [schedule]
//! price_floor = 50
//! price_ceil = 150
//! replenish_interval = 30
//! offset = { amplitude = 40, wavelength = 300, drift = 0 }
//!
//! [traders.aa]
//! eta = 3.0
//!
//! [engine]
//! mode = "threaded"
//! wall_duration = 3
//! delay.GDX = 10
//! delay.AA = 1
//!
//! [sweep]
//! algos = ["AA", "ZIC"]
//! n = 100
//! seed = 7
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{DelayKind, Parallelism, ThreadedConfig, DEFAULT_QUEUE_CAPACITY};
use crate::market::ScheduleConfig;
use crate::session::{EngineMode, RosterEntry, SessionConfig};
use crate::traders::TraderParams;
use crate::types::Algo;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config")]
    Parse(#[from] toml::de::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineSettings {
    pub mode: EngineMode,
    /// Sequential session length in virtual seconds.
    pub duration: f64,
    pub measure_latency: bool,
    pub wall_duration: f64,
    pub time_scale: f64,
    pub parallelism: Parallelism,
    pub delay_kind: DelayKind,
    pub queue_capacity: usize,
    pub quantum_ms: f64,
    pub drain_timeout: f64,
    pub idle_wait_ms: f64,
    /// Injected per-call delay in milliseconds, keyed by algorithm name.
    pub delay: BTreeMap<Algo, f64>,
}

impl Default for EngineSettings {
    fn default() -> Self {
        EngineSettings {
            mode: EngineMode::Sequential,
            duration: 300.0,
            measure_latency: false,
            wall_duration: 10.0,
            time_scale: 30.0,
            parallelism: Parallelism::default(),
            delay_kind: DelayKind::default(),
            queue_capacity: DEFAULT_QUEUE_CAPACITY,
            quantum_ms: 5.0,
            drain_timeout: 10.0,
            idle_wait_ms: 1.0,
            delay: BTreeMap::new(),
        }
    }
}

impl EngineSettings {
    pub fn session_config(
        &self,
        roster: Vec<RosterEntry>,
        seed: u64,
        schedule: &ScheduleConfig,
        traders: &TraderParams,
    ) -> SessionConfig {
        SessionConfig {
            duration: self.duration,
            roster,
            schedule: schedule.clone(),
            traders: traders.clone(),
            seed,
            measure_latency: self.measure_latency,
        }
    }

    pub fn threaded_config(&self, session: SessionConfig) -> ThreadedConfig {
        ThreadedConfig {
            session,
            wall_duration: self.wall_duration,
            time_scale: self.time_scale,
            delay_profile: self.delay.clone(),
            trader_delay_ms: BTreeMap::new(),
            parallelism: self.parallelism,
            delay_kind: self.delay_kind,
            queue_capacity: self.queue_capacity,
            quantum_ms: self.quantum_ms,
            drain_timeout: self.drain_timeout,
            idle_wait_ms: self.idle_wait_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub algos: Vec<Algo>,
    #[serde(alias = "n_per_ratio")]
    pub n: usize,
    pub seed: u64,
    pub per_side: usize,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            algos: vec![Algo::Aa, Algo::Zic],
            n: 500,
            seed: 1,
            per_side: 20,
            jobs: None,
            out: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schedule: ScheduleConfig,
    pub traders: TraderParams,
    pub engine: EngineSettings,
    pub sweep: SweepSettings,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.schedule.n_per_side, 20);
        assert_eq!(c.engine.queue_capacity, 64);
    }

    #[test]
    fn overrides_apply() {
        let c = ExperimentConfig::from_toml(
            r#"
            [schedule]
            price_floor = 60
            offset = { amplitude = 0, wavelength = 1, drift = 0 }

            [traders.aa]
            eta = 4.0

            [engine]
            mode = "threaded"
            wall_duration = 3
            parallelism = "full"
            delay.GDX = 10
            delay.ZIC = 0.1

            [sweep]
            algos = ["GDX", "ZIP"]
            n = 30
            "#,
        )
        .unwrap();
        assert_eq!(c.schedule.price_floor, 60);
        assert_eq!(c.schedule.price_ceil, 150);
        assert_eq!(c.schedule.offset.amplitude, 0.0);
        assert_eq!(c.traders.aa.eta, 4.0);
        assert_eq!(c.engine.mode, EngineMode::Threaded);
        assert_eq!(c.engine.parallelism, Parallelism::Full);
        assert_eq!(c.engine.delay[&Algo::Gdx], 10.0);
        assert_eq!(c.engine.delay[&Algo::Zic], 0.1);
        assert_eq!(c.sweep.algos, vec![Algo::Gdx, Algo::Zip]);
        assert_eq!(c.sweep.n, 30);
    }

    #[test]
    fn typos_are_rejected() {
        assert!(ExperimentConfig::from_toml("[engine]\nwall_durration = 3\n").is_err());
        assert!(ExperimentConfig::from_toml("[engine]\ndelay.XYZ = 3\n").is_err());
    }
}
