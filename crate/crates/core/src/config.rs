//! Run settings and the flat key=value config file.
//!
//! A config file is plain text: one `key = value` per line, `#` starts a
//! comment, blank lines are ignored. Unknown keys are rejected outright so
//! a typo cannot silently fall back to a default. Command-line flags are
//! applied after the file and therefore always win.

use std::fmt;

use crate::energy::EnergyParams;
use crate::engine::{SimConfig, DEFAULT_MAX_ITERATIONS};
use crate::export::ExportFormat;
use crate::strategies::{E3dThresholds, StrategyKind};
use crate::topology::Position;

/// Everything a run can tune, at its default value until a config file or
/// a flag overrides it.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub algo: Option<StrategyKind>,
    pub nodes: usize,
    pub width: f64,
    pub height: f64,
    pub seed: u64,
    pub format: ExportFormat,
    pub energy: EnergyParams,
    pub e3d: E3dThresholds,
    pub clusters: usize,
    pub round_length: u64,
    pub max_neighbors: usize,
    pub max_iterations: u64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            algo: None,
            nodes: 100,
            width: 100.0,
            height: 100.0,
            seed: 1,
            format: ExportFormat::Csv,
            energy: EnergyParams::default(),
            e3d: E3dThresholds::default(),
            clusters: 5,
            round_length: 20,
            max_neighbors: 8,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected key = value, got {text:?}")]
    BadSyntax { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for {key}: {reason}")]
    BadValue {
        line: usize,
        key: String,
        reason: String,
    },
    #[error("invalid settings: {0}")]
    Invalid(String),
}

impl Settings {
    /// Apply one config file's text on top of the current values.
    pub fn apply_file(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::BadSyntax {
                    line,
                    text: content.to_string(),
                });
            };
            self.apply_key(line, key.trim(), value.trim())?;
        }
        Ok(())
    }

    fn apply_key(&mut self, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |reason: String| ConfigError::BadValue {
            line,
            key: key.to_string(),
            reason,
        };
        match key {
            "algo" => {
                self.algo = Some(
                    StrategyKind::parse(value)
                        .ok_or_else(|| bad(format!("unknown algorithm {value:?}")))?,
                );
            }
            "nodes" => self.nodes = parse_num(value).map_err(bad)?,
            "area" => {
                let (w, h) = parse_area(value).map_err(bad)?;
                self.width = w;
                self.height = h;
            }
            "seed" => self.seed = parse_num(value).map_err(bad)?,
            "format" => {
                self.format = ExportFormat::parse(value)
                    .ok_or_else(|| bad(format!("unknown format {value:?}")))?;
            }
            "clusters" => self.clusters = parse_num(value).map_err(bad)?,
            "round_length" => self.round_length = parse_num(value).map_err(bad)?,
            "max_neighbors" => self.max_neighbors = parse_num(value).map_err(bad)?,
            "max_iterations" => self.max_iterations = parse_num(value).map_err(bad)?,
            "elec_per_bit" => self.energy.elec_per_bit = parse_num(value).map_err(bad)?,
            "amp_per_bit_per_m2" => {
                self.energy.amp_per_bit_per_m2 = parse_num(value).map_err(bad)?;
            }
            "data_bits" => self.energy.data_bits = parse_num(value).map_err(bad)?,
            "control_bits" => self.energy.control_bits = parse_num(value).map_err(bad)?,
            "initial_battery" => self.energy.initial_battery = parse_num(value).map_err(bad)?,
            "low_power" => self.e3d.low_power = parse_num(value).map_err(bad)?,
            "power_compare" => self.e3d.power_compare = parse_num(value).map_err(bad)?,
            "queue_limit" => self.e3d.queue_limit = parse_num(value).map_err(bad)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    /// Check everything a run relies on before any work starts.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.nodes == 0 {
            return Err(ConfigError::Invalid("nodes must be at least 1".into()));
        }
        if !(self.width.is_finite() && self.width > 0.0)
            || !(self.height.is_finite() && self.height > 0.0)
        {
            return Err(ConfigError::Invalid(
                "area dimensions must be positive".into(),
            ));
        }
        self.energy
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.e3d.validate().map_err(ConfigError::Invalid)?;
        if self.clusters == 0 || self.round_length == 0 || self.max_neighbors == 0 {
            return Err(ConfigError::Invalid(
                "clusters, round_length, and max_neighbors must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Base station location; all built-in experiments pin it to a corner.
    pub fn base(&self) -> Position {
        Position { x: 0.0, y: 0.0 }
    }

    /// Assemble the engine configuration for one run.
    pub fn sim_config(&self, strategy: StrategyKind, seed: u64) -> SimConfig {
        SimConfig {
            strategy,
            energy: self.energy,
            max_neighbors: self.max_neighbors,
            clusters: self.clusters,
            round_length: self.round_length,
            e3d: self.e3d,
            max_iterations: self.max_iterations,
            seed,
        }
    }
}

fn parse_num<T>(value: &str) -> Result<T, String>
where
    T: std::str::FromStr,
    T::Err: fmt::Display,
{
    value.parse().map_err(|e| format!("{e}"))
}

/// Parse a `WIDTHxHEIGHT` dimension string such as `100x100`.
pub fn parse_area(value: &str) -> Result<(f64, f64), String> {
    let (w, h) = value
        .split_once('x')
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got {value:?}"))?;
    let width: f64 = w
        .trim()
        .parse()
        .map_err(|_| format!("bad width {w:?}"))?;
    let height: f64 = h
        .trim()
        .parse()
        .map_err(|_| format!("bad height {h:?}"))?;
    Ok((width, height))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_documented_setup() {
        let s = Settings::default();
        assert_eq!(s.nodes, 100);
        assert_eq!((s.width, s.height), (100.0, 100.0));
        assert_eq!(s.seed, 1);
        assert_eq!(s.format, ExportFormat::Csv);
        assert_eq!(s.clusters, 5);
        assert_eq!(s.round_length, 20);
        assert_eq!(s.max_neighbors, 8);
        assert!(s.algo.is_none());
        assert!(s.validate().is_ok());
    }

    #[test]
    fn config_file_round_trips_every_key() {
        let text = "\
# experiment tuned for a small dense field
algo = ideal-cluster
nodes = 40
area = 50x80
seed = 9
format = json

clusters = 3        # strategy knobs
round_length = 10
max_neighbors = 4
max_iterations = 1234

elec_per_bit = 60e-9
amp_per_bit_per_m2 = 90e-12
data_bits = 1000
control_bits = 50
initial_battery = 0.25

low_power = 0.05
power_compare = 0.4
queue_limit = 7
";
        let mut s = Settings::default();
        s.apply_file(text).unwrap();
        assert_eq!(s.algo, Some(StrategyKind::IdealClustering));
        assert_eq!(s.nodes, 40);
        assert_eq!((s.width, s.height), (50.0, 80.0));
        assert_eq!(s.seed, 9);
        assert_eq!(s.format, ExportFormat::Json);
        assert_eq!(s.clusters, 3);
        assert_eq!(s.round_length, 10);
        assert_eq!(s.max_neighbors, 4);
        assert_eq!(s.max_iterations, 1234);
        assert_eq!(s.energy.elec_per_bit, 60e-9);
        assert_eq!(s.energy.amp_per_bit_per_m2, 90e-12);
        assert_eq!(s.energy.data_bits, 1000);
        assert_eq!(s.energy.control_bits, 50);
        assert_eq!(s.energy.initial_battery, 0.25);
        assert_eq!(s.e3d.low_power, 0.05);
        assert_eq!(s.e3d.power_compare, 0.4);
        assert_eq!(s.e3d.queue_limit, 7);
        assert!(s.validate().is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_line() {
        let mut s = Settings::default();
        let err = s.apply_file("nodes = 10\nspeed = 3\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnknownKey {
                line: 2,
                key: "speed".into()
            }
        );
    }

    #[test]
    fn malformed_lines_are_rejected() {
        let mut s = Settings::default();
        assert!(matches!(
            s.apply_file("just some words\n"),
            Err(ConfigError::BadSyntax { line: 1, .. })
        ));
        assert!(matches!(
            s.apply_file("nodes = plenty\n"),
            Err(ConfigError::BadValue { line: 1, .. })
        ));
        assert!(matches!(
            s.apply_file("algo = flooding\n"),
            Err(ConfigError::BadValue { line: 1, .. })
        ));
    }

    #[test]
    fn area_strings_parse_strictly() {
        assert_eq!(parse_area("100x100").unwrap(), (100.0, 100.0));
        assert_eq!(parse_area("12.5x3").unwrap(), (12.5, 3.0));
        assert!(parse_area("100").is_err());
        assert!(parse_area("x100").is_err());
        assert!(parse_area("100x").is_err());
        assert!(parse_area("axb").is_err());
    }

    #[test]
    fn validation_rejects_empty_or_degenerate_setups() {
        let mut s = Settings::default();
        s.nodes = 0;
        assert!(s.validate().is_err());

        let mut s = Settings::default();
        s.apply_file("area = -5x10\n").unwrap();
        assert!(s.validate().is_err());

        let mut s = Settings::default();
        s.apply_file("initial_battery = 0\n").unwrap();
        assert!(s.validate().is_err());

        let mut s = Settings::default();
        s.apply_file("power_compare = 0.05\n").unwrap(); // below low_power
        assert!(s.validate().is_err());
    }

    #[test]
    fn sim_config_carries_every_knob() {
        let mut s = Settings::default();
        s.apply_file("clusters = 2\nmax_neighbors = 3\nround_length = 7\nmax_iterations = 55\n")
            .unwrap();
        let cfg = s.sim_config(StrategyKind::RandomClustering, 99);
        assert_eq!(cfg.strategy, StrategyKind::RandomClustering);
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.clusters, 2);
        assert_eq!(cfg.max_neighbors, 3);
        assert_eq!(cfg.round_length, 7);
        assert_eq!(cfg.max_iterations, 55);
        assert!(cfg.validate().is_ok());
    }
}
