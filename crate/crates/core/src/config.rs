//! Run configuration: TOML files layered over the bundled defaults.

use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldParams;
use crate::readout::ReadoutMethod;
use crate::stimulus::GaussianInput;

/// The bundled defaults file.
pub const DEFAULTS_TOML: &str = include_str!("../config/defaults.toml");

static DEFAULTS: LazyLock<toml::Table> =
    LazyLock::new(|| DEFAULTS_TOML.parse().expect("bundled defaults.toml must parse"));

/// Inclusive, evenly spaced parameter range. Grid points are `lo + i * step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Range {
    pub fn single(v: f64) -> Self {
        Range { lo: v, hi: v, step: 1.0 }
    }

    pub fn validate(&self, key: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) {
            return Err(Error::config(key, "bounds must be finite"));
        }
        if self.lo > self.hi {
            return Err(Error::config(key, format!("lo ({}) must be <= hi ({})", self.lo, self.hi)));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::config(format!("{key}.step"), format!("must be > 0, got {}", self.step)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneDimSweep {
    pub a_mp: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoDimSweep {
    pub a_mp: Range,
    pub a_target: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub one_d: OneDimSweep,
    pub two_d: TwoDimSweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub master_seed: u64,
    pub n_trials: usize,
    pub readout: ReadoutMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub field: FieldParams,
    pub target: GaussianInput,
    pub competitor: GaussianInput,
    pub sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::from_table(toml::Table::new()).expect("bundled defaults must be valid")
    }
}

impl RunConfig {
    /// Parses TOML text, filling unspecified keys from the defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::ConfigParse {
            path: PathBuf::from("<string>"),
            message: e.to_string(),
        })?;
        Self::from_table(table)
    }

    fn from_table(overrides: toml::Table) -> Result<Self> {
        let mut merged = DEFAULTS.clone();
        merge(&mut merged, overrides);
        let config: RunConfig = toml::Value::Table(merged).try_into().map_err(|e: toml::de::Error| Error::ConfigParse {
            path: PathBuf::from("<config>"),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.field.validate()?;
        if self.n_trials == 0 {
            return Err(Error::config("n_trials", "must be >= 1"));
        }
        for (key, input) in [("target", &self.target), ("competitor", &self.competitor)] {
            input
                .validate(self.field.field_size)
                .map_err(|e| Error::config(key, e.to_string()))?;
        }
        self.sweep.one_d.a_mp.validate("sweep.one_d.a_mp")?;
        self.sweep.two_d.a_mp.validate("sweep.two_d.a_mp")?;
        self.sweep.two_d.a_target.validate("sweep.two_d.a_target")?;
        Ok(())
    }

    /// Logs soft warnings: parameters outside the selection regime and inputs
    /// clipped by the grid edge.
    pub fn log_warnings(&self) {
        for w in self.field.regime_warnings() {
            log::warn!("{w}");
        }
        for input in [&self.target, &self.competitor] {
            if input.clipped_by_grid(self.field.field_size) {
                log::warn!("input `{}` (p = {}, w = {}) is clipped by the grid edge", input.label, input.p, input.w);
            }
        }
    }

    /// Canonical TOML form of the fully resolved config.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("RunConfig always serializes")
    }
}

fn merge(base: &mut toml::Table, overrides: toml::Table) {
    for (key, value) in overrides {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

/// Reads a config file. Missing keys take the bundled defaults.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunConfig::from_toml_str(&text).map_err(|e| match e {
        Error::ConfigParse { message, .. } => Error::ConfigParse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let c = RunConfig::from_toml_str("").unwrap();
        let f = &c.field;
        assert_eq!((f.tau, f.h, f.beta), (20.0, -5.0, 4.0));
        assert_eq!((f.c_exc, f.c_inh, f.c_glob), (15.0, 5.0, 0.9));
        assert_eq!((f.sigma_exc, f.sigma_inh, f.q), (5.0, 12.5, 1.0));
        assert_eq!((f.field_size, f.dt, f.n_steps), (200, 1.0, 120));
        assert_eq!(f.initial_level, None);
        assert_eq!((c.target.a, c.target.p, c.target.w), (6.0, 70.0, 30.0));
        assert_eq!((c.competitor.p, c.competitor.w), (20.0, 30.0));
        assert_eq!(c.n_trials, 500);
        assert_eq!(c.readout, ReadoutMethod::Argmax);
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn partial_override_keeps_other_defaults() {
        let c = RunConfig::from_toml_str("[field]\nq = 0.0\n[competitor]\na = -3.0\n").unwrap();
        assert_eq!(c.field.q, 0.0);
        assert_eq!(c.field.tau, 20.0);
        assert_eq!(c.competitor.a, -3.0);
        assert_eq!(c.competitor.p, 20.0);
    }

    #[test]
    fn invalid_values_name_the_key() {
        let err = RunConfig::from_toml_str("[field]\ntau = 0.0\n").unwrap_err();
        assert!(err.to_string().contains("tau"), "{err}");
        let err = RunConfig::from_toml_str("[target]\nw = -1.0\n").unwrap_err();
        assert!(err.to_string().contains("target"), "{err}");
        let err = RunConfig::from_toml_str("[sweep.one_d.a_mp]\nstep = 0.0\n").unwrap_err();
        assert!(err.to_string().contains("sweep.one_d.a_mp.step"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml_str("[field]\ntua = 3.0\n").unwrap_err();
        assert!(err.to_string().contains("tua"), "{err}");
    }

    #[test]
    fn canonical_form_round_trips() {
        let c = RunConfig::from_toml_str("master_seed = 9\n[field]\ninitial_level = -4.5\nq = 0.25\n").unwrap();
        let text = c.to_toml_string();
        let again = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_toml_string(), text);
    }

    #[test]
    fn default_grids() {
        let c = RunConfig::default();
        let one = c.sweep.one_d.a_mp.values();
        assert_eq!(one.len(), 21);
        assert_eq!((one[0], one[12], one[20]), (-6.0, 0.0, 4.0));
        assert_eq!(c.sweep.two_d.a_mp.values().len(), 23);
        assert_eq!(c.sweep.two_d.a_target.values().len(), 11);
        assert_eq!(Range::single(-1.5).values(), vec![-1.5]);
    }

    #[test]
    fn missing_file_is_an_io_error() {
        assert!(matches!(load_config(Path::new("/nonexistent/x.toml")), Err(Error::Io { .. })));
    }
}
