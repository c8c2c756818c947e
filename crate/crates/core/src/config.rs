//! Run configuration: one TOML file with `annotation`, `rollout`, `planner`
//! and `generator` sections, plus `section.key=value` overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::AnnotationConfig;
use crate::planner::PlannerConfig;
use crate::rollout::RolloutConfig;
use crate::scene::SceneSpec;

/// Environment variable naming a default config file.
pub const CONFIG_ENV: &str = "FLOWNAV_CONFIG";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub annotation: AnnotationConfig,
    pub rollout: RolloutConfig,
    pub planner: PlannerConfig,
    pub generator: SceneSpec,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Reads `path`, or the file named by `FLOWNAV_CONFIG`, or the defaults.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::from_file(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::from_file(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.annotation.validate()?;
        self.rollout.validate()?;
        self.planner.validate()?;
        self.generator.validate()
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Applies one `section.key=value` override. The value is read as a TOML
    /// literal when it parses as one and as a bare string otherwise.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
        let (section, field) = key
            .trim()
            .split_once('.')
            .ok_or_else(|| Error::Config(format!("override key {key:?} is not section.key")))?;
        let raw = raw.trim();
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));

        let mut root = toml::Table::try_from(&*self).map_err(|e| Error::Config(e.to_string()))?;
        let table = root
            .get_mut(section)
            .and_then(toml::Value::as_table_mut)
            .ok_or_else(|| Error::Config(format!("unknown config section {section:?}")))?;
        table.insert(field.to_string(), value);
        let updated: RunConfig = toml::Value::Table(root)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("override {assignment:?}: {e}")))?;
        updated.validate()?;
        *self = updated;
        Ok(())
    }

    pub fn apply_overrides<S: AsRef<str>>(&mut self, assignments: &[S]) -> Result<()> {
        assignments
            .iter()
            .try_for_each(|a| self.apply_override(a.as_ref()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rollout::RolloutMode;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
        assert_eq!(cfg.rollout.alpha, 10.0);
        assert_eq!(cfg.rollout.beta, 0.5);
        assert_eq!(cfg.planner.grid_size, 128);
    }

    #[test]
    fn partial_file_keeps_other_defaults() {
        let cfg =
            RunConfig::from_toml_str("[rollout]\nsteps = 50\nmode = \"unit_speed\"\n").unwrap();
        assert_eq!(cfg.rollout.steps, 50);
        assert_eq!(cfg.rollout.mode, RolloutMode::UnitSpeed);
        assert_eq!(cfg.annotation, AnnotationConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml_str("[rollout]\nstepz = 50\n").is_err());
        assert!(RunConfig::from_toml_str("[extra]\na = 1\n").is_err());
        let mut cfg = RunConfig::default();
        assert!(cfg.apply_override("rollout.stepz=3").is_err());
        assert!(cfg.apply_override("nosection.steps=3").is_err());
        assert!(cfg.apply_override("rollout.steps").is_err());
    }

    #[test]
    fn overrides() {
        let mut cfg = RunConfig::default();
        cfg.apply_overrides(&[
            "rollout.mode=raw_inverse",
            "annotation.w_obs=20",
            "generator.n_rooms = 2",
        ])
        .unwrap();
        assert_eq!(cfg.rollout.mode, RolloutMode::RawInverse);
        assert_eq!(cfg.annotation.w_obs, 20.0);
        assert_eq!(cfg.generator.n_rooms, 2);
        // invalid values leave the config untouched
        let before = cfg.clone();
        assert!(cfg.apply_override("rollout.steps=0").is_err());
        assert_eq!(cfg, before);
    }
}
