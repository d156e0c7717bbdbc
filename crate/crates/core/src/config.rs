//! TOML run configuration.
//!
//! ```toml
//! [scenario]
//! n = 400
//! true_hr = 0.6
//! target_censor = 0.25
//! target_switch = 0.5
//! seed = 7
//!
//! [factorial]
//! reps = 200
//!
//! [srp]
//! k_levels = 1
//! ```
//!
//! Every section and key is optional. Unknown keys and bad values are
//! reported by their dotted path, e.g. `scenario.target_switch`.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::adjust::{ForestConfig, GEstimationConfig, IpcwConfig, IpeConfig, MethodConfig};
use crate::error::{Error, Result};
use crate::eval::FactorialConfig;
use crate::sim::ScenarioConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub factorial: FactorialConfig,
    pub ipcw: IpcwConfig,
    pub gest: GEstimationConfig,
    pub srp: GEstimationConfig,
    pub ipe: IpeConfig,
    pub forest: ForestConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = MethodConfig::default();
        RunConfig {
            scenario: ScenarioConfig::default(),
            factorial: FactorialConfig::default(),
            ipcw: m.ipcw,
            gest: m.gest,
            srp: m.srp,
            ipe: m.ipe,
            forest: m.forest,
        }
    }
}

/// Keys that default to absent and so do not show up in a serialized default.
const OPTIONAL_KEYS: &[&str] = &[
    "gest.bootstrap",
    "srp.bootstrap",
    "forest.mtry",
    "forest.max_depth",
];

impl RunConfig {
    pub fn methods(&self) -> MethodConfig {
        MethodConfig {
            ipcw: self.ipcw.clone(),
            gest: self.gest.clone(),
            srp: self.srp.clone(),
            ipe: self.ipe.clone(),
            forest: self.forest.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.factorial.validate()?;
        self.methods().validate()
    }

    /// Parses TOML text, naming the offending key on failure.
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<file>", e.message().to_string()))?;
        let defaults = Table::try_from(RunConfig::default()).expect("default config serializes");
        check_keys(&table, &defaults, "")?;
        locate_bad_value(&table, &defaults)?;
        let cfg: RunConfig = Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config("<file>", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reads a TOML config, or the config snapshot inside a run manifest
    /// when the file ends in `.json`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Error::config("<manifest>", e.to_string()))?;
            let cfg = v
                .get("config")
                .ok_or_else(|| Error::config("config", "manifest has no config snapshot"))?;
            let cfg: RunConfig =
                serde_json::from_value(cfg.clone()).map_err(|e| Error::config("config", e.to_string()))?;
            cfg.validate()?;
            return Ok(cfg);
        }
        Self::from_toml(&text)
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn check_keys(user: &Table, defaults: &Table, prefix: &str) -> Result<()> {
    for (k, v) in user {
        let path = join(prefix, k);
        if OPTIONAL_KEYS.contains(&path.as_str()) {
            continue;
        }
        match (defaults.get(k), v) {
            (None, _) => return Err(Error::config(path, "unknown key")),
            (Some(Value::Table(d)), Value::Table(u)) => check_keys(u, d, &path)?,
            (Some(Value::Table(_)), _) => return Err(Error::config(path, "expected a table")),
            _ => {}
        }
    }
    Ok(())
}

/// Finds the first key whose value fails to deserialize by substituting it
/// alone into the default section.
fn locate_bad_value(user: &Table, defaults: &Table) -> Result<()> {
    fn section<T: DeserializeOwned + Serialize + Default>(
        name: &str,
        user: &Table,
        defaults: &Table,
    ) -> Result<()> {
        let Some(Value::Table(u)) = user.get(name) else {
            return Ok(());
        };
        let Some(Value::Table(d)) = defaults.get(name) else {
            return Ok(());
        };
        for (k, v) in u {
            let mut t = d.clone();
            t.insert(k.clone(), v.clone());
            if let Err(e) = Value::Table(t).try_into::<T>() {
                return Err(Error::config(format!("{name}.{k}"), e.message().to_string()));
            }
        }
        Ok(())
    }
    section::<ScenarioConfig>("scenario", user, defaults)?;
    section::<FactorialConfig>("factorial", user, defaults)?;
    section::<IpcwConfig>("ipcw", user, defaults)?;
    section::<GEstimationConfig>("gest", user, defaults)?;
    section::<GEstimationConfig>("srp", user, defaults)?;
    section::<IpeConfig>("ipe", user, defaults)?;
    section::<ForestConfig>("forest", user, defaults)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_of(r: Result<RunConfig>) -> String {
        match r {
            Err(Error::Config { key, .. }) => key,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn empty_is_default() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        c.scenario.target_switch = 0.75;
        c.forest.mtry = Some(2);
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn errors_name_the_key() {
        assert_eq!(key_of(RunConfig::from_toml("[scenario]\ntarget_switch = 1.2")), "scenario.target_switch");
        assert_eq!(key_of(RunConfig::from_toml("[scenario]\nswitchy = 1")), "scenario.switchy");
        assert_eq!(key_of(RunConfig::from_toml("[forest]\nn_trees = \"many\"")), "forest.n_trees");
        assert_eq!(key_of(RunConfig::from_toml("[srp]\ngrid_step = -1.0")), "srp.grid_step");
        assert_eq!(key_of(RunConfig::from_toml("[factorial]\nmethods = [\"xyz\"]")), "factorial.methods");
    }
}
