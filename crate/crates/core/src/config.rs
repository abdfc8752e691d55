// SPDX-License-Identifier: Apache-2.0

//! Flat JSON run configuration shared by every subcommand.
//!
//! All keys are optional and default to the library defaults. `key=value`
//! overrides are applied to the JSON document before it is typed, so an
//! override is checked exactly like a key in the file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::datagen::GenConfig;
use crate::error::{Error, Result};
use crate::eval::{ExperimentSpec, Method};
use crate::metapath::DEFAULT_METAPATHS;
use crate::pipeline::WeightConfig;
use crate::propagate::{PropagationConfig, SolverKind};
use crate::weights::{SvrConfig, TargetMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub metapaths: Vec<String>,

    pub epsilon: f64,
    #[serde(rename = "C")]
    pub penalty: f64,
    pub svr_max_iter: usize,
    pub svr_tol: f64,
    pub max_pairs: usize,
    pub target_mode: TargetMode,

    pub lambda: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub solver: SolverKind,
    pub closed_max_n: usize,

    pub n_users: usize,
    pub n_apps: usize,
    pub n_types: usize,
    pub n_classes: u32,
    pub types_per_app_min: usize,
    pub types_per_app_max: usize,
    pub mean_apps_per_user: f64,
    pub affinity: f64,
    pub max_clicks_per_edge: u32,
    pub clicks_per_lookup: f64,
    pub gen_seed: u64,

    pub fractions: Vec<f64>,
    pub repeats: usize,
    pub methods: Vec<Method>,
    pub knn_k: usize,
    pub spectral_iters: usize,
    pub rng_seed: u64,

    /// Dataset directory; when absent, commands that need data generate it
    /// from the generator keys.
    pub data: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let svr = SvrConfig::default();
        let weights = WeightConfig::default();
        let prop = PropagationConfig::default();
        let gen = GenConfig::default();
        let spec = ExperimentSpec::default();
        RunConfig {
            metapaths: DEFAULT_METAPATHS.iter().map(|s| s.to_string()).collect(),
            epsilon: svr.epsilon,
            penalty: svr.penalty,
            svr_max_iter: svr.max_iter,
            svr_tol: svr.tolerance,
            max_pairs: weights.max_pairs,
            target_mode: weights.target_mode,
            lambda: prop.lambda,
            tol: prop.tol,
            max_iter: prop.max_iter,
            solver: prop.solver,
            closed_max_n: prop.closed_max_n,
            n_users: gen.n_users,
            n_apps: gen.n_apps,
            n_types: gen.n_types,
            n_classes: gen.n_classes,
            types_per_app_min: gen.types_per_app.0,
            types_per_app_max: gen.types_per_app.1,
            mean_apps_per_user: gen.mean_apps_per_user,
            affinity: gen.affinity,
            max_clicks_per_edge: gen.max_clicks_per_edge,
            clicks_per_lookup: gen.clicks_per_lookup,
            gen_seed: gen.rng_seed,
            fractions: spec.fractions,
            repeats: spec.repeats,
            methods: spec.methods,
            knn_k: spec.knn_k,
            spectral_iters: spec.spectral_iters,
            rng_seed: spec.rng_seed,
            data: None,
        }
    }
}

impl RunConfig {
    pub fn svr(&self) -> SvrConfig {
        SvrConfig {
            epsilon: self.epsilon,
            penalty: self.penalty,
            max_iter: self.svr_max_iter,
            tolerance: self.svr_tol,
        }
    }

    pub fn weights(&self) -> WeightConfig {
        WeightConfig {
            svr: self.svr(),
            max_pairs: self.max_pairs,
            target_mode: self.target_mode,
        }
    }

    pub fn propagation(&self) -> PropagationConfig {
        PropagationConfig {
            lambda: self.lambda,
            tol: self.tol,
            max_iter: self.max_iter,
            solver: self.solver,
            closed_max_n: self.closed_max_n,
        }
    }

    pub fn generator(&self) -> GenConfig {
        GenConfig {
            n_users: self.n_users,
            n_apps: self.n_apps,
            n_types: self.n_types,
            n_classes: self.n_classes,
            types_per_app: (self.types_per_app_min, self.types_per_app_max),
            mean_apps_per_user: self.mean_apps_per_user,
            affinity: self.affinity,
            max_clicks_per_edge: self.max_clicks_per_edge,
            clicks_per_lookup: self.clicks_per_lookup,
            rng_seed: self.gen_seed,
        }
    }

    pub fn experiment(&self) -> ExperimentSpec {
        ExperimentSpec {
            fractions: self.fractions.clone(),
            repeats: self.repeats,
            methods: self.methods.clone(),
            weights: self.weights(),
            propagation: self.propagation(),
            knn_k: self.knn_k,
            spectral_iters: self.spectral_iters,
            rng_seed: self.rng_seed,
        }
    }

    /// Checks every section, including the generator keys.
    pub fn validate(&self) -> Result<()> {
        if self.metapaths.is_empty() {
            return Err(Error::Config("metapaths must list at least one meta-path".into()));
        }
        self.experiment().validate()?;
        self.generator().validate()
    }

    /// Checks the data directory, when one is configured, holds the files a
    /// dataset needs.
    pub fn check_data(&self) -> Result<()> {
        if let Some(dir) = &self.data {
            for f in [crate::hin::io::SCHEMA_FILE, crate::hin::io::NODES_FILE, crate::hin::io::EDGES_FILE] {
                if !dir.join(f).is_file() {
                    return Err(Error::Config(format!("data directory {} has no {f}", dir.display())));
                }
            }
        }
        Ok(())
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Reads a config file, or the `config` member of a manifest written by an
/// earlier run.
pub fn read_config_value(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: invalid JSON: {e}", path.display())))?;
    match value {
        Value::Object(mut map) if map.contains_key(crate::manifest::MANIFEST_MARKER) => map
            .remove("config")
            .ok_or_else(|| Error::Config(format!("{}: manifest has no config", path.display()))),
        Value::Object(_) => Ok(value),
        _ => Err(Error::Config(format!("{}: config must be a JSON object", path.display()))),
    }
}

/// Applies `key=value` overrides. Values are parsed as JSON and fall back to
/// a plain string, so `--set solver=closed` and `--set fractions=[0.1,0.5]`
/// both work.
pub fn apply_overrides(value: &mut Value, overrides: &[String]) -> Result<()> {
    let map = value
        .as_object_mut()
        .ok_or_else(|| Error::Config("config must be a JSON object".into()))?;
    for o in overrides {
        let (key, raw) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Config(format!("override `{o}` has an empty key")));
        }
        let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        map.insert(key.to_string(), parsed);
    }
    Ok(())
}

/// Types and validates a config document.
pub fn from_value(value: Value) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Loads the optional config file, applies overrides and validates.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut value = match path {
        Some(p) => read_config_value(p)?,
        None => Value::Object(Map::new()),
    };
    apply_overrides(&mut value, overrides)?;
    from_value(value)
}
