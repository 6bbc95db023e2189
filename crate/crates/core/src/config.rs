//! Run configuration files. Keys mirror the command-line flags; flags take
//! precedence over file values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable consulted for the seed when neither a flag nor the
/// configuration file provides one.
pub const SEED_ENV: &str = "DENSECRAFT_SEED";

/// A scalar or a list of scalars.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn into_vec(self) -> Vec<T> {
        match self {
            Self::One(v) => vec![v],
            Self::Many(v) => v,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub method: Option<String>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// Lindsey bin count.
    pub k: Option<usize>,
    /// Mixture component counts.
    #[serde(rename = "K")]
    pub big_k: Option<OneOrMany<usize>>,
    /// Dirichlet process truncation level.
    #[serde(rename = "N")]
    pub truncation: Option<usize>,
    pub c: Option<f64>,
    pub nu: Option<f64>,
    /// Half-t scale(s).
    #[serde(rename = "A")]
    pub scale_a: Option<OneOrMany<f64>>,
    pub step_size: Option<f64>,
    pub leapfrog: Option<usize>,
    pub shape_uses_raw_n: Option<bool>,
    pub iters: Option<usize>,
    pub burnin: Option<usize>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub format: Option<String>,
    pub mse_grid: Option<bool>,
    pub density: Option<String>,
    pub n: Option<usize>,
    pub replicates: Option<usize>,
    pub methods: Option<Vec<String>>,
    pub densities: Option<Vec<String>>,
    pub sizes: Option<Vec<usize>>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::File {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&text).map_err(|e| Error::File {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Fills every unset field of `self` from `base`.
    pub fn or(self, base: RunConfig) -> RunConfig {
        RunConfig {
            method: self.method.or(base.method),
            input: self.input.or(base.input),
            output: self.output.or(base.output),
            k: self.k.or(base.k),
            big_k: self.big_k.or(base.big_k),
            truncation: self.truncation.or(base.truncation),
            c: self.c.or(base.c),
            nu: self.nu.or(base.nu),
            scale_a: self.scale_a.or(base.scale_a),
            step_size: self.step_size.or(base.step_size),
            leapfrog: self.leapfrog.or(base.leapfrog),
            shape_uses_raw_n: self.shape_uses_raw_n.or(base.shape_uses_raw_n),
            iters: self.iters.or(base.iters),
            burnin: self.burnin.or(base.burnin),
            seed: self.seed.or(base.seed),
            jobs: self.jobs.or(base.jobs),
            format: self.format.or(base.format),
            mse_grid: self.mse_grid.or(base.mse_grid),
            density: self.density.or(base.density),
            n: self.n.or(base.n),
            replicates: self.replicates.or(base.replicates),
            methods: self.methods.or(base.methods),
            densities: self.densities.or(base.densities),
            sizes: self.sizes.or(base.sizes),
        }
    }

    /// Seed from the configuration, else from [`SEED_ENV`], else 0.
    pub fn resolved_seed(&self) -> Result<u64> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::param(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
            Err(_) => Ok(0),
        }
    }
}
