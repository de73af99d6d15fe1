//! Run settings merged from defaults, an optional TOML config file and
//! command-line flags, in increasing order of precedence.

use std::path::Path;

use kscc::{KernelSpec, KsccConfig};
use serde::Deserialize;

use crate::error::{CliError, Result};

/// Every setting that a config file or a flag may supply.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub kernel: Option<KernelSpec>,
    pub ell: Option<usize>,
    pub k: Option<usize>,
    pub c: Option<usize>,
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub noise: Option<f64>,
    pub threads: Option<usize>,
    pub max_outer_iters: Option<usize>,
    pub kls_rel_tol: Option<f64>,
    pub restarts_kmeans: Option<usize>,
    pub outer_restarts: Option<usize>,
    pub resweep_sigma: Option<bool>,
}

macro_rules! overlay_fields {
    ($base:ident, $top:ident, $($f:ident),*) => {
        Settings { $($f: $top.$f.or($base.$f)),* }
    };
}

impl Settings {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Fields set in `top` win over those in `self`.
    pub fn overlay(self, top: Settings) -> Settings {
        let base = self;
        overlay_fields!(
            base, top, kernel, ell, k, c, seed, runs, noise, threads, max_outer_iters, kls_rel_tol,
            restarts_kmeans, outer_restarts, resweep_sigma
        )
    }

    pub fn require_kernel(&self) -> Result<KernelSpec> {
        self.kernel.ok_or_else(|| CliError::Usage("no kernel given (--kernel or config `kernel`)".into()))
    }

    /// Clustering parameters for data in `R^dim`; `k_fallback` is used when
    /// neither flags nor config name a cluster count.
    pub fn kscc_config(&self, kernel: KernelSpec, dim: usize, k_fallback: Option<usize>) -> Result<KsccConfig> {
        let k = self
            .k
            .or(k_fallback)
            .ok_or_else(|| CliError::Usage("no cluster count given (--k or config `k`)".into()))?;
        let ell = self.ell.unwrap_or_else(|| kernel.default_ell(dim));
        let mut cfg = KsccConfig::new(ell, k);
        if let Some(c) = self.c {
            cfg.c = c;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(v) = self.max_outer_iters {
            cfg.max_outer_iters = v;
        }
        if let Some(v) = self.kls_rel_tol {
            cfg.kls_rel_tol = v;
        }
        if let Some(v) = self.restarts_kmeans {
            cfg.restarts_kmeans = v;
        }
        if let Some(v) = self.outer_restarts {
            cfg.outer_restarts = v;
        }
        if let Some(v) = self.resweep_sigma {
            cfg.resweep_sigma = v;
        }
        Ok(cfg)
    }
}

/// Checks a configuration against `n` points, reporting parameter problems
/// as usage errors.
pub fn validate_config(cfg: &KsccConfig, n: usize) -> Result<()> {
    cfg.validate(n).map_err(|e| match e {
        kscc::KsccError::TooFewPoints { n, ell } => CliError::TooFewPoints { n, ell },
        other => CliError::Usage(other.to_string()),
    })
}
