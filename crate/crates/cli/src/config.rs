use std::path::{Path, PathBuf};

use qiso_core::metric::MetricModel;
use qiso_core::transport::WassersteinOrder;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Settings for catalog verification and the conjecture searches.
///
/// Read from JSON; every field is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Point counts for random actions.
    pub n_min: usize,
    pub n_max: usize,
    pub models: Vec<MetricModel>,
    /// Include the built-in catalog.
    pub builtin: bool,
    /// Keep built-in entries whose name contains one of these; empty keeps all.
    pub include: Vec<String>,
    /// Extra coaction files.
    pub files: Vec<PathBuf>,
    /// Number of random actions, drawn from seeds `seed, seed + 1, ...`.
    pub random_actions: usize,
    /// States sampled per instance for per-state checks.
    pub state_samples: usize,
    /// In-span states tested per instance and order in the span search.
    pub span_samples: usize,
    /// Orders `p`, as numbers or `"inf"`.
    pub p_list: Vec<String>,
    pub seed: u64,
    pub tol: f64,
    /// Stop starting new chunks once this many seconds have passed.
    pub time_budget_secs: Option<f64>,
    pub chunk_size: usize,
    pub jobs: Option<usize>,
    pub output: Option<PathBuf>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            n_min: 3,
            n_max: 6,
            models: vec![MetricModel::ShortestPathGraph, MetricModel::EuclideanSample],
            builtin: true,
            include: Vec::new(),
            files: Vec::new(),
            random_actions: 20,
            state_samples: 16,
            span_samples: 32,
            p_list: ["1", "2", "3", "inf"].map(String::from).to_vec(),
            seed: 0,
            tol: qiso_core::DEFAULT_TOL,
            time_budget_secs: None,
            chunk_size: 8,
            jobs: None,
            output: None,
        }
    }
}

impl SearchConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: SearchConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.n_min < 2 || self.n_min > self.n_max {
            return bad(format!("need 2 <= n_min <= n_max, got {}..={}", self.n_min, self.n_max));
        }
        if self.models.is_empty() {
            return bad("models must not be empty".into());
        }
        if self.p_list.is_empty() {
            return bad("p_list must not be empty".into());
        }
        self.orders()?;
        if self.chunk_size == 0 {
            return bad("chunk_size must be positive".into());
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.time_budget_secs.is_some_and(|t| !(t > 0.0)) {
            return bad("time_budget_secs must be positive".into());
        }
        if !self.builtin && self.files.is_empty() && self.random_actions == 0 {
            return bad("no instances selected".into());
        }
        Ok(())
    }

    /// The parsed orders, sorted increasingly with `inf` last.
    pub fn orders(&self) -> Result<Vec<WassersteinOrder>> {
        let mut out = self
            .p_list
            .iter()
            .map(|s| s.parse::<WassersteinOrder>().map_err(|e| CliError::Config(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        out.sort_by(|a, b| order_key(*a).total_cmp(&order_key(*b)));
        out.dedup();
        Ok(out)
    }
}

pub(crate) fn order_key(o: WassersteinOrder) -> f64 {
    match o {
        WassersteinOrder::Finite(p) => p,
        WassersteinOrder::Infinite => f64::INFINITY,
    }
}
