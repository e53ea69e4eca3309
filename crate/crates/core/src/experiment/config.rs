use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::BisectionConfig;
use crate::rng::derive_seed;
use crate::svm::SvmConfig;

pub(crate) const TAG_SPLIT: u64 = 1;
pub(crate) const TAG_MAP: u64 = 2;
pub(crate) const TAG_SAMPLE: u64 = 3;
pub(crate) const TAG_ACCURACY: u64 = 10;
pub(crate) const TAG_EXPLAIN: u64 = 11;
pub(crate) const TAG_P_SWEEP: u64 = 12;
pub(crate) const TAG_TRACE: u64 = 13;
pub(crate) const TAG_RELEASE: u64 = 14;
pub(crate) const TAG_VALIDATE: u64 = 15;
pub(crate) const TAG_PROTOTYPE: u64 = 20;
pub(crate) const TAG_BOOTSTRAP: u64 = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub train_fraction: f64,
    /// Derived from the master seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapChoice {
    Identity,
    RandomFourier {
        #[serde(default = "default_features")]
        features: usize,
        /// Defaults to `1 / L`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

fn default_features() -> usize {
    100
}

impl Default for MapChoice {
    fn default() -> Self {
        MapChoice::RandomFourier {
            features: default_features(),
            gamma: None,
            seed: None,
        }
    }
}

/// Log-spaced grid from 0.01 to 100, two points per decade.
pub fn default_beta_grid() -> Vec<f64> {
    (0..=8).map(|k| 10f64.powf(-2.0 + 0.5 * k as f64)).collect()
}

pub fn default_p_grid() -> Vec<f64> {
    vec![0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset_path: PathBuf,
    pub split: SplitConfig,
    pub svm: SvmConfig,
    pub map: MapChoice,
    pub beta_grid: Vec<f64>,
    pub p_grid: Vec<f64>,
    pub noise_realizations: usize,
    /// Confidence used by the β sweeps and the convergence trace.
    pub p_default: f64,
    /// Privacy level held fixed by the p sweep and the convergence trace.
    pub beta_default: f64,
    pub master_seed: u64,
    /// Explain only this many test instances (seeded subset); all when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<usize>,
    pub bisection: BisectionConfig,
    pub prototype_budget: usize,
    pub bootstrap_resamples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset_path: PathBuf::from("data/wdbc.data"),
            split: SplitConfig::default(),
            svm: SvmConfig::default(),
            map: MapChoice::default(),
            beta_grid: default_beta_grid(),
            p_grid: default_p_grid(),
            noise_realizations: 200,
            p_default: 0.9,
            beta_default: 5.0,
            master_seed: 2021,
            sample_size: None,
            bisection: BisectionConfig::default(),
            prototype_budget: 1000,
            bootstrap_resamples: 200,
        }
    }
}

fn ascending(grid: &[f64]) -> bool {
    grid.windows(2).all(|w| w[0] < w[1])
}

impl ExperimentConfig {
    /// Reads JSON, or TOML when the extension is `.toml`. A relative
    /// `dataset_path` is resolved against the config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        if cfg.dataset_path.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.dataset_path = dir.join(&cfg.dataset_path);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.beta_grid.is_empty() || self.p_grid.is_empty() {
            return bad("beta_grid and p_grid must be nonempty".into());
        }
        if !ascending(&self.beta_grid) || !ascending(&self.p_grid) {
            return bad("grids must be sorted strictly ascending".into());
        }
        if self.beta_grid.iter().any(|&b| !(b > 0.0)) || !(self.beta_default > 0.0) {
            return bad("privacy levels must be positive".into());
        }
        let valid_p = |p: f64| (0.5..1.0).contains(&p);
        if !self.p_grid.iter().all(|&p| valid_p(p)) || !valid_p(self.p_default) {
            return bad("confidence levels must lie in [0.5, 1)".into());
        }
        if self.noise_realizations == 0 {
            return bad("noise_realizations must be >= 1".into());
        }
        if self.sample_size == Some(0) {
            return bad("sample_size must be >= 1".into());
        }
        if let MapChoice::RandomFourier { features, gamma, .. } = &self.map {
            if *features == 0 {
                return bad("random Fourier map needs features >= 1".into());
            }
            if gamma.is_some_and(|g| !(g > 0.0)) {
                return bad("gamma must be positive".into());
            }
        }
        self.svm.validate()
    }

    pub(crate) fn seed(&self, path: &[u64]) -> u64 {
        derive_seed(self.master_seed, path)
    }

    pub fn split_seed(&self) -> u64 {
        self.split.seed.unwrap_or_else(|| self.seed(&[TAG_SPLIT]))
    }

    /// Noise seed for a standalone release.
    pub fn release_seed(&self) -> u64 {
        self.seed(&[TAG_RELEASE])
    }

    /// Prototype search seed for a standalone explanation.
    pub fn prototype_seed(&self) -> u64 {
        self.seed(&[TAG_PROTOTYPE, TAG_RELEASE])
    }

    /// Seed of the Monte Carlo flip-probability check.
    pub fn seed_for_validation(&self) -> u64 {
        self.seed(&[TAG_VALIDATE])
    }

    pub fn map_seed(&self) -> u64 {
        match &self.map {
            MapChoice::RandomFourier { seed: Some(s), .. } => *s,
            _ => self.seed(&[TAG_MAP]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_spans_four_decades() {
        let g = default_beta_grid();
        assert_eq!(g.len(), 9);
        assert!((g[0] - 0.01).abs() < 1e-15);
        assert!((g[8] - 100.0).abs() < 1e-12);
        assert!(ascending(&g));
    }

    #[test]
    fn validation_rejects_unsorted_grids() {
        let mut c = ExperimentConfig::default();
        assert!(c.validate().is_ok());
        c.beta_grid = vec![1.0, 0.5];
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.p_grid = vec![0.5, 1.0];
        assert!(c.validate().is_err());
    }

    #[test]
    fn toml_and_json_agree() {
        let dir = tempfile::tempdir().unwrap();
        let toml_path = dir.path().join("c.toml");
        std::fs::write(
            &toml_path,
            "dataset_path = \"wdbc.data\"\nnoise_realizations = 3\nmaster_seed = 9\n\n[map]\nkind = \"random_fourier\"\nfeatures = 20\n",
        )
        .unwrap();
        let json_path = dir.path().join("c.json");
        std::fs::write(
            &json_path,
            r#"{"dataset_path":"wdbc.data","noise_realizations":3,"master_seed":9,"map":{"kind":"random_fourier","features":20}}"#,
        )
        .unwrap();
        let a = ExperimentConfig::load(&toml_path).unwrap();
        let b = ExperimentConfig::load(&json_path).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dataset_path, dir.path().join("wdbc.data"));
        assert_eq!(a.split_seed(), b.split_seed());
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"betas":[1.0]}"#).unwrap();
        assert!(matches!(ExperimentConfig::load(&p), Err(Error::Config(_))));
    }
}
