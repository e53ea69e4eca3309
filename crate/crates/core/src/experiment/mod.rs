//! Sweeps over privacy level and confidence on a held-out split, producing
//! tidy tables of accuracy, explanation distance and true-classifier margins.

mod config;
pub mod stats;
mod sweeps;
mod table;

pub use config::{default_beta_grid, default_p_grid, ExperimentConfig, MapChoice, SplitConfig};
pub use sweeps::{
    run_accuracy_sweep, run_convergence_trace, run_distance_sweep_beta, run_distance_sweep_p,
    run_violation_stats,
};
pub use table::{emit, Cell, Format, SweepRecord, Table};

use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{apply_normalizer, fit_normalizer, load_wdbc, split, Dataset, Label, NormalizationParams, SplitSpec};
use crate::error::{Error, ErrorKind, Result};
use crate::explain::{
    explain_nonrobust_linear, explain_robust_bisection_toward, explain_robust_linear, find_prototype,
    Explanation, ExplanationRequest, Prototype, PrototypeSearch,
};
use crate::features::{make_identity, make_random_fourier, FeatureMap};
use crate::privacy::{privatize, PrivateRelease};
use crate::svm::{accuracy_mapped, train_dual, SvmModel};
use config::TAG_SAMPLE;

/// Everything a sweep needs that does not depend on the noise draw.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: ExperimentConfig,
    pub normalizer: NormalizationParams,
    /// Standardized training split.
    pub train: Dataset,
    /// Standardized test split.
    pub test: Dataset,
    pub model: SvmModel,
    test_phi: Array2<f64>,
    instances: Vec<usize>,
}

pub(crate) fn build_map(config: &ExperimentConfig, input_dim: usize) -> Result<FeatureMap> {
    match &config.map {
        MapChoice::Identity => make_identity(input_dim),
        MapChoice::RandomFourier { features, gamma, .. } => make_random_fourier(
            input_dim,
            *features,
            gamma.unwrap_or(1.0 / input_dim as f64),
            config.map_seed(),
        ),
    }
}

impl Pipeline {
    pub fn prepare(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let data = load_wdbc(&config.dataset_path)?;
        Self::from_dataset(config, &data)
    }

    /// Split, standardize with training statistics, map and train.
    pub fn from_dataset(config: &ExperimentConfig, data: &Dataset) -> Result<Self> {
        config.validate()?;
        let spec = SplitSpec {
            train_fraction: config.split.train_fraction,
            seed: config.split_seed(),
        };
        let (train_raw, test_raw) = split(data, &spec)?;
        let normalizer = fit_normalizer(&train_raw)?;
        let train = apply_normalizer(&train_raw, &normalizer)?;
        let test = apply_normalizer(&test_raw, &normalizer)?;
        let map = build_map(config, data.n_features())?;
        let model = train_dual(&train, &map, &config.svm)?.without_alphas();
        let test_phi = map.transform(test.features().view())?;

        let mut instances: Vec<usize> = (0..test.len()).collect();
        if let Some(k) = config.sample_size.filter(|&k| k < test.len()) {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed(&[TAG_SAMPLE]));
            instances.shuffle(&mut rng);
            instances.truncate(k);
            instances.sort_unstable();
        }
        Ok(Self {
            config: config.clone(),
            normalizer,
            train,
            test,
            model,
            test_phi,
            instances,
        })
    }

    /// Test-set indices that the distance and margin sweeps explain.
    pub fn instances(&self) -> &[usize] {
        &self.instances
    }

    pub fn map(&self) -> &FeatureMap {
        &self.model.map
    }

    pub fn release(&self, beta: f64, seed: u64) -> Result<PrivateRelease> {
        privatize(&self.model, beta, seed)
    }

    pub fn baseline_accuracy(&self) -> f64 {
        accuracy_mapped(self.test_phi.view(), self.test.labels(), self.model.weights.view())
    }

    pub fn test_accuracy(&self, release: &PrivateRelease) -> f64 {
        accuracy_mapped(self.test_phi.view(), self.test.labels(), release.w_tilde.view())
    }

    /// `y f(x, w*)` under the non-private weights.
    pub fn true_margin(&self, x: ArrayView1<'_, f64>, label: Label) -> Result<f64> {
        Ok(label.sign() * self.model.decision_value(x)?)
    }

    pub fn explainer<'a>(&'a self, release: &'a PrivateRelease, p: f64, seed: u64) -> CellExplainer<'a> {
        CellExplainer {
            pipeline: self,
            release,
            p,
            seed,
            prototypes: [None, None],
        }
    }
}

/// Explains instances against one release at one confidence level, finding
/// prototypes on first use.
pub struct CellExplainer<'a> {
    pipeline: &'a Pipeline,
    release: &'a PrivateRelease,
    p: f64,
    seed: u64,
    prototypes: [Option<Result<Prototype>>; 2],
}

/// Failures that exclude an instance from a sweep instead of aborting it.
pub fn is_exclusion(err: &Error) -> bool {
    err.kind() == ErrorKind::Numerical
}

/// Rebuilds a cached prototype failure for each instance it excludes.
fn replay(err: &Error) -> Error {
    match err {
        Error::PrototypeNotFound { class, best_margin } => Error::PrototypeNotFound {
            class: *class,
            best_margin: *best_margin,
        },
        other => Error::Precondition(other.to_string()),
    }
}

impl<'a> CellExplainer<'a> {
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Prototype of `class`, or the error from searching for it.
    pub fn prototype(&mut self, class: Label) -> std::result::Result<&Prototype, &Error> {
        let slot = match class {
            Label::Positive => 0,
            Label::Negative => 1,
        };
        let (pipeline, release, p, seed) = (self.pipeline, self.release, self.p, self.seed);
        self.prototypes[slot]
            .get_or_insert_with(|| {
                let search = PrototypeSearch {
                    retry_budget: pipeline.config.prototype_budget,
                    seed: crate::rng::derive_seed(seed, &[slot as u64]),
                };
                find_prototype(&pipeline.train, release, p, class, &search)
            })
            .as_ref()
    }

    /// Explanation of test instance `index`. The closed forms are used for the
    /// identity map, bisection otherwise; `p = 0.5` gives the non-robust one.
    pub fn explain(&mut self, index: usize) -> Result<Explanation> {
        self.explain_point(self.pipeline.test.row(index).to_owned())
    }

    /// Explanation of a standardized feature vector.
    pub fn explain_point(&mut self, x_prime: Array1<f64>) -> Result<Explanation> {
        let request = ExplanationRequest::new(x_prime, self.release, self.p)?;
        if self.release.map.is_identity() {
            return if self.p == 0.5 {
                explain_nonrobust_linear(&request, self.release)
            } else {
                explain_robust_linear(&request, self.release)
            };
        }
        let bisection = self.pipeline.config.bisection;
        let release = self.release;
        let z = match self.prototype(request.label.opposite()) {
            Ok(proto) => proto.point.clone(),
            Err(e) => return Err(replay(e)),
        };
        explain_robust_bisection_toward(&request, release, z.view(), &bisection)
    }
}
