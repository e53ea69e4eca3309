//! Laplace-mechanism release of SVM weights.
//!
//! The released vector is `w̃ = w* + μ` with `μ_i ~ Lap(0, λ)` i.i.d.; choosing
//! `λ >= 4 C κ sqrt(F) / (β n)` gives β-differential privacy. Only `w̃`, the
//! public feature-map parameters and `(λ, β)` leave this module; the noise seed
//! is deliberately absent from a release since it would reveal `μ`.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::features::FeatureMap;
use crate::rng::IndexedUniform;
use crate::svm::{train_dual, SvmConfig, SvmModel};

/// Inverse CDF of `Lap(0, λ)` at `u ∈ (0, 1)`.
pub fn laplace_inverse_cdf(u: f64, lambda: f64) -> f64 {
    let c = u - 0.5;
    if c == 0.0 {
        return 0.0;
    }
    -lambda * c.signum() * (1.0 - 2.0 * c.abs()).ln()
}

/// `count` i.i.d. `Lap(0, λ)` draws, indices `0..count` of the stream for `seed`.
pub fn laplace_sample(lambda: f64, count: usize, seed: u64) -> Result<Array1<f64>> {
    laplace_sample_range(lambda, seed, 0, count)
}

/// Draws `start..start + count` of the stream for `seed`.
///
/// Any partition of an index range produces the same values as one sequential call.
/// `λ = 0` yields exact zeros.
pub fn laplace_sample_range(lambda: f64, seed: u64, start: u64, count: usize) -> Result<Array1<f64>> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Laplace scale must be finite and >= 0, got {lambda}"
        )));
    }
    let mut u = IndexedUniform::new(seed);
    u.seek(start);
    Ok(Array1::from_shape_simple_fn(count, || {
        laplace_inverse_cdf(u.next_open01(), lambda)
    }))
}

/// Minimal noise scale `4 C κ sqrt(F) / (β n)` for β-differential privacy.
pub fn calibrate_lambda(c: f64, kappa: f64, features: usize, beta: f64, n: usize) -> f64 {
    4.0 * c * kappa * (features as f64).sqrt() / (beta * n as f64)
}

/// Largest λ keeping the release (ε, δ)-useful: `ε / (2 Φ (F - ln δ))`.
pub fn usefulness_max_lambda(epsilon: f64, delta: f64, phi_max: f64, features: usize) -> f64 {
    epsilon / (2.0 * phi_max * (features as f64 - delta.ln()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub lambda: f64,
    pub beta: f64,
    pub seed: u64,
}

impl NoiseSpec {
    /// Noise calibrated for `model` at privacy level `beta`.
    pub fn calibrated(model: &SvmModel, beta: f64, seed: u64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be > 0, got {beta}")));
        }
        let bounds = model.map.bounds(model.domain_radius)?;
        let lambda = calibrate_lambda(
            model.config.c,
            bounds.kappa,
            model.map.output_dim(),
            beta,
            model.n_train,
        );
        Ok(Self { lambda, beta, seed })
    }
}

/// What is published: perturbed weights, the noise scale and the map parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivateRelease {
    #[serde(with = "crate::wire::array1")]
    pub w_tilde: Array1<f64>,
    pub lambda: f64,
    pub beta: f64,
    pub map: FeatureMap,
}

impl PrivateRelease {
    pub fn decision_value(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        crate::svm::decision_value(self.w_tilde.view(), &self.map, x)
    }

    pub fn classify(&self, x: ArrayView1<'_, f64>) -> Result<crate::data::Label> {
        crate::svm::classify(self.w_tilde.view(), &self.map, x)
    }
}

pub fn privatize(model: &SvmModel, beta: f64, seed: u64) -> Result<PrivateRelease> {
    let noise = NoiseSpec::calibrated(model, beta, seed)?;
    privatize_with(model, &noise)
}

pub fn privatize_with(model: &SvmModel, noise: &NoiseSpec) -> Result<PrivateRelease> {
    let mu = laplace_sample(noise.lambda, model.weights.len(), noise.seed)?;
    Ok(PrivateRelease {
        w_tilde: &model.weights + &mu,
        lambda: noise.lambda,
        beta: noise.beta,
        map: model.map.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioViolation {
    pub probe: usize,
    pub log_ratio: f64,
}

/// Outcome of [`dp_inequality_check`]. Ratios are kept in log space.
#[derive(Debug, Clone, PartialEq)]
pub struct DpCheckReport {
    pub probes: usize,
    pub max_log_ratio: f64,
    /// `β + ln(1 + tolerance)`
    pub log_bound: f64,
    /// `||w1 - w2||_1 / λ`, the supremum of the log ratio over all outputs
    pub worst_case_log_ratio: f64,
    pub violations: Vec<RatioViolation>,
}

impl DpCheckReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Empirical spot check of the privacy inequality for one neighboring pair.
///
/// Trains on both datasets, then compares the two product-Laplace output
/// densities at `probes` points drawn from the mechanism (alternately around
/// each trained weight vector). A diagnostic only, not a proof.
#[allow(clippy::too_many_arguments)]
pub fn dp_inequality_check(
    beta: f64,
    lambda: f64,
    first: &Dataset,
    second: &Dataset,
    config: &SvmConfig,
    map: &FeatureMap,
    probes: usize,
    seed: u64,
    tolerance: f64,
) -> Result<DpCheckReport> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be > 0, got {lambda}")));
    }
    check_dim(first.len(), second.len())?;
    check_dim(first.n_features(), second.n_features())?;
    let differing = (0..first.len())
        .filter(|&i| first.row(i) != second.row(i) || first.labels()[i] != second.labels()[i])
        .count();
    if differing > 1 {
        return Err(Error::Precondition(format!(
            "datasets differ in {differing} tuples; neighbors differ in at most one"
        )));
    }
    let w1 = train_dual(first, map, config)?.weights;
    let w2 = train_dual(second, map, config)?.weights;
    let f = w1.len();
    let log_density_gap = |w: &Array1<f64>| -> f64 {
        // ln p1(w) - ln p2(w) for product Laplace densities
        w.iter()
            .zip(w1.iter().zip(&w2))
            .map(|(&wi, (&a, &b))| ((wi - b).abs() - (wi - a).abs()) / lambda)
            .sum()
    };
    let log_bound = beta + tolerance.ln_1p();
    let mut max_log_ratio = 0.0f64;
    let mut violations = Vec::new();
    for probe in 0..probes {
        let center = if probe % 2 == 0 { &w1 } else { &w2 };
        let noise = laplace_sample_range(lambda, seed, (probe * f) as u64, f)?;
        let w = center + &noise;
        let log_ratio = log_density_gap(&w).abs();
        max_log_ratio = max_log_ratio.max(log_ratio);
        if log_ratio > log_bound {
            violations.push(RatioViolation { probe, log_ratio });
        }
    }
    let worst_case_log_ratio = (&w1 - &w2).mapv(f64::abs).sum() / lambda;
    Ok(DpCheckReport {
        probes,
        max_log_ratio,
        log_bound,
        worst_case_log_ratio,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label;
    use crate::features::make_identity;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn inverse_cdf_values() {
        assert_eq!(laplace_inverse_cdf(0.5, 3.0), 0.0);
        assert_abs_diff_eq!(laplace_inverse_cdf(0.75, 1.0), std::f64::consts::LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(laplace_inverse_cdf(0.25, 1.0), -std::f64::consts::LN_2, epsilon = 1e-15);
    }

    #[test]
    fn range_sampling_matches_sequential() {
        let all = laplace_sample(0.7, 50, 9).unwrap();
        let head = laplace_sample_range(0.7, 9, 0, 20).unwrap();
        let tail = laplace_sample_range(0.7, 9, 20, 30).unwrap();
        for i in 0..20 {
            assert_eq!(all[i].to_bits(), head[i].to_bits());
        }
        for i in 0..30 {
            assert_eq!(all[20 + i].to_bits(), tail[i].to_bits());
        }
        assert!(laplace_sample(0.0, 5, 1).unwrap().iter().all(|&v| v == 0.0));
        assert!(laplace_sample(-1.0, 5, 1).is_err());
    }

    #[test]
    fn calibration_arithmetic() {
        let lam = calibrate_lambda(1.0, 2f64.sqrt(), 100, 1.0, 398);
        assert_abs_diff_eq!(lam, 0.142_132, epsilon = 1e-6);
        assert_abs_diff_eq!(calibrate_lambda(1.0, 2f64.sqrt(), 100, 2.0, 398), lam / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(calibrate_lambda(1.0, 2f64.sqrt(), 400, 1.0, 398), lam * 2.0, epsilon = 1e-15);
        assert_eq!(usefulness_max_lambda(1.0, (-1f64).exp(), 0.1, 9), 0.5);
        assert_abs_diff_eq!(usefulness_max_lambda(1.0, 1.0, 0.1, 9), 1.0 / 1.8, epsilon = 1e-15);
    }

    fn tiny_model() -> (Dataset, SvmModel) {
        let d = Dataset::new(
            array![[1.0, 0.5], [-1.0, 0.2], [0.8, -0.4], [-0.6, -0.9]],
            vec![Label::Positive, Label::Negative, Label::Positive, Label::Negative],
        )
        .unwrap();
        let m = train_dual(&d, &make_identity(2).unwrap(), &SvmConfig::default()).unwrap();
        (d, m)
    }

    #[test]
    fn infinite_beta_releases_exact_weights() {
        let (_, m) = tiny_model();
        let r = privatize(&m, f64::INFINITY, 3).unwrap();
        assert_eq!(r.lambda, 0.0);
        assert_eq!(r.w_tilde, m.weights);
    }

    #[test]
    fn seeds_change_weights_not_scale() {
        let (_, m) = tiny_model();
        let a = privatize(&m, 1.0, 1).unwrap();
        let b = privatize(&m, 1.0, 2).unwrap();
        assert_eq!(a.lambda, b.lambda);
        assert_ne!(a.w_tilde, b.w_tilde);
        let expected = calibrate_lambda(1.0, m.domain_radius, 2, 1.0, 4);
        assert_eq!(a.lambda, expected);
    }

    #[test]
    fn release_json_has_only_public_fields() {
        let (_, m) = tiny_model();
        let r = privatize(&m, 1.0, 1).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(keys, ["beta", "lambda", "map", "w_tilde"]);
    }

    #[test]
    fn identical_datasets_have_unit_ratio() {
        let (d, _) = tiny_model();
        let map = make_identity(2).unwrap();
        let rep =
            dp_inequality_check(0.1, 0.05, &d, &d, &SvmConfig::default(), &map, 200, 4, 1e-9).unwrap();
        assert_eq!(rep.max_log_ratio, 0.0);
        assert!(rep.passed());
    }

    #[test]
    fn non_neighbors_are_rejected() {
        let (d, _) = tiny_model();
        let other = Dataset::new(
            array![[9.0, 0.5], [-9.0, 0.2], [0.8, -0.4], [-0.6, -0.9]],
            d.labels().to_vec(),
        )
        .unwrap();
        let map = make_identity(2).unwrap();
        assert!(matches!(
            dp_inequality_check(1.0, 1.0, &d, &other, &SvmConfig::default(), &map, 10, 0, 0.0),
            Err(Error::Precondition(_))
        ));
    }
}
