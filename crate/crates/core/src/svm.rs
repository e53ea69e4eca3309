//! Bias-free hinge-loss SVM trained through its box-constrained dual.
//!
//! The classifier is `f(x) = φ(x) · w` with no intercept, so the dual is
//!
//! ```text
//! maximize   Σ α_i - ½ Σ_ij α_i α_j y_i y_j φ(x_i)·φ(x_j)
//! subject to 0 <= α_i <= C / n
//! ```
//!
//! with no equality constraint, and plain coordinate ascent with exact
//! per-coordinate maximization followed by clipping is a valid solver.
//! Primal weights are recovered as `w = Σ α_i y_i φ(x_i)`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Label};
use crate::error::{check_dim, Error, Result};
use crate::features::FeatureMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    #[serde(rename = "C")]
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// When set, each sweep visits coordinates in a fresh seeded permutation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shuffle_seed: Option<u64>,
    /// Largest training set for which the Gram matrix is cached.
    #[serde(default = "default_gram_threshold")]
    pub gram_threshold: usize,
}

fn default_gram_threshold() -> usize {
    10_000
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-6,
            max_iter: 10_000,
            shuffle_seed: None,
            gram_threshold: default_gram_threshold(),
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParameter(format!("C must be >= 0, got {}", self.c)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

/// Solver diagnostics; not part of the serialized model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub sweeps: usize,
    pub kkt_violation: f64,
    /// Dual objective after each sweep.
    pub objective_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    #[serde(with = "crate::wire::array1")]
    pub weights: Array1<f64>,
    #[serde(flatten)]
    pub config: SvmConfig,
    pub map: FeatureMap,
    pub n_train: usize,
    /// Largest training-point norm; stands in for the domain bound of the identity map.
    pub domain_radius: f64,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        with = "crate::wire::opt_array1"
    )]
    pub alphas: Option<Array1<f64>>,
    #[serde(skip)]
    pub report: TrainReport,
}

impl SvmModel {
    pub fn decision_value(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        decision_value(self.weights.view(), &self.map, x)
    }

    pub fn classify(&self, x: ArrayView1<'_, f64>) -> Result<Label> {
        classify(self.weights.view(), &self.map, x)
    }

    pub fn upper_bound(&self) -> f64 {
        self.config.c / self.n_train as f64
    }

    /// Drops the dual variables before publishing or saving the model.
    pub fn without_alphas(mut self) -> Self {
        self.alphas = None;
        self
    }
}

/// Box-projected gradient magnitude of coordinate `i`.
fn kkt_violation(alpha: f64, grad: f64, upper: f64) -> f64 {
    let up = if alpha < upper { grad.max(0.0) } else { 0.0 };
    let down = if alpha > 0.0 { (-grad).max(0.0) } else { 0.0 };
    up.max(down)
}

/// Exact maximizer of the dual along coordinate `i`, clipped to the box.
fn coordinate_step(alpha: f64, grad: f64, curvature: f64, upper: f64) -> f64 {
    if curvature > 0.0 {
        (alpha + grad / curvature).clamp(0.0, upper)
    } else if grad > 0.0 {
        upper
    } else if grad < 0.0 {
        0.0
    } else {
        alpha
    }
}

enum Gradient {
    /// `grad` kept exact through rank-one updates of the cached signed Gram matrix.
    Cached { q: Array2<f64>, grad: Array1<f64> },
    /// `grad_i = 1 - y_i φ_i · w`, evaluated on demand from the running weights.
    OnTheFly { w: Array1<f64> },
}

pub fn train_dual(data: &Dataset, map: &FeatureMap, config: &SvmConfig) -> Result<SvmModel> {
    config.validate()?;
    check_dim(map.input_dim(), data.n_features())?;
    let n = data.len();
    let phi = map.transform(data.features().view())?;
    let y: Array1<f64> = data.labels().iter().map(|l| l.sign()).collect();
    // rows scaled by their label: q_ij = z_i · z_j
    let z = &phi * &y.view().insert_axis(Axis(1));
    let diag: Array1<f64> = z.rows().into_iter().map(|r| r.dot(&r)).collect();
    let upper = config.c / n as f64;

    let mut alpha = Array1::<f64>::zeros(n);
    let mut state = if n <= config.gram_threshold {
        Gradient::Cached {
            q: z.dot(&z.t()),
            grad: Array1::ones(n),
        }
    } else {
        Gradient::OnTheFly {
            w: Array1::zeros(phi.ncols()),
        }
    };

    let mut order: Vec<usize> = (0..n).collect();
    let mut shuffler = config.shuffle_seed.map(ChaCha8Rng::seed_from_u64);
    let mut report = TrainReport::default();
    let mut converged = false;

    for sweep in 0..config.max_iter {
        if let Some(rng) = shuffler.as_mut() {
            order.shuffle(rng);
        }
        let mut sweep_violation = 0.0f64;
        for &i in &order {
            let g = match &state {
                Gradient::Cached { grad, .. } => grad[i],
                Gradient::OnTheFly { w } => 1.0 - z.row(i).dot(w),
            };
            sweep_violation = sweep_violation.max(kkt_violation(alpha[i], g, upper));
            let next = coordinate_step(alpha[i], g, diag[i], upper);
            let delta = next - alpha[i];
            if delta == 0.0 {
                continue;
            }
            alpha[i] = next;
            match &mut state {
                Gradient::Cached { q, grad } => grad.scaled_add(-delta, &q.row(i)),
                Gradient::OnTheFly { w } => w.scaled_add(delta, &z.row(i)),
            }
        }
        report.sweeps = sweep + 1;
        report.objective_history.push(match &state {
            Gradient::Cached { grad, .. } => 0.5 * alpha.dot(&(grad + 1.0)),
            Gradient::OnTheFly { w } => alpha.sum() - 0.5 * w.dot(w),
        });
        if sweep_violation < config.tol {
            let v = max_violation(z.view(), &alpha, upper);
            report.kkt_violation = v;
            if v < config.tol {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        let violation = max_violation(z.view(), &alpha, upper);
        return Err(Error::NotConverged {
            iterations: report.sweeps,
            violation,
        });
    }

    let weights = recover_weights(phi.view(), data.labels(), alpha.view());
    let domain_radius = data
        .features()
        .rows()
        .into_iter()
        .map(|r| r.dot(&r).sqrt())
        .fold(0.0, f64::max);
    Ok(SvmModel {
        weights,
        config: config.clone(),
        map: map.clone(),
        n_train: n,
        domain_radius,
        alphas: Some(alpha),
        report,
    })
}

/// Exact KKT violation from freshly recomputed gradients.
fn max_violation(z: ArrayView2<'_, f64>, alpha: &Array1<f64>, upper: f64) -> f64 {
    let w = z.t().dot(alpha);
    let grad = 1.0 - z.dot(&w);
    alpha
        .iter()
        .zip(&grad)
        .map(|(&a, &g)| kkt_violation(a, g, upper))
        .fold(0.0, f64::max)
}

/// `w = Σ α_i y_i φ(x_i)` from mapped training rows.
pub fn recover_weights(
    phi: ArrayView2<'_, f64>,
    labels: &[Label],
    alphas: ArrayView1<'_, f64>,
) -> Array1<f64> {
    let coef: Array1<f64> = alphas
        .iter()
        .zip(labels)
        .map(|(&a, l)| a * l.sign())
        .collect();
    phi.t().dot(&coef)
}

pub fn decision_value(
    weights: ArrayView1<'_, f64>,
    map: &FeatureMap,
    x: ArrayView1<'_, f64>,
) -> Result<f64> {
    check_dim(map.output_dim(), weights.len())?;
    Ok(map.apply(x)?.dot(&weights))
}

pub fn classify(
    weights: ArrayView1<'_, f64>,
    map: &FeatureMap,
    x: ArrayView1<'_, f64>,
) -> Result<Label> {
    decision_value(weights, map, x).map(Label::from_decision)
}

pub fn accuracy(weights: ArrayView1<'_, f64>, map: &FeatureMap, data: &Dataset) -> Result<f64> {
    check_dim(map.output_dim(), weights.len())?;
    let phi = map.transform(data.features().view())?;
    Ok(accuracy_mapped(phi.view(), data.labels(), weights))
}

/// Accuracy over rows that are already in feature space.
pub fn accuracy_mapped(
    phi: ArrayView2<'_, f64>,
    labels: &[Label],
    weights: ArrayView1<'_, f64>,
) -> f64 {
    let scores = phi.dot(&weights);
    let correct = scores
        .iter()
        .zip(labels)
        .filter(|(&s, &l)| Label::from_decision(s) == l)
        .count();
    correct as f64 / labels.len() as f64
}
