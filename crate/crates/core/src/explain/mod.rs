//! Counterfactual explanations for a privately released SVM.
//!
//! An explanation of the prediction `y'` at `x'` is the closest point `x` whose
//! classification differs. Because the released weights `w̃` carry Laplace
//! noise, the robust variant asks that the flip hold with probability at least
//! `p` under the weight uncertainty. Its deterministic form is
//!
//! ```text
//! g(x) = y' φ(x)·w̃ + r |φ(x)| <= 0,   r = -λ sqrt(2) ln(2 (1 - p))
//! ```
//!
//! For `p = 1/2` or `λ = 0` the margin term vanishes and the non-robust
//! constraint `y' φ(x)·w̃ <= 0` is recovered.

mod bisection;
mod linear;
mod prototypes;
mod validate;

pub use bisection::{
    bisection_trace, bisection_trace_toward, explain_robust_bisection, explain_robust_bisection_toward, BisectionConfig,
    TraceRow,
};
pub use linear::{
    explain_nonrobust_linear, explain_robust_linear, project_onto_circular_cone, ConeCase,
    ConeProjection,
};
pub use prototypes::{
    find_prototype, make_prototypes, make_prototypes_with, Prototype, PrototypeSearch,
    PrototypeSet, PrototypeSource,
};
pub use validate::validate_chance_constraint;

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{check_dim, Error, Result};
use crate::privacy::PrivateRelease;

/// Distance between an explanation and its instance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    #[default]
    Euclidean,
}

impl Distance {
    pub fn eval(self, a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
        match self {
            Distance::Euclidean => euclidean(a, b),
        }
    }
}

pub(crate) fn euclidean(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn norm(a: ArrayView1<'_, f64>) -> f64 {
    a.dot(&a).sqrt()
}

/// Weight uncertainty implied by a release: the true weights are modeled as
/// the released ones perturbed by zero-mean noise of scale `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyModel {
    pub location: Array1<f64>,
    pub lambda: f64,
}

impl UncertaintyModel {
    pub fn from_release(release: &PrivateRelease) -> Self {
        Self {
            location: release.w_tilde.clone(),
            lambda: release.lambda,
        }
    }

    /// True when robust and non-robust computations coincide.
    pub fn is_degenerate(&self) -> bool {
        self.lambda == 0.0
    }
}

fn check_confidence(p: f64) -> Result<()> {
    if (0.5..1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "confidence p must lie in [0.5, 1), got {p}"
        )))
    }
}

/// `r = -λ sqrt(2) ln(2 (1 - p))`, the weight of `|φ(x)|` in the robust constraint.
pub fn robust_coefficient(p: f64, lambda: f64) -> Result<f64> {
    check_confidence(p)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    if p == 0.5 || lambda == 0.0 {
        return Ok(0.0);
    }
    Ok(-lambda * std::f64::consts::SQRT_2 * (2.0 * (1.0 - p)).ln())
}

/// Left-hand side `g(x)` of the robust constraint; `g(x) <= 0` certifies the flip.
pub fn constraint_value(
    x: ArrayView1<'_, f64>,
    release: &PrivateRelease,
    label: Label,
    p: f64,
) -> Result<f64> {
    let r = robust_coefficient(p, release.lambda)?;
    let phi = release.map.apply(x)?;
    check_dim(phi.len(), release.w_tilde.len())?;
    Ok(label.sign() * phi.dot(&release.w_tilde) + r * norm(phi.view()))
}

/// An instance to explain together with the released classifier's own prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplanationRequest {
    pub instance: Array1<f64>,
    pub label: Label,
    pub p: f64,
}

impl ExplanationRequest {
    /// Builds a request labeled by the released classifier.
    pub fn new(instance: Array1<f64>, release: &PrivateRelease, p: f64) -> Result<Self> {
        check_confidence(p)?;
        let label = release.classify(instance.view())?;
        Ok(Self { instance, label, p })
    }

    pub fn validate(&self, release: &PrivateRelease) -> Result<()> {
        check_confidence(self.p)?;
        let predicted = release.classify(self.instance.view())?;
        if predicted != self.label {
            return Err(Error::Precondition(format!(
                "request label {} differs from the released prediction {predicted}",
                self.label
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    NonRobustClosedForm,
    RobustConeProjection,
    RobustBisection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    #[serde(with = "crate::wire::array1")]
    pub x: Array1<f64>,
    #[serde(with = "crate::wire::array1")]
    pub x_prime: Array1<f64>,
    pub y_prime: Label,
    pub p: f64,
    pub method: Method,
    pub distance: f64,
    pub g_value: f64,
    pub iterations: usize,
    /// The robust feasible set is `{0}`.
    #[serde(default)]
    pub origin_only: bool,
    /// `t` with `x = x' + t (z - x')` for bisection output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment_coefficient: Option<f64>,
}

/// Relative change `(x_i - x'_i) / x'_i` per feature; `None` where `x'_i` is zero.
pub fn feature_deltas(x: ArrayView1<'_, f64>, x_prime: ArrayView1<'_, f64>) -> Result<Vec<Option<f64>>> {
    check_dim(x_prime.len(), x.len())?;
    Ok(x.iter()
        .zip(x_prime.iter())
        .map(|(&a, &b)| (b.abs() > 1e-12).then(|| (a - b) / b))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::make_identity;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    pub(crate) fn linear_release(w: Array1<f64>, lambda: f64) -> PrivateRelease {
        let dim = w.len();
        PrivateRelease {
            w_tilde: w,
            lambda,
            beta: 1.0,
            map: make_identity(dim).unwrap(),
        }
    }

    #[test]
    fn coefficient_values() {
        assert_eq!(robust_coefficient(0.5, 7.0).unwrap(), 0.0);
        assert_abs_diff_eq!(robust_coefficient(0.9, 1.0).unwrap(), 2.276_088_924, epsilon = 1e-8);
        assert_eq!(robust_coefficient(0.99, 0.0).unwrap(), 0.0);
        assert!(robust_coefficient(1.0, 1.0).is_err());
        assert!(robust_coefficient(0.4, 1.0).is_err());
    }

    #[test]
    fn constraint_value_examples() {
        let rel = linear_release(array![1.0, 0.0], 1.0);
        let g = constraint_value(array![1.0, 0.0].view(), &rel, Label::Negative, 0.9).unwrap();
        assert_abs_diff_eq!(g, -1.0 + 2.276_088_924, epsilon = 1e-8);
        assert_eq!(constraint_value(array![0.0, 0.0].view(), &rel, Label::Negative, 0.9).unwrap(), 0.0);
        let flat = constraint_value(array![0.3, 2.0].view(), &rel, Label::Positive, 0.5).unwrap();
        assert_eq!(flat, 0.3);
    }

    #[test]
    fn request_label_must_match_release() {
        let rel = linear_release(array![1.0, 0.0], 0.1);
        let req = ExplanationRequest::new(array![-2.0, 1.0], &rel, 0.9).unwrap();
        assert_eq!(req.label, Label::Negative);
        let wrong = ExplanationRequest {
            label: Label::Positive,
            ..req
        };
        assert!(matches!(wrong.validate(&rel), Err(Error::Precondition(_))));
        assert!(ExplanationRequest::new(array![1.0, 1.0], &rel, 1.0).is_err());
    }

    #[test]
    fn deltas_guard_zero_features() {
        let d = feature_deltas(array![1.5, 3.0, 2.0].view(), array![1.0, 0.0, 4.0].view()).unwrap();
        assert_eq!(d, vec![Some(0.5), None, Some(-0.5)]);
    }
}
