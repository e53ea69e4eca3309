//! Closed-form explanations for the identity feature map.
//!
//! With `φ(x) = x` the robust constraint `y' x·w̃ + r |x| <= 0` is membership in
//! the circular cone `K = {x : <x, c> >= α |x|}` with unit axis
//! `c = -y' w̃ / |w̃|` and half-aperture cosine `α = r / |w̃|`: divide the
//! constraint by `|w̃|` and move the linear term across. The nearest point of
//! `K` to `x'` therefore solves the second-order cone program exactly.

use ndarray::{Array1, ArrayView1};

use super::{constraint_value, euclidean, norm, robust_coefficient, Explanation, ExplanationRequest, Method};
use crate::error::{check_dim, Error, Result};
use crate::privacy::PrivateRelease;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeCase {
    /// `α > 1`: the cone is the origin alone.
    OriginOnly,
    Inside,
    /// `x'` lies in the polar cone and projects to the apex.
    Polar,
    Boundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeProjection {
    pub point: Array1<f64>,
    pub case: ConeCase,
}

/// Euclidean projection of `x` onto `{z : <z, axis> >= alpha |z|}`.
///
/// `axis` must have unit norm and `alpha >= 0`.
pub fn project_onto_circular_cone(
    x: ArrayView1<'_, f64>,
    axis: ArrayView1<'_, f64>,
    alpha: f64,
) -> ConeProjection {
    let zero = || Array1::zeros(x.len());
    if alpha > 1.0 {
        return ConeProjection {
            point: zero(),
            case: ConeCase::OriginOnly,
        };
    }
    let s = x.dot(&axis);
    let v = &x - &(s * &axis);
    let v_norm = norm(v.view());
    let x_norm = norm(x);
    if s >= alpha * x_norm {
        return ConeProjection {
            point: x.to_owned(),
            case: ConeCase::Inside,
        };
    }
    let beta = (1.0 - alpha * alpha).sqrt();
    let t = alpha * s + beta * v_norm;
    if t <= 0.0 {
        return ConeProjection {
            point: zero(),
            case: ConeCase::Polar,
        };
    }
    // v_norm > 0 here: v = 0 puts x on the axis line, which is Inside or Polar
    let direction = alpha * &axis + (beta / v_norm) * &v;
    ConeProjection {
        point: t * direction,
        case: ConeCase::Boundary,
    }
}

fn linear_weights(release: &PrivateRelease, instance: ArrayView1<'_, f64>) -> Result<f64> {
    if !release.map.is_identity() {
        return Err(Error::InvalidParameter(
            "closed-form explanations require the identity feature map".into(),
        ));
    }
    check_dim(release.w_tilde.len(), instance.len())?;
    let w_norm = norm(release.w_tilde.view());
    if w_norm == 0.0 {
        return Err(Error::ZeroWeights);
    }
    Ok(w_norm)
}

/// Orthogonal projection onto the released hyperplane `x·w̃ = 0`.
pub fn explain_nonrobust_linear(
    request: &ExplanationRequest,
    release: &PrivateRelease,
) -> Result<Explanation> {
    let x_prime = request.instance.view();
    let w_norm = linear_weights(release, x_prime)?;
    request.validate(release)?;
    let w = &release.w_tilde;
    let y = request.label.sign();
    let score = x_prime.dot(w);
    let mut x = x_prime.to_owned();
    if y * score > 0.0 {
        x.scaled_add(-score / (w_norm * w_norm), w);
        // rounding can leave the point a hair on the instance's side
        let mut nudge = f64::EPSILON;
        for _ in 0..16 {
            let residual = y * x.dot(w);
            if residual <= 0.0 {
                break;
            }
            x.scaled_add(-y * residual * (1.0 + nudge) / (w_norm * w_norm), w);
            nudge *= 4.0;
        }
    }
    let g_value = y * x.dot(w);
    Ok(Explanation {
        distance: euclidean(x.view(), x_prime),
        x,
        x_prime: x_prime.to_owned(),
        y_prime: request.label,
        p: request.p,
        method: Method::NonRobustClosedForm,
        g_value,
        iterations: 0,
        origin_only: false,
        segment_coefficient: None,
    })
}

/// Exact solution of the robust linear problem by circular-cone projection.
pub fn explain_robust_linear(
    request: &ExplanationRequest,
    release: &PrivateRelease,
) -> Result<Explanation> {
    let x_prime = request.instance.view();
    let w_norm = linear_weights(release, x_prime)?;
    request.validate(release)?;
    let r = robust_coefficient(request.p, release.lambda)?;
    let axis = release.w_tilde.mapv(|v| -request.label.sign() * v / w_norm);
    let proj = project_onto_circular_cone(x_prime, axis.view(), r / w_norm);
    let g_value = constraint_value(proj.point.view(), release, request.label, request.p)?;
    Ok(Explanation {
        distance: euclidean(proj.point.view(), x_prime),
        x: proj.point,
        x_prime: x_prime.to_owned(),
        y_prime: request.label,
        p: request.p,
        method: Method::RobustConeProjection,
        g_value,
        iterations: 0,
        origin_only: proj.case == ConeCase::OriginOnly,
        segment_coefficient: None,
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::linear_release;
    use super::*;
    use crate::data::Label;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn request(x: Array1<f64>, rel: &PrivateRelease, p: f64) -> ExplanationRequest {
        ExplanationRequest::new(x, rel, p).unwrap()
    }

    #[test]
    fn hyperplane_projection() {
        let rel = linear_release(array![1.0, 0.0], 0.0);
        let ex = explain_nonrobust_linear(&request(array![2.0, 1.0], &rel, 0.5), &rel).unwrap();
        assert_eq!(ex.x, array![0.0, 1.0]);
        assert_eq!(ex.distance, 2.0);
        assert!(ex.g_value <= 0.0);

        let scaled = linear_release(array![5.0, 0.0], 0.0);
        let ex5 = explain_nonrobust_linear(&request(array![2.0, 1.0], &scaled, 0.5), &scaled).unwrap();
        assert_eq!(ex5.x, ex.x);
    }

    #[test]
    fn point_on_hyperplane_is_its_own_explanation() {
        let rel = linear_release(array![1.0, 0.0], 0.0);
        let ex = explain_nonrobust_linear(&request(array![0.0, 3.0], &rel, 0.5), &rel).unwrap();
        assert_eq!(ex.x, array![0.0, 3.0]);
        assert_eq!(ex.distance, 0.0);
    }

    #[test]
    fn worked_cone_example() {
        // r = 0.5 with |w̃| = 1: pick λ so that the coefficient is exactly 0.5 at p = 0.9
        let lambda = 0.5 / robust_coefficient(0.9, 1.0).unwrap();
        let rel = linear_release(array![1.0, 0.0], lambda);
        let req = request(array![0.0, 2.0], &rel, 0.9);
        assert_eq!(req.label, Label::Positive);
        let ex = explain_robust_linear(&req, &rel).unwrap();
        assert_abs_diff_eq!(ex.x[0], -(3f64.sqrt()) / 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(ex.x[1], 1.5, epsilon = 1e-9);
        assert_abs_diff_eq!(ex.distance, 1.0, epsilon = 1e-9);
        assert!(ex.g_value.abs() <= 1e-9);
    }

    #[test]
    fn wide_margin_leaves_only_origin() {
        let lambda = 2.0 / robust_coefficient(0.9, 1.0).unwrap();
        let rel = linear_release(array![1.0, 0.0], lambda);
        let ex = explain_robust_linear(&request(array![1.0, 1.0], &rel, 0.9), &rel).unwrap();
        assert!(ex.origin_only);
        assert_eq!(ex.x, array![0.0, 0.0]);
    }

    #[test]
    fn cone_cases() {
        let axis = array![1.0, 0.0];
        let inside = project_onto_circular_cone(array![2.0, 0.5].view(), axis.view(), 0.5);
        assert_eq!(inside.case, ConeCase::Inside);
        let polar = project_onto_circular_cone(array![-2.0, 0.1].view(), axis.view(), 0.5);
        assert_eq!(polar.case, ConeCase::Polar);
        assert_eq!(polar.point, array![0.0, 0.0]);
        let ray = project_onto_circular_cone(array![1.0, 1.0].view(), axis.view(), 1.0);
        assert_eq!(ray.case, ConeCase::Boundary);
        assert_abs_diff_eq!(ray.point[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ray.point[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_weights_and_wrong_map_are_errors() {
        let rel = linear_release(array![0.0, 0.0], 0.1);
        let req = ExplanationRequest {
            instance: array![1.0, 1.0],
            label: Label::Positive,
            p: 0.9,
        };
        assert!(matches!(explain_robust_linear(&req, &rel), Err(Error::ZeroWeights)));
        assert!(matches!(explain_nonrobust_linear(&req, &rel), Err(Error::ZeroWeights)));
        let mut rff = linear_release(array![1.0, 0.0], 0.1);
        rff.map = crate::features::make_random_fourier(2, 2, 1.0, 0).unwrap();
        assert!(matches!(
            explain_robust_linear(&req, &rff),
            Err(Error::InvalidParameter(_))
        ));
    }
}
