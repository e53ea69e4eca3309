//! Prototype-seeded bisection for general feature maps.
//!
//! Iterates are kept as dyadic segment coefficients `t ∈ [0, 1]` with
//! `x(t) = x' + t (z - x')`, so midpoints are exact, every interval width is
//! exactly `d₀ / 2^k`, and the output is an exact affine combination of the
//! two endpoints.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use super::{constraint_value, euclidean, Explanation, ExplanationRequest, Method, PrototypeSet};
use crate::error::{check_dim, Error, Result};
use crate::privacy::PrivateRelease;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionConfig {
    /// Stop once the bracket is no wider than this.
    pub epsilon: f64,
    pub max_iter: usize,
    /// Return the last midpoint instead of the feasible upper bound.
    #[serde(default)]
    pub literal_output: bool,
}

impl Default for BisectionConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            max_iter: 200,
            literal_output: false,
        }
    }
}

/// One bisection step: bracket width before the step, `g` at the midpoint and
/// at the upper bound after the update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub width: f64,
    pub g_mid: f64,
    pub g_upper: f64,
}

struct Outcome {
    t: f64,
    iterations: usize,
    g: f64,
}

fn point_at(x_prime: ArrayView1<'_, f64>, z: ArrayView1<'_, f64>, t: f64) -> Array1<f64> {
    let mut x = x_prime.to_owned();
    x.scaled_add(t, &(&z - &x_prime));
    x
}

fn run(
    request: &ExplanationRequest,
    release: &PrivateRelease,
    z: ArrayView1<'_, f64>,
    config: &BisectionConfig,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<Outcome> {
    if !(config.epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bisection epsilon must be > 0, got {}",
            config.epsilon
        )));
    }
    request.validate(release)?;
    let x_prime = request.instance.view();
    check_dim(x_prime.len(), z.len())?;
    let g = |x: ArrayView1<'_, f64>| constraint_value(x, release, request.label, request.p);

    let g_lower = g(x_prime)?;
    if !(g_lower > 0.0) {
        return Err(Error::Precondition(format!(
            "g(x') = {g_lower:.6e} is not positive; the instance already satisfies the robust constraint"
        )));
    }
    let mut g_upper = g(z)?;
    if !(g_upper < 0.0) {
        return Err(Error::Precondition(format!(
            "g(z) = {g_upper:.6e} at the opposite-class prototype is not negative"
        )));
    }

    let d0 = euclidean(z, x_prime);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut last_mid = None;
    let mut iterations = 0;
    while (hi - lo) * d0 > config.epsilon {
        if iterations == config.max_iter {
            return Err(Error::BisectionLimit(config.max_iter));
        }
        let width = (hi - lo) * d0;
        let mid = 0.5 * (lo + hi);
        let g_mid = g(point_at(x_prime, z, mid).view())?;
        if g_mid < 0.0 {
            hi = mid;
            g_upper = g_mid;
        } else {
            lo = mid;
        }
        iterations += 1;
        last_mid = Some((mid, g_mid));
        if let Some(rows) = trace.as_deref_mut() {
            rows.push(TraceRow {
                iteration: iterations,
                width,
                g_mid,
                g_upper,
            });
        }
    }
    let (t, g_out) = match (config.literal_output, last_mid) {
        (true, Some(m)) => m,
        _ => (hi, g_upper),
    };
    Ok(Outcome {
        t,
        iterations,
        g: g_out,
    })
}

/// Robust explanation on the segment from `x'` to the opposite-class prototype.
///
/// Requires `g(x') > 0` and `g(z) < 0`. The returned point is the final upper
/// bound, which satisfies `g < 0`, unless `literal_output` is set.
pub fn explain_robust_bisection(
    request: &ExplanationRequest,
    release: &PrivateRelease,
    prototypes: &PrototypeSet,
    config: &BisectionConfig,
) -> Result<Explanation> {
    let z = prototypes.for_class(request.label.opposite());
    explain_robust_bisection_toward(request, release, z.view(), config)
}

/// Bisection toward an explicit opposite-class prototype `z`.
pub fn explain_robust_bisection_toward(
    request: &ExplanationRequest,
    release: &PrivateRelease,
    z: ArrayView1<'_, f64>,
    config: &BisectionConfig,
) -> Result<Explanation> {
    let out = run(request, release, z, config, None)?;
    let x = point_at(request.instance.view(), z, out.t);
    Ok(Explanation {
        distance: euclidean(x.view(), request.instance.view()),
        x,
        x_prime: request.instance.clone(),
        y_prime: request.label,
        p: request.p,
        method: Method::RobustBisection,
        g_value: out.g,
        iterations: out.iterations,
        origin_only: false,
        segment_coefficient: Some(out.t),
    })
}

/// Per-iteration record of the bisection for one request.
pub fn bisection_trace(
    request: &ExplanationRequest,
    release: &PrivateRelease,
    prototypes: &PrototypeSet,
    config: &BisectionConfig,
) -> Result<Vec<TraceRow>> {
    let z = prototypes.for_class(request.label.opposite());
    bisection_trace_toward(request, release, z.view(), config)
}

pub fn bisection_trace_toward(
    request: &ExplanationRequest,
    release: &PrivateRelease,
    z: ArrayView1<'_, f64>,
    config: &BisectionConfig,
) -> Result<Vec<TraceRow>> {
    let mut rows = Vec::new();
    run(request, release, z, config, Some(&mut rows))?;
    Ok(rows)
}
