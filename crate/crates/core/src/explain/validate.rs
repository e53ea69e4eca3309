//! Monte Carlo estimate of the chance constraint `Pr[y' φ(x)·ξ <= 0]`.

use ndarray::ArrayView1;

use crate::data::Label;
use crate::error::{check_dim, Error, Result};
use crate::privacy::{laplace_inverse_cdf, PrivateRelease};
use crate::rng::IndexedUniform;

/// Fraction of `trials` weight draws `ξ = w̃ + μ`, `μ_i ~ Lap(0, λ)` i.i.d.,
/// for which `x` is classified opposite to `label`.
///
/// Draw `t` uses stream indices `t F .. (t + 1) F`, so any split of the trials
/// reproduces a sequential run.
pub fn validate_chance_constraint(
    x: ArrayView1<'_, f64>,
    release: &PrivateRelease,
    label: Label,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let phi = release.map.apply(x)?;
    check_dim(phi.len(), release.w_tilde.len())?;
    let y = label.sign();
    let base = phi.dot(&release.w_tilde);
    if release.lambda == 0.0 {
        return Ok(if y * base <= 0.0 { 1.0 } else { 0.0 });
    }
    let mut u = IndexedUniform::new(seed);
    let mut hits = 0usize;
    for _ in 0..trials {
        let perturbation: f64 = phi
            .iter()
            .map(|&f| f * laplace_inverse_cdf(u.next_open01(), release.lambda))
            .sum();
        if y * (base + perturbation) <= 0.0 {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}
