//! Explicit finite-dimensional feature maps.
//!
//! Two maps are provided: the identity (linear SVM) and random Fourier
//! features approximating the RBF kernel `k(x, y) = exp(-gamma * |x - y|^2)`.
//! For the latter each frequency vector is drawn from `N(0, 2 * gamma * I)`
//! and each phase from `U[0, 2π)`, with
//! `φ_i(x) = sqrt(2 / F) * cos(ω_i · x + b_i)`. The Fourier transform of the
//! RBF kernel with bandwidth `gamma` is exactly that Gaussian, so
//! `E[φ(x) · φ(y)] = k(x, y)`.
//!
//! Map parameters are public and fully determined by `(L, F, gamma, seed)`,
//! which is all that gets serialized.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Identity,
    RandomFourier,
}

/// Wire form of a [`FeatureMap`]; frequencies are regenerated from the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMapSpec {
    pub kind: MapKind,
    #[serde(rename = "L")]
    pub input_dim: usize,
    #[serde(rename = "F")]
    pub output_dim: usize,
    pub gamma: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomFourier {
    gamma: f64,
    seed: u64,
    /// F x L
    frequencies: Array2<f64>,
    phases: Array1<f64>,
    scale: f64,
}

impl RandomFourier {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn frequencies(&self) -> &Array2<f64> {
        &self.frequencies
    }

    pub fn phases(&self) -> &Array1<f64> {
        &self.phases
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FeatureMapSpec", into = "FeatureMapSpec")]
pub enum FeatureMap {
    Identity { dim: usize },
    RandomFourier(RandomFourier),
}

/// Upper bounds on the map: `|φ(x)| <= kappa` and `|φ_i(x)| <= phi_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapBounds {
    pub kappa: f64,
    pub phi_max: f64,
}

pub fn make_identity(dim: usize) -> Result<FeatureMap> {
    if dim == 0 {
        return Err(Error::InvalidParameter("identity map needs L >= 1".into()));
    }
    Ok(FeatureMap::Identity { dim })
}

pub fn make_random_fourier(
    input_dim: usize,
    output_dim: usize,
    gamma: f64,
    seed: u64,
) -> Result<FeatureMap> {
    if input_dim == 0 || output_dim == 0 {
        return Err(Error::InvalidParameter(format!(
            "random Fourier map needs L, F >= 1 (got L={input_dim}, F={output_dim})"
        )));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive and finite, got {gamma}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, (2.0 * gamma).sqrt()).expect("std is positive");
    let frequencies =
        Array2::from_shape_simple_fn((output_dim, input_dim), || normal.sample(&mut rng));
    let phases = Array1::from_shape_simple_fn(output_dim, || rng.random_range(0.0..2.0 * PI));
    Ok(FeatureMap::RandomFourier(RandomFourier {
        gamma,
        seed,
        frequencies,
        phases,
        scale: (2.0 / output_dim as f64).sqrt(),
    }))
}

impl FeatureMap {
    pub fn kind(&self) -> MapKind {
        match self {
            FeatureMap::Identity { .. } => MapKind::Identity,
            FeatureMap::RandomFourier(_) => MapKind::RandomFourier,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            FeatureMap::Identity { dim } => *dim,
            FeatureMap::RandomFourier(r) => r.frequencies.ncols(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            FeatureMap::Identity { dim } => *dim,
            FeatureMap::RandomFourier(r) => r.frequencies.nrows(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, FeatureMap::Identity { .. })
    }

    pub fn apply(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        check_dim(self.input_dim(), x.len())?;
        Ok(match self {
            FeatureMap::Identity { .. } => x.to_owned(),
            FeatureMap::RandomFourier(r) => {
                let mut z = r.frequencies.dot(&x);
                z.zip_mut_with(&r.phases, |zi, &b| *zi = r.scale * (*zi + b).cos());
                z
            }
        })
    }

    /// Maps every row of `x` (n x L) to an n x F matrix.
    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_dim(self.input_dim(), x.ncols())?;
        Ok(match self {
            FeatureMap::Identity { .. } => x.to_owned(),
            FeatureMap::RandomFourier(r) => {
                let mut z = x.dot(&r.frequencies.t());
                for mut row in z.rows_mut() {
                    row.zip_mut_with(&r.phases, |zi, &b| *zi = r.scale * (*zi + b).cos());
                }
                z
            }
        })
    }

    /// `domain_radius` bounds `|x|` over the data domain and is only used by the identity map.
    pub fn bounds(&self, domain_radius: f64) -> Result<MapBounds> {
        match self {
            FeatureMap::Identity { .. } => {
                if !(domain_radius > 0.0 && domain_radius.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "identity map bounds need a positive domain radius, got {domain_radius}"
                    )));
                }
                Ok(MapBounds {
                    kappa: domain_radius,
                    phi_max: domain_radius,
                })
            }
            FeatureMap::RandomFourier(r) => Ok(MapBounds {
                kappa: 2f64.sqrt(),
                phi_max: r.scale,
            }),
        }
    }

    pub fn spec(&self) -> FeatureMapSpec {
        match self {
            FeatureMap::Identity { dim } => FeatureMapSpec {
                kind: MapKind::Identity,
                input_dim: *dim,
                output_dim: *dim,
                gamma: None,
                seed: None,
            },
            FeatureMap::RandomFourier(r) => FeatureMapSpec {
                kind: MapKind::RandomFourier,
                input_dim: r.frequencies.ncols(),
                output_dim: r.frequencies.nrows(),
                gamma: Some(r.gamma),
                seed: Some(r.seed),
            },
        }
    }
}

impl TryFrom<FeatureMapSpec> for FeatureMap {
    type Error = Error;

    fn try_from(spec: FeatureMapSpec) -> Result<Self> {
        match spec.kind {
            MapKind::Identity => {
                if spec.output_dim != spec.input_dim {
                    return Err(Error::InvalidParameter(format!(
                        "identity map requires F = L (got L={}, F={})",
                        spec.input_dim, spec.output_dim
                    )));
                }
                make_identity(spec.input_dim)
            }
            MapKind::RandomFourier => {
                let gamma = spec
                    .gamma
                    .ok_or_else(|| Error::InvalidParameter("random Fourier map needs gamma".into()))?;
                let seed = spec
                    .seed
                    .ok_or_else(|| Error::InvalidParameter("random Fourier map needs seed".into()))?;
                make_random_fourier(spec.input_dim, spec.output_dim, gamma, seed)
            }
        }
    }
}

impl From<FeatureMap> for FeatureMapSpec {
    fn from(map: FeatureMap) -> Self {
        map.spec()
    }
}
