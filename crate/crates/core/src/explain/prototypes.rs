//! Class prototypes that the released classifier labels with enough confidence.
//!
//! A candidate `z` for class `y` is accepted when
//! `y f(z, w̃) >= r |φ(z)|`. Candidates are tried in order: the class mean,
//! training points of the class by decreasing `y f(z, w̃)`, then Gaussian
//! perturbations of the class mean.

use ndarray::{Array1, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{norm, robust_coefficient};
use crate::data::{Dataset, Label};
use crate::error::{check_dim, Error, Result};
use crate::privacy::PrivateRelease;

const PERTURBATION_SCALES: [f64; 4] = [0.25, 0.5, 1.0, 2.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrototypeSearch {
    /// Number of random perturbations tried after the deterministic candidates.
    pub retry_budget: usize,
    pub seed: u64,
}

impl Default for PrototypeSearch {
    fn default() -> Self {
        Self {
            retry_budget: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrototypeSource {
    ClassMean,
    TrainingPoint(usize),
    Perturbation(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prototype {
    pub point: Array1<f64>,
    pub source: PrototypeSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeSet {
    pub plus: Prototype,
    pub minus: Prototype,
}

impl PrototypeSet {
    pub fn for_class(&self, label: Label) -> &Array1<f64> {
        match label {
            Label::Positive => &self.plus.point,
            Label::Negative => &self.minus.point,
        }
    }
}

/// `y f(z, w̃) - r |φ(z)|`; nonnegative means confident enough.
fn confidence_margin(
    z: ArrayView1<'_, f64>,
    release: &PrivateRelease,
    label: Label,
    r: f64,
) -> Result<f64> {
    let phi = release.map.apply(z)?;
    Ok(label.sign() * phi.dot(&release.w_tilde) - r * norm(phi.view()))
}

pub fn find_prototype(
    train: &Dataset,
    release: &PrivateRelease,
    p: f64,
    label: Label,
    search: &PrototypeSearch,
) -> Result<Prototype> {
    check_dim(release.map.input_dim(), train.n_features())?;
    let r = robust_coefficient(p, release.lambda)?;
    let mean = train.class_mean(label).ok_or_else(|| {
        Error::Precondition(format!("class {label} is absent from the training data"))
    })?;
    let mut best = f64::NEG_INFINITY;

    let m = confidence_margin(mean.view(), release, label, r)?;
    best = best.max(m);
    if m >= 0.0 {
        return Ok(Prototype {
            point: mean,
            source: PrototypeSource::ClassMean,
        });
    }

    let class_rows: Vec<usize> = (0..train.len()).filter(|&i| train.labels()[i] == label).collect();
    let phi = release
        .map
        .transform(train.features().select(ndarray::Axis(0), &class_rows).view())?;
    let scores = phi.dot(&release.w_tilde);
    let mut ranked: Vec<(usize, f64, f64)> = class_rows
        .iter()
        .enumerate()
        .map(|(k, &i)| (i, label.sign() * scores[k], norm(phi.row(k))))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for &(i, score, phi_norm) in &ranked {
        let m = score - r * phi_norm;
        best = best.max(m);
        if m >= 0.0 {
            return Ok(Prototype {
                point: train.row(i).to_owned(),
                source: PrototypeSource::TrainingPoint(i),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    for k in 0..search.retry_budget {
        let scale = PERTURBATION_SCALES[k % PERTURBATION_SCALES.len()];
        let noise: Array1<f64> =
            Array1::from_shape_simple_fn(mean.len(), || StandardNormal.sample(&mut rng));
        let z = &mean + &(scale * noise);
        let m = confidence_margin(z.view(), release, label, r)?;
        best = best.max(m);
        if m >= 0.0 {
            return Ok(Prototype {
                point: z,
                source: PrototypeSource::Perturbation(k),
            });
        }
    }
    Err(Error::PrototypeNotFound {
        class: label.into(),
        best_margin: best,
    })
}

pub fn make_prototypes_with(
    train: &Dataset,
    release: &PrivateRelease,
    p: f64,
    search: &PrototypeSearch,
) -> Result<PrototypeSet> {
    Ok(PrototypeSet {
        plus: find_prototype(train, release, p, Label::Positive, search)?,
        minus: find_prototype(train, release, p, Label::Negative, search)?,
    })
}

pub fn make_prototypes(train: &Dataset, release: &PrivateRelease, p: f64) -> Result<PrototypeSet> {
    make_prototypes_with(train, release, p, &PrototypeSearch::default())
}
