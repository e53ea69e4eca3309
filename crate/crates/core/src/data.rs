//! Tabular binary-classification datasets: loading, normalization and splitting.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Number of real-valued features per WDBC row.
pub const WDBC_FEATURES: usize = 30;

/// A class label, serialized as the integer `+1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn opposite(self) -> Label {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }

    /// Sign convention of the classifier: zero maps to `Positive`.
    pub fn from_decision(value: f64) -> Label {
        if value >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

impl From<Label> for i8 {
    fn from(l: Label) -> i8 {
        match l {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }
}

impl TryFrom<i8> for Label {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Negative),
            other => Err(format!("label must be +1 or -1, got {other}")),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}", i8::from(*self))
    }
}

/// Feature matrix (one row per instance) with ±1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<Label>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Vec<Label>) -> Result<Self> {
        let (n, l) = features.dim();
        if n == 0 || l == 0 {
            return Err(Error::Empty(format!("dataset of shape {n}x{l}")));
        }
        check_dim(n, labels.len())?;
        if let Some(((i, j), _)) = features.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite value at row {i}, column {j}"
            )));
        }
        Ok(Self {
            features,
            labels,
            feature_names: None,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        check_dim(self.n_features(), names.len())?;
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Empty("selection of zero rows".into()));
        }
        Ok(Self {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        })
    }

    /// Feature mean over the rows carrying `label`, or `None` if the class is absent.
    pub fn class_mean(&self, label: Label) -> Option<Array1<f64>> {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] == label).collect();
        if idx.is_empty() {
            return None;
        }
        Some(self.features.select(Axis(0), &idx).mean_axis(Axis(0)).unwrap())
    }

    /// Writes features followed by a `label` column.
    pub fn write_csv<W: Write>(&self, writer: W, header: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        if header {
            let mut names: Vec<String> = match &self.feature_names {
                Some(n) => n.clone(),
                None => (0..self.n_features()).map(|j| format!("x{j}")).collect(),
            };
            names.push("label".into());
            w.write_record(&names)?;
        }
        for (row, label) in self.features.rows().into_iter().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(i8::from(*label).to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::Serialization(e.to_string()))?;
        Ok(())
    }
}

/// Loads a UCI `wdbc.data` file: `id,diagnosis,30 reals` per row, no header.
pub fn load_wdbc(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_wdbc(file)
}

/// Parses WDBC rows from any reader. Diagnosis `M` is +1, `B` is -1; the ID is discarded.
pub fn parse_wdbc<R: Read>(reader: R) -> Result<Dataset> {
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let row = i + 1;
        let line = line.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        let line = line.trim_end_matches('\r');
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != WDBC_FEATURES + 2 {
            return Err(Error::Parse {
                row,
                message: format!(
                    "expected {} fields, found {}",
                    WDBC_FEATURES + 2,
                    fields.len()
                ),
            });
        }
        fields[0].trim().parse::<u64>().map_err(|_| Error::Parse {
            row,
            message: format!("invalid id {:?}", fields[0]),
        })?;
        let label = match fields[1].trim() {
            "M" => Label::Positive,
            "B" => Label::Negative,
            other => {
                return Err(Error::UnknownDiagnosis {
                    row,
                    symbol: other.to_string(),
                })
            }
        };
        for (j, f) in fields[2..].iter().enumerate() {
            let v: f64 = f.trim().parse().map_err(|_| Error::Parse {
                row,
                message: format!("feature {j}: invalid number {f:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    message: format!("feature {j}: non-finite value"),
                });
            }
            values.push(v);
        }
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(Error::Parse {
            row: 0,
            message: "file contains no rows".into(),
        });
    }
    let features = Array2::from_shape_vec((labels.len(), WDBC_FEATURES), values)
        .expect("row width checked above");
    Dataset::new(features, labels)
}

/// Per-column affine standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    #[serde(with = "crate::wire::array1")]
    pub mean: Array1<f64>,
    #[serde(with = "crate::wire::array1")]
    pub std: Array1<f64>,
}

impl NormalizationParams {
    /// Maps a standardized vector back to original units.
    pub fn denormalize(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        check_dim(self.mean.len(), x.len())?;
        Ok(&x * &self.std + &self.mean)
    }

    pub fn normalize(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        check_dim(self.mean.len(), x.len())?;
        Ok((&x - &self.mean) / &self.std)
    }
}

/// Column means and population standard deviations of `train`.
pub fn fit_normalizer(train: &Dataset) -> Result<NormalizationParams> {
    let x = train.features();
    let mean = x.mean_axis(Axis(0)).expect("dataset is nonempty");
    let std = x.std_axis(Axis(0), 0.0);
    if let Some(column) = std.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::ConstantColumn { column });
    }
    Ok(NormalizationParams { mean, std })
}

pub fn apply_normalizer(data: &Dataset, params: &NormalizationParams) -> Result<Dataset> {
    check_dim(data.n_features(), params.mean.len())?;
    check_dim(data.n_features(), params.std.len())?;
    let features = (data.features() - &params.mean) / &params.std;
    Ok(Dataset {
        features,
        labels: data.labels.clone(),
        feature_names: data.feature_names.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

/// Shuffled train/test index sets; train holds `round(train_fraction * n)` rows.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train_fraction must lie in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let n_train = (spec.train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::InvalidParameter(format!(
            "split of {n} rows at fraction {} leaves an empty side",
            spec.train_fraction
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let test = idx.split_off(n_train);
    Ok((idx, test))
}

pub fn split(data: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(data.len(), spec)?;
    Ok((data.select(&train)?, data.select(&test)?))
}
