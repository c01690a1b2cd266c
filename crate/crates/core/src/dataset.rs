//! Labeled tabular datasets: UCI loaders, min-max scaling, stratified splits
//! and the exported CSV format.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::seed;

pub const IRIS_CLASSES: [&str; 3] = ["Iris-setosa", "Iris-versicolor", "Iris-virginica"];
pub const IRIS_ATTRIBUTES: [&str; 4] = ["sepal_length", "sepal_width", "petal_length", "petal_width"];
pub const WDBC_CLASSES: [&str; 2] = ["M", "B"];

const WDBC_FEATURES: [&str; 10] = [
    "radius",
    "texture",
    "perimeter",
    "area",
    "smoothness",
    "compactness",
    "concavity",
    "concave_points",
    "symmetry",
    "fractal_dimension",
];

/// Names of the 30 WDBC attributes in file order (means, standard errors, worst).
pub fn wdbc_attribute_names() -> Vec<String> {
    ["mean", "se", "worst"]
        .iter()
        .flat_map(|suffix| WDBC_FEATURES.iter().map(move |f| format!("{f}_{suffix}")))
        .collect()
}

/// Per-attribute `(min, max)` recorded by [`Dataset::min_max_normalize`].
pub type NormParams<T> = Vec<(T, T)>;

/// Labeled tabular data. Labels are 0-based class indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    features: Matrix<T>,
    labels: Vec<usize>,
    n_classes: usize,
    attribute_names: Vec<String>,
    norm_params: Option<NormParams<T>>,
}

/// A partition of one dataset into the batch used during generation and the
/// held-out validating batch.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSplit<T> {
    pub train_test: Dataset<T>,
    pub validate: Dataset<T>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(
        features: Matrix<T>,
        labels: Vec<usize>,
        n_classes: usize,
        attribute_names: Vec<String>,
    ) -> Result<Self> {
        if n_classes == 0 {
            return Err(Error::Config("a dataset needs at least one class".into()));
        }
        if features.rows() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if attribute_names.len() != features.cols() {
            return Err(Error::Dimension(format!(
                "{} attribute names for {} columns",
                attribute_names.len(),
                features.cols()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::Dimension(format!("label {bad} outside 0..{n_classes}")));
        }
        if !features.is_finite() {
            return Err(Error::Degenerate("non-finite feature value".into()));
        }
        Ok(Self { features, labels, n_classes, attribute_names, norm_params: None })
    }

    /// Same as [`Dataset::new`] with generic `attr_j` names.
    pub fn unnamed(features: Matrix<T>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        let names = default_names(features.cols());
        Self::new(features, labels, n_classes, names)
    }

    /// Attaches normalization parameters to data that is already in `[0, 1]`.
    pub fn with_norm_params(mut self, params: NormParams<T>) -> Result<Self> {
        if params.len() != self.n_attributes() {
            return Err(Error::Dimension(format!(
                "{} normalization pairs for {} attributes",
                params.len(),
                self.n_attributes()
            )));
        }
        self.norm_params = Some(params);
        Ok(self)
    }

    #[inline]
    pub fn features(&self) -> &Matrix<T> {
        &self.features
    }

    #[inline]
    pub(crate) fn features_mut(&mut self) -> &mut Matrix<T> {
        &mut self.features
    }

    #[inline]
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    #[inline]
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    #[inline]
    pub fn n_instances(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn n_attributes(&self) -> usize {
        self.features.cols()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn norm_params(&self) -> Option<&NormParams<T>> {
        self.norm_params.as_ref()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Instance indices grouped by class, each group in ascending order.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.n_classes];
        for (i, &l) in self.labels.iter().enumerate() {
            groups[l].push(i);
        }
        groups
    }

    /// Subset of instances, keeping class count, names and normalization.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
            attribute_names: self.attribute_names.clone(),
            norm_params: self.norm_params.clone(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> Dataset<U> {
        Dataset {
            features: self.features.cast(),
            labels: self.labels.clone(),
            n_classes: self.n_classes,
            attribute_names: self.attribute_names.clone(),
            norm_params: self
                .norm_params
                .as_ref()
                .map(|p| p.iter().map(|&(lo, hi)| (U::of(lo.to_f64_lossy()), U::of(hi.to_f64_lossy()))).collect()),
        }
    }

    /// Min-max scales every attribute to `[0, 1]`, recording `(min, max)`.
    ///
    /// Constant attributes map to 0 and are logged as a warning.
    pub fn min_max_normalize(&self) -> Result<Self> {
        let (normalized, constant) = self.min_max_normalize_reporting()?;
        for j in constant {
            log::warn!("attribute {} ({}) is constant; mapped to 0", j, self.attribute_names[j]);
        }
        Ok(normalized)
    }

    /// [`Dataset::min_max_normalize`], also returning the indices of constant attributes.
    pub fn min_max_normalize_reporting(&self) -> Result<(Self, Vec<usize>)> {
        if self.norm_params.is_some() {
            return Err(Error::AlreadyNormalized);
        }
        if self.is_empty() {
            return Err(Error::Empty("cannot normalize a dataset with no instances".into()));
        }
        let cols = self.n_attributes();
        let mut params = Vec::with_capacity(cols);
        let mut constant = Vec::new();
        for j in 0..cols {
            let col = self.features.column(j);
            let lo = col.iter().copied().fold(T::infinity(), T::min);
            let hi = col.iter().copied().fold(T::neg_infinity(), T::max);
            if hi == lo {
                constant.push(j);
            }
            params.push((lo, hi));
        }
        let mut features = self.features.clone();
        for i in 0..features.rows() {
            for (j, v) in features.row_mut(i).iter_mut().enumerate() {
                let (lo, hi) = params[j];
                *v = if hi == lo { T::zero() } else { (*v - lo) / (hi - lo) };
            }
        }
        let mut out = self.clone();
        out.features = features;
        out.norm_params = Some(params);
        Ok((out, constant))
    }

    /// Maps normalized data back to original units and clears the parameters.
    pub fn denormalize(&self) -> Result<Self> {
        let params = self.norm_params.as_ref().ok_or(Error::NotNormalized)?;
        let features = denormalize_matrix(&self.features, params)?;
        let mut out = self.clone();
        out.features = features;
        out.norm_params = None;
        Ok(out)
    }

    /// Applies recorded `(min, max)` parameters from another dataset.
    pub fn normalize_with(&self, params: &NormParams<T>) -> Result<Self> {
        if self.norm_params.is_some() {
            return Err(Error::AlreadyNormalized);
        }
        if params.len() != self.n_attributes() {
            return Err(Error::Dimension(format!(
                "{} normalization pairs for {} attributes",
                params.len(),
                self.n_attributes()
            )));
        }
        let mut out = self.clone();
        for i in 0..out.features.rows() {
            for (j, v) in out.features.row_mut(i).iter_mut().enumerate() {
                let (lo, hi) = params[j];
                *v = if hi == lo { T::zero() } else { (*v - lo) / (hi - lo) };
            }
        }
        out.norm_params = Some(params.clone());
        Ok(out)
    }

    /// Stratified random split. Each class contributes
    /// `round(train_fraction * class_count)` instances to `train_test`; the
    /// largest class is then nudged by one so the total matches
    /// `round(train_fraction * n)` where that is possible.
    pub fn split_random(&self, train_fraction: f64, seed: u64) -> Result<DataSplit<T>> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::Split(format!("train fraction {train_fraction} outside (0, 1)")));
        }
        let counts = self.class_counts();
        let mut take: Vec<usize> =
            counts.iter().map(|&c| (train_fraction * c as f64).round() as usize).collect();
        let target = (train_fraction * self.n_instances() as f64).round() as usize;
        let total: usize = take.iter().sum();
        if let Some(largest) = (0..counts.len()).max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a))) {
            if total > target && take[largest] > 1 {
                take[largest] -= 1;
            } else if total < target && take[largest] < counts[largest] {
                take[largest] += 1;
            }
        }
        if let Some(class) = (0..counts.len()).find(|&c| take[c] == 0) {
            return Err(Error::Split(format!(
                "train fraction {train_fraction} leaves class {class} without a training instance; \
                 use split_scarce for per-class sampling"
            )));
        }
        Ok(self.split_by_class_counts(&take, seed))
    }

    /// Exactly `per_class` uniformly sampled instances of every class go to
    /// `train_test`; everything else is validation data.
    pub fn split_scarce(&self, per_class: usize, seed: u64) -> Result<DataSplit<T>> {
        if per_class == 0 {
            return Err(Error::Split("per_class must be positive".into()));
        }
        let counts = self.class_counts();
        if let Some((class, &count)) = counts.iter().enumerate().find(|(_, &c)| c < per_class) {
            return Err(Error::Split(format!(
                "class {class} has {count} instances, fewer than the requested {per_class}"
            )));
        }
        Ok(self.split_by_class_counts(&vec![per_class; counts.len()], seed))
    }

    fn split_by_class_counts(&self, take: &[usize], seed: u64) -> DataSplit<T> {
        let mut rng = seed::rng(seed::derive(seed, &[seed::tag::SPLIT]));
        let mut in_train = vec![false; self.n_instances()];
        for (class, mut members) in self.class_indices().into_iter().enumerate() {
            members.shuffle(&mut rng);
            for &i in &members[..take[class]] {
                in_train[i] = true;
            }
        }
        let (train, validate): (Vec<usize>, Vec<usize>) =
            (0..self.n_instances()).partition(|&i| in_train[i]);
        DataSplit { train_test: self.subset(&train), validate: self.subset(&validate) }
    }

    /// Exported CSV: header `attr_0,...,attr_{k-1},label`, full precision values.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for j in 0..self.n_attributes() {
            let _ = write!(out, "attr_{j},");
        }
        out.push_str("label\n");
        for (row, label) in self.features.iter_rows().zip(&self.labels) {
            for v in row {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{label}");
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn denormalize_matrix<T: Scalar>(m: &Matrix<T>, params: &NormParams<T>) -> Result<Matrix<T>> {
    if params.len() != m.cols() {
        return Err(Error::Dimension(format!(
            "{} normalization pairs for {} attributes",
            params.len(),
            m.cols()
        )));
    }
    let mut out = m.clone();
    for i in 0..out.rows() {
        for (j, v) in out.row_mut(i).iter_mut().enumerate() {
            let (lo, hi) = params[j];
            *v = *v * (hi - lo) + lo;
        }
    }
    Ok(out)
}

fn default_names(k: usize) -> Vec<String> {
    (0..k).map(|j| format!("attr_{j}")).collect()
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_value<T: Scalar>(field: &str, line: usize) -> Result<T> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::Parse { line, message: format!("non-numeric attribute {field:?}") })?;
    if !v.is_finite() {
        return Err(Error::Parse { line, message: format!("non-finite attribute {field:?}") });
    }
    Ok(T::of(v))
}

/// Reads UCI `iris.data`.
pub fn load_iris<T: Scalar>(path: impl AsRef<Path>) -> Result<Dataset<T>> {
    parse_iris(&read(path.as_ref())?)
}

pub fn parse_iris<T: Scalar>(text: &str) -> Result<Dataset<T>> {
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse { line, message: format!("expected 5 fields, found {}", fields.len()) });
        }
        for f in &fields[..4] {
            values.push(parse_value::<T>(f, line)?);
        }
        let class = fields[4].trim();
        let label = IRIS_CLASSES
            .iter()
            .position(|&c| c == class)
            .ok_or_else(|| Error::Parse { line, message: format!("unknown class {class:?}") })?;
        labels.push(label);
    }
    let features = Matrix::from_vec(labels.len(), 4, values)?;
    Dataset::new(features, labels, 3, IRIS_ATTRIBUTES.iter().map(|s| s.to_string()).collect())
}

/// Reads UCI `wdbc.data`; the ID column is dropped.
pub fn load_wdbc<T: Scalar>(path: impl AsRef<Path>) -> Result<Dataset<T>> {
    parse_wdbc(&read(path.as_ref())?)
}

pub fn parse_wdbc<T: Scalar>(text: &str) -> Result<Dataset<T>> {
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 32 {
            return Err(Error::Parse { line, message: format!("expected 32 fields, found {}", fields.len()) });
        }
        let diagnosis = fields[1].trim();
        let label = WDBC_CLASSES
            .iter()
            .position(|&c| c == diagnosis)
            .ok_or_else(|| Error::Parse { line, message: format!("unknown diagnosis {diagnosis:?}") })?;
        for f in &fields[2..] {
            values.push(parse_value::<T>(f, line)?);
        }
        labels.push(label);
    }
    let features = Matrix::from_vec(labels.len(), 30, values)?;
    Dataset::new(features, labels, 2, wdbc_attribute_names())
}

/// Reads a dataset in the exported CSV format. The class count is inferred
/// as `max(label) + 1` unless `n_classes` is given.
pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, n_classes: Option<usize>) -> Result<Dataset<T>> {
    parse_csv(&read(path.as_ref())?, n_classes)
}

pub fn parse_csv<T: Scalar>(text: &str, n_classes: Option<usize>) -> Result<Dataset<T>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Empty("CSV has no header".into()))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    if names.last() != Some(&"label") {
        return Err(Error::Parse { line: 1, message: "last header column must be `label`".into() });
    }
    let k = names.len() - 1;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != k + 1 {
            return Err(Error::Parse { line, message: format!("expected {} fields, found {}", k + 1, fields.len()) });
        }
        for f in &fields[..k] {
            values.push(parse_value::<T>(f, line)?);
        }
        let label: usize = fields[k]
            .trim()
            .parse()
            .map_err(|_| Error::Parse { line, message: format!("invalid label {:?}", fields[k]) })?;
        labels.push(label);
    }
    let inferred = labels.iter().max().map_or(1, |&m| m + 1);
    let n_classes = n_classes.unwrap_or(inferred);
    let features = Matrix::from_vec(labels.len(), k, values)?;
    Dataset::new(features, labels, n_classes, names[..k].iter().map(|s| s.to_string()).collect())
}
