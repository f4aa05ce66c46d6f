use crate::error::{Error, Result};

/// N labelled observations with d real features each.
///
/// Labels are supplied 1-based (`1..=M`) and stored as 0-based class indices.
/// Features are kept row-major in a single buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    dim: usize,
    num_classes: usize,
    class_counts: Vec<usize>,
}

impl LabeledDataset {
    /// Builds a dataset from a row-major feature buffer and 1-based labels.
    pub fn new(features: Vec<f64>, dim: usize, labels: &[usize], num_classes: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDataset("feature dimension must be at least 1".into()));
        }
        if labels.is_empty() {
            return Err(Error::InvalidDataset("dataset has no observations".into()));
        }
        if num_classes == 0 {
            return Err(Error::InvalidDataset("number of classes must be at least 1".into()));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::InvalidDataset(format!(
                "{} feature values do not form {} rows of dimension {}",
                features.len(),
                labels.len(),
                dim
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite feature in row {}",
                pos / dim + 1
            )));
        }
        let mut class_counts = vec![0; num_classes];
        let mut stored = Vec::with_capacity(labels.len());
        for (i, &y) in labels.iter().enumerate() {
            if y == 0 || y > num_classes {
                return Err(Error::InvalidDataset(format!(
                    "label {y} in row {} is outside 1..={num_classes}",
                    i + 1
                )));
            }
            class_counts[y - 1] += 1;
            stored.push(y - 1);
        }
        Ok(Self {
            features,
            labels: stored,
            dim,
            num_classes,
            class_counts,
        })
    }

    /// Builds a dataset from per-observation rows. `num_classes` defaults to the
    /// largest label when `None`.
    pub fn from_rows(rows: &[Vec<f64>], labels: &[usize], num_classes: Option<usize>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::InvalidDataset(format!("row {} is ragged", i + 1)));
        }
        if rows.len() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let m = num_classes.unwrap_or_else(|| labels.iter().copied().max().unwrap_or(0));
        Self::new(rows.concat(), dim, labels, m)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    /// Feature vector of observation `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// 0-based class index of observation `i`.
    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], usize)> + '_ {
        self.features
            .chunks_exact(self.dim)
            .zip(self.labels.iter().copied())
    }

    /// Rows belonging to 0-based class `class`.
    pub fn class_rows(&self, class: usize) -> impl Iterator<Item = &[f64]> + '_ {
        self.rows().filter(move |(_, y)| *y == class).map(|(x, _)| x)
    }
}
