//! Method-of-moments estimation of priors and class-conditional parameters.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::dataset::LabeledDataset;
use crate::distributions::{MultivariateGaussian, UniformInterval, UnivariateGaussian};
use crate::error::{check_dim, Error, Result};

/// Class priors `P(y = s) = n_s / N`, kept alongside the integer counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Priors {
    probs: Vec<f64>,
    counts: Vec<usize>,
}

impl Priors {
    /// Every count must be at least one.
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidParameter("priors need at least one class".into()));
        }
        if let Some(s) = counts.iter().position(|&n| n == 0) {
            return Err(Error::EmptyClass(s + 1));
        }
        let total: usize = counts.iter().sum();
        Ok(Self {
            probs: counts.iter().map(|&n| n as f64 / total as f64).collect(),
            counts: counts.to_vec(),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Divisor used for second central moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceEstimator {
    /// Divide by `n`: the raw moment estimator.
    #[default]
    Population,
    /// Divide by `n - 1`.
    Sample,
}

impl VarianceEstimator {
    fn divisor(self, n: usize) -> f64 {
        match self {
            VarianceEstimator::Population => n as f64,
            VarianceEstimator::Sample => (n - 1) as f64,
        }
    }
}

impl fmt::Display for VarianceEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VarianceEstimator::Population => "population",
            VarianceEstimator::Sample => "sample",
        })
    }
}

impl FromStr for VarianceEstimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "population" => Ok(VarianceEstimator::Population),
            "sample" => Ok(VarianceEstimator::Sample),
            other => Err(Error::InvalidParameter(format!("unknown variance estimator '{other}'"))),
        }
    }
}

pub fn estimate_priors(data: &LabeledDataset) -> Result<Priors> {
    Priors::from_counts(data.class_counts())
}

fn class_count(data: &LabeledDataset, class: usize) -> Result<usize> {
    data.class_counts()
        .get(class)
        .copied()
        .ok_or_else(|| Error::InvalidParameter(format!("class {} out of range", class + 1)))
}

fn require_count(data: &LabeledDataset, class: usize, needed: usize) -> Result<usize> {
    let got = class_count(data, class)?;
    if got < needed {
        return Err(Error::InsufficientData {
            class: class + 1,
            needed,
            got,
        });
    }
    Ok(got)
}

/// Mean and central second moment of a 1-d class, with 0-based `class`.
pub fn estimate_univariate(data: &LabeledDataset, class: usize) -> Result<UnivariateGaussian> {
    estimate_univariate_with(data, class, VarianceEstimator::Population)
}

pub fn estimate_univariate_with(
    data: &LabeledDataset,
    class: usize,
    estimator: VarianceEstimator,
) -> Result<UnivariateGaussian> {
    check_dim(1, data.dim())?;
    let n = require_count(data, class, 2)?;
    let values: Vec<f64> = data.class_rows(class).map(|x| x[0]).collect();
    if values.iter().all(|&v| v == values[0]) {
        return Err(Error::ZeroVariance(class + 1));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let variance = ss / estimator.divisor(n);
    if variance <= 0.0 {
        return Err(Error::ZeroVariance(class + 1));
    }
    UnivariateGaussian::new(mean, variance)
}

pub fn estimate_multivariate(data: &LabeledDataset, class: usize) -> Result<MultivariateGaussian> {
    estimate_multivariate_with(data, class, VarianceEstimator::Population)
}

pub fn estimate_multivariate_with(
    data: &LabeledDataset,
    class: usize,
    estimator: VarianceEstimator,
) -> Result<MultivariateGaussian> {
    let d = data.dim();
    let n = require_count(data, class, d + 1)?;
    let mut mean = DVector::<f64>::zeros(d);
    for x in data.class_rows(class) {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
    }
    mean /= n as f64;
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for x in data.class_rows(class) {
        for j in 0..d {
            let rj = x[j] - mean[j];
            for h in j..d {
                cov[(j, h)] += rj * (x[h] - mean[h]);
            }
        }
    }
    let div = estimator.divisor(n);
    for j in 0..d {
        for h in j..d {
            let v = cov[(j, h)] / div;
            cov[(j, h)] = v;
            cov[(h, j)] = v;
        }
    }
    MultivariateGaussian::new(mean, cov)
}

/// Support estimate `[min, max]` of a 1-d class.
pub fn estimate_uniform(data: &LabeledDataset, class: usize) -> Result<UniformInterval> {
    check_dim(1, data.dim())?;
    require_count(data, class, 2)?;
    let (lo, hi) = data
        .class_rows(class)
        .map(|x| x[0])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo == hi {
        return Err(Error::ZeroWidth(class + 1));
    }
    UniformInterval::new(lo, hi)
}
