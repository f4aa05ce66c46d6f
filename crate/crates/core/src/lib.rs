//! Generative Bayesian classifiers and multiclass logistic regression side by side.
//!
//! The generative side fits class priors and Gaussian or uniform class
//! densities by the method of moments and classifies with Bayes' rule. The
//! discriminative side fits a reference-class softmax model by gradient ascent
//! on linear or quadratic features. For Gaussian classes the two are linked by
//! closed-form discriminant coefficients, and [`harness`] measures how closely
//! the fitted models agree.

pub mod bayes;
pub mod cli;
pub mod dataset;
pub mod distributions;
pub mod error;
pub mod format;
pub mod harness;
pub mod logit;
pub mod moments;
mod util;

pub use bayes::{DiscriminantCoefficients, GenerativeModel};
pub use dataset::LabeledDataset;
pub use distributions::{MultivariateGaussian, NaturalParamView, UniformInterval, UnivariateGaussian};
pub use error::{Error, Result};
pub use logit::{FeatureKind, FeatureMap, LogitModel, TrainConfig, TrainReport};
pub use moments::{Priors, VarianceEstimator};
pub use util::{fmt_f64, parse_f64};
