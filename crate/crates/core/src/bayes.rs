//! Generative classifier: posteriors from class densities and priors, the
//! logistic form of the same posterior, and closed-form discriminant
//! coefficients for Gaussian class pairs.

use nalgebra::DMatrix;

use crate::dataset::LabeledDataset;
use crate::distributions::{
    ClassDensity, MultivariateGaussian, NaturalParamView, UniformInterval, UnivariateGaussian,
};
use crate::error::{check_dim, Error, Result};
use crate::moments::{self, Priors, VarianceEstimator};

/// Per-class densities of one homogeneous kind.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassDists {
    Univariate(Vec<UnivariateGaussian>),
    Multivariate(Vec<MultivariateGaussian>),
    Uniform(Vec<UniformInterval>),
}

impl ClassDists {
    pub fn len(&self) -> usize {
        match self {
            ClassDists::Univariate(v) => v.len(),
            ClassDists::Multivariate(v) => v.len(),
            ClassDists::Uniform(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_gaussian(&self) -> bool {
        !matches!(self, ClassDists::Uniform(_))
    }

    fn log_density(&self, class: usize, x: &[f64]) -> Result<f64> {
        match self {
            ClassDists::Univariate(v) => v[class].log_density(x),
            ClassDists::Multivariate(v) => v[class].log_density(x),
            ClassDists::Uniform(v) => v[class].log_density(x),
        }
    }

    fn dims(&self) -> Vec<usize> {
        match self {
            ClassDists::Univariate(v) => v.iter().map(ClassDensity::dim).collect(),
            ClassDists::Multivariate(v) => v.iter().map(ClassDensity::dim).collect(),
            ClassDists::Uniform(v) => v.iter().map(ClassDensity::dim).collect(),
        }
    }
}

/// Priors plus one density per class. Class indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeModel {
    priors: Priors,
    dists: ClassDists,
    dim: usize,
    naturals: Option<Vec<NaturalParamView>>,
}

impl GenerativeModel {
    pub fn new(priors: Priors, dists: ClassDists) -> Result<Self> {
        let m = dists.len();
        if m < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 classes, got {m}")));
        }
        if priors.num_classes() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: priors.num_classes(),
            });
        }
        let dims = dists.dims();
        let dim = dims[0];
        if let Some(&bad) = dims.iter().find(|&&d| d != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad });
        }
        let naturals = match &dists {
            ClassDists::Univariate(v) => Some(v.iter().map(UnivariateGaussian::to_natural).collect()),
            ClassDists::Multivariate(v) => Some(v.iter().map(MultivariateGaussian::to_natural).collect()),
            ClassDists::Uniform(_) => None,
        };
        Ok(Self {
            priors,
            dists,
            dim,
            naturals,
        })
    }

    /// Moment fit with Gaussian classes: univariate when `d = 1`, multivariate otherwise.
    pub fn fit_gaussian(data: &LabeledDataset, estimator: VarianceEstimator) -> Result<Self> {
        require_two_classes(data)?;
        let priors = moments::estimate_priors(data)?;
        let m = data.num_classes();
        let dists = if data.dim() == 1 {
            ClassDists::Univariate(
                (0..m)
                    .map(|s| moments::estimate_univariate_with(data, s, estimator))
                    .collect::<Result<_>>()?,
            )
        } else {
            ClassDists::Multivariate(
                (0..m)
                    .map(|s| moments::estimate_multivariate_with(data, s, estimator))
                    .collect::<Result<_>>()?,
            )
        };
        Self::new(priors, dists)
    }

    pub fn fit_uniform(data: &LabeledDataset) -> Result<Self> {
        require_two_classes(data)?;
        let priors = moments::estimate_priors(data)?;
        let dists = ClassDists::Uniform(
            (0..data.num_classes())
                .map(|s| moments::estimate_uniform(data, s))
                .collect::<Result<_>>()?,
        );
        Self::new(priors, dists)
    }

    pub fn priors(&self) -> &Priors {
        &self.priors
    }

    pub fn dists(&self) -> &ClassDists {
        &self.dists
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.dists.len()
    }

    /// Natural-parameter views, present for Gaussian kinds only.
    pub fn naturals(&self) -> Option<&[NaturalParamView]> {
        self.naturals.as_deref()
    }

    pub fn log_density(&self, class: usize, x: &[f64]) -> Result<f64> {
        self.check_class(class)?;
        check_dim(self.dim, x.len())?;
        self.dists.log_density(class, x)
    }

    fn check_class(&self, class: usize) -> Result<()> {
        if class < self.num_classes() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "class index {class} out of range for {} classes",
                self.num_classes()
            )))
        }
    }

    fn gaussian_naturals(&self) -> Result<&[NaturalParamView]> {
        self.naturals
            .as_deref()
            .ok_or_else(|| Error::InvalidParameter("operation requires Gaussian classes".into()))
    }
}

fn require_two_classes(data: &LabeledDataset) -> Result<()> {
    if data.num_classes() < 2 {
        return Err(Error::EmptyClass(2));
    }
    Ok(())
}

/// `P(y = m | x)` for every class, computed in log space with the largest
/// joint log-probability subtracted before exponentiation.
pub fn posterior_direct(model: &GenerativeModel, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(model.dim, x.len())?;
    let log_joint = (0..model.num_classes())
        .map(|s| Ok(model.priors.probs()[s].ln() + model.dists.log_density(s, x)?))
        .collect::<Result<Vec<f64>>>()?;
    let max = log_joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::UndefinedPosterior);
    }
    let weights: Vec<f64> = log_joint.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Index of the largest probability; ties go to the lowest index.
pub fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// Conditional log-odds `ln P(x|m) - ln P(x|s)` assembled from the
/// natural-parameter views: inner products minus log-normalizers plus carriers.
pub fn log_odds_cond(model: &GenerativeModel, m: usize, s: usize, x: &[f64]) -> Result<f64> {
    model.check_class(m)?;
    model.check_class(s)?;
    check_dim(model.dim, x.len())?;
    let nat = model.gaussian_naturals()?;
    let (vm, vs) = (&nat[m], &nat[s]);
    Ok((vm.inner(x)? - vs.inner(x)?) - (vm.log_normalizer - vs.log_normalizer)
        + (vm.carrier(x) - vs.carrier(x)))
}

/// `ln(n_m / n_s)`, formed as a difference of logs so it is exactly antisymmetric.
pub fn log_odds_uncond(priors: &Priors, m: usize, s: usize) -> f64 {
    let c = priors.counts();
    (c[m] as f64).ln() - (c[s] as f64).ln()
}

/// `z_{m,s}(x)` from the log-odds decomposition.
pub fn discriminant_value(model: &GenerativeModel, m: usize, s: usize, x: &[f64]) -> Result<f64> {
    Ok(log_odds_cond(model, m, s, x)? + log_odds_uncond(&model.priors, m, s))
}

/// `1 / (1 + Σ_{s≠m} exp(-z_{m,s}(x)))`, evaluated as `exp(-logsumexp(0, -z…))`
/// so large discriminants neither overflow nor lose the tail.
pub fn posterior_logistic_form(model: &GenerativeModel, m: usize, x: &[f64]) -> Result<f64> {
    model.check_class(m)?;
    let mut exps = Vec::with_capacity(model.num_classes());
    exps.push(0.0);
    for s in (0..model.num_classes()).filter(|&s| s != m) {
        exps.push(-discriminant_value(model, m, s, x)?);
    }
    Ok((-logsumexp(&exps)).exp())
}

pub(crate) fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `z(x) = alpha + betaᵀx + xᵀ gamma x` for a class pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminantCoefficients {
    pub alpha: f64,
    pub beta: Vec<f64>,
    /// Full symmetric matrix; the double sum runs over every `(j, h)`.
    pub gamma: DMatrix<f64>,
}

impl DiscriminantCoefficients {
    pub fn zeros(dim: usize) -> Self {
        Self {
            alpha: 0.0,
            beta: vec![0.0; dim],
            gamma: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    /// Largest absolute entrywise difference over alpha, beta and gamma.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst = (self.alpha - other.alpha).abs();
        for (a, b) in self.beta.iter().zip(&other.beta) {
            worst = worst.max((a - b).abs());
        }
        for (a, b) in self.gamma.iter().zip(other.gamma.iter()) {
            worst = worst.max((a - b).abs());
        }
        worst
    }

    pub fn is_linear(&self) -> bool {
        self.gamma.iter().all(|&g| g == 0.0)
    }
}

pub fn evaluate_discriminant(c: &DiscriminantCoefficients, x: &[f64]) -> Result<f64> {
    let d = c.dim();
    check_dim(d, x.len())?;
    let mut z = c.alpha;
    for (b, xj) in c.beta.iter().zip(x) {
        z += b * xj;
    }
    for j in 0..d {
        for h in 0..d {
            z += c.gamma[(j, h)] * x[j] * x[h];
        }
    }
    Ok(z)
}

/// Closed-form quadratic discriminant for two univariate Gaussian classes.
pub fn discriminant_univariate(
    g_m: &UnivariateGaussian,
    g_s: &UnivariateGaussian,
    priors: &Priors,
    m: usize,
    s: usize,
) -> DiscriminantCoefficients {
    let (mu_m, var_m) = (g_m.mean(), g_m.variance());
    let (mu_s, var_s) = (g_s.mean(), g_s.variance());
    let alpha = log_odds_uncond(priors, m, s)
        - 0.5 * ((var_m / var_s).ln() + (mu_m * mu_m / var_m - mu_s * mu_s / var_s));
    let beta = mu_m / var_m - mu_s / var_s;
    let gamma = -0.5 * (1.0 / var_m - 1.0 / var_s);
    DiscriminantCoefficients {
        alpha,
        beta: vec![beta],
        gamma: DMatrix::from_element(1, 1, gamma),
    }
}

/// Closed-form quadratic discriminant for two multivariate Gaussian classes,
/// written in terms of the precision matrices.
pub fn discriminant_multivariate(
    g_m: &MultivariateGaussian,
    g_s: &MultivariateGaussian,
    priors: &Priors,
    m: usize,
    s: usize,
) -> Result<DiscriminantCoefficients> {
    let d = g_m.dim();
    check_dim(d, g_s.dim())?;
    let (om, os) = (g_m.precision(), g_s.precision());
    let (mu_m, mu_s) = (g_m.mean(), g_s.mean());
    let alpha = log_odds_uncond(priors, m, s)
        - 0.5
            * ((g_m.log_det_cov() - g_s.log_det_cov())
                + (g_m.mahalanobis_mean() - g_s.mahalanobis_mean()));
    let beta = (0..d)
        .map(|j| (0..d).map(|h| om[(j, h)] * mu_m[h] - os[(j, h)] * mu_s[h]).sum())
        .collect();
    let gamma = DMatrix::from_fn(d, d, |j, h| -0.5 * (om[(j, h)] - os[(j, h)]));
    Ok(DiscriminantCoefficients { alpha, beta, gamma })
}

/// Coefficients of `z_{m,s}` for a Gaussian model of either kind.
pub fn discriminant(model: &GenerativeModel, m: usize, s: usize) -> Result<DiscriminantCoefficients> {
    model.check_class(m)?;
    model.check_class(s)?;
    match &model.dists {
        ClassDists::Univariate(v) => Ok(discriminant_univariate(&v[m], &v[s], &model.priors, m, s)),
        ClassDists::Multivariate(v) => discriminant_multivariate(&v[m], &v[s], &model.priors, m, s),
        ClassDists::Uniform(_) => Err(Error::InvalidParameter(
            "closed-form discriminants exist only for Gaussian classes".into(),
        )),
    }
}

/// Region of the line relative to two overlapping intervals `[a, c]`, `[b, d]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UniformBranch {
    /// `x < a`: neither class has density.
    BelowSupport,
    /// `a <= x < b`: only class 1.
    OnlyFirst,
    /// `b <= x <= c`: both classes.
    Overlap,
    /// `c < x <= d`: only class 2.
    OnlySecond,
    /// `x > d`: neither class has density.
    AboveSupport,
}

impl UniformBranch {
    pub fn classify(first: &UniformInterval, second: &UniformInterval, x: f64) -> Self {
        let (a, c, b, d) = (first.lo(), first.hi(), second.lo(), second.hi());
        if x < a {
            UniformBranch::BelowSupport
        } else if x < b {
            UniformBranch::OnlyFirst
        } else if x <= c {
            UniformBranch::Overlap
        } else if x <= d {
            UniformBranch::OnlySecond
        } else {
            UniformBranch::AboveSupport
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            UniformBranch::BelowSupport => "x<a",
            UniformBranch::OnlyFirst => "a<=x<b",
            UniformBranch::Overlap => "b<=x<=c",
            UniformBranch::OnlySecond => "c<x<=d",
            UniformBranch::AboveSupport => "x>d",
        }
    }
}

/// Validates the two-interval overlap pattern `a < b < c < d`.
pub fn uniform_pair(model: &GenerativeModel) -> Result<(UniformInterval, UniformInterval)> {
    let ClassDists::Uniform(v) = &model.dists else {
        return Err(Error::InvalidParameter("model does not have uniform classes".into()));
    };
    if v.len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "piecewise posterior needs exactly 2 uniform classes, got {}",
            v.len()
        )));
    }
    let (first, second) = (v[0], v[1]);
    let (a, c, b, d) = (first.lo(), first.hi(), second.lo(), second.hi());
    if !(a < b && b < c && c < d) {
        return Err(Error::InvalidOverlap { a, b, c, d });
    }
    Ok((first, second))
}

/// Piecewise posterior of class 1 for two overlapping uniform classes.
///
/// Outside `[a, d]` both densities vanish and `UndefinedPosterior` is returned.
pub fn posterior_uniform(model: &GenerativeModel, x: f64) -> Result<f64> {
    let (first, second) = uniform_pair(model)?;
    let p = model.priors.probs();
    match UniformBranch::classify(&first, &second, x) {
        UniformBranch::BelowSupport | UniformBranch::AboveSupport => Err(Error::UndefinedPosterior),
        UniformBranch::OnlyFirst => Ok(1.0),
        UniformBranch::Overlap => {
            let ratio = (p[1] / second.width()) / (p[0] / first.width());
            Ok(1.0 / (1.0 + ratio))
        }
        UniformBranch::OnlySecond => Ok(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uni(params: &[(f64, f64)], counts: &[usize]) -> GenerativeModel {
        GenerativeModel::new(
            Priors::from_counts(counts).unwrap(),
            ClassDists::Univariate(
                params
                    .iter()
                    .map(|&(m, v)| UnivariateGaussian::new(m, v).unwrap())
                    .collect(),
            ),
        )
        .unwrap()
    }

    fn uniform(intervals: &[(f64, f64)], counts: &[usize]) -> GenerativeModel {
        GenerativeModel::new(
            Priors::from_counts(counts).unwrap(),
            ClassDists::Uniform(
                intervals
                    .iter()
                    .map(|&(a, b)| UniformInterval::new(a, b).unwrap())
                    .collect(),
            ),
        )
        .unwrap()
    }

    #[test]
    fn posterior_direct_examples() {
        let m = uni(&[(1.0, 1.0), (0.0, 1.0)], &[5, 5]);
        let p = posterior_direct(&m, &[0.5]).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
        assert_eq!(argmax(&p), 0);

        let u = uniform(&[(0.0, 2.0), (1.0, 3.0)], &[5, 5]);
        assert_eq!(posterior_direct(&u, &[0.5]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(posterior_direct(&u, &[5.0]).unwrap_err(), Error::UndefinedPosterior);

        let same = uni(&[(0.3, 2.0), (0.3, 2.0), (0.3, 2.0)], &[2, 3, 5]);
        for x in [-3.0, 0.0, 7.5] {
            let p = posterior_direct(&same, &[x]).unwrap();
            for (a, b) in p.iter().zip([0.2, 0.3, 0.5]) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn log_odds_examples() {
        let m = uni(&[(1.0, 1.0), (0.0, 1.0)], &[1, 1]);
        assert_eq!(log_odds_cond(&m, 0, 0, &[0.7]).unwrap(), 0.0);
        assert!(log_odds_cond(&m, 0, 1, &[0.5]).unwrap().abs() < 1e-15);

        let m = uni(&[(0.0, 1.0), (0.0, 4.0)], &[1, 1]);
        assert!((log_odds_cond(&m, 0, 1, &[0.0]).unwrap() - 0.5 * 4f64.ln()).abs() < 1e-12);

        let p = Priors::from_counts(&[20, 10]).unwrap();
        assert!((log_odds_uncond(&p, 0, 1) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_odds_uncond(&p, 0, 1), -log_odds_uncond(&p, 1, 0));
        assert_eq!(log_odds_uncond(&Priors::from_counts(&[7, 7]).unwrap(), 0, 1), 0.0);

        let u = uniform(&[(0.0, 2.0), (1.0, 3.0)], &[1, 1]);
        assert!(log_odds_cond(&u, 0, 1, &[1.5]).is_err());
        assert!(matches!(
            log_odds_cond(&uni(&[(0.0, 1.0), (1.0, 1.0)], &[1, 1]), 0, 1, &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn logistic_form_examples() {
        let m = uni(&[(1.0, 1.0), (0.0, 1.0)], &[3, 3]);
        assert!((posterior_logistic_form(&m, 0, &[0.5]).unwrap() - 0.5).abs() < 1e-15);

        let mut last = 0.0;
        for x in [1.0, 5.0, 50.0, 500.0, 5000.0] {
            let p = posterior_logistic_form(&m, 0, &[x]).unwrap();
            assert!(p >= last && p <= 1.0);
            last = p;
        }
        assert_eq!(last, 1.0);
        assert_eq!(posterior_logistic_form(&m, 0, &[-5000.0]).unwrap(), 0.0);
    }

    #[test]
    fn discriminant_examples() {
        let p = Priors::from_counts(&[4, 4]).unwrap();
        let g1 = UnivariateGaussian::new(1.0, 1.0).unwrap();
        let g0 = UnivariateGaussian::new(0.0, 1.0).unwrap();
        let c = discriminant_univariate(&g1, &g0, &p, 0, 1);
        assert_eq!((c.alpha, c.beta[0], c.gamma[(0, 0)]), (-0.5, 1.0, 0.0));
        assert_eq!(evaluate_discriminant(&c, &[0.5]).unwrap(), 0.0);

        let a = UnivariateGaussian::new(0.0, 1.0).unwrap();
        let b = UnivariateGaussian::new(0.0, 4.0).unwrap();
        let c = discriminant_univariate(&a, &b, &p, 0, 1);
        assert!((c.alpha - 2f64.ln()).abs() < 1e-12);
        assert_eq!(c.beta[0], 0.0);
        assert!((c.gamma[(0, 0)] + 0.375).abs() < 1e-12);

        let c = discriminant_univariate(&g1, &g1, &p, 0, 1);
        assert_eq!((c.alpha, c.beta[0], c.gamma[(0, 0)]), (0.0, 0.0, 0.0));

        let z = DiscriminantCoefficients::zeros(3);
        assert_eq!(evaluate_discriminant(&z, &[1.0, -2.0, 9.0]).unwrap(), 0.0);
        assert!(evaluate_discriminant(&z, &[1.0]).is_err());
    }

    #[test]
    fn multivariate_discriminant_examples() {
        let p = Priors::from_counts(&[2, 2]).unwrap();
        let gm = MultivariateGaussian::from_slices(&[1.0, 0.0], &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let gs = MultivariateGaussian::from_slices(&[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let c = discriminant_multivariate(&gm, &gs, &p, 0, 1).unwrap();
        assert!((c.alpha + 0.5).abs() < 1e-12);
        assert_eq!(c.beta, vec![1.0, 0.0]);
        assert!(c.is_linear());

        let shared = [2.0, 0.7, 0.7, 1.5];
        let gm = MultivariateGaussian::from_slices(&[1.0, -3.0], &shared).unwrap();
        let gs = MultivariateGaussian::from_slices(&[0.2, 4.0], &shared).unwrap();
        assert!(discriminant_multivariate(&gm, &gs, &p, 0, 1).unwrap().is_linear());

        let g3 = MultivariateGaussian::from_slices(&[0.0; 3], &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(discriminant_multivariate(&gm, &g3, &p, 0, 1).is_err());
    }

    #[test]
    fn multivariate_d1_matches_univariate() {
        let p = Priors::from_counts(&[3, 7]).unwrap();
        for &((m1, v1), (m2, v2)) in &[((1.0, 2.0), (-0.5, 0.3)), ((0.0, 1.0), (0.0, 4.0))] {
            let cu = discriminant_univariate(
                &UnivariateGaussian::new(m1, v1).unwrap(),
                &UnivariateGaussian::new(m2, v2).unwrap(),
                &p,
                0,
                1,
            );
            let cm = discriminant_multivariate(
                &MultivariateGaussian::from_slices(&[m1], &[v1]).unwrap(),
                &MultivariateGaussian::from_slices(&[m2], &[v2]).unwrap(),
                &p,
                0,
                1,
            )
            .unwrap();
            assert!(cu.max_abs_diff(&cm) < 1e-12);
        }
    }

    #[test]
    fn uniform_piecewise_examples() {
        let u = uniform(&[(0.0, 2.0), (1.0, 3.0)], &[10, 10]);
        assert_eq!(posterior_uniform(&u, 1.5).unwrap(), 0.5);
        assert_eq!(posterior_uniform(&u, 0.5).unwrap(), 1.0);
        assert_eq!(posterior_uniform(&u, 2.5).unwrap(), 0.0);
        assert_eq!(posterior_uniform(&u, -0.5).unwrap_err(), Error::UndefinedPosterior);
        assert_eq!(posterior_uniform(&u, 3.5).unwrap_err(), Error::UndefinedPosterior);
        // boundaries
        assert_eq!(posterior_uniform(&u, 0.0).unwrap(), 1.0);
        assert_eq!(posterior_uniform(&u, 1.0).unwrap(), 0.5);
        assert_eq!(posterior_uniform(&u, 2.0).unwrap(), 0.5);
        assert_eq!(posterior_uniform(&u, 3.0).unwrap(), 0.0);

        let nested = uniform(&[(0.0, 3.0), (1.0, 2.0)], &[1, 1]);
        assert!(matches!(posterior_uniform(&nested, 1.5), Err(Error::InvalidOverlap { .. })));
    }

    #[test]
    fn uniform_piecewise_matches_direct() {
        let u = uniform(&[(-1.0, 2.5), (0.5, 4.0)], &[30, 12]);
        for i in 0..=200 {
            let x = -2.0 + 7.0 * i as f64 / 200.0;
            match (posterior_uniform(&u, x), posterior_direct(&u, &[x])) {
                (Ok(p), Ok(q)) => assert!((p - q[0]).abs() < 1e-12, "x={x}"),
                (Err(a), Err(b)) => assert_eq!(a, b),
                other => panic!("mismatch at {x}: {other:?}"),
            }
        }
    }

    #[test]
    fn doubling_counts_leaves_posteriors() {
        let a = uni(&[(0.0, 1.0), (2.0, 0.5), (-1.0, 3.0)], &[3, 5, 7]);
        let b = uni(&[(0.0, 1.0), (2.0, 0.5), (-1.0, 3.0)], &[6, 10, 14]);
        for x in [-2.0, 0.0, 1.3] {
            assert_eq!(posterior_direct(&a, &[x]).unwrap(), posterior_direct(&b, &[x]).unwrap());
        }
    }

    #[test]
    fn model_validation() {
        let p = Priors::from_counts(&[1, 1]).unwrap();
        assert!(GenerativeModel::new(
            p.clone(),
            ClassDists::Univariate(vec![UnivariateGaussian::new(0.0, 1.0).unwrap()])
        )
        .is_err());
        let mixed = ClassDists::Multivariate(vec![
            MultivariateGaussian::from_slices(&[0.0], &[1.0]).unwrap(),
            MultivariateGaussian::from_slices(&[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0]).unwrap(),
        ]);
        assert!(GenerativeModel::new(p, mixed).is_err());
    }

    proptest! {
        #[test]
        fn antisymmetry_and_identity(
            m1 in -5.0f64..5.0, v1 in 0.1f64..5.0,
            m2 in -5.0f64..5.0, v2 in 0.1f64..5.0,
            n1 in 1usize..50, n2 in 1usize..50,
            x in -10.0f64..10.0,
        ) {
            let model = uni(&[(m1, v1), (m2, v2)], &[n1, n2]);
            let c01 = discriminant(&model, 0, 1).unwrap();
            let c10 = discriminant(&model, 1, 0).unwrap();
            let z01 = evaluate_discriminant(&c01, &[x]).unwrap();
            let z10 = evaluate_discriminant(&c10, &[x]).unwrap();
            prop_assert!((z01 + z10).abs() < 1e-10);
            let oracle = model.log_density(0, &[x]).unwrap() - model.log_density(1, &[x]).unwrap()
                + ((n1 as f64) / (n2 as f64)).ln();
            prop_assert!((z01 - oracle).abs() < 1e-9);
            let p = posterior_direct(&model, &[x]).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
