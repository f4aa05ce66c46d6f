//! Seeded synthetic scenarios and the experiments that compare the generative
//! and discriminative classifiers on them.

use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{self, ClassDists, GenerativeModel, UniformBranch};
use crate::dataset::LabeledDataset;
use crate::distributions::{MultivariateGaussian, UniformInterval, UnivariateGaussian};
use crate::error::{Error, Result};
use crate::logit::{self, FeatureKind, FeatureMap, LogitModel, TrainConfig, TrainReport};
use crate::moments::{Priors, VarianceEstimator};
use crate::util::fmt_f64;

/// Identity of the random stream behind every generated dataset.
pub const GENERATOR: &str =
    "ChaCha20Rng(rand_chacha 0.9, seed_from_u64(splitmix64 stream seed)); normals: rand_distr 0.5 StandardNormal";

/// Stream used for training samples.
pub const TRAIN_STREAM: u64 = 0;
/// Stream used for held-out evaluation points.
pub const EVAL_STREAM: u64 = 1;

/// Covariances closer than this in every entry count as shared.
const SHARED_COV_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioParams {
    UnivariateGaussian {
        means: Vec<f64>,
        variances: Vec<f64>,
    },
    MultivariateGaussian {
        means: Vec<Vec<f64>>,
        /// One row-major `d x d` matrix per class, written as nested rows.
        covariances: Vec<Vec<Vec<f64>>>,
    },
    /// Class 1 on `[a, c]`, class 2 on `[b, d]`.
    UniformPair { intervals: [[f64; 2]; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(flatten)]
    pub params: ScenarioParams,
    pub class_sizes: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::InvalidSpec(e.message().to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario specs always serialise")
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_class_sizes(mut self, sizes: Vec<usize>) -> Self {
        self.class_sizes = sizes;
        self
    }

    pub fn kind_name(&self) -> &'static str {
        match self.params {
            ScenarioParams::UnivariateGaussian { .. } => "univariate_gaussian",
            ScenarioParams::MultivariateGaussian { .. } => "multivariate_gaussian",
            ScenarioParams::UniformPair { .. } => "uniform_pair",
        }
    }

    pub fn num_classes(&self) -> usize {
        self.class_sizes.len()
    }

    pub fn dim(&self) -> usize {
        match &self.params {
            ScenarioParams::MultivariateGaussian { means, .. } => means.first().map_or(0, Vec::len),
            _ => 1,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        !matches!(self.params, ScenarioParams::UniformPair { .. })
    }

    pub fn validate(&self) -> Result<()> {
        self.true_dists()?;
        let m = self.class_sizes.len();
        let min = match self.params {
            ScenarioParams::MultivariateGaussian { .. } => self.dim() + 1,
            _ => 2,
        };
        if let Some((s, &n)) = self.class_sizes.iter().enumerate().find(|(_, &n)| n < min) {
            return Err(Error::InvalidSpec(format!(
                "class {} has size {n}, need at least {min}",
                s + 1
            )));
        }
        if m < 2 {
            return Err(Error::InvalidSpec("need at least 2 classes".into()));
        }
        Ok(())
    }

    /// The generating class densities.
    pub fn true_dists(&self) -> Result<ClassDists> {
        let m = self.class_sizes.len();
        let invalid = |e: Error| Error::InvalidSpec(e.to_string());
        let count = |what: &str, got: usize| {
            if got == m {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{got} {what} for {m} class sizes")))
            }
        };
        Ok(match &self.params {
            ScenarioParams::UnivariateGaussian { means, variances } => {
                count("means", means.len())?;
                count("variances", variances.len())?;
                ClassDists::Univariate(
                    means
                        .iter()
                        .zip(variances)
                        .map(|(&mu, &v)| UnivariateGaussian::new(mu, v).map_err(invalid))
                        .collect::<Result<_>>()?,
                )
            }
            ScenarioParams::MultivariateGaussian { means, covariances } => {
                count("means", means.len())?;
                count("covariances", covariances.len())?;
                let d = means.first().map_or(0, Vec::len);
                if d == 0 {
                    return Err(Error::InvalidSpec("mean vectors must be non-empty".into()));
                }
                ClassDists::Multivariate(
                    means
                        .iter()
                        .zip(covariances)
                        .map(|(mu, cov)| {
                            if mu.len() != d || cov.len() != d || cov.iter().any(|r| r.len() != d) {
                                return Err(Error::InvalidSpec(format!(
                                    "every mean must have length {d} and every covariance be {d}x{d}"
                                )));
                            }
                            MultivariateGaussian::from_slices(mu, &cov.concat()).map_err(invalid)
                        })
                        .collect::<Result<_>>()?,
                )
            }
            ScenarioParams::UniformPair { intervals } => {
                count("intervals", 2)?;
                let [[a, c], [b, d]] = *intervals;
                if !(a < b && b < c && c < d) {
                    return Err(Error::InvalidSpec(format!(
                        "uniform_pair requires a < b < c < d for class 1 = [a, c] and class 2 = [b, d], got a={a}, b={b}, c={c}, d={d}"
                    )));
                }
                ClassDists::Uniform(vec![
                    UniformInterval::new(a, c).map_err(invalid)?,
                    UniformInterval::new(b, d).map_err(invalid)?,
                ])
            }
        })
    }

    /// Generative model with the true densities and priors from `class_sizes`.
    pub fn true_model(&self) -> Result<GenerativeModel> {
        let priors = Priors::from_counts(&self.class_sizes).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        GenerativeModel::new(priors, self.true_dists()?)
    }

    /// Quadratic iff two class covariances differ anywhere.
    pub fn auto_feature_map(&self) -> FeatureMap {
        let kind = match &self.params {
            ScenarioParams::UnivariateGaussian { variances, .. } => {
                if variances.iter().any(|v| (v - variances[0]).abs() > SHARED_COV_TOL) {
                    FeatureKind::Quadratic
                } else {
                    FeatureKind::Linear
                }
            }
            ScenarioParams::MultivariateGaussian { covariances, .. } => {
                let first = covariances[0].concat();
                let differs = covariances.iter().any(|c| {
                    c.concat()
                        .iter()
                        .zip(&first)
                        .any(|(a, b)| (a - b).abs() > SHARED_COV_TOL)
                });
                if differs {
                    FeatureKind::Quadratic
                } else {
                    FeatureKind::Linear
                }
            }
            ScenarioParams::UniformPair { .. } => FeatureKind::Linear,
        };
        FeatureMap::new(kind, self.dim())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `index` under `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base) ^ index)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(derive_seed(seed, stream))
}

/// Draws from one class density and appends the point to `out`.
struct Sampler {
    dists: ClassDists,
    chols: Vec<DMatrix<f64>>,
}

impl Sampler {
    fn new(dists: ClassDists) -> Self {
        let chols = match &dists {
            ClassDists::Multivariate(v) => v.iter().map(|g| g.chol_lower().clone()).collect(),
            _ => Vec::new(),
        };
        Self { dists, chols }
    }

    fn draw(&self, class: usize, rng: &mut ChaCha20Rng, out: &mut Vec<f64>) {
        match &self.dists {
            ClassDists::Univariate(v) => {
                let z: f64 = rng.sample(StandardNormal);
                out.push(v[class].mean() + v[class].variance().sqrt() * z);
            }
            ClassDists::Multivariate(v) => {
                let d = v[class].mean().len();
                let z = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
                let x = v[class].mean() + &self.chols[class] * z;
                out.extend(x.iter());
            }
            ClassDists::Uniform(v) => {
                let u: f64 = rng.random();
                out.push(v[class].lo() + v[class].width() * u);
            }
        }
    }
}

/// Training sample for `spec`: class blocks in label order, drawn from the
/// training stream of `spec.seed`.
pub fn sample(spec: &ScenarioSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let sampler = Sampler::new(spec.true_dists()?);
    let mut rng = rng_for(spec.seed, TRAIN_STREAM);
    let n: usize = spec.class_sizes.iter().sum();
    let mut features = Vec::with_capacity(n * spec.dim());
    let mut labels = Vec::with_capacity(n);
    for (s, &size) in spec.class_sizes.iter().enumerate() {
        for _ in 0..size {
            sampler.draw(s, &mut rng, &mut features);
            labels.push(s + 1);
        }
    }
    LabeledDataset::new(features, spec.dim(), &labels, spec.num_classes())
}

/// `n` held-out points from the class mixture with weights `class_sizes`.
pub fn sample_eval_points(spec: &ScenarioSpec, n: usize) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    let sampler = Sampler::new(spec.true_dists()?);
    let mut rng = rng_for(spec.seed, EVAL_STREAM);
    let total: usize = spec.class_sizes.iter().sum();
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let mut pick = rng.random_range(0..total);
        let mut class = 0;
        while pick >= spec.class_sizes[class] {
            pick -= spec.class_sizes[class];
            class += 1;
        }
        let mut x = Vec::with_capacity(spec.dim());
        sampler.draw(class, &mut rng, &mut x);
        points.push(x);
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareMode {
    /// Fit both models to a sampled training set.
    Estimated,
    /// Use the true parameters and inject closed-form coefficients as logit weights.
    Exact,
}

impl std::fmt::Display for CompareMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CompareMode::Estimated => "estimated",
            CompareMode::Exact => "exact",
        })
    }
}

impl std::str::FromStr for CompareMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "estimated" => Ok(CompareMode::Estimated),
            "exact" => Ok(CompareMode::Exact),
            other => Err(Error::InvalidParameter(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOptions {
    pub eval_points: usize,
    pub mode: CompareMode,
    /// Overrides the automatic feature-map choice.
    pub feature_kind: Option<FeatureKind>,
    pub train: TrainConfig,
    pub variance_estimator: VarianceEstimator,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            eval_points: 1000,
            mode: CompareMode::Estimated,
            feature_kind: None,
            train: TrainConfig::default(),
            variance_estimator: VarianceEstimator::Population,
        }
    }
}

/// One coefficient of `z_{s,M}`: truth, the moment-fitted generative model,
/// and the logistic fit.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientRow {
    /// 1-based class pair `(s, M)`.
    pub pair: (usize, usize),
    pub term: String,
    pub closed_form: f64,
    pub generative: f64,
    pub fitted: f64,
}

impl CoefficientRow {
    pub fn abs_diff(&self) -> f64 {
        (self.fitted - self.closed_form).abs()
    }
}

fn coefficient_rows(
    pair: (usize, usize),
    truth: &bayes::DiscriminantCoefficients,
    generative: &bayes::DiscriminantCoefficients,
    fitted: &bayes::DiscriminantCoefficients,
) -> Vec<CoefficientRow> {
    let row = |term: String, t: f64, g: f64, f: f64| CoefficientRow {
        pair,
        term,
        closed_form: t,
        generative: g,
        fitted: f,
    };
    let d = truth.dim();
    let mut rows = vec![row("alpha".into(), truth.alpha, generative.alpha, fitted.alpha)];
    for j in 0..d {
        rows.push(row(format!("beta[{}]", j + 1), truth.beta[j], generative.beta[j], fitted.beta[j]));
    }
    for j in 0..d {
        for h in j..d {
            rows.push(row(
                format!("gamma[{},{}]", j + 1, h + 1),
                truth.gamma[(j, h)],
                generative.gamma[(j, h)],
                fitted.gamma[(j, h)],
            ));
        }
    }
    rows
}

/// Agreement between the generative posterior and the expected piecewise
/// posterior on one region of the uniform-pair grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchCheck {
    pub branch: UniformBranch,
    pub points: usize,
    pub max_abs_dev: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub scenario: String,
    pub mode: CompareMode,
    pub generator: &'static str,
    pub seed: u64,
    pub n_train: usize,
    pub eval_points: usize,
    pub feature_map: FeatureMap,
    /// Largest |generative - logistic| class probability over the evaluation points.
    pub max_abs_prob_diff: f64,
    pub coefficient_table: Vec<CoefficientRow>,
    pub train_report: Option<TrainReport>,
    pub branch_checks: Vec<BranchCheck>,
    pub notes: Vec<String>,
}

impl ComparisonReport {
    pub fn max_coefficient_error(&self) -> f64 {
        self.coefficient_table
            .iter()
            .map(CoefficientRow::abs_diff)
            .fold(0.0, f64::max)
    }

    pub fn all_branches_pass(&self) -> bool {
        !self.branch_checks.is_empty() && self.branch_checks.iter().all(|b| b.passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario: {}", self.scenario);
        let _ = writeln!(s, "mode: {}", self.mode);
        let _ = writeln!(s, "generator: {}", self.generator);
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "n_train: {}", self.n_train);
        let _ = writeln!(s, "eval_points: {}", self.eval_points);
        let _ = writeln!(s, "feature_map: {}", self.feature_map.kind);
        let _ = writeln!(s, "max_abs_prob_diff: {}", fmt_f64(self.max_abs_prob_diff));
        if let Some(r) = &self.train_report {
            let _ = writeln!(
                s,
                "gradient_ascent: iterations={} converged={} final_grad_norm={} final_ll={} max_abs_weight={}",
                r.iterations,
                r.converged,
                fmt_f64(r.final_grad_norm),
                fmt_f64(r.final_ll),
                fmt_f64(r.max_abs_weight)
            );
        }
        if !self.coefficient_table.is_empty() {
            let _ = writeln!(s, "coefficients (pair, term, closed_form, generative, fitted, abs_diff):");
            for r in &self.coefficient_table {
                let _ = writeln!(
                    s,
                    "  ({},{}) {:<12} {:>24} {:>24} {:>24} {:>24}",
                    r.pair.0,
                    r.pair.1,
                    r.term,
                    fmt_f64(r.closed_form),
                    fmt_f64(r.generative),
                    fmt_f64(r.fitted),
                    fmt_f64(r.abs_diff())
                );
            }
        }
        if !self.branch_checks.is_empty() {
            let _ = writeln!(s, "piecewise posterior branches (branch, points, max_abs_dev, status):");
            for b in &self.branch_checks {
                let _ = writeln!(
                    s,
                    "  {:<8} {:>5} {:>24} {}",
                    b.branch.label(),
                    b.points,
                    fmt_f64(b.max_abs_dev),
                    if b.passed { "PASS" } else { "FAIL" }
                );
            }
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }

    pub const SUMMARY_HEADER: &'static str =
        "scenario,mode,seed,n_train,eval_points,feature_map,max_abs_prob_diff,max_coef_abs_diff,iterations,converged,final_grad_norm,final_ll";

    pub fn summary_csv_row(&self) -> String {
        let (it, conv, gn, ll) = match &self.train_report {
            Some(r) => (
                r.iterations.to_string(),
                r.converged.to_string(),
                fmt_f64(r.final_grad_norm),
                fmt_f64(r.final_ll),
            ),
            None => (String::new(), String::new(), String::new(), String::new()),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.scenario,
            self.mode,
            self.seed,
            self.n_train,
            self.eval_points,
            self.feature_map.kind,
            fmt_f64(self.max_abs_prob_diff),
            fmt_f64(self.max_coefficient_error()),
            it,
            conv,
            gn,
            ll
        )
    }

    pub const COEFFICIENT_HEADER: &'static str = "pair_m,pair_s,term,closed_form,generative,fitted,abs_diff";

    pub fn coefficient_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", Self::COEFFICIENT_HEADER);
        for r in &self.coefficient_table {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.pair.0,
                r.pair.1,
                r.term,
                fmt_f64(r.closed_form),
                fmt_f64(r.generative),
                fmt_f64(r.fitted),
                fmt_f64(r.abs_diff())
            );
        }
        s
    }

    /// Summary row and coefficient rows in one CSV document.
    pub fn to_csv(&self) -> String {
        format!(
            "{}\n{}\n\n{}",
            Self::SUMMARY_HEADER,
            self.summary_csv_row(),
            self.coefficient_csv()
        )
    }
}

fn reference_coefficients(model: &GenerativeModel) -> Result<Vec<bayes::DiscriminantCoefficients>> {
    let m = model.num_classes();
    (0..m - 1).map(|s| bayes::discriminant(model, s, m - 1)).collect()
}

/// Generative vs. discriminative posteriors on a Gaussian scenario.
pub fn run_equivalence_check(spec: &ScenarioSpec, opts: &CompareOptions) -> Result<ComparisonReport> {
    spec.validate()?;
    if !spec.is_gaussian() {
        return Err(Error::InvalidSpec("equivalence check needs a Gaussian scenario".into()));
    }
    let truth = spec.true_model()?;
    let auto = spec.auto_feature_map();
    let feature_map = FeatureMap::new(opts.feature_kind.unwrap_or(auto.kind), spec.dim());
    let m = spec.num_classes();
    let true_coeffs = reference_coefficients(&truth)?;
    let mut notes = Vec::new();

    let (generative, logistic, train_report, n_train) = match opts.mode {
        CompareMode::Exact => {
            let logistic = LogitModel::from_coefficients(feature_map, &true_coeffs)?;
            (truth.clone(), logistic, None, 0)
        }
        CompareMode::Estimated => {
            let data = sample(spec)?;
            let generative = GenerativeModel::fit_gaussian(&data, opts.variance_estimator)?;
            let (logistic, report) = logit::train(&data, feature_map, &opts.train)?;
            if !report.converged {
                notes.push(format!(
                    "gradient ascent stopped at max_iters={} before reaching grad_tol={}",
                    opts.train.max_iters,
                    fmt_f64(opts.train.grad_tol)
                ));
            }
            (generative, logistic, Some(report), data.len())
        }
    };
    if feature_map.kind == FeatureKind::Linear && auto.kind == FeatureKind::Quadratic {
        notes.push("linear feature map on classes with unequal covariances: logistic model is misspecified".into());
    }

    let gen_coeffs = reference_coefficients(&generative)?;
    let coefficient_table = (0..m - 1)
        .flat_map(|s| coefficient_rows((s + 1, m), &true_coeffs[s], &gen_coeffs[s], &logistic.coefficients(s)))
        .collect();

    let points = sample_eval_points(spec, opts.eval_points)?;
    let mut max_abs_prob_diff: f64 = 0.0;
    for x in &points {
        let p = bayes::posterior_direct(&generative, x)?;
        let q = logit::predict_proba(&logistic, x)?;
        for (a, b) in p.iter().zip(&q) {
            max_abs_prob_diff = max_abs_prob_diff.max((a - b).abs());
        }
    }

    Ok(ComparisonReport {
        scenario: spec.kind_name().to_string(),
        mode: opts.mode,
        generator: GENERATOR,
        seed: spec.seed,
        n_train,
        eval_points: opts.eval_points,
        feature_map,
        max_abs_prob_diff,
        coefficient_table,
        train_report,
        branch_checks: Vec::new(),
        notes,
    })
}

/// Evenly spaced grid over the true support `[a, d]` widened by a quarter of
/// its length on each side, so every piecewise region is visited.
pub fn uniform_grid(spec: &ScenarioSpec, n: usize) -> Result<Vec<f64>> {
    let ScenarioParams::UniformPair { intervals } = spec.params else {
        return Err(Error::InvalidSpec("grid needs a uniform_pair scenario".into()));
    };
    let (a, d) = (intervals[0][0], intervals[1][1]);
    let pad = 0.25 * (d - a);
    let (lo, hi) = (a - pad, d + pad);
    Ok(match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    })
}

/// Uniform pair: checks the generative posterior against the piecewise form on
/// every region and measures how far a linear logistic fit lands from it.
pub fn run_uniform_failure(spec: &ScenarioSpec, opts: &CompareOptions) -> Result<ComparisonReport> {
    spec.validate()?;
    if !matches!(spec.params, ScenarioParams::UniformPair { .. }) {
        return Err(Error::InvalidSpec("uniform failure run needs a uniform_pair scenario".into()));
    }
    let truth = spec.true_model()?;
    let feature_map = FeatureMap::new(opts.feature_kind.unwrap_or(FeatureKind::Linear), 1);
    let data = sample(spec)?;
    let (generative, n_train) = match opts.mode {
        CompareMode::Exact => (truth.clone(), 0),
        CompareMode::Estimated => (GenerativeModel::fit_uniform(&data)?, data.len()),
    };
    let (logistic, report) = logit::train(&data, feature_map, &opts.train)?;
    let (first, second) = bayes::uniform_pair(&generative)?;
    let (true_first, true_second) = bayes::uniform_pair(&truth)?;
    let grid = uniform_grid(spec, opts.eval_points)?;

    let order = [
        UniformBranch::BelowSupport,
        UniformBranch::OnlyFirst,
        UniformBranch::Overlap,
        UniformBranch::OnlySecond,
        UniformBranch::AboveSupport,
    ];
    let mut checks: Vec<BranchCheck> = order
        .iter()
        .map(|&branch| BranchCheck {
            branch,
            points: 0,
            max_abs_dev: 0.0,
            passed: true,
        })
        .collect();

    let mut max_logit_dev: f64 = 0.0;
    let mut saturated_on_first_only = 0usize;
    for &x in &grid {
        let branch = UniformBranch::classify(&first, &second, x);
        let check = checks.iter_mut().find(|c| c.branch == branch).expect("every branch listed");
        check.points += 1;
        let direct = bayes::posterior_direct(&generative, &[x]);
        let piecewise = bayes::posterior_uniform(&generative, x);
        let ok = match (branch, &direct, &piecewise) {
            (UniformBranch::BelowSupport | UniformBranch::AboveSupport, Err(e1), Err(e2)) => {
                *e1 == Error::UndefinedPosterior && *e2 == Error::UndefinedPosterior
            }
            (UniformBranch::OnlyFirst, Ok(p), Ok(q)) => p[0] == 1.0 && *q == 1.0,
            (UniformBranch::OnlySecond, Ok(p), Ok(q)) => p[0] == 0.0 && *q == 0.0,
            (UniformBranch::Overlap, Ok(p), Ok(q)) => {
                let dev = (p[0] - q).abs();
                check.max_abs_dev = check.max_abs_dev.max(dev);
                dev <= 1e-12
            }
            _ => false,
        };
        check.passed &= ok;

        let p_hat = logit::predict_proba(&logistic, &[x])?[0];
        if let Ok(reference) = bayes::posterior_uniform(&truth, x) {
            max_logit_dev = max_logit_dev.max((p_hat - reference).abs());
        }
        if UniformBranch::classify(&true_first, &true_second, x) == UniformBranch::OnlyFirst
            && p_hat >= 1.0 - 1e-12
        {
            saturated_on_first_only += 1;
        }
    }

    let mut notes = vec![
        format!("logistic_max_abs_dev_from_piecewise: {}", fmt_f64(max_logit_dev)),
        format!("logistic_reaches_probability_one_on_[a,b): {}", saturated_on_first_only > 0),
        "generative posterior is undefined outside [a,d]; the piecewise 0 below a is not reproduced".into(),
    ];
    if !report.converged {
        notes.push(format!(
            "gradient ascent stopped at max_iters={} (max |w| = {})",
            opts.train.max_iters,
            fmt_f64(report.max_abs_weight)
        ));
    }

    Ok(ComparisonReport {
        scenario: spec.kind_name().to_string(),
        mode: opts.mode,
        generator: GENERATOR,
        seed: spec.seed,
        n_train,
        eval_points: opts.eval_points,
        feature_map,
        max_abs_prob_diff: max_logit_dev,
        coefficient_table: Vec::new(),
        train_report: Some(report),
        branch_checks: checks,
        notes,
    })
}

/// Dispatches on the scenario kind.
pub fn run_comparison(spec: &ScenarioSpec, opts: &CompareOptions) -> Result<ComparisonReport> {
    if spec.is_gaussian() {
        run_equivalence_check(spec, opts)
    } else {
        run_uniform_failure(spec, opts)
    }
}

/// Runs independent scenarios in parallel. Scenario `i` is reseeded with
/// `derive_seed(base_seed, i)`; reports come back in input order.
pub fn run_batch(specs: &[ScenarioSpec], base_seed: u64, opts: &CompareOptions) -> Vec<Result<ComparisonReport>> {
    specs
        .par_iter()
        .enumerate()
        .map(|(i, spec)| run_comparison(&spec.clone().with_seed(derive_seed(base_seed, i as u64)), opts))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub n_train: usize,
    pub moments_secs: f64,
    pub gradient_secs: f64,
    pub gradient_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub repeats: usize,
    pub rows: Vec<TimingRow>,
}

impl TimingReport {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "timing (median of {} repeats; wall-clock, informational)\n{:>10} {:>14} {:>14} {:>10}\n",
            self.repeats, "n_train", "moments_s", "gradient_s", "iters"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>10} {:>14.6e} {:>14.6e} {:>10}",
                r.n_train, r.moments_secs, r.gradient_secs, r.gradient_iterations
            );
        }
        s
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median wall time of the moment fit and the gradient-ascent fit at each of
/// the given per-class size vectors. At least 5 repeats are always taken.
pub fn run_timing(spec: &ScenarioSpec, size_sets: &[Vec<usize>], repeats: usize, cfg: &TrainConfig) -> Result<TimingReport> {
    if !spec.is_gaussian() {
        return Err(Error::InvalidSpec("timing needs a Gaussian scenario".into()));
    }
    let repeats = repeats.max(5);
    let feature_map = spec.auto_feature_map();
    let mut rows = Vec::with_capacity(size_sets.len());
    for sizes in size_sets {
        let data = sample(&spec.clone().with_class_sizes(sizes.clone()))?;
        let mut moment_times = Vec::with_capacity(repeats);
        let mut gradient_times = Vec::with_capacity(repeats);
        let mut iterations = 0;
        for _ in 0..repeats {
            let t = Instant::now();
            let model = GenerativeModel::fit_gaussian(&data, VarianceEstimator::Population)?;
            moment_times.push(t.elapsed().as_secs_f64());
            std::hint::black_box(model);

            let t = Instant::now();
            let (model, report) = logit::train(&data, feature_map, cfg)?;
            gradient_times.push(t.elapsed().as_secs_f64());
            std::hint::black_box(model);
            iterations = report.iterations;
        }
        rows.push(TimingRow {
            n_train: data.len(),
            moments_secs: median(moment_times),
            gradient_secs: median(gradient_times),
            gradient_iterations: iterations,
        });
    }
    Ok(TimingReport { repeats, rows })
}
