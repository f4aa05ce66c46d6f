//! Multiclass logistic regression with a reference class, fitted by gradient
//! ascent on the conditional log-likelihood.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::bayes::DiscriminantCoefficients;
use crate::dataset::LabeledDataset;
use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Linear,
    /// Raw features followed by every product `x_j x_h` with `j <= h`.
    Quadratic,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Linear => "linear",
            FeatureKind::Quadratic => "quadratic",
        })
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(FeatureKind::Linear),
            "quadratic" => Ok(FeatureKind::Quadratic),
            other => Err(Error::InvalidParameter(format!("unknown feature map '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureMap {
    pub kind: FeatureKind,
    pub input_dim: usize,
}

impl FeatureMap {
    pub fn new(kind: FeatureKind, input_dim: usize) -> Self {
        Self { kind, input_dim }
    }

    pub fn output_dim(&self) -> usize {
        let d = self.input_dim;
        match self.kind {
            FeatureKind::Linear => d,
            FeatureKind::Quadratic => d + d * (d + 1) / 2,
        }
    }

    pub fn expand(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim, x.len())?;
        let mut out = Vec::with_capacity(self.output_dim());
        self.expand_into(x, &mut out);
        Ok(out)
    }

    /// Appends the expansion of `x` (whose length is assumed checked) to `out`.
    fn expand_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.extend_from_slice(x);
        if self.kind == FeatureKind::Quadratic {
            for j in 0..x.len() {
                for h in j..x.len() {
                    out.push(x[j] * x[h]);
                }
            }
        }
    }
}

/// Weights for classes `0..M-1`; the last class is the reference with
/// implicit zero weights. Each weight row is `[intercept, w_1..w_p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitModel {
    feature_map: FeatureMap,
    num_classes: usize,
    weights: Vec<f64>,
}

impl LogitModel {
    pub fn zeros(feature_map: FeatureMap, num_classes: usize) -> Self {
        let stride = 1 + feature_map.output_dim();
        Self {
            feature_map,
            num_classes,
            weights: vec![0.0; num_classes.saturating_sub(1) * stride],
        }
    }

    pub fn from_weights(feature_map: FeatureMap, num_classes: usize, rows: &[Vec<f64>]) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::InvalidParameter("logistic model needs at least 2 classes".into()));
        }
        check_dim(num_classes - 1, rows.len())?;
        let stride = 1 + feature_map.output_dim();
        for r in rows {
            check_dim(stride, r.len())?;
        }
        let weights = rows.concat();
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter("non-finite logistic weight".into()));
        }
        Ok(Self {
            feature_map,
            num_classes,
            weights,
        })
    }

    /// Builds weights from closed-form discriminants `z_{s,M}` against the
    /// reference class. Off-diagonal gamma entries fold into the single
    /// `x_j x_h` weight as `2 gamma_jh`.
    pub fn from_coefficients(feature_map: FeatureMap, coeffs: &[DiscriminantCoefficients]) -> Result<Self> {
        let d = feature_map.input_dim;
        let rows = coeffs
            .iter()
            .map(|c| {
                check_dim(d, c.dim())?;
                let mut row = Vec::with_capacity(1 + feature_map.output_dim());
                row.push(c.alpha);
                row.extend_from_slice(&c.beta);
                match feature_map.kind {
                    FeatureKind::Linear => {
                        if !c.is_linear() {
                            return Err(Error::InvalidParameter(
                                "quadratic discriminant cannot be expressed with a linear feature map".into(),
                            ));
                        }
                    }
                    FeatureKind::Quadratic => {
                        for j in 0..d {
                            for h in j..d {
                                row.push(if j == h {
                                    c.gamma[(j, j)]
                                } else {
                                    c.gamma[(j, h)] + c.gamma[(h, j)]
                                });
                            }
                        }
                    }
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_weights(feature_map, coeffs.len() + 1, &rows)
    }

    pub fn feature_map(&self) -> FeatureMap {
        self.feature_map
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn stride(&self) -> usize {
        1 + self.feature_map.output_dim()
    }

    /// Weight row of non-reference class `s`.
    pub fn weights(&self, s: usize) -> &[f64] {
        let k = self.stride();
        &self.weights[s * k..(s + 1) * k]
    }

    pub fn weight_rows(&self) -> Vec<Vec<f64>> {
        self.weights.chunks(self.stride()).map(<[f64]>::to_vec).collect()
    }

    pub fn flat_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Discriminant `z_{s,M}` implied by the weights of class `s`.
    pub fn coefficients(&self, s: usize) -> DiscriminantCoefficients {
        let d = self.feature_map.input_dim;
        let w = self.weights(s);
        let mut gamma = DMatrix::zeros(d, d);
        if self.feature_map.kind == FeatureKind::Quadratic {
            let mut k = 1 + d;
            for j in 0..d {
                for h in j..d {
                    if j == h {
                        gamma[(j, j)] = w[k];
                    } else {
                        gamma[(j, h)] = 0.5 * w[k];
                        gamma[(h, j)] = 0.5 * w[k];
                    }
                    k += 1;
                }
            }
        }
        DiscriminantCoefficients {
            alpha: w[0],
            beta: w[1..=d].to_vec(),
            gamma,
        }
    }

    fn scores_from_phi(&self, phi: &[f64], out: &mut [f64]) {
        let k = self.stride();
        for (s, row) in self.weights.chunks(k).enumerate() {
            out[s] = row[0] + row[1..].iter().zip(phi).map(|(w, f)| w * f).sum::<f64>();
        }
        out[self.num_classes - 1] = 0.0;
    }

    /// Class scores `w_sᵀφ(x)`, with 0 for the reference class.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        let phi = self.feature_map.expand(x)?;
        let mut out = vec![0.0; self.num_classes];
        self.scores_from_phi(&phi, &mut out);
        Ok(out)
    }
}

/// Softmax with the maximum subtracted first.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|v| v / total).collect()
}

pub fn predict_proba(model: &LogitModel, x: &[f64]) -> Result<Vec<f64>> {
    Ok(softmax(&model.scores(x)?))
}

/// Rows of `[1, φ(x_i)]`, materialised once per training run.
struct Design {
    rows: Vec<f64>,
    stride: usize,
}

impl Design {
    fn new(fm: FeatureMap, data: &LabeledDataset) -> Self {
        let stride = 1 + fm.output_dim();
        let mut rows = Vec::with_capacity(data.len() * stride);
        for (x, _) in data.rows() {
            rows.push(1.0);
            fm.expand_into(x, &mut rows);
        }
        Self { rows, stride }
    }
}

const CHUNK_ROWS: usize = 4096;

/// Log-likelihood and its gradient, summed per fixed-size chunk and then
/// reduced in chunk order so the result does not depend on thread scheduling.
fn ll_and_grad(weights: &[f64], m: usize, design: &Design, labels: &[usize], want_grad: bool) -> (f64, Vec<f64>) {
    let k = design.stride;
    let partials: Vec<(f64, Vec<f64>)> = design
        .rows
        .par_chunks(CHUNK_ROWS * k)
        .zip(labels.par_chunks(CHUNK_ROWS))
        .map(|(rows, ys)| {
            let mut ll = 0.0;
            let mut grad = if want_grad { vec![0.0; weights.len()] } else { Vec::new() };
            let mut scores = vec![0.0; m];
            for (phi, &y) in rows.chunks_exact(k).zip(ys) {
                for (s, w) in weights.chunks_exact(k).enumerate() {
                    scores[s] = w.iter().zip(phi).map(|(a, b)| a * b).sum();
                }
                scores[m - 1] = 0.0;
                let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for sc in scores.iter_mut() {
                    *sc = (*sc - max).exp();
                    total += *sc;
                }
                let lse = max + total.ln();
                // scores now hold unnormalised exp(score - max)
                ll += (scores[y].ln() + max) - lse;
                if want_grad {
                    for s in 0..m - 1 {
                        let resid = f64::from(u8::from(y == s)) - scores[s] / total;
                        for (g, f) in grad[s * k..(s + 1) * k].iter_mut().zip(phi) {
                            *g += resid * f;
                        }
                    }
                }
            }
            (ll, grad)
        })
        .collect();
    let mut ll = 0.0;
    let mut grad = vec![0.0; if want_grad { weights.len() } else { 0 }];
    for (l, g) in partials {
        ll += l;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    (ll, grad)
}

fn check_data(model: &LogitModel, data: &LabeledDataset) -> Result<()> {
    check_dim(model.feature_map.input_dim, data.dim())?;
    check_dim(model.num_classes, data.num_classes())
}

/// `Σ_i ln P(y_i | x_i)`.
pub fn log_likelihood(model: &LogitModel, data: &LabeledDataset) -> Result<f64> {
    check_data(model, data)?;
    let design = Design::new(model.feature_map, data);
    Ok(ll_and_grad(&model.weights, model.num_classes, &design, data.labels(), false).0)
}

/// `∂LL/∂w_{s,k} = Σ_i ([y_i = s] - p_{i,s}) φ_k(x_i)`, shaped like the weights.
pub fn gradient(model: &LogitModel, data: &LabeledDataset) -> Result<Vec<Vec<f64>>> {
    check_data(model, data)?;
    let design = Design::new(model.feature_map, data);
    let (_, g) = ll_and_grad(&model.weights, model.num_classes, &design, data.labels(), true);
    Ok(g.chunks(model.stride()).map(<[f64]>::to_vec).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Initial step on the mean log-likelihood.
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Stop once the max-norm of the mean-log-likelihood gradient drops below this.
    pub grad_tol: f64,
    /// Reserved for mini-batch shuffling; full-batch training ignores it.
    pub seed: u64,
    /// Halve the step until the objective does not decrease.
    pub backtracking: bool,
    /// Multiplier applied to the step after an accepted iteration.
    pub step_growth: f64,
    /// L2 penalty on non-intercept weights, applied to the mean log-likelihood.
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            max_iters: 50_000,
            grad_tol: 1e-6,
            seed: 0,
            backtracking: true,
            step_growth: 1.0,
            l2: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter("learning rate must be positive".into()));
        }
        if self.grad_tol.is_nan() || self.grad_tol <= 0.0 {
            return Err(Error::InvalidParameter("gradient tolerance must be positive".into()));
        }
        if !(self.step_growth >= 1.0 && self.step_growth.is_finite()) {
            return Err(Error::InvalidParameter("step growth must be at least 1".into()));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::InvalidParameter("L2 penalty must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub iterations: usize,
    /// Max-norm of the mean-log-likelihood gradient at the returned weights.
    pub final_grad_norm: f64,
    /// Total (not mean) log-likelihood at the returned weights.
    pub final_ll: f64,
    pub converged: bool,
    /// Largest absolute weight, useful for spotting divergence on separable data.
    pub max_abs_weight: f64,
}

struct Objective<'a> {
    design: Design,
    labels: &'a [usize],
    m: usize,
    n: f64,
    l2: f64,
}

impl Objective<'_> {
    /// Penalised mean log-likelihood and its gradient.
    fn eval(&self, w: &[f64], want_grad: bool) -> (f64, f64, Vec<f64>) {
        let (ll, mut g) = ll_and_grad(w, self.m, &self.design, self.labels, want_grad);
        let k = self.design.stride;
        let mut f = ll / self.n;
        let mut penalty = 0.0;
        for (i, wi) in w.iter().enumerate() {
            if i % k != 0 {
                penalty += wi * wi;
            }
        }
        f -= 0.5 * self.l2 * penalty;
        for (i, gi) in g.iter_mut().enumerate() {
            *gi /= self.n;
            if i % k != 0 {
                *gi -= self.l2 * w[i];
            }
        }
        (f, ll, g)
    }
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// Full-batch gradient ascent from zero weights.
pub fn train(data: &LabeledDataset, feature_map: FeatureMap, cfg: &TrainConfig) -> Result<(LogitModel, TrainReport)> {
    cfg.validate()?;
    check_dim(feature_map.input_dim, data.dim())?;
    if data.num_classes() < 2 {
        return Err(Error::EmptyClass(2));
    }
    if let Some(s) = data.class_counts().iter().position(|&n| n == 0) {
        return Err(Error::EmptyClass(s + 1));
    }
    let m = data.num_classes();
    let mut model = LogitModel::zeros(feature_map, m);
    let obj = Objective {
        design: Design::new(feature_map, data),
        labels: data.labels(),
        m,
        n: data.len() as f64,
        l2: cfg.l2,
    };

    let (mut f, mut ll, mut g) = obj.eval(&model.weights, true);
    if !f.is_finite() {
        return Err(Error::NonFiniteLikelihood(0));
    }
    let mut step = cfg.learning_rate;
    let mut iterations = 0;
    let mut converged = max_norm(&g) < cfg.grad_tol;
    let mut trial = vec![0.0; model.weights.len()];

    while !converged && iterations < cfg.max_iters {
        iterations += 1;
        loop {
            for ((t, w), gi) in trial.iter_mut().zip(&model.weights).zip(&g) {
                *t = w + step * gi;
            }
            let (f_new, ll_new, g_new) = obj.eval(&trial, true);
            let finite = f_new.is_finite() && g_new.iter().all(|v| v.is_finite());
            if !cfg.backtracking {
                if !finite {
                    return Err(Error::NonFiniteLikelihood(iterations));
                }
            } else if !finite || f_new < f {
                step *= 0.5;
                if step < f64::MIN_POSITIVE {
                    return Err(Error::NonFiniteLikelihood(iterations));
                }
                continue;
            }
            std::mem::swap(&mut model.weights, &mut trial);
            f = f_new;
            ll = ll_new;
            g = g_new;
            step *= cfg.step_growth;
            break;
        }
        converged = max_norm(&g) < cfg.grad_tol;
    }

    let report = TrainReport {
        iterations,
        final_grad_norm: max_norm(&g),
        final_ll: ll,
        converged,
        max_abs_weight: max_norm(&model.weights),
    };
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expand_examples() {
        let q = FeatureMap::new(FeatureKind::Quadratic, 2);
        assert_eq!(q.output_dim(), 5);
        assert_eq!(q.expand(&[2.0, 3.0]).unwrap(), vec![2.0, 3.0, 4.0, 6.0, 9.0]);
        assert_eq!(q.expand(&[0.0, 0.0]).unwrap(), vec![0.0; 5]);
        let l = FeatureMap::new(FeatureKind::Linear, 3);
        assert_eq!(l.expand(&[1.0, -2.0, 7.0]).unwrap(), vec![1.0, -2.0, 7.0]);
        assert!(l.expand(&[1.0]).is_err());
        assert_eq!(FeatureMap::new(FeatureKind::Quadratic, 3).output_dim(), 9);
    }

    #[test]
    fn predict_examples() {
        let m = LogitModel::zeros(FeatureMap::new(FeatureKind::Linear, 2), 3);
        let p = predict_proba(&m, &[4.0, -1.0]).unwrap();
        assert!(p.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));

        let m = LogitModel::from_weights(FeatureMap::new(FeatureKind::Linear, 1), 2, &[vec![-0.5, 1.0]]).unwrap();
        assert_eq!(predict_proba(&m, &[0.5]).unwrap(), vec![0.5, 0.5]);

        let a = softmax(&[1.0, -2.0, 0.5]);
        let b = softmax(&[101.0, 98.0, 100.5]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
        let extreme = softmax(&[1000.0, 0.0]);
        assert_eq!(extreme, vec![1.0, 0.0]);
    }

    #[test]
    fn zero_weight_likelihood() {
        let ds = LabeledDataset::new(vec![1.0, 2.0, 3.0, 4.0], 1, &[1, 2, 1, 2], 2).unwrap();
        let m = LogitModel::zeros(FeatureMap::new(FeatureKind::Linear, 1), 2);
        assert!((log_likelihood(&m, &ds).unwrap() - 4.0 * 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn likelihood_approaches_zero_under_separation() {
        let ds = LabeledDataset::new(vec![-2.0, -1.0, 1.0, 2.0], 1, &[2, 2, 1, 1], 2).unwrap();
        let fm = FeatureMap::new(FeatureKind::Linear, 1);
        let mut last = f64::NEG_INFINITY;
        for scale in [1.0, 5.0, 20.0, 100.0] {
            let m = LogitModel::from_weights(fm, 2, &[vec![0.0, scale]]).unwrap();
            let ll = log_likelihood(&m, &ds).unwrap();
            assert!(ll <= 0.0 && ll > last);
            last = ll;
        }
        assert!(last > -1e-12);
    }

    #[test]
    fn mirrored_data_has_zero_intercept_gradient() {
        let ds = LabeledDataset::new(vec![-1.0, -2.5, 1.0, 2.5], 1, &[1, 1, 2, 2], 2).unwrap();
        let m = LogitModel::zeros(FeatureMap::new(FeatureKind::Linear, 1), 2);
        let g = gradient(&m, &ds).unwrap();
        assert_eq!(g[0][0], 0.0);
        assert!(g[0][1] < 0.0);
    }

    #[test]
    fn single_class_is_rejected() {
        let ds = LabeledDataset::new(vec![1.0, 2.0], 1, &[1, 1], 2).unwrap();
        let err = train(&ds, FeatureMap::new(FeatureKind::Linear, 1), &TrainConfig::default()).unwrap_err();
        assert_eq!(err, Error::EmptyClass(2));
        let ds = LabeledDataset::new(vec![1.0, 2.0], 1, &[1, 1], 1).unwrap();
        let err = train(&ds, FeatureMap::new(FeatureKind::Linear, 1), &TrainConfig::default()).unwrap_err();
        assert_eq!(err, Error::EmptyClass(2));
    }

    #[test]
    fn coefficient_roundtrip() {
        let fm = FeatureMap::new(FeatureKind::Quadratic, 2);
        let c = DiscriminantCoefficients {
            alpha: 0.3,
            beta: vec![1.0, -2.0],
            gamma: DMatrix::from_row_slice(2, 2, &[0.5, -0.25, -0.25, 2.0]),
        };
        let m = LogitModel::from_coefficients(fm, std::slice::from_ref(&c)).unwrap();
        assert_eq!(m.weights(0), &[0.3, 1.0, -2.0, 0.5, -0.5, 2.0]);
        assert_eq!(m.coefficients(0), c);
        assert!(LogitModel::from_coefficients(FeatureMap::new(FeatureKind::Linear, 2), &[c]).is_err());
    }

    #[test]
    fn training_is_monotone_and_deterministic() {
        let xs: Vec<f64> = (0..60).map(|i| (i as f64 * 0.37).sin() * 2.0 + if i % 2 == 0 { 0.8 } else { -0.8 }).collect();
        let labels: Vec<usize> = (0..60).map(|i| i % 2 + 1).collect();
        let ds = LabeledDataset::new(xs, 1, &labels, 2).unwrap();
        let fm = FeatureMap::new(FeatureKind::Linear, 1);
        let cfg = TrainConfig {
            max_iters: 1,
            ..TrainConfig::default()
        };
        let mut last = log_likelihood(&LogitModel::zeros(fm, 2), &ds).unwrap();
        for iters in 1..40 {
            let (_, rep) = train(&ds, fm, &TrainConfig { max_iters: iters, ..cfg.clone() }).unwrap();
            assert!(rep.final_ll >= last);
            last = rep.final_ll;
        }
        let (a, ra) = train(&ds, fm, &TrainConfig::default()).unwrap();
        let (b, rb) = train(&ds, fm, &TrainConfig::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        assert!(ra.converged);
        let g = gradient(&a, &ds).unwrap();
        assert!(g.iter().flatten().all(|v| (v / 60.0).abs() < 1e-6));
    }
}
