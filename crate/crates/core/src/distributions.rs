//! Class-conditional densities.
//!
//! Gaussian classes carry an exponential-family view
//! `p(x) = exp(<t(x), theta> - F(theta) + k(x))` with `k(x) = 0`. The uniform
//! interval sits outside the exponential family and only exposes its density.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

/// ln(2π)
pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Relative floor on Cholesky pivots: a covariance is rejected when its
/// smallest pivot falls below this times its largest diagonal entry.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Anything that can be evaluated as a class-conditional log-density.
pub trait ClassDensity {
    fn dim(&self) -> usize;

    /// `ln P(x | class)`. May be `-inf` where the density vanishes.
    fn log_density(&self, x: &[f64]) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnivariateGaussian {
    mean: f64,
    variance: f64,
}

impl UnivariateGaussian {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !variance.is_finite() || variance <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "univariate Gaussian needs finite mean and positive variance, got ({mean}, {variance})"
            )));
        }
        Ok(Self { mean, variance })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Natural parameters `(mu / s2, -1 / (2 s2))` and log-normalizer
    /// `mu^2 / (2 s2) + ln(2 pi) / 2 + ln(s2) / 2`.
    pub fn to_natural(&self) -> NaturalParamView {
        let (mu, s2) = (self.mean, self.variance);
        NaturalParamView {
            kind: StatKind::Univariate,
            theta: vec![mu / s2, -0.5 / s2],
            log_normalizer: 0.5 * (mu * mu / s2) + 0.5 * LN_2PI + 0.5 * s2.ln(),
        }
    }
}

impl ClassDensity for UnivariateGaussian {
    fn dim(&self) -> usize {
        1
    }

    fn log_density(&self, x: &[f64]) -> Result<f64> {
        check_dim(1, x.len())?;
        let r = x[0] - self.mean;
        Ok(-0.5 * (LN_2PI + self.variance.ln()) - 0.5 * r * r / self.variance)
    }
}

/// Multivariate normal with its Cholesky factor, precision matrix and
/// log-determinant computed once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateGaussian {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    chol_lower: DMatrix<f64>,
    precision: DMatrix<f64>,
    log_det_cov: f64,
}

impl MultivariateGaussian {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::InvalidParameter("Gaussian dimension must be at least 1".into()));
        }
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: covariance.nrows().max(covariance.ncols()),
            });
        }
        if mean.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite Gaussian parameter".into()));
        }
        let scale = covariance.amax();
        for j in 0..d {
            for h in 0..j {
                if (covariance[(j, h)] - covariance[(h, j)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidParameter("covariance matrix is not symmetric".into()));
                }
            }
        }
        // Mirror the upper triangle so downstream quantities are exactly symmetric.
        let mut covariance = covariance;
        for j in 0..d {
            for h in 0..j {
                covariance[(j, h)] = covariance[(h, j)];
            }
        }

        let max_diag = covariance.diagonal().max();
        if max_diag <= 0.0 {
            return Err(Error::SingularCovariance);
        }
        let chol = covariance.clone().cholesky().ok_or(Error::SingularCovariance)?;
        let chol_lower = chol.l();
        let min_pivot = chol_lower
            .diagonal()
            .iter()
            .map(|l| l * l)
            .fold(f64::INFINITY, f64::min);
        if min_pivot.is_nan() || min_pivot <= PIVOT_TOLERANCE * max_diag {
            return Err(Error::SingularCovariance);
        }
        let log_det_cov = 2.0 * chol_lower.diagonal().iter().map(|l| l.ln()).sum::<f64>();
        let mut precision = chol.inverse();
        for j in 0..d {
            for h in 0..j {
                let avg = 0.5 * (precision[(j, h)] + precision[(h, j)]);
                precision[(j, h)] = avg;
                precision[(h, j)] = avg;
            }
        }
        Ok(Self {
            mean,
            covariance,
            chol_lower,
            precision,
            log_det_cov,
        })
    }

    pub fn from_slices(mean: &[f64], covariance_row_major: &[f64]) -> Result<Self> {
        let d = mean.len();
        if covariance_row_major.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: covariance_row_major.len(),
            });
        }
        Self::new(
            DVector::from_column_slice(mean),
            DMatrix::from_row_slice(d, d, covariance_row_major),
        )
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// `Σ⁻¹`
    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn log_det_cov(&self) -> f64 {
        self.log_det_cov
    }

    /// Lower Cholesky factor of the covariance.
    pub fn chol_lower(&self) -> &DMatrix<f64> {
        &self.chol_lower
    }

    /// `μᵀ Σ⁻¹ μ`
    pub fn mahalanobis_mean(&self) -> f64 {
        self.mean.dot(&(&self.precision * &self.mean))
    }

    /// Natural parameters `(Σ⁻¹μ, ½Σ⁻¹)` and
    /// `F = ½μᵀΣ⁻¹μ + ½ ln det Σ + (d/2) ln 2π`.
    ///
    /// The matrix block is flattened row-major after the vector block. It pairs
    /// with the sufficient statistic `(x, -xxᵀ)`.
    pub fn to_natural(&self) -> NaturalParamView {
        let d = self.mean.len();
        let eta = &self.precision * &self.mean;
        let mut theta = Vec::with_capacity(d + d * d);
        theta.extend(eta.iter());
        for j in 0..d {
            for h in 0..d {
                theta.push(0.5 * self.precision[(j, h)]);
            }
        }
        let log_normalizer =
            0.5 * self.mahalanobis_mean() + 0.5 * self.log_det_cov + 0.5 * d as f64 * LN_2PI;
        NaturalParamView {
            kind: StatKind::Multivariate { dim: d },
            theta,
            log_normalizer,
        }
    }
}

impl ClassDensity for MultivariateGaussian {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_density(&self, x: &[f64]) -> Result<f64> {
        let d = self.mean.len();
        check_dim(d, x.len())?;
        let centered = DVector::from_iterator(d, x.iter().zip(self.mean.iter()).map(|(a, m)| a - m));
        let z = self
            .chol_lower
            .solve_lower_triangular(&centered)
            .ok_or(Error::SingularCovariance)?;
        Ok(-0.5 * z.norm_squared() - 0.5 * self.log_det_cov - 0.5 * d as f64 * LN_2PI)
    }
}

/// Uniform density on the closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformInterval {
    lo: f64,
    hi: f64,
}

impl UniformInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::InvalidParameter(format!(
                "uniform interval needs finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

impl ClassDensity for UniformInterval {
    fn dim(&self) -> usize {
        1
    }

    fn log_density(&self, x: &[f64]) -> Result<f64> {
        check_dim(1, x.len())?;
        Ok(if self.contains(x[0]) {
            -self.width().ln()
        } else {
            f64::NEG_INFINITY
        })
    }
}

/// Shape of the sufficient statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatKind {
    /// `t(x) = (x, x²)`
    Univariate,
    /// `t(x) = (x, -xxᵀ)` with the matrix flattened row-major.
    Multivariate { dim: usize },
}

impl StatKind {
    pub fn input_dim(&self) -> usize {
        match *self {
            StatKind::Univariate => 1,
            StatKind::Multivariate { dim } => dim,
        }
    }

    pub fn stat_len(&self) -> usize {
        match *self {
            StatKind::Univariate => 2,
            StatKind::Multivariate { dim } => dim + dim * dim,
        }
    }
}

pub fn sufficient_stats(kind: StatKind, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(kind.input_dim(), x.len())?;
    Ok(match kind {
        StatKind::Univariate => vec![x[0], x[0] * x[0]],
        StatKind::Multivariate { dim } => {
            let mut t = Vec::with_capacity(dim + dim * dim);
            t.extend_from_slice(x);
            for &xj in x {
                t.extend(x.iter().map(|&xh| -(xj * xh)));
            }
            t
        }
    })
}

/// Exponential-family representation of a Gaussian class. The carrier measure
/// is identically zero for both Gaussian kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalParamView {
    pub kind: StatKind,
    pub theta: Vec<f64>,
    pub log_normalizer: f64,
}

impl NaturalParamView {
    /// `k(x)`; zero for Gaussian classes.
    pub fn carrier(&self, _x: &[f64]) -> f64 {
        0.0
    }

    /// `<t(x), theta>`
    pub fn inner(&self, x: &[f64]) -> Result<f64> {
        let t = sufficient_stats(self.kind, x)?;
        Ok(t.iter().zip(&self.theta).map(|(a, b)| a * b).sum())
    }

    /// `<t(x), theta> - F(theta) + k(x)`
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        Ok(self.inner(x)? - self.log_normalizer + self.carrier(x))
    }
}

pub fn to_natural_univariate(g: &UnivariateGaussian) -> NaturalParamView {
    g.to_natural()
}

pub fn to_natural_multivariate(g: &MultivariateGaussian) -> NaturalParamView {
    g.to_natural()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn natural_univariate_examples() {
        let v = UnivariateGaussian::new(2.0, 4.0).unwrap().to_natural();
        assert_eq!(v.theta, vec![0.5, -0.125]);

        let v = UnivariateGaussian::new(0.0, 1.0).unwrap().to_natural();
        assert_eq!(v.theta, vec![0.0, -0.5]);
        assert!(close(v.log_normalizer, 0.918_938_533_204_672_7, 1e-12));
    }

    #[test]
    fn univariate_normalizer_matches_natural_form() {
        // F = -θ₁²/(4θ₂) + ½ ln(-π/θ₂)
        for &(mu, s2) in &[(2.0, 4.0), (-1.5, 0.3), (10.0, 25.0)] {
            let v = UnivariateGaussian::new(mu, s2).unwrap().to_natural();
            let (t1, t2) = (v.theta[0], v.theta[1]);
            let f = -t1 * t1 / (4.0 * t2) + 0.5 * (-std::f64::consts::PI / t2).ln();
            assert!(close(v.log_normalizer, f, 1e-12), "{mu} {s2}");
            assert!(t2 < 0.0);
        }
    }

    #[test]
    fn natural_multivariate_examples() {
        let g = MultivariateGaussian::from_slices(&[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let v = g.to_natural();
        assert_eq!(v.theta, vec![0.0, 0.0, 0.5, 0.0, 0.0, 0.5]);
        assert!(close(v.log_normalizer, LN_2PI, 1e-12));

        let g = MultivariateGaussian::from_slices(&[1.0, 0.0], &[1.0, 0.0, 0.0, 4.0]).unwrap();
        let v = g.to_natural();
        assert!(close(v.theta[0], 1.0, 1e-15));
        assert!(close(v.theta[1], 0.0, 1e-15));
        assert!(close(v.log_normalizer, 0.5 + 0.5 * 4f64.ln() + LN_2PI, 1e-12));
    }

    #[test]
    fn multivariate_d1_matches_univariate() {
        for &(mu, s2) in &[(0.0, 1.0), (3.0, 0.25), (-2.0, 9.0)] {
            let u = UnivariateGaussian::new(mu, s2).unwrap();
            let m = MultivariateGaussian::from_slices(&[mu], &[s2]).unwrap();
            let (vu, vm) = (u.to_natural(), m.to_natural());
            assert!(close(vu.theta[0], vm.theta[0], 1e-12));
            // Univariate uses (x, x²) with -1/(2σ²); multivariate uses (x, -x²) with 1/(2σ²).
            assert!(close(vu.theta[1], -vm.theta[1], 1e-12));
            assert!(close(vu.log_normalizer, vm.log_normalizer, 1e-12));
            for &x in &[-1.0, 0.0, 2.5] {
                assert!(close(u.log_density(&[x]).unwrap(), m.log_density(&[x]).unwrap(), 1e-12));
            }
        }
    }

    #[test]
    fn log_density_examples() {
        let g = UnivariateGaussian::new(0.0, 1.0).unwrap();
        assert!(close(g.log_density(&[0.0]).unwrap(), -0.918_938_533_204_672_7, 1e-12));
        let u = UniformInterval::new(0.0, 2.0).unwrap();
        assert!(close(u.log_density(&[1.0]).unwrap(), 0.5f64.ln(), 1e-15));
        assert_eq!(u.log_density(&[3.0]).unwrap(), f64::NEG_INFINITY);
        assert!(matches!(
            g.log_density(&[0.0, 1.0]),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn sufficient_stat_examples() {
        assert_eq!(sufficient_stats(StatKind::Univariate, &[3.0]).unwrap(), vec![3.0, 9.0]);
        assert_eq!(
            sufficient_stats(StatKind::Multivariate { dim: 2 }, &[1.0, 2.0]).unwrap(),
            vec![1.0, 2.0, -1.0, -2.0, -2.0, -4.0]
        );
        assert!(sufficient_stats(StatKind::Univariate, &[0.0]).unwrap().iter().all(|v| *v == 0.0));
        assert!(sufficient_stats(StatKind::Multivariate { dim: 3 }, &[0.0; 3])
            .unwrap()
            .iter()
            .all(|v| *v == 0.0));
        assert!(sufficient_stats(StatKind::Multivariate { dim: 2 }, &[1.0]).is_err());
    }

    #[test]
    fn invalid_parameters() {
        assert!(UnivariateGaussian::new(0.0, 0.0).is_err());
        assert!(UnivariateGaussian::new(f64::NAN, 1.0).is_err());
        assert!(UniformInterval::new(1.0, 1.0).is_err());
        assert_eq!(
            MultivariateGaussian::from_slices(&[0.0, 0.0], &[1.0, 1.0, 1.0, 1.0]).unwrap_err(),
            Error::SingularCovariance
        );
        assert_eq!(
            MultivariateGaussian::from_slices(&[0.0, 0.0], &[1.0, 0.0, 0.0, -1.0]).unwrap_err(),
            Error::SingularCovariance
        );
        assert!(MultivariateGaussian::from_slices(&[0.0, 0.0], &[1.0, 0.5, 0.0, 1.0]).is_err());
        // Pivot below the relative floor.
        assert_eq!(
            MultivariateGaussian::from_slices(&[0.0, 0.0], &[1.0, 0.0, 0.0, 1e-13]).unwrap_err(),
            Error::SingularCovariance
        );
    }

    #[test]
    fn density_integrates_to_one() {
        let g = UnivariateGaussian::new(1.3, 2.7).unwrap();
        let sd = g.variance().sqrt();
        let (lo, hi, n) = (g.mean() - 10.0 * sd, g.mean() + 10.0 * sd, 20_000);
        let h = (hi - lo) / n as f64;
        let f = |x: f64| g.log_density(&[x]).unwrap().exp();
        let mut sum = 0.5 * (f(lo) + f(hi));
        for i in 1..n {
            sum += f(lo + i as f64 * h);
        }
        assert!((sum * h - 1.0).abs() < 1e-6);
    }

    fn spd_strategy(d: usize) -> impl Strategy<Value = Vec<f64>> {
        // A Aᵀ + d·I is comfortably positive definite.
        prop::collection::vec(-1.0f64..1.0, d * d).prop_map(move |a| {
            let a = DMatrix::from_row_slice(d, d, &a);
            let s = &a * a.transpose() + DMatrix::identity(d, d) * (0.5 * d as f64);
            let mut out = Vec::with_capacity(d * d);
            for j in 0..d {
                for h in 0..d {
                    out.push(s[(j, h)]);
                }
            }
            out
        })
    }

    fn mvn_case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        (1usize..=5).prop_flat_map(|d| {
            (
                prop::collection::vec(-3.0f64..3.0, d),
                spd_strategy(d),
                prop::collection::vec(-4.0f64..4.0, d),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn univariate_reconstruction(mu in -10.0f64..10.0, s2 in 0.05f64..20.0, x in -20.0f64..20.0) {
            let g = UnivariateGaussian::new(mu, s2).unwrap();
            let direct = g.log_density(&[x]).unwrap();
            let natural = g.to_natural().log_density(&[x]).unwrap();
            prop_assert!((direct - natural).abs() < 1e-9);
        }

        #[test]
        fn multivariate_reconstruction((mu, cov, x) in mvn_case()) {
            let g = MultivariateGaussian::from_slices(&mu, &cov).unwrap();
            let direct = g.log_density(&x).unwrap();
            let natural = g.to_natural().log_density(&x).unwrap();
            prop_assert!((direct - natural).abs() < 1e-9, "{direct} vs {natural}");
        }

        #[test]
        fn precision_roundtrip((mu, cov, _x) in mvn_case()) {
            let g = MultivariateGaussian::from_slices(&mu, &cov).unwrap();
            let d = mu.len();
            let prod = g.precision() * g.covariance();
            let id = DMatrix::<f64>::identity(d, d);
            prop_assert!((prod - id).amax() < 1e-10);
        }
    }
}
