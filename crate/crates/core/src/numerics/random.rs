use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::linalg::{ComplexVector, HermitianMatrix};
use crate::error::{Error, Result};

/// Seedable random source threaded explicitly through every random operation.
pub type RandomStream = ChaCha8Rng;

/// Independent stream families derived from one experiment seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamKind {
    /// Desired/known geometry and their frozen shadowing.
    FixedCell = 1,
    /// One stream per drop, indexed by drop number.
    Drop = 2,
    /// Calibration / held-out partition.
    Split = 3,
    /// Free for tests and ad-hoc tooling.
    Auxiliary = 4,
}

/// Returns the stream `(seed, kind, index)`.
///
/// Streams for distinct `(kind, index)` pairs never overlap, so per-drop work
/// can be scheduled in any order without changing results.
pub fn derive_stream(seed: u64, kind: StreamKind, index: u64) -> RandomStream {
    assert!(index < 1 << 56, "stream index out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((kind as u64) << 56) | index);
    rng
}

/// One draw of a circularly-symmetric complex Gaussian with unit variance.
pub fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Sampler for `N_C(0, R)` built from the eigen-decomposition `R = U Λ U^H`.
///
/// Negative eigenvalues within the PSD tolerance are clamped to zero, as are
/// positive ones at roundoff level, so rank-deficient correlation matrices
/// produce draws confined to their range.
#[derive(Debug, Clone)]
pub struct CorrelatedGaussian {
    factor: DMatrix<Complex64>,
}

impl CorrelatedGaussian {
    pub fn new(r: &HermitianMatrix) -> Result<Self> {
        let n = r.dim();
        if r.as_matrix().iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
            return Ok(CorrelatedGaussian {
                factor: DMatrix::zeros(n, n),
            });
        }
        let (values, vectors) = r.eigen();
        let tol = r.psd_tolerance();
        if values[0] < -tol {
            return Err(Error::domain(format!(
                "covariance is not positive semidefinite (eigenvalue {:e}, tolerance {tol:e})",
                values[0]
            )));
        }
        // eigenvalues at roundoff level are treated as exact zeros
        let floor = n as f64 * f64::EPSILON * values[n - 1].max(0.0);
        let mut factor = vectors;
        for (j, &lambda) in values.iter().enumerate() {
            let s = if lambda > floor { lambda.sqrt() } else { 0.0 };
            factor.column_mut(j).scale_mut(s);
        }
        Ok(CorrelatedGaussian { factor })
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    /// Draws one vector. Always consumes `2 · dim` normal variates, even for a
    /// rank-deficient covariance.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ComplexVector {
        let z = DVector::from_fn(self.dim(), |_, _| standard_complex_normal(rng));
        &self.factor * z
    }
}

pub fn sample_correlated_complex_gaussian<R: Rng + ?Sized>(r: &HermitianMatrix, rng: &mut R) -> Result<ComplexVector> {
    Ok(CorrelatedGaussian::new(r)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample_covariance(sampler: &CorrelatedGaussian, m: usize, rng: &mut RandomStream) -> DMatrix<Complex64> {
        let n = sampler.dim();
        let mut acc = DMatrix::<Complex64>::zeros(n, n);
        for _ in 0..m {
            let h = sampler.sample(rng);
            acc += &h * h.adjoint();
        }
        acc / c(m as f64, 0.0)
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let mut a = derive_stream(7, StreamKind::Drop, 0);
        let mut b = derive_stream(7, StreamKind::Drop, 1);
        let mut a2 = derive_stream(7, StreamKind::Drop, 0);
        let xa: u64 = a.random();
        assert_ne!(xa, b.random::<u64>());
        assert_eq!(xa, a2.random::<u64>());
        let mut other_kind = derive_stream(7, StreamKind::Split, 0);
        assert_ne!(xa, other_kind.random::<u64>());
    }

    #[test]
    fn zero_covariance_gives_zero_vector() {
        let mut rng = derive_stream(1, StreamKind::Auxiliary, 0);
        let h = sample_correlated_complex_gaussian(&HermitianMatrix::zeros(4), &mut rng).unwrap();
        assert!(h.iter().all(|z| *z == c(0.0, 0.0)));
    }

    #[test]
    fn identity_covariance_has_unit_variance() {
        let m = 100_000;
        let mut rng = derive_stream(2, StreamKind::Auxiliary, 0);
        let sampler = CorrelatedGaussian::new(&HermitianMatrix::identity(3)).unwrap();
        let mut power = [0.0; 3];
        for _ in 0..m {
            let h = sampler.sample(&mut rng);
            for (p, z) in power.iter_mut().zip(h.iter()) {
                *p += z.norm_sqr();
            }
        }
        // |z|² ~ Exp(1): standard error 1/√m
        let se = 1.0 / (m as f64).sqrt();
        for p in power {
            assert!((p / m as f64 - 1.0).abs() < 3.0 * se, "{p}");
        }
    }

    #[test]
    fn rank_one_draws_are_collinear() {
        let a = DVector::from_vec(vec![c(1.0, 0.5), c(-0.3, 2.0), c(0.0, -1.0), c(0.7, 0.7)]);
        let r = HermitianMatrix::rank_one(&a);
        let sampler = CorrelatedGaussian::new(&r).unwrap();
        let mut rng = derive_stream(3, StreamKind::Auxiliary, 0);
        for _ in 0..100 {
            let h = sampler.sample(&mut rng);
            let coeff = a.dotc(&h) / a.norm_squared();
            let resid = &h - a.map(|z| z * coeff);
            assert!(resid.norm() <= 1e-10 * h.norm().max(1e-300));
        }
    }

    /// Relative Frobenius error `‖Ĉ − R‖_F / ‖R‖_F` stays below `5/√M`; its
    /// expectation is `tr(R)/(‖R‖_F √M) ≤ √N/√M`.
    #[test]
    fn sample_covariance_converges() {
        let m = 100_000;
        for (n, seed) in [(6, 4u64), (16, 5)] {
            let g = DMatrix::from_fn(n, n, |i, j| c((i as f64 - j as f64).cos(), 0.3 * (i * j) as f64 / 10.0));
            let r = HermitianMatrix::new(&g * g.adjoint() / c(n as f64, 0.0)).unwrap();
            let r = r.scale(1.0 / (r.trace() / n as f64));
            let sampler = CorrelatedGaussian::new(&r).unwrap();
            let mut rng = derive_stream(seed, StreamKind::Auxiliary, 0);
            let cov = sample_covariance(&sampler, m, &mut rng);
            let err = (cov - r.as_matrix()).norm() / r.as_matrix().norm();
            assert!(err <= 5.0 / (m as f64).sqrt(), "n={n} relative frobenius error {err}");
        }
    }

    #[test]
    fn rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        let r = HermitianMatrix::new(m).unwrap();
        assert!(CorrelatedGaussian::new(&r).is_err());
    }
}
