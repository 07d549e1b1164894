//! Variance posterior under the `1/σ²` prior and the Inverse-Gamma model of
//! unknown interference power fitted by moment matching.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    inverse_regularized_lower_gamma, inverse_regularized_upper_gamma, ln_gamma, regularized_lower_gamma,
    regularized_upper_gamma,
};

/// A single observation `x` of `N(μ_u, σ_u²)` with known mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorParams {
    pub mu_u: f64,
    pub x: f64,
    /// `(x − μ_u)² / 2`
    pub zeta: f64,
}

impl PosteriorParams {
    pub fn new(mu_u: f64, x: f64) -> Self {
        PosteriorParams {
            mu_u,
            x,
            zeta: 0.5 * (x - mu_u).powi(2),
        }
    }

    /// The posterior as a distribution object: Inverse-Gamma(1/2, ζ).
    pub fn posterior(&self) -> Result<InverseGamma> {
        if self.zeta == 0.0 {
            return Err(Error::DegenerateObservation);
        }
        InverseGamma::new(0.5, self.zeta)
    }
}

/// Posterior density of the unknown variance,
/// `f(σ²|x) = ζ^{1/2} / Γ(1/2) · (1/σ²)^{3/2} · e^{−ζ/σ²}`.
pub fn posterior_sigma_pdf(sigma_sq: f64, params: &PosteriorParams) -> Result<f64> {
    if !(sigma_sq > 0.0) {
        return Err(Error::domain(format!("variance must be positive, got {sigma_sq}")));
    }
    if !(params.zeta > 0.0) {
        return Err(Error::DegenerateObservation);
    }
    let zeta = params.zeta;
    let sqrt_pi = std::f64::consts::PI.sqrt();
    Ok(zeta.sqrt() / sqrt_pi * sigma_sq.recip().powf(1.5) * (-zeta / sigma_sq).exp())
}

/// Inverse-Gamma distribution with shape `alpha` and scale `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseGamma {
    pub alpha: f64,
    pub beta: f64,
}

impl InverseGamma {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0 && beta.is_finite() && beta > 0.0) {
            return Err(Error::domain(format!(
                "inverse-gamma parameters must be positive and finite, got alpha = {alpha}, beta = {beta}"
            )));
        }
        Ok(InverseGamma { alpha, beta })
    }

    /// `β^α / Γ(α) · x^{−(α+1)} · e^{−β/x}` for `x > 0`, zero otherwise.
    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let (a, b) = (self.alpha, self.beta);
        (a * b.ln() - ln_gamma(a) - (a + 1.0) * x.ln() - b / x).exp()
    }

    /// `Q(α, β/x)`; zero for `x ≤ 0`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        regularized_upper_gamma(self.alpha, self.beta / x).expect("valid incomplete gamma arguments")
    }

    /// `1 − cdf(x) = P(α, β/x)`, without cancellation in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        regularized_lower_gamma(self.alpha, self.beta / x).expect("valid incomplete gamma arguments")
    }

    /// The `x` with `cdf(x) = p`, for `p` in `(0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        Ok(self.beta / inverse_regularized_upper_gamma(self.alpha, p)?)
    }

    /// The `x` with `sf(x) = q`, i.e. `quantile(1 − q)` evaluated directly.
    pub fn upper_quantile(&self, q: f64) -> Result<f64> {
        Ok(self.beta / inverse_regularized_lower_gamma(self.alpha, q)?)
    }

    /// `β / (α − 1)`, defined for `α > 1`.
    pub fn mean(&self) -> Option<f64> {
        (self.alpha > 1.0).then(|| self.beta / (self.alpha - 1.0))
    }

    /// `β² / ((α − 1)² (α − 2))`, defined for `α > 2`.
    pub fn variance(&self) -> Option<f64> {
        (self.alpha > 2.0).then(|| self.beta.powi(2) / ((self.alpha - 1.0).powi(2) * (self.alpha - 2.0)))
    }

    /// `β / (α + 1)`
    pub fn mode(&self) -> f64 {
        self.beta / (self.alpha + 1.0)
    }

    /// Draws `1 / G` with `G ~ Gamma(α, rate β)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g = Gamma::new(self.alpha, 1.0 / self.beta).expect("validated parameters");
        1.0 / g.sample(rng)
    }
}

/// Sample mean and unbiased sample variance of interference power samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub mu: f64,
    pub v: f64,
    pub count: usize,
}

/// Mean and unbiased variance. Samples are summed in sorted order so the
/// result does not depend on how they were collected.
pub fn sample_stats(samples: &[f64]) -> Result<SampleStats> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples(samples.len()));
    }
    if let Some(bad) = samples.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::domain(format!(
            "interference power samples must be positive and finite, got {bad}"
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mu = sorted.iter().sum::<f64>() / n;
    let v = sorted.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0);
    if !(v > 0.0) {
        return Err(Error::DegenerateStatistics(
            "all samples are equal; variance is zero".into(),
        ));
    }
    Ok(SampleStats {
        mu,
        v,
        count: sorted.len(),
    })
}

/// Moment-matched fit: `α = μ²/v + 2`, `β = (μ²/v + 1) μ`.
pub fn fit_inverse_gamma(stats: &SampleStats) -> Result<InverseGamma> {
    let SampleStats { mu, v, .. } = *stats;
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::Fit(format!("mean must be positive, got {mu}")));
    }
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Fit(format!("variance must be positive, got {v}")));
    }
    let ratio = mu * mu / v;
    InverseGamma::new(ratio + 2.0, (ratio + 1.0) * mu).map_err(|e| Error::Fit(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{derive_stream, StreamKind};
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn posterior_examples() {
        let p = PosteriorParams {
            mu_u: 0.0,
            x: 2f64.sqrt(),
            zeta: 1.0,
        };
        let f = posterior_sigma_pdf(1.0, &p).unwrap();
        assert!((f - (-1.0f64).exp() / std::f64::consts::PI.sqrt()).abs() < 1e-15);
        assert!((f - 0.207_553_7).abs() < 1e-7);
        assert!((PosteriorParams::new(1.0, 3.0).zeta - 2.0).abs() < 1e-15);

        assert!(posterior_sigma_pdf(0.0, &p).is_err());
        assert!(posterior_sigma_pdf(-1.0, &p).is_err());
        let flat = PosteriorParams::new(1.0, 1.0);
        assert_eq!(posterior_sigma_pdf(1.0, &flat), Err(Error::DegenerateObservation));
        assert_eq!(flat.posterior(), Err(Error::DegenerateObservation));
    }

    #[test]
    fn posterior_mode_is_two_thirds_zeta() {
        let p = PosteriorParams::new(0.0, 3.0);
        let mode = 2.0 * p.zeta / 3.0;
        let f = |s: f64| posterior_sigma_pdf(s, &p).unwrap();
        for d in [1e-3, 1e-2, 0.1] {
            assert!(f(mode) > f(mode * (1.0 + d)));
            assert!(f(mode) > f(mode * (1.0 - d)));
        }
        assert!((p.posterior().unwrap().mode() - mode).abs() < 1e-15);
    }

    #[test]
    fn cdf_examples() {
        let ig = InverseGamma::new(1.0, 2.0).unwrap();
        assert!((ig.cdf(2.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(ig.cdf(0.0), 0.0);
        assert_eq!(ig.cdf(-3.0), 0.0);
        let ig = InverseGamma::new(3.0, 4.0).unwrap();
        // mpmath: 4 / Q^{-1}(3, 0.5)
        assert!((ig.quantile(0.5).unwrap() - 1.495_852_572_760_448_6).abs() < 1e-12);
        assert!(ig.quantile(0.0).is_err());
        assert!(ig.quantile(1.0).is_err());
        assert!(InverseGamma::new(0.0, 1.0).is_err());
        assert!(InverseGamma::new(1.0, -1.0).is_err());
    }

    #[test]
    fn fit_examples() {
        let ig = fit_inverse_gamma(&SampleStats {
            mu: 2.0,
            v: 4.0,
            count: 10,
        })
        .unwrap();
        assert_eq!((ig.alpha, ig.beta), (3.0, 4.0));
        let ig = fit_inverse_gamma(&SampleStats {
            mu: 1.0,
            v: 1.0,
            count: 10,
        })
        .unwrap();
        assert_eq!((ig.alpha, ig.beta), (3.0, 2.0));
        assert!(matches!(
            fit_inverse_gamma(&SampleStats {
                mu: 0.0,
                v: 1.0,
                count: 2
            }),
            Err(Error::Fit(_))
        ));
        assert!(matches!(
            fit_inverse_gamma(&SampleStats {
                mu: 1.0,
                v: 0.0,
                count: 2
            }),
            Err(Error::Fit(_))
        ));
    }

    #[test]
    fn sample_stats_examples() {
        let s = sample_stats(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.mu, s.v, s.count), (2.0, 1.0, 3));
        assert!(matches!(sample_stats(&[0.5, 0.5]), Err(Error::DegenerateStatistics(_))));
        assert_eq!(sample_stats(&[1.0]), Err(Error::TooFewSamples(1)));
        assert!(sample_stats(&[1.0, -2.0]).is_err());
    }

    /// 1e5 draws from IG(4, 6): mean 2, variance 2.
    #[test]
    fn sample_stats_of_inverse_gamma_draws() {
        let ig = InverseGamma::new(4.0, 6.0).unwrap();
        let m = 100_000;
        let mut rng = derive_stream(31, StreamKind::Auxiliary, 0);
        let draws: Vec<f64> = (0..m).map(|_| ig.sample(&mut rng)).collect();
        let s = sample_stats(&draws).unwrap();
        let se_mean = (2.0f64 / m as f64).sqrt();
        assert!((s.mu - 2.0).abs() < 3.0 * se_mean, "{s:?}");
        // the fourth moment is infinite for α = 4, so the variance converges slowly
        assert!((s.v - 2.0).abs() < 0.5, "{s:?}");
    }

    proptest! {
        #[test]
        fn fitted_moments_reproduce_inputs(mu in 1e-6f64..1e6, ratio in 1e-3f64..1e3) {
            let v = mu * mu / ratio;
            let ig = fit_inverse_gamma(&SampleStats { mu, v, count: 2 }).unwrap();
            prop_assert!(ig.alpha > 2.0);
            prop_assert!(rel(ig.mean().unwrap(), mu) < 1e-12);
            prop_assert!(rel(ig.variance().unwrap(), v) < 1e-12);
        }

        #[test]
        fn fit_is_scale_equivariant(mu in 1e-3f64..1e3, v in 1e-3f64..1e3, c in 1e-3f64..1e3) {
            let a = fit_inverse_gamma(&SampleStats { mu, v, count: 2 }).unwrap();
            let b = fit_inverse_gamma(&SampleStats { mu: c * mu, v: c * c * v, count: 2 }).unwrap();
            prop_assert!(rel(b.alpha, a.alpha) < 1e-12);
            prop_assert!(rel(b.beta, c * a.beta) < 1e-12);
        }

        #[test]
        fn posterior_is_inverse_gamma_half(mu_u in -10f64..10.0, dx in 0.01f64..10.0, s in 1e-3f64..1e3) {
            let p = PosteriorParams::new(mu_u, mu_u + dx);
            let ig = p.posterior().unwrap();
            let a = posterior_sigma_pdf(s, &p).unwrap();
            prop_assert!((a - ig.pdf(s)).abs() <= 1e-12 * a.max(1e-300) || (a - ig.pdf(s)).abs() < 1e-300);
        }

        #[test]
        fn quantile_inverts_cdf(alpha in 0.5f64..50.0, beta in 1e-3f64..1e3, p in 1e-6f64..(1.0 - 1e-6)) {
            let ig = InverseGamma::new(alpha, beta).unwrap();
            let x = ig.quantile(p).unwrap();
            prop_assert!((ig.cdf(x) - p).abs() < 1e-10);
            let back = ig.quantile(ig.cdf(x)).unwrap();
            prop_assert!(rel(back, x) < 1e-9);
        }

        #[test]
        fn sample_stats_ignore_order(mut xs in proptest::collection::vec(1e-3f64..1e3, 2..50)) {
            prop_assume!(xs.iter().any(|x| *x != xs[0]));
            let a = sample_stats(&xs).unwrap();
            xs.reverse();
            let b = sample_stats(&xs).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn cdf_is_monotone_with_limits() {
        let ig = InverseGamma::new(2.5, 3.0).unwrap();
        let mut prev = 0.0;
        for i in 1..2000 {
            let x = i as f64 * 0.01;
            let f = ig.cdf(x);
            assert!(f >= prev);
            assert!((f + ig.sf(x) - 1.0).abs() < 1e-15);
            prev = f;
        }
        assert!(ig.cdf(1e-3) < 1e-300 || ig.cdf(1e-3) < 1e-100);
        assert!(ig.cdf(1e9) > 1.0 - 1e-12);
    }
}
