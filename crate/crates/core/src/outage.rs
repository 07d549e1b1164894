//! Outage probability under the Inverse-Gamma interference model, the
//! ε-outage spectral efficiency and the fixed fade-margin baseline.
//!
//! Every term except the unknown interference power is treated as a known,
//! quasi-static value; `iui_u` of the supplied [`UatfTerms`] is ignored.

use serde::{Deserialize, Serialize};

use crate::bayes::{fit_inverse_gamma, sample_stats, InverseGamma};
use crate::error::{Error, Result};
use crate::receiver::UatfTerms;
use crate::scenario::SystemConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateDecision {
    pub epsilon: f64,
    /// SINR threshold `T(ε)`.
    #[serde(rename = "threshold_T")]
    pub threshold: f64,
    /// `(τ_u/τ_c) log2(1 + T(ε))`, bit/s/Hz.
    pub se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineDecision {
    pub margin_m: f64,
    pub sinr_bl: f64,
    pub se: f64,
}

fn spectral_efficiency(cfg: &SystemConfig, sinr: f64) -> f64 {
    cfg.prelog() * sinr.ln_1p() / std::f64::consts::LN_2
}

/// `Pr[SINR ≤ T] = 1 − F_IG(|DS|²/T − IUSI − σ̃²)`, which is 1 when the
/// threshold cannot be met even without unknown interference.
pub fn outage_probability(terms: &UatfTerms, ig: &InverseGamma, threshold: f64) -> Result<f64> {
    if !(threshold > 0.0) {
        return Err(Error::domain(format!(
            "SINR threshold must be positive, got {threshold}"
        )));
    }
    let headroom = terms.ds_sq / threshold - terms.iusi_n - terms.noise_eff;
    if headroom <= 0.0 {
        return Ok(1.0);
    }
    Ok(ig.sf(headroom))
}

/// Rate whose model outage probability is exactly `epsilon`:
/// `T(ε) = |DS|² / (F_IG^{-1}(1 − ε) + IUSI + σ̃²)`.
pub fn epsilon_outage_rate(
    terms: &UatfTerms,
    ig: &InverseGamma,
    epsilon: f64,
    cfg: &SystemConfig,
) -> Result<RateDecision> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::domain(format!(
            "target outage must lie in (0, 1), got {epsilon}"
        )));
    }
    let interference = ig.upper_quantile(epsilon)?;
    let threshold = terms.ds_sq / (interference + terms.iusi_n + terms.noise_eff);
    Ok(RateDecision {
        epsilon,
        threshold,
        se: spectral_efficiency(cfg, threshold),
    })
}

/// Fade-margin baseline: the SINR without unknown interference, divided by `m`.
pub fn baseline_rate(terms: &UatfTerms, margin_m: f64, cfg: &SystemConfig) -> Result<BaselineDecision> {
    if !(margin_m >= 1.0) {
        return Err(Error::domain(format!("fade margin must be at least 1, got {margin_m}")));
    }
    let sinr_bl = terms.ds_sq / (terms.iusi_n + terms.noise_eff);
    Ok(BaselineDecision {
        margin_m,
        sinr_bl,
        se: spectral_efficiency(cfg, sinr_bl / margin_m),
    })
}

/// Measured interference samples → sample moments → Inverse-Gamma fit →
/// ε-outage rate.
pub fn rate_adaptation_procedure(
    interference_samples: &[f64],
    terms: &UatfTerms,
    epsilon: f64,
    cfg: &SystemConfig,
) -> Result<RateDecision> {
    let stats = sample_stats(interference_samples)?;
    let ig = fit_inverse_gamma(&stats)?;
    epsilon_outage_rate(terms, &ig, epsilon, cfg)
}
