//! Receive combining and Monte Carlo evaluation of the use-and-then-forget
//! (UatF) SINR terms.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{pilot_observation, ChannelEstimate, ChannelEstimator, ChannelRealization, ChannelSampler};
use crate::error::{Error, Result};
use crate::numerics::{ComplexVector, HermitianMatrix, HermitianSolver};
use crate::scenario::{Network, SystemConfig, UeCategory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombiningScheme {
    /// Maximum ratio, `v = ĥ / ‖ĥ‖²`.
    Mr,
    /// Regularized zero-forcing over the known UEs.
    Rzf,
}

impl std::fmt::Display for CombiningScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CombiningScheme::Mr => "mr",
            CombiningScheme::Rzf => "rzf",
        })
    }
}

impl std::str::FromStr for CombiningScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mr" => Ok(CombiningScheme::Mr),
            "rzf" => Ok(CombiningScheme::Rzf),
            other => Err(Error::Config(format!(
                "unknown combining scheme '{other}', expected 'mr' or 'rzf'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Combiner {
    pub ue_id: usize,
    pub v: ComplexVector,
    pub scheme: CombiningScheme,
}

pub fn mr_combiner(estimate: &ChannelEstimate) -> Result<Combiner> {
    let energy = estimate.h_hat.norm_squared();
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(Error::DegenerateCombiner);
    }
    Ok(Combiner {
        ue_id: estimate.ue_id,
        v: estimate.h_hat.map(|z| z / energy),
        scheme: CombiningScheme::Mr,
    })
}

/// `v = (Σ_i p_i ĥ_i ĥ_i^H + σ² I)^{-1} p_k ĥ_k` with `k = estimates[target]`.
pub fn rzf_combiner(estimates: &[ChannelEstimate], powers_w: &[f64], noise_w: f64, target: usize) -> Result<Combiner> {
    if !(noise_w > 0.0) {
        return Err(Error::domain(format!("RZF regularization needs σ² > 0, got {noise_w}")));
    }
    if estimates.len() != powers_w.len() || target >= estimates.len() {
        return Err(Error::domain("RZF: estimates, powers and target index disagree"));
    }
    let n = estimates[target].h_hat.len();
    let mut gram = HermitianMatrix::scaled_identity(n, noise_w);
    for (est, &p) in estimates.iter().zip(powers_w) {
        gram.add_rank_one(&est.h_hat, p);
    }
    let rhs = &estimates[target].h_hat * Complex64::from(powers_w[target]);
    let v = HermitianSolver::new(&gram)?.solve(&rhs);
    Ok(Combiner {
        ue_id: estimates[target].ue_id,
        v,
        scheme: CombiningScheme::Rzf,
    })
}

/// Expectations entering the UatF SINR of the desired UE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UatfTerms {
    /// `|DS_k|² = p_k |E{v^H h_k}|²`
    pub ds_sq: f64,
    /// Interference from unknown UEs, `Σ_{i∈D_u} p_i E{|v^H h_i|²}`.
    pub iui_u: f64,
    /// Known-UE interference plus self-interference, clamped at zero.
    pub iusi_n: f64,
    /// Processed noise `σ² E{‖v‖²}`.
    pub noise_eff: f64,
    pub n_realizations: usize,
    /// `iusi_n` before clamping.
    #[serde(default)]
    pub iusi_raw: f64,
}

impl UatfTerms {
    pub fn sinr(&self) -> f64 {
        self.ds_sq / (self.iui_u + self.iusi_n + self.noise_eff)
    }
}

/// `(SINR, SE)` with `SE = (τ_u/τ_c) log2(1 + SINR)` in bit/s/Hz.
pub fn sinr_and_se(terms: &UatfTerms, cfg: &SystemConfig) -> (f64, f64) {
    let sinr = terms.sinr();
    (sinr, cfg.prelog() * sinr.log2_1p())
}

trait Log2OnePlus {
    fn log2_1p(self) -> f64;
}

impl Log2OnePlus for f64 {
    fn log2_1p(self) -> f64 {
        self.ln_1p() / std::f64::consts::LN_2
    }
}

/// Running sums for the UatF expectations over small-scale realizations.
///
/// All terms are accumulated on the same realizations.
#[derive(Debug, Clone)]
pub struct UatfAccumulator {
    desired: usize,
    powers_w: Vec<f64>,
    unknown: Vec<bool>,
    noise_w: f64,
    gain_sum: Complex64,
    known_power: f64,
    unknown_power: f64,
    v_energy: f64,
    count: usize,
}

impl UatfAccumulator {
    pub fn new(network: &Network, cfg: &SystemConfig) -> Self {
        UatfAccumulator {
            desired: network.desired_index(),
            powers_w: network.ues.iter().map(|u| u.power_w).collect(),
            unknown: network.ues.iter().map(|u| u.category == UeCategory::Unknown).collect(),
            noise_w: cfg.noise_power_w(),
            gain_sum: Complex64::new(0.0, 0.0),
            known_power: 0.0,
            unknown_power: 0.0,
            v_energy: 0.0,
            count: 0,
        }
    }

    pub fn record(&mut self, v: &ComplexVector, realization: &ChannelRealization) {
        for (i, h) in realization.h.iter().enumerate() {
            let g = v.dotc(h);
            let power = self.powers_w[i] * g.norm_sqr();
            if i == self.desired {
                self.gain_sum += g;
            }
            if self.unknown[i] {
                self.unknown_power += power;
            } else {
                self.known_power += power;
            }
        }
        self.v_energy += v.norm_squared();
        self.count += 1;
    }

    pub fn finish(&self) -> Result<UatfTerms> {
        if self.count == 0 {
            return Err(Error::domain("no realizations recorded"));
        }
        let m = self.count as f64;
        let mean_gain = self.gain_sum / m;
        let ds_sq = self.powers_w[self.desired] * mean_gain.norm_sqr();
        let iusi_raw = self.known_power / m - ds_sq;
        Ok(UatfTerms {
            ds_sq,
            iui_u: self.unknown_power / m,
            iusi_n: iusi_raw.max(0.0),
            noise_eff: self.noise_w * self.v_energy / m,
            n_realizations: self.count,
            iusi_raw,
        })
    }
}

/// Channel estimates of every known UE in one realization; `target` indexes
/// the desired UE within `estimates`.
#[derive(Debug, Clone)]
pub struct KnownEstimates {
    pub estimates: Vec<ChannelEstimate>,
    pub powers_w: Vec<f64>,
    pub target: usize,
}

pub fn combine(scheme: CombiningScheme, known: &KnownEstimates, cfg: &SystemConfig) -> Result<Combiner> {
    match scheme {
        CombiningScheme::Mr => mr_combiner(&known.estimates[known.target]),
        CombiningScheme::Rzf => rzf_combiner(&known.estimates, &known.powers_w, cfg.noise_power_w(), known.target),
    }
}

/// Like [`estimate_uatf_terms`] with a caller-supplied combiner.
pub fn estimate_uatf_terms_with<R, F>(
    network: &Network,
    cfg: &SystemConfig,
    m: usize,
    rng: &mut R,
    mut combiner: F,
) -> Result<UatfTerms>
where
    R: Rng + ?Sized,
    F: FnMut(&KnownEstimates) -> Result<ComplexVector>,
{
    if m < 2 {
        return Err(Error::domain(format!(
            "need at least 2 small-scale realizations, got {m}"
        )));
    }
    let sampler = ChannelSampler::new(&network.stats, cfg)?;
    let known: Vec<usize> = (0..network.ues.len()).filter(|&i| network.ues[i].is_known()).collect();
    let estimators = known
        .iter()
        .map(|&i| ChannelEstimator::new(&network.stats[i], network.ues[i].power_w, cfg))
        .collect::<Result<Vec<_>>>()?;
    let desired = network.desired_index();
    let target = known.iter().position(|&i| i == desired).expect("desired UE is known");
    let powers_w: Vec<f64> = known.iter().map(|&i| network.ues[i].power_w).collect();

    let mut acc = UatfAccumulator::new(network, cfg);
    for _ in 0..m {
        let realization = sampler.draw(rng);
        let estimates = known
            .iter()
            .zip(&estimators)
            .map(|(&i, est)| {
                let y = pilot_observation(&realization, &network.ues, network.ues[i].pilot_index, cfg)?;
                Ok(est.estimate(&y))
            })
            .collect::<Result<Vec<_>>>()?;
        let v = combiner(&KnownEstimates {
            estimates,
            powers_w: powers_w.clone(),
            target,
        })?;
        acc.record(&v, &realization);
    }
    acc.finish()
}

/// Monte Carlo UatF terms of the desired UE over `m` independent small-scale
/// realizations, each with its own pilot phase, estimation and combiner.
pub fn estimate_uatf_terms<R: Rng + ?Sized>(
    network: &Network,
    cfg: &SystemConfig,
    scheme: CombiningScheme,
    m: usize,
    rng: &mut R,
) -> Result<UatfTerms> {
    estimate_uatf_terms_with(network, cfg, m, rng, |known| Ok(combine(scheme, known, cfg)?.v))
}
