//! Drop orchestration, calibration/held-out splitting and the comparison of
//! empirical per-drop SINR statistics with the Inverse-Gamma model.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{fit_inverse_gamma, sample_stats, InverseGamma};
use crate::error::{Error, Result};
use crate::numerics::{derive_stream, StreamKind};
use crate::outage::{baseline_rate, epsilon_outage_rate, outage_probability};
use crate::receiver::{estimate_uatf_terms, sinr_and_se, CombiningScheme, UatfTerms};
use crate::scenario::{FixedCell, SystemConfig};

pub const DEFAULT_N_DROPS: usize = 2000;
pub const DEFAULT_M_SMALL_SCALE: usize = 500;
pub const DEFAULT_CALIBRATION_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub cfg: SystemConfig,
    pub r_desired_m: f64,
    pub k_u: usize,
    pub scheme: CombiningScheme,
    pub n_drops: usize,
    pub m_small_scale: usize,
    pub calibration_fraction: f64,
    pub epsilons: Vec<f64>,
    pub margins: Vec<f64>,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            cfg: SystemConfig::default(),
            r_desired_m: 100.0,
            k_u: 20,
            scheme: CombiningScheme::Rzf,
            n_drops: DEFAULT_N_DROPS,
            m_small_scale: DEFAULT_M_SMALL_SCALE,
            calibration_fraction: DEFAULT_CALIBRATION_FRACTION,
            epsilons: vec![0.05, 0.1, 0.2, 0.3],
            margins: vec![1.0, 2.0, 3.1, 5.0, 10.0],
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.r_desired_m.is_finite() && self.r_desired_m > 0.0) {
            return bad(format!("r_desired_m must be positive, got {}", self.r_desired_m));
        }
        if self.n_drops < 100 {
            return bad(format!("n_drops must be at least 100, got {}", self.n_drops));
        }
        if !(self.calibration_fraction > 0.0 && self.calibration_fraction < 1.0) {
            return bad(format!(
                "calibration_fraction must lie in (0, 1), got {}",
                self.calibration_fraction
            ));
        }
        if self.n_calibration() < 50 {
            return bad(format!(
                "calibration_fraction * n_drops must be at least 50, got {}",
                self.calibration_fraction * self.n_drops as f64
            ));
        }
        if self.n_calibration() >= self.n_drops {
            return bad("calibration_fraction leaves no held-out drops".into());
        }
        if self.m_small_scale < 2 {
            return bad(format!("m_small_scale must be at least 2, got {}", self.m_small_scale));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return bad(format!("epsilons must lie in (0, 1), got {e}"));
        }
        if let Some(m) = self.margins.iter().find(|m| !(m.is_finite() && **m >= 1.0)) {
            return bad(format!("margins must be finite and at least 1, got {m}"));
        }
        Ok(())
    }

    pub fn n_calibration(&self) -> usize {
        (self.calibration_fraction * self.n_drops as f64).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropResult {
    pub drop_index: usize,
    pub terms: UatfTerms,
    pub sinr: f64,
    pub se: f64,
}

/// Runs one drop with its own random stream, so the result depends only on
/// the seed and the drop index.
fn run_drop(plan: &ExperimentPlan, cell: &FixedCell, drop_index: usize) -> Result<DropResult> {
    let mut rng = derive_stream(plan.cfg.seed, StreamKind::Drop, drop_index as u64);
    let network = cell.drop_network(&plan.cfg, plan.k_u, &mut rng)?;
    let terms = estimate_uatf_terms(&network, &plan.cfg, plan.scheme, plan.m_small_scale, &mut rng)?;
    let (sinr, se) = sinr_and_se(&terms, &plan.cfg);
    Ok(DropResult {
        drop_index,
        terms,
        sinr,
        se,
    })
}

/// All drops of a plan, ordered by drop index. Runs on the current rayon
/// pool; the output does not depend on its size.
pub fn run_drops(plan: &ExperimentPlan) -> Result<Vec<DropResult>> {
    plan.validate()?;
    let cell = FixedCell::new(&plan.cfg, plan.r_desired_m)?;
    (0..plan.n_drops)
        .into_par_iter()
        .map(|d| run_drop(plan, &cell, d))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub calibration: Vec<DropResult>,
    pub held_out: Vec<DropResult>,
}

/// Seeded disjoint split. Both halves keep drop-index order.
pub fn split_drops(plan: &ExperimentPlan, results: &[DropResult]) -> Split {
    let mut order: Vec<usize> = (0..results.len()).collect();
    order.shuffle(&mut derive_stream(plan.cfg.seed, StreamKind::Split, 0));
    let n_cal = plan.n_calibration().min(results.len());
    let mut cal: Vec<usize> = order[..n_cal].to_vec();
    let mut held: Vec<usize> = order[n_cal..].to_vec();
    cal.sort_unstable();
    held.sort_unstable();
    Split {
        calibration: cal.into_iter().map(|i| results[i]).collect(),
        held_out: held.into_iter().map(|i| results[i]).collect(),
    }
}

/// What a serving BS knows after calibration: the fitted interference model
/// and the quasi-static DS, IUSI and processed-noise terms, each averaged over
/// the calibration drops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibratedModel {
    pub interference: InverseGamma,
    pub terms: UatfTerms,
}

pub fn calibrate(calibration: &[DropResult]) -> Result<CalibratedModel> {
    let samples: Vec<f64> = calibration.iter().map(|d| d.terms.iui_u).collect();
    let interference = fit_inverse_gamma(&sample_stats(&samples)?)?;
    let n = calibration.len() as f64;
    let mean = |f: fn(&UatfTerms) -> f64| calibration.iter().map(|d| f(&d.terms)).sum::<f64>() / n;
    let terms = UatfTerms {
        ds_sq: mean(|t| t.ds_sq),
        iui_u: interference.mean().unwrap_or(f64::NAN),
        iusi_n: mean(|t| t.iusi_n),
        noise_eff: mean(|t| t.noise_eff),
        n_realizations: calibration.iter().map(|d| d.terms.n_realizations).sum(),
        iusi_raw: mean(|t| t.iusi_raw),
    };
    Ok(CalibratedModel { interference, terms })
}

/// Model SINR CDF `Pr[SINR ≤ T]` on `grid` (linear thresholds).
pub fn analytical_sinr_cdf(calibration: &[DropResult], grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let model = calibrate(calibration)?;
    grid.iter()
        .map(|&t| Ok((t, outage_probability(&model.terms, &model.interference, t)?)))
        .collect()
}

/// Exact order statistics: the i-th smallest SINR paired with `i/n`.
pub fn empirical_sinr_cdf(held_out: &[DropResult]) -> Vec<(f64, f64)> {
    let mut sinr: Vec<f64> = held_out.iter().map(|d| d.sinr).collect();
    sinr.sort_by(f64::total_cmp);
    let n = sinr.len() as f64;
    sinr.into_iter()
        .enumerate()
        .map(|(i, s)| (s, (i + 1) as f64 / n))
        .collect()
}

/// Kolmogorov–Smirnov distance between the held-out empirical SINR CDF and
/// the model CDF fitted on the calibration drops.
pub fn ks_statistic(split: &Split) -> Result<f64> {
    let empirical = empirical_sinr_cdf(&split.held_out);
    let grid: Vec<f64> = empirical.iter().map(|p| p.0).collect();
    let model = analytical_sinr_cdf(&split.calibration, &grid)?;
    let n = empirical.len() as f64;
    Ok(empirical
        .iter()
        .zip(&model)
        .map(|(&(_, f_emp), &(_, f_model))| (f_emp - f_model).abs().max((f_emp - 1.0 / n - f_model).abs()))
        .fold(0.0, f64::max))
}

fn empirical_outage(held_out: &[DropResult], threshold: f64) -> f64 {
    held_out.iter().filter(|d| d.sinr < threshold).count() as f64 / held_out.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutagePoint {
    pub epsilon: f64,
    pub threshold: f64,
    pub se_model: f64,
    pub empirical_outage: f64,
}

/// ε-outage rates from the calibration fit, scored on the held-out drops.
pub fn epsilon_outage_curve(split: &Split, epsilons: &[f64], cfg: &SystemConfig) -> Result<Vec<OutagePoint>> {
    let model = calibrate(&split.calibration)?;
    epsilons
        .iter()
        .map(|&eps| {
            let d = epsilon_outage_rate(&model.terms, &model.interference, eps, cfg)?;
            Ok(OutagePoint {
                epsilon: eps,
                threshold: d.threshold,
                se_model: d.se,
                empirical_outage: empirical_outage(&split.held_out, d.threshold),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselinePoint {
    pub margin: f64,
    pub threshold: f64,
    pub se: f64,
    pub empirical_outage: f64,
}

/// Fixed-margin rates from the calibration terms, scored on the held-out drops.
pub fn baseline_curve(split: &Split, margins: &[f64], cfg: &SystemConfig) -> Result<Vec<BaselinePoint>> {
    let model = calibrate(&split.calibration)?;
    margins
        .iter()
        .map(|&m| {
            let d = baseline_rate(&model.terms, m, cfg)?;
            let threshold = d.sinr_bl / m;
            Ok(BaselinePoint {
                margin: m,
                threshold,
                se: d.se,
                empirical_outage: empirical_outage(&split.held_out, threshold),
            })
        })
        .collect()
}
