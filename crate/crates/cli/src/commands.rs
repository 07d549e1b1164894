//! The work behind each subcommand, kept free of argument parsing so tests
//! can call it directly.

use std::path::Path;

use serde::{Deserialize, Serialize};
use uplink_outage::bayes::{fit_inverse_gamma, sample_stats, InverseGamma};
use uplink_outage::experiments::{
    analytical_sinr_cdf, baseline_curve, empirical_sinr_cdf, epsilon_outage_curve, run_drops, split_drops,
    ExperimentPlan, Split,
};
use uplink_outage::outage::{epsilon_outage_rate, RateDecision};
use uplink_outage::receiver::UatfTerms;
use uplink_outage::scenario::SystemConfig;

use crate::output::Csv;
use crate::CliError;

pub fn simulate(plan: &ExperimentPlan) -> Result<Split, CliError> {
    let results = run_drops(plan)?;
    Ok(split_drops(plan, &results))
}

/// Held-out empirical SINR CDF at its own order statistics next to the
/// calibrated model CDF at the same thresholds.
pub fn sinr_cdf_csv(split: &Split) -> Result<Csv, CliError> {
    let empirical = empirical_sinr_cdf(&split.held_out);
    let grid: Vec<f64> = empirical.iter().map(|p| p.0).collect();
    let model = analytical_sinr_cdf(&split.calibration, &grid)?;
    let mut csv = Csv::new(&["threshold_db", "empirical_cdf", "analytical_cdf"]);
    for ((sinr, f_emp), (_, f_model)) in empirical.into_iter().zip(model) {
        csv.row(&[10.0 * sinr.log10(), f_emp, f_model]);
    }
    Ok(csv)
}

pub fn outage_curve_csv(split: &Split, plan: &ExperimentPlan) -> Result<Csv, CliError> {
    let mut csv = Csv::new(&["epsilon", "se_model", "empirical_outage"]);
    for p in epsilon_outage_curve(split, &plan.epsilons, &plan.cfg)? {
        csv.row(&[p.epsilon, p.se_model, p.empirical_outage]);
    }
    Ok(csv)
}

pub fn baseline_curve_csv(split: &Split, plan: &ExperimentPlan) -> Result<Csv, CliError> {
    let mut csv = Csv::new(&["margin", "se", "empirical_outage"]);
    for p in baseline_curve(split, &plan.margins, &plan.cfg)? {
        csv.row(&[p.margin, p.se, p.empirical_outage]);
    }
    Ok(csv)
}

/// Every drop with its UatF terms; `calibration` is 1 for calibration drops.
pub fn drops_csv(split: &Split) -> Csv {
    let mut csv = Csv::new(&[
        "drop_index",
        "calibration",
        "ds_sq",
        "iui_u",
        "iusi_n",
        "noise_eff",
        "sinr",
        "se",
    ]);
    let mut rows: Vec<_> = split
        .calibration
        .iter()
        .map(|d| (d, 1.0))
        .chain(split.held_out.iter().map(|d| (d, 0.0)))
        .collect();
    rows.sort_by_key(|(d, _)| d.drop_index);
    for (d, cal) in rows {
        let t = &d.terms;
        csv.row(&[
            d.drop_index as f64,
            cal,
            t.ds_sq,
            t.iui_u,
            t.iusi_n,
            t.noise_eff,
            d.sinr,
            d.se,
        ]);
    }
    csv
}

/// Output of `fit` and input of `rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub v: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// One positive decimal per line; `#` starts a comment.
pub fn parse_samples(text: &str) -> Result<Vec<f64>, CliError> {
    let mut samples = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let x: f64 = line
            .parse()
            .map_err(|_| CliError::Config(format!("sample line {}: `{line}` is not a number", n + 1)))?;
        if !(x.is_finite() && x > 0.0) {
            return Err(CliError::Config(format!(
                "sample line {}: {x} is not a positive power",
                n + 1
            )));
        }
        samples.push(x);
    }
    Ok(samples)
}

pub fn fit_samples(text: &str) -> Result<FitReport, CliError> {
    let stats = sample_stats(&parse_samples(text)?)?;
    let ig = fit_inverse_gamma(&stats)?;
    Ok(FitReport {
        mu: stats.mu,
        v: stats.v,
        alpha: ig.alpha,
        beta: ig.beta,
    })
}

/// The quasi-static terms `rate` needs; extra fields (such as a full UatF
/// record) are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnownTerms {
    pub ds_sq: f64,
    pub iusi_n: f64,
    pub noise_eff: f64,
}

pub fn rate_decision(
    fit: &FitReport,
    terms: &KnownTerms,
    epsilon: f64,
    cfg: &SystemConfig,
) -> Result<RateDecision, CliError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(CliError::Usage(format!(
            "--epsilon must lie in the open interval (0, 1), got {epsilon}"
        )));
    }
    for (name, v) in [
        ("ds_sq", terms.ds_sq),
        ("iusi_n", terms.iusi_n),
        ("noise_eff", terms.noise_eff),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(CliError::Config(format!(
                "{name} must be finite and non-negative, got {v}"
            )));
        }
    }
    let ig = InverseGamma::new(fit.alpha, fit.beta).map_err(|e| CliError::Config(format!("fit: {e}")))?;
    let full = UatfTerms {
        ds_sq: terms.ds_sq,
        iui_u: 0.0,
        iusi_n: terms.iusi_n,
        noise_eff: terms.noise_eff,
        n_realizations: 0,
        iusi_raw: terms.iusi_n,
    };
    Ok(epsilon_outage_rate(&full, &ig, epsilon, cfg)?)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
