//! Small-scale channel realizations, the pilot correlator output and the
//! in-cell channel estimator.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{
    hermitian_solve, standard_complex_normal, ComplexVector, CorrelatedGaussian, HermitianMatrix, HermitianSolver,
};
use crate::scenario::{ChannelStats, SystemConfig, UeRecord};

/// One coherence block: a channel per UE and a noise vector per pilot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Indexed like the UE list the realization was drawn for.
    pub h: Vec<ComplexVector>,
    /// Indexed by pilot.
    pub pilot_noise: Vec<ComplexVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub ue_id: usize,
    pub h_hat: ComplexVector,
}

/// Pre-factored channel samplers for a fixed set of UEs.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    samplers: Vec<CorrelatedGaussian>,
    n_antennas: usize,
    tau_p: usize,
    noise_std: f64,
}

impl ChannelSampler {
    pub fn new(stats: &[ChannelStats], cfg: &SystemConfig) -> Result<Self> {
        let samplers = stats
            .iter()
            .map(|s| {
                if s.r.dim() != cfg.n_antennas {
                    return Err(Error::domain(format!(
                        "correlation matrix of UE {} is {}x{}, expected N = {}",
                        s.ue_id,
                        s.r.dim(),
                        s.r.dim(),
                        cfg.n_antennas
                    )));
                }
                CorrelatedGaussian::new(&s.r)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ChannelSampler {
            samplers,
            n_antennas: cfg.n_antennas,
            tau_p: cfg.tau_p,
            noise_std: cfg.noise_power_w().sqrt(),
        })
    }

    /// Independent `h_k ~ N_C(0, R_k)` for every UE, then fresh
    /// `n_t ~ N_C(0, σ² I)` for every pilot.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        let h = self.samplers.iter().map(|s| s.sample(rng)).collect();
        let pilot_noise = (0..self.tau_p)
            .map(|_| ComplexVector::from_fn(self.n_antennas, |_, _| standard_complex_normal(rng) * self.noise_std))
            .collect();
        ChannelRealization { h, pilot_noise }
    }
}

pub fn draw_channels<R: Rng + ?Sized>(
    stats: &[ChannelStats],
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    Ok(ChannelSampler::new(stats, cfg)?.draw(rng))
}

/// Pilot correlator output `y_t = Σ_{i ∈ P_t} √(τ_p p_i) h_i + n_t`.
///
/// `ues` must be ordered like `realization.h`.
pub fn pilot_observation(
    realization: &ChannelRealization,
    ues: &[UeRecord],
    pilot_t: usize,
    cfg: &SystemConfig,
) -> Result<ComplexVector> {
    let noise = realization.pilot_noise.get(pilot_t).ok_or_else(|| {
        Error::domain(format!(
            "pilot index {pilot_t} outside [0, {})",
            realization.pilot_noise.len()
        ))
    })?;
    let mut y = noise.clone();
    for (ue, h) in ues.iter().zip(&realization.h) {
        if ue.pilot_index == pilot_t {
            y.axpy((cfg.tau_p as f64 * ue.power_w).sqrt().into(), h, 1.0.into());
        }
    }
    Ok(y)
}

/// Estimator `ĥ = √(τ_p p) R (τ_p p R + σ² I)^{-1} y` for one known UE, with
/// the system matrix factored once.
#[derive(Debug, Clone)]
pub struct ChannelEstimator {
    ue_id: usize,
    gain: f64,
    r: HermitianMatrix,
    solver: HermitianSolver,
}

impl ChannelEstimator {
    pub fn new(stats: &ChannelStats, power_w: f64, cfg: &SystemConfig) -> Result<Self> {
        let pilot_energy = cfg.tau_p as f64 * power_w;
        let system = stats.r.scale(pilot_energy).add_identity(cfg.noise_power_w());
        Ok(ChannelEstimator {
            ue_id: stats.ue_id,
            gain: pilot_energy.sqrt(),
            r: stats.r.clone(),
            solver: HermitianSolver::new(&system)?,
        })
    }

    pub fn estimate(&self, y: &ComplexVector) -> ChannelEstimate {
        let x = self.solver.solve(y);
        ChannelEstimate {
            ue_id: self.ue_id,
            h_hat: self.r.mul_vec(&x) * num_complex::Complex64::from(self.gain),
        }
    }
}

pub fn estimate_channel(
    y: &ComplexVector,
    stats: &ChannelStats,
    power_w: f64,
    cfg: &SystemConfig,
) -> Result<ChannelEstimate> {
    let pilot_energy = cfg.tau_p as f64 * power_w;
    let system = stats.r.scale(pilot_energy).add_identity(cfg.noise_power_w());
    let x = hermitian_solve(&system, y)?;
    Ok(ChannelEstimate {
        ue_id: stats.ue_id,
        h_hat: stats.r.mul_vec(&x) * num_complex::Complex64::from(pilot_energy.sqrt()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{derive_stream, Complex64, StreamKind};
    use crate::scenario::{local_scattering_correlation, UeCategory};
    use nalgebra::DMatrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Config with σ² = 1 W (noise_power_dbm = 30).
    fn unit_noise_cfg(n: usize) -> SystemConfig {
        SystemConfig {
            n_antennas: n,
            noise_power_dbm: 30.0,
            ..SystemConfig::default()
        }
    }

    fn ue(id: usize, pilot: usize, power_w: f64) -> UeRecord {
        UeRecord {
            id,
            category: if id == 0 {
                UeCategory::Desired
            } else {
                UeCategory::Unknown
            },
            position: [100.0, 0.0],
            pilot_index: pilot,
            power_w,
        }
    }

    fn stats(id: usize, r: HermitianMatrix) -> ChannelStats {
        let beta = r.trace() / r.dim() as f64;
        ChannelStats { ue_id: id, r, beta }
    }

    #[test]
    fn zero_correlation_gives_pure_noise() {
        let cfg = unit_noise_cfg(4);
        let s = vec![stats(0, HermitianMatrix::zeros(4)), stats(1, HermitianMatrix::zeros(4))];
        let mut rng = derive_stream(1, StreamKind::Auxiliary, 0);
        let real = draw_channels(&s, &cfg, &mut rng).unwrap();
        assert!(real.h.iter().all(|h| h.norm() == 0.0));
        let ues = vec![ue(0, 0, 0.1), ue(1, 0, 0.1)];
        let y = pilot_observation(&real, &ues, 0, &cfg).unwrap();
        assert_eq!(y, real.pilot_noise[0]);
        // empty pilot set
        let y = pilot_observation(&real, &ues, 3, &cfg).unwrap();
        assert_eq!(y, real.pilot_noise[3]);
        assert!(pilot_observation(&real, &ues, cfg.tau_p, &cfg).is_err());
    }

    #[test]
    fn pilot_observation_matches_direct_sum() {
        let cfg = unit_noise_cfg(3);
        let h0 = ComplexVector::from_vec(vec![c(1.0, 2.0), c(-1.0, 0.5), c(0.0, 3.0)]);
        let h1 = ComplexVector::from_vec(vec![c(0.5, 0.0), c(2.0, -2.0), c(1.0, 1.0)]);
        let h2 = ComplexVector::from_vec(vec![c(9.0, 9.0), c(9.0, 9.0), c(9.0, 9.0)]);
        let n0 = ComplexVector::from_vec(vec![c(0.1, 0.0), c(0.0, 0.1), c(-0.1, 0.0)]);
        let mut pilot_noise = vec![ComplexVector::zeros(3); cfg.tau_p];
        pilot_noise[2] = n0.clone();
        let real = ChannelRealization {
            h: vec![h0.clone(), h1.clone(), h2],
            pilot_noise,
        };
        let ues = vec![ue(0, 2, 0.1), ue(1, 2, 0.4), ue(2, 5, 0.1)];
        let y = pilot_observation(&real, &ues, 2, &cfg).unwrap();
        for i in 0..3 {
            let want = h0[i] * (10.0f64 * 0.1).sqrt() + h1[i] * (10.0f64 * 0.4).sqrt() + n0[i];
            assert!((y[i] - want).norm() < 1e-12);
        }
        // single UE, zero noise
        let real = ChannelRealization {
            h: vec![h0.clone()],
            pilot_noise: vec![ComplexVector::zeros(3); cfg.tau_p],
        };
        let y = pilot_observation(&real, &ues[..1], 2, &cfg).unwrap();
        assert!((y - h0 * c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn identity_correlation_halves_observation() {
        // τ_p p = σ² = 1, R = I  =>  ĥ = y / 2
        let cfg = unit_noise_cfg(4);
        let s = stats(0, HermitianMatrix::identity(4));
        let y = ComplexVector::from_vec(vec![c(1.0, 0.0), c(2.0, -1.0), c(0.0, 4.0), c(-3.0, 1.0)]);
        let est = estimate_channel(&y, &s, 1.0 / cfg.tau_p as f64, &cfg).unwrap();
        assert!((est.h_hat - y.map(|z| z / 2.0)).norm() < 1e-14);
        let est = estimate_channel(&y, &stats(0, HermitianMatrix::zeros(4)), 0.1, &cfg).unwrap();
        assert_eq!(est.h_hat.norm(), 0.0);
    }

    #[test]
    fn two_antenna_estimate_matches_cofactor_inverse() {
        let cfg = unit_noise_cfg(2);
        let r = HermitianMatrix::new(DMatrix::from_row_slice(
            2,
            2,
            &[c(2.0, 0.0), c(0.5, 0.7), c(0.5, -0.7), c(1.0, 0.0)],
        ))
        .unwrap();
        let p = 0.3;
        let e = cfg.tau_p as f64 * p;
        let y = ComplexVector::from_vec(vec![c(0.3, -1.2), c(2.0, 0.4)]);
        // A = e R + I, A^{-1} = adj(A) / det(A)
        let a = r.as_matrix().map(|z| z * e) + DMatrix::identity(2, 2);
        let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        let inv = DMatrix::from_row_slice(2, 2, &[a[(1, 1)], -a[(0, 1)], -a[(1, 0)], a[(0, 0)]]).map(|z| z / det);
        let want = r.as_matrix() * inv * &y * c(e.sqrt(), 0.0);
        let got = estimate_channel(&y, &stats(0, r.clone()), p, &cfg).unwrap();
        assert!((&got.h_hat - &want).norm() < 1e-12);
        let est = ChannelEstimator::new(&stats(0, r), p, &cfg).unwrap();
        assert!((est.estimate(&y).h_hat - want).norm() < 1e-12);
    }

    #[test]
    fn estimate_is_linear() {
        let cfg = SystemConfig::default();
        let r = local_scattering_correlation(16, 1e-11, 0.3, 15f64.to_radians());
        let est = ChannelEstimator::new(&stats(0, r), 0.1, &cfg).unwrap();
        let mut rng = derive_stream(2, StreamKind::Auxiliary, 0);
        let y = ComplexVector::from_fn(16, |_, _| standard_complex_normal(&mut rng) * 1e-6);
        let k = c(-2.5, 0.75);
        let lhs = est.estimate(&(&y * k)).h_hat;
        let rhs = est.estimate(&y).h_hat * k;
        assert!((&lhs - &rhs).norm() <= 1e-12 * rhs.norm());
    }

    #[test]
    fn singular_system_is_reported() {
        let cfg = SystemConfig {
            noise_power_dbm: f64::NEG_INFINITY,
            ..unit_noise_cfg(3)
        };
        let a = ComplexVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)]);
        let s = stats(0, HermitianMatrix::rank_one(&a));
        let y = ComplexVector::from_element(3, c(1.0, 0.0));
        assert_eq!(estimate_channel(&y, &s, 0.1, &cfg), Err(Error::SingularMatrix));
    }
}
