//! Network geometry, large-scale fading, spatial correlation and pilots.
//!
//! The serving BS sits at the origin with a half-wavelength uniform linear
//! array. The desired UE and the known in-cell interferers keep their
//! positions and shadowing for a whole experiment; unknown out-of-cell
//! interferers are redrawn on an annulus every drop.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{derive_stream, HermitianMatrix, StreamKind};

/// Large-scale propagation constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationModel {
    /// Channel gain at 1 m, in dB.
    pub intercept_db: f64,
    pub shadowing_std_db: f64,
    /// Shadowing correlation between UEs `δ` metres apart is `2^(-δ/decorrelation_m)`.
    pub decorrelation_m: f64,
    /// Standard deviation of the local-scattering angular spread, in degrees.
    pub angular_spread_deg: f64,
}

impl Default for PropagationModel {
    fn default() -> Self {
        PropagationModel {
            intercept_db: -35.3,
            shadowing_std_db: 4.0,
            decorrelation_m: 9.0,
            angular_spread_deg: 15.0,
        }
    }
}

/// Where the desired, known and unknown UEs are placed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    /// Bearing of the desired UE seen from the BS, in degrees.
    pub desired_angle_deg: f64,
    /// One known interferer per radius; their bearings are drawn once per seed.
    pub known_radii_m: Vec<f64>,
    pub unknown_inner_m: f64,
    pub unknown_outer_m: f64,
}

impl Default for Layout {
    fn default() -> Self {
        Layout {
            desired_angle_deg: 0.0,
            known_radii_m: vec![60.0, 100.0, 140.0, 180.0, 220.0],
            unknown_inner_m: 250.0,
            unknown_outer_m: 500.0,
        }
    }
}

/// Radio and frame constants shared by every module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_antennas: usize,
    /// Symbols per coherence block.
    pub tau_c: usize,
    /// Pilot symbols per coherence block.
    pub tau_p: usize,
    pub bandwidth_hz: f64,
    pub noise_power_dbm: f64,
    /// Common uplink transmit power of every UE.
    pub tx_power_mw: f64,
    pub pathloss_exponent: f64,
    pub seed: u64,
    pub propagation: PropagationModel,
    pub layout: Layout,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            n_antennas: 16,
            tau_c: 200,
            tau_p: 10,
            bandwidth_hz: 20e6,
            noise_power_dbm: -94.0,
            tx_power_mw: 100.0,
            pathloss_exponent: 3.76,
            seed: 1,
            propagation: PropagationModel::default(),
            layout: Layout::default(),
        }
    }
}

impl SystemConfig {
    /// Data symbols per coherence block.
    pub fn tau_u(&self) -> usize {
        self.tau_c.saturating_sub(self.tau_p)
    }

    /// Fraction of each coherence block carrying data.
    pub fn prelog(&self) -> f64 {
        self.tau_u() as f64 / self.tau_c as f64
    }

    /// Noise power in watts.
    pub fn noise_power_w(&self) -> f64 {
        10f64.powf(self.noise_power_dbm / 10.0) * 1e-3
    }

    /// Transmit power in watts.
    pub fn tx_power_w(&self) -> f64 {
        self.tx_power_mw * 1e-3
    }

    /// Desired plus known UEs.
    pub fn known_count(&self) -> usize {
        self.layout.known_radii_m.len() + 1
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n_antennas == 0 {
            return fail("n_antennas must be positive".into());
        }
        if self.tau_p == 0 || self.tau_p >= self.tau_c {
            return fail(format!(
                "need 0 < tau_p < tau_c, got tau_p = {}, tau_c = {}",
                self.tau_p, self.tau_c
            ));
        }
        if self.tau_p < self.known_count() {
            return fail(format!(
                "tau_p = {} cannot give orthogonal pilots to {} known UEs",
                self.tau_p,
                self.known_count()
            ));
        }
        for (name, v) in [
            ("tx_power_mw", self.tx_power_mw),
            ("bandwidth_hz", self.bandwidth_hz),
            ("pathloss_exponent", self.pathloss_exponent),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return fail(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !self.noise_power_dbm.is_finite() {
            return fail("noise_power_dbm must be finite".into());
        }
        let p = &self.propagation;
        if !(p.shadowing_std_db >= 0.0 && p.decorrelation_m > 0.0 && p.angular_spread_deg >= 0.0) {
            return fail("invalid propagation model constants".into());
        }
        let l = &self.layout;
        if !(l.unknown_inner_m > 0.0 && l.unknown_outer_m > l.unknown_inner_m) {
            return fail("unknown-interferer annulus must satisfy 0 < inner < outer".into());
        }
        if l.known_radii_m.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return fail("known radii must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UeCategory {
    Desired,
    Known,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeRecord {
    pub id: usize,
    pub category: UeCategory,
    /// Metres, BS at the origin.
    pub position: [f64; 2],
    pub pilot_index: usize,
    pub power_w: f64,
}

impl UeRecord {
    pub fn distance_m(&self) -> f64 {
        self.position[0].hypot(self.position[1])
    }

    /// Bearing from the BS in radians.
    pub fn bearing(&self) -> f64 {
        self.position[1].atan2(self.position[0])
    }

    /// Desired or known: statistics available at the serving BS.
    pub fn is_known(&self) -> bool {
        self.category != UeCategory::Unknown
    }
}

/// Spatial correlation of one UE's channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    pub ue_id: usize,
    pub r: HermitianMatrix,
    /// `tr(R) / N`
    pub beta: f64,
}

fn polar(radius: f64, angle: f64) -> [f64; 2] {
    [radius * angle.cos(), radius * angle.sin()]
}

/// Desired UE (id 0) followed by one known interferer per configured radius.
///
/// Known bearings are uniform on `[0, 2π)` and come from the fixed-cell
/// stream of `cfg.seed`, so every drop of an experiment sees the same cell.
pub fn fixed_cell_ues(cfg: &SystemConfig, r_desired_m: f64) -> Result<Vec<UeRecord>> {
    if !(r_desired_m.is_finite() && r_desired_m > 0.0) {
        return Err(Error::Config(format!(
            "r_desired_m must be positive, got {r_desired_m}"
        )));
    }
    let mut rng = derive_stream(cfg.seed, StreamKind::FixedCell, 0);
    let p = cfg.tx_power_w();
    let mut ues = vec![UeRecord {
        id: 0,
        category: UeCategory::Desired,
        position: polar(r_desired_m, cfg.layout.desired_angle_deg.to_radians()),
        pilot_index: 0,
        power_w: p,
    }];
    for (i, &radius) in cfg.layout.known_radii_m.iter().enumerate() {
        let angle = rng.random_range(0.0..2.0 * PI);
        ues.push(UeRecord {
            id: i + 1,
            category: UeCategory::Known,
            position: polar(radius, angle),
            pilot_index: 0,
            power_w: p,
        });
    }
    Ok(ues)
}

/// `count` unknown UEs, area-uniform on the configured annulus, with ids
/// starting at `first_id`. Pilots are left at 0; see [`assign_pilots`].
pub fn drop_unknown_ues<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    count: usize,
    first_id: usize,
    rng: &mut R,
) -> Vec<UeRecord> {
    let inner_sq = cfg.layout.unknown_inner_m.powi(2);
    let outer_sq = cfg.layout.unknown_outer_m.powi(2);
    (0..count)
        .map(|i| {
            let u: f64 = rng.random();
            let radius = (inner_sq + u * (outer_sq - inner_sq)).sqrt();
            let angle = rng.random_range(0.0..2.0 * PI);
            UeRecord {
                id: first_id + i,
                category: UeCategory::Unknown,
                position: polar(radius, angle),
                pilot_index: 0,
                power_w: cfg.tx_power_w(),
            }
        })
        .collect()
}

/// Orthogonal pilots `0, 1, ...` for desired and known UEs in list order;
/// independent uniform pilots for unknown UEs.
pub fn assign_pilots<R: Rng + ?Sized>(mut ues: Vec<UeRecord>, tau_p: usize, rng: &mut R) -> Result<Vec<UeRecord>> {
    let known = ues.iter().filter(|u| u.is_known()).count();
    if known > tau_p || tau_p == 0 {
        return Err(Error::Config(format!(
            "{known} known UEs need orthogonal pilots but tau_p = {tau_p}"
        )));
    }
    let mut next = 0;
    for ue in &mut ues {
        if ue.is_known() {
            ue.pilot_index = next;
            next += 1;
        } else {
            ue.pilot_index = rng.random_range(0..tau_p);
        }
    }
    Ok(ues)
}

/// Full UE population for one drop: the fixed cell plus `k_u` unknown UEs.
pub fn build_scenario<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    r_desired_m: f64,
    k_u: usize,
    rng: &mut R,
) -> Result<Vec<UeRecord>> {
    cfg.validate()?;
    let mut ues = fixed_cell_ues(cfg, r_desired_m)?;
    let first = ues.len();
    ues.extend(drop_unknown_ues(cfg, k_u, first, rng));
    assign_pilots(ues, cfg.tau_p, rng)
}

/// Median channel gain in dB at distance `d_m`.
pub fn pathloss_db(cfg: &SystemConfig, d_m: f64) -> Result<f64> {
    if !(d_m.is_finite() && d_m > 0.0) {
        return Err(Error::domain(format!("pathloss distance must be positive, got {d_m}")));
    }
    Ok(cfg.propagation.intercept_db - 10.0 * cfg.pathloss_exponent * d_m.log10())
}

/// Shadowing covariance (dB²) between UEs `delta_m` metres apart.
pub fn shadowing_covariance(model: &PropagationModel, delta_m: f64) -> f64 {
    model.shadowing_std_db.powi(2) * 2f64.powf(-delta_m / model.decorrelation_m)
}

fn distance(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn covariance_block(model: &PropagationModel, rows: &[&UeRecord], cols: &[&UeRecord]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
        shadowing_covariance(model, distance(&rows[i].position, &cols[j].position))
    })
}

/// Draws `N(mean, cov)` through an eigen-decomposition with clamped eigenvalues.
fn sample_real_gaussian<R: Rng + ?Sized>(mean: &DVector<f64>, cov: DMatrix<f64>, rng: &mut R) -> DVector<f64> {
    let n = mean.len();
    if n == 0 {
        return DVector::zeros(0);
    }
    let eig = SymmetricEigen::new(cov);
    let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let scaled = DVector::from_fn(n, |i, _| eig.eigenvalues[i].max(0.0).sqrt() * z[i]);
    mean + eig.eigenvectors * scaled
}

/// Jointly draws correlated shadowing for `ues` and returns the channel gain
/// `beta` (linear) of every UE, keyed by id.
pub fn large_scale_fading<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    ues: &[UeRecord],
    rng: &mut R,
) -> Result<BTreeMap<usize, f64>> {
    let refs: Vec<&UeRecord> = ues.iter().collect();
    let cov = covariance_block(&cfg.propagation, &refs, &refs);
    let shadow = sample_real_gaussian(&DVector::zeros(ues.len()), cov, rng);
    ues.iter()
        .zip(shadow.iter())
        .map(|(ue, f)| Ok((ue.id, db_to_linear(pathloss_db(cfg, ue.distance_m())? + f))))
        .collect()
}

/// Draws shadowing (dB) for `targets` conditioned on the already realized
/// shadowing `given_db` of the UEs in `given`.
pub fn conditional_shadowing<R: Rng + ?Sized>(
    model: &PropagationModel,
    given: &[UeRecord],
    given_db: &[f64],
    targets: &[UeRecord],
    rng: &mut R,
) -> Result<Vec<f64>> {
    let g: Vec<&UeRecord> = given.iter().collect();
    let t: Vec<&UeRecord> = targets.iter().collect();
    let c_tt = covariance_block(model, &t, &t);
    if g.is_empty() || t.is_empty() {
        return Ok(sample_real_gaussian(&DVector::zeros(t.len()), c_tt, rng)
            .iter()
            .copied()
            .collect());
    }
    let c_gg = covariance_block(model, &g, &g);
    let c_tg = covariance_block(model, &t, &g);
    let chol = c_gg.cholesky().ok_or(Error::SingularMatrix)?;
    let f_g = DVector::from_column_slice(given_db);
    let mean = &c_tg * chol.solve(&f_g);
    let gain = chol.solve(&c_tg.transpose());
    let cov = c_tt - &c_tg * gain;
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(sample_real_gaussian(&mean, cov, rng).iter().copied().collect())
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Local-scattering correlation for a half-wavelength ULA:
/// `[R]_{m,n} = β e^{jπ(m−n) sin φ} e^{−(σ π (m−n) cos φ)² / 2}`,
/// the Gaussian small-angle approximation of `β E{e^{jπ(m−n) sin(φ + δ)}}`
/// with `δ ~ N(0, σ²)`.
pub fn local_scattering_correlation(n: usize, beta: f64, nominal_angle: f64, spread_rad: f64) -> HermitianMatrix {
    let (sin, cos) = nominal_angle.sin_cos();
    let m = DMatrix::from_fn(n, n, |row, col| {
        let diff = row as f64 - col as f64;
        let phase = Complex64::from_polar(1.0, PI * diff * sin);
        let damping = (-0.5 * (spread_rad * PI * diff * cos).powi(2)).exp();
        phase * (beta * damping)
    });
    // Hermitian by construction: entry (n, m) is the conjugate of (m, n).
    HermitianMatrix::new(m).expect("local scattering matrix is Hermitian")
}

/// Spatial correlation of `ue` with average gain `beta`, nominal angle equal
/// to its bearing from the BS.
pub fn spatial_correlation(ue: &UeRecord, beta: f64, cfg: &SystemConfig) -> ChannelStats {
    let r = local_scattering_correlation(
        cfg.n_antennas,
        beta,
        ue.bearing(),
        cfg.propagation.angular_spread_deg.to_radians(),
    );
    ChannelStats { ue_id: ue.id, r, beta }
}

/// The fixed part of an experiment: desired and known UEs with their frozen
/// shadowing and correlation matrices.
#[derive(Debug, Clone)]
pub struct FixedCell {
    pub ues: Vec<UeRecord>,
    pub shadowing_db: Vec<f64>,
    pub stats: Vec<ChannelStats>,
}

/// One drop: every UE with its channel statistics, in matching order.
#[derive(Debug, Clone)]
pub struct Network {
    pub ues: Vec<UeRecord>,
    pub stats: Vec<ChannelStats>,
}

impl FixedCell {
    pub fn new(cfg: &SystemConfig, r_desired_m: f64) -> Result<Self> {
        cfg.validate()?;
        let ues = fixed_cell_ues(cfg, r_desired_m)?;
        // geometry used the first draws of this stream; shadowing starts after
        let mut rng = derive_stream(cfg.seed, StreamKind::FixedCell, 1);
        let refs: Vec<&UeRecord> = ues.iter().collect();
        let cov = covariance_block(&cfg.propagation, &refs, &refs);
        let shadowing_db: Vec<f64> = sample_real_gaussian(&DVector::zeros(ues.len()), cov, &mut rng)
            .iter()
            .copied()
            .collect();
        let mut rng = derive_stream(cfg.seed, StreamKind::FixedCell, 2);
        let ues = assign_pilots(ues, cfg.tau_p, &mut rng)?;
        let stats = ues
            .iter()
            .zip(&shadowing_db)
            .map(|(ue, f)| {
                Ok(spatial_correlation(
                    ue,
                    db_to_linear(pathloss_db(cfg, ue.distance_m())? + f),
                    cfg,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FixedCell {
            ues,
            shadowing_db,
            stats,
        })
    }

    /// Adds `k_u` freshly dropped unknown UEs with shadowing drawn conditionally
    /// on the frozen in-cell shadowing.
    pub fn drop_network<R: Rng + ?Sized>(&self, cfg: &SystemConfig, k_u: usize, rng: &mut R) -> Result<Network> {
        let unknown = drop_unknown_ues(cfg, k_u, self.ues.len(), rng);
        let unknown: Vec<UeRecord> = unknown
            .into_iter()
            .map(|mut ue| {
                ue.pilot_index = rng.random_range(0..cfg.tau_p);
                ue
            })
            .collect();
        let shadow = conditional_shadowing(&cfg.propagation, &self.ues, &self.shadowing_db, &unknown, rng)?;
        let mut stats = self.stats.clone();
        for (ue, f) in unknown.iter().zip(shadow) {
            let beta = db_to_linear(pathloss_db(cfg, ue.distance_m())? + f);
            stats.push(spatial_correlation(ue, beta, cfg));
        }
        let mut ues = self.ues.clone();
        ues.extend(unknown);
        Ok(Network { ues, stats })
    }
}

impl Network {
    pub fn desired_index(&self) -> usize {
        self.ues
            .iter()
            .position(|u| u.category == UeCategory::Desired)
            .expect("network has a desired UE")
    }
}
