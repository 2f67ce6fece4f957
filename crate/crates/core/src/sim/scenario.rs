use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Car,
    Nav,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Iekf,
    Ekf,
    Mekf,
}

impl FilterKind {
    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Iekf => "iekf",
            FilterKind::Ekf => "ekf",
            FilterKind::Mekf => "mekf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CarObservation {
    Gps,
    Landmarks,
}

/// Uniform circular motion, starting at time 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trajectory {
    /// Circle diameter (m).
    pub diameter: f64,
    /// Time for one full turn (s).
    pub period: f64,
    /// Height of the circle plane (m), nav only.
    #[serde(default)]
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CarConfig {
    pub observation: CarObservation,
    /// Initial heading error (deg); the initial position is exact.
    pub init_heading_deg: f64,
    /// Prior heading standard deviation (deg); defaults to the initial error.
    pub p0_heading_deg: Option<f64>,
    /// Prior position variance per axis (m²).
    pub p0_position: f64,
    /// Diagonal of Cov(w^θ, w^l, w^tr).
    pub q: [f64; 3],
    /// Diagonal of the GPS noise covariance (m²).
    pub gps_cov: [f64; 2],
    /// Diagonal of each landmark noise covariance (m²).
    pub landmark_cov: [f64; 2],
    pub landmarks: Vec<[f64; 2]>,
}

impl Default for CarConfig {
    fn default() -> Self {
        let deg = std::f64::consts::PI / 180.0;
        Self {
            observation: CarObservation::Gps,
            init_heading_deg: 1.0,
            p0_heading_deg: None,
            p0_position: 0.01,
            q: [deg * deg, 1e-4, 1e-4],
            gps_cov: [1.0, 1.0],
            landmark_cov: [1.0, 1.0],
            landmarks: vec![[10.0, 0.0], [0.0, 10.0]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NavConfig {
    /// Gyro noise density per axis (rad²/s).
    pub q_gyro: f64,
    /// Accelerometer noise density per axis ((m/s²)²·s).
    pub q_accel: f64,
    /// Position process noise per axis (m²/s).
    pub q_position: f64,
    /// Variance of each landmark measurement axis (m²).
    pub landmark_cov: f64,
    pub landmarks: Vec<[f64; 3]>,
    pub gravity: [f64; 3],
    /// Standard deviations of the initial right-invariant error
    /// `ξ₀ = (ζ, u, y)`, per axis. They also set the prior `P₀`.
    pub sigma_attitude_deg: f64,
    pub sigma_velocity_m_s: f64,
    pub sigma_position_m: f64,
}

impl Default for NavConfig {
    fn default() -> Self {
        Self {
            q_gyro: 1e-8,
            q_accel: 1e-8,
            q_position: 0.0,
            landmark_cov: 1e-2,
            landmarks: vec![[0.0, 0.0, 5.0], [10.0, 0.0, 0.0], [0.0, 10.0, 2.0]],
            gravity: [0.0, 0.0, -crate::models::nav::STANDARD_GRAVITY],
            sigma_attitude_deg: 15.0,
            sigma_velocity_m_s: 0.1,
            sigma_position_m: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub model: ModelKind,
    /// Simulated horizon (s).
    pub duration: f64,
    /// Input sample rate (Hz); also the integration rate.
    pub imu_rate: f64,
    /// Observation rate (Hz).
    pub obs_rate: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub inject_noise: bool,
    /// Joseph-form covariance updates in the invariant filter.
    #[serde(default)]
    pub joseph: bool,
    /// Filters to run; empty means every filter the model supports.
    #[serde(default)]
    pub filters: Vec<FilterKind>,
    pub trajectory: Trajectory,
    #[serde(default)]
    pub car: CarConfig,
    #[serde(default)]
    pub nav: NavConfig,
}

impl Scenario {
    /// 10 m circle in 40 s, odometry at 100 Hz, GPS at 1 Hz.
    pub fn fig1(init_heading_deg: f64) -> Self {
        Self {
            model: ModelKind::Car,
            duration: 40.0,
            imu_rate: 100.0,
            obs_rate: 1.0,
            seed: 0,
            inject_noise: false,
            joseph: false,
            filters: vec![],
            trajectory: Trajectory { diameter: 10.0, period: 40.0, height: 0.0 },
            car: CarConfig { init_heading_deg, ..CarConfig::default() },
            nav: NavConfig::default(),
        }
    }

    /// 10 m circle in 30 s, IMU at 100 Hz, three landmarks at 1 Hz. `q` is
    /// the gyro and accelerometer noise level.
    pub fn fig2(q: f64) -> Self {
        Self {
            model: ModelKind::Nav,
            duration: 30.0,
            imu_rate: 100.0,
            obs_rate: 1.0,
            seed: 0,
            inject_noise: false,
            joseph: false,
            filters: vec![],
            trajectory: Trajectory { diameter: 10.0, period: 30.0, height: 0.0 },
            car: CarConfig::default(),
            nav: NavConfig { q_gyro: q, q_accel: q, ..NavConfig::default() },
        }
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.imu_rate
    }

    /// Number of integration steps.
    pub fn steps(&self) -> usize {
        (self.duration * self.imu_rate).round() as usize
    }

    /// Integration steps between observations.
    pub fn steps_per_obs(&self) -> usize {
        (self.imu_rate / self.obs_rate).round() as usize
    }

    pub fn filters(&self) -> Vec<FilterKind> {
        if !self.filters.is_empty() {
            return self.filters.clone();
        }
        match (self.model, self.car.observation) {
            (ModelKind::Car, CarObservation::Gps) => vec![FilterKind::Iekf, FilterKind::Ekf],
            (ModelKind::Car, CarObservation::Landmarks) => vec![FilterKind::Iekf],
            (ModelKind::Nav, _) => vec![FilterKind::Iekf, FilterKind::Mekf],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.duration >= 0.0) || !self.duration.is_finite() {
            return bad(format!("duration must be non-negative, got {}", self.duration));
        }
        if !(self.imu_rate > 0.0) || !(self.obs_rate > 0.0) {
            return bad("rates must be positive".into());
        }
        let ratio = self.imu_rate / self.obs_rate;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio < 1.0 {
            return bad(format!("imu_rate {} is not a multiple of obs_rate {}", self.imu_rate, self.obs_rate));
        }
        let steps = self.duration * self.imu_rate;
        if (steps - steps.round()).abs() > 1e-6 {
            return bad(format!("duration {} is not a whole number of imu periods", self.duration));
        }
        if !(self.trajectory.diameter >= 0.0) || !(self.trajectory.period > 0.0) {
            return bad("trajectory needs a non-negative diameter and a positive period".into());
        }
        let mut seen = Vec::new();
        for f in self.filters() {
            if seen.contains(&f) {
                return bad(format!("filter {} listed twice", f.name()));
            }
            seen.push(f);
            let ok = match (self.model, f) {
                (_, FilterKind::Iekf) => true,
                (ModelKind::Car, FilterKind::Ekf) => self.car.observation == CarObservation::Gps,
                (ModelKind::Nav, FilterKind::Mekf) => true,
                _ => false,
            };
            if !ok {
                return bad(format!("filter {} is not available for this model and observation", f.name()));
            }
        }
        match self.model {
            ModelKind::Car => {
                let c = &self.car;
                if c.q.iter().chain(&c.gps_cov).chain(&c.landmark_cov).any(|v| !(*v >= 0.0)) {
                    return bad("car noise levels must be non-negative".into());
                }
                if c.observation == CarObservation::Landmarks && c.landmarks.is_empty() {
                    return bad("landmark observation needs at least one landmark".into());
                }
                if !(c.p0_position > 0.0) || c.p0_heading_deg.is_some_and(|s| !(s > 0.0)) {
                    return bad("prior variances must be positive".into());
                }
                if c.p0_heading_deg.is_none() && !(c.init_heading_deg.abs() > 0.0) {
                    return bad("set car.p0_heading_deg when the initial heading error is zero".into());
                }
            }
            ModelKind::Nav => {
                let n = &self.nav;
                if [n.q_gyro, n.q_accel, n.q_position, n.landmark_cov].iter().any(|v| !(*v >= 0.0)) {
                    return bad("nav noise levels must be non-negative".into());
                }
                if !(n.landmark_cov > 0.0) {
                    return bad("nav.landmark_cov must be positive".into());
                }
                if n.landmarks.is_empty() {
                    return bad("nav needs at least one landmark".into());
                }
                if [n.sigma_attitude_deg, n.sigma_velocity_m_s, n.sigma_position_m].iter().any(|v| !(*v > 0.0)) {
                    return bad("prior standard deviations must be positive".into());
                }
            }
        }
        Ok(())
    }
}
