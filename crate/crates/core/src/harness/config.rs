//! Scenario configuration, loaded from JSON.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::det_equiv::FixedPointOptions;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnrUnit {
    Linear,
    Db,
}

/// Received SNR per user, `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snr {
    pub value: f64,
    pub unit: SnrUnit,
}

impl Snr {
    pub fn linear(value: f64) -> Self {
        Snr {
            value,
            unit: SnrUnit::Linear,
        }
    }

    pub fn db(value: f64) -> Self {
        Snr {
            value,
            unit: SnrUnit::Db,
        }
    }

    pub fn as_linear(&self) -> f64 {
        match self.unit {
            SnrUnit::Linear => self.value,
            SnrUnit::Db => 10f64.powf(self.value / 10.0),
        }
    }
}

/// A single threshold or a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaSpec {
    One(f64),
    Many(Vec<f64>),
}

impl DeltaSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            DeltaSpec::One(d) => vec![*d],
            DeltaSpec::Many(v) => v.clone(),
        }
    }
}

/// All scalar system parameters of one experiment.
///
/// Power convention: noise variance is one and every user has normalized
/// power `rho`, so the physical transmit power applied to channels with
/// `E||h||^2 = N` is `rho / N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub n_antennas: usize,
    pub n_users: usize,
    pub n_sectors: usize,
    /// Angular spread of every user, radians.
    pub angular_spread: f64,
    pub arc_start: f64,
    pub arc_end: f64,
    /// Element spacing in wavelengths.
    pub antenna_spacing: f64,
    pub snr: Snr,
    pub delta: DeltaSpec,
    /// User counts for the load sweep; empty means `[n_users]`.
    pub user_counts: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            n_antennas: 64,
            n_users: 32,
            n_sectors: 16,
            angular_spread: PI / 10.0,
            arc_start: PI / 6.0,
            arc_end: 5.0 * PI / 6.0,
            antenna_spacing: 0.5,
            snr: Snr::linear(10.0),
            delta: DeltaSpec::One(0.1),
            user_counts: Vec::new(),
            trials: 100,
            seed: 1,
            tol: 1e-10,
            max_iter: 1000,
            damping: 1.0,
        }
    }
}

impl SystemConfig {
    /// `N = 225`, `S = 45`, `K = 135`.
    pub fn large_scale() -> Self {
        SystemConfig {
            n_antennas: 225,
            n_users: 135,
            n_sectors: 45,
            ..Default::default()
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: SystemConfig = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&s).map_err(|e| e.context(format!("reading {}", path.display())))
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.delta.values()
    }

    pub fn user_counts(&self) -> Vec<usize> {
        if self.user_counts.is_empty() {
            vec![self.n_users]
        } else {
            self.user_counts.clone()
        }
    }

    pub fn beams_per_sector(&self) -> usize {
        self.n_antennas / self.n_sectors
    }

    /// Normalized power used by the deterministic equivalents.
    pub fn normalized_power(&self) -> f64 {
        self.snr.as_linear()
    }

    /// Physical transmit power applied to realized channels.
    pub fn physical_power(&self) -> f64 {
        self.snr.as_linear() / self.n_antennas as f64
    }

    pub fn fixed_point_options(&self) -> FixedPointOptions {
        FixedPointOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            damping: self.damping,
        }
    }

    pub fn with_users(&self, k: usize) -> Self {
        SystemConfig {
            n_users: k,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_antennas == 0 || self.n_sectors == 0 || !self.n_antennas.is_multiple_of(self.n_sectors) {
            return bad(format!(
                "n_sectors = {} must divide n_antennas = {}",
                self.n_sectors, self.n_antennas
            ));
        }
        for k in self.user_counts().into_iter().chain([self.n_users]) {
            if k == 0 || k > self.n_antennas {
                return bad(format!("user count {k} must lie in [1, {}]", self.n_antennas));
            }
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.angular_spread > 0.0 && self.angular_spread <= PI) {
            return bad(format!("angular_spread {} must lie in (0, pi]", self.angular_spread));
        }
        if !(self.arc_end > self.arc_start && self.arc_start >= 0.0 && self.arc_end <= PI) {
            return bad(format!(
                "arc [{}, {}] must be a nonempty sub-interval of [0, pi]",
                self.arc_start, self.arc_end
            ));
        }
        if !(self.antenna_spacing > 0.0) {
            return bad(format!("antenna_spacing {} must be positive", self.antenna_spacing));
        }
        let rho = self.snr.as_linear();
        if !(rho > 0.0 && rho.is_finite()) {
            return bad(format!("snr {rho} (linear) must be positive and finite"));
        }
        let deltas = self.deltas();
        if deltas.is_empty() {
            return bad("at least one delta is required".into());
        }
        if let Some(d) = deltas.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return bad(format!("delta {d} must lie in [0, 1]"));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return bad("tol must be positive and max_iter at least 1".into());
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad(format!("damping {} must lie in (0, 1]", self.damping));
        }
        Ok(())
    }
}
