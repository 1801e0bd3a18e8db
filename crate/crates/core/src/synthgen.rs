//! Synthetic uplink telemetry with a known link-adaptation mechanism.
//!
//! Per sample: SNR is drawn from a normal distribution and clipped to
//! `[-10, 40]` dB, link adaptation picks the highest MCS whose threshold the
//! SNR meets, BLER is a logistic function of the margin above that threshold,
//! and bit rate is `scale · efficiency[mcs] · (1 - bler)` plus Gaussian noise,
//! clipped at zero.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{MetricRecord, MAX_MCS};

const N_MCS: usize = MAX_MCS as usize + 1;
const SNR_CLIP_DB: (f64, f64) = (-10.0, 40.0);
/// First generated timestamp (2024-06-25T21:13:20Z), in milliseconds.
pub const BASE_TIMESTAMP_MS: i64 = 1_719_350_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub snr_mean_db: f64,
    pub snr_std_db: f64,
    /// Spectral efficiency per MCS index, 29 entries.
    pub mcs_table: Vec<f64>,
    /// Minimum SNR for each MCS index, 29 entries.
    pub snr_thresholds_db: Vec<f64>,
    pub bler_steepness: f64,
    pub brate_scale_kbps: f64,
    pub noise_std_kbps: f64,
    pub tti_period: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n_samples: 20_000,
            seed: 42,
            snr_mean_db: 12.0,
            snr_std_db: 6.0,
            mcs_table: (0..N_MCS).map(|m| 0.2 * (1.0 + m as f64 * 0.25)).collect(),
            snr_thresholds_db: (0..N_MCS).map(|m| -6.0 + m as f64).collect(),
            bler_steepness: 0.8,
            brate_scale_kbps: 400.0,
            noise_std_kbps: 50.0,
            tti_period: 10_240,
        }
    }
}

fn non_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] <= w[1])
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: String| Err(GenError::InvalidConfig(m));
        for (name, table) in [("mcs_table", &self.mcs_table), ("snr_thresholds_db", &self.snr_thresholds_db)] {
            if table.len() != N_MCS {
                return bad(format!("{name} needs {N_MCS} entries, has {}", table.len()));
            }
            if table.iter().any(|v| !v.is_finite()) || !non_decreasing(table) {
                return bad(format!("{name} must be finite and non-decreasing"));
            }
        }
        if self.mcs_table[0] < 0.0 {
            return bad("mcs_table entries must be >= 0".into());
        }
        for (name, v) in [
            ("snr_std_db", self.snr_std_db),
            ("bler_steepness", self.bler_steepness),
            ("brate_scale_kbps", self.brate_scale_kbps),
            ("noise_std_kbps", self.noise_std_kbps),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if !self.snr_mean_db.is_finite() {
            return bad("snr_mean_db must be finite".into());
        }
        if self.tti_period == 0 {
            return bad("tti_period must be at least 1".into());
        }
        Ok(())
    }

    /// Highest MCS whose threshold is at or below `snr_db`; 0 below the table.
    pub fn link_adaptation(&self, snr_db: f64) -> u8 {
        let reachable = self.snr_thresholds_db.partition_point(|&t| t <= snr_db);
        reachable.saturating_sub(1) as u8
    }

    pub fn bler(&self, snr_db: f64, mcs: u8) -> f64 {
        let margin = snr_db - self.snr_thresholds_db[mcs as usize];
        (1.0 / (1.0 + (self.bler_steepness * margin).exp())).clamp(0.0, 1.0)
    }

    /// Noise-free bit rate for a given SNR.
    pub fn expected_brate(&self, snr_db: f64) -> f64 {
        let mcs = self.link_adaptation(snr_db);
        self.brate_scale_kbps * self.mcs_table[mcs as usize] * (1.0 - self.bler(snr_db, mcs))
    }
}

/// Deterministic for a given config. Two normal draws are consumed per
/// sample (SNR, then bit-rate noise) even when a spread is zero.
pub fn generate(config: &GenConfig) -> Result<Vec<MetricRecord>, GenError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let records = (0..config.n_samples)
        .map(|i| {
            let z_snr: f64 = rng.sample(StandardNormal);
            let z_noise: f64 = rng.sample(StandardNormal);
            let snr_db = (config.snr_mean_db + config.snr_std_db * z_snr).clamp(SNR_CLIP_DB.0, SNR_CLIP_DB.1);
            let mcs = config.link_adaptation(snr_db);
            let bler = config.bler(snr_db, mcs);
            let clean = config.brate_scale_kbps * config.mcs_table[mcs as usize] * (1.0 - bler);
            MetricRecord {
                timestamp_ms: BASE_TIMESTAMP_MS + i as i64,
                ue_id: 1,
                tti: i as u64 % config.tti_period,
                mcs,
                snr_db,
                bler,
                brate_kbps: (clean + config.noise_std_kbps * z_noise).max(0.0),
                scenario: None,
            }
        })
        .collect();
    Ok(records)
}
