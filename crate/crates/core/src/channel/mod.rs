//! Large-scale propagation and packet-success models.
//!
//! Everything here is a pure function of immutable parameters. The engine
//! draws shadowing and obstruction flags and then evaluates these formulas
//! per transmission.

mod fit;

pub use fit::{fit_two_regime, FitResult};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Demodulation SNR thresholds (dB) for SF7..=SF12.
pub const DEFAULT_GAMMA_TH_DB: [f64; 6] = [-7.5, -10.0, -12.5, -15.0, -17.5, -20.0];

/// Thermal noise density at 290 K, dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    pub pl_d0_db: f64,
    pub d0_m: f64,
    pub path_loss_exponent: f64,
    pub shadowing_sigma_db: f64,
    pub obstruction_loss_db: f64,
    pub logistic_alpha_per_db: f64,
    /// Indexed by `sf - 7`.
    pub gamma_th_db: [f64; 6],
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            pl_d0_db: 79.0,
            d0_m: 100.0,
            path_loss_exponent: 2.9,
            shadowing_sigma_db: 6.0,
            obstruction_loss_db: 18.0,
            logistic_alpha_per_db: 1.5,
            gamma_th_db: DEFAULT_GAMMA_TH_DB,
        }
    }
}

impl ChannelParams {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let finite = [
            self.pl_d0_db,
            self.d0_m,
            self.path_loss_exponent,
            self.shadowing_sigma_db,
            self.obstruction_loss_db,
            self.logistic_alpha_per_db,
        ];
        if finite
            .iter()
            .chain(self.gamma_th_db.iter())
            .any(|x| !x.is_finite())
        {
            v.push("channel: all parameters must be finite".into());
        }
        if !(self.d0_m > 0.0) {
            v.push(format!("channel.d0_m must be > 0 (got {})", self.d0_m));
        }
        if !(self.path_loss_exponent >= 1.0) {
            v.push(format!(
                "channel.path_loss_exponent must be >= 1 (got {})",
                self.path_loss_exponent
            ));
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            v.push(format!(
                "channel.shadowing_sigma_db must be >= 0 (got {})",
                self.shadowing_sigma_db
            ));
        }
        if !(self.obstruction_loss_db >= 0.0) {
            v.push(format!(
                "channel.obstruction_loss_db must be >= 0 (got {})",
                self.obstruction_loss_db
            ));
        }
        if !(self.logistic_alpha_per_db > 0.0) {
            v.push(format!(
                "channel.logistic_alpha_per_db must be > 0 (got {})",
                self.logistic_alpha_per_db
            ));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    /// Demodulation threshold for a spreading factor in 7..=12.
    pub fn gamma_th(&self, sf: u8) -> Result<f64> {
        match sf {
            7..=12 => Ok(self.gamma_th_db[(sf - 7) as usize]),
            _ => Err(Error::domain(format!(
                "spreading factor {sf} outside 7..=12"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioParams {
    pub tx_power_dbm: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub noise_figure_db: f64,
    /// Receiver sensitivity; derived from noise floor and threshold when absent.
    pub sensitivity_dbm: Option<f64>,
    /// Thermal noise over the bandwidth; derived from `bandwidth_hz` when absent.
    pub noise_floor_dbm: Option<f64>,
    pub spreading_factor: u8,
    pub bandwidth_hz: u32,
    /// Coding rate 4/(4+cr), cr in 1..=4.
    pub coding_rate: u8,
    pub payload_bytes: u32,
    pub preamble_symbols: u32,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            tx_power_dbm: 14.0,
            tx_gain_dbi: 2.0,
            rx_gain_dbi: 2.0,
            noise_figure_db: 6.0,
            sensitivity_dbm: None,
            noise_floor_dbm: None,
            spreading_factor: 7,
            bandwidth_hz: 125_000,
            coding_rate: 1,
            payload_bytes: 20,
            preamble_symbols: 8,
        }
    }
}

impl RadioParams {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(7..=12).contains(&self.spreading_factor) {
            v.push(format!(
                "radio.spreading_factor must be in 7..=12 (got {})",
                self.spreading_factor
            ));
        }
        if ![125_000, 250_000, 500_000].contains(&self.bandwidth_hz) {
            v.push(format!(
                "radio.bandwidth_hz must be 125000, 250000 or 500000 (got {})",
                self.bandwidth_hz
            ));
        }
        if !(1..=4).contains(&self.coding_rate) {
            v.push(format!(
                "radio.coding_rate must be in 1..=4 (got {})",
                self.coding_rate
            ));
        }
        if self.payload_bytes < 1 || self.payload_bytes > 255 {
            v.push(format!(
                "radio.payload_bytes must be in 1..=255 (got {})",
                self.payload_bytes
            ));
        }
        let finite = [
            self.tx_power_dbm,
            self.tx_gain_dbi,
            self.rx_gain_dbi,
            self.noise_figure_db,
        ];
        if finite.iter().any(|x| !x.is_finite())
            || self.sensitivity_dbm.is_some_and(|x| !x.is_finite())
            || self.noise_floor_dbm.is_some_and(|x| !x.is_finite())
        {
            v.push("radio: power and gain figures must be finite".into());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    /// N0·B in dBm.
    pub fn noise_floor(&self) -> f64 {
        self.noise_floor_dbm
            .unwrap_or_else(|| THERMAL_NOISE_DBM_HZ + 10.0 * f64::from(self.bandwidth_hz).log10())
    }

    /// S_min in dBm, referenced after the noise figure (the margin subtracts NF
    /// separately). Defaults to the level at which SNR equals the SF threshold.
    pub fn sensitivity(&self, channel: &ChannelParams) -> f64 {
        self.sensitivity_dbm.unwrap_or_else(|| {
            let gamma = channel
                .gamma_th(self.spreading_factor)
                .unwrap_or(DEFAULT_GAMMA_TH_DB[0]);
            self.noise_floor() + gamma
        })
    }

    /// Effective isotropic budget P_t + G_t + G_r.
    fn eirp_plus_rx_gain(&self) -> f64 {
        self.tx_power_dbm + self.tx_gain_dbi + self.rx_gain_dbi
    }
}

/// One realised link: geometry plus the shadowing draw for this transmission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSample {
    pub distance_m: f64,
    pub obstructed: bool,
    pub shadow_db: f64,
}

impl LinkSample {
    pub fn clear(distance_m: f64) -> Self {
        Self {
            distance_m,
            obstructed: false,
            shadow_db: 0.0,
        }
    }
}

/// Reception decision rule applied to a realised SNR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceptionModel {
    #[default]
    Logistic,
    HardThreshold,
}

/// Log-distance path loss with shadowing and an obstruction penalty (dB).
pub fn path_loss(sample: &LinkSample, params: &ChannelParams) -> Result<f64> {
    if !(sample.distance_m > 0.0) || !sample.distance_m.is_finite() {
        return Err(Error::domain(format!(
            "distance must be positive and finite (got {})",
            sample.distance_m
        )));
    }
    let obstruction = if sample.obstructed {
        params.obstruction_loss_db
    } else {
        0.0
    };
    Ok(params.pl_d0_db
        + 10.0 * params.path_loss_exponent * (sample.distance_m / params.d0_m).log10()
        + sample.shadow_db
        + obstruction)
}

/// Received-power surplus over sensitivity; reception succeeds iff >= 0 under the hard threshold.
pub fn link_margin(pl_db: f64, radio: &RadioParams, channel: &ChannelParams) -> f64 {
    radio.eirp_plus_rx_gain() - pl_db - radio.noise_figure_db - radio.sensitivity(channel)
}

pub fn snr(pl_db: f64, radio: &RadioParams) -> f64 {
    radio.eirp_plus_rx_gain() - pl_db - radio.noise_figure_db - radio.noise_floor()
}

/// Logistic packet-success curve around the demodulation threshold.
pub fn packet_success_prob(snr_db: f64, gamma_th_db: f64, alpha: f64) -> f64 {
    let x = alpha * (snr_db - gamma_th_db);
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Success probability of a realised SNR under the chosen reception model.
pub fn reception_prob(snr_db: f64, gamma_th_db: f64, alpha: f64, model: ReceptionModel) -> f64 {
    match model {
        ReceptionModel::Logistic => packet_success_prob(snr_db, gamma_th_db, alpha),
        ReceptionModel::HardThreshold => {
            if snr_db >= gamma_th_db {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Pr(SNR < threshold) when the SNR is Gaussian around `mean_snr_db`.
pub fn obstruction_outage_prob(mean_snr_db: f64, sigma_db: f64, gamma_th_db: f64) -> f64 {
    if sigma_db <= 0.0 {
        return if mean_snr_db < gamma_th_db { 1.0 } else { 0.0 };
    }
    normal_cdf((gamma_th_db - mean_snr_db) / sigma_db)
}

/// E[p_succ] over Gaussian shadowing, by composite Simpson over +-10 sigma.
pub fn mean_success_over_shadowing(
    mean_snr_db: f64,
    sigma_db: f64,
    gamma_th_db: f64,
    alpha: f64,
) -> f64 {
    if sigma_db <= 0.0 {
        return packet_success_prob(mean_snr_db, gamma_th_db, alpha);
    }
    const INTERVALS: usize = 4000;
    let (lo, hi) = (-10.0, 10.0);
    let h = (hi - lo) / INTERVALS as f64;
    let f = |z: f64| {
        let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        // shadowing adds to path loss, so it subtracts from SNR
        pdf * packet_success_prob(mean_snr_db - sigma_db * z, gamma_th_db, alpha)
    };
    let mut acc = f(lo) + f(hi);
    for i in 1..INTERVALS {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * h);
    }
    (acc * h / 3.0).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoRegimeFit {
    pub pi_obs: f64,
    pub d_c_m: f64,
    pub beta: f64,
    pub d_c_obs_m: f64,
    pub beta_obs: f64,
}

impl TwoRegimeFit {
    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        if !(0.0..=1.0).contains(&self.pi_obs) {
            v.push(format!("pi_obs must be in [0,1] (got {})", self.pi_obs));
        }
        if !(self.d_c_m > 0.0 && self.d_c_obs_m > 0.0) {
            v.push("scale distances must be > 0".to_string());
        }
        if !(self.beta > 0.0 && self.beta_obs > 0.0) {
            v.push("shape exponents must be > 0".to_string());
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }
}

/// Mixture of open-field and obstructed stretched-exponential decays.
pub fn success_two_regime(distance_m: f64, fit: &TwoRegimeFit) -> f64 {
    let d = distance_m.max(0.0);
    let open = (-(d / fit.d_c_m).powf(fit.beta)).exp();
    let obs = (-(d / fit.d_c_obs_m).powf(fit.beta_obs)).exp();
    (1.0 - fit.pi_obs) * open + fit.pi_obs * obs
}

/// Zero-shadow link evaluation used by calculators and reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkBudgetRow {
    pub distance_m: f64,
    pub path_loss_db: f64,
    pub snr_db: f64,
    pub margin_db: f64,
    pub p_succ_los: f64,
    pub p_succ_obs: f64,
    pub p_succ_los_mean: f64,
    pub p_succ_obs_mean: f64,
}

pub fn link_budget(
    distance_m: f64,
    radio: &RadioParams,
    channel: &ChannelParams,
) -> Result<LinkBudgetRow> {
    radio.validate()?;
    channel.validate()?;
    let gamma = channel.gamma_th(radio.spreading_factor)?;
    let alpha = channel.logistic_alpha_per_db;
    let pl = path_loss(&LinkSample::clear(distance_m), channel)?;
    let pl_obs = path_loss(
        &LinkSample {
            obstructed: true,
            ..LinkSample::clear(distance_m)
        },
        channel,
    )?;
    let s = snr(pl, radio);
    let s_obs = snr(pl_obs, radio);
    let sigma = channel.shadowing_sigma_db;
    Ok(LinkBudgetRow {
        distance_m,
        path_loss_db: pl,
        snr_db: s,
        margin_db: link_margin(pl, radio, channel),
        p_succ_los: packet_success_prob(s, gamma, alpha),
        p_succ_obs: packet_success_prob(s_obs, gamma, alpha),
        p_succ_los_mean: mean_success_over_shadowing(s, sigma, gamma, alpha),
        p_succ_obs_mean: mean_success_over_shadowing(s_obs, sigma, gamma, alpha),
    })
}
