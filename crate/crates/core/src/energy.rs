//! Duty-cycled battery lifetime and LoRa airtime.
//!
//! Units: currents in mA, durations in s, capacity in mAh, energy in mJ
//! (mA x s x V). The battery is an ideal coulomb counter at nominal voltage.

use serde::{Deserialize, Serialize};

use crate::channel::RadioParams;
use crate::error::{Error, Result};

pub const SECONDS_PER_HOUR: f64 = 3600.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyProfile {
    pub i_sen_ma: f64,
    pub i_proc_ma: f64,
    pub i_tx_ma: f64,
    pub i_rx_ma: f64,
    pub i_slp_ma: f64,
    pub t_sen_s: f64,
    pub t_proc_s: f64,
    /// Transmit window; taken from the radio's time on air when absent.
    pub t_tx_s: Option<f64>,
    pub t_rx_s: f64,
    pub report_interval_s: f64,
    /// Harvested energy credited back each cycle (mJ). Zero disables harvesting.
    pub solar_credit_mj_per_cycle: f64,
}

impl Default for EnergyProfile {
    fn default() -> Self {
        Self {
            i_sen_ma: 28.0,
            i_proc_ma: 10.0,
            i_tx_ma: 120.0,
            i_rx_ma: 11.0,
            i_slp_ma: 0.01,
            // GPS fix window, back-solved so a 300 s cycle averages ~4.464 mA
            t_sen_s: 47.2,
            t_proc_s: 0.5,
            t_tx_s: None,
            t_rx_s: 0.3,
            report_interval_s: 300.0,
            solar_credit_mj_per_cycle: 0.0,
        }
    }
}

/// Per-state charge breakdown of one cycle, mA x s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleCharge {
    pub sensing: f64,
    pub processing: f64,
    pub transmit: f64,
    pub receive: f64,
    pub sleep: f64,
}

impl CycleCharge {
    pub fn total(&self) -> f64 {
        self.sensing + self.processing + self.transmit + self.receive + self.sleep
    }
}

impl EnergyProfile {
    /// Copy with `t_tx_s` filled from the radio's airtime when it was left open.
    pub fn resolved(&self, radio: &RadioParams) -> Result<Self> {
        let t_tx = match self.t_tx_s {
            Some(t) => t,
            None => time_on_air(radio)?,
        };
        Ok(Self {
            t_tx_s: Some(t_tx),
            ..self.clone()
        })
    }

    pub fn t_tx(&self) -> Result<f64> {
        self.t_tx_s.ok_or_else(|| {
            Error::domain("transmit duration unresolved; call EnergyProfile::resolved")
        })
    }

    pub fn active_time(&self) -> Result<f64> {
        Ok(self.t_sen_s + self.t_proc_s + self.t_tx()? + self.t_rx_s)
    }

    pub fn sleep_time(&self) -> Result<f64> {
        let active = self.active_time()?;
        if active > self.report_interval_s {
            return Err(Error::Infeasible(format!(
                "active time {active:.3} s exceeds report interval {:.3} s",
                self.report_interval_s
            )));
        }
        Ok(self.report_interval_s - active)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let currents = [
            self.i_sen_ma,
            self.i_proc_ma,
            self.i_tx_ma,
            self.i_rx_ma,
            self.i_slp_ma,
        ];
        if currents.iter().any(|&i| !(i >= 0.0) || !i.is_finite()) {
            v.push("energy: all currents must be finite and >= 0".into());
        }
        let durations = [
            self.t_sen_s,
            self.t_proc_s,
            self.t_rx_s,
            self.t_tx_s.unwrap_or(0.0),
        ];
        if durations.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
            v.push("energy: all durations must be finite and >= 0".into());
        }
        if !(self.report_interval_s > 0.0) || !self.report_interval_s.is_finite() {
            v.push(format!(
                "energy.report_interval_s must be > 0 (got {})",
                self.report_interval_s
            ));
        }
        if !(self.solar_credit_mj_per_cycle >= 0.0) {
            v.push("energy.solar_credit_mj_per_cycle must be >= 0".into());
        }
        v
    }

    fn check(&self) -> Result<()> {
        let v = self.violations();
        if !v.is_empty() {
            return Err(Error::Validation(v));
        }
        self.sleep_time().map(|_| ())
    }

    pub fn cycle_charge(&self) -> Result<CycleCharge> {
        self.check()?;
        Ok(CycleCharge {
            sensing: self.i_sen_ma * self.t_sen_s,
            processing: self.i_proc_ma * self.t_proc_s,
            transmit: self.i_tx_ma * self.t_tx()?,
            receive: self.i_rx_ma * self.t_rx_s,
            sleep: self.i_slp_ma * self.sleep_time()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatterySpec {
    pub capacity_mah: f64,
    pub voltage_v: f64,
}

impl Default for BatterySpec {
    fn default() -> Self {
        Self {
            capacity_mah: 3000.0,
            voltage_v: 3.7,
        }
    }
}

impl BatterySpec {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.capacity_mah > 0.0) {
            v.push(format!(
                "battery.capacity_mah must be > 0 (got {})",
                self.capacity_mah
            ));
        }
        if !(self.voltage_v > 0.0) {
            v.push(format!(
                "battery.voltage_v must be > 0 (got {})",
                self.voltage_v
            ));
        }
        v
    }

    fn check(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }
}

pub fn mah_to_mj(mah: f64, voltage_v: f64) -> f64 {
    mah * SECONDS_PER_HOUR * voltage_v
}

pub fn mj_to_mah(mj: f64, voltage_v: f64) -> f64 {
    mj / (SECONDS_PER_HOUR * voltage_v)
}

/// Capacity over average draw, in hours.
pub fn lifetime_hours(bat: &BatterySpec, i_avg_ma: f64) -> Result<f64> {
    bat.check()?;
    if !(i_avg_ma > 0.0) {
        return Err(Error::domain(format!(
            "average current must be > 0 (got {i_avg_ma})"
        )));
    }
    Ok(bat.capacity_mah / i_avg_ma)
}

pub fn avg_current_two_state(
    i_act_ma: f64,
    t_act_s: f64,
    i_slp_ma: f64,
    t_slp_s: f64,
) -> Result<f64> {
    let total = t_act_s + t_slp_s;
    if !(total > 0.0) || t_act_s < 0.0 || t_slp_s < 0.0 {
        return Err(Error::domain(format!(
            "cycle time must be positive (active {t_act_s}, sleep {t_slp_s})"
        )));
    }
    Ok((i_act_ma * t_act_s + i_slp_ma * t_slp_s) / total)
}

/// Five-state time-weighted mean current over one reporting cycle.
pub fn avg_current_multi(profile: &EnergyProfile) -> Result<f64> {
    Ok(profile.cycle_charge()?.total() / profile.report_interval_s)
}

/// Gross energy drawn in one cycle, mJ.
pub fn cycle_energy(profile: &EnergyProfile, bat: &BatterySpec) -> Result<f64> {
    bat.check()?;
    Ok(bat.voltage_v * profile.cycle_charge()?.total())
}

/// Lifetime from the per-cycle energy budget, hours. Harvesting credit is netted out.
pub fn lifetime_from_energy(profile: &EnergyProfile, bat: &BatterySpec) -> Result<f64> {
    let e_cyc = cycle_energy(profile, bat)? - profile.solar_credit_mj_per_cycle;
    if !(e_cyc > 0.0) {
        return Err(Error::domain(format!(
            "net cycle energy must be > 0 (got {e_cyc} mJ)"
        )));
    }
    Ok(bat.capacity_mah * bat.voltage_v / e_cyc * profile.report_interval_s)
}

/// Chirp duration 2^SF / BW, seconds.
pub fn symbol_time(radio: &RadioParams) -> f64 {
    f64::from(1u32 << radio.spreading_factor.min(12)) / f64::from(radio.bandwidth_hz)
}

/// LoRa packet airtime in seconds: explicit header, CRC on, low-data-rate
/// optimisation for SF11/SF12 at 125 kHz.
pub fn time_on_air(radio: &RadioParams) -> Result<f64> {
    let sf = radio.spreading_factor;
    if !(7..=12).contains(&sf) {
        return Err(Error::domain(format!(
            "spreading factor {sf} outside 7..=12"
        )));
    }
    if ![125_000, 250_000, 500_000].contains(&radio.bandwidth_hz) {
        return Err(Error::domain(format!(
            "unsupported bandwidth {} Hz",
            radio.bandwidth_hz
        )));
    }
    if !(1..=4).contains(&radio.coding_rate) {
        return Err(Error::domain(format!(
            "coding rate offset {} outside 1..=4",
            radio.coding_rate
        )));
    }
    let t_sym = symbol_time(radio);
    let ldro = i64::from(sf >= 11 && radio.bandwidth_hz == 125_000);
    let (sf, pl) = (i64::from(sf), i64::from(radio.payload_bytes));
    let crc = 1;
    let implicit_header = 0;
    let num = 8 * pl - 4 * sf + 28 + 16 * crc - 20 * implicit_header;
    let den = 4 * (sf - 2 * ldro);
    let blocks = if num > 0 { (num + den - 1) / den } else { 0 };
    let payload_symbols = 8 + blocks * (i64::from(radio.coding_rate) + 4);
    Ok((f64::from(radio.preamble_symbols) + 4.25 + payload_symbols as f64) * t_sym)
}
