//! C ABI over the agrotrack simulator and analytic calculators.
//!
//! Every fallible call returns an `AgStatus`; on failure a message is kept
//! per thread and read with `ag_last_error_message`. Handles are opaque and
//! owned by the caller until passed to the matching `*_free`. Strings
//! returned by the library are released with `ag_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use agrotrack::channel::{link_budget, ChannelParams, RadioParams};
use agrotrack::energy::{
    avg_current_multi, lifetime_from_energy, time_on_air, BatterySpec, EnergyProfile,
};
use agrotrack::engine::{run, MetricsReport, Scenario};
use agrotrack::error::Error;
use agrotrack::reliability::{collision_prob, collision_prob_jitter, MacParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Validation = 3,
    Domain = 4,
    Infeasible = 5,
    Parse = 6,
    Resource = 7,
    Internal = 8,
}

/// Opaque validated scenario.
pub struct AgScenario(Scenario);

/// Opaque result of one simulation run.
pub struct AgReport(MetricsReport);

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AgRadio {
    pub tx_power_dbm: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub noise_figure_db: f64,
    pub spreading_factor: u8,
    pub coding_rate: u8,
    pub bandwidth_hz: u32,
    pub payload_bytes: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AgChannel {
    pub pl_d0_db: f64,
    pub d0_m: f64,
    pub path_loss_exponent: f64,
    pub shadowing_sigma_db: f64,
    pub obstruction_loss_db: f64,
    pub logistic_alpha_per_db: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct AgLinkBudget {
    pub distance_m: f64,
    pub path_loss_db: f64,
    pub snr_db: f64,
    pub margin_db: f64,
    pub p_succ_los: f64,
    pub p_succ_obs: f64,
    pub p_succ_los_mean: f64,
    pub p_succ_obs_mean: f64,
}

/// Energy profile; `t_tx_s` <= 0 takes the transmit window from the radio's airtime.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AgEnergy {
    pub i_sen_ma: f64,
    pub i_proc_ma: f64,
    pub i_tx_ma: f64,
    pub i_rx_ma: f64,
    pub i_slp_ma: f64,
    pub t_sen_s: f64,
    pub t_proc_s: f64,
    pub t_tx_s: f64,
    pub t_rx_s: f64,
    pub report_interval_s: f64,
    pub solar_credit_mj_per_cycle: f64,
    pub capacity_mah: f64,
    pub voltage_v: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct AgSummary {
    pub seed: u64,
    pub nodes: u32,
    pub generated: u64,
    pub pdr: f64,
    pub loss: f64,
    pub collision_rate: f64,
    pub throughput_msg_s: f64,
    pub recovery_ratio: f64,
    pub alerts: u64,
    /// NaN when no node drew any charge.
    pub mean_projected_lifetime_h: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> AgStatus {
    match e {
        Error::Validation(_) => AgStatus::Validation,
        Error::Domain(_)
        | Error::InsufficientData { .. }
        | Error::IllPosed(_)
        | Error::Undefined(_)
        | Error::Ordering(_) => AgStatus::Domain,
        Error::Infeasible(_) => AgStatus::Infeasible,
        Error::Json(_) | Error::Csv(_) => AgStatus::Parse,
        Error::Resource(_) | Error::Io(_) => AgStatus::Resource,
        Error::Calibration(_) => AgStatus::Internal,
    }
}

enum Fail {
    Null(&'static str),
    Utf8,
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Run `f`, translating errors and panics into a status and the last-error slot.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> AgStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AgStatus::Ok,
        Ok(Err(Fail::Null(arg))) => {
            set_error(format!("null pointer passed for {arg}"));
            AgStatus::NullPointer
        }
        Ok(Err(Fail::Utf8)) => {
            set_error("string argument is not valid UTF-8".into());
            AgStatus::InvalidUtf8
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            AgStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Utf8)
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(name))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(name))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("NULs removed")
        .into_raw()
}

/// Message for the most recent failure on this thread, or NULL. Valid until the next call.
#[no_mangle]
pub extern "C" fn ag_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ag_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ag_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub extern "C" fn ag_radio_default() -> AgRadio {
    let r = RadioParams::default();
    AgRadio {
        tx_power_dbm: r.tx_power_dbm,
        tx_gain_dbi: r.tx_gain_dbi,
        rx_gain_dbi: r.rx_gain_dbi,
        noise_figure_db: r.noise_figure_db,
        spreading_factor: r.spreading_factor,
        coding_rate: r.coding_rate,
        bandwidth_hz: r.bandwidth_hz,
        payload_bytes: r.payload_bytes,
    }
}

#[no_mangle]
pub extern "C" fn ag_channel_default() -> AgChannel {
    let c = ChannelParams::default();
    AgChannel {
        pl_d0_db: c.pl_d0_db,
        d0_m: c.d0_m,
        path_loss_exponent: c.path_loss_exponent,
        shadowing_sigma_db: c.shadowing_sigma_db,
        obstruction_loss_db: c.obstruction_loss_db,
        logistic_alpha_per_db: c.logistic_alpha_per_db,
    }
}

#[no_mangle]
pub extern "C" fn ag_energy_default() -> AgEnergy {
    let p = EnergyProfile::default();
    let b = BatterySpec::default();
    AgEnergy {
        i_sen_ma: p.i_sen_ma,
        i_proc_ma: p.i_proc_ma,
        i_tx_ma: p.i_tx_ma,
        i_rx_ma: p.i_rx_ma,
        i_slp_ma: p.i_slp_ma,
        t_sen_s: p.t_sen_s,
        t_proc_s: p.t_proc_s,
        t_tx_s: 0.0,
        t_rx_s: p.t_rx_s,
        report_interval_s: p.report_interval_s,
        solar_credit_mj_per_cycle: p.solar_credit_mj_per_cycle,
        capacity_mah: b.capacity_mah,
        voltage_v: b.voltage_v,
    }
}

fn radio_from(r: &AgRadio) -> RadioParams {
    RadioParams {
        tx_power_dbm: r.tx_power_dbm,
        tx_gain_dbi: r.tx_gain_dbi,
        rx_gain_dbi: r.rx_gain_dbi,
        noise_figure_db: r.noise_figure_db,
        spreading_factor: r.spreading_factor,
        coding_rate: r.coding_rate,
        bandwidth_hz: r.bandwidth_hz,
        payload_bytes: r.payload_bytes,
        ..RadioParams::default()
    }
}

fn channel_from(c: &AgChannel) -> ChannelParams {
    ChannelParams {
        pl_d0_db: c.pl_d0_db,
        d0_m: c.d0_m,
        path_loss_exponent: c.path_loss_exponent,
        shadowing_sigma_db: c.shadowing_sigma_db,
        obstruction_loss_db: c.obstruction_loss_db,
        logistic_alpha_per_db: c.logistic_alpha_per_db,
        ..ChannelParams::default()
    }
}

/// LoRa packet airtime in seconds.
///
/// # Safety
/// `radio` and `out_s` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ag_time_on_air(radio: *const AgRadio, out_s: *mut f64) -> AgStatus {
    guard(|| {
        let r = radio_from(ref_arg(radio, "radio")?);
        *out_arg(out_s, "out_s")? = time_on_air(&r)?;
        Ok(())
    })
}

/// Zero-shadow link budget at `distance_m`.
///
/// # Safety
/// `radio`, `channel` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ag_link_budget(
    distance_m: f64,
    radio: *const AgRadio,
    channel: *const AgChannel,
    out: *mut AgLinkBudget,
) -> AgStatus {
    guard(|| {
        let r = radio_from(ref_arg(radio, "radio")?);
        let c = channel_from(ref_arg(channel, "channel")?);
        let out = out_arg(out, "out")?;
        let b = link_budget(distance_m, &r, &c)?;
        *out = AgLinkBudget {
            distance_m: b.distance_m,
            path_loss_db: b.path_loss_db,
            snr_db: b.snr_db,
            margin_db: b.margin_db,
            p_succ_los: b.p_succ_los,
            p_succ_obs: b.p_succ_obs,
            p_succ_los_mean: b.p_succ_los_mean,
            p_succ_obs_mean: b.p_succ_obs_mean,
        };
        Ok(())
    })
}

/// Average current (mA) and battery lifetime (h) for one duty cycle.
///
/// # Safety
/// `energy` and `radio` must be valid; either output pointer may be NULL.
#[no_mangle]
pub unsafe extern "C" fn ag_lifetime(
    energy: *const AgEnergy,
    radio: *const AgRadio,
    out_i_avg_ma: *mut f64,
    out_lifetime_h: *mut f64,
) -> AgStatus {
    guard(|| {
        let e = ref_arg(energy, "energy")?;
        let r = radio_from(ref_arg(radio, "radio")?);
        let profile = EnergyProfile {
            i_sen_ma: e.i_sen_ma,
            i_proc_ma: e.i_proc_ma,
            i_tx_ma: e.i_tx_ma,
            i_rx_ma: e.i_rx_ma,
            i_slp_ma: e.i_slp_ma,
            t_sen_s: e.t_sen_s,
            t_proc_s: e.t_proc_s,
            t_tx_s: (e.t_tx_s > 0.0).then_some(e.t_tx_s),
            t_rx_s: e.t_rx_s,
            report_interval_s: e.report_interval_s,
            solar_credit_mj_per_cycle: e.solar_credit_mj_per_cycle,
        }
        .resolved(&r)?;
        let bat = BatterySpec {
            capacity_mah: e.capacity_mah,
            voltage_v: e.voltage_v,
        };
        let i_avg = avg_current_multi(&profile)?;
        let life = lifetime_from_energy(&profile, &bat)?;
        if let Some(o) = out_i_avg_ma.as_mut() {
            *o = i_avg;
        }
        if let Some(o) = out_lifetime_h.as_mut() {
            *o = life;
        }
        Ok(())
    })
}

/// Slotted-attempt collision probability; `jitter` spreads attempts over `k_microslots`.
///
/// # Safety
/// `out_p` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ag_collision_prob(
    n_nodes: u32,
    tau: f64,
    k_microslots: u32,
    jitter: bool,
    out_p: *mut f64,
) -> AgStatus {
    guard(|| {
        let p = MacParams {
            n_nodes,
            tau,
            k_microslots,
            slot_s: 1.0,
        };
        p.validate()?;
        *out_arg(out_p, "out_p")? = if jitter {
            collision_prob_jitter(&p)
        } else {
            collision_prob(&p)
        };
        Ok(())
    })
}

/// Parse and validate a scenario from JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ag_scenario_from_json(
    json: *const c_char,
    out: *mut *mut AgScenario,
) -> AgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let sc = Scenario::from_json_str(str_arg(json, "json")?)?;
        sc.validate()?;
        *out = Box::into_raw(Box::new(AgScenario(sc)));
        Ok(())
    })
}

/// Load one of the scenarios shipped with the library by name.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ag_scenario_bundled(
    name: *const c_char,
    out: *mut *mut AgScenario,
) -> AgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let sc = agrotrack::bundled::scenario(str_arg(name, "name")?)?;
        *out = Box::into_raw(Box::new(AgScenario(sc)));
        Ok(())
    })
}

/// Deep-merge a JSON overlay into the scenario; on failure the scenario is unchanged.
///
/// # Safety
/// `scenario` must be a live handle; `overlay_json` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ag_scenario_apply_overlay(
    scenario: *mut AgScenario,
    overlay_json: *const c_char,
) -> AgStatus {
    guard(|| {
        let sc = out_arg(scenario, "scenario")?;
        let v: serde_json::Value =
            serde_json::from_str(str_arg(overlay_json, "overlay_json")?).map_err(Error::from)?;
        let next = sc.0.with_overlay(&v)?;
        next.validate()?;
        sc.0 = next;
        Ok(())
    })
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ag_scenario_set_seed(scenario: *mut AgScenario, seed: u64) -> AgStatus {
    guard(|| {
        out_arg(scenario, "scenario")?.0.seed = seed;
        Ok(())
    })
}

/// Scenario as pretty JSON; release with `ag_string_free`.
///
/// # Safety
/// `scenario` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ag_scenario_to_json(
    scenario: *const AgScenario,
    out: *mut *mut c_char,
) -> AgStatus {
    guard(|| {
        let sc = ref_arg(scenario, "scenario")?;
        let out = out_arg(out, "out")?;
        *out = to_c_string(sc.0.to_json_pretty()?);
        Ok(())
    })
}

/// # Safety
/// `scenario` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ag_scenario_free(scenario: *mut AgScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Run the scenario to completion.
///
/// # Safety
/// `scenario` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ag_run(scenario: *const AgScenario, out: *mut *mut AgReport) -> AgStatus {
    guard(|| {
        let sc = ref_arg(scenario, "scenario")?;
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let report = run(&sc.0)?;
        *out = Box::into_raw(Box::new(AgReport(report)));
        Ok(())
    })
}

/// # Safety
/// `report` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ag_report_summary(
    report: *const AgReport,
    out: *mut AgSummary,
) -> AgStatus {
    guard(|| {
        let r = &ref_arg(report, "report")?.0;
        *out_arg(out, "out")? = AgSummary {
            seed: r.seed,
            nodes: r.nodes,
            generated: r.generated,
            pdr: r.pdr,
            loss: r.loss,
            collision_rate: r.collision_rate,
            throughput_msg_s: r.throughput_msg_s,
            recovery_ratio: r.recovery_ratio,
            alerts: r.alert_log.len() as u64,
            mean_projected_lifetime_h: r.mean_projected_lifetime_h().unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Full report as pretty JSON; release with `ag_string_free`.
///
/// # Safety
/// `report` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ag_report_to_json(
    report: *const AgReport,
    out: *mut *mut c_char,
) -> AgStatus {
    guard(|| {
        let r = ref_arg(report, "report")?;
        let out = out_arg(out, "out")?;
        *out = to_c_string(r.0.to_json_pretty().map_err(Error::from)?);
        Ok(())
    })
}

/// # Safety
/// `report` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ag_report_free(report: *mut AgReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
