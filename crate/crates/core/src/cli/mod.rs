//! The `agrotrack` command-line front end.
//!
//! Exit codes: 0 success, 2 input or validation error, 3 physically
//! infeasible configuration, 4 internal error. Failures print one JSON object
//! on stderr. Settings resolve as scenario file < `AGROTRACK_*` environment
//! < command-line flags.

mod commands;
pub mod plots;
pub mod schema;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "agrotrack",
    version,
    about = "Simulate and analyse LoRa livestock-collar networks"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Override the scenario seed.
    #[arg(long, global = true, env = "AGROTRACK_SEED")]
    pub seed: Option<u64>,
    /// Worker threads for sweeps (0 = one per core).
    #[arg(long, global = true, env = "AGROTRACK_JOBS", default_value_t = 0)]
    pub jobs: usize,
    /// Output directory.
    #[arg(long, global = true, env = "AGROTRACK_OUT", default_value = "out")]
    pub out: PathBuf,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Scenario file, or the name of a bundled scenario.
    #[arg(
        long,
        short = 's',
        env = "AGROTRACK_SCENARIO",
        default_value = "trial_baseline"
    )]
    pub scenario: String,
    /// JSON overlay merged onto the scenario from the environment (inline JSON).
    #[arg(long, env = "AGROTRACK_OVERLAY", hide_env_values = true)]
    pub env_overlay: Option<String>,
    /// Overlay files merged in order after the environment overlay.
    #[arg(long = "overlay")]
    pub overlays: Vec<PathBuf>,
    /// Override the simulated duration.
    #[arg(long, env = "AGROTRACK_DURATION_S")]
    pub duration_s: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct RadioArgs {
    #[arg(long)]
    pub sf: Option<u8>,
    #[arg(long)]
    pub bw_hz: Option<u32>,
    #[arg(long)]
    pub tx_power_dbm: Option<f64>,
    #[arg(long)]
    pub tx_gain_dbi: Option<f64>,
    #[arg(long)]
    pub rx_gain_dbi: Option<f64>,
    #[arg(long)]
    pub noise_figure_db: Option<f64>,
    #[arg(long)]
    pub sensitivity_dbm: Option<f64>,
    #[arg(long)]
    pub payload_bytes: Option<u32>,
    #[arg(long)]
    pub coding_rate: Option<u8>,
}

#[derive(Debug, Clone, Args)]
pub struct ChannelArgs {
    #[arg(long)]
    pub pl_d0_db: Option<f64>,
    #[arg(long)]
    pub d0_m: Option<f64>,
    #[arg(long)]
    pub path_loss_exponent: Option<f64>,
    #[arg(long)]
    pub shadowing_sigma_db: Option<f64>,
    #[arg(long)]
    pub obstruction_loss_db: Option<f64>,
    #[arg(long)]
    pub logistic_alpha_per_db: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ProfileArgs {
    #[arg(long)]
    pub i_sen_ma: Option<f64>,
    #[arg(long)]
    pub i_proc_ma: Option<f64>,
    #[arg(long)]
    pub i_tx_ma: Option<f64>,
    #[arg(long)]
    pub i_rx_ma: Option<f64>,
    #[arg(long)]
    pub i_slp_ma: Option<f64>,
    #[arg(long)]
    pub t_sen_s: Option<f64>,
    #[arg(long)]
    pub t_proc_s: Option<f64>,
    #[arg(long)]
    pub t_tx_s: Option<f64>,
    #[arg(long)]
    pub t_rx_s: Option<f64>,
    #[arg(long)]
    pub solar_credit_mj_per_cycle: Option<f64>,
    #[arg(long)]
    pub capacity_mah: Option<f64>,
    #[arg(long)]
    pub voltage_v: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CalibrationTarget {
    Obstruction,
    CloudRate,
    Buffer,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write the summary, series, alert log and manifest.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Replicated runs over herd sizes; writes loss and throughput tables.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "50,100,200,300,400,500,600"
        )]
        counts: Vec<u32>,
        #[arg(long, default_value_t = 10)]
        replicates: u32,
    },
    /// Recovery ratio with 0..=max gateways failed, applying the scenario's failure plan in order.
    Failures {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 4)]
        max_failures: u32,
        #[arg(long, default_value_t = 10)]
        replicates: u32,
    },
    /// Path loss, SNR, margin and success probability per distance.
    Linkbudget {
        /// Take radio and channel settings from this scenario before applying flags.
        #[arg(long)]
        scenario: Option<String>,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "100,500,1000,2000,3000,4000,5000,6500,8000,10000"
        )]
        distances_m: Vec<f64>,
        #[command(flatten)]
        radio: RadioArgs,
        #[command(flatten)]
        channel: ChannelArgs,
    },
    /// Average current, cycle energy and lifetime per report interval, plus a daily depletion series.
    Battery {
        #[arg(long, value_delimiter = ',', default_value = "300,600,900")]
        intervals_s: Vec<f64>,
        #[command(flatten)]
        profile: ProfileArgs,
        #[command(flatten)]
        radio: RadioArgs,
    },
    /// Analytic slotted-attempt collision probability per herd size, with and without jitter.
    Collision {
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "5,15,50,100,200,300,400,500,600"
        )]
        counts: Vec<u32>,
        /// Attempt probability per slot; derived from the scenario's MAC timing when absent.
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        k_microslots: Option<u32>,
        /// Scenario supplying slot length, interval and micro-slot count.
        #[arg(long, default_value = "trial_baseline")]
        scenario: String,
    },
    /// Fit the two-regime success curve to distance,success points.
    Fit {
        /// CSV with distance (m) and success probability columns; a header row is optional.
        #[arg(long, required_unless_present = "params")]
        input: Option<PathBuf>,
        /// Re-emit the curve from a previously written fit.json instead of fitting.
        #[arg(long, conflicts_with = "input")]
        params: Option<PathBuf>,
    },
    /// Validate a scenario without running it.
    Validate {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Check emitted CSVs against their declared layouts.
    Selfcheck {
        /// Directory to check; when absent, a fresh set of outputs is generated and checked.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Fit free constants of the bundled scenarios to the target metrics; writes overlays.
    Calibrate {
        #[arg(long, value_enum, default_value = "all")]
        target: CalibrationTarget,
        #[arg(long, default_value_t = 10)]
        seeds: u32,
        /// Scenario to calibrate; defaults to the bundled scenario for each target.
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Write the published comparison tables for systems that are not simulated.
    Reference,
    /// List bundled scenarios, or print one as JSON.
    Scenarios { name: Option<String> },
}

/// Map an error to its stable exit code and machine-readable kind.
pub fn classify(e: &Error) -> (i32, &'static str) {
    match e {
        Error::Validation(_) => (EXIT_INPUT, "validation"),
        Error::Domain(_) => (EXIT_INPUT, "domain"),
        Error::InsufficientData { .. } => (EXIT_INPUT, "insufficient_data"),
        Error::IllPosed(_) => (EXIT_INPUT, "ill_posed"),
        Error::Ordering(_) => (EXIT_INPUT, "ordering"),
        Error::Undefined(_) => (EXIT_INPUT, "undefined"),
        Error::Json(_) => (EXIT_INPUT, "parse"),
        Error::Csv(_) => (EXIT_INPUT, "parse"),
        Error::Io(_) => (EXIT_INPUT, "io"),
        Error::Infeasible(_) => (EXIT_INFEASIBLE, "infeasible"),
        Error::Resource(_) => (EXIT_INTERNAL, "resource"),
        Error::Calibration(_) => (EXIT_INTERNAL, "calibration"),
    }
}

pub fn error_json(e: &Error) -> serde_json::Value {
    let (code, kind) = classify(e);
    let details: Vec<String> = match e {
        Error::Validation(v) => v.clone(),
        _ => Vec::new(),
    };
    json!({ "error": { "code": code, "kind": kind, "message": e.to_string(), "details": details } })
}

/// Parse `args`, run the command and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.common.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_env("AGROTRACK_LOG")
        .try_init();
    let argv: Vec<String> = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match commands::dispatch(&cli, &argv) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            classify(&e).0
        }
    }
}
