//! Declared layouts of every CSV the tool writes, and a checker that parses
//! files back against them.

use std::path::Path;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Col {
    Float,
    Count,
    Text,
    /// Float or empty.
    OptFloat,
}

pub type Schema = &'static [(&'static str, Col)];

use Col::{Count, Float, OptFloat, Text};

pub const SCHEMAS: &[(&str, Schema)] = &[
    (
        "fates.csv",
        &[("fate", Text), ("count", Count), ("fraction", Float)],
    ),
    (
        "throughput.csv",
        &[("time_s", Float), ("throughput_msg_s", Float)],
    ),
    (
        "battery.csv",
        &[("time_s", Float), ("node", Count), ("battery_mah", Float)],
    ),
    (
        "alerts.csv",
        &[
            ("animal_id", Count),
            ("rule", Text),
            ("trigger_s", Float),
            ("detection_s", Float),
            ("delivery_s", Float),
            ("latency_s", Float),
        ],
    ),
    (
        "episodes.csv",
        &[
            ("animal_id", Count),
            ("kind", Text),
            ("onset_s", Float),
            ("delivery_s", OptFloat),
            ("latency_s", OptFloat),
        ],
    ),
    (
        "distance.csv",
        &[
            ("distance_lo_m", Float),
            ("distance_hi_m", Float),
            ("attempts", Count),
            ("successes", Count),
            ("success_rate", OptFloat),
        ],
    ),
    (
        "sweep.csv",
        &[
            ("n", Count),
            ("replicates", Count),
            ("pdr_mean", Float),
            ("pdr_sd", Float),
            ("loss_mean", Float),
            ("loss_sd", Float),
            ("throughput_msg_s_mean", Float),
            ("throughput_msg_s_sd", Float),
            ("collision_rate_mean", Float),
            ("congestion_loss_mean", Float),
        ],
    ),
    (
        "loss_vs_n.csv",
        &[("n", Count), ("loss_mean", Float), ("loss_sd", Float)],
    ),
    (
        "throughput_vs_n.csv",
        &[
            ("n", Count),
            ("throughput_msg_s_mean", Float),
            ("throughput_msg_s_sd", Float),
        ],
    ),
    (
        "recovery.csv",
        &[
            ("failures", Count),
            ("recovery_ratio", Float),
            ("recovery_ratio_sd", Float),
            ("pdr", Float),
            ("replicates", Count),
        ],
    ),
    (
        "linkbudget.csv",
        &[
            ("distance_m", Float),
            ("path_loss_db", Float),
            ("snr_db", Float),
            ("margin_db", Float),
            ("p_succ_los", Float),
            ("p_succ_obs", Float),
            ("p_succ_los_mean", Float),
            ("p_succ_obs_mean", Float),
        ],
    ),
    (
        "lifetime.csv",
        &[
            ("report_interval_s", Float),
            ("i_avg_ma", Float),
            ("e_cyc_mj", Float),
            ("lifetime_h", Float),
            ("lifetime_days", Float),
        ],
    ),
    (
        "depletion.csv",
        &[("time_s", Float), ("day", Float), ("battery_mah", Float)],
    ),
    (
        "collision.csv",
        &[
            ("n", Count),
            ("tau", Float),
            ("k_microslots", Count),
            ("p_col", Float),
            ("p_col_jitter", Float),
        ],
    ),
    ("roc.csv", &[("fpr", Float), ("tpr", Float)]),
    ("fit_curve.csv", &[("distance_m", Float), ("p_succ", Float)]),
    (
        "table2.csv",
        &[
            ("metric", Text),
            ("agrotrack", Text),
            ("smartfarm_ble", Text),
            ("ruraltrack_gsm", Text),
        ],
    ),
    (
        "table3.csv",
        &[
            ("metric", Text),
            ("agrotrack", Text),
            ("smartfarm_ble", Text),
            ("ruraltrack_gsm", Text),
        ],
    ),
];

pub fn schema_for(file_name: &str) -> Option<Schema> {
    SCHEMAS
        .iter()
        .find(|(n, _)| *n == file_name)
        .map(|(_, s)| *s)
}

pub fn header(schema: Schema) -> String {
    schema.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileCheck {
    pub file: String,
    pub rows: usize,
    pub problems: Vec<String>,
}

fn cell_ok(col: Col, cell: &str) -> bool {
    match col {
        Col::Float => cell.parse::<f64>().is_ok(),
        Col::Count => cell.parse::<u64>().is_ok(),
        Col::Text => true,
        Col::OptFloat => cell.is_empty() || cell.parse::<f64>().is_ok(),
    }
}

/// Check one CSV body against its declared schema.
pub fn check_csv(name: &str, body: &[u8]) -> FileCheck {
    let mut problems = Vec::new();
    let mut rows = 0;
    let Some(schema) = schema_for(name) else {
        return FileCheck {
            file: name.into(),
            rows,
            problems: vec!["no declared schema for this file name".into()],
        };
    };
    if std::str::from_utf8(body).is_err() {
        problems.push("not valid UTF-8".into());
    }
    if body.contains(&b'\r') {
        problems.push("CR line endings present; expected LF".into());
    }
    if !body.is_empty() && !body.ends_with(b"\n") {
        problems.push("missing trailing newline".into());
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(body);
    match rdr.headers() {
        Ok(h) => {
            let got: Vec<&str> = h.iter().collect();
            let want: Vec<&str> = schema.iter().map(|(n, _)| *n).collect();
            if got != want {
                problems.push(format!("header {got:?} differs from declared {want:?}"));
            }
        }
        Err(e) => problems.push(format!("unreadable header: {e}")),
    }
    for rec in rdr.records() {
        rows += 1;
        match rec {
            Ok(r) => {
                if r.len() != schema.len() {
                    problems.push(format!(
                        "row {rows}: {} fields, expected {}",
                        r.len(),
                        schema.len()
                    ));
                    continue;
                }
                for ((col_name, col), cell) in schema.iter().zip(r.iter()) {
                    if !cell_ok(*col, cell) {
                        problems.push(format!(
                            "row {rows}: column {col_name} has bad value '{cell}'"
                        ));
                    }
                }
            }
            Err(e) => problems.push(format!("row {rows}: {e}")),
        }
    }
    FileCheck {
        file: name.into(),
        rows,
        problems,
    }
}

/// Check every `.csv` file directly inside `dir`.
pub fn check_dir(dir: &Path) -> std::io::Result<Vec<FileCheck>> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    entries.sort();
    entries
        .iter()
        .map(|p| {
            let body = std::fs::read(p)?;
            let name = p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok(check_csv(&name, &body))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn good_file_passes() {
        let c = check_csv("throughput.csv", b"time_s,throughput_msg_s\n0,1.5\n60,2\n");
        assert!(c.problems.is_empty(), "{:?}", c.problems);
        assert_eq!(c.rows, 2);
    }

    #[test]
    fn wrong_order_and_types_are_reported() {
        let c = check_csv("throughput.csv", b"throughput_msg_s,time_s\nx,1\n");
        assert_eq!(c.problems.len(), 2, "{:?}", c.problems);
        let c = check_csv("battery.csv", b"time_s,node,battery_mah\r\n0,1.5,3\r\n");
        assert!(c.problems.iter().any(|p| p.contains("CR")));
        assert!(c.problems.iter().any(|p| p.contains("node")));
    }

    #[test]
    fn unknown_file_is_flagged() {
        assert!(!check_csv("mystery.csv", b"a\n1\n").problems.is_empty());
    }
}
