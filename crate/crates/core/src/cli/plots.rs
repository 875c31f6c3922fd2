//! Plot-spec documents: axis labels and series names for each emitted CSV,
//! so any plotting tool can render the figures without guessing columns.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub column: &'static str,
    pub label: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotSpec {
    pub file: &'static str,
    pub title: &'static str,
    pub kind: &'static str,
    pub x: Axis,
    pub series: Vec<Axis>,
    /// Column whose values split the data into one line per value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group_by: Option<&'static str>,
}

fn line(file: &'static str, title: &'static str, x: Axis, series: Vec<Axis>) -> PlotSpec {
    PlotSpec {
        file,
        title,
        kind: "line",
        x,
        series,
        group_by: None,
    }
}

const fn ax(column: &'static str, label: &'static str) -> Axis {
    Axis { column, label }
}

pub fn simulate() -> Vec<PlotSpec> {
    vec![
        line(
            "distance.csv",
            "Packet success vs distance to nearest gateway",
            ax("distance_lo_m", "Distance (m)"),
            vec![ax("success_rate", "Packet success rate")],
        ),
        PlotSpec {
            group_by: Some("node"),
            ..line(
                "battery.csv",
                "Battery level of sensor nodes",
                ax("time_s", "Time (s)"),
                vec![ax("battery_mah", "Remaining charge (mAh)")],
            )
        },
        line(
            "throughput.csv",
            "Cloud-processed throughput",
            ax("time_s", "Time (s)"),
            vec![ax("throughput_msg_s", "Messages per second")],
        ),
        PlotSpec {
            kind: "bar",
            ..line(
                "fates.csv",
                "Packet fates",
                ax("fate", "Fate"),
                vec![ax("fraction", "Fraction of generated packets")],
            )
        },
        PlotSpec {
            kind: "scatter",
            ..line(
                "alerts.csv",
                "Alert latency",
                ax("trigger_s", "Trigger time (s)"),
                vec![ax("latency_s", "Latency (s)")],
            )
        },
    ]
}

pub fn sweep() -> Vec<PlotSpec> {
    vec![
        line(
            "loss_vs_n.csv",
            "Packet loss vs number of animals",
            ax("n", "Number of animals"),
            vec![ax("loss_mean", "Packet loss (fraction)")],
        ),
        line(
            "throughput_vs_n.csv",
            "System throughput vs number of animals",
            ax("n", "Number of animals"),
            vec![ax("throughput_msg_s_mean", "Throughput (msg/s)")],
        ),
    ]
}

pub fn failures() -> Vec<PlotSpec> {
    vec![line(
        "recovery.csv",
        "Data recovery vs gateway failures",
        ax("failures", "Failed gateways"),
        vec![ax("recovery_ratio", "Recovery ratio")],
    )]
}

pub fn linkbudget() -> Vec<PlotSpec> {
    vec![line(
        "linkbudget.csv",
        "Packet success vs distance",
        ax("distance_m", "Distance (m)"),
        vec![
            ax("p_succ_los_mean", "Line of sight"),
            ax("p_succ_obs_mean", "Obstructed"),
        ],
    )]
}

pub fn battery() -> Vec<PlotSpec> {
    vec![
        line(
            "lifetime.csv",
            "Battery lifetime vs report interval",
            ax("report_interval_s", "Report interval (s)"),
            vec![ax("lifetime_days", "Lifetime (days)")],
        ),
        line(
            "depletion.csv",
            "Battery depletion",
            ax("day", "Day"),
            vec![ax("battery_mah", "Remaining charge (mAh)")],
        ),
    ]
}

pub fn collision() -> Vec<PlotSpec> {
    vec![line(
        "collision.csv",
        "Collision probability vs herd size",
        ax("n", "Number of animals"),
        vec![
            ax("p_col", "Aligned slots"),
            ax("p_col_jitter", "With micro-slot jitter"),
        ],
    )]
}

pub fn fit() -> Vec<PlotSpec> {
    vec![line(
        "fit_curve.csv",
        "Two-regime success fit",
        ax("distance_m", "Distance (m)"),
        vec![ax("p_succ", "Fitted success probability")],
    )]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::schema::schema_for;

    #[test]
    fn every_plot_references_declared_columns() {
        let all = [
            simulate(),
            sweep(),
            failures(),
            linkbudget(),
            battery(),
            collision(),
            fit(),
        ]
        .concat();
        for p in all {
            let schema = schema_for(p.file).unwrap_or_else(|| panic!("{} has no schema", p.file));
            let has = |c: &str| schema.iter().any(|(n, _)| *n == c);
            assert!(has(p.x.column), "{}: {}", p.file, p.x.column);
            for s in &p.series {
                assert!(has(s.column), "{}: {}", p.file, s.column);
            }
            if let Some(g) = p.group_by {
                assert!(has(g));
            }
        }
    }
}
