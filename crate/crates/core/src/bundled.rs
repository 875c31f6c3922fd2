//! Scenarios and reference tables shipped inside the binary.

use crate::engine::Scenario;
use crate::error::{Error, Result};

pub const SCENARIOS: [(&str, &str); 3] = [
    (
        "trial_baseline",
        include_str!("../scenarios/trial_baseline.json"),
    ),
    ("scaling", include_str!("../scenarios/scaling.json")),
    ("robustness", include_str!("../scenarios/robustness.json")),
];

/// Published comparison figures for systems that are not simulated.
pub const COMPARISON_REFERENCE: [(&str, &str); 2] = [
    ("table2.csv", include_str!("../reference/table2.csv")),
    ("table3.csv", include_str!("../reference/table3.csv")),
];

pub const REFERENCE_NAME: &str = "comparison_reference";

pub fn names() -> Vec<&'static str> {
    SCENARIOS
        .iter()
        .map(|(n, _)| *n)
        .chain(std::iter::once(REFERENCE_NAME))
        .collect()
}

pub fn source(name: &str) -> Option<&'static str> {
    SCENARIOS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn scenario(name: &str) -> Result<Scenario> {
    match source(name) {
        Some(s) => Scenario::from_json_str(s),
        None if name == REFERENCE_NAME => Err(Error::Validation(vec![format!(
            "{REFERENCE_NAME} is a static reference table, not a simulation scenario"
        )])),
        None => Err(Error::Validation(vec![format!(
            "unknown bundled scenario '{name}'"
        )])),
    }
}
