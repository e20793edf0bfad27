//! JSON run reports.
//!
//! The body holds everything that depends only on the configuration and the
//! seed; wall time sits outside it so bodies can be compared byte for byte.

use serde::{Deserialize, Serialize};
use shortap_core::measures::Params;
use shortap_core::report::CheckRecord;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportBody {
    pub schema_version: u32,
    pub command: String,
    pub params: Params,
    pub seed: u64,
    pub checks: Vec<CheckRecord>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub body: ReportBody,
    pub wall_time_seconds: f64,
}

impl Report {
    /// Canonical serialization of the body.
    pub fn body_json(&self) -> String {
        serde_json::to_string_pretty(&self.body).expect("report body serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn hard_failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.body.checks.iter().filter(|c| c.verdict.is_hard_failure())
    }

    /// 0 when every hard verdict passed, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.hard_failures().next().is_some() {
            2
        } else {
            0
        }
    }
}
