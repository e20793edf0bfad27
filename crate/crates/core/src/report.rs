//! Check records shared by the experiment front ends.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Exact or oracle invariant held.
    Pass,
    /// Exact or oracle invariant violated.
    Fail,
    /// Asymptotic trend check inside its tolerance.
    SoftPass,
    /// Asymptotic trend check outside its tolerance; never fails a run.
    SoftFail,
    /// Measured value with no threshold attached.
    Info,
}

impl Verdict {
    pub fn hard(ok: bool) -> Self {
        if ok { Verdict::Pass } else { Verdict::Fail }
    }

    pub fn soft(ok: bool) -> Self {
        if ok { Verdict::SoftPass } else { Verdict::SoftFail }
    }

    pub fn is_hard_failure(self) -> bool {
        self == Verdict::Fail
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<String>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, value: f64, verdict: Verdict) -> Self {
        Self {
            name: name.into(),
            value,
            std_error: None,
            tolerance: None,
            verdict,
            notes: Vec::new(),
        }
    }

    pub fn info(name: impl Into<String>, value: f64) -> Self {
        Self::new(name, value, Verdict::Info)
    }

    pub fn with_std_error(mut self, se: f64) -> Self {
        self.std_error = Some(se);
        self
    }

    pub fn with_tolerance(mut self, tol: impl Into<String>) -> Self {
        self.tolerance = Some(tol.into());
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}
