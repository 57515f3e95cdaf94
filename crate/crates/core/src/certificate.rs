//! Structured pass/fail results with witnesses and numeric gaps.

use serde::{Deserialize, Serialize};

/// What a failed (or barely passed) check points at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// A type profile, e.g. the scenario where a constraint is violated.
    Scenario { t: Vec<f64> },
    /// An incentive-compatibility violation: agent `agent` (1-based) at
    /// scenario `t` gains by misreporting `misreport`.
    IcViolation {
        agent: usize,
        t: Vec<f64>,
        misreport: f64,
    },
    /// A constraint identified by name, optionally at a scenario.
    Constraint {
        name: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        t: Option<Vec<f64>>,
    },
    /// An agent-indexed fact, e.g. a violated per-agent bound.
    Agent { agent: usize, detail: String },
    /// Free-form detail.
    Text { detail: String },
}

/// Machine-readable outcome of a single check.
///
/// Serializes to `{check, pass, witness, gap, tolerance}` plus optional notes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub check: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    /// Signed slack of the binding comparison: negative means violated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Certificate {
    pub fn pass(check: impl Into<String>, tolerance: f64) -> Self {
        Certificate {
            check: check.into(),
            pass: true,
            witness: None,
            gap: None,
            tolerance,
            notes: Vec::new(),
        }
    }

    pub fn fail(check: impl Into<String>, tolerance: f64, witness: Witness) -> Self {
        Certificate {
            check: check.into(),
            pass: false,
            witness: Some(witness),
            gap: None,
            tolerance,
            notes: Vec::new(),
        }
    }

    pub fn with_gap(mut self, gap: f64) -> Self {
        self.gap = Some(gap);
        self
    }

    pub fn with_witness(mut self, witness: Witness) -> Self {
        self.witness = Some(witness);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// One-line human-readable report.
    pub fn report_line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        let mut line = format!("{:<40} {}", self.check, status);
        if let Some(gap) = self.gap {
            line.push_str(&format!("  gap={gap:.12e}"));
        }
        if let Some(w) = &self.witness {
            line.push_str(&format!("  witness={}", witness_summary(w)));
        }
        for n in &self.notes {
            line.push_str(&format!("  [{n}]"));
        }
        line
    }
}

fn witness_summary(w: &Witness) -> String {
    match w {
        Witness::Scenario { t } => format!("t={t:?}"),
        Witness::IcViolation {
            agent,
            t,
            misreport,
        } => format!("agent {agent} at t={t:?} misreporting {misreport}"),
        Witness::Constraint { name, t } => match t {
            Some(t) => format!("{name} at t={t:?}"),
            None => name.clone(),
        },
        Witness::Agent { agent, detail } => format!("agent {agent}: {detail}"),
        Witness::Text { detail } => detail.clone(),
    }
}
