//! Run reports, rendered as text or JSON.

use std::fmt::Write as _;

use modclass_core::report::CheckReport;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResidualEntry {
    pub label: String,
    pub value: String,
    pub zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssertionReport {
    pub index: usize,
    pub line: usize,
    pub assertion: String,
    pub expect: String,
    pub verdict: Verdict,
    /// What the check itself found, before comparing with `expect`.
    pub outcome: String,
    pub residuals: Vec<ResidualEntry>,
    pub certificates: Vec<String>,
    pub notes: Vec<String>,
    pub failures: Vec<String>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub millis: Option<f64>,
}

impl AssertionReport {
    pub fn absorb(&mut self, rep: &CheckReport) {
        for r in &rep.residuals {
            self.residuals.push(ResidualEntry { label: r.label.clone(), value: r.value.clone(), zero: r.zero });
        }
        self.notes.extend(rep.notes.iter().cloned());
        self.failures.extend(rep.failures.iter().cloned());
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeclFailure {
    pub line: usize,
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub scenario: String,
    pub seed: u64,
    pub ansatz_degree: u32,
    pub fourier_modes: u32,
    pub declaration_failures: Vec<DeclFailure>,
    pub assertions: Vec<AssertionReport>,
    pub summary: Summary,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0 && self.summary.inconclusive == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "scenario {} (seed {}, ansatz degree {}, fourier modes {})",
            self.scenario, self.seed, self.ansatz_degree, self.fourier_modes
        );
        for f in &self.declaration_failures {
            let _ = writeln!(s, "  declaration `{}` (line {}) not built: {}", f.name, f.line, f.reason);
        }
        for a in &self.assertions {
            let _ = write!(s, "[{}] line {}: {} ... {}", a.index, a.line, a.assertion, a.verdict.as_str());
            if a.expect != "pass" {
                let _ = write!(s, " (expected {}, got {})", a.expect, a.outcome);
            } else if a.verdict != Verdict::Pass {
                let _ = write!(s, " ({})", a.outcome);
            }
            if let Some(ms) = a.millis {
                let _ = write!(s, " [{ms:.1} ms]");
            }
            s.push('\n');
            render_details(&mut s, a);
        }
        let _ = writeln!(
            s,
            "summary: {} passed, {} failed, {} inconclusive",
            self.summary.passed, self.summary.failed, self.summary.inconclusive
        );
        s
    }
}

pub fn render_details(s: &mut String, a: &AssertionReport) {
    for r in &a.residuals {
        let _ = writeln!(s, "    {} = {}", r.label, r.value);
    }
    for c in &a.certificates {
        let _ = writeln!(s, "    certificate: {c}");
    }
    for n in &a.notes {
        let _ = writeln!(s, "    note: {n}");
    }
    for f in &a.failures {
        let _ = writeln!(s, "    failure: {f}");
    }
}
