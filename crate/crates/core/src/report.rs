//! Verification reports: named residuals that must vanish exactly.

use std::fmt;

/// A single residual; `zero` is the exact zero test of the underlying value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Residual {
    pub label: String,
    pub value: String,
    pub zero: bool,
}

/// Outcome of a verification: exact residuals plus free-form notes on the
/// method (e.g. whether a verdict is probabilistic).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CheckReport {
    pub title: String,
    pub residuals: Vec<Residual>,
    pub notes: Vec<String>,
    /// Extra failure reasons not expressible as a residual.
    pub failures: Vec<String>,
}

impl CheckReport {
    pub fn new(title: impl Into<String>) -> Self {
        Self { title: title.into(), ..Self::default() }
    }

    pub fn residual(&mut self, label: impl Into<String>, value: impl Into<String>, zero: bool) {
        self.residuals.push(Residual { label: label.into(), value: value.into(), zero });
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn fail(&mut self, reason: impl Into<String>) {
        self.failures.push(reason.into());
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.residuals.iter().all(|r| r.zero)
    }

    pub fn nonzero(&self) -> impl Iterator<Item = &Residual> {
        self.residuals.iter().filter(|r| !r.zero)
    }

    pub fn absorb(&mut self, prefix: &str, other: CheckReport) {
        for mut r in other.residuals {
            r.label = format!("{prefix}{}", r.label);
            self.residuals.push(r);
        }
        self.notes.extend(other.notes);
        self.failures.extend(other.failures.into_iter().map(|f| format!("{prefix}{f}")));
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}: {}", self.title, if self.passed() { "pass" } else { "fail" })?;
        for r in self.nonzero() {
            writeln!(f, "  {} = {}", r.label, r.value)?;
        }
        for r in &self.failures {
            writeln!(f, "  {r}")?;
        }
        Ok(())
    }
}
