//! Reporting helpers for the acceptance suite.

use std::fmt;
use std::time::{Duration, Instant};

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub id: &'static str,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:<4} {} ({:.2} s): {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

/// Collects checks that make up one criterion.
#[derive(Debug, Default)]
pub struct Checks {
    notes: Vec<String>,
    pass: bool,
}

impl Checks {
    pub fn new() -> Self {
        Self { notes: Vec::new(), pass: true }
    }

    /// `|value − reference| ≤ tol`
    pub fn close(&mut self, what: &str, value: f64, reference: f64, tol: f64) -> &mut Self {
        let ok = (value - reference).abs() <= tol;
        self.record(ok, format!("{what} = {value:.6} (want {reference} ± {tol:e})"))
    }

    pub fn at_most(&mut self, what: &str, value: f64, limit: f64) -> &mut Self {
        self.record(value <= limit, format!("{what} = {value:.4e} (≤ {limit:e})"))
    }

    pub fn holds(&mut self, what: &str, ok: bool) -> &mut Self {
        self.record(ok, format!("{what}: {}", if ok { "yes" } else { "no" }))
    }

    fn record(&mut self, ok: bool, note: String) -> &mut Self {
        self.pass &= ok;
        self.notes.push(if ok { note } else { format!("!{note}") });
        self
    }

    pub fn pass(&self) -> bool {
        self.pass
    }
}

/// Runs one criterion, timing it. A panic or error counts as a failure.
pub fn criterion(id: &'static str, title: &'static str, body: impl FnOnce(&mut Checks) -> Result<(), String>) -> Verdict {
    let start = Instant::now();
    let mut checks = Checks::new();
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| body(&mut checks)));
    let elapsed = start.elapsed();
    let (pass, detail) = match outcome {
        Ok(Ok(())) => (checks.pass, checks.notes.join("; ")),
        Ok(Err(e)) => (false, format!("error: {e}")),
        Err(_) => (false, "panicked".into()),
    };
    Verdict { id, title, pass, detail, elapsed }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failing_check_fails_the_criterion() {
        let v = criterion("0", "demo", |c| {
            c.close("x", 1.0, 1.0, 0.0).at_most("y", 2.0, 1.0);
            Ok(())
        });
        assert!(!v.pass);
        assert!(v.detail.contains("!y"));
        assert!(v.to_string().starts_with("[FAIL] 0"));
    }

    #[test]
    fn errors_and_panics_fail() {
        assert!(!criterion("0", "e", |_| Err("boom".into())).pass);
        assert!(!criterion("0", "p", |_| panic!("boom")).pass);
        assert!(criterion("0", "ok", |c| {
            c.holds("t", true);
            Ok(())
        })
        .pass);
    }
}
