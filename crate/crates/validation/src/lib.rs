//! Reporting harness for the acceptance suite in `tests/acceptance.rs`.
//!
//! Each criterion prints exactly one `PASS` or `FAIL` line; the process exits
//! with status 1 if any criterion failed.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

#[derive(Default)]
pub struct Report {
    failed: Vec<String>,
    passed: usize,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    /// Runs one criterion. `check` returns whether it holds and a short
    /// description of what was measured. A panic counts as a failure, and so
    /// does exceeding `limit`.
    pub fn check(&mut self, id: &str, title: &str, limit: Option<Duration>, check: impl FnOnce() -> (bool, String)) {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check));
        let elapsed = start.elapsed();
        let (mut ok, mut detail) = match outcome {
            Ok(r) => r,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                (false, format!("panicked: {msg}"))
            }
        };
        if let Some(limit) = limit {
            if elapsed > limit {
                ok = false;
                detail.push_str(&format!("; over the {:.0?} limit", limit));
            }
        }
        detail.push_str(&format!(" [{:.2}s]", elapsed.as_secs_f64()));
        println!("{} {id:>2}  {title}: {detail}", if ok { "PASS" } else { "FAIL" });
        if ok {
            self.passed += 1;
        } else {
            self.failed.push(id.to_string());
        }
    }

    /// A criterion that is deliberately not evaluated.
    pub fn skip(&mut self, id: &str, title: &str, reason: &str) {
        println!("SKIP {id:>2}  {title}: {reason}");
    }

    pub fn finish(self) -> ExitCode {
        println!(
            "\nacceptance: {} passed, {} failed{}",
            self.passed,
            self.failed.len(),
            if self.failed.is_empty() {
                String::new()
            } else {
                format!(" ({})", self.failed.join(", "))
            }
        );
        if self.failed.is_empty() {
            ExitCode::SUCCESS
        } else {
            ExitCode::FAILURE
        }
    }
}
