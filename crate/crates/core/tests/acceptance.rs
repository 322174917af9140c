//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs with `harness = false`; `cargo test --test acceptance -- 3 7` runs a
//! subset.

use std::process::ExitCode;
use std::time::Instant;

use randshear::validation::{run, Scale, CRITERIA};

fn main() -> ExitCode {
    let wanted: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for (id, _) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let report = run(id, Scale::Full);
        println!("{} ({:.1}s)", report.line(), start.elapsed().as_secs_f64());
        if !report.passed {
            failures += 1;
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
