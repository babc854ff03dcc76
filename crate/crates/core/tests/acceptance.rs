//! One PASS/FAIL line per acceptance criterion; exits non-zero on any FAIL.

use std::process::ExitCode;
use std::time::Instant;

use linsmr::catalog::validate_catalog;
use linsmr::suites::{run_suite, SuiteOptions, SUITE_NAMES};

fn main() -> ExitCode {
    let o = SuiteOptions::default();
    let mut failed = 0;
    for (i, name) in SUITE_NAMES.iter().enumerate() {
        let start = Instant::now();
        let line = match run_suite(name, &o) {
            Ok(rep) => {
                if !rep.passed() {
                    failed += 1;
                }
                let mut line = format!("{:>2}. {rep}  ({:.1}s)", i + 1, start.elapsed().as_secs_f64());
                if let (false, Some(c)) = (rep.passed(), &rep.counterexample) {
                    line.push_str(&format!("\n    counterexample:\n{c}"));
                }
                line
            }
            Err(e) => {
                failed += 1;
                format!("{:>2}. FAIL {name:<12} error: {e}", i + 1)
            }
        };
        println!("{line}");
    }
    match validate_catalog(0..4) {
        Ok(bad) if bad.is_empty() => println!("catalog: every expected verdict matrix holds for seeds 0..4"),
        Ok(bad) => {
            failed += 1;
            println!("catalog: {} mismatches\n  {}", bad.len(), bad.join("\n  "));
        }
        Err(e) => {
            failed += 1;
            println!("catalog: error: {e}");
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
