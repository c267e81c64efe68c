//! Runs every acceptance criterion and prints one PASS/FAIL line each.

use std::process::ExitCode;
use std::time::Instant;

use mdisp::suite::{run_criterion, SuiteOptions};

fn main() -> ExitCode {
    let opts = SuiteOptions {
        seed: 7,
        timing: true,
    };
    let start = Instant::now();
    let mut failed = 0;
    for id in 1..=12u8 {
        let r = run_criterion(id, &opts);
        println!("{} [{:.2}s]", r.summary(), r.seconds.unwrap_or(0.0));
        if id == 12 {
            for lmax in [4, 6, 8] {
                let g = r
                    .metrics
                    .get(&format!("lmax{lmax}.gap"))
                    .copied()
                    .unwrap_or(f64::NAN);
                let d = r
                    .metrics
                    .get(&format!("lmax{lmax}.resolvent_difference"))
                    .copied()
                    .unwrap_or(f64::NAN);
                println!("      lmax {lmax}: gap {g:.6} resolvent difference {d:.6}");
            }
        }
        if !r.passed {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} of 12 criteria passed in {:.1}s",
        12 - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
