//! Acceptance criteria 1 to 11: one line per criterion, then a single verdict.
//! Runs without the libtest harness so the lines always reach stdout.

use std::process::ExitCode;
use std::time::Instant;

use kinsmooth::acceptance::{run_selected, CRITERIA, SUITE_BUDGET_S};

fn main() -> ExitCode {
    let t0 = Instant::now();
    let outcomes = run_selected(&CRITERIA, |o| println!("{}", o.line()));
    let total = t0.elapsed().as_secs_f64();
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    println!(
        "acceptance: {}/{} passed in {total:.1} s (budget {SUITE_BUDGET_S:.0} s)",
        outcomes.len() - failed.len(),
        outcomes.len()
    );
    if outcomes.len() == CRITERIA.len() && failed.is_empty() && total <= SUITE_BUDGET_S {
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED {failed:?}");
        ExitCode::FAILURE
    }
}
