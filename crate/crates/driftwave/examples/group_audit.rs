//! Unitarity / group-law / inverse audit of the propagator on a drift
//! fixture, through the packaged verification suite.
//!
//! Run with: cargo run --release --example group_audit

use driftwave::gallery::fixture_by_id;
use driftwave::grid::GridSpec;
use driftwave::propagator::PropagationMethod;
use driftwave::verification::{run_group_suite, Probe};

fn main() {
    let fx = fixture_by_id("kolmogorov-m1").expect("fixture");
    let grid = GridSpec::cubic(2, 16.0, 128, 0.25).expect("grid");
    let report = run_group_suite(
        &fx,
        &grid,
        &Probe::isotropic(2, 1.5),
        PropagationMethod::ShearedSpectral,
        None,
    );
    for c in &report.checks {
        println!(
            "{:<22} measured {:>12.4e}  tol {:>8.0e}  {}",
            c.name,
            c.measured,
            c.tolerance,
            if c.pass { "ok" } else { "FAIL" }
        );
    }
    for s in &report.skipped {
        println!("skipped {:<14} {}", s.name, s.reason);
    }
    println!("suite pass: {}", report.pass());
}
