//! Space-time estimate quotients for the free plane with the critical pair
//! q = r = 2(D+2)/D: the quotient of the weighted space-time norm against
//! ||φ||₂ must be stable across probe scales, and a forced run through the
//! Duhamel formula records its constant.
//!
//! Run with: cargo run --release --example strichartz_quotient

use driftwave::gallery::fixture_by_id;
use driftwave::grid::GridSpec;
use driftwave::propagator::PropagationMethod;
use driftwave::regimes::strichartz_pair;
use driftwave::verification::run_strichartz_suite;

fn main() {
    let fx = fixture_by_id("free-2d").expect("fixture");
    let grid = GridSpec::cubic(2, 40.0, 512, 0.25).expect("grid");
    let pair = strichartz_pair(2);
    println!("critical pair: q = r = {}, duals {}", pair.q, pair.q_dual);
    let report = run_strichartz_suite(
        &fx,
        &grid,
        &pair,
        &[0.5, 1.0, 2.0],
        6.0,
        PropagationMethod::ChirpInterp,
        true,
        None,
    );
    for c in &report.checks {
        println!(
            "{:<24} measured {:>9.4}  {}",
            c.name,
            c.measured,
            if c.pass { "ok" } else { "FAIL" }
        );
    }
    for s in &report.skipped {
        println!("skipped {:<16} {}", s.name, s.reason);
    }
    println!("suite pass: {}", report.pass());
}
