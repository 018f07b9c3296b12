//! Dispersive decay of the free propagator on the plane: the normalized
//! quotient ||U(t)φ||_r V(t)^{1/2-1/r} / ||φ||_{r'} should be flat in log t,
//! and the sup-norm should decay like t^{-n/2}.
//!
//! Run with: cargo run --release --example dispersive_decay

use driftwave::gallery::fixture_by_id;
use driftwave::grid::GridSpec;
use driftwave::propagator::PropagationMethod;
use driftwave::verification::{run_dispersive_suite, Probe};

fn main() {
    let fx = fixture_by_id("free-2d").expect("fixture");
    let grid = GridSpec::cubic(2, 200.0, 1024, 0.25).expect("grid");
    let report = run_dispersive_suite(
        &fx,
        &grid,
        &[4.0, f64::INFINITY],
        &Probe::isotropic(2, 1.0),
        (0.1, 3.0),
        14,
        PropagationMethod::ChirpInterp,
        None,
    );
    for c in &report.checks {
        println!(
            "{:<36} measured {:>9.4}  expected {:>6.2} ± {:<7.3} {}",
            c.name,
            c.measured,
            c.expected,
            c.tolerance,
            if c.pass { "ok" } else { "FAIL" }
        );
    }
    println!("suite pass: {}", report.pass());
}
