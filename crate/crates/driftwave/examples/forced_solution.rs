//! Forced Cauchy problem through the Duhamel formula: with forcing
//! F(s) = U(s)ψ the solution from zero data is exactly t U(t)ψ, which the
//! trapezoid weights reproduce to rounding.
//!
//! Run with: cargo run --release --example forced_solution

use driftwave::gallery::fixture_by_id;
use driftwave::grid::{GridSpec, WaveField};
use driftwave::propagator::{duhamel_solve, propagate, PropagationMethod};
use num_complex::Complex64;

fn main() {
    let fx = fixture_by_id("free-1d").expect("fixture");
    let grid = GridSpec::cubic(1, 18.0, 256, 0.25).expect("grid");
    let psi = WaveField::gaussian(grid.clone(), &[0.0], &[1.0], None).expect("probe");
    let method = PropagationMethod::ChirpInterp;

    let ts: Vec<f64> = (0..11).map(|i| i as f64 * 0.04).collect();
    let forcing: Vec<WaveField> = ts
        .iter()
        .map(|&s| propagate(&fx.spec, &psi, s, method).expect("forcing snapshot"))
        .collect();
    let zero = WaveField::zeros(grid, 0.0);
    let solution = duhamel_solve(&fx.spec, &zero, &forcing, &ts, method).expect("duhamel");

    println!("{:>6} {:>14} {:>14} {:>12}", "t", "||u(t)||_2", "t ||psi||_2", "defect");
    for (k, &t) in ts.iter().enumerate() {
        let exact = propagate(&fx.spec, &psi, t, method)
            .unwrap()
            .scaled(Complex64::new(t, 0.0));
        let defect = solution[k].l2_distance(&exact).unwrap();
        println!(
            "{t:>6.2} {:>14.8} {:>14.8} {:>12.3e}",
            solution[k].l2_norm(),
            exact.l2_norm(),
            defect
        );
    }
}
