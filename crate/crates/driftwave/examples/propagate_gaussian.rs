//! Evolve a Gaussian under the propagator group, forward and back, printing
//! norms and writing the evolved fields (binary + sidecar) to a temp
//! directory.
//!
//! Run with: cargo run --release --example propagate_gaussian

use driftwave::gallery::fixture_by_id;
use driftwave::grid::{GridSpec, WaveField};
use driftwave::propagator::{propagate, weighted_field, PropagationMethod};

fn main() {
    let fx = fixture_by_id("kolmogorov-m1").expect("fixture");
    let grid = GridSpec::cubic(2, 16.0, 128, 0.25).expect("grid");
    let phi = WaveField::gaussian(grid, &[0.0, 0.0], &[1.5, 1.5], None).expect("probe");
    println!("probe: ||phi||_2 = {:.9}", phi.l2_norm());

    let out = std::env::temp_dir().join("driftwave_fields");
    std::fs::create_dir_all(&out).expect("out dir");

    let method = PropagationMethod::ShearedSpectral;
    for &t in &[-0.4, -0.1, 0.1, 0.4] {
        let u = propagate(&fx.spec, &phi, t, method).expect("propagate");
        let w = weighted_field(&fx.spec, &u);
        println!(
            "t = {t:+.1}: ||U(t)phi||_2 = {:.9}  weighted = {:.9}  ||.||_inf = {:.6}",
            u.l2_norm(),
            w.l2_norm(),
            u.lebesgue_norm(f64::INFINITY)
        );
        let path = out.join(format!("kolmogorov.t{t:+.1}.field"));
        u.write_binary(&path).expect("write field");
    }
    // Round trip: U(-t) U(t) = identity up to spectral error.
    let fwd = propagate(&fx.spec, &phi, 0.4, method).unwrap();
    let back = propagate(&fx.spec, &fwd, -0.4, method).unwrap();
    println!(
        "inverse defect ||U(-t)U(t)phi - phi||_2 / ||phi||_2 = {:.3e}",
        back.l2_distance(&phi).unwrap() / phi.l2_norm()
    );
    println!("fields written under {}", out.display());
}
