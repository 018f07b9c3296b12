//! Volume function V(t) = det Q(t) of a fixture against its regime
//! envelopes, printed as CSV. Pass a fixture id as the first argument
//! (default: anomalous-7.4-k2, whose V(t) crosses from the t^8 short-time
//! power to the t^6 long-time one).
//!
//! Run with: cargo run --release --example volume_curves [fixture-id]

use driftwave::cli::volume_csv;
use driftwave::gallery::fixture_by_id;

fn main() {
    let id = std::env::args().nth(1).unwrap_or_else(|| "anomalous-7.4-k2".into());
    let fx = fixture_by_id(&id).expect("fixture id");
    let csv = volume_csv(&fx, 0.05, 50.0, 80).expect("volume curve");
    print!("{csv}");
    if let Some(cf) = &fx.expected.closed_form_v {
        eprintln!("closed form: V(t) = {}", cf.formula);
    }
}
