//! The two independent Gramian routes (augmented block exponential and
//! adaptive quadrature) on a damped fixture, their disagreement, and the
//! stationary limit Q∞ from the Lyapunov equation.
//!
//! Run with: cargo run --release --example gramian_routes

use driftwave::gallery::fixture_by_id;
use driftwave::gramian::{
    gramian_at, gramian_cross_check, gramian_limit, GramianLimit, GramianMethod,
};

fn main() {
    let fx = fixture_by_id("sk").expect("fixture");
    println!("operator: {}  (trB = {})", fx.spec.label(), fx.spec.tr_b());
    for &t in &[0.25, 1.0, 4.0, 16.0] {
        let s = gramian_at(&fx.spec, t, GramianMethod::AugmentedExponential).unwrap();
        let rel = gramian_cross_check(&fx.spec, t).unwrap();
        println!(
            "t = {t:>6}: Q(t) = [{:+.6} {:+.6}; {:+.6} {:+.6}]  V = {:.6e}  route disagreement {rel:.2e}",
            s.qt[(0, 0)],
            s.qt[(0, 1)],
            s.qt[(1, 0)],
            s.qt[(1, 1)],
            s.v
        );
    }
    match gramian_limit(&fx.spec).unwrap() {
        GramianLimit::Exists(q) => println!(
            "Q_inf = [{:+.6} {:+.6}; {:+.6} {:+.6}]",
            q[(0, 0)],
            q[(0, 1)],
            q[(1, 0)],
            q[(1, 1)]
        ),
        GramianLimit::Diverges { max_re, witness } => {
            println!("no stationary limit: max Re eigenvalue {max_re} at {witness:?}")
        }
    }

    // A drift with spectrum on the imaginary axis has no stationary Gramian.
    let kol = fixture_by_id("kolmogorov-m1").unwrap();
    match gramian_limit(&kol.spec).unwrap() {
        GramianLimit::Diverges { witness, .. } => {
            println!("{}: Q(t) diverges (eigenvalue {witness:?})", kol.spec.label())
        }
        GramianLimit::Exists(_) => unreachable!("nilpotent drift cannot stabilise"),
    }
}
