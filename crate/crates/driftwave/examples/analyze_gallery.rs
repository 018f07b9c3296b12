//! Structural analysis of every built-in fixture: block ranks, local
//! homogeneous dimension, spectrum class, regime tag and critical pair.
//!
//! Run with: cargo run --release --example analyze_gallery

use driftwave::gallery::gallery;
use driftwave::regimes::{classify, strichartz_pair, ClassifierConfig, Hypothesis};
use driftwave::structure::analyze_structure;

fn main() {
    println!(
        "{:<18} {:>4} {:>14} {:>4} {:>8} {:<12} {:>4} {:>8} {:>6}",
        "fixture", "n", "ranks", "D", "trB", "case", "hyp", "D_inf", "r"
    );
    let cfg = ClassifierConfig::default();
    for fx in gallery() {
        let st = analyze_structure(&fx.spec, 1e-9).expect("structure");
        let reg = classify(&fx.spec, &st, &cfg).expect("classify");
        let pair_r = if st.d >= 2 {
            format!("{:.3}", strichartz_pair(st.d).r)
        } else {
            "-".into()
        };
        println!(
            "{:<18} {:>4} {:>14} {:>4} {:>8.3} {:<12} {:>4} {:>8} {:>6}",
            fx.spec.label(),
            fx.spec.n(),
            format!("{:?}", st.ranks),
            st.d,
            fx.spec.tr_b(),
            reg.case_tag.as_str(),
            match reg.hypothesis {
                Hypothesis::A => "A",
                Hypothesis::B => "B",
            },
            reg.d_infty.map(|d| format!("{d:.2}")).unwrap_or_else(|| "-".into()),
            pair_r,
        );
    }
}
