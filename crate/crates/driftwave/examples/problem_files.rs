//! Round-trips a fixture through the JSON problem-file format the CLI
//! consumes: export, reload, re-analyze.
//!
//! Run with: cargo run --release --example problem_files

use driftwave::cli::{analyze_document, fixture_to_problem_json, load_problem};
use driftwave::gallery::fixture_by_id;
use driftwave::regimes::ClassifierConfig;

fn main() {
    let fx = fixture_by_id("anomalous-7.4-k2").expect("fixture");
    let doc = fixture_to_problem_json(&fx);
    println!("problem file:\n{}", serde_json::to_string_pretty(&doc).unwrap());

    let path = std::env::temp_dir().join("driftwave_problem.json");
    std::fs::write(&path, serde_json::to_string_pretty(&doc).unwrap()).expect("write");
    let (loaded, _grid) = load_problem(&path).expect("reload");
    let analysis = analyze_document(&loaded, 1e-9, &ClassifierConfig::default()).expect("analyze");
    println!(
        "reloaded `{}`: D = {}, case = {}, D_infty = {}",
        loaded.spec.label(),
        analysis["D"],
        analysis["case"],
        analysis["D_infty"]
    );
}
