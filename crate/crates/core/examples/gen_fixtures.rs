//! Regenerates the committed fixture files under `fixtures/`.
//!
//! Run from the repository root:
//! `cargo run -p approxai --example gen_fixtures`
//!
//! Models are written as canonical JSON; inputs as single-line CSV
//! (vectors) or one-line-per-row CSV (grids). Forward-output goldens are
//! *not* written here — they come from an independent reimplementation of
//! the forward pass, so a bug in the library cannot bless itself.

use approxai::apxnum::{ApproxLevel, EnergyLedger};
use approxai::fixtures;
use approxai::ig;
use approxai::tinymodel::save_model;
use std::path::Path;

fn write_vector_csv(path: &Path, v: &[f64]) {
    let line: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    std::fs::write(path, format!("{}\n", line.join(","))).unwrap();
}

fn write_matrix_csv(path: &Path, rows: &[Vec<f64>]) {
    let mut text = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        text.push_str(&line.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

fn main() {
    let dir = Path::new("fixtures");
    std::fs::create_dir_all(dir).unwrap();

    save_model(&fixtures::linear_3(), &dir.join("linear_3.json")).unwrap();
    save_model(&fixtures::mlp_4_8_2(), &dir.join("mlp_4_8_2.json")).unwrap();
    save_model(&fixtures::conv_4x4(), &dir.join("conv_4x4.json")).unwrap();

    write_vector_csv(&dir.join("input_4.csv"), &fixtures::mlp_input());
    let grid: Vec<Vec<f64>> = fixtures::conv_input()
        .chunks(4)
        .map(<[f64]>::to_vec)
        .collect();
    write_matrix_csv(&dir.join("input_4x4.csv"), &grid);

    // Gradient samples along the interpolation path (finite-difference
    // cross-checked by the test suite before every use).
    let model = fixtures::mlp_4_8_2();
    let x = fixtures::mlp_input();
    let baseline = vec![0.0; 4];
    let cfg = ig::IGConfig {
        n: 9,
        t: 8,
        class_index: 0,
        level: ApproxLevel::EXACT,
        workers: 1,
    };
    let samples = ig::sample_path(&model, &x, &baseline, &cfg).unwrap();
    let grads_golden = serde_json::json!({
        "x": x,
        "baseline": baseline,
        "grads": samples.grads,
    });
    std::fs::write(
        dir.join("ig_grads_mlp_n9.json"),
        format!("{:#}\n", grads_golden),
    )
    .unwrap();

    // Dense-oracle attribution for the same case.
    let _ = EnergyLedger::new();
    let oracle = ig::ig_oracle(&model, &x, &baseline, 0, ig::ORACLE_STEPS).unwrap();
    let oracle_golden = serde_json::json!({
        "x": x,
        "baseline": baseline,
        "class_index": 0,
        "values": oracle.values,
        "completeness_gap": oracle.completeness_gap,
    });
    std::fs::write(
        dir.join("ig_oracle_mlp.json"),
        format!("{:#}\n", oracle_golden),
    )
    .unwrap();

    println!("fixtures written to {}", dir.display());
}
