//! Regenerate the bundled reference series CSV.
//!
//! Usage: cargo run --example generate_fixture -- [path]
//! Default path: tests/fixtures/pandas_monthly.csv (relative to the crate).

use std::path::PathBuf;

fn main() {
    let path: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/pandas_monthly.csv")
        });
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).expect("create fixture directory");
    }
    let series = repo_lifecycle::synth::reference_fixture();
    series.write_csv_file(&path).expect("write fixture CSV");
    println!(
        "{} months, {} dev-months, {} lines -> {}",
        series.len(),
        series.total_dev_months(),
        series.total_lines(),
        path.display()
    );
}
