//! Per-class scores from confusion-matrix CSV files.
//!
//! cargo run --example published_matrices

use std::path::PathBuf;

use pipe_rating::metrics::{report, ConfusionMatrix};

fn main() -> pipe_rating::Result<()> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut matrices = Vec::new();
    for (name, file) in [("K-NN", "knn_matrix.csv"), ("AHP", "ahp_matrix.csv"), ("NBC", "nbc_matrix.csv")] {
        matrices.push((name.to_string(), ConfusionMatrix::load_csv(fixtures.join(file))?));
    }
    print!("{}\n{}", matrices[0].1.render_text(), report(&matrices)?.render_text());
    Ok(())
}
