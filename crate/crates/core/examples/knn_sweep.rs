//! Split, sweep K and fit the classifier at the best K.
//!
//! cargo run --example knn_sweep

use pipe_rating::encoding::{encode_dataset, project, FactorSchema};
use pipe_rating::knn::{misclassification, split, sweep_k, KnnModel, SplitSpec, TieBreak};
use pipe_rating::synthgen::{generate, GenSpec};

fn main() -> pipe_rating::Result<()> {
    let mut spec = GenSpec::new(1240, 42);
    spec.noise = 0.1;
    let data = encode_dataset(&generate(&spec)?, &FactorSchema::default_schema())?;
    let data = project(&data, &["Age", "Material", "Structural Score", "O&M Score", "Repair History"])?;

    let (train, valid) = split(&data, &SplitSpec { seed: 1, ..SplitSpec::default() })?;
    let sweep = sweep_k(&train, &valid, 30, TieBreak::NearestMember)?;
    print!("{}", sweep.render_text());

    let model = KnnModel::fit(&train, sweep.best_k, TieBreak::NearestMember)?;
    println!(
        "\nK = {}: training {:.4}, validation {:.4}",
        model.k,
        misclassification(&model, &train, true)?,
        misclassification(&model, &valid, false)?
    );
    Ok(())
}
