//! Naive Bayes baseline next to K-NN on the same split.
//!
//! cargo run --example naive_bayes_baseline

use pipe_rating::baselines::{nb_fit, nb_predict_all, DEFAULT_SMOOTHING};
use pipe_rating::encoding::{encode_dataset, FactorSchema};
use pipe_rating::knn::{split, KnnModel, SplitSpec, TieBreak};
use pipe_rating::metrics::{confusion, report};
use pipe_rating::synthgen::{generate, GenSpec};

fn main() -> pipe_rating::Result<()> {
    let mut spec = GenSpec::new(800, 3);
    spec.noise = 0.15;
    let data = encode_dataset(&generate(&spec)?, &FactorSchema::default_schema())?;
    let (train, valid) = split(&data, &SplitSpec::default())?;

    let nb = nb_fit(&train, DEFAULT_SMOOTHING)?;
    let knn = KnnModel::fit(&train, 9, TieBreak::default())?;
    let actual = valid.labels();
    let matrices = [
        ("K-NN (K = 9)".to_string(), confusion(&knn.predict_all(&valid, false)?, &actual)?),
        ("Naive Bayes".to_string(), confusion(&nb_predict_all(&nb, &valid)?, &actual)?),
    ];
    print!("{}", report(&matrices)?.render_text());

    let q = &valid.vectors[0];
    println!("\nposteriors for pipe {}: {:.3?}", q.pipe_id, nb.posteriors(&q.ranks)?);
    Ok(())
}
