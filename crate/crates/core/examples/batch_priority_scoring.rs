//! Train once, save the model, then rate a new batch worst first.
//!
//! cargo run --example batch_priority_scoring

use pipe_rating::ingest::ColumnMap;
use pipe_rating::pipeline::{cmd_generate, cmd_predict, resolve_out_dir, run, RunConfig, Stage, MODEL_JSON};
use pipe_rating::synthgen::GenSpec;

fn main() -> pipe_rating::Result<()> {
    let out = resolve_out_dir(std::env::temp_dir().join("pipe-rating-batch"));
    let history = out.join("inspected.csv");
    let batch = out.join("batch.csv");
    cmd_generate(&GenSpec::new(1240, 5), &history, &ColumnMap::default())?;
    cmd_generate(&GenSpec::new(25, 99), &batch, &ColumnMap::default())?;

    let mut config = RunConfig::new(&history, &out);
    config.alpha = 0.0;
    let trained = run(&config, Stage::Train)?;
    println!("trained with K = {}", trained.chosen_k.unwrap_or_default());

    let ranked = cmd_predict(&out.join(MODEL_JSON), &batch, &ColumnMap::default())?;
    println!("pipe_id,predicted_rating");
    for p in ranked.iter().take(10) {
        println!("{p}");
    }
    println!("... {} pipes rated", ranked.len());
    Ok(())
}
