//! Shapiro-Wilk screening of encoded factor columns.
//!
//! cargo run --example screen_factors

use pipe_rating::encoding::{encode_dataset, FactorSchema};
use pipe_rating::ingest::{clean, CleaningRules};
use pipe_rating::screening::{screen, shapiro_wilk, DEFAULT_ALPHA};
use pipe_rating::synthgen::{generate, GenSpec};

fn main() -> pipe_rating::Result<()> {
    let sample = [148.0, 154.0, 158.0, 160.0, 161.0, 162.0, 166.0, 170.0, 182.0, 195.0, 236.0];
    let t = shapiro_wilk(&sample)?;
    println!("single sample: W = {:.4}, p = {:.4}\n", t.w.unwrap_or(f64::NAN), t.p_value);

    // constant diameter and seismic zone
    let spec = GenSpec::constant_diameter_and_zone(120, 7);
    let (records, _) = clean(&generate(&spec)?, &CleaningRules::default());
    let data = encode_dataset(&records, &FactorSchema::default_schema())?;

    print!("{}", screen(&data, DEFAULT_ALPHA)?.render_text());
    println!();
    // alpha = 0 only removes constant columns
    print!("{}", screen(&data, 0.0)?.render_text());
    Ok(())
}
