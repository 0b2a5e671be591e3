//! Map raw attributes to 1-5 factor ranks with the built-in schema.
//!
//! cargo run --example encode_factors

use pipe_rating::encoding::{encode, FactorSchema};
use pipe_rating::ingest::PipeRecord;
use pipe_rating::Rating;

fn main() -> pipe_rating::Result<()> {
    let schema = FactorSchema::default_schema();
    for f in schema.factors() {
        println!("{:<16} {:?}", f.name, f.group);
    }

    let mut pipe = PipeRecord::new("925");
    pipe.pipe_age_years = Some(62.0);
    pipe.material = Some("vitrified  clay pipe".into());
    pipe.diameter_inches = Some(8.0);
    pipe.shape = Some("Circular".into());
    pipe.depth_category = Some("0-10 Feet".into());
    pipe.soil_type = Some("Moderate corrosivity".into());
    pipe.loading = Some("Light traffic".into());
    pipe.waste_type = Some("Moderately corrosive".into());
    pipe.seismic_zone = Some("Zone 1".into());
    pipe.structural_score = Some(2);
    pipe.om_score = Some(2);
    pipe.repair_history = Some("Moderate maintenance".into());
    pipe.comprehensive_rating = Some(Rating::new(4)?);

    let encoded = encode(&pipe, &schema)?;
    println!("\nranks: {:?}", encoded.vector.ranks);

    pipe.material = Some("Orangeburg".into());
    let encoded = encode(&pipe, &schema)?;
    println!("unknown material -> rank {}", encoded.vector.ranks[1]);
    for note in &encoded.notes {
        println!("  {note}");
    }
    Ok(())
}
