//! Load an inspection export with custom headers, then clean it.
//!
//! cargo run --example ingest_and_clean

use std::path::PathBuf;

use pipe_rating::ingest::{clean, load_records, CleaningRules, ColumnMap};

fn main() -> pipe_rating::Result<()> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let columns = ColumnMap::load(fixtures.join("column_map.toml"))?;
    let loaded = load_records(fixtures.join("sample_export.csv"), &columns)?;
    for d in &loaded.diagnostics {
        println!("rejected: {d}");
    }

    let mut records = loaded.records;
    // simulate two bad rows
    records[1].material = None;
    records[3].total_length_feet = Some(-12.0);

    let (kept, report) = clean(&records, &CleaningRules::default());
    print!("{}", report.render_text());
    println!("\nretained pipe ids: {:?}", kept.iter().map(|r| r.pipe_id.as_str()).collect::<Vec<_>>());
    Ok(())
}
