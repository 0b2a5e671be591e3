mod common;

use common::*;
use pipe_rating::encoding::{encode_dataset, FactorSchema};
use pipe_rating::ingest::{clean, load_records, CleaningRules, ColumnMap};
use pipe_rating::metrics::ConfusionMatrix;
use pipe_rating::synthgen::GenSpec;

#[test]
fn sample_export_loads_through_column_map() {
    let columns = ColumnMap::load(fixture("column_map.toml")).unwrap();
    let loaded = load_records(fixture("sample_export.csv"), &columns).unwrap();
    assert!(loaded.diagnostics.is_empty(), "{:?}", loaded.diagnostics);
    assert_eq!(loaded.records.len(), 5);
    let first = &loaded.records[0];
    assert_eq!(first.pipe_id, "925");
    assert_eq!(first.diameter_inches, Some(8.0));
    assert_eq!(first.depth_category.as_deref(), Some("0-10 Feet"));
    assert_eq!(first.total_length_feet, Some(86.0));
    assert_eq!(first.structural_score, Some(2));
    assert_eq!(first.om_score, Some(2));
    assert_eq!(first.comprehensive_rating.map(|r| r.get()), Some(4));

    let (kept, report) = clean(&loaded.records, &CleaningRules::default());
    assert_eq!(report.retained, 5);
    let data = encode_dataset(&kept, &FactorSchema::default_schema()).unwrap();
    // age 62, vitrified clay, 8 in, circular, 0-10 ft
    assert_eq!(&data.vectors[0].ranks[..5], &[5, 1, 5, 1, 1]);
}

#[test]
fn rules_file_matches_built_in_rules() {
    let rules = CleaningRules::load(fixture("cleaning_rules.toml")).unwrap();
    assert_eq!(rules, CleaningRules::default());
}

#[test]
fn generator_specs_parse() {
    for name in ["gen_inventory.toml", "gen_constant_columns.toml", "gen_separable.toml", "gen_noisy.toml"] {
        let spec = GenSpec::load(fixture(name)).unwrap();
        spec.validate().unwrap();
    }
    let separable = GenSpec::load(fixture("gen_separable.toml")).unwrap();
    assert_eq!(separable, GenSpec::separable(200, 11));
}

#[test]
fn matrix_fixtures_match_published_counts() {
    for (file, counts) in [("knn_matrix.csv", KNN_MATRIX), ("ahp_matrix.csv", AHP_MATRIX), ("nbc_matrix.csv", NBC_MATRIX)] {
        let m = ConfusionMatrix::load_csv(fixture(file)).unwrap();
        assert_eq!(m.counts, counts, "{file}");
        assert_eq!(m.total(), 310);
    }
}
