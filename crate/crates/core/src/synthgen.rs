//! Deterministic synthetic pipe records with planted labels.
//!
//! Records are drawn rank-first: each factor's rank comes from its
//! configured distribution and is rendered as a raw attribute value that the
//! default schema maps back to the same rank. Labels come from a planted rule
//! on the hydraulic ranks; label noise and record defects are injected by
//! exact count, not by probability.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{DepthBand, Field, PipeRecord};
use crate::rating::{Rating, NUM_RATINGS};

/// Column totals of a published 310-record K-NN validation confusion matrix,
/// used as the default class mix.
pub const DEFAULT_CLASS_COUNTS: [f64; NUM_RATINGS] = [25.0, 65.0, 92.0, 79.0, 49.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FactorDistribution {
    Constant { constant: u8 },
    Weights { weights: [f64; 5] },
}

impl Default for FactorDistribution {
    fn default() -> Self {
        FactorDistribution::Weights { weights: [0.1, 0.2, 0.4, 0.2, 0.1] }
    }
}

impl FactorDistribution {
    fn validate(&self, field: Field) -> Result<()> {
        match self {
            FactorDistribution::Constant { constant } if (1..=5).contains(constant) => Ok(()),
            FactorDistribution::Constant { constant } => Err(Error::InfeasibleSpec(format!(
                "{field}: constant rank {constant} outside 1-5"
            ))),
            FactorDistribution::Weights { weights } => check_weights(weights, &field.to_string()),
        }
    }

    fn weight(&self, rank: u8) -> f64 {
        match self {
            FactorDistribution::Constant { constant } => f64::from(u8::from(*constant == rank)),
            FactorDistribution::Weights { weights } => weights[usize::from(rank - 1)],
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> u8 {
        match self {
            FactorDistribution::Constant { constant } => *constant,
            FactorDistribution::Weights { weights } => {
                let mut u: f64 = rng.gen();
                for (i, w) in weights.iter().enumerate() {
                    if u < *w {
                        return i as u8 + 1;
                    }
                    u -= w;
                }
                // rounding slack: last rank with positive weight
                weights.iter().rposition(|&w| w > 0.0).unwrap_or(4) as u8 + 1
            }
        }
    }
}

fn check_weights(weights: &[f64], what: &str) -> Result<()> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InfeasibleSpec(format!("{what}: weights must be non-negative")));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InfeasibleSpec(format!("{what}: weights sum to {sum}, not 1")));
    }
    Ok(())
}

/// rating = clamp(round(structural*s + om*o + repair*r), 1, 5)
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedRule {
    pub structural: f64,
    pub om: f64,
    pub repair: f64,
}

impl Default for PlantedRule {
    fn default() -> Self {
        PlantedRule { structural: 0.4, om: 0.4, repair: 0.2 }
    }
}

impl PlantedRule {
    pub fn rate(&self, structural: u8, om: u8, repair: u8) -> Rating {
        let raw = self.structural * f64::from(structural)
            + self.om * f64::from(om)
            + self.repair * f64::from(repair);
        Rating::new(raw.round().clamp(1.0, 5.0) as i64).expect("clamped")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSpec {
    pub n: usize,
    pub seed: u64,
    /// Target class mix before noise; sums to 1.
    #[serde(default = "default_class_weights")]
    pub class_weights: [f64; NUM_RATINGS],
    /// Fraction of labels flipped to a different rating, in [0, 1).
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub rule: PlantedRule,
    /// Per-factor rank distributions; absent factors use the default bell shape.
    #[serde(default)]
    pub factors: BTreeMap<Field, FactorDistribution>,
    /// Exact number of records with one required factor blanked.
    #[serde(default)]
    pub missing: usize,
    /// Exact number of records with a physically inconsistent value.
    #[serde(default)]
    pub inconsistent: usize,
}

fn default_class_weights() -> [f64; NUM_RATINGS] {
    let total: f64 = DEFAULT_CLASS_COUNTS.iter().sum();
    DEFAULT_CLASS_COUNTS.map(|c| c / total)
}

impl GenSpec {
    pub fn new(n: usize, seed: u64) -> Self {
        GenSpec {
            n,
            seed,
            class_weights: default_class_weights(),
            noise: 0.0,
            rule: PlantedRule::default(),
            factors: BTreeMap::new(),
            missing: 0,
            inconsistent: 0,
        }
    }

    /// Diameter fixed at 8 in and seismic zone fixed at Zone 1, every other
    /// factor varying. The zone choice is arbitrary.
    pub fn constant_diameter_and_zone(n: usize, seed: u64) -> Self {
        GenSpec::new(n, seed)
            .with_factor(Field::DiameterInches, FactorDistribution::Constant { constant: 5 })
            .with_factor(Field::SeismicZone, FactorDistribution::Constant { constant: 1 })
    }

    /// Only structural and O&M scores vary (uniformly); the label is their
    /// rounded mean, so 25 feature cells determine the rating exactly.
    pub fn separable(n: usize, seed: u64) -> Self {
        let mut spec = GenSpec::new(n, seed);
        spec.rule = PlantedRule { structural: 0.5, om: 0.5, repair: 0.0 };
        for field in Field::FACTORS {
            let dist = match field {
                Field::StructuralScore | Field::OmScore => {
                    FactorDistribution::Weights { weights: [0.2; 5] }
                }
                Field::DiameterInches => FactorDistribution::Constant { constant: 5 },
                _ => FactorDistribution::Constant { constant: 1 },
            };
            spec.factors.insert(field, dist);
        }
        // class mix implied by a uniform 5x5 grid of (structural, om)
        spec.class_weights = [1.0 / 25.0, 5.0 / 25.0, 9.0 / 25.0, 7.0 / 25.0, 3.0 / 25.0];
        spec
    }

    pub fn with_factor(mut self, field: Field, dist: FactorDistribution) -> Self {
        self.factors.insert(field, dist);
        self
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("generator spec: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn distribution(&self, field: Field) -> FactorDistribution {
        self.factors.get(&field).cloned().unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InfeasibleSpec("n must be positive".into()));
        }
        check_weights(&self.class_weights, "class_weights")?;
        if !(0.0..1.0).contains(&self.noise) {
            return Err(Error::InfeasibleSpec(format!("noise {} outside [0, 1)", self.noise)));
        }
        if self.missing + self.inconsistent >= self.n {
            return Err(Error::InfeasibleSpec(format!(
                "{} missing + {} inconsistent defects leave no clean records out of {}",
                self.missing, self.inconsistent, self.n
            )));
        }
        for (field, dist) in &self.factors {
            if !Field::FACTORS.contains(field) {
                return Err(Error::InfeasibleSpec(format!("{field} is not a factor")));
            }
            dist.validate(*field)?;
        }
        Ok(())
    }
}

/// Exact per-class counts summing to `n` (largest remainder, ties to the smaller rating).
pub fn class_counts(weights: &[f64; NUM_RATINGS], n: usize) -> [usize; NUM_RATINGS] {
    let exact = weights.map(|w| w * n as f64);
    let mut counts = exact.map(|e| e.floor() as usize);
    let mut order: Vec<usize> = (0..NUM_RATINGS).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut remaining = n.saturating_sub(counts.iter().sum());
    for &c in order.iter().cycle().take(NUM_RATINGS * (remaining + 1)) {
        if remaining == 0 {
            break;
        }
        if weights[c] > 0.0 {
            counts[c] += 1;
            remaining -= 1;
        }
    }
    counts
}

/// Generated records plus what the generator knows about them.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub records: Vec<PipeRecord>,
    /// Rule label before noise, per record.
    pub clean_labels: Vec<Rating>,
    pub flipped: Vec<usize>,
    pub missing: Vec<usize>,
    pub inconsistent: Vec<usize>,
}

pub fn generate(spec: &GenSpec) -> Result<Vec<PipeRecord>> {
    Ok(generate_with_truth(spec)?.records)
}

pub fn generate_with_truth(spec: &GenSpec) -> Result<Generated> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // hydraulic cells grouped by the rating the rule assigns them
    let s_dist = spec.distribution(Field::StructuralScore);
    let o_dist = spec.distribution(Field::OmScore);
    let r_dist = spec.distribution(Field::RepairHistory);
    let mut cells: Vec<Vec<(HydraulicRanks, f64)>> = vec![Vec::new(); NUM_RATINGS];
    for s in 1..=5u8 {
        for o in 1..=5u8 {
            for r in 1..=5u8 {
                let w = s_dist.weight(s) * o_dist.weight(o) * r_dist.weight(r);
                if w > 0.0 {
                    cells[spec.rule.rate(s, o, r).index()].push(((s, o, r), w));
                }
            }
        }
    }

    let counts = class_counts(&spec.class_weights, spec.n);
    for (c, &count) in counts.iter().enumerate() {
        if count > 0 && cells[c].is_empty() {
            return Err(Error::InfeasibleSpec(format!(
                "rating {} requested but no hydraulic ranks map to it under the rule",
                c + 1
            )));
        }
    }
    let mut targets: Vec<Rating> = counts
        .iter()
        .enumerate()
        .flat_map(|(c, &k)| std::iter::repeat_n(Rating::from_index(c), k))
        .collect();
    targets.shuffle(&mut rng);

    let mut records = Vec::with_capacity(spec.n);
    for (i, &target) in targets.iter().enumerate() {
        let (s, o, r) = pick_weighted(&cells[target.index()], &mut rng);
        let mut rank = |field: Field| spec.distribution(field).sample(&mut rng);
        let age = rank(Field::PipeAgeYears);
        let material = rank(Field::Material);
        let diameter = rank(Field::DiameterInches);
        let shape = rank(Field::Shape);
        let depth = rank(Field::DepthCategory);
        let soil = rank(Field::SoilType);
        let loading = rank(Field::Loading);
        let waste = rank(Field::WasteType);
        let zone = rank(Field::SeismicZone);

        let mut rec = PipeRecord::new(format!("{}", 1000 + i));
        rec.pipe_age_years = Some(age_years(age, &mut rng));
        rec.material = Some(pick(material_names(material), &mut rng).to_string());
        rec.diameter_inches = Some(diameter_inches(diameter));
        rec.shape = Some(SHAPES[usize::from(shape - 1)].to_string());
        rec.depth_category = Some(DepthBand::ALL[usize::from(depth - 1)].label().to_string());
        rec.soil_type = Some(SOILS[usize::from(soil - 1)].to_string());
        rec.loading = Some(LOADINGS[usize::from(loading - 1)].to_string());
        rec.waste_type = Some(WASTES[usize::from(waste - 1)].to_string());
        rec.seismic_zone = Some(format!("Zone {zone}"));
        rec.structural_score = Some(s);
        rec.om_score = Some(o);
        rec.repair_history = Some(REPAIRS[usize::from(r - 1)].to_string());
        rec.total_length_feet = Some(f64::from(rng.gen_range(20u32..=600)));
        rec.comprehensive_rating = Some(target);
        records.push(rec);
    }

    // label noise: exact count, each flipped to a uniformly chosen other rating
    let n_flip = (spec.noise * spec.n as f64).round() as usize;
    let mut order: Vec<usize> = (0..spec.n).collect();
    order.shuffle(&mut rng);
    let mut flipped: Vec<usize> = order[..n_flip].to_vec();
    flipped.sort_unstable();
    for &i in &flipped {
        let current = targets[i].index();
        let mut other = rng.gen_range(0..NUM_RATINGS - 1);
        if other >= current {
            other += 1;
        }
        records[i].comprehensive_rating = Some(Rating::from_index(other));
    }

    // defects on disjoint record sets
    order.shuffle(&mut rng);
    let mut missing: Vec<usize> = order[..spec.missing].to_vec();
    let mut inconsistent: Vec<usize> = order[spec.missing..spec.missing + spec.inconsistent].to_vec();
    missing.sort_unstable();
    inconsistent.sort_unstable();
    for &i in &missing {
        let field = *Field::FACTORS.choose(&mut rng).expect("factors");
        blank(&mut records[i], field);
    }
    for &i in &inconsistent {
        let rec = &mut records[i];
        match rng.gen_range(0..4) {
            0 => rec.total_length_feet = Some(0.0),
            1 => rec.total_length_feet = Some(-f64::from(rng.gen_range(1u32..=500))),
            2 => rec.depth_category = Some("See remarks".to_string()),
            _ => rec.pipe_age_years = Some(-f64::from(rng.gen_range(1u32..=30))),
        }
    }

    Ok(Generated {
        records,
        clean_labels: targets,
        flipped,
        missing,
        inconsistent,
    })
}

/// Structural, O&M and repair-history ranks.
type HydraulicRanks = (u8, u8, u8);

fn pick_weighted<T: Copy>(items: &[(T, f64)], rng: &mut ChaCha8Rng) -> T {
    let total: f64 = items.iter().map(|(_, w)| w).sum();
    let mut u = rng.gen::<f64>() * total;
    for &(item, w) in items {
        if u < w {
            return item;
        }
        u -= w;
    }
    items.last().expect("non-empty").0
}

fn pick<'a>(options: &[&'a str], rng: &mut ChaCha8Rng) -> &'a str {
    options.choose(rng).copied().expect("non-empty")
}

fn blank(rec: &mut PipeRecord, field: Field) {
    match field {
        Field::PipeAgeYears => rec.pipe_age_years = None,
        Field::Material => rec.material = None,
        Field::DiameterInches => rec.diameter_inches = None,
        Field::Shape => rec.shape = None,
        Field::DepthCategory => rec.depth_category = None,
        Field::SoilType => rec.soil_type = None,
        Field::Loading => rec.loading = None,
        Field::WasteType => rec.waste_type = None,
        Field::SeismicZone => rec.seismic_zone = None,
        Field::StructuralScore => rec.structural_score = None,
        Field::OmScore => rec.om_score = None,
        Field::RepairHistory => rec.repair_history = None,
        Field::PipeId | Field::TotalLengthFeet | Field::ComprehensiveRating => {}
    }
}

fn age_years(rank: u8, rng: &mut ChaCha8Rng) -> f64 {
    let (lo, hi) = match rank {
        1 => (0, 9),
        2 => (10, 24),
        3 => (25, 39),
        4 => (40, 49),
        _ => (50, 89),
    };
    f64::from(rng.gen_range(lo..=hi))
}

fn diameter_inches(rank: u8) -> f64 {
    match rank {
        5 => 8.0,
        4 => 15.0,
        3 => 24.0,
        2 => 36.0,
        _ => 54.0,
    }
}

fn material_names(rank: u8) -> &'static [&'static str] {
    match rank {
        1 => &["Vitrified Clay Pipe", "Polyvinyl Chloride", "Polyethylene", "Reinforced Plastic Pipe"],
        2 => &["Cast Iron", "Ductile Iron Pipe"],
        3 => &["Reinforced Concrete Pipe", "Concrete Pipe (Non-Reinforced)", "Concrete Segments"],
        4 => &["Not Known"],
        _ => &["Other"],
    }
}

const SHAPES: [&str; 5] = ["Circular", "Oval", "Horseshoe", "Semielliptical", "Arch"];
const SOILS: [&str; 5] = [
    "Low corrosivity",
    "Low to moderate corrosivity",
    "Moderate corrosivity",
    "Moderate-to-high corrosivity",
    "High corrosivity",
];
const LOADINGS: [&str; 5] = [
    "No traffic to very light traffic",
    "Light traffic",
    "Medium traffic",
    "Moderate to heavy traffic",
    "Heavy traffic",
];
const WASTES: [&str; 5] = [
    "Mildly corrosive",
    "Mildly to Moderate corrosive",
    "Moderately corrosive",
    "Moderately to highly corrosive",
    "Highly corrosive",
];
const REPAIRS: [&str; 5] = [
    "No maintenance",
    "Minor maintenance",
    "Moderate maintenance",
    "Significant maintenance",
    "Extreme maintenance",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_counts_exact() {
        let counts = class_counts(&default_class_weights(), 310);
        assert_eq!(counts, [25, 65, 92, 79, 49]);
        let counts = class_counts(&[0.2; 5], 7);
        assert_eq!(counts.iter().sum::<usize>(), 7);
        assert!(counts.iter().all(|&c| c == 1 || c == 2));
    }

    #[test]
    fn infeasible_specs() {
        let mut spec = GenSpec::new(10, 1);
        spec.missing = 6;
        spec.inconsistent = 4;
        assert!(matches!(generate(&spec), Err(Error::InfeasibleSpec(_))));
        let mut spec = GenSpec::new(10, 1);
        spec.noise = 1.0;
        assert!(generate(&spec).is_err());
        let mut spec = GenSpec::new(10, 1);
        spec.class_weights = [0.5, 0.5, 0.5, 0.0, 0.0];
        assert!(generate(&spec).is_err());
        // rule cannot produce rating 5 when every hydraulic rank is 1
        let spec = GenSpec::new(10, 1)
            .with_factor(Field::StructuralScore, FactorDistribution::Constant { constant: 1 })
            .with_factor(Field::OmScore, FactorDistribution::Constant { constant: 1 })
            .with_factor(Field::RepairHistory, FactorDistribution::Constant { constant: 1 });
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn noise_flips_exact_count_to_other_ratings() {
        let mut spec = GenSpec::new(200, 3);
        spec.noise = 0.1;
        let g = generate_with_truth(&spec).unwrap();
        assert_eq!(g.flipped.len(), 20);
        let changed = g
            .records
            .iter()
            .zip(&g.clean_labels)
            .filter(|(r, l)| r.comprehensive_rating != Some(**l))
            .count();
        assert_eq!(changed, 20);
    }

    #[test]
    fn spec_toml_round_trip() {
        let spec = GenSpec::separable(200, 9);
        let text = spec.to_toml_string().unwrap();
        assert_eq!(GenSpec::from_toml_str(&text).unwrap(), spec);
    }

    #[test]
    fn planted_rule_labels() {
        let g = generate_with_truth(&GenSpec::new(300, 5)).unwrap();
        let rule = PlantedRule::default();
        for r in &g.records {
            let expected = rule.rate(
                r.structural_score.unwrap(),
                r.om_score.unwrap(),
                crate::encoding::FactorSchema::default_schema()
                    .encode_ranks(r)
                    .unwrap()
                    .0[11],
            );
            assert_eq!(r.comprehensive_rating, Some(expected));
        }
    }
}
