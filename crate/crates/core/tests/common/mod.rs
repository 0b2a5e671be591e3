//! Reference implementations and frozen reference values shared by the
//! integration tests. Nothing here calls into the code paths it checks.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use pipe_rating::encoding::{EncodedDataset, FeatureVector};
use pipe_rating::Rating;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn dataset(rows: &[(Vec<u8>, u8)]) -> EncodedDataset {
    let d = rows.first().map_or(0, |r| r.0.len());
    EncodedDataset {
        factors: (0..d).map(|j| format!("f{j}")).collect(),
        vectors: rows
            .iter()
            .enumerate()
            .map(|(i, (ranks, label))| FeatureVector {
                pipe_id: format!("p{i}"),
                ranks: ranks.clone(),
                label: Rating::new(i64::from(*label)).unwrap(),
            })
            .collect(),
        notes: vec![],
    }
}

/// Majority vote over the `k` nearest training points by exact integer
/// squared distance, ties in distance broken by lower training index.
/// Label ties go to the class with the closest member, then the smaller rating.
pub fn brute_force_knn(train: &[(Vec<u8>, u8)], query: &[u8], k: usize, skip: Option<usize>) -> u8 {
    let mut cands: Vec<(i64, usize)> = Vec::new();
    for (i, (x, _)) in train.iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        let d2: i64 = x
            .iter()
            .zip(query)
            .map(|(&a, &b)| {
                let t = i64::from(a) - i64::from(b);
                t * t
            })
            .sum();
        cands.push((d2, i));
    }
    // selection by repeated minimum
    let mut chosen: Vec<(i64, usize)> = Vec::new();
    for _ in 0..k {
        let (pos, _) = cands.iter().enumerate().min_by_key(|(_, c)| **c).unwrap();
        chosen.push(cands.remove(pos));
    }
    let mut tally: BTreeMap<u8, (usize, i64)> = BTreeMap::new();
    for (d2, i) in chosen {
        let e = tally.entry(train[i].1).or_insert((0, i64::MAX));
        e.0 += 1;
        e.1 = e.1.min(d2);
    }
    let best = tally.values().map(|v| v.0).max().unwrap();
    tally
        .iter()
        .filter(|(_, v)| v.0 == best)
        .min_by_key(|(label, v)| (v.1, **label))
        .map(|(label, _)| *label)
        .unwrap()
}

/// Naive Bayes posterior argmax by direct products of counted frequencies.
pub fn naive_bayes_oracle(train: &[(Vec<u8>, u8)], query: &[u8], alpha: f64) -> u8 {
    let n = train.len() as f64;
    let mut best = (f64::NEG_INFINITY, 0u8);
    for class in 1..=5u8 {
        let members: Vec<&Vec<u8>> = train.iter().filter(|(_, l)| *l == class).map(|(x, _)| x).collect();
        if members.is_empty() {
            continue;
        }
        let mut p = members.len() as f64 / n;
        for (j, &q) in query.iter().enumerate() {
            let hits = members.iter().filter(|x| x[j] == q).count() as f64;
            p *= (hits + alpha) / (members.len() as f64 + 5.0 * alpha);
        }
        // ties (up to rounding) keep the smaller rating
        if p > best.0 * (1.0 + 1e-9) {
            best = (p, class);
        }
    }
    best.1
}

/// One-vs-rest counts by scanning every cell (rows predicted, columns actual).
pub fn one_vs_rest(counts: &[[u64; 5]; 5], class: usize) -> (u64, u64, u64, u64) {
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (p, row) in counts.iter().enumerate() {
        for (a, &v) in row.iter().enumerate() {
            match (p == class, a == class) {
                (true, true) => tp += v,
                (true, false) => fp += v,
                (false, true) => fn_ += v,
                (false, false) => tn += v,
            }
        }
    }
    (tp, fp, fn_, tn)
}

/// Published confusion matrices, rows predicted 1..5, columns actual 1..5.
pub const KNN_MATRIX: [[u64; 5]; 5] = [
    [22, 10, 0, 0, 0],
    [3, 46, 5, 6, 0],
    [0, 7, 70, 12, 5],
    [0, 0, 9, 51, 6],
    [0, 2, 8, 10, 38],
];
pub const AHP_MATRIX: [[u64; 5]; 5] = [
    [3, 12, 21, 17, 4],
    [8, 1, 17, 27, 12],
    [4, 16, 18, 22, 21],
    [6, 24, 15, 6, 11],
    [4, 12, 21, 7, 1],
];
pub const NBC_MATRIX: [[u64; 5]; 5] = [
    [12, 13, 11, 10, 4],
    [3, 25, 7, 6, 6],
    [4, 9, 48, 7, 1],
    [2, 9, 15, 49, 7],
    [4, 10, 11, 7, 30],
];

/// Published per-class K-NN scores: accuracy (%), precision, recall, F1.
pub const KNN_CLASS_SCORES: [(f64, f64, f64, f64); 5] = [
    (95.81, 0.69, 0.88, 0.77),
    (89.35, 0.77, 0.71, 0.74),
    (85.16, 0.74, 0.76, 0.75),
    (86.13, 0.77, 0.65, 0.70),
    (90.00, 0.66, 0.78, 0.71),
];

/// A Shapiro-Wilk reference case: sample with W and p from an independent
/// implementation (scipy.stats.shapiro, same AS R94 algorithm).
pub struct SwCase {
    pub name: &'static str,
    pub data: Vec<f64>,
    pub w: f64,
    pub p: f64,
}

pub fn sw_reference_cases() -> Vec<SwCase> {
    let mut tied = vec![1.0; 3];
    tied.extend([2.0; 5]);
    tied.extend([3.0; 6]);
    tied.extend([4.0; 5]);
    tied.extend([5.0; 2]);
    vec![
        SwCase {
            name: "weights11",
            data: vec![148., 154., 158., 160., 161., 162., 166., 170., 182., 195., 236.],
            w: 0.7888146948631716,
            p: 0.006703814061898823,
        },
        SwCase { name: "n3", data: vec![1., 2., 4.], w: 0.9642857142857142, p: 0.6368868450289689 },
        SwCase {
            name: "n4",
            data: vec![1.5, 2.0, 2.25, 7.0],
            w: 0.7423873014064543,
            p: 0.03269568207980573,
        },
        SwCase {
            name: "n5",
            data: vec![0.3, 1.1, 1.2, 2.9, 3.0],
            w: 0.8716359946096498,
            p: 0.2731115490078925,
        },
        SwCase {
            name: "ramp20",
            data: (1..=20).map(f64::from).collect(),
            w: 0.9603751832429884,
            p: 0.5513717457916771,
        },
        SwCase {
            name: "mod30",
            data: (0..30u32)
                .map(|i| f64::from((i * 7919) % 101) / 10.0 + f64::from(i).sqrt())
                .collect(),
            w: 0.9865247735469532,
            p: 0.9602194989383699,
        },
        SwCase {
            name: "exp40",
            data: (0..40).map(|i| (f64::from(i) / 10.0).exp()).collect(),
            w: 0.8158866751998577,
            p: 1.4776616148801702e-05,
        },
        SwCase {
            name: "sin200",
            data: (0..200).map(|i| (1.3 * f64::from(i)).sin() + 0.1 * f64::from(i).sqrt()).collect(),
            w: 0.9699460252725607,
            p: 0.0002779450949130708,
        },
        SwCase { name: "tied21", data: tied, w: 0.9252331426773842, p: 0.11045475476403466 },
        SwCase {
            name: "cubic600",
            data: (0..600).map(|i| ((f64::from(i) - 300.0) / 100.0).powi(3)).collect(),
            w: 0.938383954701058,
            p: 4.767076533889208e-15,
        },
    ]
}

/// Upper-half coefficients (largest first) from the same reference implementation.
pub fn sw_reference_coefficients() -> Vec<(usize, Vec<f64>)> {
    vec![
        (3, vec![std::f64::consts::FRAC_1_SQRT_2]),
        (4, vec![0.6872642857123628, 0.16633641087950596]),
        (5, vec![0.6646392606527188, 0.24136000745568295]),
        (6, vec![0.6429712301028844, 0.28071248552400807, 0.08825246586309793]),
        (
            10,
            vec![
                0.5737147069126667,
                0.32897004608897956,
                0.21434901786716598,
                0.12279062529948592,
                0.040088710708505344,
            ],
        ),
        (
            11,
            vec![
                0.560025328365286,
                0.3314986760719882,
                0.22601146146156412,
                0.14329023190029674,
                0.06976380208847383,
            ],
        ),
        (
            25,
            vec![
                0.44179981558392584,
                0.31084122426426114,
                0.25447583884427316,
                0.2150988204835539,
                0.18254731756716505,
                0.15415701112168323,
                0.12852819458138504,
                0.10481994681265919,
                0.08247628722920672,
                0.06110027884949527,
                0.04038857433587985,
                0.020093702257399468,
            ],
        ),
    ]
}
