//! Scores computed from the bundled reference results must reproduce the
//! values frozen by an independent implementation of the aggregation
//! arithmetic, digit for digit within float tolerance.

use std::path::PathBuf;

use csbench::scoring::{compute_score, parse_raw_csv, rank_methods, WeightScheme};

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/reference_results.csv")
}

/// (method id, speed score, accuracy score, total) frozen from an
/// independent reimplementation of the normalizers and weighted sum.
const EXPECTED: [(&str, f64, f64, f64); 10] = [
    ("ldamp", 30.2517957862, 17.2077169007, 47.4595126869),
    ("istanet", 30.0244524465, 20.6894978740, 50.7139503205),
    ("csgan", 32.5773059887, 19.0336315840, 51.6109375728),
    ("lapran", 32.6931690576, 23.6044450234, 56.2976140810),
    ("csgm", 4.7481922020, 13.0685527669, 17.8167449688),
    ("reconnet", 37.0000689932, 19.1497834562, 56.1498524494),
    ("tval3", 18.4305944443, 18.9222688326, 37.3528632768),
    ("l1", 3.7758866431, 19.6871719331, 23.4630585762),
    ("damp", 2.3531193995, 21.8344905672, 24.1876099666),
    ("nlrcs", 1.6873431169, 20.3548478112, 22.0421909281),
];

#[test]
fn reference_tables_score_to_the_frozen_values() {
    let tables = parse_raw_csv(&fixture()).unwrap();
    assert_eq!(tables.len(), 10);
    let scheme = WeightScheme::default();
    for (i, table) in tables.iter().enumerate() {
        let (name, speed, accuracy, total) = EXPECTED[i];
        assert_eq!(table.method, name, "method order follows first appearance");
        let score = compute_score(table, &scheme).unwrap();
        assert!(
            (score.speed_score - speed).abs() < 1e-6,
            "{name}: speed {} vs {speed}",
            score.speed_score
        );
        assert!(
            (score.accuracy_score - accuracy).abs() < 1e-6,
            "{name}: accuracy {} vs {accuracy}",
            score.accuracy_score
        );
        assert!(
            (score.total - total).abs() < 1e-6,
            "{name}: total {} vs {total}",
            score.total
        );
    }
}

#[test]
fn reference_ranking_is_reproduced() {
    let tables = parse_raw_csv(&fixture()).unwrap();
    let scheme = WeightScheme::default();
    let scores: Vec<_> = tables
        .iter()
        .map(|t| (t.method.clone(), compute_score(t, &scheme).unwrap()))
        .collect();
    let ranked = rank_methods(&scores);
    let order: Vec<&str> = ranked.iter().map(|(m, _)| m.as_str()).collect();
    assert_eq!(
        order,
        vec![
            "lapran", "reconnet", "csgan", "istanet", "ldamp", "tval3", "damp", "l1", "nlrcs",
            "csgm"
        ]
    );
}
