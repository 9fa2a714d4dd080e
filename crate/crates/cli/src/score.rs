//! `score`: aggregate raw-result CSVs into benchmark scores, a ranking, and
//! chart-ready data files.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use csbench::scoring::{
    compute_score_with_audit, parse_raw_csv, parse_weight_scheme, rank_methods, write_audit_csv,
    write_score_report, write_total_histogram, BenchmarkScore, WeightScheme,
};
use csbench::solvers::find_method;
use csbench::{Error, Result};

pub fn run(
    csv_paths: &[PathBuf],
    weights: Option<&Path>,
    out_dir: &Path,
    verbose: bool,
) -> Result<Vec<(String, BenchmarkScore)>> {
    let scheme = match weights {
        Some(path) => parse_weight_scheme(path)?,
        None => WeightScheme::default(),
    };

    let mut scores: Vec<(String, BenchmarkScore)> = Vec::new();
    let mut audits = Vec::new();
    let mut seen = BTreeSet::new();
    for path in csv_paths {
        for table in parse_raw_csv(path)? {
            if !seen.insert(table.method.clone()) {
                return Err(Error::Config(format!(
                    "method `{}` appears in more than one input table",
                    table.method
                )));
            }
            let (score, audit) = compute_score_with_audit(&table, &scheme)?;
            scores.push((table.method.clone(), score));
            audits.push((table.method.clone(), audit));
        }
    }

    let ranked = rank_methods(&scores);
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_score_report(&out_dir.join("scores.csv"), &ranked)?;
    write_total_histogram(&out_dir.join("histogram.csv"), &ranked)?;
    if verbose {
        for (method, audit) in &audits {
            write_audit_csv(&out_dir.join(format!("audit_{method}.csv")), method, audit)?;
        }
    }

    println!("{:<5} {:<12} {:>8} {:>10} {:>8}", "rank", "method", "speed", "accuracy", "total");
    for (i, (method, score)) in ranked.iter().enumerate() {
        let display = find_method(method).map(|d| d.display_name).unwrap_or(method);
        println!(
            "{:<5} {:<12} {:>8.2} {:>10.2} {:>8.2}",
            i + 1,
            display,
            score.speed_score,
            score.accuracy_score,
            score.total
        );
    }
    Ok(ranked)
}
