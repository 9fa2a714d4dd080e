//! `benchmark`: sweep (method, dataset, ratio) combinations, time the
//! reconstructions, and emit the raw-results CSV plus a full run record.

use std::fs;
use std::path::PathBuf;

use csbench::data::{Dataset, DatasetSpec};
use csbench::loaders::load_dataset;
use csbench::metrics::{psnr, ssim, ThroughputClock};
use csbench::scoring::{write_raw_csv, RawResultCell};
use csbench::sensing::{ratio_to_m, sense_image, SensingMatrix};
use csbench::solvers::{find_method, reconstruct};
use csbench::{Error, Result};

use crate::config::{combo_seed, RunConfig};
use crate::record::{AggregateRow, ImageRow, RunRecord};

pub struct BenchmarkOutcome {
    /// Images that failed to decode or reconstruct.
    pub skipped: usize,
    /// Decode attempts plus reconstruction attempts.
    pub attempts: usize,
}

pub fn run(
    cfg: &RunConfig,
    datasets: &[(Dataset, PathBuf)],
    methods: &[String],
) -> Result<BenchmarkOutcome> {
    // Reject before any dataset is touched: every method must exist and be
    // runnable here.
    let mut method_ids = Vec::new();
    for name in methods {
        let descriptor = find_method(name).ok_or_else(|| Error::UnknownMethod(name.clone()))?;
        if !descriptor.executable {
            return Err(Error::UnsupportedMethod(descriptor.name.to_string()));
        }
        method_ids.push(descriptor.name);
    }
    let solver_base = cfg.solver_config()?;

    let mut record = RunRecord::default();
    record.config = config_snapshot(cfg, datasets, &method_ids);

    let mut skipped = 0usize;
    let mut attempts = 0usize;
    let mut csv_rows: Vec<(String, RawResultCell)> = Vec::new();

    for (dataset, path) in datasets {
        let spec = DatasetSpec::builtin(*dataset);
        let load = load_dataset(path, &spec, cfg.limit)?;
        for (file, message) in &load.failures {
            eprintln!("skipping {}: {message}", file.display());
        }
        attempts += load.failures.len();
        skipped += load.failures.len();
        let images = &load.images;
        let n = spec.signal_len();

        for method in &method_ids {
            for &ratio in &cfg.ratios {
                let m = ratio_to_m(n, ratio as f64)?;
                let seed = combo_seed(cfg.seed, dataset.id(), ratio);
                let matrix = SensingMatrix::build(seed, m, n, cfg.sensing)?;
                let mut solver_cfg = solver_base.clone();
                solver_cfg.seed = seed;

                let mut clock = ThroughputClock::new();
                let mut kept = Vec::new();
                for (index, image) in images.iter().enumerate() {
                    attempts += 1;
                    let group = sense_image(image, &matrix)?;
                    let solved = clock.time(|| {
                        reconstruct(method, &group, &matrix, spec.height, spec.width, &solver_cfg)
                    });
                    match solved {
                        Ok(result) => kept.push((index, image, result)),
                        Err(e) => {
                            skipped += 1;
                            eprintln!(
                                "skipping {}[{index}] at ratio {ratio} under {method}: {e}",
                                dataset.id()
                            );
                            record.failures.push((
                                method.to_string(),
                                dataset.id().to_string(),
                                ratio,
                                index,
                                e.to_string(),
                            ));
                        }
                    }
                }
                if kept.is_empty() {
                    return Err(Error::EmptyDataset(format!(
                        "every image failed for {method} on {} at ratio {ratio}",
                        dataset.id()
                    )));
                }

                // Quality metrics happen outside the timed section; the
                // clock charges solves only.
                let mut psnr_sum = 0.0;
                let mut ssim_sum = 0.0;
                for (index, image, result) in &kept {
                    let p = psnr(&result.image, image)?;
                    let s = ssim(&result.image, image)?;
                    psnr_sum += p;
                    ssim_sum += s;
                    record.images.push(ImageRow {
                        method: method.to_string(),
                        dataset: dataset.id().to_string(),
                        ratio,
                        index: *index,
                        psnr: p,
                        ssim: s,
                        iterations: result.iterations_used,
                    });
                    if cfg.verbose {
                        println!(
                            "{method} {} ratio {ratio} image {index}: psnr {p:.3} ssim {s:.4} iters {}",
                            dataset.id(),
                            result.iterations_used
                        );
                    }
                }
                let count = kept.len();
                let mean_psnr = psnr_sum / count as f64;
                let mean_ssim = ssim_sum / count as f64;
                let secs = clock.elapsed().as_secs_f64();
                if secs <= 0.0 {
                    return Err(Error::TimerResolution(format!(
                        "{count} reconstructions finished in zero measurable time"
                    )));
                }
                let speed = count as f64 / secs;

                println!(
                    "{method} {} ratio {ratio}: {count} image(s), psnr {mean_psnr:.3}, ssim {mean_ssim:.4}, {speed:.3} img/s",
                    dataset.id()
                );
                csv_rows.push((
                    method.to_string(),
                    RawResultCell::new(*dataset, ratio, mean_psnr, mean_ssim, speed)?,
                ));
                record.results.push(AggregateRow {
                    method: method.to_string(),
                    dataset: dataset.id().to_string(),
                    ratio,
                    images: count,
                    psnr: mean_psnr,
                    ssim: mean_ssim,
                    speed,
                    skipped: images.len() - count,
                });
            }
        }
    }

    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let csv_path = cfg.output_dir.join("results.csv");
    write_raw_csv(&csv_path, &csv_rows)?;
    let record_path = cfg.output_dir.join("run_record.txt");
    record.write(&record_path)?;
    println!(
        "wrote {} result row(s) to {} and the run record to {}",
        csv_rows.len(),
        csv_path.display(),
        record_path.display()
    );

    Ok(BenchmarkOutcome { skipped, attempts })
}

fn config_snapshot(
    cfg: &RunConfig,
    datasets: &[(Dataset, PathBuf)],
    methods: &[&'static str],
) -> Vec<(String, String)> {
    let mut snapshot = vec![
        ("seed".to_string(), cfg.seed.to_string()),
        ("sensing".to_string(), cfg.sensing.id().to_string()),
        ("methods".to_string(), methods.join(",")),
        (
            "datasets".to_string(),
            datasets
                .iter()
                .map(|(d, p)| format!("{}={}", d.id(), p.display()))
                .collect::<Vec<_>>()
                .join(","),
        ),
        (
            "ratios".to_string(),
            cfg.ratios
                .iter()
                .map(u32::to_string)
                .collect::<Vec<_>>()
                .join(","),
        ),
        ("limit".to_string(), cfg.limit.to_string()),
        ("default".to_string(), cfg.use_defaults.to_string()),
    ];
    for (key, value) in cfg.specifics.iter() {
        snapshot.push((format!("specifics.{key}"), value.to_string()));
    }
    snapshot
}

/// Parse a `name=path` dataset argument against the six benchmark datasets.
pub fn parse_dataset_arg(arg: &str) -> Result<(Dataset, PathBuf)> {
    let (name, path) = arg.split_once('=').ok_or_else(|| {
        Error::Config(format!(
            "dataset argument `{arg}` must look like name=path, e.g. mnist=data/mnist"
        ))
    })?;
    let dataset = Dataset::parse(name)
        .ok_or_else(|| Error::Config(format!("unknown dataset `{name}`")))?;
    Ok((dataset, PathBuf::from(path)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_arguments_parse_names_and_paths() {
        let (d, p) = parse_dataset_arg("mnist=/tmp/mnist").unwrap();
        assert_eq!(d, Dataset::Mnist);
        assert_eq!(p, PathBuf::from("/tmp/mnist"));
        let (d, _) = parse_dataset_arg("CIFAR10(Gray)=x").unwrap();
        assert_eq!(d, Dataset::Cifar10Gray);
        assert!(parse_dataset_arg("mnist").is_err());
        assert!(parse_dataset_arg("volcano=x").is_err());
    }
}
