//! Structured text record of a benchmark run: the configuration snapshot,
//! one aggregate row per (method, dataset, ratio) combination, and the
//! per-image rows those aggregates were averaged from.

use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use csbench::{Error, Result};

/// Aggregate row for one benchmark combination.
#[derive(Debug, Clone)]
pub struct AggregateRow {
    pub method: String,
    pub dataset: String,
    pub ratio: u32,
    /// Successfully reconstructed images.
    pub images: usize,
    pub psnr: f64,
    pub ssim: f64,
    pub speed: f64,
    pub skipped: usize,
}

/// Per-image row underneath an aggregate.
#[derive(Debug, Clone)]
pub struct ImageRow {
    pub method: String,
    pub dataset: String,
    pub ratio: u32,
    pub index: usize,
    pub psnr: f64,
    pub ssim: f64,
    pub iterations: usize,
}

#[derive(Debug, Default)]
pub struct RunRecord {
    /// Key/value snapshot of the effective configuration.
    pub config: Vec<(String, String)>,
    pub results: Vec<AggregateRow>,
    pub images: Vec<ImageRow>,
    /// Per-image failures as `(method, dataset, ratio, index, message)`.
    pub failures: Vec<(String, String, u32, usize, String)>,
}

impl RunRecord {
    /// Write the record. The format is line-oriented: `key = value`
    /// preamble, then `[config]`, `[results]`, `[images]` and `[failures]`
    /// sections with one CSV-style row per line.
    pub fn write(&self, path: &Path) -> Result<()> {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut out = String::from("# benchmark run record\n");
        out.push_str(&format!("version = {}\n", env!("CARGO_PKG_VERSION")));
        out.push_str(&format!("timestamp = {timestamp}\n"));

        out.push_str("\n[config]\n");
        for (key, value) in &self.config {
            out.push_str(&format!("{key} = {value}\n"));
        }

        out.push_str("\n[results]\n");
        out.push_str("method,dataset,ratio,images,psnr,ssim,speed,skipped\n");
        for r in &self.results {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.method, r.dataset, r.ratio, r.images, r.psnr, r.ssim, r.speed, r.skipped
            ));
        }

        out.push_str("\n[images]\n");
        out.push_str("method,dataset,ratio,index,psnr,ssim,iterations\n");
        for r in &self.images {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.method, r.dataset, r.ratio, r.index, r.psnr, r.ssim, r.iterations
            ));
        }

        if !self.failures.is_empty() {
            out.push_str("\n[failures]\n");
            out.push_str("method,dataset,ratio,index,error\n");
            for (method, dataset, ratio, index, message) in &self.failures {
                let message = message.replace(['\n', ','], " ");
                out.push_str(&format!("{method},{dataset},{ratio},{index},{message}\n"));
            }
        }

        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_sections_and_aggregates_are_readable_back() {
        let record = RunRecord {
            config: vec![("seed".into(), "7".into())],
            results: vec![AggregateRow {
                method: "tval3".into(),
                dataset: "mnist".into(),
                ratio: 2,
                images: 2,
                psnr: 41.5,
                ssim: 0.95,
                speed: 3.0,
                skipped: 0,
            }],
            images: vec![
                ImageRow {
                    method: "tval3".into(),
                    dataset: "mnist".into(),
                    ratio: 2,
                    index: 0,
                    psnr: 41.0,
                    ssim: 0.94,
                    iterations: 60,
                },
                ImageRow {
                    method: "tval3".into(),
                    dataset: "mnist".into(),
                    ratio: 2,
                    index: 1,
                    psnr: 42.0,
                    ssim: 0.96,
                    iterations: 61,
                },
            ],
            failures: vec![("tval3".into(), "mnist".into(), 2, 5, "diverged, badly".into())],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("record.txt");
        record.write(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("[config]\nseed = 7\n"), "{text}");
        assert!(text.contains("tval3,mnist,2,2,41.5,0.95,3,0"), "{text}");
        assert!(text.contains("tval3,mnist,2,1,42,0.96,61"), "{text}");
        // Commas inside failure messages are flattened to keep rows parseable.
        assert!(text.contains("tval3,mnist,2,5,diverged  badly"), "{text}");

        // The aggregate PSNR is the mean of its per-image rows.
        let mean = (41.0 + 42.0) / 2.0;
        assert!((record.results[0].psnr - mean).abs() < 1e-9);
    }
}
