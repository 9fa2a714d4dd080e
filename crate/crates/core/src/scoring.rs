//! Benchmark score aggregation.
//!
//! A method's raw results form a 30-cell table: six datasets crossed with
//! five compression ratios, each cell holding mean PSNR, mean SSIM and
//! reconstruction speed. Every raw value is normalized onto a common 0-100
//! scale and the 90 normalized values combine in a weighted sum; the weights
//! are exact rationals so weight bookkeeping never drifts.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use num_rational::Ratio;
use num_traits::ToPrimitive;

use crate::data::Dataset;
use crate::error::{Error, Result, TableCellError};
use crate::metrics::PSNR_CEILING;

/// The five benchmark compression ratios `n / m`.
pub const RATIOS: [u32; 5] = [2, 4, 8, 16, 32];

/// The three scored quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    Psnr,
    Ssim,
    Speed,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Psnr, Metric::Ssim, Metric::Speed];

    pub fn id(&self) -> &'static str {
        match self {
            Metric::Psnr => "psnr",
            Metric::Ssim => "ssim",
            Metric::Speed => "speed",
        }
    }
}

/// Map PSNR in dB onto `[10, 100]`: `100 * 10^(v / 48 - 1)`. Exponential in
/// dB so each extra dB multiplies the score by a fixed factor; 48 dB (the
/// metric ceiling) lands exactly on 100 and 0 dB on 10.
pub fn normalize_psnr(v: f64) -> Result<f64> {
    if !(0.0..=PSNR_CEILING).contains(&v) {
        return Err(Error::Precondition(format!(
            "psnr {v} outside [0, {PSNR_CEILING}]"
        )));
    }
    Ok(100.0 * 10f64.powf(v / PSNR_CEILING - 1.0))
}

/// Map SSIM onto `[10, 100]`: `100 * 10^(v - 1)`.
pub fn normalize_ssim(v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Precondition(format!("ssim {v} outside [0, 1]")));
    }
    Ok(100.0 * 10f64.powf(v - 1.0))
}

/// Map speed in images/second onto `[0, 100)`:
/// `100 / (1 + 1 / log10(1 + v))`, with 0 images/second pinned to 0.
/// Logarithmic compression keeps the scale meaningful across methods whose
/// throughputs span five orders of magnitude; 9 img/s scores 50.
pub fn normalize_speed(v: f64) -> Result<f64> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::Precondition(format!(
            "speed {v} must be finite and non-negative"
        )));
    }
    if v == 0.0 {
        return Ok(0.0);
    }
    Ok(100.0 / (1.0 + 1.0 / (1.0 + v).log10()))
}

/// The weighting of datasets, compression ratios and metrics in the final
/// score, stored as exact rationals. Each of the three groups must sum to
/// exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightScheme {
    datasets: BTreeMap<Dataset, Ratio<i64>>,
    ratios: BTreeMap<u32, Ratio<i64>>,
    metrics: BTreeMap<Metric, Ratio<i64>>,
}

impl Default for WeightScheme {
    /// The benchmark's standard weighting: datasets weighted by visual
    /// complexity, ratios doubling in weight as they get harder, and speed
    /// worth as much as both quality metrics together.
    fn default() -> Self {
        let datasets = Dataset::ALL.iter().map(|d| (*d, d.weight())).collect();
        let ratios = RATIOS
            .iter()
            .map(|&r| (r, Ratio::new(r as i64 / 2, 31)))
            .collect();
        let metrics = [
            (Metric::Psnr, Ratio::new(1, 4)),
            (Metric::Ssim, Ratio::new(1, 4)),
            (Metric::Speed, Ratio::new(1, 2)),
        ]
        .into_iter()
        .collect();
        WeightScheme {
            datasets,
            ratios,
            metrics,
        }
    }
}

impl WeightScheme {
    pub fn new(
        datasets: BTreeMap<Dataset, Ratio<i64>>,
        ratios: BTreeMap<u32, Ratio<i64>>,
        metrics: BTreeMap<Metric, Ratio<i64>>,
    ) -> Result<Self> {
        let scheme = WeightScheme {
            datasets,
            ratios,
            metrics,
        };
        scheme.validate()?;
        Ok(scheme)
    }

    fn validate(&self) -> Result<()> {
        let one = Ratio::new(1, 1);
        let zero = Ratio::new(0, 1);
        let check = |name: &str, sum: Ratio<i64>| -> Result<()> {
            if sum != one {
                return Err(Error::Config(format!(
                    "{name} weights must sum to exactly 1, got {sum}"
                )));
            }
            Ok(())
        };
        for d in Dataset::ALL {
            let w = self
                .datasets
                .get(&d)
                .ok_or_else(|| Error::Config(format!("missing dataset weight for {d}")))?;
            if *w <= zero || *w > one {
                return Err(Error::Config(format!("dataset weight for {d} is {w}, outside (0, 1]")));
            }
        }
        for r in RATIOS {
            let w = self
                .ratios
                .get(&r)
                .ok_or_else(|| Error::Config(format!("missing ratio weight for {r}")))?;
            if *w <= zero || *w > one {
                return Err(Error::Config(format!("ratio weight for {r} is {w}, outside (0, 1]")));
            }
        }
        for m in Metric::ALL {
            let w = self
                .metrics
                .get(&m)
                .ok_or_else(|| Error::Config(format!("missing metric weight for {}", m.id())))?;
            if *w <= zero || *w > one {
                return Err(Error::Config(format!(
                    "metric weight for {} is {w}, outside (0, 1]",
                    m.id()
                )));
            }
        }
        if self.datasets.len() != 6 || self.ratios.len() != 5 || self.metrics.len() != 3 {
            return Err(Error::Config(
                "weight scheme has entries outside the 6 datasets / 5 ratios / 3 metrics".into(),
            ));
        }
        check("dataset", self.datasets.values().sum())?;
        check("ratio", self.ratios.values().sum())?;
        check("metric", self.metrics.values().sum())
    }

    pub fn dataset_weight(&self, d: Dataset) -> Ratio<i64> {
        self.datasets[&d]
    }

    pub fn ratio_weight(&self, r: u32) -> Ratio<i64> {
        self.ratios[&r]
    }

    pub fn metric_weight(&self, m: Metric) -> Ratio<i64> {
        self.metrics[&m]
    }
}

/// Parse a weight-scheme file: `[datasets]`, `[ratios]` and `[metrics]`
/// sections of `key = p/q` lines (integers allowed). Fractions keep the
/// scheme exact; decimal weights would defeat the sum-to-one validation.
pub fn parse_weight_scheme(path: &Path) -> Result<WeightScheme> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut datasets = BTreeMap::new();
    let mut ratios = BTreeMap::new();
    let mut metrics = BTreeMap::new();
    let mut section = String::new();
    let loc = |line: usize, message: String| Error::Parse {
        path: path.display().to_string(),
        line,
        message,
    };
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            section = line[1..line.len() - 1].trim().to_ascii_lowercase();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| loc(line_no, format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim();
        let value = value.trim();
        let weight = parse_ratio(value)
            .ok_or_else(|| loc(line_no, format!("`{value}` is not a fraction like 1/21")))?;
        match section.as_str() {
            "datasets" => {
                let d = Dataset::parse(key)
                    .ok_or_else(|| loc(line_no, format!("unknown dataset `{key}`")))?;
                datasets.insert(d, weight);
            }
            "ratios" => {
                let r: u32 = key
                    .parse()
                    .ok()
                    .filter(|r| RATIOS.contains(r))
                    .ok_or_else(|| loc(line_no, format!("unknown ratio `{key}`")))?;
                ratios.insert(r, weight);
            }
            "metrics" => {
                let m = match key.to_ascii_lowercase().as_str() {
                    "psnr" => Metric::Psnr,
                    "ssim" => Metric::Ssim,
                    "speed" => Metric::Speed,
                    _ => return Err(loc(line_no, format!("unknown metric `{key}`"))),
                };
                metrics.insert(m, weight);
            }
            _ => {
                return Err(loc(
                    line_no,
                    "entries must appear under [datasets], [ratios] or [metrics]".into(),
                ))
            }
        }
    }
    WeightScheme::new(datasets, ratios, metrics)
}

fn parse_ratio(text: &str) -> Option<Ratio<i64>> {
    if let Some((num, den)) = text.split_once('/') {
        let num: i64 = num.trim().parse().ok()?;
        let den: i64 = den.trim().parse().ok()?;
        if den == 0 {
            return None;
        }
        Some(Ratio::new(num, den))
    } else {
        text.trim().parse::<i64>().ok().map(|v| Ratio::new(v, 1))
    }
}

/// One (dataset, ratio) cell of a method's raw results. PSNR and SSIM are
/// clamped into their metric ranges at construction; raw tables routinely
/// carry `48.00001`-style rounding spill.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawResultCell {
    pub dataset: Dataset,
    pub ratio: u32,
    pub psnr: f64,
    pub ssim: f64,
    pub speed: f64,
}

impl RawResultCell {
    pub fn new(dataset: Dataset, ratio: u32, psnr: f64, ssim: f64, speed: f64) -> Result<Self> {
        if !RATIOS.contains(&ratio) {
            return Err(Error::Precondition(format!(
                "ratio {ratio} is not one of {RATIOS:?}"
            )));
        }
        if !psnr.is_finite() || !ssim.is_finite() {
            return Err(Error::Precondition(format!(
                "psnr/ssim must be finite, got {psnr}/{ssim}"
            )));
        }
        if !speed.is_finite() || speed < 0.0 {
            return Err(Error::Precondition(format!(
                "speed must be finite and non-negative, got {speed}"
            )));
        }
        Ok(RawResultCell {
            dataset,
            ratio,
            psnr: psnr.clamp(0.0, PSNR_CEILING),
            ssim: ssim.clamp(0.0, 1.0),
            speed,
        })
    }
}

/// A method's complete 30-cell result table, held in canonical
/// (dataset, ratio) order.
#[derive(Debug, Clone)]
pub struct RawResultTable {
    pub method: String,
    cells: Vec<RawResultCell>,
}

impl RawResultTable {
    /// Validate completeness: every (dataset, ratio) pair exactly once.
    pub fn new(method: impl Into<String>, mut cells: Vec<RawResultCell>) -> Result<Self> {
        let method = method.into();
        cells.sort_by_key(|c| (c.dataset, c.ratio));
        for pair in cells.windows(2) {
            if pair[0].dataset == pair[1].dataset && pair[0].ratio == pair[1].ratio {
                return Err(Error::TableCell {
                    method,
                    kind: TableCellError::Duplicate,
                    dataset: pair[0].dataset.id().to_string(),
                    ratio: pair[0].ratio,
                });
            }
        }
        for d in Dataset::ALL {
            for r in RATIOS {
                if !cells.iter().any(|c| c.dataset == d && c.ratio == r) {
                    return Err(Error::TableCell {
                        method,
                        kind: TableCellError::Missing,
                        dataset: d.id().to_string(),
                        ratio: r,
                    });
                }
            }
        }
        Ok(RawResultTable { method, cells })
    }

    /// Cells in canonical (dataset, ratio) order.
    pub fn cells(&self) -> &[RawResultCell] {
        &self.cells
    }
}

/// A method's aggregated benchmark score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkScore {
    /// Weighted sum of the normalized speed terms.
    pub speed_score: f64,
    /// Weighted sum of the normalized PSNR and SSIM terms.
    pub accuracy_score: f64,
    /// `speed_score + accuracy_score`.
    pub total: f64,
}

/// One audited term of the weighted sum.
#[derive(Debug, Clone)]
pub struct AuditRow {
    pub dataset: Dataset,
    pub ratio: u32,
    pub metric: Metric,
    pub raw: f64,
    pub normalized: f64,
    pub weight: Ratio<i64>,
    pub contribution: f64,
}

/// Aggregate a complete result table into its benchmark score, also
/// returning the 90 audited terms. Cells are consumed in canonical order,
/// so the floating sum is independent of input ordering.
pub fn compute_score_with_audit(
    table: &RawResultTable,
    scheme: &WeightScheme,
) -> Result<(BenchmarkScore, Vec<AuditRow>)> {
    let mut speed_score = 0.0;
    let mut accuracy_score = 0.0;
    let mut audit = Vec::with_capacity(90);
    for cell in table.cells() {
        for metric in Metric::ALL {
            let (raw, normalized) = match metric {
                Metric::Psnr => (cell.psnr, normalize_psnr(cell.psnr)?),
                Metric::Ssim => (cell.ssim, normalize_ssim(cell.ssim)?),
                Metric::Speed => (cell.speed, normalize_speed(cell.speed)?),
            };
            let weight = scheme.dataset_weight(cell.dataset)
                * scheme.ratio_weight(cell.ratio)
                * scheme.metric_weight(metric);
            let contribution = weight.to_f64().expect("weight fits in f64") * normalized;
            match metric {
                Metric::Speed => speed_score += contribution,
                Metric::Psnr | Metric::Ssim => accuracy_score += contribution,
            }
            audit.push(AuditRow {
                dataset: cell.dataset,
                ratio: cell.ratio,
                metric,
                raw,
                normalized,
                weight,
                contribution,
            });
        }
    }
    Ok((
        BenchmarkScore {
            speed_score,
            accuracy_score,
            total: speed_score + accuracy_score,
        },
        audit,
    ))
}

/// Aggregate a complete result table into its benchmark score.
pub fn compute_score(table: &RawResultTable, scheme: &WeightScheme) -> Result<BenchmarkScore> {
    compute_score_with_audit(table, scheme).map(|(score, _)| score)
}

/// Sort scored methods best-first by total score, breaking exact ties by
/// method name so rankings are stable.
pub fn rank_methods(scores: &[(String, BenchmarkScore)]) -> Vec<(String, BenchmarkScore)> {
    let mut ranked = scores.to_vec();
    ranked.sort_by(|a, b| {
        b.1.total
            .partial_cmp(&a.1.total)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    ranked
}

const RAW_CSV_HEADER: &str = "method,dataset,ratio,psnr,ssim,speed";

/// Read raw results without completeness checking, preserving the order in
/// which methods first appear. Dataset names accept display aliases; method
/// names are canonicalized through the registry when they match it.
pub fn read_raw_cells(path: &Path) -> Result<Vec<(String, RawResultCell)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let loc = |line: usize, message: String| Error::Parse {
        path: path.display().to_string(),
        line,
        message,
    };
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !saw_header {
            saw_header = true;
            let canonical: Vec<String> = fields.iter().map(|f| f.to_ascii_lowercase()).collect();
            if canonical.join(",") == RAW_CSV_HEADER {
                continue;
            }
            // No header; fall through and parse this line as data.
        }
        if fields.len() != 6 {
            return Err(loc(
                line_no,
                format!("expected 6 comma-separated fields, got {}", fields.len()),
            ));
        }
        let method_raw = fields[0];
        if method_raw.is_empty() {
            return Err(loc(line_no, "method name is empty".into()));
        }
        let method = crate::solvers::find_method(method_raw)
            .map(|d| d.name.to_string())
            .unwrap_or_else(|| method_raw.to_string());
        let dataset = Dataset::parse(fields[1])
            .ok_or_else(|| loc(line_no, format!("unknown dataset `{}`", fields[1])))?;
        let ratio: u32 = fields[2]
            .parse()
            .map_err(|_| loc(line_no, format!("ratio `{}` is not an integer", fields[2])))?;
        let number = |name: &str, text: &str| -> Result<f64> {
            text.parse::<f64>()
                .map_err(|_| loc(line_no, format!("{name} `{text}` is not a number")))
        };
        let psnr = number("psnr", fields[3])?;
        let ssim = number("ssim", fields[4])?;
        let speed = number("speed", fields[5])?;
        let cell = RawResultCell::new(dataset, ratio, psnr, ssim, speed)
            .map_err(|e| loc(line_no, e.to_string()))?;
        rows.push((method, cell));
    }
    Ok(rows)
}

/// Parse a raw-results CSV into complete per-method tables. Methods keep
/// their order of first appearance; an incomplete or duplicated table is an
/// error naming the offending (dataset, ratio) pair.
pub fn parse_raw_csv(path: &Path) -> Result<Vec<RawResultTable>> {
    let rows = read_raw_cells(path)?;
    if rows.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "{}: no result rows",
            path.display()
        )));
    }
    let mut order: Vec<String> = Vec::new();
    let mut grouped: BTreeMap<String, Vec<RawResultCell>> = BTreeMap::new();
    for (method, cell) in rows {
        if !grouped.contains_key(&method) {
            order.push(method.clone());
        }
        grouped.entry(method).or_default().push(cell);
    }
    order
        .into_iter()
        .map(|method| {
            let cells = grouped.remove(&method).unwrap();
            RawResultTable::new(method, cells)
        })
        .collect()
}

/// Write raw result rows as CSV. Values print with enough digits to
/// round-trip exactly through [`read_raw_cells`].
pub fn write_raw_csv(path: &Path, rows: &[(String, RawResultCell)]) -> Result<()> {
    let mut out = String::from(RAW_CSV_HEADER);
    out.push('\n');
    for (method, cell) in rows {
        out.push_str(&format!(
            "{method},{},{},{},{},{}\n",
            cell.dataset, cell.ratio, cell.psnr, cell.ssim, cell.speed
        ));
    }
    write_text(path, &out)
}

/// Write the per-method score report CSV.
pub fn write_score_report(path: &Path, ranked: &[(String, BenchmarkScore)]) -> Result<()> {
    let mut out = String::from("rank,method,speed_score,accuracy_score,total\n");
    for (i, (method, score)) in ranked.iter().enumerate() {
        out.push_str(&format!(
            "{},{method},{},{},{}\n",
            i + 1,
            score.speed_score,
            score.accuracy_score,
            score.total
        ));
    }
    write_text(path, &out)
}

/// Write the audited 90-term breakdown for one method, weights as exact
/// fractions.
pub fn write_audit_csv(path: &Path, method: &str, audit: &[AuditRow]) -> Result<()> {
    let mut out = String::from("method,dataset,ratio,metric,raw,normalized,weight,contribution\n");
    for row in audit {
        out.push_str(&format!(
            "{method},{},{},{},{},{},{}/{},{}\n",
            row.dataset,
            row.ratio,
            row.metric.id(),
            row.raw,
            row.normalized,
            row.weight.numer(),
            row.weight.denom(),
            row.contribution
        ));
    }
    write_text(path, &out)
}

/// Write a bar-chart-ready `method,total` CSV in ranked order.
pub fn write_total_histogram(path: &Path, ranked: &[(String, BenchmarkScore)]) -> Result<()> {
    let mut out = String::from("method,total\n");
    for (method, score) in ranked {
        out.push_str(&format!("{method},{}\n", score.total));
    }
    write_text(path, &out)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    Ok(())
}
