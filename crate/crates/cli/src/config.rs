//! Run configuration: the file format, command-line overrides, and the
//! validation that has to reject a bad run before any work starts.

use std::fs;
use std::path::{Path, PathBuf};

use csbench::scoring::RATIOS;
use csbench::sensing::{ratio_to_m, MatrixKind};
use csbench::solvers::{SolverConfig, Specifics};
use csbench::{Error, Result};

/// Full description of a run, merged from the optional config file and
/// command-line flags (flags win).
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Sensing operator family.
    pub sensing: MatrixKind,
    /// Reconstruction method (registry name); empty until a method is
    /// chosen via file or flag.
    pub reconstruction: String,
    /// Pipeline stage; only `testing` is meaningful for the built-in
    /// solvers, and `training` is rejected downstream.
    pub stage: Option<String>,
    /// Ignore manually supplied specifics and run on method defaults.
    pub use_defaults: bool,
    /// Dataset name for single-dataset commands.
    pub dataset: Option<String>,
    pub input_channels: usize,
    /// 0 means "not configured"; commands may infer square geometry.
    pub input_height: usize,
    pub input_width: usize,
    /// Explicit measurement count; alternative to `ratios`.
    pub m: Option<usize>,
    /// Explicit signal length; checked against the input geometry.
    pub n: Option<usize>,
    pub specifics: Specifics,
    pub seed: u64,
    /// Compression ratios to sweep, always sorted and deduplicated.
    pub ratios: Vec<u32>,
    pub output_dir: PathBuf,
    /// Per-dataset image cap; 0 keeps everything.
    pub limit: usize,
    pub verbose: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sensing: MatrixKind::GaussianOrthonormalRows,
            reconstruction: String::new(),
            stage: None,
            use_defaults: false,
            dataset: None,
            input_channels: 1,
            input_height: 0,
            input_width: 0,
            m: None,
            n: None,
            specifics: Specifics::new(),
            seed: 1,
            ratios: RATIOS.to_vec(),
            output_dir: PathBuf::from("."),
            limit: 0,
            verbose: false,
        }
    }
}

impl RunConfig {
    /// Read a flat `key = value` config file. A `[specifics]` section
    /// switches to the method-specific parameter map; everything above it
    /// sets the run fields by name.
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = RunConfig::default();
        let mut in_specifics = false;
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
                let section = line[1..line.len() - 1].trim();
                if !section.eq_ignore_ascii_case("specifics") {
                    return Err(loc(line_no, format!("unknown section `[{section}]`")));
                }
                in_specifics = true;
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| loc(line_no, format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if in_specifics {
                cfg.specifics.set(key, value);
                continue;
            }
            cfg.set_field(key, value)
                .map_err(|e| loc(line_no, e.to_string()))?;
        }
        Ok(cfg)
    }

    fn set_field(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("{key} = `{value}` is not {what}"));
        match key {
            "sensing" => {
                self.sensing = MatrixKind::parse(value)
                    .ok_or_else(|| Error::Config(format!("unknown sensing kind `{value}`")))?;
            }
            "reconstruction" => self.reconstruction = value.to_string(),
            "stage" => self.stage = Some(value.to_string()),
            "default" => {
                self.use_defaults = parse_bool(value).ok_or_else(|| bad("a boolean"))?;
            }
            "dataset" => self.dataset = Some(value.to_string()),
            "input_channel" | "input_channels" => {
                self.input_channels = value.parse().map_err(|_| bad("a channel count"))?;
            }
            "input_height" => {
                self.input_height = value.parse().map_err(|_| bad("a pixel count"))?;
            }
            "input_width" => {
                self.input_width = value.parse().map_err(|_| bad("a pixel count"))?;
            }
            "m" => self.m = Some(value.parse().map_err(|_| bad("a measurement count"))?),
            "n" => self.n = Some(value.parse().map_err(|_| bad("a signal length"))?),
            "seed" => self.seed = value.parse().map_err(|_| bad("an unsigned integer"))?,
            "ratios" | "ratio" => {
                let mut ratios = Vec::new();
                for part in value.split(',') {
                    ratios.push(part.trim().parse::<u32>().map_err(|_| bad("a ratio list"))?);
                }
                self.ratios = ratios;
            }
            "output_dir" => self.output_dir = PathBuf::from(value),
            "limit" => self.limit = value.parse().map_err(|_| bad("a sample cap"))?,
            // Generic solver knobs share the file but live in the solver
            // configuration, not in RunConfig fields.
            "max_iterations" | "tolerance" => self.specifics.set(key, value),
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Consistency checks that need no input data. Ratio membership, the
    /// geometry/n equation, and m ≤ n are all rejected here, before any
    /// file is opened.
    pub fn validate(&self) -> Result<()> {
        if (self.input_height == 0) != (self.input_width == 0) {
            return Err(Error::Config(
                "input_height and input_width must be configured together".into(),
            ));
        }
        let geometry_n = (self.input_height > 0).then(|| self.input_height * self.input_width);
        if let (Some(n), Some(gn)) = (self.n, geometry_n) {
            if n != gn {
                return Err(Error::Config(format!(
                    "n = {n} does not match input geometry {}x{} = {gn}",
                    self.input_height, self.input_width
                )));
            }
        }
        let n = self.n.or(geometry_n);
        if let (Some(m), Some(n)) = (self.m, n) {
            if m > n {
                return Err(Error::Config(format!(
                    "m = {m} exceeds the signal length n = {n}"
                )));
            }
            if m == 0 {
                return Err(Error::Config("m must be positive".into()));
            }
        }
        if self.input_channels != 1 && self.input_channels != 3 {
            return Err(Error::Config(format!(
                "input_channel must be 1 or 3, got {}",
                self.input_channels
            )));
        }
        if self.ratios.is_empty() {
            return Err(Error::Config("at least one compression ratio is required".into()));
        }
        for r in &self.ratios {
            if !RATIOS.contains(r) {
                return Err(Error::Config(format!(
                    "ratio {r} is not one of {RATIOS:?}"
                )));
            }
        }
        Ok(())
    }

    /// Resolve the measurement count for a signal of length `n`, checking
    /// the config's own `n` against the actual signal. When both `m` and a
    /// ratio are configured they must agree exactly; the config is rejected
    /// rather than guessing which one wins.
    pub fn resolve_m(&self, n: usize) -> Result<usize> {
        if let Some(cfg_n) = self.n {
            if cfg_n != n {
                return Err(Error::Config(format!(
                    "configured n = {cfg_n} but the input has n = {n}"
                )));
            }
        }
        let from_ratio = if self.ratios.len() == 1 {
            Some(ratio_to_m(n, self.ratios[0] as f64)?)
        } else {
            None
        };
        match (self.m, from_ratio) {
            (Some(m), Some(rm)) if m != rm => Err(Error::Config(format!(
                "m = {m} conflicts with ratio {} (which gives m = {rm}); configure only one",
                self.ratios[0]
            ))),
            (Some(m), _) => {
                if m > n {
                    return Err(Error::Config(format!(
                        "m = {m} exceeds the signal length n = {n}"
                    )));
                }
                Ok(m)
            }
            (None, Some(rm)) => Ok(rm),
            (None, None) => Err(Error::Config(
                "a single ratio or an explicit m is required to sense".into(),
            )),
        }
    }

    /// Build the solver configuration for this run. With `use_defaults`
    /// set, manually supplied specifics are dropped so the method runs on
    /// its built-in defaults; the stage always survives because it gates
    /// validity rather than tuning.
    pub fn solver_config(&self) -> Result<SolverConfig> {
        let mut base = SolverConfig {
            seed: self.seed,
            ..SolverConfig::default()
        };
        base.max_iterations = self
            .specifics
            .usize_or("max_iterations", base.max_iterations)?;
        base.tolerance = self.specifics.f64_or("tolerance", base.tolerance)?;
        if !self.use_defaults {
            base.specifics = self.specifics.clone();
        }
        if let Some(stage) = &self.stage {
            base.specifics.set("stage", stage.clone());
        }
        base.validate()?;
        Ok(base)
    }
}

fn parse_bool(value: &str) -> Option<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Some(true),
        "false" | "0" | "no" | "off" => Some(false),
        _ => None,
    }
}

/// Derive the sensing seed for one (dataset, ratio) combination from the
/// master seed with FNV-1a, so a single `--seed` reproduces every matrix in
/// a benchmark while distinct combinations still get distinct operators.
pub fn combo_seed(master: u64, dataset: &str, ratio: u32) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = OFFSET;
    let eat = |hash: &mut u64, bytes: &[u8]| {
        for &b in bytes {
            *hash ^= b as u64;
            *hash = hash.wrapping_mul(PRIME);
        }
    };
    eat(&mut hash, &master.to_le_bytes());
    eat(&mut hash, dataset.as_bytes());
    eat(&mut hash, &[0xff]);
    eat(&mut hash, &ratio.to_le_bytes());
    hash
}
