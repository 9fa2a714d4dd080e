//! Reconstruction methods: the method registry, solver configuration, and
//! the per-image dispatch that runs a solver over every measurement channel.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::data::Image;
use crate::error::{Error, Result};
use crate::sensing::{MeasurementGroup, SensingMatrix};

mod damp;
mod tv;
mod tv_l1;
mod tval3;

pub use damp::{damp_reconstruct, denoise, DenoiserKind};
pub use tv_l1::tv_l1_reconstruct;
pub use tval3::tval3_reconstruct;

/// How a method produces reconstructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunningProcess {
    /// Per-image optimization or message passing at reconstruction time.
    Iterative,
    /// A single learned forward pass.
    EndToEnd,
}

/// Hardware the method is benchmarked on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Platform {
    Cpu,
    Gpu,
}

/// Registry entry for one of the ten benchmark methods.
#[derive(Debug, Clone, Copy)]
pub struct MethodDescriptor {
    /// Canonical lowercase identifier.
    pub name: &'static str,
    /// Human-facing spelling used in reports.
    pub display_name: &'static str,
    /// Whether the method learns from training data.
    pub data_dependent: bool,
    pub running_process: RunningProcess,
    pub platform: Platform,
    /// Whether this build ships a solver for the method. Non-executable
    /// methods still participate in scoring through raw-results ingestion.
    pub executable: bool,
}

/// The ten benchmark methods, in canonical report order.
pub const REGISTRY: [MethodDescriptor; 10] = [
    MethodDescriptor {
        name: "l1",
        display_name: "L1",
        data_dependent: false,
        running_process: RunningProcess::Iterative,
        platform: Platform::Cpu,
        executable: true,
    },
    MethodDescriptor {
        name: "tval3",
        display_name: "TVAL-3",
        data_dependent: false,
        running_process: RunningProcess::Iterative,
        platform: Platform::Cpu,
        executable: true,
    },
    MethodDescriptor {
        name: "nlrcs",
        display_name: "NLR-CS",
        data_dependent: false,
        running_process: RunningProcess::Iterative,
        platform: Platform::Cpu,
        executable: false,
    },
    MethodDescriptor {
        name: "damp",
        display_name: "D-AMP",
        data_dependent: false,
        running_process: RunningProcess::Iterative,
        platform: Platform::Cpu,
        executable: true,
    },
    MethodDescriptor {
        name: "reconnet",
        display_name: "ReconNet",
        data_dependent: true,
        running_process: RunningProcess::EndToEnd,
        platform: Platform::Gpu,
        executable: false,
    },
    MethodDescriptor {
        name: "istanet",
        display_name: "ISTA-Net",
        data_dependent: true,
        running_process: RunningProcess::EndToEnd,
        platform: Platform::Gpu,
        executable: false,
    },
    MethodDescriptor {
        name: "ldamp",
        display_name: "LDAMP",
        data_dependent: true,
        running_process: RunningProcess::EndToEnd,
        platform: Platform::Gpu,
        executable: false,
    },
    MethodDescriptor {
        name: "csgm",
        display_name: "CSGM",
        data_dependent: true,
        running_process: RunningProcess::Iterative,
        platform: Platform::Gpu,
        executable: false,
    },
    MethodDescriptor {
        name: "lapran",
        display_name: "LAPRAN",
        data_dependent: true,
        running_process: RunningProcess::EndToEnd,
        platform: Platform::Gpu,
        executable: false,
    },
    MethodDescriptor {
        name: "csgan",
        display_name: "CSGAN",
        data_dependent: true,
        running_process: RunningProcess::Iterative,
        platform: Platform::Gpu,
        executable: false,
    },
];

/// Look up a method case-insensitively; punctuation in display spellings
/// (`TVAL-3`, `D-AMP`, `ISTA-Net`) is ignored, so both identifier and
/// display forms resolve.
pub fn find_method(name: &str) -> Option<&'static MethodDescriptor> {
    let key: String = name
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase();
    REGISTRY.iter().find(|d| {
        d.name == key
            || d.display_name
                .chars()
                .filter(|c| c.is_ascii_alphanumeric())
                .collect::<String>()
                .to_ascii_lowercase()
                == key
    })
}

/// Free-form string knobs for method-specific parameters, with typed
/// accessors that turn malformed values into configuration errors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Specifics(BTreeMap<String, String>);

impl Specifics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.0.insert(key.into(), value.into());
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.set(key, value);
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.0.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("specific `{key}` = `{raw}` is not a number"))),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.0.get(key) {
            None => Ok(default),
            Some(raw) => raw.parse::<usize>().map_err(|_| {
                Error::Config(format!("specific `{key}` = `{raw}` is not a non-negative integer"))
            }),
        }
    }
}

/// Shared solver configuration. Method-specific parameters ride in
/// `specifics`; the explicit seed pins every stochastic ingredient (power
/// iteration start vectors, divergence probes) so identical configurations
/// reconstruct identical images.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub specifics: Specifics,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 200,
            tolerance: 1e-4,
            seed: 0,
            specifics: Specifics::new(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if !self.tolerance.is_finite() || self.tolerance <= 0.0 {
            return Err(Error::Config(format!(
                "tolerance must be a positive number, got {}",
                self.tolerance
            )));
        }
        match self.specifics.get("stage") {
            None | Some("testing") => Ok(()),
            Some("training") => Err(Error::Config(
                "stage=training is not meaningful here: none of the built-in solvers are \
                 data-dependent, so there is nothing to train"
                    .into(),
            )),
            Some(other) => Err(Error::Config(format!(
                "unknown stage `{other}`; the only supported stage is `testing`"
            ))),
        }
    }
}

/// Per-iteration solver traces, exportable as CSV for debugging runs.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    /// Objective value per outer iteration (solver-specific functional).
    pub objective: Vec<f64>,
    /// Relative data residual `||Ax - y|| / ||y||` per outer iteration.
    pub residual: Vec<f64>,
    /// Effective noise level per iteration (message-passing solvers only).
    pub sigma: Vec<f64>,
    /// Splitting gap `||Dx - w||` at termination (splitting solvers only).
    pub primal_residual: Option<f64>,
}

impl Diagnostics {
    /// Write the traces as `iteration,objective,residual,sigma` rows,
    /// leaving cells blank where a trace does not apply.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows = self.objective.len().max(self.residual.len()).max(self.sigma.len());
        let mut out = String::from("iteration,objective,residual,sigma\n");
        for i in 0..rows {
            let cell = |t: &Vec<f64>| t.get(i).map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{i},{},{},{}\n",
                cell(&self.objective),
                cell(&self.residual),
                cell(&self.sigma)
            ));
        }
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// One reconstructed channel plus its solve telemetry.
#[derive(Debug, Clone)]
pub struct ChannelSolve {
    pub signal: Vec<f64>,
    pub iterations: usize,
    pub diagnostics: Diagnostics,
}

/// A reconstructed image with aggregate solve telemetry.
#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub image: Image,
    /// Largest per-channel outer iteration count.
    pub iterations_used: usize,
    /// Relative data residual of the returned image across all channels.
    pub final_residual: f64,
    /// Per-channel traces, in channel order.
    pub diagnostics: Vec<Diagnostics>,
}

/// Reconstruct an image from its measurement group with a registered
/// method. Channels solve independently under the same operator and
/// configuration; the assembled image is clamped to the pixel range.
pub fn reconstruct(
    method: &str,
    group: &MeasurementGroup,
    matrix: &SensingMatrix,
    height: usize,
    width: usize,
    cfg: &SolverConfig,
) -> Result<ReconstructionResult> {
    let descriptor =
        find_method(method).ok_or_else(|| Error::UnknownMethod(method.to_string()))?;
    if !descriptor.executable {
        return Err(Error::UnsupportedMethod(descriptor.display_name.to_string()));
    }
    cfg.validate()?;
    if height * width != matrix.n() {
        return Err(Error::Precondition(format!(
            "image geometry {height}x{width} does not match operator width {}",
            matrix.n()
        )));
    }
    if group.n != matrix.n() || group.m != matrix.m() {
        return Err(Error::Precondition(format!(
            "measurements were taken with a {}x{} operator but a {}x{} operator was supplied",
            group.m,
            group.n,
            matrix.m(),
            matrix.n()
        )));
    }
    let channels = group.channel_count();
    if channels != 1 && channels != 3 {
        return Err(Error::Precondition(format!(
            "measurement group must hold 1 or 3 channels, got {channels}"
        )));
    }

    let mut pixels = Vec::with_capacity(channels * matrix.n());
    let mut iterations_used = 0;
    let mut diagnostics = Vec::with_capacity(channels);
    for y in &group.channels {
        if y.len() != matrix.m() {
            return Err(Error::Precondition(format!(
                "measurement vector of length {} does not match m = {}",
                y.len(),
                matrix.m()
            )));
        }
        let solve = match descriptor.name {
            "l1" => tv_l1_reconstruct(y, matrix, height, width, cfg)?,
            "tval3" => tval3_reconstruct(y, matrix, height, width, cfg)?,
            "damp" => damp_reconstruct(y, matrix, height, width, cfg)?,
            _ => unreachable!("executable methods are dispatched above"),
        };
        iterations_used = iterations_used.max(solve.iterations);
        pixels.extend(solve.signal.iter().map(|v| v.clamp(0.0, 1.0)));
        diagnostics.push(solve.diagnostics);
    }
    let image = Image::new(channels, height, width, pixels)?;

    // Residual of what we actually hand back, i.e. after clamping.
    let mut num = 0.0;
    let mut den = 0.0;
    for (c, y) in group.channels.iter().enumerate() {
        let ax = matrix.apply(image.channel(c));
        num += ax.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        den += y.iter().map(|v| v * v).sum::<f64>();
    }
    let final_residual = if den > 0.0 { (num / den).sqrt() } else { 0.0 };

    Ok(ReconstructionResult {
        image,
        iterations_used,
        final_residual,
        diagnostics,
    })
}

/// Solve `L L^T u = y` given the lower Cholesky factor of a symmetric
/// positive-definite matrix in row-major order.
fn cholesky_solve(l: &[f64], m: usize, y: &[f64]) -> Vec<f64> {
    let mut u = y.to_vec();
    for i in 0..m {
        let mut acc = u[i];
        for k in 0..i {
            acc -= l[i * m + k] * u[k];
        }
        u[i] = acc / l[i * m + i];
    }
    for i in (0..m).rev() {
        let mut acc = u[i];
        for k in i + 1..m {
            acc -= l[k * m + i] * u[k];
        }
        u[i] = acc / l[i * m + i];
    }
    u
}

/// In-place lower Cholesky factorization of a symmetric positive-definite
/// matrix; fails when a pivot collapses (rank-deficient rows).
fn cholesky_factor(a: &mut [f64], m: usize) -> Result<()> {
    for j in 0..m {
        for k in 0..j {
            let ljk = a[j * m + k];
            for i in j..m {
                a[i * m + j] -= a[i * m + k] * ljk;
            }
        }
        let pivot = a[j * m + j];
        if !(pivot > 1e-12) {
            return Err(Error::LinearAlgebra(format!(
                "Gram matrix is not positive definite at pivot {j} ({pivot:.3e}); \
                 the sensing rows are linearly dependent"
            )));
        }
        let root = pivot.sqrt();
        for i in j..m {
            a[i * m + j] /= root;
        }
        for i in 0..j {
            a[i * m + j] = 0.0;
        }
    }
    Ok(())
}

/// Minimum-norm least-squares baseline `x = A^T (A A^T)^{-1} y`.
///
/// Linear, non-sparse reconstruction: every regularized solver should beat
/// it on compressible images, which makes it the sanity floor for
/// benchmark runs.
pub fn pinv_baseline(y: &[f64], matrix: &SensingMatrix) -> Result<Vec<f64>> {
    let m = matrix.m();
    if y.len() != m {
        return Err(Error::Precondition(format!(
            "measurement vector of length {} does not match m = {m}",
            y.len()
        )));
    }
    let mut gram = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let g = matrix
                .row(i)
                .iter()
                .zip(matrix.row(j))
                .map(|(a, b)| a * b)
                .sum();
            gram[i * m + j] = g;
            gram[j * m + i] = g;
        }
    }
    cholesky_factor(&mut gram, m)?;
    let u = cholesky_solve(&gram, m, y);
    Ok(matrix.apply_transpose(&u))
}
